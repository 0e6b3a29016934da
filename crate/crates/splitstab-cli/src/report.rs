//! Versioned machine-readable reports.
//!
//! Exit codes are the sole machine contract for verdicts; the JSON schema
//! here is versioned and numbers are serialized as decimal with 17
//! significant digits so every f64 round-trips losslessly.

use anyhow::Result;
use serde::{Deserialize, Serialize};
use splitstab::certify::{StabilityVerdict, Verdict};
use splitstab::cone::Cone;
use splitstab::probe::{ModulusEstimate, ProbeConsistency};
use splitstab::sets::ACTIVE_TOL;
use splitstab::solver::SolveReport;
use std::io::Write;

pub const REPORT_VERSION: u64 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConeReport {
    /// Human-readable shape, e.g. "ray, generator (1, -2)".
    pub classification: String,
    pub e: Vec<Vec<f64>>,
    pub g: Vec<Vec<f64>>,
    pub l: Vec<Vec<f64>>,
}

impl ConeReport {
    pub fn from_cone(cone: &Cone) -> Result<Self> {
        let to_rows = |m: &splitstab::nalgebra::DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
                .collect()
        };
        Ok(ConeReport {
            classification: cone.classify()?.to_string(),
            e: to_rows(cone.e_matrix()),
            g: to_rows(cone.g_matrix()),
            l: to_rows(cone.l_matrix()),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceReport {
    pub normal_cone_c: ConeReport,
    pub normal_cone_q: ConeReport,
    pub preimage_c: ConeReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preimage_q: Option<ConeReport>,
    pub intersection: ConeReport,
}

/// Documented tolerances echoed into every report: numeric choices are
/// numeric conventions of this implementation, not mathematical constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tolerances {
    pub active_tol: f64,
    pub reference_feasibility_tol: f64,
    pub zero_reference_tol: f64,
    pub witness_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            active_tol: ACTIVE_TOL,
            reference_feasibility_tol: splitstab::certify::REFERENCE_FEASIBILITY_TOL,
            zero_reference_tol: splitstab::certify::ZERO_REFERENCE_TOL,
            witness_tol: splitstab::cone::WITNESS_TOL,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub report_version: u64,
    pub kind: String,
    pub verdict: Verdict,
    pub condition_holds: bool,
    pub reference_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
    pub trace: TraceReport,
    pub tolerances: Tolerances,
}

impl AnalyzeReport {
    pub fn new(kind: &str, verdict: &StabilityVerdict) -> Result<Self> {
        Ok(AnalyzeReport {
            report_version: REPORT_VERSION,
            kind: kind.to_string(),
            verdict: verdict.verdict,
            condition_holds: verdict.condition_holds,
            reference_norm: verdict.reference_norm,
            witness: verdict
                .witness
                .as_ref()
                .map(|w| w.iter().copied().collect()),
            trace: TraceReport {
                normal_cone_c: ConeReport::from_cone(&verdict.trace.normal_cone_c)?,
                normal_cone_q: ConeReport::from_cone(&verdict.trace.normal_cone_q)?,
                preimage_c: ConeReport::from_cone(&verdict.trace.preimage_c)?,
                preimage_q: verdict
                    .trace
                    .preimage_q
                    .as_ref()
                    .map(ConeReport::from_cone)
                    .transpose()?,
                intersection: ConeReport::from_cone(&verdict.trace.intersection)?,
            },
            tolerances: Tolerances::default(),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveJsonReport {
    pub report_version: u64,
    pub point: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SolveJsonReport {
    pub fn new(r: &SolveReport) -> Self {
        SolveJsonReport {
            report_version: REPORT_VERSION,
            point: r.point.iter().copied().collect(),
            residual: r.residual,
            iterations: r.iterations,
            converged: r.converged,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeJsonReport {
    pub report_version: u64,
    pub generator: String,
    pub seed: u64,
    pub radii: Vec<f64>,
    pub estimates: Vec<Option<f64>>,
    pub sample_counts: Vec<usize>,
    pub errors: Vec<Option<String>>,
    pub blowup_factor: Option<f64>,
    pub blowup_threshold: f64,
    pub verdict: Verdict,
    pub consistency: ProbeConsistency,
}

impl ProbeJsonReport {
    pub fn new(est: &ModulusEstimate, verdict: Verdict) -> Self {
        ProbeJsonReport {
            report_version: REPORT_VERSION,
            generator: est.generator.clone(),
            seed: est.seed,
            radii: est.radii.clone(),
            estimates: est.estimates.clone(),
            sample_counts: est.sample_counts.clone(),
            errors: est.errors.clone(),
            blowup_factor: est.blowup_factor,
            blowup_threshold: est.blowup_threshold,
            verdict,
            consistency: est.consistency_with(verdict),
        }
    }
}

/// Serializes any report with decimal, 17-significant-digit floats
/// (lossless for f64). Non-finite values degrade to `null`.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FullPrecision);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out)?)
}

struct FullPrecision;

impl serde_json::ser::Formatter for FullPrecision {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        if value.is_finite() {
            // 16 digits after the point = 17 significant digits.
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        self.write_f64(writer, value as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        #[derive(Serialize, Deserialize)]
        struct Probe {
            values: Vec<f64>,
        }
        let probe = Probe {
            values: vec![0.1, 1.0 / 3.0, 2.0_f64.sqrt(), -1e-300, 6.02214076e23],
        };
        let text = to_json_string(&probe).unwrap();
        let back: Probe = serde_json::from_str(&text).unwrap();
        for (a, b) in probe.values.iter().zip(back.values.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn non_finite_degrades_to_null() {
        #[derive(Serialize)]
        struct Bad {
            v: f64,
        }
        let text = to_json_string(&Bad { v: f64::INFINITY }).unwrap();
        assert_eq!(text, "{\"v\":null}");
    }
}
