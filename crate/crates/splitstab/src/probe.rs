//! Empirical Lipschitz-modulus probe.
//!
//! For shrinking radii `r`, the probe perturbs the problem parameters,
//! samples the perturbed solution set near the reference point, and
//! measures how far those samples sit from the unperturbed solution set,
//! relative to the parameter displacement. A bounded ratio across radii is
//! evidence (not proof) of Lipschitz-like behavior; a ratio that blows up
//! as radii shrink is evidence against it. The probe never overrides the
//! certifier: reports only label the two as consistent or not.
//!
//! Distances to a solution set are taken against a sampled-and-repaired
//! discretization, which can only overestimate them — the bias direction
//! that flags instability, never hides it.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certify::{ProblemInstance, Verdict};
use crate::solver::{sample_solutions, ProblemData, SolverError, GENERATOR_NAME};

/// Default decision boundary: a blow-up factor above this over the full
/// radius schedule counts as empirical instability. Crude but
/// reproducible; the certifier, not the probe, is authoritative.
pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 10.0;

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("invalid radius schedule: {0}")]
    InvalidRadii(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Tunable probe parameters; [`estimate_modulus`] uses the defaults.
#[derive(Debug, Clone)]
pub struct ProbeConfig {
    /// Neighborhood sizes, strictly decreasing.
    pub radii: Vec<f64>,
    /// Parameter pairs drawn per radius.
    pub samples_per_radius: usize,
    pub seed: u64,
    /// Perturbed-solution samples per pair.
    pub solutions_per_pair: usize,
    /// The unperturbed-set discretization gets this many times
    /// `solutions_per_pair` points.
    pub oracle_factor: usize,
    /// The discretization ball is this factor wider than the sample ball,
    /// so near-boundary samples still see their nearest neighbors.
    pub oracle_radius_factor: f64,
    pub blowup_threshold: f64,
}

impl ProbeConfig {
    pub fn new(radii: Vec<f64>, samples_per_radius: usize, seed: u64) -> Self {
        ProbeConfig {
            radii,
            samples_per_radius,
            seed,
            solutions_per_pair: 16,
            oracle_factor: 10,
            oracle_radius_factor: 2.0,
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
        }
    }
}

/// Empirical local modulus estimates across the radius schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModulusEstimate {
    pub radii: Vec<f64>,
    /// Max observed `dist(u′, F(w)) / ‖w′ − w‖` per radius; `None` when no
    /// pair produced usable samples at that radius.
    pub estimates: Vec<Option<f64>>,
    /// Feasible perturbed-solution samples evaluated per radius.
    pub sample_counts: Vec<usize>,
    /// Per-radius failure notes (sampler came back empty).
    pub errors: Vec<Option<String>>,
    pub seed: u64,
    /// Random source, for the report header.
    pub generator: String,
    /// `estimates.last / estimates.first` when both are present.
    pub blowup_factor: Option<f64>,
    pub blowup_threshold: f64,
}

/// Probe verdict relative to the certifier's.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ProbeConsistency {
    Consistent,
    Inconsistent,
    /// Not enough samples to take a position.
    Insufficient,
}

impl ModulusEstimate {
    /// Labels this probe against a certified verdict. An `Inconclusive`
    /// verdict makes no claim, so nothing can contradict it.
    pub fn consistency_with(&self, verdict: Verdict) -> ProbeConsistency {
        let Some(bf) = self.blowup_factor else {
            return ProbeConsistency::Insufficient;
        };
        match verdict {
            Verdict::LipschitzLike => {
                if bf <= self.blowup_threshold {
                    ProbeConsistency::Consistent
                } else {
                    ProbeConsistency::Inconsistent
                }
            }
            Verdict::NotLipschitzLike => {
                if bf >= self.blowup_threshold {
                    ProbeConsistency::Consistent
                } else {
                    ProbeConsistency::Inconsistent
                }
            }
            Verdict::Inconclusive => ProbeConsistency::Consistent,
        }
    }
}

/// Runs the probe with default sampling knobs.
pub fn estimate_modulus(
    instance: &ProblemInstance,
    radii: &[f64],
    samples_per_radius: usize,
    seed: u64,
) -> Result<ModulusEstimate, ProbeError> {
    estimate_modulus_with(
        instance,
        &ProbeConfig::new(radii.to_vec(), samples_per_radius, seed),
    )
}

/// Runs the probe with explicit knobs.
pub fn estimate_modulus_with(
    instance: &ProblemInstance,
    cfg: &ProbeConfig,
) -> Result<ModulusEstimate, ProbeError> {
    if cfg.radii.is_empty() || cfg.radii.iter().any(|&r| r.is_nan() || r <= 0.0) {
        return Err(ProbeError::InvalidRadii(
            "radii must be positive and nonempty".into(),
        ));
    }
    if cfg.radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(ProbeError::InvalidRadii(
            "radii must be strictly decreasing".into(),
        ));
    }
    let reference = instance.reference_unknown();
    let base: ProblemData = instance.into();

    let mut estimates = Vec::with_capacity(cfg.radii.len());
    let mut counts = Vec::with_capacity(cfg.radii.len());
    let mut errors = Vec::with_capacity(cfg.radii.len());
    for (ri, &radius) in cfg.radii.iter().enumerate() {
        let mut max_ratio: Option<f64> = None;
        let mut used_samples = 0usize;
        for pair in 0..cfg.samples_per_radius {
            // Per-pair RNG stream: deterministic and order-independent.
            let pair_seed = mix_seed(cfg.seed, ri as u64, pair as u64);
            let mut rng = pair_rng(pair_seed);
            let (data_w, params_w) = perturb(&base, radius, &mut rng);
            let (data_wp, params_wp) = perturb(&base, radius, &mut rng);
            let param_dist = block_sum_distance(&params_w, &params_wp);
            if param_dist < 1e-15 {
                continue;
            }
            let perturbed = sample_solutions(
                &data_wp,
                &reference,
                radius,
                cfg.solutions_per_pair,
                mix_seed(pair_seed, 1, 0),
            )?;
            if perturbed.is_empty() {
                continue;
            }
            // The unperturbed set may have receded far beyond the sample
            // ball — exactly the instability the probe must see — so the
            // discretization ball widens until it finds the set.
            let mut oracle = Vec::new();
            let mut oracle_radius = radius * cfg.oracle_radius_factor;
            for widen in 0..8 {
                oracle = sample_solutions(
                    &data_w,
                    &reference,
                    oracle_radius,
                    cfg.oracle_factor * cfg.solutions_per_pair,
                    mix_seed(pair_seed, 2, widen),
                )?;
                if !oracle.is_empty() {
                    break;
                }
                oracle_radius *= 2.0;
            }
            if oracle.is_empty() {
                continue;
            }
            for u in &perturbed {
                let dist = oracle
                    .iter()
                    .map(|o| (u - o).norm())
                    .fold(f64::INFINITY, f64::min);
                let ratio = dist / param_dist;
                used_samples += 1;
                max_ratio = Some(max_ratio.map_or(ratio, |m: f64| m.max(ratio)));
            }
        }
        counts.push(used_samples);
        errors.push(if max_ratio.is_none() {
            Some(format!("no usable solution samples at radius {radius:.3e}"))
        } else {
            None
        });
        estimates.push(max_ratio);
    }
    let blowup_factor = match (
        estimates.first().copied().flatten(),
        estimates.last().copied().flatten(),
    ) {
        (Some(first), Some(last)) if first > 0.0 => Some(last / first),
        _ => None,
    };
    Ok(ModulusEstimate {
        radii: cfg.radii.clone(),
        estimates,
        sample_counts: counts,
        errors,
        seed: cfg.seed,
        generator: GENERATOR_NAME.to_string(),
        blowup_factor,
        blowup_threshold: cfg.blowup_threshold,
    })
}

/// Flattened parameter blocks, for the sum-of-entrywise-max norm.
type ParamBlocks = Vec<Vec<f64>>;

/// Draws a perturbed copy of the data: every entry of every parameter
/// block moves uniformly within `radius / #blocks`, so the block-sum norm
/// of the perturbation stays within `radius`.
fn perturb(base: &ProblemData, radius: f64, rng: &mut ChaCha8Rng) -> (ProblemData, ParamBlocks) {
    match base {
        ProblemData::Nsep {
            a,
            b,
            c,
            set_c,
            set_q,
        } => {
            let step = radius / 3.0;
            let a2 = a.map(|v| v + rng.gen_range(-step..=step));
            let b2 = b.map(|v| v + rng.gen_range(-step..=step));
            let c2 = c.map(|v| v + rng.gen_range(-step..=step));
            let blocks = vec![
                a2.iter().copied().collect(),
                b2.iter().copied().collect(),
                c2.iter().copied().collect(),
            ];
            (
                ProblemData::Nsep {
                    a: a2,
                    b: b2,
                    c: c2,
                    set_c: set_c.clone(),
                    set_q: set_q.clone(),
                },
                blocks,
            )
        }
        ProblemData::Nsfp { a, b, set_c, set_q } => {
            let step = radius / 2.0;
            let a2 = a.map(|v| v + rng.gen_range(-step..=step));
            let b2 = b.map(|v| v + rng.gen_range(-step..=step));
            let blocks = vec![a2.iter().copied().collect(), b2.iter().copied().collect()];
            (
                ProblemData::Nsfp {
                    a: a2,
                    b: b2,
                    set_c: set_c.clone(),
                    set_q: set_q.clone(),
                },
                blocks,
            )
        }
    }
}

/// Sum over blocks of the entrywise max distance — the parameter-space
/// product norm.
fn block_sum_distance(a: &ParamBlocks, b: &ParamBlocks) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(xa, xb)| {
            xa.iter()
                .zip(xb.iter())
                .map(|(u, v)| (u - v).abs())
                .fold(0.0, f64::max)
        })
        .sum()
}

/// SplitMix64 step over the packed inputs; gives independent per-pair
/// seeds from one user seed.
fn mix_seed(seed: u64, hi: u64, lo: u64) -> u64 {
    let mut z = seed
        .wrapping_add(hi.wrapping_mul(0x9E3779B97F4A7C15))
        .wrapping_add(lo.wrapping_mul(0xBF58476D1CE4E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

fn pair_rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}
