//! Problem-file schema (version 1) and its conversion into validated
//! instances. One file holds one instance plus one reference point; batch
//! runs are shell-level composition.

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use splitstab::certify::{NsepInstance, NsfpInstance, ProblemInstance};
use splitstab::nalgebra::{DMatrix, DVector};
use splitstab::sets::{ConstraintSet, Interval};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    pub version: u64,
    pub kind: ProblemKind,
    /// `A` as nested rows.
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    /// NSEP only: `B` as nested rows.
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b_matrix: Option<Vec<Vec<f64>>>,
    /// NSEP only: right-hand side `c`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
    /// NSFP only: offset `b`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(rename = "C")]
    pub set_c: SetSchema,
    #[serde(rename = "Q")]
    pub set_q: SetSchema,
    pub point: PointSchema,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Nsep,
    Nsfp,
}

/// Reference point: a flat vector for NSFP, an `{x, y}` pair for NSEP.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointSchema {
    Vector(Vec<f64>),
    Pair { x: Vec<f64>, y: Vec<f64> },
}

/// Tagged set descriptors; `null` bounds mean unbounded.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum SetSchema {
    Polyhedron {
        rows: Vec<Vec<f64>>,
        rhs: Vec<f64>,
    },
    Box {
        lower: Vec<Option<f64>>,
        upper: Vec<Option<f64>>,
    },
    Orthant {
        dim: usize,
    },
    Singleton {
        point: Vec<f64>,
    },
    Quadratic {
        #[serde(rename = "P")]
        p: Vec<Vec<f64>>,
        q: Vec<f64>,
        r: f64,
        theta: [Option<f64>; 2],
    },
    Product {
        factors: Vec<SetSchema>,
    },
}

/// Parses and fully validates a problem file; error messages carry the
/// offending field path.
pub fn parse_problem(text: &str) -> Result<ProblemInstance> {
    let file: ProblemFile = serde_json::from_str(text).map_err(|e| anyhow!("schema error: {e}"))?;
    if file.version != SCHEMA_VERSION {
        bail!(
            "version: unsupported problem-file version {} (expected {SCHEMA_VERSION})",
            file.version
        );
    }
    let a = matrix_from("A", &file.a)?;
    let set_c = build_set(&file.set_c).context("C")?;
    let set_q = build_set(&file.set_q).context("Q")?;
    match file.kind {
        ProblemKind::Nsep => {
            let b = matrix_from(
                "B",
                file.b_matrix
                    .as_ref()
                    .ok_or_else(|| anyhow!("B: required for kind \"nsep\""))?,
            )?;
            let c = DVector::from_row_slice(
                file.c
                    .as_ref()
                    .ok_or_else(|| anyhow!("c: required for kind \"nsep\""))?,
            );
            let (x, y) = match &file.point {
                PointSchema::Pair { x, y } => {
                    (DVector::from_row_slice(x), DVector::from_row_slice(y))
                }
                PointSchema::Vector(_) => {
                    bail!("point: kind \"nsep\" needs an object {{\"x\": [...], \"y\": [...]}}")
                }
            };
            let instance = NsepInstance::new(a, b, c, set_c, set_q, x, y)
                .map_err(|e| anyhow!("instance: {e}"))?;
            Ok(ProblemInstance::Nsep(instance))
        }
        ProblemKind::Nsfp => {
            if file.b_matrix.is_some() || file.c.is_some() {
                bail!("B/c: not allowed for kind \"nsfp\" (use \"b\")");
            }
            let b = DVector::from_row_slice(
                file.b
                    .as_ref()
                    .ok_or_else(|| anyhow!("b: required for kind \"nsfp\""))?,
            );
            let x = match &file.point {
                PointSchema::Vector(x) => DVector::from_row_slice(x),
                PointSchema::Pair { .. } => {
                    bail!("point: kind \"nsfp\" needs a flat array")
                }
            };
            let instance =
                NsfpInstance::new(a, b, set_c, set_q, x).map_err(|e| anyhow!("instance: {e}"))?;
            Ok(ProblemInstance::Nsfp(instance))
        }
    }
}

fn matrix_from(field: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        bail!("{field}: matrix needs at least one row");
    }
    let cols = rows[0].len();
    if cols == 0 {
        bail!("{field}: matrix rows must be nonempty");
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != cols {
            bail!(
                "{field}[{i}]: ragged matrix (row has {} entries, expected {cols})",
                row.len()
            );
        }
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn build_set(schema: &SetSchema) -> Result<ConstraintSet> {
    match schema {
        SetSchema::Polyhedron { rows, rhs } => {
            let m = matrix_from("rows", rows)?;
            Ok(ConstraintSet::polyhedron(m, DVector::from_row_slice(rhs))?)
        }
        SetSchema::Box { lower, upper } => {
            if lower.len() != upper.len() {
                bail!(
                    "box: lower has {} entries, upper has {}",
                    lower.len(),
                    upper.len()
                );
            }
            let bounds = lower
                .iter()
                .zip(upper.iter())
                .enumerate()
                .map(|(i, (lo, hi))| {
                    Interval::new(lo.unwrap_or(f64::NEG_INFINITY), hi.unwrap_or(f64::INFINITY))
                        .map_err(|e| anyhow!("box[{i}]: {e}"))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ConstraintSet::hyper_box(bounds)?)
        }
        SetSchema::Orthant { dim } => Ok(ConstraintSet::orthant(*dim)?),
        SetSchema::Singleton { point } => {
            Ok(ConstraintSet::singleton(DVector::from_row_slice(point))?)
        }
        SetSchema::Quadratic { p, q, r, theta } => {
            let pm = matrix_from("P", p)?;
            let interval = Interval::new(
                theta[0].unwrap_or(f64::NEG_INFINITY),
                theta[1].unwrap_or(f64::INFINITY),
            )
            .map_err(|e| anyhow!("theta: {e}"))?;
            Ok(ConstraintSet::quadratic_sublevel(
                pm,
                DVector::from_row_slice(q),
                *r,
                interval,
            )?)
        }
        SetSchema::Product { factors } => {
            let built = factors
                .iter()
                .enumerate()
                .map(|(i, f)| build_set(f).with_context(|| format!("factors[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            Ok(ConstraintSet::product(built)?)
        }
    }
}
