//! Feasibility tooling: residuals, an alternating-projection solver, and
//! local solution-set sampling.
//!
//! Nothing here feeds the certifier — verdicts rest on the cone
//! computations alone. The solver is best-effort on nonconvex sets
//! (projection methods lose their convergence guarantees there) and every
//! sampled point is re-verified by membership tests before it is returned.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certify::{NsepInstance, NsfpInstance, ProblemInstance};
use crate::sets::{ConstraintSet, SetError};

/// Feasibility tolerance a sampled solution must pass before it is kept.
pub const SAMPLE_FEASIBILITY_TOL: f64 = 1e-8;

/// Name of the random source, recorded in report headers: runs are
/// bit-reproducible given the same seed.
pub const GENERATOR_NAME: &str = "ChaCha8 (64-bit seed, SplitMix64 expansion)";

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Set(#[from] SetError),
}

/// Problem data without a reference point: what the solver and the probe
/// operate on (perturbed parameters generally have no feasible reference).
#[derive(Debug, Clone)]
pub enum ProblemData {
    Nsep {
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DVector<f64>,
        set_c: ConstraintSet,
        set_q: ConstraintSet,
    },
    Nsfp {
        a: DMatrix<f64>,
        b: DVector<f64>,
        set_c: ConstraintSet,
        set_q: ConstraintSet,
    },
}

impl From<&NsepInstance> for ProblemData {
    fn from(p: &NsepInstance) -> Self {
        ProblemData::Nsep {
            a: p.a.clone(),
            b: p.b.clone(),
            c: p.c.clone(),
            set_c: p.set_c.clone(),
            set_q: p.set_q.clone(),
        }
    }
}

impl From<&NsfpInstance> for ProblemData {
    fn from(p: &NsfpInstance) -> Self {
        ProblemData::Nsfp {
            a: p.a.clone(),
            b: p.b.clone(),
            set_c: p.set_c.clone(),
            set_q: p.set_q.clone(),
        }
    }
}

impl From<&ProblemInstance> for ProblemData {
    fn from(p: &ProblemInstance) -> Self {
        match p {
            ProblemInstance::Nsep(inst) => inst.into(),
            ProblemInstance::Nsfp(inst) => inst.into(),
        }
    }
}

impl ProblemData {
    /// Dimension of the unknown: n + m for NSEP, n for NSFP.
    pub fn unknown_dim(&self) -> usize {
        match self {
            ProblemData::Nsep { a, b, .. } => a.ncols() + b.ncols(),
            ProblemData::Nsfp { a, .. } => a.ncols(),
        }
    }

    /// Combined infeasibility of a candidate unknown: equality residual
    /// (NSEP) or image inclusion gap (NSFP), plus set distances. Distances
    /// fall back to a 0/∞ membership penalty where no projection exists.
    pub fn residual(&self, u: &DVector<f64>) -> Result<f64, SolverError> {
        if u.len() != self.unknown_dim() {
            return Err(SolverError::DimensionMismatch {
                expected: self.unknown_dim(),
                found: u.len(),
            });
        }
        match self {
            ProblemData::Nsep {
                a,
                b,
                c,
                set_c,
                set_q,
            } => {
                let n = a.ncols();
                let m = b.ncols();
                let x = u.rows(0, n).into_owned();
                let y = u.rows(n, m).into_owned();
                let eq = (a * &x - b * &y - c).norm();
                Ok(eq + distance_or_penalty(set_c, &x)? + distance_or_penalty(set_q, &y)?)
            }
            ProblemData::Nsfp { a, b, set_c, set_q } => {
                let image = a * u + b;
                Ok(distance_or_penalty(set_c, u)? + distance_or_penalty(set_q, &image)?)
            }
        }
    }

    /// True when the candidate passes all membership and inclusion tests
    /// at `tol` without relying on projections.
    pub fn is_feasible(&self, u: &DVector<f64>, tol: f64) -> bool {
        match self {
            ProblemData::Nsep {
                a,
                b,
                c,
                set_c,
                set_q,
            } => {
                let n = a.ncols();
                let m = b.ncols();
                let x = u.rows(0, n).into_owned();
                let y = u.rows(n, m).into_owned();
                (a * &x - b * &y - c).amax() <= tol
                    && set_c.contains(&x, tol)
                    && set_q.contains(&y, tol)
            }
            ProblemData::Nsfp { a, b, set_c, set_q } => {
                set_c.contains(u, tol) && set_q.contains(&(a * u + b), tol)
            }
        }
    }

    fn all_projectable(&self) -> Result<(), SolverError> {
        // Probe each projection once so unsupported variants surface as a
        // typed error instead of a mid-iteration failure.
        match self {
            ProblemData::Nsep { set_c, set_q, .. } => {
                set_c.project(&DVector::zeros(set_c.dim()))?;
                set_q.project(&DVector::zeros(set_q.dim()))?;
            }
            ProblemData::Nsfp { set_c, set_q, .. } => {
                set_c.project(&DVector::zeros(set_c.dim()))?;
                set_q.project(&DVector::zeros(set_q.dim()))?;
            }
        }
        Ok(())
    }
}

fn distance_or_penalty(set: &ConstraintSet, x: &DVector<f64>) -> Result<f64, SolverError> {
    match set.distance(x) {
        Ok(d) => Ok(d),
        Err(SetError::UnsupportedProjection { .. }) => {
            if set.contains(x, SAMPLE_FEASIBILITY_TOL) {
                Ok(0.0)
            } else {
                Ok(f64::INFINITY)
            }
        }
        Err(e) => Err(e.into()),
    }
}

/// `‖Ax − By − c‖₂` plus set distances for an NSEP candidate pair.
pub fn residual_nsep(
    data: &ProblemData,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<f64, SolverError> {
    let u = DVector::from_iterator(x.len() + y.len(), x.iter().chain(y.iter()).copied());
    data.residual(&u)
}

/// Set distances of an NSFP candidate.
pub fn residual_nsfp(data: &ProblemData, x: &DVector<f64>) -> Result<f64, SolverError> {
    data.residual(x)
}

/// Outcome of an alternating-projection run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    /// Best point found: `(x, y)` concatenated for NSEP, `x` for NSFP.
    pub point: DVector<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Cyclic projection solver with the linear-algebra setup (pseudo-inverse
/// of the coupling matrix) hoisted out so repeated repairs share it.
///
/// NSEP alternates between `C × Q` and the affine set `{Ax − By = c}`
/// (least-norm correction through the pseudo-inverse); NSFP alternates a
/// `C`-projection with a least-squares pullback of the `Q`-projected
/// image. Convergence is only guaranteed for convex data; the report's
/// `converged` flag is backed by explicit membership checks either way.
pub struct AlternatingSolver<'a> {
    data: &'a ProblemData,
    /// `[A | −B]` for NSEP, `A` for NSFP.
    coupling: DMatrix<f64>,
    pinv: DMatrix<f64>,
}

impl<'a> AlternatingSolver<'a> {
    pub fn new(data: &'a ProblemData) -> Result<Self, SolverError> {
        data.all_projectable()?;
        let coupling = match data {
            ProblemData::Nsep { a, b, .. } => {
                let (l, n, m) = (a.nrows(), a.ncols(), b.ncols());
                let mut t = DMatrix::zeros(l, n + m);
                t.view_mut((0, 0), (l, n)).copy_from(a);
                t.view_mut((0, n), (l, m)).copy_from(&(-b));
                t
            }
            ProblemData::Nsfp { a, .. } => a.clone(),
        };
        let pinv = coupling
            .clone()
            .svd(true, true)
            .pseudo_inverse(1e-12)
            .expect("SVD of a finite matrix");
        Ok(AlternatingSolver {
            data,
            coupling,
            pinv,
        })
    }

    pub fn run(
        &self,
        start: &DVector<f64>,
        max_iter: usize,
        tol: f64,
    ) -> Result<SolveReport, SolverError> {
        if start.len() != self.data.unknown_dim() {
            return Err(SolverError::DimensionMismatch {
                expected: self.data.unknown_dim(),
                found: start.len(),
            });
        }
        let start_res = self.data.residual(start)?;
        if start_res <= tol {
            return Ok(SolveReport {
                point: start.clone(),
                residual: start_res,
                iterations: 0,
                converged: true,
            });
        }
        // Inside the loop the iterate has just been projected onto the
        // sets, so the full residual reduces to the coupling part; the
        // full residual is recomputed for whatever point is returned.
        match self.data {
            ProblemData::Nsep {
                a,
                b,
                c,
                set_c,
                set_q,
                ..
            } => {
                let n = a.ncols();
                let m = b.ncols();
                let mut u = start.clone();
                let mut best = (start_res, start.clone());
                let mut prev = DVector::zeros(u.len());
                for it in 1..=max_iter {
                    let x = set_c.project(&u.rows(0, n).into_owned())?;
                    let y = set_q.project(&u.rows(n, m).into_owned())?;
                    u.rows_mut(0, n).copy_from(&x);
                    u.rows_mut(n, m).copy_from(&y);
                    let res = (&self.coupling * &u - c).norm();
                    if res < best.0 {
                        best = (res, u.clone());
                    }
                    if res <= tol {
                        return Ok(SolveReport {
                            point: u,
                            residual: res,
                            iterations: it,
                            converged: true,
                        });
                    }
                    if (&u - &prev).amax() <= 1e-14 * (1.0 + u.amax()) {
                        break; // stalled between the two projections
                    }
                    prev.copy_from(&u);
                    let gap = &self.coupling * &u - c;
                    u -= &self.pinv * gap;
                }
                let residual = self.data.residual(&best.1)?;
                Ok(SolveReport {
                    point: best.1,
                    residual,
                    iterations: max_iter,
                    converged: false,
                })
            }
            ProblemData::Nsfp { a, b, set_c, set_q } => {
                let mut x = start.clone();
                let mut best = (start_res, start.clone());
                let mut prev = DVector::zeros(x.len());
                for it in 1..=max_iter {
                    x = set_c.project(&x)?;
                    let image = a * &x + b;
                    let target = set_q.project(&image)?;
                    let res = (&target - &image).norm();
                    if res < best.0 {
                        best = (res, x.clone());
                    }
                    if res <= tol {
                        return Ok(SolveReport {
                            point: x,
                            residual: res,
                            iterations: it,
                            converged: true,
                        });
                    }
                    if (&x - &prev).amax() <= 1e-14 * (1.0 + x.amax()) {
                        break;
                    }
                    prev.copy_from(&x);
                    x += &self.pinv * (target - image);
                }
                let residual = self.data.residual(&best.1)?;
                Ok(SolveReport {
                    point: best.1,
                    residual,
                    iterations: max_iter,
                    converged: false,
                })
            }
        }
    }
}

/// One-shot alternating-projection solve; see [`AlternatingSolver`].
pub fn solve_alternating(
    data: &ProblemData,
    start: &DVector<f64>,
    max_iter: usize,
    tol: f64,
) -> Result<SolveReport, SolverError> {
    AlternatingSolver::new(data)?.run(start, max_iter, tol)
}

/// Iteration budget for each repair inside [`sample_solutions`].
const REPAIR_MAX_ITER: usize = 60;

/// Up to `count` verified-feasible points of the problem inside the
/// Euclidean ball `B(center, radius)`: uniform ball samples, each repaired
/// by [`solve_alternating`], kept only if the repaired point stays in the
/// ball and passes feasibility at [`SAMPLE_FEASIBILITY_TOL`].
/// Deterministic for a fixed seed; candidates are evaluated in index
/// order.
pub fn sample_solutions(
    data: &ProblemData,
    center: &DVector<f64>,
    radius: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<DVector<f64>>, SolverError> {
    use rand::SeedableRng;
    if center.len() != data.unknown_dim() {
        return Err(SolverError::DimensionMismatch {
            expected: data.unknown_dim(),
            found: center.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    if count == 0 {
        return Ok(out);
    }
    let solver = AlternatingSolver::new(data)?;
    for _ in 0..count {
        let candidate = sample_in_ball(&mut rng, center, radius);
        let report = solver.run(&candidate, REPAIR_MAX_ITER, 1e-9)?;
        if report.converged
            && (&report.point - center).norm() <= radius
            && data.is_feasible(&report.point, SAMPLE_FEASIBILITY_TOL)
        {
            out.push(report.point);
        }
    }
    Ok(out)
}

/// Uniform draw from the closed Euclidean ball `B(center, radius)`.
pub(crate) fn sample_in_ball(
    rng: &mut ChaCha8Rng,
    center: &DVector<f64>,
    radius: f64,
) -> DVector<f64> {
    let d = center.len();
    let dir = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let norm = dir.norm();
    if norm == 0.0 {
        return center.clone();
    }
    let u: f64 = rng.gen_range(0.0..=1.0);
    let scale = radius * u.powf(1.0 / d as f64) / norm;
    center + dir * scale
}
