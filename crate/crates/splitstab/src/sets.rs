//! Catalog of constraint sets with exact membership, limiting normal
//! cones, and projections where a rule exists.
//!
//! Each variant is a nonempty closed subset of `R^d`. The quadratic
//! sublevel family `f⁻¹(Θ)` with `f(x) = xᵀPx + qᵀx + r` is restricted to
//! quadratic `f` on purpose: gradients are closed-form, so normal cones
//! need no numerical differentiation, and the family still covers both the
//! parabola sublevel set `{x₁ ≤ x₂²}` and the annulus `{γ₁ ≤ ‖x‖² ≤ γ₂}`
//! that exercise the nonconvex paths.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::cone::Cone;

/// Relative activity tolerance: a bound or halfspace is active when its
/// residual is within `ACTIVE_TOL * (1 + data scale)`. Documented so cone
/// identities, and therefore verdicts, are reproducible.
pub const ACTIVE_TOL: f64 = 1e-9;

/// Dykstra iteration cap for polyhedron projection.
const DYKSTRA_MAX_CYCLES: usize = 100_000;

/// Dykstra convergence tolerance on the iterate change per cycle.
const DYKSTRA_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum SetError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("point is not in the set (residual {residual:.3e})")]
    PointNotInSet { residual: f64 },
    #[error(
        "qualification failure: defining gradient vanishes at an active bound \
         (|∇f| = {gradient_norm:.3e}); normal regularity cannot be certified"
    )]
    QualificationFailure { gradient_norm: f64 },
    #[error("no projection rule for this variant: {variant}")]
    UnsupportedProjection { variant: &'static str },
    #[error("projection did not reach the set (residual {residual:.3e})")]
    ProjectionFailed { residual: f64 },
    #[error("set is empty or the nonemptiness probe failed: {detail}")]
    EmptySet { detail: String },
    #[error("invalid set definition: {detail}")]
    InvalidDefinition { detail: String },
}

/// Closed interval with optionally infinite bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, SetError> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(SetError::InvalidDefinition {
                detail: format!("interval bounds [{lo}, {hi}] are not ordered"),
            });
        }
        Ok(Interval { lo, hi })
    }

    fn contains(&self, t: f64, tol: f64) -> bool {
        t >= self.lo - tol && t <= self.hi + tol
    }
}

/// A constraint set from the supported catalog.
#[derive(Debug, Clone)]
pub enum ConstraintSet {
    /// Intersection of halfspaces `aᵢ·x ≤ αᵢ` (zero rows = full space).
    Polyhedron {
        rows: DMatrix<f64>,
        rhs: DVector<f64>,
    },
    /// Per-coordinate closed intervals, bounds possibly infinite.
    Box { bounds: Vec<Interval> },
    /// The nonnegative orthant `R₊^d`.
    Orthant { dim: usize },
    /// A single point.
    Singleton { point: DVector<f64> },
    /// `{x : f(x) ∈ Θ}` for quadratic `f`.
    QuadraticSublevel(QuadraticSublevel),
    /// Ordered product of catalog sets.
    Product { factors: Vec<ConstraintSet> },
}

/// Quadratic sublevel data with the eigendecomposition of `P` cached for
/// projections.
#[derive(Debug, Clone)]
pub struct QuadraticSublevel {
    p: DMatrix<f64>,
    q: DVector<f64>,
    r: f64,
    theta: Interval,
    eigvals: DVector<f64>,
    eigvecs: DMatrix<f64>,
}

impl QuadraticSublevel {
    pub fn f(&self, x: &DVector<f64>) -> f64 {
        (x.transpose() * &self.p * x)[(0, 0)] + self.q.dot(x) + self.r
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.p * x * 2.0 + &self.q
    }

    pub fn theta(&self) -> Interval {
        self.theta
    }

    fn data_scale(&self, x: &DVector<f64>) -> f64 {
        let finite = |v: f64| if v.is_finite() { v.abs() } else { 0.0 };
        1.0 + self.f(x).abs() + finite(self.theta.lo) + finite(self.theta.hi)
    }

    /// True when `P` is numerically `α·I` for some `α`; returns `α`.
    fn scalar_multiple_of_identity(&self) -> Option<f64> {
        let d = self.p.nrows();
        let alpha = self.p[(0, 0)];
        let scale = 1.0 + self.p.amax();
        for i in 0..d {
            for j in 0..d {
                let want = if i == j { alpha } else { 0.0 };
                if (self.p[(i, j)] - want).abs() > 1e-12 * scale {
                    return None;
                }
            }
        }
        Some(alpha)
    }
}

impl ConstraintSet {
    /// Polyhedron `{x : rows·x ≤ rhs}`; nonemptiness is probed by
    /// projecting the origin.
    pub fn polyhedron(rows: DMatrix<f64>, rhs: DVector<f64>) -> Result<Self, SetError> {
        if rows.ncols() == 0 {
            return Err(SetError::InvalidDefinition {
                detail: "ambient dimension must be at least 1".into(),
            });
        }
        if rows.nrows() != rhs.len() {
            return Err(SetError::DimensionMismatch {
                expected: rows.nrows(),
                found: rhs.len(),
            });
        }
        if rows.iter().any(|v| !v.is_finite()) || rhs.iter().any(|v| !v.is_finite()) {
            return Err(SetError::InvalidDefinition {
                detail: "halfspace data must be finite".into(),
            });
        }
        let set = ConstraintSet::Polyhedron { rows, rhs };
        let origin = DVector::zeros(set.dim());
        match set.project(&origin) {
            Ok(p) if set.contains(&p, 1e-7) => Ok(set),
            _ => Err(SetError::EmptySet {
                detail: "projecting the origin did not reach the polyhedron".into(),
            }),
        }
    }

    pub fn hyper_box(bounds: Vec<Interval>) -> Result<Self, SetError> {
        if bounds.is_empty() {
            return Err(SetError::InvalidDefinition {
                detail: "ambient dimension must be at least 1".into(),
            });
        }
        for (i, b) in bounds.iter().enumerate() {
            if b.lo == f64::INFINITY || b.hi == f64::NEG_INFINITY {
                return Err(SetError::EmptySet {
                    detail: format!("coordinate {i} has an empty interval"),
                });
            }
        }
        Ok(ConstraintSet::Box { bounds })
    }

    pub fn orthant(dim: usize) -> Result<Self, SetError> {
        if dim == 0 {
            return Err(SetError::InvalidDefinition {
                detail: "ambient dimension must be at least 1".into(),
            });
        }
        Ok(ConstraintSet::Orthant { dim })
    }

    pub fn singleton(point: DVector<f64>) -> Result<Self, SetError> {
        if point.is_empty() || point.iter().any(|v| !v.is_finite()) {
            return Err(SetError::InvalidDefinition {
                detail: "singleton point must be finite and nonempty".into(),
            });
        }
        Ok(ConstraintSet::Singleton { point })
    }

    /// `{x : f(x) ∈ θ}` with `f(x) = xᵀPx + qᵀx + r`. `P` must be
    /// symmetric; nonemptiness is probed by a coarse grid scan over a
    /// data-scaled box followed by a gradient polish.
    pub fn quadratic_sublevel(
        p: DMatrix<f64>,
        q: DVector<f64>,
        r: f64,
        theta: Interval,
    ) -> Result<Self, SetError> {
        let d = p.nrows();
        if d == 0 || p.ncols() != d {
            return Err(SetError::InvalidDefinition {
                detail: "P must be square with dimension at least 1".into(),
            });
        }
        if q.len() != d {
            return Err(SetError::DimensionMismatch {
                expected: d,
                found: q.len(),
            });
        }
        let scale = 1.0 + p.amax();
        for i in 0..d {
            for j in (i + 1)..d {
                if (p[(i, j)] - p[(j, i)]).abs() > 1e-12 * scale {
                    return Err(SetError::InvalidDefinition {
                        detail: "P must be symmetric".into(),
                    });
                }
            }
        }
        if p.iter().any(|v| !v.is_finite()) || q.iter().any(|v| !v.is_finite()) || !r.is_finite() {
            return Err(SetError::InvalidDefinition {
                detail: "quadratic data must be finite".into(),
            });
        }
        let sym = (&p + p.transpose()) * 0.5;
        let eig = sym.clone().symmetric_eigen();
        let quad = QuadraticSublevel {
            p: sym,
            q,
            r,
            theta,
            eigvals: eig.eigenvalues,
            eigvecs: eig.eigenvectors,
        };
        if !quad_nonempty_probe(&quad) {
            return Err(SetError::EmptySet {
                detail: "grid scan found no point with f(x) in Θ".into(),
            });
        }
        Ok(ConstraintSet::QuadraticSublevel(quad))
    }

    pub fn product(factors: Vec<ConstraintSet>) -> Result<Self, SetError> {
        if factors.is_empty() {
            return Err(SetError::InvalidDefinition {
                detail: "product needs at least one factor".into(),
            });
        }
        Ok(ConstraintSet::Product { factors })
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        match self {
            ConstraintSet::Polyhedron { rows, .. } => rows.ncols(),
            ConstraintSet::Box { bounds } => bounds.len(),
            ConstraintSet::Orthant { dim } => *dim,
            ConstraintSet::Singleton { point } => point.len(),
            ConstraintSet::QuadraticSublevel(quad) => quad.q.len(),
            ConstraintSet::Product { factors } => factors.iter().map(|f| f.dim()).sum(),
        }
    }

    /// True iff `x` satisfies every defining relation within `tol`.
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        debug_assert_eq!(x.len(), self.dim());
        match self {
            ConstraintSet::Polyhedron { rows, rhs } => {
                let res = rows * x - rhs;
                res.iter().all(|&v| v <= tol)
            }
            ConstraintSet::Box { bounds } => bounds
                .iter()
                .zip(x.iter())
                .all(|(b, &xi)| b.contains(xi, tol)),
            ConstraintSet::Orthant { .. } => x.iter().all(|&v| v >= -tol),
            ConstraintSet::Singleton { point } => (x - point).amax() <= tol,
            ConstraintSet::QuadraticSublevel(quad) => quad.theta.contains(quad.f(x), tol),
            ConstraintSet::Product { factors } => {
                let mut offset = 0;
                factors.iter().all(|f| {
                    let d = f.dim();
                    let part = x.rows(offset, d).into_owned();
                    offset += d;
                    f.contains(&part, tol)
                })
            }
        }
    }

    /// Membership residual check used as the precondition of
    /// [`ConstraintSet::normal_cone`], at the scaled activity tolerance.
    fn check_membership(&self, x: &DVector<f64>) -> Result<(), SetError> {
        if x.len() != self.dim() {
            return Err(SetError::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let scale = 1.0 + x.amax();
        if self.contains(x, ACTIVE_TOL * scale) {
            Ok(())
        } else {
            let residual = match self.project(x) {
                Ok(p) => (x - p).norm(),
                Err(_) => f64::NAN,
            };
            Err(SetError::PointNotInSet { residual })
        }
    }

    /// Limiting normal cone `N(x; S)`.
    ///
    /// Every catalog variant is normally regular at every point where this
    /// succeeds: convex variants by convexity, quadratic sublevels by the
    /// smooth preimage rule, which needs `∇f(x) ≠ 0` at an active bound.
    /// When that qualification fails the error is surfaced instead of
    /// guessing a cone, because the downstream certification argument
    /// require normal regularity.
    pub fn normal_cone(&self, x: &DVector<f64>) -> Result<Cone, SetError> {
        self.check_membership(x)?;
        match self {
            ConstraintSet::Polyhedron { rows, rhs } => {
                let mut gens = Vec::new();
                for i in 0..rows.nrows() {
                    let row = rows.row(i).transpose();
                    let scale = 1.0 + rhs[i].abs() + row.amax() * x.amax();
                    let residual = row.dot(x) - rhs[i];
                    if residual.abs() <= ACTIVE_TOL * scale {
                        gens.push(row);
                    }
                }
                Ok(Cone::from_generators(self.dim(), &gens, &[]))
            }
            ConstraintSet::Box { bounds } => {
                let mut gens = Vec::new();
                let mut lins = Vec::new();
                for (i, b) in bounds.iter().enumerate() {
                    let mut e = DVector::zeros(bounds.len());
                    if b.lo == b.hi {
                        e[i] = 1.0;
                        lins.push(e);
                        continue;
                    }
                    let at_lo =
                        b.lo.is_finite() && (x[i] - b.lo).abs() <= ACTIVE_TOL * (1.0 + b.lo.abs());
                    let at_hi =
                        b.hi.is_finite() && (x[i] - b.hi).abs() <= ACTIVE_TOL * (1.0 + b.hi.abs());
                    if at_lo {
                        e[i] = -1.0;
                        gens.push(e);
                    } else if at_hi {
                        e[i] = 1.0;
                        gens.push(e);
                    }
                }
                Ok(Cone::from_generators(self.dim(), &gens, &lins))
            }
            ConstraintSet::Orthant { dim } => {
                let mut gens = Vec::new();
                for i in 0..*dim {
                    if x[i].abs() <= ACTIVE_TOL {
                        let mut e = DVector::zeros(*dim);
                        e[i] = -1.0;
                        gens.push(e);
                    }
                }
                Ok(Cone::from_generators(*dim, &gens, &[]))
            }
            ConstraintSet::Singleton { point } => Ok(Cone::full(point.len())),
            ConstraintSet::QuadraticSublevel(quad) => {
                let fx = quad.f(x);
                let scale = quad.data_scale(x);
                let grad = quad.gradient(x);
                let grad_scale = 1.0 + quad.p.amax() * x.amax() + quad.q.amax();
                let qualified = grad.norm() > ACTIVE_TOL * grad_scale;
                let theta = quad.theta;
                if theta.lo == theta.hi {
                    if !qualified {
                        return Err(SetError::QualificationFailure {
                            gradient_norm: grad.norm(),
                        });
                    }
                    return Ok(Cone::line(grad));
                }
                let at_hi = theta.hi.is_finite() && (fx - theta.hi).abs() <= ACTIVE_TOL * scale;
                let at_lo = theta.lo.is_finite() && (fx - theta.lo).abs() <= ACTIVE_TOL * scale;
                if !at_hi && !at_lo {
                    return Ok(Cone::zero(self.dim()));
                }
                if !qualified {
                    return Err(SetError::QualificationFailure {
                        gradient_norm: grad.norm(),
                    });
                }
                // For degenerate near-equal bounds, the nearer bound wins.
                let pick_hi = if at_hi && at_lo {
                    (fx - theta.hi).abs() <= (fx - theta.lo).abs()
                } else {
                    at_hi
                };
                if pick_hi {
                    Ok(Cone::ray(grad))
                } else {
                    Ok(Cone::ray(-grad))
                }
            }
            ConstraintSet::Product { factors } => {
                let mut offset = 0;
                let mut cones = Vec::with_capacity(factors.len());
                for f in factors {
                    let d = f.dim();
                    let part = x.rows(offset, d).into_owned();
                    offset += d;
                    cones.push(f.normal_cone(&part)?);
                }
                Ok(Cone::product_of(&cones))
            }
        }
    }

    /// Nearest point of the set to `x` (for the nonconvex variants: a
    /// nearest point, with the documented deterministic tie-break).
    pub fn project(&self, x: &DVector<f64>) -> Result<DVector<f64>, SetError> {
        if x.len() != self.dim() {
            return Err(SetError::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        match self {
            ConstraintSet::Polyhedron { rows, rhs } => project_polyhedron(rows, rhs, x),
            ConstraintSet::Box { bounds } => Ok(DVector::from_iterator(
                bounds.len(),
                bounds
                    .iter()
                    .zip(x.iter())
                    .map(|(b, &xi)| xi.clamp(b.lo, b.hi)),
            )),
            ConstraintSet::Orthant { .. } => Ok(x.map(|v| v.max(0.0))),
            ConstraintSet::Singleton { point } => Ok(point.clone()),
            ConstraintSet::QuadraticSublevel(quad) => project_quadratic(quad, x),
            ConstraintSet::Product { factors } => {
                let mut out = DVector::zeros(x.len());
                let mut offset = 0;
                for f in factors {
                    let d = f.dim();
                    let part = x.rows(offset, d).into_owned();
                    out.rows_mut(offset, d).copy_from(&f.project(&part)?);
                    offset += d;
                }
                Ok(out)
            }
        }
    }

    /// Euclidean distance to the set via projection.
    pub fn distance(&self, x: &DVector<f64>) -> Result<f64, SetError> {
        Ok((x - self.project(x)?).norm())
    }

    /// True when every variant in the set (recursively) is convex; the
    /// quadratic family is only certified convex in its affine-slab form.
    pub fn is_convex(&self) -> bool {
        match self {
            ConstraintSet::Polyhedron { .. }
            | ConstraintSet::Box { .. }
            | ConstraintSet::Orthant { .. }
            | ConstraintSet::Singleton { .. } => true,
            ConstraintSet::QuadraticSublevel(quad) => {
                let psd = quad.eigvals.iter().all(|&l| l >= -1e-12);
                let nsd = quad.eigvals.iter().all(|&l| l <= 1e-12);
                let zero = psd && nsd;
                // Sublevel of a convex f (P psd, hi-bound only) is convex;
                // superlevel of a concave f likewise; affine always.
                zero || (psd && !quad.theta.lo.is_finite()) || (nsd && !quad.theta.hi.is_finite())
            }
            ConstraintSet::Product { factors } => factors.iter().all(|f| f.is_convex()),
        }
    }
}

/// Grid scan plus gradient polish for the quadratic nonemptiness probe.
fn quad_nonempty_probe(quad: &QuadraticSublevel) -> bool {
    let d = quad.q.len();
    let theta = quad.theta;
    // Constant f: decide exactly.
    if quad.p.amax() == 0.0 && quad.q.amax() == 0.0 {
        return theta.contains(quad.r, 0.0);
    }
    let finite_mag = |v: f64| if v.is_finite() { v.abs() } else { 0.0 };
    let scale = 1.0 + quad.r.abs() + quad.q.amax() + finite_mag(theta.lo).max(finite_mag(theta.hi));
    let radius = 4.0 * (1.0 + scale.sqrt());
    let per_axis = match d {
        1 => 801,
        2 => 101,
        3 => 41,
        4 => 15,
        _ => 5,
    };
    let mut best: Option<DVector<f64>> = None;
    let mut best_gap = f64::INFINITY;
    let mut idx = vec![0usize; d];
    loop {
        let x = DVector::from_iterator(
            d,
            idx.iter()
                .map(|&i| -radius + 2.0 * radius * (i as f64) / ((per_axis - 1) as f64)),
        );
        let fx = quad.f(&x);
        let gap = if fx < theta.lo {
            theta.lo - fx
        } else if fx > theta.hi {
            fx - theta.hi
        } else {
            return true;
        };
        if gap < best_gap {
            best_gap = gap;
            best = Some(x);
        }
        // Odometer-style increment over the grid.
        let mut k = 0;
        loop {
            if k == d {
                break;
            }
            idx[k] += 1;
            if idx[k] < per_axis {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == d {
            break;
        }
    }
    // Polish: Newton steps for f(x) = nearest violated bound along ∇f.
    let mut x = best.unwrap();
    for _ in 0..100 {
        let fx = quad.f(&x);
        let target = fx.clamp(theta.lo, theta.hi);
        if (fx - target).abs() <= 1e-12 * (1.0 + fx.abs()) {
            return true;
        }
        let grad = quad.gradient(&x);
        let g2 = grad.norm_squared();
        if g2 < 1e-30 {
            return false;
        }
        x -= grad * ((fx - target) / g2);
    }
    theta.contains(quad.f(&x), 1e-9 * scale)
}

/// Projection onto one halfspace `a·x ≤ alpha`.
fn project_halfspace(a: &DVector<f64>, alpha: f64, x: &DVector<f64>) -> DVector<f64> {
    let viol = a.dot(x) - alpha;
    if viol <= 0.0 {
        x.clone()
    } else {
        x - a * (viol / a.norm_squared())
    }
}

fn project_polyhedron(
    rows: &DMatrix<f64>,
    rhs: &DVector<f64>,
    x: &DVector<f64>,
) -> Result<DVector<f64>, SetError> {
    let m = rows.nrows();
    if m == 0 {
        return Ok(x.clone());
    }
    if m == 1 {
        return Ok(project_halfspace(&rows.row(0).transpose(), rhs[0], x));
    }
    // Dykstra's alternating projections with per-set corrections; exact for
    // intersections of halfspaces.
    let d = x.len();
    let mut z = x.clone();
    let mut corrections = vec![DVector::<f64>::zeros(d); m];
    for _ in 0..DYKSTRA_MAX_CYCLES {
        let before = z.clone();
        for i in 0..m {
            let y = &z + &corrections[i];
            let p = project_halfspace(&rows.row(i).transpose(), rhs[i], &y);
            corrections[i] = y - &p;
            z = p;
        }
        if (&z - before).amax() <= DYKSTRA_TOL {
            break;
        }
    }
    let res = rows * &z - rhs;
    let worst = res.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if worst > 1e-7 {
        return Err(SetError::ProjectionFailed { residual: worst });
    }
    Ok(z)
}

fn project_quadratic(quad: &QuadraticSublevel, x: &DVector<f64>) -> Result<DVector<f64>, SetError> {
    let theta = quad.theta;
    let fx = quad.f(x);
    if theta.contains(fx, 0.0) {
        return Ok(x.clone());
    }
    // Affine slab: P vanishes, project along q.
    if quad.p.amax() == 0.0 {
        if quad.q.amax() == 0.0 {
            // Constant f inside Θ was handled above; empty is unreachable
            // because construction probes nonemptiness.
            return Err(SetError::ProjectionFailed { residual: f64::NAN });
        }
        let t = fx.clamp(theta.lo, theta.hi);
        return Ok(x + &quad.q * ((t - fx) / quad.q.norm_squared()));
    }
    // Ball-like: P = αI, complete the square and project radially.
    if let Some(alpha) = quad.scalar_multiple_of_identity() {
        if alpha != 0.0 {
            return Ok(project_radial(quad, alpha, x));
        }
    }
    // General symmetric P: the nearest set point lies on the level set of
    // the violated bound (a segment from x into the set crosses it, and the
    // crossing point is closer than any deeper point).
    let target = if fx > theta.hi { theta.hi } else { theta.lo };
    if let Some(p) = project_level_set_rank1(quad, target, x) {
        return Ok(p);
    }
    project_level_set(quad, target, x)
}

/// Closed-form level-set projection when `P` has exactly one nonzero
/// eigenvalue (parabolic cylinders such as `{x₁ ≤ x₂²}`). The problem
/// collapses to a nearest-point-on-parabola computation in a 2-D plane,
/// whose stationarity condition is a cubic.
fn project_level_set_rank1(
    quad: &QuadraticSublevel,
    target: f64,
    x: &DVector<f64>,
) -> Option<DVector<f64>> {
    let d = x.len();
    let lam = &quad.eigvals;
    let scale = 1.0 + lam.amax();
    let mut k = None;
    for i in 0..d {
        if lam[i].abs() > 1e-12 * scale {
            if k.is_some() {
                return None;
            }
            k = Some(i);
        }
    }
    let k = k?;
    let v = &quad.eigvecs;
    let y0 = v.transpose() * x;
    let qt = v.transpose() * &quad.q;
    let lam_k = lam[k];
    let qk = qt[k];

    // Split q̃ into the k-th coordinate and the rest; w is the magnitude of
    // the rest, e its unit direction in the zero-eigenvalue block.
    let mut w2 = 0.0;
    for i in 0..d {
        if i != k {
            w2 += qt[i] * qt[i];
        }
    }
    let w = w2.sqrt();
    let mut y = y0.clone();
    if w < 1e-14 {
        // f depends on y_k alone: λ y_k² + q̃_k y_k + r = target.
        let disc = qk * qk - 4.0 * lam_k * (quad.r - target);
        if disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        let t1 = (-qk + sq) / (2.0 * lam_k);
        let t2 = (-qk - sq) / (2.0 * lam_k);
        y[k] = if (t1 - y0[k]).abs() <= (t2 - y0[k]).abs() {
            t1
        } else {
            t2
        };
        return Some(v * y);
    }
    // Coordinates orthogonal to both y_k and e are untouched; s is the
    // coordinate along e. Constraint: λ t² + q̃_k t + w s + r = target.
    let t0 = y0[k];
    let mut s0 = 0.0;
    for i in 0..d {
        if i != k {
            s0 += qt[i] / w * y0[i];
        }
    }
    // Minimize (t − t0)² + (s(t) − s0)² with s(t) = (target − r − λt² − q̃_k t)/w.
    // Stationarity is the cubic in t below.
    let c2 = -lam_k / w;
    let c1 = -qk / w;
    let c0 = (target - quad.r) / w;
    // s(t) = c2 t² + c1 t + c0; g'(t)/2 = (t − t0) + (s(t) − s0)(2 c2 t + c1).
    let a3 = 2.0 * c2 * c2;
    let a2 = 3.0 * c2 * c1;
    let a1 = 1.0 + c1 * c1 + 2.0 * c2 * (c0 - s0);
    let a0 = c1 * (c0 - s0) - t0;
    let mut best: Option<(f64, f64, f64)> = None;
    for t in solve_cubic(a3, a2, a1, a0) {
        let s = c2 * t * t + c1 * t + c0;
        let dist2 = (t - t0).powi(2) + (s - s0).powi(2);
        if best.is_none_or(|(bd, _, _)| dist2 < bd) {
            best = Some((dist2, t, s));
        }
    }
    let (_, t, s) = best?;
    y[k] = t;
    for i in 0..d {
        if i != k {
            y[i] = y0[i] + qt[i] / w * (s - s0);
        }
    }
    Some(v * y)
}

/// All real roots of `a t³ + b t² + c t + d = 0`, via the trigonometric /
/// Cardano method; degrades to quadratic and linear cases.
fn solve_cubic(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs()).max(d.abs());
    if scale == 0.0 {
        return vec![];
    }
    if a.abs() < 1e-14 * scale {
        if b.abs() < 1e-14 * scale {
            if c.abs() < 1e-14 * scale {
                return vec![];
            }
            return vec![-d / c];
        }
        let disc = c * c - 4.0 * b * d;
        if disc < 0.0 {
            return vec![];
        }
        let sq = disc.sqrt();
        return vec![(-c + sq) / (2.0 * b), (-c - sq) / (2.0 * b)];
    }
    // Depressed form t = u − b/(3a): u³ + pu + q = 0.
    let b_ = b / a;
    let c_ = c / a;
    let d_ = d / a;
    let p = c_ - b_ * b_ / 3.0;
    let q = 2.0 * b_ * b_ * b_ / 27.0 - b_ * c_ / 3.0 + d_;
    let shift = -b_ / 3.0;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let mut roots = Vec::with_capacity(3);
    if disc > 0.0 {
        let sq = disc.sqrt();
        let u = cbrt(-q / 2.0 + sq) + cbrt(-q / 2.0 - sq);
        roots.push(u + shift);
    } else if p.abs() < 1e-300 {
        roots.push(shift);
    } else {
        // Three real roots: trigonometric form.
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        for j in 0..3 {
            roots.push(m * (phi - 2.0 * std::f64::consts::PI * j as f64 / 3.0).cos() + shift);
        }
    }
    // One Newton polish per root tightens Cardano's rounding.
    for r in roots.iter_mut() {
        let f = |t: f64| ((a * t + b) * t + c) * t + d;
        let fp = |t: f64| (3.0 * a * t + 2.0 * b) * t + c;
        for _ in 0..2 {
            let der = fp(*r);
            if der.abs() > 1e-300 {
                *r -= f(*r) / der;
            }
        }
    }
    roots
}

fn cbrt(v: f64) -> f64 {
    v.signum() * v.abs().powf(1.0 / 3.0)
}

/// Radial projection for `f(x) = α‖x‖² + qᵀx + r`, with the deterministic
/// tie-break `center + r_inner·e₁` when `x` is the exact center.
fn project_radial(quad: &QuadraticSublevel, alpha: f64, x: &DVector<f64>) -> DVector<f64> {
    let center = -&quad.q / (2.0 * alpha);
    let r_shift = quad.r - alpha * center.norm_squared();
    // f(x) = α·ρ² + r_shift where ρ = ‖x − center‖.
    let (mut lo_sq, mut hi_sq) = if alpha > 0.0 {
        (
            (quad.theta.lo - r_shift) / alpha,
            (quad.theta.hi - r_shift) / alpha,
        )
    } else {
        (
            (quad.theta.hi - r_shift) / alpha,
            (quad.theta.lo - r_shift) / alpha,
        )
    };
    lo_sq = lo_sq.max(0.0);
    hi_sq = hi_sq.max(0.0);
    let offset = x - &center;
    let rho = offset.norm();
    let rho_target = rho.clamp(lo_sq.sqrt(), hi_sq.sqrt());
    if rho > 0.0 {
        &center + offset * (rho_target / rho)
    } else if rho_target == 0.0 {
        center
    } else {
        let mut e1 = DVector::zeros(x.len());
        e1[0] = rho_target;
        center + e1
    }
}

/// Projects onto the level set `{f = target}` by sweeping the KKT secular
/// equation `f(y(μ)) = target`, `y(μ) = (I + 2μΛ)⁻¹(y₀ − μ q̃)`, over every
/// interval between poles and keeping the closest verified root.
fn project_level_set(
    quad: &QuadraticSublevel,
    target: f64,
    x: &DVector<f64>,
) -> Result<DVector<f64>, SetError> {
    let d = x.len();
    let v = &quad.eigvecs;
    let lam = &quad.eigvals;
    let y0 = v.transpose() * x;
    let qt = v.transpose() * &quad.q;

    let y_of_mu = |mu: f64| -> Option<DVector<f64>> {
        let mut y = DVector::zeros(d);
        for i in 0..d {
            let denom = 1.0 + 2.0 * mu * lam[i];
            if denom.abs() < 1e-14 {
                return None;
            }
            y[i] = (y0[i] - mu * qt[i]) / denom;
        }
        Some(y)
    };
    let f_eig = |y: &DVector<f64>| -> f64 {
        let mut s = quad.r;
        for i in 0..d {
            s += lam[i] * y[i] * y[i] + qt[i] * y[i];
        }
        s
    };
    let phi = |mu: f64| -> Option<f64> { y_of_mu(mu).map(|y| f_eig(&y) - target) };

    // Pole locations −1/(2λᵢ) split the μ axis into smooth intervals.
    let mut poles: Vec<f64> = lam
        .iter()
        .filter(|&&l| l.abs() > 1e-14)
        .map(|&l| -1.0 / (2.0 * l))
        .collect();
    poles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    poles.dedup_by(|a, b| (*a - *b).abs() < 1e-13);

    // Sample points covering every magnitude scale: geometric ladders away
    // from each pole and away from zero, so roots are bracketed whether
    // they sit at 1e-9 or 1e9 or hug a pole.
    let mut samples: Vec<f64> = vec![0.0];
    let ladder: Vec<f64> = (-14..=14).map(|k| 10f64.powi(k)).collect();
    for &step in &ladder {
        samples.push(step);
        samples.push(-step);
        for &p in &poles {
            samples.push(p + step);
            samples.push(p - step);
        }
    }
    samples.retain(|v| v.is_finite());
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    samples.dedup();

    let mut candidates: Vec<DVector<f64>> = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for &mu in &samples {
        // Skip evaluation right on top of a pole.
        if poles.iter().any(|&p| (mu - p).abs() < 1e-300) {
            prev = None;
            continue;
        }
        let Some(val) = phi(mu) else {
            prev = None;
            continue;
        };
        if !val.is_finite() {
            prev = None;
            continue;
        }
        if val.abs() < 1e-13 * (1.0 + target.abs()) {
            if let Some(y) = y_of_mu(mu) {
                candidates.push(y);
            }
        }
        if let Some((pmu, pval)) = prev {
            // Only bracket within one smooth interval (no pole between).
            let crosses_pole = poles.iter().any(|&p| p > pmu && p < mu);
            if !crosses_pole && pval.signum() != val.signum() {
                if let Some(root) = bisect(&phi, pmu, mu, pval) {
                    if let Some(y) = y_of_mu(root) {
                        candidates.push(y);
                    }
                }
            }
        }
        prev = Some((mu, val));
    }

    // Critical points of f on the level set are KKT candidates the secular
    // sweep cannot represent (∇f = 0).
    if let Some(y) = critical_point(lam, &qt, &y0) {
        if (f_eig(&y) - target).abs() <= 1e-9 * (1.0 + target.abs()) {
            candidates.push(y);
        }
    }

    // Hard case: at a pole μ = −1/(2λ), coordinates in that eigenblock with
    // vanishing numerator y₀ᵢ − μq̃ᵢ become free, and the level equation
    // fixes their magnitude. This is where symmetric inputs (x on an axis
    // of the set) land.
    for &mu in &poles {
        let mut block = Vec::new();
        let mut pinned_ok = true;
        let mut y = DVector::zeros(d);
        for i in 0..d {
            let denom = 1.0 + 2.0 * mu * lam[i];
            let numer = y0[i] - mu * qt[i];
            if denom.abs() < 1e-9 {
                if numer.abs() > 1e-9 * (1.0 + y0.amax()) {
                    pinned_ok = false;
                    break;
                }
                block.push(i);
            } else {
                y[i] = numer / denom;
            }
        }
        if !pinned_ok || block.is_empty() {
            continue;
        }
        // Everything goes into the first free coordinate; the rest stay 0.
        let i0 = block[0];
        let rest = f_eig(&y) - lam[i0] * y[i0] * y[i0] - qt[i0] * y[i0];
        // Solve λ t² + q̃ t = target − rest for t.
        let (aa, bb, cc) = (lam[i0], qt[i0], rest - target);
        let disc = bb * bb - 4.0 * aa * cc;
        if disc >= 0.0 && aa.abs() > 1e-14 {
            let sq = disc.sqrt();
            for t in [(-bb + sq) / (2.0 * aa), (-bb - sq) / (2.0 * aa)] {
                let mut cand = y.clone();
                cand[i0] = t;
                candidates.push(cand);
            }
        }
    }

    let mut best: Option<(f64, DVector<f64>)> = None;
    for y in candidates {
        let dist = (&y - &y0).norm();
        let feasible = (f_eig(&y) - target).abs() <= 1e-7 * (1.0 + target.abs());
        if feasible && best.as_ref().is_none_or(|(bd, _)| dist < *bd) {
            best = Some((dist, y));
        }
    }
    match best {
        Some((_, y)) => Ok(v * y),
        None => Err(SetError::ProjectionFailed {
            residual: (quad.f(x) - target).abs(),
        }),
    }
}

/// Bisection refinement of a bracketed root of φ.
fn bisect(phi: &dyn Fn(f64) -> Option<f64>, mut a: f64, mut b: f64, fa: f64) -> Option<f64> {
    let mut sa = fa.signum();
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let fm = phi(mid)?;
        if fm == 0.0 || (b - a).abs() < 1e-15 * (1.0 + mid.abs()) {
            return Some(mid);
        }
        if fm.signum() == sa {
            a = mid;
            sa = fm.signum();
        } else {
            b = mid;
        }
    }
    Some(0.5 * (a + b))
}

/// Solves ∇f(y) = 0 in eigencoordinates where possible; coordinates with
/// λᵢ = 0 and q̃ᵢ = 0 do not affect f and stay at y₀ᵢ.
fn critical_point(
    lam: &DVector<f64>,
    qt: &DVector<f64>,
    y0: &DVector<f64>,
) -> Option<DVector<f64>> {
    let d = lam.len();
    let mut y = DVector::zeros(d);
    for i in 0..d {
        if lam[i].abs() > 1e-14 {
            y[i] = -qt[i] / (2.0 * lam[i]);
        } else if qt[i].abs() > 1e-14 {
            return None;
        } else {
            y[i] = y0[i];
        }
    }
    Some(y)
}
