//! Operators of the generalized-equation reformulation.
//!
//! An NSEP instance is the inclusion `0 ∈ f(w,u) + G(w,u)` with parameter
//! `w = (A, B, c)`, unknown `u = (x, y)`, single-valued part
//! `f(w,u) = (−x, −y, Ax − By − c)` and constant set-valued part
//! `G ≡ C × Q × {0}`. The NSFP analogue uses `w = (A, b)` and
//! `f(w,x) = (−x, −Ax − b)` with `G ≡ C × Q`.
//!
//! Derivatives and adjoints are materialized as dense matrices over the
//! flattened parameter space (matrices stored row-major): dimensions are
//! tiny, and explicit matrices make the rank checks and adjoint identities
//! auditable.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::cone::ConeError;
use crate::sets::{ConstraintSet, SetError};

/// Relative tolerance on singular values for numerical rank decisions.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum GeError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("graph point violates the set inclusion: {0}")]
    Set(#[from] SetError),
    #[error(transparent)]
    Cone(#[from] ConeError),
}

/// A base (or increment) in the NSEP parameter-times-unknown space:
/// `A ∈ R^{l×n}`, `B ∈ R^{l×m}`, `c ∈ R^l`, `x ∈ R^n`, `y ∈ R^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct NsepPoint {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DVector<f64>,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
}

impl NsepPoint {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DVector<f64>,
        x: DVector<f64>,
        y: DVector<f64>,
    ) -> Result<Self, GeError> {
        let l = a.nrows();
        for (expected, found) in [
            (l, b.nrows()),
            (l, c.len()),
            (a.ncols(), x.len()),
            (b.ncols(), y.len()),
        ] {
            if expected != found {
                return Err(GeError::DimensionMismatch { expected, found });
            }
        }
        Ok(NsepPoint { a, b, c, x, y })
    }

    pub fn zeros_like(&self) -> Self {
        NsepPoint {
            a: DMatrix::zeros(self.a.nrows(), self.a.ncols()),
            b: DMatrix::zeros(self.b.nrows(), self.b.ncols()),
            c: DVector::zeros(self.c.len()),
            x: DVector::zeros(self.x.len()),
            y: DVector::zeros(self.y.len()),
        }
    }

    /// (n, m, l).
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.a.ncols(), self.b.ncols(), self.a.nrows())
    }

    /// Inner product of the flattened (W × U) vectors.
    pub fn dot(&self, other: &NsepPoint) -> f64 {
        self.a.dot(&other.a)
            + self.b.dot(&other.b)
            + self.c.dot(&other.c)
            + self.x.dot(&other.x)
            + self.y.dot(&other.y)
    }

    /// `f(w, u) = (−x, −y, Ax − By − c)`.
    pub fn eval(&self) -> DVector<f64> {
        let residual = &self.a * &self.x - &self.b * &self.y - &self.c;
        stack3(&-&self.x, &-&self.y, &residual)
    }

    /// Applies the strict derivative at `self` to an increment:
    /// `(−δx, −δy, Ā δx − B̄ δy + δA x̄ − δB ȳ − δc)` — the bilinear term
    /// is dropped, everything else of `f` is linear.
    pub fn derivative_apply(&self, delta: &NsepPoint) -> DVector<f64> {
        let third = &self.a * &delta.x - &self.b * &delta.y + &delta.a * &self.x
            - &delta.b * &self.y
            - &delta.c;
        stack3(&-&delta.x, &-&delta.y, &third)
    }

    /// The adjoint of the derivative applied to `v = (x′, y′, z′) ∈ V`,
    /// returned in point shape: `A′ = z′x̄ᵀ`, `B′ = −z′ȳᵀ`, `c′ = −z′`,
    /// x-block `−x′ + Āᵀz′`, y-block `−y′ − B̄ᵀz′`.
    pub fn adjoint_apply(&self, v: &DVector<f64>) -> Result<NsepPoint, GeError> {
        let (n, m, l) = self.dims();
        if v.len() != n + m + l {
            return Err(GeError::DimensionMismatch {
                expected: n + m + l,
                found: v.len(),
            });
        }
        let xp = v.rows(0, n).into_owned();
        let yp = v.rows(n, m).into_owned();
        let zp = v.rows(n + m, l).into_owned();
        Ok(NsepPoint {
            a: &zp * self.x.transpose(),
            b: -(&zp * self.y.transpose()),
            c: -&zp,
            x: self.a.transpose() * &zp - xp,
            y: -(self.b.transpose() * &zp) - yp,
        })
    }

    /// Dense derivative matrix from flattened W × U to V.
    pub fn derivative_matrix(&self) -> DMatrix<f64> {
        let (n, m, l) = self.dims();
        let wa = l * n;
        let wb = l * m;
        let w_dim = wa + wb + l;
        let mut d = DMatrix::zeros(n + m + l, w_dim + n + m);
        for i in 0..n {
            d[(i, w_dim + i)] = -1.0;
        }
        for j in 0..m {
            d[(n + j, w_dim + n + j)] = -1.0;
        }
        for i in 0..l {
            let row = n + m + i;
            for j in 0..n {
                d[(row, i * n + j)] = self.x[j]; // ∂/∂a_ij of (A x̄)_i
                d[(row, w_dim + j)] = self.a[(i, j)];
            }
            for j in 0..m {
                d[(row, wa + i * m + j)] = -self.y[j];
                d[(row, w_dim + n + j)] = -self.b[(i, j)];
            }
            d[(row, wa + wb + i)] = -1.0;
        }
        d
    }

    /// Full row rank of the derivative at [`RANK_TOL`] relative to the top
    /// singular value.
    pub fn derivative_is_surjective(&self) -> bool {
        let (n, m, l) = self.dims();
        numerical_rank(&self.derivative_matrix()) == n + m + l
    }
}

/// A base (or increment) in the NSFP parameter-times-unknown space:
/// `A ∈ R^{m×n}`, `b ∈ R^m`, `x ∈ R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct NsfpPoint {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub x: DVector<f64>,
}

impl NsfpPoint {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, x: DVector<f64>) -> Result<Self, GeError> {
        if a.nrows() != b.len() {
            return Err(GeError::DimensionMismatch {
                expected: a.nrows(),
                found: b.len(),
            });
        }
        if a.ncols() != x.len() {
            return Err(GeError::DimensionMismatch {
                expected: a.ncols(),
                found: x.len(),
            });
        }
        Ok(NsfpPoint { a, b, x })
    }

    /// (n, m).
    pub fn dims(&self) -> (usize, usize) {
        (self.a.ncols(), self.a.nrows())
    }

    pub fn dot(&self, other: &NsfpPoint) -> f64 {
        self.a.dot(&other.a) + self.b.dot(&other.b) + self.x.dot(&other.x)
    }

    /// `f(w, x) = (−x, −Ax − b)`.
    pub fn eval(&self) -> DVector<f64> {
        let second = -(&self.a * &self.x) - &self.b;
        stack2(&-&self.x, &second)
    }

    /// `(−δx, −Ā δx − δA x̄ − δb)`.
    pub fn derivative_apply(&self, delta: &NsfpPoint) -> DVector<f64> {
        let second = -(&self.a * &delta.x) - &delta.a * &self.x - &delta.b;
        stack2(&-&delta.x, &second)
    }

    /// Adjoint at `v = (u′, v′)`: `A′ = −v′x̄ᵀ`, `b′ = −v′`, x-block
    /// `−u′ + Āᵀ(−v′)`.
    pub fn adjoint_apply(&self, v: &DVector<f64>) -> Result<NsfpPoint, GeError> {
        let (n, m) = self.dims();
        if v.len() != n + m {
            return Err(GeError::DimensionMismatch {
                expected: n + m,
                found: v.len(),
            });
        }
        let up = v.rows(0, n).into_owned();
        let vp = v.rows(n, m).into_owned();
        Ok(NsfpPoint {
            a: -(&vp * self.x.transpose()),
            b: -&vp,
            x: -(self.a.transpose() * &vp) - up,
        })
    }

    pub fn derivative_matrix(&self) -> DMatrix<f64> {
        let (n, m) = self.dims();
        let wa = m * n;
        let w_dim = wa + m;
        let mut d = DMatrix::zeros(n + m, w_dim + n);
        for i in 0..n {
            d[(i, w_dim + i)] = -1.0;
        }
        for i in 0..m {
            let row = n + i;
            for j in 0..n {
                d[(row, i * n + j)] = -self.x[j];
                d[(row, w_dim + j)] = -self.a[(i, j)];
            }
            d[(row, wa + i)] = -1.0;
        }
        d
    }

    pub fn derivative_is_surjective(&self) -> bool {
        let (n, m) = self.dims();
        numerical_rank(&self.derivative_matrix()) == n + m
    }
}

/// Coderivative membership for the NSEP set-valued part: the value is
/// `{(0, 0)}` iff `−v′ ∈ N(x̄; C) × N(ȳ; Q) × R^l`, and empty otherwise.
///
/// `vbar = (x̄, ȳ, 0)` must lie in `C × Q × {0}`.
pub fn coderivative_g1_nonempty(
    vbar: &DVector<f64>,
    vprime: &DVector<f64>,
    c_set: &ConstraintSet,
    q_set: &ConstraintSet,
    tol: f64,
) -> Result<bool, GeError> {
    let n = c_set.dim();
    let m = q_set.dim();
    if vbar.len() < n + m || vbar.len() != vprime.len() {
        return Err(GeError::DimensionMismatch {
            expected: vbar.len(),
            found: vprime.len(),
        });
    }
    let l = vbar.len() - n - m;
    let xbar = vbar.rows(0, n).into_owned();
    let ybar = vbar.rows(n, m).into_owned();
    let zbar = vbar.rows(n + m, l);
    if zbar.amax() > tol || !c_set.contains(&xbar, tol) || !q_set.contains(&ybar, tol) {
        return Err(GeError::Set(SetError::PointNotInSet { residual: f64::NAN }));
    }
    let nc = c_set.normal_cone(&xbar)?;
    let nq = q_set.normal_cone(&ybar)?;
    let xp = vprime.rows(0, n).into_owned();
    let yp = vprime.rows(n, m).into_owned();
    // The z′ block is unconstrained (its factor cone is all of R^l).
    Ok(nc.member(&-xp, tol)? && nq.member(&-yp, tol)?)
}

/// Coderivative membership for the NSFP set-valued part: the value is
/// `{(0, 0)}` iff `u′ ∈ −N(ū; C)` and `v′ ∈ −N(v̄; Q)`.
pub fn coderivative_g2_nonempty(
    ubar: &DVector<f64>,
    vbar: &DVector<f64>,
    uprime: &DVector<f64>,
    vprime: &DVector<f64>,
    c_set: &ConstraintSet,
    q_set: &ConstraintSet,
    tol: f64,
) -> Result<bool, GeError> {
    if ubar.len() != uprime.len() {
        return Err(GeError::DimensionMismatch {
            expected: ubar.len(),
            found: uprime.len(),
        });
    }
    if vbar.len() != vprime.len() {
        return Err(GeError::DimensionMismatch {
            expected: vbar.len(),
            found: vprime.len(),
        });
    }
    if !c_set.contains(ubar, tol) || !q_set.contains(vbar, tol) {
        return Err(GeError::Set(SetError::PointNotInSet { residual: f64::NAN }));
    }
    let nc = c_set.normal_cone(ubar)?;
    let nq = q_set.normal_cone(vbar)?;
    Ok(nc.member(&-uprime, tol)? && nq.member(&-vprime, tol)?)
}

/// Rank with [`RANK_TOL`] relative to the largest singular value.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let svd = m.clone().svd(false, false);
    let top = svd.singular_values.max();
    if top == 0.0 {
        return 0;
    }
    svd.singular_values
        .iter()
        .filter(|&&s| s > RANK_TOL * top)
        .count()
}

fn stack2(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

fn stack3(a: &DVector<f64>, b: &DVector<f64>, c: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(
        a.len() + b.len() + c.len(),
        a.iter().chain(b.iter()).chain(c.iter()).copied(),
    )
}
