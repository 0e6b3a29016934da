//! Polyhedral cones in implicit-generated form.
//!
//! A cone is stored as `{z : E z = G λ + L μ, λ ≥ 0}` with free `μ`. This
//! form is closed under every operation the regularity conditions need —
//! negation, transpose-preimage, product, and intersection — by pure matrix
//! composition, so no generator enumeration or polyhedral projection ever
//! happens. Membership and triviality are decided by the LP in [`crate::lp`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

use crate::lp::{self, LpError, FEASIBILITY_TOL};

/// Residual bound a triviality witness must satisfy on re-verification.
pub const WITNESS_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum ConeError {
    #[error("ambient dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("LP failure while deciding a cone question: {0}")]
    Lp(#[from] LpError),
    #[error("triviality witness failed re-verification (residual {0:.3e})")]
    WitnessCheckFailed(f64),
}

/// A nonempty closed polyhedral cone containing the origin.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cone {
    ambient_dim: usize,
    /// Constraint-side matrix (rows × ambient_dim); identity for base cones.
    e: DMatrix<f64>,
    /// Generator matrix (rows × k), multiplied by λ ≥ 0.
    g: DMatrix<f64>,
    /// Lineality matrix (rows × m), multiplied by free μ.
    l: DMatrix<f64>,
}

/// Triviality decision with a verified witness in the nontrivial case.
#[derive(Debug, Clone)]
pub enum Triviality {
    Trivial,
    /// `witness` lies in the cone, is nonzero, and has `‖·‖∞ = 1`.
    Nontrivial {
        witness: DVector<f64>,
    },
}

impl Triviality {
    pub fn is_trivial(&self) -> bool {
        matches!(self, Triviality::Trivial)
    }

    pub fn witness(&self) -> Option<&DVector<f64>> {
        match self {
            Triviality::Trivial => None,
            Triviality::Nontrivial { witness } => Some(witness),
        }
    }
}

/// Human-readable cone shape for reports; never used in verdict logic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConeClass {
    Zero,
    Ray {
        generator: DVector<f64>,
    },
    Line {
        direction: DVector<f64>,
    },
    /// Product of per-coordinate interval cones.
    HalflineProduct {
        factors: Vec<AxisCone>,
    },
    Full,
    General {
        sample_direction: DVector<f64>,
    },
}

/// One-dimensional factor of a coordinate-product cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisCone {
    Zero,
    NonNeg,
    NonPos,
    Line,
}

impl fmt::Display for AxisCone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxisCone::Zero => write!(f, "{{0}}"),
            AxisCone::NonNeg => write!(f, "R+"),
            AxisCone::NonPos => write!(f, "R-"),
            AxisCone::Line => write!(f, "R"),
        }
    }
}

impl fmt::Display for ConeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fmt_vec = |v: &DVector<f64>| {
            let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
            format!("({})", parts.join(", "))
        };
        match self {
            ConeClass::Zero => write!(f, "zero cone {{0}}"),
            ConeClass::Ray { generator } => write!(f, "ray, generator {}", fmt_vec(generator)),
            ConeClass::Line { direction } => write!(f, "line, direction {}", fmt_vec(direction)),
            ConeClass::HalflineProduct { factors } => {
                let parts: Vec<String> = factors.iter().map(|a| a.to_string()).collect();
                write!(f, "product {}", parts.join(" x "))
            }
            ConeClass::Full => write!(f, "full space"),
            ConeClass::General { sample_direction } => {
                write!(f, "general cone, contains {}", fmt_vec(sample_direction))
            }
        }
    }
}

impl Cone {
    /// The zero cone `{0}` in dimension `dim`.
    pub fn zero(dim: usize) -> Self {
        Cone {
            ambient_dim: dim,
            e: DMatrix::identity(dim, dim),
            g: DMatrix::zeros(dim, 0),
            l: DMatrix::zeros(dim, 0),
        }
    }

    /// The full space in dimension `dim`.
    pub fn full(dim: usize) -> Self {
        Cone {
            ambient_dim: dim,
            e: DMatrix::identity(dim, dim),
            g: DMatrix::zeros(dim, 0),
            l: DMatrix::identity(dim, dim),
        }
    }

    /// The ray `{t·v : t ≥ 0}`.
    pub fn ray(v: DVector<f64>) -> Self {
        let dim = v.len();
        Cone {
            ambient_dim: dim,
            e: DMatrix::identity(dim, dim),
            g: DMatrix::from_columns(&[v]),
            l: DMatrix::zeros(dim, 0),
        }
    }

    /// The line `span{v}`.
    pub fn line(v: DVector<f64>) -> Self {
        let dim = v.len();
        Cone {
            ambient_dim: dim,
            e: DMatrix::identity(dim, dim),
            g: DMatrix::zeros(dim, 0),
            l: DMatrix::from_columns(&[v]),
        }
    }

    /// Cone generated by `generators` (λ ≥ 0 combinations) plus the span of
    /// `lineality`, in ambient dimension `dim`.
    pub fn from_generators(
        dim: usize,
        generators: &[DVector<f64>],
        lineality: &[DVector<f64>],
    ) -> Self {
        let g = if generators.is_empty() {
            DMatrix::zeros(dim, 0)
        } else {
            DMatrix::from_columns(generators)
        };
        let l = if lineality.is_empty() {
            DMatrix::zeros(dim, 0)
        } else {
            DMatrix::from_columns(lineality)
        };
        assert!(g.nrows() == dim && l.nrows() == dim, "generator dimension");
        Cone {
            ambient_dim: dim,
            e: DMatrix::identity(dim, dim),
            g,
            l,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn e_matrix(&self) -> &DMatrix<f64> {
        &self.e
    }

    pub fn g_matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn l_matrix(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// `{−z : z ∈ K}`: negate the generators, keep the lineality.
    pub fn negate(&self) -> Self {
        Cone {
            ambient_dim: self.ambient_dim,
            e: self.e.clone(),
            g: -&self.g,
            l: self.l.clone(),
        }
    }

    /// `{z : Mᵀ z ∈ K}` for an `l×n` matrix `M` and `K ⊂ Rⁿ`; the result
    /// lives in `R^l`. Pure composition of the constraint side.
    pub fn preimage_transpose(m: &DMatrix<f64>, k: &Cone) -> Result<Self, ConeError> {
        if m.ncols() != k.ambient_dim {
            return Err(ConeError::DimensionMismatch {
                expected: k.ambient_dim,
                found: m.ncols(),
            });
        }
        Ok(Cone {
            ambient_dim: m.nrows(),
            e: &k.e * m.transpose(),
            g: k.g.clone(),
            l: k.l.clone(),
        })
    }

    /// `K₁ ∩ K₂` as a stacked system.
    pub fn intersect(&self, other: &Cone) -> Result<Self, ConeError> {
        if self.ambient_dim != other.ambient_dim {
            return Err(ConeError::DimensionMismatch {
                expected: self.ambient_dim,
                found: other.ambient_dim,
            });
        }
        let rows = self.e.nrows() + other.e.nrows();
        let mut e = DMatrix::zeros(rows, self.ambient_dim);
        e.view_mut((0, 0), (self.e.nrows(), self.ambient_dim))
            .copy_from(&self.e);
        e.view_mut((self.e.nrows(), 0), (other.e.nrows(), self.ambient_dim))
            .copy_from(&other.e);
        Ok(Cone {
            ambient_dim: self.ambient_dim,
            e,
            g: block_diag(&self.g, &other.g, self.e.nrows(), other.e.nrows()),
            l: block_diag(&self.l, &other.l, self.e.nrows(), other.e.nrows()),
        })
    }

    /// `K₁ × K₂` in the concatenated ambient space.
    pub fn product(&self, other: &Cone) -> Self {
        let dim = self.ambient_dim + other.ambient_dim;
        let mut e = DMatrix::zeros(self.e.nrows() + other.e.nrows(), dim);
        e.view_mut((0, 0), (self.e.nrows(), self.ambient_dim))
            .copy_from(&self.e);
        e.view_mut(
            (self.e.nrows(), self.ambient_dim),
            (other.e.nrows(), other.ambient_dim),
        )
        .copy_from(&other.e);
        Cone {
            ambient_dim: dim,
            e,
            g: block_diag(&self.g, &other.g, self.e.nrows(), other.e.nrows()),
            l: block_diag(&self.l, &other.l, self.e.nrows(), other.e.nrows()),
        }
    }

    /// Product of several cones, left to right.
    pub fn product_of(cones: &[Cone]) -> Cone {
        assert!(!cones.is_empty(), "empty cone product");
        let mut acc = cones[0].clone();
        for c in &cones[1..] {
            acc = acc.product(c);
        }
        acc
    }

    /// Exact structural check for the canonical zero cone (identity `E`,
    /// no generators, no lineality) — the common interior-point case.
    fn is_canonical_zero(&self) -> bool {
        self.g.ncols() == 0 && self.l.ncols() == 0 && is_identity(&self.e)
    }

    /// True iff `∃ λ ≥ 0, μ` with `‖E z − G λ − L μ‖₁ ≤ tol`.
    pub fn member(&self, z: &DVector<f64>, tol: f64) -> Result<bool, ConeError> {
        if z.len() != self.ambient_dim {
            return Err(ConeError::DimensionMismatch {
                expected: self.ambient_dim,
                found: z.len(),
            });
        }
        let target = &self.e * z;
        let k = self.g.ncols();
        let m = self.l.ncols();
        if k + m == 0 {
            return Ok(target.iter().map(|v| v.abs()).sum::<f64>() <= tol);
        }
        let mut a = DMatrix::zeros(self.e.nrows(), k + m);
        a.view_mut((0, 0), (self.e.nrows(), k)).copy_from(&self.g);
        a.view_mut((0, k), (self.e.nrows(), m)).copy_from(&self.l);
        let mut nonneg = vec![true; k];
        nonneg.extend(std::iter::repeat_n(false, m));
        let fit = lp::min_l1_residual(&a, &target, &nonneg)?;
        Ok(fit.residual <= tol)
    }

    /// Decides `K = {0}`. A nontrivial verdict carries a witness with
    /// `‖z‖∞ = 1` whose membership is re-verified at [`WITNESS_TOL`].
    ///
    /// One coordinate-pinned feasibility LP runs per coordinate and sign;
    /// any nonzero cone element rescales so that its largest-magnitude
    /// coordinate is ±1, so the sweep is exhaustive.
    pub fn is_trivial(&self) -> Result<Triviality, ConeError> {
        if self.is_canonical_zero() {
            return Ok(Triviality::Trivial);
        }
        let d = self.ambient_dim;
        let rows = self.e.nrows();
        let k = self.g.ncols();
        let m = self.l.ncols();
        // Variables (z, λ, μ); system E z − G λ − L μ = 0 plus z_i = s.
        let mut a = DMatrix::zeros(rows + 1, d + k + m);
        a.view_mut((0, 0), (rows, d)).copy_from(&self.e);
        a.view_mut((0, d), (rows, k)).copy_from(&(-&self.g));
        a.view_mut((0, d + k), (rows, m)).copy_from(&(-&self.l));
        let mut nonneg = vec![false; d];
        nonneg.extend(std::iter::repeat_n(true, k));
        nonneg.extend(std::iter::repeat_n(false, m));
        let mut b = DVector::zeros(rows + 1);
        for i in 0..d {
            a[(rows, i)] = 1.0;
            for &s in &[1.0_f64, -1.0] {
                b[rows] = s;
                let fit = lp::min_l1_residual(&a, &b, &nonneg)?;
                if fit.residual <= FEASIBILITY_TOL {
                    let mut z = DVector::from_iterator(d, fit.x.iter().take(d).copied());
                    let norm = z.amax();
                    // z_i = ±1 is pinned, so the max-norm is at least 1.
                    z /= norm;
                    if !self.member(&z, WITNESS_TOL)? {
                        return Err(ConeError::WitnessCheckFailed(self.residual_of(&z)?));
                    }
                    return Ok(Triviality::Nontrivial { witness: z });
                }
            }
            a[(rows, i)] = 0.0;
        }
        Ok(Triviality::Trivial)
    }

    /// Minimal L1 residual of the membership system for `z`.
    fn residual_of(&self, z: &DVector<f64>) -> Result<f64, ConeError> {
        let target = &self.e * z;
        let k = self.g.ncols();
        let m = self.l.ncols();
        if k + m == 0 {
            return Ok(target.iter().map(|v| v.abs()).sum());
        }
        let mut a = DMatrix::zeros(self.e.nrows(), k + m);
        a.view_mut((0, 0), (self.e.nrows(), k)).copy_from(&self.g);
        a.view_mut((0, k), (self.e.nrows(), m)).copy_from(&self.l);
        let mut nonneg = vec![true; k];
        nonneg.extend(std::iter::repeat_n(false, m));
        Ok(lp::min_l1_residual(&a, &target, &nonneg)?.residual)
    }

    /// Best-effort shape label for reports. Structural fast paths cover the
    /// cones the catalog constructs directly; composed cones fall back to
    /// membership probing.
    pub fn classify(&self) -> Result<ConeClass, ConeError> {
        match self.is_trivial()? {
            Triviality::Trivial => Ok(ConeClass::Zero),
            Triviality::Nontrivial { witness } => {
                let d = self.ambient_dim;
                if is_identity(&self.e) {
                    if let Some(class) = self.classify_structural() {
                        return Ok(class);
                    }
                }
                // Full space: convexity makes ±eᵢ membership sufficient.
                let mut all_axes = true;
                let mut factors = Vec::with_capacity(d);
                for i in 0..d {
                    let mut ei = DVector::zeros(d);
                    ei[i] = 1.0;
                    let plus = self.member(&ei, FEASIBILITY_TOL)?;
                    ei[i] = -1.0;
                    let minus = self.member(&ei, FEASIBILITY_TOL)?;
                    factors.push(match (plus, minus) {
                        (true, true) => AxisCone::Line,
                        (true, false) => AxisCone::NonNeg,
                        (false, true) => AxisCone::NonPos,
                        (false, false) => AxisCone::Zero,
                    });
                    all_axes &= plus && minus;
                }
                if all_axes {
                    return Ok(ConeClass::Full);
                }
                // Single direction: ray or line through the witness.
                let unit = &witness / witness.norm();
                let pinned = self.pinned_directions()?;
                let spans_one_line = pinned
                    .iter()
                    .all(|w| (w.normalize().dot(&unit)).abs() > 1.0 - 1e-9);
                if spans_one_line {
                    if self.member(&(-&witness), FEASIBILITY_TOL)? {
                        return Ok(ConeClass::Line { direction: witness });
                    }
                    return Ok(ConeClass::Ray { generator: witness });
                }
                // Coordinate product: every probe direction must respect the
                // per-axis factors found above.
                let consistent = pinned.iter().all(|w| {
                    w.iter().enumerate().all(|(i, &wi)| match factors[i] {
                        AxisCone::Line => true,
                        AxisCone::NonNeg => wi > -1e-9,
                        AxisCone::NonPos => wi < 1e-9,
                        AxisCone::Zero => wi.abs() < 1e-9,
                    })
                });
                if consistent {
                    return Ok(ConeClass::HalflineProduct { factors });
                }
                Ok(ConeClass::General {
                    sample_direction: witness,
                })
            }
        }
    }

    /// Structural classification when `E` is the identity (base cones).
    fn classify_structural(&self) -> Option<ConeClass> {
        let k = self.g.ncols();
        let m = self.l.ncols();
        if k == 1 && m == 0 {
            let gen = self.g.column(0).into_owned();
            if gen.amax() > 0.0 {
                return Some(ConeClass::Ray { generator: gen });
            }
        }
        if k == 0 && m == 1 {
            let dir = self.l.column(0).into_owned();
            if dir.amax() > 0.0 {
                return Some(ConeClass::Line { direction: dir });
            }
        }
        // All columns ± standard basis vectors: per-coordinate product.
        let mut factors = vec![AxisCone::Zero; self.ambient_dim];
        let mut ok = k + m > 0;
        let mut note = |col: nalgebra::DVectorView<f64>, lineal: bool| -> bool {
            let mut idx = None;
            for (i, &v) in col.iter().enumerate() {
                if v != 0.0 {
                    if idx.is_some() || (v != 1.0 && v != -1.0) {
                        return false;
                    }
                    idx = Some((i, v > 0.0));
                }
            }
            let Some((i, positive)) = idx else {
                return true; // zero column contributes nothing
            };
            factors[i] = match (factors[i], lineal, positive) {
                (_, true, _) => AxisCone::Line,
                (AxisCone::Line, _, _) => AxisCone::Line,
                (AxisCone::Zero, false, true) => AxisCone::NonNeg,
                (AxisCone::Zero, false, false) => AxisCone::NonPos,
                (AxisCone::NonNeg, false, true) => AxisCone::NonNeg,
                (AxisCone::NonPos, false, false) => AxisCone::NonPos,
                (AxisCone::NonNeg, false, false) | (AxisCone::NonPos, false, true) => {
                    AxisCone::Line
                }
            };
            true
        };
        for j in 0..k {
            ok &= note(self.g.column(j), false);
        }
        for j in 0..m {
            ok &= note(self.l.column(j), true);
        }
        if !ok {
            return None;
        }
        if factors.iter().all(|f| *f == AxisCone::Line) {
            return Some(ConeClass::Full);
        }
        Some(ConeClass::HalflineProduct { factors })
    }

    /// One feasible direction per coordinate-sign probe; used to decide
    /// whether the cone collapses onto a single line.
    fn pinned_directions(&self) -> Result<Vec<DVector<f64>>, ConeError> {
        let d = self.ambient_dim;
        let rows = self.e.nrows();
        let k = self.g.ncols();
        let m = self.l.ncols();
        let mut a = DMatrix::zeros(rows + 1, d + k + m);
        a.view_mut((0, 0), (rows, d)).copy_from(&self.e);
        a.view_mut((0, d), (rows, k)).copy_from(&(-&self.g));
        a.view_mut((0, d + k), (rows, m)).copy_from(&(-&self.l));
        let mut nonneg = vec![false; d];
        nonneg.extend(std::iter::repeat_n(true, k));
        nonneg.extend(std::iter::repeat_n(false, m));
        let mut b = DVector::zeros(rows + 1);
        let mut out = Vec::new();
        for i in 0..d {
            a[(rows, i)] = 1.0;
            for &s in &[1.0_f64, -1.0] {
                b[rows] = s;
                let fit = lp::min_l1_residual(&a, &b, &nonneg)?;
                if fit.residual <= FEASIBILITY_TOL {
                    let z = DVector::from_iterator(d, fit.x.iter().take(d).copied());
                    out.push(z / fit.x.iter().take(d).fold(0.0f64, |m, v| m.max(v.abs())));
                }
            }
            a[(rows, i)] = 0.0;
        }
        Ok(out)
    }
}

fn is_identity(m: &DMatrix<f64>) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let want = if i == j { 1.0 } else { 0.0 };
            if m[(i, j)] != want {
                return false;
            }
        }
    }
    true
}

/// Stacks two matrices block-diagonally with the stated row counts (columns
/// may be zero on either side).
fn block_diag(
    top: &DMatrix<f64>,
    bottom: &DMatrix<f64>,
    top_rows: usize,
    bottom_rows: usize,
) -> DMatrix<f64> {
    let cols = top.ncols() + bottom.ncols();
    let mut out = DMatrix::zeros(top_rows + bottom_rows, cols);
    out.view_mut((0, 0), (top_rows, top.ncols())).copy_from(top);
    out.view_mut((top_rows, top.ncols()), (bottom_rows, bottom.ncols()))
        .copy_from(bottom);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(data: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(data)
    }

    fn m(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, data)
    }

    #[test]
    fn zero_cone_is_trivial_and_contains_origin() {
        let k = Cone::zero(3);
        assert!(k.is_trivial().unwrap().is_trivial());
        assert!(k.member(&v(&[0.0, 0.0, 0.0]), 1e-12).unwrap());
        assert!(!k.member(&v(&[0.0, 1e-3, 0.0]), 1e-9).unwrap());
    }

    #[test]
    fn negate_flips_a_ray() {
        let k = Cone::ray(v(&[1.0, -2.0]));
        let n = k.negate();
        assert!(n.member(&v(&[-1.0, 2.0]), 1e-9).unwrap());
        assert!(!n.member(&v(&[1.0, -2.0]), 1e-9).unwrap());
        // ZERO is symmetric under negation.
        assert!(Cone::zero(2).negate().is_trivial().unwrap().is_trivial());
        // -R+ negates to R+.
        let neg_half = Cone::ray(v(&[-1.0]));
        let pos_half = neg_half.negate();
        assert!(pos_half.member(&v(&[5.0]), 1e-9).unwrap());
        assert!(!pos_half.member(&v(&[-5.0]), 1e-9).unwrap());
    }

    #[test]
    fn preimage_of_negated_normal_ray_is_nonpositive_halfline() {
        // M = (1 -2) as a 1x2 matrix; K = ray{(-1, 2)}.
        let mat = m(1, 2, &[1.0, -2.0]);
        let k = Cone::ray(v(&[-1.0, 2.0]));
        let pre = Cone::preimage_transpose(&mat, &k).unwrap();
        assert_eq!(pre.ambient_dim(), 1);
        assert!(pre.member(&v(&[-3.0]), 1e-9).unwrap());
        assert!(!pre.member(&v(&[1.0]), 1e-9).unwrap());
        match pre.is_trivial().unwrap() {
            Triviality::Nontrivial { witness } => {
                assert!((witness[0] + 1.0).abs() < 1e-9);
            }
            Triviality::Trivial => panic!("halfline reported trivial"),
        }
    }

    #[test]
    fn preimage_of_zero_is_transpose_kernel() {
        use crate::ge::numerical_rank;
        use rand::{Rng, SeedableRng};
        let mat = m(1, 2, &[1.0, -2.0]);
        let pre = Cone::preimage_transpose(&mat, &Cone::zero(2)).unwrap();
        // ker(Mᵀ) is trivial because Mᵀ has full column rank.
        assert!(pre.is_trivial().unwrap().is_trivial());

        // Rank cross-check on random matrices: the preimage of {0} is
        // trivial exactly when Mᵀ has trivial kernel, and any witness must
        // be annihilated by Mᵀ.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for trial in 0..50 {
            let rows = rng.gen_range(1..=3);
            let cols = rng.gen_range(1..=3);
            let mut mat = DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-2.0..2.0_f64));
            if trial % 3 == 0 && rows > 1 {
                // Force a rank drop: duplicate the first row.
                let first = mat.row(0).into_owned();
                mat.set_row(rows - 1, &first);
            }
            let pre = Cone::preimage_transpose(&mat, &Cone::zero(cols)).unwrap();
            let full_rank = numerical_rank(&mat.transpose()) == rows;
            match pre.is_trivial().unwrap() {
                Triviality::Trivial => assert!(full_rank, "trivial despite rank-deficient Mᵀ"),
                Triviality::Nontrivial { witness } => {
                    assert!(!full_rank, "witness found despite full-rank Mᵀ");
                    assert!((mat.transpose() * &witness).amax() <= 1e-8);
                }
            }
        }
    }

    #[test]
    fn preimage_under_identity_preserves_membership() {
        let k = Cone::ray(v(&[1.0, 1.0]));
        let id = DMatrix::identity(2, 2);
        let pre = Cone::preimage_transpose(&id, &k).unwrap();
        assert!(pre.member(&v(&[2.0, 2.0]), 1e-9).unwrap());
        assert!(!pre.member(&v(&[1.0, 0.0]), 1e-9).unwrap());
    }

    #[test]
    fn orthogonal_rays_intersect_trivially() {
        let k1 = Cone::ray(v(&[1.0, 0.0]));
        let k2 = Cone::ray(v(&[0.0, 1.0]));
        let k = k1.intersect(&k2).unwrap();
        assert!(k.is_trivial().unwrap().is_trivial());
    }

    #[test]
    fn intersection_with_full_space_is_identity() {
        let k = Cone::ray(v(&[1.0, -2.0]));
        let cap = k.intersect(&Cone::full(2)).unwrap();
        assert!(cap.member(&v(&[2.0, -4.0]), 1e-9).unwrap());
        assert!(!cap.member(&v(&[1.0, 1.0]), 1e-9).unwrap());
        assert!(!cap.is_trivial().unwrap().is_trivial());
    }

    #[test]
    fn same_halfline_intersects_to_itself() {
        let k = Cone::ray(v(&[-1.0]));
        let cap = k.intersect(&Cone::ray(v(&[-1.0]))).unwrap();
        assert!(cap.member(&v(&[-2.0]), 1e-9).unwrap());
        assert!(!cap.member(&v(&[2.0]), 1e-9).unwrap());
    }

    #[test]
    fn ray_membership_is_positive_scaling_only() {
        let k = Cone::ray(v(&[1.0, -2.0]));
        assert!(k.member(&v(&[2.0, -4.0]), 1e-9).unwrap());
        assert!(!k.member(&v(&[1.0, 1.0]), 1e-9).unwrap());
        assert!(k.member(&v(&[0.0, 0.0]), 1e-12).unwrap());
    }

    #[test]
    fn nonpositive_halfline_witness_is_minus_one() {
        let k = Cone::ray(v(&[-1.0]));
        match k.is_trivial().unwrap() {
            Triviality::Nontrivial { witness } => assert_eq!(witness[0], -1.0),
            Triviality::Trivial => panic!("-R+ reported trivial"),
        }
    }

    #[test]
    fn classify_catalog_shapes() {
        assert_eq!(Cone::zero(2).classify().unwrap(), ConeClass::Zero);
        assert_eq!(Cone::full(3).classify().unwrap(), ConeClass::Full);
        match Cone::ray(v(&[1.0, -2.0])).classify().unwrap() {
            ConeClass::Ray { generator } => {
                assert_eq!(generator, v(&[1.0, -2.0]));
            }
            other => panic!("expected ray, got {other:?}"),
        }
        match Cone::line(v(&[0.0, 3.0])).classify().unwrap() {
            ConeClass::Line { .. } => {}
            other => panic!("expected line, got {other:?}"),
        }
        let prod = Cone::ray(v(&[-1.0])).product(&Cone::ray(v(&[1.0])));
        match prod.classify().unwrap() {
            ConeClass::HalflineProduct { factors } => {
                assert_eq!(factors, vec![AxisCone::NonPos, AxisCone::NonNeg]);
            }
            other => panic!("expected product, got {other:?}"),
        }
        // A single-generator product collapses to the sharper ray label.
        let thin = Cone::ray(v(&[-1.0])).product(&Cone::zero(1));
        match thin.classify().unwrap() {
            ConeClass::Ray { generator } => assert_eq!(generator, v(&[-1.0, 0.0])),
            other => panic!("expected ray, got {other:?}"),
        }
    }

    #[test]
    fn classify_composed_halfline() {
        // Preimage gives E ≠ identity; classification must still see a ray.
        let mat = m(1, 2, &[1.0, -2.0]);
        let pre = Cone::preimage_transpose(&mat, &Cone::ray(v(&[-1.0, 2.0]))).unwrap();
        match pre.classify().unwrap() {
            ConeClass::Ray { generator } => assert!(generator[0] < 0.0),
            other => panic!("expected ray, got {other:?}"),
        }
    }

    #[test]
    fn product_keeps_block_membership() {
        let k = Cone::ray(v(&[1.0, -2.0])).product(&Cone::ray(v(&[-1.0])));
        assert!(k.member(&v(&[2.0, -4.0, -7.0]), 1e-9).unwrap());
        assert!(!k.member(&v(&[2.0, -4.0, 7.0]), 1e-9).unwrap());
        assert!(!k.member(&v(&[2.0, 4.0, -7.0]), 1e-9).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let k = Cone::ray(v(&[1.0, 0.0]));
        assert!(matches!(
            k.member(&v(&[1.0]), 1e-9),
            Err(ConeError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            k.intersect(&Cone::zero(3)),
            Err(ConeError::DimensionMismatch { .. })
        ));
    }
}
