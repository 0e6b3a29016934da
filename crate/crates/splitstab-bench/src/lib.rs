//! Shared fixtures for the criterion benchmarks.

use splitstab::certify::{NsepInstance, NsfpInstance};
use splitstab::nalgebra::{DMatrix, DVector};
use splitstab::sets::{ConstraintSet, Interval};

/// `{x₁ ≤ x₂²}` — the nonconvex parabola sublevel set.
pub fn parabola_sublevel() -> ConstraintSet {
    ConstraintSet::quadratic_sublevel(
        DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, -1.0]),
        DVector::from_row_slice(&[1.0, 0.0]),
        0.0,
        Interval::new(f64::NEG_INFINITY, 0.0).unwrap(),
    )
    .unwrap()
}

/// `{2 ≤ ‖x‖² ≤ 5}` — the nonconvex annulus.
pub fn annulus() -> ConstraintSet {
    ConstraintSet::quadratic_sublevel(
        DMatrix::identity(2, 2),
        DVector::from_row_slice(&[0.0, 0.0]),
        0.0,
        Interval::new(2.0, 5.0).unwrap(),
    )
    .unwrap()
}

/// Split-feasibility fixture at the cusp point (1, 1).
pub fn nsfp_cusp() -> NsfpInstance {
    NsfpInstance::new(
        DMatrix::from_row_slice(1, 2, &[1.0, -2.0]),
        DVector::from_row_slice(&[1.0]),
        parabola_sublevel(),
        ConstraintSet::orthant(1).unwrap(),
        DVector::from_row_slice(&[1.0, 1.0]),
    )
    .unwrap()
}

/// Split-equality fixture on the annulus at ((1,1), 2).
pub fn nsep_annulus() -> NsepInstance {
    NsepInstance::new(
        DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
        DMatrix::from_row_slice(1, 1, &[0.5]),
        DVector::from_row_slice(&[1.0]),
        annulus(),
        ConstraintSet::orthant(1).unwrap(),
        DVector::from_row_slice(&[1.0, 1.0]),
        DVector::from_row_slice(&[2.0]),
    )
    .unwrap()
}
