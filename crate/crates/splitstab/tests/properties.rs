//! Property tests for the cone-algebra and projection invariants.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use splitstab::cone::Cone;
use splitstab::sets::{ConstraintSet, Interval};

fn small_vec(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0_f64, dim)
}

/// Random cone from generators and lineality directions, plus a point
/// known to lie in it (a nonnegative combination).
fn cone_with_member(dim: usize) -> impl Strategy<Value = (Cone, DVector<f64>)> {
    let gens = prop::collection::vec(small_vec(dim), 0..3);
    let lins = prop::collection::vec(small_vec(dim), 0..2);
    let coefs = prop::collection::vec(0.0..2.0_f64, 0..5);
    (gens, lins, coefs).prop_map(move |(gens, lins, coefs)| {
        let gvecs: Vec<DVector<f64>> = gens.iter().map(|g| DVector::from_row_slice(g)).collect();
        let lvecs: Vec<DVector<f64>> = lins.iter().map(|l| DVector::from_row_slice(l)).collect();
        let cone = Cone::from_generators(dim, &gvecs, &lvecs);
        let mut z = DVector::zeros(dim);
        for (i, g) in gvecs.iter().enumerate() {
            let c = coefs.get(i).copied().unwrap_or(0.5);
            z += g * c;
        }
        for (i, l) in lvecs.iter().enumerate() {
            let c = coefs.get(gvecs.len() + i).copied().unwrap_or(-0.5) - 1.0;
            z += l * c;
        }
        (cone, z)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The origin belongs to every constructed cone.
    #[test]
    fn origin_is_always_a_member((cone, _z) in cone_with_member(3)) {
        prop_assert!(cone.member(&DVector::zeros(3), 1e-12).unwrap());
    }

    /// Membership is positively homogeneous.
    #[test]
    fn membership_is_positively_homogeneous((cone, z) in cone_with_member(3)) {
        prop_assume!(cone.member(&z, 1e-9).unwrap());
        for t in [0.5, 2.0, 10.0] {
            prop_assert!(cone.member(&(&z * t), 1e-7).unwrap(), "failed at t = {t}");
        }
    }

    /// Negation is an involution on membership.
    #[test]
    fn double_negation_preserves_membership((cone, z) in cone_with_member(3)) {
        prop_assume!(cone.member(&z, 1e-9).unwrap());
        prop_assert!(cone.negate().negate().member(&z, 1e-7).unwrap());
        prop_assert!(cone.negate().member(&(-&z), 1e-7).unwrap());
    }

    /// Projections are idempotent and land inside the set.
    #[test]
    fn projection_is_idempotent(
        x in small_vec(2),
        which in 0..4usize,
    ) {
        let set = match which {
            0 => ConstraintSet::orthant(2).unwrap(),
            1 => ConstraintSet::hyper_box(vec![
                Interval::new(-1.0, 1.0).unwrap(),
                Interval::new(0.0, f64::INFINITY).unwrap(),
            ]).unwrap(),
            2 => ConstraintSet::quadratic_sublevel(
                DMatrix::identity(2, 2),
                DVector::zeros(2),
                0.0,
                Interval::new(2.0, 5.0).unwrap(),
            ).unwrap(),
            _ => ConstraintSet::quadratic_sublevel(
                DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, -1.0]),
                DVector::from_row_slice(&[1.0, 0.0]),
                0.0,
                Interval::new(f64::NEG_INFINITY, 0.0).unwrap(),
            ).unwrap(),
        };
        let x = DVector::from_row_slice(&x);
        let p = set.project(&x).unwrap();
        prop_assert!(set.contains(&p, 1e-7));
        let pp = set.project(&p).unwrap();
        prop_assert!((&p - &pp).norm() <= 1e-10);
    }

    /// Preimage composition: membership of z in the preimage equals
    /// membership of Mᵀz in the source cone.
    #[test]
    fn preimage_matches_pointwise_definition(
        (cone, z) in cone_with_member(2),
        m_entries in small_vec(6),
    ) {
        let m = DMatrix::from_row_slice(3, 2, &m_entries);
        let pre = Cone::preimage_transpose(&m, &cone).unwrap();
        for probe in [DVector::from_row_slice(&[1.0, 0.0, -1.0]), DVector::from_row_slice(&[0.5, 2.0, 1.0])] {
            let direct = cone.member(&(m.transpose() * &probe), 1e-8).unwrap();
            let via_pre = pre.member(&probe, 1e-8).unwrap();
            prop_assert_eq!(direct, via_pre);
        }
        let _ = z;
    }
}
