//! Acceptance suite: one test per criterion, each printing a PASS line.
//!
//! Run with `cargo test -p splitstab --test acceptance -- --nocapture`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splitstab::certify::{
    certify_nsep, certify_nsfp, NsepInstance, NsfpInstance, ProblemInstance, Verdict,
};
use splitstab::cone::{Cone, Triviality};
use splitstab::ge::{
    coderivative_g1_nonempty, coderivative_g2_nonempty, numerical_rank, NsepPoint, NsfpPoint,
};
use splitstab::probe::estimate_modulus;
use splitstab::sets::{ConstraintSet, Interval};
use std::time::Instant;

fn v(data: &[f64]) -> DVector<f64> {
    DVector::from_row_slice(data)
}

fn m(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, data)
}

/// `{x₁ ≤ x₂²}`.
fn parabola_sublevel() -> ConstraintSet {
    ConstraintSet::quadratic_sublevel(
        m(2, 2, &[0.0, 0.0, 0.0, -1.0]),
        v(&[1.0, 0.0]),
        0.0,
        Interval::new(f64::NEG_INFINITY, 0.0).unwrap(),
    )
    .unwrap()
}

/// `{2 ≤ ‖x‖² ≤ 5}`.
fn annulus() -> ConstraintSet {
    ConstraintSet::quadratic_sublevel(
        DMatrix::identity(2, 2),
        v(&[0.0, 0.0]),
        0.0,
        Interval::new(2.0, 5.0).unwrap(),
    )
    .unwrap()
}

fn nsfp_fixture(x: &[f64]) -> NsfpInstance {
    NsfpInstance::new(
        m(1, 2, &[1.0, -2.0]),
        v(&[1.0]),
        parabola_sublevel(),
        ConstraintSet::orthant(1).unwrap(),
        v(x),
    )
    .unwrap()
}

fn nsep_fixture(x: &[f64], y: &[f64]) -> NsepInstance {
    NsepInstance::new(
        m(1, 2, &[1.0, 1.0]),
        m(1, 1, &[0.5]),
        v(&[1.0]),
        annulus(),
        ConstraintSet::orthant(1).unwrap(),
        v(x),
        v(y),
    )
    .unwrap()
}

#[test]
fn acceptance_1_nsfp_verdict_suite() {
    let start = Instant::now();
    let cases: [(&[f64], Verdict); 3] = [
        (&[1.0, 1.0], Verdict::NotLipschitzLike),
        (&[-1.0, 0.0], Verdict::LipschitzLike),
        (&[4.0, 2.0], Verdict::LipschitzLike),
    ];
    for (x, want) in cases {
        let got = certify_nsfp(&nsfp_fixture(x)).unwrap().verdict;
        assert_eq!(got, want, "verdict mismatch at x = {x:?}");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("acceptance 1 (split-feasibility verdict suite, {elapsed:?}): PASS");
}

#[test]
fn acceptance_2_nsep_verdict_suite() {
    let start = Instant::now();
    let s3 = 3.0_f64.sqrt();
    let verdict = certify_nsep(&nsep_fixture(&[1.0, 1.0], &[2.0]))
        .unwrap()
        .verdict;
    assert_eq!(verdict, Verdict::LipschitzLike);
    let verdict = certify_nsep(&nsep_fixture(&[(1.0 - s3) / 2.0, (1.0 + s3) / 2.0], &[0.0]))
        .unwrap()
        .verdict;
    assert_eq!(verdict, Verdict::LipschitzLike);
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("acceptance 2 (split-equality verdict suite, {elapsed:?}): PASS");
}

#[test]
fn acceptance_3_normal_cone_exactness() {
    // Boundary of the parabola set at (1,1): the ray through (1, −2),
    // generator matching to 1e−12 after normalization.
    let cone = parabola_sublevel().normal_cone(&v(&[1.0, 1.0])).unwrap();
    assert_eq!(cone.g_matrix().ncols(), 1);
    let g = cone.g_matrix().column(0).into_owned();
    let unit = &g / g.norm();
    let want = v(&[1.0, -2.0]) / 5.0_f64.sqrt();
    assert!((unit - want).amax() <= 1e-12);
    assert_eq!(cone.l_matrix().ncols(), 0);

    // Interior point: the zero cone.
    let cone = parabola_sublevel().normal_cone(&v(&[-1.0, 0.0])).unwrap();
    assert!(cone.is_trivial().unwrap().is_trivial());

    // Orthant at the origin: the nonpositive halfline.
    let cone = ConstraintSet::orthant(1)
        .unwrap()
        .normal_cone(&v(&[0.0]))
        .unwrap();
    assert!(cone.member(&v(&[-1.0]), 1e-12).unwrap());
    assert!(!cone.member(&v(&[1.0]), 1e-9).unwrap());
    match cone.is_trivial().unwrap() {
        Triviality::Nontrivial { witness } => assert_eq!(witness[0], -1.0),
        Triviality::Trivial => panic!("-R+ reported trivial"),
    }
    println!("acceptance 3 (normal-cone exactness): PASS");
}

/// Symbolic mirror of a cone construction; its membership test is
/// independent of the LP path (exact recursion with angular leaf tests).
enum Shadow {
    Zero,
    Full,
    Ray(DVector<f64>),
    Line(DVector<f64>),
    Product(Vec<Shadow>, Vec<usize>),
    Negate(Box<Shadow>),
    Preimage(DMatrix<f64>, Box<Shadow>),
    Intersect(Box<Shadow>, Box<Shadow>),
}

impl Shadow {
    fn contains(&self, z: &DVector<f64>, angtol: f64) -> bool {
        let norm = z.norm();
        if norm <= angtol {
            return true; // every cone contains the origin
        }
        match self {
            Shadow::Zero => false,
            Shadow::Full => true,
            Shadow::Ray(g) => {
                let cos = z.dot(g) / (norm * g.norm());
                cos >= 1.0 - angtol * angtol / 2.0
            }
            Shadow::Line(g) => {
                let cos = (z.dot(g) / (norm * g.norm())).abs();
                cos >= 1.0 - angtol * angtol / 2.0
            }
            Shadow::Product(factors, dims) => {
                let mut offset = 0;
                factors.iter().zip(dims).all(|(f, &d)| {
                    let block = z.rows(offset, d).into_owned();
                    offset += d;
                    f.contains(&block, angtol)
                })
            }
            Shadow::Negate(inner) => inner.contains(&-z, angtol),
            Shadow::Preimage(mat, inner) => inner.contains(&(mat.transpose() * z), angtol),
            Shadow::Intersect(a, b) => a.contains(z, angtol) && b.contains(z, angtol),
        }
    }
}

/// Builds matching (Cone, Shadow) pairs from random constructor trees.
fn random_cone(rng: &mut ChaCha8Rng, dim: usize, depth: usize) -> (Cone, Shadow) {
    let leaf = depth == 0 || rng.gen_bool(0.4);
    if leaf {
        match rng.gen_range(0..5) {
            0 => (Cone::zero(dim), Shadow::Zero),
            1 => (Cone::full(dim), Shadow::Full),
            2 => {
                let g = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0_f64));
                if g.norm() < 1e-3 {
                    return (Cone::zero(dim), Shadow::Zero);
                }
                (Cone::ray(g.clone()), Shadow::Ray(g))
            }
            3 => {
                let g = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0_f64));
                if g.norm() < 1e-3 {
                    return (Cone::zero(dim), Shadow::Zero);
                }
                (Cone::line(g.clone()), Shadow::Line(g))
            }
            _ => {
                if dim == 1 {
                    return (Cone::ray(v(&[-1.0])), Shadow::Ray(v(&[-1.0])));
                }
                let split = rng.gen_range(1..dim);
                let (c1, s1) = random_cone(rng, split, 0);
                let (c2, s2) = random_cone(rng, dim - split, 0);
                (
                    c1.product(&c2),
                    Shadow::Product(vec![s1, s2], vec![split, dim - split]),
                )
            }
        }
    } else {
        match rng.gen_range(0..3) {
            0 => {
                let (c, s) = random_cone(rng, dim, depth - 1);
                (c.negate(), Shadow::Negate(Box::new(s)))
            }
            1 => {
                let inner_dim = rng.gen_range(1..=3);
                let (c, s) = random_cone(rng, inner_dim, depth - 1);
                let mat = DMatrix::from_fn(dim, inner_dim, |_, _| rng.gen_range(-1.0..1.0));
                (
                    Cone::preimage_transpose(&mat, &c).unwrap(),
                    Shadow::Preimage(mat, Box::new(s)),
                )
            }
            _ => {
                let (c1, s1) = random_cone(rng, dim, depth - 1);
                let (c2, s2) = random_cone(rng, dim, depth - 1);
                (
                    c1.intersect(&c2).unwrap(),
                    Shadow::Intersect(Box::new(s1), Box::new(s2)),
                )
            }
        }
    }
}

#[test]
fn acceptance_4_triviality_agrees_with_direction_sampling_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut nontrivial_seen = 0;
    for trial in 0..200 {
        let dim = rng.gen_range(1..=3);
        let (cone, shadow) = random_cone(&mut rng, dim, 2);
        let lp = cone.is_trivial().unwrap();
        // Sampling oracle: 10⁴ unit directions against the shadow with
        // angular tolerance 1e−3. One-sided for thin cones, so
        // disagreements resolve toward the LP with a verified witness.
        let oracle_nontrivial = (0..10_000).any(|_| {
            let u = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
            let n = u.norm();
            n > 0.0 && shadow.contains(&(u / n), 1e-3)
        });
        match &lp {
            Triviality::Trivial => {
                assert!(
                    !oracle_nontrivial,
                    "trial {trial}: oracle found a direction in a cone the LP called trivial"
                );
            }
            Triviality::Nontrivial { witness } => {
                nontrivial_seen += 1;
                assert!(
                    (witness.amax() - 1.0).abs() <= 1e-12,
                    "witness not sup-normalized"
                );
                assert!(
                    cone.member(witness, 1e-8).unwrap(),
                    "trial {trial}: witness failed the 1e-8 membership residual"
                );
                assert!(
                    shadow.contains(&witness.normalize(), 1e-6),
                    "trial {trial}: witness not in the symbolic cone"
                );
            }
        }
    }
    assert!(
        nontrivial_seen >= 50,
        "generator degenerated: only {nontrivial_seen} nontrivial"
    );
    println!("acceptance 4 (cone triviality vs sampling oracle, 200 cones): PASS");
}

#[test]
fn acceptance_5_derivative_rank_and_adjoint_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..100 {
        let (n, m_, l) = (
            rng.gen_range(1..=3),
            rng.gen_range(1..=3),
            rng.gen_range(1..=3),
        );
        let mut base = NsepPoint::new(
            DMatrix::from_fn(l, n, |_, _| rng.gen_range(-2.0..2.0)),
            DMatrix::from_fn(l, m_, |_, _| rng.gen_range(-2.0..2.0)),
            DVector::from_fn(l, |_, _| rng.gen_range(-2.0..2.0)),
            DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0)),
            DVector::from_fn(m_, |_, _| rng.gen_range(-2.0..2.0)),
        )
        .unwrap();
        if base.x.amax() < 1e-6 && base.y.amax() < 1e-6 {
            base.x[0] = 1.0;
        }
        assert_eq!(numerical_rank(&base.derivative_matrix()), n + m_ + l);
        assert!(base.derivative_is_surjective());

        let delta = NsepPoint::new(
            DMatrix::from_fn(l, n, |_, _| rng.gen_range(-2.0..2.0)),
            DMatrix::from_fn(l, m_, |_, _| rng.gen_range(-2.0..2.0)),
            DVector::from_fn(l, |_, _| rng.gen_range(-2.0..2.0)),
            DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0)),
            DVector::from_fn(m_, |_, _| rng.gen_range(-2.0..2.0)),
        )
        .unwrap();
        let vv = DVector::from_fn(n + m_ + l, |_, _| rng.gen_range(-2.0..2.0));
        let lhs = base.adjoint_apply(&vv).unwrap().dot(&delta);
        let rhs = vv.dot(&base.derivative_apply(&delta));
        assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));

        let mut nsfp = NsfpPoint::new(
            DMatrix::from_fn(m_, n, |_, _| rng.gen_range(-2.0..2.0)),
            DVector::from_fn(m_, |_, _| rng.gen_range(-2.0..2.0)),
            DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0)),
        )
        .unwrap();
        if nsfp.x.amax() < 1e-6 {
            nsfp.x[0] = 1.0;
        }
        assert_eq!(numerical_rank(&nsfp.derivative_matrix()), n + m_);
        assert!(nsfp.derivative_is_surjective());
        let delta2 = NsfpPoint::new(
            DMatrix::from_fn(m_, n, |_, _| rng.gen_range(-2.0..2.0)),
            DVector::from_fn(m_, |_, _| rng.gen_range(-2.0..2.0)),
            DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0)),
        )
        .unwrap();
        let vv2 = DVector::from_fn(n + m_, |_, _| rng.gen_range(-2.0..2.0));
        let lhs2 = nsfp.adjoint_apply(&vv2).unwrap().dot(&delta2);
        let rhs2 = vv2.dot(&nsfp.derivative_apply(&delta2));
        assert!((lhs2 - rhs2).abs() <= 1e-10 * (1.0 + lhs2.abs()));
    }
    println!("acceptance 5 (derivative rank + adjoint identities, 100 bases): PASS");
}

/// Per-coordinate ground truth for orthant/box normal-cone membership.
#[derive(Clone, Copy)]
enum AxisFactor {
    Zero,   // interior coordinate: factor {0}
    NonPos, // at a lower bound: factor −R₊
    NonNeg, // at an upper bound: factor R₊
}

impl AxisFactor {
    fn admits(&self, w: f64, tol: f64) -> bool {
        match self {
            AxisFactor::Zero => w.abs() <= tol,
            AxisFactor::NonPos => w <= tol,
            AxisFactor::NonNeg => w >= -tol,
        }
    }
}

#[test]
fn acceptance_6_coderivative_membership_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(321);
    let tol = 1e-9;
    for _ in 0..100 {
        // Box C in R², orthant Q in R¹, with analytically known cones.
        let n = 2;
        let lo = [-1.0, 0.0];
        let hi = [1.0, 2.0];
        let set_c = ConstraintSet::hyper_box(vec![
            Interval::new(lo[0], hi[0]).unwrap(),
            Interval::new(lo[1], hi[1]).unwrap(),
        ])
        .unwrap();
        let set_q = ConstraintSet::orthant(1).unwrap();

        // Random reference: each coordinate interior, at-lower, or at-upper.
        let mut xbar = DVector::zeros(n);
        let mut c_factors = Vec::new();
        for i in 0..n {
            match rng.gen_range(0..3) {
                0 => {
                    xbar[i] = lo[i];
                    c_factors.push(AxisFactor::NonPos);
                }
                1 => {
                    xbar[i] = hi[i];
                    c_factors.push(AxisFactor::NonNeg);
                }
                _ => {
                    xbar[i] = (lo[i] + hi[i]) / 2.0;
                    c_factors.push(AxisFactor::Zero);
                }
            }
        }
        let (ybar, q_factor) = if rng.gen_bool(0.5) {
            (v(&[0.0]), AxisFactor::NonPos)
        } else {
            (v(&[1.5]), AxisFactor::Zero)
        };

        let vprime = DVector::from_fn(n + 2, |_, _| {
            if rng.gen_bool(0.3) {
                0.0
            } else {
                rng.gen_range(-1.0..1.0)
            }
        });
        // Expected: −x′ ∈ N(x̄;C) and −y′ ∈ N(ȳ;Q) componentwise; the z′
        // block is free.
        let expected = (0..n).all(|i| c_factors[i].admits(-vprime[i], tol))
            && q_factor.admits(-vprime[n], tol);

        let vbar = DVector::from_iterator(
            n + 2,
            xbar.iter().chain(ybar.iter()).chain([0.0].iter()).copied(),
        );
        let got = coderivative_g1_nonempty(&vbar, &vprime, &set_c, &set_q, tol).unwrap();
        assert_eq!(got, expected, "g1 at x̄={xbar:?} ȳ={ybar:?} v′={vprime:?}");

        // Cross-check blocks against direct cone membership.
        let nc = set_c.normal_cone(&xbar).unwrap();
        let nq = set_q.normal_cone(&ybar).unwrap();
        let xp = vprime.rows(0, n).into_owned();
        let yp = vprime.rows(n, 1).into_owned();
        assert_eq!(
            got,
            nc.member(&-xp, tol).unwrap() && nq.member(&-yp, tol).unwrap()
        );

        // The zero covector always belongs.
        assert!(
            coderivative_g1_nonempty(&vbar, &DVector::zeros(n + 2), &set_c, &set_q, tol).unwrap()
        );

        // NSFP form on the same sets.
        let uprime = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let wprime = DVector::from_fn(1, |_, _| rng.gen_range(-1.0..1.0));
        let expected2 = (0..n).all(|i| c_factors[i].admits(-uprime[i], tol))
            && q_factor.admits(-wprime[0], tol);
        let got2 =
            coderivative_g2_nonempty(&xbar, &ybar, &uprime, &wprime, &set_c, &set_q, tol).unwrap();
        assert_eq!(got2, expected2);
    }
    println!("acceptance 6 (coderivative membership suite, 100 points): PASS");
}

#[test]
fn acceptance_7_probe_consistency_with_certified_verdicts() {
    let radii = [1e-1, 1e-2, 1e-3];
    let seed = 19;

    let start = Instant::now();
    let unstable = ProblemInstance::Nsfp(nsfp_fixture(&[1.0, 1.0]));
    let est = estimate_modulus(&unstable, &radii, 1000, seed).unwrap();
    let elapsed = start.elapsed();
    let bf = est.blowup_factor.expect("estimates present");
    assert!(
        bf >= 10.0,
        "blow-up factor {bf:.2} below 10 for the unstable point"
    );
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");

    let start2 = Instant::now();
    let stable = ProblemInstance::Nsep(nsep_fixture(&[1.0, 1.0], &[2.0]));
    let est2 = estimate_modulus(&stable, &radii, 1000, seed).unwrap();
    let elapsed2 = start2.elapsed();
    let bf2 = est2.blowup_factor.expect("estimates present");
    assert!(
        bf2 <= 10.0,
        "blow-up factor {bf2:.2} above 10 for the stable point"
    );
    assert!(elapsed2.as_secs_f64() < 60.0, "took {elapsed2:?}");

    // Determinism: the same seed reproduces the estimates bit-for-bit.
    let est3 = estimate_modulus(&stable, &radii, 1000, seed).unwrap();
    assert_eq!(est2.estimates, est3.estimates);

    println!(
        "acceptance 7 (probe consistency: unstable {bf:.2} >= 10 in {elapsed:?}, stable {bf2:.2} <= 10 in {elapsed2:?}): PASS"
    );
}

#[test]
fn acceptance_8_zero_reference_is_inconclusive() {
    let instance = NsfpInstance::new(
        m(1, 2, &[1.0, 0.0]),
        v(&[0.0]),
        parabola_sublevel(),
        ConstraintSet::orthant(1).unwrap(),
        v(&[0.0, 0.0]),
    )
    .unwrap();
    let verdict = certify_nsfp(&instance).unwrap();
    assert_eq!(verdict.verdict, Verdict::Inconclusive);
    assert!(!verdict.condition_holds);
    assert!(verdict.witness.is_some());
    println!("acceptance 8 (zero-reference hypothesis boundary): PASS");
}
