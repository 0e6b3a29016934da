//! Stability certification for nonhomogeneous split equality (NSEP) and
//! split feasibility (NSFP) problems.
//!
//! An NSEP asks for pairs `(x, y) ∈ C × Q` with `Ax − By = c`; an NSFP asks
//! for `x ∈ C` with `Ax + b ∈ Q`. Both solution sets are set-valued maps of
//! the problem data, and this crate decides whether those maps are
//! Lipschitz-like (have the Aubin property) at a reference point. The
//! decision is exact up to documented floating-point tolerances: limiting
//! normal cones of the constraint sets are computed in closed form,
//! combined through transpose-preimages and intersections into a single
//! polyhedral cone, and that cone's triviality is decided by linear
//! programming with verified witnesses.
//!
//! Supporting tooling — feasibility solvers, solution-set sampling, and an
//! empirical modulus probe — cross-checks the exact verdicts at desk scale.

pub mod certify;
pub mod cone;
pub mod ge;
pub mod lp;
pub mod probe;
pub mod sets;
pub mod solver;

pub use nalgebra;
