//! Lipschitz-likeness certification for NSEP and NSFP solution maps.
//!
//! For an NSEP reference point the certified condition is
//! `(Āᵀ)⁻¹(−N(x̄;C)) ∩ (B̄ᵀ)⁻¹(N(ȳ;Q)) = {0}`; for an NSFP point it is
//! `(Āᵀ)⁻¹(−N(x̄;C)) ∩ N(Āx̄+b̄;Q) = {0}`. Triviality of the assembled
//! cone is sufficient for the Lipschitz-like property. Nontriviality is
//! necessary only at a nonzero reference point, so the verdict is
//! three-valued: collapsing the zero-reference case into either answer
//! would overclaim.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cone::{Cone, ConeError, Triviality};
use crate::sets::{ConstraintSet, SetError};

/// Absolute feasibility tolerance for the reference point (equality
/// residual and set membership).
pub const REFERENCE_FEASIBILITY_TOL: f64 = 1e-9;

/// Max-norm threshold for the exact-zero reference-point test. Near-zero
/// points are mathematically nonzero and are treated as such; the norm is
/// reported in the verdict.
pub const ZERO_REFERENCE_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CertifyError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("reference point is not feasible (residual {residual:.3e})")]
    InfeasibleReference { residual: f64 },
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Cone(#[from] ConeError),
}

/// A validated NSEP instance: find `(x, y) ∈ C × Q` with `Ax − By = c`,
/// carrying a feasible reference pair.
#[derive(Debug, Clone)]
pub struct NsepInstance {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DVector<f64>,
    pub set_c: ConstraintSet,
    pub set_q: ConstraintSet,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
}

/// A validated NSFP instance: find `x ∈ C` with `Ax + b ∈ Q`, carrying a
/// feasible reference point.
#[derive(Debug, Clone)]
pub struct NsfpInstance {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub set_c: ConstraintSet,
    pub set_q: ConstraintSet,
    pub x: DVector<f64>,
}

/// Either problem kind, as parsed from a problem file.
#[derive(Debug, Clone)]
pub enum ProblemInstance {
    Nsep(NsepInstance),
    Nsfp(NsfpInstance),
}

impl ProblemInstance {
    /// The reference unknown in solver coordinates: `(x̄, ȳ)` concatenated
    /// for NSEP, `x̄` for NSFP.
    pub fn reference_unknown(&self) -> DVector<f64> {
        match self {
            ProblemInstance::Nsep(p) => {
                DVector::from_iterator(p.x.len() + p.y.len(), p.x.iter().chain(p.y.iter()).copied())
            }
            ProblemInstance::Nsfp(p) => p.x.clone(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ProblemInstance::Nsep(_) => "nsep",
            ProblemInstance::Nsfp(_) => "nsfp",
        }
    }
}

impl NsepInstance {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DVector<f64>,
        set_c: ConstraintSet,
        set_q: ConstraintSet,
        x: DVector<f64>,
        y: DVector<f64>,
    ) -> Result<Self, CertifyError> {
        let l = a.nrows();
        for (expected, found) in [
            (l, b.nrows()),
            (l, c.len()),
            (a.ncols(), x.len()),
            (b.ncols(), y.len()),
            (set_c.dim(), x.len()),
            (set_q.dim(), y.len()),
        ] {
            if expected != found {
                return Err(CertifyError::DimensionMismatch { expected, found });
            }
        }
        let instance = NsepInstance {
            a,
            b,
            c,
            set_c,
            set_q,
            x,
            y,
        };
        let residual = instance.equality_residual();
        if residual > REFERENCE_FEASIBILITY_TOL
            || !instance
                .set_c
                .contains(&instance.x, REFERENCE_FEASIBILITY_TOL)
            || !instance
                .set_q
                .contains(&instance.y, REFERENCE_FEASIBILITY_TOL)
        {
            return Err(CertifyError::InfeasibleReference { residual });
        }
        Ok(instance)
    }

    /// `‖Ax̄ − Bȳ − c‖∞`.
    pub fn equality_residual(&self) -> f64 {
        (&self.a * &self.x - &self.b * &self.y - &self.c).amax()
    }
}

impl NsfpInstance {
    pub fn new(
        a: DMatrix<f64>,
        b: DVector<f64>,
        set_c: ConstraintSet,
        set_q: ConstraintSet,
        x: DVector<f64>,
    ) -> Result<Self, CertifyError> {
        for (expected, found) in [
            (a.nrows(), b.len()),
            (a.ncols(), x.len()),
            (set_c.dim(), x.len()),
            (set_q.dim(), a.nrows()),
        ] {
            if expected != found {
                return Err(CertifyError::DimensionMismatch { expected, found });
            }
        }
        let instance = NsfpInstance {
            a,
            b,
            set_c,
            set_q,
            x,
        };
        let image = instance.image_point();
        if !instance
            .set_c
            .contains(&instance.x, REFERENCE_FEASIBILITY_TOL)
            || !instance.set_q.contains(&image, REFERENCE_FEASIBILITY_TOL)
        {
            let residual = instance
                .set_q
                .distance(&image)
                .unwrap_or(f64::NAN)
                .max(instance.set_c.distance(&instance.x).unwrap_or(f64::NAN));
            return Err(CertifyError::InfeasibleReference { residual });
        }
        Ok(instance)
    }

    /// `Āx̄ + b̄`, the point of `Q` the normal cone is taken at.
    pub fn image_point(&self) -> DVector<f64> {
        &self.a * &self.x + &self.b
    }
}

/// Certified stability answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    LipschitzLike,
    NotLipschitzLike,
    /// The regularity condition fails but the reference point is zero, so
    /// failure is not known to be necessary.
    Inconclusive,
}

/// The cones assembled on the way to the verdict, kept so the decision can
/// be replayed from the report alone.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateTrace {
    /// `N(x̄; C)`.
    pub normal_cone_c: Cone,
    /// `N(ȳ; Q)` for NSEP; `N(Āx̄+b̄; Q)` for NSFP.
    pub normal_cone_q: Cone,
    /// `(Āᵀ)⁻¹(−N(x̄; C))`.
    pub preimage_c: Cone,
    /// `(B̄ᵀ)⁻¹(N(ȳ; Q))`; absent for NSFP where the Q-side operand is the
    /// normal cone itself.
    pub preimage_q: Option<Cone>,
    /// The intersected condition cone whose triviality is the verdict.
    pub intersection: Cone,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub verdict: Verdict,
    /// True iff the intersection cone is `{0}`.
    pub condition_holds: bool,
    /// `‖reference point‖∞`, reported because the necessity direction
    /// hinges on it being nonzero.
    pub reference_norm: f64,
    /// Verified nonzero element of the intersection cone when the
    /// condition fails.
    pub witness: Option<DVector<f64>>,
    pub trace: CertificateTrace,
}

impl StabilityVerdict {
    /// Re-decides `condition_holds` from the trace cones alone and checks
    /// the recorded witness, so a report can be audited without the
    /// original instance.
    pub fn replay(&self) -> Result<bool, ConeError> {
        let triv = self.trace.intersection.is_trivial()?;
        if let Some(w) = &self.witness {
            if !self
                .trace
                .intersection
                .member(w, crate::cone::WITNESS_TOL)?
            {
                return Err(ConeError::WitnessCheckFailed(f64::NAN));
            }
        }
        Ok(triv.is_trivial())
    }

    fn from_parts(trace: CertificateTrace, triv: Triviality, reference_norm: f64) -> Self {
        let condition_holds = triv.is_trivial();
        let witness = triv.witness().cloned();
        let verdict = if condition_holds {
            Verdict::LipschitzLike
        } else if reference_norm > ZERO_REFERENCE_TOL {
            Verdict::NotLipschitzLike
        } else {
            Verdict::Inconclusive
        };
        StabilityVerdict {
            verdict,
            condition_holds,
            reference_norm,
            witness,
            trace,
        }
    }
}

/// Decides the Lipschitz-like property of the NSEP solution map at the
/// instance's reference point.
pub fn certify_nsep(p: &NsepInstance) -> Result<StabilityVerdict, CertifyError> {
    let normal_cone_c = p.set_c.normal_cone(&p.x)?;
    let normal_cone_q = p.set_q.normal_cone(&p.y)?;
    let preimage_c = Cone::preimage_transpose(&p.a, &normal_cone_c.negate())?;
    let preimage_q = Cone::preimage_transpose(&p.b, &normal_cone_q)?;
    let intersection = preimage_c.intersect(&preimage_q)?;
    let triv = intersection.is_trivial()?;
    let reference_norm = p.x.amax().max(p.y.amax());
    Ok(StabilityVerdict::from_parts(
        CertificateTrace {
            normal_cone_c,
            normal_cone_q,
            preimage_c,
            preimage_q: Some(preimage_q),
            intersection,
        },
        triv,
        reference_norm,
    ))
}

/// Decides the Lipschitz-like property of the NSFP solution map at the
/// instance's reference point.
pub fn certify_nsfp(p: &NsfpInstance) -> Result<StabilityVerdict, CertifyError> {
    let normal_cone_c = p.set_c.normal_cone(&p.x)?;
    let normal_cone_q = p.set_q.normal_cone(&p.image_point())?;
    let preimage_c = Cone::preimage_transpose(&p.a, &normal_cone_c.negate())?;
    let intersection = preimage_c.intersect(&normal_cone_q)?;
    let triv = intersection.is_trivial()?;
    let reference_norm = p.x.amax();
    Ok(StabilityVerdict::from_parts(
        CertificateTrace {
            normal_cone_c,
            normal_cone_q,
            preimage_c,
            preimage_q: None,
            intersection,
        },
        triv,
        reference_norm,
    ))
}

/// Certifies either problem kind.
pub fn certify(p: &ProblemInstance) -> Result<StabilityVerdict, CertifyError> {
    match p {
        ProblemInstance::Nsep(inst) => certify_nsep(inst),
        ProblemInstance::Nsfp(inst) => certify_nsfp(inst),
    }
}
