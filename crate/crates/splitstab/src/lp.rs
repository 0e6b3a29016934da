//! Dense two-phase simplex for the small feasibility systems that cone
//! membership and triviality tests reduce to.
//!
//! Problems here are tiny (tens of variables), so the implementation favors
//! determinism over speed: a dense tableau, Bland's rule for anti-cycling,
//! and fixed tolerances. Phase 1 uses a two-sided artificial pair per row,
//! so its optimum is exactly the minimal L1 residual of the constraint
//! system; callers decide feasibility by thresholding that residual.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Default feasibility tolerance for LP-decided questions.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Reduced-cost threshold below which a column is considered improving.
const REDUCED_COST_TOL: f64 = 1e-10;

/// Smallest pivot magnitude accepted during the ratio test.
const PIVOT_TOL: f64 = 1e-10;

/// Hard cap on simplex pivots; desk-scale systems finish in far fewer.
const MAX_PIVOTS: usize = 20_000;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("simplex did not terminate within {0} pivots")]
    IterationLimit(usize),
    #[error("non-finite value encountered during pivoting")]
    NumericalBreakdown,
}

/// Outcome of a linear program in standard form.
#[derive(Debug, Clone)]
pub enum LpOutcome {
    /// Optimal solution over the original (unsplit) variables.
    Optimal {
        x: DVector<f64>,
        objective: f64,
    },
    /// Phase 1 could not zero the artificials; the reported value is the
    /// minimal L1 residual of the equality system.
    Infeasible {
        residual: f64,
    },
    Unbounded,
}

/// Result of an L1 residual minimization.
#[derive(Debug, Clone)]
pub struct L1Fit {
    /// Minimizer over the original variables.
    pub x: DVector<f64>,
    /// Minimal value of `‖a·x − b‖₁` subject to the sign constraints.
    pub residual: f64,
}

/// Minimizes `‖a·x − b‖₁` over x, where `nonneg[j]` constrains `x[j] ≥ 0`
/// and the remaining variables are free.
///
/// The system is feasible (as equalities) exactly when the returned
/// residual is below the caller's tolerance.
pub fn min_l1_residual(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    nonneg: &[bool],
) -> Result<L1Fit, LpError> {
    assert_eq!(a.ncols(), nonneg.len(), "sign mask length mismatch");
    assert_eq!(a.nrows(), b.len(), "rhs length mismatch");
    match solve(None, a, b, nonneg)? {
        LpOutcome::Optimal { x, objective } => Ok(L1Fit {
            x,
            residual: objective.max(0.0),
        }),
        LpOutcome::Infeasible { residual } => Ok(L1Fit {
            x: DVector::zeros(a.ncols()),
            residual,
        }),
        // Phase 1 minimizes a sum of nonnegative variables.
        LpOutcome::Unbounded => unreachable!("phase 1 objective is bounded below"),
    }
}

/// Solves `min cᵀx  s.t.  a·x = b`, with `x[j] ≥ 0` where `nonneg[j]` and
/// free otherwise, by the two-phase simplex method.
///
/// With `c = None` the solve stops after phase 1 and reports the phase-1
/// optimum (the minimal L1 residual) as the objective.
pub fn solve(
    c: Option<&DVector<f64>>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    nonneg: &[bool],
) -> Result<LpOutcome, LpError> {
    let rows = a.nrows();
    let orig = a.ncols();
    if let Some(c) = c {
        assert_eq!(c.len(), orig, "objective length mismatch");
    }

    // Free variables are split as xj = xj⁺ − xj⁻. Column map: for each
    // original j, col_pos[j] is the nonnegative (or positive-part) column
    // and col_neg[j] (free vars only) the negative part.
    let mut col_pos = vec![0usize; orig];
    let mut col_neg = vec![usize::MAX; orig];
    let mut ncols = 0usize;
    for j in 0..orig {
        col_pos[j] = ncols;
        ncols += 1;
        if !nonneg[j] {
            col_neg[j] = ncols;
            ncols += 1;
        }
    }
    let split_cols = ncols;
    // Two-sided artificial pair per row keeps phase 1 exactly the L1
    // residual even when the optimal residual is nonzero.
    let art_plus = split_cols;
    let art_minus = split_cols + rows;
    ncols += 2 * rows;

    // Tableau with rows flipped so the rhs is nonnegative and the a⁺
    // artificials form the initial identity basis.
    let mut t = DMatrix::<f64>::zeros(rows, ncols);
    let mut rhs = DVector::<f64>::zeros(rows);
    for i in 0..rows {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        rhs[i] = sign * b[i];
        for j in 0..orig {
            let v = sign * a[(i, j)];
            t[(i, col_pos[j])] = v;
            if col_neg[j] != usize::MAX {
                t[(i, col_neg[j])] = -v;
            }
        }
        t[(i, art_plus + i)] = 1.0;
        t[(i, art_minus + i)] = -1.0;
    }
    let mut basis: Vec<usize> = (0..rows).map(|i| art_plus + i).collect();

    // Phase 1: minimize the artificial sum. Reduced costs start as
    // c − Σ basic rows since every basic artificial has cost 1.
    let mut zrow = DVector::<f64>::zeros(ncols);
    for j in split_cols..ncols {
        zrow[j] = 1.0;
    }
    for i in 0..rows {
        for j in 0..ncols {
            zrow[j] -= t[(i, j)];
        }
    }
    let mut obj = rhs.sum();

    run_simplex(&mut t, &mut rhs, &mut zrow, &mut obj, &mut basis)?
        .ok_or(LpError::IterationLimit(MAX_PIVOTS))?;
    let phase1 = obj;
    if !phase1.is_finite() {
        return Err(LpError::NumericalBreakdown);
    }
    if phase1 > FEASIBILITY_TOL && c.is_some() {
        return Ok(LpOutcome::Infeasible { residual: phase1 });
    }

    let objective = if let Some(c) = c {
        // Phase 2: pin the artificials at zero by dropping their columns
        // (basic artificials sit at zero after a successful phase 1 and
        // are pivoted out where a substitute column exists).
        for i in 0..rows {
            if basis[i] >= split_cols {
                if let Some(j) = (0..split_cols).find(|&j| t[(i, j)].abs() > PIVOT_TOL) {
                    pivot(&mut t, &mut rhs, &mut zrow, &mut basis, i, j);
                }
            }
        }
        for j in split_cols..ncols {
            // Redundant rows may keep an artificial basic at value zero;
            // blocking re-entry is enough to keep it there.
            if !basis.contains(&j) {
                for i in 0..rows {
                    t[(i, j)] = 0.0;
                }
            }
        }
        // Rebuild reduced costs for the real objective.
        let mut zc = DVector::<f64>::zeros(ncols);
        for j in 0..orig {
            zc[col_pos[j]] = c[j];
            if col_neg[j] != usize::MAX {
                zc[col_neg[j]] = -c[j];
            }
        }
        let mut zobj = 0.0;
        for i in 0..rows {
            let cb = if basis[i] < split_cols {
                zc[basis[i]]
            } else {
                0.0
            };
            if cb != 0.0 {
                zobj += cb * rhs[i];
                for j in 0..ncols {
                    zc[j] -= cb * t[(i, j)];
                }
                zc[basis[i]] = 0.0;
            }
        }
        obj = zobj;
        zrow = zc;
        match run_simplex(&mut t, &mut rhs, &mut zrow, &mut obj, &mut basis)? {
            Some(()) => obj,
            None => return Ok(LpOutcome::Unbounded),
        }
    } else {
        phase1
    };

    // Recover original variables from the split columns.
    let mut x = DVector::<f64>::zeros(orig);
    for (i, &bj) in basis.iter().enumerate() {
        if bj < split_cols {
            for j in 0..orig {
                if col_pos[j] == bj {
                    x[j] += rhs[i];
                } else if col_neg[j] == bj {
                    x[j] -= rhs[i];
                }
            }
        }
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(LpError::NumericalBreakdown);
    }
    Ok(LpOutcome::Optimal { x, objective })
}

/// Pivots to optimality under Bland's rule. Returns `Ok(Some(()))` at an
/// optimum, `Ok(None)` when the objective is unbounded below.
fn run_simplex(
    t: &mut DMatrix<f64>,
    rhs: &mut DVector<f64>,
    zrow: &mut DVector<f64>,
    obj: &mut f64,
    basis: &mut [usize],
) -> Result<Option<()>, LpError> {
    let rows = t.nrows();
    let ncols = t.ncols();
    for _ in 0..MAX_PIVOTS {
        // Bland: entering column is the lowest index with negative
        // reduced cost.
        let Some(enter) = (0..ncols).find(|&j| zrow[j] < -REDUCED_COST_TOL) else {
            return Ok(Some(()));
        };
        // Ratio test; ties broken by the smallest basic variable index.
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..rows {
            let aij = t[(i, enter)];
            if aij > PIVOT_TOL {
                let ratio = rhs[i] / aij;
                let better = match leave {
                    None => true,
                    Some(l) => {
                        ratio < best - 1e-12 || (ratio < best + 1e-12 && basis[i] < basis[l])
                    }
                };
                if better {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(leave) = leave else {
            return Ok(None);
        };
        // The entering variable rises to rhs[leave]/pivot; the objective
        // moves by its reduced cost times that step.
        *obj += zrow[enter] * (rhs[leave] / t[(leave, enter)]);
        pivot(t, rhs, zrow, basis, leave, enter);
        if !obj.is_finite() {
            return Err(LpError::NumericalBreakdown);
        }
    }
    Err(LpError::IterationLimit(MAX_PIVOTS))
}

/// Gauss-Jordan pivot on (row, col), updating tableau, rhs, reduced costs,
/// the tracked objective via the zrow entry, and the basis.
fn pivot(
    t: &mut DMatrix<f64>,
    rhs: &mut DVector<f64>,
    zrow: &mut DVector<f64>,
    basis: &mut [usize],
    row: usize,
    col: usize,
) {
    let rows = t.nrows();
    let ncols = t.ncols();
    let p = t[(row, col)];
    for j in 0..ncols {
        t[(row, j)] /= p;
    }
    rhs[row] /= p;
    for i in 0..rows {
        if i != row {
            let f = t[(i, col)];
            if f != 0.0 {
                for j in 0..ncols {
                    t[(i, j)] -= f * t[(row, j)];
                }
                rhs[i] -= f * rhs[row];
                if rhs[i] < 0.0 && rhs[i] > -1e-12 {
                    rhs[i] = 0.0;
                }
            }
        }
    }
    let zf = zrow[col];
    if zf != 0.0 {
        for j in 0..ncols {
            zrow[j] -= zf * t[(row, j)];
        }
    }
    basis[row] = col;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, data)
    }

    #[test]
    fn phase2_reaches_hand_solved_optimum() {
        // min x + y s.t. x + 2y = 4, x,y >= 0  ->  (0, 2), objective 2.
        let a = mat(1, 2, &[1.0, 2.0]);
        let b = DVector::from_row_slice(&[4.0]);
        let c = DVector::from_row_slice(&[1.0, 1.0]);
        match solve(Some(&c), &a, &b, &[true, true]).unwrap() {
            LpOutcome::Optimal { x, objective } => {
                assert!((objective - 2.0).abs() < 1e-9);
                assert!((x[0] - 0.0).abs() < 1e-9);
                assert!((x[1] - 2.0).abs() < 1e-9);
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn infeasible_system_reports_l1_distance() {
        // x = -1 with x >= 0 misses by exactly 1.
        let a = mat(1, 1, &[1.0]);
        let b = DVector::from_row_slice(&[-1.0]);
        let fit = min_l1_residual(&a, &b, &[true]).unwrap();
        assert!((fit.residual - 1.0).abs() < 1e-9);
    }

    #[test]
    fn free_variable_reaches_negative_value() {
        let a = mat(1, 1, &[1.0]);
        let b = DVector::from_row_slice(&[-3.0]);
        let fit = min_l1_residual(&a, &b, &[false]).unwrap();
        assert!(fit.residual < 1e-10);
        assert!((fit.x[0] + 3.0).abs() < 1e-9);
    }

    #[test]
    fn unbounded_objective_detected() {
        // min -x s.t. x - y = 0: push x = y -> infinity.
        let a = mat(1, 2, &[1.0, -1.0]);
        let b = DVector::from_row_slice(&[0.0]);
        let c = DVector::from_row_slice(&[-1.0, 0.0]);
        match solve(Some(&c), &a, &b, &[true, true]).unwrap() {
            LpOutcome::Unbounded => {}
            other => panic!("expected unbounded, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_vertex_terminates() {
        // Degenerate at the origin: both constraints active.
        let a = mat(2, 4, &[1.0, 1.0, 1.0, 0.0, 1.0, 2.0, 0.0, 1.0]);
        let b = DVector::from_row_slice(&[0.0, 0.0]);
        let c = DVector::from_row_slice(&[-1.0, -1.0, 0.0, 0.0]);
        match solve(Some(&c), &a, &b, &[true; 4]).unwrap() {
            LpOutcome::Optimal { objective, .. } => assert!(objective.abs() < 1e-9),
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn mixed_signs_in_rhs() {
        // x1 - x2 = -2, x1 + x2 = 4, x >= 0 -> (1, 3).
        let a = mat(2, 2, &[1.0, -1.0, 1.0, 1.0]);
        let b = DVector::from_row_slice(&[-2.0, 4.0]);
        let fit = min_l1_residual(&a, &b, &[true, true]).unwrap();
        assert!(fit.residual < 1e-10);
        assert!((fit.x[0] - 1.0).abs() < 1e-9);
        assert!((fit.x[1] - 3.0).abs() < 1e-9);
    }
}
