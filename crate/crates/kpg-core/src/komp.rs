//! Kernel Orthogonal Matching Pursuit.
//!
//! Destructive pruning: repeatedly remove the dictionary element whose
//! least-squares reprojection error (measured against the *original*
//! function, in RKHS norm) is smallest, as long as that error stays below
//! the compression budget. Surviving weights are the closed-form
//! least-squares projection of the original function onto the surviving
//! dictionary.

use nalgebra::DMatrix;

use crate::rkhs::{self, FunctionExpansion, KernelSpec};
use crate::{Error, Result};

/// Ridge added to Gram systems. The Gram diagonal is identically 1, so the
/// spec's trace-scaled ridge reduces to this constant.
const RIDGE: f64 = 1e-12;

/// Squared-error floor under which an element counts as exactly redundant
/// (removable even at zero budget).
const REDUNDANCY_FLOOR: f64 = 1e-12;

/// Condition estimate above which the ridge solve is abandoned for a full
/// SVD pseudo-inverse.
const CONDITION_LIMIT: f64 = 1e12;

/// Outcome of one compression run.
#[derive(Debug, Clone)]
pub struct CompressionReport {
    /// Least-squares projection of the input onto the surviving dictionary.
    pub pruned: FunctionExpansion,
    /// Number of dictionary elements removed.
    pub removed_count: usize,
    /// RKHS norm error of the cheapest rejected removal (the candidate that
    /// stopped the loop), or 0 if the dictionary was pruned to empty.
    pub final_min_error: f64,
    /// Recomputed RKHS distance ‖input − pruned‖_H.
    pub residual_norm: f64,
}

/// Error of the best approximation of `h` over its dictionary with element
/// `j` removed, together with the minimizing weights.
///
/// Returns the squared RKHS error e_j = min ‖g − h‖²_H over the span of the
/// reduced dictionary (clamped at zero) and the M−1 surviving weight
/// vectors that achieve it.
pub fn leave_one_out_error(
    h: &FunctionExpansion,
    j: usize,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let order = h.model_order();
    if j >= order {
        return Err(Error::IndexOutOfRange { index: j, order });
    }
    let reduced: Vec<Vec<f64>> = h
        .centers()
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != j)
        .map(|(_, c)| c.clone())
        .collect();
    let norm_sq = h.norm_squared();
    let (error, weights) = project_onto(h.spec(), h.centers(), h.weights(), &reduced, norm_sq);
    Ok((error.max(0.0), weights))
}

/// Prunes `h` to the smallest dictionary whose least-squares reprojection
/// of `h` stays within RKHS-norm `budget`.
///
/// With a zero budget only exactly redundant elements (squared error at the
/// numerical floor) are removed. Ties in the per-element error break toward
/// the lowest index.
pub fn komp(h: &FunctionExpansion, budget: f64) -> Result<CompressionReport> {
    if !(budget >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "compression budget must be >= 0, got {budget}"
        )));
    }

    let spec = h.spec().clone();
    let mut centers: Vec<Vec<f64>> = h.centers().to_vec();
    let mut weights: Vec<Vec<f64>> = h.weights().to_vec();
    let mut removed = 0usize;
    let mut final_min_error = 0.0;
    let norm_sq = h.norm_squared();

    while !centers.is_empty() {
        let sweep = sweep_errors(&spec, h.centers(), h.weights(), &centers, norm_sq);
        // Greedy argmin, lowest index on ties.
        let (best, best_err) = sweep
            .iter()
            .enumerate()
            .map(|(i, e)| (i, e.max(0.0)))
            .fold((usize::MAX, f64::INFINITY), |acc, (i, e)| {
                if e < acc.1 {
                    (i, e)
                } else {
                    acc
                }
            });
        let accept = if budget == 0.0 {
            best_err <= REDUNDANCY_FLOOR
        } else {
            best_err < budget * budget
        };
        if !accept {
            final_min_error = best_err.sqrt();
            break;
        }
        let survivors: Vec<Vec<f64>> = centers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != best)
            .map(|(_, c)| c.clone())
            .collect();
        let (_, new_weights) =
            project_onto(&spec, h.centers(), h.weights(), &survivors, norm_sq);
        centers = survivors;
        weights = new_weights;
        removed += 1;
    }

    let pruned = FunctionExpansion::new(spec, centers, weights)?;
    let residual_norm = rkhs::distance(h, &pruned)?;
    Ok(CompressionReport {
        pruned,
        removed_count: removed,
        final_min_error,
        residual_norm,
    })
}

/// Least-squares projection of the expansion (orig_centers, orig_weights)
/// onto the span of `candidates`: returns the squared RKHS error and the
/// minimizing weights, one per candidate.
///
/// Solves (K_cc + ridge) W = K_co W_o, falling back to an SVD
/// pseudo-inverse of K_cc when the system is ill-conditioned.
fn project_onto(
    spec: &KernelSpec,
    orig_centers: &[Vec<f64>],
    orig_weights: &[Vec<f64>],
    candidates: &[Vec<f64>],
    orig_norm_sq: f64,
) -> (f64, Vec<Vec<f64>>) {
    let m = candidates.len();
    let p = spec.action_dim();
    if m == 0 {
        return (orig_norm_sq, Vec::new());
    }
    let k_cc = rkhs::gram(spec, candidates, candidates);
    let rhs = cross_apply(spec, candidates, orig_centers, orig_weights, p);

    let mut ridged = k_cc.clone();
    for i in 0..m {
        ridged[(i, i)] += RIDGE;
    }
    let solution = match ridged.clone().cholesky() {
        Some(chol) if cholesky_condition(chol.l_dirty()) <= CONDITION_LIMIT => {
            let mut sol = rhs.clone();
            chol.solve_mut(&mut sol);
            sol
        }
        _ => {
            // Moore-Penrose pseudo-inverse of the unridged Gram; singular
            // values are cut relative to the largest one.
            let svd = k_cc.clone().svd(true, true);
            let cutoff = 1e-12 * svd.singular_values.max();
            let pinv = svd
                .pseudo_inverse(cutoff)
                .unwrap_or_else(|_| DMatrix::zeros(m, m));
            &pinv * &rhs
        }
    };

    let error = projection_error(&k_cc, &rhs, &solution, orig_norm_sq);
    let weights = (0..m)
        .map(|i| (0..p).map(|c| solution[(i, c)]).collect())
        .collect();
    (error, weights)
}

/// e = ‖h‖² + wᵀ K w − 2 wᵀ b for the candidate weights w.
fn projection_error(
    k_cc: &DMatrix<f64>,
    rhs: &DMatrix<f64>,
    solution: &DMatrix<f64>,
    orig_norm_sq: f64,
) -> f64 {
    let kw = k_cc * solution;
    let mut quad = 0.0;
    let mut cross = 0.0;
    for i in 0..solution.nrows() {
        for c in 0..solution.ncols() {
            quad += solution[(i, c)] * kw[(i, c)];
            cross += solution[(i, c)] * rhs[(i, c)];
        }
    }
    orig_norm_sq + quad - 2.0 * cross
}

/// b = K_{candidates, orig} · W_orig, an m×p matrix.
fn cross_apply(
    spec: &KernelSpec,
    candidates: &[Vec<f64>],
    orig_centers: &[Vec<f64>],
    orig_weights: &[Vec<f64>],
    p: usize,
) -> DMatrix<f64> {
    let k_co = rkhs::gram(spec, candidates, orig_centers);
    let mut rhs = DMatrix::zeros(candidates.len(), p);
    for i in 0..candidates.len() {
        for (j, w) in orig_weights.iter().enumerate() {
            let k = k_co[(i, j)];
            for c in 0..p {
                rhs[(i, c)] += k * w[c];
            }
        }
    }
    rhs
}

/// Squared ratio of extreme Cholesky diagonal entries: a cheap lower
/// estimate of the condition number.
fn cholesky_condition(l: &DMatrix<f64>) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for i in 0..l.nrows() {
        let d = l[(i, i)];
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if lo <= 0.0 {
        return f64::INFINITY;
    }
    (hi / lo) * (hi / lo)
}

/// Condition estimate above which the one-factorization sweep falls back
/// to per-candidate solves. Ill-conditioned sweeps (near-duplicate
/// centers) make the shared inverse too noisy for floor-level decisions.
const SWEEP_CONDITION_LIMIT: f64 = 1e10;

/// All leave-one-out errors over the current dictionary in one pass.
///
/// Uses the shared-inverse identity: with A = K_cc + ridge·I, X = A⁻¹ B,
/// the solution of the system with row/column j deleted is
/// w_i = x_i − A⁻¹_{ij} x_j / A⁻¹_{jj}, which makes one factorization serve
/// every candidate (algebraically identical to solving each reduced ridge
/// system directly). Every e_j is the true quadratic objective evaluated
/// at the candidate weights, so solver noise can only over-report an
/// error, never sneak a removal past the budget.
fn sweep_errors(
    spec: &KernelSpec,
    orig_centers: &[Vec<f64>],
    orig_weights: &[Vec<f64>],
    current: &[Vec<f64>],
    orig_norm_sq: f64,
) -> Vec<f64> {
    let m = current.len();
    if m == 1 {
        // Removing the only element projects onto the zero function.
        return vec![orig_norm_sq];
    }
    let p = spec.action_dim();
    let k_cc = rkhs::gram(spec, current, current);
    let rhs = cross_apply(spec, current, orig_centers, orig_weights, p);

    let mut ridged = k_cc.clone();
    for i in 0..m {
        ridged[(i, i)] += RIDGE;
    }
    let inverse = match ridged.cholesky() {
        Some(chol) if cholesky_condition(chol.l_dirty()) <= SWEEP_CONDITION_LIMIT => {
            chol.inverse()
        }
        _ => return fallback_sweep(spec, orig_centers, orig_weights, current, orig_norm_sq),
    };
    let x = &inverse * &rhs;

    let mut candidate = DMatrix::zeros(m, p);
    let mut errors = Vec::with_capacity(m);
    for j in 0..m {
        let denom = inverse[(j, j)];
        if !(denom > 0.0) {
            errors.push(
                project_onto(
                    spec,
                    orig_centers,
                    orig_weights,
                    &drop_index(current, j),
                    orig_norm_sq,
                )
                .0,
            );
            continue;
        }
        // Candidate weights with row j forced to zero, so the full-size
        // Gram quadratic form equals the reduced one.
        for i in 0..m {
            for c in 0..p {
                candidate[(i, c)] = if i == j {
                    0.0
                } else {
                    x[(i, c)] - inverse[(i, j)] / denom * x[(j, c)]
                };
            }
        }
        errors.push(projection_error(&k_cc, &rhs, &candidate, orig_norm_sq));
    }
    errors
}

fn fallback_sweep(
    spec: &KernelSpec,
    orig_centers: &[Vec<f64>],
    orig_weights: &[Vec<f64>],
    current: &[Vec<f64>],
    orig_norm_sq: f64,
) -> Vec<f64> {
    (0..current.len())
        .map(|j| {
            project_onto(
                spec,
                orig_centers,
                orig_weights,
                &drop_index(current, j),
                orig_norm_sq,
            )
            .0
        })
        .collect()
}

fn drop_index(list: &[Vec<f64>], j: usize) -> Vec<Vec<f64>> {
    list.iter()
        .enumerate()
        .filter(|(i, _)| *i != j)
        .map(|(_, c)| c.clone())
        .collect()
}
