//! Multi-column greedy sparse recovery over a dictionary.

use crate::error::{invalid, Error, Result};
use crate::estimator::dictionary::Dictionary;
use crate::linalg::lstsq;
use crate::CMatrix;

/// Relative singular-value tolerance for the support least-squares fits.
pub(crate) const SUPPORT_RCOND: f64 = 1e-10;

/// Selected support of one subspace and its least-squares representation.
#[derive(Debug, Clone)]
pub struct SubspaceSolution {
    /// Dictionary columns in selection order.
    pub indices: Vec<usize>,
    /// Grid values of the selected columns.
    pub values: Vec<f64>,
    /// The selected columns.
    pub reduced_atoms: CMatrix,
    /// Least-squares coefficients: `targets ≈ reduced_atoms * transform`.
    pub transform: CMatrix,
    /// `‖targets - reduced_atoms * transform‖ / ‖targets‖` (0 for zero targets).
    pub relative_residual: f64,
}

fn selected_columns(dict: &Dictionary, indices: &[usize]) -> CMatrix {
    CMatrix::from_fn(dict.atoms.nrows(), indices.len(), |i, j| dict.atoms[(i, indices[j])])
}

/// Least-squares fit of `targets` on the given dictionary columns.
pub fn fit_support(targets: &CMatrix, dict: &Dictionary, indices: &[usize]) -> Result<SubspaceSolution> {
    let reduced = selected_columns(dict, indices);
    let transform = lstsq(&reduced, targets, SUPPORT_RCOND).map_err(|e| match e {
        Error::Numeric(msg) => Error::Numeric(format!(
            "support {:?} of the {:?} dictionary: {msg}",
            indices, dict.kind
        )),
        other => other,
    })?;
    let residual = (targets - &reduced * &transform).norm();
    let total = targets.norm();
    Ok(SubspaceSolution {
        indices: indices.to_vec(),
        values: indices.iter().map(|&i| dict.grid[i]).collect(),
        reduced_atoms: reduced,
        transform,
        relative_residual: if total > 0.0 { residual / total } else { 0.0 },
    })
}

/// Picks `sparsity` dictionary columns that jointly represent all columns of
/// `targets`.
///
/// Each step scores every unused column by `Σ_c |aᴴ r_c|² / ‖a‖²` over the
/// current residual columns, takes the best (lowest index on ties) and refits
/// all targets on the support chosen so far.
pub fn momp(targets: &CMatrix, dict: &Dictionary, sparsity: usize) -> Result<SubspaceSolution> {
    let (rows, d) = dict.atoms.shape();
    if targets.nrows() != rows {
        return invalid(format!(
            "targets have {} rows but dictionary atoms have {rows}",
            targets.nrows()
        ));
    }
    if sparsity == 0 || sparsity > d {
        return invalid(format!("sparsity {sparsity} outside 1..={d}"));
    }
    let energies: Vec<f64> = dict.atoms.column_iter().map(|c| c.norm_squared()).collect();
    let mut support: Vec<usize> = Vec::with_capacity(sparsity);
    let mut residual = targets.clone();
    let mut solution = None;
    for _ in 0..sparsity {
        let corr = dict.atoms.adjoint() * &residual;
        let mut best: Option<(usize, f64)> = None;
        for i in 0..d {
            if support.contains(&i) {
                continue;
            }
            let score = corr.row(i).norm_squared() / energies[i];
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((i, score));
            }
        }
        let (pick, _) = best.expect("sparsity <= dictionary size leaves a candidate");
        support.push(pick);
        let sol = fit_support(targets, dict, &support)?;
        residual = targets - &sol.reduced_atoms * &sol.transform;
        solution = Some(sol);
    }
    Ok(solution.expect("at least one iteration"))
}
