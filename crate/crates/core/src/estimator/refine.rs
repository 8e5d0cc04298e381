//! Iterative zoom-in of a dictionary around the selected parameters.

use crate::error::{invalid, Result};
use crate::estimator::dictionary::{local_union_grid, AtomSource, Dictionary, GridBounds};
use crate::estimator::momp::{fit_support, momp, SubspaceSolution};
use crate::{CMatrix, Complex64};

/// Zoom schedule for [`refine_dictionary`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineSchedule {
    /// Number of zoom steps after the initial search.
    pub iterations: usize,
    /// Spacing ratio between consecutive grids, in `(0, 1)`.
    pub zoom: f64,
    /// Each local grid spans `-half_width..=half_width` steps around its centre.
    pub half_width: usize,
}

impl RefineSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.zoom > 0.0 && self.zoom < 1.0) {
            return invalid(format!("zoom factor must lie in (0, 1), got {}", self.zoom));
        }
        if self.half_width == 0 {
            return invalid("local grid half-width must be at least 1");
        }
        Ok(())
    }
}

/// Result of a refinement: the support on the final grid.
#[derive(Debug, Clone)]
pub struct RefinedSubspace {
    pub solution: SubspaceSolution,
    pub dictionary: Dictionary,
}

/// Re-selects each support element in turn with the others held fixed,
/// taking the dictionary column that most reduces the least-squares residual.
///
/// Sweeps until the support stops changing (at most `max_sweeps` times).
pub fn update_support(
    targets: &CMatrix,
    dict: &Dictionary,
    support: &mut [usize],
    max_sweeps: usize,
) -> Result<()> {
    let atoms = &dict.atoms;
    for _ in 0..max_sweeps {
        let mut changed = false;
        for slot in 0..support.len() {
            let others: Vec<usize> = support
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != slot)
                .map(|(_, &i)| i)
                .collect();
            let (a_perp, u_perp) = if others.is_empty() {
                (atoms.clone(), targets.clone())
            } else {
                let sel = CMatrix::from_fn(atoms.nrows(), others.len(), |i, j| atoms[(i, others[j])]);
                let q = sel.qr().q();
                let a = atoms - &q * (q.adjoint() * atoms);
                let u = targets - &q * (q.adjoint() * targets);
                (a, u)
            };
            // Residual energy after adding candidate i, evaluated directly
            // rather than as a difference of energies: near convergence
            // neighbouring candidates differ far below the rounding error of
            // that difference.
            let corr = a_perp.adjoint() * &u_perp;
            let residual = |i: usize| -> Option<f64> {
                let a = a_perp.column(i);
                let e = a.norm_squared();
                if e <= 1e-12 * atoms.column(i).norm_squared() {
                    return None;
                }
                let coeff = corr.row(i) / Complex64::new(e, 0.0);
                Some((&u_perp - a * coeff).norm_squared())
            };
            let current = support[slot];
            let mut best = (current, residual(current).unwrap_or(f64::INFINITY));
            for i in 0..atoms.ncols() {
                if i == current || others.contains(&i) {
                    continue;
                }
                if let Some(r) = residual(i) {
                    if r < best.1 {
                        best = (i, r);
                    }
                }
            }
            if best.0 != current {
                support[slot] = best.0;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(())
}

fn search(targets: &CMatrix, dict: &Dictionary, sparsity: usize) -> Result<SubspaceSolution> {
    let greedy = momp(targets, dict, sparsity)?;
    let mut support = greedy.indices.clone();
    update_support(targets, dict, &mut support, 4)?;
    if support == greedy.indices {
        Ok(greedy)
    } else {
        fit_support(targets, dict, &support)
    }
}

/// Runs the sparse search on `initial`, then repeatedly rebuilds the
/// dictionary as the union of local grids around the current estimates with
/// the spacing shrunk by `schedule.zoom`, searching again each time.
///
/// The first spacing is the bounds width divided by the initial grid size.
pub fn refine_dictionary(
    targets: &CMatrix,
    source: &AtomSource<'_>,
    initial: &Dictionary,
    sparsity: usize,
    schedule: &RefineSchedule,
    bounds: GridBounds,
) -> Result<RefinedSubspace> {
    schedule.validate()?;
    if initial.kind != source.kind {
        return invalid("initial dictionary does not match the atom source");
    }
    let mut spacing = (bounds.upper - bounds.lower) / initial.len() as f64;
    let mut dictionary = initial.clone();
    let mut solution = search(targets, &dictionary, sparsity)?;
    for _ in 0..schedule.iterations {
        spacing *= schedule.zoom;
        let grid = local_union_grid(&solution.values, spacing, schedule.half_width, bounds);
        dictionary = source.build(&grid)?;
        solution = search(targets, &dictionary, sparsity.min(dictionary.len()))?;
    }
    Ok(RefinedSubspace { solution, dictionary })
}
