//! Parameter-grid dictionaries for the three measurement subspaces.

use std::f64::consts::PI;

use crate::channel::{phase_vector, rx_vector, tx_vector, ArrayConfig, BeamformingMatrices, WaveformConfig};
use crate::error::{invalid, Result};
use crate::{CMatrix, CVector};

/// Which channel parameter a dictionary spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubspaceKind {
    /// Angle of arrival; atoms live in the receive-stream (mode-1) space.
    Rx,
    /// Angle of departure; atoms live in the training-symbol (mode-2) space.
    Tx,
    /// Path distance; atoms live in the subcarrier (mode-3) space.
    Distance,
}

impl SubspaceKind {
    pub const ALL: [SubspaceKind; 3] = [SubspaceKind::Rx, SubspaceKind::Tx, SubspaceKind::Distance];
}

/// Grid of candidate parameter values with one atom per value.
#[derive(Debug, Clone)]
pub struct Dictionary {
    pub kind: SubspaceKind,
    pub grid: Vec<f64>,
    /// Column `i` is the candidate vector for `grid[i]` divided by its own
    /// Hermitian inner product.
    pub atoms: CMatrix,
}

impl Dictionary {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

/// Everything needed to turn parameter values into subspace vectors.
#[derive(Debug, Clone, Copy)]
pub struct AtomSource<'a> {
    pub kind: SubspaceKind,
    pub bf: &'a BeamformingMatrices,
    pub cfg: &'a WaveformConfig,
    pub arrays: &'a ArrayConfig,
}

impl<'a> AtomSource<'a> {
    pub fn new(
        kind: SubspaceKind,
        bf: &'a BeamformingMatrices,
        cfg: &'a WaveformConfig,
        arrays: &'a ArrayConfig,
    ) -> Self {
        Self { kind, bf, cfg, arrays }
    }

    /// Unnormalized subspace vector for one parameter value.
    pub fn candidate(&self, value: f64) -> Result<CVector> {
        match self.kind {
            SubspaceKind::Rx => rx_vector(value, self.bf, self.arrays),
            SubspaceKind::Tx => tx_vector(value, self.bf, self.cfg, self.arrays),
            SubspaceKind::Distance => Ok(phase_vector(value, self.cfg)),
        }
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            SubspaceKind::Rx => self.arrays.l_rx,
            SubspaceKind::Tx => self.cfg.n_training,
            SubspaceKind::Distance => self.cfg.n_subcarriers,
        }
    }

    pub fn build(&self, grid: &[f64]) -> Result<Dictionary> {
        build_dictionary(self, grid)
    }
}

/// Builds the normalized dictionary `[v(g) / (v(g)ᴴ v(g))]` over `grid`.
pub fn build_dictionary(source: &AtomSource<'_>, grid: &[f64]) -> Result<Dictionary> {
    if grid.is_empty() {
        return invalid("dictionary grid is empty");
    }
    if grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return invalid("dictionary grid must be sorted");
    }
    let mut atoms = CMatrix::zeros(source.dim(), grid.len());
    for (i, &g) in grid.iter().enumerate() {
        let v = source.candidate(g)?;
        let energy = v.dotc(&v);
        if energy.norm() == 0.0 {
            return invalid(format!("candidate vector for {g} is zero"));
        }
        atoms.set_column(i, &(v / energy));
    }
    Ok(Dictionary {
        kind: source.kind,
        grid: grid.to_vec(),
        atoms,
    })
}

/// `n` angles evenly spaced inside the open sector `(-π/2, π/2)`.
pub fn angle_grid(n: usize) -> Vec<f64> {
    let step = PI / n as f64;
    (0..n).map(|i| -PI / 2.0 + (i as f64 + 0.5) * step).collect()
}

/// `n` distances evenly spaced over `[start, start + span)`.
pub fn distance_grid(start: f64, span: f64, n: usize) -> Vec<f64> {
    let step = span / n as f64;
    (0..n).map(|i| start + i as f64 * step).collect()
}

/// Admissible parameter interval for grid refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridBounds {
    pub lower: f64,
    pub upper: f64,
    /// Whether `lower` itself is admissible (`upper` never is).
    pub lower_inclusive: bool,
}

impl GridBounds {
    pub fn angle() -> Self {
        Self {
            lower: -PI / 2.0,
            upper: PI / 2.0,
            lower_inclusive: false,
        }
    }

    pub fn distance(start: f64, span: f64) -> Self {
        Self {
            lower: start,
            upper: start + span,
            lower_inclusive: true,
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        let above = if self.lower_inclusive { v >= self.lower } else { v > self.lower };
        above && v < self.upper
    }
}

/// Union of local grids `c + j·spacing`, `j = -half_width..=half_width`,
/// around every centre, clipped to `bounds`, sorted and de-duplicated.
pub fn local_union_grid(centres: &[f64], spacing: f64, half_width: usize, bounds: GridBounds) -> Vec<f64> {
    let hw = half_width as i64;
    let mut grid: Vec<f64> = centres
        .iter()
        .flat_map(|&c| (-hw..=hw).map(move |j| c + j as f64 * spacing))
        .filter(|&v| bounds.contains(v))
        .collect();
    grid.sort_by(|a, b| a.total_cmp(b));
    let tol = 1e-6 * spacing;
    grid.dedup_by(|a, b| (*a - *b).abs() <= tol);
    grid
}
