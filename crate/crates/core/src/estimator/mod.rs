//! Tensor-subspace channel parameter estimation.
//!
//! The measurement tensor is reduced to its dominant multilinear subspaces,
//! each subspace is matched against a refined parameter dictionary, and the
//! per-subspace estimates are paired into paths through the transformed core.

mod dictionary;
mod linking;
mod momp;
mod refine;

pub use dictionary::{
    angle_grid, build_dictionary, distance_grid, local_union_grid, AtomSource, Dictionary, GridBounds,
    SubspaceKind,
};
pub use linking::{link_paths, PathLink};
pub use momp::{fit_support, momp, SubspaceSolution};
pub use refine::{refine_dictionary, update_support, RefineSchedule, RefinedSubspace};

use serde::{Deserialize, Serialize};

use crate::channel::{
    channel_matrix, path_factors, unambiguous_range, ArrayConfig, BeamformingMatrices, PathParams, WaveformConfig,
};
use crate::crb::products::khatri_rao;
use crate::error::{invalid, Error, Result};
use crate::linalg::{lstsq, median};
use crate::tensor::{msvd, truncate, Mode, MsvdResult, Tensor3};
use crate::{CMatrix, Complex64};

/// Mode singular values below this fraction of the largest one count as zero.
pub const RANK_FLOOR: f64 = 1e-9;

/// Default threshold multiplier for rank selection and path linking.
pub const DEFAULT_MULTIPLIER: f64 = 2.858;

/// Estimator tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub rank_multiplier: f64,
    pub link_multiplier: f64,
    /// Minimum number of points in the initial angle grids.
    pub angle_grid_points: usize,
    /// Minimum number of points in the initial distance grid.
    pub distance_grid_points: usize,
    pub refine_iterations: usize,
    pub zoom: f64,
    pub half_width: usize,
    /// Start of the distance search interval (m).
    pub distance_start: f64,
    /// Length of the distance search interval (m); defaults to `cT`.
    pub distance_span: Option<f64>,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            rank_multiplier: DEFAULT_MULTIPLIER,
            link_multiplier: DEFAULT_MULTIPLIER,
            angle_grid_points: 64,
            distance_grid_points: 64,
            refine_iterations: 8,
            zoom: 0.125,
            half_width: 8,
            distance_start: 0.0,
            distance_span: None,
        }
    }
}

impl EstimatorConfig {
    pub fn schedule(&self) -> RefineSchedule {
        RefineSchedule {
            iterations: self.refine_iterations,
            zoom: self.zoom,
            half_width: self.half_width,
        }
    }

    pub fn validate(&self, cfg: &WaveformConfig) -> Result<()> {
        for (name, m) in [("rank", self.rank_multiplier), ("link", self.link_multiplier)] {
            if !(m.is_finite() && m >= 0.0) {
                return invalid(format!("{name} multiplier must be non-negative, got {m}"));
            }
        }
        if self.angle_grid_points == 0 || self.distance_grid_points == 0 {
            return invalid("initial grids need at least one point");
        }
        self.schedule().validate()?;
        if !(self.distance_start.is_finite() && self.distance_start >= 0.0) {
            return invalid("distance search must start at a non-negative distance");
        }
        let ct = unambiguous_range(cfg);
        if let Some(span) = self.distance_span {
            if !(span > 0.0 && span <= ct * (1.0 + 1e-12)) {
                return invalid(format!(
                    "distance span {span} m must be positive and at most the unambiguous range {ct} m"
                ));
            }
        }
        Ok(())
    }

    /// Distance search span: the configured one or the unambiguous range.
    pub fn span(&self, cfg: &WaveformConfig) -> f64 {
        self.distance_span.unwrap_or_else(|| unambiguous_range(cfg))
    }
}

/// One estimated path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathEstimate {
    pub theta_rx: f64,
    pub theta_tx: f64,
    pub distance: f64,
    pub gain: Complex64,
    /// Magnitude of the linking core entry; larger means stronger.
    pub core_energy: f64,
}

impl PathEstimate {
    pub fn to_params(&self) -> PathParams {
        PathParams {
            theta_rx: self.theta_rx,
            theta_tx: self.theta_tx,
            distance: self.distance,
            gain: self.gain,
        }
    }
}

/// Intermediate results of [`run_estimator`].
#[derive(Debug, Clone)]
pub struct Estimation {
    pub ranks: [usize; 3],
    pub subspaces: [RefinedSubspace; 3],
    /// Truncated core mapped onto the reduced dictionaries.
    pub core: Tensor3,
    /// Estimated paths, strongest first.
    pub paths: Vec<PathEstimate>,
}

/// Counts mode singular values exceeding `multiplier × median` (and the
/// relative numerical floor [`RANK_FLOOR`]); every rank is at least 1.
pub fn estimate_ranks(r: &MsvdResult, multiplier: f64) -> Result<[usize; 3]> {
    if !(multiplier.is_finite() && multiplier >= 0.0) {
        return invalid(format!("rank multiplier must be non-negative, got {multiplier}"));
    }
    Ok(Mode::ALL.map(|m| {
        let s = &r.mode_singular_values[m.axis()];
        let smax = s.iter().copied().fold(0.0, f64::max);
        let threshold = (multiplier * median(s)).max(RANK_FLOOR * smax);
        s.iter().filter(|&&v| v > threshold).count().max(1)
    }))
}

/// `core ×1 q[0] ×2 q[1] ×3 q[2]`.
pub fn transform_core(core: &Tensor3, q: [&CMatrix; 3]) -> Result<Tensor3> {
    core.mode_product(q[0], Mode::One)?
        .mode_product(q[1], Mode::Two)?
        .mode_product(q[2], Mode::Three)
}

/// Least-squares path gains for fixed angles and distances:
/// `vec(Y) ≈ (Φ ⊙ F_a ⊙ W_a) h`.
///
/// Fails when the path columns are linearly dependent, naming the paths whose
/// parameters coincide.
pub fn estimate_gains(
    y: &Tensor3,
    paths: &[PathParams],
    bf: &BeamformingMatrices,
    cfg: &WaveformConfig,
    arrays: &ArrayConfig,
) -> Result<Vec<Complex64>> {
    if paths.is_empty() {
        return invalid("no paths to estimate gains for");
    }
    check_measurement(y, cfg, arrays)?;
    let [wa, fa, phi] = path_factors(paths, bf, cfg, arrays)?;
    let a = khatri_rao(&khatri_rao(&phi, &fa)?, &wa)?;
    let b = CMatrix::from_column_slice(y.len(), 1, y.as_slice());
    match lstsq(&a, &b, momp::SUPPORT_RCOND) {
        Ok(h) => Ok(h.column(0).iter().copied().collect()),
        Err(Error::Numeric(msg)) => {
            let mut pairs = Vec::new();
            for i in 0..paths.len() {
                for j in i + 1..paths.len() {
                    let (ci, cj) = (a.column(i), a.column(j));
                    let cos = ci.dotc(&cj).norm() / (ci.norm() * cj.norm());
                    if cos > 1.0 - 1e-9 {
                        pairs.push(format!("{i}&{j}"));
                    }
                }
            }
            let who = if pairs.is_empty() {
                "estimates are linearly dependent".to_string()
            } else {
                format!("estimates {} coincide", pairs.join(", "))
            };
            Err(Error::Numeric(format!("gain least squares failed: {who} ({msg})")))
        }
        Err(e) => Err(e),
    }
}

fn check_measurement(y: &Tensor3, cfg: &WaveformConfig, arrays: &ArrayConfig) -> Result<()> {
    let expected = [arrays.l_rx, cfg.n_training, cfg.n_subcarriers];
    if y.dims() != expected {
        return invalid(format!("measurement has dims {:?}, expected {:?}", y.dims(), expected));
    }
    Ok(())
}

/// Initial receive-angle, transmit-angle and distance grids.
///
/// Angle grids have `max(angle_grid_points, 4 N)` points for an `N`-element
/// array; the distance grid has `max(distance_grid_points, 2 N_s)` points.
pub fn initial_grids(cfg: &WaveformConfig, arrays: &ArrayConfig, est: &EstimatorConfig) -> [Vec<f64>; 3] {
    let angle_points = |n: usize| est.angle_grid_points.max(4 * n);
    [
        angle_grid(angle_points(arrays.n_rx)),
        angle_grid(angle_points(arrays.n_tx)),
        distance_grid(
            est.distance_start,
            est.span(cfg),
            est.distance_grid_points.max(2 * cfg.n_subcarriers),
        ),
    ]
}

/// Full pipeline with intermediate results.
pub fn run_estimator(
    y: &Tensor3,
    bf: &BeamformingMatrices,
    cfg: &WaveformConfig,
    arrays: &ArrayConfig,
    est: &EstimatorConfig,
) -> Result<Estimation> {
    check_measurement(y, cfg, arrays)?;
    est.validate(cfg)?;
    let dec = msvd(y)?;
    let ranks = estimate_ranks(&dec, est.rank_multiplier)?;
    let reduced = truncate(&dec, ranks)?;

    let grids = initial_grids(cfg, arrays, est);
    let span = est.span(cfg);
    let bounds = [
        GridBounds::angle(),
        GridBounds::angle(),
        GridBounds::distance(est.distance_start, span),
    ];
    let schedule = est.schedule();
    let mut subspaces = Vec::with_capacity(3);
    for (k, kind) in SubspaceKind::ALL.into_iter().enumerate() {
        let source = AtomSource::new(kind, bf, cfg, arrays);
        let initial = source.build(&grids[k])?;
        let sparsity = ranks[k].min(initial.len());
        subspaces.push(refine_dictionary(
            &reduced.factors[k],
            &source,
            &initial,
            sparsity,
            &schedule,
            bounds[k],
        )?);
    }
    let subspaces: [RefinedSubspace; 3] = subspaces.try_into().expect("three subspaces");

    let core = transform_core(
        &reduced.core,
        [
            &subspaces[0].solution.transform,
            &subspaces[1].solution.transform,
            &subspaces[2].solution.transform,
        ],
    )?;
    let links = link_paths(&core, est.link_multiplier)?;
    let mut paths: Vec<PathEstimate> = links
        .iter()
        .map(|l| PathEstimate {
            theta_rx: subspaces[0].solution.values[l.support[0]],
            theta_tx: subspaces[1].solution.values[l.support[1]],
            distance: subspaces[2].solution.values[l.support[2]],
            gain: Complex64::new(0.0, 0.0),
            core_energy: l.core_energy,
        })
        .collect();
    let params: Vec<PathParams> = paths.iter().map(PathEstimate::to_params).collect();
    let gains = estimate_gains(y, &params, bf, cfg, arrays)?;
    for (p, g) in paths.iter_mut().zip(gains) {
        p.gain = g;
    }
    Ok(Estimation {
        ranks,
        subspaces,
        core,
        paths,
    })
}

/// Estimated paths (angles, distance, gain), strongest first.
pub fn estimate_channel_parameters(
    y: &Tensor3,
    bf: &BeamformingMatrices,
    cfg: &WaveformConfig,
    arrays: &ArrayConfig,
    est: &EstimatorConfig,
) -> Result<Vec<PathEstimate>> {
    run_estimator(y, bf, cfg, arrays, est).map(|e| e.paths)
}

/// Channel matrix at subcarrier `k` rebuilt from estimates.
pub fn reconstruct_channel(
    estimates: &[PathEstimate],
    k: usize,
    cfg: &WaveformConfig,
    arrays: &ArrayConfig,
) -> Result<CMatrix> {
    let params: Vec<PathParams> = estimates.iter().map(PathEstimate::to_params).collect();
    channel_matrix(&params, k, cfg, arrays)
}
