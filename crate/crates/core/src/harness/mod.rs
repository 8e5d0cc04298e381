//! Monte-Carlo experiment runner.
//!
//! Every trial draws its beamformers and then its noise from a generator
//! seeded with `seed ^ trial`, so all sweep points share the same random
//! draws and any trial can be replayed on its own.

mod output;
mod scenario;

pub use output::{emit_results, read_results_csv, CsvRow, CSV_HEADER};
pub use scenario::{ArraySpec, Scenario, SweepAxis, SweepPoint, WaveformSpec};

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{add_noise, signal_tensor, ArrayConfig, BeamformingMatrices, PathParams, WaveformConfig};
use crate::crb::{crb_bounds, ParamVector};
use crate::error::{invalid, Error, Result};
use crate::estimator::{estimate_channel_parameters, PathEstimate};

/// Environment variable capping the number of worker threads.
pub const WORKERS_ENV: &str = "CHANEST_WORKERS";

/// Per-path quantities reported by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parameter {
    ThetaRx,
    ThetaTx,
    Distance,
    Gain,
}

impl Parameter {
    pub const ALL: [Parameter; 4] = [Parameter::ThetaRx, Parameter::ThetaTx, Parameter::Distance, Parameter::Gain];

    pub fn name(self) -> &'static str {
        match self {
            Parameter::ThetaRx => "theta_rx",
            Parameter::ThetaTx => "theta_tx",
            Parameter::Distance => "distance",
            Parameter::Gain => "gain",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Root mean square of the accumulated errors.
pub fn compute_rmse(errors: &[f64]) -> Result<f64> {
    if errors.is_empty() {
        return invalid("no errors accumulated");
    }
    Ok((errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt())
}

/// Statistics of one parameter of one path at one sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterStats {
    pub parameter: Parameter,
    pub path_index: usize,
    /// RMSE over the trials in which the path was matched; NaN if it never was.
    pub rmse: f64,
    /// Root of the trial-averaged squared bound; 0 for noiseless points.
    pub crb: f64,
    /// Trials contributing to `rmse`.
    pub n_matched: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub point: SweepPoint,
    /// Fraction of trials with at least as many estimates as paths and every
    /// true path matched.
    pub detection_rate: f64,
    pub n_sim: usize,
    /// Ordered by parameter, then path.
    pub stats: Vec<ParameterStats>,
}

impl PointResult {
    pub fn get(&self, parameter: Parameter, path_index: usize) -> Option<&ParameterStats> {
        self.stats
            .iter()
            .find(|s| s.parameter == parameter && s.path_index == path_index)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub scenario: Scenario,
    pub points: Vec<PointResult>,
}

/// CRB-only view of a sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct CrbPoint {
    pub point: SweepPoint,
    /// Per path, bounds in [`Parameter::ALL`] order, same averaging as [`PointResult`].
    pub bounds: Vec<[f64; 4]>,
}

/// Pairs true paths with estimates by minimum total normalized squared
/// distance (angles over π, distance over `distance_scale`).
///
/// Returns, per true path, the index of its estimate; with fewer estimates
/// than paths some entries are `None`.
pub fn match_paths(truth: &[PathParams], estimates: &[PathEstimate], distance_scale: f64) -> Vec<Option<usize>> {
    let cost = |t: &PathParams, e: &PathEstimate| {
        ((t.theta_rx - e.theta_rx) / PI).powi(2)
            + ((t.theta_tx - e.theta_tx) / PI).powi(2)
            + ((t.distance - e.distance) / distance_scale).powi(2)
    };
    let costs: Vec<Vec<f64>> = truth.iter().map(|t| estimates.iter().map(|e| cost(t, e)).collect()).collect();
    let n_assign = truth.len().min(estimates.len());
    let mut best: (f64, Vec<Option<usize>>) = (f64::INFINITY, vec![None; truth.len()]);
    let mut current = vec![None; truth.len()];
    let mut used = vec![false; estimates.len()];
    search(&costs, 0, n_assign, 0, 0.0, &mut current, &mut used, &mut best);
    best.1
}

/// Exhaustive assignment: every true path is either given an unused
/// estimate or skipped, with exactly `n_assign` assignments in total.
#[allow(clippy::too_many_arguments)]
fn search(
    costs: &[Vec<f64>],
    row: usize,
    n_assign: usize,
    assigned: usize,
    acc: f64,
    current: &mut Vec<Option<usize>>,
    used: &mut Vec<bool>,
    best: &mut (f64, Vec<Option<usize>>),
) {
    if acc >= best.0 {
        return;
    }
    if row == costs.len() {
        if assigned == n_assign {
            *best = (acc, current.clone());
        }
        return;
    }
    let remaining_rows = costs.len() - row;
    if assigned + remaining_rows < n_assign {
        return;
    }
    for j in 0..used.len() {
        if used[j] {
            continue;
        }
        used[j] = true;
        current[row] = Some(j);
        search(costs, row + 1, n_assign, assigned + 1, acc + costs[row][j], current, used, best);
        used[j] = false;
        current[row] = None;
    }
    if assigned + remaining_rows > n_assign {
        search(costs, row + 1, n_assign, assigned, acc, current, used, best);
    }
}

/// Worker count from [`WORKERS_ENV`]; `None` leaves the choice to rayon.
pub fn worker_limit() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = worker_limit()? {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

struct TrialSetup {
    bf: BeamformingMatrices,
    y: crate::tensor::Tensor3,
    sigma2: f64,
}

fn trial_setup(
    s: &Scenario,
    trial: usize,
    point: &SweepPoint,
    truth: &[PathParams],
    cfg: &WaveformConfig,
    arrays: &ArrayConfig,
) -> Result<TrialSetup> {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed ^ trial as u64);
    let bf = BeamformingMatrices::random(arrays, &mut rng);
    let signal = signal_tensor(truth, &bf, cfg, arrays)?;
    let (y, sigma2) = if point.snr_db.is_finite() {
        add_noise(&signal, point.snr_db, &mut rng)?
    } else {
        (signal, 0.0)
    };
    Ok(TrialSetup { bf, y, sigma2 })
}

/// Squared bounds per path in [`Parameter::ALL`] order; the gain bound covers both the real
/// and imaginary part.
fn squared_bounds(
    truth: &[PathParams],
    setup: &TrialSetup,
    cfg: &WaveformConfig,
    arrays: &ArrayConfig,
) -> Result<Vec<[f64; 4]>> {
    let np = truth.len();
    if setup.sigma2 == 0.0 {
        return Ok(vec![[0.0; 4]; np]);
    }
    let params = ParamVector {
        paths: truth.to_vec(),
        complex_gains: true,
    };
    let report = match crb_bounds(&params, &setup.bf, cfg, arrays, setup.sigma2) {
        Ok(r) => r,
        Err(Error::SingularFim { .. }) => return Ok(vec![[f64::INFINITY; 4]; np]),
        Err(e) => return Err(e),
    };
    let b = &report.bounds;
    Ok((0..np)
        .map(|n| {
            [
                b[n].powi(2),
                b[np + n].powi(2),
                b[2 * np + n].powi(2),
                b[3 * np + n].powi(2) + b[4 * np + n].powi(2),
            ]
        })
        .collect())
}

struct TrialOutcome {
    detected: bool,
    /// Per true path: errors `[parameter]` if matched.
    errors: Vec<Option<[f64; 4]>>,
    bounds_sq: Vec<[f64; 4]>,
}

fn run_trial(
    s: &Scenario,
    trial: usize,
    point: &SweepPoint,
    truth: &[PathParams],
    cfg: &WaveformConfig,
    arrays: &ArrayConfig,
) -> Result<TrialOutcome> {
    let setup = trial_setup(s, trial, point, truth, cfg, arrays)?;
    let bounds_sq = squared_bounds(truth, &setup, cfg, arrays)?;
    let estimates = match estimate_channel_parameters(&setup.y, &setup.bf, cfg, arrays, &s.estimator) {
        Ok(e) => e,
        // a degenerate estimate set is a missed detection, not a failed run
        Err(Error::Numeric(_)) => Vec::new(),
        Err(e) => return Err(e),
    };
    let assignment = match_paths(truth, &estimates, s.estimator.span(cfg));
    let errors: Vec<Option<[f64; 4]>> = truth
        .iter()
        .zip(&assignment)
        .map(|(t, m)| {
            m.map(|j| {
                let e = &estimates[j];
                [
                    e.theta_rx - t.theta_rx,
                    e.theta_tx - t.theta_tx,
                    e.distance - t.distance,
                    (e.gain - t.gain).norm(),
                ]
            })
        })
        .collect();
    let detected = estimates.len() >= truth.len() && errors.iter().all(Option::is_some);
    Ok(TrialOutcome {
        detected,
        errors,
        bounds_sq,
    })
}

fn summarize(point: SweepPoint, n_sim: usize, np: usize, outcomes: &[TrialOutcome]) -> Result<PointResult> {
    let detection_rate = outcomes.iter().filter(|o| o.detected).count() as f64 / n_sim as f64;
    let mut stats = Vec::with_capacity(4 * np);
    for parameter in Parameter::ALL {
        let k = parameter.index();
        for n in 0..np {
            let errs: Vec<f64> = outcomes.iter().filter_map(|o| o.errors[n].map(|e| e[k])).collect();
            let rmse = if errs.is_empty() { f64::NAN } else { compute_rmse(&errs)? };
            let crb = (outcomes.iter().map(|o| o.bounds_sq[n][k]).sum::<f64>() / n_sim as f64).sqrt();
            stats.push(ParameterStats {
                parameter,
                path_index: n,
                rmse,
                crb,
                n_matched: errs.len(),
            });
        }
    }
    Ok(PointResult {
        point,
        detection_rate,
        n_sim,
        stats,
    })
}

/// Runs every sweep point of a validated scenario. Deterministic in the seed.
pub fn run_scenario(s: &Scenario) -> Result<SweepResult> {
    s.validate()?;
    let axis = s.axis()?;
    let arrays = s.arrays.resolve()?;
    let truth = s.true_paths()?;
    let mut points = Vec::new();
    for point in s.points()? {
        let cfg = s.waveform_at(&point)?;
        let outcomes: Vec<Result<TrialOutcome>> = with_pool(|| {
            (0..s.n_sim)
                .into_par_iter()
                .map(|trial| run_trial(s, trial, &point, &truth, &cfg, &arrays))
                .collect()
        })?;
        let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
        points.push(summarize(point, s.n_sim, truth.len(), &outcomes)?);
    }
    Ok(SweepResult {
        axis,
        scenario: s.clone(),
        points,
    })
}

/// Bounds at every sweep point, averaged over the same per-trial beamformers
/// and noise levels [`run_scenario`] uses, without running the estimator.
pub fn crb_sweep(s: &Scenario) -> Result<Vec<CrbPoint>> {
    s.validate()?;
    let arrays = s.arrays.resolve()?;
    let truth = s.true_paths()?;
    let np = truth.len();
    let mut out = Vec::new();
    for point in s.points()? {
        let cfg = s.waveform_at(&point)?;
        let per_trial: Vec<Result<Vec<[f64; 4]>>> = with_pool(|| {
            (0..s.n_sim)
                .into_par_iter()
                .map(|trial| {
                    let setup = trial_setup(s, trial, &point, &truth, &cfg, &arrays)?;
                    squared_bounds(&truth, &setup, &cfg, &arrays)
                })
                .collect()
        })?;
        let per_trial = per_trial.into_iter().collect::<Result<Vec<_>>>()?;
        let bounds = (0..np)
            .map(|n| {
                let mut b = [0.0; 4];
                for (k, slot) in b.iter_mut().enumerate() {
                    *slot = (per_trial.iter().map(|t| t[n][k]).sum::<f64>() / s.n_sim as f64).sqrt();
                }
                b
            })
            .collect();
        out.push(CrbPoint { point, bounds });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Complex64;

    fn est(theta_rx: f64, theta_tx: f64, distance: f64) -> PathEstimate {
        PathEstimate {
            theta_rx,
            theta_tx,
            distance,
            gain: Complex64::new(0.0, 0.0),
            core_energy: 1.0,
        }
    }

    fn truth() -> Vec<PathParams> {
        vec![
            PathParams::new(0.0, 0.0, 20.0, Complex64::new(1.0, 0.0)).unwrap(),
            PathParams::new(-0.6, 0.6, 24.4, Complex64::new(0.5, 0.0)).unwrap(),
        ]
    }

    #[test]
    fn rmse_formula() {
        assert_eq!(compute_rmse(&[-2.5]).unwrap(), 2.5);
        assert!((compute_rmse(&[3.0, 4.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(compute_rmse(&[0.0, 0.0]).unwrap(), 0.0);
        assert!(compute_rmse(&[]).is_err());
    }

    #[test]
    fn matching_permutes_and_handles_counts() {
        let t = truth();
        let e = vec![est(-0.59, 0.61, 24.3), est(0.01, 0.0, 20.1)];
        assert_eq!(match_paths(&t, &e, 150.0), vec![Some(1), Some(0)]);
        let e1 = vec![est(-0.59, 0.61, 24.3)];
        assert_eq!(match_paths(&t, &e1, 150.0), vec![None, Some(0)]);
        let e3 = vec![est(1.0, 1.0, 90.0), est(-0.6, 0.6, 24.4), est(0.0, 0.0, 20.0)];
        assert_eq!(match_paths(&t, &e3, 150.0), vec![Some(2), Some(1)]);
        assert_eq!(match_paths(&t, &[], 150.0), vec![None, None]);
    }

    #[test]
    fn matching_equals_brute_force_on_random_sets() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let t: Vec<PathParams> = (0..3)
                .map(|_| {
                    PathParams::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(1.0..100.0),
                        Complex64::new(1.0, 0.0),
                    )
                    .unwrap()
                })
                .collect();
            let e: Vec<PathEstimate> = (0..4)
                .map(|_| est(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(1.0..100.0)))
                .collect();
            let got = match_paths(&t, &e, 100.0);
            let cost = |a: &[Option<usize>]| -> f64 {
                a.iter()
                    .zip(&t)
                    .map(|(j, p)| {
                        let e = &e[j.unwrap()];
                        ((p.theta_rx - e.theta_rx) / PI).powi(2)
                            + ((p.theta_tx - e.theta_tx) / PI).powi(2)
                            + ((p.distance - e.distance) / 100.0).powi(2)
                    })
                    .sum()
            };
            let mut best = f64::INFINITY;
            for a in 0..4 {
                for b in 0..4 {
                    for c in 0..4 {
                        if a != b && b != c && a != c {
                            best = best.min(cost(&[Some(a), Some(b), Some(c)]));
                        }
                    }
                }
            }
            assert!((cost(&got) - best).abs() < 1e-15);
        }
    }

    fn small_scenario() -> Scenario {
        let mut s = Scenario::default_two_path();
        s.arrays = ArraySpec {
            n_tx: 9,
            n_rx: 7,
            l_tx: 4,
            l_rx: 5,
        };
        s.n_t_list = vec![8];
        s.n_s_list = vec![16];
        s.snr_db_list = vec![10.0, 30.0];
        s.n_sim = 6;
        s
    }

    #[test]
    fn noiseless_run_has_zero_error() {
        let mut s = small_scenario();
        s.snr_db_list = vec![f64::INFINITY];
        s.n_sim = 2;
        let r = run_scenario(&s).unwrap();
        let p = &r.points[0];
        assert_eq!(p.detection_rate, 1.0);
        for st in &p.stats {
            assert_eq!(st.crb, 0.0);
            assert!(st.rmse < 1e-3, "{st:?}");
        }
    }

    #[test]
    fn runs_are_deterministic_and_consistent_with_crb_sweep() {
        let s = small_scenario();
        let a = run_scenario(&s).unwrap();
        let b = run_scenario(&s).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.points.len(), 2);
        let crb = crb_sweep(&s).unwrap();
        for (p, c) in a.points.iter().zip(&crb) {
            for st in &p.stats {
                assert_eq!(st.crb, c.bounds[st.path_index][st.parameter.index()]);
            }
        }
        // higher SNR tightens the bound
        let lo = a.points[0].get(Parameter::ThetaRx, 0).unwrap().crb;
        let hi = a.points[1].get(Parameter::ThetaRx, 0).unwrap().crb;
        assert!(hi < lo);
    }

    #[test]
    fn invalid_scenario_fails_before_trials() {
        let mut s = small_scenario();
        s.n_sim = 0;
        assert!(matches!(run_scenario(&s), Err(Error::Config(_))));
    }
}
