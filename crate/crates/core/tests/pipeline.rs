use chanest::channel::{
    add_noise, channel_matrix, random_beamformers, signal_tensor, ArrayConfig, BeamformingMatrices, PathParams,
    WaveformConfig,
};
use chanest::estimator::{estimate_channel_parameters, reconstruct_channel, EstimatorConfig, PathEstimate};
use chanest::harness::Scenario;
use chanest::linalg::median;
use chanest::{CMatrix, Complex64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn setup() -> (WaveformConfig, ArrayConfig, BeamformingMatrices) {
    let cfg = WaveformConfig::mmwave_60ghz(16, 10).unwrap();
    let arrays = ArrayConfig::new(11, 11, 10, 11).unwrap();
    (cfg, arrays, random_beamformers(&arrays, 21))
}

fn nearest<'a>(p: &PathParams, est: &'a [PathEstimate]) -> &'a PathEstimate {
    est.iter()
        .min_by(|a, b| (a.distance - p.distance).abs().total_cmp(&(b.distance - p.distance).abs()))
        .unwrap()
}

fn estimate(paths: &[PathParams], snr_db: Option<f64>, seed: u64) -> Vec<PathEstimate> {
    let (cfg, arrays, bf) = setup();
    let mut y = signal_tensor(paths, &bf, &cfg, &arrays).unwrap();
    if let Some(snr) = snr_db {
        y = add_noise(&y, snr, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap().0;
    }
    estimate_channel_parameters(&y, &bf, &cfg, &arrays, &EstimatorConfig::default()).unwrap()
}

#[test]
fn noiseless_default_scene_is_recovered() {
    let truth = Scenario::default_two_path().true_paths().unwrap();
    let est = estimate(&truth, None, 0);
    assert_eq!(est.len(), 2);
    for p in &truth {
        let e = nearest(p, &est);
        assert!((e.theta_rx - p.theta_rx).abs() < 1e-6);
        assert!((e.theta_tx - p.theta_tx).abs() < 1e-6);
        assert!((e.distance - p.distance).abs() < 1e-4);
        assert!((e.gain - p.gain).norm() < 1e-4);
    }
}

#[test]
fn estimating_a_reconstruction_reproduces_it() {
    let truth = Scenario::default_two_path().true_paths().unwrap();
    let first = estimate(&truth, Some(30.0), 4);
    let again: Vec<PathParams> = first.iter().map(PathEstimate::to_params).collect();
    let second = estimate(&again, None, 0);
    assert_eq!(second.len(), first.len());
    for p in &again {
        let e = nearest(p, &second);
        assert!((e.theta_rx - p.theta_rx).abs() < 1e-6);
        assert!((e.theta_tx - p.theta_tx).abs() < 1e-6);
        assert!((e.distance - p.distance).abs() < 1e-4);
    }
}

#[test]
fn paths_sharing_one_parameter_are_separated() {
    let g = |re| Complex64::new(re, 0.0);
    let cases = [
        // Same angle of arrival.
        [(0.3, -0.2, 12.0), (0.3, 0.5, 30.0)],
        // Same angle of departure.
        [(-0.4, 0.1, 15.0), (0.6, 0.1, 27.0)],
        // Same distance.
        [(0.2, 0.4, 20.0), (-0.5, -0.3, 20.0)],
    ];
    for case in cases {
        let truth: Vec<PathParams> = case
            .iter()
            .zip([g(1.0), g(0.5)])
            .map(|(&(r, t, d), h)| PathParams::new(r, t, d, h).unwrap())
            .collect();
        let est = estimate(&truth, None, 0);
        assert_eq!(est.len(), 2, "{case:?}");
        for p in &truth {
            let e = est
                .iter()
                .find(|e| {
                    (e.theta_rx - p.theta_rx).abs() < 1e-5
                        && (e.theta_tx - p.theta_tx).abs() < 1e-5
                        && (e.distance - p.distance).abs() < 1e-3
                })
                .unwrap_or_else(|| panic!("{case:?}: no estimate near {p:?} in {est:?}"));
            assert!((e.gain - p.gain).norm() < 1e-3);
        }
    }
}

#[test]
fn channel_error_shrinks_with_snr() {
    let (cfg, arrays, _) = setup();
    let truth = Scenario::default_two_path().true_paths().unwrap();
    let reference = channel_matrix(&truth, 3, &cfg, &arrays).unwrap();
    let medians: Vec<f64> = [10.0, 30.0, 50.0]
        .iter()
        .map(|&snr| {
            let errs: Vec<f64> = (0..20)
                .map(|seed| {
                    let est = estimate(&truth, Some(snr), seed);
                    let h = reconstruct_channel(&est, 3, &cfg, &arrays).unwrap();
                    (h - &reference).norm() / reference.norm()
                })
                .collect();
            median(&errs)
        })
        .collect();
    assert!(medians[0] > medians[1] && medians[1] > medians[2], "{medians:?}");
}

#[test]
fn no_estimates_give_a_zero_channel() {
    let (cfg, arrays, _) = setup();
    let h = reconstruct_channel(&[], 0, &cfg, &arrays).unwrap();
    assert_eq!(h, CMatrix::zeros(arrays.n_rx, arrays.n_tx));
}
