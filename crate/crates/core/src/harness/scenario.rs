//! Experiment description loaded from a TOML file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{
    check_frequency_nonselective, geometry_to_params, unambiguous_range, ArrayConfig, PathParams, SceneGeometry,
    WaveformConfig,
};
use crate::error::{Error, Result};
use crate::estimator::EstimatorConfig;
use crate::Complex64;

/// Carrier and bandwidth; the symbol timing follows from the subcarrier count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveformSpec {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
}

/// Array sizes and stream counts (one RF chain per stream).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySpec {
    pub n_tx: usize,
    pub n_rx: usize,
    pub l_tx: usize,
    pub l_rx: usize,
}

impl ArraySpec {
    pub fn resolve(&self) -> Result<ArrayConfig> {
        ArrayConfig::new(self.n_tx, self.n_rx, self.l_tx, self.l_rx)
    }
}

/// Which scenario list is swept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Snr,
    TrainingLength,
    Subcarriers,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Snr => "snr_db",
            SweepAxis::TrainingLength => "n_t",
            SweepAxis::Subcarriers => "n_s",
        }
    }
}

/// One resolved sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    /// Value of the swept quantity.
    pub value: f64,
    /// `+inf` means noiseless.
    pub snr_db: f64,
    pub n_t: usize,
    pub n_s: usize,
}

/// A Monte-Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    pub n_sim: usize,
    /// `inf` entries run noiseless trials.
    pub snr_db_list: Vec<f64>,
    pub n_t_list: Vec<usize>,
    pub n_s_list: Vec<usize>,
    /// One complex gain `[re, im]` per scene path.
    pub gains: Vec<Complex64>,
    pub waveform: WaveformSpec,
    pub arrays: ArraySpec,
    pub scene: SceneGeometry,
    #[serde(default)]
    pub estimator: EstimatorConfig,
}

impl Scenario {
    /// Two paths between `(0,0)` and `(20,0)` at 60 GHz, swept over SNR.
    pub fn default_two_path() -> Self {
        Self {
            seed: 1,
            n_sim: 100,
            snr_db_list: vec![20.0, 30.0, 40.0, 50.0],
            n_t_list: vec![50],
            n_s_list: vec![50],
            gains: vec![Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0)],
            waveform: WaveformSpec {
                carrier_hz: 60e9,
                bandwidth_hz: 100e6,
            },
            arrays: ArraySpec {
                n_tx: 21,
                n_rx: 11,
                l_tx: 10,
                l_rx: 11,
            },
            scene: SceneGeometry::default_two_path(),
            estimator: EstimatorConfig::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// The swept list; a scenario with every list of length one is a
    /// single-point sweep over SNR.
    pub fn axis(&self) -> Result<SweepAxis> {
        let long: Vec<SweepAxis> = [
            (SweepAxis::Snr, self.snr_db_list.len()),
            (SweepAxis::TrainingLength, self.n_t_list.len()),
            (SweepAxis::Subcarriers, self.n_s_list.len()),
        ]
        .into_iter()
        .filter(|&(_, n)| n > 1)
        .map(|(a, _)| a)
        .collect();
        match long.as_slice() {
            [] => Ok(SweepAxis::Snr),
            [a] => Ok(*a),
            _ => Err(Error::Config(format!(
                "only one of snr_db_list, n_t_list, n_s_list may have more than one entry (found {})",
                long.iter().map(|a| a.name()).collect::<Vec<_>>().join(", ")
            ))),
        }
    }

    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        let axis = self.axis()?;
        for (name, len) in [
            ("snr_db_list", self.snr_db_list.len()),
            ("n_t_list", self.n_t_list.len()),
            ("n_s_list", self.n_s_list.len()),
        ] {
            if len == 0 {
                return Err(Error::Config(format!("{name} is empty")));
            }
        }
        let base = SweepPoint {
            value: 0.0,
            snr_db: self.snr_db_list[0],
            n_t: self.n_t_list[0],
            n_s: self.n_s_list[0],
        };
        Ok(match axis {
            SweepAxis::Snr => self
                .snr_db_list
                .iter()
                .map(|&snr_db| SweepPoint { value: snr_db, snr_db, ..base })
                .collect(),
            SweepAxis::TrainingLength => self
                .n_t_list
                .iter()
                .map(|&n_t| SweepPoint { value: n_t as f64, n_t, ..base })
                .collect(),
            SweepAxis::Subcarriers => self
                .n_s_list
                .iter()
                .map(|&n_s| SweepPoint { value: n_s as f64, n_s, ..base })
                .collect(),
        })
    }

    pub fn waveform_at(&self, point: &SweepPoint) -> Result<WaveformConfig> {
        WaveformConfig::new(self.waveform.carrier_hz, point.n_s, self.waveform.bandwidth_hz, point.n_t)
    }

    /// Scene paths with the configured gains.
    pub fn true_paths(&self) -> Result<Vec<PathParams>> {
        let mut paths = geometry_to_params(&self.scene).map_err(|e| Error::Config(e.to_string()))?;
        if paths.len() != self.gains.len() {
            return Err(Error::Config(format!(
                "{} gains given for {} scene paths",
                self.gains.len(),
                paths.len()
            )));
        }
        for (p, g) in paths.iter_mut().zip(&self.gains) {
            p.gain = *g;
        }
        Ok(paths)
    }

    /// Checks everything a run needs before any trial starts.
    pub fn validate(&self) -> Result<()> {
        let cfgerr = |e: Error| match e {
            Error::InvalidArgument(m) => Error::Config(m),
            other => other,
        };
        if self.n_sim == 0 {
            return Err(Error::Config("n_sim must be at least 1".into()));
        }
        if self.scene.paths.is_empty() {
            return Err(Error::Config("scene has no paths".into()));
        }
        let arrays = self.arrays.resolve().map_err(cfgerr)?;
        let paths = self.true_paths()?;
        for p in &paths {
            p.validate().map_err(cfgerr)?;
        }
        for point in self.points()? {
            if point.snr_db.is_nan() || point.snr_db == f64::NEG_INFINITY {
                return Err(Error::Config(format!("invalid SNR {}", point.snr_db)));
            }
            let cfg = self.waveform_at(&point).map_err(cfgerr)?;
            if point.n_t < arrays.l_tx {
                return Err(Error::Config(format!(
                    "n_t = {} is shorter than the {} transmit streams",
                    point.n_t, arrays.l_tx
                )));
            }
            if !check_frequency_nonselective(&cfg, &arrays).nonselective {
                return Err(Error::Config(format!(
                    "n_s = {}: the frequency-flat gain assumption does not hold",
                    point.n_s
                )));
            }
            self.estimator.validate(&cfg).map_err(cfgerr)?;
            let start = self.estimator.distance_start;
            let end = start + self.estimator.span(&cfg);
            if let Some(p) = paths.iter().find(|p| p.distance < start || p.distance >= end) {
                return Err(Error::Config(format!(
                    "n_s = {}: path distance {:.3} m outside the searchable interval [{start}, {end:.3}) m (unambiguous range {:.3} m)",
                    point.n_s,
                    p.distance,
                    unambiguous_range(&cfg)
                )));
            }
        }
        Ok(())
    }
}
