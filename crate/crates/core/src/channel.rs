//! Multipath channel model and measurement synthesis.
//!
//! A path is fully described by its angle of arrival, angle of departure,
//! total travelled distance and complex gain. Arrays are uniform linear arrays
//! with half-wavelength spacing and an odd element count, indexed
//! symmetrically around the array centre.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::tensor::Tensor3;
use crate::{CMatrix, CVector, Complex64, SPEED_OF_LIGHT};

/// Element spacing in wavelengths.
pub const SPACING_WAVELENGTHS: f64 = 0.5;

const REL_TOL: f64 = 1e-12;

/// OFDM waveform parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveformConfig {
    /// Carrier frequency, Hz.
    pub carrier_hz: f64,
    pub n_subcarriers: usize,
    pub bandwidth_hz: f64,
    /// OFDM symbol duration, s.
    pub symbol_duration_s: f64,
    pub sampling_interval_s: f64,
    pub subcarrier_spacing_hz: f64,
    /// Training symbols per stream.
    pub n_training: usize,
}

impl WaveformConfig {
    /// Derives timing from the bandwidth: `T_s = 1/B`, `T = N_s T_s`, `Δf = 1/T`.
    pub fn new(carrier_hz: f64, n_subcarriers: usize, bandwidth_hz: f64, n_training: usize) -> Result<Self> {
        let ts = 1.0 / bandwidth_hz;
        let t = n_subcarriers as f64 * ts;
        let cfg = Self {
            carrier_hz,
            n_subcarriers,
            bandwidth_hz,
            symbol_duration_s: t,
            sampling_interval_s: ts,
            subcarrier_spacing_hz: 1.0 / t,
            n_training,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// 60 GHz carrier with 100 MHz of bandwidth; 100 subcarriers give a 1 μs symbol.
    pub fn mmwave_60ghz(n_subcarriers: usize, n_training: usize) -> Result<Self> {
        Self::new(60e9, n_subcarriers, 100e6, n_training)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.carrier_hz,
            self.bandwidth_hz,
            self.symbol_duration_s,
            self.sampling_interval_s,
            self.subcarrier_spacing_hz,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) || self.n_subcarriers == 0 || self.n_training == 0 {
            return invalid(format!("waveform quantities must be strictly positive: {self:?}"));
        }
        let close = |a: f64, b: f64| (a - b).abs() <= REL_TOL * a.abs().max(b.abs());
        if !close(self.sampling_interval_s, 1.0 / self.bandwidth_hz)
            || !close(self.symbol_duration_s, self.n_subcarriers as f64 * self.sampling_interval_s)
            || !close(self.subcarrier_spacing_hz, 1.0 / self.symbol_duration_s)
        {
            return invalid(format!("inconsistent waveform timing: {self:?}"));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }
}

/// Transmit and receive array sizes with their hybrid beamforming dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    /// Transmit data streams.
    pub l_tx: usize,
    /// Receive data streams.
    pub l_rx: usize,
    pub n_rf_tx: usize,
    pub n_rf_rx: usize,
}

impl ArrayConfig {
    /// Arrays with the given stream counts and one RF chain per stream.
    pub fn new(n_tx: usize, n_rx: usize, l_tx: usize, l_rx: usize) -> Result<Self> {
        let a = Self {
            n_tx,
            n_rx,
            l_tx,
            l_rx,
            n_rf_tx: l_tx,
            n_rf_rx: l_rx,
        };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tx % 2 == 0 || self.n_rx % 2 == 0 {
            return invalid(format!(
                "antenna counts must be odd (n_tx = {}, n_rx = {})",
                self.n_tx, self.n_rx
            ));
        }
        if self.l_tx == 0 || self.l_rx == 0 || self.l_tx > self.n_tx || self.l_rx > self.n_rx {
            return invalid(format!(
                "stream counts must satisfy 1 <= L <= N (l_tx = {}, l_rx = {})",
                self.l_tx, self.l_rx
            ));
        }
        if self.n_rf_tx == 0 || self.n_rf_rx == 0 {
            return invalid("RF chain counts must be positive");
        }
        Ok(())
    }

    /// Physical element spacing, meters.
    pub fn element_spacing(&self, carrier_hz: f64) -> f64 {
        SPACING_WAVELENGTHS * SPEED_OF_LIGHT / carrier_hz
    }
}

/// Parameters of one propagation path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathParams {
    /// Angle of arrival, radians from receiver broadside.
    pub theta_rx: f64,
    /// Angle of departure, radians from transmitter broadside.
    pub theta_tx: f64,
    /// Total path length, meters.
    pub distance: f64,
    pub gain: Complex64,
}

impl PathParams {
    pub fn new(theta_rx: f64, theta_tx: f64, distance: f64, gain: Complex64) -> Result<Self> {
        let p = Self {
            theta_rx,
            theta_tx,
            distance,
            gain,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, th) in [("theta_rx", self.theta_rx), ("theta_tx", self.theta_tx)] {
            if !(th.abs() < PI / 2.0) {
                return invalid(format!("{name} = {th} outside (-pi/2, pi/2)"));
            }
        }
        if !(self.distance.is_finite() && self.distance > 0.0) {
            return invalid(format!("path distance must be positive, got {}", self.distance));
        }
        if !(self.gain.re.is_finite() && self.gain.im.is_finite()) {
            return invalid("path gain must be finite");
        }
        Ok(())
    }

    /// Propagation delay `d / c`, seconds.
    pub fn delay(&self) -> f64 {
        self.distance / SPEED_OF_LIGHT
    }
}

/// How a path travels from transmitter to receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathGeometry {
    LineOfSight,
    /// Single-bounce path via a point reflector.
    Reflector { x: f64, y: f64 },
}

/// Planar transmitter / receiver / reflector layout.
///
/// The transmitter broadside points along `+x` rotated by `phi_tx`; the
/// receiver broadside points along `-x` rotated by `phi_rx`, so with both
/// orientations zero the two arrays face each other. Angles are measured
/// counter-clockwise from broadside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneGeometry {
    pub tx: [f64; 2],
    pub rx: [f64; 2],
    #[serde(default)]
    pub phi_tx: f64,
    #[serde(default)]
    pub phi_rx: f64,
    pub paths: Vec<PathGeometry>,
}

impl SceneGeometry {
    /// One line-of-sight path and one reflection off `(10, 7)` between
    /// `(0, 0)` and `(20, 0)`.
    pub fn default_two_path() -> Self {
        Self {
            tx: [0.0, 0.0],
            rx: [20.0, 0.0],
            phi_tx: 0.0,
            phi_rx: 0.0,
            paths: vec![PathGeometry::LineOfSight, PathGeometry::Reflector { x: 10.0, y: 7.0 }],
        }
    }
}

fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// Angles and distances of every path in the scene; gains are left at zero.
pub fn geometry_to_params(scene: &SceneGeometry) -> Result<Vec<PathParams>> {
    let [qx, qy] = scene.tx;
    let [px, py] = scene.rx;
    let link = (px - qx).hypot(py - qy);
    if !(link > 0.0) {
        return invalid("transmitter and receiver coincide");
    }
    let mut out = Vec::with_capacity(scene.paths.len());
    for (i, path) in scene.paths.iter().enumerate() {
        let [rx_, ry_] = match *path {
            PathGeometry::LineOfSight => [0.5 * (qx + px), 0.5 * (qy + py)],
            PathGeometry::Reflector { x, y } => [x, y],
        };
        let leg_tx = (rx_ - qx).hypot(ry_ - qy);
        let leg_rx = (rx_ - px).hypot(ry_ - py);
        let eps = 1e-9 * link;
        if leg_tx <= eps || leg_rx <= eps {
            return invalid(format!("path {i}: reflector coincides with an array"));
        }
        let theta_tx = wrap_angle((ry_ - qy).atan2(rx_ - qx) - scene.phi_tx);
        let theta_rx = wrap_angle((ry_ - py).atan2(rx_ - px) - PI - scene.phi_rx);
        let p = PathParams {
            theta_rx,
            theta_tx,
            distance: leg_tx + leg_rx,
            gain: Complex64::new(0.0, 0.0),
        };
        if p.theta_rx.abs() >= PI / 2.0 || p.theta_tx.abs() >= PI / 2.0 {
            return invalid(format!(
                "path {i} lies behind an array (theta_rx = {:.4}, theta_tx = {:.4})",
                p.theta_rx, p.theta_tx
            ));
        }
        out.push(p);
    }
    Ok(out)
}

/// Uniform linear array response: element `m` in `-(n-1)/2..=(n-1)/2` is
/// `exp(j 2π (a/λ) m sin θ)`.
pub fn steering_vector(theta: f64, n: usize) -> Result<CVector> {
    if n % 2 == 0 {
        return invalid(format!("array size must be odd, got {n}"));
    }
    let half = (n as i64 - 1) / 2;
    let k = 2.0 * PI * SPACING_WAVELENGTHS * theta.sin();
    Ok(CVector::from_iterator(
        n,
        (-half..=half).map(|m| Complex64::from_polar(1.0, k * m as f64)),
    ))
}

/// Receive steering vector.
pub fn steering_rx(theta: f64, n: usize) -> Result<CVector> {
    steering_vector(theta, n)
}

/// Transmit steering vector; same form as the receive side.
pub fn steering_tx(theta: f64, n: usize) -> Result<CVector> {
    steering_vector(theta, n)
}

/// Subcarrier phase signature: element `k` is `exp(-j 2π k d / (c T))`.
pub fn phase_vector(d: f64, cfg: &WaveformConfig) -> CVector {
    let step = -2.0 * PI * d / unambiguous_range(cfg);
    CVector::from_iterator(
        cfg.n_subcarriers,
        (0..cfg.n_subcarriers).map(|k| Complex64::from_polar(1.0, step * k as f64)),
    )
}

/// Distance period of the phase signature, `c T`.
pub fn unambiguous_range(cfg: &WaveformConfig) -> f64 {
    SPEED_OF_LIGHT * cfg.symbol_duration_s
}

/// Frequency-flat precoder `F` (`N_tx x L_tx`) and combiner `W` (`N_rx x L_rx`).
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingMatrices {
    pub f: CMatrix,
    pub w: CMatrix,
}

impl BeamformingMatrices {
    pub fn new(f: CMatrix, w: CMatrix, arrays: &ArrayConfig) -> Result<Self> {
        if f.shape() != (arrays.n_tx, arrays.l_tx) || w.shape() != (arrays.n_rx, arrays.l_rx) {
            return invalid(format!(
                "beamformer shapes F {:?}, W {:?} do not match arrays {arrays:?}",
                f.shape(),
                w.shape()
            ));
        }
        if f.iter().chain(w.iter()).any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return invalid("beamformer entries must be finite");
        }
        Ok(Self { f, w })
    }

    /// Entries drawn i.i.d. uniformly from `{1, -1, i, -i}`.
    pub fn random<R: Rng + ?Sized>(arrays: &ArrayConfig, rng: &mut R) -> Self {
        const ALPHABET: [Complex64; 4] = [
            Complex64::new(1.0, 0.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, -1.0),
        ];
        let f = CMatrix::from_fn(arrays.n_tx, arrays.l_tx, |_, _| ALPHABET[rng.random_range(0..4)]);
        let w = CMatrix::from_fn(arrays.n_rx, arrays.l_rx, |_, _| ALPHABET[rng.random_range(0..4)]);
        Self { f, w }
    }
}

/// Seeded quaternary-phase beamformers.
pub fn random_beamformers(arrays: &ArrayConfig, seed: u64) -> BeamformingMatrices {
    BeamformingMatrices::random(arrays, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Training matrix `X` (`L_tx x N_T`): the identity tiled along the symbol axis,
/// so symbol `t` excites stream `t mod L_tx`.
pub fn training_matrix(arrays: &ArrayConfig, cfg: &WaveformConfig) -> CMatrix {
    CMatrix::from_fn(arrays.l_tx, cfg.n_training, |l, t| {
        if t % arrays.l_tx == l {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Receive-side subspace vector `Wᴴ a_rx(θ)`.
pub fn rx_vector(theta: f64, bf: &BeamformingMatrices, arrays: &ArrayConfig) -> Result<CVector> {
    Ok(bf.w.adjoint() * steering_rx(theta, arrays.n_rx)?)
}

/// Transmit-side subspace vector `(a_tx(θ)ᴴ F X)ᵀ`, one entry per training symbol.
pub fn tx_vector(
    theta: f64,
    bf: &BeamformingMatrices,
    cfg: &WaveformConfig,
    arrays: &ArrayConfig,
) -> Result<CVector> {
    let per_stream = bf.f.transpose() * steering_tx(theta, arrays.n_tx)?.conjugate();
    Ok(CVector::from_fn(cfg.n_training, |t, _| per_stream[t % arrays.l_tx]))
}

/// Per-path factor matrices `[W_a, F_a, Φ]` with one column per path.
pub fn path_factors(
    paths: &[PathParams],
    bf: &BeamformingMatrices,
    cfg: &WaveformConfig,
    arrays: &ArrayConfig,
) -> Result<[CMatrix; 3]> {
    let np = paths.len();
    let mut wa = CMatrix::zeros(arrays.l_rx, np);
    let mut fa = CMatrix::zeros(cfg.n_training, np);
    let mut phi = CMatrix::zeros(cfg.n_subcarriers, np);
    for (n, p) in paths.iter().enumerate() {
        wa.set_column(n, &rx_vector(p.theta_rx, bf, arrays)?);
        fa.set_column(n, &tx_vector(p.theta_tx, bf, cfg, arrays)?);
        phi.set_column(n, &phase_vector(p.distance, cfg));
    }
    Ok([wa, fa, phi])
}

/// Channel matrix at subcarrier `k`: `Σ h a_rx a_txᴴ exp(-j2πk d/(cT))`.
pub fn channel_matrix(
    paths: &[PathParams],
    k: usize,
    cfg: &WaveformConfig,
    arrays: &ArrayConfig,
) -> Result<CMatrix> {
    if k >= cfg.n_subcarriers {
        return invalid(format!("subcarrier {k} out of range 0..{}", cfg.n_subcarriers));
    }
    let mut h = CMatrix::zeros(arrays.n_rx, arrays.n_tx);
    for p in paths {
        let arx = steering_rx(p.theta_rx, arrays.n_rx)?;
        let atx = steering_tx(p.theta_tx, arrays.n_tx)?;
        let phase = Complex64::from_polar(1.0, -2.0 * PI * k as f64 * p.distance / unambiguous_range(cfg));
        h += (arx * atx.adjoint()) * (p.gain * phase);
    }
    Ok(h)
}

fn check_dims(bf: &BeamformingMatrices, cfg: &WaveformConfig, arrays: &ArrayConfig) -> Result<()> {
    arrays.validate()?;
    cfg.validate()?;
    if bf.f.shape() != (arrays.n_tx, arrays.l_tx) || bf.w.shape() != (arrays.n_rx, arrays.l_rx) {
        return invalid("beamformer shapes do not match the array configuration");
    }
    if cfg.n_training < arrays.l_tx {
        return invalid(format!(
            "training length {} shorter than the {} transmit streams",
            cfg.n_training, arrays.l_tx
        ));
    }
    Ok(())
}

/// Noiseless measurement tensor `Σ h w_a ∘ f_a ∘ φ` of shape `L_rx x N_T x N_s`.
pub fn signal_tensor(
    paths: &[PathParams],
    bf: &BeamformingMatrices,
    cfg: &WaveformConfig,
    arrays: &ArrayConfig,
) -> Result<Tensor3> {
    check_dims(bf, cfg, arrays)?;
    let [wa, fa, phi] = path_factors(paths, bf, cfg, arrays)?;
    let mut y = Tensor3::zeros([arrays.l_rx, cfg.n_training, cfg.n_subcarriers]);
    for (n, p) in paths.iter().enumerate() {
        let w: Vec<Complex64> = wa.column(n).iter().map(|z| z * p.gain).collect();
        let term = Tensor3::outer(&w, fa.column(n).as_slice(), phi.column(n).as_slice());
        y = y.add(&term)?;
    }
    Ok(y)
}

/// Per-entry complex noise variance that realizes `snr_db` on `signal`.
pub fn noise_variance(signal: &Tensor3, snr_db: f64) -> f64 {
    signal.norm_sqr() / (10f64.powf(snr_db / 10.0) * signal.len() as f64)
}

/// Adds circular complex Gaussian noise rescaled so that
/// `‖signal‖² / ‖noise‖²` equals the requested SNR exactly.
///
/// Returns the noisy tensor and the per-entry noise variance.
pub fn add_noise<R: Rng + ?Sized>(signal: &Tensor3, snr_db: f64, rng: &mut R) -> Result<(Tensor3, f64)> {
    if !snr_db.is_finite() {
        return invalid("SNR must be finite");
    }
    let sigma2 = noise_variance(signal, snr_db);
    let raw: Vec<Complex64> = (0..signal.len())
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im)
        })
        .collect();
    let raw_energy: f64 = raw.iter().map(|z| z.norm_sqr()).sum();
    let target = sigma2 * signal.len() as f64;
    let scale = if raw_energy > 0.0 { (target / raw_energy).sqrt() } else { 0.0 };
    let noise = Tensor3::from_vec(signal.dims(), raw.into_iter().map(|z| z * scale).collect())?;
    Ok((signal.add(&noise)?, sigma2))
}

/// Measurement tensor for the given paths; `snr_db = None` gives the noiseless signal.
pub fn synthesize_measurement<R: Rng + ?Sized>(
    paths: &[PathParams],
    bf: &BeamformingMatrices,
    cfg: &WaveformConfig,
    arrays: &ArrayConfig,
    snr_db: Option<f64>,
    rng: &mut R,
) -> Result<Tensor3> {
    let signal = signal_tensor(paths, bf, cfg, arrays)?;
    match snr_db {
        None => Ok(signal),
        Some(snr) => add_noise(&signal, snr, rng).map(|(y, _)| y),
    }
}

/// Outcome of the dispersion check `N_rx N_s / (2T) < f_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencySelectivity {
    pub nonselective: bool,
    /// `N_rx N_s / (2T)`, Hz.
    pub dispersion_term_hz: f64,
    /// Dispersion term divided by the carrier frequency; below one is valid.
    pub ratio: f64,
}

/// Whether the frequency-flat path-gain assumption holds for this waveform and array.
pub fn check_frequency_nonselective(cfg: &WaveformConfig, arrays: &ArrayConfig) -> FrequencySelectivity {
    let term = arrays.n_rx as f64 * cfg.n_subcarriers as f64 / (2.0 * cfg.symbol_duration_s);
    FrequencySelectivity {
        nonselective: term < cfg.carrier_hz,
        dispersion_term_hz: term,
        ratio: term / cfg.carrier_hz,
    }
}

impl From<FrequencySelectivity> for bool {
    fn from(f: FrequencySelectivity) -> bool {
        f.nonselective
    }
}
