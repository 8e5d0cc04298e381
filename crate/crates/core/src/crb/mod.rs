//! Cramér–Rao bound on channel parameter estimates.
//!
//! The vectorized noiseless measurement is `X(θ) = (Φ ⊙ F_a ⊙ W_a) h`. Its
//! Jacobian is assembled block by block from the rearrangements
//!
//! ```text
//! X = [(Φ' ⊙ F_a) ⊗ I_Lrx] vec(W_a)
//!   = K_{T·Ns, Lrx} [(W_a ⊙ Φ') ⊗ I_T] vec(F_a)
//!   = K_{Ns, Lrx·T} [(F_a ⊙ W_a) ⊗ I_Ns] vec(Φ')
//! ```
//!
//! with `Φ' = Φ Diag(h)` carrying the gains exactly once, and
//! `vec(Φ') = (I ⊙ Φ) h` for the gain block.

pub mod products;

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

pub use products::{commutation_matrix, khatri_rao, kron, kron_identity_apply, CommutationMatrix};

use crate::channel::{
    path_factors, steering_vector, unambiguous_range, ArrayConfig, BeamformingMatrices, PathParams,
    WaveformConfig, SPACING_WAVELENGTHS,
};
use crate::error::{invalid, Error, Result};
use crate::{CMatrix, CVector, Complex64};

/// Ordered parameter set `[θ_rx; θ_tx; d; h]`.
///
/// Gains are real unless some path has a non-zero imaginary gain, in which
/// case every gain contributes a real and an imaginary coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    pub paths: Vec<PathParams>,
    pub complex_gains: bool,
}

impl ParamVector {
    pub fn new(paths: Vec<PathParams>) -> Self {
        let complex_gains = paths.iter().any(|p| p.gain.im != 0.0);
        Self { paths, complex_gains }
    }

    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    /// Number of real coordinates: `4 N_p`, or `5 N_p` with complex gains.
    pub fn len(&self) -> usize {
        self.n_paths() * if self.complex_gains { 5 } else { 4 }
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend(self.paths.iter().map(|p| p.theta_rx));
        v.extend(self.paths.iter().map(|p| p.theta_tx));
        v.extend(self.paths.iter().map(|p| p.distance));
        v.extend(self.paths.iter().map(|p| p.gain.re));
        if self.complex_gains {
            v.extend(self.paths.iter().map(|p| p.gain.im));
        }
        v
    }

    /// Inverse of [`ParamVector::values`].
    pub fn with_values(&self, values: &[f64]) -> Result<Self> {
        if values.len() != self.len() {
            return invalid(format!("expected {} values, got {}", self.len(), values.len()));
        }
        let np = self.n_paths();
        let paths = (0..np)
            .map(|n| PathParams {
                theta_rx: values[n],
                theta_tx: values[np + n],
                distance: values[2 * np + n],
                gain: Complex64::new(
                    values[3 * np + n],
                    if self.complex_gains { values[4 * np + n] } else { 0.0 },
                ),
            })
            .collect();
        Ok(Self {
            paths,
            complex_gains: self.complex_gains,
        })
    }

    /// Human-readable coordinate names, e.g. `theta_rx[0]`.
    pub fn labels(&self) -> Vec<String> {
        let np = self.n_paths();
        let mut names = Vec::with_capacity(self.len());
        for base in ["theta_rx", "theta_tx", "d"] {
            names.extend((0..np).map(|n| format!("{base}[{n}]")));
        }
        if self.complex_gains {
            names.extend((0..np).map(|n| format!("re_h[{n}]")));
            names.extend((0..np).map(|n| format!("im_h[{n}]")));
        } else {
            names.extend((0..np).map(|n| format!("h[{n}]")));
        }
        names
    }
}

/// Fisher information and the resulting per-coordinate RMSE bounds.
#[derive(Debug, Clone)]
pub struct CrbReport {
    pub fim: DMatrix<f64>,
    /// Square roots of the diagonal of the inverse FIM, in [`ParamVector`] order.
    pub bounds: Vec<f64>,
    pub sigma2: f64,
    pub labels: Vec<String>,
}

impl CrbReport {
    pub fn bound(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.bounds[i])
    }
}

/// `∂a(θ)/∂θ` for the half-wavelength uniform linear array.
pub fn steering_derivative(theta: f64, n: usize) -> Result<CVector> {
    let a = steering_vector(theta, n)?;
    let half = (n as f64 - 1.0) / 2.0;
    let k = 2.0 * PI * SPACING_WAVELENGTHS * theta.cos();
    Ok(CVector::from_fn(n, |i, _| {
        Complex64::new(0.0, k * (i as f64 - half)) * a[i]
    }))
}

/// `∂φ(d)/∂d`.
pub fn phase_derivative(d: f64, cfg: &WaveformConfig) -> CVector {
    let phi = crate::channel::phase_vector(d, cfg);
    let step = -2.0 * PI / unambiguous_range(cfg);
    CVector::from_fn(cfg.n_subcarriers, |k, _| Complex64::new(0.0, step * k as f64) * phi[k])
}

/// Noiseless vectorized measurement `(Φ ⊙ F_a ⊙ W_a) h`.
pub fn signal_mean(
    params: &ParamVector,
    bf: &BeamformingMatrices,
    cfg: &WaveformConfig,
    arrays: &ArrayConfig,
) -> Result<CVector> {
    let [wa, fa, phi] = path_factors(&params.paths, bf, cfg, arrays)?;
    let a = khatri_rao(&khatri_rao(&phi, &fa)?, &wa)?;
    let h = CVector::from_iterator(params.n_paths(), params.paths.iter().map(|p| p.gain));
    Ok(a * h)
}

fn vec_of(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

/// Matrix with a single non-zero column `n`.
fn single_column(rows: usize, cols: usize, n: usize, col: &CVector) -> CMatrix {
    let mut m = CMatrix::zeros(rows, cols);
    m.set_column(n, col);
    m
}

/// Jacobian of [`signal_mean`] with columns in [`ParamVector`] order.
pub fn jacobian(
    params: &ParamVector,
    bf: &BeamformingMatrices,
    cfg: &WaveformConfig,
    arrays: &ArrayConfig,
) -> Result<CMatrix> {
    let np = params.n_paths();
    let (lrx, nt, ns) = (arrays.l_rx, cfg.n_training, cfg.n_subcarriers);
    let rows = lrx * nt * ns;
    let [wa, fa, phi] = path_factors(&params.paths, bf, cfg, arrays)?;
    let gains = CVector::from_iterator(np, params.paths.iter().map(|p| p.gain));
    let phi_g = &phi * CMatrix::from_diagonal(&gains);

    let mut jac = CMatrix::zeros(rows, params.len());
    let check = |v: &CVector| -> Result<()> {
        if v.len() != rows {
            return Err(Error::Numeric(format!(
                "Jacobian column has {} rows, expected {rows}",
                v.len()
            )));
        }
        Ok(())
    };

    // θ_rx: [(Φ' ⊙ F_a) ⊗ I] ∂vec(W_a)
    let b1 = khatri_rao(&phi_g, &fa)?;
    for (n, p) in params.paths.iter().enumerate() {
        let dw = bf.w.adjoint() * steering_derivative(p.theta_rx, arrays.n_rx)?;
        let col = kron_identity_apply(&b1, lrx, &vec_of(&single_column(lrx, np, n, &dw)))?;
        check(&col)?;
        jac.set_column(n, &col);
    }

    // θ_tx: K_{T Ns, Lrx} [(W_a ⊙ Φ') ⊗ I_T] ∂vec(F_a)
    let b2 = khatri_rao(&wa, &phi_g)?;
    let k2 = commutation_matrix(nt * ns, lrx)?;
    for (n, p) in params.paths.iter().enumerate() {
        let per_stream = bf.f.transpose() * steering_derivative(p.theta_tx, arrays.n_tx)?.conjugate();
        let df = CVector::from_fn(nt, |t, _| per_stream[t % arrays.l_tx]);
        let inner = kron_identity_apply(&b2, nt, &vec_of(&single_column(nt, np, n, &df)))?;
        let col = k2.apply(&inner)?;
        check(&col)?;
        jac.set_column(np + n, &col);
    }

    // d and h: K_{Ns, Lrx T} [(F_a ⊙ W_a) ⊗ I_Ns] ∂vec(Φ')
    let b3 = khatri_rao(&fa, &wa)?;
    let k3 = commutation_matrix(ns, lrx * nt)?;
    for (n, p) in params.paths.iter().enumerate() {
        let dphi = phase_derivative(p.distance, cfg) * p.gain;
        let inner = kron_identity_apply(&b3, ns, &vec_of(&single_column(ns, np, n, &dphi)))?;
        let col = k3.apply(&inner)?;
        check(&col)?;
        jac.set_column(2 * np + n, &col);
    }

    // ∂vec(Φ')/∂h_n = (I ⊙ Φ) e_n
    let sel = khatri_rao(&CMatrix::identity(np, np), &phi)?;
    for n in 0..np {
        let inner = kron_identity_apply(&b3, ns, &sel.column(n).into_owned())?;
        let col = k3.apply(&inner)?;
        check(&col)?;
        jac.set_column(3 * np + n, &col);
        if params.complex_gains {
            jac.set_column(4 * np + n, &(col * Complex64::new(0.0, 1.0)));
        }
    }
    Ok(jac)
}

/// Fisher information `(2/σ²) Re{JᴴJ}` for circular complex Gaussian noise of
/// per-entry variance `σ²`, and the bounds `sqrt(diag(I⁻¹))`.
pub fn crb_bounds(
    params: &ParamVector,
    bf: &BeamformingMatrices,
    cfg: &WaveformConfig,
    arrays: &ArrayConfig,
    sigma2: f64,
) -> Result<CrbReport> {
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return invalid(format!("noise variance must be positive, got {sigma2}"));
    }
    if params.is_empty() {
        return invalid("no paths");
    }
    let j = jacobian(params, bf, cfg, arrays)?;
    let gram = j.adjoint() * &j;
    let fim = gram.map(|z| 2.0 * z.re / sigma2);
    let fim = (&fim + fim.transpose()) * 0.5;
    let labels = params.labels();

    // Identifiability is judged on the unit-diagonal form so that the mixed
    // units of angles, meters and gains do not matter.
    let diag: Vec<f64> = (0..fim.nrows()).map(|i| fim[(i, i)]).collect();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::SingularFim {
            directions: format!("{} carries no information", labels[i]),
        });
    }
    let scale = DMatrix::from_fn(fim.nrows(), fim.ncols(), |r, c| 1.0 / (diag[r] * diag[c]).sqrt());
    let normalized = fim.component_mul(&scale);
    let eig = SymmetricEigen::new(normalized.clone());
    const NULL_TOL: f64 = 1e-10;
    let null: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] < NULL_TOL)
        .collect();
    if !null.is_empty() {
        let directions = null
            .iter()
            .map(|&i| {
                let v = eig.eigenvectors.column(i);
                let mut parts: Vec<(usize, f64)> = v.iter().map(|x| x.abs()).enumerate().collect();
                parts.sort_by(|a, b| b.1.total_cmp(&a.1));
                let names: Vec<String> = parts
                    .iter()
                    .take_while(|(_, w)| *w > 0.2)
                    .map(|(k, w)| format!("{} ({w:.2})", labels[*k]))
                    .collect();
                format!("[{}]", names.join(", "))
            })
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::SingularFim { directions });
    }
    let inv_normalized = normalized
        .cholesky()
        .ok_or_else(|| Error::SingularFim {
            directions: "Cholesky factorization failed".into(),
        })?
        .inverse();
    let bounds = (0..fim.nrows())
        .map(|i| (inv_normalized[(i, i)] / diag[i]).max(0.0).sqrt())
        .collect();
    Ok(CrbReport {
        fim,
        bounds,
        sigma2,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{random_beamformers, signal_tensor};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn setup() -> (WaveformConfig, ArrayConfig, BeamformingMatrices, ParamVector) {
        let cfg = WaveformConfig::mmwave_60ghz(8, 6).unwrap();
        let arrays = ArrayConfig::new(7, 5, 3, 4).unwrap();
        let bf = random_beamformers(&arrays, 21);
        let params = ParamVector::new(vec![
            PathParams::new(0.3, -0.2, 12.0, c(1.0, 0.0)).unwrap(),
            PathParams::new(-0.6, 0.5, 19.0, c(0.5, 0.0)).unwrap(),
        ]);
        (cfg, arrays, bf, params)
    }

    #[test]
    fn steering_derivative_cases() {
        assert!(steering_derivative(PI / 2.0, 5).unwrap().camax() < 1e-15);
        for th in [-1.0, 0.0, 0.4] {
            let d = steering_derivative(th, 7).unwrap();
            assert_eq!(d[3], c(0.0, 0.0));
            let h = 1e-6;
            let fd = (steering_vector(th + h, 7).unwrap() - steering_vector(th - h, 7).unwrap()) / c(2.0 * h, 0.0);
            assert!((fd - &d).norm() <= 1e-6 * d.norm().max(1e-12));
        }
    }

    #[test]
    fn phase_derivative_cases() {
        let cfg = WaveformConfig::mmwave_60ghz(6, 1).unwrap();
        let range = unambiguous_range(&cfg);
        let d0 = phase_derivative(0.0, &cfg);
        for k in 0..6 {
            assert!((d0[k] - c(0.0, -2.0 * PI * k as f64 / range)).norm() < 1e-15);
        }
        let d = phase_derivative(37.0, &cfg);
        assert_eq!(d[0], c(0.0, 0.0));
        let h = 1e-4;
        let fd = (crate::channel::phase_vector(37.0 + h, &cfg) - crate::channel::phase_vector(37.0 - h, &cfg))
            / c(2.0 * h, 0.0);
        assert!((fd - &d).norm() <= 1e-6 * d.norm());
    }

    #[test]
    fn signal_mean_matches_channel_model() {
        let (cfg, arrays, bf, params) = setup();
        let x = signal_mean(&params, &bf, &cfg, &arrays).unwrap();
        let y = signal_tensor(&params.paths, &bf, &cfg, &arrays).unwrap();
        let diff = (x - CVector::from_column_slice(y.as_slice())).norm();
        assert!(diff < 1e-10 * y.frobenius_norm());

        let mut zero = params.clone();
        for p in &mut zero.paths {
            p.gain = c(0.0, 0.0);
        }
        assert_eq!(signal_mean(&zero, &bf, &cfg, &arrays).unwrap().norm(), 0.0);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let (cfg, arrays, bf, params) = setup();
        let j = jacobian(&params, &bf, &cfg, &arrays).unwrap();
        let base = params.values();
        let np = params.n_paths();
        for col in 0..params.len() {
            let h = if (2 * np..3 * np).contains(&col) { 1e-4 } else { 1e-6 };
            let mut up = base.clone();
            let mut dn = base.clone();
            up[col] += h;
            dn[col] -= h;
            let fu = signal_mean(&params.with_values(&up).unwrap(), &bf, &cfg, &arrays).unwrap();
            let fd = signal_mean(&params.with_values(&dn).unwrap(), &bf, &cfg, &arrays).unwrap();
            let numeric = (fu - fd) / c(2.0 * h, 0.0);
            let analytic = j.column(col);
            let rel = (numeric - analytic).norm() / analytic.norm();
            assert!(rel < 1e-5, "column {col}: relative error {rel}");
        }
    }

    #[test]
    fn jacobian_gain_linearity() {
        let (cfg, arrays, bf, params) = setup();
        let j = jacobian(&params, &bf, &cfg, &arrays).unwrap();
        let np = params.n_paths();
        for n in 0..np {
            let mut single = ParamVector::new(vec![params.paths[n]]);
            single.paths[0].gain = c(1.0, 0.0);
            let x = signal_mean(&single, &bf, &cfg, &arrays).unwrap();
            assert!((j.column(3 * np + n) - x).norm() < 1e-12 * j.column(3 * np + n).norm());
        }
        let mut doubled = params.clone();
        doubled.paths[0].gain *= 2.0;
        let j2 = jacobian(&doubled, &bf, &cfg, &arrays).unwrap();
        assert!((j2.column(0).norm() / j.column(0).norm() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn complex_gains_add_imaginary_columns() {
        let (cfg, arrays, bf, mut params) = setup();
        params.paths[1].gain = c(0.3, -0.4);
        let params = ParamVector::new(params.paths);
        assert!(params.complex_gains);
        assert_eq!(params.len(), 10);
        let j = jacobian(&params, &bf, &cfg, &arrays).unwrap();
        let base = params.values();
        for col in 6..10 {
            let h = 1e-6;
            let mut up = base.clone();
            let mut dn = base.clone();
            up[col] += h;
            dn[col] -= h;
            let fu = signal_mean(&params.with_values(&up).unwrap(), &bf, &cfg, &arrays).unwrap();
            let fd = signal_mean(&params.with_values(&dn).unwrap(), &bf, &cfg, &arrays).unwrap();
            let numeric = (fu - fd) / c(2.0 * h, 0.0);
            assert!((numeric - j.column(col)).norm() < 1e-6 * j.column(col).norm());
        }
        let report = crb_bounds(&params, &bf, &cfg, &arrays, 0.1).unwrap();
        assert_eq!(report.bounds.len(), 10);
    }

    #[test]
    fn crb_scaling_and_structure() {
        let (cfg, arrays, bf, params) = setup();
        let r1 = crb_bounds(&params, &bf, &cfg, &arrays, 0.01).unwrap();
        let r2 = crb_bounds(&params, &bf, &cfg, &arrays, 0.02).unwrap();
        for (a, b) in r1.bounds.iter().zip(&r2.bounds) {
            assert!((b / a - 2f64.sqrt()).abs() < 1e-10);
            assert!(*a >= 0.0);
        }
        let f = &r1.fim;
        assert!((f - f.transpose()).amax() <= 1e-12 * f.amax());
        let eig = SymmetricEigen::new(f.clone()).eigenvalues;
        assert!(eig.iter().all(|&e| e >= -1e-8 * f.norm()));
        assert_eq!(r1.labels[0], "theta_rx[0]");
        assert!(r1.bound("h[1]").is_some());
        assert!(crb_bounds(&params, &bf, &cfg, &arrays, 0.0).is_err());
    }

    #[test]
    fn duplicate_paths_are_unidentifiable() {
        let (cfg, arrays, bf, params) = setup();
        let dup = ParamVector::new(vec![params.paths[0], params.paths[0]]);
        match crb_bounds(&dup, &bf, &cfg, &arrays, 0.01) {
            Err(Error::SingularFim { directions }) => assert!(directions.contains("theta_rx")),
            other => panic!("expected singular FIM, got {other:?}"),
        }
    }
}
