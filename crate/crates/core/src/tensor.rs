//! Dense complex third-order tensors and their Tucker algebra.
//!
//! Elements are stored column-major: entry `(i1, i2, i3)` lives at offset
//! `i1 + I1*i2 + I1*I2*i3`. The mode-`n` unfolding has row index `i_n` and
//! orders its columns lexicographically over the remaining indices with the
//! lower mode varying fastest, so the mode-1 unfolding is the raw buffer
//! viewed as an `I1 x (I2*I3)` matrix and `vec(T)` is the buffer itself.

use crate::error::{invalid, Result};
use crate::linalg;
use crate::{CMatrix, Complex64};

/// Tensor mode, numbered 1 to 3 as in the usual mode-n notation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    One,
    Two,
    Three,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::One, Mode::Two, Mode::Three];

    /// Zero-based axis index.
    pub fn axis(self) -> usize {
        match self {
            Mode::One => 0,
            Mode::Two => 1,
            Mode::Three => 2,
        }
    }

    /// One-based mode number.
    pub fn number(self) -> usize {
        self.axis() + 1
    }
}

impl TryFrom<usize> for Mode {
    type Error = crate::Error;

    /// Converts a one-based mode number.
    fn try_from(n: usize) -> Result<Self> {
        match n {
            1 => Ok(Mode::One),
            2 => Ok(Mode::Two),
            3 => Ok(Mode::Three),
            _ => invalid(format!("mode must be 1, 2 or 3, got {n}")),
        }
    }
}

/// Dense complex `I1 x I2 x I3` tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    dims: [usize; 3],
    data: Vec<Complex64>,
}

impl Tensor3 {
    /// Builds a tensor from its column-major buffer.
    pub fn from_vec(dims: [usize; 3], data: Vec<Complex64>) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return invalid(format!("tensor dims must be positive, got {dims:?}"));
        }
        if data.len() != dims[0] * dims[1] * dims[2] {
            return invalid(format!(
                "buffer length {} does not match dims {dims:?}",
                data.len()
            ));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return invalid("tensor entries must be finite");
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: [usize; 3]) -> Self {
        assert!(dims.iter().all(|&d| d > 0), "tensor dims must be positive");
        Self {
            dims,
            data: vec![Complex64::new(0.0, 0.0); dims[0] * dims[1] * dims[2]],
        }
    }

    pub fn from_fn(dims: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> Complex64) -> Self {
        let mut t = Self::zeros(dims);
        for i3 in 0..dims[2] {
            for i2 in 0..dims[1] {
                for i1 in 0..dims[0] {
                    t.data[i1 + dims[0] * (i2 + dims[1] * i3)] = f(i1, i2, i3);
                }
            }
        }
        t
    }

    /// Outer product `a ∘ b ∘ c`.
    pub fn outer(a: &[Complex64], b: &[Complex64], c: &[Complex64]) -> Self {
        Self::from_fn([a.len(), b.len(), c.len()], |i, j, k| a[i] * b[j] * c[k])
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Column-major buffer, which is also `vec(T)`.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    #[inline]
    fn offset(&self, i1: usize, i2: usize, i3: usize) -> usize {
        i1 + self.dims[0] * (i2 + self.dims[1] * i3)
    }

    pub fn get(&self, i1: usize, i2: usize, i3: usize) -> Complex64 {
        self.data[self.offset(i1, i2, i3)]
    }

    pub fn set(&mut self, i1: usize, i2: usize, i3: usize, value: Complex64) {
        let o = self.offset(i1, i2, i3);
        self.data[o] = value;
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Sum of squared magnitudes.
    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            dims: self.dims,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// Element-wise sum; dims must agree.
    pub fn add(&self, other: &Tensor3) -> Result<Self> {
        if self.dims != other.dims {
            return invalid(format!("dims {:?} and {:?} differ", self.dims, other.dims));
        }
        Ok(Self {
            dims: self.dims,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Tensor3) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Mode-`n` unfolding.
    pub fn unfold(&self, mode: Mode) -> CMatrix {
        let [n1, n2, n3] = self.dims;
        match mode {
            Mode::One => CMatrix::from_column_slice(n1, n2 * n3, &self.data),
            Mode::Two => CMatrix::from_fn(n2, n1 * n3, |i2, col| {
                let (i1, i3) = (col % n1, col / n1);
                self.get(i1, i2, i3)
            }),
            Mode::Three => CMatrix::from_fn(n3, n1 * n2, |i3, col| {
                let (i1, i2) = (col % n1, col / n1);
                self.get(i1, i2, i3)
            }),
        }
    }

    /// Inverse of [`Tensor3::unfold`].
    pub fn fold(m: &CMatrix, mode: Mode, dims: [usize; 3]) -> Result<Self> {
        let [n1, n2, n3] = dims;
        let rows = dims[mode.axis()];
        let cols = n1 * n2 * n3 / rows.max(1);
        if dims.iter().any(|&d| d == 0) || m.nrows() != rows || m.ncols() != cols {
            return invalid(format!(
                "{}x{} matrix cannot fold along mode {} into {dims:?}",
                m.nrows(),
                m.ncols(),
                mode.number()
            ));
        }
        let t = match mode {
            Mode::One => Self {
                dims,
                data: m.as_slice().to_vec(),
            },
            Mode::Two => Self::from_fn(dims, |i1, i2, i3| m[(i2, i1 + n1 * i3)]),
            Mode::Three => Self::from_fn(dims, |i1, i2, i3| m[(i3, i1 + n1 * i2)]),
        };
        Ok(t)
    }

    /// Mode-`n` product `T ∘ₙ M`: every mode-`n` fiber is multiplied by `M`.
    pub fn mode_product(&self, m: &CMatrix, mode: Mode) -> Result<Self> {
        let axis = mode.axis();
        if m.ncols() != self.dims[axis] {
            return invalid(format!(
                "matrix with {} columns cannot multiply mode {} of length {}",
                m.ncols(),
                mode.number(),
                self.dims[axis]
            ));
        }
        if m.nrows() == 0 {
            return invalid("mode product with an empty matrix");
        }
        let mut dims = self.dims;
        dims[axis] = m.nrows();
        Self::fold(&(m * self.unfold(mode)), mode, dims)
    }

    /// Frobenius norm of every slab along `mode`.
    pub fn slab_norms(&self, mode: Mode) -> Vec<f64> {
        let axis = mode.axis();
        let mut acc = vec![0.0; self.dims[axis]];
        for i3 in 0..self.dims[2] {
            for i2 in 0..self.dims[1] {
                for i1 in 0..self.dims[0] {
                    let idx = [i1, i2, i3][axis];
                    acc[idx] += self.get(i1, i2, i3).norm_sqr();
                }
            }
        }
        acc.into_iter().map(f64::sqrt).collect()
    }

    /// Leading `r1 x r2 x r3` corner.
    pub fn corner(&self, ranks: [usize; 3]) -> Result<Self> {
        if ranks.iter().zip(&self.dims).any(|(&r, &d)| r == 0 || r > d) {
            return invalid(format!("corner {ranks:?} out of range for {:?}", self.dims));
        }
        Ok(Self::from_fn(ranks, |i1, i2, i3| self.get(i1, i2, i3)))
    }
}

/// Per-mode singular values of a Tucker core: the slab Frobenius norms.
pub fn mode_singular_values(core: &Tensor3, mode: Mode) -> Vec<f64> {
    core.slab_norms(mode)
}

/// Core tensor plus one factor matrix per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct TuckerForm {
    pub core: Tensor3,
    pub factors: [CMatrix; 3],
}

impl TuckerForm {
    pub fn new(core: Tensor3, factors: [CMatrix; 3]) -> Result<Self> {
        for mode in Mode::ALL {
            let a = mode.axis();
            if factors[a].ncols() != core.dims()[a] || factors[a].nrows() == 0 {
                return invalid(format!(
                    "factor {} is {}x{} but core has {} slabs along that mode",
                    mode.number(),
                    factors[a].nrows(),
                    factors[a].ncols(),
                    core.dims()[a]
                ));
            }
        }
        Ok(Self { core, factors })
    }

    /// Dimensions of the reconstructed tensor.
    pub fn dims(&self) -> [usize; 3] {
        [
            self.factors[0].nrows(),
            self.factors[1].nrows(),
            self.factors[2].nrows(),
        ]
    }

    /// `core ∘₁ V₁ ∘₂ V₂ ∘₃ V₃`.
    pub fn reconstruct(&self) -> Result<Tensor3> {
        tucker_reconstruct(self)
    }
}

/// `core ∘₁ V₁ ∘₂ V₂ ∘₃ V₃` by three successive mode products.
pub fn tucker_reconstruct(f: &TuckerForm) -> Result<Tensor3> {
    f.core
        .mode_product(&f.factors[0], Mode::One)?
        .mode_product(&f.factors[1], Mode::Two)?
        .mode_product(&f.factors[2], Mode::Three)
}

/// Multilinear SVD: orthonormal Tucker form with ordered per-mode singular values.
#[derive(Debug, Clone)]
pub struct MsvdResult {
    pub tucker: TuckerForm,
    pub mode_singular_values: [Vec<f64>; 3],
}

impl MsvdResult {
    pub fn core(&self) -> &Tensor3 {
        &self.tucker.core
    }

    pub fn factor(&self, mode: Mode) -> &CMatrix {
        &self.tucker.factors[mode.axis()]
    }

    /// Full multilinear rank of the decomposition (core dims).
    pub fn full_ranks(&self) -> [usize; 3] {
        self.tucker.core.dims()
    }
}

/// Multilinear SVD computed as an HOSVD: one SVD per unfolding, then the core
/// by conjugate-transposed mode products.
///
/// Factors are economy size: `min(I_n, prod of the other dims)` columns.
pub fn msvd(t: &Tensor3) -> Result<MsvdResult> {
    let mut factors = Vec::with_capacity(3);
    for mode in Mode::ALL {
        let (u, _) = linalg::left_singular(&t.unfold(mode), mode.number())?;
        factors.push(u);
    }
    let factors: [CMatrix; 3] = factors.try_into().expect("three modes");
    let core = t
        .mode_product(&factors[0].adjoint(), Mode::One)?
        .mode_product(&factors[1].adjoint(), Mode::Two)?
        .mode_product(&factors[2].adjoint(), Mode::Three)?;
    let mode_singular_values = Mode::ALL.map(|m| core.slab_norms(m));
    Ok(MsvdResult {
        tucker: TuckerForm::new(core, factors)?,
        mode_singular_values,
    })
}

/// Keeps the leading `ranks` factor columns and the matching core corner.
pub fn truncate(r: &MsvdResult, ranks: [usize; 3]) -> Result<TuckerForm> {
    let full = r.full_ranks();
    for (i, (&k, &n)) in ranks.iter().zip(&full).enumerate() {
        if k == 0 || k > n {
            return invalid(format!("rank {k} for mode {} outside 1..={n}", i + 1));
        }
    }
    let core = r.tucker.core.corner(ranks)?;
    let factors = [0, 1, 2].map(|a| r.tucker.factors[a].columns(0, ranks[a]).into_owned());
    TuckerForm::new(core, factors)
}

/// Frobenius norm of a tensor.
pub fn frobenius_norm(t: &Tensor3) -> f64 {
    t.frobenius_norm()
}
