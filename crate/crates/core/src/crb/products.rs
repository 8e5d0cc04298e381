//! Kronecker, Khatri-Rao and commutation algebra.

use crate::error::{invalid, Result};
use crate::{CMatrix, CVector, Complex64};

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (br, bc) = b.shape();
    CMatrix::from_fn(a.nrows() * br, a.ncols() * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Column-wise Kronecker product: column `i` is `kron(a[:, i], b[:, i])`.
pub fn khatri_rao(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.ncols() != b.ncols() {
        return invalid(format!(
            "Khatri-Rao operands have {} and {} columns",
            a.ncols(),
            b.ncols()
        ));
    }
    let br = b.nrows();
    Ok(CMatrix::from_fn(a.nrows() * br, a.ncols(), |i, j| a[(i / br, j)] * b[(i % br, j)]))
}

/// `(a ⊗ I_n) v`, evaluated as `vec(V aᵀ)` with `V` the `n x cols(a)` reshape of `v`.
pub fn kron_identity_apply(a: &CMatrix, n: usize, v: &CVector) -> Result<CVector> {
    if v.len() != n * a.ncols() {
        return invalid(format!(
            "vector of length {} cannot multiply ({}x{}) ⊗ I_{n}",
            v.len(),
            a.nrows(),
            a.ncols()
        ));
    }
    let vm = CMatrix::from_column_slice(n, a.ncols(), v.as_slice());
    let out = vm * a.transpose();
    Ok(CVector::from_column_slice(out.as_slice()))
}

/// Commutation matrix `K_{m,n}`: the permutation with `K vec(S) = vec(Sᵀ)` for
/// every `m x n` matrix `S`.
///
/// Stored as an index map; [`CommutationMatrix::to_dense`] materializes it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommutationMatrix {
    m: usize,
    n: usize,
}

impl CommutationMatrix {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return invalid(format!("commutation matrix needs positive sizes, got {m}x{n}"));
        }
        Ok(Self { m, n })
    }

    /// Side length `m n`.
    pub fn size(&self) -> usize {
        self.m * self.n
    }

    /// Source index feeding output row `row`: `(K v)[row] = v[source(row)]`.
    pub fn source(&self, row: usize) -> usize {
        // row = j + n i  <-  i + m j
        let (j, i) = (row % self.n, row / self.n);
        i + self.m * j
    }

    pub fn apply(&self, v: &CVector) -> Result<CVector> {
        if v.len() != self.size() {
            return invalid(format!(
                "K_{{{},{}}} cannot multiply a vector of length {}",
                self.m,
                self.n,
                v.len()
            ));
        }
        Ok(CVector::from_fn(self.size(), |r, _| v[self.source(r)]))
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut k = CMatrix::zeros(self.size(), self.size());
        for r in 0..self.size() {
            k[(r, self.source(r))] = Complex64::new(1.0, 0.0);
        }
        k
    }
}

/// `K_{m,n}` for `m, n >= 1`.
pub fn commutation_matrix(m: usize, n: usize) -> Result<CommutationMatrix> {
    CommutationMatrix::new(m, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random(r: usize, k: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMatrix::from_fn(r, k, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn vec_of(m: &CMatrix) -> CVector {
        CVector::from_column_slice(m.as_slice())
    }

    #[test]
    fn khatri_rao_small() {
        let a = CMatrix::from_element(1, 1, c(1.0, 0.0));
        let b = CMatrix::from_element(1, 1, c(2.0, 3.0));
        assert_eq!(khatri_rao(&a, &b).unwrap()[(0, 0)], c(2.0, 3.0));
        let a = CMatrix::from_column_slice(2, 1, &[c(1.0, 0.0), c(2.0, 0.0)]);
        let b = CMatrix::from_column_slice(2, 1, &[c(3.0, 0.0), c(4.0, 0.0)]);
        let kr = khatri_rao(&a, &b).unwrap();
        assert_eq!(kr.as_slice(), &[c(3.0, 0.0), c(4.0, 0.0), c(6.0, 0.0), c(8.0, 0.0)]);
        assert!(khatri_rao(&a, &CMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn khatri_rao_columns_are_kronecker() {
        let a = random(3, 4, 1);
        let b = random(5, 4, 2);
        let kr = khatri_rao(&a, &b).unwrap();
        for i in 0..4 {
            let col = kron(&a.columns(i, 1).into_owned(), &b.columns(i, 1).into_owned());
            assert!((kr.column(i) - col.column(0)).norm() < 1e-14);
        }
    }

    #[test]
    fn kron_identity_apply_matches_dense() {
        let a = random(4, 3, 3);
        let v = CVector::from_column_slice(random(15, 1, 4).as_slice());
        let dense = kron(&a, &CMatrix::identity(5, 5)) * &v;
        let fast = kron_identity_apply(&a, 5, &v).unwrap();
        assert!((dense - fast).norm() < 1e-13);
    }

    #[test]
    fn commutation_small_cases() {
        let k = commutation_matrix(1, 4).unwrap().to_dense();
        assert_eq!(k, CMatrix::identity(4, 4));
        let s = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]);
        // vec([[a,b],[c,d]]) = [a,c,b,d]; K swaps the middle entries
        let out = commutation_matrix(2, 2).unwrap().apply(&vec_of(&s)).unwrap();
        assert_eq!(out.as_slice(), &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]);
        assert!(commutation_matrix(0, 2).is_err());
    }

    #[test]
    fn commutation_transposes() {
        let s = random(3, 4, 5);
        let k = commutation_matrix(3, 4).unwrap();
        assert_eq!(k.apply(&vec_of(&s)).unwrap(), vec_of(&s.transpose()));
        assert_eq!(k.to_dense() * vec_of(&s), vec_of(&s.transpose()));
        let dense = k.to_dense();
        // permutation: one unit entry per row and column
        for r in 0..12 {
            assert_eq!(dense.row(r).iter().filter(|z| **z == c(1.0, 0.0)).count(), 1);
            assert_eq!(dense.column(r).iter().filter(|z| **z == c(1.0, 0.0)).count(), 1);
        }
    }
}
