//! Symmetric banded storage and a banded Cholesky factorization.
//!
//! Hermite cubic assembly on a uniform 1D mesh couples each degree of freedom
//! with at most three neighbours on either side, so every matrix in this crate
//! is stored as its lower band.

use crate::error::{Error, Result};
use crate::real::Real;

/// Symmetric matrix stored by its lower band.
///
/// Entry `(i, j)` with `i >= j` and `i - j <= bandwidth` lives at
/// `data[i * (bandwidth + 1) + (i - j)]`. Entries outside the band are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct SymBandMatrix<T> {
    dim: usize,
    bandwidth: usize,
    data: Vec<T>,
}

impl<T: Real> SymBandMatrix<T> {
    pub fn zeros(dim: usize, bandwidth: usize) -> Self {
        SymBandMatrix {
            dim,
            bandwidth,
            data: vec![T::zero(); dim * (bandwidth + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r - c > self.bandwidth || r >= self.dim {
            None
        } else {
            Some(r * (self.bandwidth + 1) + (r - c))
        }
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.slot(i, j).map_or(T::zero(), |s| self.data[s])
    }

    /// Adds `value` to the symmetric pair `(i, j)`/`(j, i)`.
    ///
    /// Panics if the entry lies outside the band.
    pub fn add(&mut self, i: usize, j: usize, value: T) {
        let s = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside band {}", self.bandwidth));
        self.data[s] = self.data[s] + value;
    }

    /// `alpha * self + beta * other`; both operands must share dim and bandwidth.
    pub fn combine(&self, alpha: T, other: &Self, beta: T) -> Self {
        assert_eq!(self.dim, other.dim);
        assert_eq!(self.bandwidth, other.bandwidth);
        SymBandMatrix {
            dim: self.dim,
            bandwidth: self.bandwidth,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| alpha * a + beta * b)
                .collect(),
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Result<Vec<T>> {
        check_dim(self.dim, x.len())?;
        let bw = self.bandwidth;
        let mut y = vec![T::zero(); self.dim];
        for i in 0..self.dim {
            let row = &self.data[i * (bw + 1)..(i + 1) * (bw + 1)];
            // diagonal
            y[i] = y[i] + row[0] * x[i];
            for d in 1..=bw.min(i) {
                let j = i - d;
                let a = row[d];
                y[i] = y[i] + a * x[j];
                y[j] = y[j] + a * x[i];
            }
        }
        Ok(y)
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[T]) -> Result<T> {
        self.bilinear(x, x)
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[T], y: &[T]) -> Result<T> {
        check_dim(self.dim, y.len())?;
        let ay = self.mul_vec(y)?;
        Ok(dot(x, &ay))
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Banded Cholesky `A = L Lᵀ`. Fails on the first nonpositive pivot.
    pub fn cholesky(&self) -> Result<BandCholesky<T>> {
        let n = self.dim;
        let bw = self.bandwidth;
        let w = bw + 1;
        // l[i * w + d] holds L(i, i - d)
        let mut l = self.data.clone();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut sum = l[i * w + (i - j)];
                let klo = lo.max(j.saturating_sub(bw));
                for k in klo..j {
                    sum = sum - l[i * w + (i - k)] * l[j * w + (j - k)];
                }
                if i == j {
                    if !(sum > T::zero()) {
                        return Err(Error::NotPositiveDefinite { pivot: i });
                    }
                    l[i * w] = sum.sqrt();
                } else {
                    l[i * w + (i - j)] = sum / l[j * w];
                }
            }
        }
        Ok(BandCholesky {
            dim: n,
            bandwidth: bw,
            l,
        })
    }
}

/// Lower-triangular banded Cholesky factor.
#[derive(Clone, Debug)]
pub struct BandCholesky<T> {
    dim: usize,
    bandwidth: usize,
    l: Vec<T>,
}

impl<T: Real> BandCholesky<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        check_dim(self.dim, b.len())?;
        let n = self.dim;
        let bw = self.bandwidth;
        let w = bw + 1;
        let mut x = b.to_vec();
        // L y = b
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s = s - self.l[i * w + (i - k)] * x[k];
            }
            x[i] = s / self.l[i * w];
        }
        // Lᵀ x = y
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n.min(i + bw + 1) {
                s = s - self.l[k * w + (k - i)] * x[k];
            }
            x[i] = s / self.l[i * w];
        }
        Ok(x)
    }
}

#[inline]
pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

pub fn dot<T: Real>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).fold(T::zero(), |acc, (&a, &b)| acc + a * b)
}

pub fn norm2<T: Real>(x: &[T]) -> T {
    dot(x, x).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> SymBandMatrix<f64> {
        let mut m = SymBandMatrix::zeros(n, 1);
        for i in 0..n {
            m.add(i, i, 2.0);
            if i > 0 {
                m.add(i, i - 1, -1.0);
            }
        }
        m
    }

    #[test]
    fn band_get_is_symmetric() {
        let m = tridiag(4);
        assert_eq!(m.get(1, 0), -1.0);
        assert_eq!(m.get(0, 1), -1.0);
        assert_eq!(m.get(3, 0), 0.0);
    }

    #[test]
    fn mul_vec_matches_dense() {
        let mut m = SymBandMatrix::zeros(5, 2);
        let mut v = 1.0;
        for i in 0..5usize {
            for j in i.saturating_sub(2)..=i {
                m.add(i, j, v);
                v += 0.5;
            }
        }
        let x = [1.0, -2.0, 0.5, 3.0, -1.0];
        let y = m.mul_vec(&x).unwrap();
        let dense = m.to_dense();
        for i in 0..5 {
            let yi: f64 = (0..5).map(|j| dense[i][j] * x[j]).sum();
            assert!((yi - y[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn cholesky_solves_tridiagonal() {
        let m = tridiag(6);
        let b = vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        let x = m.cholesky().unwrap().solve(&b).unwrap();
        // 2x_i - x_{i-1} - x_{i+1} = b_i has the constant solution 1
        for xi in x {
            assert!((xi - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut m = SymBandMatrix::<f64>::zeros(2, 1);
        m.add(0, 0, 1.0);
        m.add(1, 1, 1.0);
        m.add(1, 0, 2.0);
        assert!(matches!(
            m.cholesky(),
            Err(Error::NotPositiveDefinite { pivot: 1 })
        ));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let m = tridiag(3);
        assert!(matches!(
            m.mul_vec(&[1.0, 2.0]),
            Err(Error::DimensionMismatch {
                expected: 3,
                got: 2
            })
        ));
    }
}
