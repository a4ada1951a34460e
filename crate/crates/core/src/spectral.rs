// SPDX-License-Identifier: Apache-2.0

//! Eigendecomposition of real symmetric matrices: Householder reduction to
//! tridiagonal form followed by the implicit QL iteration (the EISPACK
//! `tred2`/`tql2` pair), generic over the scalar type.

use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian1Ex;
use crate::matrix::SquareMatrix;
use crate::scalar::Scalar;

/// `h = V diag(lambda) V^T` with ascending eigenvalues and orthonormal
/// eigenvector columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition<T> {
    eigenvalues: Vec<T>,
    eigenvectors: SquareMatrix<T>,
}

impl<T: Scalar> SpectralDecomposition<T> {
    pub fn of_hamiltonian(h: &Hamiltonian1Ex<T>) -> Result<Self> {
        Self::of_matrix(h.matrix())
    }

    pub fn of_matrix(a: &SquareMatrix<T>) -> Result<Self> {
        let n = a.dim();
        if n == 0 {
            return Err(Error::InvalidMatrix("empty matrix".into()));
        }
        let scale = T::one().max(a.max_abs());
        if !scale.is_finite() || a.as_slice().iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite entries".into()));
        }
        if a.asymmetry() > T::lit(64.0) * T::epsilon() * scale {
            return Err(Error::InvalidMatrix(format!("not symmetric (max |a_ij - a_ji| = {})", a.asymmetry())));
        }

        let mut v = a.clone();
        let mut d = vec![T::zero(); n];
        let mut e = vec![T::zero(); n];
        tridiagonalize(&mut v, &mut d, &mut e);
        ql_implicit(&mut v, &mut d, &mut e)?;

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap());
        let eigenvalues = order.iter().map(|&k| d[k]).collect();
        let eigenvectors = SquareMatrix::from_fn(n, |row, col| v[(row, order[col])]);
        Ok(Self { eigenvalues, eigenvectors })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    /// Eigenvectors as columns.
    pub fn eigenvectors(&self) -> &SquareMatrix<T> {
        &self.eigenvectors
    }

    /// `lambda_max - lambda_min`.
    pub fn spread(&self) -> T {
        self.eigenvalues[self.dim() - 1] - self.eigenvalues[0]
    }

    pub fn max_abs_eigenvalue(&self) -> T {
        self.eigenvalues.iter().fold(T::zero(), |m, &l| m.max(l.abs()))
    }

    pub fn reconstruct(&self) -> SquareMatrix<T> {
        let n = self.dim();
        let v = &self.eigenvectors;
        SquareMatrix::from_fn(n, |i, j| (0..n).map(|k| v[(i, k)] * self.eigenvalues[k] * v[(j, k)]).sum())
    }

    /// `max |V diag(lambda) V^T - a|`.
    pub fn reconstruction_residual(&self, a: &SquareMatrix<T>) -> T {
        self.reconstruct().max_abs_diff(a)
    }

    /// `max |V^T V - I|`.
    pub fn orthogonality_defect(&self) -> T {
        let v = &self.eigenvectors;
        v.transpose().matmul(v).max_abs_diff(&SquareMatrix::identity(self.dim()))
    }
}

fn tridiagonalize<T: Scalar>(v: &mut SquareMatrix<T>, d: &mut [T], e: &mut [T]) {
    let n = d.len();
    let zero = T::zero();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }

    for i in (1..n).rev() {
        let mut scale = zero;
        let mut h = zero;
        for &dk in &d[..i] {
            scale = scale + dk.abs();
        }
        if scale == zero {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = zero;
                v[(j, i)] = zero;
            }
        } else {
            for dk in &mut d[..i] {
                *dk = *dk / scale;
                h = h + *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > zero {
                g = -g;
            }
            e[i] = scale * g;
            h = h - f * g;
            d[i - 1] = f - g;
            for ej in &mut e[..i] {
                *ej = zero;
            }

            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    g = g + v[(k, j)] * d[k];
                    e[k] = e[k] + v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = zero;
            for j in 0..i {
                e[j] = e[j] / h;
                f = f + e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] = e[j] - hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[(k, j)] = v[(k, j)] - (f * e[k] + g * d[k]);
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = zero;
            }
        }
        d[i] = h;
    }

    // Accumulate the transformations.
    for i in 0..n.saturating_sub(1) {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = T::one();
        let h = d[i + 1];
        if h != zero {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = zero;
                for k in 0..=i {
                    g = g + v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    v[(k, j)] = v[(k, j)] - g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = zero;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = zero;
    }
    v[(n - 1, n - 1)] = T::one();
    e[0] = zero;
}

fn ql_implicit<T: Scalar>(v: &mut SquareMatrix<T>, d: &mut [T], e: &mut [T]) -> Result<()> {
    let n = d.len();
    let zero = T::zero();
    let one = T::one();
    let two = T::lit(2.0);
    let eps = T::epsilon();

    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = zero;

    let mut f = zero;
    let mut tst1 = zero;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }

        if m > l {
            let mut iterations = 0;
            loop {
                iterations += 1;
                if iterations > 60 {
                    return Err(Error::InvalidMatrix(format!("QL iteration did not converge for eigenvalue {l}")));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(one);
                if p < zero {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in &mut d[(l + 2)..n] {
                    *di = *di - h;
                }
                f = f + h;

                p = d[m];
                let mut c = one;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = zero;
                let mut s2 = zero;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        h = v[(k, i + 1)];
                        v[(k, i + 1)] = s * v[(k, i)] + c * h;
                        v[(k, i)] = c * v[(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] = d[l] + f;
        e[l] = zero;
    }
    Ok(())
}
