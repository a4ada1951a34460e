// SPDX-License-Identifier: Apache-2.0

//! Dipolar couplings with an `M`-neighbour window and the one-excitation
//! block of the XXZ Hamiltonian
//! `H_M = sum_{i<j<=i+M} d_ij (IxIx + IyIy - 2 IzIz)`.
//!
//! In the basis `|n>` (spin `n` flipped against the rest) the flip-flop part
//! gives `h_mn = d_mn / 2` and the Ising part gives
//! `h_nn = sum_j d_nj - (1/2) sum_{i<j} d_ij`. The trailing constant is the
//! same for every `n` and is dropped; it is kept on the side so the full
//! diagonal can be recovered.

use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::{FieldOrientation, NodeList};
use crate::matrix::SquareMatrix;
use crate::scalar::Scalar;

/// Which time unit the couplings are expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AngularMode {
    /// Full angular factor `3 cos^2 phi_ij - 1` per pair.
    ZigzagTime,
    /// Collinear chains only: the pair-independent angular factor is folded
    /// into the time unit, normalised to its value along the field
    /// (`chi = 0`, factor 2), so `d_ij = 1 / r_ij^3`.
    AlternatingTime,
}

impl AngularMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AngularMode::ZigzagTime => "zigzag-time",
            AngularMode::AlternatingTime => "alternating-time",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "zigzag-time" => Some(AngularMode::ZigzagTime),
            "alternating-time" => Some(AngularMode::AlternatingTime),
            _ => None,
        }
    }
}

/// `3 cos^2 phi - 1`, snapped to exactly zero within rounding of the magic
/// angle.
pub fn angular_factor<T: Scalar>(cos_phi: T) -> T {
    let f = T::lit(3.0) * cos_phi * cos_phi - T::one();
    if f.abs() <= T::lit(16.0) * T::epsilon() {
        T::zero()
    } else {
        f
    }
}

/// Dimensionless dipolar coupling `(3 cos^2 phi - 1) / (2 r^3)`.
pub fn coupling<T: Scalar>(r: T, cos_phi: T) -> Result<T> {
    if !(r > T::zero()) {
        return Err(Error::NonPositiveDistance(r.as_f64()));
    }
    Ok(angular_factor(cos_phi) / (T::lit(2.0) * r * r * r))
}

/// Symmetric coupling matrix restricted to `|i - j| <= M`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix<T> {
    d: SquareMatrix<T>,
    window: usize,
    mode: AngularMode,
}

impl<T: Scalar> CouplingMatrix<T> {
    pub fn build(nodes: &NodeList<T>, field: &FieldOrientation<T>, window: usize, mode: AngularMode) -> Result<Self> {
        let n = nodes.len();
        check_window(window, n)?;
        let mut d = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n.min(i + window + 1) {
                let g = nodes.pair_geometry(i, j, field)?;
                let value = match mode {
                    AngularMode::ZigzagTime => coupling(g.r, g.cos_phi)?,
                    AngularMode::AlternatingTime => T::one() / (g.r * g.r * g.r),
                };
                d[(i, j)] = value;
                d[(j, i)] = value;
            }
        }
        Ok(Self { d, window, mode })
    }

    /// All-node window `M = N - 1`.
    pub fn all_node(nodes: &NodeList<T>, field: &FieldOrientation<T>, mode: AngularMode) -> Result<Self> {
        Self::build(nodes, field, nodes.len() - 1, mode)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.d[(i, j)]
    }

    pub fn dim(&self) -> usize {
        self.d.dim()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn mode(&self) -> AngularMode {
        self.mode
    }

    pub fn matrix(&self) -> &SquareMatrix<T> {
        &self.d
    }

    /// `sum_{i<j} d_ij`.
    pub fn pair_sum(&self) -> T {
        let n = self.dim();
        let mut s = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                s = s + self.d[(i, j)];
            }
        }
        s
    }
}

pub(crate) fn check_window(window: usize, n: usize) -> Result<()> {
    if window < 1 || window + 1 > n {
        return Err(Error::InvalidWindow { window, max: n.saturating_sub(1) });
    }
    Ok(())
}

/// One-excitation block of `H_M`, with the `n`-independent diagonal
/// constant removed.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian1Ex<T> {
    h: SquareMatrix<T>,
    dropped_constant: T,
}

impl<T: Scalar> Hamiltonian1Ex<T> {
    pub fn from_couplings(c: &CouplingMatrix<T>) -> Self {
        let n = c.dim();
        let mut h = SquareMatrix::zeros(n);
        let half = T::lit(0.5);
        for i in 0..n {
            let mut diag = T::zero();
            for j in 0..n {
                if i != j {
                    let d = c.get(i, j);
                    h[(i, j)] = half * d;
                    diag = diag + d;
                }
            }
            h[(i, i)] = diag;
        }
        Self { h, dropped_constant: -half * c.pair_sum() }
    }

    /// Wraps an arbitrary real symmetric matrix.
    pub fn from_matrix(h: SquareMatrix<T>) -> Result<Self> {
        let tol = T::lit(64.0) * T::epsilon() * T::one().max(h.max_abs());
        if h.asymmetry() > tol {
            return Err(Error::InvalidMatrix(format!("not symmetric (max |h_ij - h_ji| = {})", h.asymmetry())));
        }
        Ok(Self { h, dropped_constant: T::zero() })
    }

    pub fn matrix(&self) -> &SquareMatrix<T> {
        &self.h
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    /// Diagonal constant removed from every entry; adding it back gives the
    /// block exactly as it sits inside the full Hamiltonian.
    pub fn dropped_constant(&self) -> T {
        self.dropped_constant
    }

    /// `h + shift * I`. Only the global phase changes.
    pub fn shifted(&self, shift: T) -> Self {
        let mut h = self.h.clone();
        for i in 0..h.dim() {
            h[(i, i)] = h[(i, i)] + shift;
        }
        Self { h, dropped_constant: self.dropped_constant - shift }
    }

    /// Full row-major CSV dump with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        crate::io::write_matrix_csv(out, &self.h)
    }
}

pub fn one_excitation_hamiltonian<T: Scalar>(c: &CouplingMatrix<T>) -> Hamiltonian1Ex<T> {
    Hamiltonian1Ex::from_couplings(c)
}
