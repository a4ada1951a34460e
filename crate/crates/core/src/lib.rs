// SPDX-License-Identifier: Apache-2.0

//! Excited-state transfer along planar spin-1/2 chains coupled by the
//! dipole-dipole XXZ interaction.
//!
//! The kernel works in the one-excitation subspace: a chain of `N` spins
//! reduces to a real symmetric `N x N` Hamiltonian, which is diagonalised
//! once and then evolved to arbitrary dimensionless time. On top of that sit
//! the figures of merit used to study the `M`-neighbour approximation
//! (windowed maxima, time averages, the L1 deviation ratio and the minimal
//! window), parameter sweeps over chain geometry, and a brute-force
//! full-Hilbert-space reference used to validate the reduction.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below fix it to double precision, which is what the sweep,
//! oracle and I/O layers use.

// `!(x >= 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod hamiltonian;
pub mod io;
pub mod matrix;
pub mod metrics;
pub mod oracle;
pub mod scalar;
pub mod spectral;
pub mod sweep;

pub use dynamics::{fidelity, Channel, TransferAmplitude};
pub use error::{Error, Result};
pub use geometry::{ChainKind, FieldOrientation, NodeList, PairGeometry, Point};
pub use hamiltonian::{coupling, AngularMode, CouplingMatrix, Hamiltonian1Ex};
pub use matrix::SquareMatrix;
pub use metrics::{ApproxReport, TimeGrid, TransferOptimum};
pub use scalar::Scalar;
pub use spectral::SpectralDecomposition;

/// Version string recorded in sweep metadata.
pub const KERNEL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub type NodeList64 = NodeList<f64>;
pub type FieldOrientation64 = FieldOrientation<f64>;
pub type CouplingMatrix64 = CouplingMatrix<f64>;
pub type Hamiltonian64 = Hamiltonian1Ex<f64>;
pub type Spectral64 = SpectralDecomposition<f64>;
pub type Amplitude64 = TransferAmplitude<f64>;
pub type Optimum64 = TransferOptimum<f64>;
pub type ApproxReport64 = ApproxReport<f64>;

pub type NodeList32 = NodeList<f32>;
pub type Spectral32 = SpectralDecomposition<f32>;
