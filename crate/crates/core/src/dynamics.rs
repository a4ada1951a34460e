// SPDX-License-Identifier: Apache-2.0

//! Evolution of the one-excitation state from its eigendecomposition.
//!
//! The amplitude from the first node to node `n` is
//! `sum_k V_nk V_1k exp(-i lambda_k tau)`; no time stepping is involved, so
//! the error does not grow with `tau`. Phases `lambda_k tau` are evaluated
//! directly (no argument reduction) and are required to stay below `1e9` in
//! magnitude.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectral::SpectralDecomposition;

/// Largest admissible `|lambda * tau|`.
pub const PHASE_BUDGET: f64 = 1e9;

/// Samples per parallel work unit in uniform-grid scans.
const SCAN_CHUNK: usize = 4096;
/// Phase-recurrence steps between exact re-evaluations.
const RESYNC: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferAmplitude<T> {
    value: Complex<T>,
}

impl<T: Scalar> TransferAmplitude<T> {
    pub fn new(value: Complex<T>) -> Self {
        Self { value }
    }

    pub fn value(&self) -> Complex<T> {
        self.value
    }

    /// `P = |p_1n|`.
    pub fn magnitude(&self) -> T {
        self.value.norm()
    }

    /// Argument in `[0, 2 pi)`.
    pub fn phase(&self) -> T {
        let a = self.value.arg();
        if a < T::zero() {
            a + T::TAU()
        } else {
            a
        }
    }

    /// `|p_1n|^2`, with rounding overshoot above 1 clipped.
    pub fn probability(&self) -> T {
        clip_unit(self.value.norm_sqr())
    }
}

#[inline]
fn clip_unit<T: Scalar>(p: T) -> T {
    p.min(T::one()).max(T::zero())
}

#[inline]
fn phasor<T: Scalar>(angle: T) -> Complex<T> {
    let (s, c) = angle.sin_cos();
    Complex::new(c, -s)
}

fn check_phase<T: Scalar>(max_abs_eigenvalue: T, tau: T) -> Result<()> {
    let phase = (max_abs_eigenvalue * tau).abs().as_f64();
    if !(phase <= PHASE_BUDGET) {
        return Err(Error::PhaseRange(phase));
    }
    Ok(())
}

/// Precomputed transfer channel between two nodes: eigenvalues and weights
/// `c_k = V_target,k V_source,k`.
#[derive(Debug, Clone)]
pub struct Channel<T> {
    eigenvalues: Vec<T>,
    weights: Vec<T>,
    max_abs_eigenvalue: T,
    /// Exact amplitude at `tau = 0`: 1 on the diagonal, 0 otherwise.
    at_origin: T,
}

impl<T: Scalar> Channel<T> {
    pub fn new(s: &SpectralDecomposition<T>, source: usize, target: usize) -> Result<Self> {
        let n = s.dim();
        for index in [source, target] {
            if index >= n {
                return Err(Error::IndexOutOfRange { index, len: n });
            }
        }
        let v = s.eigenvectors();
        let weights = (0..n).map(|k| v[(target, k)] * v[(source, k)]).collect();
        Ok(Self {
            eigenvalues: s.eigenvalues().to_vec(),
            weights,
            max_abs_eigenvalue: s.max_abs_eigenvalue(),
            at_origin: if source == target { T::one() } else { T::zero() },
        })
    }

    /// First node to last node.
    pub fn end_to_end(s: &SpectralDecomposition<T>) -> Self {
        Self::new(s, 0, s.dim() - 1).expect("indices within range")
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    #[inline]
    fn amplitude_unchecked(&self, tau: T) -> Complex<T> {
        self.eigenvalues
            .iter()
            .zip(&self.weights)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (&l, &w)| acc + phasor(l * tau) * w)
    }

    pub fn amplitude(&self, tau: T) -> Result<TransferAmplitude<T>> {
        check_phase(self.max_abs_eigenvalue, tau)?;
        if tau == T::zero() {
            return Ok(TransferAmplitude::new(Complex::new(self.at_origin, T::zero())));
        }
        Ok(TransferAmplitude::new(self.amplitude_unchecked(tau)))
    }

    pub fn probability(&self, tau: T) -> Result<T> {
        Ok(self.amplitude(tau)?.probability())
    }

    /// Probability at `tau` without the phase-budget check. Callers must have
    /// validated the time range.
    #[inline]
    pub(crate) fn probability_unchecked(&self, tau: T) -> T {
        clip_unit(self.amplitude_unchecked(tau).norm_sqr())
    }

    /// Probabilities on the uniform grid `t0 + i * step`, `i < count`.
    pub fn scan(&self, t0: T, step: T, count: usize) -> Result<Vec<T>> {
        let mut out = Vec::with_capacity(count);
        for chunk in self.scan_chunks(t0, step, count, |_, p| p.to_vec())? {
            out.extend(chunk);
        }
        Ok(out)
    }

    /// Evaluates the uniform grid in fixed-size chunks (in parallel) and maps
    /// each chunk through `f(first_index, probabilities)`. Results come back
    /// in grid order and do not depend on the thread count.
    pub fn scan_chunks<R, F>(&self, t0: T, step: T, count: usize, f: F) -> Result<Vec<R>>
    where
        R: Send,
        F: Fn(usize, &[T]) -> R + Sync,
    {
        scan_channels(std::slice::from_ref(self), t0, step, count, f)
    }
}

/// Chunked uniform-grid scan of several channels sharing one time grid.
/// `f(first_index, rows)` receives probabilities flattened sample-major:
/// `rows[i * channels.len() + c]`.
pub fn scan_channels<T, R, F>(channels: &[Channel<T>], t0: T, step: T, count: usize, f: F) -> Result<Vec<R>>
where
    T: Scalar,
    R: Send,
    F: Fn(usize, &[T]) -> R + Sync,
{
    if count == 0 || channels.is_empty() {
        return Ok(Vec::new());
    }
    let t_last = t0 + step * T::from_usize(count - 1).unwrap();
    for ch in channels {
        check_phase(ch.max_abs_eigenvalue, t0)?;
        check_phase(ch.max_abs_eigenvalue, t_last)?;
    }

    let rotations: Vec<Vec<Complex<T>>> =
        channels.iter().map(|ch| ch.eigenvalues.iter().map(|&l| phasor(l * step)).collect()).collect();
    let width = channels.len();
    let chunk = (SCAN_CHUNK / width).max(RESYNC);
    let chunks = count.div_ceil(chunk);
    Ok((0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * chunk;
            let end = (start + chunk).min(count);
            let mut rows = Vec::with_capacity((end - start) * width);
            let mut z: Vec<Vec<Complex<T>>> = vec![Vec::new(); width];
            for i in start..end {
                let resync = (i - start).is_multiple_of(RESYNC);
                let tau = t0 + step * T::from_usize(i).unwrap();
                for (ci, ch) in channels.iter().enumerate() {
                    let zc = &mut z[ci];
                    if resync {
                        *zc = ch.eigenvalues.iter().map(|&l| phasor(l * tau)).collect();
                    } else {
                        for (zk, rk) in zc.iter_mut().zip(&rotations[ci]) {
                            *zk = *zk * *rk;
                        }
                    }
                    let amp = zc
                        .iter()
                        .zip(&ch.weights)
                        .fold(Complex::new(T::zero(), T::zero()), |acc, (zk, &w)| acc + *zk * w);
                    rows.push(clip_unit(amp.norm_sqr()));
                }
            }
            f(start, &rows)
        })
        .collect())
}

/// Amplitude for the excitation to move from the first node to node `n`.
pub fn transfer_amplitude<T: Scalar>(s: &SpectralDecomposition<T>, n: usize, tau: T) -> Result<TransferAmplitude<T>> {
    Channel::new(s, 0, n)?.amplitude(tau)
}

pub fn transfer_probability<T: Scalar>(s: &SpectralDecomposition<T>, n: usize, tau: T) -> Result<T> {
    Ok(transfer_amplitude(s, n, tau)?.probability())
}

/// Pointwise [`transfer_probability`] over an arbitrary grid.
pub fn probability_trace<T: Scalar>(s: &SpectralDecomposition<T>, n: usize, grid: &[T]) -> Result<Vec<T>> {
    let channel = Channel::new(s, 0, n)?;
    grid.iter().map(|&tau| channel.probability(tau)).collect()
}

/// `P_1n(tau)` for every node `n`.
pub fn site_probabilities<T: Scalar>(s: &SpectralDecomposition<T>, tau: T) -> Result<Vec<T>> {
    check_phase(s.max_abs_eigenvalue(), tau)?;
    let n = s.dim();
    if tau == T::zero() {
        return Ok((0..n).map(|site| if site == 0 { T::one() } else { T::zero() }).collect());
    }
    let v = s.eigenvectors();
    let coeffs: Vec<Complex<T>> = (0..n).map(|k| phasor(s.eigenvalues()[k] * tau) * v[(0, k)]).collect();
    Ok((0..n)
        .map(|site| {
            let amp = (0..n).fold(Complex::new(T::zero(), T::zero()), |acc, k| acc + coeffs[k] * v[(site, k)]);
            clip_unit(amp.norm_sqr())
        })
        .collect())
}

/// Uniform-grid scan of all site probabilities, reduced chunk by chunk.
/// `f(first_index, rows)` receives `rows[i][n] = P_1n(t0 + (first+i) step)`
/// flattened row-major with stride `N`.
pub fn scan_sites<T, R, F>(s: &SpectralDecomposition<T>, t0: T, step: T, count: usize, f: F) -> Result<Vec<R>>
where
    T: Scalar,
    R: Send,
    F: Fn(usize, &[T]) -> R + Sync,
{
    if count == 0 {
        return Ok(Vec::new());
    }
    let lmax = s.max_abs_eigenvalue();
    check_phase(lmax, t0)?;
    check_phase(lmax, t0 + step * T::from_usize(count - 1).unwrap())?;
    let n = s.dim();
    let v = s.eigenvectors();
    let lambdas = s.eigenvalues();
    let start_weights: Vec<T> = (0..n).map(|k| v[(0, k)]).collect();
    let rotations: Vec<Complex<T>> = lambdas.iter().map(|&l| phasor(l * step)).collect();
    let chunk = SCAN_CHUNK / 4;
    let chunks = count.div_ceil(chunk);
    Ok((0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * chunk;
            let end = (start + chunk).min(count);
            let mut rows = Vec::with_capacity((end - start) * n);
            let mut z: Vec<Complex<T>> = Vec::new();
            for i in start..end {
                if (i - start).is_multiple_of(RESYNC) {
                    let tau = t0 + step * T::from_usize(i).unwrap();
                    z = (0..n).map(|k| phasor(lambdas[k] * tau) * start_weights[k]).collect();
                } else {
                    for (zk, rk) in z.iter_mut().zip(&rotations) {
                        *zk = *zk * *rk;
                    }
                }
                for site in 0..n {
                    let row = v.row(site);
                    let amp = z.iter().zip(row).fold(Complex::new(T::zero(), T::zero()), |acc, (zk, &w)| acc + *zk * w);
                    rows.push(clip_unit(amp.norm_sqr()));
                }
            }
            f(start, &rows)
        })
        .collect())
}

/// Applies `exp(-i h tau)` to an arbitrary one-excitation state.
pub fn evolve_state<T: Scalar>(s: &SpectralDecomposition<T>, psi: &[Complex<T>], tau: T) -> Result<Vec<Complex<T>>> {
    let n = s.dim();
    if psi.len() != n {
        return Err(Error::IndexOutOfRange { index: psi.len(), len: n });
    }
    check_phase(s.max_abs_eigenvalue(), tau)?;
    if tau == T::zero() {
        return Ok(psi.to_vec());
    }
    let v = s.eigenvectors();
    let projected: Vec<Complex<T>> = (0..n)
        .map(|k| {
            let overlap = (0..n).fold(Complex::new(T::zero(), T::zero()), |acc, m| acc + psi[m] * v[(m, k)]);
            overlap * phasor(s.eigenvalues()[k] * tau)
        })
        .collect();
    Ok((0..n)
        .map(|m| (0..n).fold(Complex::new(T::zero(), T::zero()), |acc, k| acc + projected[k] * v[(m, k)]))
        .collect())
}

/// State-averaged fidelity `F = P^2/6 + P/3 + 1/2` of a one-qubit transfer
/// with end-to-end amplitude magnitude `P`.
pub fn fidelity<T: Scalar>(p: T) -> Result<T> {
    if !(p >= T::zero() && p <= T::one()) {
        return Err(Error::InvalidProbability(p.as_f64()));
    }
    Ok(p * p / T::lit(6.0) + p / T::lit(3.0) + T::lit(0.5))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use proptest::prelude::*;

    use super::*;
    use crate::geometry::{FieldOrientation, NodeList};
    use crate::hamiltonian::{AngularMode, CouplingMatrix, Hamiltonian1Ex};
    use crate::matrix::SquareMatrix;

    fn two_site(d: f64) -> SpectralDecomposition<f64> {
        let h = SquareMatrix::from_row_major(2, vec![d, d / 2.0, d / 2.0, d]).unwrap();
        SpectralDecomposition::of_matrix(&h).unwrap()
    }

    fn zigzag(n: usize, y: f64, chi: f64, window: usize) -> SpectralDecomposition<f64> {
        let nodes = NodeList::zigzag(n, y).unwrap();
        let field = FieldOrientation::new(chi).unwrap();
        let c = CouplingMatrix::build(&nodes, &field, window, AngularMode::ZigzagTime).unwrap();
        SpectralDecomposition::of_hamiltonian(&Hamiltonian1Ex::from_couplings(&c)).unwrap()
    }

    #[test]
    fn identity_at_time_zero() {
        let s = zigzag(7, 0.8, 1.2, 6);
        let a = transfer_amplitude(&s, 0, 0.0).unwrap();
        assert!((a.value() - Complex::new(1.0, 0.0)).norm() < 1e-14);
        assert!(transfer_amplitude(&s, 6, 0.0).unwrap().magnitude() < 1e-14);
    }

    #[test]
    fn two_site_closed_form() {
        // exp(-i h tau) for h = [[d, d/2], [d/2, d]]: |<2|U|1>|^2 = sin^2(d tau / 2).
        let d = 0.8;
        let s = two_site(d);
        for tau in [0.0, 0.3, 1.7, 5.0, 123.4] {
            let p = transfer_probability(&s, 1, tau).unwrap();
            assert!((p - (d * tau / 2.0).sin().powi(2)).abs() < 1e-13, "tau={tau}");
        }
        assert!((transfer_probability(&s, 1, PI / d).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn index_out_of_range() {
        let s = two_site(1.0);
        assert!(matches!(transfer_amplitude(&s, 2, 0.0), Err(Error::IndexOutOfRange { index: 2, len: 2 })));
    }

    #[test]
    fn phase_budget_enforced() {
        let s = two_site(1.0);
        assert!(matches!(transfer_probability(&s, 1, 1e10), Err(Error::PhaseRange(_))));
        assert!(transfer_probability(&s, 1, 1e8).is_ok());
    }

    #[test]
    fn fidelity_values() {
        assert_eq!(fidelity(1.0).unwrap(), 1.0);
        assert_eq!(fidelity(0.0).unwrap(), 0.5);
        assert!((fidelity(0.714).unwrap() - 0.82297_f64).abs() < 1e-5);
        assert!(fidelity(1.1).is_err());
        assert!(fidelity(-0.1).is_err());
    }

    #[test]
    fn amplitude_phase_range() {
        let a = TransferAmplitude::new(Complex::new(0.0, -0.5));
        assert!((a.phase() - 1.5 * PI).abs() < 1e-15);
        assert_eq!(a.magnitude(), 0.5);
    }

    #[test]
    fn trace_at_origin() {
        let s = zigzag(5, 1.0, 1.0, 4);
        assert_eq!(probability_trace(&s, 0, &[0.0]).unwrap(), vec![1.0]);
        assert_eq!(probability_trace(&s, 4, &[0.0]).unwrap(), vec![0.0]);
        assert_eq!(site_probabilities(&s, 0.0).unwrap(), vec![1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn four_site_windows_differ() {
        let grid: Vec<f64> = (0..=2000).map(|i| i as f64 * 0.05).collect();
        let traces: Vec<Vec<f64>> =
            (1..=3).map(|m| probability_trace(&zigzag(4, 0.0, 0.0, m), 3, &grid).unwrap()).collect();
        for a in 0..3 {
            for b in (a + 1)..3 {
                let gap = traces[a].iter().zip(&traces[b]).fold(0.0f64, |g, (x, y)| g.max((x - y).abs()));
                assert!(gap > 0.1, "M={} vs M={}: gap {gap}", a + 1, b + 1);
            }
        }
    }

    #[test]
    fn scan_matches_direct_evaluation() {
        let s = zigzag(9, 1.3, 1.4, 8);
        let ch = Channel::end_to_end(&s);
        let (t0, step, count) = (3.0, 0.037, 10_000);
        let scanned = ch.scan(t0, step, count).unwrap();
        for i in (0..count).step_by(97) {
            let direct = ch.probability(t0 + step * i as f64).unwrap();
            assert!((scanned[i] - direct).abs() < 1e-12, "i={i}");
        }
        let sites = scan_sites(&s, t0, step, 3000, |start, rows| (start, rows.to_vec())).unwrap();
        for (start, rows) in sites {
            for (i, row) in rows.chunks(9).enumerate().step_by(211) {
                let direct = site_probabilities(&s, t0 + step * (start + i) as f64).unwrap();
                for (a, b) in row.iter().zip(&direct) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn single_precision_two_site() {
        let h = SquareMatrix::<f32>::from_row_major(2, vec![1.0, 0.5, 0.5, 1.0]).unwrap();
        let s = SpectralDecomposition::of_matrix(&h).unwrap();
        let p = transfer_probability(&s, 1, 1.0f32).unwrap();
        assert!((p - 0.5f32.sin().powi(2)).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn unitarity_and_time_reversal(n in 2usize..14, y in 0.0f64..3.0, chi in 0.0f64..PI, tau in -500.0f64..500.0) {
            let s = zigzag(n, y, chi, n - 1);
            let probs = site_probabilities(&s, tau).unwrap();
            let total: f64 = probs.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            for (site, p) in probs.iter().enumerate() {
                let fwd = transfer_probability(&s, site, tau).unwrap();
                let back = transfer_probability(&s, site, -tau).unwrap();
                prop_assert!((fwd - back).abs() < 1e-12);
                prop_assert!((fwd - p).abs() < 1e-12);
            }
        }

        #[test]
        fn odd_chain_mirror_symmetry(half in 1usize..8, y in 0.0f64..3.0, chi in 0.0f64..PI, tau in 0.0f64..300.0) {
            let n = 2 * half + 1;
            let a = transfer_probability(&zigzag(n, y, chi, n - 1), n - 1, tau).unwrap();
            let b = transfer_probability(&zigzag(n, y, PI - chi, n - 1), n - 1, tau).unwrap();
            prop_assert!((a - b).abs() < 1e-10);
        }

        #[test]
        fn composition_of_half_steps(n in 2usize..12, y in 0.0f64..3.0, chi in 0.0f64..PI, tau in 0.0f64..200.0) {
            let s = zigzag(n, y, chi, n - 1);
            let mut psi = vec![Complex::new(0.0, 0.0); n];
            psi[0] = Complex::new(1.0, 0.0);
            let half = evolve_state(&s, &evolve_state(&s, &psi, tau / 2.0).unwrap(), tau / 2.0).unwrap();
            let full = evolve_state(&s, &psi, tau).unwrap();
            for site in 0..n {
                prop_assert!((half[site] - full[site]).norm() < 1e-10);
                let direct = transfer_amplitude(&s, site, tau).unwrap().value();
                prop_assert!((direct - full[site]).norm() < 1e-10);
            }
        }

        #[test]
        fn gauge_invariance(n in 2usize..12, y in 0.0f64..3.0, chi in 0.0f64..PI, shift in -50.0f64..50.0, tau in 0.0f64..100.0) {
            let nodes = NodeList::zigzag(n, y).unwrap();
            let c = CouplingMatrix::all_node(&nodes, &FieldOrientation::new(chi).unwrap(), AngularMode::ZigzagTime).unwrap();
            let h = Hamiltonian1Ex::from_couplings(&c);
            let plain = SpectralDecomposition::of_hamiltonian(&h).unwrap();
            let shifted = SpectralDecomposition::of_hamiltonian(&h.shifted(shift)).unwrap();
            for site in 0..n {
                let a = transfer_probability(&plain, site, tau).unwrap();
                let b = transfer_probability(&shifted, site, tau).unwrap();
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
