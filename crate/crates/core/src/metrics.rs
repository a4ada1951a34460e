// SPDX-License-Identifier: Apache-2.0

//! Figures of merit for end-to-end transfer and for the `M`-neighbour
//! approximation.
//!
//! `P_1N(tau)` is a trigonometric polynomial whose frequencies are
//! eigenvalue differences, all bounded by the spectral spread `W`. Sampling
//! at `min(0.05, pi / (4 W))` therefore resolves every peak; the best
//! samples are then refined by successive parabolic interpolation. Time
//! averages use the composite trapezoid rule on the same grid.

use rayon::prelude::*;

use crate::dynamics::{scan_channels, Channel};
use crate::error::{Error, Result};
use crate::geometry::{FieldOrientation, NodeList};
use crate::hamiltonian::{check_window, AngularMode, CouplingMatrix, Hamiltonian1Ex};
use crate::scalar::Scalar;
use crate::spectral::SpectralDecomposition;

/// Coarsest sampling step ever used.
pub const MAX_STEP: f64 = 0.05;
/// Refined peak position is accurate to this many time units.
pub const REFINE_TOL: f64 = 1e-3;
/// Default tolerance for the minimal window.
pub const DEFAULT_EPSILON: f64 = 0.01;

/// Sampled local maxima carried into refinement.
const CANDIDATES: usize = 64;
/// Refined maxima closer than this count as ties; the earliest wins.
const TIE_TOL: f64 = 1e-9;

/// `min(0.05, pi / (4 W))` for spectral spread `W`.
pub fn sampling_step<T: Scalar>(spread: T) -> T {
    let cap = T::lit(MAX_STEP);
    if spread > T::zero() {
        cap.min(T::PI() / (T::lit(4.0) * spread))
    } else {
        cap
    }
}

/// Uniform grid `i * T / intervals`, `i = 0..=intervals`, ending exactly at
/// the window length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<T> {
    t_max: T,
    intervals: usize,
}

impl<T: Scalar> TimeGrid<T> {
    /// Finest grid on `[0, t_max]` whose step does not exceed `max_step`.
    pub fn new(t_max: T, max_step: T) -> Result<Self> {
        if !(t_max > T::zero() && t_max.is_finite()) {
            return Err(Error::InvalidWindowLength(format!("T must be positive, got {t_max}")));
        }
        if !(max_step > T::zero()) {
            return Err(Error::InvalidWindowLength(format!("step must be positive, got {max_step}")));
        }
        let intervals = (t_max / max_step).ceil().to_usize().unwrap_or(usize::MAX).max(1);
        Ok(Self { t_max, intervals })
    }

    /// Grid fine enough for every spectrum in `spectra`.
    pub fn for_spectra<'a>(t_max: T, spectra: impl IntoIterator<Item = &'a SpectralDecomposition<T>>) -> Result<Self> {
        let step = spectra.into_iter().map(|s| sampling_step(s.spread())).fold(T::lit(MAX_STEP), |a, b| a.min(b));
        Self::new(t_max, step)
    }

    pub fn t_max(&self) -> T {
        self.t_max
    }

    pub fn step(&self) -> T {
        self.t_max / T::from_usize(self.intervals).unwrap()
    }

    /// Number of samples (`intervals + 1`).
    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tau(&self, i: usize) -> T {
        if i == self.intervals {
            self.t_max
        } else {
            self.step() * T::from_usize(i).unwrap()
        }
    }

    pub fn taus(&self) -> Vec<T> {
        (0..self.len()).map(|i| self.tau(i)).collect()
    }

    /// Trapezoid weight of sample `i`.
    #[inline]
    fn weight(&self, i: usize) -> T {
        if i == 0 || i == self.intervals {
            self.step() * T::lit(0.5)
        } else {
            self.step()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferOptimum<T> {
    pub p_max: T,
    pub tau_max: T,
    pub window: T,
}

/// Global maximum of `P_1N` on `[0, t_max]`.
pub fn max_probability<T: Scalar>(s: &SpectralDecomposition<T>, t_max: T) -> Result<TransferOptimum<T>> {
    let grid = TimeGrid::for_spectra(t_max, [s])?;
    max_probability_on(&Channel::end_to_end(s), &grid)
}

/// Global maximum of a channel's probability over a given sampling grid.
pub fn max_probability_on<T: Scalar>(channel: &Channel<T>, grid: &TimeGrid<T>) -> Result<TransferOptimum<T>> {
    let step = grid.step();
    let count = grid.len();
    let per_chunk = channel.scan_chunks(T::zero(), step, count, |start, probs| {
        let mut local: Vec<(T, usize)> = Vec::new();
        for (k, &p) in probs.iter().enumerate() {
            let left_ok = k == 0 || p >= probs[k - 1];
            let right_ok = k + 1 == probs.len() || p >= probs[k + 1];
            if left_ok && right_ok {
                local.push((p, start + k));
            }
        }
        top_candidates(&mut local);
        local
    })?;
    let mut candidates: Vec<(T, usize)> = per_chunk.into_iter().flatten().collect();
    top_candidates(&mut candidates);

    let refined: Vec<(T, T)> =
        candidates.iter().map(|&(p, i)| refine_peak(channel, grid.tau(i), p, step, grid.t_max())).collect();
    let best = refined.iter().fold(T::zero(), |m, &(p, _)| m.max(p));
    let (p_max, tau_max) = refined
        .iter()
        .filter(|&&(p, _)| p >= best - T::lit(TIE_TOL))
        .fold(None, |acc: Option<(T, T)>, &(p, t)| match acc {
            Some((_, ta)) if ta <= t => acc,
            _ => Some((p, t)),
        })
        .unwrap_or((T::zero(), T::zero()));
    Ok(TransferOptimum { p_max, tau_max, window: grid.t_max() })
}

fn top_candidates<T: Scalar>(list: &mut Vec<(T, usize)>) {
    list.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    list.truncate(CANDIDATES);
}

/// Hill-climb plus parabolic interpolation with step halving, confined to
/// `[0, t_max]`. Returns `(p, tau)`.
fn refine_peak<T: Scalar>(channel: &Channel<T>, t_start: T, p_start: T, step: T, t_max: T) -> (T, T) {
    let f = |t: T| channel.probability_unchecked(t);
    let tol = T::lit(REFINE_TOL) * T::lit(0.1);
    let (mut t, mut p) = (t_start, p_start.max(f(t_start)));
    let mut h = step;
    for _ in 0..400 {
        let tl = (t - h).max(T::zero());
        let tr = (t + h).min(t_max);
        let (pl, pr) = (f(tl), f(tr));
        if pl > p && pl >= pr {
            (t, p) = (tl, pl);
            continue;
        }
        if pr > p {
            (t, p) = (tr, pr);
            continue;
        }
        if tl < t && tr > t {
            if let Some(tv) = parabola_vertex((tl, pl), (t, p), (tr, pr)) {
                if tv > tl && tv < tr {
                    let pv = f(tv);
                    if pv > p {
                        (t, p) = (tv, pv);
                    }
                }
            }
        }
        if h <= tol {
            break;
        }
        h = h * T::lit(0.5);
    }
    (p, t)
}

fn parabola_vertex<T: Scalar>((a, fa): (T, T), (b, fb): (T, T), (c, fc): (T, T)) -> Option<T> {
    let num = (b - a) * (b - a) * (fb - fc) - (b - c) * (b - c) * (fb - fa);
    let den = (b - a) * (fb - fc) - (b - c) * (fb - fa);
    if den == T::zero() {
        return None;
    }
    let v = b - T::lit(0.5) * num / den;
    v.is_finite().then_some(v)
}

/// Time average `(1/T) int_0^T p dtau` of uniformly spaced samples (step
/// `step`, first sample at 0) by the composite trapezoid rule.
pub fn j_integral<T: Scalar>(samples: &[T], step: T) -> T {
    match samples.len() {
        0 => T::zero(),
        1 => samples[0],
        len => {
            let inner: T = samples[1..len - 1].iter().copied().sum();
            let area = step * (inner + T::lit(0.5) * (samples[0] + samples[len - 1]));
            area / (step * T::from_usize(len - 1).unwrap())
        }
    }
}

/// Time averages and L1 deviation ratios for every window `M = 1..N-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxReport<T> {
    /// `J_M`, index `M - 1`.
    pub j: Vec<T>,
    /// `J_{M,N-1}`, index `M - 1`.
    pub ratio: Vec<T>,
    pub cal_m: usize,
    pub epsilon: T,
    pub t_max: T,
    pub step: T,
}

impl<T: Scalar> ApproxReport<T> {
    pub fn n_windows(&self) -> usize {
        self.ratio.len()
    }

    pub fn j_for(&self, window: usize) -> T {
        self.j[window - 1]
    }

    pub fn ratio_for(&self, window: usize) -> T {
        self.ratio[window - 1]
    }

    /// All-node time average `J_{N-1}`.
    pub fn j_all(&self) -> T {
        *self.j.last().unwrap()
    }

    /// Windows just below the minimal one still fail the tolerance.
    pub fn is_consistent(&self) -> bool {
        let m = self.cal_m;
        self.ratio[m - 1..].iter().all(|&r| r <= self.epsilon) && (m == 1 || self.ratio[m - 2] > self.epsilon)
    }
}

/// Smallest `M` such that `ratio[M'] <= epsilon` for every `M' >= M`.
/// `ratios[k]` belongs to window `k + 1`.
pub fn minimal_m<T: Scalar>(ratios: &[T], epsilon: T) -> usize {
    ratios.iter().rposition(|&r| !(r <= epsilon)).map_or(1, |k| k + 2)
}

/// Spectral decomposition of `H_M` for one window.
pub fn spectral_for_window<T: Scalar>(
    nodes: &NodeList<T>,
    field: &FieldOrientation<T>,
    window: usize,
    mode: AngularMode,
) -> Result<SpectralDecomposition<T>> {
    let c = CouplingMatrix::build(nodes, field, window, mode)?;
    SpectralDecomposition::of_hamiltonian(&Hamiltonian1Ex::from_couplings(&c))
}

/// Per-channel integrals `int p_c` and `int |p_ref - p_c|` on a grid, with
/// channel 0 as the reference.
fn integrate_against_reference<T: Scalar>(channels: &[Channel<T>], grid: &TimeGrid<T>) -> Result<Vec<(T, T)>> {
    let width = channels.len();
    let partials = scan_channels(channels, T::zero(), grid.step(), grid.len(), |start, rows| {
        let mut acc = vec![(T::zero(), T::zero()); width];
        for (k, row) in rows.chunks(width).enumerate() {
            let w = grid.weight(start + k);
            let reference = row[0];
            for (c, &p) in row.iter().enumerate() {
                acc[c].0 = acc[c].0 + w * p;
                acc[c].1 = acc[c].1 + w * (reference - p).abs();
            }
        }
        acc
    })?;
    let mut total = vec![(T::zero(), T::zero()); width];
    for chunk in partials {
        for (t, c) in total.iter_mut().zip(chunk) {
            t.0 = t.0 + c.0;
            t.1 = t.1 + c.1;
        }
    }
    Ok(total)
}

/// `J_{M,N-1} = int |p_{N-1} - p_M| / (T J_{N-1})` for a single window.
pub fn j_ratio<T: Scalar>(
    nodes: &NodeList<T>,
    field: &FieldOrientation<T>,
    mode: AngularMode,
    window: usize,
    t_max: T,
) -> Result<T> {
    let n = nodes.len();
    check_window(window, n)?;
    if window == n - 1 {
        return Ok(T::zero());
    }
    let full = spectral_for_window(nodes, field, n - 1, mode)?;
    let reduced = spectral_for_window(nodes, field, window, mode)?;
    let grid = TimeGrid::for_spectra(t_max, [&full, &reduced])?;
    let channels = [Channel::end_to_end(&full), Channel::end_to_end(&reduced)];
    let integrals = integrate_against_reference(&channels, &grid)?;
    let full_area = integrals[0].0;
    if !(full_area > T::zero()) {
        return Err(Error::UndefinedRatio);
    }
    Ok(integrals[1].1 / full_area)
}

/// Full `M`-scan: `J_M`, the deviation ratios and the minimal window.
pub fn approx_report<T: Scalar>(
    nodes: &NodeList<T>,
    field: &FieldOrientation<T>,
    mode: AngularMode,
    t_max: T,
    epsilon: T,
) -> Result<ApproxReport<T>> {
    if !(epsilon > T::zero()) {
        return Err(Error::InvalidWindowLength(format!("epsilon must be positive, got {epsilon}")));
    }
    let n = nodes.len();
    // Index 0 holds the all-node reference, index M holds window M.
    let windows: Vec<usize> = std::iter::once(n - 1).chain(1..n).collect();
    let spectra =
        windows.par_iter().map(|&m| spectral_for_window(nodes, field, m, mode)).collect::<Result<Vec<_>>>()?;
    let grid = TimeGrid::for_spectra(t_max, &spectra)?;
    let channels: Vec<Channel<T>> = spectra.iter().map(Channel::end_to_end).collect();
    let integrals = integrate_against_reference(&channels, &grid)?;

    let full_area = integrals[0].0;
    if !(full_area > T::zero()) {
        return Err(Error::UndefinedRatio);
    }
    let j = integrals[1..].iter().map(|&(area, _)| area / t_max).collect();
    let mut ratio: Vec<T> = integrals[1..].iter().map(|&(_, dev)| dev / full_area).collect();
    // Same Hamiltonian as the reference: identical samples, exact zero.
    *ratio.last_mut().unwrap() = T::zero();
    let cal_m = minimal_m(&ratio, epsilon);
    Ok(ApproxReport { j, ratio, cal_m, epsilon, t_max, step: grid.step() })
}

/// Period `2 pi / |lambda_k - lambda_l|` of the strongest oscillating term
/// of `P(tau) = sum_kl c_k c_l cos((lambda_k - lambda_l) tau)`. `None` if
/// the probability is constant.
pub fn dominant_period<T: Scalar>(channel: &Channel<T>) -> Option<T> {
    let lambdas = channel.eigenvalues();
    let weights = channel.weights();
    let scale = lambdas.iter().fold(T::one(), |m, &l| m.max(l.abs()));
    let resolvable = T::lit(64.0) * T::epsilon() * scale;
    let mut best: Option<(T, T)> = None;
    for k in 0..lambdas.len() {
        for l in (k + 1)..lambdas.len() {
            let gap = (lambdas[l] - lambdas[k]).abs();
            let strength = (weights[k] * weights[l]).abs();
            if gap <= resolvable || strength == T::zero() {
                continue;
            }
            if best.is_none_or(|(s, _)| strength > s) {
                best = Some((strength, gap));
            }
        }
    }
    best.map(|(_, gap)| T::TAU() / gap)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::matrix::SquareMatrix;

    fn two_site(d: f64) -> SpectralDecomposition<f64> {
        let h = SquareMatrix::from_row_major(2, vec![d, d / 2.0, d / 2.0, d]).unwrap();
        SpectralDecomposition::of_matrix(&h).unwrap()
    }

    #[test]
    fn step_bound() {
        assert_eq!(sampling_step(0.0), 0.05);
        assert_eq!(sampling_step(1.0), 0.05);
        assert!((sampling_step(100.0) - PI / 400.0).abs() < 1e-16);
    }

    #[test]
    fn grid_ends_on_window() {
        let g = TimeGrid::<f64>::new(1.0, 0.3).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g.tau(4), 1.0);
        assert!((g.step() - 0.25).abs() < 1e-16);
        assert!(TimeGrid::new(0.0, 0.1).is_err());
        assert!(TimeGrid::new(-1.0, 0.1).is_err());
    }

    #[test]
    fn two_site_maximum_at_half_period() {
        let d = 0.9;
        let s = two_site(d);
        let opt = max_probability(&s, PI / d).unwrap();
        assert!((opt.p_max - 1.0).abs() < 1e-12);
        assert!((opt.tau_max - PI / d).abs() < 1e-3);
        assert!(opt.tau_max <= opt.window);

        // Over two periods the earliest peak wins the tie.
        let opt = max_probability(&s, 2.5 * PI / d).unwrap();
        assert!((opt.tau_max - PI / d).abs() < 1e-3, "{opt:?}");
    }

    #[test]
    fn optimum_is_an_evaluated_point() {
        let nodes = NodeList::zigzag(9, 1.1).unwrap();
        let field = FieldOrientation::new(1.5).unwrap();
        let s = spectral_for_window(&nodes, &field, 8, AngularMode::ZigzagTime).unwrap();
        let opt = max_probability(&s, 90.0).unwrap();
        let at = crate::dynamics::transfer_probability(&s, 8, opt.tau_max).unwrap();
        assert_eq!(at, opt.p_max);
        assert!(opt.tau_max >= 0.0 && opt.tau_max <= 90.0);
    }

    #[test]
    fn trapezoid_average() {
        assert_eq!(j_integral(&[0.3; 11], 0.1), 0.3);
        // Exact for linear data: mean of 0..1 is 1/2.
        let ramp: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        assert!((j_integral(&ramp, 0.1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn two_site_average_over_period() {
        let d = 1.3;
        let period = 2.0 * PI / d;
        let grid = TimeGrid::new(period, 0.01).unwrap();
        let trace = Channel::end_to_end(&two_site(d)).scan(0.0, grid.step(), grid.len()).unwrap();
        assert!((j_integral(&trace, grid.step()) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn minimal_window_rule() {
        assert_eq!(minimal_m(&[0.5, 0.2, 0.005, 0.02, 0.001, 0.0], 0.01), 5);
        assert_eq!(minimal_m(&[0.5, 0.2, 0.005, 0.002, 0.001, 0.0], 0.01), 3);
        assert_eq!(minimal_m(&[0.5, 0.2, 0.0], f64::MAX), 1);
        assert_eq!(minimal_m(&[f64::NAN, 0.0], 0.01), 2);
    }

    #[test]
    fn approx_report_small_chain() {
        let nodes = NodeList::zigzag(8, 1.0).unwrap();
        let field = FieldOrientation::new(1.5).unwrap();
        let r = approx_report(&nodes, &field, AngularMode::ZigzagTime, 80.0, 0.01).unwrap();
        assert_eq!(r.n_windows(), 7);
        assert_eq!(r.ratio_for(7), 0.0);
        assert!(r.is_consistent());
        let single: f64 = j_ratio(&nodes, &field, AngularMode::ZigzagTime, 3, 80.0).unwrap();
        assert!((single - r.ratio_for(3)).abs() < 1e-6);
        assert_eq!(j_ratio(&nodes, &field, AngularMode::ZigzagTime, 7, 80.0).unwrap(), 0.0);

        let loose = approx_report(&nodes, &field, AngularMode::ZigzagTime, 80.0, 1e9).unwrap();
        assert_eq!(loose.cal_m, 1);
    }

    #[test]
    fn magic_angle_ratio_is_undefined() {
        let nodes = NodeList::alternating(6, 1.2).unwrap();
        let field = FieldOrientation::magic();
        assert!(matches!(
            approx_report(&nodes, &field, AngularMode::ZigzagTime, 50.0, 0.01),
            Err(Error::UndefinedRatio)
        ));
        assert!(matches!(j_ratio(&nodes, &field, AngularMode::ZigzagTime, 2, 50.0), Err(Error::UndefinedRatio)));
    }

    #[test]
    fn two_site_period() {
        let d = 0.5;
        let p = dominant_period(&Channel::end_to_end(&two_site(d))).unwrap();
        assert!((p - 2.0 * PI / d).abs() < 1e-12);
        let diag = SquareMatrix::from_row_major(2, vec![1.0, 0.0, 0.0, 2.0]).unwrap();
        let s = SpectralDecomposition::of_matrix(&diag).unwrap();
        assert!(dominant_period(&Channel::end_to_end(&s)).is_none());
    }
}
