// SPDX-License-Identifier: Apache-2.0

//! Brute-force reference: the complete `2^N`-dimensional XXZ Hamiltonian
//! assembled from spin-1/2 operator matrices by Kronecker products, and
//! evolved by a dense Hermitian eigendecomposition (nalgebra).
//!
//! Nothing here goes through the one-excitation reduction or the in-crate
//! eigensolver; the pair prefactors are recomputed from the raw
//! coordinates. Site 0 is the leftmost Kronecker factor; basis state `|0>`
//! of a site is spin up, and an excitation is a flipped (down) spin.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{FieldOrientation, NodeList, Point};
use crate::hamiltonian::{check_window, AngularMode, CouplingMatrix, Hamiltonian1Ex};
use crate::spectral::SpectralDecomposition;

pub const MAX_SITES: usize = 12;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `(Ix, Iy, Iz)` for a single spin-1/2.
pub fn spin_operators() -> [DMatrix<Complex64>; 3] {
    let ix = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.0, 0.0)]);
    let iy = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -0.5), c(0.0, 0.5), c(0.0, 0.0)]);
    let iz = DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
    [ix, iy, iz]
}

/// Kronecker product over all `n` sites, identity except where `ops`
/// places an operator.
fn embed(ops: &[(usize, &DMatrix<Complex64>)], n: usize) -> DMatrix<Complex64> {
    let id = DMatrix::<Complex64>::identity(2, 2);
    let mut out = DMatrix::from_element(1, 1, c(1.0, 0.0));
    for site in 0..n {
        let factor = ops.iter().find(|(s, _)| *s == site).map_or(&id, |(_, op)| *op);
        out = out.kronecker(factor);
    }
    out
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_SITES {
        return Err(Error::SizeLimit { n, max: MAX_SITES });
    }
    Ok(())
}

/// Dipolar prefactor of pair `(i, j)` straight from the coordinates.
fn pair_prefactor(positions: &[Point<f64>], chi: f64, i: usize, j: usize, mode: AngularMode) -> Result<f64> {
    let dx = positions[j].x - positions[i].x;
    let dy = positions[j].y - positions[i].y;
    let r = (dx * dx + dy * dy).sqrt();
    if r == 0.0 {
        return Err(Error::DegenerateGeometry { i, j });
    }
    Ok(match mode {
        AngularMode::ZigzagTime => {
            let cos_phi = (dx * chi.cos() + dy * chi.sin()) / r;
            (3.0 * cos_phi * cos_phi - 1.0) / (2.0 * r * r * r)
        }
        AngularMode::AlternatingTime => 1.0 / (r * r * r),
    })
}

/// `sum_{i<j<=i+M} d_ij (IxIx + IyIy - 2 IzIz)` on the full space.
pub fn full_hamiltonian(
    nodes: &NodeList<f64>,
    field: &FieldOrientation<f64>,
    window: usize,
    mode: AngularMode,
) -> Result<DMatrix<Complex64>> {
    let n = nodes.len();
    check_size(n)?;
    check_window(window, n)?;
    let [ix, iy, iz] = spin_operators();
    let dim = 1usize << n;
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..n {
        for j in (i + 1)..n.min(i + window + 1) {
            let d = pair_prefactor(nodes.positions(), field.chi(), i, j, mode)?;
            let xx = embed(&[(i, &ix), (j, &ix)], n);
            let yy = embed(&[(i, &iy), (j, &iy)], n);
            let zz = embed(&[(i, &iz), (j, &iz)], n);
            h += (xx + yy - zz * c(2.0, 0.0)) * c(d, 0.0);
        }
    }
    Ok(h)
}

/// `sum_i Iz_i`.
pub fn total_iz(n: usize) -> Result<DMatrix<Complex64>> {
    check_size(n)?;
    let [_, _, iz] = spin_operators();
    let dim = 1usize << n;
    let mut total = DMatrix::<Complex64>::zeros(dim, dim);
    for site in 0..n {
        total += embed(&[(site, &iz)], n);
    }
    Ok(total)
}

/// Basis index of the state with only `site` flipped.
pub fn excited_index(n: usize, site: usize) -> usize {
    1usize << (n - 1 - site)
}

/// Extracts the `N x N` one-excitation block of a full Hamiltonian.
pub fn one_excitation_block(h: &DMatrix<Complex64>, n: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |a, b| h[(excited_index(n, a), excited_index(n, b))])
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullStateVector {
    n: usize,
    amplitudes: DVector<Complex64>,
}

impl FullStateVector {
    /// `|site>`: one flipped spin, all others aligned.
    pub fn excited(n: usize, site: usize) -> Result<Self> {
        check_size(n)?;
        if site >= n {
            return Err(Error::IndexOutOfRange { index: site, len: n });
        }
        let mut amplitudes = DVector::zeros(1 << n);
        amplitudes[excited_index(n, site)] = c(1.0, 0.0);
        Ok(Self { n, amplitudes })
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Population of the one-excitation state `|site>`.
    pub fn site_probability(&self, site: usize) -> f64 {
        self.amplitudes[excited_index(self.n, site)].norm_sqr()
    }

    /// Weight outside the one-excitation sector.
    pub fn leakage(&self) -> f64 {
        let inside: f64 = (0..self.n).map(|s| self.site_probability(s)).sum();
        (self.amplitudes.norm_squared() - inside).abs()
    }
}

/// Eigendecomposition of a full Hamiltonian.
pub struct FullSpaceEvolution {
    n: usize,
    values: DVector<f64>,
    vectors: DMatrix<f64>,
}

impl FullSpaceEvolution {
    /// The XXZ Hamiltonian is real in the `Iz` basis (`IyIy` has real
    /// entries); anything else indicates a construction error.
    pub fn new(h: &DMatrix<Complex64>, n: usize) -> Result<Self> {
        let worst_imag = h.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
        if worst_imag > 1e-13 {
            return Err(Error::InvalidMatrix(format!("imaginary part {worst_imag:e} in XXZ Hamiltonian")));
        }
        let real = h.map(|z| z.re);
        let eig = SymmetricEigen::new(real);
        Ok(Self { n, values: eig.eigenvalues, vectors: eig.eigenvectors })
    }

    pub fn evolve(&self, state: &FullStateVector, tau: f64) -> FullStateVector {
        let v = &self.vectors;
        let coeffs = v.transpose().map(|x| c(x, 0.0)) * &state.amplitudes;
        let rotated =
            DVector::from_fn(coeffs.len(), |k, _| coeffs[k] * Complex64::from_polar(1.0, -self.values[k] * tau));
        FullStateVector { n: self.n, amplitudes: v.map(|x| c(x, 0.0)) * rotated }
    }

    /// `|<target| exp(-i H tau) |source>|^2`.
    pub fn probability(&self, source: usize, target: usize, tau: f64) -> f64 {
        let (s, t) = (excited_index(self.n, source), excited_index(self.n, target));
        let amp = (0..self.values.len()).fold(c(0.0, 0.0), |acc, k| {
            acc + Complex64::from_polar(self.vectors[(t, k)] * self.vectors[(s, k)], -self.values[k] * tau)
        });
        amp.norm_sqr()
    }
}

/// `|<site| exp(-i H tau) |first>|^2` computed on the full space.
pub fn full_space_probability(
    nodes: &NodeList<f64>,
    field: &FieldOrientation<f64>,
    window: usize,
    mode: AngularMode,
    site: usize,
    tau: f64,
) -> Result<f64> {
    let n = nodes.len();
    if site >= n {
        return Err(Error::IndexOutOfRange { index: site, len: n });
    }
    let h = full_hamiltonian(nodes, field, window, mode)?;
    Ok(FullSpaceEvolution::new(&h, n)?.probability(0, site, tau))
}

/// One randomly drawn comparison case.
#[derive(Debug, Clone)]
pub struct OracleInstance {
    pub nodes: NodeList<f64>,
    pub chi: f64,
    pub window: usize,
    pub mode: AngularMode,
    pub taus: Vec<f64>,
}

impl OracleInstance {
    pub fn random(rng: &mut impl Rng, n: usize, taus: usize) -> Self {
        let nodes = match rng.gen_range(0..3) {
            0 => NodeList::zigzag(n, rng.gen_range(0.0..3.0)).unwrap(),
            1 => NodeList::alternating(n, rng.gen_range(0.2..1.8)).unwrap(),
            _ => {
                let mut x = 0.0;
                let pts = (0..n)
                    .map(|_| {
                        let p = Point::new(x, rng.gen_range(-1.0..1.0));
                        x += rng.gen_range(0.4..1.6);
                        p
                    })
                    .collect();
                NodeList::custom(pts).unwrap()
            }
        };
        let mode = if rng.gen_bool(0.25) { AngularMode::AlternatingTime } else { AngularMode::ZigzagTime };
        Self {
            nodes,
            chi: rng.gen_range(0.0..std::f64::consts::PI),
            window: rng.gen_range(1..n),
            mode,
            taus: (0..taus).map(|_| rng.gen_range(0.0..50.0)).collect(),
        }
    }

    /// Largest `|p_full - p_reduced|` over all sites and sampled times.
    pub fn max_deviation(&self) -> Result<f64> {
        let n = self.nodes.len();
        let field = FieldOrientation::new(self.chi)?;
        let full = FullSpaceEvolution::new(&full_hamiltonian(&self.nodes, &field, self.window, self.mode)?, n)?;
        let c = CouplingMatrix::build(&self.nodes, &field, self.window, self.mode)?;
        let reduced = SpectralDecomposition::of_hamiltonian(&Hamiltonian1Ex::from_couplings(&c))?;
        let mut worst = 0.0f64;
        for &tau in &self.taus {
            let probs = crate::dynamics::site_probabilities(&reduced, tau)?;
            for (site, p) in probs.iter().enumerate() {
                worst = worst.max((full.probability(0, site, tau) - p).abs());
            }
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub seed: u64,
    pub instances: usize,
    pub comparisons: usize,
    pub max_abs_diff: f64,
    /// `(N, M, max deviation)` per instance, in draw order.
    pub per_instance: Vec<(usize, usize, f64)>,
}

impl OracleReport {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.max_abs_diff <= tolerance
    }
}

/// Draws `instances` random cases with `N` uniform in `n_min..=n_max` and
/// compares reduced against full-space probabilities at `taus` random times.
pub fn run_equivalence_suite(
    seed: u64,
    instances: usize,
    n_min: usize,
    n_max: usize,
    taus: usize,
) -> Result<OracleReport> {
    check_size(n_max)?;
    if n_min < 2 || n_min > n_max {
        return Err(Error::InvalidChain(format!("bad size range {n_min}..={n_max}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases: Vec<OracleInstance> = (0..instances)
        .map(|_| {
            let n = rng.gen_range(n_min..=n_max);
            OracleInstance::random(&mut rng, n, taus)
        })
        .collect();
    let mut per_instance = Vec::with_capacity(instances);
    let mut comparisons = 0;
    let mut max_abs_diff = 0.0f64;
    for case in &cases {
        let dev = case.max_deviation()?;
        comparisons += case.taus.len() * case.nodes.len();
        max_abs_diff = max_abs_diff.max(dev);
        per_instance.push((case.nodes.len(), case.window, dev));
    }
    Ok(OracleReport { seed, instances, comparisons, max_abs_diff, per_instance })
}
