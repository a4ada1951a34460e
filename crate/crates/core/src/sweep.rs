// SPDX-License-Identifier: Apache-2.0

//! Grid scans over chain geometry and field orientation.
//!
//! Zigzag chains are scanned over `(Y, chi)` in zigzag-time units,
//! alternating chains over `alpha` in alternating-time units. Grid points
//! are independent; results are collected in row-major order whatever the
//! worker count, and a failing point becomes a sentinel record instead of
//! aborting the scan.

use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::geometry::{ChainKind, FieldOrientation, NodeList};
use crate::hamiltonian::AngularMode;
use crate::io::{format_sig, TRACE_DIGITS};
use crate::metrics::{approx_report, max_probability, spectral_for_window};

/// High-probability region for the 41-node zigzag chain: `(Y lo, Y hi, chi lo, chi hi)`.
pub const REGION_N41: (f64, f64, f64, f64) = (0.80, 2.45, 1.23, 1.92);
/// High-probability region for the 40-node zigzag chain.
pub const REGION_N40: (f64, f64, f64, f64) = (0.65, 4.2, 1.35, 2.1);
pub const DEFAULT_GRID_COUNT: usize = 60;

/// Default registration window: `10 N` for odd zigzag chains, `850` at
/// `N = 40` for even ones and `5e5` at `N = 40` for alternating chains,
/// scaled linearly in `N` away from 40.
pub fn default_window(kind: ChainKind, n: usize) -> f64 {
    let odd = n % 2 == 1;
    let n = n as f64;
    match kind {
        ChainKind::Alternating => 5e5 * n / 40.0,
        _ if odd => 10.0 * n,
        _ => 850.0 * n / 40.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum AxisName {
    #[serde(rename = "Y")]
    Y,
    #[serde(rename = "chi")]
    Chi,
    #[serde(rename = "alpha")]
    Alpha,
}

impl AxisName {
    pub fn as_str(self) -> &'static str {
        match self {
            AxisName::Y => "Y",
            AxisName::Chi => "chi",
            AxisName::Alpha => "alpha",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "Y" | "y" => Some(AxisName::Y),
            "chi" => Some(AxisName::Chi),
            "alpha" => Some(AxisName::Alpha),
            _ => None,
        }
    }
}

/// Evenly spaced parameter range, endpoints included. `count == 1` is a
/// pinned axis and requires `lo == hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Axis {
    pub name: AxisName,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(name: AxisName, lo: f64, hi: f64, count: usize) -> Result<Self> {
        let axis = Self { name, lo, hi, count };
        axis.validate()?;
        Ok(axis)
    }

    /// Parses `name:lo:hi:count`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidGrid(format!("{spec:?}: {msg}"));
        let parts: Vec<&str> = spec.split(':').collect();
        let [name, lo, hi, count] = parts.as_slice() else {
            return Err(bad("expected <axis:lo:hi:count>"));
        };
        let name = AxisName::parse(name).ok_or_else(|| bad("axis must be Y, chi or alpha"))?;
        let lo: f64 = lo.parse().map_err(|_| bad("lo is not a number"))?;
        let hi: f64 = hi.parse().map_err(|_| bad("hi is not a number"))?;
        let count: usize = count.parse().map_err(|_| bad("count is not a positive integer"))?;
        Self::new(name, lo, hi, count)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidGrid(format!("axis {}: {msg}", self.name.as_str())));
        if !(self.lo.is_finite() && self.hi.is_finite()) {
            return bad("non-finite bound".into());
        }
        match self.count {
            0 => bad("count must be at least 1".into()),
            1 if self.lo != self.hi => bad("a single-point axis needs lo == hi".into()),
            1 => Ok(()),
            _ if !(self.lo < self.hi) => bad(format!("need lo < hi, got {} >= {}", self.lo, self.hi)),
            _ => Ok(()),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| if i + 1 == self.count { self.hi } else { self.lo + (self.hi - self.lo) * i as f64 / last })
            .collect()
    }

    /// Grid spacing (0 for a pinned axis).
    pub fn cell(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.hi - self.lo) / (self.count - 1) as f64
        }
    }

    pub fn to_spec(&self) -> String {
        format!("{}:{}:{}:{}", self.name.as_str(), self.lo, self.hi, self.count)
    }
}

/// Which Hamiltonian the per-point maximum is taken on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MPolicy {
    /// All-node window only.
    AllNode,
    /// Maximum of `p_M` for a fixed window.
    Fixed(usize),
    /// All-node maximum plus the minimal window and `J_{N-1}`.
    Auto,
}

impl MPolicy {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "all" => Some(MPolicy::AllNode),
            "auto" => Some(MPolicy::Auto),
            _ => s.parse().ok().filter(|&m| m >= 1).map(MPolicy::Fixed),
        }
    }

    pub fn as_string(&self) -> String {
        match self {
            MPolicy::AllNode => "all".into(),
            MPolicy::Auto => "auto".into(),
            MPolicy::Fixed(m) => m.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub n: usize,
    pub kind: ChainKind,
    /// Zigzag: `[Y, chi]`. Alternating: `[alpha]`.
    pub axes: Vec<Axis>,
    pub policy: MPolicy,
    pub t_max: f64,
    pub epsilon: f64,
}

impl SweepGrid {
    pub fn zigzag(n: usize, y: Axis, chi: Axis, t_max: f64, policy: MPolicy, epsilon: f64) -> Result<Self> {
        let grid = Self { n, kind: ChainKind::Zigzag, axes: vec![y, chi], policy, t_max, epsilon };
        grid.validate()?;
        Ok(grid)
    }

    pub fn alternating(n: usize, alpha: Axis, t_max: f64, policy: MPolicy, epsilon: f64) -> Result<Self> {
        let grid = Self { n, kind: ChainKind::Alternating, axes: vec![alpha], policy, t_max, epsilon };
        grid.validate()?;
        Ok(grid)
    }

    /// Builds a grid from axes given in any order.
    pub fn from_axes(
        n: usize,
        kind: ChainKind,
        mut axes: Vec<Axis>,
        t_max: f64,
        policy: MPolicy,
        epsilon: f64,
    ) -> Result<Self> {
        axes.sort_by_key(|a| a.name as u8);
        let grid = Self { n, kind, axes, policy, t_max, epsilon };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        let names: Vec<AxisName> = self.axes.iter().map(|a| a.name).collect();
        match self.kind {
            ChainKind::Zigzag if names != [AxisName::Y, AxisName::Chi] => {
                return Err(Error::InvalidGrid("zigzag sweeps need exactly the axes Y and chi".into()));
            }
            ChainKind::Alternating if names != [AxisName::Alpha] => {
                return Err(Error::InvalidGrid("alternating sweeps need exactly the axis alpha".into()));
            }
            ChainKind::Custom => {
                return Err(Error::InvalidGrid("custom geometries cannot be swept".into()));
            }
            _ => {}
        }
        for axis in &self.axes {
            axis.validate()?;
        }
        if self.n < 2 {
            return Err(Error::InvalidChain(format!("need at least 2 nodes, got {}", self.n)));
        }
        if let MPolicy::Fixed(m) = self.policy {
            crate::hamiltonian::check_window(m, self.n)?;
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::InvalidWindowLength(format!("T must be positive, got {}", self.t_max)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidGrid(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }

    /// Parameter tuples in row-major order (first axis outermost).
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut points = vec![Vec::new()];
        for axis in &self.axes {
            let values = axis.values();
            points = points
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        points
    }

    fn mode(&self) -> AngularMode {
        match self.kind {
            ChainKind::Alternating => AngularMode::AlternatingTime,
            _ => AngularMode::ZigzagTime,
        }
    }

    fn chain(&self, params: &[f64]) -> Result<(NodeList<f64>, FieldOrientation<f64>)> {
        match self.kind {
            ChainKind::Alternating => Ok((NodeList::alternating(self.n, params[0])?, FieldOrientation::along_axis())),
            _ => Ok((NodeList::zigzag(self.n, params[0])?, FieldOrientation::new(params[1])?)),
        }
    }

    fn window(&self) -> usize {
        match self.policy {
            MPolicy::Fixed(m) => m,
            _ => self.n - 1,
        }
    }

    /// `(p_max, tau_max)` at one parameter tuple.
    pub fn evaluate_optimum(&self, params: &[f64]) -> Result<(f64, f64)> {
        let (nodes, field) = self.chain(params)?;
        let s = spectral_for_window(&nodes, &field, self.window(), self.mode())?;
        let opt = max_probability(&s, self.t_max)?;
        Ok((opt.p_max, opt.tau_max))
    }

    pub fn evaluate(&self, params: &[f64]) -> SweepRecord {
        let mut record = SweepRecord { params: params.to_vec(), ..SweepRecord::default() };
        match self.evaluate_optimum(params) {
            Ok((p, t)) => {
                record.p_max = Some(p);
                record.tau_max = Some(t);
            }
            Err(e) => {
                record.error = Some(e.to_string());
                return record;
            }
        }
        if self.policy == MPolicy::Auto {
            let report = self
                .chain(params)
                .and_then(|(nodes, field)| approx_report(&nodes, &field, self.mode(), self.t_max, self.epsilon));
            match report {
                Ok(r) => {
                    record.cal_m = Some(r.cal_m);
                    record.j = Some(r.j_all());
                }
                Err(e) => record.error = Some(e.to_string()),
            }
        }
        record
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SweepRecord {
    pub params: Vec<f64>,
    pub p_max: Option<f64>,
    pub tau_max: Option<f64>,
    pub cal_m: Option<usize>,
    pub j: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub grid: SweepGrid,
    pub records: Vec<SweepRecord>,
    pub kernel_version: &'static str,
    pub created_unix: u64,
}

/// Runs the sweep on a dedicated pool of `workers` threads.
pub fn sweep(grid: &SweepGrid, workers: usize) -> Result<SweepResult> {
    grid.validate()?;
    let points = grid.points();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidGrid(format!("cannot start worker pool: {e}")))?;
    let records = pool.install(|| points.par_iter().map(|p| grid.evaluate(p)).collect());
    let created_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    Ok(SweepResult { grid: grid.clone(), records, kernel_version: crate::KERNEL_VERSION, created_unix })
}

pub fn sweep_zigzag(
    n: usize,
    y: Axis,
    chi: Axis,
    t_max: f64,
    policy: MPolicy,
    epsilon: f64,
    workers: usize,
) -> Result<SweepResult> {
    sweep(&SweepGrid::zigzag(n, y, chi, t_max, policy, epsilon)?, workers)
}

pub fn sweep_alternating(n: usize, alpha: Axis, t_max: f64, workers: usize) -> Result<SweepResult> {
    let grid = SweepGrid::alternating(n, alpha, t_max, MPolicy::AllNode, crate::metrics::DEFAULT_EPSILON)?;
    sweep(&grid, workers)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinedOptimum {
    pub params: Vec<f64>,
    pub p_max: f64,
    pub tau_max: f64,
}

impl SweepResult {
    /// Index of the best record; ties go to the earliest.
    pub fn argmax(&self) -> Option<usize> {
        self.records
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.p_max.map(|p| (i, p)))
            .fold(None, |best: Option<(usize, f64)>, (i, p)| match best {
                Some((_, bp)) if bp >= p => best,
                _ => Some((i, p)),
            })
            .map(|(i, _)| i)
    }

    /// `(min, max)` of `tau_max` over records with `p_max >= threshold`.
    pub fn tau_range(&self, threshold: f64) -> Option<(f64, f64)> {
        self.records.iter().filter(|r| r.p_max.is_some_and(|p| p >= threshold)).filter_map(|r| r.tau_max).fold(
            None,
            |acc, t| match acc {
                None => Some((t, t)),
                Some((lo, hi)) => Some((lo.min(t), hi.max(t))),
            },
        )
    }

    pub fn failures(&self) -> impl Iterator<Item = (usize, &SweepRecord)> {
        self.records.iter().enumerate().filter(|(_, r)| r.error.is_some())
    }

    pub fn header(&self) -> String {
        let mut cols: Vec<&str> = self.grid.axes.iter().map(|a| a.name.as_str()).collect();
        cols.extend(["p_max", "tau_max"]);
        if self.grid.policy == MPolicy::Auto {
            cols.extend(["calM", "J"]);
        }
        cols.join(",")
    }

    /// Long-form CSV, one record per row. Missing values print as `NaN`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let num = |x: Option<f64>| x.map_or("NaN".to_string(), |v| format_sig(v, TRACE_DIGITS));
        writeln!(out, "{}", self.header())?;
        for r in &self.records {
            let mut fields: Vec<String> = r.params.iter().map(|&p| format_sig(p, TRACE_DIGITS)).collect();
            fields.push(num(r.p_max));
            fields.push(num(r.tau_max));
            if self.grid.policy == MPolicy::Auto {
                fields.push(r.cal_m.map_or("NaN".to_string(), |m| m.to_string()));
                fields.push(num(r.j));
            }
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }

    /// Sidecar metadata describing how the CSV was produced.
    pub fn metadata(&self) -> serde_json::Value {
        let g = &self.grid;
        json!({
            "chain": g.kind.as_str(),
            "n": g.n,
            "axes": g.axes,
            "mode": g.mode().as_str(),
            "m_policy": g.policy.as_string(),
            "t_max": g.t_max,
            "epsilon": g.epsilon,
            "records": self.records.len(),
            "failures": self.failures().map(|(i, r)| json!({
                "index": i,
                "params": r.params,
                "error": r.error,
            })).collect::<Vec<_>>(),
            "kernel_version": self.kernel_version,
            "created_unix": self.created_unix,
        })
    }
}

/// Refines the grid argmax by coordinate search with step halving, staying
/// within one grid cell of it, until every step is below `1e-3`.
pub fn locate_optimum(result: &SweepResult) -> Result<RefinedOptimum> {
    let best = result.argmax().ok_or_else(|| Error::InvalidGrid("sweep has no successful records".into()))?;
    let grid = &result.grid;
    let start = result.records[best].params.clone();
    let (mut p_best, mut tau_best) = grid.evaluate_optimum(&start)?;
    let cells: Vec<f64> = grid.axes.iter().map(Axis::cell).collect();
    let mut steps: Vec<f64> = cells.iter().map(|c| c * 0.5).collect();
    let mut params = start.clone();
    const TOL: f64 = 1e-3;

    let admissible = |k: usize, v: f64| -> bool {
        let axis = &grid.axes[k];
        (v - start[k]).abs() <= cells[k] + 1e-12 && v >= axis.lo.min(axis.hi) - cells[k] && v <= axis.hi + cells[k]
    };

    for _ in 0..200 {
        if steps.iter().all(|&h| h < TOL) {
            break;
        }
        let mut moved = false;
        for k in 0..params.len() {
            if steps[k] < TOL {
                continue;
            }
            for dir in [1.0, -1.0] {
                let candidate = params[k] + dir * steps[k];
                if !admissible(k, candidate) {
                    continue;
                }
                let mut trial = params.clone();
                trial[k] = candidate;
                if let Ok((p, t)) = grid.evaluate_optimum(&trial) {
                    if p > p_best {
                        (p_best, tau_best, params) = (p, t, trial);
                        moved = true;
                        break;
                    }
                }
            }
        }
        if !moved {
            for h in &mut steps {
                *h *= 0.5;
            }
        }
    }
    Ok(RefinedOptimum { params, p_max: p_best, tau_max: tau_best })
}
