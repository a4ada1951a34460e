// SPDX-License-Identifier: Apache-2.0

//! Run configuration: a flat `key = value` file whose keys double as
//! command-line flag names.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::path::PathBuf;

use spin_transfer::sweep::{default_window, Axis, MPolicy};
use spin_transfer::{AngularMode, ChainKind, FieldOrientation, NodeList};

use crate::exit::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainChoice {
    Zigzag,
    Alternating,
    File,
}

impl ChainChoice {
    fn as_str(self) -> &'static str {
        match self {
            ChainChoice::Zigzag => "zigzag",
            ChainChoice::Alternating => "alternating",
            ChainChoice::File => "file",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TauGrid {
    /// `lo:hi:count`, endpoints included.
    Range { lo: f64, hi: f64, count: usize },
    /// Comma-separated explicit times.
    List(Vec<f64>),
}

impl TauGrid {
    pub fn parse(s: &str) -> Result<Self, String> {
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("{t:?} is not a number"));
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            let [lo, hi, count] = parts.as_slice() else {
                return Err("expected lo:hi:count".into());
            };
            let (lo, hi) = (num(lo)?, num(hi)?);
            let count: usize = count.trim().parse().map_err(|_| format!("{count:?} is not a count"))?;
            if count == 0 || (count > 1 && lo >= hi) || (count == 1 && lo != hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(format!("bad range {s}"));
            }
            Ok(TauGrid::Range { lo, hi, count })
        } else {
            let values = s.split(',').map(num).collect::<Result<Vec<_>, _>>()?;
            if values.iter().any(|t| !t.is_finite()) {
                return Err("times must be finite".into());
            }
            Ok(TauGrid::List(values))
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            TauGrid::List(v) => v.clone(),
            TauGrid::Range { lo, hi, count: 1 } if lo == hi => vec![*lo],
            TauGrid::Range { lo, hi, count } => {
                let last = (*count - 1) as f64;
                (0..*count).map(|i| if i + 1 == *count { *hi } else { lo + (hi - lo) * i as f64 / last }).collect()
            }
        }
    }

    fn to_value(&self) -> String {
        match self {
            TauGrid::Range { lo, hi, count } => format!("{lo}:{hi}:{count}"),
            TauGrid::List(v) => v.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub chain: ChainChoice,
    pub n: Option<usize>,
    pub y: Option<f64>,
    pub alpha: Option<f64>,
    pub geometry: Option<PathBuf>,
    pub chi: Option<f64>,
    pub m: MPolicy,
    pub t_max: Option<f64>,
    pub epsilon: f64,
    pub tau_grid: Option<TauGrid>,
    pub sites: bool,
    pub out: Option<PathBuf>,
    pub workers: usize,
    pub seed: u64,
    pub grid: Vec<Axis>,
    pub mode: Option<AngularMode>,
    pub instances: usize,
    pub taus: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            chain: ChainChoice::Zigzag,
            n: None,
            y: None,
            alpha: None,
            geometry: None,
            chi: None,
            m: MPolicy::AllNode,
            t_max: None,
            epsilon: spin_transfer::metrics::DEFAULT_EPSILON,
            tau_grid: None,
            sites: false,
            out: None,
            workers: 1,
            seed: 20240611,
            grid: Vec::new(),
            mode: None,
            instances: 50,
            taus: 20,
        }
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

impl RunConfig {
    /// Applies one `key = value` assignment. `grid` accumulates.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let value = value.trim();
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("{key}: cannot parse {v:?}"))
        }
        match key {
            "chain" => {
                self.chain = match value {
                    "zigzag" => ChainChoice::Zigzag,
                    "alternating" => ChainChoice::Alternating,
                    "file" => ChainChoice::File,
                    _ => return Err(format!("chain: expected zigzag, alternating or file, got {value:?}")),
                }
            }
            "n" => self.n = Some(num(key, value)?),
            "y" => self.y = Some(num(key, value)?),
            "alpha" => self.alpha = Some(num(key, value)?),
            "geometry" => self.geometry = Some(PathBuf::from(value)),
            "chi" => self.chi = Some(num(key, value)?),
            "m" => {
                self.m = MPolicy::parse(value)
                    .ok_or_else(|| format!("m: expected a positive integer, all or auto, got {value:?}"))?
            }
            "t-max" => self.t_max = Some(num(key, value)?),
            "epsilon" => self.epsilon = num(key, value)?,
            "tau-grid" => self.tau_grid = Some(TauGrid::parse(value).map_err(|e| format!("tau-grid: {e}"))?),
            "sites" => {
                self.sites = parse_bool(value).ok_or_else(|| format!("sites: expected true or false, got {value:?}"))?
            }
            "out" => self.out = Some(PathBuf::from(value)),
            "workers" => {
                self.workers = num(key, value)?;
                if self.workers == 0 {
                    return Err("workers: must be at least 1".into());
                }
            }
            "seed" => self.seed = num(key, value)?,
            "grid" => self.grid.push(Axis::parse(value).map_err(|e| format!("grid: {e}"))?),
            "mode" => {
                self.mode = Some(
                    AngularMode::parse(value)
                        .ok_or_else(|| format!("mode: expected zigzag-time or alternating-time, got {value:?}"))?,
                )
            }
            "instances" => self.instances = num(key, value)?,
            "taus" => self.taus = num(key, value)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Parses a config file on top of the defaults. Blank lines and `#`
    /// comments are ignored.
    #[cfg(test)]
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut config = Self::default();
        config.apply_text(text)?;
        Ok(config)
    }

    /// Applies a config file on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<(), String> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", idx + 1))?;
            self.set(key.trim(), value).map_err(|e| format!("line {}: {e}", idx + 1))?;
        }
        Ok(())
    }

    /// Serializes every set key; `parse(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("chain", self.chain.as_str().into());
        if let Some(n) = self.n {
            put("n", n.to_string());
        }
        if let Some(y) = self.y {
            put("y", y.to_string());
        }
        if let Some(a) = self.alpha {
            put("alpha", a.to_string());
        }
        if let Some(g) = &self.geometry {
            put("geometry", g.display().to_string());
        }
        if let Some(chi) = self.chi {
            put("chi", chi.to_string());
        }
        put("m", self.m.as_string());
        if let Some(t) = self.t_max {
            put("t-max", t.to_string());
        }
        put("epsilon", self.epsilon.to_string());
        if let Some(g) = &self.tau_grid {
            put("tau-grid", g.to_value());
        }
        put("sites", self.sites.to_string());
        if let Some(o) = &self.out {
            put("out", o.display().to_string());
        }
        put("workers", self.workers.to_string());
        put("seed", self.seed.to_string());
        for axis in &self.grid {
            put("grid", axis.to_spec());
        }
        if let Some(mode) = self.mode {
            put("mode", mode.as_str().into());
        }
        put("instances", self.instances.to_string());
        put("taus", self.taus.to_string());
        s
    }

    /// Cross-field consistency, checked once all sources are merged.
    pub fn validate(&self) -> Result<(), CliError> {
        let misplaced = |key: &str, kind: &str| CliError::usage(format!("--{key} only applies to --chain {kind}"));
        match self.chain {
            ChainChoice::Zigzag => {
                if self.alpha.is_some() {
                    return Err(misplaced("alpha", "alternating"));
                }
                if self.geometry.is_some() {
                    return Err(misplaced("geometry", "file"));
                }
            }
            ChainChoice::Alternating => {
                if self.y.is_some() {
                    return Err(misplaced("y", "zigzag"));
                }
                if self.geometry.is_some() {
                    return Err(misplaced("geometry", "file"));
                }
            }
            ChainChoice::File => {
                if self.y.is_some() {
                    return Err(misplaced("y", "zigzag"));
                }
                if self.alpha.is_some() {
                    return Err(misplaced("alpha", "alternating"));
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> ChainKind {
        match self.chain {
            ChainChoice::Zigzag => ChainKind::Zigzag,
            ChainChoice::Alternating => ChainKind::Alternating,
            ChainChoice::File => ChainKind::Custom,
        }
    }

    pub fn require_n(&self) -> Result<usize, CliError> {
        self.n.ok_or_else(|| CliError::usage("missing --n"))
    }

    pub fn nodes(&self) -> Result<NodeList<f64>, CliError> {
        self.validate()?;
        match self.chain {
            ChainChoice::Zigzag => {
                let y = self.y.ok_or_else(|| CliError::usage("missing --y for a zigzag chain"))?;
                Ok(NodeList::zigzag(self.require_n()?, y)?)
            }
            ChainChoice::Alternating => {
                let alpha = self.alpha.ok_or_else(|| CliError::usage("missing --alpha for an alternating chain"))?;
                Ok(NodeList::alternating(self.require_n()?, alpha)?)
            }
            ChainChoice::File => {
                let path =
                    self.geometry.as_ref().ok_or_else(|| CliError::usage("missing --geometry for --chain file"))?;
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
                let nodes = NodeList::parse(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
                if let Some(n) = self.n.filter(|&n| n != nodes.len()) {
                    return Err(CliError::usage(format!(
                        "--n {n} disagrees with {} nodes in {}",
                        nodes.len(),
                        path.display()
                    )));
                }
                Ok(nodes)
            }
        }
    }

    /// Field orientation: alternating chains default to the chain axis,
    /// other chains to the perpendicular direction.
    pub fn field(&self) -> Result<FieldOrientation<f64>, CliError> {
        let default = match self.chain {
            ChainChoice::Alternating => 0.0,
            _ => FRAC_PI_2,
        };
        Ok(FieldOrientation::new(self.chi.unwrap_or(default))?)
    }

    pub fn angular_mode(&self) -> AngularMode {
        self.mode.unwrap_or(match self.chain {
            ChainChoice::Alternating => AngularMode::AlternatingTime,
            _ => AngularMode::ZigzagTime,
        })
    }

    pub fn window_length(&self, n: usize) -> f64 {
        self.t_max.unwrap_or_else(|| default_window(self.kind(), n))
    }

    /// Concrete window for commands that need one Hamiltonian.
    pub fn single_window(&self, n: usize) -> Result<usize, CliError> {
        match self.m {
            MPolicy::AllNode => Ok(n - 1),
            MPolicy::Fixed(m) => Ok(m),
            MPolicy::Auto => Err(CliError::usage("--m auto is only meaningful for sweep")),
        }
    }
}
