// SPDX-License-Identifier: Apache-2.0

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use spin_transfer::dynamics::{fidelity, probability_trace, scan_sites, site_probabilities};
use spin_transfer::io::{write_approx_csv, write_sites_csv, write_trace_csv};
use spin_transfer::metrics::{approx_report, max_probability, spectral_for_window, TimeGrid};
use spin_transfer::oracle::run_equivalence_suite;
use spin_transfer::sweep::{
    locate_optimum, sweep, Axis, AxisName, SweepGrid, DEFAULT_GRID_COUNT, REGION_N40, REGION_N41,
};
use spin_transfer::{AngularMode, ChainKind, FieldOrientation, NodeList};

use crate::config::{ChainChoice, RunConfig};
use crate::exit::CliError;

/// Tolerance for the full-space comparison in `oracle-check`.
pub const ORACLE_TOLERANCE: f64 = 1e-10;

fn open_output(config: &RunConfig) -> Result<Box<dyn Write>, CliError> {
    Ok(match &config.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).map_err(|e| CliError::usage(format!("cannot create {}: {e}", path.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn chain(config: &RunConfig) -> Result<(), CliError> {
    let nodes = config.nodes()?;
    let mut out = open_output(config)?;
    out.write_all(nodes.to_geometry_string().as_bytes())?;
    out.flush()?;
    Ok(())
}

pub fn evolve(config: &RunConfig) -> Result<(), CliError> {
    let nodes = config.nodes()?;
    let n = nodes.len();
    let field = config.field()?;
    let window = config.single_window(n)?;
    let s = spectral_for_window(&nodes, &field, window, config.angular_mode())?;
    let mut out = open_output(config)?;

    match &config.tau_grid {
        Some(grid) => {
            let taus = grid.values();
            if config.sites {
                let rows = taus.iter().map(|&t| site_probabilities(&s, t)).collect::<Result<Vec<_>, _>>()?;
                write_sites_csv(&mut out, &taus, &rows)?;
            } else {
                let probs = probability_trace(&s, n - 1, &taus)?;
                write_trace_csv(&mut out, &taus, &probs)?;
            }
        }
        None => {
            // Default grid: the metrics sampling grid over the window.
            let grid = TimeGrid::for_spectra(config.window_length(n), [&s])?;
            let taus = grid.taus();
            if config.sites {
                let rows: Vec<Vec<f64>> = scan_sites(&s, 0.0, grid.step(), grid.len(), |_, flat| {
                    flat.chunks(n).map(<[f64]>::to_vec).collect::<Vec<_>>()
                })?
                .into_iter()
                .flatten()
                .collect();
                write_sites_csv(&mut out, &taus, &rows)?;
            } else {
                let probs = spin_transfer::Channel::end_to_end(&s).scan(0.0, grid.step(), grid.len())?;
                write_trace_csv(&mut out, &taus, &probs)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn approx(config: &RunConfig) -> Result<(), CliError> {
    let nodes = config.nodes()?;
    let t_max = config.window_length(nodes.len());
    let report = approx_report(&nodes, &config.field()?, config.angular_mode(), t_max, config.epsilon)?;
    let mut out = open_output(config)?;
    write_approx_csv(&mut out, &report)?;
    out.flush()?;
    Ok(())
}

fn default_axes(config: &RunConfig, n: usize) -> Result<Vec<Axis>, CliError> {
    let region = match config.chain {
        ChainChoice::Alternating => {
            return Ok(vec![Axis::new(AxisName::Alpha, 1.0, 1.95, 20)?]);
        }
        ChainChoice::Zigzag if n % 2 == 1 => REGION_N41,
        ChainChoice::Zigzag => REGION_N40,
        ChainChoice::File => return Err(CliError::usage("custom geometries cannot be swept")),
    };
    let (y0, y1, c0, c1) = region;
    Ok(vec![Axis::new(AxisName::Y, y0, y1, DEFAULT_GRID_COUNT)?, Axis::new(AxisName::Chi, c0, c1, DEFAULT_GRID_COUNT)?])
}

pub fn sweep_cmd(config: &RunConfig, refine: bool) -> Result<(), CliError> {
    config.validate()?;
    let n = config.require_n()?;
    let axes = if config.grid.is_empty() { default_axes(config, n)? } else { config.grid.clone() };
    if config.mode.is_some_and(|m| m != config.angular_mode())
        || config.chi.is_some()
        || config.y.is_some()
        || config.alpha.is_some()
    {
        return Err(CliError::usage("sweep takes its parameters from --grid; drop --y, --alpha, --chi and --mode"));
    }
    let grid = SweepGrid::from_axes(n, config.kind(), axes, config.window_length(n), config.m, config.epsilon)?;
    let result = sweep(&grid, config.workers)?;

    let mut out = open_output(config)?;
    result.write_csv(&mut out)?;
    out.flush()?;
    if let Some(path) = &config.out {
        let sidecar = path.with_extension("json");
        let text = pretty_json(&result.metadata());
        std::fs::write(&sidecar, text)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", sidecar.display())))?;
    }
    let failures = result.failures().count();
    if failures > 0 {
        eprintln!("{failures} grid point(s) recorded as failures");
    }
    if refine {
        let opt = locate_optimum(&result)?;
        let names: Vec<String> =
            grid.axes.iter().zip(&opt.params).map(|(a, v)| format!("{}={v:.6}", a.name.as_str())).collect();
        eprintln!("refined optimum: {} p_max={:.6} tau_max={:.6}", names.join(" "), opt.p_max, opt.tau_max);
    }
    Ok(())
}

fn pretty_json(value: &impl std::fmt::Display) -> String {
    format!("{value:#}\n")
}

pub fn oracle_check(config: &RunConfig) -> Result<(), CliError> {
    let n_max = config.n.unwrap_or(10);
    let report = run_equivalence_suite(config.seed, config.instances, 2, n_max, config.taus)?;
    let mut out = open_output(config)?;
    writeln!(out, "instance,N,M,max_abs_diff")?;
    for (i, (n, m, dev)) in report.per_instance.iter().enumerate() {
        writeln!(out, "{i},{n},{m},{dev:e}")?;
    }
    let passed = report.passed(ORACLE_TOLERANCE);
    writeln!(
        out,
        "seed={} instances={} comparisons={} max_abs_diff={:e} tolerance={ORACLE_TOLERANCE:e} {}",
        report.seed,
        report.instances,
        report.comparisons,
        report.max_abs_diff,
        if passed { "PASS" } else { "FAIL" }
    )?;
    out.flush()?;
    if passed {
        Ok(())
    } else {
        Err(CliError::tolerance(format!("oracle deviation {:e} exceeds {ORACLE_TOLERANCE:e}", report.max_abs_diff)))
    }
}

struct TableRow {
    label: &'static str,
    n: usize,
    params: String,
    nodes: NodeList<f64>,
    field: FieldOrientation<f64>,
    mode: AngularMode,
    t_max: f64,
    p_ref: f64,
    p_tol: Tolerance,
    tau_ref: f64,
    tau_tol: f64,
    budget_s: f64,
}

enum Tolerance {
    Within(f64),
    AtLeast(f64),
}

fn table_rows() -> Result<Vec<TableRow>, CliError> {
    let oriented = |chi: f64| FieldOrientation::new(chi);
    Ok(vec![
        TableRow {
            label: "zigzag",
            n: 41,
            params: "Y=1.192 chi=1.574".into(),
            nodes: NodeList::zigzag(41, 1.192)?,
            field: oriented(1.574)?,
            mode: AngularMode::ZigzagTime,
            t_max: spin_transfer::sweep::default_window(ChainKind::Zigzag, 41),
            p_ref: 0.714,
            p_tol: Tolerance::Within(0.005),
            tau_ref: 262.282,
            tau_tol: 0.5,
            budget_s: 1.0,
        },
        TableRow {
            label: "zigzag",
            n: 40,
            params: "Y=2.843 chi=2.031".into(),
            nodes: NodeList::zigzag(40, 2.843)?,
            field: oriented(2.031)?,
            mode: AngularMode::ZigzagTime,
            t_max: spin_transfer::sweep::default_window(ChainKind::Zigzag, 40),
            p_ref: 0.802,
            p_tol: Tolerance::Within(0.005),
            tau_ref: 690.657,
            tau_tol: 1.0,
            budget_s: 1.0,
        },
        TableRow {
            label: "alternating",
            n: 40,
            params: "alpha=1.48".into(),
            nodes: NodeList::alternating(40, 1.48)?,
            field: FieldOrientation::along_axis(),
            mode: AngularMode::AlternatingTime,
            t_max: spin_transfer::sweep::default_window(ChainKind::Alternating, 40),
            p_ref: 0.999,
            p_tol: Tolerance::AtLeast(0.999),
            tau_ref: 204164.0,
            tau_tol: 0.01 * 204164.0,
            budget_s: 5.0,
        },
    ])
}

pub fn table1(out_path: Option<&Path>) -> Result<(), CliError> {
    let mut out: Box<dyn Write> = match out_path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    writeln!(
        out,
        "{:<12} {:>3}  {:<18} {:>9} {:>12} {:>9} {:>9} {:>10}  status",
        "chain", "N", "parameters", "p_opt", "tau_opt", "F", "time_s", "budget_s"
    )?;
    let mut violations = Vec::new();
    let total = Instant::now();
    for row in table_rows()? {
        let start = Instant::now();
        let s = spectral_for_window(&row.nodes, &row.field, row.n - 1, row.mode)?;
        let opt = max_probability(&s, row.t_max)?;
        let elapsed = start.elapsed().as_secs_f64();
        let p_ok = match row.p_tol {
            Tolerance::Within(tol) => (opt.p_max - row.p_ref).abs() <= tol,
            Tolerance::AtLeast(min) => opt.p_max >= min,
        };
        let tau_ok = (opt.tau_max - row.tau_ref).abs() <= row.tau_tol;
        let time_ok = elapsed < row.budget_s;
        let status = match (p_ok, tau_ok, time_ok) {
            (true, true, true) => "ok".to_string(),
            _ => {
                let mut why = Vec::new();
                if !p_ok {
                    why.push(format!("p_opt vs {}", row.p_ref));
                }
                if !tau_ok {
                    why.push(format!("tau_opt vs {}±{}", row.tau_ref, row.tau_tol));
                }
                if !time_ok {
                    why.push("over budget".into());
                }
                violations.push(format!("{} N={}", row.label, row.n));
                format!("FAIL ({})", why.join(", "))
            }
        };
        writeln!(
            out,
            "{:<12} {:>3}  {:<18} {:>9.6} {:>12.3} {:>9.6} {:>9.3} {:>10.1}  {status}",
            row.label,
            row.n,
            row.params,
            opt.p_max,
            opt.tau_max,
            fidelity(opt.p_max)?,
            elapsed,
            row.budget_s
        )?;
    }
    writeln!(out, "total runtime {:.3} s", total.elapsed().as_secs_f64())?;
    out.flush()?;
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::tolerance(format!("tolerance violated: {}", violations.join("; "))))
    }
}
