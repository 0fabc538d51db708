//! Sweep orchestration and CSV/meta emission.
//!
//! Output files are deterministic: points are enumerated in canonical
//! parameter order, every float is printed with 17 significant digits, and
//! random draws derive from the configured seed alone.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use saddlecheck_core::analysis::{verify_theorem5, witness_sweep, StabilityReport};
use saddlecheck_core::biot::{
    build_example, discrete_reference_infsup, param_label, ExampleParams, StokesPressure,
};
use saddlecheck_core::precond::{iteration_spread, robustness_sweep, PrecondRun};

use crate::config::{allowed_params, Analysis, RunConfig};

pub const CONSTANTS_HEADER: &str = "example,level,param_point,C_a_bar,C_a_under,beta_under,alpha_under,C_bar,epsilon,delta,theoretical_bound,hypotheses_ok";
pub const WITNESS_HEADER: &str =
    "example,level,param_point,sample,coercivity_ratio,coercivity_floor,boundedness_ratio,boundedness_cap,ok";
pub const PRECOND_HEADER: &str = "example,level,param_point,iterations,converged,final_relres";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("computation failed: {0}")]
    Core(String),
}

/// What the run produced and which asserted invariants failed.
#[derive(Debug, Default)]
pub struct RunOutcome {
    pub failures: Vec<String>,
    pub files: Vec<PathBuf>,
}

fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{:.16e}", x)
    }
}

/// One grid point: ordered (name, value) pairs over the example's axes.
#[derive(Debug, Clone)]
pub struct GridPoint {
    pub values: Vec<(String, f64)>,
}

impl GridPoint {
    fn get(&self, name: &str) -> Option<f64> {
        self.values
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }
}

/// Expand the configured grid in canonical order (odometer, first axis
/// slowest). Missing parameters take their single default value.
pub fn expand_grid(cfg: &RunConfig) -> Vec<GridPoint> {
    let axes = allowed_params(cfg.example);
    let defaults = ExampleParams::default();
    let default_of = |name: &str| -> f64 {
        match name {
            "t" => defaults.t,
            "kappa" => defaults.kappa,
            "lambda" => defaults.lambda,
            "mu" => defaults.mu,
            "c0" => defaults.c0,
            "alpha" => defaults.alpha,
            "tau" => defaults.tau,
            "eta" => f64::NAN, // sentinel: use the formula default
            "lambda_mu" => 1.0,
            "r_p" => 1.0,
            "alpha_p" => 1.0,
            _ => 1.0,
        }
    };
    let lists: Vec<(String, Vec<f64>)> = axes
        .iter()
        .map(|&name| {
            let values = cfg
                .grid
                .get(name)
                .cloned()
                .unwrap_or_else(|| vec![default_of(name)]);
            (name.to_string(), values)
        })
        .collect();
    let mut points = vec![GridPoint { values: Vec::new() }];
    for (name, values) in &lists {
        let mut next = Vec::with_capacity(points.len() * values.len());
        for p in &points {
            for &v in values {
                let mut q = p.clone();
                q.values.push((name.clone(), v));
                next.push(q);
            }
        }
        points = next;
    }
    points
}

/// Realize a grid point as example parameters.
pub fn params_from_point(example: u8, point: &GridPoint) -> ExampleParams {
    if example == 7 {
        return ExampleParams::for_ex7(
            point.get("lambda_mu").unwrap_or(1.0),
            point.get("r_p").unwrap_or(1.0),
            point.get("alpha_p").unwrap_or(1.0),
        );
    }
    let mut p = ExampleParams::default();
    for (name, v) in &point.values {
        match name.as_str() {
            "t" => p.t = *v,
            "kappa" => p.kappa = *v,
            "lambda" => p.lambda = *v,
            "mu" => p.mu = *v,
            "c0" => p.c0 = *v,
            "alpha" => p.alpha = *v,
            "tau" => p.tau = *v,
            "eta" => {
                if !v.is_nan() {
                    p.eta = Some(*v);
                }
            }
            _ => {}
        }
    }
    p
}

fn write_file(path: &Path, content: &str) -> Result<(), RunError> {
    let mut f = std::fs::File::create(path).map_err(|source| RunError::Io {
        path: path.display().to_string(),
        source,
    })?;
    f.write_all(content.as_bytes()).map_err(|source| RunError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Execute the configured analyses; returns failures of asserted invariants.
pub fn run(cfg: &RunConfig, warnings: &[String]) -> Result<RunOutcome, RunError> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|source| RunError::Io {
        path: cfg.out_dir.display().to_string(),
        source,
    })?;
    let mut outcome = RunOutcome::default();
    let points = expand_grid(cfg);
    let mut meta = String::new();
    meta.push_str(&format!("example = {}\n", cfg.example));
    meta.push_str(&format!(
        "levels = {}\n",
        cfg.levels
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join(",")
    ));
    meta.push_str(&format!("seed = {}\n", cfg.seed));
    meta.push_str(&format!("grid points = {}\n", points.len()));
    for w in warnings {
        meta.push_str(&format!("warning: {w}\n"));
    }

    // constants are needed by witness and precond gating as well
    let mut reports: BTreeMap<(usize, usize), StabilityReport> = BTreeMap::new();
    let need_reports = cfg.analyses.iter().any(|a| {
        matches!(
            a,
            Analysis::Constants | Analysis::Witness | Analysis::Precond
        )
    });
    if need_reports {
        for &level in &cfg.levels {
            for (pi, point) in points.iter().enumerate() {
                let params = params_from_point(cfg.example, point);
                let label = param_label(cfg.example, &params);
                let problem = build_example(cfg.example, level, &params)
                    .map_err(|e| RunError::Core(e.to_string()))?;
                let report = verify_theorem5(&problem.system, &problem.norms, level, &label)
                    .map_err(|e| RunError::Core(e.to_string()))?;
                if report.hypotheses_ok && !report.chain_ok {
                    outcome.failures.push(format!(
                        "chain violated: example {} level {} {}: alpha {} < bound {}",
                        cfg.example, level, label, report.alpha_under,
                        report.theoretical_alpha_bound
                    ));
                }
                reports.insert((level, pi), report);
            }
        }
    }

    if cfg.analyses.contains(&Analysis::Constants) {
        let mut csv = String::from(CONSTANTS_HEADER);
        csv.push('\n');
        for &level in &cfg.levels {
            for (pi, _) in points.iter().enumerate() {
                let r = &reports[&(level, pi)];
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    cfg.example,
                    level,
                    r.param_label,
                    fmt17(r.c_a_bar),
                    fmt17(r.c_a_under),
                    fmt17(r.beta_under),
                    fmt17(r.alpha_under),
                    fmt17(r.c_bar),
                    fmt17(r.epsilon),
                    fmt17(r.delta),
                    fmt17(r.theoretical_alpha_bound),
                    r.hypotheses_ok
                ));
            }
        }
        let path = cfg.out_dir.join("constants.csv");
        write_file(&path, &csv)?;
        outcome.files.push(path);
    }

    if cfg.analyses.contains(&Analysis::Witness) {
        let mut csv = String::from(WITNESS_HEADER);
        csv.push('\n');
        for &level in &cfg.levels {
            for (pi, point) in points.iter().enumerate() {
                let report = &reports[&(level, pi)];
                if !report.hypotheses_ok {
                    meta.push_str(&format!(
                        "witness skipped (hypotheses fail): level {} {}\n",
                        level, report.param_label
                    ));
                    continue;
                }
                let params = params_from_point(cfg.example, point);
                let problem = build_example(cfg.example, level, &params)
                    .map_err(|e| RunError::Core(e.to_string()))?;
                let seed = cfg
                    .seed
                    .wrapping_add(pi as u64 * 1_000_003)
                    .wrapping_add(level as u64);
                let sweep =
                    witness_sweep(&problem.system, &problem.norms, report, cfg.witness_samples, seed)
                        .map_err(|e| RunError::Core(e.to_string()))?;
                for (si, w) in sweep.iter().enumerate() {
                    let ok = w.passes(1e-10);
                    if !ok {
                        outcome.failures.push(format!(
                            "witness violated: example {} level {} {} sample {}",
                            cfg.example, level, report.param_label, si
                        ));
                    }
                    csv.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{}\n",
                        cfg.example,
                        level,
                        report.param_label,
                        si,
                        fmt17(w.coercivity_ratio),
                        fmt17(w.coercivity_floor),
                        fmt17(w.boundedness_ratio),
                        fmt17(w.boundedness_cap),
                        ok
                    ));
                }
            }
        }
        let path = cfg.out_dir.join("witness.csv");
        write_file(&path, &csv)?;
        outcome.files.push(path);
    }

    if cfg.analyses.contains(&Analysis::Precond) {
        let grid_params: Vec<ExampleParams> = points
            .iter()
            .map(|p| params_from_point(cfg.example, p))
            .collect();
        let runs = robustness_sweep(
            cfg.example,
            &grid_params,
            &cfg.levels,
            cfg.minres_tol,
            cfg.minres_max_iter,
            cfg.seed,
        )
        .map_err(|e| RunError::Core(e.to_string()))?;
        let mut csv = String::from(PRECOND_HEADER);
        csv.push('\n');
        for r in &runs {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.example_id,
                r.level,
                r.param_label,
                r.iterations,
                r.converged,
                fmt17(r.rel_residual)
            ));
        }
        let path = cfg.out_dir.join("precond.csv");
        write_file(&path, &csv)?;
        outcome.files.push(path);
        check_axis_spreads(cfg, &points, &runs, &reports, &mut outcome, &mut meta);
    }

    if cfg.analyses.contains(&Analysis::ReferenceInfSup) {
        for &level in &cfg.levels {
            for (name, variant) in [
                ("P0-zero-mean", StokesPressure::P0ZeroMean),
                ("P1-dirichlet", StokesPressure::P1Dirichlet),
            ] {
                let r = discrete_reference_infsup(level, variant)
                    .map_err(|e| RunError::Core(e.to_string()))?;
                meta.push_str(&format!(
                    "reference_infsup level {} ({}): beta_d = {}, beta_s = {}, degenerate = {}\n",
                    level,
                    name,
                    fmt17(r.beta_d),
                    fmt17(r.beta_s),
                    r.degenerate
                ));
            }
        }
    }

    if outcome.failures.is_empty() {
        meta.push_str("invariants: all held\n");
    } else {
        for f in &outcome.failures {
            meta.push_str(&format!("FAILED: {f}\n"));
        }
    }
    let meta_path = cfg.out_dir.join("meta.txt");
    write_file(&meta_path, &meta)?;
    outcome.files.push(meta_path);
    Ok(outcome)
}

/// Iteration spread along each swept axis at fixed mesh level, asserted
/// only when the stability hypotheses hold at every grouped point.
fn check_axis_spreads(
    cfg: &RunConfig,
    points: &[GridPoint],
    runs: &[PrecondRun],
    reports: &BTreeMap<(usize, usize), StabilityReport>,
    outcome: &mut RunOutcome,
    meta: &mut String,
) {
    let axes: Vec<String> = allowed_params(cfg.example)
        .iter()
        .filter(|&&name| cfg.grid.get(name).map(|v| v.len() > 1).unwrap_or(false))
        .map(|s| s.to_string())
        .collect();
    for &level in &cfg.levels {
        for axis in &axes {
            // group points by the values of every other axis
            let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
            for (pi, point) in points.iter().enumerate() {
                let key: String = point
                    .values
                    .iter()
                    .filter(|(n, _)| n != axis)
                    .map(|(n, v)| format!("{n}={v:e}"))
                    .collect::<Vec<_>>()
                    .join(";");
                groups.entry(key).or_default().push(pi);
            }
            for (key, group) in groups {
                if group.len() < 2 {
                    continue;
                }
                let all_ok = group
                    .iter()
                    .all(|pi| reports[&(level, *pi)].hypotheses_ok);
                let group_runs: Vec<PrecondRun> = group
                    .iter()
                    .filter_map(|pi| {
                        let label = &reports[&(level, *pi)].param_label;
                        runs.iter()
                            .find(|r| r.level == level && &r.param_label == label)
                            .cloned()
                    })
                    .collect();
                match iteration_spread(&group_runs) {
                    Some(spread) => {
                        meta.push_str(&format!(
                            "spread level {level} axis {axis} [{key}]: {spread:.3}\n"
                        ));
                        if all_ok && spread > 4.0 {
                            outcome.failures.push(format!(
                                "iteration spread {spread:.3} > 4 on axis {axis} at level {level} [{key}]"
                            ));
                        }
                    }
                    None => {
                        outcome.failures.push(format!(
                            "non-converged run on axis {axis} at level {level} [{key}]"
                        ));
                    }
                }
            }
        }
    }
}
