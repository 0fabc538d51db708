//! Line-based `key = value` run configuration.
//!
//! Lists are comma-separated, `#` starts a comment. Unknown keys and
//! out-of-range values are rejected with the offending key named.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error("invalid value for key `{key}`: {detail}")]
    Validation { key: String, detail: String },
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Requested analyses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Analysis {
    Constants,
    Witness,
    Precond,
    ReferenceInfSup,
}

/// Parsed and validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub example: u8,
    pub levels: Vec<usize>,
    /// Explicit parameter grids, keyed by parameter name.
    pub grid: BTreeMap<String, Vec<f64>>,
    pub analyses: Vec<Analysis>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub witness_samples: usize,
    pub minres_tol: f64,
    pub minres_max_iter: usize,
}

/// Parameter names an example accepts, in canonical sweep order.
pub fn allowed_params(example: u8) -> &'static [&'static str] {
    match example {
        1 => &["t"],
        2 => &["kappa"],
        3 => &["lambda", "c0", "kappa", "alpha", "eta"],
        4 => &["lambda", "c0", "kappa"],
        5 => &["lambda", "c0", "kappa", "alpha"],
        6 => &["mu", "lambda", "tau", "kappa", "c0", "alpha"],
        7 => &["lambda_mu", "r_p", "alpha_p"],
        _ => &[],
    }
}

/// Axes the default sweep grid covers (others stay at their defaults).
pub fn primary_axes(example: u8) -> &'static [&'static str] {
    match example {
        1 => &["t"],
        2 => &["kappa"],
        3 => &["lambda", "c0", "kappa"],
        4 => &["lambda", "c0", "kappa"],
        5 => &["lambda", "c0", "kappa"],
        6 => &["mu", "lambda", "kappa"],
        7 => &["lambda_mu", "r_p", "alpha_p"],
        _ => &[],
    }
}

/// The default five-point sweep grid per admissible parameter.
pub const DEFAULT_GRID: [f64; 5] = [1e-8, 1e-4, 1.0, 1e4, 1e8];

const GLOBAL_KEYS: [&str; 8] = [
    "example",
    "levels",
    "seed",
    "out_dir",
    "analyses",
    "witness_samples",
    "minres_tol",
    "minres_max_iter",
];

/// Parse a config file; returns the config and warnings (applied defaults).
pub fn parse_config(path: &Path) -> Result<(RunConfig, Vec<String>), ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<(RunConfig, Vec<String>), ConfigError> {
    let mut raw: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (idx, line_raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match line_raw.find('#') {
            Some(pos) => &line_raw[..pos],
            None => line_raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
            line: line_no,
            detail: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim().to_string();
        if key.is_empty() {
            return Err(ConfigError::Parse {
                line: line_no,
                detail: "empty key".into(),
            });
        }
        if raw.insert(key.clone(), (line_no, value.trim().to_string())).is_some() {
            return Err(ConfigError::Parse {
                line: line_no,
                detail: format!("duplicate key `{key}`"),
            });
        }
    }
    let mut warnings = Vec::new();

    let example = match raw.remove("example") {
        Some((line, v)) => v.parse::<u8>().map_err(|_| ConfigError::Parse {
            line,
            detail: format!("example id `{v}` is not an integer"),
        })?,
        None => {
            return Err(ConfigError::Validation {
                key: "example".into(),
                detail: "missing required key".into(),
            })
        }
    };
    if !(1..=7).contains(&example) {
        return Err(ConfigError::Validation {
            key: "example".into(),
            detail: format!("id {example} out of range 1-7"),
        });
    }

    let levels = match raw.remove("levels") {
        Some((line, v)) => parse_list::<usize>(&v, line, "levels")?,
        None => {
            warnings.push("levels not given; defaulting to 2,4".to_string());
            vec![2, 4]
        }
    };
    for &l in &levels {
        if l == 0 || l > 32 {
            return Err(ConfigError::Validation {
                key: "levels".into(),
                detail: format!("level {l} outside the desk-scale range 1-32"),
            });
        }
    }

    let seed = match raw.remove("seed") {
        Some((line, v)) => v.parse::<u64>().map_err(|_| ConfigError::Parse {
            line,
            detail: format!("seed `{v}` is not an unsigned integer"),
        })?,
        None => 0,
    };

    let out_dir = match raw.remove("out_dir") {
        Some((_, v)) => PathBuf::from(v),
        None => PathBuf::from("out"),
    };

    let analyses = match raw.remove("analyses") {
        Some((line, v)) => {
            let mut list = Vec::new();
            for item in v.split(',') {
                let item = item.trim();
                list.push(match item {
                    "constants" => Analysis::Constants,
                    "witness" => Analysis::Witness,
                    "precond" => Analysis::Precond,
                    "reference_infsup" => Analysis::ReferenceInfSup,
                    other => {
                        return Err(ConfigError::Parse {
                            line,
                            detail: format!("unknown analysis `{other}`"),
                        })
                    }
                });
            }
            list
        }
        None => vec![Analysis::Constants],
    };

    let witness_samples = match raw.remove("witness_samples") {
        Some((line, v)) => v.parse::<usize>().map_err(|_| ConfigError::Parse {
            line,
            detail: format!("witness_samples `{v}` is not an unsigned integer"),
        })?,
        None => 100,
    };

    let minres_tol = match raw.remove("minres_tol") {
        Some((line, v)) => parse_float(&v, line, "minres_tol")?,
        None => 1e-8,
    };
    if !(minres_tol > 0.0) {
        return Err(ConfigError::Validation {
            key: "minres_tol".into(),
            detail: "must be positive".into(),
        });
    }

    let minres_max_iter = match raw.remove("minres_max_iter") {
        Some((line, v)) => v.parse::<usize>().map_err(|_| ConfigError::Parse {
            line,
            detail: format!("minres_max_iter `{v}` is not an unsigned integer"),
        })?,
        None => 2000,
    };

    // whatever remains must be a parameter grid for this example
    let allowed = allowed_params(example);
    let mut grid = BTreeMap::new();
    for (key, (line, v)) in raw {
        if GLOBAL_KEYS.contains(&key.as_str()) {
            continue;
        }
        if !allowed.contains(&key.as_str()) {
            return Err(ConfigError::Validation {
                key: key.clone(),
                detail: format!(
                    "not a parameter of example {example} (allowed: {})",
                    allowed.join(", ")
                ),
            });
        }
        let values = parse_list::<f64>(&v, line, &key)?;
        if values.is_empty() {
            return Err(ConfigError::Validation {
                key,
                detail: "empty value list".into(),
            });
        }
        grid.insert(key, values);
    }

    Ok((
        RunConfig {
            example,
            levels,
            grid,
            analyses,
            out_dir,
            seed,
            witness_samples,
            minres_tol,
            minres_max_iter,
        },
        warnings,
    ))
}

fn parse_list<T: std::str::FromStr>(
    v: &str,
    line: usize,
    key: &str,
) -> Result<Vec<T>, ConfigError> {
    v.split(',')
        .map(|s| {
            s.trim().parse::<T>().map_err(|_| ConfigError::Parse {
                line,
                detail: format!("bad entry `{}` in list for `{key}`", s.trim()),
            })
        })
        .collect()
}

fn parse_float(v: &str, line: usize, key: &str) -> Result<f64, ConfigError> {
    v.parse::<f64>().map_err(|_| ConfigError::Parse {
        line,
        detail: format!("`{v}` is not a number for `{key}`"),
    })
}
