//! Run configuration documents (TOML).

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::apportion::RoundingMethod;
use crate::criteria::nu_from_scale;
use crate::model::RegressorSpec;
use crate::optimizer::{default_nu_grid, OptimizerConfig, DEFAULT_GRID_POINTS};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("configuration error: {0}")]
pub struct ConfigError(pub String);

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    task: String,
    output: Option<PathBuf>,
    space: SpaceDoc,
    model: ModelDoc,
    #[serde(default)]
    params: ParamsDoc,
    #[serde(default)]
    optimizer: OptimizerDoc,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceDoc {
    bounds: Option<Vec<[f64; 2]>>,
    counts: Option<Vec<usize>>,
    points: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    kind: String,
    degree: Option<usize>,
    intercept: Option<bool>,
    interaction_order: Option<usize>,
    table: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsDoc {
    nu: Option<f64>,
    sigma2: Option<f64>,
    tau2: Option<f64>,
    b2: Option<f64>,
    s2: Option<f64>,
    target: Option<f64>,
    n: Option<usize>,
    grid: Option<usize>,
    nu_grid: Option<Vec<f64>>,
    method: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptimizerDoc {
    tol: Option<f64>,
    max_iter: Option<usize>,
    pseudo_count_start: Option<f64>,
    prune_below: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpaceConfig {
    Grid {
        bounds: Vec<(f64, f64)>,
        counts: Vec<usize>,
    },
    Points(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Solve { nu: f64 },
    Sweep { nu_grid: Vec<f64> },
    Rbb { b2: f64 },
    Rbv { s2: f64 },
    Cmb { target: f64 },
    Round { nu: f64, n: usize, method: RoundingMethod },
    Compare { n: usize, nu_grid: Vec<f64> },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Solve { .. } => "solve",
            Task::Sweep { .. } => "sweep",
            Task::Rbb { .. } => "rbb",
            Task::Rbv { .. } => "rbv",
            Task::Cmb { .. } => "cmb",
            Task::Round { .. } => "round",
            Task::Compare { .. } => "compare",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub space: SpaceConfig,
    pub model: RegressorSpec,
    pub task: Task,
    pub optimizer: OptimizerConfig,
    pub output: PathBuf,
}

/// Parses and validates a configuration document. Relative table paths are
/// resolved against `base_dir`.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<RunConfig, ConfigError> {
    let doc: Document = toml::from_str(text).map_err(|e| ConfigError(e.message().to_owned()))?;
    let space = parse_space(doc.space)?;
    let model = parse_model(doc.model, base_dir)?;
    let task = parse_task(&doc.task, doc.params)?;
    let optimizer = parse_optimizer(doc.optimizer)?;
    Ok(RunConfig {
        space,
        model,
        task,
        optimizer,
        output: doc.output.unwrap_or_else(|| PathBuf::from(".")),
    })
}

fn parse_space(doc: SpaceDoc) -> Result<SpaceConfig, ConfigError> {
    match (doc.bounds, doc.counts, doc.points) {
        (Some(bounds), Some(counts), None) => Ok(SpaceConfig::Grid {
            bounds: bounds.into_iter().map(|[lo, hi]| (lo, hi)).collect(),
            counts,
        }),
        (None, None, Some(points)) => Ok(SpaceConfig::Points(points)),
        (Some(_), None, None) => bad("space: `bounds` given without `counts`"),
        (None, Some(_), None) => bad("space: `counts` given without `bounds`"),
        (None, None, None) => bad("space: give either `bounds` and `counts` or `points`"),
        _ => bad("space: `points` cannot be combined with `bounds`/`counts`"),
    }
}

fn parse_model(doc: ModelDoc, base_dir: &Path) -> Result<RegressorSpec, ConfigError> {
    match doc.kind.as_str() {
        "polynomial" => {
            if doc.table.is_some() {
                return bad("model: `table` is only valid for kind = \"explicit\"");
            }
            let degree = doc
                .degree
                .ok_or_else(|| ConfigError("model: missing field `degree`".into()))?;
            Ok(RegressorSpec::Polynomial {
                degree,
                intercept: doc.intercept.unwrap_or(true),
                interaction_order: doc.interaction_order,
            })
        }
        "explicit" => {
            if doc.degree.is_some() || doc.intercept.is_some() || doc.interaction_order.is_some() {
                return bad("model: polynomial fields are not valid for kind = \"explicit\"");
            }
            let table = doc
                .table
                .ok_or_else(|| ConfigError("model: missing field `table`".into()))?;
            Ok(RegressorSpec::Explicit {
                path: base_dir.join(table),
            })
        }
        other => bad(format!(
            "model: unknown kind `{}` (expected polynomial or explicit)",
            other
        )),
    }
}

const PARAM_NAMES: [&str; 10] = [
    "nu", "sigma2", "tau2", "b2", "s2", "target", "n", "grid", "nu_grid", "method",
];

fn present(p: &ParamsDoc) -> Vec<&'static str> {
    let flags = [
        p.nu.is_some(),
        p.sigma2.is_some(),
        p.tau2.is_some(),
        p.b2.is_some(),
        p.s2.is_some(),
        p.target.is_some(),
        p.n.is_some(),
        p.grid.is_some(),
        p.nu_grid.is_some(),
        p.method.is_some(),
    ];
    PARAM_NAMES
        .iter()
        .zip(flags)
        .filter(|(_, f)| *f)
        .map(|(n, _)| *n)
        .collect()
}

fn parse_task(task: &str, p: ParamsDoc) -> Result<Task, ConfigError> {
    let allowed: &[&str] = match task {
        "solve" => &["nu", "sigma2", "tau2"],
        "sweep" => &["grid", "nu_grid"],
        "rbb" => &["b2"],
        "rbv" => &["s2"],
        "cmb" => &["target"],
        "round" => &["nu", "sigma2", "tau2", "n", "method"],
        "compare" => &["n", "grid", "nu_grid"],
        other => {
            return bad(format!(
                "unknown task `{}` (expected solve, sweep, rbb, rbv, cmb, round or compare)",
                other
            ))
        }
    };
    let unused: Vec<&str> = present(&p).into_iter().filter(|k| !allowed.contains(k)).collect();
    if !unused.is_empty() {
        return bad(format!("params not used by task `{}`: {}", task, unused.join(", ")));
    }
    let missing = |name: &str| ConfigError(format!("task `{}` requires params.{}", task, name));
    Ok(match task {
        "solve" => Task::Solve { nu: mixing(&p, task)? },
        "sweep" => Task::Sweep { nu_grid: nu_grid(&p)? },
        "rbb" => {
            let b2 = p.b2.ok_or_else(|| missing("b2"))?;
            if !b2.is_finite() {
                return bad("params.b2 must be finite");
            }
            Task::Rbb { b2 }
        }
        "rbv" => {
            let s2 = p.s2.ok_or_else(|| missing("s2"))?;
            if !s2.is_finite() {
                return bad("params.s2 must be finite");
            }
            Task::Rbv { s2 }
        }
        "cmb" => {
            let target = p.target.ok_or_else(|| missing("target"))?;
            if !(target > 0.0 && target.is_finite()) {
                return bad("params.target must be positive");
            }
            Task::Cmb { target }
        }
        "round" => {
            let nu = mixing(&p, task)?;
            let n = run_size(&p, task)?;
            let method = match p.method.as_deref() {
                None | Some("ceil_remove") => RoundingMethod::CeilRemove,
                Some("efficient_apportionment") => RoundingMethod::EfficientApportionment,
                Some(other) => {
                    return bad(format!(
                        "params.method `{}` (expected ceil_remove or efficient_apportionment)",
                        other
                    ))
                }
            };
            Task::Round { nu, n, method }
        }
        _ => Task::Compare {
            n: run_size(&p, task)?,
            nu_grid: nu_grid(&p)?,
        },
    })
}

fn run_size(p: &ParamsDoc, task: &str) -> Result<usize, ConfigError> {
    match p.n {
        None => bad(format!("task `{}` requires params.n", task)),
        Some(0) => bad("params.n must be at least 1"),
        Some(n) => Ok(n),
    }
}

/// `nu` directly or through `sigma2`/`tau2`; both routes must agree.
fn mixing(p: &ParamsDoc, task: &str) -> Result<f64, ConfigError> {
    let from_scale = match (p.sigma2, p.tau2) {
        (Some(s), Some(t)) => Some(nu_from_scale(s, t).map_err(|e| ConfigError(e.to_string()))?),
        (None, None) => None,
        _ => return bad("params.sigma2 and params.tau2 must be given together"),
    };
    match (p.nu, from_scale) {
        (Some(nu), _) if !(0.0..=1.0).contains(&nu) => bad(format!("params.nu = {} is outside [0, 1]", nu)),
        (Some(nu), Some(s)) if (nu - s).abs() > 1e-12 => bad(format!(
            "params.nu = {} contradicts sigma2/tau2, which give nu = {}",
            nu, s
        )),
        (Some(nu), _) => Ok(nu),
        (None, Some(s)) => Ok(s),
        (None, None) => bad(format!(
            "task `{}` requires params.nu or params.sigma2 and params.tau2",
            task
        )),
    }
}

fn nu_grid(p: &ParamsDoc) -> Result<Vec<f64>, ConfigError> {
    match (&p.grid, &p.nu_grid) {
        (Some(_), Some(_)) => bad("give params.grid or params.nu_grid, not both"),
        (Some(0), None) => bad("params.grid must be at least 1"),
        (Some(k), None) => Ok(default_nu_grid(*k)),
        (None, Some(values)) => {
            if values.is_empty() {
                return bad("params.nu_grid is empty");
            }
            if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return bad("params.nu_grid values must lie in [0, 1]");
            }
            if values.windows(2).any(|w| w[1] < w[0]) {
                return bad("params.nu_grid must be sorted ascending");
            }
            Ok(values.clone())
        }
        (None, None) => Ok(default_nu_grid(DEFAULT_GRID_POINTS)),
    }
}

fn parse_optimizer(doc: OptimizerDoc) -> Result<OptimizerConfig, ConfigError> {
    let mut cfg = OptimizerConfig::default();
    if let Some(tol) = doc.tol {
        if !(tol > 0.0) {
            return bad("optimizer.tol must be positive");
        }
        cfg.tol = tol;
    }
    if let Some(m) = doc.max_iter {
        if m == 0 {
            return bad("optimizer.max_iter must be at least 1");
        }
        cfg.max_iter = Some(m);
    }
    if let Some(n0) = doc.pseudo_count_start {
        if !(n0 >= 0.0) {
            return bad("optimizer.pseudo_count_start must be nonnegative");
        }
        cfg.pseudo_count_start = Some(n0);
    }
    if let Some(pr) = doc.prune_below {
        if !(pr >= 0.0) {
            return bad("optimizer.prune_below must be nonnegative");
        }
        cfg.prune_below = pr;
    }
    Ok(cfg)
}
