//! Configuration-driven runs: parse a TOML document, solve, write CSV tables.

mod config;
mod output;

pub use config::{parse_config, ConfigError, RunConfig, SpaceConfig, Task};
pub use output::{fmt_full, fmt_sig6};

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::apportion::{ceil_then_remove, compare_rounding, loss_of_exact, pukelsheim_rieder, RoundingMethod};
use crate::error::DesignError;
use crate::model::{build_grid_space, evaluate_regressors, orthonormalize, DesignSpace, OrthonormalBasis};
use crate::optimizer::{find_nu_for_cmb, frontier_point, solve_rbb, solve_rbv, sweep_frontier, FrontierPoint};
use output::{write_compare, write_design, write_frontier};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Input(DesignError),
    #[error("numerical failure: {0}")]
    Numerical(DesignError),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<DesignError> for CliError {
    fn from(e: DesignError) -> Self {
        use DesignError::*;
        match e {
            Io(msg) => CliError::Io(msg),
            InvalidGrid(_)
            | InvalidRegressors(_)
            | RankDeficient { .. }
            | TableRowMismatch { .. }
            | NuOutOfRange(_)
            | InvalidScale(_)
            | InfeasibleBound(_)
            | TargetOutOfRange { .. }
            | InvalidRunSize(_)
            | InvalidOptions(_) => CliError::Input(e),
            other => CliError::Numerical(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// What a run produced: the files written and a one-line summary.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

/// Reads the configuration at `path`; tables are resolved next to it.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {}", path.display(), e)))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    Ok(parse_config(&text, base)?)
}

pub fn build_space(cfg: &SpaceConfig) -> Result<DesignSpace, DesignError> {
    match cfg {
        SpaceConfig::Grid { bounds, counts } => build_grid_space(bounds, counts),
        SpaceConfig::Points(points) => DesignSpace::from_points(points.clone()),
    }
}

fn headline(task: &str, p: &FrontierPoint) -> String {
    format!(
        "{}: nu={} var={} maxbias={} cmb={} loss={}",
        task,
        fmt_sig6(p.nu),
        fmt_sig6(p.var),
        fmt_sig6(p.maxbias),
        fmt_sig6(p.cmb),
        fmt_sig6(p.loss_value)
    )
}

/// Executes the configured task, writing its tables into `out_dir`.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<RunReport, CliError> {
    let space = build_space(&cfg.space)?;
    let f = evaluate_regressors(&cfg.model, &space)?;
    let q = orthonormalize(&f)?;
    std::fs::create_dir_all(out_dir)?;
    let design_path = out_dir.join("design.csv");
    let frontier_path = out_dir.join("frontier.csv");
    let opt = &cfg.optimizer;
    let name = cfg.task.name();

    let single = |p: &FrontierPoint, extra: &str| -> Result<RunReport, CliError> {
        write_design(&design_path, &space, p.design.weights(), None)?;
        write_frontier(&frontier_path, std::slice::from_ref(p))?;
        Ok(RunReport {
            files: vec![design_path.clone(), frontier_path.clone()],
            summary: format!("{}{}", headline(name, p), extra),
        })
    };

    match &cfg.task {
        Task::Solve { nu } => single(&frontier_point(&q, *nu, opt)?, ""),
        Task::Rbb { b2 } => {
            let d = solve_rbb(&q, *b2, opt)?;
            single(&d.point, &plateau_note(d.plateau))
        }
        Task::Rbv { s2 } => {
            let d = solve_rbv(&q, *s2, opt)?;
            single(&d.point, &plateau_note(d.plateau))
        }
        Task::Cmb { target } => {
            let d = find_nu_for_cmb(&q, *target, opt)?;
            single(&d.point, &plateau_note(d.plateau))
        }
        Task::Sweep { nu_grid } => {
            let points = sweep_frontier(&q, nu_grid, opt)?;
            write_frontier(&frontier_path, &points)?;
            let (first, last) = (&points[0], &points[points.len() - 1]);
            Ok(RunReport {
                files: vec![frontier_path],
                summary: format!(
                    "sweep: {} points; nu={} var={} maxbias={}; nu={} var={} maxbias={}",
                    points.len(),
                    fmt_sig6(first.nu),
                    fmt_sig6(first.var),
                    fmt_sig6(first.maxbias),
                    fmt_sig6(last.nu),
                    fmt_sig6(last.var),
                    fmt_sig6(last.maxbias)
                ),
            })
        }
        Task::Round { nu, n, method } => round(&q, &space, *nu, *n, *method, cfg, out_dir),
        Task::Compare { n, nu_grid } => {
            let points = sweep_frontier(&q, nu_grid, opt)?;
            let rows = points
                .iter()
                .map(|p| compare_rounding(&q, &p.design, *n, p.nu))
                .collect::<Result<Vec<_>, _>>()?;
            let path = out_dir.join("compare.csv");
            write_compare(&path, &rows)?;
            let worse = rows
                .iter()
                .filter(|r| r.loss_efficient.is_some_and(|e| e > r.loss_ceil_remove))
                .count();
            let max_excess = rows.iter().map(|r| r.excess_ceil_remove).fold(0.0, f64::max);
            Ok(RunReport {
                files: vec![path],
                summary: format!(
                    "compare: {} points; n={}; max ceil_remove excess={}; efficient_apportionment worse at {}",
                    rows.len(),
                    n,
                    fmt_sig6(max_excess),
                    worse
                ),
            })
        }
    }
}

fn plateau_note(plateau: bool) -> String {
    if plateau {
        " (plateau: smallest nu reported)".into()
    } else {
        String::new()
    }
}

fn round(
    q: &OrthonormalBasis,
    space: &DesignSpace,
    nu: f64,
    n: usize,
    method: RoundingMethod,
    cfg: &RunConfig,
    out_dir: &Path,
) -> Result<RunReport, CliError> {
    let p = frontier_point(q, nu, &cfg.optimizer)?;
    let exact = match method {
        RoundingMethod::CeilRemove => ceil_then_remove(q, &p.design, n, nu)?,
        RoundingMethod::EfficientApportionment => pukelsheim_rieder(&p.design, n)?,
    };
    let exact_loss = loss_of_exact(q, &exact, nu)?;
    let design_path = out_dir.join("design.csv");
    let frontier_path = out_dir.join("frontier.csv");
    write_design(&design_path, space, p.design.weights(), Some(&exact.allocations))?;
    write_frontier(&frontier_path, std::slice::from_ref(&p))?;
    Ok(RunReport {
        files: vec![design_path, frontier_path],
        summary: format!(
            "{}; n={} {} loss={} excess={}",
            headline("round", &p),
            n,
            method.as_str(),
            fmt_sig6(exact_loss),
            fmt_sig6(exact_loss / p.loss_value - 1.0)
        ),
    })
}
