//! Runs the splitting over the `λ × ω` grid of a configuration and writes
//! the reports.
//!
//! Output directory layout:
//!
//! ```text
//! config.toml                      resolved configuration
//! reference_x.csv, reference_u.csv monolithic solution
//! report_lambda{λ}_omega{ω}.csv    one row per iteration
//! slacks_lambda{λ}_omega{ω}.csv    signed slacks and update norms
//! iterate_x_lambda{λ}_omega{ω}.csv final iterate
//! iterate_u_lambda{λ}_omega{ω}.csv
//! summary.txt                      certificates, table, verdicts
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use dyniter::discrete::{check_discrete_monotonicity, MonotonicityReport};
use dyniter::models::{
    build_lshape_problem, build_scalar_demo, build_wave_heat_problem, LshapeParams, ScalarDemoParams, WaveHeatParams,
};
use dyniter::node::{check_coupling_monotone, check_dissipativity, estimate_psop_epsilon, DissipativityReport, PsopEstimate, DISSIPATIVITY_TOL};
use dyniter::reference::solve_monolithic;
use dyniter::splitting::{run, Check, ConvergenceReport, ReportRow, StopRule, Termination};
use dyniter::{CoupledProblem, CouplingOperator, NodeBlocks, SystemNode, TimeGrid};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::config::{ConfigError, CustomConfig, ExperimentConfig, ModelConfig};

/// Random pairs sampled for the discrete monotonicity certificate.
pub const MONOTONICITY_SAMPLES: usize = 100;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Matrix file of the `custom` model. Matrices are lists of rows; blocks
/// with a zero dimension may be left out, as may `h` (identity), `d`,
/// `coupling` (zero) and `x0` (zero).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomMatrices {
    pub n: usize,
    #[serde(default)]
    pub m_ext: usize,
    #[serde(default)]
    pub m_int: usize,
    pub a: Vec<Vec<f64>>,
    pub h: Option<Vec<Vec<f64>>>,
    pub b_ext: Option<Vec<Vec<f64>>>,
    pub b_int: Option<Vec<Vec<f64>>>,
    pub c_ext: Option<Vec<Vec<f64>>>,
    pub c_int: Option<Vec<Vec<f64>>>,
    pub d: Option<Vec<Vec<f64>>>,
    pub coupling: Option<Vec<Vec<f64>>>,
    pub x0: Option<Vec<f64>>,
}

fn matrix(field: &str, rows: Option<&Vec<Vec<f64>>>, r: usize, c: usize) -> Result<DMatrix<f64>, ConfigError> {
    let invalid = |message: String| ConfigError::Validation {
        field: format!("custom.{field}"),
        message,
    };
    let Some(rows) = rows else {
        return Ok(DMatrix::zeros(r, c));
    };
    if rows.len() != r || rows.iter().any(|row| row.len() != c) {
        let got_c = rows.first().map_or(0, Vec::len);
        return Err(invalid(format!("expected {r}x{c}, got {}x{got_c}", rows.len())));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

impl CustomMatrices {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| ConfigError::Parse {
            line: e.span().map_or(1, |s| 1 + text[..s.start.min(text.len())].matches('\n').count()),
            message: format!("{}: {}", path.display(), e.message()),
        })
    }

    /// Node, coupling and initial state, shape-checked but not certified.
    pub fn assemble(&self) -> Result<(SystemNode, DMatrix<f64>, DVector<f64>), ConfigError> {
        let (n, me, mi) = (self.n, self.m_ext, self.m_int);
        let blocks = NodeBlocks {
            a: matrix("a", Some(&self.a), n, n)?,
            b_ext: matrix("b_ext", self.b_ext.as_ref(), n, me)?,
            b_int: matrix("b_int", self.b_int.as_ref(), n, mi)?,
            c_ext: matrix("c_ext", self.c_ext.as_ref(), me, n)?,
            c_int: matrix("c_int", self.c_int.as_ref(), mi, n)?,
            d: matrix("d", self.d.as_ref(), me + mi, me + mi)?,
        };
        let h = match &self.h {
            Some(_) => matrix("h", self.h.as_ref(), n, n)?,
            None => DMatrix::identity(n, n),
        };
        let coupling = matrix("coupling", self.coupling.as_ref(), mi, mi)?;
        let x0 = match &self.x0 {
            Some(v) if v.len() == n => DVector::from_column_slice(v),
            Some(v) => {
                return Err(ConfigError::Validation {
                    field: "custom.x0".into(),
                    message: format!("expected {n} entries, got {}", v.len()),
                })
            }
            None => DVector::zeros(n),
        };
        let node = SystemNode::assemble(blocks, h).map_err(|e| ConfigError::Validation {
            field: "custom".into(),
            message: e.to_string(),
        })?;
        Ok((node, coupling, x0))
    }
}

fn build_custom(c: &CustomConfig, grid: TimeGrid) -> Result<CoupledProblem, String> {
    let matrices = CustomMatrices::load(&c.path).map_err(|e| e.to_string())?;
    let (node, coupling, x0) = matrices.assemble().map_err(|e| e.to_string())?;
    let weights = vec![1.0; node.m_ext()];
    let u_ext = dyniter::models::InputSignal::from(c.input).sample(grid, &weights);
    let coupling = CouplingOperator::new(coupling).map_err(|e| e.to_string())?;
    CoupledProblem::new(node, coupling, grid, x0, u_ext).map_err(|e| format!("assembly certificate failed: {e}"))
}

/// Assembles the configured problem. Certificate failures of the node or the
/// coupling come back as `Err` with a readable reason.
pub fn build_problem(config: &ExperimentConfig) -> Result<CoupledProblem, String> {
    let grid = TimeGrid::new(config.t_final, config.steps).map_err(|e| e.to_string())?;
    let certified = |r: dyniter::Result<CoupledProblem>| r.map_err(|e| format!("assembly certificate failed: {e}"));
    match &config.model {
        ModelConfig::WaveHeat(p) => certified(build_wave_heat_problem(&WaveHeatParams {
            wave_cells: p.wave_cells,
            heat_nodes: p.heat_nodes,
            rho: p.rho,
            tension: p.tension,
            damping: p.damping,
            left: p.left.into(),
            t_final: config.t_final,
            steps: config.steps,
            input: p.input.into(),
        })),
        ModelConfig::Lshape(p) => certified(build_lshape_problem(&LshapeParams {
            cells_per_unit: p.cells_per_unit,
            rho: p.rho,
            tension: p.tension,
            damping: p.damping,
            t_final: config.t_final,
            steps: config.steps,
            input: p.input.into(),
        })),
        ModelConfig::ScalarDemo(p) => certified(build_scalar_demo(&ScalarDemoParams {
            t_final: config.t_final,
            steps: config.steps,
            x0: p.x0,
        })),
        ModelConfig::Custom(c) => build_custom(c, grid),
    }
}

#[derive(Debug, Clone)]
pub struct Certificates {
    pub dissipativity: DissipativityReport,
    pub coupling_monotone: bool,
    pub psop: PsopEstimate,
    pub monotonicity: MonotonicityReport,
}

impl Certificates {
    pub fn compute(problem: &CoupledProblem, seed: u64) -> dyniter::Result<Self> {
        Ok(Self {
            dissipativity: check_dissipativity(problem.node(), DISSIPATIVITY_TOL),
            coupling_monotone: check_coupling_monotone(problem.coupling(), DISSIPATIVITY_TOL),
            psop: estimate_psop_epsilon(problem.node())?,
            monotonicity: check_discrete_monotonicity(problem, MONOTONICITY_SAMPLES, seed)?,
        })
    }

    pub fn pass(&self) -> bool {
        self.dissipativity.is_dissipative && self.coupling_monotone && self.monotonicity.pass
    }

    pub fn describe(&self) -> String {
        let verdict = |ok: bool| if ok { "pass" } else { "FAIL" };
        let psop = if self.psop.vacuous {
            "vacuous (no external output)".to_string()
        } else {
            format!("{:.6e}", self.psop.epsilon)
        };
        format!(
            "  dissipativity: {} (max sym eigenvalue {:.3e})\n  coupling monotone: {}\n  \
             discrete monotonicity: {} ({} samples, min slack {:.3e})\n  psop epsilon: {psop}\n",
            verdict(self.dissipativity.is_dissipative),
            self.dissipativity.max_sym_eig + 0.0,
            verdict(self.coupling_monotone),
            verdict(self.monotonicity.pass),
            self.monotonicity.samples,
            self.monotonicity.min_slack,
        )
    }
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub ok: bool,
    pub text: String,
}

/// Certificates only, no iteration.
pub fn check_config(config: &ExperimentConfig) -> CheckOutcome {
    let mut text = header(config);
    let ok = match build_problem(config) {
        Err(reason) => {
            let _ = writeln!(text, "  {reason}");
            false
        }
        Ok(problem) => match Certificates::compute(&problem, config.seed) {
            Ok(c) => {
                text.push_str(&c.describe());
                c.pass()
            }
            Err(e) => {
                let _ = writeln!(text, "  certificate computation failed: {e}");
                false
            }
        },
    };
    CheckOutcome { ok, text }
}

fn header(config: &ExperimentConfig) -> String {
    format!(
        "model {}, t_final {}, steps {}, seed {}\n\ncertificates\n",
        config.model.kind().name(),
        config.t_final,
        config.steps,
        config.seed
    )
}

pub fn cell_tag(lambda: f64, omega: f64) -> String {
    format!("lambda{lambda}_omega{omega}")
}

/// Outcome of one `(λ, ω)` cell.
#[derive(Debug)]
pub struct CellOutcome {
    pub lambda: f64,
    pub omega: f64,
    pub report: Result<ConvergenceReport, String>,
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    /// False if any mandatory check failed or any cell errored.
    pub ok: bool,
    pub summary: String,
    pub cells: Vec<CellOutcome>,
    pub files: Vec<PathBuf>,
}

fn write(path: PathBuf, contents: &str, files: &mut Vec<PathBuf>) -> Result<(), ExperimentError> {
    std::fs::write(&path, contents).map_err(|source| ExperimentError::Io {
        path: path.clone(),
        source,
    })?;
    files.push(path);
    Ok(())
}

/// Aggregate of one check over all rows: `false` if any row failed,
/// `skip` if no row applied it, `true` otherwise.
fn verdict(rows: &[ReportRow], pick: fn(&ReportRow) -> Check) -> &'static str {
    if rows.iter().any(|r| pick(r) == Check::Fail) {
        "false"
    } else if rows.iter().all(|r| pick(r) == Check::Skipped) {
        "skip"
    } else {
        "true"
    }
}

/// Checks whose failure makes the run fail. The uniform-in-time bound is
/// reported but advisory: with full-interval norms it is not implied by the
/// discrete energy identity.
fn mandatory_failed(report: &ConvergenceReport) -> bool {
    report
        .rows
        .iter()
        .any(|r| [r.monotone_ok, r.domination_ok, r.b_ok, r.psop_ok].contains(&Check::Fail))
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome, ExperimentError> {
    let out = &config.out;
    std::fs::create_dir_all(out).map_err(|source| ExperimentError::Io {
        path: out.clone(),
        source,
    })?;
    let mut files = Vec::new();
    write(out.join("config.toml"), &config.to_toml(), &mut files)?;
    let mut summary = header(config);

    let problem = match build_problem(config) {
        Ok(p) => p,
        Err(reason) => {
            let _ = writeln!(summary, "  {reason}\n\nstatus: FAILED");
            write(out.join("summary.txt"), &summary, &mut files)?;
            return Ok(ExperimentOutcome {
                ok: false,
                summary,
                cells: Vec::new(),
                files,
            });
        }
    };
    let (certificates_ok, certificates) = match Certificates::compute(&problem, config.seed) {
        Ok(c) => (c.pass(), c.describe()),
        Err(e) => (false, format!("  certificate computation failed: {e}\n")),
    };
    summary.push_str(&certificates);

    let reference = match solve_monolithic(&problem) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(summary, "\nreference solve failed: {e}\n\nstatus: FAILED");
            write(out.join("summary.txt"), &summary, &mut files)?;
            return Ok(ExperimentOutcome {
                ok: false,
                summary,
                cells: Vec::new(),
                files,
            });
        }
    };
    write(out.join("reference_x.csv"), &reference.x.to_csv(), &mut files)?;
    write(out.join("reference_u.csv"), &reference.u.to_csv(), &mut files)?;

    let stop = StopRule {
        max_iter: config.stop.max_iter,
        tol_update: config.stop.tol,
    };
    let grid: Vec<(f64, f64)> = config
        .lambda
        .iter()
        .flat_map(|&l| config.omega.iter().map(move |&w| (l, w)))
        .collect();
    // each cell owns its files; the summary is assembled after the join
    let cells: Vec<(CellOutcome, Result<Vec<PathBuf>, ExperimentError>)> = grid
        .par_iter()
        .map(|&(lambda, omega)| {
            let report = run(&problem, lambda, omega, stop, Some(&reference)).map_err(|e| e.to_string());
            let mut written = Vec::new();
            let io = match &report {
                Ok(r) => {
                    let tag = cell_tag(lambda, omega);
                    write(out.join(format!("report_{tag}.csv")), &r.to_csv(), &mut written)
                        .and_then(|_| write(out.join(format!("slacks_{tag}.csv")), &r.slacks_csv(), &mut written))
                        .and_then(|_| {
                            write(out.join(format!("iterate_x_{tag}.csv")), &r.final_pair.x.to_csv(), &mut written)
                        })
                        .and_then(|_| {
                            write(out.join(format!("iterate_u_{tag}.csv")), &r.final_pair.u.to_csv(), &mut written)
                        })
                        .map(|_| written)
                }
                Err(_) => Ok(written),
            };
            (CellOutcome { lambda, omega, report }, io)
        })
        .collect();

    let mut ok = certificates_ok;
    let mut outcomes = Vec::with_capacity(cells.len());
    for (cell, io) in cells {
        files.extend(io?);
        outcomes.push(cell);
    }

    let reports: Vec<ConvergenceReport> = outcomes.iter().filter_map(|c| c.report.as_ref().ok().cloned()).collect();
    summary.push_str("\nruns\n");
    summary.push_str(&emit_summary(&reports));
    summary.push_str("\nverdicts\n");
    for cell in &outcomes {
        let _ = write!(summary, "  lambda={} omega={}: ", cell.lambda, cell.omega);
        match &cell.report {
            Ok(r) => {
                ok &= !mandatory_failed(r);
                let _ = writeln!(
                    summary,
                    "monotone_ok={} domination_ok={} b_ok={} c_ok={} psop_ok={}",
                    verdict(&r.rows, |r| r.monotone_ok),
                    verdict(&r.rows, |r| r.domination_ok),
                    verdict(&r.rows, |r| r.b_ok),
                    verdict(&r.rows, |r| r.c_ok),
                    verdict(&r.rows, |r| r.psop_ok),
                );
            }
            Err(e) => {
                ok = false;
                let _ = writeln!(summary, "error: {e}");
            }
        }
    }
    summary.push_str(
        "\nmandatory: certificates, monotone_ok, domination_ok, b_ok, psop_ok (c_ok is advisory)\n",
    );
    let _ = writeln!(summary, "status: {}", if ok { "ok" } else { "FAILED" });
    write(out.join("summary.txt"), &summary, &mut files)?;
    Ok(ExperimentOutcome {
        ok,
        summary,
        cells: outcomes,
        files,
    })
}

const COLUMNS: [&str; 13] = [
    "lambda",
    "omega",
    "iterations",
    "termination",
    "dxu_l2",
    "sup_err",
    "state_err_w",
    "yext_err",
    "monotone",
    "domination",
    "b",
    "c",
    "psop",
];

fn row(fields: &[String]) -> String {
    let mut s = String::new();
    for (i, f) in fields.iter().enumerate() {
        let width = if i < 4 { 12 } else { 14 };
        let _ = write!(s, "{f:>width$}");
    }
    s.push('\n');
    s
}

fn sci(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{:.6e}", v + 0.0)
    }
}

/// One row per report: final errors and the smallest slack of each check
/// (plain and weighted variants merged).
pub fn emit_summary(reports: &[ConvergenceReport]) -> String {
    let mut s = row(&COLUMNS.map(String::from));
    for r in reports {
        let m = &r.last().metrics;
        let w = r.worst_slacks();
        let term = match r.termination {
            Termination::Converged => "converged",
            Termination::MaxIter => "max_iter",
        };
        s.push_str(&row(&[
            r.lambda.to_string(),
            r.omega.to_string(),
            r.iterations().to_string(),
            term.to_string(),
            sci(m.dxu_l2),
            sci(m.sup_err),
            sci(m.state_err_w),
            sci(m.yext_err),
            sci(w.monotone.min(w.monotone_w)),
            sci(w.domination.min(w.domination_w)),
            sci(w.b),
            sci(w.c),
            sci(w.psop),
        ]));
    }
    s
}
