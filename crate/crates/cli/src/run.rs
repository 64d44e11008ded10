//! Resolved jobs and their outputs.

use std::io::Write;
use std::path::Path;

use planar_orbits::density::{Bump, TestFunction, DEFAULT_DELTA0};
use planar_orbits::diophantine::{cf_expand, cf_expand_until, excursion_height_for_slope, slope_of, xi_hat, CfInput};
use planar_orbits::experiments::{
    cloud_export, cloud_table, convergence_study, scaling_sweep, shrinking_target_search, ExperimentConfig, Window,
};
use planar_orbits::report::{fmt_f64, preamble, Table};
use planar_orbits::selftest::{selftest, SelftestOptions};
use planar_orbits::{LatticeKind, LatticeSpec, MatrixNorm, Vec2};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{parse_slope, Settings};
use crate::error::CliError;
use crate::Command;

#[derive(Debug, Clone, Serialize)]
pub struct CloudRun {
    pub lattice: LatticeSpec,
    pub u: Vec2,
    #[serde(rename = "T")]
    pub t: f64,
    pub window: Window,
    pub workers: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRun {
    #[serde(flatten)]
    pub experiment: ExperimentConfig,
    pub workers: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TargetRun {
    pub lattice: LatticeSpec,
    pub u: Vec2,
    pub v: Vec2,
    pub t_grid: Vec<f64>,
    pub workers: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CfRun {
    pub z: String,
    pub depth: usize,
    pub workers: usize,
    #[serde(skip)]
    input: CfInput,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExcursionRun {
    pub z: String,
    pub s1: f64,
    pub s2: f64,
    pub grid: usize,
    pub workers: usize,
    #[serde(skip)]
    input: CfInput,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestRun {
    pub norm: MatrixNorm,
    pub seed: u64,
    pub samples: usize,
    pub corrupt_bump: Option<f64>,
    pub workers: usize,
}

#[derive(Debug, Clone)]
pub enum Job {
    Cloud(CloudRun),
    Converge(ExperimentRun),
    Scaling(ExperimentRun),
    Target(TargetRun),
    Cf(CfRun),
    Excursion(ExcursionRun),
    Selftest(SelftestRun),
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn check_grid(grid: &[f64]) -> Result<(), CliError> {
    if grid.is_empty() || grid.iter().any(|t| !(t.is_finite() && *t >= 1.0)) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(bad(format!("T grid must be increasing values ≥ 1, got {grid:?}")));
    }
    Ok(())
}

fn check_u(u: Vec2) -> Result<Vec2, CliError> {
    if u.is_degenerate() || !u.x.is_finite() || !u.y.is_finite() {
        return Err(bad(format!("u must be a finite nonzero vector, got {u:?}")));
    }
    Ok(u)
}

fn golden_u() -> Vec2 {
    Vec2::new((5f64.sqrt() - 1.0) / 2.0, 1.0)
}

impl Job {
    /// Applies defaults and validates everything a run needs, so that a bad
    /// configuration is reported before any output is written.
    pub fn resolve(cmd: &Command, s: &Settings) -> Result<Job, CliError> {
        let workers = s.workers()?;
        Ok(match cmd {
            Command::Cloud(_) => {
                let t = s.t.unwrap_or(100.0);
                if !(t.is_finite() && t >= 1.0) {
                    return Err(bad(format!("T must be at least 1, got {t}")));
                }
                Job::Cloud(CloudRun {
                    lattice: s.lattice_spec(LatticeKind::QuaternionD23),
                    u: check_u(s.u.unwrap_or(Vec2::new(1.0, 0.0)))?,
                    t,
                    window: s.window.unwrap_or(Window::centered(4.0)),
                    workers,
                })
            }
            Command::Converge(_) | Command::Scaling(_) => {
                let mut e = ExperimentConfig::new(
                    s.lattice_spec(LatticeKind::QuaternionD23),
                    check_u(s.u.unwrap_or(Vec2::new(1.0, 0.0)))?,
                    s.f.clone().unwrap_or_else(|| TestFunction::hat(0.5, 4.0).expect("valid default")),
                    s.t_grid.clone().unwrap_or_else(|| vec![50.0, 100.0, 200.0, 400.0]),
                );
                e.alpha = s.alpha.unwrap_or(0.0);
                e.seed = s.seed.unwrap_or(0);
                e.tol = s.tol.unwrap_or(e.tol);
                e.admissibility_c = s.admissibility_c.unwrap_or(e.admissibility_c);
                e.delta0 = s.delta0.unwrap_or(DEFAULT_DELTA0);
                check_grid(&e.t_grid)?;
                e.validate().map_err(|err| bad(err.to_string()))?;
                let run = ExperimentRun { experiment: e, workers };
                if matches!(cmd, Command::Converge(_)) {
                    if run.experiment.alpha != 0.0 {
                        return Err(bad("alpha is only used by `scaling`"));
                    }
                    Job::Converge(run)
                } else {
                    Job::Scaling(run)
                }
            }
            Command::Target(_) => {
                let t_grid = s.t_grid.clone().unwrap_or_else(|| vec![10.0, 50.0, 250.0, 1250.0]);
                check_grid(&t_grid)?;
                Job::Target(TargetRun {
                    lattice: s.lattice_spec(LatticeKind::Sl2Z),
                    u: check_u(s.u.unwrap_or_else(golden_u))?,
                    v: s.v.unwrap_or(Vec2::new(1.0, 1.0)),
                    t_grid,
                    workers,
                })
            }
            Command::Cf(_) => {
                let z = s.z.clone().unwrap_or_else(|| "golden".into());
                let input = parse_slope(&z).map_err(bad)?;
                let depth = s.depth.unwrap_or(40);
                if depth == 0 {
                    return Err(bad("depth must be at least 1"));
                }
                // catches z outside [0, 1) and similar
                cf_expand(&input, 1).map_err(|e| bad(e.to_string()))?;
                Job::Cf(CfRun { z, depth, workers, input })
            }
            Command::Excursion(_) => {
                let (z, input) = match (&s.z, s.u) {
                    (Some(_), Some(_)) => return Err(bad("give either z or u, not both")),
                    (Some(z), None) => (z.clone(), parse_slope(z).map_err(bad)?),
                    (None, Some(u)) => {
                        let x = slope_of(check_u(u)?).map_err(|e| bad(e.to_string()))?;
                        let x = if x == 1.0 { 0.0 } else { x };
                        (fmt_f64(x), CfInput::Float(x))
                    }
                    (None, None) => ("golden".into(), CfInput::golden()),
                };
                cf_expand(&input, 1).map_err(|e| bad(e.to_string()))?;
                let (s1, s2) = (s.s1.unwrap_or(0.0), s.s2.unwrap_or(10.0));
                if !(0.0 <= s1 && s1 <= s2 && s2.is_finite()) {
                    return Err(bad(format!("need 0 ≤ s1 ≤ s2, got s1 = {s1}, s2 = {s2}")));
                }
                let grid = s.grid.unwrap_or(64);
                if grid == 0 {
                    return Err(bad("grid must be positive"));
                }
                Job::Excursion(ExcursionRun { z, s1, s2, grid, workers, input })
            }
            Command::Selftest(_) => {
                if let Some(c) = s.corrupt_bump {
                    if !(c.is_finite() && c > 0.0) {
                        return Err(bad(format!("corrupt_bump must be a positive factor, got {c}")));
                    }
                }
                Job::Selftest(SelftestRun {
                    norm: s.norm.unwrap_or_default(),
                    seed: s.seed.unwrap_or(1),
                    samples: s.samples.unwrap_or(2000),
                    corrupt_bump: s.corrupt_bump,
                    workers,
                })
            }
        })
    }

    pub fn run(&self) -> Result<Output, CliError> {
        match self {
            Job::Cloud(c) => {
                let pts = cloud_export(c.lattice, c.u, c.t, c.window)?;
                Ok(Output::new("cloud", c, cloud_table(&pts), json!({ "points": pts.len() })))
            }
            Job::Converge(c) => {
                let rep = convergence_study(&c.experiment)?;
                let mut out = Output::new("converge", c, rep.table(), serde_json::to_value(&rep).unwrap_or(Value::Null));
                out.summary = Some(format!("mu_hat {}, final ratio {}", fmt_f64(rep.mu_hat), fmt_f64(rep.final_ratio())));
                if rep.norm_estimate_violations > 0 {
                    out.failure = Some(format!(
                        "{} contributing terms violate the norm estimate (max ratio {})",
                        rep.norm_estimate_violations, rep.norm_estimate_max_ratio
                    ));
                }
                Ok(out)
            }
            Job::Scaling(c) => {
                let rep = scaling_sweep(&c.experiment)?;
                Ok(Output::new("scaling", c, rep.table(), serde_json::to_value(&rep).unwrap_or(Value::Null)))
            }
            Job::Target(c) => {
                let rep = shrinking_target_search(c.lattice, c.u, c.v, &c.t_grid)?;
                let mut out = Output::new("target", c, rep.table(), serde_json::to_value(&rep).unwrap_or(Value::Null));
                if rep.rows.windows(2).any(|w| w[1].distance > w[0].distance) {
                    out.failure = Some("minimal distance increased along the T grid".into());
                }
                Ok(out)
            }
            Job::Cf(c) => {
                let e = cf_expand(&c.input, c.depth)?;
                let bad_k: Vec<usize> = (0..e.depth()).filter(|&k| e.tk_bounds_exact(k) == Some(false)).collect();
                let report = json!({
                    "z": e.z,
                    "depth": e.depth(),
                    "finite": e.finite,
                    "k0": e.k0(),
                    "precision_limited": e.precision_limited,
                });
                let mut out = Output::new("cf", c, e.table(), report);
                if !bad_k.is_empty() {
                    out.failure = Some(format!("t_k bounds fail at k = {bad_k:?}"));
                }
                Ok(out)
            }
            Job::Excursion(c) => {
                let r = excursion_height_for_slope(c.input.value(), c.s1, c.s2, c.grid)?;
                let xi = cf_expand_until(&c.input, c.s2).and_then(|e| xi_hat(&e, c.s1, c.s2)).ok();
                let report = json!({ "height": r.height, "argmax": r.argmax, "xi_hat": xi });
                let mut out = Output::new("excursion", c, r.table(), report);
                out.summary = Some(format!("height {} at t = {}", fmt_f64(r.height), fmt_f64(r.argmax)));
                Ok(out)
            }
            Job::Selftest(c) => {
                let bump = c.corrupt_bump.map_or_else(Bump::standard, Bump::corrupted);
                let rep = selftest(&SelftestOptions { norm: c.norm, bump, seed: c.seed, samples: c.samples });
                let mut table = Table::new(&["check", "passed", "detail"]);
                for ch in &rep.checks {
                    table.push(vec![ch.name.to_string(), ch.passed.to_string(), ch.detail.clone()]);
                }
                let mut out = Output::new("selftest", c, table, serde_json::to_value(&rep).unwrap_or(Value::Null));
                let failed = rep.failures();
                if !failed.is_empty() {
                    out.failure = Some(format!("selftest checks failed: {}", failed.join(", ")));
                }
                Ok(out)
            }
        }
    }
}

pub struct Output {
    name: &'static str,
    preamble: Vec<String>,
    config: Value,
    table: Table,
    report: Value,
    summary: Option<String>,
    failure: Option<String>,
}

impl Output {
    fn new<C: Serialize>(name: &'static str, config: &C, table: Table, report: Value) -> Self {
        Output {
            name,
            preamble: preamble(config),
            config: serde_json::to_value(config).unwrap_or(Value::Null),
            table,
            report,
            summary: None,
            failure: None,
        }
    }

    /// Writes the table (and, with a directory, the JSON report).
    pub fn emit(&self, dir: Option<&Path>) -> Result<(), CliError> {
        match dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                let csv = std::fs::File::create(dir.join(format!("{}.csv", self.name)))?;
                self.table.write_csv(std::io::BufWriter::new(csv), &self.preamble)?;
                let doc = json!({
                    "version": env!("CARGO_PKG_VERSION"),
                    "config": self.config,
                    "report": self.report,
                });
                let mut f = std::fs::File::create(dir.join(format!("{}.json", self.name)))?;
                serde_json::to_writer_pretty(&mut f, &doc).map_err(std::io::Error::from)?;
                writeln!(f)?;
            }
            None => {
                let stdout = std::io::stdout();
                self.table.write_csv(stdout.lock(), &self.preamble)?;
            }
        }
        if let Some(s) = &self.summary {
            eprintln!("{s}");
        }
        Ok(())
    }

    pub fn verdict(&self) -> Result<(), CliError> {
        match &self.failure {
            Some(msg) => Err(CliError::Invariant(msg.clone())),
            None => Ok(()),
        }
    }
}
