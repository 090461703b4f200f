//! TOML run configuration and the `run`, `eoc` and `verify` drivers.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analysis::{write_eoc_csv, ErrorReport};
use crate::output::{field_stats, write_grid_csv, write_stats_csv, write_vtk, FieldStats};
use crate::pipeline::solve_level;
use crate::problems::{preset, ExprProblem, ProblemData, PRESETS};
use crate::scheme::{Discretization, SchemeParams, WeightStrategy};
use crate::solve::{SolveMethod, SolveOptions, DEFAULT_CAP};
use crate::space::{DGSpace, MAX_SPACE_DEGREE};
use crate::verify::{
    audit_assumptions, build_weight, diagnostic_params, identity_battery, inf_sup_diagnostic, trace_inverse_constant,
    write_identity_report, AssumptionAudit, IdentityCheck, InfSupReport,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Preset name; exclusive with `problem`.
    pub experiment: Option<String>,
    pub problem: Option<CustomProblem>,
    /// Checked against the preset when given.
    pub dim: Option<usize>,
    #[serde(default = "default_k")]
    pub k: usize,
    pub eps: Vec<f64>,
    /// Cells per axis, increasing.
    pub levels: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Constant `b0` in the reaction piece of the energy norm.
    #[serde(default = "default_b0")]
    pub b0: f64,
    #[serde(default)]
    pub scheme: SchemeOverrides,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

fn default_k() -> usize {
    1
}

fn default_b0() -> f64 {
    1.0
}

/// Values given here replace the experiment defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeOverrides {
    pub theta: Option<f64>,
    pub eta: Option<f64>,
    pub tau: Option<f64>,
    /// `"centered"` or `"signed(c)"`.
    pub alpha: Option<String>,
    pub alpha_d: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// `"direct"` or `"iterative"`.
    pub method: String,
    pub tol: f64,
    pub max_iter: usize,
    pub cap: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: "direct".into(),
            tol: 1e-10,
            max_iter: 5000,
            cap: DEFAULT_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub csv: bool,
    /// Grid CSV of the finest level.
    pub field_dump: bool,
    pub vtk: bool,
    /// Grid intervals per axis for the field dump.
    pub grid: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            csv: true,
            field_dump: true,
            vtk: false,
            grid: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub trials: usize,
    pub inf_sup_trials: usize,
    pub inf_sup_levels: Vec<usize>,
    pub c_beta: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            trials: 1000,
            inf_sup_trials: 100,
            inf_sup_levels: vec![8, 16],
            c_beta: 10.0,
        }
    }
}

/// Problem given by expressions in `x`, `y`, `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomProblem {
    pub dim: usize,
    pub beta: Vec<String>,
    #[serde(default)]
    pub gamma: String,
    pub exact: Option<Vec<String>>,
    pub f: Option<Vec<String>>,
    pub dirichlet_value: Option<Vec<String>>,
    pub neumann: Option<Vec<String>>,
    /// Faces among `x0 x1 y0 y1 z0 z1`; all faces when omitted.
    pub dirichlet_faces: Option<Vec<String>>,
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.experiment, &self.problem) {
            (Some(name), None) => {
                if !PRESETS.contains(&name.as_str()) {
                    return Err(Error::Config(format!("unknown experiment {name:?}; expected one of {PRESETS:?}")));
                }
            }
            (None, Some(_)) => {}
            _ => return Err(Error::Config("set exactly one of `experiment` and `[problem]`".into())),
        }
        if self.eps.is_empty() || self.eps.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::Config("eps must be a non-empty list of positive values".into()));
        }
        if self.levels.is_empty() || self.levels.contains(&0) || self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("levels must be positive and strictly increasing".into()));
        }
        if self.k > MAX_SPACE_DEGREE {
            return Err(Error::Config(format!("k = {} exceeds {MAX_SPACE_DEGREE}", self.k)));
        }
        if !(self.b0 > 0.0) {
            return Err(Error::Config("b0 must be positive".into()));
        }
        if !matches!(self.solver.method.as_str(), "direct" | "iterative") {
            return Err(Error::Config(format!("unknown solver method {:?}", self.solver.method)));
        }
        let problem = self.problem(self.eps[0])?;
        if let Some(d) = self.dim {
            if d != problem.dim {
                return Err(Error::Config(format!("dim = {d} but the problem is {}-dimensional", problem.dim)));
            }
        }
        for &eps in &self.eps {
            self.params(eps)?;
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        self.experiment.as_deref().unwrap_or("custom")
    }

    pub fn problem(&self, eps: f64) -> Result<ProblemData> {
        if let Some(name) = &self.experiment {
            return preset(name, eps);
        }
        let p = self.problem.as_ref().ok_or_else(|| Error::Config("no problem".into()))?;
        let all = ["x0", "x1", "y0", "y1", "z0", "z1"];
        let faces = p
            .dirichlet_faces
            .clone()
            .unwrap_or_else(|| all[..2 * p.dim].iter().map(|s| s.to_string()).collect());
        ExprProblem {
            dim: p.dim,
            eps,
            beta: p.beta.clone(),
            gamma: p.gamma.clone(),
            exact: p.exact.clone(),
            f: p.f.clone(),
            dirichlet_value: p.dirichlet_value.clone(),
            neumann: p.neumann.clone(),
            dirichlet_faces: faces,
        }
        .build()
        .map_err(|e| e.context("custom problem"))
    }

    pub fn params(&self, eps: f64) -> Result<SchemeParams> {
        let mut p = match &self.experiment {
            Some(name) => SchemeParams::for_experiment(name, eps)?,
            None => SchemeParams::default(),
        };
        let s = &self.scheme;
        if let Some(v) = s.theta {
            p.theta = v;
        }
        if let Some(v) = s.eta {
            p.eta = v;
        }
        if let Some(v) = s.tau {
            p.tau = v;
        }
        if let Some(a) = &s.alpha {
            p.alpha = WeightStrategy::parse(a)?;
        }
        if let Some(a) = &s.alpha_d {
            p.alpha_d = WeightStrategy::parse(a)?;
        }
        p.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(p)
    }

    pub fn solve_options(&self) -> SolveOptions {
        let method = match self.solver.method.as_str() {
            "iterative" => SolveMethod::Iterative {
                block_size: 0,
                max_iter: self.solver.max_iter,
            },
            _ => SolveMethod::Direct,
        };
        SolveOptions {
            tol: self.solver.tol,
            method,
            cap: self.solver.cap,
        }
    }
}

/// Result of one `(eps, level)` solve.
#[derive(Debug, Clone)]
pub struct LevelResult {
    pub eps: f64,
    pub n: usize,
    pub errors: Option<ErrorReport>,
    pub stats: FieldStats,
    pub residual: f64,
    pub seconds: f64,
}

impl LevelResult {
    pub fn summary(&self) -> String {
        let mut s = format!(
            "eps={:e} n={} dofs={} linf={:.4e} jump_norm={:.4e} residual={:.2e} time={:.2}s",
            self.eps, self.n, self.stats.dofs, self.stats.linf, self.stats.jump_norm, self.residual, self.seconds
        );
        if let Some(e) = &self.errors {
            s += &format!(" energy={:.4e} l2={:.4e}", e.energy, e.l2);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    /// Solve, report errors when the exact solution is known, dump fields.
    Run,
    /// Error sweep only; the problem must have an exact solution.
    Eoc,
}

fn eps_tag(eps: f64) -> String {
    format!("{eps:e}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(e).context(path.display().to_string()))
}

fn write_run_record(cfg: &RunConfig, out: &Path, command: &str) -> Result<()> {
    let mut w = create(&out.join("run.txt"))?;
    writeln!(w, "command={command}")?;
    writeln!(w, "seed={}", cfg.seed)?;
    writeln!(w, "problem={}", cfg.name())?;
    writeln!(w, "version={}", env!("CARGO_PKG_VERSION"))?;
    writeln!(w, "[config]")?;
    write!(w, "{}", cfg.to_toml())?;
    Ok(())
}

/// Solve every `(eps, level)` pair and write the CSV tables and dumps to
/// `out`.
pub fn run(cfg: &RunConfig, out: &Path, mode: RunMode) -> Result<Vec<LevelResult>> {
    fs::create_dir_all(out)?;
    write_run_record(cfg, out, if mode == RunMode::Run { "run" } else { "eoc" })?;
    let opts = cfg.solve_options();
    let mut results = Vec::new();
    for &eps in &cfg.eps {
        let problem = cfg.problem(eps)?;
        if mode == RunMode::Eoc && !problem.has_exact() {
            return Err(Error::Config(format!("{} has no exact solution; use `run`", problem.name)));
        }
        let params = cfg.params(eps)?;
        let mut errors = Vec::new();
        let mut stats = Vec::new();
        for (i, &n) in cfg.levels.iter().enumerate() {
            let ctx = || format!("{} eps={eps:e} n={n}", problem.name);
            let sol = solve_level(&problem, n, cfg.k, params, &opts).map_err(|e| e.context(ctx()))?;
            let u = sol.function();
            let err = if problem.has_exact() {
                Some(sol.errors(&problem, cfg.b0).map_err(|e| e.context(ctx()))?)
            } else {
                None
            };
            let st = field_stats(&u, &problem);
            let last = i + 1 == cfg.levels.len();
            if mode == RunMode::Run && last {
                let stem = format!("field_{}_eps{}", cfg.name(), eps_tag(eps));
                if cfg.output.field_dump {
                    write_grid_csv(&mut create(&out.join(format!("{stem}.csv")))?, &u, cfg.output.grid)?;
                }
                if cfg.output.vtk {
                    write_vtk(&mut create(&out.join(format!("{stem}.vtk")))?, &u, &stem)?;
                }
            }
            results.push(LevelResult {
                eps,
                n,
                errors: err.clone(),
                stats: st,
                residual: sol.report.recomputed_residual,
                seconds: (sol.assembly_time + sol.report.wall_time).as_secs_f64(),
            });
            errors.extend(err);
            stats.push(st);
        }
        if cfg.output.csv {
            if !errors.is_empty() {
                let path = out.join(format!("eoc_{}_eps{}.csv", cfg.name(), eps_tag(eps)));
                write_eoc_csv(&mut create(&path)?, &errors)?;
            }
            let path = out.join(format!("stats_{}_eps{}.csv", cfg.name(), eps_tag(eps)));
            write_stats_csv(&mut create(&path)?, &stats)?;
        }
    }
    Ok(results)
}

#[derive(Debug, Clone)]
pub struct VerifySummary {
    pub identities: Vec<IdentityCheck>,
    pub audit: AssumptionAudit,
    /// `(eps, report)` per level; empty when no weight function exists.
    pub inf_sup: Vec<(f64, InfSupReport)>,
    pub weight_note: Option<String>,
    pub report_path: PathBuf,
}

impl VerifySummary {
    pub fn identities_pass(&self) -> bool {
        self.identities.iter().all(|c| c.passed())
    }

    /// Positive ratios, and per `eps` the minimum ratio not dropping by more
    /// than a factor 2 between consecutive levels.
    pub fn inf_sup_pass(&self) -> bool {
        let positive = self.inf_sup.iter().all(|(_, r)| r.min_ratio > 0.0);
        let stable = self
            .inf_sup
            .windows(2)
            .filter(|w| w[0].0 == w[1].0)
            .all(|w| w[1].1.min_ratio >= 0.5 * w[0].1.min_ratio);
        positive && stable
    }

    pub fn passed(&self) -> bool {
        self.identities_pass() && self.inf_sup_pass()
    }
}

/// Identity battery, assumption audit on the coarsest level, and the
/// inf-sup diagnostic when a weight function exists. Writes `verify.txt`.
pub fn verify(cfg: &RunConfig, out: &Path) -> Result<VerifySummary> {
    fs::create_dir_all(out)?;
    write_run_record(cfg, out, "verify")?;
    let identities = identity_battery(cfg.seed, cfg.verify.trials)?;
    let problem = cfg.problem(cfg.eps[0])?;
    let audit = audit_assumptions(&problem.mesh(cfg.levels[0])?, &problem, cfg.verify.c_beta)?;
    let mut inf_sup = Vec::new();
    let mut weight_note = None;
    let c_g = trace_inverse_constant(problem.dim, cfg.k)?;
    'eps: for &eps in &cfg.eps {
        let problem = cfg.problem(eps)?;
        let params = diagnostic_params(cfg.params(eps)?, c_g);
        for &n in &cfg.verify.inf_sup_levels {
            let space = DGSpace::new(Arc::new(problem.mesh(n)?), cfg.k)?;
            let weight = match build_weight(&problem.beta, space.mesh()) {
                Ok(w) => w,
                Err(e) => {
                    weight_note = Some(e.to_string());
                    break 'eps;
                }
            };
            let d = Discretization::new(&space, &problem, params)?;
            let r = inf_sup_diagnostic(&d, &weight, cfg.verify.inf_sup_trials, cfg.seed)?;
            inf_sup.push((eps, r));
        }
    }
    let report_path = out.join("verify.txt");
    let summary = VerifySummary {
        identities,
        audit,
        inf_sup,
        weight_note,
        report_path: report_path.clone(),
    };
    let mut w = create(&report_path)?;
    writeln!(w, "seed={}", cfg.seed)?;
    write_identity_report(&mut w, &summary.identities)?;
    summary.audit.write_key_values(&mut w)?;
    writeln!(w, "trace_inverse_constant={c_g:e}")?;
    for (eps, r) in &summary.inf_sup {
        writeln!(
            w,
            "inf_sup eps={eps:e} h={:e} trials={} min_ratio={:e} max_ratio={:e} min_bound={:e} max_bound={:e} eta={} kappa={:e} projection_condition={:e}",
            r.h, r.trials, r.min_ratio, r.max_ratio, r.min_bound, r.max_bound, r.eta, r.kappa, r.projection_condition
        )?;
    }
    if let Some(note) = &summary.weight_note {
        writeln!(w, "inf_sup=unavailable ({note})")?;
    }
    writeln!(w, "identities={}", if summary.identities_pass() { "pass" } else { "fail" })?;
    writeln!(w, "inf_sup={}", if summary.inf_sup_pass() { "pass" } else { "fail" })?;
    Ok(summary)
}
