//! Command-line front end: `estimate`, `bench`, `sketch` and `cv`.
//!
//! Settings come from built-in defaults, then an optional TOML file
//! (`--config`), then flags; later sources win. The top-level `seed` is the
//! only source of randomness and replaces any seed in the sections.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::admm::{solve_correlation, AdmConfig};
use crate::bench::{
    run_benchmark, run_sketch_experiment, sketch_csv, BenchConfig, CovModel, CvSettings, EstimatorEntry, Sampling,
    SketchConfig,
};
use crate::error::{Error, Result};
use crate::linalg::io::{read_dense_matrix, write_dense_matrix, write_sym_matrix};
use crate::linalg::{min_eigenvalue, Dense};
use crate::penalty::Family;
use crate::select::{cross_validate, lambda_grid_with_ratio, CvPlan, CvResult, Solver};
use crate::sketch::{build_sketch, gaussian_sampling_matrix, solve_sketch};
use crate::stats::{corr_to_cov, cov_to_corr, sample_cov, SampleSet};
use crate::thresholding::generalized_threshold_estimate;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    #[default]
    Estimate,
    Bench,
    Sketch,
    Cv,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Estimate => "estimate",
            Command::Bench => "bench",
            Command::Sketch => "sketch",
            Command::Cv => "cv",
        }
    }
}

#[derive(Debug, Clone, Default, Parser)]
#[command(name = "pdcov", version, about = "Sparse positive-definite covariance estimation")]
pub struct Args {
    /// TOML configuration file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, value_name = "NAME")]
    pub command: Option<Command>,
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses every available core.
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
    /// Sample CSV, one observation per row.
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    #[arg(long, value_name = "hard|soft|scad|lq")]
    pub penalty: Option<Family>,
    /// Fixed penalty level; cross-validated when absent.
    #[arg(long, value_name = "X")]
    pub lambda: Option<f64>,
    #[arg(long, value_name = "X")]
    pub q: Option<f64>,
    #[arg(long = "scad-a", value_name = "X")]
    pub scad_a: Option<f64>,
    /// Eigenvalue floor of the estimate.
    #[arg(long, value_name = "X")]
    pub eps: Option<f64>,
    #[arg(long = "rho-target", value_name = "X")]
    pub rho_target: Option<f64>,
    #[arg(long = "max-iter", value_name = "N")]
    pub max_iter: Option<usize>,
    /// Write the per-iteration objective trace.
    #[arg(long)]
    pub trace: bool,
    /// Log level: error, warn, info, debug or trace.
    #[arg(long, value_name = "LEVEL")]
    pub verbosity: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputSection {
    pub samples: Option<PathBuf>,
    /// Sampling matrix for `sketch` on real data; drawn from `[sketch]` when absent.
    pub sampling_matrix: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSection {
    pub family: Family,
    pub solver: Solver,
    pub lambda: Option<f64>,
    pub q: Option<f64>,
    pub scad_a: Option<f64>,
}

impl Default for EstimatorSection {
    fn default() -> Self {
        EstimatorSection { family: Family::Scad, solver: Solver::Adm, lambda: None, q: None, scad_a: None }
    }
}

impl EstimatorSection {
    fn entry(&self) -> EstimatorEntry {
        EstimatorEntry {
            name: match self.solver {
                Solver::Adm => self.family.name().to_string(),
                Solver::Threshold => format!("{}_thresh", self.family.name()),
            },
            family: self.family,
            solver: self.solver,
            q: self.q,
            scad_a: self.scad_a,
        }
    }
}

/// `[bench]`: the sweep itself; solver and CV settings come from `[adm]` and `[cv]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub models: Vec<CovModel>,
    pub n_values: Vec<usize>,
    pub mc_runs: usize,
    pub estimators: Vec<EstimatorEntry>,
}

impl Default for BenchSection {
    fn default() -> Self {
        let b = BenchConfig::default();
        BenchSection { models: b.models, n_values: b.n_values, mc_runs: b.mc_runs, estimators: b.estimators }
    }
}

/// `[sketch]`: simulation settings, also used to draw `A` for real data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SketchSection {
    pub model: CovModel,
    pub n: usize,
    pub m: usize,
    pub sampling: Sampling,
    pub mc_runs: usize,
}

impl Default for SketchSection {
    fn default() -> Self {
        let s = SketchConfig::default();
        SketchSection { model: s.model, n: s.n, m: s.m, sampling: s.sampling, mc_runs: s.mc_runs }
    }
}

/// Fully resolved settings; echoed into every manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub command: Command,
    pub seed: u64,
    pub out: PathBuf,
    pub threads: usize,
    pub verbosity: String,
    pub trace: bool,
    pub input: InputSection,
    pub estimator: EstimatorSection,
    pub adm: AdmConfig<f64>,
    pub cv: CvSettings,
    pub bench: BenchSection,
    pub sketch: SketchSection,
}

impl Default for CliConfig {
    fn default() -> Self {
        CliConfig {
            command: Command::Estimate,
            seed: 0,
            out: PathBuf::from("out"),
            threads: 0,
            verbosity: "warn".into(),
            trace: false,
            input: InputSection::default(),
            estimator: EstimatorSection::default(),
            adm: AdmConfig::default(),
            cv: CvSettings::default(),
            bench: BenchSection::default(),
            sketch: SketchSection::default(),
        }
    }
}

impl CliConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    /// Defaults, then the file named by `--config`, then flags.
    pub fn resolve(args: &Args) -> Result<Self> {
        let mut cfg = match &args.config {
            Some(path) => Self::from_toml(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)?,
            None => CliConfig::default(),
        };
        if let Some(c) = args.command {
            cfg.command = c;
        }
        if let Some(s) = args.seed {
            cfg.seed = s;
        }
        if let Some(o) = &args.out {
            cfg.out = o.clone();
        }
        if let Some(t) = args.threads {
            cfg.threads = t;
        }
        if let Some(v) = &args.verbosity {
            cfg.verbosity = v.clone();
        }
        if let Some(p) = &args.input {
            cfg.input.samples = Some(p.clone());
        }
        let est = &mut cfg.estimator;
        if let Some(f) = args.penalty {
            est.family = f;
        }
        if args.lambda.is_some() {
            est.lambda = args.lambda;
        }
        if args.q.is_some() {
            est.q = args.q;
        }
        if args.scad_a.is_some() {
            est.scad_a = args.scad_a;
        }
        if let Some(e) = args.eps {
            cfg.adm.eps_floor = e;
        }
        if let Some(r) = args.rho_target {
            cfg.adm.rho_target = r;
        }
        if let Some(m) = args.max_iter {
            cfg.adm.max_iter = m;
        }
        cfg.trace |= args.trace;
        cfg.adm.validate()?;
        cfg.estimator.entry().spec(cfg.estimator.lambda.unwrap_or(0.0))?;
        Ok(cfg)
    }

    pub fn bench_config(&self) -> BenchConfig {
        BenchConfig {
            models: self.bench.models.clone(),
            n_values: self.bench.n_values.clone(),
            mc_runs: self.bench.mc_runs,
            estimators: self.bench.estimators.clone(),
            seed: self.seed,
            adm: self.adm,
            cv: self.cv.clone(),
        }
    }

    pub fn sketch_config(&self) -> SketchConfig {
        let s = &self.sketch;
        SketchConfig {
            model: s.model,
            n: s.n,
            m: s.m,
            sampling: s.sampling,
            mc_runs: s.mc_runs,
            seed: self.seed,
            estimator: self.estimator.entry(),
            lambda: self.estimator.lambda.unwrap_or(SketchConfig::default().lambda),
            adm: self.adm,
        }
    }
}

/// What a command produced; `converged = false` maps to exit code 2.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub files: Vec<String>,
    pub converged: bool,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'static str,
    version: &'static str,
    seed: u64,
    wall_time_secs: f64,
    converged: bool,
    outputs: &'a [String],
    config: &'a CliConfig,
}

struct OutDir {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(OutDir { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, body).map_err(|e| Error::io(&p, e))
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let body = serde_json::to_string_pretty(value).expect("serializable summary");
        self.text(name, &(body + "\n"))
    }
}

fn read_samples(cfg: &CliConfig) -> Result<SampleSet<f64>> {
    let path = cfg
        .input
        .samples
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig(format!("{} needs an input sample file", cfg.command.name())))?;
    SampleSet::read_csv(path)
}

fn cv_for(cfg: &CliConfig, samples: &SampleSet<f64>, s: &crate::linalg::SymMat<f64>) -> Result<CvResult<f64>> {
    let grid = lambda_grid_with_ratio(s, cfg.cv.grid_points, cfg.cv.min_ratio)?;
    let plan = CvPlan { folds: cfg.cv.folds, lambda_grid: grid, repeats: cfg.cv.repeats, seed: cfg.seed };
    let est = cfg.estimator.entry().build(AdmConfig { tol: cfg.cv.tol, ..cfg.adm })?;
    cross_validate(samples, &est, &plan)
}

fn cv_folds_csv(res: &CvResult<f64>) -> String {
    let mut out = String::from("repeat,fold,lambda,loss,iters,converged\n");
    for f in &res.folds {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            f.repeat, f.fold, res.lambda_grid[f.lambda_index], f.loss, f.iters, f.converged
        ));
    }
    out
}

#[derive(Serialize)]
struct EstimateSummary {
    family: Family,
    solver: Solver,
    lambda: f64,
    lambda_source: &'static str,
    min_eig: f64,
    min_eig_cov: f64,
    sparsity: f64,
    iters: usize,
    converged: bool,
    final_step_norm: f64,
}

pub fn cmd_estimate(cfg: &CliConfig) -> Result<Outcome> {
    let samples = read_samples(cfg)?;
    let mut out = OutDir::create(&cfg.out)?;
    let r = sample_cov(&samples, true);
    let s = cov_to_corr(&r)?;
    let (lambda, source) = match cfg.estimator.lambda {
        Some(l) => (l, "fixed"),
        None => {
            let res = cv_for(cfg, &samples, &s)?;
            out.text("cv.csv", &res.to_csv())?;
            (res.best_lambda, "cv")
        }
    };
    let spec = cfg.estimator.entry().spec(lambda)?;
    let (theta, iters, converged, step, sparsity, min_eig) = match cfg.estimator.solver {
        Solver::Adm => {
            let rep = solve_correlation(&s, &spec, &cfg.adm, None)?;
            if cfg.trace {
                out.text("trace.csv", &rep.trace_csv())?;
            }
            (rep.theta_hat, rep.iters, rep.converged, rep.final_step_norm, rep.sparsity_offdiag, rep.min_eig)
        }
        Solver::Threshold => {
            let rep = generalized_threshold_estimate(&s, &spec)?;
            (rep.estimate, 0, true, 0.0, rep.sparsity_offdiag, rep.min_eig)
        }
    };
    let sigma = corr_to_cov(&theta, &r)?;
    write_sym_matrix(out.path("theta_hat.txt"), &theta)?;
    write_sym_matrix(out.path("sigma_hat.txt"), &sigma)?;
    let summary = EstimateSummary {
        family: spec.family,
        solver: cfg.estimator.solver,
        lambda,
        lambda_source: source,
        min_eig,
        min_eig_cov: min_eigenvalue(&sigma)?,
        sparsity,
        iters,
        converged,
        final_step_norm: step,
    };
    out.json("summary.json", &summary)?;
    Ok(Outcome { files: out.files, converged })
}

pub fn cmd_bench(cfg: &CliConfig) -> Result<Outcome> {
    let bench = cfg.bench_config();
    bench.validate()?;
    let mut out = OutDir::create(&cfg.out)?;
    let res = run_benchmark(&bench)?;
    out.text("results.csv", &res.results_csv())?;
    out.text("runs.csv", &res.runs_csv())?;
    out.text("eigenvalues.csv", &res.eigen_csv())?;
    let converged = res.runs.iter().all(|r| r.converged);
    Ok(Outcome { files: out.files, converged })
}

#[derive(Serialize)]
struct SketchSummary {
    family: Family,
    lambda: f64,
    m: usize,
    d: usize,
    min_eig: f64,
    sparsity: f64,
    iters: usize,
    converged: bool,
    final_step_norm: f64,
}

pub fn cmd_sketch(cfg: &CliConfig) -> Result<Outcome> {
    let sk = cfg.sketch_config();
    sk.validate()?;
    if cfg.input.samples.is_none() {
        let mut out = OutDir::create(&cfg.out)?;
        let recs = run_sketch_experiment(&sk)?;
        out.text("sketch_runs.csv", &sketch_csv(&recs))?;
        let converged = recs.iter().all(|r| r.converged);
        return Ok(Outcome { files: out.files, converged });
    }
    let samples = read_samples(cfg)?;
    let d = samples.d();
    let a: Dense<f64> = match (&cfg.input.sampling_matrix, sk.sampling) {
        (Some(p), _) => read_dense_matrix(p)?,
        (None, Sampling::Identity) => Dense::identity(d),
        (None, Sampling::Gaussian) => gaussian_sampling_matrix(sk.m, d, cfg.seed)?,
    };
    let model = build_sketch(&samples, &a)?;
    let mut out = OutDir::create(&cfg.out)?;
    let spec = sk.estimator.spec(sk.lambda)?;
    let rep = solve_sketch(&model, &spec, &cfg.adm, None)?;
    if cfg.trace {
        out.text("trace.csv", &rep.trace_csv())?;
    }
    write_dense_matrix(out.path("a_mat.txt"), &model.a_mat)?;
    write_sym_matrix(out.path("y.txt"), &model.y)?;
    write_sym_matrix(out.path("sigma_hat.txt"), &rep.theta_hat)?;
    out.json(
        "summary.json",
        &SketchSummary {
            family: spec.family,
            lambda: sk.lambda,
            m: model.m(),
            d,
            min_eig: rep.min_eig,
            sparsity: rep.sparsity_offdiag,
            iters: rep.iters,
            converged: rep.converged,
            final_step_norm: rep.final_step_norm,
        },
    )?;
    Ok(Outcome { files: out.files, converged: rep.converged })
}

#[derive(Serialize)]
struct CvSummary {
    family: Family,
    best_lambda: f64,
    best_mean_loss: f64,
    folds: usize,
    repeats: usize,
}

pub fn cmd_cv(cfg: &CliConfig) -> Result<Outcome> {
    let samples = read_samples(cfg)?;
    let mut out = OutDir::create(&cfg.out)?;
    let s = cov_to_corr(&sample_cov(&samples, true))?;
    let res = cv_for(cfg, &samples, &s)?;
    out.text("cv.csv", &res.to_csv())?;
    out.text("cv_folds.csv", &cv_folds_csv(&res))?;
    out.json(
        "summary.json",
        &CvSummary {
            family: cfg.estimator.family,
            best_lambda: res.best_lambda,
            best_mean_loss: res.mean_loss(res.best_index),
            folds: cfg.cv.folds,
            repeats: cfg.cv.repeats,
        },
    )?;
    Ok(Outcome { files: out.files, converged: res.folds.iter().all(|f| f.converged) })
}

/// Runs the configured command on a pool of `cfg.threads` workers and writes
/// `manifest.json` next to its outputs.
pub fn execute(cfg: &CliConfig) -> Result<Outcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let mut outcome = pool.install(|| match cfg.command {
        Command::Estimate => cmd_estimate(cfg),
        Command::Bench => cmd_bench(cfg),
        Command::Sketch => cmd_sketch(cfg),
        Command::Cv => cmd_cv(cfg),
    })?;
    outcome.files.push("manifest.json".into());
    let manifest = Manifest {
        command: cfg.command.name(),
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        wall_time_secs: start.elapsed().as_secs_f64(),
        converged: outcome.converged,
        outputs: &outcome.files,
        config: cfg,
    };
    let path = cfg.out.join("manifest.json");
    let body = serde_json::to_string_pretty(&manifest).expect("serializable manifest");
    fs::write(&path, body + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(outcome)
}

/// Resolves, runs and maps the result to a process exit code, reporting
/// problems on stderr.
pub fn run(args: &Args) -> i32 {
    let cfg = match CliConfig::resolve(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    match execute(&cfg) {
        Ok(o) if o.converged => EXIT_OK,
        Ok(_) => {
            eprintln!("warning: solver did not converge; partial results written to {}", cfg.out.display());
            EXIT_NOT_CONVERGED
        }
        Err(Error::DidNotConverge { iters, step_norm }) => {
            eprintln!("error: solver did not converge after {iters} iterations (step norm {step_norm:e})");
            EXIT_NOT_CONVERGED
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}
