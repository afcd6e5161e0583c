//! Monte Carlo simulation harness: covariance models, Gaussian sampling,
//! relative errors and the `(model, n, run)` sweep.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admm::AdmConfig;
use crate::error::{Error, Result};
use crate::linalg::{eig_sym, min_eigenvalue, spec_norm, Dense, SymMat};
use crate::penalty::{Family, PenaltySpec};
use crate::scalar::Scalar;
use crate::select::{cross_validate_many, lambda_grid_with_ratio, CvPlan, Estimator, SoftCache, Solver, DEFAULT_FOLDS};
use crate::sketch::{build_sketch, gaussian_sampling_matrix, noise_energy, solve_sketch};
use crate::stats::{corr_to_cov, cov_to_corr, sample_cov, SampleSet};

/// Block size of the block-diagonal model.
pub const BLOCK_SIZE: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovKind {
    Block,
    Toeplitz,
    Banded,
}

impl CovKind {
    pub fn name(self) -> &'static str {
        match self {
            CovKind::Block => "block",
            CovKind::Toeplitz => "toeplitz",
            CovKind::Banded => "banded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CovModel {
    pub kind: CovKind,
    pub d: usize,
}

impl CovModel {
    pub fn new(kind: CovKind, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::BadDim(format!("covariance model needs d >= 2, got {d}")));
        }
        if kind == CovKind::Block && !d.is_multiple_of(BLOCK_SIZE) {
            return Err(Error::BadDim(format!("block model needs d divisible by {BLOCK_SIZE}, got {d}")));
        }
        Ok(CovModel { kind, d })
    }

    pub fn validated(self) -> Result<Self> {
        CovModel::new(self.kind, self.d)
    }
}

/// Population covariance of a model; every model has unit diagonal, so it is
/// also the population correlation.
pub fn make_cov<T: Scalar>(model: CovModel) -> Result<SymMat<T>> {
    let CovModel { kind, d } = model.validated()?;
    Ok(SymMat::from_upper(d, |i, j| {
        let gap = j.abs_diff(i);
        match kind {
            CovKind::Block => {
                if i == j {
                    T::one()
                } else if i / BLOCK_SIZE == j / BLOCK_SIZE {
                    T::of(0.8)
                } else {
                    T::zero()
                }
            }
            CovKind::Toeplitz => T::of(0.75f64.powi(gap as i32)),
            CovKind::Banded => T::of((1.0 - gap as f64 / 10.0).max(0.0)),
        }
    }))
}

/// `n` draws of `x = L z` with `L` the symmetric square root of `cov`.
pub fn sample_gaussian<T: Scalar>(cov: &SymMat<T>, n: usize, seed: u64) -> Result<SampleSet<T>> {
    let root = psd_sqrt(cov)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = cov.dim();
    let mut data = Vec::with_capacity(n * d);
    let mut z = vec![T::zero(); d];
    for _ in 0..n {
        for zi in z.iter_mut() {
            let v: f64 = StandardNormal.sample(&mut rng);
            *zi = T::of(v);
        }
        for i in 0..d {
            let r = root.row(i);
            data.push(r.iter().zip(&z).map(|(&a, &b)| a * b).sum());
        }
    }
    SampleSet::new(Dense::new(n, d, data)?)
}

fn psd_sqrt<T: Scalar>(cov: &SymMat<T>) -> Result<SymMat<T>> {
    cov.check_finite()?;
    let eig = eig_sym(cov)?;
    let tol = T::of(1e-10) * eig.max_value().abs().max(T::one());
    let min = eig.min_value();
    if min < -tol {
        return Err(Error::NotPsd { min_eig: min.to_f64_lossy() });
    }
    Ok(eig.reconstruct_with(|v| v.max(T::zero()).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    RelFrob,
    RelSpec,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::RelFrob, Metric::RelSpec];

    pub fn name(self) -> &'static str {
        match self {
            Metric::RelFrob => "rel_frob",
            Metric::RelSpec => "rel_spec",
        }
    }
}

/// `‖est − truth‖ / ‖truth‖` in the Frobenius or spectral norm.
pub fn relative_error<T: Scalar>(est: &SymMat<T>, truth: &SymMat<T>, metric: Metric) -> Result<T> {
    let diff = est.sub(truth)?;
    let (num, den) = match metric {
        Metric::RelFrob => (diff.frob_norm(), truth.frob_norm()),
        Metric::RelSpec => (spec_norm(&diff)?, spec_norm(truth)?),
    };
    if den == T::zero() {
        return Err(Error::ZeroTruth);
    }
    Ok(num / den)
}

/// Mixes a root seed with a path of indices (splitmix64 finalizer per step),
/// so every `(model, n, run, stream)` draws from its own generator.
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    path.iter().fold(mix(root), |acc, &p| mix(acc ^ mix(p)))
}

/// One estimator in a benchmark; `q` and `scad_a` fall back to the family defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorEntry {
    pub name: String,
    pub family: Family,
    #[serde(default)]
    pub solver: Solver,
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default)]
    pub scad_a: Option<f64>,
}

impl EstimatorEntry {
    pub fn adm(family: Family) -> Self {
        EstimatorEntry { name: family.name().into(), family, solver: Solver::Adm, q: None, scad_a: None }
    }

    pub fn threshold(family: Family) -> Self {
        EstimatorEntry {
            name: format!("{}_thresh", family.name()),
            family,
            solver: Solver::Threshold,
            q: None,
            scad_a: None,
        }
    }

    pub fn spec(&self, lambda: f64) -> Result<PenaltySpec<f64>> {
        let mut spec = PenaltySpec::new(self.family, lambda)?;
        if let Some(q) = self.q {
            spec.q = q;
        }
        if let Some(a) = self.scad_a {
            spec.scad_a = a;
        }
        spec.validated()
    }

    pub fn build(&self, adm: AdmConfig<f64>) -> Result<Estimator<f64>> {
        Ok(Estimator { name: self.name.clone(), spec: self.spec(0.0)?, solver: self.solver, adm })
    }
}

/// How `λ` is picked in each run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvSettings {
    pub folds: usize,
    pub grid_points: usize,
    /// Smallest grid value as a fraction of `max_{i≠j}|S_ij|`.
    pub min_ratio: f64,
    pub repeats: usize,
    /// Stopping tolerance for the fold solves; the final fit uses the main one.
    pub tol: f64,
    /// Skip cross-validation and use this `λ` everywhere.
    pub fixed_lambda: Option<f64>,
}

impl Default for CvSettings {
    fn default() -> Self {
        CvSettings { folds: DEFAULT_FOLDS, grid_points: 8, min_ratio: 0.05, repeats: 1, tol: 1e-3, fixed_lambda: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub models: Vec<CovModel>,
    pub n_values: Vec<usize>,
    pub mc_runs: usize,
    pub estimators: Vec<EstimatorEntry>,
    pub seed: u64,
    pub adm: AdmConfig<f64>,
    pub cv: CvSettings,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            models: [CovKind::Block, CovKind::Toeplitz, CovKind::Banded]
                .into_iter()
                .map(|kind| CovModel { kind, d: 40 })
                .collect(),
            n_values: vec![100, 200, 400, 600, 800],
            mc_runs: 20,
            estimators: Family::ALL.into_iter().map(EstimatorEntry::adm).collect(),
            seed: 0,
            adm: AdmConfig::default(),
            cv: CvSettings::default(),
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() || self.estimators.is_empty() || self.n_values.is_empty() {
            return Err(Error::InvalidConfig("models, n_values and estimators must be nonempty".into()));
        }
        if self.mc_runs < 1 {
            return Err(Error::InvalidConfig("mc_runs must be >= 1".into()));
        }
        if let Some(n) = self.n_values.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidConfig(format!("sample sizes must be >= 2, got {n}")));
        }
        for m in &self.models {
            m.validated()?;
        }
        for e in &self.estimators {
            e.spec(0.0)?;
        }
        self.adm.validate()?;
        let cv = &self.cv;
        if let Some(l) = cv.fixed_lambda {
            PenaltySpec::soft(l)?;
        } else if cv.folds < 2 || cv.grid_points < 2 || cv.repeats < 1 || !(cv.tol > 0.0) {
            return Err(Error::InvalidConfig("cv needs folds >= 2, grid_points >= 2, repeats >= 1, tol > 0".into()));
        }
        Ok(())
    }
}

/// Outcome of one estimator on one simulated data set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub model: CovKind,
    pub d: usize,
    pub n: usize,
    pub run: usize,
    pub estimator: String,
    pub solver: Solver,
    pub lambda: f64,
    pub rel_frob: f64,
    pub rel_spec: f64,
    /// Smallest eigenvalue of the correlation estimate.
    pub min_eig: f64,
    pub min_eig_cov: f64,
    /// `max_i |Θ̂_ii − 1|`.
    pub max_diag_dev: f64,
    pub sparsity: f64,
    pub iters: usize,
    pub converged: bool,
    /// Correlation-estimate spectrum, descending.
    pub eigenvalues: Vec<f64>,
    pub error: Option<String>,
}

impl RunRecord {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }

    pub fn is_pd(&self) -> bool {
        self.ok() && self.min_eig_cov > 0.0
    }

    fn failed(model: CovModel, n: usize, run: usize, est: &EstimatorEntry, err: &Error) -> Self {
        RunRecord {
            model: model.kind,
            d: model.d,
            n,
            run,
            estimator: est.name.clone(),
            solver: est.solver,
            lambda: f64::NAN,
            rel_frob: f64::NAN,
            rel_spec: f64::NAN,
            min_eig: f64::NAN,
            min_eig_cov: f64::NAN,
            max_diag_dev: f64::NAN,
            sparsity: f64::NAN,
            iters: 0,
            converged: false,
            eigenvalues: Vec::new(),
            error: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub model: CovKind,
    pub d: usize,
    pub n: usize,
    pub estimator: String,
    pub metric: Metric,
    pub mean: f64,
    pub std: f64,
    pub pd_rate: f64,
    pub mean_sparsity: f64,
    pub mean_iters: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOutput {
    pub rows: Vec<BenchRow>,
    /// Ordered by model, `n`, run, then estimator.
    pub runs: Vec<RunRecord>,
}

impl BenchOutput {
    pub fn row(&self, kind: CovKind, n: usize, estimator: &str, metric: Metric) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.model == kind && r.n == n && r.estimator == estimator && r.metric == metric)
    }

    pub fn results_csv(&self) -> String {
        let mut out = String::from("model,d,n,estimator,metric,mean,std,pd_rate,mean_sparsity,mean_iters\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.model.name(),
                r.d,
                r.n,
                r.estimator,
                r.metric.name(),
                r.mean,
                r.std,
                r.pd_rate,
                r.mean_sparsity,
                r.mean_iters
            );
        }
        out
    }

    pub fn runs_csv(&self) -> String {
        let mut out = String::from(
            "model,d,n,run,estimator,lambda,rel_frob,rel_spec,min_eig,min_eig_cov,max_diag_dev,sparsity,iters,converged,error\n",
        );
        for r in &self.runs {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.model.name(),
                r.d,
                r.n,
                r.run,
                r.estimator,
                r.lambda,
                r.rel_frob,
                r.rel_spec,
                r.min_eig,
                r.min_eig_cov,
                r.max_diag_dev,
                r.sparsity,
                r.iters,
                r.converged,
                r.error.as_deref().unwrap_or("").replace([',', '\n'], ";")
            );
        }
        out
    }

    /// One line per run: identifiers followed by the estimate's eigenvalues.
    pub fn eigen_csv(&self) -> String {
        let mut out = String::from("model,d,n,run,estimator,eigenvalues\n");
        for r in self.runs.iter().filter(|r| r.ok()) {
            let vals: Vec<String> = r.eigenvalues.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{},{},{},{},{},{}", r.model.name(), r.d, r.n, r.run, r.estimator, vals.join(" "));
        }
        out
    }
}

/// Runs every `(model, n, run)` cell: sample, select `λ` per estimator,
/// refit, map back to covariance scale and score against the truth.
///
/// Cells run in parallel on the current rayon pool and are assembled in cell
/// order, so the output depends only on the configuration. A failing cell is
/// recorded in [`RunRecord::error`] rather than aborting the sweep.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchOutput> {
    cfg.validate()?;
    let truths: Vec<SymMat<f64>> = cfg.models.iter().map(|&m| make_cov(m)).collect::<Result<_>>()?;
    let mut cells = Vec::new();
    for mi in 0..cfg.models.len() {
        for &n in &cfg.n_values {
            for run in 0..cfg.mc_runs {
                cells.push((mi, n, run));
            }
        }
    }
    let runs: Vec<Vec<RunRecord>> = cells
        .par_iter()
        .map(|&(mi, n, run)| {
            let model = cfg.models[mi];
            let seed = derive_seed(cfg.seed, &[mi as u64, n as u64, run as u64]);
            match run_cell(cfg, &truths[mi], model, n, run, seed) {
                Ok(records) => records,
                Err(e) => {
                    log::warn!("{} d={} n={n} run={run} failed: {e}", model.kind.name(), model.d);
                    cfg.estimators.iter().map(|est| RunRecord::failed(model, n, run, est, &e)).collect()
                }
            }
        })
        .collect();
    let runs: Vec<RunRecord> = runs.into_iter().flatten().collect();
    Ok(BenchOutput { rows: aggregate(cfg, &runs), runs })
}

fn run_cell(
    cfg: &BenchConfig,
    truth: &SymMat<f64>,
    model: CovModel,
    n: usize,
    run: usize,
    seed: u64,
) -> Result<Vec<RunRecord>> {
    let samples = sample_gaussian(truth, n, derive_seed(seed, &[0]))?;
    let r = sample_cov(&samples, true);
    let s = cov_to_corr(&r)?;
    let ests: Vec<Estimator<f64>> = cfg.estimators.iter().map(|e| e.build(cfg.adm)).collect::<Result<_>>()?;

    let lambdas: Vec<f64> = match cfg.cv.fixed_lambda {
        Some(l) => vec![l; ests.len()],
        None => {
            let grid = lambda_grid_with_ratio(&s, cfg.cv.grid_points, cfg.cv.min_ratio)?;
            let plan = CvPlan {
                folds: cfg.cv.folds,
                lambda_grid: grid,
                repeats: cfg.cv.repeats,
                seed: derive_seed(seed, &[1]),
            };
            let cv_adm = AdmConfig { tol: cfg.cv.tol, ..cfg.adm };
            let cv_ests: Vec<Estimator<f64>> =
                ests.iter().map(|e| Estimator { adm: cv_adm, ..e.clone() }).collect();
            cross_validate_many(&samples, &cv_ests, &plan)?.iter().map(|c| c.best_lambda).collect()
        }
    };

    let mut cache = SoftCache::new(&s);
    let mut out = Vec::with_capacity(ests.len());
    for ((entry, est), &lambda) in cfg.estimators.iter().zip(&ests).zip(&lambdas) {
        let rec = cache.fit(est, lambda).and_then(|fit| {
            let sigma = corr_to_cov(&fit.estimate, &r)?;
            let eig = eig_sym(&fit.estimate)?;
            let max_diag_dev = fit.estimate.diag().iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
            Ok(RunRecord {
                model: model.kind,
                d: model.d,
                n,
                run,
                estimator: entry.name.clone(),
                solver: entry.solver,
                lambda,
                rel_frob: relative_error(&sigma, truth, Metric::RelFrob)?,
                rel_spec: relative_error(&sigma, truth, Metric::RelSpec)?,
                min_eig: eig.min_value(),
                min_eig_cov: min_eigenvalue(&sigma)?,
                max_diag_dev,
                sparsity: fit.sparsity_offdiag,
                iters: fit.iters,
                converged: fit.converged,
                eigenvalues: eig.values,
                error: None,
            })
        });
        out.push(rec.unwrap_or_else(|e| RunRecord::failed(model, n, run, entry, &e)));
    }
    Ok(out)
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

// Means over successful runs; `pd_rate` counts failed runs as not PD.
fn aggregate(cfg: &BenchConfig, runs: &[RunRecord]) -> Vec<BenchRow> {
    let mut rows = Vec::new();
    for model in &cfg.models {
        for &n in &cfg.n_values {
            for est in &cfg.estimators {
                let cell: Vec<&RunRecord> = runs
                    .iter()
                    .filter(|r| r.model == model.kind && r.d == model.d && r.n == n && r.estimator == est.name)
                    .collect();
                let good: Vec<&RunRecord> = cell.iter().copied().filter(|r| r.ok()).collect();
                let pd_rate = cell.iter().filter(|r| r.is_pd()).count() as f64 / cell.len().max(1) as f64;
                let (mean_sparsity, _) = mean_std(&good.iter().map(|r| r.sparsity).collect::<Vec<_>>());
                let (mean_iters, _) = mean_std(&good.iter().map(|r| r.iters as f64).collect::<Vec<_>>());
                for metric in Metric::ALL {
                    let vals: Vec<f64> = good
                        .iter()
                        .map(|r| match metric {
                            Metric::RelFrob => r.rel_frob,
                            Metric::RelSpec => r.rel_spec,
                        })
                        .collect();
                    let (mean, std) = mean_std(&vals);
                    rows.push(BenchRow {
                        model: model.kind,
                        d: model.d,
                        n,
                        estimator: est.name.clone(),
                        metric,
                        mean,
                        std,
                        pd_rate,
                        mean_sparsity,
                        mean_iters,
                    });
                }
            }
        }
    }
    rows
}

/// How the sampling matrix of a sketch experiment is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    #[default]
    Gaussian,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SketchConfig {
    pub model: CovModel,
    pub n: usize,
    /// Sketch rows; ignored (set to `d`) for the identity sampling matrix.
    pub m: usize,
    pub sampling: Sampling,
    pub mc_runs: usize,
    pub seed: u64,
    pub estimator: EstimatorEntry,
    pub lambda: f64,
    pub adm: AdmConfig<f64>,
}

impl Default for SketchConfig {
    fn default() -> Self {
        SketchConfig {
            model: CovModel { kind: CovKind::Banded, d: 20 },
            n: 2000,
            m: 15,
            sampling: Sampling::Gaussian,
            mc_runs: 5,
            seed: 0,
            estimator: EstimatorEntry::adm(Family::Soft),
            lambda: 0.05,
            adm: AdmConfig::default(),
        }
    }
}

impl SketchConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validated()?;
        if self.n < 2 || self.mc_runs < 1 {
            return Err(Error::InvalidConfig("sketch needs n >= 2 and mc_runs >= 1".into()));
        }
        if self.sampling == Sampling::Gaussian && (self.m == 0 || self.m > self.model.d) {
            return Err(Error::InvalidConfig(format!("sketch rows must satisfy 1 <= m <= d, got {}", self.m)));
        }
        self.estimator.spec(self.lambda)?;
        self.adm.validate()
    }

    /// Sampling matrix of run `run`.
    pub fn sampling_matrix(&self, run: usize) -> Result<Dense<f64>> {
        match self.sampling {
            Sampling::Identity => Ok(Dense::identity(self.model.d)),
            Sampling::Gaussian => {
                gaussian_sampling_matrix(self.m, self.model.d, derive_seed(self.seed, &[run as u64, 0]))
            }
        }
    }

    pub fn samples(&self, truth: &SymMat<f64>, run: usize) -> Result<SampleSet<f64>> {
        sample_gaussian(truth, self.n, derive_seed(self.seed, &[run as u64, 1]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SketchRecord {
    pub run: usize,
    pub m: usize,
    pub noise_energy: f64,
    pub rel_frob: f64,
    pub rel_spec: f64,
    pub min_eig: f64,
    pub sparsity: f64,
    pub iters: usize,
    pub converged: bool,
    pub error: Option<String>,
}

/// Simulated sketching runs: draw data and `A`, form `Y`, solve, score.
pub fn run_sketch_experiment(cfg: &SketchConfig) -> Result<Vec<SketchRecord>> {
    cfg.validate()?;
    let truth = make_cov(cfg.model)?;
    let spec = cfg.estimator.spec(cfg.lambda)?;
    Ok((0..cfg.mc_runs)
        .into_par_iter()
        .map(|run| {
            let res = (|| {
                let a = cfg.sampling_matrix(run)?;
                let model = build_sketch(&cfg.samples(&truth, run)?, &a)?;
                let rep = solve_sketch(&model, &spec, &cfg.adm, None)?;
                Ok::<_, Error>(SketchRecord {
                    run,
                    m: model.m(),
                    noise_energy: noise_energy(&model, &truth)?,
                    rel_frob: relative_error(&rep.theta_hat, &truth, Metric::RelFrob)?,
                    rel_spec: relative_error(&rep.theta_hat, &truth, Metric::RelSpec)?,
                    min_eig: rep.min_eig,
                    sparsity: rep.sparsity_offdiag,
                    iters: rep.iters,
                    converged: rep.converged,
                    error: None,
                })
            })();
            res.unwrap_or_else(|e| SketchRecord {
                run,
                m: cfg.m,
                noise_energy: f64::NAN,
                rel_frob: f64::NAN,
                rel_spec: f64::NAN,
                min_eig: f64::NAN,
                sparsity: f64::NAN,
                iters: 0,
                converged: false,
                error: Some(e.to_string()),
            })
        })
        .collect())
}

pub fn sketch_csv(records: &[SketchRecord]) -> String {
    let mut out = String::from("run,m,noise_energy,rel_frob,rel_spec,min_eig,sparsity,iters,converged,error\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.run,
            r.m,
            r.noise_energy,
            r.rel_frob,
            r.rel_spec,
            r.min_eig,
            r.sparsity,
            r.iters,
            r.converged,
            r.error.as_deref().unwrap_or("").replace([',', '\n'], ";")
        );
    }
    out
}

/// Mean of `‖Y − AΣAᵀ‖²_F` over `reps` independent samples of size `n`.
pub fn mean_noise_energy(truth: &SymMat<f64>, a_mat: &Dense<f64>, n: usize, reps: usize, seed: u64) -> Result<f64> {
    let total = (0..reps)
        .map(|rep| {
            let s = sample_gaussian(truth, n, derive_seed(seed, &[n as u64, rep as u64]))?;
            noise_energy(&build_sketch(&s, a_mat)?, truth)
        })
        .sum::<Result<f64>>()?;
    Ok(total / reps as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_examples() {
        let b: SymMat<f64> = make_cov(CovModel::new(CovKind::Block, 40).unwrap()).unwrap();
        assert_eq!(b.get(3, 3), 1.0);
        assert_eq!(b.get(0, 19), 0.8);
        assert_eq!(b.get(19, 20), 0.0);
        assert_eq!(b.get(25, 39), 0.8);
        let t: SymMat<f64> = make_cov(CovModel::new(CovKind::Toeplitz, 3).unwrap()).unwrap();
        assert_eq!(t.get(0, 1), 0.75);
        assert_eq!(t.get(0, 2), 0.5625);
        let bd: SymMat<f64> = make_cov(CovModel::new(CovKind::Banded, 2).unwrap()).unwrap();
        assert_eq!(bd.get(0, 1), 0.9);
        let wide: SymMat<f64> = make_cov(CovModel::new(CovKind::Banded, 15).unwrap()).unwrap();
        assert_eq!(wide.get(0, 10), 0.0);
        assert!(CovModel::new(CovKind::Block, 30).is_err());
        assert!(CovModel::new(CovKind::Toeplitz, 1).is_err());
    }

    #[test]
    fn models_are_pd() {
        for kind in [CovKind::Block, CovKind::Toeplitz, CovKind::Banded] {
            for d in [20, 40, 100] {
                let m: SymMat<f64> = make_cov(CovModel::new(kind, d).unwrap()).unwrap();
                let lo = min_eigenvalue(&m).unwrap();
                assert!(lo > 0.0, "{kind:?} d={d} min eig {lo}");
                if kind == CovKind::Block {
                    assert!((lo - 0.2).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn gaussian_moments() {
        let s = sample_gaussian(&SymMat::<f64>::identity(2), 100_000, 1).unwrap();
        let c = sample_cov(&s, true);
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((c.get(i, j) - want).abs() < 0.02);
            }
        }
        let s = sample_gaussian(&SymMat::<f64>::from_diag(&[4.0, 1.0]), 100_000, 2).unwrap();
        let c = sample_cov(&s, true);
        assert!((c.get(0, 0) / 4.0 - 1.0).abs() < 0.05);
        assert!((c.get(1, 1) - 1.0).abs() < 0.05);
        let again = sample_gaussian(&SymMat::from_diag(&[4.0, 1.0]), 100_000, 2).unwrap();
        assert_eq!(s, again);
        assert!(matches!(sample_gaussian(&SymMat::from_diag(&[1.0, -1.0]), 5, 0), Err(Error::NotPsd { .. })));
        // singular but PSD is fine
        let ones = SymMat::from_upper(3, |_, _| 1.0);
        assert!(sample_gaussian(&ones, 10, 3).is_ok());
    }

    #[test]
    fn relative_error_examples() {
        let t: SymMat<f64> = make_cov(CovModel::new(CovKind::Toeplitz, 5).unwrap()).unwrap();
        for metric in Metric::ALL {
            assert_eq!(relative_error(&t, &t, metric).unwrap(), 0.0);
            assert!((relative_error(&SymMat::zeros(5), &t, metric).unwrap() - 1.0).abs() < 1e-12);
            assert!((relative_error(&t.scale(2.0), &t, metric).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(matches!(relative_error(&t, &SymMat::zeros(5), Metric::RelFrob), Err(Error::ZeroTruth)));
    }

    #[test]
    fn seeds_are_distinct() {
        let a = derive_seed(7, &[0, 100, 3]);
        assert_ne!(a, derive_seed(7, &[0, 100, 4]));
        assert_ne!(a, derive_seed(8, &[0, 100, 3]));
        assert_ne!(derive_seed(7, &[1, 0]), derive_seed(7, &[0, 1]));
        assert_eq!(a, derive_seed(7, &[0, 100, 3]));
    }

    fn small_cfg() -> BenchConfig {
        BenchConfig {
            models: vec![CovModel { kind: CovKind::Block, d: 20 }],
            n_values: vec![60],
            mc_runs: 2,
            estimators: vec![EstimatorEntry::adm(Family::Soft), EstimatorEntry::threshold(Family::Hard)],
            seed: 3,
            cv: CvSettings { grid_points: 4, ..CvSettings::default() },
            ..BenchConfig::default()
        }
    }

    #[test]
    fn small_benchmark_shape() {
        let cfg = small_cfg();
        let out = run_benchmark(&cfg).unwrap();
        assert_eq!(out.rows.len(), 2 * 2);
        assert_eq!(out.runs.len(), 2 * 2);
        assert!(out.runs.iter().all(|r| r.ok()));
        assert_eq!(out.results_csv().lines().count(), 1 + 4);
        let adm = out.row(CovKind::Block, 60, "soft", Metric::RelFrob).unwrap();
        assert_eq!(adm.pd_rate, 1.0);
        assert_eq!(run_benchmark(&cfg).unwrap(), out);
    }

    #[test]
    fn bad_configs() {
        let mut cfg = small_cfg();
        cfg.mc_runs = 0;
        assert!(run_benchmark(&cfg).is_err());
        let mut cfg = small_cfg();
        cfg.models[0].d = 30;
        assert!(run_benchmark(&cfg).is_err());
        // too few samples for 5 folds: recorded per run, not fatal
        let mut cfg = small_cfg();
        cfg.n_values = vec![6];
        let out = run_benchmark(&cfg).unwrap();
        assert!(out.runs.iter().all(|r| !r.ok()));
        assert_eq!(out.rows[0].pd_rate, 0.0);
    }
}
