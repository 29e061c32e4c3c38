//! Method ablation on the ring dataset.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::{auxiliary_rng, NeuralBackend, NeuralSpec};
use crate::coev::{Counters, Method, TrainConfig};
use crate::error::{Error, Result};
use crate::grid::{GridConfig, NEIGHBORHOOD_SIZE};
use crate::metrics::{audit_report, l2_diversity, AuditReport, Summary};
use crate::mixture::{sample_mixture, MixtureEvolutionConfig};
use crate::neural::generate;
use crate::runtime::{run_grid, ExecutionMode, RunSpec};

/// Stream tag for drawing evaluation samples from the best ensemble; far
/// above the tags the executor uses per cell.
const SAMPLE_TAG: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AblationSpec {
    pub methods: Vec<Method>,
    pub grid_dims: Vec<usize>,
    pub seeds: Vec<u64>,
    pub mode: ExecutionMode,
    pub train: TrainConfig,
    pub mixture: MixtureEvolutionConfig,
    pub neural: NeuralSpec,
}

impl Default for AblationSpec {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            grid_dims: vec![3],
            seeds: (0..5).collect(),
            mode: ExecutionMode::Lockstep,
            train: TrainConfig::default(),
            mixture: MixtureEvolutionConfig::default(),
            neural: NeuralSpec::default(),
        }
    }
}

impl AblationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::config("ablation.methods", "must name at least one method"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("ablation.seeds", "must list at least one seed"));
        }
        if self.grid_dims.is_empty() || self.grid_dims.contains(&0) {
            return Err(Error::config("ablation.grid_dims", "must list positive grid sizes"));
        }
        self.train.validate(NEIGHBORHOOD_SIZE)?;
        self.mixture.validate()?;
        self.neural.validate()
    }
}

/// Metrics of one (method, grid, seed) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRun {
    pub method: Method,
    pub grid_dim: usize,
    pub seed: u64,
    /// Score of the best cell's ensemble.
    pub score: f64,
    /// Mode TVD of samples drawn from the best ensemble.
    pub tvd: f64,
    /// Fraction of those samples that fall near no mode.
    pub low_quality: f64,
    /// Mean pairwise L2 distance between the final center generators.
    pub l2: f64,
    pub counters: Counters,
    pub audit: AuditReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationMetric {
    Score,
    Tvd,
    L2,
}

impl AblationMetric {
    pub const ALL: [AblationMetric; 3] = [Self::Score, Self::Tvd, Self::L2];

    pub fn name(self) -> &'static str {
        match self {
            Self::Score => "score",
            Self::Tvd => "tvd",
            Self::L2 => "l2",
        }
    }

    pub fn of(self, run: &AblationRun) -> f64 {
        match self {
            Self::Score => run.score,
            Self::Tvd => run.tvd,
            Self::L2 => run.l2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub method: Method,
    pub grid_dim: usize,
    pub metric: AblationMetric,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub runs: Vec<AblationRun>,
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    pub fn row(&self, method: Method, grid_dim: usize, metric: AblationMetric) -> Option<&AblationRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.grid_dim == grid_dim && r.metric == metric)
    }

    pub fn audits_passed(&self) -> bool {
        self.runs.iter().all(|r| r.audit.passed())
    }

    /// One block per metric, one line per method and grid size.
    pub fn table(&self) -> String {
        let mut out = String::new();
        for metric in AblationMetric::ALL {
            let _ = writeln!(out, "{}", metric.name());
            let _ = writeln!(
                out,
                "{:<12}{:>6}{:>12}{:>12}{:>12}{:>12}{:>12}{:>12}",
                "method", "grid", "mean", "std", "median", "iqr", "min", "max"
            );
            for r in self.rows.iter().filter(|r| r.metric == metric) {
                let s = r.summary;
                let _ = writeln!(
                    out,
                    "{:<12}{:>6}{:>12.4}{:>12.4}{:>12.4}{:>12.4}{:>12.4}{:>12.4}",
                    r.method.name(),
                    format!("{0}x{0}", r.grid_dim),
                    s.mean,
                    s.std,
                    s.median,
                    s.iqr,
                    s.min,
                    s.max
                );
            }
            out.push('\n');
        }
        out
    }

    /// Rows of `method,grid_dim,seed,score,tvd,low_quality,l2` plus counters.
    pub fn runs_csv(&self) -> String {
        let mut out = String::from(
            "method,grid_dim,seed,score,tvd,low_quality,l2,pairwise_evaluations,gradient_updates,migrations,selections,audit\n",
        );
        for r in &self.runs {
            let c = r.counters.as_array();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.method.name(),
                r.grid_dim,
                r.seed,
                r.score,
                r.tvd,
                r.low_quality,
                r.l2,
                c[0],
                c[1],
                c[2],
                c[3],
                if r.audit.passed() { "ok" } else { "mismatch" }
            );
        }
        out
    }
}

/// Trains one grid and measures it.
pub fn ablation_run(backend: &NeuralBackend, spec: &AblationSpec, method: Method, grid_dim: usize, seed: u64) -> Result<AblationRun> {
    let grid = GridConfig::new(grid_dim)?;
    let run = RunSpec {
        grid,
        method,
        train: spec.train.clone(),
        mixture: spec.mixture.clone(),
        mode: spec.mode,
        seed,
    };
    let result = run_grid(backend, &run)?;
    let best = &result.best().ensemble;

    let mut rng = auxiliary_rng(seed, SAMPLE_TAG);
    let n = backend.eval_samples;
    let picks = sample_mixture(&best.weights, n, &mut rng);
    let latent = backend.sample_latent(n, &mut rng);
    let mut points = Vec::with_capacity(n);
    for (k, z) in picks.iter().zip(latent) {
        points.extend(generate(&best.generators[*k], &[z])?);
    }
    let hist = backend.mode_assigner().histogram(&points);

    let centers: Vec<Vec<f64>> = result.cells.iter().map(|c| c.center_generator.params.flatten()).collect();
    let l2 = l2_diversity(&centers)?.summary.map_or(0.0, |s| s.mean);

    let audit = audit_report(
        &result.counters,
        method,
        &grid,
        spec.train.epochs as u64,
        spec.train.batches_per_epoch as u64,
    );

    Ok(AblationRun {
        method,
        grid_dim,
        seed,
        score: best.score,
        tvd: hist.tvd(),
        low_quality: hist.low_quality_fraction(),
        l2,
        counters: result.counters,
        audit,
    })
}

/// Runs every method x grid size x seed combination and summarizes each
/// metric over seeds.
pub fn run_ablation(spec: &AblationSpec) -> Result<AblationReport> {
    spec.validate()?;
    let backend = spec.neural.build()?;
    let mut jobs = Vec::new();
    for &method in &spec.methods {
        for &g in &spec.grid_dims {
            for &seed in &spec.seeds {
                jobs.push((method, g, seed));
            }
        }
    }
    let runs = jobs
        .par_iter()
        .map(|&(m, g, seed)| ablation_run(&backend, spec, m, g, seed))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for &method in &spec.methods {
        for &g in &spec.grid_dims {
            for metric in AblationMetric::ALL {
                let xs: Vec<f64> = runs
                    .iter()
                    .filter(|r| r.method == method && r.grid_dim == g)
                    .map(|r| metric.of(r))
                    .collect();
                rows.push(AblationRow {
                    method,
                    grid_dim: g,
                    metric,
                    summary: Summary::of(&xs)?,
                });
            }
        }
    }
    Ok(AblationReport { runs, rows })
}
