//! Class balance, genome diversity, success predicates and interaction audits.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::coev::{Counters, Method};
use crate::error::{Error, Result};
use crate::grid::{GridConfig, NEIGHBORHOOD_SIZE};
use crate::neural::Point;
use crate::toy::{generator_distance, GaussianPair};

/// Observed class counts next to the proportions a perfect sampler would hit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution {
    counts: Vec<u64>,
    ideal: Vec<f64>,
}

impl ClassDistribution {
    pub fn new(counts: Vec<u64>, ideal: Vec<f64>) -> Result<Self> {
        if counts.len() != ideal.len() || counts.is_empty() {
            return Err(Error::domain(format!(
                "{} counts against {} ideal proportions",
                counts.len(),
                ideal.len()
            )));
        }
        let sum: f64 = ideal.iter().sum();
        if ideal.iter().any(|q| !(*q >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::domain("ideal proportions must be non-negative and sum to 1"));
        }
        Ok(Self { counts, ideal })
    }

    pub fn uniform(counts: Vec<u64>) -> Result<Self> {
        let k = counts.len();
        Self::new(counts, vec![1.0 / k as f64; k])
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn ideal(&self) -> &[f64] {
        &self.ideal
    }
}

/// Total variation distance `0.5 * sum |p_i - q_i|`, summed as the excess
/// `sum max(p_i - q_i, 0)` so that single-class samples come out exact.
pub fn tvd(dist: &ClassDistribution) -> Result<f64> {
    let total: u64 = dist.counts.iter().sum();
    if total == 0 {
        return Err(Error::domain("total variation distance of an empty sample"));
    }
    let n = total as f64;
    Ok(dist
        .counts
        .iter()
        .zip(&dist.ideal)
        .map(|(&c, q)| (c as f64 / n - q).max(0.0))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub iqr: f64,
    pub min: f64,
    pub max: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    // Linear interpolation between closest ranks.
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl Summary {
    pub fn of(xs: &[f64]) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::domain("summary of an empty sample"));
        }
        let mut s = xs.to_vec();
        s.sort_by(f64::total_cmp);
        let n = s.len() as f64;
        let mean = s.iter().sum::<f64>() / n;
        let std = if s.len() > 1 {
            (s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            mean,
            std,
            median: quantile(&s, 0.5),
            iqr: quantile(&s, 0.75) - quantile(&s, 0.25),
            min: s[0],
            max: s[s.len() - 1],
        })
    }
}

/// Symmetric matrix of pairwise Euclidean distances, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityMatrix {
    pub size: usize,
    pub distances: Vec<f64>,
}

impl DiversityMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.distances[i * self.size + j]
    }

    /// Entries strictly above the diagonal.
    pub fn pairs(&self) -> Vec<f64> {
        let n = self.size;
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| self.get(i, j)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diversity {
    pub matrix: DiversityMatrix,
    /// Statistics over distinct pairs. `None` with fewer than two vectors.
    pub summary: Option<Summary>,
}

pub fn l2_diversity(params: &[Vec<f64>]) -> Result<Diversity> {
    let n = params.len();
    if let Some(first) = params.first() {
        if params.iter().any(|p| p.len() != first.len()) {
            return Err(Error::domain("parameter vectors differ in length"));
        }
    }
    let mut distances = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = params[i]
                .iter()
                .zip(&params[j])
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            distances[i * n + j] = d;
            distances[j * n + i] = d;
        }
    }
    let matrix = DiversityMatrix { size: n, distances };
    let pairs = matrix.pairs();
    let summary = if pairs.is_empty() {
        None
    } else {
        Some(Summary::of(&pairs)?)
    };
    Ok(Diversity { matrix, summary })
}

/// Fraction of runs whose generator lies strictly closer than `threshold`.
pub fn success_rate<G: GaussianPair, T: GaussianPair>(runs: &[G], target: &T, threshold: f64) -> Result<f64> {
    if runs.is_empty() {
        return Err(Error::domain("success rate of zero runs"));
    }
    if !(threshold > 0.0) {
        return Err(Error::domain("threshold must be positive"));
    }
    let hits = runs
        .iter()
        .filter(|g| generator_distance(*g, target) < threshold)
        .count();
    Ok(hits as f64 / runs.len() as f64)
}

/// Assigns samples to the nearest ring mode, rejecting those farther than
/// three standard deviations from every center.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeAssigner {
    pub centers: Vec<Point>,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeHistogram {
    pub counts: Vec<u64>,
    pub rejected: u64,
}

impl ModeHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.rejected
    }

    pub fn low_quality_fraction(&self) -> f64 {
        let t = self.total();
        if t == 0 {
            0.0
        } else {
            self.rejected as f64 / t as f64
        }
    }

    /// TVD of accepted samples against uniform mode proportions, 1 when
    /// nothing was accepted.
    pub fn tvd(&self) -> f64 {
        ClassDistribution::uniform(self.counts.clone())
            .and_then(|d| tvd(&d))
            .unwrap_or(1.0)
    }
}

impl ModeAssigner {
    pub fn assign(&self, p: Point) -> Option<usize> {
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for (k, c) in self.centers.iter().enumerate() {
            let d = ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt();
            if d < best_d {
                best_d = d;
                best = Some(k);
            }
        }
        best.filter(|_| best_d <= 3.0 * self.std)
    }

    pub fn histogram(&self, points: &[Point]) -> ModeHistogram {
        let mut counts = vec![0; self.centers.len()];
        let mut rejected = 0;
        for p in points {
            match self.assign(*p) {
                Some(k) => counts[k] += 1,
                None => rejected += 1,
            }
        }
        ModeHistogram { counts, rejected }
    }
}

/// Counter totals implied by a method's structure.
pub fn expected_counters(method: Method, grid: &GridConfig, epochs: u64, batches: u64) -> Counters {
    let n = grid.population_size() as u64;
    let s = NEIGHBORHOOD_SIZE as u64;
    let inbound = (NEIGHBORHOOD_SIZE - 1) as u64;
    match method {
        Method::Lipizzaner => Counters {
            pairwise_evaluations: 2 * s * s * n * epochs,
            gradient_updates: 2 * s * batches * n * epochs,
            migrations: inbound * n * epochs,
            selections: 2 * s * n * epochs,
        },
        Method::Spagan => Counters {
            pairwise_evaluations: 0,
            gradient_updates: 2 * batches * n * epochs,
            migrations: inbound * n * epochs,
            selections: 0,
        },
        Method::IsoCogan => Counters {
            pairwise_evaluations: 2 * s * s * n * epochs,
            gradient_updates: 2 * s * batches * n * epochs,
            migrations: inbound * n,
            selections: 2 * s * n * epochs,
        },
        Method::Pagan => Counters {
            pairwise_evaluations: 0,
            gradient_updates: 2 * batches * n * epochs,
            migrations: 0,
            selections: 0,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditLine {
    pub counter: String,
    pub formula: String,
    pub expected: u64,
    pub recorded: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub method: Method,
    pub lines: Vec<AuditLine>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.expected == l.recorded)
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.lines {
            let status = if l.expected == l.recorded { "ok" } else { "MISMATCH" };
            writeln!(
                f,
                "{} {}: expected {} = {}, recorded {} (delta {}) {status}",
                self.method,
                l.counter,
                l.formula,
                l.expected,
                l.recorded,
                l.recorded as i128 - l.expected as i128
            )?;
        }
        Ok(())
    }
}

fn formulas(method: Method) -> [&'static str; 4] {
    match method {
        Method::Lipizzaner => ["2*s^2*N*T", "2*s*B*N*T", "4*N*T", "2*s*N*T"],
        Method::Spagan => ["0", "2*B*N*T", "4*N*T", "0"],
        Method::IsoCogan => ["2*s^2*N*T", "2*s*B*N*T", "4*N", "2*s*N*T"],
        Method::Pagan => ["0", "2*B*N*T", "0", "0"],
    }
}

/// Line-by-line comparison of recorded counters with [`expected_counters`].
pub fn audit_report(recorded: &Counters, method: Method, grid: &GridConfig, epochs: u64, batches: u64) -> AuditReport {
    let expected = expected_counters(method, grid, epochs, batches);
    let names = ["pairwise_evaluations", "gradient_updates", "migrations", "selections"];
    let lines = names
        .iter()
        .zip(formulas(method))
        .zip(expected.as_array().into_iter().zip(recorded.as_array()))
        .map(|((name, formula), (e, r))| AuditLine {
            counter: name.to_string(),
            formula: formula.to_string(),
            expected: e,
            recorded: r,
        })
        .collect();
    AuditReport { method, lines }
}

/// [`audit_report`] that turns any mismatch into an [`Error::Audit`].
pub fn audit_interactions(
    recorded: &Counters,
    method: Method,
    grid: &GridConfig,
    epochs: u64,
    batches: u64,
) -> Result<AuditReport> {
    let report = audit_report(recorded, method, grid, epochs, batches);
    if report.passed() {
        Ok(report)
    } else {
        Err(Error::Audit(report.to_string()))
    }
}
