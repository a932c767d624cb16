//! Map-phase latency models.
//!
//! Each server's time to finish all of its Map products is an i.i.d. draw
//! `S_k`. The default model is the shifted exponential with scale `μN`,
//! `F(t) = 1 - exp(-(t/μN - 1))` for `t >= μN`, whose `q`-th order statistic
//! has mean `μN (1 + Σ_{j=K-q+1}^{K} 1/j)`.

use std::path::Path;

use num::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{self, Rational};
use crate::subset::ServerSet;

#[derive(Debug, Error)]
pub enum LatencyError {
    #[error("q = {q} must satisfy 1 <= q <= K = {servers}")]
    WaitOutOfRange { q: usize, servers: usize },
    #[error("latency table has no g(K={servers}, q={q}) entry")]
    MissingEntry { servers: usize, q: usize },
    #[error("the scale muN must be positive")]
    NonPositiveScale,
    #[error("table models describe only expected order statistics and cannot be sampled")]
    UnsupportedSampling,
    #[error("cannot parse latency spec {0:?}; expected shifted-exp:muN=<v> or table:<file.json>")]
    BadSpec(String),
    #[error("latency table {path}: {reason}")]
    BadTable { path: String, reason: String },
}

/// Distribution of the per-server Map time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LatencyModel {
    ShiftedExponential {
        #[serde(rename = "muN", with = "rational::as_string")]
        scale: Rational,
    },
    /// `E{S_(q)} = μN · g(K, q)` with `g` supplied as a table.
    Table {
        #[serde(rename = "muN", with = "rational::as_string")]
        scale: Rational,
        g: Vec<OrderFactor>,
    },
}

/// One `g(K, q)` entry of a table model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderFactor {
    #[serde(rename = "K")]
    pub servers: usize,
    #[serde(rename = "q")]
    pub wait_for: usize,
    #[serde(with = "rational::as_string")]
    pub g: Rational,
}

impl LatencyModel {
    pub fn shifted_exponential(scale: Rational) -> Result<Self, LatencyError> {
        if !scale.is_positive() {
            return Err(LatencyError::NonPositiveScale);
        }
        Ok(LatencyModel::ShiftedExponential { scale })
    }

    pub fn scale(&self) -> &Rational {
        match self {
            LatencyModel::ShiftedExponential { scale } | LatencyModel::Table { scale, .. } => scale,
        }
    }

    /// Parses `shifted-exp:muN=<v>` or `table:<file.json>`.
    pub fn parse_spec(spec: &str) -> Result<Self, LatencyError> {
        if let Some(rest) = spec.strip_prefix("shifted-exp:") {
            let value = rest
                .strip_prefix("muN=")
                .ok_or_else(|| LatencyError::BadSpec(spec.into()))?;
            let scale = rational::parse(value).map_err(|_| LatencyError::BadSpec(spec.into()))?;
            return Self::shifted_exponential(scale);
        }
        if let Some(path) = spec.strip_prefix("table:") {
            return Self::load_table(Path::new(path));
        }
        Err(LatencyError::BadSpec(spec.into()))
    }

    /// Reads `{"muN": "2", "g": [{"K": 4, "q": 2, "g": "19/12"}, ..]}`.
    pub fn load_table(path: &Path) -> Result<Self, LatencyError> {
        let bad = |reason: String| LatencyError::BadTable {
            path: path.display().to_string(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
        let file: TableFile = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        if !file.scale.is_positive() {
            return Err(LatencyError::NonPositiveScale);
        }
        Ok(LatencyModel::Table {
            scale: file.scale,
            g: file.g,
        })
    }

    /// `g(K, q)`, so that `E{S_(q)} = μN · g(K, q)`.
    pub fn order_factor(&self, servers: usize, q: usize) -> Result<Rational, LatencyError> {
        if q == 0 || q > servers {
            return Err(LatencyError::WaitOutOfRange { q, servers });
        }
        match self {
            LatencyModel::ShiftedExponential { .. } => {
                let mut g = rational::int(1);
                for j in servers - q + 1..=servers {
                    g += rational::ratio(1, j as i64);
                }
                Ok(g)
            }
            LatencyModel::Table { g, .. } => g
                .iter()
                .find(|e| e.servers == servers && e.wait_for == q)
                .map(|e| e.g.clone())
                .ok_or(LatencyError::MissingEntry { servers, q }),
        }
    }
}

#[derive(Deserialize)]
struct TableFile {
    #[serde(rename = "muN", with = "rational::as_string")]
    scale: Rational,
    g: Vec<OrderFactor>,
}

/// `D(q) = E{S_(q)}`, exact.
pub fn expected_order_statistic(
    model: &LatencyModel,
    servers: usize,
    q: usize,
) -> Result<Rational, LatencyError> {
    Ok(model.scale() * model.order_factor(servers, q)?)
}

/// Generator for trial `trial` under `seed`: ChaCha8 keyed by the seed, with
/// the trial index selecting the stream. Draws are identical on every
/// platform and independent of scheduling.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// `K` i.i.d. Map times from stream 0 of `seed`.
pub fn sample_latencies(
    model: &LatencyModel,
    servers: usize,
    seed: u64,
) -> Result<Vec<f64>, LatencyError> {
    sample_latencies_with(model, servers, &mut trial_rng(seed, 0))
}

/// Inverse-CDF sampling: `t = μN (1 - ln(1 - u))`.
pub fn sample_latencies_with<R: Rng + ?Sized>(
    model: &LatencyModel,
    servers: usize,
    rng: &mut R,
) -> Result<Vec<f64>, LatencyError> {
    match model {
        LatencyModel::ShiftedExponential { scale } => {
            let scale = rational::to_f64(scale);
            Ok((0..servers)
                .map(|_| {
                    let u: f64 = rng.gen();
                    scale * (1.0 - (-u).ln_1p())
                })
                .collect())
        }
        LatencyModel::Table { .. } => Err(LatencyError::UnsupportedSampling),
    }
}

/// The `q` servers with the smallest latencies (ties go to the lower id) and
/// the `q`-th smallest latency.
pub fn select_fastest(latencies: &[f64], q: usize) -> Result<(ServerSet, f64), LatencyError> {
    let servers = latencies.len();
    if q == 0 || q > servers {
        return Err(LatencyError::WaitOutOfRange { q, servers });
    }
    let mut order: Vec<usize> = (0..servers).collect();
    order.sort_by(|&a, &b| latencies[a].total_cmp(&latencies[b]).then(a.cmp(&b)));
    let chosen: ServerSet = order[..q].iter().copied().collect();
    Ok((chosen, latencies[order[q - 1]]))
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Mean of the `q`-th order statistic over `trials` seeded draws.
pub fn empirical_order_statistic(
    model: &LatencyModel,
    servers: usize,
    q: usize,
    trials: u64,
    seed: u64,
) -> Result<f64, LatencyError> {
    use rayon::prelude::*;
    let draws: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let lat = sample_latencies_with(model, servers, &mut trial_rng(seed, t))?;
            Ok(select_fastest(&lat, q)?.1)
        })
        .collect::<Result<_, LatencyError>>()?;
    let sum: CompensatedSum = draws.into_iter().collect();
    Ok(sum.value() / trials as f64)
}
