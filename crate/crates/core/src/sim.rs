//! End-to-end runs: sample Map times, pick the fastest `q` servers, shuffle,
//! decode every output and compare it with `A x_j` computed directly.
//!
//! Trial `t` draws from stream `t` of the seed, in a fixed order: the `K`
//! latencies, then `A` (unless supplied), then `X`. Trials are independent
//! and run on the rayon pool; results are collected in trial order.

use std::collections::BTreeMap;
use std::path::Path;

use num::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{self, AnalysisError};
use crate::codec::{
    build_random_plan, build_storage_plan, reduce_decode_many, CodecError, SchemeParams,
    StoragePlan,
};
use crate::gf::FieldMatrix;
use crate::rational::{self, Rational};
use crate::shuffle::{
    assign_reduce_tasks, available_values, measure_load, shuffle, MapResults, ShuffleError,
    ShuffleTranscript,
};
use crate::stragglers::{
    expected_order_statistic, sample_latencies_with, select_fastest, trial_rng, CompensatedSum,
    LatencyError, LatencyModel,
};
use crate::subset::ServerSet;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Latency(#[from] LatencyError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("trial {trial}: shuffle failed: {source}")]
    Shuffle { trial: u64, source: ShuffleError },
    #[error("trial {trial}: server {server} cannot decode output {output}: {source}")]
    Decode {
        trial: u64,
        server: usize,
        output: usize,
        source: CodecError,
    },
    #[error("A must be {expected:?} with entries in GF(2^{width}), got {got:?}")]
    MatrixShape {
        expected: (usize, usize),
        got: (usize, usize),
        width: u32,
    },
    #[error("forced finishing set {set} must contain {q} servers below K = {servers}")]
    ForcedFinishers {
        set: ServerSet,
        q: usize,
        servers: usize,
    },
    #[error("at least one trial is required")]
    NoTrials,
    #[error("cannot read matrix file: {0}")]
    MatrixFile(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    Single,
    MonteCarlo,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub params: SchemeParams,
    pub model: LatencyModel,
    pub seed: u64,
    pub trials: u64,
    pub mode: SimMode,
    /// Run the full pipeline and check outputs in every trial, not only the
    /// first.
    pub verify: bool,
    /// Fixed `A`; drawn per trial when absent.
    pub matrix: Option<FieldMatrix>,
    /// Use a random generator with this seed instead of Vandermonde.
    pub random_mds: Option<u64>,
    /// Use this `Q` instead of the fastest servers.
    pub forced_finishers: Option<ServerSet>,
}

impl SimConfig {
    /// Single verified run with the shifted-exponential model of scale `μN`.
    pub fn new(params: SchemeParams, seed: u64) -> Result<Self, SimError> {
        let scale = &params.storage * rational::int(params.outputs as i64);
        Ok(SimConfig {
            model: LatencyModel::shifted_exponential(scale)?,
            params,
            seed,
            trials: 1,
            mode: SimMode::Single,
            verify: true,
            matrix: None,
            random_mds: None,
            forced_finishers: None,
        })
    }

    pub fn monte_carlo(mut self, trials: u64) -> Self {
        self.mode = SimMode::MonteCarlo;
        self.trials = trials;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub index: u64,
    pub finishers: ServerSet,
    pub makespan: f64,
    /// Present when the shuffle ran in this trial.
    #[serde(with = "rational::as_opt_string")]
    pub load: Option<Rational>,
    pub correct: Option<bool>,
    pub padded_symbols: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub params: SchemeParams,
    pub seed: u64,
    pub trials: Vec<TrialRecord>,
    pub mean_latency: f64,
    #[serde(with = "rational::as_opt_string")]
    pub mean_load: Option<Rational>,
    #[serde(rename = "analytic_D", with = "rational::as_string")]
    pub analytic_latency: Rational,
    #[serde(rename = "analytic_L", with = "rational::as_string")]
    pub analytic_load: Rational,
    pub latency_relative_error: f64,
    pub load_relative_error: Option<f64>,
    /// `None` when no trial decoded.
    pub all_correct: Option<bool>,
}

impl SimReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Loads of the trials that ran the shuffle, in trial order.
    pub fn loads(&self) -> impl Iterator<Item = &Rational> {
        self.trials.iter().filter_map(|t| t.load.as_ref())
    }
}

#[derive(Deserialize)]
struct MatrixFile {
    rows: usize,
    cols: usize,
    entries: Vec<u16>,
}

/// Reads `{"rows": m, "cols": n, "entries": [..]}` (row-major).
pub fn load_matrix(path: &Path) -> Result<FieldMatrix, SimError> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::MatrixFile(e.to_string()))?;
    let file: MatrixFile =
        serde_json::from_str(&text).map_err(|e| SimError::MatrixFile(e.to_string()))?;
    FieldMatrix::from_values(file.rows, file.cols, &file.entries)
        .map_err(|e| SimError::MatrixFile(e.to_string()))
}

struct Prepared {
    plan: StoragePlan,
    analytic_latency: Rational,
    analytic_load: Rational,
}

fn prepare(config: &SimConfig) -> Result<Prepared, SimError> {
    if config.trials == 0 {
        return Err(SimError::NoTrials);
    }
    let p = &config.params;
    let plan = match config.random_mds {
        Some(seed) => build_random_plan(p, seed)?,
        None => build_storage_plan(p)?,
    };
    if let Some(a) = &config.matrix {
        if a.shape() != (p.rows, p.cols) || !a.fits(plan.field()) {
            return Err(SimError::MatrixShape {
                expected: (p.rows, p.cols),
                got: a.shape(),
                width: p.field_width,
            });
        }
    }
    if let Some(set) = config.forced_finishers {
        if set.len() != p.wait_for || set.iter().any(|k| k >= p.servers) {
            return Err(SimError::ForcedFinishers {
                set,
                q: p.wait_for,
                servers: p.servers,
            });
        }
    }
    Ok(Prepared {
        analytic_latency: expected_order_statistic(&config.model, p.servers, p.wait_for)?,
        analytic_load: analysis::achievable_load(p.servers, p.wait_for, &p.storage, p.outputs)?,
        plan,
    })
}

fn run_trial(
    config: &SimConfig,
    plan: &StoragePlan,
    trial: u64,
    full: bool,
) -> Result<(TrialRecord, Option<ShuffleTranscript>), SimError> {
    let p = &config.params;
    let mut rng = trial_rng(config.seed, trial);
    let latencies = sample_latencies_with(&config.model, p.servers, &mut rng)?;
    let (finishers, makespan) = match config.forced_finishers {
        Some(set) => (
            set,
            set.iter().map(|k| latencies[k]).fold(f64::MIN, f64::max),
        ),
        None => select_fastest(&latencies, p.wait_for)?,
    };
    if !full {
        let record = TrialRecord {
            index: trial,
            finishers,
            makespan,
            load: None,
            correct: None,
            padded_symbols: None,
        };
        return Ok((record, None));
    }
    let field = plan.field();
    let a = match &config.matrix {
        Some(a) => a.clone(),
        None => field.random_matrix(p.rows, p.cols, &mut rng),
    };
    let x = field.random_matrix(p.cols, p.outputs, &mut rng);
    let shuffle_err = |source| SimError::Shuffle { trial, source };
    let map =
        MapResults::compute(plan, &a, &x, ServerSet::first(p.servers)).map_err(shuffle_err)?;
    let assignment = assign_reduce_tasks(finishers, p.outputs).map_err(shuffle_err)?;
    let transcript = shuffle(plan, &assignment, &map).map_err(shuffle_err)?;
    let expected = field.mat_mul(&a, &x).map_err(CodecError::from)?;
    let mut correct = true;
    for k in finishers.iter() {
        correct &= decode_server(
            plan,
            &map,
            &transcript,
            k,
            assignment.outputs_of(k),
            &expected,
            trial,
        )?;
    }
    let record = TrialRecord {
        index: trial,
        finishers,
        makespan,
        load: Some(measure_load(&transcript)),
        correct: Some(correct),
        padded_symbols: Some(transcript.padded_symbols()),
    };
    Ok((record, Some(transcript)))
}

/// Decodes the outputs of server `k`, solving once per distinct row set.
fn decode_server(
    plan: &StoragePlan,
    map: &MapResults,
    transcript: &ShuffleTranscript,
    k: usize,
    outputs: &[usize],
    expected: &FieldMatrix,
    trial: u64,
) -> Result<bool, SimError> {
    let mut groups: BTreeMap<Vec<usize>, Vec<(usize, Vec<_>)>> = BTreeMap::new();
    for &o in outputs {
        let mut values = available_values(map, transcript, k, o);
        values.sort_unstable_by_key(|&(row, _)| row);
        let rows = values.iter().map(|&(row, _)| row).collect();
        groups
            .entry(rows)
            .or_default()
            .push((o, values.into_iter().map(|(_, v)| v).collect()));
    }
    let mut correct = true;
    for (rows, members) in groups {
        let mut rhs = FieldMatrix::zeros(rows.len(), members.len());
        for (c, (_, values)) in members.iter().enumerate() {
            for (r, &v) in values.iter().enumerate() {
                rhs[(r, c)] = v;
            }
        }
        let y = reduce_decode_many(plan, &rows, &rhs).map_err(|source| SimError::Decode {
            trial,
            server: k,
            output: members[0].0,
            source,
        })?;
        for (c, &(o, _)) in members.iter().enumerate() {
            correct &= y.column_vec(c) == expected.column_vec(o);
        }
    }
    Ok(correct)
}

fn relative_error(measured: f64, exact: &Rational) -> f64 {
    let exact = rational::to_f64(exact);
    if exact == 0.0 {
        measured.abs()
    } else {
        ((measured - exact) / exact).abs()
    }
}

fn summarize(config: &SimConfig, prepared: &Prepared, trials: Vec<TrialRecord>) -> SimReport {
    let latency: CompensatedSum = trials.iter().map(|t| t.makespan).collect();
    let mean_latency = latency.value() / trials.len() as f64;
    let loads: Vec<&Rational> = trials.iter().filter_map(|t| t.load.as_ref()).collect();
    let mean_load = (!loads.is_empty()).then(|| {
        loads.iter().fold(Rational::zero(), |acc, l| acc + *l) / rational::int(loads.len() as i64)
    });
    let load_relative_error = mean_load.as_ref().map(|l| {
        if prepared.analytic_load.is_zero() {
            rational::to_f64(&l.abs())
        } else {
            rational::to_f64(&((l - &prepared.analytic_load) / &prepared.analytic_load).abs())
        }
    });
    let flags: Vec<bool> = trials.iter().filter_map(|t| t.correct).collect();
    SimReport {
        params: config.params.clone(),
        seed: config.seed,
        latency_relative_error: relative_error(mean_latency, &prepared.analytic_latency),
        mean_latency,
        mean_load,
        analytic_latency: prepared.analytic_latency.clone(),
        analytic_load: prepared.analytic_load.clone(),
        load_relative_error,
        all_correct: (!flags.is_empty()).then(|| flags.iter().all(|&c| c)),
        trials,
    }
}

/// Trial 0 with the full pipeline.
pub fn run_single(config: &SimConfig) -> Result<SimReport, SimError> {
    run_single_with_transcript(config).map(|(report, _)| report)
}

/// [`run_single`] also returning the shuffle transcript.
pub fn run_single_with_transcript(
    config: &SimConfig,
) -> Result<(SimReport, ShuffleTranscript), SimError> {
    let prepared = prepare(config)?;
    let (record, transcript) = run_trial(config, &prepared.plan, 0, true)?;
    let report = summarize(config, &prepared, vec![record]);
    Ok((report, transcript.expect("full trial has a transcript")))
}

/// `trials` trials. Trial 0 always runs the full pipeline; the others do
/// too when `verify` is set and otherwise only sample latencies.
pub fn run_monte_carlo(config: &SimConfig) -> Result<SimReport, SimError> {
    run_monte_carlo_with_transcript(config).map(|(report, _)| report)
}

pub fn run_monte_carlo_with_transcript(
    config: &SimConfig,
) -> Result<(SimReport, ShuffleTranscript), SimError> {
    let prepared = prepare(config)?;
    let results: Vec<(TrialRecord, Option<ShuffleTranscript>)> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let (record, transcript) =
                run_trial(config, &prepared.plan, t, t == 0 || config.verify)?;
            Ok((record, if t == 0 { transcript } else { None }))
        })
        .collect::<Result<_, SimError>>()?;
    let mut first = None;
    let records = results
        .into_iter()
        .map(|(record, transcript)| {
            if transcript.is_some() {
                first = transcript;
            }
            record
        })
        .collect();
    let report = summarize(config, &prepared, records);
    Ok((report, first.expect("trial 0 has a transcript")))
}

/// Dispatches on `config.mode`.
pub fn run(config: &SimConfig) -> Result<(SimReport, ShuffleTranscript), SimError> {
    match config.mode {
        SimMode::Single => run_single_with_transcript(config),
        SimMode::MonteCarlo => run_monte_carlo_with_transcript(config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::GaloisField;
    use crate::rational::{int, ratio};

    #[test]
    fn worked_example_is_exact() {
        let params = SchemeParams::new(6, 4, ratio(1, 2), 20, 4, 12);
        let report = run_single(&SimConfig::new(params, 7).unwrap()).unwrap();
        assert_eq!(report.mean_load, Some(ratio(21, 5)));
        assert_eq!(report.all_correct, Some(true));
        assert_eq!(report.analytic_load, ratio(21, 5));
        // 6 (1 + 1/3 + 1/4 + 1/5 + 1/6)
        assert_eq!(report.analytic_latency, ratio(117, 10));
    }

    #[test]
    fn full_replication_has_no_load() {
        let params = SchemeParams::new(3, 3, int(1), 4, 2, 3);
        let report = run_single(&SimConfig::new(params, 1).unwrap()).unwrap();
        assert_eq!(report.mean_load, Some(Rational::zero()));
        assert_eq!(report.all_correct, Some(true));
    }

    #[test]
    fn single_equals_one_trial_monte_carlo() {
        let params = SchemeParams::new(4, 2, ratio(1, 2), 12, 4, 4);
        let cfg = SimConfig::new(params, 11).unwrap();
        let single = run_single(&cfg).unwrap();
        let mc = run_monte_carlo(&cfg.clone().monte_carlo(1)).unwrap();
        assert_eq!(single, mc);
    }

    #[test]
    fn deterministic_and_load_invariant() {
        let params = SchemeParams::new(6, 4, ratio(1, 2), 20, 4, 12);
        let mut cfg = SimConfig::new(params, 3).unwrap().monte_carlo(6);
        cfg.verify = true;
        let a = run_monte_carlo(&cfg).unwrap();
        let b = run_monte_carlo(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.loads().all(|l| *l == ratio(21, 5)));
        assert_eq!(a.all_correct, Some(true));
        let distinct: std::collections::BTreeSet<_> =
            a.trials.iter().map(|t| t.finishers).collect();
        assert!(distinct.len() > 1);
    }

    #[test]
    fn forced_finishers_and_supplied_matrix() {
        let params = SchemeParams::new(4, 2, ratio(1, 2), 12, 4, 4);
        let mut cfg = SimConfig::new(params.clone(), 5).unwrap();
        cfg.forced_finishers = Some([0, 3].into_iter().collect());
        let field = GaloisField::new(16).unwrap();
        cfg.matrix = Some(field.random_matrix(12, 4, &mut trial_rng(99, 0)));
        let report = run_single(&cfg).unwrap();
        assert_eq!(report.trials[0].finishers, [0, 3].into_iter().collect());
        assert_eq!(report.mean_load, Some(int(2)));
        cfg.matrix = Some(FieldMatrix::zeros(3, 3));
        assert!(matches!(
            run_single(&cfg),
            Err(SimError::MatrixShape { .. })
        ));
        cfg.matrix = None;
        cfg.forced_finishers = Some(ServerSet::first(3));
        assert!(matches!(
            run_single(&cfg),
            Err(SimError::ForcedFinishers { .. })
        ));
    }

    #[test]
    fn random_generator_runs() {
        let params = SchemeParams::new(4, 4, ratio(1, 2), 12, 4, 4);
        let mut cfg = SimConfig::new(params, 2).unwrap();
        cfg.random_mds = Some(4);
        let report = run_single(&cfg).unwrap();
        assert_eq!(report.mean_load, Some(int(1)));
        assert_eq!(report.all_correct, Some(true));
    }

    #[test]
    fn latency_only_trials() {
        let params = SchemeParams::new(4, 2, ratio(1, 2), 12, 4, 4);
        let mut cfg = SimConfig::new(params, 8).unwrap().monte_carlo(2000);
        cfg.verify = false;
        let report = run_monte_carlo(&cfg).unwrap();
        assert_eq!(report.loads().count(), 1);
        assert!(report.latency_relative_error < 0.05);
        assert!(matches!(
            run_monte_carlo(&cfg.clone().monte_carlo(0)),
            Err(SimError::NoTrials)
        ));
    }
}
