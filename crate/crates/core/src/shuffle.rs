//! Coded shuffle over the finishing set `Q`.
//!
//! `V_S^k` holds the scalars `c_i · x_j` that server `k` needs (`j ∈ W_k`)
//! and that are stored exactly by the servers `S ⊆ Q \ {k}` among `Q`.
//! Rounds run for `j = ⌊μq⌋` down to the threshold: inside every
//! `(j+1)`-subset `S` each member `i` multicasts the XOR of its segments of
//! `V^k_{S\{k}}`, one per other member `k`. What is still missing after the
//! last round is sent either uncoded or by one more full round, whichever
//! costs fewer symbols (uncoded on ties).
//!
//! The threshold is found operationally: a round runs only if, together
//! with all larger rounds and the local rows, no server would hold more
//! than `m` rows for one of its outputs.

use std::collections::BTreeMap;
use std::io::Write;

use num::Zero;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::codec::{server_storage_matrix, CodecError, StoragePlan};
use crate::gf::{FieldElement, FieldMatrix};
use crate::rational::{self, Rational};
use crate::subset::{subsets_of, ServerSet};

#[derive(Debug, Error)]
pub enum ShuffleError {
    #[error("N = {outputs} is not divisible by |Q| = {finishers}")]
    Divisibility { outputs: usize, finishers: usize },
    #[error("empty finishing set")]
    NoFinishers,
    #[error("server {server} out of range for K = {servers}")]
    UnknownServer { server: usize, servers: usize },
    #[error("map results missing for server {0}")]
    MissingMapResults(usize),
    #[error("server {sender} would send c_{row} x_{output} without having computed it")]
    SenderLacksValue {
        sender: usize,
        row: usize,
        output: usize,
    },
    #[error("server {receiver} decoded a wrong value for c_{row} x_{output}")]
    DecodeMismatch {
        receiver: usize,
        row: usize,
        output: usize,
    },
    #[error("server {server} has {have} of {need} rows for output {output}")]
    Incomplete {
        server: usize,
        output: usize,
        have: usize,
        need: usize,
    },
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// `W_k` for every `k ∈ Q`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReduceAssignment {
    pub finishers: ServerSet,
    pub outputs: BTreeMap<usize, Vec<usize>>,
}

impl ReduceAssignment {
    pub fn outputs_of(&self, server: usize) -> &[usize] {
        self.outputs.get(&server).map_or(&[], Vec::as_slice)
    }

    pub fn owner_of(&self, output: usize) -> Option<usize> {
        self.outputs
            .iter()
            .find(|(_, outs)| outs.contains(&output))
            .map(|(&k, _)| k)
    }

    pub fn total_outputs(&self) -> usize {
        self.outputs.values().map(Vec::len).sum()
    }
}

/// Contiguous blocks of `N/q` outputs, in ascending server order.
pub fn assign_reduce_tasks(
    finishers: ServerSet,
    outputs: usize,
) -> Result<ReduceAssignment, ShuffleError> {
    let q = finishers.len();
    if q == 0 {
        return Err(ShuffleError::NoFinishers);
    }
    if !outputs.is_multiple_of(q) {
        return Err(ShuffleError::Divisibility {
            outputs,
            finishers: q,
        });
    }
    let per = outputs / q;
    let outputs = finishers
        .iter()
        .enumerate()
        .map(|(t, k)| (k, (t * per..(t + 1) * per).collect()))
        .collect();
    Ok(ReduceAssignment { finishers, outputs })
}

/// `V_S^k`: items `(row, output)` sorted by row then output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NeededSet {
    pub holders: ServerSet,
    pub target: usize,
    pub items: Vec<(usize, usize)>,
}

/// All nonempty `V_S^k`, sorted by `(S, k)`.
pub fn build_needed_sets(plan: &StoragePlan, assignment: &ReduceAssignment) -> Vec<NeededSet> {
    let q = assignment.finishers;
    let mut sets: BTreeMap<(ServerSet, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for batch in plan.batches() {
        let holders = batch.servers.intersection(q);
        if holders.is_empty() {
            continue;
        }
        for k in q.iter().filter(|&k| !holders.contains(k)) {
            let items = sets.entry((holders, k)).or_default();
            for &row in &batch.rows {
                items.extend(assignment.outputs_of(k).iter().map(|&o| (row, o)));
            }
        }
    }
    sets.into_iter()
        .map(|((holders, target), mut items)| {
            items.sort_unstable();
            NeededSet {
                holders,
                target,
                items,
            }
        })
        .collect()
}

/// Map-phase results `z = U_k X` of each server that ran.
#[derive(Debug, Clone)]
pub struct MapResults {
    servers: Vec<Option<LocalResults>>,
}

#[derive(Debug, Clone)]
struct LocalResults {
    rows: Vec<usize>,
    values: FieldMatrix,
}

impl MapResults {
    /// Computes `U_k X` for every `k` in `servers`; `x` is `n × N`.
    pub fn compute(
        plan: &StoragePlan,
        a: &FieldMatrix,
        x: &FieldMatrix,
        servers: ServerSet,
    ) -> Result<Self, ShuffleError> {
        let total = plan.params().servers;
        let mut out = vec![None; total];
        for k in servers.iter() {
            if k >= total {
                return Err(ShuffleError::UnknownServer {
                    server: k,
                    servers: total,
                });
            }
            let u = server_storage_matrix(plan, k, a)?;
            let values = plan.field().mat_mul(&u, x).map_err(CodecError::from)?;
            out[k] = Some(LocalResults {
                rows: plan.server_rows(k).to_vec(),
                values,
            });
        }
        Ok(MapResults { servers: out })
    }

    pub fn has_server(&self, server: usize) -> bool {
        self.servers.get(server).is_some_and(Option::is_some)
    }

    /// `c_row · x_output` as computed by `server`, if it stores `row`.
    pub fn get(&self, server: usize, row: usize, output: usize) -> Option<FieldElement> {
        let local = self.servers.get(server)?.as_ref()?;
        let i = local.rows.binary_search(&row).ok()?;
        Some(local.values[(i, output)])
    }

    /// Rows computed by `server`.
    pub fn rows(&self, server: usize) -> &[usize] {
        self.servers
            .get(server)
            .and_then(Option::as_ref)
            .map_or(&[], |l| l.rows.as_slice())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageKind {
    Coded,
    Uncoded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Round(usize),
    Residual,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub sender: usize,
    pub recipients: ServerSet,
    pub kind: MessageKind,
    pub phase: Phase,
    /// Transmitted symbols, padding included.
    pub symbols: usize,
    /// Zero symbols inserted to equalize segment lengths.
    pub padded: usize,
    pub payload: Vec<FieldElement>,
}

impl Message {
    pub fn payload_digest(&self) -> String {
        let mut hasher = Sha256::new();
        for v in &self.payload {
            hasher.update(v.0.to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundSummary {
    pub j: usize,
    pub messages: usize,
    pub symbols: usize,
    /// Scalars recovered by each target server in this round.
    pub delivered: BTreeMap<usize, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ResidualStrategy {
    Uncoded,
    Extended,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResidualChoice {
    pub strategy: ResidualStrategy,
    pub uncoded_symbols: usize,
    /// `None` when no lower round exists.
    pub extended_symbols: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShuffleTranscript {
    pub messages: Vec<Message>,
    /// Scalars received by each server, keyed by `(row, output)`.
    pub recovered: BTreeMap<usize, BTreeMap<(usize, usize), FieldElement>>,
    pub rounds: Vec<RoundSummary>,
    /// Smallest coded round that ran (`⌊μq⌋ + 1` if none did).
    pub threshold: usize,
    pub residual: Option<ResidualChoice>,
    pub rows: usize,
}

impl ShuffleTranscript {
    fn new(rows: usize, finishers: ServerSet) -> Self {
        ShuffleTranscript {
            messages: Vec::new(),
            recovered: finishers.iter().map(|k| (k, BTreeMap::new())).collect(),
            rounds: Vec::new(),
            threshold: 0,
            residual: None,
            rows,
        }
    }

    pub fn total_symbols(&self) -> usize {
        self.messages.iter().map(|m| m.symbols).sum()
    }

    pub fn coded_symbols(&self) -> usize {
        self.symbols_of(MessageKind::Coded)
    }

    pub fn uncoded_symbols(&self) -> usize {
        self.symbols_of(MessageKind::Uncoded)
    }

    fn symbols_of(&self, kind: MessageKind) -> usize {
        self.messages
            .iter()
            .filter(|m| m.kind == kind)
            .map(|m| m.symbols)
            .sum()
    }

    pub fn padded_symbols(&self) -> usize {
        self.messages.iter().map(|m| m.padded).sum()
    }

    pub fn bits(&self, width: u32) -> u128 {
        self.total_symbols() as u128 * width as u128
    }

    /// One JSON object per message.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for m in &self.messages {
            let round = match m.phase {
                Phase::Round(j) => serde_json::Value::from(j),
                Phase::Residual => serde_json::Value::from("residual"),
            };
            let line = serde_json::json!({
                "sender": m.sender,
                "recipients": m.recipients,
                "kind": m.kind,
                "round": round,
                "symbols": m.symbols,
                "padded": m.padded,
                "payload_sha256": m.payload_digest(),
            });
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Total symbols over `m`.
pub fn measure_load(transcript: &ShuffleTranscript) -> Rational {
    if transcript.rows == 0 {
        return Rational::zero();
    }
    rational::ratio(transcript.total_symbols() as i64, transcript.rows as i64)
}

struct Delivery {
    receiver: usize,
    item: (usize, usize),
    value: FieldElement,
}

struct Context<'a> {
    plan: &'a StoragePlan,
    assignment: &'a ReduceAssignment,
    map: &'a MapResults,
    needed: BTreeMap<(ServerSet, usize), Vec<(usize, usize)>>,
}

impl<'a> Context<'a> {
    fn new(
        plan: &'a StoragePlan,
        assignment: &'a ReduceAssignment,
        map: &'a MapResults,
    ) -> Result<Self, ShuffleError> {
        let servers = plan.params().servers;
        for k in assignment.finishers.iter() {
            if k >= servers {
                return Err(ShuffleError::UnknownServer { server: k, servers });
            }
            if !map.has_server(k) {
                return Err(ShuffleError::MissingMapResults(k));
            }
        }
        let needed = build_needed_sets(plan, assignment)
            .into_iter()
            .map(|s| ((s.holders, s.target), s.items))
            .collect();
        Ok(Context {
            plan,
            assignment,
            map,
            needed,
        })
    }

    fn items(&self, holders: ServerSet, target: usize) -> &[(usize, usize)] {
        self.needed
            .get(&(holders, target))
            .map_or(&[], Vec::as_slice)
    }

    fn value(
        &self,
        server: usize,
        (row, output): (usize, usize),
    ) -> Result<FieldElement, ShuffleError> {
        self.map
            .get(server, row, output)
            .ok_or(ShuffleError::SenderLacksValue {
                sender: server,
                row,
                output,
            })
    }

    /// Reference value from the lowest holder; used to check decodes.
    fn truth(&self, (row, output): (usize, usize)) -> Option<FieldElement> {
        let holder = self
            .plan
            .row_holders(row)
            .intersection(self.assignment.finishers)
            .min()?;
        self.map.get(holder, row, output)
    }

    fn replication(&self) -> usize {
        self.plan.params().replication()
    }

    /// Per `(k, output)`: count of needed items per holder-set size.
    fn counts_by_size(&self) -> BTreeMap<(usize, usize), Vec<usize>> {
        let r = self.replication();
        let mut counts: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for k in self.assignment.finishers.iter() {
            for &o in self.assignment.outputs_of(k) {
                counts.insert((k, o), vec![0; r + 1]);
            }
        }
        for (&(holders, k), items) in &self.needed {
            for &(_, o) in items {
                counts.get_mut(&(k, o)).expect("assigned output")[holders.len()] += 1;
            }
        }
        counts
    }

    fn local_rows(&self, k: usize) -> usize {
        self.map.rows(k).len()
    }

    /// One full round on `(j+1)`-subsets of `Q`. Every decode is checked
    /// against the reference values before anything is returned.
    fn round(&self, j: usize, phase: Phase) -> Result<(Vec<Message>, Vec<Delivery>), ShuffleError> {
        let mut messages = Vec::new();
        let mut deliveries = Vec::new();
        for group in subsets_of(self.assignment.finishers, j + 1) {
            for sender in group.iter() {
                // (target, segment of V^target_{group\target} owned by sender)
                let parts: Vec<(usize, &[(usize, usize)])> = group
                    .iter()
                    .filter(|&k| k != sender)
                    .map(|k| {
                        let others = group.without(k);
                        let t = others.rank_of(sender).expect("sender in group");
                        (k, segment(self.items(others, k), j, t))
                    })
                    .collect();
                let len = parts.iter().map(|(_, s)| s.len()).max().unwrap_or(0);
                if len == 0 {
                    continue;
                }
                let mut payload = vec![FieldElement::ZERO; len];
                let mut padded = 0;
                for (_, seg) in &parts {
                    padded += len - seg.len();
                    for (p, &item) in seg.iter().enumerate() {
                        payload[p] ^= self.value(sender, item)?;
                    }
                }
                for (k, seg) in &parts {
                    for (p, &item) in seg.iter().enumerate() {
                        let mut v = payload[p];
                        for (other, other_seg) in &parts {
                            if other == k {
                                continue;
                            }
                            if let Some(&known) = other_seg.get(p) {
                                v ^= self.map.get(*k, known.0, known.1).ok_or(
                                    ShuffleError::DecodeMismatch {
                                        receiver: *k,
                                        row: known.0,
                                        output: known.1,
                                    },
                                )?;
                            }
                        }
                        if Some(v) != self.truth(item) {
                            return Err(ShuffleError::DecodeMismatch {
                                receiver: *k,
                                row: item.0,
                                output: item.1,
                            });
                        }
                        deliveries.push(Delivery {
                            receiver: *k,
                            item,
                            value: v,
                        });
                    }
                }
                let recipients = group.without(sender);
                // a single recipient gets a plain segment
                let kind = if recipients.len() == 1 {
                    MessageKind::Uncoded
                } else {
                    MessageKind::Coded
                };
                messages.push(Message {
                    sender,
                    recipients,
                    kind,
                    phase,
                    symbols: len,
                    padded,
                    payload,
                });
            }
        }
        Ok((messages, deliveries))
    }
}

/// Segment `t` of `j` near-equal contiguous segments of `items`.
fn segment<T>(items: &[T], j: usize, t: usize) -> &[T] {
    let len = items.len().div_ceil(j);
    let start = (t * len).min(items.len());
    let end = ((t + 1) * len).min(items.len());
    &items[start..end]
}

fn apply(
    transcript: &mut ShuffleTranscript,
    messages: Vec<Message>,
    deliveries: Vec<Delivery>,
) -> (usize, usize, BTreeMap<usize, usize>) {
    let count = messages.len();
    let symbols = messages.iter().map(|m| m.symbols).sum();
    let mut delivered = BTreeMap::new();
    for d in deliveries {
        *delivered.entry(d.receiver).or_insert(0) += 1;
        transcript
            .recovered
            .entry(d.receiver)
            .or_default()
            .insert(d.item, d.value);
    }
    transcript.messages.extend(messages);
    (count, symbols, delivered)
}

/// Coded rounds `j = ⌊μq⌋` down to the operational threshold.
pub fn run_coded_rounds(
    plan: &StoragePlan,
    assignment: &ReduceAssignment,
    map: &MapResults,
) -> Result<ShuffleTranscript, ShuffleError> {
    let ctx = Context::new(plan, assignment, map)?;
    let m = plan.params().rows;
    let r = ctx.replication();
    let counts = ctx.counts_by_size();
    let fits = |s: usize| {
        counts
            .iter()
            .all(|(&(k, _), by_size)| ctx.local_rows(k) + by_size[s..].iter().sum::<usize>() <= m)
    };
    let nonempty = |j: usize| counts.values().any(|c| c[j] > 0);
    let mut threshold = r + 1;
    while threshold > 1 && fits(threshold - 1) {
        threshold -= 1;
    }
    while threshold <= r && !nonempty(threshold) {
        threshold += 1;
    }
    let mut transcript = ShuffleTranscript::new(m, assignment.finishers);
    transcript.threshold = threshold;
    for j in (threshold..=r).rev() {
        let (messages, deliveries) = ctx.round(j, Phase::Round(j))?;
        let (count, symbols, delivered) = apply(&mut transcript, messages, deliveries);
        transcript.rounds.push(RoundSummary {
            j,
            messages: count,
            symbols,
            delivered,
        });
    }
    Ok(transcript)
}

/// Delivers what the coded rounds left missing, uncoded or by one more
/// round at `threshold - 1`, and checks that every output is decodable.
pub fn finish_residual(
    plan: &StoragePlan,
    assignment: &ReduceAssignment,
    map: &MapResults,
    mut transcript: ShuffleTranscript,
) -> Result<ShuffleTranscript, ShuffleError> {
    let ctx = Context::new(plan, assignment, map)?;
    let m = plan.params().rows;
    let s = transcript.threshold;

    let have = |t: &ShuffleTranscript, k: usize, o: usize| {
        ctx.local_rows(k)
            + t.recovered
                .get(&k)
                .map_or(0, |rec| rec.keys().filter(|&&(_, out)| out == o).count())
    };

    // uncoded: lowest-id holder unicasts, larger holder sets first
    let mut sources: Vec<(ServerSet, usize)> = ctx
        .needed
        .keys()
        .filter(|(holders, _)| holders.len() < s)
        .copied()
        .collect();
    sources.sort_by(|a, b| {
        b.0.len()
            .cmp(&a.0.len())
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });
    let mut picks: BTreeMap<(ServerSet, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for k in assignment.finishers.iter() {
        for &o in assignment.outputs_of(k) {
            let mut missing = m.saturating_sub(have(&transcript, k, o));
            for &(holders, target) in sources.iter().filter(|src| src.1 == k) {
                if missing == 0 {
                    break;
                }
                let take: Vec<_> = ctx
                    .items(holders, target)
                    .iter()
                    .filter(|&&(_, out)| out == o)
                    .take(missing)
                    .copied()
                    .collect();
                missing -= take.len();
                picks.entry((holders, target)).or_default().extend(take);
            }
        }
    }
    let mut unicasts = Vec::new();
    let mut unicast_deliveries = Vec::new();
    for (&(holders, target), items) in sources
        .iter()
        .filter_map(|key| picks.get(key).map(|v| (key, v)))
    {
        let mut items = items.clone();
        items.sort_unstable();
        let sender = holders.min().expect("nonempty holder set");
        let mut payload = Vec::with_capacity(items.len());
        for &item in &items {
            let v = ctx.value(sender, item)?;
            if Some(v) != ctx.truth(item) {
                return Err(ShuffleError::DecodeMismatch {
                    receiver: target,
                    row: item.0,
                    output: item.1,
                });
            }
            payload.push(v);
            unicast_deliveries.push(Delivery {
                receiver: target,
                item,
                value: v,
            });
        }
        unicasts.push(Message {
            sender,
            recipients: ServerSet::singleton(target),
            kind: MessageKind::Uncoded,
            phase: Phase::Residual,
            symbols: items.len(),
            padded: 0,
            payload,
        });
    }
    let uncoded_symbols: usize = unicasts.iter().map(|m| m.symbols).sum();

    let extended = if s >= 2 {
        Some(ctx.round(s - 1, Phase::Residual)?)
    } else {
        None
    };
    let extended_symbols = extended
        .as_ref()
        .map(|(msgs, _)| msgs.iter().map(|m| m.symbols).sum::<usize>());
    let strategy = match extended_symbols {
        Some(e) if e < uncoded_symbols => ResidualStrategy::Extended,
        _ => ResidualStrategy::Uncoded,
    };
    match strategy {
        ResidualStrategy::Uncoded => {
            apply(&mut transcript, unicasts, unicast_deliveries);
        }
        ResidualStrategy::Extended => {
            let (msgs, deliveries) = extended.expect("extended round built");
            apply(&mut transcript, msgs, deliveries);
        }
    }
    transcript.residual = Some(ResidualChoice {
        strategy,
        uncoded_symbols,
        extended_symbols,
    });

    for k in assignment.finishers.iter() {
        for &o in assignment.outputs_of(k) {
            let got = have(&transcript, k, o);
            if got < m {
                return Err(ShuffleError::Incomplete {
                    server: k,
                    output: o,
                    have: got,
                    need: m,
                });
            }
        }
    }
    Ok(transcript)
}

/// Coded rounds followed by the residual step.
pub fn shuffle(
    plan: &StoragePlan,
    assignment: &ReduceAssignment,
    map: &MapResults,
) -> Result<ShuffleTranscript, ShuffleError> {
    let transcript = run_coded_rounds(plan, assignment, map)?;
    finish_residual(plan, assignment, map, transcript)
}

/// Rows and values available to `server` for `output` after the shuffle:
/// its own scalars followed by the received ones.
pub fn available_values(
    map: &MapResults,
    transcript: &ShuffleTranscript,
    server: usize,
    output: usize,
) -> Vec<(usize, FieldElement)> {
    let mut values: Vec<(usize, FieldElement)> = map
        .rows(server)
        .iter()
        .filter_map(|&row| map.get(server, row, output).map(|v| (row, v)))
        .collect();
    if let Some(rec) = transcript.recovered.get(&server) {
        values.extend(
            rec.iter()
                .filter(|(&(_, o), _)| o == output)
                .map(|(&(row, _), &v)| (row, v)),
        );
    }
    values
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{build_storage_plan, SchemeParams};
    use crate::rational::ratio;
    use crate::stragglers::trial_rng;

    fn setup(
        params: &SchemeParams,
        q: ServerSet,
        seed: u64,
    ) -> (StoragePlan, ReduceAssignment, MapResults) {
        let plan = build_storage_plan(params).unwrap();
        let mut rng = trial_rng(seed, 0);
        let a = plan
            .field()
            .random_matrix(params.rows, params.cols, &mut rng);
        let x = plan
            .field()
            .random_matrix(params.cols, params.outputs, &mut rng);
        let assignment = assign_reduce_tasks(q, params.outputs).unwrap();
        let map = MapResults::compute(&plan, &a, &x, q).unwrap();
        (plan, assignment, map)
    }

    #[test]
    fn assignment_blocks() {
        let a = assign_reduce_tasks(ServerSet::first(4), 12).unwrap();
        assert_eq!(a.outputs_of(0), &[0, 1, 2]);
        assert_eq!(a.outputs_of(3), &[9, 10, 11]);
        assert_eq!(a.owner_of(7), Some(2));
        let a = assign_reduce_tasks(ServerSet::singleton(0), 4).unwrap();
        assert_eq!(a.outputs_of(0), &[0, 1, 2, 3]);
        let a = assign_reduce_tasks([1, 4, 6].into_iter().collect(), 3).unwrap();
        assert_eq!(a.outputs_of(4), &[1]);
        assert!(matches!(
            assign_reduce_tasks(ServerSet::first(4), 10),
            Err(ShuffleError::Divisibility { .. })
        ));
    }

    #[test]
    fn needed_sets_of_worked_example() {
        let params = SchemeParams::new(6, 4, ratio(1, 2), 20, 4, 12);
        let plan = build_storage_plan(&params).unwrap();
        let assignment = assign_reduce_tasks(ServerSet::first(4), 12).unwrap();
        let sets = build_needed_sets(&plan, &assignment);
        let find = |s: &[usize], k: usize| {
            sets.iter()
                .find(|n| n.holders == s.iter().copied().collect() && n.target == k)
                .unwrap()
                .items
                .clone()
        };
        let expect = |rows: [usize; 2], outs: std::ops::Range<usize>| {
            let mut v: Vec<_> = rows
                .iter()
                .flat_map(|&r| outs.clone().map(move |o| (r, o)))
                .collect();
            v.sort_unstable();
            v
        };
        assert_eq!(find(&[1, 2], 0), expect([10, 11], 0..3));
        assert_eq!(find(&[0, 1], 2), expect([0, 1], 6..9));
        // |V_S^k| = (N/q) C(K-q, r-j) m / ((q/K) C(K, r))
        for n in &sets {
            let j = n.holders.len();
            let expected = 3 * crate::subset::binomial(2, 2 - j) as usize * 2;
            assert_eq!(n.items.len(), expected);
        }
    }

    #[test]
    fn full_storage_needs_nothing() {
        let params = SchemeParams::new(3, 3, ratio(1, 1), 4, 2, 3);
        let (plan, assignment, map) = setup(&params, ServerSet::first(3), 1);
        assert!(build_needed_sets(&plan, &assignment).is_empty());
        let t = shuffle(&plan, &assignment, &map).unwrap();
        assert_eq!(measure_load(&t), Rational::zero());
        assert!(t.messages.is_empty());
    }

    #[test]
    fn worked_example_load() {
        let params = SchemeParams::new(6, 4, ratio(1, 2), 20, 4, 12);
        let (_, assignment, map) = setup(&params, ServerSet::first(4), 3);
        let plan = build_storage_plan(&params).unwrap();
        let t = shuffle(&plan, &assignment, &map).unwrap();
        assert_eq!(t.threshold, 2);
        assert_eq!(t.coded_symbols(), 36);
        assert_eq!(t.uncoded_symbols(), 48);
        assert_eq!(measure_load(&t), ratio(21, 5));
        assert_eq!(
            t.residual.as_ref().unwrap().strategy,
            ResidualStrategy::Uncoded
        );
        // subset {0,1,2} carries 9 coded symbols
        let group: ServerSet = [0, 1, 2].into_iter().collect();
        let sym: usize = t
            .messages
            .iter()
            .filter(|m| m.recipients.with(m.sender) == group)
            .map(|m| m.symbols)
            .sum();
        assert_eq!(sym, 9);
        // B_2 m = 6 rows for each of 3 outputs
        assert_eq!(t.rounds[0].delivered[&0], 18);
        assert_eq!(t.padded_symbols(), 0);
    }

    #[test]
    fn two_server_examples() {
        let bw = SchemeParams::new(4, 4, ratio(1, 2), 12, 4, 4);
        let (plan, a, map) = setup(&bw, ServerSet::first(4), 5);
        let t = shuffle(&plan, &a, &map).unwrap();
        assert_eq!(t.total_symbols(), 12);
        assert_eq!(measure_load(&t), Rational::from_integer(1.into()));
        assert!(t.messages.iter().all(|m| m.kind == MessageKind::Coded));
        assert_eq!(t.messages.iter().filter(|m| m.sender == 2).count(), 3);

        let lat = SchemeParams::new(4, 2, ratio(1, 2), 12, 4, 4);
        let (plan, a, map) = setup(&lat, [1, 3].into_iter().collect(), 5);
        let t = shuffle(&plan, &a, &map).unwrap();
        assert_eq!(t.total_symbols(), 24);
        assert_eq!(t.uncoded_symbols(), 24);
        assert_eq!(measure_load(&t), Rational::from_integer(2.into()));
    }

    #[test]
    fn padding_is_counted() {
        // |V| = 3 per target with j = 2 segments of length 2 and 1
        let params = SchemeParams::new(3, 3, ratio(2, 3), 3, 2, 3);
        let (plan, a, map) = setup(&params, ServerSet::first(3), 2);
        let t = shuffle(&plan, &a, &map).unwrap();
        assert!(t.padded_symbols() > 0);
        assert!(t.total_symbols() >= t.padded_symbols());
    }

    #[test]
    fn jsonl_lines() {
        let params = SchemeParams::new(4, 4, ratio(1, 2), 12, 4, 4);
        let (plan, a, map) = setup(&params, ServerSet::first(4), 9);
        let t = shuffle(&plan, &a, &map).unwrap();
        let mut buf = Vec::new();
        t.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), t.messages.len());
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first["kind"], "coded");
        assert_eq!(first["round"], 2);
        assert_eq!(first["payload_sha256"].as_str().unwrap().len(), 64);
    }

    #[test]
    fn segments_are_contiguous() {
        let items = [1, 2, 3, 4, 5];
        assert_eq!(segment(&items, 2, 0), &[1, 2, 3]);
        assert_eq!(segment(&items, 2, 1), &[4, 5]);
        assert_eq!(segment(&items, 3, 2), &[5]);
        assert_eq!(segment(&items[..1], 3, 2), &[] as &[i32]);
    }
}
