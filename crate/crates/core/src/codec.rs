//! MDS-coded storage design and Reduce-phase decoding.
//!
//! The `m` rows of `A` are encoded into `(K/q)·m` coded rows with a
//! Vandermonde generator. The coded rows are split evenly into one batch per
//! `r`-subset `T` of the servers, `r = ⌊μq⌋`, and batch `B_T` is stored at
//! every server of `T`. Batches follow the lexicographic order of their
//! subsets, so batch 0 belongs to `{0, 1}`, batch 1 to `{0, 2}` and so on.

use std::collections::BTreeSet;

use num::{One, Zero};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf::{self, FieldElement, FieldMatrix, GaloisField, GfError};
use crate::rational::{self, Rational};
use crate::subset::{binomial, combinations, ServerSet, MAX_SERVERS};

pub const PLAN_FORMAT_VERSION: u32 = 1;

/// Exhaustive decodability checks stop being the default above this many
/// `q`-subsets.
pub const DEFAULT_EXHAUSTIVE_CAP: u128 = 10_000;

/// A violated parameter constraint. [`ParamError::constraint`] gives the
/// stable name reported by the CLI.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParamError {
    #[error("server-count: K = {0} must lie in 1..=64")]
    ServerCount(usize),
    #[error("storage-range: mu = {mu} must satisfy 1/K <= mu <= 1")]
    StorageRange { mu: String },
    #[error("wait-range: q = {q} must satisfy ceil(1/mu) = {min} <= q <= K = {max}")]
    WaitRange { q: usize, min: usize, max: usize },
    #[error("nonzero-dimensions: m, n and N must all be positive")]
    ZeroDimension,
    #[error("output-divisibility: q = {q} must divide N = {outputs}")]
    OutputDivisibility { q: usize, outputs: usize },
    #[error(
        "batch-divisibility: K*m/(q*C(K,{replication})) must be a positive integer; smallest valid m >= {rows} is {suggested}"
    )]
    BatchDivisibility {
        rows: usize,
        replication: usize,
        suggested: usize,
    },
    #[error(
        "field-size: GF(2^{width}) has fewer than the {needed} distinct evaluation points needed"
    )]
    FieldTooSmall { width: u32, needed: usize },
    #[error("field-width: {0}")]
    Field(#[from] GfError),
}

impl ParamError {
    pub fn constraint(&self) -> &'static str {
        match self {
            ParamError::ServerCount(_) => "server-count",
            ParamError::StorageRange { .. } => "storage-range",
            ParamError::WaitRange { .. } => "wait-range",
            ParamError::ZeroDimension => "nonzero-dimensions",
            ParamError::OutputDivisibility { .. } => "output-divisibility",
            ParamError::BatchDivisibility { .. } => "batch-divisibility",
            ParamError::FieldTooSmall { .. } => "field-size",
            ParamError::Field(_) => "field-width",
        }
    }
}

#[derive(Debug, Error)]
pub enum CodecError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Field(#[from] GfError),
    #[error("server {server} out of range for K = {servers}")]
    UnknownServer { server: usize, servers: usize },
    #[error("A has {got} rows but the plan encodes {expected}")]
    RowMismatch { got: usize, expected: usize },
    #[error("need at least {needed} values with distinct rows, got {got}")]
    InsufficientValues { got: usize, needed: usize },
    #[error("coded row {0} supplied twice")]
    DuplicateRow(usize),
    #[error("coded row {row} is outside 0..{total}")]
    UnknownRow { row: usize, total: usize },
    #[error("selected generator rows have rank {rank} < {needed}")]
    RankDeficient { rank: usize, needed: usize },
    #[error("random generator is not decodable: q-subset {subset} reaches rank {rank} < {needed}")]
    NotDecodable {
        subset: ServerSet,
        rank: usize,
        needed: usize,
    },
    #[error("invalid plan document: {0}")]
    InvalidPlan(String),
}

/// Problem and scheme parameters. Serialized with the single-letter names
/// `K, q, mu, m, n, N, w`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeParams {
    #[serde(rename = "K")]
    pub servers: usize,
    #[serde(rename = "q")]
    pub wait_for: usize,
    #[serde(rename = "mu", with = "rational::as_string")]
    pub storage: Rational,
    #[serde(rename = "m")]
    pub rows: usize,
    #[serde(rename = "n")]
    pub cols: usize,
    #[serde(rename = "N")]
    pub outputs: usize,
    #[serde(rename = "w", default = "default_width")]
    pub field_width: u32,
}

fn default_width() -> u32 {
    gf::DEFAULT_WIDTH
}

impl SchemeParams {
    pub fn new(
        servers: usize,
        wait_for: usize,
        storage: Rational,
        rows: usize,
        cols: usize,
        outputs: usize,
    ) -> Self {
        SchemeParams {
            servers,
            wait_for,
            storage,
            rows,
            cols,
            outputs,
            field_width: gf::DEFAULT_WIDTH,
        }
    }

    pub fn with_field_width(mut self, width: u32) -> Self {
        self.field_width = width;
        self
    }

    /// `⌊μq⌋`: how many servers hold each coded row.
    pub fn replication(&self) -> usize {
        rational::floor_to_usize(&(&self.storage * rational::int(self.wait_for as i64)))
    }

    /// `μ̄ = ⌊μq⌋/q`.
    pub fn effective_storage(&self) -> Rational {
        rational::ratio(self.replication() as i64, self.wait_for as i64)
    }

    pub fn min_wait(&self) -> usize {
        min_wait(&self.storage)
    }

    pub fn batch_count(&self) -> u128 {
        binomial(self.servers, self.replication())
    }

    /// Coded rows per batch, `K·m / (q·C(K, r))`, if integral.
    pub fn batch_size(&self) -> Option<usize> {
        let denom = self.wait_for as u128 * self.batch_count();
        let numer = (self.servers * self.rows) as u128;
        (denom != 0 && numer.is_multiple_of(denom) && numer > 0).then(|| (numer / denom) as usize)
    }

    /// `(K/q)·m`, the MDS code length.
    pub fn coded_rows(&self) -> usize {
        self.servers * self.rows / self.wait_for
    }

    /// `μ̄·m`.
    pub fn rows_per_server(&self) -> usize {
        self.replication() * self.rows / self.wait_for
    }

    pub fn outputs_per_server(&self) -> usize {
        self.outputs / self.wait_for
    }

    /// Smallest `m' >= m` meeting the batch divisibility constraint; pad `A`
    /// with zero rows to use it.
    pub fn padded_rows(&self) -> usize {
        let denom = self.wait_for as u128 * self.batch_count();
        let step = denom / num::integer::gcd(denom, self.servers as u128);
        let m = self.rows.max(1) as u128;
        (m.div_ceil(step) * step) as usize
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let k = self.servers;
        if k == 0 || k > MAX_SERVERS {
            return Err(ParamError::ServerCount(k));
        }
        let mu = &self.storage;
        if *mu < rational::ratio(1, k as i64) || *mu > Rational::one() {
            return Err(ParamError::StorageRange {
                mu: rational::to_fraction_string(mu),
            });
        }
        let min = self.min_wait();
        if self.wait_for < min || self.wait_for > k {
            return Err(ParamError::WaitRange {
                q: self.wait_for,
                min,
                max: k,
            });
        }
        if self.rows == 0 || self.cols == 0 || self.outputs == 0 {
            return Err(ParamError::ZeroDimension);
        }
        if !self.outputs.is_multiple_of(self.wait_for) {
            return Err(ParamError::OutputDivisibility {
                q: self.wait_for,
                outputs: self.outputs,
            });
        }
        if self.batch_size().is_none() {
            return Err(ParamError::BatchDivisibility {
                rows: self.rows,
                replication: self.replication(),
                suggested: self.padded_rows(),
            });
        }
        let field_size = 1u64
            .checked_shl(self.field_width)
            .filter(|_| (1..=gf::MAX_WIDTH).contains(&self.field_width))
            .ok_or(GfError::UnsupportedWidth(self.field_width))?;
        if (self.coded_rows() as u64) > field_size {
            return Err(ParamError::FieldTooSmall {
                width: self.field_width,
                needed: self.coded_rows(),
            });
        }
        Ok(())
    }
}

/// `⌈1/μ⌉`.
pub fn min_wait(storage: &Rational) -> usize {
    if storage.is_zero() {
        return usize::MAX;
    }
    rational::ceil_to_usize(&storage.recip())
}

/// How the generator matrix was produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Construction {
    /// Row `i` is `[1, p_i, p_i^2, ..]`; points are distinct.
    Vandermonde { points: Vec<FieldElement> },
    /// Uniform random entries drawn from a ChaCha8 stream.
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Batch {
    pub servers: ServerSet,
    pub rows: Vec<usize>,
}

/// Generator plus batch placement. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoragePlan {
    params: SchemeParams,
    field: GaloisField,
    construction: Construction,
    generator: FieldMatrix,
    batches: Vec<Batch>,
    server_rows: Vec<Vec<usize>>,
    row_holders: Vec<ServerSet>,
}

/// Deterministic Vandermonde plan.
pub fn build_storage_plan(params: &SchemeParams) -> Result<StoragePlan, CodecError> {
    params.validate()?;
    let field = GaloisField::new(params.field_width)?;
    let points: Vec<FieldElement> = (0..params.coded_rows())
        .map(|i| FieldElement(i as u16))
        .collect();
    let generator = field.vandermonde(&points, params.rows);
    let batches = canonical_batches(params);
    StoragePlan::assemble(
        params.clone(),
        field,
        Construction::Vandermonde { points },
        generator,
        batches,
    )
}

/// Plan with a random generator. Decodability is checked (exhaustively up
/// to [`DEFAULT_EXHAUSTIVE_CAP`] subsets, sampled above) and any failure
/// aborts planning.
pub fn build_random_plan(params: &SchemeParams, seed: u64) -> Result<StoragePlan, CodecError> {
    params.validate()?;
    let field = GaloisField::new(params.field_width)?;
    let generator = random_generator(&field, params, seed);
    let plan = StoragePlan::assemble(
        params.clone(),
        field,
        Construction::Random { seed },
        generator,
        canonical_batches(params),
    )?;
    let report = verify_decodability(&plan, &VerifyOptions::default());
    if let Some(failure) = report.first_failure {
        return Err(CodecError::NotDecodable {
            subset: failure.subset,
            rank: failure.rank,
            needed: params.rows,
        });
    }
    Ok(plan)
}

fn random_generator(field: &GaloisField, params: &SchemeParams, seed: u64) -> FieldMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    field.random_matrix(params.coded_rows(), params.rows, &mut rng)
}

fn canonical_batches(params: &SchemeParams) -> Vec<Batch> {
    let size = params.batch_size().expect("validated");
    combinations(params.servers, params.replication())
        .enumerate()
        .map(|(b, servers)| Batch {
            servers,
            rows: (b * size..(b + 1) * size).collect(),
        })
        .collect()
}

impl StoragePlan {
    fn assemble(
        params: SchemeParams,
        field: GaloisField,
        construction: Construction,
        generator: FieldMatrix,
        batches: Vec<Batch>,
    ) -> Result<Self, CodecError> {
        let total = generator.rows();
        let mut row_holders = vec![ServerSet::EMPTY; total];
        let mut seen = vec![false; total];
        let mut server_rows = vec![Vec::new(); params.servers];
        for batch in &batches {
            if let Some(bad) = batch.servers.iter().find(|&s| s >= params.servers) {
                return Err(CodecError::UnknownServer {
                    server: bad,
                    servers: params.servers,
                });
            }
            for &row in &batch.rows {
                if row >= total {
                    return Err(CodecError::UnknownRow { row, total });
                }
                if std::mem::replace(&mut seen[row], true) {
                    return Err(CodecError::DuplicateRow(row));
                }
                row_holders[row] = batch.servers;
                for s in batch.servers.iter() {
                    server_rows[s].push(row);
                }
            }
        }
        for rows in &mut server_rows {
            rows.sort_unstable();
        }
        Ok(StoragePlan {
            params,
            field,
            construction,
            generator,
            batches,
            server_rows,
            row_holders,
        })
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn field(&self) -> &GaloisField {
        &self.field
    }

    pub fn construction(&self) -> &Construction {
        &self.construction
    }

    pub fn generator(&self) -> &FieldMatrix {
        &self.generator
    }

    pub fn batches(&self) -> &[Batch] {
        &self.batches
    }

    /// Sorted coded-row indices stored at `server`.
    pub fn server_rows(&self, server: usize) -> &[usize] {
        &self.server_rows[server]
    }

    /// Servers holding coded row `row` (empty if the row is unplaced).
    pub fn row_holders(&self, row: usize) -> ServerSet {
        self.row_holders[row]
    }

    pub fn coded_rows(&self) -> usize {
        self.generator.rows()
    }

    /// Position of `row` within `server`'s storage, if stored there.
    pub fn local_index(&self, server: usize, row: usize) -> Option<usize> {
        self.server_rows[server].binary_search(&row).ok()
    }

    /// `E_k`: the generator rows owned by `server`.
    pub fn encoding_matrix(&self, server: usize) -> Result<FieldMatrix, CodecError> {
        if server >= self.params.servers {
            return Err(CodecError::UnknownServer {
                server,
                servers: self.params.servers,
            });
        }
        Ok(self.generator.select_rows(&self.server_rows[server]))
    }

    /// A copy of the plan with one batch removed; for exercising failure
    /// paths.
    pub fn without_batch(&self, index: usize) -> StoragePlan {
        let mut batches = self.batches.clone();
        batches.remove(index);
        StoragePlan::assemble(
            self.params.clone(),
            self.field.clone(),
            self.construction.clone(),
            self.generator.clone(),
            batches,
        )
        .expect("removing a batch keeps the plan well formed")
    }

    pub fn to_document(&self) -> PlanDocument {
        PlanDocument {
            format_version: PLAN_FORMAT_VERSION,
            params: self.params.clone(),
            field: FieldSpec {
                width: self.field.width(),
                polynomial: self.field.polynomial(),
            },
            construction: self.construction.clone(),
            batches: self.batches.clone(),
        }
    }

    pub fn from_document(doc: PlanDocument) -> Result<Self, CodecError> {
        if doc.format_version != PLAN_FORMAT_VERSION {
            return Err(CodecError::InvalidPlan(format!(
                "unsupported format_version {}",
                doc.format_version
            )));
        }
        doc.params.validate()?;
        if doc.field.width != doc.params.field_width {
            return Err(CodecError::InvalidPlan(format!(
                "field width {} disagrees with params.w = {}",
                doc.field.width, doc.params.field_width
            )));
        }
        let field = GaloisField::with_polynomial(doc.field.width, doc.field.polynomial)?;
        let generator = match &doc.construction {
            Construction::Vandermonde { points } => {
                if points.len() != doc.params.coded_rows() {
                    return Err(CodecError::InvalidPlan(format!(
                        "{} evaluation points for {} coded rows",
                        points.len(),
                        doc.params.coded_rows()
                    )));
                }
                if let Some(p) = points.iter().find(|p| !field.contains(**p)) {
                    return Err(CodecError::InvalidPlan(format!(
                        "point {p:?} outside GF(2^{})",
                        field.width()
                    )));
                }
                let distinct: BTreeSet<_> = points.iter().collect();
                if distinct.len() != points.len() {
                    return Err(CodecError::InvalidPlan(
                        "evaluation points are not distinct".into(),
                    ));
                }
                field.vandermonde(points, doc.params.rows)
            }
            Construction::Random { seed } => random_generator(&field, &doc.params, *seed),
        };
        StoragePlan::assemble(doc.params, field, doc.construction, generator, doc.batches)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("plan serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CodecError> {
        let doc: PlanDocument =
            serde_json::from_str(text).map_err(|e| CodecError::InvalidPlan(e.to_string()))?;
        Self::from_document(doc)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub width: u32,
    pub polynomial: u32,
}

/// On-disk form of a [`StoragePlan`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanDocument {
    pub format_version: u32,
    pub params: SchemeParams,
    pub field: FieldSpec,
    pub construction: Construction,
    pub batches: Vec<Batch>,
}

/// `U_k = E_k A`.
pub fn server_storage_matrix(
    plan: &StoragePlan,
    server: usize,
    a: &FieldMatrix,
) -> Result<FieldMatrix, CodecError> {
    if a.rows() != plan.params.rows {
        return Err(CodecError::RowMismatch {
            got: a.rows(),
            expected: plan.params.rows,
        });
    }
    let e = plan.encoding_matrix(server)?;
    Ok(plan.field.mat_mul(&e, a)?)
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Check every `q`-subset when there are at most this many.
    pub exhaustive_cap: u128,
    /// Number of random subsets otherwise.
    pub samples: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            exhaustive_cap: DEFAULT_EXHAUSTIVE_CAP,
            samples: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecodabilityFailure {
    pub subset: ServerSet,
    pub distinct_rows: usize,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecodabilityReport {
    pub exhaustive: bool,
    pub subsets_checked: usize,
    pub passed: bool,
    pub first_failure: Option<DecodabilityFailure>,
}

/// Checks that every `q`-subset of servers jointly stores at least `m`
/// distinct coded rows spanning rank `m`.
pub fn verify_decodability(plan: &StoragePlan, opts: &VerifyOptions) -> DecodabilityReport {
    let k = plan.params.servers;
    let q = plan.params.wait_for;
    let exhaustive = binomial(k, q) <= opts.exhaustive_cap;
    let subsets: Box<dyn Iterator<Item = ServerSet>> = if exhaustive {
        Box::new(combinations(k, q))
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let picks: Vec<ServerSet> = (0..opts.samples)
            .map(|_| index::sample(&mut rng, k, q).into_iter().collect())
            .collect();
        Box::new(picks.into_iter())
    };
    let mut checked = 0;
    for subset in subsets {
        checked += 1;
        if let Some(failure) = check_subset(plan, subset) {
            return DecodabilityReport {
                exhaustive,
                subsets_checked: checked,
                passed: false,
                first_failure: Some(failure),
            };
        }
    }
    DecodabilityReport {
        exhaustive,
        subsets_checked: checked,
        passed: true,
        first_failure: None,
    }
}

fn check_subset(plan: &StoragePlan, subset: ServerSet) -> Option<DecodabilityFailure> {
    let m = plan.params.rows;
    let rows: Vec<usize> = (0..plan.coded_rows())
        .filter(|&r| !plan.row_holders[r].intersection(subset).is_empty())
        .collect();
    let rank = plan.field.mat_rank(&plan.generator.select_rows(&rows));
    (rows.len() < m || rank < m).then_some(DecodabilityFailure {
        subset,
        distinct_rows: rows.len(),
        rank,
    })
}

/// Recovers one output vector `y` (as an `m x 1` matrix) from scalars
/// `c_i · x` indexed by coded row `i`.
pub fn reduce_decode(
    plan: &StoragePlan,
    values: &[(usize, FieldElement)],
) -> Result<FieldMatrix, CodecError> {
    let rows: Vec<usize> = values.iter().map(|&(r, _)| r).collect();
    let rhs = FieldMatrix::column(values.iter().map(|&(_, v)| v).collect());
    reduce_decode_many(plan, &rows, &rhs)
}

/// Decodes several outputs that share the same coded rows: column `j` of
/// `values` holds `c_{rows[i]} · x_j` in row `i`. Returns `m x cols`.
pub fn reduce_decode_many(
    plan: &StoragePlan,
    rows: &[usize],
    values: &FieldMatrix,
) -> Result<FieldMatrix, CodecError> {
    let m = plan.params.rows;
    let total = plan.coded_rows();
    let mut seen = BTreeSet::new();
    for &r in rows {
        if r >= total {
            return Err(CodecError::UnknownRow { row: r, total });
        }
        if !seen.insert(r) {
            return Err(CodecError::DuplicateRow(r));
        }
    }
    if rows.len() < m {
        return Err(CodecError::InsufficientValues {
            got: rows.len(),
            needed: m,
        });
    }
    let g = plan.generator.select_rows(rows);
    match plan.field.solve_tall(&g, values) {
        Ok(y) => Ok(y),
        Err(GfError::Singular { rank, needed }) => Err(CodecError::RankDeficient { rank, needed }),
        Err(e) => Err(e.into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn worked() -> SchemeParams {
        SchemeParams::new(6, 4, ratio(1, 2), 20, 4, 12)
    }

    #[test]
    fn worked_layout() {
        let plan = build_storage_plan(&worked()).unwrap();
        assert_eq!(plan.coded_rows(), 30);
        assert_eq!(plan.batches().len(), 15);
        assert!(plan.batches().iter().all(|b| b.rows.len() == 2));
        for k in 0..6 {
            assert_eq!(plan.server_rows(k).len(), 10);
        }
        // server 1 (id 0) holds c_1..c_10
        assert_eq!(plan.server_rows(0), (0..10).collect::<Vec<_>>().as_slice());
        // batch {2,3} (ids {1,2}) holds c_11, c_12
        let b = plan
            .batches()
            .iter()
            .find(|b| b.servers == [1, 2].into_iter().collect())
            .unwrap();
        assert_eq!(b.rows, vec![10, 11]);
    }

    #[test]
    fn minimum_bandwidth_layout() {
        let p = SchemeParams::new(4, 4, ratio(1, 2), 12, 4, 4);
        let plan = build_storage_plan(&p).unwrap();
        assert_eq!(plan.coded_rows(), 12);
        assert_eq!(plan.batches().len(), 6);
        for b in plan.batches() {
            assert_eq!(b.rows.len(), 2);
            assert_eq!(b.servers.len(), 2);
        }
    }

    #[test]
    fn full_replication_layout() {
        let p = SchemeParams::new(3, 3, ratio(1, 1), 4, 2, 3);
        let plan = build_storage_plan(&p).unwrap();
        assert_eq!(plan.batches().len(), 1);
        for k in 0..3 {
            assert_eq!(plan.server_rows(k).len(), 4);
        }
    }

    #[test]
    fn placement_symmetry() {
        let p = SchemeParams::new(6, 5, ratio(1, 2), 25, 1, 5);
        let plan = build_storage_plan(&p).unwrap();
        let r = p.replication();
        for k in 0..6 {
            let count = plan
                .batches()
                .iter()
                .filter(|b| b.servers.contains(k))
                .count();
            assert_eq!(count as u128, binomial(5, r - 1));
            assert_eq!(plan.server_rows(k).len(), p.rows_per_server());
        }
        for row in 0..plan.coded_rows() {
            assert_eq!(plan.row_holders(row).len(), r);
        }
    }

    #[test]
    fn validation_names_the_constraint() {
        let mut p = worked();
        p.outputs = 13;
        assert_eq!(
            p.validate().unwrap_err().constraint(),
            "output-divisibility"
        );
        let mut p = worked();
        p.rows = 21;
        let err = p.validate().unwrap_err();
        assert_eq!(err.constraint(), "batch-divisibility");
        assert_eq!(
            err,
            ParamError::BatchDivisibility {
                rows: 21,
                replication: 2,
                suggested: 30
            }
        );
        let mut p = worked();
        p.wait_for = 1;
        assert_eq!(p.validate().unwrap_err().constraint(), "wait-range");
        let mut p = worked();
        p.storage = ratio(1, 7);
        assert_eq!(p.validate().unwrap_err().constraint(), "storage-range");
        let p = worked().with_field_width(4);
        assert_eq!(p.validate().unwrap_err().constraint(), "field-size");
        let p = worked().with_field_width(5);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn padded_rows_is_smallest_valid() {
        for m in 1..70 {
            let mut p = worked();
            p.rows = m;
            let padded = p.padded_rows();
            let mut q = p.clone();
            q.rows = padded;
            assert!(q.batch_size().is_some());
            for smaller in m..padded {
                q.rows = smaller;
                assert!(q.batch_size().is_none());
            }
        }
    }

    #[test]
    fn storage_matrix_of_identity_is_generator_rows() {
        let plan = build_storage_plan(&worked()).unwrap();
        let u = server_storage_matrix(&plan, 3, &FieldMatrix::identity(20)).unwrap();
        assert_eq!(u, plan.generator().select_rows(plan.server_rows(3)));
        assert_eq!(u.rows(), 10);
        assert!(matches!(
            server_storage_matrix(&plan, 6, &FieldMatrix::identity(20)),
            Err(CodecError::UnknownServer { .. })
        ));
        assert!(matches!(
            server_storage_matrix(&plan, 0, &FieldMatrix::identity(19)),
            Err(CodecError::RowMismatch { .. })
        ));
    }

    #[test]
    fn decodability_pass_and_fail() {
        let plan = build_storage_plan(&worked()).unwrap();
        let report = verify_decodability(&plan, &VerifyOptions::default());
        assert!(report.passed && report.exhaustive);
        assert_eq!(report.subsets_checked, 15);

        let tight = build_storage_plan(&SchemeParams::new(4, 4, ratio(1, 2), 12, 1, 4)).unwrap();
        let broken = tight.without_batch(0);
        let report = verify_decodability(&broken, &VerifyOptions::default());
        assert!(!report.passed);
        let failure = report.first_failure.unwrap();
        assert_eq!(failure.subset, ServerSet::first(4));
        assert_eq!(failure.distinct_rows, 10);

        let full = build_storage_plan(&SchemeParams::new(4, 1, ratio(1, 1), 3, 1, 2)).unwrap();
        assert!(verify_decodability(&full, &VerifyOptions::default()).passed);
    }

    #[test]
    fn sampled_mode_switch() {
        let plan = build_storage_plan(&worked()).unwrap();
        let opts = VerifyOptions {
            exhaustive_cap: 3,
            samples: 40,
            seed: 9,
        };
        let report = verify_decodability(&plan, &opts);
        assert!(!report.exhaustive && report.passed);
        assert_eq!(report.subsets_checked, 40);
    }

    #[test]
    fn decode_round_trip_any_m_rows() {
        let plan = build_storage_plan(&worked()).unwrap();
        let f = plan.field().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y = f.random_matrix(20, 1, &mut rng);
        let coded = f.mat_mul(plan.generator(), &y).unwrap();
        for _ in 0..20 {
            let rows = index::sample(&mut rng, 30, 20).into_vec();
            let values: Vec<_> = rows.iter().map(|&r| (r, coded[(r, 0)])).collect();
            assert_eq!(reduce_decode(&plan, &values).unwrap(), y);
        }
        let short: Vec<_> = (0..19).map(|r| (r, coded[(r, 0)])).collect();
        assert!(matches!(
            reduce_decode(&plan, &short),
            Err(CodecError::InsufficientValues {
                got: 19,
                needed: 20
            })
        ));
    }

    #[test]
    fn decode_systematic_point() {
        // point 0 gives the row [1, 0, .., 0], so c_0·x = y[0]
        let plan = build_storage_plan(&worked()).unwrap();
        assert_eq!(plan.generator().row(0)[0], FieldElement::ONE);
        assert!(plan.generator().row(0)[1..].iter().all(|x| x.is_zero()));
    }

    #[test]
    fn random_plan_is_checked() {
        let plan = build_random_plan(&worked(), 11).unwrap();
        assert!(verify_decodability(&plan, &VerifyOptions::default()).passed);
        // a random 12x12 matrix over GF(16) is singular about 7% of the time
        let tiny = SchemeParams::new(4, 4, ratio(1, 2), 12, 1, 4).with_field_width(4);
        let failure = (0..200)
            .find_map(|s| build_random_plan(&tiny, s).err())
            .expect("some seed yields a singular generator");
        assert!(matches!(
            failure,
            CodecError::NotDecodable { needed: 12, .. }
        ));
    }

    #[test]
    fn plan_json_round_trip_and_determinism() {
        let plan = build_storage_plan(&worked()).unwrap();
        let json = plan.to_json();
        assert_eq!(json, build_storage_plan(&worked()).unwrap().to_json());
        assert_eq!(StoragePlan::from_json(&json).unwrap(), plan);
        let random = build_random_plan(&worked(), 5).unwrap();
        assert_eq!(StoragePlan::from_json(&random.to_json()).unwrap(), random);
    }

    #[test]
    fn corrupted_documents_rejected() {
        let plan = build_storage_plan(&worked()).unwrap();
        let mut doc = plan.to_document();
        doc.batches[1].rows[0] = doc.batches[0].rows[0];
        assert!(matches!(
            StoragePlan::from_document(doc),
            Err(CodecError::DuplicateRow(0))
        ));
        let mut doc = plan.to_document();
        if let Construction::Vandermonde { points } = &mut doc.construction {
            points[1] = points[0];
        }
        assert!(matches!(
            StoragePlan::from_document(doc),
            Err(CodecError::InvalidPlan(_))
        ));
        let mut doc = plan.to_document();
        doc.format_version = 99;
        assert!(StoragePlan::from_document(doc).is_err());
        assert!(StoragePlan::from_json("{not json").is_err());
    }

    #[test]
    fn storage_round_trip_against_direct_product() {
        let plan = build_storage_plan(&worked()).unwrap();
        let f = plan.field().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = f.random_matrix(20, 4, &mut rng);
        let x = f.random_matrix(4, 1, &mut rng);
        let y = f.mat_mul(&a, &x).unwrap();
        // servers 0, 2, 3, 5 finish; gather all their scalars
        let mut values = Vec::new();
        for k in [0, 2, 3, 5] {
            let z = f
                .mat_mul(&server_storage_matrix(&plan, k, &a).unwrap(), &x)
                .unwrap();
            for (pos, &row) in plan.server_rows(k).iter().enumerate() {
                if !values.iter().any(|&(r, _)| r == row) {
                    values.push((row, z[(pos, 0)]));
                }
            }
        }
        assert!(values.len() >= 20);
        assert_eq!(reduce_decode(&plan, &values).unwrap(), y);
    }
}
