//! Encoding strategies: direct encoding plus four redundancy-aware variants
//! that plan unique work first, embed each unique item once, and rebuild the
//! dataset by reference.
//!
//! | strategy | granularity | embed calls |
//! |----------|-------------|-------------|
//! | DE       | cell / row  | `n*d` / `n` |
//! | ILS      | row         | unique rows |
//! | GDS      | cell        | unique values `m` |
//! | CC_ILS   | row         | sum over classes of unique rows in the class |
//! | CC_GDS   | cell        | sum over classes of unique values in the class |

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::embeddings::{Embedder, QuantumState};
use crate::error::{QencError, Result};
use crate::types::{
    dedup_key, row_key, CacheStats, DedupKey, EmbeddingSpec, FeatureMatrix, Granularity, KeyPolicy,
    StrategyKind,
};

/// Shared reference to an embedded state. Positions with equal keys hold
/// clones of the same `Arc`.
pub type StateHandle = Arc<QuantumState>;

#[derive(Debug, Clone)]
pub enum StateGrid {
    /// Row-major `rows x cols` grid of per-cell states.
    Cells {
        rows: usize,
        cols: usize,
        handles: Vec<StateHandle>,
    },
    /// One state per row.
    Rows(Vec<StateHandle>),
}

impl StateGrid {
    pub fn n_rows(&self) -> usize {
        match self {
            StateGrid::Cells { rows, .. } => *rows,
            StateGrid::Rows(h) => h.len(),
        }
    }

    pub fn handles(&self) -> &[StateHandle] {
        match self {
            StateGrid::Cells { handles, .. } => handles,
            StateGrid::Rows(h) => h,
        }
    }

    /// States making up row `i`: `cols` cell states or a single row state.
    pub fn row(&self, i: usize) -> &[StateHandle] {
        match self {
            StateGrid::Cells { cols, handles, .. } => &handles[i * cols..(i + 1) * cols],
            StateGrid::Rows(h) => std::slice::from_ref(&h[i]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassStats {
    pub class: u32,
    pub stats: CacheStats,
}

#[derive(Debug, Clone)]
pub struct EncodedDataset {
    pub granularity: Granularity,
    pub states: StateGrid,
    pub labels: Option<Vec<u32>>,
    pub stats: CacheStats,
    /// Per-class costs for the class-conditional strategies (ascending class id).
    pub class_stats: Vec<ClassStats>,
    pub strategy: StrategyKind,
    pub embedding: EmbeddingSpec,
    /// Rows encoded without class information through the global fallback
    /// cache (test-time encoding under CC strategies).
    pub fallback_rows: usize,
}

/// Optional class-parameterized transform applied to embedding inputs inside
/// the class-conditional strategies. Training-time only: unlabeled data is
/// always encoded through the class-agnostic fallback.
pub trait ClassConditioner: Send + Sync + fmt::Debug {
    fn condition(&self, class: u32, input: &[f64]) -> Vec<f64>;
}

#[derive(Debug, Clone, Default)]
pub struct EncoderOptions {
    pub policy: KeyPolicy,
    /// Embed distinct items on the rayon pool.
    pub parallel: bool,
    /// Artificial cost added to every embed call.
    pub per_call_delay: Option<Duration>,
    pub class_conditioner: Option<Arc<dyn ClassConditioner>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassPartition {
    /// Distinct labels, ascending.
    pub class_ids: Vec<u32>,
    /// Row positions per class, in matrix order.
    pub row_indices: Vec<Vec<usize>>,
}

pub fn partition_by_class(labels: &[u32]) -> ClassPartition {
    let mut buckets: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &y) in labels.iter().enumerate() {
        buckets.entry(y).or_default().push(i);
    }
    let (class_ids, row_indices) = buckets.into_iter().unzip();
    ClassPartition {
        class_ids,
        row_indices,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniqueValue {
    pub key: DedupKey,
    pub value: f64,
    pub count: usize,
}

/// Distinct values in row-major first-appearance order with occurrence counts.
pub fn unique_values(matrix: &FeatureMatrix, policy: KeyPolicy) -> Result<Vec<UniqueValue>> {
    let mut index: HashMap<DedupKey, usize> = HashMap::new();
    let mut out: Vec<UniqueValue> = Vec::new();
    for &v in matrix.values() {
        let key = dedup_key(v, policy)?;
        match index.get(&key) {
            Some(&slot) => out[slot].count += 1,
            None => {
                index.insert(key.clone(), out.len());
                out.push(UniqueValue {
                    key,
                    value: v,
                    count: 1,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowGroup {
    pub key: DedupKey,
    pub representative: usize,
    pub members: Vec<usize>,
}

/// Groups of identical rows, ordered by first appearance.
pub fn unique_rows(matrix: &FeatureMatrix, policy: KeyPolicy) -> Result<Vec<RowGroup>> {
    let mut index: HashMap<DedupKey, usize> = HashMap::new();
    let mut out: Vec<RowGroup> = Vec::new();
    for (i, row) in matrix.rows().enumerate() {
        let key = row_key(row, policy)?;
        match index.get(&key) {
            Some(&slot) => out[slot].members.push(i),
            None => {
                index.insert(key.clone(), out.len());
                out.push(RowGroup {
                    key,
                    representative: i,
                    members: vec![i],
                });
            }
        }
    }
    Ok(out)
}

/// Embedder wrapper that counts every invocation.
#[derive(Debug)]
struct CountingEmbedder {
    inner: Embedder,
    calls: AtomicU64,
    delay: Option<Duration>,
}

impl CountingEmbedder {
    fn embed(&self, input: &[f64]) -> Result<QuantumState> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        if let Some(d) = self.delay {
            std::thread::sleep(d);
        }
        self.inner.embed(input)
    }

    fn take_calls(&self) -> u64 {
        self.calls.swap(0, Ordering::Relaxed)
    }
}

/// One encode request: a cell or a row.
struct Request {
    row: usize,
    column: Option<usize>,
    input: Vec<f64>,
    class: Option<u32>,
}

type Table = HashMap<DedupKey, StateHandle>;

fn requests_for(matrix: &FeatureMatrix, granularity: Granularity, rows: &[usize]) -> Vec<Request> {
    match granularity {
        Granularity::Row => rows
            .iter()
            .map(|&i| Request {
                row: i,
                column: None,
                input: matrix.row(i).to_vec(),
                class: None,
            })
            .collect(),
        Granularity::Cell => rows
            .iter()
            .flat_map(|&i| {
                matrix
                    .row(i)
                    .iter()
                    .enumerate()
                    .map(move |(j, &v)| Request {
                        row: i,
                        column: Some(j),
                        input: vec![v],
                        class: None,
                    })
            })
            .collect(),
    }
}

fn key_of(req: &Request, policy: KeyPolicy) -> Result<DedupKey> {
    match req.column {
        Some(_) => dedup_key(req.input[0], policy),
        None => row_key(&req.input, policy),
    }
}

/// Planning and memoization engine shared by every strategy.
#[derive(Debug)]
pub struct Encoder {
    spec: EmbeddingSpec,
    strategy: StrategyKind,
    options: EncoderOptions,
    embedder: Option<CountingEmbedder>,
    width: usize,
    /// ILS/GDS cache, and the class-agnostic fallback for CC strategies.
    global: Table,
    class_tables: BTreeMap<u32, Table>,
}

impl Encoder {
    pub fn new(
        spec: EmbeddingSpec,
        strategy: StrategyKind,
        options: EncoderOptions,
    ) -> Result<Self> {
        spec.validate()?;
        strategy.check_granularity(spec.granularity)?;
        Ok(Self {
            spec,
            strategy,
            options,
            embedder: None,
            width: 0,
            global: Table::new(),
            class_tables: BTreeMap::new(),
        })
    }

    pub fn strategy(&self) -> StrategyKind {
        self.strategy
    }

    pub fn spec(&self) -> &EmbeddingSpec {
        &self.spec
    }

    /// Number of states held in the class-agnostic cache.
    pub fn cached_states(&self) -> usize {
        self.global.len()
    }

    /// Encodes a training matrix from empty caches. Class-conditional
    /// strategies require labels.
    pub fn fit_encode(&mut self, matrix: &FeatureMatrix) -> Result<EncodedDataset> {
        let start = Instant::now();
        let labels = if self.strategy.is_class_conditional() {
            Some(matrix.require_labels(self.strategy.name())?)
        } else {
            None
        };
        self.width = matrix.n_cols();
        self.embedder = Some(CountingEmbedder {
            inner: Embedder::new(&self.spec, matrix.n_cols())?,
            calls: AtomicU64::new(0),
            delay: self.options.per_call_delay,
        });
        self.global.clear();
        self.class_tables.clear();

        let all_rows: Vec<usize> = (0..matrix.n_rows()).collect();
        let (handles, mut stats, class_stats) = match (self.strategy, labels) {
            (StrategyKind::Direct, _) => {
                let (h, s) = self.resolve(matrix, &all_rows, None, None)?;
                (h, s, Vec::new())
            }
            (StrategyKind::InstanceLevel | StrategyKind::GlobalDiscrete, _) => {
                let mut table = std::mem::take(&mut self.global);
                let result = self.resolve(matrix, &all_rows, Some(&mut table), None);
                self.global = table;
                let (h, s) = result?;
                (h, s, Vec::new())
            }
            (_, Some(labels)) => self.fit_class_conditional(matrix, labels)?,
            (_, None) => unreachable!("labels checked above"),
        };
        stats.wall_seconds = start.elapsed().as_secs_f64();
        Ok(self.assemble(matrix, handles, stats, class_stats, 0))
    }

    fn fit_class_conditional(
        &mut self,
        matrix: &FeatureMatrix,
        labels: &[u32],
    ) -> Result<(Vec<StateHandle>, CacheStats, Vec<ClassStats>)> {
        let partition = partition_by_class(labels);
        let total = match self.spec.granularity {
            Granularity::Row => matrix.n_rows(),
            Granularity::Cell => matrix.n_rows() * matrix.n_cols(),
        };
        let mut slots: Vec<Option<StateHandle>> = vec![None; total];
        let mut stats = CacheStats::default();
        let mut class_stats = Vec::with_capacity(partition.class_ids.len());
        for (&class, rows) in partition.class_ids.iter().zip(&partition.row_indices) {
            let mut table = Table::new();
            let (handles, s) = self.resolve(matrix, rows, Some(&mut table), Some(class))?;
            for (pos, h) in self
                .positions(rows, matrix.n_cols())
                .into_iter()
                .zip(handles)
            {
                slots[pos] = Some(h);
            }
            stats.absorb(&s);
            class_stats.push(ClassStats { class, stats: s });
            self.class_tables.insert(class, table);
        }
        // Seed the fallback only when class states are class-agnostic.
        if self.options.class_conditioner.is_none() {
            for table in self.class_tables.values() {
                for (k, h) in table {
                    self.global.entry(k.clone()).or_insert_with(|| h.clone());
                }
            }
        }
        let handles = slots
            .into_iter()
            .map(|h| h.expect("class partition covers every position"))
            .collect();
        Ok((handles, stats, class_stats))
    }

    fn positions(&self, rows: &[usize], cols: usize) -> Vec<usize> {
        match self.spec.granularity {
            Granularity::Row => rows.to_vec(),
            Granularity::Cell => rows
                .iter()
                .flat_map(|&i| (0..cols).map(move |j| i * cols + j))
                .collect(),
        }
    }

    /// Encodes new (e.g. held-out) data reusing the fitted caches. Unseen
    /// items are embedded on demand and added to the cache; CC strategies
    /// use the class-agnostic fallback and ignore labels.
    pub fn transform(&mut self, matrix: &FeatureMatrix) -> Result<EncodedDataset> {
        let start = Instant::now();
        if self.embedder.is_none() {
            return Err(QencError::Config(
                "encoder must be fitted before transform".into(),
            ));
        }
        if matrix.n_cols() != self.width {
            return Err(QencError::Validation(format!(
                "encoder fitted on {} columns, got {}",
                self.width,
                matrix.n_cols()
            )));
        }
        let rows: Vec<usize> = (0..matrix.n_rows()).collect();
        let (handles, mut stats) = if self.strategy == StrategyKind::Direct {
            self.resolve(matrix, &rows, None, None)?
        } else {
            let mut table = std::mem::take(&mut self.global);
            let result = self.resolve(matrix, &rows, Some(&mut table), None);
            self.global = table;
            result?
        };
        stats.wall_seconds = start.elapsed().as_secs_f64();
        let fallback = if self.strategy.is_class_conditional() {
            matrix.n_rows()
        } else {
            0
        };
        Ok(self.assemble(matrix, handles, stats, Vec::new(), fallback))
    }

    fn assemble(
        &self,
        matrix: &FeatureMatrix,
        handles: Vec<StateHandle>,
        stats: CacheStats,
        class_stats: Vec<ClassStats>,
        fallback_rows: usize,
    ) -> EncodedDataset {
        let states = match self.spec.granularity {
            Granularity::Cell => StateGrid::Cells {
                rows: matrix.n_rows(),
                cols: matrix.n_cols(),
                handles,
            },
            Granularity::Row => StateGrid::Rows(handles),
        };
        EncodedDataset {
            granularity: self.spec.granularity,
            states,
            labels: matrix.labels().map(<[u32]>::to_vec),
            stats,
            class_stats,
            strategy: self.strategy,
            embedding: self.spec.clone(),
            fallback_rows,
        }
    }

    /// Resolves the requests for `rows`, returning handles in request order.
    /// With `table == None` every request is embedded (direct encoding).
    fn resolve(
        &self,
        matrix: &FeatureMatrix,
        rows: &[usize],
        table: Option<&mut Table>,
        class: Option<u32>,
    ) -> Result<(Vec<StateHandle>, CacheStats)> {
        let embedder = self
            .embedder
            .as_ref()
            .expect("embedder built before resolve");
        let granularity = self.spec.granularity;
        let mut requests = requests_for(matrix, granularity, rows);
        for r in &mut requests {
            r.class = class;
        }
        let n_requests = requests.len() as u64;

        let conditioner = self.options.class_conditioner.as_deref();
        let embed_one = |req: &Request| -> Result<StateHandle> {
            let state = match (conditioner, req.class) {
                (Some(c), Some(class)) => embedder.embed(&c.condition(class, &req.input)),
                _ => embedder.embed(&req.input),
            };
            state.map(Arc::new).map_err(|e| QencError::Embedding {
                row: req.row,
                column: req.column,
                source: Box::new(e),
            })
        };
        let embed_all = |reqs: &[&Request]| -> Result<Vec<StateHandle>> {
            if self.options.parallel {
                reqs.par_iter().map(|r| embed_one(r)).collect()
            } else {
                reqs.iter().map(|r| embed_one(r)).collect()
            }
        };

        embedder.take_calls();
        let (handles, unique_keys) = match table {
            None => {
                let refs: Vec<&Request> = requests.iter().collect();
                (embed_all(&refs)?, 0)
            }
            Some(table) => {
                // Plan: existing entries resolve immediately, new keys get a
                // pending slot in first-appearance order.
                enum Plan {
                    Ready(StateHandle),
                    Pending(usize),
                }
                let mut pending_index: HashMap<DedupKey, usize> = HashMap::new();
                let mut pending: Vec<(DedupKey, &Request)> = Vec::new();
                let mut plan = Vec::with_capacity(requests.len());
                for req in &requests {
                    let key =
                        key_of(req, self.options.policy).map_err(|e| QencError::Embedding {
                            row: req.row,
                            column: req.column,
                            source: Box::new(e),
                        })?;
                    if let Some(h) = table.get(&key) {
                        plan.push(Plan::Ready(h.clone()));
                    } else if let Some(&p) = pending_index.get(&key) {
                        plan.push(Plan::Pending(p));
                    } else {
                        pending_index.insert(key.clone(), pending.len());
                        plan.push(Plan::Pending(pending.len()));
                        pending.push((key, req));
                    }
                }
                let reqs: Vec<&Request> = pending.iter().map(|(_, r)| *r).collect();
                let fresh = embed_all(&reqs)?;
                // Publish only fully constructed states.
                for ((key, _), h) in pending.iter().zip(&fresh) {
                    table.insert(key.clone(), h.clone());
                }
                let handles = plan
                    .into_iter()
                    .map(|p| match p {
                        Plan::Ready(h) => h,
                        Plan::Pending(i) => fresh[i].clone(),
                    })
                    .collect();
                (handles, pending.len() as u64)
            }
        };
        let embed_calls = embedder.take_calls();
        let stats = CacheStats {
            embed_calls,
            cache_hits: n_requests - embed_calls,
            unique_keys,
            wall_seconds: 0.0,
            cells_total: (rows.len() * matrix.n_cols()) as u64,
            rows_total: rows.len() as u64,
        };
        debug_assert_eq!(handles.len(), requests.len());
        Ok((handles, stats))
    }
}

/// Encodes with the given strategy using default options.
pub fn encode(
    matrix: &FeatureMatrix,
    spec: &EmbeddingSpec,
    strategy: StrategyKind,
) -> Result<EncodedDataset> {
    encode_with(matrix, spec, strategy, EncoderOptions::default())
}

pub fn encode_with(
    matrix: &FeatureMatrix,
    spec: &EmbeddingSpec,
    strategy: StrategyKind,
    options: EncoderOptions,
) -> Result<EncodedDataset> {
    Encoder::new(spec.clone(), strategy, options)?.fit_encode(matrix)
}

/// One embedding per cell or per row, no reuse.
pub fn encode_direct(matrix: &FeatureMatrix, spec: &EmbeddingSpec) -> Result<EncodedDataset> {
    encode(matrix, spec, StrategyKind::Direct)
}

/// One embedding per distinct row.
pub fn encode_ils(matrix: &FeatureMatrix, spec: &EmbeddingSpec) -> Result<EncodedDataset> {
    encode(matrix, spec, StrategyKind::InstanceLevel)
}

/// One embedding per distinct value across the whole matrix.
pub fn encode_gds(matrix: &FeatureMatrix, spec: &EmbeddingSpec) -> Result<EncodedDataset> {
    encode(matrix, spec, StrategyKind::GlobalDiscrete)
}

/// One embedding per distinct row within each class.
pub fn encode_cc_ils(matrix: &FeatureMatrix, spec: &EmbeddingSpec) -> Result<EncodedDataset> {
    encode(matrix, spec, StrategyKind::ClassInstanceLevel)
}

/// One embedding per distinct value within each class.
pub fn encode_cc_gds(matrix: &FeatureMatrix, spec: &EmbeddingSpec) -> Result<EncodedDataset> {
    encode(matrix, spec, StrategyKind::ClassGlobalDiscrete)
}
