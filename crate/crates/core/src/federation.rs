//! The three-party mining pipeline, run inside one process.
//!
//! * The data owner encrypts its database, splits the transaction ids into
//!   one block per intermediate server and ships each block as an
//!   [`EncryptedBlockMsg`].
//! * Every intermediate server mines its block on its own thread with
//!   [`mine_local`](crate::miner::mine_local) and sends back a
//!   [`LocalReportMsg`].
//! * The computing server waits for all reports, combines the counts of each
//!   itemset across servers and derives association rules.
//! * The data owner decrypts the itemsets of the returned result.
//!
//! Reported supports are sums of capped counts, so they are lower bounds on
//! the true supports and are flagged as such.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::crypto::{CryptoError, DoubleEncryptionKey, IdentityCodec, ItemCodec};
use crate::dataset::{Transaction, TransactionDatabase};
use crate::miner::{mine_local_to_level, Itemset, LocalMiningReport, MineError};
use crate::splitter::{split, PartitionAssignment, SplitError};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregationMode {
    /// Keep every itemset some server found locally frequent.
    #[default]
    Union,
    /// Keep itemsets whose summed count reaches the global threshold.
    Sum,
}

impl fmt::Display for AggregationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AggregationMode::Union => "union",
            AggregationMode::Sum => "sum",
        })
    }
}

impl FromStr for AggregationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "union" => Ok(AggregationMode::Union),
            "sum" => Ok(AggregationMode::Sum),
            other => Err(format!("unknown aggregation mode {other:?} (expected union or sum)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub n_ics: usize,
    /// Relative minimum support in (0, 1].
    pub sigma: f64,
    pub min_conf: f64,
    pub mode: AggregationMode,
    pub key: DoubleEncryptionKey,
    pub seed: u64,
    pub n_data_owners: usize,
    /// Largest itemset size explored, unbounded when `None`.
    pub max_level: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            n_ics: 1,
            sigma: 0.5,
            min_conf: 0.5,
            mode: AggregationMode::Union,
            key: DoubleEncryptionKey::default(),
            seed: 0,
            n_data_owners: 1,
            max_level: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: String| Err(PipelineError::InvalidConfig(msg));
        if !(self.sigma > 0.0 && self.sigma <= 1.0) {
            return bad(format!("sigma must lie in (0, 1], got {}", self.sigma));
        }
        if !(self.min_conf > 0.0 && self.min_conf <= 1.0) {
            return bad(format!("min_conf must lie in (0, 1], got {}", self.min_conf));
        }
        if self.n_ics == 0 {
            return bad("number of intermediate servers must be at least 1".into());
        }
        if self.n_data_owners == 0 {
            return bad("number of data owners must be at least 1".into());
        }
        if self.max_level == Some(0) {
            return bad("max_level must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AggregateError {
    #[error("no report received from partition {0}")]
    Missing(usize),
    #[error("partition {0} reported more than once")]
    Duplicate(usize),
    #[error("report from unknown partition {0}")]
    Unknown(usize),
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("database holds no transactions")]
    EmptyDatabase,
    #[error("encrypt phase: {0}")]
    Encrypt(#[source] CryptoError),
    #[error("split phase: {0}")]
    Split(#[from] SplitError),
    #[error("mine phase, partition {partition}: {source}")]
    Mine { partition: usize, source: MineError },
    #[error("aggregate phase: {0}")]
    Aggregate(#[from] AggregateError),
    #[error("decrypt phase: {0}")]
    Decrypt(#[source] CryptoError),
}

/// `ceil(sigma * n)`, never below 1.
pub fn local_threshold(sigma: f64, n: usize) -> Result<u64, PipelineError> {
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(PipelineError::InvalidConfig(format!("sigma must lie in (0, 1], got {sigma}")));
    }
    // Guard against sigma * n landing a hair above an integer through rounding.
    let exact = sigma * n as f64;
    let rounded = exact.round();
    let threshold = if (exact - rounded).abs() < 1e-9 { rounded } else { exact.ceil() };
    Ok((threshold as u64).max(1))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncryptedBlockMsg {
    pub partition_index: usize,
    pub transactions: Vec<Transaction>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalReportMsg {
    pub report: LocalMiningReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssociationRule {
    pub antecedent: Itemset,
    pub consequent: Itemset,
    /// Support of antecedent and consequent together.
    pub support: u64,
    pub confidence: f64,
    /// Set when the supports behind the rule are capped lower bounds.
    pub approximate: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlobalMiningResult {
    pub frequent: BTreeMap<Itemset, u64>,
    pub mode: AggregationMode,
    pub global_threshold: u64,
    pub rules: Vec<AssociationRule>,
    pub supports_are_capped: bool,
    /// Candidate rules dropped because the antecedent had no support entry.
    pub rules_skipped: usize,
}

impl GlobalMiningResult {
    /// Decodes every item of every itemset and rule through `codec`. Rules
    /// are re-sorted so their order does not depend on the item encoding.
    pub fn map_items(&self, codec: &dyn ItemCodec) -> Result<GlobalMiningResult, CryptoError> {
        let decode = |s: &Itemset| s.map_items(|i| codec.decode(i));
        let frequent =
            self.frequent.iter().map(|(s, &c)| Ok((decode(s)?, c))).collect::<Result<BTreeMap<_, _>, CryptoError>>()?;
        let mut rules = self
            .rules
            .iter()
            .map(|r| {
                Ok(AssociationRule {
                    antecedent: decode(&r.antecedent)?,
                    consequent: decode(&r.consequent)?,
                    ..r.clone()
                })
            })
            .collect::<Result<Vec<_>, CryptoError>>()?;
        sort_rules(&mut rules);
        Ok(GlobalMiningResult { frequent, rules, ..self.clone() })
    }
}

fn sort_rules(rules: &mut [AssociationRule]) {
    rules.sort_by(|a, b| (&a.antecedent, &a.consequent).cmp(&(&b.antecedent, &b.consequent)));
}

/// Combines the local reports of all `n_ics` servers. Each itemset's
/// reported counts are summed; sum mode then drops itemsets below
/// `global_threshold`. Rules are left empty.
pub fn aggregate(
    reports: &[LocalReportMsg],
    n_ics: usize,
    mode: AggregationMode,
    global_threshold: u64,
) -> Result<GlobalMiningResult, AggregateError> {
    let mut seen = vec![false; n_ics];
    for msg in reports {
        let idx = msg.report.partition_index;
        match seen.get_mut(idx) {
            None => return Err(AggregateError::Unknown(idx)),
            Some(true) => return Err(AggregateError::Duplicate(idx)),
            Some(slot) => *slot = true,
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(AggregateError::Missing(missing));
    }

    let mut frequent: BTreeMap<Itemset, u64> = BTreeMap::new();
    for msg in reports {
        for (set, &count) in &msg.report.frequent {
            *frequent.entry(set.clone()).or_insert(0) += count;
        }
    }
    if mode == AggregationMode::Sum {
        frequent.retain(|_, &mut c| c >= global_threshold);
    }
    Ok(GlobalMiningResult {
        frequent,
        mode,
        global_threshold,
        rules: Vec::new(),
        supports_are_capped: true,
        rules_skipped: 0,
    })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RuleOutput {
    pub rules: Vec<AssociationRule>,
    /// Antecedents that had no support entry in the result.
    pub skipped: usize,
}

/// Emits `A -> Z \ A` for every frequent `Z` with at least two items and
/// every non-empty proper subset `A` whose confidence reaches `min_conf`.
pub fn generate_rules(result: &GlobalMiningResult, min_conf: f64) -> RuleOutput {
    let mut out = RuleOutput::default();
    for (whole, &support) in &result.frequent {
        let n = whole.len();
        if n < 2 {
            continue;
        }
        // Itemsets past 63 items would overflow the mask; none are realistic.
        assert!(n < 64, "itemset too large for rule enumeration");
        let items = whole.items();
        for mask in 1..(1u64 << n) - 1 {
            let antecedent = Itemset::new((0..n).filter(|b| mask >> b & 1 == 1).map(|b| items[b].clone()));
            let Some(&ante_support) = result.frequent.get(&antecedent) else {
                out.skipped += 1;
                continue;
            };
            let confidence = support as f64 / ante_support as f64;
            if confidence >= min_conf {
                out.rules.push(AssociationRule {
                    consequent: whole.difference(&antecedent),
                    antecedent,
                    support,
                    confidence,
                    approximate: result.supports_are_capped,
                });
            }
        }
    }
    sort_rules(&mut out.rules);
    out
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PhaseTimings {
    pub encrypt: Duration,
    pub split: Duration,
    pub mine: Duration,
    pub aggregate: Duration,
    pub decrypt: Duration,
}

impl PhaseTimings {
    /// Time spent at the data owner: encryption, splitting, decryption.
    pub fn owner(&self) -> Duration {
        self.encrypt + self.split + self.decrypt
    }

    /// Time spent in the clouds: local mining and aggregation.
    pub fn cloud(&self) -> Duration {
        self.mine + self.aggregate
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunMetrics {
    pub phases: PhaseTimings,
    pub visits_total: u64,
    pub block_sizes: Vec<usize>,
    pub block_visits: Vec<u64>,
    pub n_transactions: usize,
}

/// Data-owner side: encodes the database and cuts it into blocks.
pub fn outsource(
    db: &TransactionDatabase,
    n_ics: usize,
    seed: u64,
    codec: &dyn ItemCodec,
    timings: &mut PhaseTimings,
) -> Result<(Vec<EncryptedBlockMsg>, PartitionAssignment), PipelineError> {
    let start = Instant::now();
    let encoded: HashMap<u64, Transaction> = db
        .transactions()
        .iter()
        .map(|t| {
            let items = t.items().iter().map(|i| codec.encode(i)).collect::<Result<Vec<_>, _>>()?;
            let t = Transaction::new(t.id(), items).map_err(CryptoError::from)?;
            Ok((t.id(), t))
        })
        .collect::<Result<_, CryptoError>>()
        .map_err(PipelineError::Encrypt)?;
    timings.encrypt = start.elapsed();

    let start = Instant::now();
    let assignment = split(&db.ids(), n_ics, seed)?;
    let blocks = assignment
        .blocks()
        .iter()
        .enumerate()
        .map(|(partition_index, ids)| EncryptedBlockMsg {
            partition_index,
            transactions: ids.iter().map(|id| encoded[id].clone()).collect(),
        })
        .collect();
    timings.split = start.elapsed();
    Ok((blocks, assignment))
}

/// Intermediate-server side: mines one block with a threshold scaled to its
/// size.
pub fn mine_block(
    msg: &EncryptedBlockMsg,
    sigma: f64,
    max_level: Option<usize>,
) -> Result<LocalReportMsg, PipelineError> {
    let min_sup = local_threshold(sigma, msg.transactions.len())?;
    let mut report = mine_local_to_level(&msg.transactions, min_sup, max_level)
        .map_err(|source| PipelineError::Mine { partition: msg.partition_index, source })?;
    report.partition_index = msg.partition_index;
    Ok(LocalReportMsg { report })
}

/// Runs one server thread per block and collects the reports in arrival
/// order. Returns only after every server has replied.
pub fn mine_concurrently(
    blocks: Vec<EncryptedBlockMsg>,
    sigma: f64,
    max_level: Option<usize>,
) -> Result<Vec<LocalReportMsg>, PipelineError> {
    let n = blocks.len();
    let (tx, rx) = mpsc::channel();
    thread::scope(|scope| {
        for block in blocks {
            let tx = tx.clone();
            scope.spawn(move || {
                let _ = tx.send(mine_block(&block, sigma, max_level));
            });
        }
    });
    drop(tx);
    let reports: Vec<LocalReportMsg> = rx.into_iter().collect::<Result<_, _>>()?;
    debug_assert_eq!(reports.len(), n);
    Ok(reports)
}

/// Computing-server side: aggregates the reports of all `config.n_ics`
/// servers against the global threshold `ceil(sigma * n_transactions)` and
/// attaches the association rules.
pub fn compute_global(
    reports: &[LocalReportMsg],
    config: &PipelineConfig,
    n_transactions: usize,
) -> Result<GlobalMiningResult, PipelineError> {
    let global_threshold = local_threshold(config.sigma, n_transactions)?;
    let mut result = aggregate(reports, config.n_ics, config.mode, global_threshold)?;
    let rules = generate_rules(&result, config.min_conf);
    result.rules = rules.rules;
    result.rules_skipped = rules.skipped;
    Ok(result)
}

/// Encrypted end-to-end run for a single data owner.
pub fn run_pipeline(
    db: &TransactionDatabase,
    config: &PipelineConfig,
) -> Result<(GlobalMiningResult, RunMetrics), PipelineError> {
    run_pipeline_with_codec(db, config, &config.key)
}

/// Same pipeline with items left in plaintext.
pub fn run_pipeline_plaintext(
    db: &TransactionDatabase,
    config: &PipelineConfig,
) -> Result<(GlobalMiningResult, RunMetrics), PipelineError> {
    run_pipeline_with_codec(db, config, &IdentityCodec)
}

/// Several data owners sharing one key: their databases are concatenated
/// (ids renumbered) before splitting.
pub fn run_federation(
    owners: &[TransactionDatabase],
    config: &PipelineConfig,
) -> Result<(GlobalMiningResult, RunMetrics), PipelineError> {
    run_pipeline(&TransactionDatabase::concat(owners), config)
}

pub fn run_pipeline_with_codec(
    db: &TransactionDatabase,
    config: &PipelineConfig,
    codec: &dyn ItemCodec,
) -> Result<(GlobalMiningResult, RunMetrics), PipelineError> {
    config.validate()?;
    if db.is_empty() {
        return Err(PipelineError::EmptyDatabase);
    }
    let mut metrics = RunMetrics { n_transactions: db.len(), ..RunMetrics::default() };

    let (blocks, assignment) = outsource(db, config.n_ics, config.seed, codec, &mut metrics.phases)?;
    metrics.block_sizes = assignment.block_sizes();

    let start = Instant::now();
    let reports = mine_concurrently(blocks, config.sigma, config.max_level)?;
    metrics.phases.mine = start.elapsed();
    metrics.block_visits = vec![0; config.n_ics];
    for msg in &reports {
        metrics.block_visits[msg.report.partition_index] = msg.report.visits;
    }
    metrics.visits_total = metrics.block_visits.iter().sum();

    let start = Instant::now();
    let result = compute_global(&reports, config, db.len())?;
    metrics.phases.aggregate = start.elapsed();

    let start = Instant::now();
    let result = result.map_items(codec).map_err(PipelineError::Decrypt)?;
    metrics.phases.decrypt = start.elapsed();
    Ok((result, metrics))
}
