//! Benchmark grid and frequency-dispersion measurements.
//!
//! Bench rows compare the federated pipeline against exact Apriori. Visit
//! counts are the asserted work metric: `visits_classic` reruns uncapped
//! Apriori on exactly the blocks and local thresholds the servers saw, so
//! `visits_customized <= visits_classic` isolates the saving from capped
//! counting. `visits_oracle` is the whole-database Apriori run that also
//! supplies the exact itemsets. Wall-clock columns are recorded for plotting
//! only.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::crypto::{encrypt_database, CryptoError, DoubleEncryptionKey};
use crate::dataset::{generate_synthetic, DatasetError, Transaction, TransactionDatabase};
use crate::federation::{local_threshold, run_pipeline, AggregationMode, PipelineConfig, PipelineError};
use crate::miner::{classic_apriori_to_level, Itemset, MineError};
use crate::report::REPORT_VERSION;
use crate::splitter::{split, SplitError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("bench grid has an empty axis: {0}")]
    EmptyGrid(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

/// Where bench databases come from.
#[derive(Clone, Debug)]
pub enum BenchData {
    /// Fresh synthetic baskets for every `(t, n_transactions)` cell.
    Synthetic { n_items: usize, max_len: usize },
    /// One fixed database; `n_transactions` on the grid is ignored and the
    /// rows are dealt to owners in contiguous chunks.
    Fixed(TransactionDatabase),
}

#[derive(Clone, Debug)]
pub struct BenchGrid {
    pub owners: Vec<usize>,
    pub ics: Vec<usize>,
    pub sigmas: Vec<f64>,
    pub n_transactions: Vec<usize>,
    pub data: BenchData,
    pub mode: AggregationMode,
    pub min_conf: f64,
    pub key: DoubleEncryptionKey,
    pub seed: u64,
    pub max_level: Option<usize>,
    /// Timing repetitions per cell; the median is reported.
    pub repeats: usize,
}

impl Default for BenchGrid {
    fn default() -> Self {
        BenchGrid {
            owners: vec![1],
            ics: vec![1, 2, 4],
            sigmas: vec![0.1],
            n_transactions: vec![1000],
            data: BenchData::Synthetic { n_items: 20, max_len: 10 },
            mode: AggregationMode::Union,
            min_conf: 0.5,
            key: DoubleEncryptionKey::default(),
            seed: 0,
            max_level: None,
            repeats: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub t: usize,
    pub c: usize,
    pub sigma: f64,
    pub n_transactions: usize,
    pub mode: AggregationMode,
    pub visits_customized: u64,
    pub visits_classic: u64,
    pub visits_oracle: u64,
    pub wall_ms_pipeline: f64,
    pub wall_ms_mine: f64,
    pub wall_ms_owner: f64,
    pub wall_ms_cloud: f64,
    pub wall_ms_oracle: f64,
    pub itemsets_found: usize,
    pub itemsets_exact: usize,
    pub recall_vs_exact: f64,
    pub precision_vs_exact: f64,
    pub error: String,
}

impl BenchRow {
    fn failed(t: usize, c: usize, sigma: f64, n: usize, mode: AggregationMode, error: String) -> Self {
        BenchRow {
            t,
            c,
            sigma,
            n_transactions: n,
            mode,
            visits_customized: 0,
            visits_classic: 0,
            visits_oracle: 0,
            wall_ms_pipeline: 0.0,
            wall_ms_mine: 0.0,
            wall_ms_owner: 0.0,
            wall_ms_cloud: 0.0,
            wall_ms_oracle: 0.0,
            itemsets_found: 0,
            itemsets_exact: 0,
            recall_vs_exact: 0.0,
            precision_vs_exact: 0.0,
            error,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    /// Rows that broke an invariant or failed outright, one message each.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for r in &self.rows {
            let cell = format!("t={} c={} sigma={} n={}", r.t, r.c, r.sigma, r.n_transactions);
            if !r.error.is_empty() {
                out.push(format!("{cell}: {}", r.error));
                continue;
            }
            if r.visits_customized > r.visits_classic {
                out.push(format!("{cell}: visits {} exceed classic {}", r.visits_customized, r.visits_classic));
            }
            if r.mode == AggregationMode::Union && r.recall_vs_exact != 1.0 {
                out.push(format!("{cell}: union-mode recall {}", r.recall_vs_exact));
            }
            if r.mode == AggregationMode::Sum && r.precision_vs_exact != 1.0 {
                out.push(format!("{cell}: sum-mode precision {}", r.precision_vs_exact));
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).expect("row serializes");
        }
        if self.rows.is_empty() {
            return String::new();
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv")
    }
}

fn median(mut xs: Vec<Duration>) -> f64 {
    xs.sort_unstable();
    xs.get(xs.len() / 2).map_or(0.0, |d| d.as_secs_f64() * 1e3)
}

/// Recall and precision of `found` against `exact`; an empty reference set
/// scores 1.0.
pub fn recall_precision(found: &BTreeSet<&Itemset>, exact: &BTreeSet<&Itemset>) -> (f64, f64) {
    let hit = found.intersection(exact).count() as f64;
    let recall = if exact.is_empty() { 1.0 } else { hit / exact.len() as f64 };
    let precision = if found.is_empty() { 1.0 } else { hit / found.len() as f64 };
    (recall, precision)
}

fn owner_databases(
    data: &BenchData,
    t: usize,
    n: usize,
    seed: u64,
) -> Result<Vec<TransactionDatabase>, ExperimentError> {
    match data {
        BenchData::Synthetic { n_items, max_len } => (0..t)
            .map(|k| {
                let share = n / t + usize::from(k < n % t);
                let owner_seed = seed ^ (t as u64) << 48 ^ (n as u64) << 16 ^ k as u64;
                Ok(generate_synthetic(share.max(1), *n_items, *max_len, owner_seed)?)
            })
            .collect(),
        BenchData::Fixed(db) => {
            let rows = db.transactions();
            let chunk = rows.len().div_ceil(t).max(1);
            rows.chunks(chunk).map(|c| Ok(TransactionDatabase::new(c.to_vec())?)).collect()
        }
    }
}

/// Visits of uncapped Apriori over the same partition the pipeline mines.
/// Full scans neither depend on row order nor on the (bijective) item
/// encoding, so the plaintext blocks give the same count as the encrypted
/// ones.
fn classic_block_visits(
    db: &TransactionDatabase,
    c: usize,
    sigma: f64,
    grid: &BenchGrid,
) -> Result<u64, PipelineError> {
    let by_id: HashMap<u64, &Transaction> = db.transactions().iter().map(|t| (t.id(), t)).collect();
    let assignment = split(&db.ids(), c, grid.seed)?;
    let mut visits = 0;
    for (partition, ids) in assignment.blocks().iter().enumerate() {
        let block: Vec<Transaction> = ids.iter().map(|id| by_id[id].clone()).collect();
        let min_sup = local_threshold(sigma, block.len())?;
        visits += classic_apriori_to_level(&block, min_sup, grid.max_level)
            .map_err(|source| PipelineError::Mine { partition, source })?
            .visits;
    }
    Ok(visits)
}

fn run_cell(
    grid: &BenchGrid,
    db: &TransactionDatabase,
    t: usize,
    c: usize,
    sigma: f64,
    exact: &BTreeSet<&Itemset>,
) -> Result<BenchRow, PipelineError> {
    let config = PipelineConfig {
        n_ics: c,
        sigma,
        min_conf: grid.min_conf,
        mode: grid.mode,
        key: grid.key,
        seed: grid.seed,
        n_data_owners: t,
        max_level: grid.max_level,
    };
    let mut totals = Vec::new();
    let mut mines = Vec::new();
    let mut owners = Vec::new();
    let mut clouds = Vec::new();
    let mut last = None;
    for _ in 0..grid.repeats.max(1) {
        let start = Instant::now();
        let (result, metrics) = run_pipeline(db, &config)?;
        totals.push(start.elapsed());
        mines.push(metrics.phases.mine);
        owners.push(metrics.phases.owner());
        clouds.push(metrics.phases.cloud());
        last = Some((result, metrics));
    }
    let (result, metrics) = last.expect("at least one repeat");
    let found: BTreeSet<&Itemset> = result.frequent.keys().collect();
    let (recall, precision) = recall_precision(&found, exact);
    Ok(BenchRow {
        t,
        c,
        sigma,
        n_transactions: db.len(),
        mode: grid.mode,
        visits_customized: metrics.visits_total,
        visits_classic: classic_block_visits(db, c, sigma, grid)?,
        visits_oracle: 0,
        wall_ms_pipeline: median(totals),
        wall_ms_mine: median(mines),
        wall_ms_owner: median(owners),
        wall_ms_cloud: median(clouds),
        wall_ms_oracle: 0.0,
        itemsets_found: found.len(),
        itemsets_exact: exact.len(),
        recall_vs_exact: recall,
        precision_vs_exact: precision,
        error: String::new(),
    })
}

/// Runs every `(t, n_transactions, sigma, c)` cell. Cell failures are
/// recorded in the row and the sweep continues.
pub fn run_bench(grid: &BenchGrid) -> Result<BenchReport, ExperimentError> {
    for (axis, empty) in [
        ("owners", grid.owners.is_empty()),
        ("ics", grid.ics.is_empty()),
        ("sigma", grid.sigmas.is_empty()),
        ("n_transactions", grid.n_transactions.is_empty() && matches!(grid.data, BenchData::Synthetic { .. })),
    ] {
        if empty {
            return Err(ExperimentError::EmptyGrid(axis));
        }
    }
    let sizes = match grid.data {
        BenchData::Synthetic { .. } => grid.n_transactions.clone(),
        BenchData::Fixed(ref db) => vec![db.len()],
    };
    let mut rows = Vec::new();
    for &t in &grid.owners {
        for &n in &sizes {
            let db = match owner_databases(&grid.data, t.max(1), n, grid.seed) {
                Ok(parts) => TransactionDatabase::concat(&parts),
                Err(e) => {
                    for &sigma in &grid.sigmas {
                        for &c in &grid.ics {
                            rows.push(BenchRow::failed(t, c, sigma, n, grid.mode, e.to_string()));
                        }
                    }
                    continue;
                }
            };
            for &sigma in &grid.sigmas {
                let oracle = local_threshold(sigma, db.len()).and_then(|min_sup| {
                    let mut times = Vec::new();
                    let mut out = None;
                    for _ in 0..grid.repeats.max(1) {
                        let start = Instant::now();
                        let r = classic_apriori_to_level(db.transactions(), min_sup, grid.max_level)
                            .map_err(|source: MineError| PipelineError::Mine { partition: 0, source })?;
                        times.push(start.elapsed());
                        out = Some(r);
                    }
                    Ok((out.expect("at least one repeat"), median(times)))
                });
                let (exact, oracle_ms) = match oracle {
                    Ok(v) => v,
                    Err(e) => {
                        for &c in &grid.ics {
                            rows.push(BenchRow::failed(t, c, sigma, db.len(), grid.mode, e.to_string()));
                        }
                        continue;
                    }
                };
                let exact_sets: BTreeSet<&Itemset> = exact.frequent.keys().collect();
                for &c in &grid.ics {
                    let row = match run_cell(grid, &db, t, c, sigma, &exact_sets) {
                        Ok(row) => BenchRow { visits_oracle: exact.visits, wall_ms_oracle: oracle_ms, ..row },
                        Err(e) => BenchRow::failed(t, c, sigma, db.len(), grid.mode, e.to_string()),
                    };
                    rows.push(row);
                }
            }
        }
    }
    Ok(BenchReport { rows })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockFrequencies {
    pub index: usize,
    pub size: usize,
    /// Cipher item (hex) to count within the block.
    pub counts: BTreeMap<String, u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DispersionReport {
    pub format: &'static str,
    pub version: u32,
    pub n_ics: usize,
    pub seed: u64,
    pub n_seeds: usize,
    pub n_transactions: usize,
    /// Cipher item (hex) to count over the whole database.
    pub global_counts: BTreeMap<String, u64>,
    /// Per-block tables for the first seed.
    pub blocks: Vec<BlockFrequencies>,
    /// Largest `|block count / global count - 1/N|` for the first seed.
    pub max_abs_deviation: f64,
    /// The same statistic averaged over all seeds.
    pub mean_max_abs_deviation: f64,
    /// Per block, each item's share of its global count averaged over seeds.
    pub mean_share: Vec<BTreeMap<String, f64>>,
    /// Largest `|mean share - 1/N|`.
    pub max_mean_share_deviation: f64,
}

impl DispersionReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Encrypts `db`, splits it under `n_seeds` consecutive seeds starting at
/// `seed` and measures how far each block's item counts stray from an even
/// `1/N` share.
pub fn dispersion(
    db: &TransactionDatabase,
    key: &DoubleEncryptionKey,
    n_ics: usize,
    seed: u64,
    n_seeds: usize,
) -> Result<DispersionReport, ExperimentError> {
    if n_seeds == 0 {
        return Err(ExperimentError::InvalidParameter("at least one seed is required".into()));
    }
    let enc = encrypt_database(db, key)?;
    let rows: BTreeMap<u64, Vec<String>> = enc
        .transactions()
        .iter()
        .map(|t| (t.id(), t.items().iter().map(|i| hex::encode(i.as_bytes())).collect()))
        .collect();
    let mut global_counts: BTreeMap<String, u64> = BTreeMap::new();
    for items in rows.values() {
        for i in items {
            *global_counts.entry(i.clone()).or_insert(0) += 1;
        }
    }
    let even = 1.0 / n_ics as f64;
    let ids = enc.ids();

    let mut first_blocks = Vec::new();
    let mut first_dev = 0.0;
    let mut dev_sum = 0.0;
    let mut share_sum: Vec<BTreeMap<String, f64>> = vec![BTreeMap::new(); n_ics];
    for k in 0..n_seeds {
        let s = seed.wrapping_add(k as u64);
        let assignment = split(&ids, n_ics, s)?;
        let mut max_dev: f64 = 0.0;
        for (index, block) in assignment.blocks().iter().enumerate() {
            let mut counts: BTreeMap<String, u64> = BTreeMap::new();
            for id in block {
                for i in &rows[id] {
                    *counts.entry(i.clone()).or_insert(0) += 1;
                }
            }
            for (item, &g) in &global_counts {
                let share = counts.get(item).copied().unwrap_or(0) as f64 / g as f64;
                max_dev = max_dev.max((share - even).abs());
                *share_sum[index].entry(item.clone()).or_insert(0.0) += share;
            }
            if k == 0 {
                first_blocks.push(BlockFrequencies { index, size: block.len(), counts });
            }
        }
        if k == 0 {
            first_dev = max_dev;
        }
        dev_sum += max_dev;
    }
    let mean_share: Vec<BTreeMap<String, f64>> =
        share_sum.into_iter().map(|m| m.into_iter().map(|(i, s)| (i, s / n_seeds as f64)).collect()).collect();
    let max_mean_share_deviation =
        mean_share.iter().flat_map(|m| m.values()).fold(0.0f64, |acc, &s| acc.max((s - even).abs()));
    Ok(DispersionReport {
        format: "fedarm-dispersion-report",
        version: REPORT_VERSION,
        n_ics,
        seed,
        n_seeds,
        n_transactions: db.len(),
        global_counts,
        blocks: first_blocks,
        max_abs_deviation: first_dev,
        mean_max_abs_deviation: dev_sum / n_seeds as f64,
        mean_share,
        max_mean_share_deviation,
    })
}
