//! Versioned JSON reports written by the command-line tools.
//!
//! Everything except the `phase_ms` block is a pure function of the input
//! database and the run parameters.

use std::time::Duration;

use serde::Serialize;

use crate::federation::{AggregationMode, AssociationRule, GlobalMiningResult, PipelineConfig, RunMetrics};
use crate::miner::Itemset;
use crate::splitter::PartitionAssignment;

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct PhaseMillis {
    pub encrypt: f64,
    pub split: f64,
    pub mine: f64,
    pub aggregate: f64,
    pub decrypt: f64,
    pub owner: f64,
    pub cloud: f64,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

#[derive(Debug, Serialize)]
pub struct FrequentEntry<'a> {
    pub items: &'a Itemset,
    pub support: u64,
}

#[derive(Debug, Serialize)]
pub struct MiningReport<'a> {
    pub format: &'static str,
    pub version: u32,
    pub mode: AggregationMode,
    pub sigma: f64,
    pub min_conf: f64,
    pub n_ics: usize,
    pub n_data_owners: usize,
    pub seed: u64,
    pub max_level: Option<usize>,
    pub n_transactions: usize,
    pub global_threshold: u64,
    pub supports_are_capped: bool,
    pub frequent_itemsets: Vec<FrequentEntry<'a>>,
    pub rules: &'a [AssociationRule],
    pub rules_skipped: usize,
    pub visits_total: u64,
    pub block_sizes: &'a [usize],
    pub block_visits: &'a [u64],
    pub phase_ms: PhaseMillis,
}

impl<'a> MiningReport<'a> {
    pub fn new(config: &PipelineConfig, result: &'a GlobalMiningResult, metrics: &'a RunMetrics) -> Self {
        let mut frequent_itemsets: Vec<FrequentEntry<'a>> =
            result.frequent.iter().map(|(items, &support)| FrequentEntry { items, support }).collect();
        frequent_itemsets.sort_by(|a, b| (a.items.len(), a.items).cmp(&(b.items.len(), b.items)));
        let p = &metrics.phases;
        MiningReport {
            format: "fedarm-mining-report",
            version: REPORT_VERSION,
            mode: result.mode,
            sigma: config.sigma,
            min_conf: config.min_conf,
            n_ics: config.n_ics,
            n_data_owners: config.n_data_owners,
            seed: config.seed,
            max_level: config.max_level,
            n_transactions: metrics.n_transactions,
            global_threshold: result.global_threshold,
            supports_are_capped: result.supports_are_capped,
            frequent_itemsets,
            rules: &result.rules,
            rules_skipped: result.rules_skipped,
            visits_total: metrics.visits_total,
            block_sizes: &metrics.block_sizes,
            block_visits: &metrics.block_visits,
            phase_ms: PhaseMillis {
                encrypt: ms(p.encrypt),
                split: ms(p.split),
                mine: ms(p.mine),
                aggregate: ms(p.aggregate),
                decrypt: ms(p.decrypt),
                owner: ms(p.owner()),
                cloud: ms(p.cloud()),
            },
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Serialize)]
pub struct BlockSummary<'a> {
    pub index: usize,
    pub size: usize,
    pub min_id: Option<u64>,
    pub max_id: Option<u64>,
    pub ids: &'a [u64],
}

#[derive(Debug, Serialize)]
pub struct SplitReport<'a> {
    pub format: &'static str,
    pub version: u32,
    pub seed: u64,
    pub n_ics: usize,
    pub n_transactions: usize,
    pub blocks: Vec<BlockSummary<'a>>,
}

impl<'a> SplitReport<'a> {
    pub fn new(assignment: &'a PartitionAssignment) -> Self {
        let blocks = assignment
            .blocks()
            .iter()
            .enumerate()
            .map(|(index, ids)| BlockSummary {
                index,
                size: ids.len(),
                min_id: ids.iter().copied().min(),
                max_id: ids.iter().copied().max(),
                ids,
            })
            .collect();
        SplitReport {
            format: "fedarm-split-report",
            version: REPORT_VERSION,
            seed: assignment.seed(),
            n_ics: assignment.n_blocks(),
            n_transactions: assignment.block_sizes().iter().sum(),
            blocks,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
