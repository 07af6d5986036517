//! Federated frequent-itemset mining over encrypted, horizontally split
//! transaction data.
//!
//! A data owner encrypts its baskets with a deterministic double cipher,
//! deals the transactions at random to `N` intermediate servers, each server
//! mines its block with an early-stopping Apriori, and a computing server
//! combines the local results into global frequent itemsets and association
//! rules.
//!
//! ```
//! use fedarm_core::{parse_basket_file, run_pipeline, Itemset, PipelineConfig};
//!
//! let db = parse_basket_file(b"a b c\na b\na c\nb\n").unwrap();
//! let (result, _metrics) = run_pipeline(&db, &PipelineConfig::default()).unwrap();
//! assert!(result.frequent.contains_key(&Itemset::of(&["a", "b"])));
//! ```

pub mod crypto;
pub mod dataset;
pub mod experiment;
pub mod federation;
pub mod miner;
pub mod report;
pub mod splitter;

pub use crypto::{
    caesar_decrypt, caesar_encrypt, decrypt_database, decrypt_item, encrypt_database, encrypt_item, stream_xor,
    CipherItem, CryptoError, DoubleEncryptionKey, IdentityCodec, ItemCodec,
};
pub use dataset::{
    db_stats, generate_synthetic, parse_basket_file, DatasetError, DatasetStats, Item, Transaction, TransactionDatabase,
};
pub use experiment::{dispersion, run_bench, BenchData, BenchGrid, BenchReport, BenchRow, DispersionReport};
pub use federation::{
    aggregate, generate_rules, local_threshold, run_federation, run_pipeline, run_pipeline_plaintext, AggregationMode,
    AssociationRule, GlobalMiningResult, LocalReportMsg, PipelineConfig, PipelineError, RunMetrics,
};
pub use miner::{
    apri_gene, classic_apriori, classic_apriori_to_level, count_capped, locate_freq_1_itemsets, mine_local,
    mine_local_to_level, ExactMiningResult, Itemset, LocalMiningReport, MineError,
};
pub use splitter::{split, PartitionAssignment, SplitError};
