//! Shared fixtures for the criterion benches.

use fedarm_core::{generate_synthetic, TransactionDatabase};

/// Synthetic baskets sized like the bench workloads.
pub fn workload(n_tx: usize, seed: u64) -> TransactionDatabase {
    generate_synthetic(n_tx, 20, 10, seed).expect("valid synthetic parameters")
}
