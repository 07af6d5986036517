//! Test-only helpers: an exhaustive support oracle and seeded random
//! databases. Nothing here calls into the miners.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use fedarm_core::{Item, Itemset, Transaction, TransactionDatabase};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every itemset over the database's distinct items with support at least
/// `min_sup`, found by enumerating the full powerset and scanning every
/// transaction for every subset.
pub fn powerset_frequent(transactions: &[Transaction], min_sup: u64) -> BTreeMap<Itemset, u64> {
    let items: Vec<Item> =
        transactions.iter().flat_map(|t| t.items().iter().cloned()).collect::<BTreeSet<_>>().into_iter().collect();
    assert!(items.len() <= 16, "powerset oracle limited to 16 items");
    let mut out = BTreeMap::new();
    for mask in 1u32..(1 << items.len()) {
        let subset: Vec<&Item> = (0..items.len()).filter(|b| mask >> b & 1 == 1).map(|b| &items[b]).collect();
        let support = transactions.iter().filter(|t| subset.iter().all(|i| t.contains(i))).count() as u64;
        if support >= min_sup {
            out.insert(Itemset::new(subset.into_iter().cloned()), support);
        }
    }
    out
}

/// Exact support of one itemset by direct scan.
pub fn support(transactions: &[Transaction], set: &Itemset) -> u64 {
    transactions.iter().filter(|t| set.items().iter().all(|i| t.contains(i))).count() as u64
}

/// `ceil(sigma * n)` in exact rational arithmetic for sigmas that are
/// multiples of 1/100.
pub fn threshold_exact(sigma_percent: u64, n: usize) -> u64 {
    ((sigma_percent * n as u64).div_ceil(100)).max(1)
}

/// Baskets where item `i` appears independently with its own probability,
/// giving skewed, correlated-looking data with deep frequent itemsets.
pub fn skewed_db(seed: u64, max_tx: usize, max_items: usize) -> TransactionDatabase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_tx = rng.random_range(1..=max_tx);
    let n_items = rng.random_range(1..=max_items);
    let probs: Vec<f64> = (0..n_items).map(|_| rng.random_range(0.05..0.95)).collect();
    let baskets: Vec<Vec<String>> = (0..n_tx)
        .map(|_| {
            let mut basket: Vec<String> =
                (0..n_items).filter(|&i| rng.random_bool(probs[i])).map(|i| format!("i{i:02}")).collect();
            if basket.is_empty() {
                basket.push(format!("i{:02}", rng.random_range(0..n_items)));
            }
            basket
        })
        .collect();
    TransactionDatabase::from_baskets(baskets).unwrap()
}

pub fn keys(map: &BTreeMap<Itemset, u64>) -> BTreeSet<Itemset> {
    map.keys().cloned().collect()
}
