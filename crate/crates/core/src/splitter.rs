//! Randomized horizontal partitioning of transaction ids.
//!
//! Each block is filled by repeatedly drawing a uniformly random id from the
//! pool and removing it with swap-and-pop. The next pool is the ordered
//! difference between the current pool and the block just built. Blocks are
//! sized `ceil(T/N)` for the first `T mod N` servers and `floor(T/N)` for
//! the rest.
//!
//! The generator is ChaCha8 seeded from a `u64`; draws use unbiased range
//! sampling.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SplitError {
    #[error("cannot draw from an empty pool")]
    EmptyPool,
    #[error("block size {requested} exceeds pool size {available}")]
    InvalidSize { requested: usize, available: usize },
    #[error("number of servers must be at least 1")]
    NoServers,
    #[error("no transaction ids to split")]
    EmptyDatabase,
}

#[derive(Clone, Debug)]
pub struct SplitterRng(ChaCha8Rng);

impl SplitterRng {
    pub fn new(seed: u64) -> Self {
        SplitterRng(ChaCha8Rng::seed_from_u64(seed))
    }

    fn index(&mut self, len: usize) -> usize {
        self.0.random_range(0..len)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PartitionAssignment {
    blocks: Vec<Vec<u64>>,
    seed: u64,
}

impl PartitionAssignment {
    pub fn blocks(&self) -> &[Vec<u64>] {
        &self.blocks
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }
}

/// Removes and returns a uniformly chosen id. Pool order is not preserved.
pub fn draw_random_id(pool: &mut Vec<u64>, rng: &mut SplitterRng) -> Result<u64, SplitError> {
    if pool.is_empty() {
        return Err(SplitError::EmptyPool);
    }
    let index = rng.index(pool.len());
    Ok(pool.swap_remove(index))
}

/// Draws `block_size` ids without replacement. Returns the block and the
/// ids of `pool` not in it, in `pool` order.
pub fn build_block(pool: &[u64], block_size: usize, rng: &mut SplitterRng) -> Result<(Vec<u64>, Vec<u64>), SplitError> {
    if block_size > pool.len() {
        return Err(SplitError::InvalidSize { requested: block_size, available: pool.len() });
    }
    let mut work = pool.to_vec();
    let block = (0..block_size).map(|_| draw_random_id(&mut work, rng)).collect::<Result<Vec<_>, _>>()?;
    let remaining = difference_list(pool, &block);
    Ok((block, remaining))
}

/// Ids of `main` absent from `block`, in `main` order, each at most once.
pub fn difference_list(main: &[u64], block: &[u64]) -> Vec<u64> {
    let exclude: HashSet<u64> = block.iter().copied().collect();
    let mut seen = HashSet::with_capacity(main.len());
    main.iter().copied().filter(|id| !exclude.contains(id) && seen.insert(*id)).collect()
}

/// Partitions `ids` into `n_ics` near-even blocks.
pub fn split(ids: &[u64], n_ics: usize, seed: u64) -> Result<PartitionAssignment, SplitError> {
    if n_ics == 0 {
        return Err(SplitError::NoServers);
    }
    if ids.is_empty() {
        return Err(SplitError::EmptyDatabase);
    }
    let mut rng = SplitterRng::new(seed);
    let base = ids.len() / n_ics;
    let extra = ids.len() % n_ics;
    let mut pool = ids.to_vec();
    let mut blocks = Vec::with_capacity(n_ics);
    for b in 0..n_ics {
        let size = base + usize::from(b < extra);
        let (block, rest) = build_block(&pool, size, &mut rng)?;
        blocks.push(block);
        pool = rest;
    }
    debug_assert!(pool.is_empty());
    Ok(PartitionAssignment { blocks, seed })
}
