//! Frequent-itemset mining for a single partition.
//!
//! [`mine_local`] is the early-stopping Apriori run by every intermediate
//! server. Each candidate's counter stops at the support threshold
//! (saturation), a level's scan ends as soon as every candidate is
//! saturated, and transactions shorter than the current level are skipped.
//! The frequent/infrequent decision is unchanged by any of this; only the
//! reported counts become `min(support, min_sup)`.
//!
//! [`classic_apriori`] is the textbook algorithm with exact counts and full
//! scans. Both miners count one *visit* per candidate-in-transaction
//! membership test, with the block's distinct items as the level-1
//! candidates, so the two totals are directly comparable.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::dataset::{Item, Transaction};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MineError {
    #[error("support threshold must be at least 1, got {0}")]
    InvalidThreshold(u64),
    #[error("candidate generation needs itemsets of one size, found sizes {0} and {1}")]
    MixedSizes(usize, usize),
    #[error("itemsets must be non-empty")]
    EmptyItemset,
}

/// A sorted, duplicate-free set of items.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Itemset(Vec<Item>);

impl Itemset {
    pub fn new(items: impl IntoIterator<Item = Item>) -> Self {
        let mut items: Vec<Item> = items.into_iter().collect();
        items.sort_unstable();
        items.dedup();
        Itemset(items)
    }

    /// Convenience constructor for plaintext tokens. Panics on tokens that
    /// are not valid items.
    pub fn of(tokens: &[&str]) -> Self {
        Self::new(tokens.iter().map(|t| Item::new(*t).expect("valid token")))
    }

    pub fn items(&self) -> &[Item] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_subset_of(&self, other: &Itemset) -> bool {
        is_sorted_subset(&self.0, &other.0)
    }

    pub fn is_contained_in(&self, t: &Transaction) -> bool {
        is_sorted_subset(&self.0, t.items())
    }

    pub fn union(&self, other: &Itemset) -> Itemset {
        Itemset::new(self.0.iter().chain(other.0.iter()).cloned())
    }

    pub fn difference(&self, other: &Itemset) -> Itemset {
        Itemset(self.0.iter().filter(|i| other.0.binary_search(i).is_err()).cloned().collect())
    }

    pub fn map_items<E>(&self, f: impl FnMut(&Item) -> Result<Item, E>) -> Result<Itemset, E> {
        Ok(Itemset::new(self.0.iter().map(f).collect::<Result<Vec<_>, E>>()?))
    }
}

impl fmt::Debug for Itemset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, item) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{item}")?;
        }
        f.write_str("}")
    }
}

impl Serialize for Itemset {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.len()))?;
        for item in &self.0 {
            seq.serialize_element(item)?;
        }
        seq.end()
    }
}

fn is_sorted_subset<T: Ord>(needle: &[T], hay: &[T]) -> bool {
    if needle.len() > hay.len() {
        return false;
    }
    let mut hay = hay.iter();
    'outer: for x in needle {
        for y in hay.by_ref() {
            match y.cmp(x) {
                std::cmp::Ordering::Less => continue,
                std::cmp::Ordering::Equal => continue 'outer,
                std::cmp::Ordering::Greater => return false,
            }
        }
        return false;
    }
    true
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateCounter {
    pub itemset: Itemset,
    pub count: u64,
    pub saturated: bool,
}

/// Counters for one level plus the membership tests spent on them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelCount {
    pub counters: Vec<CandidateCounter>,
    pub visits: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalMiningReport {
    pub partition_index: usize,
    pub local_min_sup: u64,
    /// Locally frequent itemsets, each reported with the capped count.
    pub frequent: BTreeMap<Itemset, u64>,
    pub visits: u64,
    /// Largest itemset size found frequent (0 when nothing is).
    pub levels: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactMiningResult {
    pub frequent: BTreeMap<Itemset, u64>,
    pub visits: u64,
    pub levels: usize,
}

/// Block contents re-encoded as dense item ids. Ids follow bytewise item
/// order, so sorted id rows are sorted item rows.
struct Encoded {
    vocab: Vec<Item>,
    rows: Vec<Vec<u32>>,
}

impl Encoded {
    fn new<'a>(block: &'a [Transaction], extra: impl IntoIterator<Item = &'a Item>) -> Self {
        let mut vocab: Vec<Item> = block
            .iter()
            .flat_map(|t| t.items().iter())
            .chain(extra)
            .cloned()
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        vocab.shrink_to_fit();
        let rows =
            block.iter().map(|t| t.items().iter().map(|i| vocab.binary_search(i).unwrap() as u32).collect()).collect();
        Encoded { vocab, rows }
    }

    fn id(&self, item: &Item) -> u32 {
        self.vocab.binary_search(item).unwrap() as u32
    }

    fn encode(&self, set: &Itemset) -> Vec<u32> {
        set.items().iter().map(|i| self.id(i)).collect()
    }

    fn decode(&self, ids: &[u32]) -> Itemset {
        Itemset(ids.iter().map(|&i| self.vocab[i as usize].clone()).collect())
    }
}

fn check_threshold(min_sup: u64) -> Result<(), MineError> {
    if min_sup == 0 {
        Err(MineError::InvalidThreshold(min_sup))
    } else {
        Ok(())
    }
}

/// Level-1 pass over every distinct item of the block. Returns per-item
/// counts (capped at `cap` when given) and the membership tests spent.
///
/// Visits follow the same rule as the higher levels: each transaction costs
/// one test per candidate still being counted. Uncapped, that is every item
/// for every transaction; capped, saturated items drop out and the scan
/// stops once all of them are saturated.
fn count_singletons(enc: &Encoded, cap: Option<u64>) -> (Vec<u64>, u64) {
    let mut counts = vec![0u64; enc.vocab.len()];
    let Some(cap) = cap else {
        for row in &enc.rows {
            for &id in row {
                counts[id as usize] += 1;
            }
        }
        return (counts, (enc.rows.len() * enc.vocab.len()) as u64);
    };
    let mut open = enc.vocab.len() as u64;
    let mut visits = 0;
    for row in &enc.rows {
        if open == 0 {
            break;
        }
        visits += open;
        for &id in row {
            let c = &mut counts[id as usize];
            if *c < cap {
                *c += 1;
                if *c == cap {
                    open -= 1;
                }
            }
        }
    }
    (counts, visits)
}

fn capped_scan(rows: &[Vec<u32>], candidates: &[Vec<u32>], min_sup: u64, level: usize) -> (Vec<u64>, u64) {
    let mut counts = vec![0u64; candidates.len()];
    let mut open: Vec<usize> = (0..candidates.len()).collect();
    let mut visits = 0u64;
    for row in rows {
        if open.is_empty() {
            break;
        }
        if row.len() < level {
            continue;
        }
        open.retain(|&c| {
            visits += 1;
            if is_sorted_subset(&candidates[c], row) {
                counts[c] += 1;
                counts[c] < min_sup
            } else {
                true
            }
        });
    }
    (counts, visits)
}

fn full_scan(rows: &[Vec<u32>], candidates: &[Vec<u32>]) -> (Vec<u64>, u64) {
    let mut counts = vec![0u64; candidates.len()];
    let mut visits = 0u64;
    for row in rows {
        for (c, cand) in candidates.iter().enumerate() {
            visits += 1;
            if is_sorted_subset(cand, row) {
                counts[c] += 1;
            }
        }
    }
    (counts, visits)
}

/// Join-and-prune candidate generation over lexicographically sorted,
/// equal-size id sets.
fn generate(prev: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let Some(first) = prev.first() else {
        return Vec::new();
    };
    let k = first.len();
    let known: HashSet<&[u32]> = prev.iter().map(Vec::as_slice).collect();
    let mut out = Vec::new();
    for (i, a) in prev.iter().enumerate() {
        for b in &prev[i + 1..] {
            if a[..k - 1] != b[..k - 1] {
                // prev is sorted, so later entries cannot share the prefix either
                break;
            }
            let mut cand = a.clone();
            cand.push(b[k - 1]);
            let mut sub = Vec::with_capacity(k);
            let all_present = (0..k + 1).all(|skip| {
                sub.clear();
                sub.extend(cand.iter().enumerate().filter(|&(j, _)| j != skip).map(|(_, &x)| x));
                known.contains(sub.as_slice())
            });
            if all_present {
                out.push(cand);
            }
        }
    }
    out
}

/// Capped level-1 counting: one counter per distinct item, counting stops at
/// `min_sup`. Only saturated counters are returned, in item order.
pub fn locate_freq_1_itemsets(block: &[Transaction], min_sup: u64) -> Result<LevelCount, MineError> {
    check_threshold(min_sup)?;
    let enc = Encoded::new(block, []);
    let (counts, visits) = count_singletons(&enc, Some(min_sup));
    let counters = counts
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c == min_sup)
        .map(|(id, count)| CandidateCounter { itemset: enc.decode(&[id as u32]), count, saturated: true })
        .collect();
    Ok(LevelCount { counters, visits })
}

/// Size-`a` candidates from the frequent itemsets of size `a - 1`: join
/// pairs sharing their first `a - 2` items, then drop candidates with an
/// infrequent `(a-1)`-subset. Output is in lexicographic order.
pub fn apri_gene(prev_level: &[Itemset]) -> Result<Vec<Itemset>, MineError> {
    let Some(first) = prev_level.first() else {
        return Ok(Vec::new());
    };
    let size = first.len();
    if size == 0 {
        return Err(MineError::EmptyItemset);
    }
    if let Some(other) = prev_level.iter().find(|s| s.len() != size) {
        return Err(MineError::MixedSizes(size, other.len()));
    }
    let enc = Encoded::new(&[], prev_level.iter().flat_map(|s| s.items()));
    let mut prev: Vec<Vec<u32>> = prev_level.iter().map(|s| enc.encode(s)).collect();
    prev.sort_unstable();
    prev.dedup();
    Ok(generate(&prev).iter().map(|c| enc.decode(c)).collect())
}

/// Capped counting of size-`level` candidates over `block`, in block order.
///
/// Transactions with fewer than `level` items are skipped. A candidate stops
/// being tested once its count reaches `min_sup`, and the scan ends when no
/// unsaturated candidate is left.
pub fn count_capped(
    block: &[Transaction],
    candidates: &[Itemset],
    min_sup: u64,
    level: usize,
) -> Result<LevelCount, MineError> {
    check_threshold(min_sup)?;
    let enc = Encoded::new(block, candidates.iter().flat_map(|s| s.items()));
    let cands: Vec<Vec<u32>> = candidates.iter().map(|s| enc.encode(s)).collect();
    let (counts, visits) = capped_scan(&enc.rows, &cands, min_sup, level);
    let counters = candidates
        .iter()
        .zip(counts)
        .map(|(s, count)| CandidateCounter { itemset: s.clone(), count, saturated: count == min_sup })
        .collect();
    Ok(LevelCount { counters, visits })
}

/// Early-stopping Apriori over one block.
pub fn mine_local(block: &[Transaction], min_sup: u64) -> Result<LocalMiningReport, MineError> {
    mine_local_to_level(block, min_sup, None)
}

/// [`mine_local`] with an optional cap on itemset size.
pub fn mine_local_to_level(
    block: &[Transaction],
    min_sup: u64,
    max_level: Option<usize>,
) -> Result<LocalMiningReport, MineError> {
    check_threshold(min_sup)?;
    let enc = Encoded::new(block, []);
    let (counts, mut visits) = count_singletons(&enc, Some(min_sup));
    let mut level_sets: Vec<Vec<u32>> =
        (0..counts.len()).filter(|&id| counts[id] == min_sup).map(|id| vec![id as u32]).collect();
    let mut frequent = BTreeMap::new();
    let mut levels = 0;
    let mut level = 1;
    while !level_sets.is_empty() {
        levels = level;
        for s in &level_sets {
            frequent.insert(enc.decode(s), min_sup);
        }
        level += 1;
        if max_level.is_some_and(|m| level > m) {
            break;
        }
        let candidates = generate(&level_sets);
        let (counts, v) = capped_scan(&enc.rows, &candidates, min_sup, level);
        visits += v;
        level_sets = candidates.into_iter().zip(counts).filter(|&(_, c)| c == min_sup).map(|(s, _)| s).collect();
    }
    Ok(LocalMiningReport { partition_index: 0, local_min_sup: min_sup, frequent, visits, levels })
}

/// Textbook Apriori: exact supports, every transaction tested against every
/// candidate at every level.
pub fn classic_apriori(db: &[Transaction], min_sup: u64) -> Result<ExactMiningResult, MineError> {
    classic_apriori_to_level(db, min_sup, None)
}

pub fn classic_apriori_to_level(
    db: &[Transaction],
    min_sup: u64,
    max_level: Option<usize>,
) -> Result<ExactMiningResult, MineError> {
    check_threshold(min_sup)?;
    let enc = Encoded::new(db, []);
    let (counts, mut visits) = count_singletons(&enc, None);
    let mut level_sets: Vec<(Vec<u32>, u64)> =
        counts.iter().enumerate().filter(|&(_, &c)| c >= min_sup).map(|(id, &c)| (vec![id as u32], c)).collect();
    let mut frequent = BTreeMap::new();
    let mut levels = 0;
    let mut level = 1;
    while !level_sets.is_empty() {
        levels = level;
        for (s, c) in &level_sets {
            frequent.insert(enc.decode(s), *c);
        }
        level += 1;
        if max_level.is_some_and(|m| level > m) {
            break;
        }
        let prev: Vec<Vec<u32>> = level_sets.into_iter().map(|(s, _)| s).collect();
        let candidates = generate(&prev);
        let (counts, v) = full_scan(&enc.rows, &candidates);
        visits += v;
        level_sets = candidates.into_iter().zip(counts).filter(|&(_, c)| c >= min_sup).collect();
    }
    Ok(ExactMiningResult { frequent, visits, levels })
}
