//! Transaction databases: basket-file parsing, canonical serialization,
//! synthetic generation and summary statistics.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DatasetError {
    #[error("line {line}: byte 0x{byte:02x} is outside the 7-bit range")]
    Malformed { line: usize, byte: u8 },
    #[error("database holds no transactions")]
    Empty,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid item: {0}")]
    InvalidItem(String),
    #[error("duplicate transaction id {0}")]
    DuplicateId(u64),
}

/// A single product token. Plaintext items are printable text; ciphertext
/// items may hold any 7-bit byte.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Item(Vec<u8>);

impl Item {
    pub fn new(token: impl Into<Vec<u8>>) -> Result<Self, DatasetError> {
        let token = token.into();
        if token.is_empty() {
            return Err(DatasetError::InvalidItem("empty token".into()));
        }
        if let Some(&b) = token.iter().find(|&&b| b > 0x7f) {
            return Err(DatasetError::InvalidItem(format!("byte 0x{b:02x} is outside the 7-bit range")));
        }
        Ok(Item(token))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Text rendering. 7-bit bytes are always valid UTF-8.
    pub fn as_str(&self) -> &str {
        std::str::from_utf8(&self.0).expect("7-bit token")
    }
}

impl fmt::Debug for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.as_str())
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Item {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// One basket. Items are kept sorted and duplicate-free.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Transaction {
    id: u64,
    items: Vec<Item>,
}

impl Transaction {
    /// Builds a transaction, collapsing duplicate items.
    pub fn new(id: u64, items: impl IntoIterator<Item = Item>) -> Result<Self, DatasetError> {
        if id == 0 {
            return Err(DatasetError::InvalidParameter("transaction ids start at 1".into()));
        }
        let mut items: Vec<Item> = items.into_iter().collect();
        items.sort_unstable();
        items.dedup();
        Ok(Transaction { id, items })
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    /// Item count of the basket.
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, item: &Item) -> bool {
        self.items.binary_search(item).is_ok()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TransactionDatabase {
    transactions: Vec<Transaction>,
}

impl TransactionDatabase {
    pub fn new(transactions: Vec<Transaction>) -> Result<Self, DatasetError> {
        let mut seen = HashSet::with_capacity(transactions.len());
        for t in &transactions {
            if !seen.insert(t.id) {
                return Err(DatasetError::DuplicateId(t.id));
            }
        }
        Ok(TransactionDatabase { transactions })
    }

    /// Builds a database from item lists, numbering transactions from 1.
    pub fn from_baskets<I, B, S>(baskets: I) -> Result<Self, DatasetError>
    where
        I: IntoIterator<Item = B>,
        B: IntoIterator<Item = S>,
        S: Into<Vec<u8>>,
    {
        let transactions = baskets
            .into_iter()
            .enumerate()
            .map(|(k, basket)| {
                let items = basket.into_iter().map(Item::new).collect::<Result<Vec<_>, _>>()?;
                Transaction::new(k as u64 + 1, items)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(transactions)
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    pub fn into_transactions(self) -> Vec<Transaction> {
        self.transactions
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn ids(&self) -> Vec<u64> {
        self.transactions.iter().map(Transaction::id).collect()
    }

    pub fn get(&self, id: u64) -> Option<&Transaction> {
        self.transactions.iter().find(|t| t.id == id)
    }

    /// Concatenates several databases, renumbering ids 1.. in order.
    pub fn concat(parts: &[TransactionDatabase]) -> Self {
        let transactions = parts
            .iter()
            .flat_map(|db| db.transactions.iter())
            .enumerate()
            .map(|(k, t)| Transaction { id: k as u64 + 1, items: t.items.clone() })
            .collect();
        TransactionDatabase { transactions }
    }

    /// Canonical basket text: one line per transaction, items sorted
    /// bytewise and single-space separated.
    pub fn to_basket_string(&self) -> String {
        let mut out = String::new();
        for t in &self.transactions {
            let line: Vec<&str> = t.items.iter().map(Item::as_str).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Parses whitespace-separated basket lines. `#` starts a comment line and
/// blank lines are skipped; the k-th transaction line gets id k.
pub fn parse_basket_file(text: &[u8]) -> Result<TransactionDatabase, DatasetError> {
    let mut transactions = Vec::new();
    for (lineno, line) in text.split(|&b| b == b'\n').enumerate() {
        if let Some(&byte) = line.iter().find(|&&b| b > 0x7f) {
            return Err(DatasetError::Malformed { line: lineno + 1, byte });
        }
        let line = line.strip_suffix(b"\r").unwrap_or(line);
        if line.first() == Some(&b'#') {
            continue;
        }
        let items: Vec<Item> = line
            .split(|b| b.is_ascii_whitespace())
            .filter(|tok| !tok.is_empty())
            .map(|tok| Item(tok.to_vec()))
            .collect();
        if items.is_empty() {
            continue;
        }
        let id = transactions.len() as u64 + 1;
        transactions.push(Transaction::new(id, items)?);
    }
    if transactions.is_empty() {
        return Err(DatasetError::Empty);
    }
    TransactionDatabase::new(transactions)
}

/// Seeded random baskets over the alphabet `item_1 .. item_{n_items}`.
pub fn generate_synthetic(
    n_tx: usize,
    n_items: usize,
    max_len: usize,
    seed: u64,
) -> Result<TransactionDatabase, DatasetError> {
    if n_tx == 0 {
        return Err(DatasetError::InvalidParameter("n_tx must be at least 1".into()));
    }
    if max_len == 0 || max_len > n_items {
        return Err(DatasetError::InvalidParameter(format!(
            "max_len must lie in [1, n_items={n_items}], got {max_len}"
        )));
    }
    let alphabet: Vec<Item> = (1..=n_items).map(|i| Item(format!("item_{i}").into_bytes())).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let transactions = (0..n_tx)
        .map(|k| {
            let len = rng.random_range(1..=max_len);
            let items = index::sample(&mut rng, n_items, len).into_iter().map(|i| alphabet[i].clone());
            Transaction::new(k as u64 + 1, items)
        })
        .collect::<Result<Vec<_>, _>>()?;
    TransactionDatabase::new(transactions)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DatasetStats {
    pub n_transactions: usize,
    pub n_distinct_items: usize,
    pub max_transaction_length: usize,
    pub item_frequencies: BTreeMap<Item, usize>,
}

pub fn db_stats(db: &TransactionDatabase) -> DatasetStats {
    let mut item_frequencies = BTreeMap::new();
    let mut max_transaction_length = 0;
    for t in db.transactions() {
        max_transaction_length = max_transaction_length.max(t.len());
        for item in t.items() {
            *item_frequencies.entry(item.clone()).or_insert(0) += 1;
        }
    }
    DatasetStats {
        n_transactions: db.len(),
        n_distinct_items: item_frequencies.len(),
        max_transaction_length,
        item_frequencies,
    }
}
