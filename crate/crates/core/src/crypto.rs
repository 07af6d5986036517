//! Deterministic double encryption of item tokens: a Caesar shift over the
//! 7-bit alphabet followed by a 7-bit XOR stream.
//!
//! Equal plaintext tokens always map to equal ciphertext tokens under one
//! key, so containment tests (and therefore support counting) work directly
//! on ciphertext. Token length and item frequencies are not hidden.

use std::env;

use serde::Serialize;
use thiserror::Error;

use crate::dataset::{DatasetError, Item, Transaction, TransactionDatabase};

/// Default Caesar shift.
pub const DEFAULT_CAESAR_SHIFT: u8 = 5;
/// Default stream key, `1010101` in binary.
pub const DEFAULT_STREAM_KEY: u8 = 85;

pub const ENV_CAESAR_SHIFT: &str = "FEDARM_CAESAR_SHIFT";
pub const ENV_STREAM_KEY: &str = "FEDARM_STREAM_KEY";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CryptoError {
    #[error("byte 0x{byte:02x} at offset {offset} is outside the 7-bit domain")]
    Domain { offset: usize, byte: u8 },
    #[error("caesar shift must lie in [1, 127], got {0}")]
    InvalidShift(i64),
    #[error("stream key must lie in [0, 127], got {0}")]
    InvalidStreamKey(i64),
    #[error("{var}: {msg}")]
    Env { var: &'static str, msg: String },
    #[error(transparent)]
    Item(#[from] DatasetError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct DoubleEncryptionKey {
    caesar_shift: u8,
    stream_key: u8,
}

impl Default for DoubleEncryptionKey {
    fn default() -> Self {
        DoubleEncryptionKey { caesar_shift: DEFAULT_CAESAR_SHIFT, stream_key: DEFAULT_STREAM_KEY }
    }
}

impl DoubleEncryptionKey {
    pub fn new(caesar_shift: i64, stream_key: i64) -> Result<Self, CryptoError> {
        if !(1..=127).contains(&caesar_shift) {
            return Err(CryptoError::InvalidShift(caesar_shift));
        }
        if !(0..=127).contains(&stream_key) {
            return Err(CryptoError::InvalidStreamKey(stream_key));
        }
        Ok(DoubleEncryptionKey { caesar_shift: caesar_shift as u8, stream_key: stream_key as u8 })
    }

    /// Reads `FEDARM_CAESAR_SHIFT` / `FEDARM_STREAM_KEY`, falling back to the
    /// defaults for unset variables.
    pub fn from_env() -> Result<Self, CryptoError> {
        fn read(var: &'static str, default: u8) -> Result<i64, CryptoError> {
            match env::var(var) {
                Ok(v) => v.trim().parse().map_err(|e| CryptoError::Env { var, msg: format!("{e}") }),
                Err(env::VarError::NotPresent) => Ok(default as i64),
                Err(e) => Err(CryptoError::Env { var, msg: e.to_string() }),
            }
        }
        Self::new(read(ENV_CAESAR_SHIFT, DEFAULT_CAESAR_SHIFT)?, read(ENV_STREAM_KEY, DEFAULT_STREAM_KEY)?)
    }

    pub fn caesar_shift(&self) -> u8 {
        self.caesar_shift
    }

    pub fn stream_key(&self) -> u8 {
        self.stream_key
    }
}

/// Ciphertext form of an [`Item`].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CipherItem(Vec<u8>);

impl CipherItem {
    pub fn from_bytes(bytes: Vec<u8>) -> Result<Self, CryptoError> {
        check_domain(&bytes)?;
        Ok(CipherItem(bytes))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }

    pub fn into_item(self) -> Result<Item, CryptoError> {
        Ok(Item::new(self.0)?)
    }
}

impl From<&Item> for CipherItem {
    fn from(item: &Item) -> Self {
        CipherItem(item.as_bytes().to_vec())
    }
}

fn check_domain(bytes: &[u8]) -> Result<(), CryptoError> {
    match bytes.iter().position(|&b| b > 0x7f) {
        Some(offset) => Err(CryptoError::Domain { offset, byte: bytes[offset] }),
        None => Ok(()),
    }
}

fn check_shift(shift: u8) -> Result<(), CryptoError> {
    if (1..=127).contains(&shift) {
        Ok(())
    } else {
        Err(CryptoError::InvalidShift(shift as i64))
    }
}

/// `(b + shift) mod 128` per byte.
pub fn caesar_encrypt(bytes: &[u8], shift: u8) -> Result<Vec<u8>, CryptoError> {
    check_domain(bytes)?;
    check_shift(shift)?;
    Ok(bytes.iter().map(|&b| (b + shift) & 0x7f).collect())
}

/// `(b - shift) mod 128` per byte.
pub fn caesar_decrypt(bytes: &[u8], shift: u8) -> Result<Vec<u8>, CryptoError> {
    check_domain(bytes)?;
    check_shift(shift)?;
    Ok(bytes.iter().map(|&b| (b + 128 - shift) & 0x7f).collect())
}

/// XOR of every byte with the same 7-bit key. Self-inverse.
pub fn stream_xor(bytes: &[u8], stream_key: u8) -> Result<Vec<u8>, CryptoError> {
    check_domain(bytes)?;
    if stream_key > 0x7f {
        return Err(CryptoError::InvalidStreamKey(stream_key as i64));
    }
    Ok(bytes.iter().map(|&b| b ^ stream_key).collect())
}

pub fn encrypt_item(item: &Item, key: &DoubleEncryptionKey) -> Result<CipherItem, CryptoError> {
    let shifted = caesar_encrypt(item.as_bytes(), key.caesar_shift)?;
    Ok(CipherItem(stream_xor(&shifted, key.stream_key)?))
}

pub fn decrypt_item(ct: &CipherItem, key: &DoubleEncryptionKey) -> Result<Item, CryptoError> {
    let unmasked = stream_xor(ct.as_bytes(), key.stream_key)?;
    Ok(Item::new(caesar_decrypt(&unmasked, key.caesar_shift)?)?)
}

/// Encrypts every item; ids, order and basket sizes are preserved.
pub fn encrypt_database(
    db: &TransactionDatabase,
    key: &DoubleEncryptionKey,
) -> Result<TransactionDatabase, CryptoError> {
    map_database(db, |item| encrypt_item(item, key)?.into_item())
}

pub fn decrypt_database(
    db: &TransactionDatabase,
    key: &DoubleEncryptionKey,
) -> Result<TransactionDatabase, CryptoError> {
    map_database(db, |item| decrypt_item(&CipherItem::from(item), key))
}

fn map_database<F>(db: &TransactionDatabase, mut f: F) -> Result<TransactionDatabase, CryptoError>
where
    F: FnMut(&Item) -> Result<Item, CryptoError>,
{
    let transactions = db
        .transactions()
        .iter()
        .map(|t| {
            let items = t.items().iter().map(&mut f).collect::<Result<Vec<_>, _>>()?;
            Ok(Transaction::new(t.id(), items)?)
        })
        .collect::<Result<Vec<_>, CryptoError>>()?;
    Ok(TransactionDatabase::new(transactions)?)
}

/// Item-level transform applied by the data owner before outsourcing and
/// undone on the returned result.
pub trait ItemCodec: Sync {
    fn encode(&self, item: &Item) -> Result<Item, CryptoError>;
    fn decode(&self, item: &Item) -> Result<Item, CryptoError>;
}

impl ItemCodec for DoubleEncryptionKey {
    fn encode(&self, item: &Item) -> Result<Item, CryptoError> {
        encrypt_item(item, self)?.into_item()
    }

    fn decode(&self, item: &Item) -> Result<Item, CryptoError> {
        decrypt_item(&CipherItem::from(item), self)
    }
}

/// Leaves items untouched; the plaintext baseline for the encrypted pipeline.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityCodec;

impl ItemCodec for IdentityCodec {
    fn encode(&self, item: &Item) -> Result<Item, CryptoError> {
        Ok(item.clone())
    }

    fn decode(&self, item: &Item) -> Result<Item, CryptoError> {
        Ok(item.clone())
    }
}
