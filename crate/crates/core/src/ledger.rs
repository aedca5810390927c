//! Minimal signed ledger: ECDSA (secp256k1) transfers grouped into
//! SHA-256 hash-chained blocks.
//!
//! Canonical encoding, all integers big-endian:
//!
//! ```text
//! block   := index u64 | timestamp u64 | prev_hash [32] | tx_count u32 | tx*
//! tx      := sender_len u16 | sender | recipient_len u16 | recipient
//!          | amount u64 (micro-units) | nonce u64 | sig_len u16 | signature
//! ```
//!
//! Transaction signatures cover the same layout without the signature field.

use k256::ecdsa::signature::{Signer, Verifier};
use k256::ecdsa::{Signature, SigningKey, VerifyingKey};
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub type Digest32 = [u8; 32];

/// Fixed-point scale of the on-wire amount: six decimal places.
pub const AMOUNT_SCALE: f64 = 1_000_000.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlockRejection {
    #[error("stale index: expected {expected}, got {got}")]
    StaleIndex { expected: u64, got: u64 },
    #[error("linkage: prev_hash does not match the chain tip")]
    Linkage,
    #[error("hash mismatch: stored digest differs from recomputed contents")]
    HashMismatch,
    #[error("invalid transaction at position {0}")]
    InvalidTransaction(usize),
    #[error("field too long for its length prefix")]
    Oversized,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("block {height}: {reason}")]
    Invalid { height: usize, reason: BlockRejection },
    #[error("chain has no genesis block")]
    Empty,
}

/// Signing half of a keypair. The verify key is its SEC1 compressed point.
#[derive(Clone)]
pub struct KeyPair {
    signing: SigningKey,
}

impl KeyPair {
    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        Self { signing: SigningKey::random(rng) }
    }

    pub fn verify_key(&self) -> Vec<u8> {
        self.signing.verifying_key().to_sec1_bytes().into_vec()
    }

    pub fn sign(&self, message: &[u8]) -> Vec<u8> {
        let sig: Signature = self.signing.sign(message);
        sig.to_bytes().to_vec()
    }
}

impl std::fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KeyPair").field("verify_key", &hex::encode(self.verify_key())).finish()
    }
}

pub fn new_keypair<R: RngCore + CryptoRng>(rng: &mut R) -> KeyPair {
    KeyPair::generate(rng)
}

/// Malformed key or signature bytes verify as false.
pub fn verify_signature(verify_key: &[u8], message: &[u8], signature: &[u8]) -> bool {
    let Ok(key) = VerifyingKey::from_sec1_bytes(verify_key) else {
        return false;
    };
    let Ok(sig) = Signature::from_slice(signature) else {
        return false;
    };
    key.verify(message, &sig).is_ok()
}

/// Amount in millionths of a stake unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Amount(pub u64);

impl Amount {
    pub fn from_units(units: f64) -> Self {
        Amount((units.max(0.0) * AMOUNT_SCALE).round() as u64)
    }

    pub fn units(self) -> f64 {
        self.0 as f64 / AMOUNT_SCALE
    }
}

mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(s).map_err(serde::de::Error::custom)
    }
}

mod hex_digest {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 32], D::Error> {
        let s = String::deserialize(d)?;
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out).map_err(serde::de::Error::custom)?;
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    #[serde(with = "hex_bytes")]
    pub sender: Vec<u8>,
    #[serde(with = "hex_bytes")]
    pub recipient: Vec<u8>,
    pub amount: Amount,
    pub nonce: u64,
    #[serde(with = "hex_bytes")]
    pub signature: Vec<u8>,
}

fn put_prefixed(out: &mut Vec<u8>, bytes: &[u8]) -> Result<(), BlockRejection> {
    let len = u16::try_from(bytes.len()).map_err(|_| BlockRejection::Oversized)?;
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(bytes);
    Ok(())
}

impl Transaction {
    /// Unsigned transfer; call [`Transaction::sign`] before use.
    pub fn new(sender: Vec<u8>, recipient: Vec<u8>, amount: Amount, nonce: u64) -> Self {
        Self { sender, recipient, amount, nonce, signature: Vec::new() }
    }

    pub fn signing_bytes(&self) -> Result<Vec<u8>, BlockRejection> {
        let mut out = Vec::with_capacity(2 * 35 + 16);
        put_prefixed(&mut out, &self.sender)?;
        put_prefixed(&mut out, &self.recipient)?;
        out.extend_from_slice(&self.amount.0.to_be_bytes());
        out.extend_from_slice(&self.nonce.to_be_bytes());
        Ok(out)
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) -> Result<(), BlockRejection> {
        out.extend_from_slice(&self.signing_bytes()?);
        put_prefixed(out, &self.signature)
    }

    pub fn sign(mut self, key: &KeyPair) -> Self {
        // oversize fields leave the signature empty, which never verifies
        self.signature = match self.signing_bytes() {
            Ok(bytes) => key.sign(&bytes),
            Err(_) => Vec::new(),
        };
        self
    }

    pub fn verify(&self) -> bool {
        match self.signing_bytes() {
            Ok(bytes) => verify_signature(&self.sender, &bytes, &self.signature),
            Err(_) => false,
        }
    }
}

pub fn sign_transaction(tx: Transaction, key: &KeyPair) -> Transaction {
    tx.sign(key)
}

pub fn verify_transaction(tx: &Transaction) -> bool {
    tx.verify()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub index: u64,
    pub timestamp: u64,
    #[serde(with = "hex_digest")]
    pub prev_hash: Digest32,
    pub transactions: Vec<Transaction>,
    #[serde(with = "hex_digest")]
    pub hash: Digest32,
}

impl Block {
    pub fn genesis() -> Self {
        Self::sealed(0, 0, [0u8; 32], Vec::new())
    }

    /// Builds a block and stores the digest of its contents.
    pub fn sealed(index: u64, timestamp: u64, prev_hash: Digest32, transactions: Vec<Transaction>) -> Self {
        let mut block = Self { index, timestamp, prev_hash, transactions, hash: [0u8; 32] };
        block.hash = block.compute_hash().unwrap_or([0u8; 32]);
        block
    }

    pub fn canonical_bytes(&self) -> Result<Vec<u8>, BlockRejection> {
        let count = u32::try_from(self.transactions.len()).map_err(|_| BlockRejection::Oversized)?;
        let mut out = Vec::with_capacity(52 + self.transactions.len() * 160);
        out.extend_from_slice(&self.index.to_be_bytes());
        out.extend_from_slice(&self.timestamp.to_be_bytes());
        out.extend_from_slice(&self.prev_hash);
        out.extend_from_slice(&count.to_be_bytes());
        for tx in &self.transactions {
            tx.encode_into(&mut out)?;
        }
        Ok(out)
    }

    pub fn compute_hash(&self) -> Result<Digest32, BlockRejection> {
        Ok(Sha256::digest(self.canonical_bytes()?).into())
    }

    /// Self-contained checks: digest and every signature.
    pub fn check_contents(&self) -> Result<(), BlockRejection> {
        if self.compute_hash()? != self.hash {
            return Err(BlockRejection::HashMismatch);
        }
        if let Some(i) = self.transactions.iter().position(|tx| !tx.verify()) {
            return Err(BlockRejection::InvalidTransaction(i));
        }
        Ok(())
    }
}

/// Child of `parent` stamped with the simulation clock.
pub fn build_block(parent: &Block, transactions: Vec<Transaction>, clock: u64) -> Block {
    Block::sealed(parent.index + 1, clock, parent.hash, transactions)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chain {
    blocks: Vec<Block>,
}

impl Default for Chain {
    fn default() -> Self {
        Self::new()
    }
}

impl Chain {
    pub fn new() -> Self {
        Self { blocks: vec![Block::genesis()] }
    }

    pub fn tip(&self) -> &Block {
        self.blocks.last().expect("chain always holds genesis")
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Checks `block` as the next block on this chain.
    pub fn validate_block(&self, block: &Block) -> Result<(), BlockRejection> {
        let tip = self.tip();
        if block.index != tip.index + 1 {
            return Err(BlockRejection::StaleIndex { expected: tip.index + 1, got: block.index });
        }
        if block.prev_hash != tip.hash {
            return Err(BlockRejection::Linkage);
        }
        block.check_contents()
    }

    pub fn append(&mut self, block: Block) -> Result<(), BlockRejection> {
        self.validate_block(&block)?;
        self.blocks.push(block);
        Ok(())
    }

    /// Appends a block the caller has just validated against this tip.
    pub(crate) fn push_validated(&mut self, block: Block) {
        self.blocks.push(block);
    }

    /// Re-validates every block from genesis.
    pub fn verify(&self) -> Result<(), ChainError> {
        let genesis = self.blocks.first().ok_or(ChainError::Empty)?;
        if genesis.index != 0 || genesis.prev_hash != [0u8; 32] {
            return Err(ChainError::Invalid { height: 0, reason: BlockRejection::Linkage });
        }
        genesis
            .check_contents()
            .map_err(|reason| ChainError::Invalid { height: 0, reason })?;
        for (height, pair) in self.blocks.windows(2).enumerate() {
            let (parent, child) = (&pair[0], &pair[1]);
            let reason = if child.index != parent.index + 1 {
                Some(BlockRejection::StaleIndex { expected: parent.index + 1, got: child.index })
            } else if child.prev_hash != parent.hash {
                Some(BlockRejection::Linkage)
            } else {
                child.check_contents().err()
            };
            if let Some(reason) = reason {
                return Err(ChainError::Invalid { height: height + 1, reason });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

pub fn validate_block(chain: &Chain, block: &Block) -> Result<(), BlockRejection> {
    chain.validate_block(block)
}

pub fn append_block(chain: &mut Chain, block: Block) -> Result<(), BlockRejection> {
    chain.append(block)
}
