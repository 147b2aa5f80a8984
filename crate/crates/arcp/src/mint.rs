//! Minting arcp base URIs under the four strategies: random UUIDv4,
//! URL-location UUIDv5, content hash and app name.

use std::io::Read;

use rand::RngCore as _;
use sha1::{Digest as _, Sha1};
use thiserror::Error;
use uuid::Uuid;

use crate::digest::{self, DigestError, NiDigest};
use crate::model::{ArcpUri, Authority, ParseError};

/// How a base URI for an archive is derived.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MintStrategy {
    /// Fresh random UUIDv4, suitable for sandbox processing.
    RandomUuid,
    /// UUIDv5 over the archive's download URL; deterministic per URL.
    LocationUuid(String),
    /// Digest of the archive bytes with the named algorithm.
    Hash(String),
    /// Application-chosen dotted name.
    Name(String),
}

#[derive(Debug, Error)]
pub enum MintError {
    #[error("random source exhausted: {0}")]
    RandomExhausted(String),
    #[error("location URL must be non-empty")]
    EmptyLocation,
    #[error("{0}")]
    Digest(#[from] DigestError),
    #[error("unregistered hash algorithm {0:?}")]
    UnregisteredAlgorithm(String),
    #[error("invalid name: {0}")]
    BadName(ParseError),
    #[error("read failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Injectable source of raw random bytes.
///
/// The default [`SystemRandom`] is the operating system CSPRNG; tests can
/// inject [`FixedBytes`] to make minting reproducible.
pub trait RandomSource {
    fn fill(&mut self, buf: &mut [u8]) -> Result<(), MintError>;
}

/// Operating-system CSPRNG.
#[derive(Debug, Default, Clone, Copy)]
pub struct SystemRandom;

impl RandomSource for SystemRandom {
    fn fill(&mut self, buf: &mut [u8]) -> Result<(), MintError> {
        rand::rngs::OsRng
            .try_fill_bytes(buf)
            .map_err(|e| MintError::RandomExhausted(e.to_string()))
    }
}

/// A finite, deterministic byte stream; errors once exhausted.
#[derive(Debug, Clone)]
pub struct FixedBytes {
    bytes: Vec<u8>,
    pos: usize,
}

impl FixedBytes {
    pub fn new(bytes: impl Into<Vec<u8>>) -> Self {
        FixedBytes {
            bytes: bytes.into(),
            pos: 0,
        }
    }
}

impl RandomSource for FixedBytes {
    fn fill(&mut self, buf: &mut [u8]) -> Result<(), MintError> {
        let remaining = self.bytes.len() - self.pos;
        if remaining < buf.len() {
            return Err(MintError::RandomExhausted(format!(
                "need {} bytes, {remaining} left",
                buf.len()
            )));
        }
        buf.copy_from_slice(&self.bytes[self.pos..self.pos + buf.len()]);
        self.pos += buf.len();
        Ok(())
    }
}

/// Mints a root URI from a fresh random UUIDv4. The version nibble and
/// RFC variant bits are stamped over the raw random bytes.
pub fn mint_uuid_v4(rng: &mut dyn RandomSource) -> Result<ArcpUri, MintError> {
    let mut bytes = [0u8; 16];
    rng.fill(&mut bytes)?;
    let uuid = uuid::Builder::from_random_bytes(bytes).into_uuid();
    Ok(ArcpUri::root(Authority::Uuid(uuid)))
}

/// Name-based UUIDv5: SHA-1 over the namespace UUID followed by the name
/// bytes, truncated to 128 bits with version and variant stamped.
pub fn uuid_v5(namespace: &Uuid, name: &[u8]) -> Uuid {
    let mut hasher = Sha1::new();
    hasher.update(namespace.as_bytes());
    hasher.update(name);
    let hash = hasher.finalize();
    let mut bytes = [0u8; 16];
    bytes.copy_from_slice(&hash[..16]);
    bytes[6] = (bytes[6] & 0x0F) | 0x50; // version 5
    bytes[8] = (bytes[8] & 0x3F) | 0x80; // RFC variant
    Uuid::from_bytes(bytes)
}

/// Mints a deterministic root URI from an archive's download URL, using
/// UUIDv5 under the standard URL name-space UUID.
///
/// The URL string is hashed exactly as given; no normalization is applied.
pub fn mint_from_location(url: &str) -> Result<ArcpUri, MintError> {
    if url.is_empty() {
        return Err(MintError::EmptyLocation);
    }
    let uuid = uuid_v5(&Uuid::NAMESPACE_URL, url.as_bytes());
    Ok(ArcpUri::root(Authority::Uuid(uuid)))
}

/// Mints a hash-based root URI by digesting `content` to the end.
/// Constant memory in the content size.
pub fn mint_from_bytes(content: impl Read, alg_id: &str) -> Result<ArcpUri, MintError> {
    let alg_id = alg_id.to_ascii_lowercase();
    if !digest::is_registered(&alg_id) {
        return Err(MintError::UnregisteredAlgorithm(alg_id));
    }
    let digest = NiDigest::of_reader(&alg_id, content)?;
    Ok(ArcpUri::root(Authority::Ni(digest)))
}

/// Mints a hash-based root URI from an already-computed hex digest.
/// Pure conversion; no hashing happens.
pub fn mint_from_digest(alg_id: &str, digest_hex: &str) -> Result<ArcpUri, MintError> {
    let digest = NiDigest::from_hex(alg_id, digest_hex)?;
    Ok(ArcpUri::root(Authority::Ni(digest)))
}

/// Mints a name-based root URI. The name is validated against the dotted
/// name grammar and lowercased.
pub fn mint_from_name(name: &str) -> Result<ArcpUri, MintError> {
    let name = crate::model::validate_name(name, 0).map_err(MintError::BadName)?;
    Ok(ArcpUri::root(Authority::Name(name)))
}
