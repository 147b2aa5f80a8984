//! Named-information digests: a hash algorithm identifier plus raw digest
//! bytes, convertible between hex, unpadded base64url, ni URI and well-known
//! URL forms.

use std::fmt;
use std::io::Read;

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine as _;
use sha2::{Digest as _, Sha256};
use thiserror::Error;

/// Registered hash algorithms: `(alg_id, digest length in bytes)`.
///
/// Adding an algorithm means adding a row here and a hasher arm in
/// [`Hasher::new`]; nothing else needs to change.
const ALGORITHMS: &[(&str, usize)] = &[("sha-256", 32)];

/// Digest length in bytes for a registered algorithm, `None` if unknown.
pub fn digest_len(alg_id: &str) -> Option<usize> {
    ALGORITHMS
        .iter()
        .find(|(id, _)| *id == alg_id)
        .map(|(_, len)| *len)
}

/// Whether this crate can compute digests with the given algorithm.
pub fn is_registered(alg_id: &str) -> bool {
    digest_len(alg_id).is_some()
}

#[derive(Debug, Error)]
pub enum DigestError {
    #[error("unknown hash algorithm {0:?}")]
    UnknownAlgorithm(String),
    #[error("invalid algorithm identifier {0:?}: must match [a-z0-9-]+")]
    BadAlgorithmId(String),
    #[error("malformed hex digest: {0}")]
    BadHex(String),
    #[error("malformed base64url digest: {0}")]
    BadBase64(String),
    #[error("digest length {got} does not match {alg_id} ({want} bytes)")]
    LengthMismatch {
        alg_id: String,
        want: usize,
        got: usize,
    },
    #[error("digest is empty")]
    EmptyDigest,
    #[error("read failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Incremental digest computation over a registered algorithm.
pub enum Hasher {
    Sha256(Sha256),
}

impl Hasher {
    pub fn new(alg_id: &str) -> Result<Self, DigestError> {
        match alg_id {
            "sha-256" => Ok(Hasher::Sha256(Sha256::new())),
            other => Err(DigestError::UnknownAlgorithm(other.to_string())),
        }
    }

    pub fn update(&mut self, bytes: &[u8]) {
        match self {
            Hasher::Sha256(h) => h.update(bytes),
        }
    }

    pub fn finish(self) -> Vec<u8> {
        match self {
            Hasher::Sha256(h) => h.finalize().to_vec(),
        }
    }
}

/// A hash algorithm identifier together with raw digest bytes.
///
/// The algorithm identifier is stored lowercase. Unregistered algorithms are
/// representable (the digest is kept opaque) but cannot be computed or
/// verified.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct NiDigest {
    alg_id: String,
    digest: Vec<u8>,
}

impl NiDigest {
    /// Wraps raw digest bytes. The algorithm identifier is lowercased and
    /// must match `[a-z0-9-]+`; for registered algorithms the length is
    /// checked against the registry.
    pub fn new(alg_id: &str, digest: Vec<u8>) -> Result<Self, DigestError> {
        let alg_id = alg_id.to_ascii_lowercase();
        if alg_id.is_empty()
            || !alg_id
                .bytes()
                .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-')
        {
            return Err(DigestError::BadAlgorithmId(alg_id));
        }
        if digest.is_empty() {
            return Err(DigestError::EmptyDigest);
        }
        if let Some(want) = digest_len(&alg_id) {
            if digest.len() != want {
                return Err(DigestError::LengthMismatch {
                    alg_id,
                    want,
                    got: digest.len(),
                });
            }
        }
        Ok(NiDigest { alg_id, digest })
    }

    /// Parses a lowercase-or-uppercase hex digest string.
    pub fn from_hex(alg_id: &str, hex_digest: &str) -> Result<Self, DigestError> {
        let digest = hex::decode(hex_digest).map_err(|e| DigestError::BadHex(e.to_string()))?;
        Self::new(alg_id, digest)
    }

    /// Parses an unpadded base64url digest string. Padding and non-canonical
    /// encodings are rejected.
    pub fn from_base64url(alg_id: &str, text: &str) -> Result<Self, DigestError> {
        let digest = URL_SAFE_NO_PAD
            .decode(text)
            .map_err(|e| DigestError::BadBase64(e.to_string()))?;
        Self::new(alg_id, digest)
    }

    /// Digests an entire byte stream in constant memory.
    pub fn of_reader(alg_id: &str, mut reader: impl Read) -> Result<Self, DigestError> {
        let alg_id = alg_id.to_ascii_lowercase();
        let mut hasher = Hasher::new(&alg_id)?;
        let mut buf = [0u8; 64 * 1024];
        loop {
            let n = reader.read(&mut buf)?;
            if n == 0 {
                break;
            }
            hasher.update(&buf[..n]);
        }
        Self::new(&alg_id, hasher.finish())
    }

    pub fn of_bytes(alg_id: &str, bytes: &[u8]) -> Result<Self, DigestError> {
        Self::of_reader(alg_id, bytes)
    }

    pub fn alg_id(&self) -> &str {
        &self.alg_id
    }

    pub fn digest(&self) -> &[u8] {
        &self.digest
    }

    /// Lowercase hex form.
    pub fn to_hex(&self) -> String {
        hex::encode(&self.digest)
    }

    /// Unpadded base64url form (`[A-Za-z0-9_-]+`, no `=`).
    pub fn to_base64url(&self) -> String {
        URL_SAFE_NO_PAD.encode(&self.digest)
    }
}

impl fmt::Debug for NiDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NiDigest({};{})", self.alg_id, self.to_base64url())
    }
}
