//! ni URIs, well-known resolver URLs, and verified retrieval of
//! hash-identified archives.
//!
//! A hash-identified archive can be fetched from any resolver exposing the
//! `/.well-known/ni/<alg>/<digest>` layout; the checksum — not the
//! endpoint — is the authority, so the transport is treated as untrusted.

use std::io::{Read, Write};
use std::path::Path;
use std::time::Duration;

use thiserror::Error;

use crate::digest::{DigestError, Hasher, NiDigest};
use crate::model::ArcpUri;

#[derive(Debug, Error)]
pub enum WellKnownError {
    #[error("URI does not use an ni authority")]
    NotNiAuthority,
    #[error("resolver base must be an http(s) URL: {0:?}")]
    BadResolverBase(String),
    #[error("malformed ni URI: {0}")]
    BadNiUri(String),
    #[error(transparent)]
    Digest(#[from] DigestError),
    #[error("cannot write to {path:?}: {source}")]
    Destination {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

/// `ni:///<alg>;<base64url digest>` form of a digest.
pub fn to_ni_uri(d: &NiDigest) -> String {
    format!("ni:///{};{}", d.alg_id(), d.to_base64url())
}

/// Extracts the digest from an ni URI. Any authority is ignored; query
/// parameters are dropped.
pub fn from_ni_uri(s: &str) -> Result<NiDigest, WellKnownError> {
    let rest = s
        .strip_prefix("ni:")
        .or_else(|| s.strip_prefix("NI:"))
        .ok_or_else(|| WellKnownError::BadNiUri(format!("{s:?} does not use the ni scheme")))?;
    let rest = rest.strip_prefix("//").ok_or_else(|| {
        WellKnownError::BadNiUri("expected \"//\" after the ni scheme".to_string())
    })?;
    let slash = rest
        .find('/')
        .ok_or_else(|| WellKnownError::BadNiUri("missing path".to_string()))?;
    let path = &rest[slash + 1..];
    let path = path.split(['?', '#']).next().unwrap_or(path);
    let (alg, digest_text) = path.split_once(';').ok_or_else(|| {
        WellKnownError::BadNiUri("path must be \"<alg>;<base64url digest>\"".to_string())
    })?;
    Ok(NiDigest::from_base64url(alg, digest_text)?)
}

/// Well-known retrieval URL for a digest:
/// `<resolver_base>/.well-known/ni/<alg>/<digest>`.
///
/// A trailing slash on the resolver base is tolerated; exactly one slash is
/// emitted at each joint.
pub fn well_known_url(d: &NiDigest, resolver_base: &str) -> Result<String, WellKnownError> {
    let lower = resolver_base.to_ascii_lowercase();
    if !(lower.starts_with("http://") || lower.starts_with("https://")) {
        return Err(WellKnownError::BadResolverBase(resolver_base.to_string()));
    }
    let base = resolver_base.trim_end_matches('/');
    Ok(format!(
        "{base}/.well-known/ni/{}/{}",
        d.alg_id(),
        d.to_base64url()
    ))
}

/// Well-known retrieval URL for a hash-identified arcp URI.
pub fn arcp_to_well_known(uri: &ArcpUri, resolver_base: &str) -> Result<String, WellKnownError> {
    let digest = uri.hash().ok_or(WellKnownError::NotNiAuthority)?;
    well_known_url(digest, resolver_base)
}

/// Outcome of [`fetch_and_verify`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FetchStatus {
    /// Download completed and the computed digest equals the expected one.
    Verified,
    ChecksumMismatch,
    NotFound,
    TransportError(String),
}

impl FetchStatus {
    pub fn label(&self) -> &'static str {
        match self {
            FetchStatus::Verified => "Verified",
            FetchStatus::ChecksumMismatch => "ChecksumMismatch",
            FetchStatus::NotFound => "NotFound",
            FetchStatus::TransportError(_) => "TransportError",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchReport {
    pub url: String,
    pub status: FetchStatus,
    pub bytes_read: u64,
    pub computed_digest: Option<NiDigest>,
}

/// Redirect chains deeper than this are a transport error.
const MAX_REDIRECTS: u32 = 5;

/// Fetches the archive for `d` from a resolver's well-known path and
/// verifies its checksum while streaming to disk.
///
/// The body is written to a temporary file next to `destination` and
/// promoted only on [`FetchStatus::Verified`]; the destination never holds
/// unverified bytes.
pub fn fetch_and_verify(
    d: &NiDigest,
    resolver_base: &str,
    destination: &Path,
) -> Result<FetchReport, WellKnownError> {
    let url = well_known_url(d, resolver_base)?;
    // Fail on unknown algorithms before touching the network.
    let mut hasher = Hasher::new(d.alg_id())?;

    let report = |status, bytes_read, computed_digest| FetchReport {
        url: url.clone(),
        status,
        bytes_read,
        computed_digest,
    };

    let agent = ureq::Agent::new_with_config(
        ureq::Agent::config_builder()
            .max_redirects(MAX_REDIRECTS)
            .max_redirects_will_error(true)
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(60)))
            .build(),
    );
    let response = match agent.get(&url).call() {
        Ok(r) => r,
        Err(e) => return Ok(report(FetchStatus::TransportError(e.to_string()), 0, None)),
    };
    let status = response.status();
    if status.as_u16() == 404 {
        return Ok(report(FetchStatus::NotFound, 0, None));
    }
    if !status.is_success() {
        return Ok(report(
            FetchStatus::TransportError(format!("unexpected HTTP status {status}")),
            0,
            None,
        ));
    }

    let dir = destination.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| {
        WellKnownError::Destination {
            path: destination.to_path_buf(),
            source: e,
        }
    })?;

    let mut reader = response
        .into_body()
        .into_with_config()
        .limit(u64::MAX)
        .reader();
    let mut bytes_read = 0u64;
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = match reader.read(&mut buf) {
            Ok(0) => break,
            Ok(n) => n,
            Err(e) => {
                return Ok(report(
                    FetchStatus::TransportError(e.to_string()),
                    bytes_read,
                    None,
                ))
            }
        };
        hasher.update(&buf[..n]);
        if let Err(e) = tmp.write_all(&buf[..n]) {
            return Err(WellKnownError::Destination {
                path: destination.to_path_buf(),
                source: e,
            });
        }
        bytes_read += n as u64;
    }

    let computed = NiDigest::new(d.alg_id(), hasher.finish())?;
    if &computed == d {
        tmp.persist(destination)
            .map_err(|e| WellKnownError::Destination {
                path: destination.to_path_buf(),
                source: e.error,
            })?;
        Ok(report(FetchStatus::Verified, bytes_read, Some(computed)))
    } else {
        // Temp file is removed on drop; the destination is never written.
        Ok(report(
            FetchStatus::ChecksumMismatch,
            bytes_read,
            Some(computed),
        ))
    }
}
