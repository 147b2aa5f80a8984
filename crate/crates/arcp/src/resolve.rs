//! Relative-reference resolution against arcp base URIs, and safe mapping
//! of arcp paths to archive entry keys and local filesystem paths.
//!
//! Path traversal is the central risk here: dot segments are removed at the
//! URI layer, decoded `.`/`..` segments are rejected outright, `%2F` never
//! becomes a separator, and [`to_local_path`] re-checks the canonicalized
//! result against the extraction root as a second layer of defense.

use std::path::{Path, PathBuf};

use percent_encoding::utf8_percent_encode;
use thiserror::Error;

use crate::model::{self, ArcpUri, Authority};
use crate::syntax;

/// A decoded archive entry key: path segments relative to the archive root.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntryKey {
    segments: Vec<String>,
    is_directory: bool,
}

impl EntryKey {
    /// The archive root (empty segment list, directory).
    pub fn root() -> Self {
        EntryKey {
            segments: Vec::new(),
            is_directory: true,
        }
    }

    /// Builds a key from decoded segments. Segments must be non-empty,
    /// not `.` or `..`, and free of `/` and NUL.
    pub fn new(
        segments: Vec<String>,
        is_directory: bool,
    ) -> Result<Self, ResolutionError> {
        for seg in &segments {
            check_segment(seg)?;
        }
        Ok(EntryKey {
            segments,
            is_directory,
        })
    }

    pub fn segments(&self) -> &[String] {
        &self.segments
    }

    pub fn is_directory(&self) -> bool {
        self.is_directory
    }

    pub fn is_root(&self) -> bool {
        self.segments.is_empty()
    }

    /// Segments joined with `/`, no trailing separator. Empty for the root.
    pub fn joined(&self) -> String {
        self.segments.join("/")
    }
}

fn check_segment(seg: &str) -> Result<(), ResolutionError> {
    if seg.is_empty() {
        return Err(ResolutionError::MalformedReference {
            detail: "empty path segment".into(),
        });
    }
    if seg == "." || seg == ".." {
        return Err(ResolutionError::Traversal {
            detail: format!("segment {seg:?} not allowed in an entry key"),
        });
    }
    if seg.contains('/') || seg.contains('\0') {
        return Err(ResolutionError::MalformedReference {
            detail: format!("segment {seg:?} contains '/' or NUL"),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ResolutionError {
    #[error("path traversal: {detail}")]
    Traversal { detail: String },
    #[error("bad percent escape: {detail}")]
    BadPercentEscape { detail: String },
    #[error("not an arcp base: {detail}")]
    NotArcpBase { detail: String },
    #[error("encoded slash (%2F) not allowed inside a path segment")]
    EncodedSlash,
    #[error("malformed reference: {detail}")]
    MalformedReference { detail: String },
}

/// Outcome of resolving a reference against an arcp base: either an arcp
/// URI, or an absolute non-arcp URI passed through as-is.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolved {
    Arcp(ArcpUri),
    External(String),
}

impl Resolved {
    pub fn as_arcp(&self) -> Option<&ArcpUri> {
        match self {
            Resolved::Arcp(u) => Some(u),
            Resolved::External(_) => None,
        }
    }

    /// Textual form of the resolution result.
    pub fn to_text(&self) -> String {
        match self {
            Resolved::Arcp(u) => u.serialize(),
            Resolved::External(s) => s.clone(),
        }
    }
}

/// Components of a generic URI-reference, split per RFC 3986 but not
/// otherwise validated.
struct RefParts<'a> {
    scheme: Option<&'a str>,
    authority: Option<&'a str>,
    path: &'a str,
    query: Option<&'a str>,
    fragment: Option<&'a str>,
}

fn split_uri_reference(input: &str) -> RefParts<'_> {
    let (before_frag, fragment) = match input.split_once('#') {
        Some((a, f)) => (a, Some(f)),
        None => (input, None),
    };
    let (before_query, query) = match before_frag.split_once('?') {
        Some((a, q)) => (a, Some(q)),
        None => (before_frag, None),
    };
    // A scheme is a leading ALPHA *(ALPHA/DIGIT/+/-/.) followed by ':',
    // appearing before any '/'.
    let mut scheme = None;
    let mut rest = before_query;
    if let Some(colon) = before_query.find(':') {
        let candidate = &before_query[..colon];
        let slash = before_query.find('/').unwrap_or(usize::MAX);
        let valid = colon < slash
            && candidate
                .as_bytes()
                .first()
                .is_some_and(|b| b.is_ascii_alphabetic())
            && candidate
                .bytes()
                .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'+' | b'-' | b'.'));
        if valid {
            scheme = Some(candidate);
            rest = &before_query[colon + 1..];
        }
    }
    let (authority, path) = if let Some(after) = rest.strip_prefix("//") {
        let end = after.find(['/', '?', '#']).unwrap_or(after.len());
        (Some(&after[..end]), &after[end..])
    } else {
        (None, rest)
    };
    RefParts {
        scheme,
        authority,
        path,
        query,
        fragment,
    }
}

/// Removes `.` and `..` segments from a path, per the generic URI
/// resolution algorithm.
fn remove_dot_segments(path: &str) -> String {
    let mut input = path.to_string();
    let mut output = String::with_capacity(path.len());
    while !input.is_empty() {
        if input.starts_with("../") {
            input.drain(..3);
        } else if input.starts_with("./") {
            input.drain(..2);
        } else if input.starts_with("/./") {
            input.replace_range(..3, "/");
        } else if input == "/." {
            input = "/".to_string();
        } else if input.starts_with("/../") {
            input.replace_range(..4, "/");
            pop_last_segment(&mut output);
        } else if input == "/.." {
            input = "/".to_string();
            pop_last_segment(&mut output);
        } else if input == "." || input == ".." {
            input.clear();
        } else {
            // move the first segment (with its leading '/', if any) across
            let start = usize::from(input.starts_with('/'));
            let end = input[start..]
                .find('/')
                .map(|i| i + start)
                .unwrap_or(input.len());
            output.push_str(&input[..end]);
            input.drain(..end);
        }
    }
    output
}

fn pop_last_segment(output: &mut String) {
    if let Some(pos) = output.rfind('/') {
        output.truncate(pos);
    } else {
        output.clear();
    }
}

/// Merges a relative path with the base path, per the generic URI
/// resolution algorithm (the base always has an authority here, so an
/// empty base path merges to `/` + reference path).
fn merge_paths(base_path: &str, ref_path: &str) -> String {
    match base_path.rfind('/') {
        Some(pos) => format!("{}{}", &base_path[..=pos], ref_path),
        None => format!("/{ref_path}"),
    }
}

/// Resolves a URI reference against an arcp base, per the generic
/// hierarchical resolution algorithm (merge paths, remove dot segments).
///
/// Absolute arcp references replace the base entirely; absolute non-arcp
/// references are returned as [`Resolved::External`] unchanged.
pub fn resolve_reference(base: &ArcpUri, reference: &str) -> Result<Resolved, ResolutionError> {
    let parts = split_uri_reference(reference);

    if let Some(scheme) = parts.scheme {
        if !scheme.eq_ignore_ascii_case("arcp") {
            return Ok(Resolved::External(reference.to_string()));
        }
    }

    let check = |text: &str, what: &str, extra: &[u8]| -> Result<(), ResolutionError> {
        syntax::check_escaped(text, |b| {
            syntax::is_pchar(b) || b == b'/' || extra.contains(&b)
        })
        .map_err(|off| ResolutionError::MalformedReference {
            detail: format!("illegal character in {what} at byte {off}"),
        })
    };
    check(parts.path, "path", &[])?;
    if let Some(q) = parts.query {
        check(q, "query", &[b'?'])?;
    }
    if let Some(f) = parts.fragment {
        check(f, "fragment", &[b'?'])?;
    }

    let authority: Authority;
    let path: String;
    let mut query = parts.query.map(str::to_string);

    if let Some(auth_text) = parts.authority {
        authority = model::parse_authority(auth_text, 0).map_err(|e| {
            ResolutionError::MalformedReference {
                detail: format!("authority is not a valid arcp authority: {e}"),
            }
        })?;
        path = remove_dot_segments(parts.path);
    } else if parts.scheme.is_some() {
        // arcp requires an authority component.
        return Err(ResolutionError::MalformedReference {
            detail: "arcp reference lacks an authority".into(),
        });
    } else {
        authority = base.authority().clone();
        if parts.path.is_empty() {
            path = base.path().to_string();
            if query.is_none() {
                query = base.query().map(str::to_string);
            }
        } else if parts.path.starts_with('/') {
            path = remove_dot_segments(parts.path);
        } else {
            path = remove_dot_segments(&merge_paths(base.path(), parts.path));
        }
    }

    let path = if path.is_empty() { "/".to_string() } else { path };
    if !path.starts_with('/') {
        // Cannot happen for a base with an authority, but keep the
        // invariant explicit.
        return Err(ResolutionError::MalformedReference {
            detail: format!("resolved path {path:?} is not absolute"),
        });
    }

    Ok(Resolved::Arcp(ArcpUri::from_parts(
        authority,
        path,
        query,
        parts.fragment.map(str::to_string),
    )))
}

/// Maps an arcp URI's path to a decoded [`EntryKey`].
///
/// Literal dot segments are normalized away (escaping the root is a
/// [`ResolutionError::Traversal`]); segments that *decode* to `.` or `..`
/// are rejected; `%2F` inside a segment is rejected rather than decoded.
pub fn to_entry_key(uri: &ArcpUri) -> Result<EntryKey, ResolutionError> {
    let path = uri.path();
    debug_assert!(path.starts_with('/'));
    if path == "/" {
        return Ok(EntryKey::root());
    }
    let is_directory = path.ends_with('/');
    let mut segments: Vec<String> = Vec::new();
    for raw in path[1..].split('/') {
        match raw {
            "" => continue,
            "." => continue,
            ".." => {
                if segments.pop().is_none() {
                    return Err(ResolutionError::Traversal {
                        detail: format!("path {path:?} escapes the archive root"),
                    });
                }
            }
            _ => {
                let lowered = raw.to_ascii_lowercase();
                if lowered.contains("%2f") {
                    return Err(ResolutionError::EncodedSlash);
                }
                let decoded = syntax::percent_decode(raw).map_err(|off| {
                    ResolutionError::BadPercentEscape {
                        detail: format!("in segment {raw:?} at byte {off}"),
                    }
                })?;
                let decoded = String::from_utf8(decoded).map_err(|_| {
                    ResolutionError::BadPercentEscape {
                        detail: format!("segment {raw:?} does not decode to UTF-8"),
                    }
                })?;
                if decoded.contains('\0') {
                    return Err(ResolutionError::BadPercentEscape {
                        detail: format!("segment {raw:?} decodes to a NUL byte"),
                    });
                }
                if decoded == "." || decoded == ".." {
                    return Err(ResolutionError::Traversal {
                        detail: format!("segment {raw:?} decodes to {decoded:?}"),
                    });
                }
                segments.push(decoded);
            }
        }
    }
    if segments.is_empty() {
        return Ok(EntryKey::root());
    }
    Ok(EntryKey {
        segments,
        is_directory,
    })
}

/// Joins an entry key onto an extraction root, guaranteeing the
/// canonicalized result stays under the root (symlinks resolved).
/// Never creates files; the returned path may not exist yet.
pub fn to_local_path(key: &EntryKey, extraction_root: &Path) -> Result<PathBuf, ResolutionError> {
    let root_canon = extraction_root
        .canonicalize()
        .map_err(|e| ResolutionError::Traversal {
            detail: format!(
                "extraction root {} cannot be canonicalized: {e}",
                extraction_root.display()
            ),
        })?;
    let mut candidate = root_canon.clone();
    for seg in &key.segments {
        check_segment(seg)?;
        candidate.push(seg);
    }
    // Canonicalize the deepest existing ancestor; this resolves any
    // symlink on the way and exposes escapes before anything is created.
    let mut probe: &Path = &candidate;
    loop {
        match probe.canonicalize() {
            Ok(resolved) => {
                if !resolved.starts_with(&root_canon) {
                    return Err(ResolutionError::Traversal {
                        detail: format!(
                            "{} resolves to {} outside {}",
                            candidate.display(),
                            resolved.display(),
                            root_canon.display()
                        ),
                    });
                }
                break;
            }
            Err(_) => match probe.parent() {
                Some(parent) => probe = parent,
                None => break,
            },
        }
    }
    Ok(candidate)
}

/// Builds an absolute arcp URI for an archive entry name under a root base.
///
/// Segments are percent-encoded (everything outside unreserved, sub-delims,
/// `:` and `@`; uppercase hex); a trailing `/` marks a directory.
pub fn from_entry_name(
    base: &ArcpUri,
    entry_name: &str,
    is_directory: bool,
) -> Result<ArcpUri, ResolutionError> {
    if base.path() != "/" || base.query().is_some() || base.fragment().is_some() {
        return Err(ResolutionError::NotArcpBase {
            detail: format!("base {base} is not a root arcp URI"),
        });
    }
    if entry_name.starts_with('/') {
        return Err(ResolutionError::MalformedReference {
            detail: "entry name must not start with '/'".into(),
        });
    }
    let trimmed = entry_name.strip_suffix('/').unwrap_or(entry_name);
    let mut encoded = String::with_capacity(trimmed.len() + 8);
    for seg in trimmed.split('/') {
        check_segment(seg)?;
        encoded.push('/');
        encoded.push_str(&utf8_percent_encode(seg, syntax::SEGMENT_ENCODE).to_string());
    }
    if is_directory {
        encoded.push('/');
    }
    Ok(ArcpUri::from_parts(
        base.authority().clone(),
        encoded,
        None,
        None,
    ))
}
