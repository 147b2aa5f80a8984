//! The arcp URI data model: strict parsing, validation, normalization and
//! serialization.
//!
//! An arcp identifier has the shape
//! `arcp://<prefix>,<namespace><path>[?query][#fragment]` where the prefix
//! selects one of three authority strategies: `uuid`, `ni` or `name`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;
use uuid::Uuid;

use crate::digest::NiDigest;
use crate::syntax;

/// How an archive is identified: the part between `arcp://` and the first
/// `/`, split at the comma into a prefix label and a namespace.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Authority {
    /// `uuid,<36-char hyphenated uuid>` — random (v4), location-derived (v5)
    /// or self-declared.
    Uuid(Uuid),
    /// `ni,<alg>;<base64url digest>` — content hash of the archive bytes.
    Ni(NiDigest),
    /// `name,<dotted.app.name>` — application-chosen name.
    Name(String),
}

impl Authority {
    pub fn prefix_label(&self) -> &'static str {
        match self {
            Authority::Uuid(_) => "uuid",
            Authority::Ni(_) => "ni",
            Authority::Name(_) => "name",
        }
    }

    /// The namespace as it appears after the comma in canonical form.
    pub fn namespace_text(&self) -> String {
        match self {
            Authority::Uuid(u) => u.hyphenated().to_string(),
            Authority::Ni(d) => format!("{};{}", d.alg_id(), d.to_base64url()),
            Authority::Name(n) => n.clone(),
        }
    }

    /// Canonical authority component, `<prefix>,<namespace>`.
    pub fn to_text(&self) -> String {
        format!("{},{}", self.prefix_label(), self.namespace_text())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    NotArcpScheme,
    BadPrefix,
    BadUuid,
    BadNiAuthority,
    BadName,
    BadPath,
    Empty,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ParseErrorKind::NotArcpScheme => "NotArcpScheme",
            ParseErrorKind::BadPrefix => "BadPrefix",
            ParseErrorKind::BadUuid => "BadUuid",
            ParseErrorKind::BadNiAuthority => "BadNiAuthority",
            ParseErrorKind::BadName => "BadName",
            ParseErrorKind::BadPath => "BadPath",
            ParseErrorKind::Empty => "Empty",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{kind} at byte {offset}: {detail}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub detail: String,
    /// Byte position in the input where the problem was detected.
    pub offset: usize,
}

impl ParseError {
    fn new(kind: ParseErrorKind, offset: usize, detail: impl Into<String>) -> Self {
        ParseError {
            kind,
            offset,
            detail: detail.into(),
        }
    }
}

/// A parsed arcp identifier.
///
/// Values are immutable and canonical: the path is kept in percent-encoded
/// form, the UUID hex and prefix label are lowercase, and ni digest text is
/// preserved byte-for-byte (base64url is case-significant).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ArcpUri {
    authority: Authority,
    path: String,
    query: Option<String>,
    fragment: Option<String>,
}

impl ArcpUri {
    /// The root identifier for an archive: path `/`, no query or fragment.
    pub fn root(authority: Authority) -> Self {
        ArcpUri {
            authority,
            path: "/".to_string(),
            query: None,
            fragment: None,
        }
    }

    /// Builds a URI from already-validated components. `path` must be a
    /// valid percent-encoded path-absolute string.
    pub(crate) fn from_parts(
        authority: Authority,
        path: String,
        query: Option<String>,
        fragment: Option<String>,
    ) -> Self {
        debug_assert!(path.starts_with('/'));
        ArcpUri {
            authority,
            path,
            query,
            fragment,
        }
    }

    pub fn authority(&self) -> &Authority {
        &self.authority
    }

    /// Percent-encoded absolute path, always starting with `/`.
    pub fn path(&self) -> &str {
        &self.path
    }

    pub fn query(&self) -> Option<&str> {
        self.query.as_deref()
    }

    pub fn fragment(&self) -> Option<&str> {
        self.fragment.as_deref()
    }

    /// Whether this is the archive's base URI (path `/`, nothing else).
    pub fn is_root(&self) -> bool {
        self.path == "/" && self.query.is_none() && self.fragment.is_none()
    }

    /// This URI's archive base: same authority, path `/`.
    pub fn to_base(&self) -> ArcpUri {
        ArcpUri::root(self.authority.clone())
    }

    /// Copy without the fragment component.
    pub fn without_fragment(&self) -> ArcpUri {
        ArcpUri {
            fragment: None,
            ..self.clone()
        }
    }

    /// The UUID when the authority uses the `uuid` strategy.
    pub fn uuid(&self) -> Option<Uuid> {
        match &self.authority {
            Authority::Uuid(u) => Some(*u),
            _ => None,
        }
    }

    /// The `(algorithm, digest)` pair when the authority uses the `ni`
    /// strategy.
    pub fn hash(&self) -> Option<&NiDigest> {
        match &self.authority {
            Authority::Ni(d) => Some(d),
            _ => None,
        }
    }

    /// The dotted name when the authority uses the `name` strategy.
    pub fn name(&self) -> Option<&str> {
        match &self.authority {
            Authority::Name(n) => Some(n),
            _ => None,
        }
    }

    /// Canonical textual form.
    pub fn serialize(&self) -> String {
        let mut out = String::with_capacity(self.path.len() + 48);
        out.push_str("arcp://");
        out.push_str(&self.authority.to_text());
        out.push_str(&self.path);
        if let Some(q) = &self.query {
            out.push('?');
            out.push_str(q);
        }
        if let Some(f) = &self.fragment {
            out.push('#');
            out.push_str(f);
        }
        out
    }
}

impl fmt::Display for ArcpUri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

impl FromStr for ArcpUri {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

/// True iff `input` parses as an arcp URI.
pub fn is_arcp(input: &str) -> bool {
    parse(input).is_ok()
}

/// Parses an arcp URI string.
///
/// The scheme and prefix label are matched case-insensitively and stored
/// lowercase; UUID hex is lowercased; ni digest text is preserved exactly.
/// An empty path after the authority normalizes to `/`.
pub fn parse(input: &str) -> Result<ArcpUri, ParseError> {
    if input.is_empty() {
        return Err(ParseError::new(ParseErrorKind::Empty, 0, "empty input"));
    }
    let colon = input.find(':').ok_or_else(|| {
        ParseError::new(ParseErrorKind::NotArcpScheme, 0, "no URI scheme present")
    })?;
    let scheme = &input[..colon];
    if !scheme.eq_ignore_ascii_case("arcp") {
        return Err(ParseError::new(
            ParseErrorKind::NotArcpScheme,
            0,
            format!("scheme {scheme:?} is not \"arcp\""),
        ));
    }
    let rest = &input[colon + 1..];
    if !rest.starts_with("//") {
        return Err(ParseError::new(
            ParseErrorKind::BadPrefix,
            colon + 1,
            "expected \"//\" and an authority after the scheme",
        ));
    }
    let auth_start = colon + 3;
    let after_slashes = &input[auth_start..];
    let auth_end_rel = after_slashes
        .find(['/', '?', '#'])
        .unwrap_or(after_slashes.len());
    let authority_text = &after_slashes[..auth_end_rel];
    let authority = parse_authority(authority_text, auth_start)?;

    let mut rem = &input[auth_start + auth_end_rel..];
    let mut offset = auth_start + auth_end_rel;

    // path component: up to '?' or '#'
    let path_end = rem.find(['?', '#']).unwrap_or(rem.len());
    let path_text = &rem[..path_end];
    let path = if path_text.is_empty() {
        "/".to_string()
    } else {
        if let Err(bad) = syntax::check_escaped(path_text, |b| syntax::is_pchar(b) || b == b'/') {
            return Err(ParseError::new(
                ParseErrorKind::BadPath,
                offset + bad,
                "illegal character or malformed percent-escape in path",
            ));
        }
        path_text.to_string()
    };
    offset += path_end;
    rem = &rem[path_end..];

    let mut query = None;
    if let Some(stripped) = rem.strip_prefix('?') {
        let q_end = stripped.find('#').unwrap_or(stripped.len());
        let q = &stripped[..q_end];
        if let Err(bad) =
            syntax::check_escaped(q, |b| syntax::is_pchar(b) || b == b'/' || b == b'?')
        {
            return Err(ParseError::new(
                ParseErrorKind::BadPath,
                offset + 1 + bad,
                "illegal character or malformed percent-escape in query",
            ));
        }
        query = Some(q.to_string());
        offset += 1 + q_end;
        rem = &stripped[q_end..];
    }

    let mut fragment = None;
    if let Some(stripped) = rem.strip_prefix('#') {
        if let Err(bad) =
            syntax::check_escaped(stripped, |b| syntax::is_pchar(b) || b == b'/' || b == b'?')
        {
            return Err(ParseError::new(
                ParseErrorKind::BadPath,
                offset + 1 + bad,
                "illegal character or malformed percent-escape in fragment",
            ));
        }
        fragment = Some(stripped.to_string());
    }

    Ok(ArcpUri {
        authority,
        path,
        query,
        fragment,
    })
}

/// Parses the `<prefix>,<namespace>` authority component. `offset` is the
/// byte position of the component in the original input, used for error
/// reporting.
pub(crate) fn parse_authority(text: &str, offset: usize) -> Result<Authority, ParseError> {
    let comma = text.find(',').ok_or_else(|| {
        ParseError::new(
            ParseErrorKind::BadPrefix,
            offset,
            "authority must be \"<prefix>,<namespace>\"",
        )
    })?;
    let prefix = text[..comma].to_ascii_lowercase();
    let ns = &text[comma + 1..];
    let ns_offset = offset + comma + 1;
    match prefix.as_str() {
        "uuid" => parse_uuid_namespace(ns, ns_offset).map(Authority::Uuid),
        "ni" => parse_ni_namespace(ns, ns_offset).map(Authority::Ni),
        "name" => validate_name(ns, ns_offset).map(Authority::Name),
        other => Err(ParseError::new(
            ParseErrorKind::BadPrefix,
            offset,
            format!("unknown authority prefix {other:?} (expected uuid, ni or name)"),
        )),
    }
}

fn parse_uuid_namespace(ns: &str, offset: usize) -> Result<Uuid, ParseError> {
    let bytes = ns.as_bytes();
    let shape_ok = bytes.len() == 36
        && bytes.iter().enumerate().all(|(i, &b)| match i {
            8 | 13 | 18 | 23 => b == b'-',
            _ => b.is_ascii_hexdigit(),
        });
    if !shape_ok {
        return Err(ParseError::new(
            ParseErrorKind::BadUuid,
            offset,
            format!("{ns:?} is not a 36-character hyphenated UUID"),
        ));
    }
    Uuid::parse_str(&ns.to_ascii_lowercase()).map_err(|e| {
        ParseError::new(ParseErrorKind::BadUuid, offset, e.to_string())
    })
}

fn parse_ni_namespace(ns: &str, offset: usize) -> Result<NiDigest, ParseError> {
    let semi = ns.find(';').ok_or_else(|| {
        ParseError::new(
            ParseErrorKind::BadNiAuthority,
            offset,
            "ni namespace must be \"<alg>;<base64url digest>\"",
        )
    })?;
    let alg = &ns[..semi];
    let digest_text = &ns[semi + 1..];
    if digest_text.is_empty()
        || !digest_text
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
    {
        return Err(ParseError::new(
            ParseErrorKind::BadNiAuthority,
            offset + semi + 1,
            "digest must be non-empty unpadded base64url",
        ));
    }
    NiDigest::from_base64url(alg, digest_text).map_err(|e| {
        ParseError::new(ParseErrorKind::BadNiAuthority, offset, e.to_string())
    })
}

/// Validates and lowercases a dotted app name: labels of `[a-z0-9-]+`
/// separated by single dots.
pub(crate) fn validate_name(name: &str, offset: usize) -> Result<String, ParseError> {
    let lowered = name.to_ascii_lowercase();
    let ok = !lowered.is_empty()
        && lowered.split('.').all(|label| {
            !label.is_empty()
                && label
                    .bytes()
                    .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-')
        });
    if !ok {
        return Err(ParseError::new(
            ParseErrorKind::BadName,
            offset,
            format!("{name:?} is not a dotted name of [a-z0-9-] labels"),
        ));
    }
    Ok(lowered)
}
