//! Binding real archives (ZIP files, exploded directories, BagIt bags) to
//! arcp base URIs, and serving entry listings and contents.

use std::fs::File;
use std::io::{self, Read, Seek, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use thiserror::Error;
use zip::ZipArchive;

use crate::digest::{DigestError, NiDigest};
use crate::mint::{self, MintStrategy, SystemRandom};
use crate::model::{self, ArcpUri, ParseError};
use crate::resolve::{self, EntryKey, ResolutionError};

#[derive(Debug, Error)]
pub enum ArchiveError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: io::Error,
    },
    #[error("{path} is not a ZIP file or directory")]
    UnknownFormat { path: PathBuf },
    #[error("corrupt ZIP archive: {0}")]
    Zip(#[from] zip::result::ZipError),
    #[error("declared External-Identifier {value:?} is not a valid arcp URI: {source}")]
    BadDeclaredIdentifier {
        value: String,
        source: ParseError,
    },
    #[error("URI {uri} does not belong to this archive (base {base})")]
    AuthorityMismatch { uri: Box<ArcpUri>, base: Box<ArcpUri> },
    #[error("no entry {0:?} in archive")]
    NotFound(String),
    #[error("{0:?} is a directory, not a file")]
    IsDirectory(String),
    #[error("hostile entry name {0:?} rejected")]
    HostileEntryName(String),
    #[error(transparent)]
    Resolution(#[from] ResolutionError),
    #[error(transparent)]
    Mint(#[from] mint::MintError),
    #[error(transparent)]
    Digest(#[from] DigestError),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("bag-info.txt line {line}: {detail}")]
    BagFormat { line: usize, detail: String },
}

/// How the base URI for [`ArchiveHandle::open`] is chosen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OpenStrategy {
    /// Adopt a valid arcp `External-Identifier` from `bag-info.txt` when
    /// present; otherwise hash ZIP files and assign directories a random
    /// UUID.
    Auto,
    /// Mint with the given strategy, ignoring any declared identifier.
    Mint(MintStrategy),
}

/// How the handle's base was actually obtained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrategyUsed {
    Minted(MintStrategy),
    /// Self-declared via BagIt `External-Identifier`.
    Declared,
}

enum Backend {
    Zip(Mutex<ZipArchive<File>>),
    Directory,
}

/// An open archive bound to a root arcp base URI.
///
/// Read-only after open; supports concurrent readers (ZIP access is
/// serialized internally).
pub struct ArchiveHandle {
    backend: Backend,
    source: PathBuf,
    base: ArcpUri,
    strategy_used: StrategyUsed,
    /// Raw `External-Identifier` value, if the archive declared one —
    /// surfaced even when it is not an adoptable arcp URI.
    declared_identifier: Option<String>,
}

/// One archive member with its absolute arcp URI.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: EntryKey,
    pub size: u64,
    pub is_directory: bool,
    pub uri: ArcpUri,
}

/// Parsed BagIt `bag-info.txt` metadata.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BagInfo {
    labels: Vec<(String, String)>,
}

impl BagInfo {
    /// Label/value pairs in file order.
    pub fn labels(&self) -> &[(String, String)] {
        &self.labels
    }

    /// Value of the first `External-Identifier` label, if any.
    pub fn external_identifier(&self) -> Option<&str> {
        self.labels
            .iter()
            .find(|(l, _)| l == "External-Identifier")
            .map(|(_, v)| v.as_str())
    }
}

/// Parses BagIt `bag-info.txt` bytes: `Label: value` lines, with lines
/// beginning with whitespace continuing the previous value (joined by a
/// single space).
pub fn parse_bag_info(text: &[u8]) -> Result<BagInfo, ArchiveError> {
    let text = std::str::from_utf8(text).map_err(|e| ArchiveError::BagFormat {
        line: 0,
        detail: format!("not UTF-8: {e}"),
    })?;
    let mut labels: Vec<(String, String)> = Vec::new();
    for (idx, raw) in text.split('\n').enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.is_empty() {
            continue;
        }
        if line.starts_with(' ') || line.starts_with('\t') {
            match labels.last_mut() {
                Some((_, value)) => {
                    if !value.is_empty() {
                        value.push(' ');
                    }
                    value.push_str(line.trim_start());
                }
                None => {
                    return Err(ArchiveError::BagFormat {
                        line: idx + 1,
                        detail: "continuation line with no preceding label".into(),
                    })
                }
            }
            continue;
        }
        let (label, value) = line.split_once(':').ok_or_else(|| ArchiveError::BagFormat {
            line: idx + 1,
            detail: format!("line {line:?} has no colon and is not a continuation"),
        })?;
        labels.push((label.trim().to_string(), value.trim_start().to_string()));
    }
    Ok(BagInfo { labels })
}

impl ArchiveHandle {
    /// Opens a ZIP file or directory tree and binds it to a base URI.
    ///
    /// Under [`OpenStrategy::Auto`], a valid arcp `External-Identifier` in a
    /// BagIt `bag-info.txt` wins; otherwise ZIP files are hash-minted with
    /// sha-256 and directories get a random UUID. A declared identifier
    /// that starts with `arcp:` but fails to parse is an error, never a
    /// silent re-mint.
    pub fn open(path: &Path, strategy: OpenStrategy) -> Result<Self, ArchiveError> {
        let meta = std::fs::metadata(path).map_err(|e| ArchiveError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let backend = if meta.is_dir() {
            Backend::Directory
        } else {
            let mut file = File::open(path).map_err(|e| ArchiveError::Io {
                path: path.to_path_buf(),
                source: e,
            })?;
            let mut magic = [0u8; 2];
            let n = file.read(&mut magic).map_err(|e| ArchiveError::Io {
                path: path.to_path_buf(),
                source: e,
            })?;
            if n < 2 || &magic != b"PK" {
                return Err(ArchiveError::UnknownFormat {
                    path: path.to_path_buf(),
                });
            }
            file.rewind().map_err(|e| ArchiveError::Io {
                path: path.to_path_buf(),
                source: e,
            })?;
            Backend::Zip(Mutex::new(ZipArchive::new(file)?))
        };

        let declared_identifier = read_bag_info(&backend, path)?
            .and_then(|info| info.external_identifier().map(str::to_string));

        let (base, strategy_used) = match strategy {
            OpenStrategy::Auto => match declared_identifier.as_deref() {
                Some(value) if value.trim().starts_with("arcp:") => {
                    let uri = model::parse(value.trim()).map_err(|e| {
                        ArchiveError::BadDeclaredIdentifier {
                            value: value.to_string(),
                            source: e,
                        }
                    })?;
                    (uri.to_base(), StrategyUsed::Declared)
                }
                _ => {
                    let s = match backend {
                        Backend::Zip(_) => MintStrategy::Hash("sha-256".into()),
                        Backend::Directory => MintStrategy::RandomUuid,
                    };
                    (mint_base(&s, path, &backend)?, StrategyUsed::Minted(s))
                }
            },
            OpenStrategy::Mint(s) => {
                (mint_base(&s, path, &backend)?, StrategyUsed::Minted(s.clone()))
            }
        };

        Ok(ArchiveHandle {
            backend,
            source: path.to_path_buf(),
            base,
            strategy_used,
            declared_identifier,
        })
    }

    /// The archive's root arcp URI (path `/`).
    pub fn base(&self) -> &ArcpUri {
        &self.base
    }

    pub fn source(&self) -> &Path {
        &self.source
    }

    pub fn strategy_used(&self) -> &StrategyUsed {
        &self.strategy_used
    }

    /// Raw `External-Identifier` value from `bag-info.txt`, whether or not
    /// it was adopted as base (e.g. `urn:uuid:` identifiers are surfaced
    /// here but never adopted).
    pub fn declared_identifier(&self) -> Option<&str> {
        self.declared_identifier.as_deref()
    }

    /// All file and directory entries, each mapped to an absolute arcp URI
    /// under the base. Deterministic order: lexicographic by key segments.
    ///
    /// Hostile names (backslash separators, absolute paths, dot segments)
    /// fail the listing.
    pub fn list_entries(&self) -> Result<Vec<Entry>, ArchiveError> {
        let mut entries = match &self.backend {
            Backend::Zip(zip) => {
                let mut zip = zip.lock().unwrap();
                let mut raw: Vec<(String, u64, bool)> = Vec::with_capacity(zip.len());
                for i in 0..zip.len() {
                    let f = zip.by_index(i)?;
                    let name = f.name().to_string();
                    check_zip_entry_name(&name)?;
                    raw.push((name, f.size(), f.is_dir()));
                }
                drop(zip);
                // Duplicate names: last occurrence wins.
                let mut out: Vec<Entry> = Vec::with_capacity(raw.len());
                for (name, size, is_dir) in raw {
                    let uri = resolve::from_entry_name(&self.base, &name, is_dir)?;
                    let key = resolve::to_entry_key(&uri)?;
                    let entry = Entry {
                        key,
                        size,
                        is_directory: is_dir,
                        uri,
                    };
                    if let Some(prev) = out.iter_mut().find(|e| e.key == entry.key) {
                        log::warn!(
                            "duplicate entry {:?} in {}: keeping last occurrence",
                            entry.key.joined(),
                            self.source.display()
                        );
                        *prev = entry;
                    } else {
                        out.push(entry);
                    }
                }
                out
            }
            Backend::Directory => {
                let mut out = Vec::new();
                for item in walkdir::WalkDir::new(&self.source).min_depth(1) {
                    let item = item.map_err(|e| ArchiveError::Io {
                        path: self.source.clone(),
                        source: io::Error::other(e),
                    })?;
                    let rel = item
                        .path()
                        .strip_prefix(&self.source)
                        .expect("walkdir yields paths under its root");
                    let name = rel
                        .to_str()
                        .ok_or_else(|| {
                            ArchiveError::HostileEntryName(rel.to_string_lossy().into_owned())
                        })?
                        .to_string();
                    let is_dir = item.file_type().is_dir();
                    let size = if is_dir { 0 } else { item.metadata().map(|m| m.len()).unwrap_or(0) };
                    let uri = resolve::from_entry_name(&self.base, &name, is_dir)?;
                    let key = resolve::to_entry_key(&uri)?;
                    out.push(Entry {
                        key,
                        size,
                        is_directory: is_dir,
                        uri,
                    });
                }
                out
            }
        };
        entries.sort_by(|a, b| {
            a.key
                .segments()
                .cmp(b.key.segments())
                .then(a.is_directory.cmp(&b.is_directory))
        });
        Ok(entries)
    }

    /// Streams an entry's bytes into `out`, returning the byte count.
    ///
    /// The URI must share this archive's authority; the lookup key is
    /// computed via [`resolve::to_entry_key`], so traversal attempts error
    /// before any I/O.
    pub fn read_entry_to(&self, uri: &ArcpUri, out: &mut dyn Write) -> Result<u64, ArchiveError> {
        if uri.authority() != self.base.authority() {
            return Err(ArchiveError::AuthorityMismatch {
                uri: Box::new(uri.clone()),
                base: Box::new(self.base.clone()),
            });
        }
        let key = resolve::to_entry_key(uri)?;
        if key.is_root() || key.is_directory() {
            return Err(ArchiveError::IsDirectory(key.joined()));
        }
        let name = key.joined();
        match &self.backend {
            Backend::Zip(zip) => {
                let mut zip = zip.lock().unwrap();
                let index = zip.index_for_name(&name);
                let Some(index) = index else {
                    if zip.index_for_name(&format!("{name}/")).is_some() {
                        return Err(ArchiveError::IsDirectory(name));
                    }
                    return Err(ArchiveError::NotFound(name));
                };
                let mut f = zip.by_index(index)?;
                if f.is_dir() {
                    return Err(ArchiveError::IsDirectory(name));
                }
                io::copy(&mut f, out).map_err(|e| ArchiveError::Io {
                    path: self.source.clone(),
                    source: e,
                })
            }
            Backend::Directory => {
                let local = resolve::to_local_path(&key, &self.source)?;
                if local.is_dir() {
                    return Err(ArchiveError::IsDirectory(name));
                }
                let mut file = File::open(&local).map_err(|e| {
                    if e.kind() == io::ErrorKind::NotFound {
                        ArchiveError::NotFound(name.clone())
                    } else {
                        ArchiveError::Io {
                            path: local.clone(),
                            source: e,
                        }
                    }
                })?;
                io::copy(&mut file, out).map_err(|e| ArchiveError::Io {
                    path: local.clone(),
                    source: e,
                })
            }
        }
    }

    /// Reads an entry fully into memory.
    pub fn read_entry(&self, uri: &ArcpUri) -> Result<Vec<u8>, ArchiveError> {
        let mut buf = Vec::new();
        self.read_entry_to(uri, &mut buf)?;
        Ok(buf)
    }

    /// Streaming digest of the whole archive file — the same bytes hash
    /// minting uses. Directory trees have no canonical byte stream and are
    /// unsupported.
    pub fn archive_digest(&self, alg_id: &str) -> Result<NiDigest, ArchiveError> {
        match &self.backend {
            Backend::Zip(_) => {
                let file = File::open(&self.source).map_err(|e| ArchiveError::Io {
                    path: self.source.clone(),
                    source: e,
                })?;
                Ok(NiDigest::of_reader(alg_id, file)?)
            }
            Backend::Directory => Err(ArchiveError::Unsupported(
                "directory trees have no canonical byte stream to digest".into(),
            )),
        }
    }
}

fn check_zip_entry_name(name: &str) -> Result<(), ArchiveError> {
    if name.contains('\\') || name.starts_with('/') || name.contains('\0') {
        return Err(ArchiveError::HostileEntryName(name.to_string()));
    }
    Ok(())
}

fn mint_base(
    strategy: &MintStrategy,
    path: &Path,
    backend: &Backend,
) -> Result<ArcpUri, ArchiveError> {
    match strategy {
        MintStrategy::RandomUuid => Ok(mint::mint_uuid_v4(&mut SystemRandom)?),
        MintStrategy::LocationUuid(url) => Ok(mint::mint_from_location(url)?),
        MintStrategy::Hash(alg) => match backend {
            Backend::Zip(_) => {
                let file = File::open(path).map_err(|e| ArchiveError::Io {
                    path: path.to_path_buf(),
                    source: e,
                })?;
                Ok(mint::mint_from_bytes(file, alg)?)
            }
            Backend::Directory => Err(ArchiveError::Unsupported(
                "hash minting needs a file; directories have no canonical bytes".into(),
            )),
        },
        MintStrategy::Name(name) => Ok(mint::mint_from_name(name)?),
    }
}

/// Reads `bag-info.txt` from a directory root or ZIP root, if present.
fn read_bag_info(backend: &Backend, path: &Path) -> Result<Option<BagInfo>, ArchiveError> {
    let bytes = match backend {
        Backend::Directory => {
            let candidate = path.join("bag-info.txt");
            if !candidate.is_file() {
                return Ok(None);
            }
            std::fs::read(&candidate).map_err(|e| ArchiveError::Io {
                path: candidate,
                source: e,
            })?
        }
        Backend::Zip(zip) => {
            let mut zip = zip.lock().unwrap();
            let Some(index) = zip.index_for_name("bag-info.txt") else {
                return Ok(None);
            };
            let mut f = zip.by_index(index)?;
            let mut buf = Vec::new();
            f.read_to_end(&mut buf).map_err(|e| ArchiveError::Io {
                path: path.to_path_buf(),
                source: e,
            })?;
            buf
        }
    };
    parse_bag_info(&bytes).map(Some)
}
