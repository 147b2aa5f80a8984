//! Archive and Package (arcp) URI scheme support.
//!
//! arcp identifiers give location-independent URIs to resources inside file
//! archives, of the form `arcp://<prefix>,<namespace>/<path>`. The authority
//! declares how the archive is identified: a UUID (`uuid,`), a content hash
//! (`ni,`) or a dotted application name (`name,`).
//!
//! The crate is organised around:
//!
//! - [`model`] — parsing, validation and serialization of arcp URIs
//! - [`mint`] — generating base URIs (random UUIDv4, location UUIDv5,
//!   content hash, app name)
//! - [`resolve`] — relative-reference resolution and safe mapping of arcp
//!   paths to archive entry keys and local filesystem paths
//! - [`archive`] — binding ZIP files, directory trees and BagIt bags to a
//!   base URI and serving their entries
//! - [`wellknown`] — ni URIs, `/.well-known/ni/` resolver URLs and verified
//!   retrieval of hash-identified archives

pub mod archive;
pub mod digest;
pub mod mint;
pub mod model;
pub mod resolve;
mod syntax;
pub mod wellknown;

pub use archive::{ArchiveHandle, BagInfo, Entry, OpenStrategy};
pub use digest::NiDigest;
pub use mint::MintStrategy;
pub use model::{ArcpUri, Authority, ParseError};
pub use resolve::{EntryKey, Resolved, ResolutionError};
pub use wellknown::{FetchReport, FetchStatus};
