//! `arcp` — command-line front end for the Archive and Package URI scheme.
//!
//! Exit codes: 0 success, 1 operational error, 2 usage error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use serde_json::json;

use arcp::archive::StrategyUsed;
use arcp::mint::{self, FixedBytes, RandomSource, SystemRandom};
use arcp::model::{self, ArcpUri};
use arcp::wellknown;
use arcp::{ArchiveHandle, FetchStatus, MintStrategy, OpenStrategy};

#[derive(Parser)]
#[command(name = "arcp", version, about = "Mint, inspect and resolve arcp identifiers")]
struct Cli {
    /// Emit line-delimited JSON records instead of plain text
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mint an arcp base URI
    #[command(group(
        ArgGroup::new("strategy").required(true).multiple(false)
            .args(["uuid", "location", "hash", "name"])
    ))]
    Mint {
        /// Random UUIDv4 base
        #[arg(long)]
        uuid: bool,
        /// Deterministic UUIDv5 base derived from a download URL
        #[arg(long, value_name = "URL")]
        location: Option<String>,
        /// Hash-based base from a file's content digest
        #[arg(long, value_name = "FILE")]
        hash: Option<PathBuf>,
        /// Name-based base from a dotted app name
        #[arg(long, value_name = "NAME")]
        name: Option<String>,
        /// Entry path to join onto the minted base
        #[arg(long, value_name = "PATH")]
        path: Option<String>,
        /// Hash algorithm for --hash
        #[arg(long, default_value = "sha-256")]
        alg: String,
        /// Hex-encoded random bytes for reproducible --uuid minting
        #[arg(long, value_name = "HEX")]
        seed: Option<String>,
    },
    /// Parse an arcp URI and print its components
    Parse {
        uri: String,
        /// Resolver base for the derived well-known URL of ni URIs
        #[arg(long, env = "ARCP_RESOLVER")]
        resolver: Option<String>,
    },
    /// Resolve a relative reference against a base arcp URI
    Resolve { base: String, reference: String },
    /// List archive entries with their absolute arcp URIs
    Ls {
        archive: PathBuf,
        #[arg(long, value_enum, default_value_t = Strategy::Auto)]
        strategy: Strategy,
        /// Download URL for --strategy location
        #[arg(long, value_name = "URL")]
        url: Option<String>,
        /// Hash algorithm for --strategy hash
        #[arg(long, default_value = "sha-256")]
        alg: String,
    },
    /// Stream one archive entry to standard output
    Cat {
        archive: PathBuf,
        uri: String,
        #[arg(long, value_enum, default_value_t = Strategy::Auto)]
        strategy: Strategy,
        #[arg(long, value_name = "URL")]
        url: Option<String>,
        #[arg(long, default_value = "sha-256")]
        alg: String,
    },
    /// Print the identifier a bag declares via External-Identifier
    Bag { bag: PathBuf },
    /// Print the well-known retrieval URL for a hash-identified URI
    Locate {
        /// arcp ni URI or ni:// URI
        uri: String,
        #[arg(long, env = "ARCP_RESOLVER")]
        resolver: Option<String>,
    },
    /// Fetch a hash-identified archive and verify its checksum
    Get {
        /// arcp ni URI or ni:// URI
        uri: String,
        #[arg(long, env = "ARCP_RESOLVER")]
        resolver: Option<String>,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Strategy {
    Auto,
    Uuid,
    Hash,
    Location,
}

struct Output {
    json: bool,
}

/// Prints one line to stdout; a closed pipe ends the program quietly.
fn emit(line: impl std::fmt::Display) {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    if let Err(e) = writeln!(lock, "{line}") {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        panic!("failed writing to stdout: {e}");
    }
}

impl Output {
    fn value(&self, plain: &str, record: serde_json::Value) {
        if self.json {
            emit(record);
        } else {
            emit(plain);
        }
    }

    fn fail(&self, kind: &str, detail: &str) -> ExitCode {
        if self.json {
            emit(json!({ "error": kind, "detail": detail }));
        } else {
            eprintln!("error: {detail}");
        }
        ExitCode::from(1)
    }

    fn usage(&self, detail: &str) -> ExitCode {
        eprintln!("usage error: {detail}");
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let out = Output { json: cli.json };
    match run(cli.command, &out) {
        Ok(code) => code,
        Err(e) => out.fail(e.kind, &e.detail),
    }
}

struct CmdError {
    kind: &'static str,
    detail: String,
}

impl CmdError {
    fn new(kind: &'static str, detail: impl ToString) -> Self {
        CmdError {
            kind,
            detail: detail.to_string(),
        }
    }
}

fn run(command: Command, out: &Output) -> Result<ExitCode, CmdError> {
    match command {
        Command::Mint {
            uuid,
            location,
            hash,
            name,
            path,
            alg,
            seed,
        } => cmd_mint(out, uuid, location, hash, name, path, &alg, seed),
        Command::Parse { uri, resolver } => cmd_parse(out, &uri, resolver.as_deref()),
        Command::Resolve { base, reference } => cmd_resolve(out, &base, &reference),
        Command::Ls {
            archive,
            strategy,
            url,
            alg,
        } => {
            let strategy = open_strategy(strategy, url, &alg, out)?;
            cmd_ls(out, &archive, strategy)
        }
        Command::Cat {
            archive,
            uri,
            strategy,
            url,
            alg,
        } => {
            let strategy = open_strategy(strategy, url, &alg, out)?;
            cmd_cat(out, &archive, &uri, strategy)
        }
        Command::Bag { bag } => cmd_bag(out, &bag),
        Command::Locate { uri, resolver } => cmd_locate(out, &uri, resolver.as_deref()),
        Command::Get { uri, resolver, out: dest } => {
            cmd_get(out, &uri, resolver.as_deref(), &dest)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_mint(
    out: &Output,
    uuid: bool,
    location: Option<String>,
    hash: Option<PathBuf>,
    name: Option<String>,
    path: Option<String>,
    alg: &str,
    seed: Option<String>,
) -> Result<ExitCode, CmdError> {
    let base = if uuid {
        let mut source: Box<dyn RandomSource> = match seed {
            Some(hex_seed) => Box::new(FixedBytes::new(
                hex::decode(&hex_seed)
                    .map_err(|e| CmdError::new("BadSeed", format!("--seed: {e}")))?,
            )),
            None => Box::new(SystemRandom),
        };
        mint::mint_uuid_v4(source.as_mut()).map_err(|e| CmdError::new("MintError", e))?
    } else if let Some(url) = location {
        mint::mint_from_location(&url).map_err(|e| CmdError::new("MintError", e))?
    } else if let Some(file) = hash {
        let reader = std::fs::File::open(&file)
            .map_err(|e| CmdError::new("Io", format!("{}: {e}", file.display())))?;
        mint::mint_from_bytes(reader, alg).map_err(|e| CmdError::new("MintError", e))?
    } else if let Some(n) = name {
        mint::mint_from_name(&n).map_err(|e| CmdError::new("MintError", e))?
    } else {
        unreachable!("clap enforces strategy exclusivity");
    };

    let uri = match path {
        Some(p) if !p.is_empty() => {
            let is_dir = p.ends_with('/');
            arcp::resolve::from_entry_name(&base, &p, is_dir)
                .map_err(|e| CmdError::new("ResolutionError", e))?
        }
        _ => base,
    };
    out.value(&uri.serialize(), json!({ "uri": uri.serialize() }));
    Ok(ExitCode::SUCCESS)
}

fn cmd_parse(out: &Output, input: &str, resolver: Option<&str>) -> Result<ExitCode, CmdError> {
    let uri = match model::parse(input) {
        Ok(u) => u,
        Err(e) => {
            if out.json {
                emit(json!({
                    "error": e.kind.to_string(),
                    "detail": e.detail,
                    "offset": e.offset,
                }));
            } else {
                eprintln!("error: {e}");
            }
            return Ok(ExitCode::from(1));
        }
    };

    let mut record = serde_json::Map::new();
    record.insert("uri".into(), json!(uri.serialize()));
    record.insert("kind".into(), json!(uri.authority().prefix_label()));
    record.insert("namespace".into(), json!(uri.authority().namespace_text()));
    record.insert("path".into(), json!(uri.path()));
    if let Some(q) = uri.query() {
        record.insert("query".into(), json!(q));
    }
    if let Some(f) = uri.fragment() {
        record.insert("fragment".into(), json!(f));
    }

    let mut plain = vec![
        format!("uri: {}", uri.serialize()),
        format!("kind: {}", uri.authority().prefix_label()),
        format!("namespace: {}", uri.authority().namespace_text()),
        format!("path: {}", uri.path()),
    ];
    if let Some(q) = uri.query() {
        plain.push(format!("query: {q}"));
    }
    if let Some(f) = uri.fragment() {
        plain.push(format!("fragment: {f}"));
    }
    if let Some(digest) = uri.hash() {
        let ni = wellknown::to_ni_uri(digest);
        plain.push(format!("ni: {ni}"));
        plain.push(format!("hex: {}", digest.to_hex()));
        record.insert("ni".into(), json!(ni));
        record.insert("hex".into(), json!(digest.to_hex()));
        if let Some(resolver) = resolver {
            let url = wellknown::well_known_url(digest, resolver)
                .map_err(|e| CmdError::new("WellKnownError", e))?;
            plain.push(format!("wellknown: {url}"));
            record.insert("wellknown".into(), json!(url));
        }
    }
    out.value(&plain.join("\n"), serde_json::Value::Object(record));
    Ok(ExitCode::SUCCESS)
}

fn cmd_resolve(out: &Output, base: &str, reference: &str) -> Result<ExitCode, CmdError> {
    let base: ArcpUri = base
        .parse()
        .map_err(|e: model::ParseError| CmdError::new("ParseError", e))?;
    let resolved = arcp::resolve::resolve_reference(&base, reference)
        .map_err(|e| CmdError::new("ResolutionError", e))?;
    let text = resolved.to_text();
    out.value(
        &text,
        json!({ "uri": text, "arcp": resolved.as_arcp().is_some() }),
    );
    Ok(ExitCode::SUCCESS)
}

fn open_strategy(
    strategy: Strategy,
    url: Option<String>,
    alg: &str,
    out: &Output,
) -> Result<OpenStrategy, CmdError> {
    match strategy {
        Strategy::Auto => Ok(OpenStrategy::Auto),
        Strategy::Uuid => Ok(OpenStrategy::Mint(MintStrategy::RandomUuid)),
        Strategy::Hash => Ok(OpenStrategy::Mint(MintStrategy::Hash(alg.to_string()))),
        Strategy::Location => match url {
            Some(u) => Ok(OpenStrategy::Mint(MintStrategy::LocationUuid(u))),
            None => {
                out.usage("--strategy location requires --url");
                std::process::exit(2);
            }
        },
    }
}

fn cmd_ls(
    out: &Output,
    archive: &std::path::Path,
    strategy: OpenStrategy,
) -> Result<ExitCode, CmdError> {
    let handle = ArchiveHandle::open(archive, strategy)
        .map_err(|e| CmdError::new("ArchiveError", e))?;
    let entries = handle
        .list_entries()
        .map_err(|e| CmdError::new("ArchiveError", e))?;
    for entry in entries {
        let flag = if entry.is_directory { "d" } else { "f" };
        out.value(
            &format!("{}\t{}\t{}", entry.uri.serialize(), entry.size, flag),
            json!({
                "uri": entry.uri.serialize(),
                "size": entry.size,
                "dir": entry.is_directory,
            }),
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_cat(
    _out: &Output,
    archive: &std::path::Path,
    uri: &str,
    strategy: OpenStrategy,
) -> Result<ExitCode, CmdError> {
    let uri: ArcpUri = uri
        .parse()
        .map_err(|e: model::ParseError| CmdError::new("ParseError", e))?;
    let handle = ArchiveHandle::open(archive, strategy)
        .map_err(|e| CmdError::new("ArchiveError", e))?;
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    handle
        .read_entry_to(&uri, &mut lock)
        .map_err(|e| CmdError::new("ArchiveError", e))?;
    match lock.flush() {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(0),
        other => other.map_err(|e| CmdError::new("Io", e))?,
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_bag(out: &Output, bag: &std::path::Path) -> Result<ExitCode, CmdError> {
    let handle = ArchiveHandle::open(bag, OpenStrategy::Auto)
        .map_err(|e| CmdError::new("ArchiveError", e))?;
    match handle.declared_identifier() {
        Some(id) => {
            let adopted = *handle.strategy_used() == StrategyUsed::Declared;
            out.value(id, json!({ "external_identifier": id, "adopted": adopted }));
        }
        None => out.value("none", json!({ "external_identifier": null, "adopted": false })),
    }
    Ok(ExitCode::SUCCESS)
}

/// Accepts either an arcp URI with an ni authority or a bare ni URI.
fn digest_from_input(input: &str) -> Result<arcp::NiDigest, CmdError> {
    if let Ok(uri) = model::parse(input) {
        return uri
            .hash()
            .cloned()
            .ok_or_else(|| CmdError::new("NotNiAuthority", format!("{input} has no ni authority")));
    }
    wellknown::from_ni_uri(input).map_err(|e| CmdError::new("WellKnownError", e))
}

fn resolver_or_usage(resolver: Option<&str>, out: &Output) -> Result<String, ExitCode> {
    match resolver {
        Some(r) => Ok(r.to_string()),
        None => Err(out.usage("a resolver base is required (--resolver or ARCP_RESOLVER)")),
    }
}

fn cmd_locate(out: &Output, uri: &str, resolver: Option<&str>) -> Result<ExitCode, CmdError> {
    let resolver = match resolver_or_usage(resolver, out) {
        Ok(r) => r,
        Err(code) => return Ok(code),
    };
    let digest = digest_from_input(uri)?;
    let url = wellknown::well_known_url(&digest, &resolver)
        .map_err(|e| CmdError::new("WellKnownError", e))?;
    out.value(&url, json!({ "url": url }));
    Ok(ExitCode::SUCCESS)
}

fn cmd_get(
    out: &Output,
    uri: &str,
    resolver: Option<&str>,
    dest: &std::path::Path,
) -> Result<ExitCode, CmdError> {
    let resolver = match resolver_or_usage(resolver, out) {
        Ok(r) => r,
        Err(code) => return Ok(code),
    };
    let digest = digest_from_input(uri)?;
    let report = wellknown::fetch_and_verify(&digest, &resolver, dest)
        .map_err(|e| CmdError::new("WellKnownError", e))?;
    let status = report.status.label();
    let record = json!({
        "url": report.url,
        "status": status,
        "bytes_read": report.bytes_read,
        "out": dest.display().to_string(),
        "digest": report.computed_digest.as_ref().map(|d| d.to_base64url()),
    });
    let plain = format!("{status}\t{}\t{}", report.bytes_read, dest.display());
    if report.status == FetchStatus::Verified {
        out.value(&plain, record);
        Ok(ExitCode::SUCCESS)
    } else {
        if out.json {
            emit(record);
        } else {
            eprintln!("error: {plain}");
        }
        Ok(ExitCode::from(1))
    }
}
