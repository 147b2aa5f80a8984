//! Property tests: parser round-trips and rejection totality, minting
//! invariants, digest conversions, and traversal safety under adversarial
//! paths.

use std::path::PathBuf;

use arcp::mint::{self, FixedBytes};
use arcp::model::{self, ArcpUri};
use arcp::resolve::{self, ResolutionError};
use arcp::NiDigest;
use proptest::prelude::*;

fn arb_authority() -> impl Strategy<Value = String> {
    prop_oneof![
        any::<u128>().prop_map(|n| {
            let u = uuid::Builder::from_u128(n).into_uuid();
            format!("uuid,{u}")
        }),
        proptest::collection::vec(any::<u8>(), 1..64)
            .prop_map(|bytes| format!("ni,alg-x;{}", base64url(&bytes))),
        proptest::collection::vec("[a-z0-9][a-z0-9-]{0,8}", 1..4)
            .prop_map(|labels| format!("name,{}", labels.join("."))),
    ]
}

fn base64url(bytes: &[u8]) -> String {
    use base64::Engine as _;
    base64::engine::general_purpose::URL_SAFE_NO_PAD.encode(bytes)
}

fn arb_path() -> impl Strategy<Value = String> {
    proptest::collection::vec("[a-zA-Z0-9._~!$&'()*+,;=:@-]{1,8}|%[0-9A-F]{2}", 0..5)
        .prop_map(|segs| {
            if segs.is_empty() {
                "/".to_string()
            } else {
                format!("/{}", segs.join("/"))
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn round_trip_on_accepted_inputs(
        auth in arb_authority(),
        path in arb_path(),
        query in proptest::option::of("[a-zA-Z0-9=&/?]{0,12}"),
        fragment in proptest::option::of("[a-zA-Z0-9/?]{0,12}"),
    ) {
        let mut s = format!("arcp://{auth}{path}");
        if let Some(q) = &query { s.push('?'); s.push_str(q); }
        if let Some(f) = &fragment { s.push('#'); s.push_str(f); }

        let parsed = model::parse(&s).expect("constructed input must parse");
        let text = parsed.serialize();
        // serialize ∘ parse is idempotent and re-accepted
        let reparsed = model::parse(&text).expect("serialized form must re-parse");
        prop_assert_eq!(&reparsed, &parsed);
        prop_assert_eq!(reparsed.serialize(), text);
    }

    #[test]
    fn rejection_totality(input in "\\PC*") {
        // Must never panic; errors carry an in-bounds offset.
        if let Err(e) = model::parse(&input) {
            prop_assert!(e.offset <= input.len());
        }
    }

    #[test]
    fn v4_minting_always_stamps(bytes in proptest::collection::vec(any::<u8>(), 16)) {
        let uri = mint::mint_uuid_v4(&mut FixedBytes::new(bytes)).unwrap();
        let uuid = uri.uuid().unwrap();
        prop_assert_eq!(uuid.get_version_num(), 4);
        prop_assert_eq!(uuid.get_variant(), uuid::Variant::RFC4122);
        // Minted URIs round-trip through parse/serialize unchanged.
        let text = uri.serialize();
        prop_assert_eq!(model::parse(&text).unwrap(), uri);
    }

    #[test]
    fn digest_hex_b64_round_trip(bytes in proptest::collection::vec(any::<u8>(), 1..80)) {
        let d = NiDigest::new("alg-x", bytes.clone()).unwrap();
        let via_hex = NiDigest::from_hex("alg-x", &d.to_hex()).unwrap();
        let via_b64 = NiDigest::from_base64url("alg-x", &d.to_base64url()).unwrap();
        prop_assert_eq!(&via_hex, &d);
        prop_assert_eq!(&via_b64, &d);
        prop_assert!(!d.to_base64url().contains(['=', '+', '/']));
    }

    #[test]
    fn hash_and_digest_routes_agree(content in proptest::collection::vec(any::<u8>(), 0..2048)) {
        let via_bytes = mint::mint_from_bytes(&content[..], "sha-256").unwrap();
        let hex = NiDigest::of_bytes("sha-256", &content).unwrap().to_hex();
        let via_digest = mint::mint_from_digest("sha-256", &hex).unwrap();
        prop_assert_eq!(via_bytes, via_digest);
    }

    #[test]
    fn entry_name_duality(
        segs in proptest::collection::vec("[^/\u{0}]{1,12}", 1..4),
        dir in any::<bool>(),
    ) {
        prop_assume!(segs.iter().all(|s| s != "." && s != ".."));
        let base: ArcpUri = "arcp://name,com.example.myapp/".parse().unwrap();
        let name = segs.join("/");
        let uri = resolve::from_entry_name(&base, &name, dir).unwrap();
        let key = resolve::to_entry_key(&uri).unwrap();
        prop_assert_eq!(key.segments(), &segs[..]);
        prop_assert_eq!(key.is_directory(), dir);
        // the encoded form must itself be a valid arcp URI
        prop_assert!(model::is_arcp(&uri.serialize()));
    }
}

#[test]
fn fuzz_parser_100k_no_crash() {
    // Cheap xorshift byte soup, heavier on arcp-shaped prefixes.
    let mut state = 0x9E3779B97F4A7C15u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    let alphabet: &[u8] = b"arcp://uuid,ni;name.%2Ff4OxZX_-0123456789ABCDEF#?@!$&'()*+=\\ \t\x7f";
    let mut accepted = 0usize;
    for i in 0..100_000 {
        let len = (next() % 64) as usize;
        let mut bytes = Vec::with_capacity(len + 16);
        match i % 4 {
            0 => bytes.extend_from_slice(b"arcp://"),
            1 => bytes.extend_from_slice(b"arcp://name,app/"),
            2 => bytes.extend_from_slice(b"arcp://uuid,c6179148-3cde-4435-8e66-304453f89d59/"),
            _ => {}
        }
        for _ in 0..len {
            bytes.push(alphabet[(next() % alphabet.len() as u64) as usize]);
        }
        let input = String::from_utf8_lossy(&bytes).into_owned();
        match model::parse(&input) {
            Ok(uri) => {
                accepted += 1;
                // Accepted inputs must satisfy the round-trip invariants.
                let text = uri.serialize();
                let reparsed = model::parse(&text).unwrap();
                assert_eq!(reparsed, uri, "round trip of {input:?}");
                assert_eq!(reparsed.serialize(), text);
            }
            Err(e) => assert!(e.offset <= input.len(), "offset out of range for {input:?}"),
        }
    }
    // The corpus is arcp-flavoured, so at least a few inputs should parse.
    assert!(accepted > 0, "fuzz corpus never produced a valid URI");
}

/// Adversarial traversal corpus: every attempt either errors or stays
/// under the extraction root.
#[test]
fn traversal_attempts_never_escape() {
    let root_dir = tempfile::tempdir().unwrap();
    let outside = tempfile::tempdir().unwrap();
    let root = root_dir.path();
    #[cfg(unix)]
    std::os::unix::fs::symlink(outside.path(), root.join("sneaky")).unwrap();

    let base: ArcpUri = "arcp://name,com.example.myapp/".parse().unwrap();
    let attacks = [
        "../../etc/passwd",
        "..%2F..%2Fetc/passwd",
        "%2e%2e/%2e%2e/etc/passwd",
        "%2e%2e%2fetc/passwd",
        "a/../../etc/passwd",
        "..\\..\\windows\\system32",
        "/..",
        "/../../x",
        "sneaky/secret.txt",
        "a/%2e%2e/%2e%2e/b",
        "%00",
        "a%2Fb/../..",
    ];
    let root_canon = root.canonicalize().unwrap();
    for attack in attacks {
        let resolved = match resolve::resolve_reference(&base, attack) {
            Ok(r) => r,
            Err(_) => continue, // rejected at the reference layer
        };
        let Some(uri) = resolved.as_arcp().cloned() else {
            continue;
        };
        let key = match resolve::to_entry_key(&uri) {
            Ok(k) => k,
            Err(
                ResolutionError::Traversal { .. }
                | ResolutionError::EncodedSlash
                | ResolutionError::BadPercentEscape { .. },
            ) => continue,
            Err(e) => panic!("unexpected error for {attack:?}: {e}"),
        };
        match resolve::to_local_path(&key, root) {
            Ok(path) => {
                let deepest = deepest_existing(&path);
                let canon = deepest.canonicalize().unwrap();
                assert!(
                    canon.starts_with(&root_canon),
                    "{attack:?} escaped to {}",
                    path.display()
                );
            }
            Err(ResolutionError::Traversal { .. }) => {}
            Err(e) => panic!("unexpected error for {attack:?}: {e}"),
        }
    }
}

fn deepest_existing(path: &std::path::Path) -> PathBuf {
    let mut p = path;
    while !p.exists() {
        p = p.parent().expect("some ancestor exists");
    }
    p.to_path_buf()
}
