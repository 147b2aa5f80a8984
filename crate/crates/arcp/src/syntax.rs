//! Shared URI character classes and percent-escape helpers.

use percent_encoding::AsciiSet;

pub(crate) fn is_unreserved(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'-' | b'.' | b'_' | b'~')
}

pub(crate) fn is_sub_delim(b: u8) -> bool {
    matches!(
        b,
        b'!' | b'$' | b'&' | b'\'' | b'(' | b')' | b'*' | b'+' | b',' | b';' | b'='
    )
}

/// `pchar` minus percent-escapes: unreserved / sub-delims / ":" / "@".
pub(crate) fn is_pchar(b: u8) -> bool {
    is_unreserved(b) || is_sub_delim(b) || b == b':' || b == b'@'
}

/// Escape set for emitting path segments: everything outside
/// unreserved / sub-delims / ":" / "@" is percent-encoded (uppercase hex).
pub(crate) const SEGMENT_ENCODE: &AsciiSet = &percent_encoding::NON_ALPHANUMERIC
    .remove(b'-')
    .remove(b'.')
    .remove(b'_')
    .remove(b'~')
    .remove(b'!')
    .remove(b'$')
    .remove(b'&')
    .remove(b'\'')
    .remove(b'(')
    .remove(b')')
    .remove(b'*')
    .remove(b'+')
    .remove(b',')
    .remove(b';')
    .remove(b'=')
    .remove(b':')
    .remove(b'@');

/// Validates that `text` consists of characters from `allowed` plus
/// well-formed `%XX` escapes. Returns the byte offset of the first
/// violation.
pub(crate) fn check_escaped(text: &str, allowed: impl Fn(u8) -> bool) -> Result<(), usize> {
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'%' => {
                if i + 2 >= bytes.len()
                    || !bytes[i + 1].is_ascii_hexdigit()
                    || !bytes[i + 2].is_ascii_hexdigit()
                {
                    return Err(i);
                }
                i += 3;
            }
            b if allowed(b) => i += 1,
            _ => return Err(i),
        }
    }
    Ok(())
}

/// Percent-decodes `text` into raw bytes, rejecting truncated or non-hex
/// escapes at their byte offset.
pub(crate) fn percent_decode(text: &str) -> Result<Vec<u8>, usize> {
    let bytes = text.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            if i + 2 >= bytes.len() {
                return Err(i);
            }
            let hi = (bytes[i + 1] as char).to_digit(16).ok_or(i)?;
            let lo = (bytes[i + 2] as char).to_digit(16).ok_or(i)?;
            out.push((hi * 16 + lo) as u8);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escape_checking() {
        assert!(check_escaped("a%20b", is_pchar).is_ok());
        assert_eq!(check_escaped("a%2", is_pchar), Err(1));
        assert_eq!(check_escaped("a%zz", is_pchar), Err(1));
        assert_eq!(check_escaped("a b", is_pchar), Err(1));
    }

    #[test]
    fn decoding() {
        assert_eq!(percent_decode("my%20project").unwrap(), b"my project");
        assert!(percent_decode("%f").is_err());
        assert!(percent_decode("%gg").is_err());
    }
}
