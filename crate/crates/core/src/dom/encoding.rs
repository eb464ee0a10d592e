use encoding_rs::{Encoding, UTF_16BE, UTF_16LE, UTF_8};

use super::DomError;

/// Number of leading bytes searched for a `<meta charset>` declaration.
const SNIFF_LIMIT: usize = 1024;

/// Decodes `bytes` to text.
///
/// Precedence: byte-order mark, then `hint`, then a `<meta>` charset
/// declaration in the first 1024 bytes, then UTF-8. Malformed input is an
/// error; no replacement characters are produced.
pub(crate) fn decode(bytes: &[u8], hint: Option<&str>) -> Result<String, DomError> {
    let (encoding, skip) = match Encoding::for_bom(bytes) {
        Some((enc, len)) => (enc, len),
        None => {
            let enc = match hint {
                Some(label) => Encoding::for_label(label.trim().as_bytes()).ok_or_else(|| {
                    DomError::Encoding {
                        encoding: label.to_string(),
                        reason: "unknown encoding label".into(),
                    }
                })?,
                None => sniff_meta_charset(bytes).unwrap_or(UTF_8),
            };
            (enc, 0)
        }
    };
    encoding
        .decode_without_bom_handling_and_without_replacement(&bytes[skip..])
        .map(|s| s.into_owned())
        .ok_or_else(|| DomError::Encoding {
            encoding: encoding.name().to_string(),
            reason: "byte sequence is not valid in this encoding".into(),
        })
}

/// Looks for `charset=` inside a `<meta ...>` tag near the start of the document.
fn sniff_meta_charset(bytes: &[u8]) -> Option<&'static Encoding> {
    let head = &bytes[..bytes.len().min(SNIFF_LIMIT)];
    let lower: Vec<u8> = head.to_ascii_lowercase();
    let mut from = 0;
    while let Some(at) = find(&lower[from..], b"<meta") {
        let start = from + at + 5;
        let end = find(&lower[start..], b">").map_or(lower.len(), |e| start + e);
        let tag = &lower[start..end];
        if let Some(label) = charset_in(tag) {
            let enc = Encoding::for_label(label)?;
            // A meta declaration cannot switch to a UTF-16 family encoding.
            return Some(if enc == UTF_16LE || enc == UTF_16BE { UTF_8 } else { enc });
        }
        from = end;
    }
    None
}

fn charset_in(tag: &[u8]) -> Option<&[u8]> {
    let at = find(tag, b"charset")?;
    let mut i = at + 7;
    while tag.get(i).is_some_and(|b| b.is_ascii_whitespace()) {
        i += 1;
    }
    if tag.get(i) != Some(&b'=') {
        return None;
    }
    i += 1;
    while tag.get(i).is_some_and(|b| b.is_ascii_whitespace() || *b == b'"' || *b == b'\'') {
        i += 1;
    }
    let start = i;
    while tag
        .get(i)
        .is_some_and(|b| !b.is_ascii_whitespace() && !matches!(b, b'"' | b'\'' | b';' | b'/' | b'>'))
    {
        i += 1;
    }
    (i > start).then(|| &tag[start..i])
}

fn find(hay: &[u8], needle: &[u8]) -> Option<usize> {
    hay.windows(needle.len()).position(|w| w == needle)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn utf8_default() {
        assert_eq!(decode("héllo".as_bytes(), None).unwrap(), "héllo");
    }

    #[test]
    fn invalid_utf8_is_an_error() {
        let err = decode(b"abc\xff\xfe\xfd", None).unwrap_err();
        assert!(matches!(err, DomError::Encoding { .. }));
    }

    #[test]
    fn meta_charset_overrides() {
        let doc = b"<html><head><meta charset=\"iso-8859-1\"></head><p>caf\xe9</p>";
        assert!(decode(doc, None).unwrap().contains("café"));
        let doc = b"<meta http-equiv=\"Content-Type\" content=\"text/html; charset=windows-1252\"><p>\x93q\x94";
        assert!(decode(doc, None).unwrap().contains("\u{201c}q\u{201d}"));
    }

    #[test]
    fn bom_and_hint() {
        let mut doc = vec![0xEF, 0xBB, 0xBF];
        doc.extend_from_slice("<p>é</p>".as_bytes());
        assert_eq!(decode(&doc, None).unwrap(), "<p>é</p>");
        assert_eq!(decode(b"<p>\xe9</p>", Some("latin1")).unwrap(), "<p>é</p>");
        assert!(decode(b"x", Some("no-such-encoding")).is_err());
    }

    #[test]
    fn declaration_beyond_sniff_window_is_ignored() {
        let mut doc = vec![b' '; SNIFF_LIMIT];
        doc.extend_from_slice(b"<meta charset=latin1><p>\xe9");
        assert!(decode(&doc, None).is_err());
    }
}
