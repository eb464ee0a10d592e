//! Lenient HTML tokenizer.
//!
//! Comments, CDATA sections, doctypes and processing instructions are dropped.
//! Markup that cannot be completed before end of input is discarded; a `<`
//! that does not open a tag is kept as text.

use std::borrow::Cow;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Token {
    Start {
        name: String,
        attrs: Vec<(String, String)>,
        self_closing: bool,
    },
    End {
        name: String,
    },
    Text(String),
}

/// Elements whose content is taken verbatim up to the matching end tag.
const RAW_TEXT: &[&str] = &["script", "style", "xmp", "iframe", "noembed", "noframes"];
/// Raw text elements in which character references are still decoded.
const ESCAPABLE_RAW_TEXT: &[&str] = &["textarea", "title"];

pub(crate) fn tokenize(src: &str) -> Vec<Token> {
    let mut t = Tokenizer {
        src,
        pos: 0,
        out: Vec::new(),
        text: String::new(),
    };
    t.run();
    t.out
}

struct Tokenizer<'a> {
    src: &'a str,
    pos: usize,
    out: Vec<Token>,
    text: String,
}

impl<'a> Tokenizer<'a> {
    fn run(&mut self) {
        while self.pos < self.src.len() {
            let rest = &self.src[self.pos..];
            match rest.find('<') {
                None => {
                    self.text.push_str(&decode_entities(rest));
                    self.pos = self.src.len();
                }
                Some(0) => self.markup(),
                Some(i) => {
                    self.text.push_str(&decode_entities(&rest[..i]));
                    self.pos += i;
                }
            }
        }
        self.flush_text();
    }

    fn flush_text(&mut self) {
        if !self.text.is_empty() {
            self.out.push(Token::Text(std::mem::take(&mut self.text)));
        }
    }

    fn emit(&mut self, token: Token) {
        self.flush_text();
        self.out.push(token);
    }

    /// Skips past `needle` starting at `from`, or to end of input.
    fn skip_past(&mut self, from: usize, needle: &str) {
        self.pos = match self.src[from..].find(needle) {
            Some(i) => from + i + needle.len(),
            None => self.src.len(),
        };
    }

    fn markup(&mut self) {
        let rest = &self.src[self.pos..];
        let bytes = rest.as_bytes();
        if let Some(body) = rest.strip_prefix("<!--") {
            // `<!-->` and `<!--->` are complete (empty) comments.
            if body.starts_with('>') {
                self.pos += 5;
            } else if body.starts_with("->") {
                self.pos += 6;
            } else {
                self.skip_past(self.pos + 4, "-->");
            }
        } else if rest.starts_with("<![CDATA[") {
            self.skip_past(self.pos + 9, "]]>");
        } else if rest.starts_with("<!") || rest.starts_with("<?") {
            self.skip_past(self.pos + 2, ">");
        } else if rest.starts_with("</") {
            match bytes.get(2) {
                Some(b) if b.is_ascii_alphabetic() => self.end_tag(),
                Some(b'>') => self.pos += 3,
                Some(_) => self.skip_past(self.pos + 2, ">"),
                None => {
                    self.text.push_str("</");
                    self.pos += 2;
                }
            }
        } else if bytes.get(1).is_some_and(|b| b.is_ascii_alphabetic()) {
            self.start_tag();
        } else {
            self.text.push('<');
            self.pos += 1;
        }
    }

    fn read_name(&mut self) -> String {
        let rest = &self.src[self.pos..];
        let end = rest
            .find(|c: char| c.is_ascii_whitespace() || c == '/' || c == '>')
            .unwrap_or(rest.len());
        self.pos += end;
        rest[..end]
            .chars()
            .map(|c| if c.is_ascii() { c.to_ascii_lowercase() } else { '_' })
            .collect()
    }

    fn end_tag(&mut self) {
        self.pos += 2;
        let name = self.read_name();
        match self.src[self.pos..].find('>') {
            Some(i) => {
                self.pos += i + 1;
                self.emit(Token::End { name });
            }
            None => self.pos = self.src.len(),
        }
    }

    fn start_tag(&mut self) {
        self.pos += 1;
        let name = self.read_name();
        let mut attrs: Vec<(String, String)> = Vec::new();
        let mut self_closing = false;
        let bytes = self.src.as_bytes();
        loop {
            while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            match bytes.get(self.pos) {
                None => return,
                Some(b'>') => {
                    self.pos += 1;
                    break;
                }
                Some(b'/') => {
                    self.pos += 1;
                    if bytes.get(self.pos) == Some(&b'>') {
                        self_closing = true;
                        self.pos += 1;
                        break;
                    }
                    continue;
                }
                Some(_) => {}
            }
            // Attribute name; a leading '=' belongs to the name.
            let start = self.pos;
            self.pos += 1;
            while self.pos < bytes.len() {
                let b = bytes[self.pos];
                if b.is_ascii_whitespace() || b == b'/' || b == b'>' || b == b'=' {
                    break;
                }
                self.pos += 1;
            }
            // Names may contain multibyte characters; advance to a boundary.
            while !self.src.is_char_boundary(self.pos) {
                self.pos += 1;
            }
            let attr_name = self.src[start..self.pos].to_ascii_lowercase();
            let mut lookahead = self.pos;
            while lookahead < bytes.len() && bytes[lookahead].is_ascii_whitespace() {
                lookahead += 1;
            }
            let mut value = String::new();
            if bytes.get(lookahead) == Some(&b'=') {
                self.pos = lookahead + 1;
                while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
                    self.pos += 1;
                }
                match bytes.get(self.pos) {
                    None => return,
                    Some(&q) if q == b'"' || q == b'\'' => {
                        let body = self.pos + 1;
                        match self.src[body..].find(q as char) {
                            Some(i) => {
                                value = decode_entities(&self.src[body..body + i]).into_owned();
                                self.pos = body + i + 1;
                            }
                            None => {
                                self.pos = self.src.len();
                                return;
                            }
                        }
                    }
                    Some(_) => {
                        let rest = &self.src[self.pos..];
                        let end = rest
                            .find(|c: char| c.is_ascii_whitespace() || c == '>')
                            .unwrap_or(rest.len());
                        value = decode_entities(&rest[..end]).into_owned();
                        self.pos += end;
                    }
                }
            }
            if !attrs.iter().any(|(n, _)| *n == attr_name) {
                attrs.push((attr_name, value));
            }
        }

        let raw = RAW_TEXT.contains(&name.as_str());
        let escapable = ESCAPABLE_RAW_TEXT.contains(&name.as_str());
        let plaintext = name == "plaintext";
        self.emit(Token::Start {
            name: name.clone(),
            attrs,
            self_closing,
        });
        if plaintext {
            let rest = &self.src[self.pos..];
            self.text.push_str(rest);
            self.pos = self.src.len();
        } else if (raw || escapable) && !self_closing {
            let body = self.pos;
            let end = find_end_tag(&self.src[body..], &name).map_or(self.src.len(), |i| body + i);
            let content = &self.src[body..end];
            if escapable {
                self.text.push_str(&decode_entities(content));
            } else {
                self.text.push_str(content);
            }
            self.flush_text();
            self.pos = end;
        }
    }
}

/// Offset of the first `</name` (ASCII case-insensitive) that is followed by a
/// tag delimiter or end of input.
fn find_end_tag(hay: &str, name: &str) -> Option<usize> {
    let bytes = hay.as_bytes();
    let name = name.as_bytes();
    let mut from = 0;
    while let Some(i) = hay[from..].find("</") {
        let at = from + i;
        let name_start = at + 2;
        let name_end = name_start + name.len();
        if name_end <= bytes.len() && bytes[name_start..name_end].eq_ignore_ascii_case(name) {
            match bytes.get(name_end) {
                None => return Some(at),
                Some(b) if b.is_ascii_whitespace() || *b == b'/' || *b == b'>' => return Some(at),
                _ => {}
            }
        }
        from = at + 2;
    }
    None
}

/// Decodes named (HTML5 table, `;` required) and numeric character
/// references. Unknown named references are left untouched.
pub(crate) fn decode_entities(s: &str) -> Cow<'_, str> {
    if !s.contains('&') {
        return Cow::Borrowed(s);
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(i) = rest.find('&') {
        out.push_str(&rest[..i]);
        rest = &rest[i..];
        match decode_one(rest) {
            Some((decoded, used)) => {
                out.push_str(&decoded);
                rest = &rest[used..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    Cow::Owned(out)
}

/// Decodes a reference at the start of `s` (which begins with '&').
fn decode_one(s: &str) -> Option<(Cow<'_, str>, usize)> {
    let bytes = s.as_bytes();
    if bytes.get(1) == Some(&b'#') {
        let (radix, digits_at) = match bytes.get(2) {
            Some(b'x') | Some(b'X') => (16, 3),
            _ => (10, 2),
        };
        let digits = s[digits_at..]
            .bytes()
            .take_while(|b| if radix == 16 { b.is_ascii_hexdigit() } else { b.is_ascii_digit() })
            .count();
        if digits == 0 {
            return None;
        }
        let mut used = digits_at + digits;
        let code = u32::from_str_radix(&s[digits_at..used], radix).unwrap_or(u32::MAX);
        if bytes.get(used) == Some(&b';') {
            used += 1;
        }
        let c = match code {
            0 => '\u{FFFD}',
            c => char::from_u32(c).unwrap_or('\u{FFFD}'),
        };
        return Some((Cow::Owned(c.to_string()), used));
    }
    let name_len = s[1..]
        .bytes()
        .take(32)
        .take_while(|b| b.is_ascii_alphanumeric())
        .count();
    if name_len == 0 || bytes.get(1 + name_len) != Some(&b';') {
        return None;
    }
    let reference = &s[..name_len + 2];
    match html_escape::decode_html_entities(reference) {
        Cow::Owned(decoded) if decoded != reference => Some((Cow::Owned(decoded), name_len + 2)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn text_of(tokens: &[Token]) -> String {
        tokens
            .iter()
            .filter_map(|t| match t {
                Token::Text(s) => Some(s.as_str()),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn entities() {
        assert_eq!(decode_entities("a &amp; b &lt;&gt; &quot;&apos;"), "a & b <> \"'");
        assert_eq!(decode_entities("&#65;&#x42;&#X43"), "ABC");
        assert_eq!(decode_entities("&copy; &amp"), "\u{a9} &amp");
        assert_eq!(decode_entities("&middot;&unknown;&;"), "\u{b7}&unknown;&;");
        assert_eq!(decode_entities("&nbsp;"), "\u{a0}");
        assert_eq!(decode_entities("&#0;&#xD800;"), "\u{FFFD}\u{FFFD}");
        assert_eq!(decode_entities("&#;"), "&#;");
    }

    #[test]
    fn attributes() {
        let toks = tokenize(r#"<DIV Class="a b" id=x data-v='1 &amp; 2' hidden class="dup">"#);
        let Token::Start { name, attrs, .. } = &toks[0] else {
            panic!("expected start tag");
        };
        assert_eq!(name, "div");
        assert_eq!(
            attrs,
            &vec![
                ("class".to_string(), "a b".to_string()),
                ("id".to_string(), "x".to_string()),
                ("data-v".to_string(), "1 & 2".to_string()),
                ("hidden".to_string(), String::new()),
            ]
        );
    }

    #[test]
    fn markup_is_dropped() {
        let toks = tokenize("<!DOCTYPE html>a<!-- c -->b<![CDATA[x]]>c<?php ?>d</>");
        assert_eq!(toks, vec![Token::Text("abcd".into())]);
    }

    #[test]
    fn raw_text_elements() {
        let toks = tokenize("<script>if (a < b) { x = '</p>'; }</SCRIPT >after");
        assert_eq!(text_of(&toks), "if (a < b) { x = '</p>'; }after");
        assert!(matches!(&toks[2], Token::End { name } if name == "script"));
        let toks = tokenize("<title>a &amp; b</title>");
        assert_eq!(text_of(&toks), "a & b");
        let toks = tokenize("<style>p { } &amp;");
        assert_eq!(text_of(&toks), "p { } &amp;");
    }

    #[test]
    fn stray_angle_brackets() {
        assert_eq!(text_of(&tokenize("1 < 2 and 3 <= 4")), "1 < 2 and 3 <= 4");
        assert_eq!(tokenize("a <div class='unterminated"), vec![Token::Text("a ".into())]);
    }
}
