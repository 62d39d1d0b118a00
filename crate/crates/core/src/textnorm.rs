//! HTML stripping and lexical normalization.
//!
//! Normalization runs in a fixed order: case folding, whitespace collapsing,
//! numeric formatting, then punctuation-run collapsing. Every step only
//! removes characters or maps them one-to-one, which keeps the whole pass
//! idempotent.

use std::fmt;

use unicode_general_category::{get_general_category, GeneralCategory};

/// Elements whose boundaries separate lines of visible text.
const BLOCK_ELEMENTS: &[&str] = &[
    "address", "article", "aside", "blockquote", "body", "br", "caption", "dd", "details",
    "dialog", "div", "dl", "dt", "fieldset", "figcaption", "figure", "footer", "form", "h1",
    "h2", "h3", "h4", "h5", "h6", "head", "header", "hr", "html", "li", "main", "nav", "ol", "p",
    "pre", "section", "summary", "table", "tbody", "td", "tfoot", "th", "thead", "title", "tr",
    "ul",
];

/// Elements whose content is never visible. Also treated as block boundaries.
const HIDDEN_ELEMENTS: &[&str] = &["script", "style", "template", "title"];

/// Text after normalization, with its whitespace token count.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct NormalizedText {
    text: String,
    token_count: usize,
}

impl NormalizedText {
    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn token_count(&self) -> usize {
        self.token_count
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

impl fmt::Display for NormalizedText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl AsRef<str> for NormalizedText {
    fn as_ref(&self) -> &str {
        &self.text
    }
}

/// Characters that glue onto a directly following digit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizeConfig {
    pub numeric_signs: Vec<char>,
}

impl Default for NormalizeConfig {
    fn default() -> Self {
        Self {
            numeric_signs: vec!['$', '€', '£', '+', '-'],
        }
    }
}

/// Removes tags, attributes, comments and the bodies of script/style
/// elements, returning the visible text.
///
/// Block-level element boundaries become a single `\n`; whitespace next to a
/// boundary and at either end of the output is dropped. Input containing no
/// `<` is returned unchanged. Broken markup is handled best-effort: an
/// unterminated tag swallows the rest of the input, a `<` not followed by a
/// tag name is kept as text.
pub fn strip_html(doc: &str) -> String {
    if !doc.contains('<') {
        return doc.to_owned();
    }
    let mut out = TextSink::default();
    let bytes = doc.as_bytes();
    let mut pos = 0;
    let mut text_start = 0;

    while pos < bytes.len() {
        if bytes[pos] != b'<' {
            pos += 1;
            continue;
        }
        let rest = &doc[pos..];
        let (len, boundary) = if rest.starts_with("<!--") {
            (rest.find("-->").map_or(rest.len(), |i| i + 3), false)
        } else if rest.starts_with("<!") || rest.starts_with("<?") {
            (rest.find('>').map_or(rest.len(), |i| i + 1), false)
        } else if let Some(tag) = parse_tag(rest) {
            let hidden_body = if !tag.closing && !tag.self_closing && HIDDEN_ELEMENTS.contains(&tag.name.as_str()) {
                skip_raw_text(&rest[tag.len..], &tag.name)
            } else {
                0
            };
            (tag.len + hidden_body, tag.is_block())
        } else {
            pos += 1;
            continue;
        };
        out.push_text(&decode_entities(&doc[text_start..pos]));
        if boundary {
            out.boundary();
        }
        pos += len;
        text_start = pos;
    }
    out.push_text(&decode_entities(&doc[text_start..]));
    out.finish()
}

#[derive(Default)]
struct TextSink {
    buf: String,
    pending_break: bool,
}

impl TextSink {
    fn push_text(&mut self, text: &str) {
        if text.is_empty() {
            return;
        }
        let text = if self.pending_break || self.buf.is_empty() {
            text.trim_start()
        } else {
            text
        };
        if text.is_empty() {
            return;
        }
        if self.pending_break && !self.buf.is_empty() {
            self.buf.push('\n');
        }
        self.pending_break = false;
        self.buf.push_str(text);
    }

    fn boundary(&mut self) {
        let trimmed = self.buf.trim_end().len();
        self.buf.truncate(trimmed);
        self.pending_break = true;
    }

    fn finish(mut self) -> String {
        let trimmed = self.buf.trim_end().len();
        self.buf.truncate(trimmed);
        self.buf
    }
}

struct Tag {
    name: String,
    closing: bool,
    self_closing: bool,
    len: usize,
}

impl Tag {
    fn is_block(&self) -> bool {
        BLOCK_ELEMENTS.contains(&self.name.as_str()) || HIDDEN_ELEMENTS.contains(&self.name.as_str())
    }
}

/// Parses `<name ...>` or `</name ...>` at the start of `s`. Returns `None`
/// when the `<` does not open a tag.
fn parse_tag(s: &str) -> Option<Tag> {
    let bytes = s.as_bytes();
    let mut i = 1;
    let closing = bytes.get(i) == Some(&b'/');
    if closing {
        i += 1;
    }
    if !bytes.get(i).is_some_and(u8::is_ascii_alphabetic) {
        return None;
    }
    let name_start = i;
    while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'-' || bytes[i] == b':') {
        i += 1;
    }
    let name = s[name_start..i].to_ascii_lowercase();

    let mut quote: Option<u8> = None;
    while i < bytes.len() {
        let b = bytes[i];
        match quote {
            Some(q) if b == q => quote = None,
            Some(_) => {}
            None if b == b'"' || b == b'\'' => quote = Some(b),
            None if b == b'>' => {
                let self_closing = i > 0 && bytes[i - 1] == b'/';
                return Some(Tag { name, closing, self_closing, len: i + 1 });
            }
            None => {}
        }
        i += 1;
    }
    Some(Tag { name, closing, self_closing: false, len: s.len() })
}

/// Length of the raw text body up to and including `</name ...>`.
fn skip_raw_text(body: &str, name: &str) -> usize {
    let lower = body.to_ascii_lowercase();
    let needle = format!("</{name}");
    let mut from = 0;
    while let Some(rel) = lower[from..].find(&needle) {
        let at = from + rel;
        let after = lower.as_bytes().get(at + needle.len());
        if after.is_none_or(|b| !b.is_ascii_alphanumeric()) {
            return match lower[at..].find('>') {
                Some(close) => at + close + 1,
                None => body.len(),
            };
        }
        from = at + needle.len();
    }
    body.len()
}

fn decode_entities(text: &str) -> String {
    html_escape::decode_html_entities(text).into_owned()
}

/// Normalizes with the default numeric sign set.
pub fn normalize_text(text: &str) -> NormalizedText {
    normalize_with(text, &NormalizeConfig::default())
}

pub fn normalize_with(text: &str, config: &NormalizeConfig) -> NormalizedText {
    let folded: String = text.chars().map(fold_char).collect();
    let collapsed = collapse_whitespace(&folded);
    let numeric = join_numeric_signs(&collapsed, &config.numeric_signs);
    let text = collapse_punctuation(&numeric);
    let token_count = text.split_whitespace().count();
    NormalizedText { text, token_count }
}

/// Simple (one-to-one) Unicode case folding.
pub fn fold_char(c: char) -> char {
    unicode_case_mapping::case_folded(c)
        .and_then(|cp| char::from_u32(cp.get()))
        .unwrap_or(c)
}

fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

fn join_numeric_signs(s: &str, signs: &[char]) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::with_capacity(s.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        out.push(c);
        i += 1;
        if signs.contains(&c) {
            let mut j = i;
            while j < chars.len() && chars[j].is_whitespace() {
                j += 1;
            }
            if j > i && chars.get(j).is_some_and(|d| d.is_numeric()) {
                i = j;
            }
        }
    }
    out
}

fn collapse_punctuation(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut prev: Option<char> = None;
    for c in s.chars() {
        if prev == Some(c) && is_punctuation(c) {
            continue;
        }
        out.push(c);
        prev = Some(c);
    }
    out
}

/// ASCII punctuation plus every Unicode `P*` general category.
pub fn is_punctuation(c: char) -> bool {
    use GeneralCategory::*;
    c.is_ascii_punctuation()
        || matches!(
            get_general_category(c),
            ConnectorPunctuation
                | DashPunctuation
                | OpenPunctuation
                | ClosePunctuation
                | InitialPunctuation
                | FinalPunctuation
                | OtherPunctuation
        )
}

/// Maximal runs of non-whitespace characters.
pub fn tokenize(text: &NormalizedText) -> Vec<&str> {
    text.as_str().split_whitespace().collect()
}

/// Strip, then normalize. The standard preparation for lexical scoring.
pub fn prepare(markup: &str) -> NormalizedText {
    normalize_text(&strip_html(markup))
}
