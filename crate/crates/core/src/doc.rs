//! The manifest surface syntax: a YAML-compatible subset.
//!
//! Supported: block maps, block lists, plain and double-quoted scalars,
//! `[]` and `{}` for empty collections, and `#` comments. Rejected with an
//! error: anchors, aliases, tags, flow collections, block scalars,
//! single-quoted scalars, directives, and multi-document streams.
//!
//! The emitter is canonical: map keys sorted at every level, LF line
//! endings, two-space indentation, and deterministic scalar quoting, so
//! equal values always serialize to identical bytes. Floats are formatted
//! with the shortest representation that round-trips.

use crate::Error;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    List(Vec<Value>),
    Map(Vec<(String, Value)>),
}

impl Value {
    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Null => "null",
            Value::Bool(_) => "boolean",
            Value::Int(_) => "integer",
            Value::Float(_) => "number",
            Value::Str(_) => "string",
            Value::List(_) => "list",
            Value::Map(_) => "map",
        }
    }

    /// Map lookup by key; `None` for non-maps and absent keys.
    pub fn get(&self, key: &str) -> Option<&Value> {
        match self {
            Value::Map(entries) => entries.iter().find(|(k, _)| k == key).map(|(_, v)| v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Float(x) => Some(*x),
            Value::Int(n) => Some(*n as f64),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Value]> {
        match self {
            Value::List(items) => Some(items),
            _ => None,
        }
    }

    pub fn as_map(&self) -> Option<&[(String, Value)]> {
        match self {
            Value::Map(entries) => Some(entries),
            _ => None,
        }
    }
}

pub fn parse_bytes(bytes: &[u8]) -> Result<Value, Error> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Syntax {
        line: 0,
        column: 0,
        message: format!("invalid UTF-8: {e}"),
    })?;
    parse(text)
}

pub fn parse(text: &str) -> Result<Value, Error> {
    let lines = scan_lines(text)?;
    if lines.is_empty() {
        return Ok(Value::Null);
    }
    let mut parser = Parser { lines, pos: 0 };
    let value = parser.parse_node(0)?;
    if let Some(line) = parser.peek() {
        return Err(syntax(line.number, 1, "inconsistent indentation"));
    }
    Ok(value)
}

struct Line {
    number: usize,
    indent: usize,
    text: String,
}

fn syntax(line: usize, column: usize, message: &str) -> Error {
    Error::Syntax {
        line,
        column,
        message: message.to_string(),
    }
}

fn scan_lines(text: &str) -> Result<Vec<Line>, Error> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let number = i + 1;
        let indent = raw.len() - raw.trim_start_matches(' ').len();
        let rest = &raw[indent..];
        if rest.starts_with('\t') {
            return Err(syntax(number, indent + 1, "tabs are not allowed in indentation"));
        }
        if rest.is_empty() || rest.starts_with('#') {
            continue;
        }
        if rest == "---" || rest.starts_with("--- ") || rest == "..." {
            return Err(syntax(
                number,
                indent + 1,
                "multi-document streams are not supported",
            ));
        }
        if rest.starts_with('%') {
            return Err(syntax(number, indent + 1, "directives are not supported"));
        }
        out.push(Line {
            number,
            indent,
            text: rest.to_string(),
        });
    }
    Ok(out)
}

struct Parser {
    lines: Vec<Line>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Line> {
        self.lines.get(self.pos)
    }

    /// Parses the block starting at the next line if it is indented at least
    /// `min_indent`; otherwise the block is absent and the value is null.
    fn parse_node(&mut self, min_indent: usize) -> Result<Value, Error> {
        let (indent, is_item, is_entry) = match self.peek() {
            None => return Ok(Value::Null),
            Some(line) if line.indent < min_indent => return Ok(Value::Null),
            Some(line) => (
                line.indent,
                is_list_item(&line.text),
                split_key(&line.text).is_some(),
            ),
        };
        if is_item {
            self.parse_list(indent)
        } else if is_entry {
            self.parse_map_block(indent)
        } else {
            // A single-line scalar document.
            let line = &self.lines[self.pos];
            let number = line.number;
            let text = line.text.clone();
            self.pos += 1;
            parse_scalar(&text, number, indent + 1)
        }
    }

    fn parse_list(&mut self, indent: usize) -> Result<Value, Error> {
        let mut items = Vec::new();
        while let Some(line) = self.peek() {
            if line.indent != indent {
                if line.indent > indent {
                    return Err(syntax(line.number, line.indent + 1, "unexpected indentation"));
                }
                break;
            }
            if !is_list_item(&line.text) {
                return Err(syntax(
                    line.number,
                    indent + 1,
                    "expected a `- ` list item",
                ));
            }
            let number = line.number;
            let text = line.text.clone();
            self.pos += 1;
            let rest = if text == "-" { "" } else { &text[2..] };
            let rest_trim = rest.trim_start();
            // Column where the item's own content begins.
            let item_indent = indent + 2 + (rest.len() - rest_trim.len());
            if rest_trim.is_empty() || rest_trim.starts_with('#') {
                items.push(self.parse_node(indent + 1)?);
            } else if let Some((key, after)) = split_key(rest_trim) {
                let first = self.entry_value(after, number, item_indent)?;
                items.push(self.parse_map_entries(item_indent, vec![(key, first)])?);
            } else {
                items.push(parse_scalar(rest_trim, number, item_indent + 1)?);
            }
        }
        Ok(Value::List(items))
    }

    fn parse_map_block(&mut self, indent: usize) -> Result<Value, Error> {
        self.parse_map_entries(indent, Vec::new())
    }

    fn parse_map_entries(
        &mut self,
        indent: usize,
        mut entries: Vec<(String, Value)>,
    ) -> Result<Value, Error> {
        while let Some(line) = self.peek() {
            if line.indent != indent {
                if line.indent > indent {
                    return Err(syntax(line.number, line.indent + 1, "unexpected indentation"));
                }
                break;
            }
            if is_list_item(&line.text) {
                return Err(syntax(
                    line.number,
                    indent + 1,
                    "unexpected list item in a mapping",
                ));
            }
            let number = line.number;
            let text = line.text.clone();
            self.pos += 1;
            let (key, after) = split_key(&text)
                .ok_or_else(|| syntax(number, indent + 1, "expected a `key: value` entry"))?;
            if entries.iter().any(|(k, _)| *k == key) {
                return Err(syntax(
                    number,
                    indent + 1,
                    &format!("duplicate key {key:?}"),
                ));
            }
            let value = self.entry_value(after, number, indent)?;
            entries.push((key, value));
        }
        Ok(Value::Map(entries))
    }

    fn entry_value(&mut self, after: &str, number: usize, indent: usize) -> Result<Value, Error> {
        let t = after.trim();
        if t.is_empty() || t.starts_with('#') {
            self.parse_node(indent + 1)
        } else {
            parse_scalar(t, number, indent + 1)
        }
    }
}

fn is_list_item(text: &str) -> bool {
    text == "-" || text.starts_with("- ")
}

/// Splits `key: value` at the first `:` followed by a space or end of line.
/// Returns `None` when the line cannot be a map entry.
fn split_key(text: &str) -> Option<(String, &str)> {
    if let Some(rest) = text.strip_prefix('"') {
        let (key, consumed) = parse_quoted_body(rest)?;
        let after = rest[consumed..].trim_start();
        let after = after.strip_prefix(':')?;
        if !after.is_empty() && !after.starts_with(' ') {
            return None;
        }
        return Some((key, after));
    }
    let bytes = text.as_bytes();
    for i in 0..bytes.len() {
        match bytes[i] {
            b'"' => return None,
            b'#' => {
                // A hash opens a comment only at the start or after a space;
                // elsewhere it is part of the key.
                if i == 0 || bytes[i - 1] == b' ' {
                    return None;
                }
            }
            b':' => {
                if i + 1 == bytes.len() || bytes[i + 1] == b' ' {
                    let key = text[..i].trim_end();
                    if key.is_empty() {
                        return None;
                    }
                    return Some((key.to_string(), &text[i + 1..]));
                }
            }
            _ => {}
        }
    }
    None
}

/// Decodes a double-quoted body (opening quote already consumed). Returns
/// the decoded string and the byte length consumed including the closing
/// quote, or `None` when unterminated or holding an invalid escape.
fn parse_quoted_body(s: &str) -> Option<(String, usize)> {
    let mut out = String::new();
    let mut chars = s.char_indices();
    while let Some((i, c)) = chars.next() {
        match c {
            '"' => return Some((out, i + 1)),
            '\\' => {
                let (_, escape) = chars.next()?;
                match escape {
                    '"' => out.push('"'),
                    '\\' => out.push('\\'),
                    'n' => out.push('\n'),
                    't' => out.push('\t'),
                    'r' => out.push('\r'),
                    '0' => out.push('\0'),
                    'u' => {
                        let mut code = 0u32;
                        for _ in 0..4 {
                            let (_, h) = chars.next()?;
                            code = code * 16 + h.to_digit(16)?;
                        }
                        out.push(char::from_u32(code)?);
                    }
                    _ => return None,
                }
            }
            _ => out.push(c),
        }
    }
    None
}

fn parse_scalar(t: &str, line: usize, column: usize) -> Result<Value, Error> {
    if let Some(rest) = t.strip_prefix('"') {
        let (s, consumed) = parse_quoted_body(rest)
            .ok_or_else(|| syntax(line, column, "unterminated or invalid quoted scalar"))?;
        let after = rest[consumed..].trim_start();
        if !after.is_empty() && !after.starts_with('#') {
            return Err(syntax(line, column, "trailing characters after quoted scalar"));
        }
        return Ok(Value::Str(s));
    }
    let t = strip_plain_comment(t).trim_end();
    match t {
        "[]" => return Ok(Value::List(Vec::new())),
        "{}" => return Ok(Value::Map(Vec::new())),
        "null" | "~" => return Ok(Value::Null),
        "true" => return Ok(Value::Bool(true)),
        "false" => return Ok(Value::Bool(false)),
        _ => {}
    }
    let first = t.chars().next().expect("scalar text is non-empty");
    match first {
        '[' | '{' => {
            return Err(syntax(
                line,
                column,
                "flow collections are not supported (only `[]` and `{}`)",
            ))
        }
        '&' | '*' | '!' => {
            return Err(syntax(
                line,
                column,
                "anchors, aliases, and tags are not supported",
            ))
        }
        '|' | '>' => return Err(syntax(line, column, "block scalars are not supported")),
        '\'' => {
            return Err(syntax(
                line,
                column,
                "single-quoted scalars are not supported (use double quotes)",
            ))
        }
        '?' | ':' | ',' | '@' | '`' => {
            return Err(syntax(
                line,
                column,
                &format!("a plain scalar cannot start with {first:?}"),
            ))
        }
        _ => {}
    }
    if is_list_item(t) {
        return Err(syntax(line, column, "unexpected list item"));
    }
    if looks_like_int(t) {
        return t
            .parse::<i64>()
            .map(Value::Int)
            .map_err(|_| syntax(line, column, &format!("integer out of range: {t}")));
    }
    if looks_like_float(t) {
        let x: f64 = t
            .parse()
            .map_err(|_| syntax(line, column, &format!("malformed number: {t}")))?;
        if !x.is_finite() {
            return Err(syntax(line, column, &format!("number out of range: {t}")));
        }
        return Ok(Value::Float(x));
    }
    if t.contains('\t') {
        return Err(syntax(line, column, "tab character in plain scalar"));
    }
    if t.contains('"') {
        return Err(syntax(
            line,
            column,
            "quotes inside plain scalars are not supported",
        ));
    }
    Ok(Value::Str(t.to_string()))
}

/// A ` #` outside quotes starts a comment.
fn strip_plain_comment(t: &str) -> &str {
    match t.find(" #") {
        Some(i) => &t[..i],
        None => t,
    }
}

fn looks_like_int(s: &str) -> bool {
    let digits = s.strip_prefix('-').unwrap_or(s);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

fn looks_like_float(s: &str) -> bool {
    let s = s.strip_prefix('-').unwrap_or(s);
    let bytes = s.as_bytes();
    let mut i = 0;
    let mut integer_digits = 0;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        integer_digits += 1;
        i += 1;
    }
    if integer_digits == 0 {
        return false;
    }
    let mut shaped = false;
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        let mut fraction_digits = 0;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            fraction_digits += 1;
            i += 1;
        }
        if fraction_digits == 0 {
            return false;
        }
        shaped = true;
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        i += 1;
        if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
            i += 1;
        }
        let mut exponent_digits = 0;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            exponent_digits += 1;
            i += 1;
        }
        if exponent_digits == 0 {
            return false;
        }
        shaped = true;
    }
    shaped && i == bytes.len()
}

/// Canonical serialization: sorted keys, LF, two-space indentation.
pub fn emit(value: &Value) -> String {
    let mut out = String::new();
    match value {
        Value::List(items) if !items.is_empty() => emit_block(value, 0, &mut out),
        Value::Map(entries) if !entries.is_empty() => emit_block(value, 0, &mut out),
        scalar => {
            out.push_str(&scalar_repr(scalar));
            out.push('\n');
        }
    }
    out
}

fn is_inline(v: &Value) -> bool {
    match v {
        Value::List(items) => items.is_empty(),
        Value::Map(entries) => entries.is_empty(),
        _ => true,
    }
}

fn sorted_entries(entries: &[(String, Value)]) -> Vec<&(String, Value)> {
    let mut refs: Vec<&(String, Value)> = entries.iter().collect();
    refs.sort_by(|a, b| a.0.cmp(&b.0));
    refs
}

fn emit_block(value: &Value, level: usize, out: &mut String) {
    let pad = "  ".repeat(level);
    match value {
        Value::Map(entries) => {
            for (key, v) in sorted_entries(entries) {
                emit_entry(key, v, &pad, level, out);
            }
        }
        Value::List(items) => {
            for item in items {
                match item {
                    v if is_inline(v) => {
                        out.push_str(&pad);
                        out.push_str("- ");
                        out.push_str(&scalar_repr(v));
                        out.push('\n');
                    }
                    Value::Map(entries) => {
                        // Compact form: the first entry shares the dash line.
                        let sorted = sorted_entries(entries);
                        let (first_key, first_value) = sorted[0];
                        let dash = format!("{pad}- ");
                        emit_entry(first_key, first_value, &dash, level + 1, out);
                        let inner = "  ".repeat(level + 1);
                        for (key, v) in &sorted[1..] {
                            emit_entry(key, v, &inner, level + 1, out);
                        }
                    }
                    Value::List(_) => {
                        out.push_str(&pad);
                        out.push_str("-\n");
                        emit_block(item, level + 1, out);
                    }
                    _ => unreachable!("inline values handled above"),
                }
            }
        }
        scalar => {
            out.push_str(&pad);
            out.push_str(&scalar_repr(scalar));
            out.push('\n');
        }
    }
}

fn emit_entry(key: &str, value: &Value, prefix: &str, level: usize, out: &mut String) {
    out.push_str(prefix);
    out.push_str(&key_repr(key));
    if is_inline(value) {
        out.push_str(": ");
        out.push_str(&scalar_repr(value));
        out.push('\n');
    } else {
        out.push_str(":\n");
        emit_block(value, level + 1, out);
    }
}

fn scalar_repr(v: &Value) -> String {
    match v {
        Value::Null => "null".to_string(),
        Value::Bool(true) => "true".to_string(),
        Value::Bool(false) => "false".to_string(),
        Value::Int(n) => n.to_string(),
        Value::Float(x) => format!("{x:?}"),
        Value::Str(s) => {
            if plain_safe(s) {
                s.clone()
            } else {
                quoted(s)
            }
        }
        Value::List(items) => {
            debug_assert!(items.is_empty());
            "[]".to_string()
        }
        Value::Map(entries) => {
            debug_assert!(entries.is_empty());
            "{}".to_string()
        }
    }
}

fn key_repr(key: &str) -> String {
    if plain_safe(key) {
        key.to_string()
    } else {
        quoted(key)
    }
}

/// True when `s` can be emitted as a plain scalar and re-parsed as the same
/// string: no structural characters, no comment introducer, no leading
/// indicator, and not a lookalike for another scalar type.
fn plain_safe(s: &str) -> bool {
    if s.is_empty() {
        return false;
    }
    if s.chars().any(|c| c.is_control() || c == '\t' || c == '"' || c == '\u{7f}') {
        return false;
    }
    let first = s.chars().next().expect("non-empty");
    if matches!(
        first,
        ' ' | '-' | '?' | ':' | ',' | '[' | ']' | '{' | '}' | '#' | '&' | '*' | '!' | '|' | '>'
            | '\'' | '%' | '@' | '`'
    ) {
        return false;
    }
    if s.ends_with(' ') || s.ends_with(':') {
        return false;
    }
    if s.contains(": ") || s.contains(" #") {
        return false;
    }
    if matches!(s, "null" | "~" | "true" | "false" | "[]" | "{}") {
        return false;
    }
    if looks_like_int(s) || looks_like_float(s) {
        return false;
    }
    true
}

fn quoted(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if (c as u32) < 0x20 || c == '\u{7f}' => {
                out.push_str(&format!("\\u{:04X}", c as u32));
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_nested_map_and_list() {
        let text = "id: plip\ndeps:\n  - target: clip\n    kind: model\n  - laion\n";
        let v = parse(text).unwrap();
        assert_eq!(v.get("id").and_then(Value::as_str), Some("plip"));
        let deps = v.get("deps").and_then(Value::as_list).unwrap();
        assert_eq!(deps.len(), 2);
        assert_eq!(deps[0].get("kind").and_then(Value::as_str), Some("model"));
        assert_eq!(deps[1].as_str(), Some("laion"));
    }

    #[test]
    fn comments_and_blanks_skipped() {
        let text = "# header\n\nkey: 1 # trailing\nother: \"a # b\"\n";
        let v = parse(text).unwrap();
        assert_eq!(v.get("key").and_then(Value::as_i64), Some(1));
        assert_eq!(v.get("other").and_then(Value::as_str), Some("a # b"));
    }

    #[test]
    fn duplicate_key_rejected() {
        assert!(parse("a: 1\na: 2\n").is_err());
    }

    #[test]
    fn anchors_rejected() {
        assert!(parse("a: &x 1\n").is_err());
        assert!(parse("a: *x\n").is_err());
    }

    #[test]
    fn emit_sorts_keys_and_round_trips() {
        let v = Value::Map(vec![
            ("b".to_string(), Value::Int(2)),
            ("a".to_string(), Value::Str("x: y".to_string())),
        ]);
        let text = emit(&v);
        assert_eq!(text, "a: \"x: y\"\nb: 2\n");
        let back = parse(&text).unwrap();
        assert_eq!(back.get("a").and_then(Value::as_str), Some("x: y"));
    }

    #[test]
    fn empty_collections_inline() {
        let v = Value::Map(vec![
            ("list".to_string(), Value::List(Vec::new())),
            ("map".to_string(), Value::Map(Vec::new())),
        ]);
        let text = emit(&v);
        assert_eq!(text, "list: []\nmap: {}\n");
        assert_eq!(parse(&text).unwrap(), v);
    }
}
