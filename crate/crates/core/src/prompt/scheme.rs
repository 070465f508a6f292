//! Scheme model and tolerant parsing of model replies.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{PromptError, Result};

/// One audio plan for a video: an idea label, two sound-effect
/// descriptions and one background-music description.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scheme {
    pub idea: String,
    #[serde(rename = "SFX")]
    pub sfx: [String; 2],
    #[serde(rename = "BGM")]
    pub bgm: String,
}

impl Scheme {
    /// Compact JSON with keys `idea`, `SFX`, `BGM`, in that order.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("scheme serialization cannot fail")
    }
}

/// Byte ranges of top-level `{...}` regions, skipping braces inside string
/// literals. An opening brace that never closes is skipped and scanning
/// resumes after it.
fn object_spans(raw: &str) -> Vec<(usize, usize)> {
    let bytes = raw.as_bytes();
    let mut spans = Vec::new();
    let mut start = 0;
    while let Some(offset) = raw[start..].find('{') {
        let open = start + offset;
        let mut depth = 0usize;
        let mut in_str = false;
        let mut escaped = false;
        let mut close = None;
        for (i, &b) in bytes.iter().enumerate().skip(open) {
            if in_str {
                match b {
                    _ if escaped => escaped = false,
                    b'\\' => escaped = true,
                    b'"' => in_str = false,
                    _ => {}
                }
                continue;
            }
            match b {
                b'"' => in_str = true,
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        close = Some(i);
                        break;
                    }
                }
                _ => {}
            }
        }
        match close {
            Some(end) => {
                spans.push((open, end + 1));
                start = end + 1;
            }
            None => start = open + 1,
        }
    }
    spans
}

/// All top-level JSON-looking object regions in `raw`, in order.
pub fn extract_objects(raw: &str) -> Vec<&str> {
    object_spans(raw).into_iter().map(|(a, b)| &raw[a..b]).collect()
}

#[derive(Debug, PartialEq)]
enum Token {
    Str(String),
    Colon,
}

/// Tokenizes an object loosely: string literals and colons only. Commas,
/// brackets and stray characters are ignored.
fn loose_tokens(body: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut chars = body.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        match c {
            ':' => tokens.push(Token::Colon),
            '"' => {
                let mut escaped = false;
                let mut end = body.len();
                for (j, d) in chars.by_ref() {
                    if escaped {
                        escaped = false;
                    } else if d == '\\' {
                        escaped = true;
                    } else if d == '"' {
                        end = j;
                        break;
                    }
                }
                let literal = &body[i..(end + 1).min(body.len())];
                let text = serde_json::from_str::<String>(literal)
                    .unwrap_or_else(|_| body[i + 1..end.min(body.len())].to_string());
                tokens.push(Token::Str(text));
            }
            _ => {}
        }
    }
    tokens
}

/// Key -> string values, keys lowercased, first occurrence wins.
type Fields = Vec<(String, Vec<String>)>;

fn insert_field(fields: &mut Fields, key: &str, values: Vec<String>) {
    let key = key.trim().to_lowercase();
    if !fields.iter().any(|(k, _)| *k == key) {
        fields.push((key, values));
    }
}

fn strict_fields(object: &str) -> Option<Fields> {
    let Value::Object(map) = serde_json::from_str::<Value>(object).ok()? else {
        return None;
    };
    let mut fields = Fields::new();
    for (k, v) in map {
        let values = match v {
            Value::String(s) => vec![s],
            Value::Array(items) => items
                .into_iter()
                .map(|i| match i {
                    Value::String(s) => s,
                    other => other.to_string(),
                })
                .collect(),
            Value::Null => Vec::new(),
            other => vec![other.to_string()],
        };
        insert_field(&mut fields, &k, values);
    }
    Some(fields)
}

fn loose_fields(object: &str) -> Fields {
    let tokens = loose_tokens(object);
    let mut fields = Fields::new();
    let mut current: Option<(String, Vec<String>)> = None;
    let mut i = 0;
    while i < tokens.len() {
        if let Token::Str(s) = &tokens[i] {
            if tokens.get(i + 1) == Some(&Token::Colon) {
                if let Some((k, v)) = current.take() {
                    insert_field(&mut fields, &k, v);
                }
                current = Some((s.clone(), Vec::new()));
                i += 2;
                continue;
            }
            if let Some((_, values)) = current.as_mut() {
                values.push(s.clone());
            }
        }
        i += 1;
    }
    if let Some((k, v)) = current {
        insert_field(&mut fields, &k, v);
    }
    fields
}

/// Removes code-fence markers and bracket characters, strips wrapping
/// single quotes, trims.
fn sanitize(value: &str) -> String {
    let cleaned: String = value
        .replace("```", "")
        .chars()
        .filter(|c| !matches!(c, '{' | '}' | '[' | ']'))
        .collect();
    cleaned.trim().trim_matches('\'').trim().to_string()
}

fn field<'a>(fields: &'a Fields, key: &'static str) -> Result<&'a [String]> {
    fields
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_slice())
        .ok_or(PromptError::MissingKey(key))
}

fn single(fields: &Fields, key: &'static str) -> Result<String> {
    let joined = field(fields, key)?
        .iter()
        .map(|v| sanitize(v))
        .filter(|v| !v.is_empty())
        .collect::<Vec<_>>()
        .join(", ");
    if joined.is_empty() {
        return Err(PromptError::EmptyField(key));
    }
    Ok(joined)
}

/// Parses the first JSON object in a model reply into a [`Scheme`].
///
/// Code fences and surrounding prose are ignored. Keys match
/// case-insensitively. `SFX` may be a proper array or a run of loose
/// strings after the key (`"SFX":"a", "b"`), which is how models sometimes
/// echo few-shot examples; objects that are not valid JSON fall back to a
/// tokenizer that pairs each `"key":` with the strings following it.
pub fn parse_scheme(raw: &str) -> Result<Scheme> {
    let object = extract_objects(raw)
        .into_iter()
        .next()
        .ok_or(PromptError::NoJsonFound)?;
    let fields = strict_fields(object).unwrap_or_else(|| loose_fields(object));
    let idea = single(&fields, "idea")?;
    let sfx: Vec<String> = field(&fields, "sfx")?
        .iter()
        .map(|s| sanitize(s))
        .filter(|s| !s.is_empty())
        .collect();
    let bgm = single(&fields, "bgm")?;
    let sfx: [String; 2] = sfx
        .try_into()
        .map_err(|v: Vec<String>| PromptError::WrongSfxCount(v.len()))?;
    Ok(Scheme { idea, sfx, bgm })
}
