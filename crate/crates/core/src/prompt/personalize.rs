use serde::{Deserialize, Serialize};

use super::{extract_objects, parse_scheme, PromptError, PromptTemplate, Result, TemplateKind};

/// Terms the keyword reply must not contain; they are implied by the task.
pub const FORBIDDEN_KEYWORDS: [&str; 3] = ["sfx", "bgm", "short video"];

/// At most this many keywords are spliced into a personalized template.
pub const MAX_KEYWORDS: usize = 8;

/// Longer items are prose, not keywords.
const MAX_WORDS_PER_KEYWORD: usize = 4;

/// A user's mood request together with what the model extracted from it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Personalization {
    pub user_input: String,
    pub keywords: Vec<String>,
    pub examples: Vec<String>,
}

fn clean_keyword(item: &str) -> String {
    item.trim()
        .trim_start_matches(|c: char| matches!(c, '-' | '*' | '•') || c.is_ascii_digit())
        .trim_start_matches(['.', ')'])
        .trim_matches(|c: char| c.is_whitespace() || matches!(c, '\'' | '"' | '{' | '}' | '[' | ']' | '.'))
        .to_string()
}

/// Splits a keyword reply on commas, semicolons and newlines.
///
/// Items are trimmed of list markers and quotes; empty items, long phrases,
/// duplicates and anything mentioning a [`FORBIDDEN_KEYWORDS`] term are
/// dropped.
pub fn parse_keywords(raw: &str) -> Result<Vec<String>> {
    let body = raw.trim();
    let body = match body.get(..7) {
        Some(prefix) if prefix.eq_ignore_ascii_case("output:") => &body[7..],
        _ => body,
    };
    let mut keywords: Vec<String> = Vec::new();
    for item in body.split([',', ';', '\n']) {
        let kw = clean_keyword(item);
        if kw.is_empty() || kw.split_whitespace().count() > MAX_WORDS_PER_KEYWORD {
            continue;
        }
        let lower = kw.to_lowercase();
        if FORBIDDEN_KEYWORDS.iter().any(|f| lower.contains(f)) {
            continue;
        }
        if keywords.iter().any(|k| k.to_lowercase() == lower) {
            continue;
        }
        keywords.push(kw);
    }
    if keywords.is_empty() {
        return Err(PromptError::NoKeywords);
    }
    Ok(keywords)
}

/// Collects every example scheme in a reply, normalized to canonical JSON.
/// Objects that do not parse as a scheme are skipped.
pub fn parse_examples(raw: &str) -> Result<Vec<String>> {
    let examples: Vec<String> = extract_objects(raw)
        .into_iter()
        .filter_map(|o| parse_scheme(o).ok())
        .map(|s| s.to_json())
        .collect();
    if examples.is_empty() {
        return Err(PromptError::NoExamples);
    }
    Ok(examples)
}

/// Returns a copy of `base` whose tone phrase is replaced by the joined
/// keywords (first [`MAX_KEYWORDS`]) and whose few-shot examples are
/// replaced wholesale by `p.examples`.
pub fn personalize_template(base: &PromptTemplate, p: &Personalization) -> Result<PromptTemplate> {
    base.expect_kind(TemplateKind::SchemeGeneration)?;
    let keywords: Vec<&str> = p
        .keywords
        .iter()
        .map(|k| k.trim())
        .filter(|k| !k.is_empty())
        .take(MAX_KEYWORDS)
        .collect();
    if keywords.is_empty() {
        return Err(PromptError::EmptyKeywords);
    }
    if p.examples.iter().all(|e| e.trim().is_empty()) {
        return Err(PromptError::EmptyExamples);
    }
    Ok(PromptTemplate {
        kind: base.kind,
        body: base.body.clone(),
        examples: p.examples.iter().filter(|e| !e.trim().is_empty()).cloned().collect(),
        keywords: Some(keywords.join(", ")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::{render_scheme_prompt, TemplateSet};

    fn base() -> &'static PromptTemplate {
        TemplateSet::builtin().get(TemplateKind::SchemeGeneration)
    }

    fn melancholy(examples: usize) -> Personalization {
        Personalization {
            user_input: "melancholic atmosphere".into(),
            keywords: vec!["Melancholy".into(), "Sadness".into()],
            examples: (0..examples)
                .map(|i| {
                    format!(
                        r#"{{"idea":"Rain {i}","SFX":["Rain on a window","Distant thunder"],"BGM":"Slow solo piano"}}"#
                    )
                })
                .collect(),
        }
    }

    #[test]
    fn keywords_from_examples() {
        assert_eq!(
            parse_keywords("Fresh, Upbeat, Cheerful, Lively, Sunny").unwrap(),
            ["Fresh", "Upbeat", "Cheerful", "Lively", "Sunny"]
        );
        assert_eq!(parse_keywords(" Emotional ,Memory ").unwrap(), ["Emotional", "Memory"]);
    }

    #[test]
    fn keywords_forbidden_terms_dropped() {
        assert_eq!(parse_keywords("SFX, BGM"), Err(PromptError::NoKeywords));
        assert_eq!(parse_keywords("Calm, Short Video, bgm loop").unwrap(), ["Calm"]);
    }

    #[test]
    fn keywords_list_markers_and_prefix() {
        assert_eq!(
            parse_keywords("Output: - Dark;\n* Brooding\n1. Slow.\nDark").unwrap(),
            ["Dark", "Brooding", "Slow"]
        );
        assert_eq!(parse_keywords("   "), Err(PromptError::NoKeywords));
    }

    #[test]
    fn examples_extracted_and_canonicalized() {
        let raw = "- {\"idea\":\"A\",\"SFX\":[\"x\",\"y\"],\"BGM\":\"z\"};\n- {\"idea\":\"bad\"};\n- {\"idea\":\"B\" \"SFX\":\"p\", \"q\" \"BGM\":\"r\"}";
        let ex = parse_examples(raw).unwrap();
        assert_eq!(
            ex,
            [
                r#"{"idea":"A","SFX":["x","y"],"BGM":"z"}"#,
                r#"{"idea":"B","SFX":["p","q"],"BGM":"r"}"#
            ]
        );
        assert_eq!(parse_examples("nothing"), Err(PromptError::NoExamples));
    }

    #[test]
    fn personalized_prompt_uses_keywords() {
        let t = personalize_template(base(), &melancholy(2)).unwrap();
        let p = render_scheme_prompt("A rainy street", &t).unwrap();
        assert!(p.contains("Now plan Melancholy, Sadness SFXs and BGM"));
        assert!(p.contains("idea that Melancholy, Sadness, comprising"));
        assert!(!p.contains("Mystical Curiosity"));
        assert!(!p.contains("Prehistoric Dance Party"));
        assert!(!p.contains("blue-sky"));
    }

    #[test]
    fn example_count_follows_personalization() {
        let t = personalize_template(base(), &melancholy(3)).unwrap();
        assert_eq!(t.examples.len(), 3);
        assert_eq!(t.kind, TemplateKind::SchemeGeneration);
    }

    #[test]
    fn base_is_untouched() {
        let before = base().clone();
        let _ = personalize_template(base(), &melancholy(1)).unwrap();
        assert_eq!(&before, base());
    }

    #[test]
    fn keyword_cap() {
        let mut p = melancholy(1);
        p.keywords = (0..12).map(|i| format!("k{i}")).collect();
        let t = personalize_template(base(), &p).unwrap();
        assert_eq!(t.keywords.unwrap().split(", ").count(), MAX_KEYWORDS);
    }

    #[test]
    fn empty_inputs_rejected() {
        let mut p = melancholy(1);
        p.keywords.clear();
        assert_eq!(personalize_template(base(), &p), Err(PromptError::EmptyKeywords));
        let mut p = melancholy(0);
        assert_eq!(personalize_template(base(), &p), Err(PromptError::EmptyExamples));
        p.examples.push("  ".into());
        assert_eq!(personalize_template(base(), &p), Err(PromptError::EmptyExamples));
        let other = TemplateSet::builtin().get(TemplateKind::ExampleGeneration);
        assert!(matches!(
            personalize_template(other, &melancholy(1)),
            Err(PromptError::WrongKind { .. })
        ));
    }
}
