use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{PromptError, Result};

/// Named slots that may appear in a template body as `<Name>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Placeholder {
    Description,
    KeyWords,
    Examples,
    UserInput,
}

impl Placeholder {
    pub const ALL: [Placeholder; 4] = [
        Placeholder::Description,
        Placeholder::KeyWords,
        Placeholder::Examples,
        Placeholder::UserInput,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Placeholder::Description => "Description",
            Placeholder::KeyWords => "Key Words",
            Placeholder::Examples => "Examples",
            Placeholder::UserInput => "User Input",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn token(self) -> String {
        format!("<{}>", self.name())
    }
}

impl fmt::Display for Placeholder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.name())
    }
}

fn placeholder_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"<(Description|Key Words|Examples|User Input)>").unwrap())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemplateKind {
    ContentUnderstanding,
    SchemeGeneration,
    KeywordExtraction,
    ExampleGeneration,
}

impl TemplateKind {
    pub const ALL: [TemplateKind; 4] = [
        TemplateKind::ContentUnderstanding,
        TemplateKind::SchemeGeneration,
        TemplateKind::KeywordExtraction,
        TemplateKind::ExampleGeneration,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateKind::ContentUnderstanding => "content-understanding",
            TemplateKind::SchemeGeneration => "scheme-generation",
            TemplateKind::KeywordExtraction => "keyword-extraction",
            TemplateKind::ExampleGeneration => "example-generation",
        }
    }
}

impl fmt::Display for TemplateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A prompt body with `<Placeholder>` slots plus an ordered few-shot
/// example list rendered into the `<Examples>` slot.
///
/// `keywords` fills `<Key Words>` in scheme-generation templates. The
/// stock template carries the default creative-tone phrase there;
/// personalization swaps in the user's extracted keywords.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub kind: TemplateKind,
    pub body: String,
    #[serde(default)]
    pub examples: Vec<String>,
    #[serde(default)]
    pub keywords: Option<String>,
}

impl PromptTemplate {
    pub fn new(kind: TemplateKind, body: impl Into<String>) -> Self {
        Self {
            kind,
            body: body.into(),
            examples: Vec::new(),
            keywords: None,
        }
    }

    pub fn with_examples(mut self, examples: Vec<String>) -> Self {
        self.examples = examples;
        self
    }

    pub fn with_keywords(mut self, keywords: impl Into<String>) -> Self {
        self.keywords = Some(keywords.into());
        self
    }

    /// Placeholders present in the body, in order of first appearance.
    pub fn placeholders(&self) -> Vec<Placeholder> {
        let mut seen = Vec::new();
        for cap in placeholder_regex().captures_iter(&self.body) {
            let p = Placeholder::from_name(&cap[1]).expect("regex only matches known names");
            if !seen.contains(&p) {
                seen.push(p);
            }
        }
        seen
    }

    /// The few-shot examples as a bullet list, one `- example;` per line.
    pub fn examples_block(&self) -> String {
        self.examples
            .iter()
            .map(|e| format!("- {};", e.trim()))
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub(crate) fn expect_kind(&self, kind: TemplateKind) -> Result<()> {
        if self.kind != kind {
            return Err(PromptError::WrongKind {
                expected: kind,
                found: self.kind,
            });
        }
        Ok(())
    }

    /// Substitutes every binding in one pass. Each binding must have a slot
    /// in the body and each slot in the body must be bound. Bound values are
    /// inserted literally, so text that happens to look like a placeholder
    /// inside a value is never expanded.
    pub fn render(&self, bindings: &[(Placeholder, &str)]) -> Result<String> {
        let present = self.placeholders();
        for (p, _) in bindings {
            if !present.contains(p) {
                return Err(PromptError::UnboundPlaceholder(p.name().to_string()));
            }
        }
        for p in &present {
            if !bindings.iter().any(|(b, _)| b == p) {
                return Err(PromptError::UnboundPlaceholder(p.name().to_string()));
            }
        }
        let rendered = placeholder_regex().replace_all(&self.body, |cap: &regex::Captures<'_>| {
            let p = Placeholder::from_name(&cap[1]).expect("known name");
            bindings
                .iter()
                .find(|(b, _)| *b == p)
                .map(|(_, v)| (*v).to_string())
                .expect("checked above")
        });
        Ok(rendered.into_owned())
    }
}

#[derive(Debug, Deserialize)]
struct Manifest {
    version: u32,
    templates: BTreeMap<TemplateKind, ManifestEntry>,
}

#[derive(Debug, Deserialize)]
struct ManifestEntry {
    body: String,
    #[serde(default)]
    examples: Option<String>,
    #[serde(default)]
    keywords: Option<String>,
}

/// Manifest format version understood by [`TemplateSet::from_files`].
pub const MANIFEST_VERSION: u32 = 1;

/// Drops `##` annotation lines and trailing whitespace.
fn strip_annotations(text: &str) -> String {
    let kept: Vec<&str> = text
        .lines()
        .filter(|l| !l.trim_start().starts_with("##"))
        .map(str::trim_end)
        .collect();
    kept.join("\n").trim().to_string()
}

fn parse_example_lines(text: &str) -> Vec<String> {
    strip_annotations(text)
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect()
}

/// One template per [`TemplateKind`], loaded from a manifest plus data
/// files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    templates: BTreeMap<TemplateKind, PromptTemplate>,
}

const BUILTIN_FILES: &[(&str, &str)] = &[
    ("manifest.json", include_str!("../../templates/manifest.json")),
    (
        "content_understanding.txt",
        include_str!("../../templates/content_understanding.txt"),
    ),
    (
        "scheme_generation.txt",
        include_str!("../../templates/scheme_generation.txt"),
    ),
    (
        "keyword_extraction.txt",
        include_str!("../../templates/keyword_extraction.txt"),
    ),
    (
        "example_generation.txt",
        include_str!("../../templates/example_generation.txt"),
    ),
    ("seed_examples.txt", include_str!("../../templates/seed_examples.txt")),
];

impl TemplateSet {
    /// The templates shipped in `templates/`, compiled into the binary.
    pub fn builtin() -> &'static TemplateSet {
        static SET: OnceLock<TemplateSet> = OnceLock::new();
        SET.get_or_init(|| {
            TemplateSet::from_files(|name| {
                BUILTIN_FILES
                    .iter()
                    .find(|(n, _)| *n == name)
                    .map(|(_, text)| text.to_string())
                    .ok_or_else(|| PromptError::Manifest(format!("missing builtin file {name}")))
            })
            .expect("builtin templates are valid")
        })
    }

    /// Loads a template directory laid out like the builtin one.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<TemplateSet> {
        let dir = dir.as_ref();
        TemplateSet::from_files(|name| {
            std::fs::read_to_string(dir.join(name))
                .map_err(|e| PromptError::Manifest(format!("{}: {e}", dir.join(name).display())))
        })
    }

    fn from_files(read: impl Fn(&str) -> Result<String>) -> Result<TemplateSet> {
        let manifest: Manifest =
            serde_json::from_str(&read("manifest.json")?).map_err(|e| PromptError::Manifest(e.to_string()))?;
        if manifest.version != MANIFEST_VERSION {
            return Err(PromptError::Manifest(format!(
                "unsupported manifest version {}",
                manifest.version
            )));
        }
        let mut templates = BTreeMap::new();
        for kind in TemplateKind::ALL {
            let entry = manifest
                .templates
                .get(&kind)
                .ok_or_else(|| PromptError::Manifest(format!("no template for {kind}")))?;
            let mut t = PromptTemplate::new(kind, strip_annotations(&read(&entry.body)?));
            if let Some(file) = &entry.examples {
                t.examples = parse_example_lines(&read(file)?);
            }
            t.keywords = entry.keywords.clone();
            templates.insert(kind, t);
        }
        let scheme = &templates[&TemplateKind::SchemeGeneration];
        if scheme.examples.len() < 2 {
            return Err(PromptError::Manifest(
                "scheme-generation needs at least 2 few-shot examples".into(),
            ));
        }
        if scheme.keywords.is_none() {
            return Err(PromptError::Manifest(
                "scheme-generation needs a default keywords phrase".into(),
            ));
        }
        Ok(TemplateSet { templates })
    }

    pub fn get(&self, kind: TemplateKind) -> &PromptTemplate {
        &self.templates[&kind]
    }
}
