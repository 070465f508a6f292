//! Prompt templates for the language model and parsing of its replies.
//!
//! Four templates drive the conversation:
//!
//! * content understanding: sent with the key frame, yields a description;
//! * scheme generation: turns the description into a [`Scheme`];
//! * keyword extraction and example generation: only used when the user
//!   asks for a particular mood, see [`personalize_template`].
//!
//! Template text lives in `templates/` next to this crate and is compiled
//! in; [`TemplateSet::load_dir`] loads an edited copy at runtime.

mod personalize;
mod scheme;
mod template;

pub use personalize::{
    parse_examples, parse_keywords, personalize_template, Personalization, FORBIDDEN_KEYWORDS, MAX_KEYWORDS,
};
pub use scheme::{extract_objects, parse_scheme, Scheme};
pub use template::{Placeholder, PromptTemplate, TemplateKind, TemplateSet, MANIFEST_VERSION};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("description is empty")]
    EmptyDescription,
    #[error("user input is empty")]
    EmptyUserInput,
    #[error("placeholder <{0}> is not bound")]
    UnboundPlaceholder(String),
    #[error("expected a {expected} template, got {found}")]
    WrongKind {
        expected: TemplateKind,
        found: TemplateKind,
    },
    #[error("template has no few-shot examples")]
    NoExamplesInTemplate,
    #[error("no JSON object found in reply")]
    NoJsonFound,
    #[error("reply is missing key {0:?}")]
    MissingKey(&'static str),
    #[error("expected exactly 2 SFX entries, found {0}")]
    WrongSfxCount(usize),
    #[error("field {0:?} is empty")]
    EmptyField(&'static str),
    #[error("no usable keywords in reply")]
    NoKeywords,
    #[error("no usable example schemes in reply")]
    NoExamples,
    #[error("personalization has no keywords")]
    EmptyKeywords,
    #[error("personalization has no examples")]
    EmptyExamples,
    #[error("template manifest: {0}")]
    Manifest(String),
}

pub type Result<T, E = PromptError> = std::result::Result<T, E>;

fn non_empty(text: &str, err: PromptError) -> Result<&str> {
    let t = text.trim();
    if t.is_empty() {
        Err(err)
    } else {
        Ok(t)
    }
}

impl TemplateSet {
    pub fn render_description_prompt(&self) -> Result<String> {
        self.get(TemplateKind::ContentUnderstanding).render(&[])
    }

    pub fn render_keyword_prompt(&self, user_input: &str) -> Result<String> {
        let input = non_empty(user_input, PromptError::EmptyUserInput)?;
        self.get(TemplateKind::KeywordExtraction)
            .render(&[(Placeholder::UserInput, input)])
    }

    pub fn render_examples_prompt(&self, user_input: &str) -> Result<String> {
        let input = non_empty(user_input, PromptError::EmptyUserInput)?;
        let t = self.get(TemplateKind::ExampleGeneration);
        t.render(&[
            (Placeholder::UserInput, input),
            (Placeholder::Examples, &t.examples_block()),
        ])
    }
}

/// The content-understanding prompt sent alongside the key frame.
pub fn render_description_prompt() -> String {
    TemplateSet::builtin()
        .render_description_prompt()
        .expect("builtin template has no slots")
}

/// Binds a video description into a scheme-generation template.
pub fn render_scheme_prompt(description: &str, template: &PromptTemplate) -> Result<String> {
    template.expect_kind(TemplateKind::SchemeGeneration)?;
    let description = non_empty(description, PromptError::EmptyDescription)?;
    if template.examples.is_empty() {
        return Err(PromptError::NoExamplesInTemplate);
    }
    let keywords = template.keywords.as_deref().unwrap_or_default();
    let examples = template.examples_block();
    // A trailing period would double up with the one after the slot.
    let description = description.trim_end_matches('.');
    template.render(&[
        (Placeholder::Description, description),
        (Placeholder::KeyWords, keywords),
        (Placeholder::Examples, &examples),
    ])
}

pub fn render_keyword_prompt(user_input: &str) -> Result<String> {
    TemplateSet::builtin().render_keyword_prompt(user_input)
}

pub fn render_examples_prompt(user_input: &str) -> Result<String> {
    TemplateSet::builtin().render_examples_prompt(user_input)
}
