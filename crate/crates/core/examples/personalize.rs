//! Turn a mood request into keywords and examples, then into a scheme prompt.
//!
//!     cargo run --example personalize -- "cheerful and upbeat"
//!
//! Uses the offline mock model.

use sva::gateway::{complete_text, BackendConfig, BackendKind};
use sva::prompt::{
    parse_examples, parse_keywords, parse_scheme, personalize_template, render_examples_prompt, render_keyword_prompt,
    render_scheme_prompt, Personalization, TemplateKind, TemplateSet,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let input = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "melancholic atmosphere".into());
    let mllm = BackendConfig::mock(BackendKind::Mllm);

    let keywords = parse_keywords(&complete_text(&mllm, &render_keyword_prompt(&input)?)?.value)?;
    let examples = parse_examples(&complete_text(&mllm, &render_examples_prompt(&input)?)?.value)?;
    println!("keywords: {}", keywords.join(", "));
    for e in &examples {
        println!("example:  {e}");
    }

    let p = Personalization {
        user_input: input,
        keywords,
        examples,
    };
    let template = personalize_template(TemplateSet::builtin().get(TemplateKind::SchemeGeneration), &p)?;
    let prompt = render_scheme_prompt("An old man feeds pigeons on a park bench.", &template)?;
    println!("\n{prompt}\n");
    let scheme = parse_scheme(&complete_text(&mllm, &prompt)?.value)?;
    println!("scheme:   {}", scheme.to_json());
    Ok(())
}
