//! Render the built-in prompts and parse a few scheme replies.
//!
//!     cargo run --example prompt_templates

use sva::prompt::{parse_scheme, render_description_prompt, render_scheme_prompt, TemplateKind, TemplateSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("--- description prompt ---\n{}\n", render_description_prompt());

    let template = TemplateSet::builtin().get(TemplateKind::SchemeGeneration);
    let prompt = render_scheme_prompt("A paper boat drifts down a rainy gutter.", template)?;
    println!("--- scheme prompt ---\n{prompt}\n");

    // Replies come back in all sorts of shapes.
    let replies = [
        r#"{"idea":"Gutter Voyage","SFX":["Rain pattering on asphalt","Water gurgling into a drain"],"BGM":"Gentle pizzicato strings"}"#,
        "Sure! Here it is:\n```json\n{\"idea\": \"Tiny Sailor\", \"SFX\": [\"Paper rustling\", \"Puddle splash\"], \"BGM\": \"Playful accordion waltz\"};\n```",
        "{\"idea\":\"Storm Drift\"\n\"SFX\":\"Thunder rumbling far away\", \"Rain on a tin roof\"\n\"BGM\":\"Brooding cello drone\"};",
        "I cannot help with that.",
    ];
    for raw in replies {
        match parse_scheme(raw) {
            Ok(s) => println!("ok    {}", s.to_json()),
            Err(e) => println!("error {e}"),
        }
    }
    Ok(())
}
