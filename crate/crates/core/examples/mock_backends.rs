//! The offline backends: canned model replies and synthetic audio, plus
//! rules that force a particular reply.
//!
//!     cargo run --example mock_backends

use sva::gateway::mock::{NOISEBURST, SILENCE};
use sva::gateway::{complete_text, describe_image, generate_audio, BackendConfig, BackendKind, MockRule};

/// A flat grey 8x8 PNG.
fn png(shade: u8) -> Result<Vec<u8>, png::EncodingError> {
    let mut bytes = Vec::new();
    let mut enc = png::Encoder::new(&mut bytes, 8, 8);
    enc.set_color(png::ColorType::Grayscale);
    enc.write_header()?.write_image_data(&[shade; 64])?;
    Ok(bytes)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut mllm = BackendConfig::mock(BackendKind::Mllm);
    for shade in [40, 200] {
        println!(
            "describe: {}",
            describe_image(&mllm, &png(shade)?, "Describe the image.")?.value
        );
    }

    mllm.mock_rules.push(MockRule {
        contains: "haiku".into(),
        reply: "No haiku today.".into(),
    });
    println!("rule:     {}", complete_text(&mllm, "Write a haiku about frogs")?.value);

    let sfx = BackendConfig::mock(BackendKind::SfxAudio);
    for prompt in ["Glass shattering on tile", NOISEBURST, SILENCE] {
        let w = generate_audio(&sfx, prompt, 2.0)?.value;
        println!(
            "sfx {prompt:<26} {} samples @ {} Hz, rms {:.3}",
            w.len(),
            w.sample_rate_hz,
            w.rms()
        );
    }
    let bgm = generate_audio(&BackendConfig::mock(BackendKind::BgmAudio), "Slow jazz piano", 3.0)?.value;
    println!(
        "bgm {:<26} {:.2}s, rms {:.3}",
        "Slow jazz piano",
        bgm.duration_s(),
        bgm.rms()
    );
    Ok(())
}
