//! The post-processing chain on synthetic tracks: gate, filter, denoise,
//! gain, fit and mix. Writes the mix to a WAV.
//!
//!     cargo run --example postfx_chain -- [out.wav]

use sva::dsp::write_wav;
use sva::gateway::mock::synthesize;
use sva::gateway::BackendKind;
use sva::pipeline::{postfx, DspConfig, TrackClass};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| std::env::temp_dir().join("sva-postfx.wav").display().to_string());
    let sr = 32_000;
    let inputs = [
        (
            TrackClass::Sfx,
            synthesize(BackendKind::SfxAudio, "Footsteps on gravel", 3.0, sr),
        ),
        (
            TrackClass::Sfx,
            synthesize(BackendKind::SfxAudio, "NOISEBURST", 3.0, sr),
        ),
        (
            TrackClass::Bgm,
            synthesize(BackendKind::BgmAudio, "Warm acoustic guitar", 4.0, sr),
        ),
    ];
    let dsp = DspConfig::default();
    let result = postfx(&inputs, &dsp, Some(3.0))?;
    for ((class, input), t) in inputs.iter().zip(&result.tracks) {
        let gate = t
            .gate
            .map(|g| format!("gate {:.3} {}", g.mean_rms, if g.kept { "kept" } else { "discarded" }))
            .unwrap_or_else(|| "no gate".into());
        let after = t
            .output
            .as_ref()
            .map(|w| format!("rms {:.4}", w.rms()))
            .unwrap_or_else(|| "-".into());
        println!("{class:?}: rms {:.4} -> {gate} -> {after}", input.rms());
    }
    println!(
        "mix: {:.2}s, peak {:.4}, rms {:.4}",
        result.mix.duration_s(),
        result.mix.peak(),
        result.mix.rms()
    );
    write_wav(&out, &result.mix)?;
    println!("wrote {out}");
    Ok(())
}
