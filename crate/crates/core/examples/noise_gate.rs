//! How the energy gate treats a few signals at the default threshold.
//!
//!     cargo run --example noise_gate

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sva::dsp::{noise_gate, Waveform, DEFAULT_GATE_THRESHOLD};
use sva::pipeline::DspConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sr = 32_000;
    let params = DspConfig::default().stft();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let signals = [
        ("silence", Waveform::silence(sr as usize, sr)),
        (
            "sine 0.3",
            Waveform::from_fn(sr as usize, sr, |t| 0.3 * (2.0 * PI * 440.0 * t).sin()),
        ),
        (
            "sine 0.5",
            Waveform::from_fn(sr as usize, sr, |t| 0.5 * (2.0 * PI * 440.0 * t).sin()),
        ),
        (
            "full-scale noise",
            Waveform::new((0..sr).map(|_| rng.random_range(-1.0..1.0)).collect(), sr),
        ),
        ("constant 1.0", Waveform::new(vec![1.0; sr as usize], sr)),
    ];
    println!("threshold {DEFAULT_GATE_THRESHOLD}");
    for (name, w) in &signals {
        let d = noise_gate(w, DEFAULT_GATE_THRESHOLD, params)?;
        println!(
            "{name:<18} mean rms {:.4} -> {}",
            d.mean_rms,
            if d.kept { "kept" } else { "discarded" }
        );
    }
    Ok(())
}
