use serde::{Deserialize, Serialize};

use super::{DspError, Result, StftParams, Waveform};

/// Mean frame RMS above which a generated SFX track is treated as noise.
pub const DEFAULT_GATE_THRESHOLD: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateDecision {
    pub kept: bool,
    pub mean_rms: f64,
    pub threshold: f64,
}

/// Per-frame RMS over raw (unwindowed) sample frames laid out exactly like
/// the STFT frames. Short inputs are zero-padded to one frame; an empty
/// input yields no frames.
pub fn frame_rms(w: &Waveform, p: StftParams) -> Vec<f64> {
    if w.is_empty() {
        return Vec::new();
    }
    let n = p.n_fft;
    (0..p.frame_count(w.len()))
        .map(|f| {
            let start = f * p.hop;
            let end = (start + n).min(w.len());
            let sum_sq: f64 = w.samples[start..end].iter().map(|s| s * s).sum();
            (sum_sq / n as f64).sqrt()
        })
        .collect()
}

/// Energy gate: the track is kept iff the mean of its frame RMS values does
/// not exceed `threshold`.
pub fn noise_gate(w: &Waveform, threshold: f64, p: StftParams) -> Result<GateDecision> {
    if w.is_empty() {
        return Err(DspError::EmptyWaveform);
    }
    p.validate()?;
    let rms = frame_rms(w, p);
    let mean_rms = rms.iter().sum::<f64>() / rms.len() as f64;
    Ok(GateDecision {
        kept: mean_rms <= threshold,
        mean_rms,
        threshold,
    })
}
