//! The post-processing chain applied to generated tracks, step by step.

use serde::{Deserialize, Serialize};

use super::config::DspConfig;
use crate::dsp::{
    self, apply_biquad, apply_gain, fit_duration, noise_gate, spectral_denoise, DspError, FilterKind, GateDecision,
    Waveform,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackClass {
    Sfx,
    Bgm,
}

/// Only SFX are gated; music is never discarded.
pub fn gate(w: &Waveform, dsp: &DspConfig) -> Result<GateDecision, DspError> {
    noise_gate(w, dsp.threshold, dsp.stft())
}

/// High-pass then low-pass, if enabled for the class.
pub fn filter(w: &Waveform, class: TrackClass, dsp: &DspConfig) -> Result<Waveform, DspError> {
    let enabled = match class {
        TrackClass::Sfx => dsp.filter_sfx,
        TrackClass::Bgm => dsp.filter_bgm,
    };
    if !enabled {
        return Ok(w.clone());
    }
    let hp = apply_biquad(w, FilterKind::Highpass, dsp.hp_cutoff_hz, dsp.filter_q)?;
    apply_biquad(&hp, FilterKind::Lowpass, dsp.lp_cutoff_hz, dsp.filter_q)
}

/// Spectral denoise; clips shorter than one analysis frame are zero-padded
/// for the analysis and trimmed back afterwards.
pub fn denoise(w: &Waveform, dsp: &DspConfig) -> Result<Waveform, DspError> {
    if w.is_empty() {
        return Err(DspError::EmptyWaveform);
    }
    if w.len() >= dsp.n_fft {
        return spectral_denoise(w, &dsp.denoise());
    }
    let mut padded = w.samples.clone();
    padded.resize(dsp.n_fft, 0.0);
    let mut out = spectral_denoise(&Waveform::new(padded, w.sample_rate_hz), &dsp.denoise())?;
    out.samples.truncate(w.len());
    Ok(out)
}

pub fn gain(w: &Waveform, class: TrackClass, dsp: &DspConfig) -> Result<Waveform, DspError> {
    apply_gain(
        w,
        match class {
            TrackClass::Sfx => dsp.sfx_gain,
            TrackClass::Bgm => dsp.bgm_gain,
        },
    )
}

/// Outcome of [`postfx`] for one input track.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedTrack {
    pub class: TrackClass,
    pub gate: Option<GateDecision>,
    /// `None` when the gate discarded the track.
    pub output: Option<Waveform>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PostFx {
    pub tracks: Vec<ProcessedTrack>,
    pub mix: Waveform,
}

/// Runs the whole chain on already generated tracks: resample, gate SFX,
/// filter, denoise, gain, fit to `target_s` (default: the longest input),
/// and mix the survivors.
pub fn postfx(inputs: &[(TrackClass, Waveform)], dsp: &DspConfig, target_s: Option<f64>) -> Result<PostFx, DspError> {
    if inputs.is_empty() {
        return Err(DspError::EmptyTrackList);
    }
    let target_s = target_s.unwrap_or_else(|| inputs.iter().map(|(_, w)| w.duration_s()).fold(0.0, f64::max));
    let mut tracks = Vec::with_capacity(inputs.len());
    let mut survivors = Vec::new();
    for (class, w) in inputs {
        let w = dsp::resample(w, dsp.sample_rate_hz)?;
        let decision = match class {
            TrackClass::Sfx => Some(gate(&w, dsp)?),
            TrackClass::Bgm => None,
        };
        if decision.as_ref().is_some_and(|d| !d.kept) {
            tracks.push(ProcessedTrack {
                class: *class,
                gate: decision,
                output: None,
            });
            continue;
        }
        let w = filter(&w, *class, dsp)?;
        let w = denoise(&w, dsp)?;
        let w = gain(&w, *class, dsp)?;
        let w = fit_duration(&w, target_s)?;
        survivors.push(w.clone());
        tracks.push(ProcessedTrack {
            class: *class,
            gate: decision,
            output: Some(w),
        });
    }
    let mix = dsp::mix(&survivors)?;
    Ok(PostFx { tracks, mix })
}
