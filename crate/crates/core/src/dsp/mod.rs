//! Signal processing for the generated tracks.
//!
//! Everything here operates on [`Waveform`], a mono buffer of `f64`
//! samples. Values are nominally in `[-1, 1]`; intermediate stages are free
//! to exceed that range and clamping only happens in [`mix`] and
//! [`write_wav`].
//!
//! The post-processing chain applied to each track is
//!
//! ```text
//! noise_gate (SFX only) -> highpass -> lowpass -> spectral_denoise
//!     -> apply_gain -> fit_duration -> mix
//! ```

mod biquad;
mod denoise;
mod gate;
mod ops;
mod stft;
mod wav;

pub use biquad::{apply_biquad, Biquad, FilterKind, BUTTERWORTH_Q};
pub use denoise::{spectral_denoise, DenoiseParams};
pub use gate::{frame_rms, noise_gate, GateDecision, DEFAULT_GATE_THRESHOLD};
pub use ops::{apply_gain, fit_duration, mix, resample, CROSSFADE_S};
pub use stft::{hann_window, istft, stft, stft_complex, ComplexSpectrogram, Spectrogram, StftParams};
pub use wav::{decode_wav, encode_wav, read_wav, write_wav};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum DspError {
    #[error("waveform is empty")]
    EmptyWaveform,
    #[error("waveform too short: {len} samples, need at least {min}")]
    TooShort { len: usize, min: usize },
    #[error("cutoff {cutoff_hz} Hz outside (0, {nyquist_hz}) Hz")]
    CutoffOutOfRange { cutoff_hz: f64, nyquist_hz: f64 },
    #[error("gain factor must be non-negative, got {0}")]
    NegativeFactor(f64),
    #[error("no tracks to mix")]
    EmptyTrackList,
    #[error("sample rate mismatch: {expected} Hz vs {found} Hz")]
    RateMismatch { expected: u32, found: u32 },
    #[error("length mismatch: {expected} samples vs {found} samples")]
    LengthMismatch { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported WAV format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt WAV header: {0}")]
    CorruptHeader(String),
    #[error("I/O failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = DspError> = std::result::Result<T, E>;

/// Mono PCM audio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Self {
        assert!(sample_rate_hz > 0, "sample rate must be positive");
        Self {
            samples,
            sample_rate_hz,
        }
    }

    pub fn silence(len: usize, sample_rate_hz: u32) -> Self {
        Self::new(vec![0.0; len], sample_rate_hz)
    }

    /// Samples `f(t)` at `t = n / sample_rate_hz` for `n` in `0..len`.
    pub fn from_fn(len: usize, sample_rate_hz: u32, f: impl Fn(f64) -> f64) -> Self {
        let sr = f64::from(sample_rate_hz);
        Self::new((0..len).map(|n| f(n as f64 / sr)).collect(), sample_rate_hz)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate_hz)
    }

    /// Root mean square over the whole buffer; zero when empty.
    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let sum_sq: f64 = self.samples.iter().map(|s| s * s).sum();
        (sum_sq / self.samples.len() as f64).sqrt()
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    pub fn clamped(mut self) -> Self {
        for s in &mut self.samples {
            *s = s.clamp(-1.0, 1.0);
        }
        self
    }
}
