use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{DspError, Result, Waveform};

/// Q of a second-order Butterworth section.
pub const BUTTERWORTH_Q: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Highpass,
    Lowpass,
}

/// Second-order IIR section, transposed direct form II, coefficients
/// normalized by `a0` (RBJ audio-EQ cookbook).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
    z1: f64,
    z2: f64,
}

impl Biquad {
    pub fn new(kind: FilterKind, cutoff_hz: f64, sample_rate_hz: u32, q: f64) -> Result<Self> {
        let nyquist_hz = f64::from(sample_rate_hz) / 2.0;
        if !(cutoff_hz > 0.0 && cutoff_hz < nyquist_hz) {
            return Err(DspError::CutoffOutOfRange { cutoff_hz, nyquist_hz });
        }
        if !(q > 0.0 && q.is_finite()) {
            return Err(DspError::InvalidParameter(format!("q must be positive, got {q}")));
        }
        let w0 = 2.0 * PI * cutoff_hz / f64::from(sample_rate_hz);
        let (sin_w0, cos_w0) = w0.sin_cos();
        let alpha = sin_w0 / (2.0 * q);
        let (b0, b1, b2) = match kind {
            FilterKind::Lowpass => ((1.0 - cos_w0) / 2.0, 1.0 - cos_w0, (1.0 - cos_w0) / 2.0),
            FilterKind::Highpass => ((1.0 + cos_w0) / 2.0, -(1.0 + cos_w0), (1.0 + cos_w0) / 2.0),
        };
        let a0 = 1.0 + alpha;
        Ok(Self {
            b0: b0 / a0,
            b1: b1 / a0,
            b2: b2 / a0,
            a1: -2.0 * cos_w0 / a0,
            a2: (1.0 - alpha) / a0,
            z1: 0.0,
            z2: 0.0,
        })
    }

    #[inline]
    pub fn process(&mut self, x: f64) -> f64 {
        let y = self.b0 * x + self.z1;
        self.z1 = self.b1 * x - self.a1 * y + self.z2;
        self.z2 = self.b2 * x - self.a2 * y;
        y
    }

    pub fn reset(&mut self) {
        self.z1 = 0.0;
        self.z2 = 0.0;
    }

    /// `|H(e^{jw})|` at `freq_hz`.
    pub fn magnitude_at(&self, freq_hz: f64, sample_rate_hz: u32) -> f64 {
        let w = 2.0 * PI * freq_hz / f64::from(sample_rate_hz);
        let z1 = Complex64::from_polar(1.0, -w);
        let z2 = z1 * z1;
        let num = self.b0 + z1 * self.b1 + z2 * self.b2;
        let den = 1.0 + z1 * self.a1 + z2 * self.a2;
        (num / den).norm()
    }
}

/// Runs `w` through a fresh filter with zero initial state.
pub fn apply_biquad(w: &Waveform, kind: FilterKind, cutoff_hz: f64, q: f64) -> Result<Waveform> {
    let mut filter = Biquad::new(kind, cutoff_hz, w.sample_rate_hz, q)?;
    let samples = w.samples.iter().map(|&x| filter.process(x)).collect();
    Ok(Waveform::new(samples, w.sample_rate_hz))
}
