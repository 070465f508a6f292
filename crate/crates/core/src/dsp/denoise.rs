//! Stationary spectral gate.
//!
//! A per-bin noise profile is estimated from the quietest frames of the
//! track itself, smoothed across frequency, and every time-frequency cell
//! whose magnitude stays under `margin` times that profile is attenuated by
//! a fixed suppression gain. Cells above the threshold pass untouched.

use serde::{Deserialize, Serialize};

use super::{istft, stft_complex, DspError, Result, StftParams, Waveform};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenoiseParams {
    /// Gain applied to gated cells, in dB. Must be negative.
    pub suppression_db: f64,
    /// Fraction of frames (the quietest ones, per bin) averaged into the
    /// raw noise profile.
    pub floor_quantile: f64,
    /// Half-width, in bins, of the running median applied to the raw
    /// profile. Stationary tones are narrower than the window and drop out.
    pub smoothing_bins: usize,
    /// Cells below `margin * floor` are gated. For Gaussian noise the
    /// quietest-decile mean sits near 0.3 Rayleigh scale units, so the
    /// default puts the threshold close to 4.8 scale units.
    pub margin: f64,
    pub stft: StftParams,
}

impl Default for DenoiseParams {
    fn default() -> Self {
        Self {
            suppression_db: -25.0,
            floor_quantile: 0.1,
            smoothing_bins: 16,
            margin: 16.0,
            stft: StftParams { n_fft: 2048, hop: 512 },
        }
    }
}

impl DenoiseParams {
    pub fn with_suppression_db(suppression_db: f64) -> Self {
        Self {
            suppression_db,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        self.stft.validate()?;
        if !(self.suppression_db < 0.0) {
            return Err(DspError::InvalidParameter(format!(
                "suppression_db must be negative, got {}",
                self.suppression_db
            )));
        }
        if !(self.floor_quantile > 0.0 && self.floor_quantile <= 1.0) {
            return Err(DspError::InvalidParameter(format!(
                "floor_quantile must be in (0, 1], got {}",
                self.floor_quantile
            )));
        }
        if !(self.margin > 0.0) {
            return Err(DspError::InvalidParameter(format!(
                "margin must be positive, got {}",
                self.margin
            )));
        }
        Ok(())
    }
}

fn reflect_pad(samples: &[f64], pad: usize, hop: usize, n_fft: usize) -> Vec<f64> {
    let len = samples.len();
    let mut out = Vec::with_capacity(len + 2 * pad + hop);
    out.extend((1..=pad).rev().map(|i| samples[i]));
    out.extend_from_slice(samples);
    out.extend((1..=pad).map(|i| samples[len - 1 - i]));
    let rem = (out.len() - n_fft) % hop;
    if rem != 0 {
        out.resize(out.len() + hop - rem, 0.0);
    }
    out
}

fn noise_profile(mags: &[Vec<f64>], bins: usize, quantile: f64) -> Vec<f64> {
    let frames = mags.len();
    let take = ((frames as f64 * quantile).ceil() as usize).clamp(1, frames);
    let mut column = vec![0.0; frames];
    (0..bins)
        .map(|k| {
            for (c, frame) in column.iter_mut().zip(mags) {
                *c = frame[k];
            }
            column.sort_by(f64::total_cmp);
            column[..take].iter().sum::<f64>() / take as f64
        })
        .collect()
}

fn running_median(profile: &[f64], half_width: usize) -> Vec<f64> {
    let n = profile.len();
    let mut window = Vec::with_capacity(2 * half_width + 1);
    (0..n)
        .map(|k| {
            window.clear();
            window.extend_from_slice(&profile[k.saturating_sub(half_width)..(k + half_width + 1).min(n)]);
            window.sort_by(f64::total_cmp);
            let mid = window.len() / 2;
            if window.len() % 2 == 1 {
                window[mid]
            } else {
                0.5 * (window[mid - 1] + window[mid])
            }
        })
        .collect()
}

/// Spectral gate with fixed attenuation of cells under the estimated noise
/// floor. Output has exactly the input length.
pub fn spectral_denoise(w: &Waveform, params: &DenoiseParams) -> Result<Waveform> {
    params.validate()?;
    let n_fft = params.stft.n_fft;
    if w.len() < n_fft {
        return Err(DspError::TooShort {
            len: w.len(),
            min: n_fft,
        });
    }
    let pad = n_fft / 2;
    let padded = Waveform::new(reflect_pad(&w.samples, pad, params.stft.hop, n_fft), w.sample_rate_hz);
    let mut spec = stft_complex(&padded, params.stft)?;
    let bins = params.stft.bins();
    let mags = spec.magnitudes().magnitudes;
    let floor = running_median(
        &noise_profile(&mags, bins, params.floor_quantile),
        params.smoothing_bins,
    );
    let attenuation = 10f64.powf(params.suppression_db / 20.0);
    for (frame, frame_mags) in spec.frames.iter_mut().zip(&mags) {
        for k in 0..bins {
            if frame_mags[k] < floor[k] * params.margin {
                frame[k] *= attenuation;
            }
        }
    }
    let out = istft(&spec, padded.len());
    Ok(Waveform::new(
        out.samples[pad..pad + w.len()].to_vec(),
        w.sample_rate_hz,
    ))
}
