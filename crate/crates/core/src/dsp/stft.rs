use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{DspError, Result, Waveform};

/// Framing parameters. Frames are not centered: frame `f` covers samples
/// `f * hop .. f * hop + n_fft`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StftParams {
    pub n_fft: usize,
    pub hop: usize,
}

impl Default for StftParams {
    fn default() -> Self {
        Self { n_fft: 2048, hop: 512 }
    }
}

impl StftParams {
    pub fn new(n_fft: usize, hop: usize) -> Result<Self> {
        let p = Self { n_fft, hop };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.n_fft.is_power_of_two() || self.n_fft < 2 {
            return Err(DspError::InvalidParameter(format!(
                "n_fft must be a power of two >= 2, got {}",
                self.n_fft
            )));
        }
        if self.hop == 0 || self.hop > self.n_fft {
            return Err(DspError::InvalidParameter(format!(
                "hop must be in 1..={}, got {}",
                self.n_fft, self.hop
            )));
        }
        Ok(())
    }

    pub fn bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    /// Number of frames for a signal of `len` samples. Inputs shorter than
    /// one frame are zero-padded to exactly one frame.
    pub fn frame_count(&self, len: usize) -> usize {
        if len <= self.n_fft {
            1
        } else {
            1 + (len - self.n_fft) / self.hop
        }
    }
}

/// Symmetric Hann window, `w[n] = 0.5 - 0.5 cos(2 pi n / (N - 1))`.
pub fn hann_window(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let denom = (n - 1) as f64;
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / denom).cos())
        .collect()
}

/// Magnitude spectrogram, `[frame][bin]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub magnitudes: Vec<Vec<f64>>,
    pub params: StftParams,
    pub sample_rate_hz: u32,
}

impl Spectrogram {
    pub fn frames(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn bins(&self) -> usize {
        self.params.bins()
    }

    pub fn bin_frequency_hz(&self, bin: usize) -> f64 {
        bin as f64 * f64::from(self.sample_rate_hz) / self.params.n_fft as f64
    }
}

/// One-sided complex STFT, `[frame][bin]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    pub frames: Vec<Vec<Complex64>>,
    pub params: StftParams,
    pub sample_rate_hz: u32,
}

impl ComplexSpectrogram {
    pub fn magnitudes(&self) -> Spectrogram {
        Spectrogram {
            magnitudes: self
                .frames
                .iter()
                .map(|f| f.iter().map(|c| c.norm()).collect())
                .collect(),
            params: self.params,
            sample_rate_hz: self.sample_rate_hz,
        }
    }
}

pub fn stft_complex(w: &Waveform, p: StftParams) -> Result<ComplexSpectrogram> {
    p.validate()?;
    let n = p.n_fft;
    let window = hann_window(n);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let frames = (0..p.frame_count(w.len()))
        .map(|f| {
            let start = f * p.hop;
            let mut buf: Vec<Complex64> = (0..n)
                .map(|i| {
                    let x = w.samples.get(start + i).copied().unwrap_or(0.0);
                    Complex64::new(x * window[i], 0.0)
                })
                .collect();
            fft.process(&mut buf);
            buf.truncate(p.bins());
            buf
        })
        .collect();
    Ok(ComplexSpectrogram {
        frames,
        params: p,
        sample_rate_hz: w.sample_rate_hz,
    })
}

/// Hann-windowed magnitude STFT.
pub fn stft(w: &Waveform, p: StftParams) -> Result<Spectrogram> {
    Ok(stft_complex(w, p)?.magnitudes())
}

/// Weighted overlap-add inverse of [`stft_complex`], trimmed or zero-padded
/// to `len` samples.
///
/// Each frame is resynthesized with the Hann window and the sum is divided
/// by the accumulated squared window, which makes reconstruction exact
/// wherever that sum is non-negligible (everywhere except the first and
/// last few samples).
pub fn istft(spec: &ComplexSpectrogram, len: usize) -> Waveform {
    let p = spec.params;
    let n = p.n_fft;
    let window = hann_window(n);
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(n);
    let total = if spec.frames.is_empty() {
        0
    } else {
        (spec.frames.len() - 1) * p.hop + n
    };
    let mut out = vec![0.0; total.max(len)];
    let mut norm = vec![0.0; total.max(len)];
    let scale = 1.0 / n as f64;
    for (f, half) in spec.frames.iter().enumerate() {
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        buf[..half.len()].copy_from_slice(half);
        for k in 1..n / 2 {
            buf[n - k] = half[k].conj();
        }
        ifft.process(&mut buf);
        let start = f * p.hop;
        for i in 0..n {
            out[start + i] += buf[i].re * scale * window[i];
            norm[start + i] += window[i] * window[i];
        }
    }
    for (o, w2) in out.iter_mut().zip(&norm) {
        *o = if *w2 > 1e-10 { *o / w2 } else { 0.0 };
    }
    out.truncate(len);
    Waveform::new(out, spec.sample_rate_hz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(len: usize, seed: u64) -> Waveform {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Waveform::new((0..len).map(|_| rng.random_range(-1.0..1.0)).collect(), 16_000)
    }

    #[test]
    fn rejects_bad_params() {
        assert!(StftParams::new(1000, 250).is_err());
        assert!(StftParams::new(1024, 0).is_err());
        assert!(StftParams::new(1024, 2048).is_err());
        assert!(StftParams::new(1024, 1024).is_ok());
    }

    #[test]
    fn frame_count_matches_uncentered_framing() {
        let p = StftParams::default();
        assert_eq!(p.frame_count(0), 1);
        assert_eq!(p.frame_count(2048), 1);
        assert_eq!(p.frame_count(2048 + 511), 1);
        assert_eq!(p.frame_count(2048 + 512), 2);
        assert_eq!(p.frame_count(32_000), 1 + (32_000 - 2048) / 512);
        let s = stft(&Waveform::silence(10_000, 16_000), p).unwrap();
        assert_eq!(s.frames(), p.frame_count(10_000));
        assert!(s.magnitudes.iter().all(|f| f.len() == 1025));
    }

    #[test]
    fn zeros_give_zero_magnitudes() {
        let s = stft(&Waveform::silence(5000, 16_000), StftParams::default()).unwrap();
        assert!(s.magnitudes.iter().flatten().all(|&m| m == 0.0));
    }

    #[test]
    fn short_input_padded_to_one_frame() {
        let s = stft(&Waveform::new(vec![1.0; 10], 16_000), StftParams::default()).unwrap();
        assert_eq!(s.frames(), 1);
        let expected: f64 = hann_window(2048)[..10].iter().sum();
        assert!((s.magnitudes[0][0] - expected).abs() < 1e-12);
    }

    #[test]
    fn hann_sum_closed_form() {
        // Symmetric Hann: sum = (N - 1) / 2.
        for n in [8usize, 256, 2048] {
            let s: f64 = hann_window(n).iter().sum();
            assert!((s - (n as f64 - 1.0) / 2.0).abs() < 1e-9, "n={n} sum={s}");
        }
    }

    #[test]
    fn constant_input_dc_bin() {
        let s = stft(&Waveform::new(vec![1.0; 8192], 32_000), StftParams::default()).unwrap();
        for frame in &s.magnitudes {
            assert!((frame[0] - 1023.5).abs() < 1e-6, "{}", frame[0]);
        }
    }

    #[test]
    fn parseval_per_frame() {
        let p = StftParams::new(512, 128).unwrap();
        let w = noise(4000, 3);
        let s = stft(&w, p).unwrap();
        let win = hann_window(512);
        for (f, mags) in s.magnitudes.iter().enumerate() {
            let time: f64 = (0..512).map(|i| (w.samples[f * 128 + i] * win[i]).powi(2)).sum();
            let mut freq = mags[0].powi(2) + mags[256].powi(2);
            freq += 2.0 * mags[1..256].iter().map(|m| m * m).sum::<f64>();
            freq /= 512.0;
            assert!((freq - time).abs() / time < 1e-9);
        }
    }

    #[test]
    fn istft_reconstructs_interior() {
        let p = StftParams::new(1024, 256).unwrap();
        let w = noise(20_000, 11);
        let spec = stft_complex(&w, p).unwrap();
        let back = istft(&spec, w.len());
        assert_eq!(back.len(), w.len());
        let covered = (p.frame_count(w.len()) - 1) * p.hop + p.n_fft;
        for i in p.n_fft..covered - p.n_fft {
            assert!((back.samples[i] - w.samples[i]).abs() < 1e-9, "i={i}");
        }
    }
}
