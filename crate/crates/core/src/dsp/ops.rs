use std::f64::consts::FRAC_PI_2;

use super::{DspError, Result, Waveform};

/// Length of the crossfade used when looping a short track.
pub const CROSSFADE_S: f64 = 0.05;

/// Sample-wise scaling. The result is not clamped.
pub fn apply_gain(w: &Waveform, factor: f64) -> Result<Waveform> {
    if !(factor >= 0.0) {
        return Err(DspError::NegativeFactor(factor));
    }
    Ok(Waveform::new(
        w.samples.iter().map(|s| s * factor).collect(),
        w.sample_rate_hz,
    ))
}

/// Trims or loops `w` to exactly `round(target_s * sample_rate)` samples.
///
/// Loop seams use a `cos^2` / `sin^2` crossfade of [`CROSSFADE_S`] (capped
/// at half the track). The two gains sum to one, so looping stationary
/// material leaves its level unchanged across the seam.
pub fn fit_duration(w: &Waveform, target_s: f64) -> Result<Waveform> {
    if w.is_empty() {
        return Err(DspError::EmptyWaveform);
    }
    if !(target_s > 0.0 && target_s.is_finite()) {
        return Err(DspError::InvalidParameter(format!(
            "target duration must be positive, got {target_s}"
        )));
    }
    let sr = f64::from(w.sample_rate_hz);
    let target = (target_s * sr).round() as usize;
    let mut out = w.samples.clone();
    if out.len() < target {
        let fade = ((CROSSFADE_S * sr).round() as usize).min(w.len() / 2);
        let gains: Vec<(f64, f64)> = (0..fade)
            .map(|i| {
                let theta = FRAC_PI_2 * (i as f64 + 0.5) / fade as f64;
                let (s, c) = theta.sin_cos();
                (c * c, s * s)
            })
            .collect();
        out.reserve(target - out.len() + w.len());
        while out.len() < target {
            let seam = out.len() - fade;
            for (i, &(g_out, g_in)) in gains.iter().enumerate() {
                out[seam + i] = out[seam + i] * g_out + w.samples[i] * g_in;
            }
            out.extend_from_slice(&w.samples[fade..]);
        }
    }
    out.truncate(target);
    Ok(Waveform::new(out, w.sample_rate_hz))
}

/// Linear-interpolation resampler; output length is
/// `round(len * target / source)`.
pub fn resample(w: &Waveform, target_hz: u32) -> Result<Waveform> {
    if target_hz == 0 {
        return Err(DspError::InvalidParameter("target rate must be positive".into()));
    }
    if target_hz == w.sample_rate_hz || w.is_empty() {
        return Ok(Waveform::new(w.samples.clone(), target_hz));
    }
    let ratio = f64::from(w.sample_rate_hz) / f64::from(target_hz);
    let out_len = (w.len() as f64 / ratio).round() as usize;
    let last = w.len() - 1;
    let samples = (0..out_len)
        .map(|i| {
            let pos = i as f64 * ratio;
            let j = (pos.floor() as usize).min(last);
            let frac = pos - j as f64;
            let next = w.samples[(j + 1).min(last)];
            w.samples[j] * (1.0 - frac) + next * frac
        })
        .collect();
    Ok(Waveform::new(samples, target_hz))
}

/// Averages equally long tracks sample-wise (sum divided by track count),
/// then clamps to `[-1, 1]`.
pub fn mix(tracks: &[Waveform]) -> Result<Waveform> {
    let first = tracks.first().ok_or(DspError::EmptyTrackList)?;
    for t in &tracks[1..] {
        if t.sample_rate_hz != first.sample_rate_hz {
            return Err(DspError::RateMismatch {
                expected: first.sample_rate_hz,
                found: t.sample_rate_hz,
            });
        }
        if t.len() != first.len() {
            return Err(DspError::LengthMismatch {
                expected: first.len(),
                found: t.len(),
            });
        }
    }
    let n = tracks.len() as f64;
    let samples = (0..first.len())
        .map(|i| {
            let sum: f64 = tracks.iter().map(|t| t.samples[i]).sum();
            (sum / n).clamp(-1.0, 1.0)
        })
        .collect();
    Ok(Waveform::new(samples, first.sample_rate_hz))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gain_constants() {
        let w = Waveform::new(vec![0.8, 0.2], 8000);
        let sfx = apply_gain(&w, 0.05).unwrap();
        assert!((sfx.samples[0] - 0.04).abs() < 1e-9);
        let bgm = apply_gain(&w, 3.0).unwrap();
        assert!((bgm.samples[1] - 0.6).abs() < 1e-9);
        assert_eq!(apply_gain(&w, 1.0).unwrap(), w);
    }

    #[test]
    fn gain_is_unclamped_and_rejects_negative() {
        let w = Waveform::new(vec![0.9], 8000);
        assert!((apply_gain(&w, 3.0).unwrap().samples[0] - 2.7).abs() < 1e-12);
        assert!(matches!(apply_gain(&w, -0.1), Err(DspError::NegativeFactor(_))));
        assert!(apply_gain(&w, f64::NAN).is_err());
    }

    #[test]
    fn fit_equal_length_unchanged() {
        let w = Waveform::from_fn(5 * 32_000, 32_000, |t| (t * 7.0).sin());
        assert_eq!(fit_duration(&w, 5.0).unwrap(), w);
    }

    #[test]
    fn fit_trims() {
        let w = Waveform::silence(10 * 32_000, 32_000);
        assert_eq!(fit_duration(&w, 4.0).unwrap().len(), 128_000);
    }

    #[test]
    fn fit_loops_constant_without_level_change() {
        let w = Waveform::new(vec![0.5; 2 * 32_000], 32_000);
        let out = fit_duration(&w, 5.0).unwrap();
        assert_eq!(out.len(), 160_000);
        assert!(out.samples.iter().all(|s| (s - 0.5).abs() < 1e-6));
    }

    #[test]
    fn fit_loops_tiny_tracks() {
        let w = Waveform::new(vec![0.25], 8000);
        let out = fit_duration(&w, 0.01).unwrap();
        assert_eq!(out.len(), 80);
        assert!(out.samples.iter().all(|&s| s == 0.25));
    }

    #[test]
    fn fit_rejects_empty_and_bad_target() {
        assert!(matches!(
            fit_duration(&Waveform::silence(0, 8000), 1.0),
            Err(DspError::EmptyWaveform)
        ));
        assert!(fit_duration(&Waveform::silence(4, 8000), 0.0).is_err());
    }

    #[test]
    fn resample_identity_and_constant() {
        let w = Waveform::from_fn(1000, 16_000, |t| t.cos());
        assert_eq!(resample(&w, 16_000).unwrap(), w);
        let c = Waveform::new(vec![0.4; 16_000], 16_000);
        let up = resample(&c, 32_000).unwrap();
        assert_eq!(up.sample_rate_hz, 32_000);
        assert!((up.len() as i64 - 32_000).abs() <= 1);
        assert!(up.samples.iter().all(|s| (s - 0.4).abs() < 1e-12));
    }

    #[test]
    fn resample_sine_correlates_with_analytic() {
        let w = Waveform::from_fn(16_000, 16_000, |t| (2.0 * PI * 100.0 * t).sin());
        let up = resample(&w, 32_000).unwrap();
        let reference = Waveform::from_fn(up.len(), 32_000, |t| (2.0 * PI * 100.0 * t).sin());
        let dot: f64 = up.samples.iter().zip(&reference.samples).map(|(a, b)| a * b).sum();
        let corr = dot / (up.rms() * reference.rms() * up.len() as f64);
        assert!(corr >= 0.999, "corr {corr}");
    }

    #[test]
    fn resample_down_length() {
        let w = Waveform::silence(44_100, 44_100);
        assert_eq!(resample(&w, 32_000).unwrap().len(), 32_000);
        assert!(resample(&w, 0).is_err());
    }

    #[test]
    fn mix_normalizes_by_count() {
        let a = Waveform::new(vec![0.9; 10], 8000);
        assert_eq!(mix(std::slice::from_ref(&a)).unwrap(), a);
        let m = mix(&[a.clone(), a.clone(), a.clone()]).unwrap();
        assert!(m.samples.iter().all(|s| (s - 0.9).abs() < 1e-12));
        let b = Waveform::new(vec![-0.5; 10], 8000);
        let m = mix(&[a, b]).unwrap();
        assert!(m.samples.iter().all(|s| (s - 0.2).abs() < 1e-12));
    }

    #[test]
    fn mix_clamps() {
        let a = Waveform::new(vec![3.0, -3.0], 8000);
        assert_eq!(mix(&[a.clone(), a]).unwrap().samples, vec![1.0, -1.0]);
    }

    #[test]
    fn mix_errors() {
        assert!(matches!(mix(&[]), Err(DspError::EmptyTrackList)));
        let a = Waveform::silence(10, 8000);
        let b = Waveform::silence(10, 16_000);
        let c = Waveform::silence(11, 8000);
        assert!(matches!(mix(&[a.clone(), b]), Err(DspError::RateMismatch { .. })));
        assert!(matches!(mix(&[a, c]), Err(DspError::LengthMismatch { .. })));
    }
}
