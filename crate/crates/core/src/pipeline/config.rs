use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dsp::{DenoiseParams, StftParams, BUTTERWORTH_Q, DEFAULT_GATE_THRESHOLD};
use crate::gateway::{BackendConfig, BackendKind, MAX_REQUEST_DURATION_S};
use crate::media::ToolsConfig;
use crate::mux::DEFAULT_AUDIO_BITRATE;

pub const MAX_GATE_RETRY_LIMIT: u32 = 5;

/// Post-processing parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DspConfig {
    /// Mean frame RMS above which an SFX track is discarded.
    pub threshold: f64,
    pub hp_cutoff_hz: f64,
    pub lp_cutoff_hz: f64,
    pub filter_q: f64,
    pub suppression_db: f64,
    pub sfx_gain: f64,
    pub bgm_gain: f64,
    /// Every track is resampled to this rate before processing.
    pub sample_rate_hz: u32,
    pub n_fft: usize,
    pub hop: usize,
    pub filter_sfx: bool,
    pub filter_bgm: bool,
}

impl Default for DspConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_GATE_THRESHOLD,
            hp_cutoff_hz: 200.0,
            lp_cutoff_hz: 3000.0,
            filter_q: BUTTERWORTH_Q,
            suppression_db: -25.0,
            sfx_gain: 0.05,
            bgm_gain: 3.0,
            sample_rate_hz: 32_000,
            n_fft: 2048,
            hop: 512,
            filter_sfx: true,
            filter_bgm: true,
        }
    }
}

impl DspConfig {
    pub fn stft(&self) -> StftParams {
        StftParams {
            n_fft: self.n_fft,
            hop: self.hop,
        }
    }

    pub fn denoise(&self) -> DenoiseParams {
        DenoiseParams {
            suppression_db: self.suppression_db,
            stft: self.stft(),
            ..DenoiseParams::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        self.stft().validate().map_err(|e| e.to_string())?;
        let nyquist = f64::from(self.sample_rate_hz) / 2.0;
        if self.sample_rate_hz == 0 {
            return Err("sample_rate_hz must be > 0".into());
        }
        if !(self.threshold > 0.0) {
            return Err(format!("threshold must be > 0, got {}", self.threshold));
        }
        for (name, fc) in [("hp_cutoff_hz", self.hp_cutoff_hz), ("lp_cutoff_hz", self.lp_cutoff_hz)] {
            if !(fc > 0.0 && fc < nyquist) {
                return Err(format!("{name} must be in (0, {nyquist}), got {fc}"));
            }
        }
        if !(self.filter_q > 0.0) {
            return Err(format!("filter_q must be > 0, got {}", self.filter_q));
        }
        if !(self.suppression_db < 0.0) {
            return Err(format!("suppression_db must be negative, got {}", self.suppression_db));
        }
        for (name, g) in [("sfx_gain", self.sfx_gain), ("bgm_gain", self.bgm_gain)] {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(format!("{name} must be >= 0, got {g}"));
            }
        }
        Ok(())
    }
}

fn default_true() -> bool {
    true
}

/// How the final soundtrack is encoded into the MP4.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuxSettings {
    #[serde(default = "default_bitrate")]
    pub audio_bitrate: u32,
    /// Resample to 48 kHz stereo for delivery. The AAC encoder falls well
    /// short of the target bitrate on sparse 32 kHz mono material.
    #[serde(default = "default_true")]
    pub delivery_format: bool,
}

fn default_bitrate() -> u32 {
    DEFAULT_AUDIO_BITRATE
}

impl Default for MuxSettings {
    fn default() -> Self {
        Self {
            audio_bitrate: DEFAULT_AUDIO_BITRATE,
            delivery_format: true,
        }
    }
}

fn default_backends() -> BTreeMap<BackendKind, BackendConfig> {
    BackendKind::ALL
        .into_iter()
        .map(|k| (k, BackendConfig::mock(k)))
        .collect()
}

fn default_gate_retry_limit() -> u32 {
    2
}

fn default_max_audio_duration_s() -> f64 {
    30.0
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

/// One run's configuration, loadable from JSON.
///
/// Every field has a default, but `video_path` and `out_dir` must be set
/// (here or on the command line) before the config validates. Without a
/// `backends` entry all three backends are the offline mocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default)]
    pub video_path: PathBuf,
    #[serde(default)]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_personalization: Option<String>,
    #[serde(default = "default_backends")]
    pub backends: BTreeMap<BackendKind, BackendConfig>,
    #[serde(default)]
    pub dsp: DspConfig,
    /// Extra same-prompt generations for an SFX track the gate rejects.
    #[serde(default = "default_gate_retry_limit")]
    pub gate_retry_limit: u32,
    /// Clips are requested at the video's length, capped here, then looped
    /// or trimmed to fit.
    #[serde(default = "default_max_audio_duration_s")]
    pub max_audio_duration_s: f64,
    #[serde(default)]
    pub mux: MuxSettings,
    #[serde(default, skip_serializing_if = "is_default")]
    pub tools: ToolsConfig,
    /// Directory with a template manifest; the built-in set when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub templates_dir: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn new(video_path: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            video_path: video_path.into(),
            out_dir: out_dir.into(),
            seed: 0,
            user_personalization: None,
            backends: default_backends(),
            dsp: DspConfig::default(),
            gate_retry_limit: default_gate_retry_limit(),
            max_audio_duration_s: default_max_audio_duration_s(),
            mux: MuxSettings::default(),
            tools: ToolsConfig::default(),
            templates_dir: None,
        }
    }

    /// Reads a JSON config file. Relative paths inside it stay relative to
    /// the working directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, String> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn backend(&self, kind: BackendKind) -> &BackendConfig {
        &self.backends[&kind]
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.video_path.as_os_str().is_empty() {
            return Err("video_path is not set".into());
        }
        if self.out_dir.as_os_str().is_empty() {
            return Err("out_dir is not set".into());
        }
        for kind in BackendKind::ALL {
            let b = self
                .backends
                .get(&kind)
                .ok_or_else(|| format!("backends: missing {kind}"))?;
            if b.kind != kind {
                return Err(format!("backends: entry {kind} declares kind {}", b.kind));
            }
            b.validate().map_err(|e| e.to_string())?;
        }
        if self.gate_retry_limit > MAX_GATE_RETRY_LIMIT {
            return Err(format!(
                "gate_retry_limit must be <= {MAX_GATE_RETRY_LIMIT}, got {}",
                self.gate_retry_limit
            ));
        }
        if !(self.max_audio_duration_s > 0.0 && self.max_audio_duration_s <= MAX_REQUEST_DURATION_S) {
            return Err(format!(
                "max_audio_duration_s must be in (0, {MAX_REQUEST_DURATION_S}], got {}",
                self.max_audio_duration_s
            ));
        }
        if self.mux.audio_bitrate == 0 {
            return Err("mux.audio_bitrate must be > 0".into());
        }
        if self
            .user_personalization
            .as_deref()
            .is_some_and(|p| p.trim().is_empty())
        {
            return Err("user_personalization is empty".into());
        }
        self.dsp.validate().map_err(|e| format!("dsp: {e}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_json_gets_defaults() {
        let c: PipelineConfig = serde_json::from_str(r#"{"video_path":"v.mp4","out_dir":"o"}"#).unwrap();
        assert_eq!(c, PipelineConfig::new("v.mp4", "o"));
        assert_eq!(c.dsp.threshold, 0.3);
        assert_eq!((c.dsp.hp_cutoff_hz, c.dsp.lp_cutoff_hz), (200.0, 3000.0));
        assert_eq!(
            (c.dsp.sfx_gain, c.dsp.bgm_gain, c.dsp.suppression_db),
            (0.05, 3.0, -25.0)
        );
        assert_eq!(c.gate_retry_limit, 2);
        assert_eq!(c.mux.audio_bitrate, 192_000);
        assert!(c.backends.values().all(BackendConfig::is_mock));
        c.validate().unwrap();
    }

    #[test]
    fn round_trips_through_json() {
        let mut c = PipelineConfig::new("v.mp4", "o");
        c.user_personalization = Some("melancholic atmosphere".into());
        c.dsp.filter_bgm = false;
        let back: PipelineConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn backends_keyed_by_kind() {
        let c: PipelineConfig = serde_json::from_str(
            r#"{"video_path":"v","out_dir":"o","backends":{
                "mllm":{"kind":"mllm","endpoint":"http://localhost:9000","max_retries":3},
                "sfx-audio":{"kind":"sfx-audio","endpoint":"mock","target_sample_rate_hz":16000},
                "bgm-audio":{"kind":"bgm-audio","endpoint":"mock","target_sample_rate_hz":32000}}}"#,
        )
        .unwrap();
        c.validate().unwrap();
        assert_eq!(c.backend(BackendKind::Mllm).max_retries, 3);
    }

    #[test]
    fn invalid_configs() {
        let mut c = PipelineConfig::new("v", "o");
        c.gate_retry_limit = 6;
        assert!(c.validate().is_err());

        let mut c = PipelineConfig::new("v", "o");
        c.backends.remove(&BackendKind::BgmAudio);
        assert!(c.validate().unwrap_err().contains("bgm-audio"));

        let mut c = PipelineConfig::new("v", "o");
        c.backends
            .insert(BackendKind::SfxAudio, BackendConfig::mock(BackendKind::BgmAudio));
        assert!(c.validate().is_err());

        let mut c = PipelineConfig::new("v", "o");
        c.dsp.lp_cutoff_hz = 20_000.0;
        assert!(c.validate().is_err());

        let mut c = PipelineConfig::new("v", "o");
        c.user_personalization = Some(" ".into());
        assert!(c.validate().is_err());

        let c: PipelineConfig = serde_json::from_str(r#"{"seed":3}"#).unwrap();
        assert_eq!(c.validate().unwrap_err(), "video_path is not set");
    }
}
