//! Clients for the language-model and text-to-audio backends.
//!
//! Every backend speaks the same small JSON-over-HTTP protocol:
//!
//! * `POST {endpoint}/v1/complete` with `{"prompt": str, "image_b64": str|null}`,
//!   answered by `{"text": str}`;
//! * `POST {endpoint}/v1/generate` with `{"prompt": str, "duration_s": number}`,
//!   answered by WAV bytes (`Content-Type: audio/wav`).
//!
//! An endpoint of `"mock"` selects a deterministic in-process backend that
//! never touches the network; see [`mock`].

mod http;
pub mod mock;
mod retry;

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::dsp::{self, Waveform};

pub use mock::MockRule;

/// Environment variable that overrides `api_key` from configuration.
pub const API_KEY_ENV: &str = "SVA_API_KEY";

/// Longest audio clip that may be requested from a backend.
pub const MAX_REQUEST_DURATION_S: f64 = 120.0;

pub const SUPPORTED_SAMPLE_RATES: [u32; 5] = [16_000, 24_000, 32_000, 44_100, 48_000];

pub const MAX_RETRIES_LIMIT: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    Mllm,
    SfxAudio,
    BgmAudio,
}

impl BackendKind {
    pub const ALL: [BackendKind; 3] = [BackendKind::Mllm, BackendKind::SfxAudio, BackendKind::BgmAudio];

    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::Mllm => "mllm",
            BackendKind::SfxAudio => "sfx-audio",
            BackendKind::BgmAudio => "bgm-audio",
        }
    }

    pub fn is_audio(self) -> bool {
        !matches!(self, BackendKind::Mllm)
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn default_timeout_s() -> f64 {
    60.0
}

fn default_max_retries() -> u32 {
    2
}

fn default_backoff_ms() -> u64 {
    250
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Base URL, or the literal `"mock"`.
    pub endpoint: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key: Option<String>,
    #[serde(default = "default_timeout_s")]
    pub timeout_s: f64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    /// First backoff delay; doubles after every failed attempt.
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_sample_rate_hz: Option<u32>,
    /// Canned replies for the mock language model, checked before the
    /// built-in fixtures. Ignored by real endpoints.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mock_rules: Vec<MockRule>,
}

impl BackendConfig {
    pub fn mock(kind: BackendKind) -> Self {
        Self {
            kind,
            endpoint: mock::MOCK_ENDPOINT.to_string(),
            api_key: None,
            timeout_s: default_timeout_s(),
            max_retries: default_max_retries(),
            backoff_ms: default_backoff_ms(),
            target_sample_rate_hz: kind.is_audio().then_some(32_000),
            mock_rules: Vec::new(),
        }
    }

    pub fn is_mock(&self) -> bool {
        self.endpoint == mock::MOCK_ENDPOINT
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(GatewayError::InvalidConfig(format!("{}: {msg}", self.kind)));
        if !(self.timeout_s > 0.0 && self.timeout_s.is_finite()) {
            return invalid(format!("timeout_s must be positive, got {}", self.timeout_s));
        }
        if self.max_retries > MAX_RETRIES_LIMIT {
            return invalid(format!(
                "max_retries must be <= {MAX_RETRIES_LIMIT}, got {}",
                self.max_retries
            ));
        }
        if self.endpoint.trim().is_empty() {
            return invalid("endpoint is empty".into());
        }
        if self.kind.is_audio() {
            match self.target_sample_rate_hz {
                Some(sr) if SUPPORTED_SAMPLE_RATES.contains(&sr) => {}
                other => {
                    return invalid(format!(
                        "target_sample_rate_hz must be one of {SUPPORTED_SAMPLE_RATES:?}, got {other:?}"
                    ))
                }
            }
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("request timed out")]
    Timeout,
    #[error("HTTP {status}: {body}")]
    HttpError { status: u16, body: String },
    #[error("backend returned an empty reply")]
    EmptyReply,
    #[error("backend rejected credentials (HTTP {0})")]
    AuthError(u16),
    #[error("bad audio payload: {0}")]
    BadAudioPayload(String),
    #[error("malformed reply: {0}")]
    MalformedReply(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("invalid backend config: {0}")]
    InvalidConfig(String),
    #[error("{operation} needs a {expected} backend, config is {found}")]
    WrongBackendKind {
        operation: &'static str,
        expected: &'static str,
        found: BackendKind,
    },
}

impl GatewayError {
    /// Whether another attempt may succeed.
    pub fn is_transient(&self) -> bool {
        match self {
            GatewayError::Timeout | GatewayError::Transport(_) => true,
            GatewayError::HttpError { status, .. } => *status == 408 || *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

pub type Result<T, E = GatewayError> = std::result::Result<T, E>;

/// A backend result together with the number of retries it took.
#[derive(Debug, Clone, PartialEq)]
pub struct Reply<T> {
    pub value: T,
    pub retries: u32,
}

/// A configured backend. Cheap to share across threads; HTTP connections
/// are pooled inside.
#[derive(Debug, Clone)]
pub struct Client {
    cfg: BackendConfig,
    api_key: Option<String>,
    transport: Option<http::HttpTransport>,
}

impl Client {
    pub fn new(cfg: BackendConfig) -> Result<Self> {
        cfg.validate()?;
        let api_key = std::env::var(API_KEY_ENV)
            .ok()
            .filter(|k| !k.is_empty())
            .or_else(|| cfg.api_key.clone());
        let transport = (!cfg.is_mock()).then(|| http::HttpTransport::new(&cfg.endpoint));
        Ok(Self {
            cfg,
            api_key,
            transport,
        })
    }

    pub fn config(&self) -> &BackendConfig {
        &self.cfg
    }

    fn require(&self, operation: &'static str, audio: bool) -> Result<()> {
        if self.cfg.kind.is_audio() != audio {
            return Err(GatewayError::WrongBackendKind {
                operation,
                expected: if audio { "sfx-audio or bgm-audio" } else { "mllm" },
                found: self.cfg.kind,
            });
        }
        Ok(())
    }

    fn complete(&self, prompt: &str, image: Option<&[u8]>) -> Result<Reply<String>> {
        let reply = match &self.transport {
            None => Reply {
                value: mock::reply(&self.cfg, prompt, image),
                retries: 0,
            },
            Some(t) => retry::with_retries(&self.cfg, |timeout| {
                t.complete(prompt, image, self.api_key.as_deref(), timeout)
            })?,
        };
        if reply.value.trim().is_empty() {
            return Err(GatewayError::EmptyReply);
        }
        Ok(reply)
    }

    /// Asks the language model about an image.
    pub fn describe_image(&self, image: &[u8], prompt: &str) -> Result<Reply<String>> {
        self.require("describe_image", false)?;
        check_png(image)?;
        self.complete(prompt, Some(image))
    }

    pub fn complete_text(&self, prompt: &str) -> Result<Reply<String>> {
        self.require("complete_text", false)?;
        self.complete(prompt, None)
    }

    /// Generates `duration_s` seconds of audio for `prompt`, returned as
    /// mono at the configured target rate.
    pub fn generate_audio(&self, prompt: &str, duration_s: f64) -> Result<Reply<Waveform>> {
        self.require("generate_audio", true)?;
        if !(duration_s > 0.0 && duration_s <= MAX_REQUEST_DURATION_S) {
            return Err(GatewayError::InvalidRequest(format!(
                "duration_s must be in (0, {MAX_REQUEST_DURATION_S}], got {duration_s}"
            )));
        }
        let target = self.cfg.target_sample_rate_hz.expect("validated for audio kinds");
        let reply = match &self.transport {
            None => Reply {
                value: mock::generate_wav(self.cfg.kind, prompt, duration_s, target),
                retries: 0,
            },
            Some(t) => retry::with_retries(&self.cfg, |timeout| {
                t.generate(prompt, duration_s, self.api_key.as_deref(), timeout)
            })?,
        };
        let wave = dsp::decode_wav(&reply.value).map_err(|e| GatewayError::BadAudioPayload(e.to_string()))?;
        if wave.is_empty() {
            return Err(GatewayError::BadAudioPayload("zero-length audio".into()));
        }
        let wave = dsp::resample(&wave, target).map_err(|e| GatewayError::BadAudioPayload(e.to_string()))?;
        Ok(Reply {
            value: wave,
            retries: reply.retries,
        })
    }
}

fn check_png(image: &[u8]) -> Result<()> {
    let decoder = png::Decoder::new(std::io::Cursor::new(image));
    decoder
        .read_info()
        .map(|_| ())
        .map_err(|e| GatewayError::InvalidImage(e.to_string()))
}

pub fn describe_image(cfg: &BackendConfig, image: &[u8], prompt: &str) -> Result<Reply<String>> {
    Client::new(cfg.clone())?.describe_image(image, prompt)
}

pub fn complete_text(cfg: &BackendConfig, prompt: &str) -> Result<Reply<String>> {
    Client::new(cfg.clone())?.complete_text(prompt)
}

pub fn generate_audio(cfg: &BackendConfig, prompt: &str, duration_s: f64) -> Result<Reply<Waveform>> {
    Client::new(cfg.clone())?.generate_audio(prompt, duration_s)
}
