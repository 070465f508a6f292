//! Joins the mixed soundtrack with the original video stream.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::media::{self, MediaError, StreamKind, Toolchain};

pub const DEFAULT_AUDIO_BITRATE: u32 = 192_000;

#[derive(Debug, thiserror::Error)]
pub enum MuxError {
    #[error("missing input: {0}")]
    MissingInput(PathBuf),
    #[error("invalid input {path}: {reason}")]
    InvalidInput { path: PathBuf, reason: String },
    #[error("cannot write {path}: {reason}")]
    OutputUnwritable { path: PathBuf, reason: String },
    #[error("invalid mux request: {0}")]
    InvalidRequest(String),
    #[error("ffmpeg failed: {stderr}")]
    ToolFailure { stderr: String },
    #[error(transparent)]
    Probe(#[from] MediaError),
}

pub type Result<T> = std::result::Result<T, MuxError>;

fn default_bitrate() -> u32 {
    DEFAULT_AUDIO_BITRATE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuxRequest {
    pub video_path: PathBuf,
    pub audio_path: PathBuf,
    pub out_path: PathBuf,
    /// AAC target bitrate in bits per second.
    #[serde(default = "default_bitrate")]
    pub audio_bitrate: u32,
    /// Encode at this sample rate instead of the WAV's own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio_sample_rate_hz: Option<u32>,
    /// Encode with this many channels instead of the WAV's own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio_channels: Option<u16>,
}

impl MuxRequest {
    pub fn new(video_path: impl Into<PathBuf>, audio_path: impl Into<PathBuf>, out_path: impl Into<PathBuf>) -> Self {
        Self {
            video_path: video_path.into(),
            audio_path: audio_path.into(),
            out_path: out_path.into(),
            audio_bitrate: DEFAULT_AUDIO_BITRATE,
            audio_sample_rate_hz: None,
            audio_channels: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let is_mp4 = self.out_path.extension().is_some_and(|e| e.eq_ignore_ascii_case("mp4"));
        if !is_mp4 {
            return Err(MuxError::InvalidRequest(format!(
                "output must end in .mp4: {}",
                self.out_path.display()
            )));
        }
        if self.audio_bitrate == 0 {
            return Err(MuxError::InvalidRequest("audio_bitrate must be > 0".into()));
        }
        if self.audio_sample_rate_hz == Some(0) || self.audio_channels == Some(0) {
            return Err(MuxError::InvalidRequest("audio format overrides must be > 0".into()));
        }
        Ok(())
    }

    /// Arguments passed to ffmpeg, after `-hide_banner`.
    ///
    /// The channel count is always explicit: mono WAVs carrying a
    /// front-left channel mask are otherwise refused by the AAC encoder.
    pub fn ffmpeg_args(&self, input_channels: u16) -> Vec<OsString> {
        let mut args: Vec<OsString> = vec!["-nostdin".into(), "-y".into(), "-i".into()];
        args.push(self.video_path.clone().into());
        args.push("-i".into());
        args.push(self.audio_path.clone().into());
        for a in ["-map", "0:v:0", "-map", "1:a:0", "-c:v", "copy", "-c:a", "aac", "-b:a"] {
            args.push(a.into());
        }
        args.push(format!("{}", self.audio_bitrate).into());
        if let Some(sr) = self.audio_sample_rate_hz {
            args.push("-ar".into());
            args.push(sr.to_string().into());
        }
        args.push("-ac".into());
        args.push(self.audio_channels.unwrap_or(input_channels).to_string().into());
        args.push("-shortest".into());
        args.push(self.out_path.clone().into());
        args
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuxSummary {
    pub out_path: PathBuf,
    pub duration_s: f64,
    /// The ffmpeg invocation, for the run report.
    pub command: Vec<String>,
    pub stderr: String,
}

fn require(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(MuxError::MissingInput(path.to_path_buf()))
    }
}

/// Stream-copies the video and encodes the WAV as AAC into an MP4.
pub fn mux(tools: &Toolchain, req: &MuxRequest) -> Result<MuxSummary> {
    req.validate()?;
    require(&req.video_path)?;
    require(&req.audio_path)?;
    let invalid_audio = |reason: String| MuxError::InvalidInput {
        path: req.audio_path.clone(),
        reason,
    };
    crate::dsp::read_wav(&req.audio_path).map_err(|e| invalid_audio(e.to_string()))?;
    let channels = hound::WavReader::open(&req.audio_path)
        .map_err(|e| invalid_audio(e.to_string()))?
        .spec()
        .channels;
    media::probe(tools, &req.video_path)?;
    std::fs::File::create(&req.out_path).map_err(|e| MuxError::OutputUnwritable {
        path: req.out_path.clone(),
        reason: e.to_string(),
    })?;

    let args = req.ffmpeg_args(channels);
    let out = media::run(&tools.ffmpeg, &args).map_err(|e| MuxError::ToolFailure { stderr: e.to_string() })?;
    let stderr = media::tail(&out.stderr);
    if !out.status.success() {
        let _ = std::fs::remove_file(&req.out_path);
        return Err(MuxError::ToolFailure { stderr });
    }
    let info = media::inspect(tools, &req.out_path)?;
    if info.streams_of(StreamKind::Audio).count() != 1 || info.streams_of(StreamKind::Video).count() != 1 {
        return Err(MuxError::ToolFailure {
            stderr: format!("unexpected stream layout in output: {:?}", info.streams),
        });
    }
    let mut command = vec![tools.ffmpeg.display().to_string(), "-hide_banner".into()];
    command.extend(args.iter().map(|a| a.to_string_lossy().into_owned()));
    Ok(MuxSummary {
        out_path: req.out_path.clone(),
        duration_s: info.duration_s.unwrap_or(0.0),
        command,
        stderr,
    })
}
