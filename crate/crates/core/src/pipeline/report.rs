use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::postfx::TrackClass;
use super::Stage;
use crate::dsp::GateDecision;
use crate::media::KeyFrame;
use crate::prompt::{Personalization, Scheme};

pub const REPORT_SCHEMA: u32 = 1;
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoSummary {
    pub path: PathBuf,
    pub duration_s: f64,
    pub codec: String,
    pub keyframe_count: usize,
}

/// One prompt sent to the language model and the file holding its reply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub stage: Stage,
    pub prompt_file: PathBuf,
    pub reply_file: PathBuf,
    pub retries: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateEntry {
    pub track: String,
    pub attempt: u32,
    #[serde(flatten)]
    pub decision: GateDecision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    /// `sfx1`, `sfx2` or `bgm`.
    pub label: String,
    pub class: TrackClass,
    pub prompt: String,
    /// Raw generated audio, one file per generation attempt.
    pub raw_files: Vec<PathBuf>,
    /// Transport retries spent on each attempt.
    pub retries: Vec<u32>,
    /// False when the gate rejected every attempt.
    pub kept: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub denoised_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub processed_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuxRecord {
    pub command: Vec<String>,
    /// ffmpeg's stderr, kept out of the report because it embeds run-specific
    /// addresses and speeds.
    pub stderr_file: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: Stage,
    pub ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportError {
    pub stage: Stage,
    pub message: String,
}

/// Everything one run did. Paths are relative to the output directory,
/// except the input video's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub schema: u32,
    pub seed: u64,
    #[serde(default)]
    pub dry_run: bool,
    pub video: Option<VideoSummary>,
    pub selected_frame: Option<KeyFrame>,
    pub description: Option<String>,
    pub personalization: Option<Personalization>,
    pub scheme: Option<Scheme>,
    pub exchanges: Vec<Exchange>,
    pub tracks: Vec<TrackRecord>,
    pub gate_decisions: Vec<GateEntry>,
    /// Labels of the tracks that entered the mix, in mix order.
    pub mixed_tracks: Vec<String>,
    pub mix_path: Option<PathBuf>,
    /// Present exactly when the run produced a video.
    pub output_path: Option<PathBuf>,
    pub output_duration_s: Option<f64>,
    pub mux: Option<MuxRecord>,
    pub timings: Vec<StageTiming>,
    pub tool_versions: Vec<String>,
    pub error: Option<ReportError>,
}

impl PipelineReport {
    pub fn new(seed: u64) -> Self {
        Self {
            schema: REPORT_SCHEMA,
            seed,
            dry_run: false,
            video: None,
            selected_frame: None,
            description: None,
            personalization: None,
            scheme: None,
            exchanges: Vec::new(),
            tracks: Vec::new(),
            gate_decisions: Vec::new(),
            mixed_tracks: Vec::new(),
            mix_path: None,
            output_path: None,
            output_duration_s: None,
            mux: None,
            timings: Vec::new(),
            tool_versions: Vec::new(),
            error: None,
        }
    }

    pub fn read(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }

    pub fn track(&self, label: &str) -> Option<&TrackRecord> {
        self.tracks.iter().find(|t| t.label == label)
    }

    /// The report as JSON with timings removed, for comparing runs.
    pub fn without_timings(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().expect("object").remove("timings");
        v
    }
}
