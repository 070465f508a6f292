//! The end-to-end run: key frame → description → scheme → audio →
//! post-processing → muxed video.
//!
//! Every intermediate product lands under the run's output directory:
//!
//! ```text
//! out_dir/
//!   frames/kf_<pts>.png
//!   prompts/*.txt   replies/*.txt
//!   audio/raw/<track>_a<attempt>.wav
//!   audio/denoised/<track>.wav   audio/processed/<track>.wav
//!   mix.wav  final.mp4  logs/mux.stderr.txt  report.json
//! ```

mod config;
pub mod postfx;
mod report;
mod run;

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use config::{DspConfig, MuxSettings, PipelineConfig, MAX_GATE_RETRY_LIMIT};
pub use postfx::{postfx, PostFx, ProcessedTrack, TrackClass};
pub use report::{
    Exchange, GateEntry, MuxRecord, PipelineReport, ReportError, StageTiming, TrackRecord, VideoSummary, REPORT_FILE,
    REPORT_SCHEMA,
};
pub use run::{dry_run, run};

use crate::dsp::DspError;
use crate::gateway::GatewayError;
use crate::media::MediaError;
use crate::mux::MuxError;
use crate::prompt::PromptError;

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Probe,
    KeyFrame,
    Describe,
    Personalize,
    Scheme,
    Generate,
    Resample,
    Gate,
    Filter,
    Denoise,
    Gain,
    Fit,
    Mix,
    Write,
    Mux,
}

impl Stage {
    pub const ORDER: [Stage; 16] = [
        Stage::Config,
        Stage::Probe,
        Stage::KeyFrame,
        Stage::Describe,
        Stage::Personalize,
        Stage::Scheme,
        Stage::Generate,
        Stage::Resample,
        Stage::Gate,
        Stage::Filter,
        Stage::Denoise,
        Stage::Gain,
        Stage::Fit,
        Stage::Mix,
        Stage::Write,
        Stage::Mux,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Probe => "probe",
            Stage::KeyFrame => "key_frame",
            Stage::Describe => "describe",
            Stage::Personalize => "personalize",
            Stage::Scheme => "scheme",
            Stage::Generate => "generate",
            Stage::Resample => "resample",
            Stage::Gate => "gate",
            Stage::Filter => "filter",
            Stage::Denoise => "denoise",
            Stage::Gain => "gain",
            Stage::Fit => "fit",
            Stage::Mix => "mix",
            Stage::Write => "write",
            Stage::Mux => "mux",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StageError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Media(#[from] MediaError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("scheme invalid after regeneration: {0}")]
    SchemeInvalid(PromptError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Mux(#[from] MuxError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A failed run: the stage, the cause, and the partial report (also written
/// to `report.json` when the output directory exists).
#[derive(Debug, thiserror::Error)]
#[error("{stage} stage failed: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: StageError,
    pub report: Box<PipelineReport>,
}
