//! Video probing and key-frame extraction through the external `ffmpeg`
//! toolchain.
//!
//! `ffprobe` is used when it can be found. Otherwise probing falls back to
//! parsing the input summary `ffmpeg -i` prints on stderr, which carries the
//! same duration and stream information.

use std::ffi::OsStr;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

pub const FFMPEG_ENV: &str = "SVA_FFMPEG";
pub const FFPROBE_ENV: &str = "SVA_FFPROBE";

/// Bytes of tool stderr kept in errors and reports.
const STDERR_TAIL: usize = 4000;

#[derive(Debug, thiserror::Error)]
pub enum MediaError {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("{0} has no video stream")]
    NotAVideo(PathBuf),
    #[error("{path} has no usable duration")]
    InvalidDuration { path: PathBuf },
    #[error("probe failed ({tool}): {stderr}")]
    ProbeToolFailure { tool: String, stderr: String },
    #[error("key-frame extraction failed: {0}")]
    ExtractToolFailure(String),
    #[error("no key frames extracted")]
    NoKeyFrames,
    #[error("frame list is empty")]
    EmptyFrameList,
    #[error("{0} not found; set it in the config, via {1}, or on PATH")]
    ToolNotFound(&'static str, &'static str),
}

pub type Result<T> = std::result::Result<T, MediaError>;

/// Explicit tool locations; unset entries are looked up in the environment
/// and then on `PATH`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ffmpeg: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ffprobe: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Toolchain {
    pub ffmpeg: PathBuf,
    pub ffprobe: Option<PathBuf>,
}

fn find_on_path(name: &str) -> Option<PathBuf> {
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path)
        .map(|dir| dir.join(name))
        .find(|candidate| candidate.is_file())
}

fn locate(configured: Option<&PathBuf>, env: &str, name: &str) -> Option<PathBuf> {
    configured
        .cloned()
        .or_else(|| std::env::var_os(env).filter(|v| !v.is_empty()).map(PathBuf::from))
        .or_else(|| find_on_path(name))
}

impl Toolchain {
    pub fn resolve(cfg: &ToolsConfig) -> Result<Self> {
        let ffmpeg =
            locate(cfg.ffmpeg.as_ref(), FFMPEG_ENV, "ffmpeg").ok_or(MediaError::ToolNotFound("ffmpeg", FFMPEG_ENV))?;
        let ffprobe = locate(cfg.ffprobe.as_ref(), FFPROBE_ENV, "ffprobe");
        Ok(Self { ffmpeg, ffprobe })
    }

    /// Resolves from the environment and `PATH` only.
    pub fn from_env() -> Result<Self> {
        Self::resolve(&ToolsConfig::default())
    }

    /// First line of `-version` for each tool, e.g. `ffmpeg version 7.0.2 ...`.
    pub fn versions(&self) -> Vec<String> {
        let first_line = |bin: &Path| {
            Command::new(bin)
                .arg("-version")
                .output()
                .ok()
                .and_then(|o| String::from_utf8_lossy(&o.stdout).lines().next().map(str::to_string))
                .unwrap_or_else(|| format!("{} (version unavailable)", bin.display()))
        };
        let mut v = vec![first_line(&self.ffmpeg)];
        match &self.ffprobe {
            Some(p) => v.push(first_line(p)),
            None => v.push("ffprobe not found; probing via ffmpeg".into()),
        }
        v
    }
}

pub(crate) fn tail(bytes: &[u8]) -> String {
    let s = String::from_utf8_lossy(bytes);
    let start = s.len().saturating_sub(STDERR_TAIL);
    let start = (start..s.len()).find(|&i| s.is_char_boundary(i)).unwrap_or(s.len());
    s[start..].trim().to_string()
}

pub(crate) fn run<I, S>(bin: &Path, args: I) -> std::io::Result<Output>
where
    I: IntoIterator<Item = S>,
    S: AsRef<OsStr>,
{
    let mut cmd = Command::new(bin);
    cmd.arg("-hide_banner").args(args);
    debug!("running {cmd:?}");
    cmd.output()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StreamKind {
    Video,
    Audio,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamInfo {
    pub kind: StreamKind,
    pub codec: String,
    pub bitrate_bps: Option<u64>,
    pub sample_rate_hz: Option<u32>,
}

/// Container-level facts about a media file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediaInfo {
    pub duration_s: Option<f64>,
    pub streams: Vec<StreamInfo>,
}

impl MediaInfo {
    pub fn streams_of(&self, kind: StreamKind) -> impl Iterator<Item = &StreamInfo> {
        self.streams.iter().filter(move |s| s.kind == kind)
    }
}

fn regex(cell: &'static OnceLock<Regex>, pattern: &str) -> &'static Regex {
    cell.get_or_init(|| Regex::new(pattern).expect("valid regex"))
}

/// Parses the input summary that `ffmpeg -i` writes to stderr.
pub fn parse_ffmpeg_summary(stderr: &str) -> Option<MediaInfo> {
    static DURATION: OnceLock<Regex> = OnceLock::new();
    static STREAM: OnceLock<Regex> = OnceLock::new();
    static BITRATE: OnceLock<Regex> = OnceLock::new();
    static RATE: OnceLock<Regex> = OnceLock::new();
    // Only the first input's section; later sections describe outputs.
    let start = stderr.find("Input #0")?;
    let section = &stderr[start..];
    let end = section.find("Output #").unwrap_or(section.len());
    let section = &section[..end];

    let duration_s = regex(&DURATION, r"Duration: (\d+):(\d{2}):(\d{2}(?:\.\d+)?)")
        .captures(section)
        .map(|c| {
            c[1].parse::<f64>().unwrap() * 3600.0 + c[2].parse::<f64>().unwrap() * 60.0 + c[3].parse::<f64>().unwrap()
        });
    let stream_re = regex(
        &STREAM,
        r"Stream #0:\d+\S*: (Video|Audio|Subtitle|Data|Attachment): ([^\s,]+)",
    );
    let streams = section
        .lines()
        .filter_map(|line| {
            let c = stream_re.captures(line)?;
            let kind = match &c[1] {
                "Video" if !line.contains("(attached pic)") => StreamKind::Video,
                "Audio" => StreamKind::Audio,
                _ => StreamKind::Other,
            };
            Some(StreamInfo {
                kind,
                codec: c[2].to_string(),
                bitrate_bps: regex(&BITRATE, r"(\d+) kb/s")
                    .captures(line)
                    .map(|b| b[1].parse::<u64>().unwrap() * 1000),
                sample_rate_hz: regex(&RATE, r"(\d+) Hz").captures(line).map(|r| r[1].parse().unwrap()),
            })
        })
        .collect();
    Some(MediaInfo { duration_s, streams })
}

#[derive(Deserialize)]
struct ProbeJson {
    #[serde(default)]
    streams: Vec<ProbeStream>,
    #[serde(default)]
    format: Option<ProbeFormat>,
}

#[derive(Deserialize)]
struct ProbeStream {
    codec_type: Option<String>,
    codec_name: Option<String>,
    bit_rate: Option<String>,
    sample_rate: Option<String>,
    #[serde(default)]
    disposition: Option<serde_json::Value>,
}

#[derive(Deserialize)]
struct ProbeFormat {
    duration: Option<String>,
}

/// Parses `ffprobe -of json` output.
pub fn parse_ffprobe_json(stdout: &str) -> Option<MediaInfo> {
    let j: ProbeJson = serde_json::from_str(stdout).ok()?;
    let streams = j
        .streams
        .into_iter()
        .map(|s| {
            let attached = s
                .disposition
                .as_ref()
                .and_then(|d| d.get("attached_pic"))
                .and_then(serde_json::Value::as_i64)
                == Some(1);
            StreamInfo {
                kind: match s.codec_type.as_deref() {
                    Some("video") if !attached => StreamKind::Video,
                    Some("audio") => StreamKind::Audio,
                    _ => StreamKind::Other,
                },
                codec: s.codec_name.unwrap_or_default(),
                bitrate_bps: s.bit_rate.and_then(|b| b.parse().ok()),
                sample_rate_hz: s.sample_rate.and_then(|r| r.parse().ok()),
            }
        })
        .collect();
    let duration_s = j.format.and_then(|f| f.duration).and_then(|d| d.parse().ok());
    Some(MediaInfo { duration_s, streams })
}

/// Reads duration and stream layout of any media file.
pub fn inspect(tools: &Toolchain, path: &Path) -> Result<MediaInfo> {
    if !path.is_file() {
        return Err(MediaError::FileNotFound(path.to_path_buf()));
    }
    let failure = |tool: &Path, stderr: String| MediaError::ProbeToolFailure {
        tool: tool.display().to_string(),
        stderr,
    };
    if let Some(ffprobe) = &tools.ffprobe {
        let out = run(
            ffprobe,
            [
                OsStr::new("-v"),
                OsStr::new("error"),
                OsStr::new("-show_entries"),
                OsStr::new(
                    "format=duration:stream=codec_type,codec_name,bit_rate,sample_rate:stream_disposition=attached_pic",
                ),
                OsStr::new("-of"),
                OsStr::new("json"),
                path.as_os_str(),
            ],
        )
        .map_err(|e| failure(ffprobe, e.to_string()))?;
        if !out.status.success() {
            return Err(failure(ffprobe, tail(&out.stderr)));
        }
        return parse_ffprobe_json(&String::from_utf8_lossy(&out.stdout))
            .ok_or_else(|| failure(ffprobe, "unparseable ffprobe output".into()));
    }
    // Without an output file ffmpeg always exits non-zero, so success is
    // judged by whether it printed an input summary.
    let out = run(
        &tools.ffmpeg,
        [OsStr::new("-nostdin"), OsStr::new("-i"), path.as_os_str()],
    )
    .map_err(|e| failure(&tools.ffmpeg, e.to_string()))?;
    let stderr = String::from_utf8_lossy(&out.stderr);
    parse_ffmpeg_summary(&stderr).ok_or_else(|| failure(&tools.ffmpeg, tail(&out.stderr)))
}

/// A probed input video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoAsset {
    pub path: PathBuf,
    pub duration_s: f64,
    pub has_video_stream: bool,
    /// Codec of the first video stream.
    pub video_codec: String,
}

pub fn probe(tools: &Toolchain, path: impl AsRef<Path>) -> Result<VideoAsset> {
    let path = path.as_ref();
    let info = inspect(tools, path)?;
    let video = info
        .streams_of(StreamKind::Video)
        .next()
        .ok_or_else(|| MediaError::NotAVideo(path.to_path_buf()))?;
    match info.duration_s {
        Some(d) if d > 0.0 && d.is_finite() => Ok(VideoAsset {
            path: path.to_path_buf(),
            duration_s: d,
            has_video_stream: true,
            video_codec: video.codec.clone(),
        }),
        _ => Err(MediaError::InvalidDuration {
            path: path.to_path_buf(),
        }),
    }
}

/// Decoded frame counts of the first video stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameCounts {
    pub total: usize,
    pub intra: usize,
}

/// Decodes the first video stream and counts frames by picture type.
pub fn count_frames(tools: &Toolchain, path: &Path) -> Result<FrameCounts> {
    let out = run(
        &tools.ffmpeg,
        [
            OsStr::new("-nostdin"),
            OsStr::new("-i"),
            path.as_os_str(),
            OsStr::new("-map"),
            OsStr::new("0:v:0"),
            OsStr::new("-vf"),
            OsStr::new("showinfo"),
            OsStr::new("-f"),
            OsStr::new("null"),
            OsStr::new("-"),
        ],
    )
    .map_err(|e| MediaError::ProbeToolFailure {
        tool: tools.ffmpeg.display().to_string(),
        stderr: e.to_string(),
    })?;
    if !out.status.success() {
        return Err(MediaError::ProbeToolFailure {
            tool: tools.ffmpeg.display().to_string(),
            stderr: tail(&out.stderr),
        });
    }
    let stderr = String::from_utf8_lossy(&out.stderr);
    let frames: Vec<&str> = stderr.lines().filter(|l| l.contains("pts_time:")).collect();
    Ok(FrameCounts {
        total: frames.len(),
        intra: frames.iter().filter(|l| l.contains(" type:I ")).count(),
    })
}

/// Renders a silent H.264 test pattern of `duration_s` seconds at 25 fps
/// with an intra frame every `keyframe_interval` frames.
pub fn render_test_pattern(tools: &Toolchain, out: &Path, duration_s: f64, keyframe_interval: u32) -> Result<()> {
    let source = format!("testsrc=duration={duration_s}:size=160x120:rate=25");
    let gop = keyframe_interval.to_string();
    let out_arg = out.as_os_str();
    let out = run(
        &tools.ffmpeg,
        [
            OsStr::new("-nostdin"),
            OsStr::new("-y"),
            OsStr::new("-f"),
            OsStr::new("lavfi"),
            OsStr::new("-i"),
            OsStr::new(&source),
            OsStr::new("-c:v"),
            OsStr::new("libx264"),
            OsStr::new("-g"),
            OsStr::new(&gop),
            OsStr::new("-keyint_min"),
            OsStr::new(&gop),
            OsStr::new("-sc_threshold"),
            OsStr::new("0"),
            OsStr::new("-pix_fmt"),
            OsStr::new("yuv420p"),
            out_arg,
        ],
    )
    .map_err(|e| MediaError::ExtractToolFailure(e.to_string()))?;
    if !out.status.success() {
        return Err(MediaError::ExtractToolFailure(tail(&out.stderr)));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyFrame {
    pub index: usize,
    pub image_path: PathBuf,
    pub timestamp_s: f64,
}

const KEYFRAME_PREFIX: &str = "kf_";

fn keyframe_files(dir: &Path) -> std::io::Result<Vec<(u64, PathBuf)>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let number = path
            .file_name()
            .and_then(OsStr::to_str)
            .and_then(|n| n.strip_prefix(KEYFRAME_PREFIX))
            .and_then(|n| n.strip_suffix(".png"))
            .and_then(|n| n.parse::<u64>().ok());
        if let Some(n) = number {
            files.push((n, path));
        }
    }
    files.sort();
    Ok(files)
}

/// Writes one PNG per intra-coded frame into `out_dir` and returns them in
/// presentation order.
///
/// Files are named `kf_<pts>.png`. Any such files left from an earlier run
/// are removed first.
pub fn extract_keyframes(tools: &Toolchain, asset: &VideoAsset, out_dir: impl AsRef<Path>) -> Result<Vec<KeyFrame>> {
    static PTS_TIME: OnceLock<Regex> = OnceLock::new();
    let out_dir = out_dir.as_ref();
    let fail = |msg: String| MediaError::ExtractToolFailure(msg);
    std::fs::create_dir_all(out_dir).map_err(|e| fail(format!("{}: {e}", out_dir.display())))?;
    for (_, stale) in keyframe_files(out_dir).map_err(|e| fail(e.to_string()))? {
        std::fs::remove_file(&stale).map_err(|e| fail(format!("{}: {e}", stale.display())))?;
    }
    let pattern = out_dir.join(format!("{KEYFRAME_PREFIX}%04d.png"));
    let out = run(
        &tools.ffmpeg,
        [
            OsStr::new("-nostdin"),
            OsStr::new("-y"),
            OsStr::new("-i"),
            asset.path.as_os_str(),
            OsStr::new("-vf"),
            OsStr::new("select='eq(pict_type,I)',showinfo"),
            OsStr::new("-vsync"),
            OsStr::new("vfr"),
            OsStr::new("-frame_pts"),
            OsStr::new("1"),
            pattern.as_os_str(),
        ],
    )
    .map_err(|e| fail(e.to_string()))?;
    if !out.status.success() {
        return Err(fail(tail(&out.stderr)));
    }
    let stderr = String::from_utf8_lossy(&out.stderr);
    let timestamps: Vec<f64> = regex(&PTS_TIME, r"pts_time:\s*(-?[0-9.]+(?:e-?\d+)?)")
        .captures_iter(&stderr)
        .filter_map(|c| c[1].parse().ok())
        .collect();
    let files = keyframe_files(out_dir).map_err(|e| fail(e.to_string()))?;
    if files.is_empty() {
        return Err(MediaError::NoKeyFrames);
    }
    if files.len() != timestamps.len() {
        return Err(fail(format!(
            "{} frames written but {} frame timestamps reported",
            files.len(),
            timestamps.len()
        )));
    }
    Ok(files
        .into_iter()
        .zip(timestamps)
        .enumerate()
        .map(|(index, ((_, image_path), t))| KeyFrame {
            index,
            image_path,
            timestamp_s: t.clamp(0.0, asset.duration_s),
        })
        .collect())
}

/// Picks one frame uniformly at random; a pure function of the inputs.
pub fn select_keyframe(frames: &[KeyFrame], seed: u64) -> Result<&KeyFrame> {
    if frames.is_empty() {
        return Err(MediaError::EmptyFrameList);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(&frames[rng.random_range(0..frames.len())])
}

#[cfg(test)]
mod tests {
    use super::*;

    const MP4_SUMMARY: &str = "Input #0, mov,mp4,m4a,3gp,3g2,mj2, from 'out.mp4':
  Metadata:
    major_brand     : isom
  Duration: 00:00:05.02, start: 0.000000, bitrate: 238 kb/s
  Stream #0:0[0x1](und): Video: h264 (High) (avc1 / 0x31637661), yuv420p(progressive), 160x120, 41 kb/s, 25 fps, 25 tbr, 12800 tbn (default)
  Stream #0:1[0x2](und): Audio: aac (LC) (mp4a / 0x6134706D), 48000 Hz, stereo, fltp, 191 kb/s (default)
At least one output file must be specified";

    #[test]
    fn parses_ffmpeg_summary() {
        let info = parse_ffmpeg_summary(MP4_SUMMARY).unwrap();
        assert!((info.duration_s.unwrap() - 5.02).abs() < 1e-9);
        assert_eq!(
            info.streams,
            [
                StreamInfo {
                    kind: StreamKind::Video,
                    codec: "h264".into(),
                    bitrate_bps: Some(41_000),
                    sample_rate_hz: None
                },
                StreamInfo {
                    kind: StreamKind::Audio,
                    codec: "aac".into(),
                    bitrate_bps: Some(191_000),
                    sample_rate_hz: Some(48_000)
                },
            ]
        );
    }

    #[test]
    fn summary_of_wav_and_garbage() {
        let wav = "Input #0, wav, from 'a.wav':\n  Duration: 00:00:01.00, bitrate: 1024 kb/s\n  Stream #0:0: Audio: pcm_f32le ([3][0][0][0] / 0x0003), 32000 Hz, 1 channels, flt, 1024 kb/s\n";
        let info = parse_ffmpeg_summary(wav).unwrap();
        assert_eq!(info.streams_of(StreamKind::Video).count(), 0);
        assert!(parse_ffmpeg_summary("x.txt: Invalid data found when processing input").is_none());
    }

    #[test]
    fn cover_art_is_not_video() {
        let s = "Input #0, mp3, from 'a.mp3':\n  Duration: 00:03:00.00\n  Stream #0:1: Video: mjpeg (Baseline), yuvj420p, 500x500, 90k tbn (attached pic)\n";
        let info = parse_ffmpeg_summary(s).unwrap();
        assert_eq!(info.streams[0].kind, StreamKind::Other);
        assert!((info.duration_s.unwrap() - 180.0).abs() < 1e-9);
    }

    #[test]
    fn parses_ffprobe_json() {
        let j = r#"{"streams":[{"codec_type":"video","codec_name":"h264","bit_rate":"41000","disposition":{"attached_pic":0}},
                    {"codec_type":"audio","codec_name":"aac","bit_rate":"191534","sample_rate":"48000"}],
                    "format":{"duration":"5.000000"}}"#;
        let info = parse_ffprobe_json(j).unwrap();
        assert_eq!(info.duration_s, Some(5.0));
        assert_eq!(info.streams[1].bitrate_bps, Some(191_534));
        assert_eq!(info.streams[0].kind, StreamKind::Video);
    }

    fn frames(n: usize) -> Vec<KeyFrame> {
        (0..n)
            .map(|i| KeyFrame {
                index: i,
                image_path: PathBuf::from(format!("kf_{i:04}.png")),
                timestamp_s: i as f64,
            })
            .collect()
    }

    #[test]
    fn selection_contract() {
        assert!(matches!(select_keyframe(&[], 1), Err(MediaError::EmptyFrameList)));
        let one = frames(1);
        assert_eq!(select_keyframe(&one, 123).unwrap().index, 0);
        let six = frames(6);
        assert_eq!(select_keyframe(&six, 42).unwrap(), select_keyframe(&six, 42).unwrap());
        let mut hits = [0usize; 6];
        for seed in 0..1000 {
            hits[select_keyframe(&six, seed).unwrap().index] += 1;
        }
        assert!(hits.iter().all(|&h| h > 0), "{hits:?}");
    }
}
