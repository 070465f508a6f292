mod common;

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sva::dsp::{write_wav, Waveform};
use sva::media::{count_frames, inspect, StreamKind, Toolchain};
use sva::mux::{mux, MuxError, MuxRequest};

fn soundtrack(dir: &Path, secs: f64) -> std::path::PathBuf {
    // A chord plus a quiet noise floor, like a real mix.
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let samples = (0..(secs * 32_000.0) as usize)
        .map(|n| {
            let t = n as f64 / 32_000.0;
            0.2 * (2.0 * PI * 440.0 * t).sin() + 0.1 * (2.0 * PI * 659.25 * t).sin() + rng.random_range(-0.005..0.005)
        })
        .collect();
    let w = Waveform::new(samples, 32_000);
    let path = dir.join("mix.wav");
    write_wav(&path, &w).unwrap();
    path
}

fn delivery(mut req: MuxRequest) -> MuxRequest {
    req.audio_sample_rate_hz = Some(48_000);
    req.audio_channels = Some(2);
    req
}

fn audio_bitrate(tools: &Toolchain, path: &Path) -> u64 {
    let info = inspect(tools, path).unwrap();
    let bitrate = info.streams_of(StreamKind::Audio).next().unwrap().bitrate_bps.unwrap();
    bitrate
}

#[test]
fn five_second_mux() {
    let Some(tools) = common::tools() else { return };
    let dir = tempfile::tempdir().unwrap();
    let v = common::clip(&tools, dir.path(), "v.mp4", 5.0, 25);
    let a = soundtrack(dir.path(), 5.0);
    let out = dir.path().join("out.mp4");
    let summary = mux(&tools, &delivery(MuxRequest::new(&v, &a, &out))).unwrap();

    assert!((summary.duration_s - 5.0).abs() <= 0.1, "{}", summary.duration_s);
    let info = inspect(&tools, &out).unwrap();
    assert_eq!(info.streams_of(StreamKind::Video).count(), 1);
    assert_eq!(info.streams_of(StreamKind::Audio).count(), 1);
    assert_eq!(info.streams_of(StreamKind::Audio).next().unwrap().codec, "aac");

    let kbps = audio_bitrate(&tools, &out) as f64 / 1000.0;
    assert!((kbps - 192.0).abs() <= 0.15 * 192.0, "{kbps} kb/s");

    // Stream copy: same codec and the same number of frames.
    assert_eq!(info.streams_of(StreamKind::Video).next().unwrap().codec, "h264");
    assert_eq!(count_frames(&tools, &v).unwrap(), count_frames(&tools, &out).unwrap());
    assert!(summary.command.iter().any(|a| a == "copy"));
}

#[test]
fn shorter_input_bounds_duration() {
    let Some(tools) = common::tools() else { return };
    let dir = tempfile::tempdir().unwrap();
    let v = common::clip(&tools, dir.path(), "v.mp4", 5.0, 25);
    let a = soundtrack(dir.path(), 3.0);
    let summary = mux(&tools, &MuxRequest::new(&v, &a, dir.path().join("o.mp4"))).unwrap();
    assert!(summary.duration_s <= 3.1, "{}", summary.duration_s);
}

#[test]
fn rerun_gives_same_topology() {
    let Some(tools) = common::tools() else { return };
    let dir = tempfile::tempdir().unwrap();
    let v = common::clip(&tools, dir.path(), "v.mp4", 2.0, 25);
    let a = soundtrack(dir.path(), 2.0);
    let req = MuxRequest::new(&v, &a, dir.path().join("o.mp4"));
    let first = mux(&tools, &req).unwrap();
    let info1 = inspect(&tools, &req.out_path).unwrap();
    let second = mux(&tools, &req).unwrap();
    let info2 = inspect(&tools, &req.out_path).unwrap();
    assert_eq!(first.duration_s, second.duration_s);
    assert_eq!(info1, info2);
}

#[test]
fn native_format_without_overrides() {
    let Some(tools) = common::tools() else { return };
    let dir = tempfile::tempdir().unwrap();
    let v = common::clip(&tools, dir.path(), "v.mp4", 2.0, 25);
    let a = soundtrack(dir.path(), 2.0);
    let out = dir.path().join("o.mp4");
    mux(&tools, &MuxRequest::new(&v, &a, &out)).unwrap();
    let info = inspect(&tools, &out).unwrap();
    assert_eq!(
        info.streams_of(StreamKind::Audio).next().unwrap().sample_rate_hz,
        Some(32_000)
    );
}

#[test]
fn error_cases() {
    let Some(tools) = common::tools() else { return };
    let dir = tempfile::tempdir().unwrap();
    let v = common::clip(&tools, dir.path(), "v.mp4", 1.0, 25);
    let a = soundtrack(dir.path(), 1.0);

    let missing = MuxRequest::new(&v, dir.path().join("none.wav"), dir.path().join("o.mp4"));
    assert!(matches!(mux(&tools, &missing), Err(MuxError::MissingInput(_))));

    let missing_video = MuxRequest::new(dir.path().join("none.mp4"), &a, dir.path().join("o.mp4"));
    assert!(matches!(mux(&tools, &missing_video), Err(MuxError::MissingInput(_))));

    let unwritable = MuxRequest::new(&v, &a, dir.path().join("no/such/dir/o.mp4"));
    assert!(matches!(
        mux(&tools, &unwritable),
        Err(MuxError::OutputUnwritable { .. })
    ));

    let not_wav = MuxRequest::new(&v, &v, dir.path().join("o.mp4"));
    assert!(matches!(mux(&tools, &not_wav), Err(MuxError::InvalidInput { .. })));

    let not_video = MuxRequest::new(&a, &a, dir.path().join("o.mp4"));
    assert!(matches!(mux(&tools, &not_video), Err(MuxError::Probe(_))));
}
