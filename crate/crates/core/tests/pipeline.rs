mod common;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use sva::dsp::read_wav;
use sva::gateway::{BackendConfig, BackendKind, MockRule};
use sva::media::{inspect, StreamKind};
use sva::pipeline::{self, PipelineConfig, PipelineReport, Stage, StageError, REPORT_FILE};
use sva::prompt::parse_scheme;

const SCHEME_PHRASE: &str = "Output the idea following the examples";

fn with_scheme_reply(cfg: &mut PipelineConfig, reply: &str) {
    cfg.backends
        .get_mut(&BackendKind::Mllm)
        .unwrap()
        .mock_rules
        .push(MockRule {
            contains: SCHEME_PHRASE.into(),
            reply: reply.into(),
        });
}

fn scheme_json(sfx1: &str, sfx2: &str) -> String {
    serde_json::json!({"idea": "Forced", "SFX": [sfx1, sfx2], "BGM": "Soft piano"}).to_string()
}

fn setup(duration_s: f64) -> Option<(tempfile::TempDir, PipelineConfig)> {
    let tools = common::tools()?;
    let dir = tempfile::tempdir().unwrap();
    let v = common::clip(&tools, dir.path(), "v.mp4", duration_s, 25);
    let mut cfg = PipelineConfig::new(v, dir.path().join("out"));
    cfg.seed = 7;
    Some((dir, cfg))
}

fn stages(r: &PipelineReport) -> Vec<Stage> {
    r.timings.iter().map(|t| t.stage).collect()
}

#[test]
fn mock_run_seed_7() {
    let Some((_dir, cfg)) = setup(5.0) else { return };
    let report = pipeline::run(&cfg).unwrap();
    let out = &cfg.out_dir;

    assert_eq!(report.schema, 1);
    assert!(!report.description.as_deref().unwrap().is_empty());
    let scheme = report.scheme.as_ref().unwrap();
    assert_eq!(scheme.sfx.len(), 2);
    assert!(report.gate_decisions.len() >= 2);
    assert!(report.gate_decisions.iter().all(|g| g.track != "bgm"));
    assert_eq!(report.mixed_tracks, ["sfx1", "sfx2", "bgm"]);
    assert_eq!(report.video.as_ref().unwrap().keyframe_count, 5);

    let mp4 = out.join(report.output_path.as_ref().unwrap());
    assert_eq!(mp4, out.join("final.mp4"));
    let tools = common::tools().unwrap();
    let info = inspect(&tools, &mp4).unwrap();
    assert!((info.duration_s.unwrap() - 5.0).abs() <= 0.1);
    assert_eq!(info.streams_of(StreamKind::Audio).count(), 1);

    // Stage order, without the personalization step.
    let expected: Vec<Stage> = Stage::ORDER
        .into_iter()
        .filter(|s| !matches!(s, Stage::Config | Stage::Personalize))
        .collect();
    assert_eq!(stages(&report), expected);

    // Everything is persisted and the report on disk matches.
    let frame = report.selected_frame.as_ref().unwrap();
    assert!(out.join(&frame.image_path).is_file());
    for f in [
        "prompts/description.txt",
        "replies/description.txt",
        "prompts/scheme.txt",
        "replies/scheme.txt",
    ] {
        assert!(out.join(f).is_file(), "{f}");
    }
    for t in &report.tracks {
        assert!(t.kept);
        assert!(out.join(&t.raw_files[0]).is_file());
        assert!(out.join(t.denoised_file.as_ref().unwrap()).is_file());
        let processed = read_wav(out.join(t.processed_file.as_ref().unwrap())).unwrap();
        assert_eq!(processed.len(), 5 * 32_000);
    }
    let mix = read_wav(out.join("mix.wav")).unwrap();
    assert_eq!(mix.len(), 5 * 32_000);
    assert!(mix.peak() <= 1.0 && mix.rms() > 0.0);
    assert!(out.join("logs/mux.stderr.txt").is_file());
    assert_eq!(PipelineReport::read(out.join(REPORT_FILE)).unwrap(), report);
}

#[test]
fn personalized_run() {
    let Some((_dir, mut cfg)) = setup(2.0) else { return };
    cfg.user_personalization = Some("melancholic atmosphere".into());
    let report = pipeline::run(&cfg).unwrap();
    let p = report.personalization.as_ref().unwrap();
    assert_eq!(p.keywords, ["Melancholy", "Sadness", "Nostalgic", "Wistful", "Somber"]);
    assert_eq!(p.examples.len(), 3);
    let prompt = std::fs::read_to_string(cfg.out_dir.join("prompts/scheme.txt")).unwrap();
    assert!(prompt.contains("Now plan Melancholy, Sadness, Nostalgic, Wistful, Somber SFXs and BGM"));
    assert!(!prompt.contains("Mystical Curiosity"));
    assert!(stages(&report).contains(&Stage::Personalize));
    let idea = &report.scheme.as_ref().unwrap().idea;
    assert!(
        ["Rain Soaked Farewell", "Faded Photographs", "Autumn Goodbye"].contains(&idea.as_str()),
        "{idea}"
    );
}

#[test]
fn discarded_sfx_is_regenerated_then_dropped() {
    let Some((_dir, mut cfg)) = setup(2.0) else { return };
    with_scheme_reply(&mut cfg, &scheme_json("NOISEBURST static", "Crickets chirping"));
    cfg.gate_retry_limit = 2;
    let report = pipeline::run(&cfg).unwrap();
    let sfx1: Vec<_> = report.gate_decisions.iter().filter(|g| g.track == "sfx1").collect();
    assert_eq!(sfx1.iter().map(|g| g.attempt).collect::<Vec<_>>(), [0, 1, 2]);
    assert!(sfx1.iter().all(|g| !g.decision.kept && g.decision.mean_rms > 0.5));
    let record = report.track("sfx1").unwrap();
    assert!(!record.kept);
    assert_eq!(record.raw_files.len(), 3);
    assert!(record.processed_file.is_none());
    assert_eq!(report.mixed_tracks, ["sfx2", "bgm"]);
}

#[test]
fn all_sfx_discarded_leaves_bgm_only() {
    let Some((_dir, mut cfg)) = setup(2.0) else { return };
    with_scheme_reply(&mut cfg, &scheme_json("NOISEBURST one", "NOISEBURST two"));
    cfg.gate_retry_limit = 0;
    let report = pipeline::run(&cfg).unwrap();
    assert_eq!(report.mixed_tracks, ["bgm"]);
    assert_eq!(report.gate_decisions.len(), 2);
    assert!(report.output_path.is_some());
    assert!(report.error.is_none());
}

#[test]
fn silent_sfx_is_kept() {
    let Some((_dir, mut cfg)) = setup(1.0) else { return };
    with_scheme_reply(&mut cfg, &scheme_json("SILENCE", "Crickets chirping"));
    let report = pipeline::run(&cfg).unwrap();
    assert!(report.gate_decisions[0].decision.kept);
    assert_eq!(report.gate_decisions[0].decision.mean_rms, 0.0);
    let mix = read_wav(cfg.out_dir.join("mix.wav")).unwrap();
    assert!(mix.samples.iter().all(|s| s.is_finite()));
}

#[test]
fn invalid_scheme_fails_after_one_regeneration() {
    let Some((_dir, mut cfg)) = setup(1.0) else { return };
    with_scheme_reply(&mut cfg, "Sorry, I cannot help with that.");
    let err = pipeline::run(&cfg).unwrap_err();
    assert_eq!(err.stage, Stage::Scheme);
    assert!(matches!(err.source, StageError::SchemeInvalid(_)));
    let on_disk = PipelineReport::read(cfg.out_dir.join(REPORT_FILE)).unwrap();
    assert_eq!(on_disk.error.as_ref().unwrap().stage, Stage::Scheme);
    assert!(on_disk.output_path.is_none());
    let scheme_calls = on_disk.exchanges.iter().filter(|e| e.stage == Stage::Scheme).count();
    assert_eq!(scheme_calls, 2);
    assert!(cfg.out_dir.join("replies/scheme_retry.txt").is_file());
}

/// A language model that returns a broken scheme first and a valid one on
/// the second request.
fn flaky_language_model() -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = format!("http://{}", listener.local_addr().unwrap());
    let scheme_calls = Arc::new(AtomicUsize::new(0));
    let counter = Arc::clone(&scheme_calls);
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let stream = stream.unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line.trim().is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            let req: serde_json::Value = serde_json::from_slice(&body).unwrap();
            let prompt = req["prompt"].as_str().unwrap();
            let text = if !req["image_b64"].is_null() {
                "A dog runs across a meadow.".to_string()
            } else if counter.fetch_add(1, Ordering::SeqCst) == 0 {
                "{\"idea\": \"Half".to_string()
            } else {
                assert!(prompt.contains(SCHEME_PHRASE));
                scheme_json("Dog panting", "Grass rustling")
            };
            let body = serde_json::json!({ "text": text }).to_string();
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    (addr, scheme_calls)
}

#[test]
fn invalid_scheme_regenerated_once() {
    let Some((_dir, mut cfg)) = setup(1.0) else { return };
    let (addr, calls) = flaky_language_model();
    cfg.backends.insert(
        BackendKind::Mllm,
        BackendConfig {
            endpoint: addr,
            ..BackendConfig::mock(BackendKind::Mllm)
        },
    );
    let report = pipeline::run(&cfg).unwrap();
    assert_eq!(calls.load(Ordering::SeqCst), 2);
    assert_eq!(report.description.as_deref(), Some("A dog runs across a meadow."));
    assert_eq!(report.scheme.as_ref().unwrap().sfx[0], "Dog panting");
}

#[test]
fn dry_run_stops_after_scheme() {
    let Some((_dir, cfg)) = setup(1.0) else { return };
    let report = pipeline::dry_run(&cfg).unwrap();
    assert!(report.dry_run);
    parse_scheme(&report.scheme.as_ref().unwrap().to_json()).unwrap();
    assert!(report.output_path.is_none() && report.tracks.is_empty());
    assert_eq!(stages(&report).last(), Some(&Stage::Scheme));
    assert!(is_empty_dir(&cfg.out_dir.join("audio/raw")));
}

fn is_empty_dir(p: &Path) -> bool {
    std::fs::read_dir(p).unwrap().next().is_none()
}

#[test]
fn failures_are_reported_with_stage() {
    let Some((dir, mut cfg)) = setup(1.0) else { return };
    cfg.gate_retry_limit = 9;
    let err = pipeline::run(&cfg).unwrap_err();
    assert_eq!(err.stage, Stage::Config);
    assert!(matches!(err.source, StageError::Config(_)));

    let mut cfg = PipelineConfig::new(dir.path().join("missing.mp4"), dir.path().join("out2"));
    cfg.seed = 1;
    let err = pipeline::run(&cfg).unwrap_err();
    assert_eq!(err.stage, Stage::Probe);
    assert!(err.to_string().starts_with("probe stage failed"));
    let on_disk = PipelineReport::read(cfg.out_dir.join(REPORT_FILE)).unwrap();
    assert!(on_disk.error.unwrap().message.contains("missing.mp4"));
}
