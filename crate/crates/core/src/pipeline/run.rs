use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};

use super::postfx::{self, TrackClass};
use super::report::{
    Exchange, GateEntry, MuxRecord, PipelineReport, ReportError, StageTiming, TrackRecord, VideoSummary,
};
use super::{PipelineConfig, PipelineError, Stage, StageError, REPORT_FILE};
use crate::dsp::{self, Waveform};
use crate::gateway::{BackendKind, Client};
use crate::media::{self, KeyFrame, Toolchain, VideoAsset};
use crate::mux::{self, MuxRequest};
use crate::prompt::{self, personalize_template, Personalization, PromptTemplate, Scheme, TemplateKind, TemplateSet};

type StageResult<T> = Result<T, StageError>;

const SFX_LABELS: [&str; 2] = ["sfx1", "sfx2"];
const BGM_LABEL: &str = "bgm";

/// Runs the full pipeline.
pub fn run(cfg: &PipelineConfig) -> Result<PipelineReport, PipelineError> {
    Runner::new(cfg).execute(false)
}

/// Stops once the scheme is known; nothing is generated or muxed.
pub fn dry_run(cfg: &PipelineConfig) -> Result<PipelineReport, PipelineError> {
    Runner::new(cfg).execute(true)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StageError + '_ {
    move |source| StageError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// A track moving through post-processing.
struct Track {
    label: &'static str,
    class: TrackClass,
    wave: Waveform,
}

struct Runner<'a> {
    cfg: &'a PipelineConfig,
    out: PathBuf,
    report: PipelineReport,
    stage: Stage,
    stage_started: Instant,
}

impl<'a> Runner<'a> {
    fn new(cfg: &'a PipelineConfig) -> Self {
        Self {
            cfg,
            out: cfg.out_dir.clone(),
            report: PipelineReport::new(cfg.seed),
            stage: Stage::Config,
            stage_started: Instant::now(),
        }
    }

    fn execute(mut self, dry_run: bool) -> Result<PipelineReport, PipelineError> {
        self.report.dry_run = dry_run;
        let result = self.stages(dry_run);
        if let Err(e) = &result {
            self.report.error = Some(ReportError {
                stage: self.stage,
                message: e.to_string(),
            });
            self.report.output_path = None;
        }
        if let Err(e) = self.write_report() {
            warn!("could not write report: {e}");
        }
        match result {
            Ok(()) => Ok(self.report),
            Err(source) => Err(PipelineError {
                stage: self.stage,
                source,
                report: Box::new(self.report),
            }),
        }
    }

    fn write_report(&self) -> std::io::Result<()> {
        if !self.out.is_dir() {
            return Ok(());
        }
        let json = serde_json::to_string_pretty(&self.report).map_err(std::io::Error::other)?;
        std::fs::write(self.out.join(REPORT_FILE), json + "\n")
    }

    fn begin(&mut self, stage: Stage) {
        info!("stage {stage}");
        self.stage = stage;
        self.stage_started = Instant::now();
    }

    fn end(&mut self) {
        self.report.timings.push(StageTiming {
            stage: self.stage,
            ms: self.stage_started.elapsed().as_secs_f64() * 1e3,
        });
    }

    fn rel(&self, p: &Path) -> PathBuf {
        p.strip_prefix(&self.out).unwrap_or(p).to_path_buf()
    }

    fn write_text(&self, rel: &str, text: &str) -> StageResult<PathBuf> {
        let path = self.out.join(rel);
        std::fs::write(&path, text).map_err(io_err(&path))?;
        Ok(PathBuf::from(rel))
    }

    fn write_wave(&self, rel: String, w: &Waveform) -> StageResult<PathBuf> {
        dsp::write_wav(self.out.join(&rel), w)?;
        Ok(PathBuf::from(rel))
    }

    fn client(&self, kind: BackendKind) -> StageResult<Client> {
        Ok(Client::new(self.cfg.backend(kind).clone())?)
    }

    /// Sends a text prompt, persisting prompt and reply as `<name>.txt`.
    fn ask(&mut self, name: &str, prompt: &str, image: Option<&[u8]>) -> StageResult<String> {
        let client = self.client(BackendKind::Mllm)?;
        let prompt_file = self.write_text(&format!("prompts/{name}.txt"), prompt)?;
        let reply = match image {
            Some(img) => client.describe_image(img, prompt)?,
            None => client.complete_text(prompt)?,
        };
        let reply_file = self.write_text(&format!("replies/{name}.txt"), &reply.value)?;
        self.report.exchanges.push(Exchange {
            stage: self.stage,
            prompt_file,
            reply_file,
            retries: reply.retries,
        });
        Ok(reply.value)
    }

    fn stages(&mut self, dry_run: bool) -> StageResult<()> {
        self.cfg.validate().map_err(StageError::Config)?;
        for dir in [
            "frames",
            "prompts",
            "replies",
            "audio/raw",
            "audio/denoised",
            "audio/processed",
            "logs",
        ] {
            let d = self.out.join(dir);
            std::fs::create_dir_all(&d).map_err(io_err(&d))?;
        }

        self.begin(Stage::Probe);
        let tools = Toolchain::resolve(&self.cfg.tools)?;
        self.report.tool_versions = tools.versions();
        let asset = media::probe(&tools, &self.cfg.video_path)?;
        self.end();

        self.begin(Stage::KeyFrame);
        let frame = self.select_frame(&tools, &asset)?;
        self.end();

        self.begin(Stage::Describe);
        let image = std::fs::read(&frame.image_path).map_err(io_err(&frame.image_path))?;
        let description = self.ask("description", &prompt::render_description_prompt(), Some(&image))?;
        self.report.description = Some(description.clone());
        self.end();

        let templates = match &self.cfg.templates_dir {
            Some(dir) => TemplateSet::load_dir(dir)?,
            None => TemplateSet::builtin().clone(),
        };
        let mut template = templates.get(TemplateKind::SchemeGeneration).clone();
        if let Some(input) = self.cfg.user_personalization.clone() {
            self.begin(Stage::Personalize);
            template = self.personalize(&templates, &template, &input)?;
            self.end();
        }

        self.begin(Stage::Scheme);
        let scheme = self.scheme(&description, &template)?;
        self.report.scheme = Some(scheme.clone());
        self.end();
        if dry_run {
            return Ok(());
        }

        let duration_s = asset.duration_s.min(self.cfg.max_audio_duration_s);
        self.begin(Stage::Generate);
        let generated = self.generate(&scheme, duration_s)?;
        self.end();

        self.begin(Stage::Resample);
        let rate = self.cfg.dsp.sample_rate_hz;
        let resampled = generated
            .into_iter()
            .map(|(i, w)| Ok((i, dsp::resample(&w, rate)?)))
            .collect::<StageResult<Vec<_>>>()?;
        self.end();

        self.begin(Stage::Gate);
        let tracks = self.gate(&scheme, resampled, duration_s)?;
        self.end();

        let tracks = self.per_track(Stage::Filter, tracks, |t, dsp| postfx::filter(&t.wave, t.class, dsp))?;
        let tracks = self.per_track(Stage::Denoise, tracks, |t, dsp| postfx::denoise(&t.wave, dsp))?;
        for t in &tracks {
            let path = self.write_wave(format!("audio/denoised/{}.wav", t.label), &t.wave)?;
            self.track_mut(t.label).denoised_file = Some(path);
        }
        let tracks = self.per_track(Stage::Gain, tracks, |t, dsp| postfx::gain(&t.wave, t.class, dsp))?;
        let target_s = asset.duration_s;
        let tracks = self.per_track(Stage::Fit, tracks, |t, _| dsp::fit_duration(&t.wave, target_s))?;
        for t in &tracks {
            let path = self.write_wave(format!("audio/processed/{}.wav", t.label), &t.wave)?;
            self.track_mut(t.label).processed_file = Some(path);
        }

        self.begin(Stage::Mix);
        self.report.mixed_tracks = tracks.iter().map(|t| t.label.to_string()).collect();
        let waves: Vec<Waveform> = tracks.into_iter().map(|t| t.wave).collect();
        let mixed = dsp::mix(&waves)?;
        self.end();

        self.begin(Stage::Write);
        let mix_path = self.write_wave("mix.wav".into(), &mixed)?;
        self.report.mix_path = Some(mix_path.clone());
        self.end();

        self.begin(Stage::Mux);
        let mut req = MuxRequest::new(
            &self.cfg.video_path,
            self.out.join(&mix_path),
            self.out.join("final.mp4"),
        );
        req.audio_bitrate = self.cfg.mux.audio_bitrate;
        if self.cfg.mux.delivery_format {
            req.audio_sample_rate_hz = Some(48_000);
            req.audio_channels = Some(2);
        }
        let summary = mux::mux(&tools, &req)?;
        let stderr_file = self.write_text("logs/mux.stderr.txt", &summary.stderr)?;
        self.report.mux = Some(MuxRecord {
            command: summary.command,
            stderr_file,
        });
        self.report.output_path = Some(self.rel(&summary.out_path));
        self.report.output_duration_s = Some(summary.duration_s);
        self.end();
        Ok(())
    }

    fn select_frame(&mut self, tools: &Toolchain, asset: &VideoAsset) -> StageResult<KeyFrame> {
        let frames = media::extract_keyframes(tools, asset, self.out.join("frames"))?;
        let chosen = media::select_keyframe(&frames, self.cfg.seed)?.clone();
        info!(
            "selected key frame {} of {} at {:.3}s",
            chosen.index,
            frames.len(),
            chosen.timestamp_s
        );
        self.report.video = Some(VideoSummary {
            path: asset.path.clone(),
            duration_s: asset.duration_s,
            codec: asset.video_codec.clone(),
            keyframe_count: frames.len(),
        });
        self.report.selected_frame = Some(KeyFrame {
            image_path: self.rel(&chosen.image_path),
            ..chosen.clone()
        });
        Ok(chosen)
    }

    fn personalize(
        &mut self,
        templates: &TemplateSet,
        base: &PromptTemplate,
        input: &str,
    ) -> StageResult<PromptTemplate> {
        let kw_reply = self.ask("keywords", &templates.render_keyword_prompt(input)?, None)?;
        let keywords = prompt::parse_keywords(&kw_reply)?;
        let ex_reply = self.ask("examples", &templates.render_examples_prompt(input)?, None)?;
        let examples = prompt::parse_examples(&ex_reply)?;
        let p = Personalization {
            user_input: input.to_string(),
            keywords,
            examples,
        };
        let template = personalize_template(base, &p)?;
        self.report.personalization = Some(p);
        Ok(template)
    }

    /// One regeneration is allowed when the first reply is not a valid
    /// scheme.
    fn scheme(&mut self, description: &str, template: &PromptTemplate) -> StageResult<Scheme> {
        let prompt = prompt::render_scheme_prompt(description, template)?;
        let first = self.ask("scheme", &prompt, None)?;
        match prompt::parse_scheme(&first) {
            Ok(s) => Ok(s),
            Err(e) => {
                warn!("scheme reply invalid ({e}); regenerating once");
                let second = self.ask("scheme_retry", &prompt, None)?;
                prompt::parse_scheme(&second).map_err(StageError::SchemeInvalid)
            }
        }
    }

    /// The three clips are requested concurrently. Returns them in the order
    /// sfx1, sfx2, bgm, keyed by track index.
    fn generate(&mut self, scheme: &Scheme, duration_s: f64) -> StageResult<Vec<(usize, Waveform)>> {
        let jobs: Vec<(&'static str, TrackClass, BackendKind, String)> = vec![
            (
                SFX_LABELS[0],
                TrackClass::Sfx,
                BackendKind::SfxAudio,
                scheme.sfx[0].clone(),
            ),
            (
                SFX_LABELS[1],
                TrackClass::Sfx,
                BackendKind::SfxAudio,
                scheme.sfx[1].clone(),
            ),
            (BGM_LABEL, TrackClass::Bgm, BackendKind::BgmAudio, scheme.bgm.clone()),
        ];
        let clients = [self.client(BackendKind::SfxAudio)?, self.client(BackendKind::BgmAudio)?];
        let results: Vec<_> = std::thread::scope(|s| {
            let handles: Vec<_> = jobs
                .iter()
                .map(|(_, _, kind, prompt)| {
                    let client = if *kind == BackendKind::SfxAudio {
                        &clients[0]
                    } else {
                        &clients[1]
                    };
                    s.spawn(move || client.generate_audio(prompt, duration_s))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("generation thread panicked"))
                .collect()
        });
        let mut out = Vec::with_capacity(3);
        for (i, ((label, class, _, prompt), result)) in jobs.into_iter().zip(results).enumerate() {
            let reply = result?;
            let raw = self.write_wave(format!("audio/raw/{label}_a0.wav"), &reply.value)?;
            self.report.tracks.push(TrackRecord {
                label: label.to_string(),
                class,
                prompt,
                raw_files: vec![raw],
                retries: vec![reply.retries],
                kept: true,
                denoised_file: None,
                processed_file: None,
            });
            out.push((i, reply.value));
        }
        Ok(out)
    }

    fn track_mut(&mut self, label: &str) -> &mut TrackRecord {
        self.report
            .tracks
            .iter_mut()
            .find(|t| t.label == label)
            .expect("track recorded at generation")
    }

    /// Gates each SFX, regenerating rejected ones with the same prompt up to
    /// the retry limit. Returns the surviving tracks, SFX first.
    fn gate(&mut self, scheme: &Scheme, clips: Vec<(usize, Waveform)>, duration_s: f64) -> StageResult<Vec<Track>> {
        let dsp_cfg = self.cfg.dsp.clone();
        let sfx_client = self.client(BackendKind::SfxAudio)?;
        let mut survivors = Vec::new();
        for (i, wave) in clips {
            if i == 2 {
                survivors.push(Track {
                    label: BGM_LABEL,
                    class: TrackClass::Bgm,
                    wave,
                });
                continue;
            }
            let label = SFX_LABELS[i];
            let mut wave = wave;
            let mut attempt = 0;
            loop {
                let decision = postfx::gate(&wave, &dsp_cfg)?;
                let kept = decision.kept;
                info!(
                    "{label} attempt {attempt}: mean rms {:.4} vs {} -> {}",
                    decision.mean_rms,
                    decision.threshold,
                    if kept { "kept" } else { "discarded" }
                );
                self.report.gate_decisions.push(GateEntry {
                    track: label.to_string(),
                    attempt,
                    decision,
                });
                if kept {
                    survivors.push(Track {
                        label,
                        class: TrackClass::Sfx,
                        wave,
                    });
                    break;
                }
                if attempt >= self.cfg.gate_retry_limit {
                    self.track_mut(label).kept = false;
                    warn!("{label} dropped after {} attempts", attempt + 1);
                    break;
                }
                attempt += 1;
                let reply = sfx_client.generate_audio(&scheme.sfx[i], duration_s)?;
                let raw = self.write_wave(format!("audio/raw/{label}_a{attempt}.wav"), &reply.value)?;
                let record = self.track_mut(label);
                record.raw_files.push(raw);
                record.retries.push(reply.retries);
                wave = dsp::resample(&reply.value, dsp_cfg.sample_rate_hz)?;
            }
        }
        // Keep mix order stable: sfx1, sfx2, bgm.
        survivors.sort_by_key(|t| t.class == TrackClass::Bgm);
        Ok(survivors)
    }

    fn per_track(
        &mut self,
        stage: Stage,
        tracks: Vec<Track>,
        f: impl Fn(&Track, &super::DspConfig) -> Result<Waveform, dsp::DspError> + Sync,
    ) -> StageResult<Vec<Track>> {
        self.begin(stage);
        let dsp_cfg = &self.cfg.dsp;
        let results: Vec<Result<Waveform, dsp::DspError>> = std::thread::scope(|s| {
            let handles: Vec<_> = tracks.iter().map(|t| s.spawn(|| f(t, dsp_cfg))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("dsp thread panicked"))
                .collect()
        });
        let out = tracks
            .into_iter()
            .zip(results)
            .map(|(t, r)| Ok(Track { wave: r?, ..t }))
            .collect::<StageResult<Vec<_>>>()?;
        self.end();
        Ok(out)
    }
}
