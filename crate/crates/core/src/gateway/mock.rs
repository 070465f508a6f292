//! Deterministic offline backends.
//!
//! The mock language model recognises which template a prompt came from
//! and answers from small fixture tables. The mock audio backend turns the
//! prompt hash into a sum of sines plus a low uniform noise floor, scaled
//! to an RMS of [`MOCK_AUDIO_RMS`]. Two magic tokens override that:
//!
//! * [`NOISEBURST`]: full-scale uniform white noise (RMS `1/sqrt(3)`), which
//!   the energy gate always rejects;
//! * [`SILENCE`]: all zeros.
//!
//! Everything is a pure function of the inputs and [`MOCK_SEED`].

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{BackendConfig, BackendKind};
use crate::dsp::{encode_wav, Waveform};

pub const MOCK_ENDPOINT: &str = "mock";
pub const NOISEBURST: &str = "NOISEBURST";
pub const SILENCE: &str = "SILENCE";
pub const MOCK_SEED: u64 = 0x5EED_A0D1_0F0B_5EED;
pub const MOCK_AUDIO_RMS: f64 = 0.1;

/// A canned mock reply used when the prompt contains `contains`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockRule {
    pub contains: String,
    pub reply: String,
}

fn digest(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().into()
}

fn digest_u64(parts: &[&[u8]]) -> u64 {
    let d = digest(parts);
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// Image descriptions, picked by image hash.
pub const DESCRIPTIONS: [&str; 4] = [
    "A tabby cat walks slowly along a wooden garden fence at dusk while leaves sway in a light breeze.",
    "Waves roll onto a sandy beach under a bright afternoon sky as seagulls circle above the water.",
    "A vintage steam train crosses a stone bridge through a misty pine forest in the early morning.",
    "Neon signs glow over a rain-soaked city street at night as cars pass and people hurry by with umbrellas.",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mood {
    Melancholy,
    Electronic,
    Cheerful,
    Neutral,
}

fn detect_mood(text: &str) -> Mood {
    let t = text.to_lowercase();
    let any = |words: &[&str]| words.iter().any(|w| t.contains(w));
    if any(&["melanch", "sad", "somber", "gloom", "sorrow", "wistful"]) {
        Mood::Melancholy
    } else if any(&["electronic", "techno", "synth", "cyber", "avant-garde"]) {
        Mood::Electronic
    } else if any(&["cheer", "happy", "upbeat", "fresh", "sunny", "lively"]) {
        Mood::Cheerful
    } else {
        Mood::Neutral
    }
}

fn keywords_for(mood: Mood, user_input: &str) -> String {
    match mood {
        Mood::Melancholy => "Melancholy, Sadness, Nostalgic, Wistful, Somber".into(),
        Mood::Electronic => "Electronic, Avant-garde, Technology, Experimental, Innovative".into(),
        Mood::Cheerful => "Fresh, Upbeat, Cheerful, Lively, Sunny".into(),
        Mood::Neutral => {
            let words: Vec<String> = user_input
                .split(|c: char| !c.is_alphanumeric() && c != '-')
                .filter(|w| w.len() > 3)
                .take(5)
                .map(|w| {
                    let mut c = w.chars();
                    c.next()
                        .map(|f| f.to_uppercase().chain(c.flat_map(char::to_lowercase)).collect())
                        .unwrap_or_default()
                })
                .collect();
            if words.is_empty() {
                "Emotional, Memory, Cozy, Quiet, Melodic".into()
            } else {
                words.join(", ")
            }
        }
    }
}

type Fixture = (&'static str, [&'static str; 2], &'static str);

const MELANCHOLY_SCHEMES: [Fixture; 3] = [
    (
        "Rain Soaked Farewell",
        ["Soft rain tapping on a window pane", "A distant train horn fading away"],
        "A slow solo piano in a minor key with sparse cello lines and a quiet, grieving mood",
    ),
    (
        "Faded Photographs",
        [
            "Old clock ticking in an empty room",
            "Wind whistling through a half open door",
        ],
        "Gentle strings and a music box melody drifting over a slow, wistful waltz",
    ),
    (
        "Autumn Goodbye",
        [
            "Dry leaves rustling across a stone path",
            "A lone crow calling in the distance",
        ],
        "Muted acoustic guitar arpeggios with a soft, sorrowful violin and no percussion",
    ),
];

const ELECTRONIC_SCHEMES: [Fixture; 3] = [
    (
        "Circuit Bloom",
        [
            "Electric hum from a buzzing power line",
            "Mechanical servo whirring in short bursts",
        ],
        "Glitchy experimental electronica with granular synth pads and off-kilter drum machines",
    ),
    (
        "Neon Pulse",
        [
            "Rapid keyboard typing in a quiet office",
            "Sliding metal door opening with a hiss",
        ],
        "Driving synthwave with arpeggiated bass, gated snare and shimmering analog leads",
    ),
    (
        "Data Rain",
        [
            "Modem style beeps and clicks",
            "Cooling fans spinning up in a server room",
        ],
        "Minimal techno with a deep kick, evolving filter sweeps and metallic percussion",
    ),
];

const CHEERFUL_SCHEMES: [Fixture; 3] = [
    (
        "Sunny Parade",
        ["Children laughing in a playground", "Bicycle bell ringing twice"],
        "Bright ukulele strumming with hand claps, whistling melody and a bouncy bass",
    ),
    (
        "Picnic Breeze",
        ["Birds chirping in a leafy park", "A soda can opening with a fizz"],
        "Upbeat acoustic pop with glockenspiel, light drums and a cheerful piano hook",
    ),
    (
        "Morning Sprint",
        ["Sneakers squeaking on a gym floor", "A crowd cheering and clapping"],
        "Energetic brass band groove with snappy snare and a playful tuba line",
    ),
];

const NEUTRAL_SCHEMES: [Fixture; 4] = [
    (
        "Moonlit Prowl",
        ["Soft paws padding on creaking wood", "Crickets chirping in tall grass"],
        "A playful pizzicato string piece with muted trumpet and brushed drums in a sneaky mood",
    ),
    (
        "Tidal Daydream",
        [
            "Waves crashing and foaming on the shore",
            "Seagulls crying over the water",
        ],
        "Dreamy ambient pads with a slow marimba melody and gentle shaker rhythm",
    ),
    (
        "Iron Horse Legend",
        [
            "Steam locomotive chugging and whistling",
            "Wooden bridge creaking under heavy weight",
        ],
        "A grand orchestral theme with galloping strings, heroic horns and timpani rolls",
    ),
    (
        "Rainy Neon Nights",
        ["Car tires hissing on a wet road", "Rain drumming on an umbrella"],
        "Smooth lo-fi jazz with a mellow saxophone, dusty piano chords and a laid back beat",
    ),
];

fn pool(mood: Mood) -> &'static [Fixture] {
    match mood {
        Mood::Melancholy => &MELANCHOLY_SCHEMES,
        Mood::Electronic => &ELECTRONIC_SCHEMES,
        Mood::Cheerful => &CHEERFUL_SCHEMES,
        Mood::Neutral => &NEUTRAL_SCHEMES,
    }
}

fn fixture_json((idea, sfx, bgm): &Fixture) -> String {
    serde_json::json!({ "idea": idea, "SFX": sfx, "BGM": bgm }).to_string()
}

/// Text after `marker` up to the end of its line.
fn line_after<'a>(prompt: &'a str, marker: &str) -> Option<&'a str> {
    let start = prompt.find(marker)? + marker.len();
    Some(prompt[start..].lines().next().unwrap_or("").trim())
}

/// The mock language model.
pub fn reply(cfg: &BackendConfig, prompt: &str, image: Option<&[u8]>) -> String {
    if let Some(rule) = cfg.mock_rules.iter().find(|r| prompt.contains(&r.contains)) {
        return rule.reply.clone();
    }
    if let Some(image) = image {
        let idx = digest_u64(&[b"image", image]) % DESCRIPTIONS.len() as u64;
        return DESCRIPTIONS[idx as usize].to_string();
    }
    if prompt.contains("extract the key word") {
        let said = line_after(prompt, "what the user said:").unwrap_or("");
        return keywords_for(detect_mood(said), said);
    }
    if prompt.contains("create more samples") {
        let wanted = line_after(prompt, "satisfy the requirements:").unwrap_or("");
        return pool(detect_mood(wanted))
            .iter()
            .map(|f| format!("- {};", fixture_json(f)))
            .collect::<Vec<_>>()
            .join("\n");
    }
    if prompt.contains("Output the idea following the examples") {
        let tone = line_after(prompt, "Now plan ").unwrap_or("");
        let candidates = pool(detect_mood(tone));
        let idx = digest_u64(&[b"scheme", prompt.as_bytes()]) % candidates.len() as u64;
        return format!(
            "Here is a creative idea for this video:\n```json\n{}\n```",
            fixture_json(&candidates[idx as usize])
        );
    }
    format!("Mock reply ({:016x})", digest_u64(&[b"text", prompt.as_bytes()]))
}

/// Tone frequencies, amplitudes and noise floor the mock derives from a
/// prompt.
#[derive(Debug, Clone, PartialEq)]
pub struct ToneRecipe {
    pub frequencies_hz: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub phases: Vec<f64>,
    pub noise_rms: f64,
}

impl ToneRecipe {
    /// Closed-form RMS of the recipe: `sqrt(sum(a^2) / 2 + noise^2)`.
    pub fn expected_rms(&self) -> f64 {
        (self.amplitudes.iter().map(|a| a * a).sum::<f64>() / 2.0 + self.noise_rms.powi(2)).sqrt()
    }
}

fn rng_for(kind: BackendKind, prompt: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(digest_u64(&[kind.as_str().as_bytes(), prompt.as_bytes()]) ^ MOCK_SEED)
}

/// Pentatonic scale over A3..A5, used for the music backend.
const BGM_NOTES_HZ: [f64; 11] = [
    220.0, 261.63, 293.66, 329.63, 392.0, 440.0, 523.25, 587.33, 659.25, 783.99, 880.0,
];

pub fn tone_recipe(kind: BackendKind, prompt: &str) -> ToneRecipe {
    let mut rng = rng_for(kind, prompt);
    let mut frequencies_hz: Vec<f64> = Vec::with_capacity(3);
    while frequencies_hz.len() < 3 {
        let f = match kind {
            BackendKind::BgmAudio => BGM_NOTES_HZ[rng.random_range(0..BGM_NOTES_HZ.len())],
            _ => (rng.random_range(300.0..2500.0_f64)).round(),
        };
        if !frequencies_hz.contains(&f) {
            frequencies_hz.push(f);
        }
    }
    let weights: Vec<f64> = (0..3).map(|_| rng.random_range(0.5..1.0)).collect();
    let phases = (0..3).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    let noise_rms: f64 = rng.random_range(0.002..0.006);
    let tonal_power = MOCK_AUDIO_RMS.powi(2) - noise_rms.powi(2);
    let weight_power: f64 = weights.iter().map(|w| w * w / 2.0).sum();
    let scale = (tonal_power / weight_power).sqrt();
    ToneRecipe {
        frequencies_hz,
        amplitudes: weights.iter().map(|w| w * scale).collect(),
        phases,
        noise_rms,
    }
}

/// Synthesizes the mock waveform for `prompt`.
pub fn synthesize(kind: BackendKind, prompt: &str, duration_s: f64, sample_rate_hz: u32) -> Waveform {
    let len = (duration_s * f64::from(sample_rate_hz)).round() as usize;
    let mut rng = rng_for(kind, &format!("noise:{prompt}"));
    if prompt.contains(NOISEBURST) {
        return Waveform::new((0..len).map(|_| rng.random_range(-1.0..1.0)).collect(), sample_rate_hz);
    }
    if prompt.contains(SILENCE) {
        return Waveform::silence(len, sample_rate_hz);
    }
    let recipe = tone_recipe(kind, prompt);
    let half_width = recipe.noise_rms * 3f64.sqrt();
    let sr = f64::from(sample_rate_hz);
    let samples = (0..len)
        .map(|n| {
            let t = n as f64 / sr;
            let tones: f64 = recipe
                .frequencies_hz
                .iter()
                .zip(&recipe.amplitudes)
                .zip(&recipe.phases)
                .map(|((f, a), p)| a * (2.0 * PI * f * t + p).sin())
                .sum();
            tones + rng.random_range(-half_width..half_width)
        })
        .collect();
    Waveform::new(samples, sample_rate_hz)
}

/// The mock audio backend's wire payload: float32 WAV bytes.
pub fn generate_wav(kind: BackendKind, prompt: &str, duration_s: f64, sample_rate_hz: u32) -> Vec<u8> {
    encode_wav(&synthesize(kind, prompt, duration_s, sample_rate_hz))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::{parse_examples, parse_keywords, parse_scheme, render_keyword_prompt};

    fn mllm() -> BackendConfig {
        BackendConfig::mock(BackendKind::Mllm)
    }

    #[test]
    fn recipe_rms_closed_form() {
        for prompt in ["Distant owl hooting softly", "High-pitched wind chime tinkling softly"] {
            let r = tone_recipe(BackendKind::SfxAudio, prompt);
            assert!((r.expected_rms() - MOCK_AUDIO_RMS).abs() < 1e-12);
            let w = synthesize(BackendKind::SfxAudio, prompt, 4.0, 32_000);
            assert_eq!(w.len(), 128_000);
            assert!((w.rms() - 0.1).abs() < 0.003, "rms {}", w.rms());
        }
    }

    #[test]
    fn noiseburst_and_silence() {
        let w = synthesize(BackendKind::SfxAudio, "a NOISEBURST here", 2.0, 16_000);
        assert!((w.rms() - 1.0 / 3f64.sqrt()).abs() < 0.01);
        assert!(w.peak() <= 1.0);
        let s = synthesize(BackendKind::SfxAudio, "SILENCE", 1.0, 16_000);
        assert!(s.samples.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn audio_is_deterministic() {
        let a = generate_wav(BackendKind::BgmAudio, "Smooth jazz", 1.5, 24_000);
        let b = generate_wav(BackendKind::BgmAudio, "Smooth jazz", 1.5, 24_000);
        assert_eq!(a, b);
        let c = generate_wav(BackendKind::SfxAudio, "Smooth jazz", 1.5, 24_000);
        assert_ne!(a, c);
    }

    #[test]
    fn image_description_keyed_by_hash() {
        let a = reply(&mllm(), "describe", Some(b"image-a"));
        assert!(DESCRIPTIONS.contains(&a.as_str()));
        assert_eq!(a, reply(&mllm(), "other prompt", Some(b"image-a")));
    }

    #[test]
    fn keyword_reply_parses() {
        let prompt = render_keyword_prompt("melancholic atmosphere").unwrap();
        let kws = parse_keywords(&reply(&mllm(), &prompt, None)).unwrap();
        assert_eq!(kws[0], "Melancholy");
        let prompt = render_keyword_prompt("make it feel like a heist").unwrap();
        let kws = parse_keywords(&reply(&mllm(), &prompt, None)).unwrap();
        assert_eq!(kws, ["Make", "Feel", "Like", "Heist"]);
    }

    #[test]
    fn example_reply_parses() {
        let prompt = crate::prompt::render_examples_prompt("electronic music style").unwrap();
        let ex = parse_examples(&reply(&mllm(), &prompt, None)).unwrap();
        assert_eq!(ex.len(), 3);
        assert!(ex[0].contains("Circuit Bloom"));
    }

    #[test]
    fn all_fixtures_are_valid_schemes() {
        for p in [Mood::Melancholy, Mood::Electronic, Mood::Cheerful, Mood::Neutral] {
            for f in pool(p) {
                parse_scheme(&fixture_json(f)).unwrap();
            }
        }
    }

    #[test]
    fn rules_take_precedence() {
        let mut cfg = mllm();
        cfg.mock_rules.push(MockRule {
            contains: "Output the idea".into(),
            reply: "canned".into(),
        });
        assert_eq!(reply(&cfg, "Output the idea following the examples", None), "canned");
    }
}
