#![allow(dead_code)]

use std::path::{Path, PathBuf};

use sva::media::{self, Toolchain};

/// The ffmpeg toolchain, or `None` (with a note on stderr) when it is not
/// installed, in which case the calling test returns early.
pub fn tools() -> Option<Toolchain> {
    match Toolchain::from_env() {
        Ok(t) => Some(t),
        Err(e) => {
            eprintln!("skipping: {e}");
            None
        }
    }
}

/// Renders a 25 fps test clip with an intra frame every `gop` frames.
pub fn clip(tools: &Toolchain, dir: &Path, name: &str, duration_s: f64, gop: u32) -> PathBuf {
    let path = dir.join(name);
    media::render_test_pattern(tools, &path, duration_s, gop).expect("render fixture clip");
    path
}
