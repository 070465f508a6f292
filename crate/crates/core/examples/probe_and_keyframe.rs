//! Probe a video, extract its I-frames and pick one with a seed.
//!
//!     cargo run --example probe_and_keyframe -- [video.mp4] [seed]

use std::path::PathBuf;

use sva::media::{self, Toolchain};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let tools = Toolchain::from_env()?;
    let work = std::env::temp_dir().join("sva-probe");
    std::fs::create_dir_all(&work)?;
    let video = match args.next().filter(|a| !a.is_empty()) {
        Some(v) => PathBuf::from(v),
        None => {
            let v = work.join("pattern.mp4");
            media::render_test_pattern(&tools, &v, 4.0, 25)?;
            v
        }
    };
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(7);

    let asset = media::probe(&tools, &video)?;
    println!(
        "{} : {:.2}s {}",
        asset.path.display(),
        asset.duration_s,
        asset.video_codec
    );

    let frames = media::extract_keyframes(&tools, &asset, work.join("frames"))?;
    for kf in &frames {
        println!(
            "  I-frame {:>2} at {:>6.2}s  {}",
            kf.index,
            kf.timestamp_s,
            kf.image_path.display()
        );
    }
    let pick = media::select_keyframe(&frames, seed)?;
    println!("seed {seed} picks frame {} ({:.2}s)", pick.index, pick.timestamp_s);
    Ok(())
}
