use std::fs::File;
use std::io::{BufReader, Cursor, Read, Seek};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::{DspError, Result, Waveform};

fn map_hound(err: hound::Error) -> DspError {
    match err {
        hound::Error::IoError(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
            DspError::CorruptHeader("unexpected end of file".into())
        }
        hound::Error::IoError(e) => DspError::CorruptHeader(e.to_string()),
        hound::Error::FormatError(msg) => DspError::CorruptHeader(msg.into()),
        hound::Error::UnfinishedSample => DspError::CorruptHeader("truncated sample data".into()),
        hound::Error::Unsupported => DspError::UnsupportedFormat("unsupported WAV encoding".into()),
        hound::Error::TooWide | hound::Error::InvalidSampleFormat => DspError::UnsupportedFormat("sample width".into()),
    }
}

fn decode<R: Read>(reader: WavReader<R>) -> Result<Waveform> {
    let spec = reader.spec();
    let channels = usize::from(spec.channels);
    if !(1..=2).contains(&channels) {
        return Err(DspError::UnsupportedFormat(format!(
            "{channels} channels (mono or stereo only)"
        )));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(map_hound)?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(map_hound)?,
        (format, bits) => {
            return Err(DspError::UnsupportedFormat(format!(
                "{bits}-bit {format:?} (PCM16 or float32 only)"
            )))
        }
    };
    let samples = if channels == 1 {
        interleaved
    } else {
        interleaved.chunks_exact(2).map(|lr| (lr[0] + lr[1]) / 2.0).collect()
    };
    Ok(Waveform::new(samples, spec.sample_rate))
}

/// Decodes an in-memory RIFF/WAVE buffer. Stereo is averaged down to mono.
pub fn decode_wav(bytes: &[u8]) -> Result<Waveform> {
    let reader = WavReader::new(Cursor::new(bytes)).map_err(map_hound)?;
    decode(reader)
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DspError::IoFailure {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = WavReader::new(BufReader::new(file)).map_err(map_hound)?;
    decode(reader)
}

fn encode_into<W: std::io::Write + Seek>(sink: W, w: &Waveform) -> std::result::Result<(), hound::Error> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: w.sample_rate_hz,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut writer = WavWriter::new(sink, spec)?;
    for &s in &w.samples {
        writer.write_sample(s.clamp(-1.0, 1.0) as f32)?;
    }
    writer.finalize()
}

/// Encodes as mono float32 WAV, clamping to `[-1, 1]`.
pub fn encode_wav(w: &Waveform) -> Vec<u8> {
    let mut cursor = Cursor::new(Vec::new());
    encode_into(&mut cursor, w).expect("in-memory WAV encoding cannot fail");
    cursor.into_inner()
}

pub fn write_wav(path: impl AsRef<Path>, w: &Waveform) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| DspError::IoFailure {
        path: path.to_path_buf(),
        source,
    };
    // Encode in memory so a failed write never leaves a half-finished header.
    std::fs::write(path, encode_wav(w)).map_err(io_err)
}
