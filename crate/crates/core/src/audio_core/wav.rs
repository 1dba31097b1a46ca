use std::io::{Cursor, Read, Seek, Write};
use std::path::{Path, PathBuf};

use hound::{SampleFormat, WavSpec};
use thiserror::Error;

use super::SAMPLE_RATE;

#[derive(Debug, Error)]
pub enum WavError {
    #[error("{path}: cannot open: {source}")]
    Open {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: malformed header: {detail}")]
    Malformed { path: PathBuf, detail: String },
    #[error("{path}: unsupported {field} = {value} (expected {expected})")]
    Unsupported {
        path: PathBuf,
        field: &'static str,
        value: String,
        expected: &'static str,
    },
    #[error("{path}: write failed: {detail}")]
    Write { path: PathBuf, detail: String },
}

/// Mono samples with their sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct WavData {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

fn malformed(path: &Path, err: hound::Error) -> WavError {
    match err {
        hound::Error::IoError(e) => WavError::Malformed {
            path: path.to_path_buf(),
            detail: e.to_string(),
        },
        hound::Error::FormatError(msg) => WavError::Malformed {
            path: path.to_path_buf(),
            detail: msg.to_string(),
        },
        hound::Error::Unsupported => WavError::Unsupported {
            path: path.to_path_buf(),
            field: "format tag",
            value: "non-PCM".into(),
            expected: "PCM or IEEE float",
        },
        other => WavError::Malformed {
            path: path.to_path_buf(),
            detail: other.to_string(),
        },
    }
}

fn decode<R: Read>(path: &Path, reader: hound::WavReader<R>) -> Result<WavData, WavError> {
    let spec = reader.spec();
    let unsupported = |field, value: String, expected| WavError::Unsupported {
        path: path.to_path_buf(),
        field,
        value,
        expected,
    };
    if !(1..=2).contains(&spec.channels) {
        return Err(unsupported("channels", spec.channels.to_string(), "1 or 2"));
    }
    if spec.sample_rate == 0 {
        return Err(WavError::Malformed {
            path: path.to_path_buf(),
            detail: "sample_rate = 0".into(),
        });
    }
    let interleaved: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f32 / 32768.0))
            .collect::<Result<_, _>>()
            .map_err(|e| malformed(path, e))?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .collect::<Result<_, _>>()
            .map_err(|e| malformed(path, e))?,
        (fmt, bits) => {
            return Err(unsupported(
                "bits_per_sample",
                format!("{bits} ({fmt:?})"),
                "16-bit int or 32-bit float",
            ))
        }
    };
    let samples = if spec.channels == 2 {
        interleaved
            .chunks_exact(2)
            .map(|c| (c[0] + c[1]) * 0.5)
            .collect()
    } else {
        interleaved
    };
    Ok(WavData {
        samples,
        sample_rate: spec.sample_rate,
    })
}

/// Reads a WAV file at its own sample rate, downmixed to mono.
pub fn read_wav_native(path: impl AsRef<Path>) -> Result<WavData, WavError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| WavError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    let reader =
        hound::WavReader::new(std::io::BufReader::new(file)).map_err(|e| malformed(path, e))?;
    decode(path, reader)
}

/// Reads a WAV file and resamples it to the global rate.
pub fn read_wav(path: impl AsRef<Path>) -> Result<WavData, WavError> {
    let native = read_wav_native(path)?;
    Ok(WavData {
        samples: resample_linear(&native.samples, native.sample_rate, SAMPLE_RATE),
        sample_rate: SAMPLE_RATE,
    })
}

/// Linear-interpolation resampler. Output length is `floor(len * to / from)`.
pub fn resample_linear(samples: &[f32], from: u32, to: u32) -> Vec<f32> {
    if from == to || samples.is_empty() {
        return samples.to_vec();
    }
    let out_len = (samples.len() as u64 * to as u64 / from as u64) as usize;
    let step = from as f64 / to as f64;
    (0..out_len)
        .map(|i| {
            let pos = i as f64 * step;
            let idx = pos.floor() as usize;
            let frac = (pos - idx as f64) as f32;
            let a = samples[idx.min(samples.len() - 1)];
            let b = samples[(idx + 1).min(samples.len() - 1)];
            a + (b - a) * frac
        })
        .collect()
}

fn write_with<W: Write + Seek>(
    writer: W,
    samples: &[f32],
    sample_rate: u32,
    float: bool,
) -> Result<(), hound::Error> {
    let spec = WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: if float { 32 } else { 16 },
        sample_format: if float {
            SampleFormat::Float
        } else {
            SampleFormat::Int
        },
    };
    let mut w = hound::WavWriter::new(writer, spec)?;
    if float {
        for &s in samples {
            w.write_sample(s)?;
        }
    } else {
        for &s in samples {
            let q = (s as f64 * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
            w.write_sample(q)?;
        }
    }
    w.finalize()
}

/// Writes mono 16-bit PCM.
pub fn write_wav(
    path: impl AsRef<Path>,
    samples: &[f32],
    sample_rate: u32,
) -> Result<(), WavError> {
    write_file(path.as_ref(), samples, sample_rate, false)
}

/// Writes mono 32-bit IEEE float, preserving samples bit-for-bit.
pub fn write_wav_f32(
    path: impl AsRef<Path>,
    samples: &[f32],
    sample_rate: u32,
) -> Result<(), WavError> {
    write_file(path.as_ref(), samples, sample_rate, true)
}

fn write_file(path: &Path, samples: &[f32], sample_rate: u32, float: bool) -> Result<(), WavError> {
    let bytes = wav_bytes(samples, sample_rate, float);
    std::fs::write(path, bytes).map_err(|e| WavError::Write {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}

/// In-memory encoding, used for checksums.
pub fn wav_bytes(samples: &[f32], sample_rate: u32, float: bool) -> Vec<u8> {
    let mut cursor = Cursor::new(Vec::new());
    write_with(&mut cursor, samples, sample_rate, float).expect("in-memory wav write");
    cursor.into_inner()
}
