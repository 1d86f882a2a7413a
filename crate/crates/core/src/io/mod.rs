//! Byte-level output formats shared by the command line and the HTTP service.
//!
//! Both front ends call these functions, which is what keeps their CSV and
//! WAV outputs byte-identical.

use std::fmt::Write as _;
use std::io::Cursor;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acoustics::{Resonance, Spectrum};

pub const DEFAULT_SAMPLE_RATE: u32 = 44_100;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("wav: {0}")]
    Wav(#[from] hound::Error),
    #[error("unsupported wav layout: {0}")]
    UnsupportedWav(String),
}

/// Mono sampled signal, nominally in [-1, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    pub sample_rate_hz: u32,
    pub samples: Vec<f64>,
}

impl Waveform {
    pub fn new(sample_rate_hz: u32, samples: Vec<f64>) -> Self {
        Self {
            sample_rate_hz,
            samples,
        }
    }

    pub fn silent(sample_rate_hz: u32, len: usize) -> Self {
        Self {
            sample_rate_hz,
            samples: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        (self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64).sqrt()
    }
}

/// RIFF WAV, PCM16 mono. Samples are clipped to [-1, 1] and rounded.
pub fn wav_bytes(w: &Waveform) -> Vec<u8> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: w.sample_rate_hz,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut buf = Cursor::new(Vec::with_capacity(44 + 2 * w.samples.len()));
    {
        let mut writer = hound::WavWriter::new(&mut buf, spec).expect("in-memory wav header");
        for &s in &w.samples {
            let q = (s.clamp(-1.0, 1.0) * i16::MAX as f64).round() as i16;
            writer.write_sample(q).expect("in-memory wav write");
        }
        writer.finalize().expect("in-memory wav finalize");
    }
    buf.into_inner()
}

/// Reads a PCM16 mono WAV back to samples in [-1, 1].
pub fn read_wav(bytes: &[u8]) -> Result<Waveform, IoError> {
    let mut reader = hound::WavReader::new(Cursor::new(bytes))?;
    let spec = reader.spec();
    if spec.channels != 1
        || spec.bits_per_sample != 16
        || spec.sample_format != hound::SampleFormat::Int
    {
        return Err(IoError::UnsupportedWav(format!(
            "{} channels, {} bits, {:?}",
            spec.channels, spec.bits_per_sample, spec.sample_format
        )));
    }
    let samples = reader
        .samples::<i16>()
        .map(|s| s.map(|v| v as f64 / i16::MAX as f64))
        .collect::<Result<_, _>>()?;
    Ok(Waveform::new(spec.sample_rate, samples))
}

/// `frequency_hz,value` rows with shortest round-trip decimals and LF endings.
pub fn spectrum_csv(s: &Spectrum) -> String {
    let mut out = String::with_capacity(40 * s.values.len());
    out.push_str("frequency_hz,value\n");
    for (f, v) in s.frequencies().iter().zip(&s.values) {
        let _ = writeln!(out, "{f},{v}");
    }
    out
}

pub fn resonances_csv(r: &[Resonance]) -> String {
    let mut out = String::from("frequency_hz,prominence\n");
    for x in r {
        let _ = writeln!(out, "{},{}", x.frequency_hz, x.prominence);
    }
    out
}
