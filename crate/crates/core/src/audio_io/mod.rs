//! Audio buffers, WAV files and controlled noise injection.

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Mono sample buffer with finite samples.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::InvalidConfig("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidConfig(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate_hz)
    }

    /// Copy of samples `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            samples: self.samples[start..end].to_vec(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    /// Mean power over the whole clip.
    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }
}

/// Sample rate accepted by the analysis pipeline.
pub const PIPELINE_SAMPLE_RATE: u32 = 48_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WavEncoding {
    Pcm16,
    #[default]
    Float32,
}

/// Reads a mono 48 kHz PCM16 or IEEE float WAV file.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let path = path.as_ref();
    let wav_err = |source| Error::Wav {
        path: path.to_path_buf(),
        source,
    };
    let reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(source) => Error::io(path, source),
        other => wav_err(other),
    })?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::WavChannels {
            path: path.to_path_buf(),
            channels: spec.channels,
        });
    }
    if spec.sample_rate != PIPELINE_SAMPLE_RATE {
        return Err(Error::WavSampleRate {
            path: path.to_path_buf(),
            rate: spec.sample_rate,
        });
    }
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(wav_err)?,
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(wav_err)?,
        (format, bits) => {
            return Err(Error::WavEncoding {
                path: path.to_path_buf(),
                detail: format!("{bits}-bit {format:?}"),
            })
        }
    };
    AudioClip::new(samples, spec.sample_rate)
}

/// Writes `clip` as a mono WAV; returns how many PCM16 samples had to be clipped.
pub fn write_wav(path: impl AsRef<Path>, clip: &AudioClip, encoding: WavEncoding) -> Result<usize> {
    let path = path.as_ref();
    let wav_err = |source| match source {
        hound::Error::IoError(source) => Error::io(path, source),
        other => Error::Wav {
            path: path.to_path_buf(),
            source: other,
        },
    };
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate_hz(),
        bits_per_sample: match encoding {
            WavEncoding::Pcm16 => 16,
            WavEncoding::Float32 => 32,
        },
        sample_format: match encoding {
            WavEncoding::Pcm16 => hound::SampleFormat::Int,
            WavEncoding::Float32 => hound::SampleFormat::Float,
        },
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(wav_err)?;
    let mut clipped = 0;
    for &s in clip.samples() {
        match encoding {
            WavEncoding::Pcm16 => {
                if !(-1.0..=1.0).contains(&s) {
                    clipped += 1;
                }
                let v = (s * 32768.0).round();
                writer
                    .write_sample(v.clamp(-32768.0, 32767.0) as i16)
                    .map_err(wav_err)?;
            }
            WavEncoding::Float32 => writer.write_sample(s as f32).map_err(wav_err)?,
        }
    }
    writer.finalize().map_err(wav_err)?;
    if clipped > 0 {
        log::warn!("{}: clipped {clipped} samples", path.display());
    }
    Ok(clipped)
}

/// Adds white Gaussian noise whose power is exactly `power / 10^(snr_db/10)`.
pub fn add_noise_snr(clip: &AudioClip, snr_db: f64, seed: u64) -> Result<AudioClip> {
    let signal_power = clip.power();
    if signal_power <= 0.0 {
        return Err(Error::SilentSignal);
    }
    if !snr_db.is_finite() {
        return Err(Error::InvalidConfig(format!("snr must be finite, got {snr_db}")));
    }
    let mut rng = stream_rng(seed, 0);
    let mut noise: Vec<f64> = (0..clip.len()).map(|_| rng.sample(StandardNormal)).collect();
    let noise_power = noise.iter().map(|v| v * v).sum::<f64>() / noise.len() as f64;
    let gain = (signal_power / 10f64.powf(snr_db / 10.0) / noise_power).sqrt();
    for (n, s) in noise.iter_mut().zip(clip.samples()) {
        *n = s + gain * *n;
    }
    AudioClip::new(noise, clip.sample_rate_hz())
}
