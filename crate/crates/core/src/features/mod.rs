//! Spectral representations and the MAE objective.
//!
//! | kind       | window(s)                    | hop        | bins per frame |
//! |------------|------------------------------|------------|----------------|
//! | STFT       | 1024                         | 512        | 513            |
//! | MultiScale | 64, 128, 256, 512, 1024      | window / 4 | window/2 + 1   |
//! | Mel        | 1024                         | 512        | 128            |
//! | MFCC       | 1024                         | 512        | 20             |
//!
//! All transforms use a periodic Hann window, drop trailing partial frames and work
//! on linear magnitudes; only the MFCC takes a logarithm.

mod mel;
mod stft;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::audio_io::AudioClip;
use crate::error::{Error, Result};

pub use mel::{
    dct2_basis, dct2_ortho, hz_to_mel, mel_filterbank, mel_to_hz, MelFilter, LOG_FLOOR, MEL_FMAX_HZ, N_MELS, N_MFCC,
};
pub use stft::{frame_count, hann};

pub const STFT_WINDOW: usize = 1024;
pub const STFT_HOP: usize = 512;
pub const MULTISCALE_WINDOWS: [usize; 5] = [64, 128, 256, 512, 1024];

/// Which representation the objective compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReprKind {
    Stft,
    #[serde(rename = "multiscale")]
    MultiScale,
    Mel,
    Mfcc,
}

impl ReprKind {
    pub const ALL: [ReprKind; 4] = [ReprKind::Stft, ReprKind::MultiScale, ReprKind::Mel, ReprKind::Mfcc];

    pub fn name(self) -> &'static str {
        match self {
            ReprKind::Stft => "stft",
            ReprKind::MultiScale => "multiscale",
            ReprKind::Mel => "mel",
            ReprKind::Mfcc => "mfcc",
        }
    }

    /// Length of the flattened feature vector for a clip of `len` samples.
    pub fn feature_len(self, len: usize) -> usize {
        match self {
            ReprKind::Stft => frame_count(len, STFT_WINDOW, STFT_HOP) * (STFT_WINDOW / 2 + 1),
            ReprKind::MultiScale => MULTISCALE_WINDOWS
                .iter()
                .map(|&w| frame_count(len, w, w / 4) * (w / 2 + 1))
                .sum(),
            ReprKind::Mel => frame_count(len, STFT_WINDOW, STFT_HOP) * N_MELS,
            ReprKind::Mfcc => frame_count(len, STFT_WINDOW, STFT_HOP) * N_MFCC,
        }
    }
}

impl fmt::Display for ReprKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReprKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ReprKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown representation `{s}`")))
    }
}

/// Row-major `frames x bins` feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub kind: ReprKind,
    pub frames: usize,
    pub bins: usize,
    pub values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn frame(&self, i: usize) -> &[f64] {
        &self.values[i * self.bins..(i + 1) * self.bins]
    }
}

pub fn stft_mag(clip: &AudioClip) -> Result<FeatureMatrix> {
    let (values, frames) = stft::magnitude_frames(clip.samples(), STFT_WINDOW, STFT_HOP)?;
    Ok(FeatureMatrix {
        kind: ReprKind::Stft,
        frames,
        bins: STFT_WINDOW / 2 + 1,
        values,
    })
}

pub fn multiscale_mag(clip: &AudioClip) -> Result<Vec<FeatureMatrix>> {
    if clip.len() < STFT_WINDOW {
        return Err(Error::SignalTooShort {
            needed: STFT_WINDOW,
            got: clip.len(),
        });
    }
    MULTISCALE_WINDOWS
        .iter()
        .map(|&w| {
            let (values, frames) = stft::magnitude_frames(clip.samples(), w, w / 4)?;
            Ok(FeatureMatrix {
                kind: ReprKind::MultiScale,
                frames,
                bins: w / 2 + 1,
                values,
            })
        })
        .collect()
}

fn mel_from_stft(spec: &FeatureMatrix, sample_rate: u32) -> FeatureMatrix {
    let bank = mel::cached_filterbank(STFT_WINDOW, sample_rate);
    let mut values = Vec::with_capacity(spec.frames * N_MELS);
    for f in 0..spec.frames {
        let frame = spec.frame(f);
        values.extend(bank.iter().map(|filter| filter.apply(frame)));
    }
    FeatureMatrix {
        kind: ReprKind::Mel,
        frames: spec.frames,
        bins: N_MELS,
        values,
    }
}

pub fn mel_spec(clip: &AudioClip) -> Result<FeatureMatrix> {
    Ok(mel_from_stft(&stft_mag(clip)?, clip.sample_rate_hz()))
}

/// Cepstral coefficients of a mel matrix.
pub fn mfcc_from_mel(mel: &FeatureMatrix) -> FeatureMatrix {
    let mut values = Vec::with_capacity(mel.frames * N_MFCC);
    let mut logs = vec![0.0; mel.bins];
    for f in 0..mel.frames {
        for (l, &m) in logs.iter_mut().zip(mel.frame(f)) {
            *l = m.max(LOG_FLOOR).ln();
        }
        values.extend(dct2_ortho(&logs, N_MFCC));
    }
    FeatureMatrix {
        kind: ReprKind::Mfcc,
        frames: mel.frames,
        bins: N_MFCC,
        values,
    }
}

pub fn mfcc(clip: &AudioClip) -> Result<FeatureMatrix> {
    Ok(mfcc_from_mel(&mel_spec(clip)?))
}

/// Flattened features of `kind`; multiscale matrices are concatenated finest first.
pub fn extract(kind: ReprKind, clip: &AudioClip) -> Result<Vec<f64>> {
    Ok(match kind {
        ReprKind::Stft => stft_mag(clip)?.values,
        ReprKind::MultiScale => multiscale_mag(clip)?.into_iter().flat_map(|m| m.values).collect(),
        ReprKind::Mel => mel_spec(clip)?.values,
        ReprKind::Mfcc => mfcc(clip)?.values,
    })
}

/// Mean absolute error between two equal-length feature vectors.
pub fn mae(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::InvalidConfig("mae of empty vectors".into()));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}
