//! Mel filterbank and cepstral coefficients.
//!
//! The filterbank uses the Slaney mel scale (linear below 1 kHz, logarithmic above)
//! with area-normalized triangles, the usual default of audio analysis libraries.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

pub const N_MELS: usize = 128;
pub const MEL_FMAX_HZ: f64 = 8000.0;
pub const N_MFCC: usize = 20;
pub const LOG_FLOOR: f64 = 1e-10;

type Cache<K, V> = OnceLock<Mutex<HashMap<K, Arc<V>>>>;

const F_SP: f64 = 200.0 / 3.0;
const MIN_LOG_HZ: f64 = 1000.0;
const MIN_LOG_MEL: f64 = MIN_LOG_HZ / F_SP;

fn log_step() -> f64 {
    6.4f64.ln() / 27.0
}

pub fn hz_to_mel(hz: f64) -> f64 {
    if hz >= MIN_LOG_HZ {
        MIN_LOG_MEL + (hz / MIN_LOG_HZ).ln() / log_step()
    } else {
        hz / F_SP
    }
}

pub fn mel_to_hz(mel: f64) -> f64 {
    if mel >= MIN_LOG_MEL {
        MIN_LOG_HZ * (log_step() * (mel - MIN_LOG_MEL)).exp()
    } else {
        mel * F_SP
    }
}

/// One triangular filter stored sparsely from its first non-zero bin.
#[derive(Debug, Clone)]
pub struct MelFilter {
    pub first_bin: usize,
    pub weights: Vec<f64>,
    /// Edge frequencies of the triangle (left foot, right foot).
    pub support_hz: (f64, f64),
}

impl MelFilter {
    pub fn apply(&self, spectrum: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(&spectrum[self.first_bin..])
            .map(|(w, s)| w * s)
            .sum()
    }

    pub fn weight(&self, bin: usize) -> f64 {
        bin.checked_sub(self.first_bin)
            .and_then(|i| self.weights.get(i))
            .copied()
            .unwrap_or(0.0)
    }
}

/// Triangular filters on `n_fft/2 + 1` bins between `fmin` and `fmax`.
pub fn mel_filterbank(n_fft: usize, sample_rate: f64, n_mels: usize, fmin: f64, fmax: f64) -> Vec<MelFilter> {
    let bins = n_fft / 2 + 1;
    let bin_hz = sample_rate / n_fft as f64;
    let (mlo, mhi) = (hz_to_mel(fmin), hz_to_mel(fmax));
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mlo + (mhi - mlo) * i as f64 / (n_mels + 1) as f64))
        .collect();

    (0..n_mels)
        .map(|m| {
            let (left, centre, right) = (edges[m], edges[m + 1], edges[m + 2]);
            let norm = 2.0 / (right - left);
            let dense: Vec<f64> = (0..bins)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    let lower = (f - left) / (centre - left);
                    let upper = (right - f) / (right - centre);
                    lower.min(upper).max(0.0) * norm
                })
                .collect();
            let first = dense.iter().position(|w| *w > 0.0).unwrap_or(0);
            let last = dense.iter().rposition(|w| *w > 0.0).map_or(first, |l| l + 1);
            MelFilter {
                first_bin: first,
                weights: dense[first..last.max(first)].to_vec(),
                support_hz: (left, right),
            }
        })
        .collect()
}

pub(crate) fn cached_filterbank(n_fft: usize, sample_rate: u32) -> Arc<Vec<MelFilter>> {
    static BANKS: Cache<(usize, u32), Vec<MelFilter>> = OnceLock::new();
    let mut banks = BANKS.get_or_init(Default::default).lock().unwrap();
    banks
        .entry((n_fft, sample_rate))
        .or_insert_with(|| {
            Arc::new(mel_filterbank(
                n_fft,
                f64::from(sample_rate),
                N_MELS,
                0.0,
                MEL_FMAX_HZ.min(f64::from(sample_rate) / 2.0),
            ))
        })
        .clone()
}

/// Orthonormal DCT-II basis, `n_out x n_in`, row-major.
pub fn dct2_basis(n_in: usize, n_out: usize) -> Vec<f64> {
    let n = n_in as f64;
    let mut basis = Vec::with_capacity(n_in * n_out);
    for k in 0..n_out {
        let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
        for i in 0..n_in {
            basis.push(scale * (std::f64::consts::PI * k as f64 * (2 * i + 1) as f64 / (2.0 * n)).cos());
        }
    }
    basis
}

pub(crate) fn cached_dct(n_in: usize, n_out: usize) -> Arc<Vec<f64>> {
    static DCTS: Cache<(usize, usize), Vec<f64>> = OnceLock::new();
    let mut dcts = DCTS.get_or_init(Default::default).lock().unwrap();
    dcts.entry((n_in, n_out))
        .or_insert_with(|| Arc::new(dct2_basis(n_in, n_out)))
        .clone()
}

/// First `n_out` orthonormal DCT-II coefficients of `input`.
pub fn dct2_ortho(input: &[f64], n_out: usize) -> Vec<f64> {
    let basis = cached_dct(input.len(), n_out);
    basis
        .chunks_exact(input.len())
        .map(|row| row.iter().zip(input).map(|(b, x)| b * x).sum())
        .collect()
}
