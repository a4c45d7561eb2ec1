//! Classic short-time objective intelligibility.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::audio_io::AudioClip;
use crate::error::{Error, Result};

pub const STOI_RATE_HZ: u32 = 10_000;
const FRAME: usize = 256;
const HOP: usize = FRAME / 2;
const NFFT: usize = 512;
const N_BANDS: usize = 15;
const MIN_FREQ_HZ: f64 = 150.0;
/// Frames per short-time segment (384 ms).
pub const SEGMENT_FRAMES: usize = 30;
const BETA_DB: f64 = -15.0;
const DYN_RANGE_DB: f64 = 40.0;

/// Half-width of the resampling kernel in zero crossings of the output-rate sinc.
const SINC_ZEROS: f64 = 16.0;

/// Band-limited resampling by direct evaluation of a Hann-windowed sinc.
pub fn resample(x: &[f64], from_hz: u32, to_hz: u32) -> Vec<f64> {
    if from_hz == to_hz {
        return x.to_vec();
    }
    let ratio = f64::from(to_hz) / f64::from(from_hz);
    // cutoff relative to the input rate, just under the lower Nyquist
    let cutoff = 0.5 * ratio.min(1.0) * 0.95;
    let half_width = SINC_ZEROS / (2.0 * cutoff);
    let n_out = (x.len() as f64 * ratio).round() as usize;
    (0..n_out)
        .map(|m| {
            let centre = m as f64 / ratio;
            let lo = ((centre - half_width).ceil().max(0.0)) as usize;
            let hi = ((centre + half_width).floor() as usize).min(x.len().saturating_sub(1));
            let mut acc = 0.0;
            for (n, &xn) in x.iter().enumerate().take(hi + 1).skip(lo) {
                let t = n as f64 - centre;
                let arg = 2.0 * cutoff * t;
                let sinc = if arg == 0.0 {
                    1.0
                } else {
                    (std::f64::consts::PI * arg).sin() / (std::f64::consts::PI * arg)
                };
                let w = 0.5 + 0.5 * (std::f64::consts::PI * t / half_width).cos();
                acc += xn * 2.0 * cutoff * sinc * w;
            }
            acc
        })
        .collect()
}

/// Symmetric Hann window without its zero endpoints.
fn window() -> Vec<f64> {
    (1..=FRAME)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (FRAME + 1) as f64).cos())
        .collect()
}

fn frame_starts(len: usize) -> impl Iterator<Item = usize> {
    let n = if len >= FRAME { (len - FRAME) / HOP + 1 } else { 0 };
    (0..n).map(|k| k * HOP)
}

/// Drops frames more than 40 dB below the loudest reference frame and overlap-adds
/// the remaining windowed frames of both signals.
fn remove_silent_frames(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let w = window();
    let starts: Vec<usize> = frame_starts(x.len()).collect();
    let energy: Vec<f64> = starts
        .iter()
        .map(|&s| {
            let e: f64 = (0..FRAME).map(|i| (w[i] * x[s + i]).powi(2)).sum();
            20.0 * (e.sqrt() + f64::EPSILON).log10()
        })
        .collect();
    let max = energy.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let kept: Vec<usize> = starts
        .iter()
        .zip(&energy)
        .filter(|(_, &e)| e > max - DYN_RANGE_DB)
        .map(|(&s, _)| s)
        .collect();
    let out_len = if kept.is_empty() {
        0
    } else {
        (kept.len() - 1) * HOP + FRAME
    };
    let (mut xs, mut ys) = (vec![0.0; out_len], vec![0.0; out_len]);
    for (k, &s) in kept.iter().enumerate() {
        for i in 0..FRAME {
            xs[k * HOP + i] += w[i] * x[s + i];
            ys[k * HOP + i] += w[i] * y[s + i];
        }
    }
    (xs, ys)
}

/// One-third-octave band edges as FFT bin ranges `[lo, hi)`.
fn band_bins() -> Vec<(usize, usize)> {
    let freqs: Vec<f64> = (0..=NFFT / 2)
        .map(|k| k as f64 * f64::from(STOI_RATE_HZ) / NFFT as f64)
        .collect();
    let nearest = |f: f64| {
        freqs
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - f).abs().total_cmp(&(b.1 - f).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    };
    (0..N_BANDS)
        .map(|b| {
            let k = b as f64;
            let lo = MIN_FREQ_HZ * 2f64.powf((2.0 * k - 1.0) / 6.0);
            let hi = MIN_FREQ_HZ * 2f64.powf((2.0 * k + 1.0) / 6.0);
            (nearest(lo), nearest(hi))
        })
        .collect()
}

/// Band envelopes, `[band][frame]`.
fn band_envelopes(x: &[f64], bands: &[(usize, usize)]) -> Vec<Vec<f64>> {
    let w = window();
    let fft = FftPlanner::new().plan_fft_forward(NFFT);
    let mut buf = vec![Complex::new(0.0, 0.0); NFFT];
    let mut env = vec![Vec::new(); bands.len()];
    for s in frame_starts(x.len()) {
        buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
        for i in 0..FRAME {
            buf[i].re = w[i] * x[s + i];
        }
        fft.process(&mut buf);
        for (b, &(lo, hi)) in bands.iter().enumerate() {
            env[b].push(buf[lo..hi].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt());
        }
    }
    env
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut num, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        num += (x - ma) * (y - mb);
        na += (x - ma).powi(2);
        nb += (y - mb).powi(2);
    }
    num / (na.sqrt() * nb.sqrt() + f64::EPSILON)
}

/// Intelligibility of `degraded` relative to `reference`, in `[0, 1]`.
pub fn stoi_value(reference: &AudioClip, degraded: &AudioClip) -> Result<f64> {
    if reference.sample_rate_hz() != degraded.sample_rate_hz() {
        return Err(Error::SampleRateMismatch {
            left: reference.sample_rate_hz(),
            right: degraded.sample_rate_hz(),
        });
    }
    if reference.len() != degraded.len() {
        return Err(Error::LengthMismatch {
            left: reference.len(),
            right: degraded.len(),
        });
    }
    if reference.samples().iter().all(|v| *v == 0.0) {
        return Err(Error::SilentSignal);
    }
    let sr = reference.sample_rate_hz();
    let x = resample(reference.samples(), sr, STOI_RATE_HZ);
    let y = resample(degraded.samples(), sr, STOI_RATE_HZ);
    let (x, y) = remove_silent_frames(&x, &y);

    let bands = band_bins();
    let (ex, ey) = (band_envelopes(&x, &bands), band_envelopes(&y, &bands));
    let n_frames = ex[0].len();
    if n_frames < SEGMENT_FRAMES {
        return Err(Error::SignalTooShort {
            needed: (SEGMENT_FRAMES - 1) * HOP + FRAME,
            got: x.len(),
        });
    }
    let clip = 1.0 + 10f64.powf(-BETA_DB / 20.0);
    let mut total = 0.0;
    let mut count = 0usize;
    for end in SEGMENT_FRAMES..=n_frames {
        let seg = end - SEGMENT_FRAMES..end;
        for b in 0..N_BANDS {
            let xs = &ex[b][seg.clone()];
            let ys = &ey[b][seg.clone()];
            let nx = xs.iter().map(|v| v * v).sum::<f64>().sqrt();
            let ny = ys.iter().map(|v| v * v).sum::<f64>().sqrt();
            let gain = nx / (ny + f64::EPSILON);
            let yc: Vec<f64> = xs.iter().zip(ys).map(|(xv, yv)| (yv * gain).min(xv * clip)).collect();
            total += correlation(xs, &yc);
            count += 1;
        }
    }
    Ok((total / count as f64).clamp(0.0, 1.0))
}
