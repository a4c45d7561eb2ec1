use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

struct Plan {
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
}

fn plan(size: usize) -> Arc<Plan> {
    static PLANS: OnceLock<Mutex<HashMap<usize, Arc<Plan>>>> = OnceLock::new();
    let mut plans = PLANS.get_or_init(Default::default).lock().unwrap();
    plans
        .entry(size)
        .or_insert_with(|| {
            Arc::new(Plan {
                fft: FftPlanner::new().plan_fft_forward(size),
                window: hann(size),
            })
        })
        .clone()
}

/// Periodic Hann window.
pub fn hann(size: usize) -> Vec<f64> {
    (0..size)
        .map(|n| 0.5 * (1.0 - (2.0 * PI * n as f64 / size as f64).cos()))
        .collect()
}

/// Frames of length `window` at stride `hop` that fit without padding.
pub fn frame_count(len: usize, window: usize, hop: usize) -> usize {
    if len < window {
        0
    } else {
        (len - window) / hop + 1
    }
}

/// Hann-windowed magnitude spectrogram, row-major `frames x (window/2 + 1)`.
pub(crate) fn magnitude_frames(samples: &[f64], window: usize, hop: usize) -> Result<(Vec<f64>, usize)> {
    if samples.len() < window {
        return Err(Error::SignalTooShort {
            needed: window,
            got: samples.len(),
        });
    }
    let frames = frame_count(samples.len(), window, hop);
    let bins = window / 2 + 1;
    let plan = plan(window);
    let mut out = Vec::with_capacity(frames * bins);
    let mut buf = vec![Complex::new(0.0, 0.0); window];
    let mut scratch = vec![Complex::new(0.0, 0.0); plan.fft.get_inplace_scratch_len()];
    for f in 0..frames {
        let start = f * hop;
        for ((b, &s), &w) in buf.iter_mut().zip(&samples[start..start + window]).zip(&plan.window) {
            *b = Complex::new(s * w, 0.0);
        }
        plan.fft.process_with_scratch(&mut buf, &mut scratch);
        out.extend(buf[..bins].iter().map(|c| c.norm()));
    }
    Ok((out, frames))
}
