//! Glottal excitation: LF flow-derivative pulses plus gated aspiration noise.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Aspiration noise gain at zero voiceness.
const ASPIRATION_GAIN: f64 = 0.2;
const ASPIRATION_CUTOFF_HZ: f64 = 1000.0;

/// One period of the normalized LF waveform (period 1, negative peak -1).
#[derive(Debug, Clone, Copy)]
pub(crate) struct LfPulse {
    alpha: f64,
    e0: f64,
    epsilon: f64,
    shift: f64,
    delta: f64,
    te: f64,
    omega: f64,
}

impl LfPulse {
    /// Shape from the tenseness-like `voiceness` control via Rd = 3 (1 - voiceness).
    pub(crate) fn from_voiceness(voiceness: f64) -> Self {
        let rd = (3.0 * (1.0 - voiceness)).clamp(0.5, 2.7);
        Self::from_rd(rd)
    }

    pub(crate) fn from_rd(rd: f64) -> Self {
        let ra = -0.01 + 0.048 * rd;
        let rk = 0.224 + 0.118 * rd;
        let rg = (rk / 4.0) * (0.5 + 1.2 * rk) / (0.11 * rd - ra * (0.5 + 1.2 * rk));

        let ta = ra;
        let tp = 1.0 / (2.0 * rg);
        let te = tp + tp * rk;

        let epsilon = 1.0 / ta;
        let shift = (-epsilon * (1.0 - te)).exp();
        let delta = 1.0 - shift;

        // Return-phase area, then the open-phase amplitude that cancels it so the
        // flow returns to zero over one period.
        let rhs_integral = ((1.0 / epsilon) * (shift - 1.0) + (1.0 - te) * shift) / delta;
        let lower_integral = -(te - tp) / 2.0 + rhs_integral;
        let upper_integral = -lower_integral;

        let omega = PI / tp;
        let s = (omega * te).sin();
        let y = -PI * s * upper_integral / (tp * 2.0);
        let alpha = y.ln() / (tp / 2.0 - te);
        let e0 = -1.0 / (s * (alpha * te).exp());

        Self {
            alpha,
            e0,
            epsilon,
            shift,
            delta,
            te,
            omega,
        }
    }

    /// Open-phase end as a fraction of the period.
    pub(crate) fn open_fraction(&self) -> f64 {
        self.te
    }

    /// Waveform at normalized time `t` in `[0, 1)`.
    pub(crate) fn eval(&self, t: f64) -> f64 {
        if t > self.te {
            (-(-self.epsilon * (t - self.te)).exp() + self.shift) / self.delta
        } else {
            self.e0 * (self.alpha * t).exp() * (self.omega * t).sin()
        }
    }
}

fn voice_gain(voiceness: f64) -> f64 {
    voiceness.powf(0.25)
}

fn noise_gain(voiceness: f64) -> f64 {
    ASPIRATION_GAIN * (1.0 - voiceness)
}

/// Stateful glottal oscillator running at the audio rate.
pub struct GlottalSource {
    sample_rate: f64,
    phase: f64,
    pitch_hz: f64,
    voiceness: f64,
    pulse: LfPulse,
    shape_voiceness: f64,
    lp_state: f64,
    lp_coeff: f64,
    lp_norm: f64,
    rng: ChaCha8Rng,
}

impl GlottalSource {
    pub fn new(sample_rate: f64, pitch_hz: f64, voiceness: f64, rng: ChaCha8Rng) -> Self {
        let lp_coeff = 1.0 - (-2.0 * PI * ASPIRATION_CUTOFF_HZ / sample_rate).exp();
        Self {
            sample_rate,
            phase: 0.0,
            pitch_hz,
            voiceness,
            pulse: LfPulse::from_voiceness(voiceness),
            shape_voiceness: voiceness,
            lp_state: 0.0,
            lp_coeff,
            // unit variance after the one-pole low-pass
            lp_norm: ((2.0 - lp_coeff) / lp_coeff).sqrt(),
            rng,
        }
    }

    /// Pitch and gains follow immediately; the pulse shape is refreshed at the next
    /// period boundary.
    pub fn set_controls(&mut self, pitch_hz: f64, voiceness: f64) {
        self.pitch_hz = pitch_hz;
        self.voiceness = voiceness;
    }

    pub fn next_sample(&mut self) -> f64 {
        let t = self.phase;
        let voiced = self.pulse.eval(t) * voice_gain(self.voiceness);

        let white: f64 = self.rng.sample(StandardNormal);
        self.lp_state += self.lp_coeff * (white - self.lp_state);
        let gate = if t < self.pulse.open_fraction() { 1.0 } else { 0.0 };
        let aspiration = noise_gain(self.voiceness) * gate * self.lp_state * self.lp_norm;

        self.phase += self.pitch_hz / self.sample_rate;
        if self.phase >= 1.0 {
            self.phase -= 1.0;
            if self.shape_voiceness != self.voiceness {
                self.pulse = LfPulse::from_voiceness(self.voiceness);
                self.shape_voiceness = self.voiceness;
            }
        }
        voiced + aspiration
    }
}

/// Raw glottal excitation for a constant pitch and voiceness.
pub fn glottal_source(pitch_hz: f64, voiceness: f64, n_samples: usize, sample_rate: f64, rng: ChaCha8Rng) -> Vec<f64> {
    let mut src = GlottalSource::new(sample_rate, pitch_hz, voiceness, rng);
    (0..n_samples).map(|_| src.next_sample()).collect()
}
