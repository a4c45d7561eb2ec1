//! Parameter-driven synthesis: glottis at the audio rate, tract at twice that.

use serde::{Deserialize, Serialize};

use crate::audio_io::AudioClip;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

use super::glottis::GlottalSource;
use super::params::{NormalizedParams, ParamTrajectory, TractParams};
use super::profile::{map_params_to_diameters, TRACT_SECTIONS};
use super::tract::Tract;

/// Waveguide steps per output sample.
pub const TRACT_OVERSAMPLING: usize = 2;

/// Fixed output gain; mid-range parameters peak near 0.5.
pub(crate) const OUTPUT_GAIN: f64 = 0.45;

const ONSET_S: f64 = 0.010;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub sample_rate_hz: u32,
    pub tract_sections: usize,
    pub control_block_samples: usize,
    pub seed: u64,
    /// Noise stream id; distinct ids give independent noise for the same seed.
    pub instance: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: 48_000,
            tract_sections: TRACT_SECTIONS,
            control_block_samples: 64,
            seed: 0,
            instance: 0,
        }
    }
}

impl SynthConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate_hz == 0 {
            return Err(Error::InvalidConfig("sample rate must be positive".into()));
        }
        if self.tract_sections < 2 {
            return Err(Error::InvalidConfig(format!(
                "tract needs at least 2 sections, got {}",
                self.tract_sections
            )));
        }
        if self.control_block_samples == 0 {
            return Err(Error::InvalidConfig("control block must be non-empty".into()));
        }
        Ok(())
    }

    /// Samples produced for `duration_s` seconds.
    pub fn samples_for(&self, duration_s: f64) -> usize {
        (duration_s * f64::from(self.sample_rate_hz)).round() as usize
    }
}

pub fn synthesize_static(p: &TractParams, duration_s: f64, cfg: &SynthConfig) -> Result<AudioClip> {
    synthesize_trajectory(&ParamTrajectory::constant(*p), duration_s, cfg)
}

pub fn synthesize_trajectory(traj: &ParamTrajectory, duration_s: f64, cfg: &SynthConfig) -> Result<AudioClip> {
    cfg.validate()?;
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "duration must be positive, got {duration_s}"
        )));
    }
    let n_samples = cfg.samples_for(duration_s);
    let sr = f64::from(cfg.sample_rate_hz);

    let first = traj.normalized_at(0.0);
    let p0 = first.denormalize();
    let mut tract = Tract::new(&map_params_to_diameters(&p0).resampled(cfg.tract_sections));
    let mut glottis = GlottalSource::new(sr, p0.pitch_hz(), p0.voiceness(), stream_rng(cfg.seed, cfg.instance));
    let mut current: NormalizedParams = first;

    let mut out = Vec::with_capacity(n_samples);
    let mut block_start = 0;
    while block_start < n_samples {
        let x = traj.normalized_at(block_start as f64 / sr);
        if x != current {
            let p = x.denormalize();
            tract.set_profile(&map_params_to_diameters(&p).resampled(cfg.tract_sections));
            glottis.set_controls(p.pitch_hz(), p.voiceness());
            current = x;
        }
        let block_end = (block_start + cfg.control_block_samples).min(n_samples);
        for _ in block_start..block_end {
            let excitation = glottis.next_sample();
            let mut acc = 0.0;
            for _ in 0..TRACT_OVERSAMPLING {
                acc += tract.step(excitation);
            }
            out.push(acc / TRACT_OVERSAMPLING as f64);
        }
        block_start = block_end;
    }

    let onset = ((ONSET_S * sr).round() as usize).max(1);
    for (i, s) in out.iter_mut().enumerate() {
        let fade = if i < onset {
            0.5 * (1.0 - (std::f64::consts::PI * i as f64 / onset as f64).cos())
        } else {
            1.0
        };
        *s = (*s * OUTPUT_GAIN * fade).clamp(-1.0, 1.0);
    }
    AudioClip::new(out, cfg.sample_rate_hz)
}
