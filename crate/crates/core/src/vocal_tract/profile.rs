//! Mapping from articulatory controls to per-section tract diameters.

use std::f64::consts::PI;

use crate::error::{Error, Result};

use super::params::TractParams;

/// Sections in the parameter-driven tract, glottis (0) to lips (43).
pub const TRACT_SECTIONS: usize = 44;

const PHARYNX: std::ops::RangeInclusive<usize> = 7..=11;
const GLOTTAL_RAMP_END: usize = 6;
const ORAL_REST_CM: f64 = 1.5;
const PHARYNX_REST_CM: f64 = 1.1;
const GLOTTAL_REST_CM: f64 = 0.6;
const BLADE_START: usize = 10;
const LIP_START: usize = 39;
const TONGUE_SPAN: f64 = 22.0;
const LIP_SECTIONS: usize = 2;
const CONSTRICTION_HALF_WIDTH: f64 = 4.0;

/// Tongue bump depth per cm below the maximum tongue diameter.
const TONGUE_DEPTH_PER_CM: f64 = 0.8;

/// Per-section tract diameters in cm, glottis first.
#[derive(Debug, Clone, PartialEq)]
pub struct DiameterProfile {
    diameters: Vec<f64>,
}

impl DiameterProfile {
    pub fn new(diameters: Vec<f64>) -> Result<Self> {
        if diameters.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "a tract needs at least 2 sections, got {}",
                diameters.len()
            )));
        }
        if let Some(bad) = diameters.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return Err(Error::InvalidConfig(format!("invalid section diameter {bad}")));
        }
        Ok(Self { diameters })
    }

    /// Constant-diameter tube.
    pub fn uniform(sections: usize, diameter_cm: f64) -> Result<Self> {
        Self::new(vec![diameter_cm; sections])
    }

    /// Neutral tract with no articulator edits.
    pub fn rest() -> Self {
        let mut d = vec![ORAL_REST_CM; TRACT_SECTIONS];
        for (i, v) in d.iter_mut().enumerate().take(GLOTTAL_RAMP_END + 1) {
            let t = i as f64 / GLOTTAL_RAMP_END as f64;
            *v = GLOTTAL_REST_CM + (PHARYNX_REST_CM - GLOTTAL_REST_CM) * t;
        }
        for i in PHARYNX {
            d[i] = PHARYNX_REST_CM;
        }
        Self { diameters: d }
    }

    pub fn diameters(&self) -> &[f64] {
        &self.diameters
    }

    pub fn len(&self) -> usize {
        self.diameters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diameters.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.diameters.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Linearly resamples the profile onto `sections` sections.
    pub fn resampled(&self, sections: usize) -> Self {
        if sections == self.len() {
            return self.clone();
        }
        let n = self.len();
        let d = (0..sections)
            .map(|j| {
                let pos = j as f64 * (n - 1) as f64 / (sections - 1).max(1) as f64;
                let i = (pos.floor() as usize).min(n - 2);
                let f = pos - i as f64;
                self.diameters[i] * (1.0 - f) + self.diameters[i + 1] * f
            })
            .collect();
        Self { diameters: d }
    }
}

/// Tongue contribution at section `i`; `None` outside the blade region.
fn tongue_diameter(p: &TractParams, i: usize) -> Option<f64> {
    if !(BLADE_START..LIP_START).contains(&i) {
        return None;
    }
    let phase = 1.1 * PI * (p.tongue_index() - i as f64) / TONGUE_SPAN;
    let shape = if phase.abs() > PI / 2.0 { 0.0 } else { phase.cos() };
    let (_, max_cm) = super::params::Param::TongueDiameter.bounds();
    let effective = ORAL_REST_CM - TONGUE_DEPTH_PER_CM * (max_cm - p.tongue_diameter_cm());
    Some(ORAL_REST_CM - (ORAL_REST_CM - effective) * shape)
}

/// Diameter the constriction narrows towards; reaches the oral rest diameter at the
/// upper bound of the control so that a maximal constriction diameter is a no-op.
fn constriction_floor(p: &TractParams) -> f64 {
    let (lo, hi) = super::params::Param::ConstrictionDiameter.bounds();
    let t = (p.constriction_diameter_cm() - lo) / (hi - lo);
    lo + (ORAL_REST_CM - lo) * t
}

pub fn map_params_to_diameters(p: &TractParams) -> DiameterProfile {
    let mut profile = DiameterProfile::rest();
    let d = &mut profile.diameters;

    for i in PHARYNX {
        d[i] *= p.throat_diameter_cm() / 1.0;
    }

    for (i, v) in d.iter_mut().enumerate() {
        if let Some(t) = tongue_diameter(p, i) {
            *v = v.min(t);
        }
    }

    let floor = constriction_floor(p);
    for (i, v) in d.iter_mut().enumerate() {
        let rel = (i as f64 - p.constriction_index()).abs();
        if rel >= CONSTRICTION_HALF_WIDTH || floor >= *v {
            continue;
        }
        let w = 0.5 * (1.0 + (PI * rel / CONSTRICTION_HALF_WIDTH).cos());
        *v = (1.0 - w) * *v + w * floor;
    }

    for v in d.iter_mut().skip(TRACT_SECTIONS - LIP_SECTIONS) {
        *v = p.lips_diameter_cm();
    }
    profile
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocal_tract::params::{NormalizedParams, Param};
    use proptest::prelude::*;

    fn params_with(pairs: &[(Param, f64)]) -> TractParams {
        pairs
            .iter()
            .fold(TractParams::midpoint(), |p, &(k, v)| p.with(k, v).unwrap())
    }

    #[test]
    fn rest_profile_shape() {
        let r = DiameterProfile::rest();
        assert_eq!(r.len(), TRACT_SECTIONS);
        assert_eq!(r.diameters()[0], 0.6);
        assert!((r.diameters()[6] - 1.1).abs() < 1e-12);
        assert_eq!(r.diameters()[9], 1.1);
        assert_eq!(r.diameters()[12], 1.5);
    }

    #[test]
    fn maximal_tongue_and_constriction_leave_rest_profile() {
        let p = params_with(&[
            (Param::TongueDiameter, 3.0),
            (Param::ConstrictionDiameter, 1.2),
            (Param::ThroatDiameter, 1.0),
        ]);
        let got = map_params_to_diameters(&p);
        let rest = DiameterProfile::rest();
        for i in 0..TRACT_SECTIONS - LIP_SECTIONS {
            assert_eq!(got.diameters()[i], rest.diameters()[i], "section {i}");
        }
    }

    #[test]
    fn tight_constriction_reaches_floor() {
        let p = params_with(&[(Param::ConstrictionIndex, 27.0), (Param::ConstrictionDiameter, 0.6)]);
        let d = map_params_to_diameters(&p);
        let min = d.diameters()[25..=29].iter().copied().fold(f64::INFINITY, f64::min);
        assert!(min <= 0.6, "min {min}");
    }

    #[test]
    fn lips_and_throat_applied() {
        let p = params_with(&[(Param::LipsDiameter, 0.7), (Param::ThroatDiameter, 0.5)]);
        let d = map_params_to_diameters(&p);
        assert_eq!(d.diameters()[42], 0.7);
        assert_eq!(d.diameters()[43], 0.7);
        assert!((d.diameters()[8] - 0.55).abs() < 1e-12);
    }

    #[test]
    fn mapping_is_deterministic() {
        let p = params_with(&[(Param::TongueIndex, 17.3), (Param::TongueDiameter, 1.9)]);
        let a = map_params_to_diameters(&p);
        let b = map_params_to_diameters(&p);
        assert!(a
            .diameters()
            .iter()
            .zip(b.diameters())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn resample_keeps_endpoints() {
        let r = DiameterProfile::rest().resampled(12);
        assert_eq!(r.len(), 12);
        assert_eq!(r.diameters()[0], 0.6);
        assert_eq!(r.diameters()[11], 1.5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn never_negative(x in prop::array::uniform8(0.0f64..=1.0)) {
            let p = NormalizedParams::new(x).unwrap().denormalize();
            let d = map_params_to_diameters(&p);
            prop_assert_eq!(d.len(), TRACT_SECTIONS);
            prop_assert!(d.min() > 0.0);
        }
    }
}
