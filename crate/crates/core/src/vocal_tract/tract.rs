//! Kelly-Lochbaum scattering chain.

use std::f64::consts::PI;

use super::profile::DiameterProfile;

pub const GLOTTAL_REFLECTION: f64 = 0.75;
pub const LIP_REFLECTION: f64 = -0.85;
const DAMPING: f64 = 0.999;

/// Chain of cylindrical sections with right- and left-going pressure waves.
///
/// Each call to [`Tract::step`] advances every wave by one section.
#[derive(Debug, Clone)]
pub struct Tract {
    right: Vec<f64>,
    left: Vec<f64>,
    right_next: Vec<f64>,
    left_next: Vec<f64>,
    /// `reflection[i]` scatters between sections `i - 1` and `i`; index 0 unused.
    reflection: Vec<f64>,
}

impl Tract {
    pub fn new(profile: &DiameterProfile) -> Self {
        let n = profile.len();
        let mut tract = Self {
            right: vec![0.0; n],
            left: vec![0.0; n],
            right_next: vec![0.0; n],
            left_next: vec![0.0; n],
            reflection: vec![0.0; n],
        };
        tract.set_profile(profile);
        tract
    }

    pub fn sections(&self) -> usize {
        self.right.len()
    }

    /// Recomputes junction reflections; the wave state is kept.
    pub fn set_profile(&mut self, profile: &DiameterProfile) {
        assert_eq!(profile.len(), self.sections(), "profile length changed");
        let d = profile.diameters();
        let area = |x: f64| PI * (x / 2.0) * (x / 2.0);
        for i in 1..d.len() {
            let (a0, a1) = (area(d[i - 1]), area(d[i]));
            let sum = a0 + a1;
            self.reflection[i] = if sum > 0.0 { (a0 - a1) / sum } else { 0.0 };
        }
    }

    pub fn reflections(&self) -> &[f64] {
        &self.reflection[1..]
    }

    /// Injects `input` at the glottis and returns the wave arriving at the lips.
    #[inline]
    pub fn step(&mut self, input: f64) -> f64 {
        let n = self.right.len();
        let (r, l) = (&self.right, &self.left);
        let (rn, ln) = (&mut self.right_next, &mut self.left_next);

        rn[0] = (l[0] * GLOTTAL_REFLECTION + input) * DAMPING;
        ln[n - 1] = r[n - 1] * LIP_REFLECTION * DAMPING;

        let k = &self.reflection[1..n];
        let r_prev = &r[..n - 1];
        let l_here = &l[1..n];
        let (_, rn_tail) = rn.split_at_mut(1);
        let ln_head = &mut ln[..n - 1];
        for ((((out_r, out_l), &k), &rp), &lh) in rn_tail
            .iter_mut()
            .zip(ln_head.iter_mut())
            .zip(k)
            .zip(r_prev)
            .zip(l_here)
        {
            let w = k * (rp + lh);
            *out_r = (rp - w) * DAMPING;
            *out_l = (lh + w) * DAMPING;
        }

        std::mem::swap(&mut self.right, &mut self.right_next);
        std::mem::swap(&mut self.left, &mut self.left_next);
        self.right[n - 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_tube_has_no_internal_reflection() {
        let t = Tract::new(&DiameterProfile::uniform(44, 1.5).unwrap());
        assert!(t.reflections().iter().all(|&k| k == 0.0));
    }

    #[test]
    fn reflections_are_strictly_inside_unit_interval() {
        let p = DiameterProfile::new((0..44).map(|i| 0.3 + (i % 7) as f64 * 0.4).collect()).unwrap();
        let t = Tract::new(&p);
        assert!(t.reflections().iter().all(|k| k.abs() < 1.0));
    }

    #[test]
    fn impulse_takes_one_step_per_section() {
        let mut t = Tract::new(&DiameterProfile::uniform(10, 1.0).unwrap());
        let mut out = vec![t.step(1.0)];
        out.extend((0..30).map(|_| t.step(0.0)));
        let first = out.iter().position(|v| v.abs() > 0.0).unwrap();
        assert_eq!(first, 9);
        // round trip of 2N steps, sign flipped by the lip/glottis product
        let echo = out[first + 20];
        assert!(echo < 0.0);
        assert!(out[first + 1..first + 20].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn impulse_response_decays() {
        let p = DiameterProfile::new((0..44).map(|i| 0.5 + (i as f64 * 0.37).sin().abs()).collect()).unwrap();
        let mut t = Tract::new(&p);
        t.step(1.0);
        let tail: f64 = (0..200_000)
            .map(|_| t.step(0.0).abs())
            .skip(190_000)
            .fold(0.0, f64::max);
        assert!(tail < 1e-6, "{tail}");
    }
}
