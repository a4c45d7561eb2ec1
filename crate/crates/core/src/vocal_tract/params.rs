use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of articulatory controls.
pub const N_PARAMS: usize = 8;

/// One of the eight articulatory controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    Pitch,
    Voiceness,
    TongueIndex,
    TongueDiameter,
    LipsDiameter,
    ConstrictionIndex,
    ConstrictionDiameter,
    ThroatDiameter,
}

impl Param {
    pub const ALL: [Param; N_PARAMS] = [
        Param::Pitch,
        Param::Voiceness,
        Param::TongueIndex,
        Param::TongueDiameter,
        Param::LipsDiameter,
        Param::ConstrictionIndex,
        Param::ConstrictionDiameter,
        Param::ThroatDiameter,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Param::Pitch => "pitch_hz",
            Param::Voiceness => "voiceness",
            Param::TongueIndex => "tongue_index",
            Param::TongueDiameter => "tongue_diameter_cm",
            Param::LipsDiameter => "lips_diameter_cm",
            Param::ConstrictionIndex => "constriction_index",
            Param::ConstrictionDiameter => "constriction_diameter_cm",
            Param::ThroatDiameter => "throat_diameter_cm",
        }
    }

    /// Short label used in report column names (`err_<label>`).
    pub fn short_label(self) -> &'static str {
        match self {
            Param::Pitch => "pitch",
            Param::Voiceness => "voiceness",
            Param::TongueIndex => "tongue_idx",
            Param::TongueDiameter => "tongue_diam",
            Param::LipsDiameter => "lips",
            Param::ConstrictionIndex => "constr_idx",
            Param::ConstrictionDiameter => "constr_diam",
            Param::ThroatDiameter => "throat",
        }
    }

    /// Inclusive `(lower, upper)` bound of the control.
    pub fn bounds(self) -> (f64, f64) {
        PARAM_BOUNDS[self.index()]
    }
}

/// Lower and upper bound of each control, in `Param::ALL` order.
pub const PARAM_BOUNDS: [(f64, f64); N_PARAMS] = [
    (75.0, 330.0),
    (0.0, 1.0),
    (14.0, 27.0),
    (1.55, 3.0),
    (0.6, 1.2),
    (12.0, 42.0),
    (0.6, 1.2),
    (0.5, 1.0),
];

/// The eight bounded articulatory controls of the synthesizer.
///
/// Values are validated on construction and on deserialization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct TractParams {
    values: [f64; N_PARAMS],
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawParams {
    pitch_hz: f64,
    voiceness: f64,
    tongue_index: f64,
    tongue_diameter_cm: f64,
    lips_diameter_cm: f64,
    constriction_index: f64,
    constriction_diameter_cm: f64,
    throat_diameter_cm: f64,
}

impl TryFrom<RawParams> for TractParams {
    type Error = Error;

    fn try_from(r: RawParams) -> Result<Self> {
        TractParams::from_array([
            r.pitch_hz,
            r.voiceness,
            r.tongue_index,
            r.tongue_diameter_cm,
            r.lips_diameter_cm,
            r.constriction_index,
            r.constriction_diameter_cm,
            r.throat_diameter_cm,
        ])
    }
}

impl From<TractParams> for RawParams {
    fn from(p: TractParams) -> Self {
        let v = p.values;
        RawParams {
            pitch_hz: v[0],
            voiceness: v[1],
            tongue_index: v[2],
            tongue_diameter_cm: v[3],
            lips_diameter_cm: v[4],
            constriction_index: v[5],
            constriction_diameter_cm: v[6],
            throat_diameter_cm: v[7],
        }
    }
}

impl TractParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        pitch_hz: f64,
        voiceness: f64,
        tongue_index: f64,
        tongue_diameter_cm: f64,
        lips_diameter_cm: f64,
        constriction_index: f64,
        constriction_diameter_cm: f64,
        throat_diameter_cm: f64,
    ) -> Result<Self> {
        Self::from_array([
            pitch_hz,
            voiceness,
            tongue_index,
            tongue_diameter_cm,
            lips_diameter_cm,
            constriction_index,
            constriction_diameter_cm,
            throat_diameter_cm,
        ])
    }

    /// Builds parameters from values in `Param::ALL` order.
    pub fn from_array(values: [f64; N_PARAMS]) -> Result<Self> {
        for (param, &value) in Param::ALL.iter().zip(&values) {
            let (lower, upper) = param.bounds();
            if !(value >= lower && value <= upper) {
                return Err(Error::ParamOutOfRange {
                    name: param.name(),
                    value,
                    lower,
                    upper,
                });
            }
        }
        Ok(Self { values })
    }

    /// Centre of every range.
    pub fn midpoint() -> Self {
        NormalizedParams::splat(0.5).denormalize()
    }

    pub fn as_array(&self) -> [f64; N_PARAMS] {
        self.values
    }

    pub fn get(&self, param: Param) -> f64 {
        self.values[param.index()]
    }

    /// Returns a copy with one control replaced.
    pub fn with(&self, param: Param, value: f64) -> Result<Self> {
        let mut values = self.values;
        values[param.index()] = value;
        Self::from_array(values)
    }

    pub fn pitch_hz(&self) -> f64 {
        self.values[0]
    }
    pub fn voiceness(&self) -> f64 {
        self.values[1]
    }
    pub fn tongue_index(&self) -> f64 {
        self.values[2]
    }
    pub fn tongue_diameter_cm(&self) -> f64 {
        self.values[3]
    }
    pub fn lips_diameter_cm(&self) -> f64 {
        self.values[4]
    }
    pub fn constriction_index(&self) -> f64 {
        self.values[5]
    }
    pub fn constriction_diameter_cm(&self) -> f64 {
        self.values[6]
    }
    pub fn throat_diameter_cm(&self) -> f64 {
        self.values[7]
    }

    pub fn normalize(&self) -> NormalizedParams {
        normalize(self)
    }
}

/// Parameters mapped affinely onto the unit cube.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; N_PARAMS]", into = "[f64; N_PARAMS]")]
pub struct NormalizedParams([f64; N_PARAMS]);

impl TryFrom<[f64; N_PARAMS]> for NormalizedParams {
    type Error = Error;
    fn try_from(x: [f64; N_PARAMS]) -> Result<Self> {
        NormalizedParams::new(x)
    }
}

impl From<NormalizedParams> for [f64; N_PARAMS] {
    fn from(x: NormalizedParams) -> Self {
        x.0
    }
}

impl NormalizedParams {
    pub fn new(x: [f64; N_PARAMS]) -> Result<Self> {
        for (param, &value) in Param::ALL.iter().zip(&x) {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::ParamOutOfRange {
                    name: param.name(),
                    value,
                    lower: 0.0,
                    upper: 1.0,
                });
            }
        }
        Ok(Self(x))
    }

    /// Builds from a slice, clamping every component into `[0, 1]`.
    pub fn clamped(x: &[f64]) -> Self {
        assert_eq!(x.len(), N_PARAMS, "normalized vector must have 8 components");
        let mut out = [0.0; N_PARAMS];
        for (o, &v) in out.iter_mut().zip(x) {
            *o = if v.is_nan() { 0.5 } else { v.clamp(0.0, 1.0) };
        }
        Self(out)
    }

    pub fn splat(v: f64) -> Self {
        Self::clamped(&[v; N_PARAMS])
    }

    pub fn as_array(&self) -> [f64; N_PARAMS] {
        self.0
    }

    pub fn get(&self, param: Param) -> f64 {
        self.0[param.index()]
    }

    pub fn denormalize(&self) -> TractParams {
        denormalize(self)
    }

    /// Componentwise `self + t (other - self)`; `t = 0` returns `self` bitwise.
    pub fn lerp(&self, other: &Self, t: f64) -> Self {
        let mut out = self.0;
        for (o, (&a, &b)) in out.iter_mut().zip(self.0.iter().zip(&other.0)) {
            *o = (a + t * (b - a)).clamp(0.0, 1.0);
        }
        Self(out)
    }
}

pub fn normalize(p: &TractParams) -> NormalizedParams {
    let mut x = [0.0; N_PARAMS];
    for ((xi, &v), &(lo, hi)) in x.iter_mut().zip(&p.values).zip(&PARAM_BOUNDS) {
        *xi = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
    }
    NormalizedParams(x)
}

pub fn denormalize(x: &NormalizedParams) -> TractParams {
    let mut values = [0.0; N_PARAMS];
    for ((v, &xi), &(lo, hi)) in values.iter_mut().zip(&x.0).zip(&PARAM_BOUNDS) {
        // lerp form hits both endpoints exactly
        *v = (lo * (1.0 - xi) + hi * xi).clamp(lo, hi);
    }
    TractParams { values }
}

/// Piecewise-linear parameter path through time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTrajectory", into = "RawTrajectory")]
pub struct ParamTrajectory {
    keyframes: Vec<Keyframe>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keyframe {
    pub time_s: f64,
    pub params: TractParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawTrajectory {
    keyframes: Vec<Keyframe>,
}

impl TryFrom<RawTrajectory> for ParamTrajectory {
    type Error = Error;
    fn try_from(r: RawTrajectory) -> Result<Self> {
        ParamTrajectory::new(r.keyframes)
    }
}

impl From<ParamTrajectory> for RawTrajectory {
    fn from(t: ParamTrajectory) -> Self {
        RawTrajectory { keyframes: t.keyframes }
    }
}

impl ParamTrajectory {
    pub fn new(keyframes: Vec<Keyframe>) -> Result<Self> {
        let first = keyframes
            .first()
            .ok_or_else(|| Error::InvalidTrajectory("no keyframes".into()))?;
        if first.time_s != 0.0 {
            return Err(Error::InvalidTrajectory(format!(
                "first keyframe at {} s, expected 0",
                first.time_s
            )));
        }
        for pair in keyframes.windows(2) {
            if !(pair[1].time_s > pair[0].time_s) {
                return Err(Error::InvalidTrajectory(format!(
                    "keyframe times not strictly increasing ({} then {})",
                    pair[0].time_s, pair[1].time_s
                )));
            }
        }
        Ok(Self { keyframes })
    }

    pub fn constant(params: TractParams) -> Self {
        Self {
            keyframes: vec![Keyframe { time_s: 0.0, params }],
        }
    }

    /// Straight glide from `start` at t = 0 to `end` at `duration_s`.
    pub fn glide(start: TractParams, end: TractParams, duration_s: f64) -> Result<Self> {
        Self::new(vec![
            Keyframe {
                time_s: 0.0,
                params: start,
            },
            Keyframe {
                time_s: duration_s,
                params: end,
            },
        ])
    }

    pub fn keyframes(&self) -> &[Keyframe] {
        &self.keyframes
    }

    /// Normalized parameters at time `t`, interpolated linearly in normalized space.
    /// The last keyframe is held past its time.
    pub fn normalized_at(&self, t: f64) -> NormalizedParams {
        let k = &self.keyframes;
        let next = k.partition_point(|kf| kf.time_s <= t);
        if next == 0 {
            return k[0].params.normalize();
        }
        if next == k.len() {
            return k[k.len() - 1].params.normalize();
        }
        let (a, b) = (&k[next - 1], &k[next]);
        let frac = (t - a.time_s) / (b.time_s - a.time_s);
        a.params.normalize().lerp(&b.params.normalize(), frac)
    }

    pub fn at(&self, t: f64) -> TractParams {
        self.normalized_at(t).denormalize()
    }
}
