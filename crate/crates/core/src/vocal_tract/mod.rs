//! Kelly-Lochbaum vocal tract driven by eight articulatory controls.
//!
//! The tract is a chain of 44 cylindrical sections with no nasal branch. Controls are
//! mapped to a diameter profile, junction reflections follow from adjacent areas, and
//! an LF glottal source with aspiration noise drives the glottal end. The waveguide
//! runs at twice the audio rate.

mod glottis;
mod params;
mod profile;
mod synth;
mod tract;

pub use glottis::{glottal_source, GlottalSource};
pub use params::{
    denormalize, normalize, Keyframe, NormalizedParams, Param, ParamTrajectory, TractParams, N_PARAMS, PARAM_BOUNDS,
};
pub use profile::{map_params_to_diameters, DiameterProfile, TRACT_SECTIONS};
pub use synth::{synthesize_static, synthesize_trajectory, SynthConfig, TRACT_OVERSAMPLING};
pub use tract::{Tract, GLOTTAL_REFLECTION, LIP_REFLECTION};
