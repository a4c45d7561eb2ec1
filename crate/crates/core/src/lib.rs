//! Articulatory synthesis with a Kelly-Lochbaum vocal tract and recovery of its
//! control parameters from audio by black-box optimization over spectral losses.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audio_io;
pub mod bench;
pub mod error;
pub mod features;
pub mod inversion;
pub mod optimizers;
pub mod quality;
pub mod rng;
pub mod vocal_tract;

pub use audio_io::AudioClip;
pub use error::{Error, Result};
