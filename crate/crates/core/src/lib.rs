//! Floquet analysis of a periodically driven two-band chain: stroboscopic
//! propagation, extended-space spectra, perturbative Floquet modes, wave
//! packet dynamics and chiral winding numbers.

pub mod error;
pub mod extended;
pub mod io;
pub mod linalg;
pub mod model;
pub mod perturbation;
pub mod propagator;
pub mod topology;
pub mod wavepacket;

pub use error::{FloquetError, Gap, Result};
pub use model::ModelParams;
