use thiserror::Error;

/// Which of the two chiral quasienergy gaps is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Gap {
    /// Gap centred on quasienergy 0.
    Zero,
    /// Gap at the edge of the principal window, quasienergy ω/2.
    Pi,
}

impl std::fmt::Display for Gap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Gap::Zero => write!(f, "0"),
            Gap::Pi => write!(f, "pi"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FloquetError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("static spectrum is degenerate at k = {k} (|d(k)| = {norm:e})")]
    Degenerate { k: f64, norm: f64 },

    #[error("resonant denominator {denominator:e} for bands (n={n}, m={m}) with photon sign {sign:+}")]
    Resonance {
        n: usize,
        m: usize,
        sign: i32,
        denominator: f64,
    },

    #[error("ambiguous principal replica for band {band} at k = {k}: central weights {w1} and {w2} tie")]
    AmbiguousPrincipal { k: f64, band: usize, w1: f64, w2: f64 },

    #[error("could not identify two converged Floquet bands at k = {k} (truncation P = {truncation})")]
    BandSelection { k: f64, truncation: usize },

    #[error("truncation did not converge at k = {k}: drift {drift:e} at P = {truncation}")]
    NotConverged { k: f64, truncation: usize, drift: f64 },

    #[error("{gap} gap closed at k = {k}: eigenphase within {distance:e} of the branch cut")]
    GapClosed { k: f64, gap: Gap, distance: f64 },

    #[error("half-period operator at k = {k} has no chiral structure (diagonal {diagonal:e}, off-diagonal {off_diagonal:e})")]
    Structure {
        k: f64,
        diagonal: f64,
        off_diagonal: f64,
    },

    #[error("winding undefined at k = {k}: |V| = {magnitude:e}")]
    WindingUndefined { k: f64, magnitude: f64 },

    #[error("k grid too coarse: overlap {overlap} between consecutive points at k = {k}")]
    GridTooCoarse { k: f64, overlap: f64 },

    #[error("wave packet reached the open boundary: edge density {density:e} at t = {t}")]
    BoundaryLeak { t: f64, density: f64 },
}

impl FloquetError {
    /// Short machine-readable code, used in CSV status columns and error JSON.
    pub fn code(&self) -> &'static str {
        match self {
            FloquetError::InvalidArgument(_) => "invalid-argument",
            FloquetError::Degenerate { .. } => "degenerate",
            FloquetError::Resonance { .. } => "resonance",
            FloquetError::AmbiguousPrincipal { .. } => "ambiguous-principal",
            FloquetError::BandSelection { .. } => "band-selection",
            FloquetError::NotConverged { .. } => "not-converged",
            FloquetError::GapClosed { .. } => "gap-closed",
            FloquetError::Structure { .. } => "structure",
            FloquetError::WindingUndefined { .. } => "winding-undefined",
            FloquetError::GridTooCoarse { .. } => "grid-too-coarse",
            FloquetError::BoundaryLeak { .. } => "boundary-leak",
        }
    }

    /// Name of the module that raised the error.
    pub fn module(&self) -> &'static str {
        match self {
            FloquetError::InvalidArgument(_) => "core",
            FloquetError::Degenerate { .. } => "model",
            FloquetError::Resonance { .. } => "perturbation",
            FloquetError::AmbiguousPrincipal { .. }
            | FloquetError::BandSelection { .. }
            | FloquetError::NotConverged { .. } => "extended",
            FloquetError::GapClosed { .. }
            | FloquetError::Structure { .. }
            | FloquetError::WindingUndefined { .. }
            | FloquetError::GridTooCoarse { .. } => "topology",
            FloquetError::BoundaryLeak { .. } => "wavepacket",
        }
    }
}

pub type Result<T> = std::result::Result<T, FloquetError>;
