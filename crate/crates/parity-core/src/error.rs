use thiserror::Error;

/// Errors produced by the library, grouped by how the CLI maps them to exit codes:
/// spec/config problems (exit 2), physics-regime refusals (exit 3) and numerical
/// failures (exit 4).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid circuit spec at `{path}`: {message}")]
    InvalidSpec { path: String, message: String },

    #[error("unknown mode name `{0}`")]
    UnknownMode(String),

    #[error("occupation {occupation} out of range for mode `{mode}` with {levels} levels")]
    OccupationOutOfRange {
        mode: String,
        occupation: u8,
        levels: u8,
    },

    #[error("Hilbert dimension {dim} exceeds cap of {cap} basis states; raise the cap or use an excitation cutoff")]
    DimensionCap { dim: usize, cap: usize },

    #[error("dense matrix of dimension {dim} refused (limit {limit}); use an excitation-cutoff basis for systems this large")]
    DenseTooLarge { dim: usize, limit: usize },

    #[error("dispersive bound violated: |g/Delta| = {lambda:.4} for coupling ({a}, {b}) with g = {g} GHz, Delta = {delta} GHz (bound {bound})")]
    DispersiveBound {
        a: String,
        b: String,
        g: f64,
        delta: f64,
        lambda: f64,
        bound: f64,
    },

    #[error("near-resonant pair ({a}, {b}): |Delta| = {delta_mhz:.3} MHz is below the {floor_mhz} MHz floor")]
    NearResonant {
        a: String,
        b: String,
        delta_mhz: f64,
        floor_mhz: f64,
    },

    #[error("eigenstate labeling failed: overlap^2 = {overlap:.4} < 0.5 for label |{label}> (spectrum is not dispersive)")]
    NonDispersiveLabel { label: String, overlap: f64 },

    #[error("missing label |{0}> in spectrum")]
    MissingLabel(String),

    #[error("missing prerequisite subset {0:?} in shift table")]
    MissingSubset(Vec<String>),

    #[error("perturbation-theory denominator {denom_mhz:.3} MHz below the {floor_mhz} MHz guard for states |{a}> and |{b}>")]
    SmallDenominator {
        a: String,
        b: String,
        denom_mhz: f64,
        floor_mhz: f64,
    },

    #[error("transformation `{0}` already applied to this spec")]
    AlreadyApplied(String),

    #[error("unit-cell topology check failed: {0}")]
    BadTopology(String),

    #[error("time step {dt_ps} ps too coarse for fastest frequency {fmax_ghz} GHz (need dt <= {required_ps:.3} ps)")]
    StepTooCoarse {
        dt_ps: f64,
        fmax_ghz: f64,
        required_ps: f64,
    },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("no regime-search candidate satisfied the dispersive bound")]
    NoFeasibleCandidate,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// CLI exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidSpec { .. }
            | Error::UnknownMode(_)
            | Error::OccupationOutOfRange { .. }
            | Error::MissingLabel(_)
            | Error::MissingSubset(_)
            | Error::BadTopology(_)
            | Error::AlreadyApplied(_)
            | Error::DimensionMismatch(..)
            | Error::Io(_)
            | Error::Serialization(_) => 2,
            Error::DispersiveBound { .. }
            | Error::NearResonant { .. }
            | Error::NonDispersiveLabel { .. }
            | Error::SmallDenominator { .. }
            | Error::NoFeasibleCandidate => 3,
            Error::DimensionCap { .. }
            | Error::DenseTooLarge { .. }
            | Error::StepTooCoarse { .. }
            | Error::Numerical(_) => 4,
        }
    }
}
