//! Crate-wide error type.

/// Everything that can go wrong across the compiler, the dynamics engine,
/// the noise estimators, and the CLI.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied value violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The requested pulse area exceeds what a full cavity transit can
    /// deliver at the configured coupling and velocity.
    #[error(
        "atom {atom_index}: pulse area {theta:.6} rad is unreachable; \
         the full-transit maximum is {max_area:.6} rad"
    )]
    InfeasibleTarget {
        atom_index: usize,
        theta: f64,
        max_area: f64,
    },

    /// Adaptive quadrature hit its refinement cap before reaching the
    /// requested tolerance.
    #[error("quadrature did not reach tolerance {abs_tol:.3e} within the evaluation budget")]
    QuadratureFailure { abs_tol: f64 },

    /// A pulse would push photon population past the Fock-space cutoff.
    #[error(
        "truncation overflow: population {population:.3e} at the cutoff level \
         n_max={n_max} with a nonzero pulse area"
    )]
    TruncationOverflow { n_max: usize, population: f64 },

    /// A compiled window plus its switching margins does not fit in the
    /// per-atom transit slot.
    #[error(
        "atom {atom_index}: window {window_s:.4e} s plus 2 x {t_switch_s:.4e} s switching \
         does not fit in the {slot_s:.4e} s slot"
    )]
    SlotOverflow {
        atom_index: usize,
        window_s: f64,
        t_switch_s: f64,
        slot_s: f64,
    },

    /// Config file syntax or value error.
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// CLI exit code: 1 infeasibility/validation failure, 2 bad arguments,
    /// 3 I/O error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Config(_) => 2,
            Error::Io(_) => 3,
            Error::InfeasibleTarget { .. }
            | Error::QuadratureFailure { .. }
            | Error::TruncationOverflow { .. }
            | Error::SlotOverflow { .. } => 1,
        }
    }
}
