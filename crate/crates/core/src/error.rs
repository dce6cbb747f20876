use thiserror::Error;

/// Every failure the library can report.
///
/// `code()` gives the short machine-parsable tag the CLI prints as
/// `ERROR <code>: <detail>`.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid ratio {0}: contraction ratios must lie in (0, 1)")]
    InvalidRatio(f64),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("symbol {symbol} out of range for an alphabet of {alphabet} maps")]
    SymbolOutOfRange { symbol: usize, alphabet: usize },
    #[error("cannot parse word {0:?}")]
    WordParse(String),
    #[error("no epsilon-net with at most {p_max} orbit points (best gap {best_gap:.3e} rad)")]
    NoNetWithinBound { p_max: usize, best_gap: f64 },
    #[error("alpha is rational: |{n}*alpha - {m}| = 0")]
    RationalAlpha { n: String, m: String },
    #[error("orientation must be fixed but the system has no reflecting map")]
    NoReflectorAvailable,
    #[error("no word with orientation +1 and |angle| < {eps:.3e} of length <= {max_len}")]
    NoSmallRotation { eps: f64, max_len: usize },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("numeric margin too small to decide: {0}")]
    Indeterminate(String),
    #[error("search budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("level {level} has {count} cylinders, above the cap of {cap}")]
    LevelTooLarge { level: usize, count: f64, cap: usize },
    #[error("atom resolution {error:.3e} too coarse for radius {radius:.3e}")]
    ResolutionTooCoarse { error: f64, radius: f64 },
    #[error("point coincides with the projection center")]
    CenterHit,
    #[error("rho {0:.3e} needs a level beyond the enumeration cap")]
    RhoTooSmall(f64),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("system is not homogeneous")]
    NonHomogeneous,
    #[error("argument out of range: {0}")]
    Range(String),
    #[error("expression error: {0}")]
    Expr(String),
    #[error("hull could not be certified invariant")]
    HullNotCertified,
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::InvalidRatio(_) => "invalid_ratio",
            Error::Empty(_) => "empty",
            Error::SymbolOutOfRange { .. } => "symbol_out_of_range",
            Error::WordParse(_) => "word_parse",
            Error::NoNetWithinBound { .. } => "no_net_within_bound",
            Error::RationalAlpha { .. } => "rational_alpha",
            Error::NoReflectorAvailable => "no_reflector_available",
            Error::NoSmallRotation { .. } => "no_small_rotation",
            Error::PreconditionViolated(_) => "precondition_violated",
            Error::Indeterminate(_) => "indeterminate",
            Error::BudgetExhausted(_) => "budget_exhausted",
            Error::VerificationFailed(_) => "verification_failed",
            Error::LevelTooLarge { .. } => "level_too_large",
            Error::ResolutionTooCoarse { .. } => "resolution_too_coarse",
            Error::CenterHit => "center_hit",
            Error::RhoTooSmall(_) => "rho_too_small",
            Error::DegenerateFit(_) => "degenerate_fit",
            Error::NonHomogeneous => "non_homogeneous",
            Error::Range(_) => "range",
            Error::Expr(_) => "expr",
            Error::HullNotCertified => "hull_not_certified",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
