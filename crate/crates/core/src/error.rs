use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("profile not admissible: empirical minimum {min} at y = {at} is not positive ({} grid violations)", violations.len())]
    NotAdmissible {
        min: f64,
        at: f64,
        violations: Vec<(f64, f64)>,
    },

    #[error("grid size must be at least 2, got {0}")]
    GridTooSmall(usize),

    #[error("no regular partition with N <= {cap} certifies the 1/(4n) bound for n = {n} (best sup error {best:e})")]
    ApproximationFailed { n: u32, cap: usize, best: f64 },

    #[error("step value b_{index} = {value} must lie in (0, 1]")]
    StepValueOutOfRange { index: usize, value: f64 },

    #[error("invalid multi-interval: {0}")]
    InvalidMultiInterval(String),

    #[error("g_{n} has an essential zero near y = {y}")]
    VanishingPerturbation { n: i64, y: f64 },

    #[error("quadrature did not converge for pair ({row}, {col}): error estimate {estimate:e} above tolerance {tol:e}")]
    Quadrature {
        row: usize,
        col: usize,
        estimate: f64,
        tol: f64,
    },

    #[error("L = {0} is outside [0, pi/4)")]
    LOutOfRange(f64),

    #[error("grid too coarse: eps_{n} changed from {coarse:e} to {fine:e} under refinement")]
    GridTooCoarse { n: i64, coarse: f64, fine: f64 },

    #[error("family is not Kadec-certified (verdict {0})")]
    NotCertified(String),

    #[error("Paley-Wiener ratio {ratio} exceeds 1 + {tol:e} at trial {trial}")]
    PwViolation {
        ratio: f64,
        tol: f64,
        trial: usize,
        coefficients: Vec<[f64; 2]>,
    },

    #[error("dimension d = {0} must be at least 2")]
    Dimension(usize),

    #[error("point ({x}, {y}) lies outside the target domain")]
    OutsideDomain { x: f64, y: f64 },

    #[error("selector undefined for n = {0}")]
    MissingSelector(i64),

    #[error("condition number {0:e} exceeds the solve limit")]
    IllConditioned(f64),

    #[error("no selection reached max_cond {max_cond}; best condition number {best}")]
    SearchFailed {
        best: f64,
        max_cond: f64,
        selection: Box<crate::multirect::BasisSelection>,
    },

    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    #[error("expression error: {0}")]
    Expr(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable code for reports and CLI diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidProfile(_) => "invalid_profile",
            Error::NotAdmissible { .. } => "not_admissible",
            Error::GridTooSmall(_) => "grid_too_small",
            Error::ApproximationFailed { .. } => "approximation_failed",
            Error::StepValueOutOfRange { .. } => "step_value_out_of_range",
            Error::InvalidMultiInterval(_) => "invalid_multiinterval",
            Error::VanishingPerturbation { .. } => "vanishing_perturbation",
            Error::Quadrature { .. } => "quadrature",
            Error::LOutOfRange(_) => "l_out_of_range",
            Error::GridTooCoarse { .. } => "grid_too_coarse",
            Error::NotCertified(_) => "not_certified",
            Error::PwViolation { .. } => "pw_violation",
            Error::Dimension(_) => "dimension",
            Error::OutsideDomain { .. } => "outside_domain",
            Error::MissingSelector(_) => "missing_selector",
            Error::IllConditioned(_) => "ill_conditioned",
            Error::SearchFailed { .. } => "search_failed",
            Error::Mismatch(_) => "mismatch",
            Error::Expr(_) => "expression",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// Outcomes that are mathematically honest negatives rather than
    /// software failures.
    pub fn is_negative_outcome(&self) -> bool {
        matches!(
            self,
            Error::SearchFailed { .. }
                | Error::PwViolation { .. }
                | Error::NotCertified(_)
                | Error::ApproximationFailed { .. }
                | Error::IllConditioned(_)
        )
    }
}
