use alloc::string::String;

/// Failures of the numerical core. Degeneracy variants are kept apart from
/// plain input errors so callers can refuse rather than report a value.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("requested depth {requested} exceeds available depth {available}")]
    DepthExceeded { requested: usize, available: usize },
    #[error("symbol is not elliptic: {0}")]
    NonElliptic(String),
    #[error("symbol must be scalar with positive leading coefficient: {0}")]
    NotPositiveScalar(String),
    #[error("degree {0} component not retained")]
    MissingDegree(i32),
    #[error("degenerate fixed point at {point}: |1 - h'| = {gap:e}")]
    DegenerateFixedPoint { point: f64, gap: f64 },
    #[error("invalid circle diffeomorphism: {0}")]
    InvalidDiffeo(String),
    #[error("bundle map is singular at y = {0}")]
    SingularBundleMap(f64),
    #[error("non-positive time t = {0}")]
    NonPositiveTime(f64),
    #[error("operator is not self-adjoint (defect {0:e})")]
    NotSelfAdjoint(f64),
    #[error("ill-conditioned fit: condition number {0:e}")]
    IllConditioned(f64),
    #[error("fit residual {residual:e} above tolerance {tolerance:e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },
    #[error("time grid spans {0:.2} decades")]
    GridTooNarrow(f64),
    #[error("sheet composition exceeds word length {0}")]
    WordLengthOverflow(usize),
    #[error("unresolved Dirac part at fixed point {0}")]
    UnresolvedDirac(f64),
    #[error("fixed components present with full-support function")]
    FixedWithFullSupport,
    #[error("vanishing expansion rate at fixed point {0}")]
    ZeroExpansionRate(f64),
    #[error("support reaches t <= 0")]
    SupportTouchesZero,
    #[error("degenerate return map: {0}")]
    DegenerateOrbit(String),
    #[error("partition identity violated (defect {0:e})")]
    PartitionViolated(f64),
    #[error("no spectral gap: {0}")]
    NoSpectralGap(String),
    #[error("idempotent iteration stagnated at defect {0:e}")]
    Stagnated(f64),
    #[error("degenerate system: {0}")]
    Degenerate(String),
    #[error("oracle did not converge: {0}")]
    Unconverged(String),
    #[error("support flag mismatch: {0}")]
    FlagMismatch(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    /// True for refusals caused by violated non-degeneracy hypotheses.
    pub fn is_degeneracy(&self) -> bool {
        matches!(
            self,
            Error::DegenerateFixedPoint { .. }
                | Error::DegenerateOrbit(_)
                | Error::Degenerate(_)
                | Error::ZeroExpansionRate(_)
        )
    }
}
