use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("operator is not Hermitian (max |A - A^dagger| = {max_deviation:e})")]
    NonHermitianInput { max_deviation: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("states are orthogonal (|overlap| = {overlap:e}); level crossing suspected")]
    OrthogonalStates { overlap: f64 },

    #[error("stencil evaluation failed at ({lambda1}, {lambda2}): {reason}")]
    StencilFailure {
        lambda1: f64,
        lambda2: f64,
        reason: String,
    },

    #[error("negative probability {value:e}")]
    NegativeProbability { value: f64 },

    #[error("QFIM is singular (det = {det:e}, condition number = {condition:e})")]
    SingularQfim { det: f64, condition: f64 },

    #[error("budget fraction gamma = {0} is outside (0, 1)")]
    GammaOutOfRange(f64),

    #[error("QFIM diagonal is not strictly positive (q11 = {q11}, q22 = {q22})")]
    DegenerateDiagonal { q11: f64, q22: f64 },

    #[error("|delta| = {delta} exceeds the Cauchy-Schwarz limit {limit}")]
    DeltaTooLarge { delta: f64, limit: f64 },

    #[error("chain length {length} is outside the dense-solver budget [3, 12]")]
    DimensionBudget { length: usize },

    #[error("probabilities are not normalized (sum = {sum})")]
    UnnormalizedProbs { sum: f64 },

    #[error("likelihood vanishes on the whole grid; the prior does not cover the data")]
    ZeroLikelihood,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error: {0}")]
    Config(String),
}
