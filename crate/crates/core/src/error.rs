use thiserror::Error;

/// Errors raised by the numerical kernels, group operations, statistics and
/// data ingestion.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("eigenvalue on or near the closed negative real axis: principal logarithm undefined")]
    SpectrumOnCut,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("matrix is not symmetric (relative defect {0:e})")]
    NotSymmetric(f64),

    #[error("group descriptor mismatch: {left} vs {right}")]
    DescriptorMismatch { left: String, right: String },

    #[error("element outside the logarithm domain: {0}")]
    OutsideLogDomain(String),

    #[error("a product group needs at least one factor")]
    EmptyProduct,

    #[error("invalid group descriptor: {0}")]
    InvalidDescriptor(String),

    #[error("invalid group element: {0}")]
    InvalidElement(String),

    #[error("real Schur decomposition did not converge")]
    SchurNotConverged,

    #[error("sample set is empty")]
    EmptySampleSet,

    #[error("group mean did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("pooled covariance needs m + n > 2, got m + n = {0}")]
    DegenerateWeights(f64),

    #[error("covariance too large: {rejected} of {drawn} tangent draws fell outside the log domain")]
    CovarianceTooLarge { rejected: usize, drawn: usize },

    #[error("statistic undefined on the original split: {0}")]
    BaselineDegenerate(String),

    #[error("too few samples for a two-sample test: m = {m}, n = {n}")]
    TooFewSamples { m: usize, n: usize },

    #[error("statistic undefined on all {0} permutations")]
    AllPermutationsDegenerate(usize),

    #[error("argument {0} outside the open unit interval")]
    OutOfDomain(f64),

    #[error("normal-score covariance is singular ({components} components, {permutations} permutations)")]
    ScoreCovarianceSingular { components: usize, permutations: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("principal axes are ambiguous (relative eigenvalue gap {0:e})")]
    DegenerateSpectrum(f64),

    #[error("degenerate point configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("deformation flips orientation on face {face} (det = {det:e})")]
    OrientationFlip { face: usize, det: f64 },

    #[error("degenerate face {face} (area {area:e})")]
    DegenerateFace { face: usize, area: f64 },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("mesh parse error at line {line}: {message}")]
    MeshParse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Numerical failures as opposed to malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_)
                | Error::SpectrumOnCut
                | Error::SchurNotConverged
                | Error::NotPositiveDefinite
                | Error::OutsideLogDomain(_)
                | Error::NotConverged { .. }
                | Error::DegenerateWeights(_)
                | Error::CovarianceTooLarge { .. }
                | Error::BaselineDegenerate(_)
                | Error::AllPermutationsDegenerate(_)
                | Error::ScoreCovarianceSingular { .. }
                | Error::DegenerateSpectrum(_)
                | Error::DegenerateConfiguration(_)
                | Error::OrientationFlip { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
