use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("undefined highest part: zero polynomial")]
    UndefinedHighestPart,
    #[error("polynomial is not homogeneous")]
    NotHomogeneous,
    #[error("zero polynomial")]
    ZeroPolynomial,
    #[error("singular preimage matrix")]
    SingularMatrix,
    #[error("degree {found} too low (need at least {required})")]
    DegreeTooLow { found: usize, required: usize },
    #[error("highest homogeneous part is not generic (repeated zero line)")]
    NotGeneric,
    #[error("degenerate critical locus: resultant vanishes identically")]
    DegenerateCriticalLocus,
    #[error("found {found} critical points, expected {expected}: {detail}")]
    CriticalPointCount {
        found: usize,
        expected: usize,
        detail: String,
    },
    #[error("polynomial is not ultra-Morse")]
    NotUltraMorse,
    #[error("H' - H(0) vanishes identically; central rescaling undefined")]
    TrivialLowerPart,
    #[error("coordinate search exhausted after {0} random rotations")]
    CoordinateSearchExhausted(usize),
    #[error("y-leading coefficient vanishes; re-run choose_coordinates")]
    LeadingCoefficientVanishes,
    #[error("y-axis is a zero line of h; rotate coordinates first")]
    YAxisZeroLine,
    #[error("path not critically-regular at tau={0}")]
    NotCriticallyRegular(f64),
    #[error("branch tracking failed at tau={0}: step underflow")]
    TrackingFailed(f64),
    #[error("no isolated colliding pair of branch points near the critical value; move t_near closer")]
    NoIsolatedPair,
    #[error("refinement exhausted: {0}")]
    RefinementExhausted(String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("cycles are taken on different level curves")]
    LevelMismatch,
    #[error("general position not reached after {0} perturbations")]
    GeneralPosition(usize),
    #[error("base point selection failed after {0} attempts")]
    BasePointSelection(usize),
    #[error("form tuple size mismatch: expected {expected}, got {found}")]
    TupleSize { expected: usize, found: usize },
    #[error("form x^{l} y^{m1} dx has degree {found}, expected {expected}")]
    WrongFormDegree {
        l: u32,
        m1: u32,
        found: usize,
        expected: usize,
    },
    #[error("every candidate form subset gives |P_d| below threshold (numerically non-generic h)")]
    AllSubsetsDegenerate,
    #[error("degree n={0} unsupported (tuple enumeration is capped at n <= 8)")]
    UnsupportedDegree(usize),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
