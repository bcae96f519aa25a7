use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("N must be even, got {0}")]
    OddPoints(usize),
    #[error("N must be at least 8, got {0}")]
    TooFewPoints(usize),
    #[error("domain length must be positive and finite, got {0}")]
    NonPositiveLength(f64),
    #[error("size mismatch: grid has {expected} points, data has {actual}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("derivative order {0} exceeds the cap of 8")]
    DerivativeOrder(u32),
    #[error("Sobolev index {0} outside the supported range [-4, 12]")]
    SobolevIndex(f64),
    #[error("field mean {mean:e} exceeds tolerance {tolerance:e}; no periodic antiderivative")]
    NonZeroMean { mean: f64, tolerance: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parameters violate 0 < epsilon <= delta <= 1: epsilon = {epsilon}, delta = {delta}")]
    Regime { epsilon: f64, delta: f64 },
    #[error("KdV band violated: delta^2/epsilon = {ratio} not in [{c1}, {c2}]")]
    Band { ratio: f64, c1: f64, c2: f64 },
    #[error("left operator 1 - kappa5 delta^2 k^2 is not invertible at k = {wavenumber}")]
    InvertibilityViolation { wavenumber: f64 },
    #[error("kernel '{kernel}' has nonpositive symbol {value:e} at eta = {eta}")]
    EllipticityViolation {
        kernel: String,
        eta: f64,
        value: f64,
    },
    #[error("kernel symbol is not smooth at 0: {0}")]
    SymbolNotSmooth(String),
    #[error(
        "solution blew up at t = {time} (max |u| = {max_abs:e}); last valid time {last_valid_time}"
    )]
    BlowUp {
        time: f64,
        last_valid_time: f64,
        max_abs: f64,
    },
    #[error("energy squared is negative ({value:e}); state left the positivity regime")]
    NegativeEnergy { value: f64 },
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("unknown kernel '{name}'; registered kernels: {known}")]
    UnknownKernel { name: String, known: String },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
