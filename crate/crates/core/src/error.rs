use thiserror::Error;

/// Errors surfaced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("grid size {0} is not a power of two")]
    GridNotPowerOfTwo(usize),
    #[error("invalid grid spacing dx = {0}")]
    InvalidGridSpacing(f64),
    #[error("matrix is not Hermitian: max |m - m^H| entry = {0:.3e}")]
    NotHermitian(f64),
    #[error("matrix is not unitary: max |U^H U - 1| entry = {0:.3e}")]
    NotUnitary(f64),
    #[error("rate matrix is not positive semidefinite: min eigenvalue = {0:.3e}")]
    NotPositiveSemidefinite(f64),
    #[error("operator basis is not orthonormal: max deviation = {0:.3e}")]
    NotOrthonormal(f64),
    #[error("state has zero (or non-finite) norm")]
    ZeroNorm,
    #[error("non-finite amplitudes encountered: {0}")]
    NonFinite(String),
    #[error("stability bound violated: {what} = {value:.3e} exceeds {limit:.3e}")]
    StabilityViolated {
        what: &'static str,
        value: f64,
        limit: f64,
    },
    #[error("state is already point-localized (position variance below 1e-14)")]
    PointLocalized,
    #[error("trajectory failed at step {step} (t = {time:.6e}): {source}")]
    TrajectoryFailure {
        step: usize,
        time: f64,
        #[source]
        source: Box<Error>,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("density matrix invariant violated after step: {0}")]
    DensityInvariantViolated(String),
    #[error("all packets coincident: jump reweighting denominator vanishes")]
    CoincidentPackets,
    #[error("collapse run did not terminate before t = {0:.6e}")]
    CollapseTimeout(f64),
    #[error("unknown subsystem `{0}` in layout")]
    UnknownSubsystem(String),
    #[error("unknown branch label {0:?}")]
    UnknownLabel(Vec<usize>),
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("initial state is entangled across the frame cut; trajectories start from a product conditioned state")]
    EntangledInitialState,
    #[error("not enough data: {0}")]
    InsufficientData(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
