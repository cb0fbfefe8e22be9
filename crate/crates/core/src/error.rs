use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("optical response is not positive definite")]
    NonPositiveDefinite,
    #[error("wavevector must be nonzero")]
    ZeroWaveVector,
    #[error("chirality out of range: |kappa| = {0} must be < 1")]
    ChiralityOutOfRange(f64),
    #[error("null-mode Gram factor is singular (eps*mu - |xi|^2 <= 0)")]
    DegenerateQ,
    #[error("branch tracking lost: nearest eigenvalue is ambiguous")]
    BranchTrackingLost,
    #[error("ray left the domain at x = {0:?}")]
    LeftDomain([f64; 3]),
    #[error("no eigenvector gauge available for a numeric branch")]
    GaugeUnavailable,
    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("empty input")]
    EmptyInput,
    #[error("mode decompositions belong to different media")]
    MixedMedia,
    #[error("vanishing radial group speed on the energy shell")]
    VanishingGroupSpeed,
    #[error("scattering kernel has zero mass on the energy shell")]
    DegenerateKernel,
    #[error("histogram is empty")]
    EmptyHistogram,
    #[error("grid spacing {dx} does not resolve eps = {eps}")]
    UnderResolved { dx: f64, eps: f64 },
    #[error("sampled fields live on different grids")]
    GridMismatch,
    #[error("spectral matrix fails Bochner positivity at |q| = {q} (eigenvalue {eigenvalue})")]
    NotPositive { q: f64, eigenvalue: f64 },
    #[error("invalid configuration at `{path}`: {reason}")]
    ConfigInvalid { path: String, reason: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::ConfigInvalid { path: path.into(), reason: reason.into() }
    }
}
