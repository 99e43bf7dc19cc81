use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension {0}: must be at least 1")]
    InvalidDimension(usize),
    #[error("invalid band: width {w} must satisfy 1 <= w <= l = {l}")]
    InvalidBand { w: usize, l: usize },
    #[error("degenerate profile: the profile function vanishes on the whole lattice")]
    DegenerateProfile,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("mixing weight {0} outside [0, 1]")]
    InvalidMixing(f64),
    #[error("matrix cannot be normalized to a doubly stochastic profile: {0}")]
    NonNormalizable(&'static str),
    #[error("sinkhorn iteration did not converge after {iterations} iterations (row-sum deviation {deviation:e})")]
    Convergence { iterations: usize, deviation: f64 },
    #[error("invalid variance profile: {0}")]
    InvalidProfile(String),
    #[error("spectral parameter needs a finite energy and eta > 0, got E = {e}, eta = {eta}")]
    InvalidSpectralParameter { e: f64, eta: f64 },
    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("1 - m^2 S is numerically singular at z = {re} + {im}i")]
    Singular { re: f64, im: f64 },
    #[error("hermitian eigensolver did not converge")]
    Eigensolver,
    #[error("pivot degeneracy in minor recursion: |G_kk| = {value:e} at k = {index}")]
    PivotDegeneracy { index: usize, value: f64 },
    #[error("weight condition violated: {0}")]
    WeightCondition(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = core::result::Result<T, Error>;
