//! Landau–Ginzburg singularity invariants, twisted Laplacian spectra,
//! Lefschetz-thimble periods and tt* / Frobenius structure checks.
//!
//! The algebraic layer (`poly`, `singularity`, `newton`, `tame`) works over
//! exact Gaussian rationals. The analytic layer (`spectral`, `thimble`,
//! `frobenius`) is double precision and restricted to one variable.

pub mod frobenius;
pub mod linalg;
pub mod newton;
pub mod poly;
pub mod singularity;
pub mod spectral;
pub mod tame;
pub mod thimble;

pub use num_complex::Complex64 as C64;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("index {index} out of range for {len} variables")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("infinite symmetry group (rank {rank} < {n})")]
    InfiniteGroup { rank: usize, n: usize },
    #[error("not a symmetry: {0}")]
    NotASymmetry(String),
    #[error("Milnor number is infinite")]
    InfiniteMilnor,
    #[error("not a Morse function: {0}")]
    NotMorse(String),
    #[error("boundary too close to a critical point (min |f'| = {0:e})")]
    BoundaryProximity(f64),
    #[error("face does not belong to this polytope")]
    ForeignFace,
    #[error("dimension {0} not supported for face enumeration")]
    Dimension(usize),
    #[error("grid does not resolve the potential: {0}")]
    Resolution(String),
    #[error("eigen-solver did not converge: {0}")]
    NoConvergence(String),
    #[error("harmonic dimension indeterminate: {0}")]
    Indeterminate(String),
    #[error("thimble passes within {distance:e} of critical point {index}")]
    StokesProximity { index: usize, distance: f64 },
    #[error("quadrature: {0}")]
    Quadrature(String),
    #[error("tangential crossing at {0}")]
    Tangential(String),
    #[error("wall events {0} and {1} are not adjacent")]
    NonAdjacent(usize, usize),
    #[error("unresolved crossing: {0}")]
    UnresolvedCrossing(String),
    #[error("parameter on a wall: {0}")]
    OnWall(String),
    #[error("dependent deformers")]
    DependentDeformers,
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
