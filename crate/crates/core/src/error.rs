use thiserror::Error;

/// Errors produced by the dynamo laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid configuration (grid too coarse, bad sweep range, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A mathematical precondition on the input was violated.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: expected length {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    /// The dense eigensolver failed to converge.
    #[error("eigensolver did not converge for a {dim}x{dim} matrix")]
    Solver { dim: usize },

    #[error("classification error: eigenvalue {index} ({re} {im:+}i) has no conjugate partner within {tol:e}")]
    Classification {
        index: usize,
        re: f64,
        im: f64,
        tol: f64,
    },

    #[error("degenerate pencil: a2 = {0}")]
    DegeneratePencil(f64),

    #[error("branch tracking failed on C in [{c_lo}, {c_hi}] after {refinements} refinements")]
    Tracking {
        c_lo: f64,
        c_hi: f64,
        refinements: usize,
    },

    #[error("bracket [{c_lo}, {c_hi}] does not straddle a real/complex transition")]
    Bracket { c_lo: f64, c_hi: f64 },

    /// |q(r)| fell below the floor; the proportional branch must be used instead.
    #[error("degenerate q: |q({r})| = {q:e} below floor; use the proportional-profile check")]
    DegenerateQ { r: f64, q: f64 },

    #[error("singular superpotential: seed function has a node near x = {x}")]
    SingularSuperpotential { x: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
