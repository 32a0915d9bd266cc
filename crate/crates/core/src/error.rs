use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    Domain(String),
    #[error("degenerate Markov chain: stationary distribution is not unique")]
    DegenerateChain,
    #[error("singular potential: win probability {prob} at x = {x} is not in (0, 1)")]
    SingularPotential { x: i64, prob: f64 },
    #[error("lattice exhausted: amplitude would leave [{lo}, {hi}]")]
    LatticeExhausted { lo: i64, hi: i64 },
    #[error("position {x} outside reconstructable range [{lo}, {hi}]")]
    Range { x: i64, lo: i64, hi: i64 },
    #[error("series length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
