use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mode {mode} for {context}: {reason}")]
    InvalidMode {
        mode: String,
        context: String,
        reason: String,
    },

    #[error("root search for {kind} of order {order}, index {index} did not converge")]
    RootNotFound {
        kind: String,
        order: u32,
        index: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: estimated error {estimate:e} above {target:e}")]
    Quadrature { estimate: f64, target: f64 },

    #[error("ambiguous resonance classification: {0}")]
    Ambiguous(String),

    #[error("degenerate difference-frequency pair {0}: the driving frequency would vanish")]
    Degenerate(String),

    #[error("matrix exponential overflow: 1-norm {norm:e}")]
    ExpOverflow { norm: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("trace diverges: |det(M - I)| = {det:e}")]
    TraceDivergent { det: f64 },

    #[error("branch tracking failed: {0}; perturb the evaluation path")]
    Branch(String),

    #[error("resonances share mode {0}; evaluate the coupled group with the symplectic engine")]
    Coupled(String),

    #[error("Fock space dimension {dim} exceeds the budget {budget}")]
    Budget { dim: usize, budget: usize },

    #[error("truncation leakage: top-shell population {edge:e} above {tol:e}; raise n_max (currently {n_max:?})")]
    Leakage {
        edge: f64,
        tol: f64,
        n_max: Vec<usize>,
    },

    #[error("generator is not Hermitian: mismatch {0:e}")]
    NonHermitian(f64),

    #[error("characteristic function is not periodic with period {period}: mismatch {mismatch:e}; use the Fock oracle")]
    NotPeriodic { period: f64, mismatch: f64 },

    #[error("inversion failed: {0}")]
    Inversion(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
