use thiserror::Error;

pub type Result<T, E = WalkError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum WalkError {
    #[error("graph needs at least 2 vertices, got {0}")]
    TooSmall(usize),
    #[error("vertex {vertex} out of range for a graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(usize, usize),
    #[error("graph is disconnected")]
    Disconnected,

    #[error("infeasible family spec: {0}")]
    InfeasibleSpec(String),
    #[error("graph generation failed after {0} attempts")]
    GenerationFailed(usize),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("row {row} of the kernel is not a probability vector (sum {sum})")]
    NotStochastic { row: usize, sum: f64 },
    #[error("pi is not stationary for the kernel (max deviation {0:e})")]
    NotStationary(f64),
    #[error("chain is not reversible at ({0}, {1})")]
    NotReversible(usize, usize),
    #[error("state {state} out of range for a chain on {n} states")]
    StateOutOfRange { state: usize, n: usize },
    #[error("invalid target set: {0}")]
    InvalidTargets(String),

    #[error("Jacobi eigensolver did not converge within {0} sweeps")]
    EigensolveFailed(usize),
    #[error("chain has no spectral gap (lambda_2 = {0})")]
    Degenerate(f64),
    #[error("mixing time exceeds the horizon of {0} steps")]
    BudgetExceeded(u64),
    #[error("singular linear system")]
    SingularSystem,
    #[error("principal eigenvector of the masked kernel has a negative entry ({0:e})")]
    NonpositiveEigenvector(f64),

    #[error("coalescence did not complete within {0} steps")]
    HorizonExceeded(u64),
    #[error("domination violated: unrestricted {unrestricted} > restricted {restricted}")]
    DominationViolated { unrestricted: u64, restricted: u64 },

    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
