use thiserror::Error;

/// Errors produced by the reduction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("rank-deficient input: {0}")]
    RankDeficient(String),

    #[error("requested rank {requested} out of range (limit {limit})")]
    RankOutOfRange { requested: usize, limit: usize },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("structural violation: {0}")]
    Structural(String),

    #[error("nonlinear term vanishes; hyper-reduction deferred")]
    DeferHyperReduction,

    #[error(
        "Newton iteration failed to reach tolerance after {max_iter} iterations \
         (step {step}, parameter {param}, residual {residual:.3e})"
    )]
    NewtonDiverged {
        step: usize,
        param: usize,
        max_iter: usize,
        residual: f64,
    },

    #[error("tangent vector violates the retraction compatibility contract (defect {0:.3e})")]
    TangentContract(f64),

    #[error("inverse tangent map lost injectivity; reduce the step size")]
    StepTooLarge,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("incompatible inputs: {0}")]
    Mismatch(String),

    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
