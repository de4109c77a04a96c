use thiserror::Error;

/// Every fallible operation in the crate reports through this type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("inner jet has a nonzero constant term ({0:.3e}); composition is not closed under truncation")]
    NonzeroConstant(f64),

    #[error("linear part is singular: |det| = {det:.3e} is below the floor {floor:.1e}")]
    SingularLinearPart { det: f64, floor: f64 },

    #[error("truncation degree mismatch: requested {requested}, available {available}")]
    DegreeMismatch { requested: usize, available: usize },

    #[error("monomial z^{i} w^{j} has exponent sum above the truncation degree {k}")]
    MonomialOutOfRange { i: usize, j: usize, k: usize },

    #[error("invalid sequence spec: {0}")]
    InvalidSpec(String),

    #[error("step {n} is not diagonal: off-diagonal linear coefficient {value:.3e}")]
    NotDiagonal { n: usize, value: f64 },

    #[error("linear part is not contracting: eigenvalue moduli {0:.6}, {1:.6}")]
    NotContracting(f64, f64),

    #[error("near resonance for z^{i} w^{j} in component {component}: |factor| = {factor:.3e}")]
    NearResonance { component: usize, i: usize, j: usize, factor: f64 },

    #[error("orbit norm {norm:.3e} exceeds the jet validity radius {radius}; increase n")]
    OutsideValidity { norm: f64, radius: f64 },

    #[error("degenerate direction at step {0}: the pushed tangent vector vanished")]
    DegenerateDirection(usize),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("recursion ratio {ratio:.6} at step {n} for z^{i} w^{j} (component {component}) is not contracting")]
    RatioNotContracting { n: usize, component: usize, i: usize, j: usize, ratio: f64 },

    #[error("bounded-distortion condition fails at index {n}: {detail}")]
    Distortion { n: usize, detail: String },

    #[error("diagram residual {residual:.3e} at index {n} exceeds {tol:.1e}")]
    Residual { n: usize, residual: f64, tol: f64 },

    #[error("inverse evaluation failed at step {n}: {detail}")]
    Inverse { n: usize, detail: String },

    #[error("series budget exceeded: {0}")]
    Budget(String),

    #[error("second-order pinning lost: value drift {value:.3e}, derivative drift {derivative:.3e}")]
    Pinning { value: f64, derivative: f64 },

    #[error("extension round {round} failed: {source}")]
    Round {
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
