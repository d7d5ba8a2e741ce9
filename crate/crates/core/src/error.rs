use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("singular apex: the change of variables is undefined at t = {t}")]
    SingularApex { t: f64 },

    #[error("singular coefficient: phi({t}) = 0 makes 1/phi^2 unbounded")]
    SingularCoefficient { t: f64 },

    #[error("unsupported derivative order {0} (0, 1 or 2 expected)")]
    UnsupportedOrder(usize),

    #[error("near-singular shifted system at t = {t}, z = {z} (condition estimate {condition:.3e})")]
    NearSingular { t: f64, z: Complex64, condition: f64 },

    #[error("kernel pole: |1 + exp(-T sqrt(-z))| = {modulus:.3e}")]
    KernelPole { modulus: f64 },

    #[error("kernel derivative is discontinuous at t = s = {t}")]
    JumpPoint { t: f64 },

    #[error("contour conflicts with the kernel poles: {0}")]
    ContourConflict(String),

    #[error("lambda = {lambda} too small: fixed-point update ratio {ratio:.4} does not contract")]
    LambdaTooSmall { lambda: f64, ratio: f64 },

    #[error("no contraction after {steps} growth steps (last estimate {estimate:.4e} at lambda = {lambda})")]
    NoContraction { steps: usize, lambda: f64, estimate: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("truncation level n = {n}: {source}")]
    Truncation {
        n: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn at_stage(self, stage: &'static str) -> Error {
        Error::Stage { stage, source: Box::new(self) }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.at_stage(stage))
    }
}
