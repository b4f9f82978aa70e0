use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("non-finite gradient in tensor {tensor} (epoch {epoch}, step {step})")]
    NonFiniteGradient {
        tensor: String,
        epoch: usize,
        step: usize,
    },
    #[error("checkpoint incompatible: {0}")]
    Incompatible(String),
    #[error(transparent)]
    Policy(#[from] vrp_policy::PolicyError),
    #[error(transparent)]
    Io(#[from] vrp_io::IoError),
    #[error("{0}")]
    File(String),
}
