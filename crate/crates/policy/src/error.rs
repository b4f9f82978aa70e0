use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("non-finite activation in encoder layer {layer}")]
    NonFinite { layer: usize },
    #[error("no unmasked action available (trajectory {0})")]
    AllMasked(usize),
    #[error("action {action} is masked for trajectory {trajectory}")]
    MaskedAction { trajectory: usize, action: usize },
    #[error("instance cannot be constructed: customer {0} is not servable by any depot")]
    Unservable(usize),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Core(#[from] vrp_core::CoreError),
}
