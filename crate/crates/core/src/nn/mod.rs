//! Small fixed-architecture networks with hand-written backpropagation.

mod adam;
mod init;
mod loss;
mod network;
mod train;

pub use adam::{Adam, AdamParams, DecayMode};
pub use init::xavier_init;
pub use loss::{accuracy, cross_entropy_masked};
pub use network::{Cache, Grads, Input, Layer, Mixing, Network};
pub use train::{build_network, train, Init, Metrics, ModelKind, TrainConfig, DEFAULT_EPOCHS};
