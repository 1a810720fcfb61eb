//! Dense tensors, reverse-mode differentiation, the MLP/GCN encoders, losses
//! and the Adam optimizer.

mod adam;
mod adj;
mod checkpoint;
pub mod loss;
mod model;
mod tape;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use adj::{normalize_adjacency, NormAdj};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use loss::{bce_with_logits, link_logits, softmax_cross_entropy};
pub use model::{
    encode, forward, gcn_forward, mlp_forward, Activation, GcnConfig, MlpConfig, ModelConfig,
    ModelKind, Params, WeightInit,
};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor2;
