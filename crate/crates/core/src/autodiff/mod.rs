//! Minimal dense-tensor kernel with reverse-mode differentiation.
//!
//! Everything the model needs: affine maps, gated recurrent encoding,
//! softmax/sigmoid/tanh/relu, concatenation, means, dot products, a stable
//! binary cross entropy, plus gradient checking, an adaptive-moment
//! optimizer, and a checkpoint format. 64-bit throughout.

mod checkpoint;
mod gradcheck;
mod gru;
mod optim;
mod params;
mod tape;
mod tensor;

pub use checkpoint::{load_checkpoint_into, read_checkpoint, save_checkpoint, CheckpointError};
pub use gradcheck::{
    check_against_central_differences, grad_check, GradCheckEntry, GradCheckReport,
};
pub use gru::{BiGru, GruDirection};
pub use optim::{Adam, AdamConfig};
pub use params::{glorot_uniform, glorot_vector, seeded_rng, ParamId, ParamStore, Parameter};
pub use tape::{sigmoid, Shape, Tape, TapeError, Var};
pub use tensor::Tensor;
