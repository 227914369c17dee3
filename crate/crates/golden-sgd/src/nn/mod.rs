//! Minimal f64 tensor/backprop engine for the digit-classification CNN.

mod gemm;
pub mod checkpoint;
pub mod gradcheck;
pub mod layers;
pub mod model;
pub mod tensor;

pub use layers::{
    dropout, dropout_backward, kaiming_uniform_init, maxpool2x2, maxpool2x2_backward, relu,
    relu_backward, softmax_cross_entropy, Conv2d, Dense, NnError, PoolIndices,
};
pub use model::{build_mnist_cnn, LayerSpec, Model, ModelSpec};
pub use tensor::{ShapeError, Tensor};
