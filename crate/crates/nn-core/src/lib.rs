//! Minimal numerical engine for 3D convolutional video models.
//!
//! Rank-5 tensors in `(N, C, T, H, W)` layout, differentiable layer
//! primitives (3D convolution, batch norm, ReLU, max pool, global average
//! pool, fully connected), classification losses and first-order
//! optimizers. Storage precision is `f32`; every op is generic over
//! [`Scalar`] so gradient checks can run in `f64`.

pub mod checkpoint;
pub mod conv;
pub mod error;
pub mod init;
pub mod linear;
pub mod loss;
pub mod norm;
pub mod optim;
pub mod pool;
pub mod relu;
pub mod scalar;
pub mod tensor;

pub use error::{NnError, Result};
pub use scalar::Scalar;
pub use tensor::Tensor5;
