//! Small static-graph neural networks in f64.
//!
//! Five building blocks cover every network in the pipeline: dense,
//! same-padded 2-D convolution, ReLU, 2×2 max-pool, and a softmax
//! cross-entropy head (in [`loss`]). Backprop is written per layer.

mod adam;
mod gradcheck;
mod io;
pub mod loss;
mod network;
mod spec;
mod tensor;

pub use adam::{Adam, AdamConfig};
pub use gradcheck::{grad_check, GradCheckHead, GradCheckReport};
pub use network::{Forward, Gradients, Network, Trace};
pub use spec::{LayerSpec, NetworkSpec};
pub use tensor::Tensor;

pub(crate) use io::{read_tensor_file, write_tensor_file};
