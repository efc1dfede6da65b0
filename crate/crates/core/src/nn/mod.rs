//! Dense tensors, a reverse-mode tape, FC and graph-convolution layers,
//! Adam, finite-difference checking and text checkpoints.

mod adam;
pub mod checkpoint;
mod gradcheck;
mod layers;
mod params;
mod tape;
mod tensor;

pub use adam::{Adam, Direction};
pub use gradcheck::{check_gradients, numeric_gradient, relative_error, GradCheckReport};
pub use layers::{
    fc_forward, gcn_forward, normalized_adjacency, softmax, Activation, Dense, GcnLayer,
};
pub use params::{Param, ParamId, ParamSet};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;
