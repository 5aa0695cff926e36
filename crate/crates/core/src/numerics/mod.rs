//! Dense tensors, primitive kernels, and the reverse-mode tape used to train the head.

pub mod gradcheck;
pub mod ops;
pub mod tape;
pub mod tensor;

pub use gradcheck::{grad_check, grad_check_many, GradCheckReport};
pub use tape::{GradTape, Gradients, Var};
pub use tensor::Tensor;
