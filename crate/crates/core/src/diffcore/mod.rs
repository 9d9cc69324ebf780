//! Dense tensors, small feed-forward networks and reverse-mode derivatives.

mod gradcheck;
mod mlp;
mod tape;
mod tensor;

pub use gradcheck::{directional_check, finite_diff_check, DEFAULT_EPSILON};
pub use mlp::{mlp_apply, mlp_eval, Activation, MlpSpec};
pub use tape::{reverse_grad, sigmoid, softplus, softplus_inverse, Gradients, NodeId, Op, Real, Tape, Var};
pub use tensor::{NamedTensor, Tensor, WeightSet};
