//! Layer primitives with hand-written forward and backward passes.
//!
//! Every layer doubles as its own gradient container: `zeros_like` gives a
//! same-shaped instance whose tensors accumulate gradients during backward.

mod attention;
mod conv;
mod dense;
pub mod gradcheck;
mod gru;
mod init;
mod ops;
mod pool;

pub use attention::{Attention, AttentionCache};
pub use conv::Conv1d;
pub use dense::{Activation, Dense};
pub use gru::{bigru_backward, bigru_forward, BiGruCache, GruCache, GruCell};
pub use init::{init_uniform, zero_bias};
pub use ops::{
    concat_time, dropout, dropout_backward, relu, softmax, softmax_backward, split_time,
    DropoutMask,
};
pub use pool::{maxpool1d, maxpool1d_backward, PoolIndices};

use crate::tensor::Tensor;

/// Role of a parameter tensor, used to scope weight decay.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamKind {
    Weight,
    Bias,
    Context,
    Embedding,
}

/// Named parameter tensors in a fixed order.
pub trait Parameters {
    fn params(&self) -> Vec<(String, ParamKind, &Tensor)>;
    fn params_mut(&mut self) -> Vec<(String, ParamKind, &mut Tensor)>;

    fn parameter_count(&self) -> usize {
        self.params().iter().map(|(_, _, t)| t.len()).sum()
    }
}

pub(crate) fn prefixed<T>(
    prefix: &str,
    items: Vec<(String, ParamKind, T)>,
) -> Vec<(String, ParamKind, T)> {
    items
        .into_iter()
        .map(|(n, k, t)| (format!("{prefix}.{n}"), k, t))
        .collect()
}
