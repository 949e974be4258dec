//! Trainable layers with hand-written backward passes.
//!
//! Signals for a batch are stacked vertically: a batch of `B` samples with
//! `n` vertices and `F` features is a `(B * n) x F` matrix, sample `b`
//! occupying rows `b * n .. (b + 1) * n`.

mod adam;
mod batchnorm;
mod conv;
mod dense;
mod init;
mod loss;

pub use adam::{clip_global_norm, AdamState};
pub use batchnorm::{BatchNorm, BatchNormCache};
pub use conv::{ConvCache, HyperConvLayer, ZeroLaplacian};
pub use dense::DenseParam;
pub use init::xavier_init;
pub use loss::{cross_entropy_loss, softmax_rows};

/// A named tensor exposed for optimisation or serialization.
pub struct ParamRef<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub value: &'a mut [f64],
    /// `None` for non-trainable buffers such as running statistics.
    pub grad: Option<&'a mut [f64]>,
}

/// Types owning named tensors.
pub trait Parameterized {
    /// Visits every tensor in a fixed order.
    fn visit(&mut self, prefix: &str, f: &mut dyn FnMut(ParamRef<'_>));

    fn zero_grads(&mut self) {
        self.visit("", &mut |p| {
            if let Some(g) = p.grad {
                g.iter_mut().for_each(|x| *x = 0.0);
            }
        });
    }
}

/// Training mode uses batch statistics in batch norm and records caches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}
