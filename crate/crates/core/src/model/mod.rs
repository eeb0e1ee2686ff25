//! Attention-based message passing on the product graph.

pub mod attention;
pub mod gradcheck;
pub mod layers;
pub mod params;
pub mod rgcn;
pub mod sab;

pub use attention::{sparse_attention, AttentionParams};
pub use gradcheck::{grad_check, GradCheckReport, Objective, PooledSabObjective};
pub use layers::{Linear, Mlp};
pub use params::{load_parameters, save_parameters, Parameterized};
pub use rgcn::{rgcn_layer, RGCNParameters};
pub use sab::{
    init_state, point_update, pool, sab_forward, Encoder, PoolVariant, ProductState, SABParameters, SabStack,
};

use params::{prefixed, prefixed_mut, Tensor, TensorMut};

/// Encoder plus block stack: everything needed to map a graph to a pooled
/// vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    pub encoder: Encoder,
    pub stack: SabStack,
}

impl Parameterized for Pipeline {
    fn tensors(&self) -> Vec<Tensor<'_>> {
        let mut out = prefixed("encoder", self.encoder.tensors());
        out.extend(prefixed("stack", self.stack.tensors()));
        out
    }

    fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        let mut out = prefixed_mut("encoder", self.encoder.tensors_mut());
        out.extend(prefixed_mut("stack", self.stack.tensors_mut()));
        out
    }
}
