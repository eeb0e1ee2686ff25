//! End-to-end forward pass: graph to pooled vector.

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::{init_state, Encoder, Pipeline, PoolVariant, SabStack};
use crate::pe::{node_mark_indices, product_pe, PEMatrix};
use crate::product::{ProductGraphBundle, SamplingMask};
use crate::rng;

/// Hyperparameters of a seeded pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardConfig {
    /// Product PE columns.
    pub pe_dim: usize,
    /// Hidden width.
    pub width: usize,
    pub heads: usize,
    pub layers: usize,
    /// Width of a node-mark embedding.
    pub mark_dim: usize,
    pub pool: PoolVariant,
    pub seed: u64,
}

impl Default for ForwardConfig {
    fn default() -> Self {
        Self {
            pe_dim: 4,
            width: 8,
            heads: crate::model::sab::DEFAULT_HEADS,
            layers: 2,
            mark_dim: 4,
            pool: PoolVariant::SumSum,
            seed: 0,
        }
    }
}

impl ForwardConfig {
    /// Parameters drawn from `seed` in a fixed order: mark table, encoder,
    /// then blocks and readout.
    pub fn build(&self, g: &Graph) -> Result<Pipeline> {
        if self.width == 0 {
            return Err(Error::InvalidInput("width must be positive".into()));
        }
        let mut rng = rng::seeded(self.seed);
        let feature_dim = g.features_or_constant().ncols();
        let encoder = Encoder::seeded(&mut rng, feature_dim, self.pe_dim, g.n() + 1, self.mark_dim, self.width);
        let stack = SabStack::seeded(&mut rng, self.width, self.width, self.heads, self.layers)?;
        Ok(Pipeline { encoder, stack })
    }
}

/// Runs the full pipeline. With a mask, all three adjacencies are restricted
/// to sampled subgraphs and only their rows are pooled; the positional
/// encoding is always computed on the whole graph.
pub fn forward(
    g: &Graph,
    model: &Pipeline,
    config: &ForwardConfig,
    mask: Option<&SamplingMask>,
) -> Result<Array1<f64>> {
    Ok(forward_traced(g, model, config, mask)?.0)
}

/// [`forward`], also returning the positional encoding the run consumed.
pub fn forward_traced(
    g: &Graph,
    model: &Pipeline,
    config: &ForwardConfig,
    mask: Option<&SamplingMask>,
) -> Result<(Array1<f64>, PEMatrix)> {
    let pe = product_pe(g, config.pe_dim)?;
    let marks = node_mark_indices(g);
    let x0 = init_state(g, &pe, &marks, &model.encoder)?;
    let bundle = ProductGraphBundle::new(g);
    let pooled = match mask {
        None => model.stack.forward(&x0, &bundle, config.pool, None)?,
        Some(mask) => {
            let rows = mask.product_rows();
            model
                .stack
                .forward(&x0, &bundle.masked(mask)?, config.pool, Some(&rows))?
        }
    };
    Ok((pooled, pe))
}
