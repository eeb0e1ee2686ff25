//! Unnormalized relational graph convolution over the three product edge
//! types, used to check that these adjacencies can express the GNN-SSWL+
//! update.

use ndarray::{s, Array2, ArrayView2};

use super::layers::check_width;
use crate::error::{Error, Result};
use crate::product::ProductGraphBundle;

#[derive(Debug, Clone, PartialEq)]
pub struct RGCNParameters {
    pub w_self: Array2<f64>,
    pub w_internal: Array2<f64>,
    pub w_external: Array2<f64>,
    pub w_point: Array2<f64>,
}

impl RGCNParameters {
    /// Block weights that place `X`, `A_point·X`, `A_G·X` and `A_{G^S}·X`
    /// side by side in a `4d`-wide output.
    pub fn concatenating(d: usize) -> Self {
        let block = |slot: usize| {
            let mut w = Array2::zeros((d, 4 * d));
            w.slice_mut(s![.., slot * d..(slot + 1) * d]).assign(&Array2::eye(d));
            w
        };
        Self {
            w_self: block(0),
            w_point: block(1),
            w_internal: block(2),
            w_external: block(3),
        }
    }

    fn check(&self) -> Result<()> {
        let shape = self.w_self.dim();
        if [&self.w_internal, &self.w_external, &self.w_point]
            .iter()
            .any(|w| w.dim() != shape)
        {
            return Err(Error::ShapeMismatch("RGCN weight matrices differ in shape".into()));
        }
        Ok(())
    }
}

/// `X W₀ + A_G X W_G + A_{G^S} X W_{G^S} + A_point X W_point`.
pub fn rgcn_layer(x: ArrayView2<'_, f64>, bundle: &ProductGraphBundle, params: &RGCNParameters) -> Result<Array2<f64>> {
    params.check()?;
    check_width(x, params.w_self.nrows(), "RGCN layer")?;
    let mut out = x.dot(&params.w_self);
    out += &bundle.internal.matmul(x)?.dot(&params.w_internal);
    out += &bundle.external.matmul(x)?.dot(&params.w_external);
    out += &bundle.point.matmul(x)?.dot(&params.w_point);
    Ok(out)
}
