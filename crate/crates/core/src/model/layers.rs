//! Dense layers with hand-written backward passes.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::params::{prefixed, prefixed_mut, Parameterized, Tensor, TensorMut};
use crate::error::{Error, Result};
use crate::rng::{uniform_symmetric, SplitMix64};

/// Uniform `[-1/√fan_in, 1/√fan_in]` matrix.
pub(crate) fn init_matrix(rng: &mut SplitMix64, rows: usize, cols: usize, fan_in: usize) -> Array2<f64> {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || uniform_symmetric(rng, bound))
}

pub(crate) fn check_width(x: ArrayView2<'_, f64>, width: usize, what: &str) -> Result<()> {
    if x.ncols() != width {
        return Err(Error::ShapeMismatch(format!(
            "{what} expects width {width}, got {}",
            x.ncols()
        )));
    }
    Ok(())
}

/// `x · W + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Array2<f64>,
    pub bias: Option<Array1<f64>>,
}

impl Linear {
    pub fn seeded(rng: &mut SplitMix64, d_in: usize, d_out: usize, with_bias: bool) -> Self {
        let weight = init_matrix(rng, d_in, d_out, d_in);
        let bias = with_bias.then(|| init_matrix(rng, 1, d_out, d_in).remove_axis(Axis(0)));
        Self { weight, bias }
    }

    pub fn zeros(d_in: usize, d_out: usize, with_bias: bool) -> Self {
        Self {
            weight: Array2::zeros((d_in, d_out)),
            bias: with_bias.then(|| Array1::zeros(d_out)),
        }
    }

    pub fn d_in(&self) -> usize {
        self.weight.nrows()
    }

    pub fn d_out(&self) -> usize {
        self.weight.ncols()
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        check_width(x, self.d_in(), "linear layer")?;
        let mut y = x.dot(&self.weight);
        if let Some(b) = &self.bias {
            y += b;
        }
        Ok(y)
    }

    /// Accumulates parameter gradients into `grad`; returns `∂L/∂x`.
    pub fn backward(&self, x: ArrayView2<'_, f64>, dy: ArrayView2<'_, f64>, grad: &mut Linear) -> Array2<f64> {
        grad.weight += &x.t().dot(&dy);
        if let Some(gb) = &mut grad.bias {
            *gb += &dy.sum_axis(Axis(0));
        }
        dy.dot(&self.weight.t())
    }
}

impl Parameterized for Linear {
    fn tensors(&self) -> Vec<Tensor<'_>> {
        let mut out = vec![Tensor {
            name: "weight".into(),
            shape: self.weight.shape().to_vec(),
            data: self.weight.as_slice().expect("standard layout"),
        }];
        if let Some(b) = &self.bias {
            out.push(Tensor {
                name: "bias".into(),
                shape: vec![b.len()],
                data: b.as_slice().unwrap(),
            });
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        let shape = self.weight.shape().to_vec();
        let mut out = vec![TensorMut {
            name: "weight".into(),
            shape,
            data: self.weight.as_slice_mut().expect("standard layout"),
        }];
        if let Some(b) = &mut self.bias {
            let len = b.len();
            out.push(TensorMut {
                name: "bias".into(),
                shape: vec![len],
                data: b.as_slice_mut().unwrap(),
            });
        }
        out
    }
}

/// Two-layer perceptron with one ReLU hidden layer. The ReLU derivative at
/// zero is taken as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub hidden: Linear,
    pub output: Linear,
}

/// Pre-activation of the hidden layer, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct MlpCache {
    pre: Array2<f64>,
    act: Array2<f64>,
}

impl Mlp {
    pub fn seeded(rng: &mut SplitMix64, d_in: usize, d_hidden: usize, d_out: usize) -> Self {
        let hidden = Linear::seeded(rng, d_in, d_hidden, true);
        let output = Linear::seeded(rng, d_hidden, d_out, true);
        Self { hidden, output }
    }

    pub fn zeros(d_in: usize, d_hidden: usize, d_out: usize) -> Self {
        Self {
            hidden: Linear::zeros(d_in, d_hidden, true),
            output: Linear::zeros(d_hidden, d_out, true),
        }
    }

    pub fn d_in(&self) -> usize {
        self.hidden.d_in()
    }

    pub fn d_out(&self) -> usize {
        self.output.d_out()
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        Ok(self.forward_cached(x)?.0)
    }

    pub fn forward_cached(&self, x: ArrayView2<'_, f64>) -> Result<(Array2<f64>, MlpCache)> {
        let pre = self.hidden.forward(x)?;
        let act = pre.mapv(|z| z.max(0.0));
        let out = self.output.forward(act.view())?;
        Ok((out, MlpCache { pre, act }))
    }

    pub fn backward(
        &self,
        x: ArrayView2<'_, f64>,
        cache: &MlpCache,
        dy: ArrayView2<'_, f64>,
        grad: &mut Mlp,
    ) -> Array2<f64> {
        let mut dact = self.output.backward(cache.act.view(), dy, &mut grad.output);
        ndarray::Zip::from(&mut dact).and(&cache.pre).for_each(|d, &z| {
            if z <= 0.0 {
                *d = 0.0;
            }
        });
        self.hidden.backward(x, dact.view(), &mut grad.hidden)
    }
}

impl Parameterized for Mlp {
    fn tensors(&self) -> Vec<Tensor<'_>> {
        let mut out = prefixed("hidden", self.hidden.tensors());
        out.extend(prefixed("output", self.output.tensors()));
        out
    }

    fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        let mut out = prefixed_mut("hidden", self.hidden.tensors_mut());
        out.extend(prefixed_mut("output", self.output.tensors_mut()));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use ndarray::array;

    #[test]
    fn linear_forward_and_shape_check() {
        let layer = Linear {
            weight: array![[1.0, 2.0], [3.0, 4.0]],
            bias: Some(array![0.5, -0.5]),
        };
        let y = layer.forward(array![[1.0, 1.0]].view()).unwrap();
        assert_eq!(y, array![[4.5, 5.5]]);
        assert!(matches!(
            layer.forward(array![[1.0]].view()),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn mlp_relu_clips_negative_hidden_units() {
        let mlp = Mlp {
            hidden: Linear {
                weight: array![[1.0, -1.0]],
                bias: None,
            },
            output: Linear {
                weight: array![[1.0], [1.0]],
                bias: None,
            },
        };
        assert_eq!(mlp.forward(array![[2.0], [-3.0]].view()).unwrap(), array![[2.0], [3.0]]);
    }

    #[test]
    fn flat_round_trip_and_locate() {
        let mut rng = seeded(1);
        let mlp = Mlp::seeded(&mut rng, 3, 4, 2);
        assert_eq!(mlp.num_parameters(), 3 * 4 + 4 + 4 * 2 + 2);
        let flat = mlp.to_flat();
        let mut other = Mlp::zeros(3, 4, 2);
        other.load_flat(&flat).unwrap();
        assert_eq!(other, mlp);
        assert_eq!(mlp.locate(13), Some(("hidden.bias".into(), 1)));
        assert_eq!(mlp.locate(100), None);
    }
}
