use super::{init_uniform, relu, softmax, softmax_backward, zero_bias, ParamKind, Parameters};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{dot, gemm, Float, MatRef, Tensor};

/// Additive attention pooling over time.
///
/// `u_t = ReLU(x_t·W + b)`, `score_t = u_t·context`, `a = softmax(score)`,
/// output `Σ_t a_t x_t`. The weighted sum runs over the layer's own inputs,
/// so the output width equals the input width `D`.
#[derive(Clone, Debug, PartialEq)]
pub struct Attention {
    pub weight: Tensor,
    pub bias: Tensor,
    pub context: Tensor,
}

#[derive(Clone, Debug)]
pub struct AttentionCache {
    /// Post-ReLU projections `[T × D]`.
    pub projected: Tensor,
    pub weights: Vec<Float>,
}

impl Attention {
    pub fn new(dim: usize, rng: &mut Rng) -> Result<Self> {
        Ok(Attention {
            weight: init_uniform(&[dim, dim], rng, dim, dim)?,
            bias: zero_bias(dim),
            context: init_uniform(&[dim], rng, dim, 1)?,
        })
    }

    pub fn zeros_like(&self) -> Self {
        Attention {
            weight: self.weight.zeros_like(),
            bias: self.bias.zeros_like(),
            context: self.context.zeros_like(),
        }
    }

    pub fn dim(&self) -> usize {
        self.context.len()
    }

    /// Returns the pooled vector `[D]`, the attention weights `[T]`, and the cache.
    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, Vec<Float>, AttentionCache)> {
        let d = self.dim();
        if x.ndim() != 2 || x.cols() != d {
            return Err(Error::shape(format!(
                "attention expects [T × {d}], got {:?}",
                x.shape()
            )));
        }
        let t = x.rows();
        let mut projected = Tensor::zeros(&[t, d]);
        for r in 0..t {
            projected.row_mut(r).copy_from_slice(self.bias.data());
        }
        gemm(
            MatRef::new(x.data(), t, d),
            MatRef::new(self.weight.data(), d, d),
            projected.data_mut(),
            d,
            true,
        );
        projected.data_mut().iter_mut().for_each(|v| *v = relu(*v));
        let scores: Vec<Float> = (0..t)
            .map(|r| dot(projected.row(r), self.context.data()))
            .collect();
        let weights = softmax(&scores);
        let mut pooled: Vec<Float> = vec![0.0; d];
        for (r, &a) in weights.iter().enumerate() {
            for (p, &v) in pooled.iter_mut().zip(x.row(r)) {
                *p += a * v;
            }
        }
        let cache = AttentionCache {
            projected,
            weights: weights.clone(),
        };
        Ok((Tensor::from_slice(&pooled), weights, cache))
    }

    pub fn backward(
        &self,
        x: &Tensor,
        cache: &AttentionCache,
        dpooled: &Tensor,
        grads: &mut Attention,
    ) -> Tensor {
        let (t, d) = (x.rows(), x.cols());
        let g = dpooled.data();
        let a = &cache.weights;

        let mut dx = Tensor::zeros(&[t, d]);
        let da: Vec<Float> = (0..t).map(|r| dot(g, x.row(r))).collect();
        for r in 0..t {
            for (dxi, &gi) in dx.row_mut(r).iter_mut().zip(g) {
                *dxi = a[r] * gi;
            }
        }
        let dscore = softmax_backward(a, &da);

        // score_t = u_t · c
        let mut dpre = Tensor::zeros(&[t, d]);
        for r in 0..t {
            let u = cache.projected.row(r);
            for (gc, &ui) in grads.context.data_mut().iter_mut().zip(u) {
                *gc += dscore[r] * ui;
            }
            for ((dp, &ci), &ui) in dpre.row_mut(r).iter_mut().zip(self.context.data()).zip(u) {
                *dp = if ui > 0.0 { dscore[r] * ci } else { 0.0 };
            }
        }
        for r in 0..t {
            for (b, g) in grads.bias.data_mut().iter_mut().zip(dpre.row(r)) {
                *b += g;
            }
        }
        gemm(
            MatRef::new(x.data(), t, d).t(),
            MatRef::new(dpre.data(), t, d),
            grads.weight.data_mut(),
            d,
            true,
        );
        gemm(
            MatRef::new(dpre.data(), t, d),
            MatRef::new(self.weight.data(), d, d).t(),
            dx.data_mut(),
            d,
            true,
        );
        dx
    }
}

impl Parameters for Attention {
    fn params(&self) -> Vec<(String, ParamKind, &Tensor)> {
        vec![
            ("weight".into(), ParamKind::Weight, &self.weight),
            ("bias".into(), ParamKind::Bias, &self.bias),
            ("context".into(), ParamKind::Context, &self.context),
        ]
    }

    fn params_mut(&mut self) -> Vec<(String, ParamKind, &mut Tensor)> {
        vec![
            ("weight".into(), ParamKind::Weight, &mut self.weight),
            ("bias".into(), ParamKind::Bias, &mut self.bias),
            ("context".into(), ParamKind::Context, &mut self.context),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn count_and_output_shape() {
        let att = Attention::new(100, &mut Rng::new(0)).unwrap();
        assert_eq!(att.parameter_count(), 10_200);
        let (c, w, _) = att.forward(&Tensor::full(&[65, 100], 0.1)).unwrap();
        assert_eq!(c.shape(), &[100]);
        assert_eq!(w.len(), 65);
    }

    #[test]
    fn zero_projection_gives_mean() {
        let mut att = Attention::new(2, &mut Rng::new(0)).unwrap();
        att.weight.fill(0.0);
        let x = Tensor::new(vec![4, 2], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]).unwrap();
        let (c, w, _) = att.forward(&x).unwrap();
        assert!(w.iter().all(|&v| (v - 0.25).abs() < 1e-7));
        assert!((c.data()[0] - 4.0).abs() < 1e-6 && (c.data()[1] - 5.0).abs() < 1e-6);
    }

    #[test]
    fn closed_form_two_step_weights() {
        // Identity projection, context [1, 0]: scores are the first column.
        let att = Attention {
            weight: Tensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap(),
            bias: Tensor::zeros(&[2]),
            context: Tensor::from_slice(&[1.0, 0.0]),
        };
        let x = Tensor::new(vec![2, 2], vec![Float::ln(2.0), 0.0, 0.0, 1.0]).unwrap();
        let (_, w, _) = att.forward(&x).unwrap();
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-6 && (w[1] - 1.0 / 3.0).abs() < 1e-6);
    }
}
