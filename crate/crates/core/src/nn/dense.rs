use serde::{Deserialize, Serialize};

use super::{init_uniform, relu, softmax, softmax_backward, zero_bias, ParamKind, Parameters};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{gemm, MatRef, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
    Softmax,
}

/// Affine map plus activation. On a `[T × C_in]` input it is applied to every
/// row with shared weights (time-distributed).
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub weight: Tensor,
    pub bias: Tensor,
    pub activation: Activation,
}

impl Dense {
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        rng: &mut Rng,
    ) -> Result<Self> {
        Ok(Dense {
            weight: init_uniform(&[in_dim, out_dim], rng, in_dim, out_dim)?,
            bias: zero_bias(out_dim),
            activation,
        })
    }

    pub fn zeros_like(&self) -> Self {
        Dense {
            weight: self.weight.zeros_like(),
            bias: self.bias.zeros_like(),
            activation: self.activation,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn out_dim(&self) -> usize {
        self.weight.shape()[1]
    }

    /// `[.. × C_in] -> [.. × C_out]`; a 1-D input gives a 1-D output.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (rows, cin) = x.dims2()?;
        if cin != self.in_dim() {
            return Err(Error::shape(format!(
                "dense expects trailing dim {}, got {:?}",
                self.in_dim(),
                x.shape()
            )));
        }
        let cout = self.out_dim();
        let shape = if x.ndim() == 1 {
            vec![cout]
        } else {
            vec![rows, cout]
        };
        let mut out = Tensor::zeros(&shape);
        for r in 0..rows {
            out.data_mut()[r * cout..(r + 1) * cout].copy_from_slice(self.bias.data());
        }
        gemm(
            MatRef::new(x.data(), rows, cin),
            MatRef::new(self.weight.data(), cin, cout),
            out.data_mut(),
            cout,
            true,
        );
        match self.activation {
            Activation::Linear => {}
            Activation::Relu => out.data_mut().iter_mut().for_each(|v| *v = relu(*v)),
            Activation::Softmax => {
                for r in 0..rows {
                    let row = &mut out.data_mut()[r * cout..(r + 1) * cout];
                    let p = softmax(row);
                    row.copy_from_slice(&p);
                }
            }
        }
        Ok(out)
    }

    /// `out` is the post-activation forward output.
    pub fn backward(&self, x: &Tensor, out: &Tensor, dout: &Tensor, grads: &mut Dense) -> Tensor {
        let rows = if x.ndim() == 1 { 1 } else { x.rows() };
        let (cin, cout) = (self.in_dim(), self.out_dim());
        let mut dpre = dout.clone();
        match self.activation {
            Activation::Linear => {}
            Activation::Relu => {
                for (g, &o) in dpre.data_mut().iter_mut().zip(out.data()) {
                    if o <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            Activation::Softmax => {
                for r in 0..rows {
                    let span = r * cout..(r + 1) * cout;
                    let g = softmax_backward(&out.data()[span.clone()], &dout.data()[span.clone()]);
                    dpre.data_mut()[span].copy_from_slice(&g);
                }
            }
        }
        for r in 0..rows {
            for (b, g) in grads
                .bias
                .data_mut()
                .iter_mut()
                .zip(&dpre.data()[r * cout..(r + 1) * cout])
            {
                *b += g;
            }
        }
        gemm(
            MatRef::new(x.data(), rows, cin).t(),
            MatRef::new(dpre.data(), rows, cout),
            grads.weight.data_mut(),
            cout,
            true,
        );
        let mut dx = x.zeros_like();
        gemm(
            MatRef::new(dpre.data(), rows, cout),
            MatRef::new(self.weight.data(), cin, cout).t(),
            dx.data_mut(),
            cin,
            false,
        );
        dx
    }
}

impl Parameters for Dense {
    fn params(&self) -> Vec<(String, ParamKind, &Tensor)> {
        vec![
            ("weight".into(), ParamKind::Weight, &self.weight),
            ("bias".into(), ParamKind::Bias, &self.bias),
        ]
    }

    fn params_mut(&mut self) -> Vec<(String, ParamKind, &mut Tensor)> {
        vec![
            ("weight".into(), ParamKind::Weight, &mut self.weight),
            ("bias".into(), ParamKind::Bias, &mut self.bias),
        ]
    }
}
