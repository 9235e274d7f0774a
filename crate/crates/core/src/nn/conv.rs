use super::{init_uniform, relu, zero_bias, ParamKind, Parameters};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{gemm, MatRef, Tensor};

/// Valid (unpadded) 1-D convolution over time followed by ReLU.
///
/// `weight` is `[kernel × in_channels × out_channels]`, so the window starting
/// at timestep `i` is the contiguous slice `x[i*C_in .. (i+k)*C_in]` and the
/// whole layer is one matrix product with overlapping lhs rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv1d {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Conv1d {
    pub fn new(
        kernel: usize,
        in_channels: usize,
        out_channels: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        let weight = init_uniform(
            &[kernel, in_channels, out_channels],
            rng,
            kernel * in_channels,
            kernel * out_channels,
        )?;
        Ok(Conv1d {
            weight,
            bias: zero_bias(out_channels),
        })
    }

    pub fn from_parts(weight: Tensor, bias: Tensor) -> Result<Self> {
        if weight.ndim() != 3 || bias.shape() != [weight.shape()[2]] {
            return Err(Error::shape(format!(
                "conv weight {:?} / bias {:?}",
                weight.shape(),
                bias.shape()
            )));
        }
        Ok(Conv1d { weight, bias })
    }

    pub fn zeros_like(&self) -> Self {
        Conv1d {
            weight: self.weight.zeros_like(),
            bias: self.bias.zeros_like(),
        }
    }

    pub fn kernel_size(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape()[2]
    }

    pub fn output_len(&self, len: usize) -> Result<usize> {
        let k = self.kernel_size();
        if len < k {
            return Err(Error::SequenceShorterThanKernel { len, kernel: k });
        }
        Ok(len - k + 1)
    }

    /// `x: [T × C_in] -> [(T-k+1) × C_out]`, ReLU applied.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (t, cin) = x.dims2()?;
        if cin != self.in_channels() || x.ndim() != 2 {
            return Err(Error::shape(format!(
                "conv expects [T × {}], got {:?}",
                self.in_channels(),
                x.shape()
            )));
        }
        let k = self.kernel_size();
        let cout = self.out_channels();
        let out_len = self.output_len(t)?;
        let mut out = Tensor::zeros(&[out_len, cout]);
        for r in 0..out_len {
            out.row_mut(r).copy_from_slice(self.bias.data());
        }
        gemm(
            MatRef::strided(x.data(), out_len, k * cin, cin),
            MatRef::new(self.weight.data(), k * cin, cout),
            out.data_mut(),
            cout,
            true,
        );
        out.data_mut().iter_mut().for_each(|v| *v = relu(*v));
        Ok(out)
    }

    /// Accumulates parameter gradients into `grads` and returns `dL/dx`.
    /// `out` is the (post-ReLU) forward output.
    pub fn backward(&self, x: &Tensor, out: &Tensor, dout: &Tensor, grads: &mut Conv1d) -> Tensor {
        let (t, cin) = (x.rows(), x.cols());
        let k = self.kernel_size();
        let cout = self.out_channels();
        let out_len = out.rows();

        let mut dpre = dout.clone();
        for (g, &o) in dpre.data_mut().iter_mut().zip(out.data()) {
            if o <= 0.0 {
                *g = 0.0;
            }
        }
        for r in 0..out_len {
            for (b, g) in grads.bias.data_mut().iter_mut().zip(dpre.row(r)) {
                *b += g;
            }
        }
        // dW[k*cin × cout] += windowsᵀ · dpre
        gemm(
            MatRef::strided(x.data(), out_len, k * cin, cin).t(),
            MatRef::new(dpre.data(), out_len, cout),
            grads.weight.data_mut(),
            cout,
            true,
        );
        // dx[i+j] += dpre[i] · W_jᵀ, one product per kernel tap.
        let mut dx = Tensor::zeros(&[t, cin]);
        for j in 0..k {
            let wj = &self.weight.data()[j * cin * cout..(j + 1) * cin * cout];
            gemm(
                MatRef::new(dpre.data(), out_len, cout),
                MatRef::new(wj, cin, cout).t(),
                &mut dx.data_mut()[j * cin..],
                cin,
                true,
            );
        }
        dx
    }
}

impl Parameters for Conv1d {
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
