use std::hash::{Hash, Hasher};
use std::ops::Range;

use crate::error::{Error, Result};
use crate::nn::{
    bigru_backward, bigru_forward, concat_time, maxpool1d, maxpool1d_backward, prefixed,
    split_time, Activation, Attention, AttentionCache, BiGruCache, Conv1d, Dense, GruCell,
    ParamKind, Parameters, PoolIndices,
};
use crate::rng::Rng;
use crate::tensor::{Float, Tensor};

/// Conv → pool → concat → pool → BiGRU → time-distributed dense → attention.
/// Shared by the word level (over tokens) and the sentence level (over
/// sentence vectors).
#[derive(Clone, Debug, PartialEq)]
pub struct Encoder {
    pub convs: Vec<Conv1d>,
    pub gru_fwd: GruCell,
    pub gru_bwd: GruCell,
    pub dense: Dense,
    pub attention: Attention,
    pub pool_size: usize,
}

/// Everything backward needs, plus the intermediate shapes for tracing.
#[derive(Clone, Debug)]
pub struct EncoderCache {
    pub conv_out: Vec<Tensor>,
    pub pool_idx: Vec<PoolIndices>,
    pub pooled: Vec<Tensor>,
    pub concat: Tensor,
    pub merge_idx: PoolIndices,
    pub merged: Tensor,
    pub gru_cache: BiGruCache,
    pub gru_out: Tensor,
    pub dense_out: Tensor,
    pub attention: AttentionCache,
}

/// Output shapes of each stage, in order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncoderShapes {
    pub conv: Vec<Vec<usize>>,
    pub pool: Vec<Vec<usize>>,
    pub concat: Vec<usize>,
    pub merge_pool: Vec<usize>,
    pub bigru: Vec<usize>,
    pub dense: Vec<usize>,
    pub attention: Vec<usize>,
}

pub struct EncoderDims {
    pub input: usize,
    pub filters: usize,
    pub hidden: usize,
    pub attention: usize,
    pub pool_size: usize,
    pub activation: Activation,
}

impl Encoder {
    pub fn new(kernel_sizes: &[usize], dims: &EncoderDims, rng: &mut Rng) -> Result<Self> {
        if kernel_sizes.is_empty() {
            return Err(Error::invalid("at least one kernel size is required"));
        }
        if dims.pool_size == 0 {
            return Err(Error::invalid("pool size must be positive"));
        }
        let convs = kernel_sizes
            .iter()
            .map(|&k| Conv1d::new(k, dims.input, dims.filters, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Encoder {
            convs,
            gru_fwd: GruCell::new(dims.filters, dims.hidden, rng)?,
            gru_bwd: GruCell::new(dims.filters, dims.hidden, rng)?,
            dense: Dense::new(2 * dims.hidden, dims.attention, dims.activation, rng)?,
            attention: Attention::new(dims.attention, rng)?,
            pool_size: dims.pool_size,
        })
    }

    pub fn zeros_like(&self) -> Self {
        Encoder {
            convs: self.convs.iter().map(Conv1d::zeros_like).collect(),
            gru_fwd: self.gru_fwd.zeros_like(),
            gru_bwd: self.gru_bwd.zeros_like(),
            dense: self.dense.zeros_like(),
            attention: self.attention.zeros_like(),
            pool_size: self.pool_size,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.convs[0].in_channels()
    }

    pub fn output_dim(&self) -> usize {
        self.attention.dim()
    }

    /// Number of attention timesteps for an input of `len` rows, or an error
    /// if any stage would receive fewer rows than it consumes.
    pub fn attention_steps(&self, len: usize) -> Result<usize> {
        let mut total = 0;
        for conv in &self.convs {
            let k = conv.kernel_size();
            if len < k {
                return Err(Error::SequenceShorterThanKernel { len, kernel: k });
            }
            let conv_len = len - k + 1;
            if conv_len < self.pool_size {
                return Err(Error::SequenceShorterThanKernel {
                    len: conv_len,
                    kernel: self.pool_size,
                });
            }
            total += conv_len / self.pool_size;
        }
        if total < self.pool_size {
            return Err(Error::SequenceShorterThanKernel {
                len: total,
                kernel: self.pool_size,
            });
        }
        Ok(total / self.pool_size)
    }

    /// Input rows feeding each attention timestep, for an input of `len`
    /// rows. Every step merges `pool_size` concatenated positions, and each of
    /// those covers one pooling window of one convolution branch.
    pub fn receptive_fields(&self, len: usize) -> Result<Vec<Vec<Range<usize>>>> {
        let steps = self.attention_steps(len)?;
        let p = self.pool_size;
        let mut concat = Vec::new();
        for conv in &self.convs {
            let k = conv.kernel_size();
            for q in 0..(len - k + 1) / p {
                concat.push(q * p..q * p + p - 1 + k);
            }
        }
        Ok((0..steps)
            .map(|m| concat[m * p..(m + 1) * p].to_vec())
            .collect())
    }

    /// Encodes `x: [L × C]` into a `[D]` vector and attention weights over the
    /// pooled positions.
    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, Vec<Float>, EncoderCache)> {
        if x.ndim() != 2 || x.cols() != self.input_dim() {
            return Err(Error::shape(format!(
                "encoder expects [L × {}], got {:?}",
                self.input_dim(),
                x.shape()
            )));
        }
        self.attention_steps(x.rows())?;
        let mut conv_out = Vec::with_capacity(self.convs.len());
        let mut pooled = Vec::with_capacity(self.convs.len());
        let mut pool_idx = Vec::with_capacity(self.convs.len());
        for conv in &self.convs {
            let y = conv.forward(x)?;
            let (p, idx) = maxpool1d(&y, self.pool_size)?;
            conv_out.push(y);
            pooled.push(p);
            pool_idx.push(idx);
        }
        let concat = concat_time(&pooled)?;
        let (merged, merge_idx) = maxpool1d(&concat, self.pool_size)?;
        let (gru_out, gru_cache) = bigru_forward(&merged, &self.gru_fwd, &self.gru_bwd)?;
        let dense_out = self.dense.forward(&gru_out)?;
        let (vector, weights, attention) = self.attention.forward(&dense_out)?;
        Ok((
            vector,
            weights,
            EncoderCache {
                conv_out,
                pool_idx,
                pooled,
                concat,
                merge_idx,
                merged,
                gru_cache,
                gru_out,
                dense_out,
                attention,
            },
        ))
    }

    /// Accumulates parameter gradients into `grads` and returns `dL/dx`.
    pub fn backward(
        &self,
        x: &Tensor,
        cache: &EncoderCache,
        dvec: &Tensor,
        grads: &mut Encoder,
    ) -> Tensor {
        let d_dense = self.attention.backward(
            &cache.dense_out,
            &cache.attention,
            dvec,
            &mut grads.attention,
        );
        let d_gru =
            self.dense
                .backward(&cache.gru_out, &cache.dense_out, &d_dense, &mut grads.dense);
        let d_merged = bigru_backward(
            &cache.merged,
            &cache.gru_cache,
            &d_gru,
            &self.gru_fwd,
            &self.gru_bwd,
            &mut grads.gru_fwd,
            &mut grads.gru_bwd,
        );
        let d_concat = maxpool1d_backward(cache.concat.shape(), &cache.merge_idx, &d_merged);
        let lengths: Vec<usize> = cache.pooled.iter().map(Tensor::rows).collect();
        let d_pooled = split_time(&d_concat, &lengths);
        let mut dx = x.zeros_like();
        for (i, conv) in self.convs.iter().enumerate() {
            let d_conv =
                maxpool1d_backward(cache.conv_out[i].shape(), &cache.pool_idx[i], &d_pooled[i]);
            let d_in = conv.backward(x, &cache.conv_out[i], &d_conv, &mut grads.convs[i]);
            dx.add_assign(&d_in);
        }
        dx
    }

    /// Feeds `state` the branch taken by every kinked unit: ReLU signs and
    /// max-pool winners.
    pub fn activation_pattern<H: Hasher>(&self, cache: &EncoderCache, state: &mut H) {
        let mut relu_outputs: Vec<&Tensor> = cache.conv_out.iter().collect();
        if self.dense.activation == Activation::Relu {
            relu_outputs.push(&cache.dense_out);
        }
        relu_outputs.push(&cache.attention.projected);
        for t in relu_outputs {
            t.data().iter().for_each(|&v| (v > 0.0).hash(state));
        }
        cache.pool_idx.hash(state);
        cache.merge_idx.hash(state);
    }

    pub fn shapes(cache: &EncoderCache) -> EncoderShapes {
        EncoderShapes {
            conv: cache.conv_out.iter().map(|t| t.shape().to_vec()).collect(),
            pool: cache.pooled.iter().map(|t| t.shape().to_vec()).collect(),
            concat: cache.concat.shape().to_vec(),
            merge_pool: cache.merged.shape().to_vec(),
            bigru: cache.gru_out.shape().to_vec(),
            dense: cache.dense_out.shape().to_vec(),
            attention: vec![cache.attention.projected.cols()],
        }
    }
}

impl Parameters for Encoder {
    fn params(&self) -> Vec<(String, ParamKind, &Tensor)> {
        let mut v = Vec::new();
        for (i, conv) in self.convs.iter().enumerate() {
            v.extend(prefixed(&format!("conv{}", i + 1), conv.params()));
        }
        v.extend(prefixed("gru_fwd", self.gru_fwd.params()));
        v.extend(prefixed("gru_bwd", self.gru_bwd.params()));
        v.extend(prefixed("dense", self.dense.params()));
        v.extend(prefixed("attention", self.attention.params()));
        v
    }

    fn params_mut(&mut self) -> Vec<(String, ParamKind, &mut Tensor)> {
        let mut v = Vec::new();
        for (i, conv) in self.convs.iter_mut().enumerate() {
            v.extend(prefixed(&format!("conv{}", i + 1), conv.params_mut()));
        }
        v.extend(prefixed("gru_fwd", self.gru_fwd.params_mut()));
        v.extend(prefixed("gru_bwd", self.gru_bwd.params_mut()));
        v.extend(prefixed("dense", self.dense.params_mut()));
        v.extend(prefixed("attention", self.attention.params_mut()));
        v
    }
}
