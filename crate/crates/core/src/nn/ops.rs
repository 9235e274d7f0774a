use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{dot, Float, Tensor};

/// `max(v, 0)` that lets NaN through instead of mapping it to zero.
pub fn relu(v: Float) -> Float {
    if v < 0.0 {
        0.0
    } else {
        v
    }
}

/// Max-shifted softmax of a vector.
pub fn softmax(z: &[Float]) -> Vec<Float> {
    if z.is_empty() {
        return Vec::new();
    }
    let max = z.iter().fold(Float::NEG_INFINITY, |m, &v| m.max(v));
    let mut out: Vec<Float> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: Float = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= sum);
    out
}

/// Vector-Jacobian product of softmax: `p ⊙ (g − p·g)`.
pub fn softmax_backward(p: &[Float], grad: &[Float]) -> Vec<Float> {
    let inner = dot(p, grad);
    p.iter()
        .zip(grad)
        .map(|(&pi, &gi)| pi * (gi - inner))
        .collect()
}

/// Stacks `[T_i × C]` parts along time, in order.
pub fn concat_time(parts: &[Tensor]) -> Result<Tensor> {
    let first = parts
        .first()
        .ok_or_else(|| Error::invalid("concat of zero tensors"))?;
    let c = first.cols();
    let mut rows = 0;
    for p in parts {
        if p.ndim() != 2 || p.cols() != c {
            return Err(Error::shape(format!(
                "concat channel mismatch: {:?} vs {c}",
                p.shape()
            )));
        }
        rows += p.rows();
    }
    let mut data = Vec::with_capacity(rows * c);
    for p in parts {
        data.extend_from_slice(p.data());
    }
    Tensor::new(vec![rows, c], data)
}

/// Inverse of [`concat_time`] for gradients.
pub fn split_time(x: &Tensor, lengths: &[usize]) -> Vec<Tensor> {
    let c = x.cols();
    let mut offset = 0;
    lengths
        .iter()
        .map(|&len| {
            let part = x.data()[offset * c..(offset + len) * c].to_vec();
            offset += len;
            Tensor::new(vec![len, c], part).expect("split_time: bad lengths")
        })
        .collect()
}

/// Survivor scale per element: 0 for dropped, `1/(1-rate)` for kept.
#[derive(Clone, Debug, PartialEq)]
pub struct DropoutMask(pub Vec<Float>);

/// Inverted dropout. With `training == false` (or `rate == 0`) it is the
/// identity and draws nothing from `rng`.
pub fn dropout(
    x: &Tensor,
    rate: Float,
    training: bool,
    rng: &mut Rng,
) -> Result<(Tensor, Option<DropoutMask>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::invalid(format!(
            "dropout rate {rate} outside [0, 1)"
        )));
    }
    if !training || rate == 0.0 {
        return Ok((x.clone(), None));
    }
    let keep_scale = 1.0 / (1.0 - rate);
    let mask: Vec<Float> = (0..x.len())
        .map(|_| {
            if (rng.next_f32() as Float) < rate {
                0.0
            } else {
                keep_scale
            }
        })
        .collect();
    let mut out = x.clone();
    out.data_mut()
        .iter_mut()
        .zip(&mask)
        .for_each(|(v, m)| *v *= m);
    Ok((out, Some(DropoutMask(mask))))
}

pub fn dropout_backward(mask: Option<&DropoutMask>, dout: &Tensor) -> Tensor {
    let mut dx = dout.clone();
    if let Some(DropoutMask(m)) = mask {
        dx.data_mut().iter_mut().zip(m).for_each(|(g, s)| *g *= s);
    }
    dx
}
