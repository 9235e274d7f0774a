use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Flat source index of each pooled output element.
pub type PoolIndices = Vec<usize>;

/// Non-overlapping max pooling over time with window and stride `size`.
/// A trailing remainder shorter than `size` is dropped. Ties pick the first
/// maximal timestep, which is also where backward routes the gradient. A NaN
/// in a window wins so it is not silently dropped.
pub fn maxpool1d(x: &Tensor, size: usize) -> Result<(Tensor, PoolIndices)> {
    if x.ndim() != 2 {
        return Err(Error::shape(format!(
            "maxpool expects [T × C], got {:?}",
            x.shape()
        )));
    }
    if size == 0 {
        return Err(Error::invalid("pool size must be positive"));
    }
    let (t, c) = (x.rows(), x.cols());
    if t < size {
        return Err(Error::SequenceShorterThanKernel {
            len: t,
            kernel: size,
        });
    }
    let out_len = t / size;
    let mut out = Tensor::zeros(&[out_len, c]);
    let mut idx = vec![0usize; out_len * c];
    let src = x.data();
    for o in 0..out_len {
        for ch in 0..c {
            let mut best = o * size * c + ch;
            for w in 1..size {
                let cand = (o * size + w) * c + ch;
                if src[cand] > src[best] || src[cand].is_nan() {
                    best = cand;
                }
            }
            out.data_mut()[o * c + ch] = src[best];
            idx[o * c + ch] = best;
        }
    }
    Ok((out, idx))
}

pub fn maxpool1d_backward(input_shape: &[usize], idx: &PoolIndices, dout: &Tensor) -> Tensor {
    let mut dx = Tensor::zeros(input_shape);
    for (&i, &g) in idx.iter().zip(dout.data()) {
        dx.data_mut()[i] += g;
    }
    dx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pooled_lengths() {
        for (t, expect) in [(198, 66), (197, 65), (196, 65), (13, 4), (12, 4), (11, 3)] {
            let (y, _) = maxpool1d(&Tensor::zeros(&[t, 2]), 3).unwrap();
            assert_eq!(y.rows(), expect, "T={t}");
        }
    }

    #[test]
    fn windowed_max_drops_remainder() {
        let x = Tensor::new(vec![7, 1], vec![1.0, 5.0, 2.0, 4.0, 3.0, 9.0, 7.0]).unwrap();
        let (y, idx) = maxpool1d(&x, 3).unwrap();
        assert_eq!(y.data(), &[5.0, 9.0]);
        assert_eq!(idx, vec![1, 5]);
    }

    #[test]
    fn constant_input() {
        let (y, idx) = maxpool1d(&Tensor::full(&[9, 2], 2.5), 3).unwrap();
        assert!(y.data().iter().all(|&v| v == 2.5));
        // first occurrence on ties
        assert_eq!(idx, vec![0, 1, 6, 7, 12, 13]);
    }

    #[test]
    fn backward_routes_to_argmax() {
        let x = Tensor::new(vec![6, 1], vec![1.0, 3.0, 3.0, 0.0, -1.0, -2.0]).unwrap();
        let (_, idx) = maxpool1d(&x, 3).unwrap();
        let dx = maxpool1d_backward(
            x.shape(),
            &idx,
            &Tensor::from_slice(&[2.0, 5.0]).reshape(vec![2, 1]).unwrap(),
        );
        assert_eq!(dx.data(), &[0.0, 2.0, 0.0, 5.0, 0.0, 0.0]);
    }

    #[test]
    fn too_short() {
        assert!(maxpool1d(&Tensor::zeros(&[2, 4]), 3).is_err());
    }
}
