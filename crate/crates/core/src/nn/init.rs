use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{Float, Tensor};

/// Glorot-uniform initialization: values in `±sqrt(6 / (fan_in + fan_out))`,
/// drawn from `rng` in row-major order.
pub fn init_uniform(
    shape: &[usize],
    rng: &mut Rng,
    fan_in: usize,
    fan_out: usize,
) -> Result<Tensor> {
    if shape.is_empty() || shape.contains(&0) {
        return Err(Error::shape(format!("cannot initialize shape {shape:?}")));
    }
    if fan_in == 0 || fan_out == 0 {
        return Err(Error::invalid("fan_in and fan_out must be positive"));
    }
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt() as Float;
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.uniform(-bound, bound)).collect();
    Tensor::new(shape.to_vec(), data)
}

pub fn zero_bias(n: usize) -> Tensor {
    Tensor::zeros(&[n])
}
