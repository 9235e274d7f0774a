use crate::error::{Error, Result};
use crate::nn::Parameters;
use crate::tensor::{Float, Tensor};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates per parameter tensor, plus the step count.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub first: Vec<Tensor>,
    pub second: Vec<Tensor>,
}

impl AdamState {
    pub fn new<P: Parameters>(params: &P) -> Self {
        let zeros: Vec<Tensor> = params
            .params()
            .iter()
            .map(|(_, _, t)| t.zeros_like())
            .collect();
        AdamState {
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }
}

/// One bias-corrected Adam update of every tensor in `params`.
pub fn adam_step<P: Parameters>(
    params: &mut P,
    grads: &P,
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> Result<()> {
    let grads = grads.params();
    let mut params = params.params_mut();
    if grads.len() != params.len() || state.first.len() != params.len() {
        return Err(Error::shape(
            "optimizer state does not match the parameters",
        ));
    }
    state.step += 1;
    let t = state.step as i32;
    let correct1 = 1.0 - cfg.beta1.powi(t);
    let correct2 = 1.0 - cfg.beta2.powi(t);
    let (b1, b2) = (cfg.beta1 as Float, cfg.beta2 as Float);
    let step_size = (cfg.lr / correct1) as Float;
    let root_correct2 = correct2.sqrt() as Float;
    let eps = cfg.eps as Float;
    for (i, (_, _, w)) in params.iter_mut().enumerate() {
        let g = grads[i].2;
        if g.shape() != w.shape() {
            return Err(Error::shape(format!(
                "gradient {:?} for parameter {:?}",
                g.shape(),
                w.shape()
            )));
        }
        let m = state.first[i].data_mut();
        let v = state.second[i].data_mut();
        for (((wj, &gj), mj), vj) in w
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(m.iter_mut())
            .zip(v.iter_mut())
        {
            *mj = b1 * *mj + (1.0 - b1) * gj;
            *vj = b2 * *vj + (1.0 - b2) * gj * gj;
            // w -= lr · m̂ / (√v̂ + ε) with m̂ = m/c1 and v̂ = v/c2
            *wj -= step_size * *mj / (vj.sqrt() / root_correct2 + eps);
        }
    }
    Ok(())
}
