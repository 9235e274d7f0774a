use super::{init_uniform, zero_bias, ParamKind, Parameters};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{axpy, dot, gemm, Float, MatRef, Tensor};

/// Gated recurrent unit, row-vector convention:
///
/// ```text
/// z  = σ(x·W_z + h·U_z + b_z)
/// r  = σ(x·W_r + h·U_r + b_r)
/// h̃  = tanh(x·W_h + (r ⊙ h)·U_h + b_h)
/// h' = (1 − z) ⊙ h + z ⊙ h̃
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct GruCell {
    pub w_z: Tensor,
    pub w_r: Tensor,
    pub w_h: Tensor,
    pub u_z: Tensor,
    pub u_r: Tensor,
    pub u_h: Tensor,
    pub b_z: Tensor,
    pub b_r: Tensor,
    pub b_h: Tensor,
}

/// Per-timestep activations of one scan, indexed by input position.
#[derive(Clone, Debug)]
pub struct GruCache {
    reverse: bool,
    h_prev: Tensor,
    z: Tensor,
    r: Tensor,
    cand: Tensor,
}

#[derive(Clone, Debug)]
pub struct BiGruCache {
    pub fwd: GruCache,
    pub bwd: GruCache,
}

fn sigmoid(v: Float) -> Float {
    1.0 / (1.0 + (-v).exp())
}

impl GruCell {
    pub fn new(input: usize, hidden: usize, rng: &mut Rng) -> Result<Self> {
        let mut w = || init_uniform(&[input, hidden], rng, input, hidden);
        let (w_z, w_r, w_h) = (w()?, w()?, w()?);
        let mut u = || init_uniform(&[hidden, hidden], rng, hidden, hidden);
        let (u_z, u_r, u_h) = (u()?, u()?, u()?);
        Ok(GruCell {
            w_z,
            w_r,
            w_h,
            u_z,
            u_r,
            u_h,
            b_z: zero_bias(hidden),
            b_r: zero_bias(hidden),
            b_h: zero_bias(hidden),
        })
    }

    pub fn zeros_like(&self) -> Self {
        GruCell {
            w_z: self.w_z.zeros_like(),
            w_r: self.w_r.zeros_like(),
            w_h: self.w_h.zeros_like(),
            u_z: self.u_z.zeros_like(),
            u_r: self.u_r.zeros_like(),
            u_h: self.u_h.zeros_like(),
            b_z: self.b_z.zeros_like(),
            b_r: self.b_r.zeros_like(),
            b_h: self.b_h.zeros_like(),
        }
    }

    pub fn input_size(&self) -> usize {
        self.w_z.shape()[0]
    }

    pub fn hidden_size(&self) -> usize {
        self.b_z.len()
    }

    fn input_projection(&self, x: &Tensor, w: &Tensor, b: &Tensor) -> Tensor {
        let (t, c, h) = (x.rows(), x.cols(), self.hidden_size());
        let mut out = Tensor::zeros(&[t, h]);
        for r in 0..t {
            out.row_mut(r).copy_from_slice(b.data());
        }
        gemm(
            MatRef::new(x.data(), t, c),
            MatRef::new(w.data(), c, h),
            out.data_mut(),
            h,
            true,
        );
        out
    }

    /// Scans `x: [T × C]` from a zero state, left to right or right to left.
    /// Output row `t` is the state after consuming input row `t`.
    pub fn run(&self, x: &Tensor, reverse: bool) -> Result<(Tensor, GruCache)> {
        if x.ndim() != 2 || x.cols() != self.input_size() {
            return Err(Error::shape(format!(
                "GRU expects [T × {}], got {:?}",
                self.input_size(),
                x.shape()
            )));
        }
        let (t, h) = (x.rows(), self.hidden_size());
        let xz = self.input_projection(x, &self.w_z, &self.b_z);
        let xr = self.input_projection(x, &self.w_r, &self.b_r);
        let xh = self.input_projection(x, &self.w_h, &self.b_h);

        let mut out = Tensor::zeros(&[t, h]);
        let mut cache = GruCache {
            reverse,
            h_prev: Tensor::zeros(&[t, h]),
            z: Tensor::zeros(&[t, h]),
            r: Tensor::zeros(&[t, h]),
            cand: Tensor::zeros(&[t, h]),
        };
        // [U_z | U_r] side by side so both gates take one pass over the state.
        let mut u_zr: Vec<Float> = Vec::with_capacity(2 * h * h);
        for i in 0..h {
            u_zr.extend_from_slice(self.u_z.row(i));
            u_zr.extend_from_slice(self.u_r.row(i));
        }
        let mut state: Vec<Float> = vec![0.0; h];
        let mut a_zr: Vec<Float> = vec![0.0; 2 * h];
        let mut ah: Vec<Float> = vec![0.0; h];
        let mut gated: Vec<Float> = vec![0.0; h];
        for step in 0..t {
            let ti = if reverse { t - 1 - step } else { step };
            a_zr[..h].copy_from_slice(xz.row(ti));
            a_zr[h..].copy_from_slice(xr.row(ti));
            for (i, &hi) in state.iter().enumerate() {
                axpy(hi, &u_zr[i * 2 * h..(i + 1) * 2 * h], &mut a_zr);
            }
            a_zr.iter_mut().for_each(|v| *v = sigmoid(*v));
            let (z, r) = a_zr.split_at(h);
            for ((g, &ri), &hi) in gated.iter_mut().zip(r).zip(&state) {
                *g = ri * hi;
            }
            ah.copy_from_slice(xh.row(ti));
            for (i, &qi) in gated.iter().enumerate() {
                axpy(qi, self.u_h.row(i), &mut ah);
            }
            ah.iter_mut().for_each(|v| *v = v.tanh());

            cache.h_prev.row_mut(ti).copy_from_slice(&state);
            for j in 0..h {
                state[j] = (1.0 - z[j]) * state[j] + z[j] * ah[j];
            }
            cache.z.row_mut(ti).copy_from_slice(z);
            cache.r.row_mut(ti).copy_from_slice(r);
            cache.cand.row_mut(ti).copy_from_slice(&ah);
            out.row_mut(ti).copy_from_slice(&state);
        }
        Ok((out, cache))
    }

    /// Backpropagation through time. `dout` is `dL/d(output)` `[T × H]`.
    pub fn backward(
        &self,
        x: &Tensor,
        cache: &GruCache,
        dout: &Tensor,
        grads: &mut GruCell,
    ) -> Tensor {
        let (t, c, h) = (x.rows(), x.cols(), self.hidden_size());
        let mut d_az = Tensor::zeros(&[t, h]);
        let mut d_ar = Tensor::zeros(&[t, h]);
        let mut d_ah = Tensor::zeros(&[t, h]);
        let mut gated = Tensor::zeros(&[t, h]);

        let mut carry: Vec<Float> = vec![0.0; h];
        let mut dh_prev: Vec<Float> = vec![0.0; h];
        for step in (0..t).rev() {
            let ti = if cache.reverse { t - 1 - step } else { step };
            let hp = cache.h_prev.row(ti);
            let z = cache.z.row(ti);
            let r = cache.r.row(ti);
            let n = cache.cand.row(ti);
            let dh: Vec<Float> = dout
                .row(ti)
                .iter()
                .zip(&carry)
                .map(|(a, b)| a + b)
                .collect();

            let mut dah: Vec<Float> = vec![0.0; h];
            let mut daz: Vec<Float> = vec![0.0; h];
            for j in 0..h {
                dah[j] = dh[j] * z[j] * (1.0 - n[j] * n[j]);
                daz[j] = dh[j] * (n[j] - hp[j]) * z[j] * (1.0 - z[j]);
                dh_prev[j] = dh[j] * (1.0 - z[j]);
            }
            // q = r ⊙ h_prev feeds U_h
            let mut dar: Vec<Float> = vec![0.0; h];
            for i in 0..h {
                let dq = dot(self.u_h.row(i), &dah);
                dar[i] = dq * hp[i] * r[i] * (1.0 - r[i]);
                dh_prev[i] += dq * r[i];
            }
            for i in 0..h {
                dh_prev[i] += dot(self.u_z.row(i), &daz) + dot(self.u_r.row(i), &dar);
            }
            for j in 0..h {
                gated.row_mut(ti)[j] = r[j] * hp[j];
            }
            d_az.row_mut(ti).copy_from_slice(&daz);
            d_ar.row_mut(ti).copy_from_slice(&dar);
            d_ah.row_mut(ti).copy_from_slice(&dah);
            std::mem::swap(&mut carry, &mut dh_prev);
        }

        let hprev = MatRef::new(cache.h_prev.data(), t, h).t();
        gemm(
            hprev,
            MatRef::new(d_az.data(), t, h),
            grads.u_z.data_mut(),
            h,
            true,
        );
        gemm(
            hprev,
            MatRef::new(d_ar.data(), t, h),
            grads.u_r.data_mut(),
            h,
            true,
        );
        gemm(
            MatRef::new(gated.data(), t, h).t(),
            MatRef::new(d_ah.data(), t, h),
            grads.u_h.data_mut(),
            h,
            true,
        );

        let mut dx = Tensor::zeros(&[t, c]);
        let xt = MatRef::new(x.data(), t, c).t();
        for (da, w, gw, gb) in [
            (&d_az, &self.w_z, &mut grads.w_z, &mut grads.b_z),
            (&d_ar, &self.w_r, &mut grads.w_r, &mut grads.b_r),
            (&d_ah, &self.w_h, &mut grads.w_h, &mut grads.b_h),
        ] {
            gemm(xt, MatRef::new(da.data(), t, h), gw.data_mut(), h, true);
            for row in 0..t {
                axpy(1.0, da.row(row), gb.data_mut());
            }
            gemm(
                MatRef::new(da.data(), t, h),
                MatRef::new(w.data(), c, h).t(),
                dx.data_mut(),
                c,
                true,
            );
        }
        dx
    }
}

impl Parameters for GruCell {
    fn params(&self) -> Vec<(String, ParamKind, &Tensor)> {
        use ParamKind::*;
        vec![
            ("w_z".into(), Weight, &self.w_z),
            ("w_r".into(), Weight, &self.w_r),
            ("w_h".into(), Weight, &self.w_h),
            ("u_z".into(), Weight, &self.u_z),
            ("u_r".into(), Weight, &self.u_r),
            ("u_h".into(), Weight, &self.u_h),
            ("b_z".into(), Bias, &self.b_z),
            ("b_r".into(), Bias, &self.b_r),
            ("b_h".into(), Bias, &self.b_h),
        ]
    }

    fn params_mut(&mut self) -> Vec<(String, ParamKind, &mut Tensor)> {
        use ParamKind::*;
        vec![
            ("w_z".into(), Weight, &mut self.w_z),
            ("w_r".into(), Weight, &mut self.w_r),
            ("w_h".into(), Weight, &mut self.w_h),
            ("u_z".into(), Weight, &mut self.u_z),
            ("u_r".into(), Weight, &mut self.u_r),
            ("u_h".into(), Weight, &mut self.u_h),
            ("b_z".into(), Bias, &mut self.b_z),
            ("b_r".into(), Bias, &mut self.b_r),
            ("b_h".into(), Bias, &mut self.b_h),
        ]
    }
}

/// Forward and backward scans concatenated per timestep: `[T × 2H]`.
pub fn bigru_forward(x: &Tensor, fwd: &GruCell, bwd: &GruCell) -> Result<(Tensor, BiGruCache)> {
    if fwd.input_size() != bwd.input_size() || fwd.hidden_size() != bwd.hidden_size() {
        return Err(Error::shape(
            "forward and backward GRU cells disagree in size",
        ));
    }
    let (hf, cf) = fwd.run(x, false)?;
    let (hb, cb) = bwd.run(x, true)?;
    let (t, h) = (x.rows(), fwd.hidden_size());
    let mut out = Tensor::zeros(&[t, 2 * h]);
    for r in 0..t {
        let row = out.row_mut(r);
        row[..h].copy_from_slice(hf.row(r));
        row[h..].copy_from_slice(hb.row(r));
    }
    Ok((out, BiGruCache { fwd: cf, bwd: cb }))
}

#[allow(clippy::too_many_arguments)]
pub fn bigru_backward(
    x: &Tensor,
    cache: &BiGruCache,
    dout: &Tensor,
    fwd: &GruCell,
    bwd: &GruCell,
    gfwd: &mut GruCell,
    gbwd: &mut GruCell,
) -> Tensor {
    let (t, h) = (x.rows(), fwd.hidden_size());
    let mut df = Tensor::zeros(&[t, h]);
    let mut db = Tensor::zeros(&[t, h]);
    for r in 0..t {
        df.row_mut(r).copy_from_slice(&dout.row(r)[..h]);
        db.row_mut(r).copy_from_slice(&dout.row(r)[h..]);
    }
    let mut dx = fwd.backward(x, &cache.fwd, &df, gfwd);
    dx.add_assign(&bwd.backward(x, &cache.bwd, &db, gbwd));
    dx
}
