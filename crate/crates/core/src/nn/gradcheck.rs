//! Central finite-difference checks of analytic gradients.

use super::{
    bigru_backward, bigru_forward, concat_time, dropout, dropout_backward, maxpool1d,
    maxpool1d_backward, softmax, softmax_backward, split_time, Activation, Attention, Conv1d,
    Dense, GruCell, Parameters,
};
use crate::rng::Rng;
use crate::tensor::{Float, Tensor};

#[derive(Clone, Copy, Debug)]
pub struct GradCheckConfig {
    /// Central-difference step.
    pub eps: Float,
    /// Lower bound of the relative-error denominator.
    pub floor: f64,
    /// Pass threshold on the maximum relative error.
    pub tol: f64,
}

impl GradCheckConfig {
    /// Tight settings for exact-arithmetic style comparisons: tiny floor.
    pub fn strict(eps: Float, tol: f64) -> Self {
        GradCheckConfig {
            eps,
            floor: 1e-8,
            tol,
        }
    }
}

/// In single precision each output is rounded to ~6e-8 relative, so a central
/// difference with step 1e-3 carries absolute noise of up to ~2e-4 on
/// unit-scale objectives. Gradients smaller than that cannot be resolved to
/// 1e-3 relative, so the denominator floor is raised to 0.5: noise alone then
/// stays below 4e-4, while a wrong gradient of any appreciable size still
/// fails. Double precision keeps the 1e-8 floor with a smaller step.
#[cfg(not(feature = "f64"))]
impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            eps: 1e-3,
            floor: 0.5,
            tol: 1e-3,
        }
    }
}

#[cfg(feature = "f64")]
impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig::strict(1e-5, 1e-5)
    }
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
    /// Coordinates left out because the perturbation crossed a kink.
    pub skipped: usize,
    pub passed: bool,
    pub diagnostic: Option<String>,
}

impl GradCheckReport {
    pub(crate) fn merge(self, other: GradCheckReport) -> GradCheckReport {
        let passed = self.passed && other.passed;
        let diagnostic = self.diagnostic.clone().or(other.diagnostic.clone());
        let checked = self.checked + other.checked;
        let skipped = self.skipped + other.skipped;
        let mut worst = if other.max_rel_error > self.max_rel_error || other.max_rel_error.is_nan()
        {
            other
        } else {
            self
        };
        worst.passed = passed;
        worst.diagnostic = diagnostic;
        worst.checked = checked;
        worst.skipped = skipped;
        worst
    }
}

/// Relative error `|a − n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Compares `analytic` against central differences of `f` around `params`.
///
/// `f` maps a parameter tensor to a scalar. Each coordinate is perturbed by
/// `±eps`; the difference quotient divides by the step actually represented
/// in `Float`, not the nominal one.
pub fn grad_check<F>(
    mut f: F,
    params: &Tensor,
    analytic: &Tensor,
    cfg: &GradCheckConfig,
) -> GradCheckReport
where
    F: FnMut(&Tensor) -> f64,
{
    grad_check_piecewise(|p| (f(p), 0), params, analytic, cfg)
}

/// Like [`grad_check`] for piecewise-smooth objectives. `f` also returns a
/// fingerprint of the branch each kinked unit took (ReLU sign, max-pool
/// winner). A coordinate whose `±eps` evaluations land on a different branch
/// than the unperturbed point has no two-sided derivative there and is
/// skipped.
pub fn grad_check_piecewise<F>(
    mut f: F,
    params: &Tensor,
    analytic: &Tensor,
    cfg: &GradCheckConfig,
) -> GradCheckReport
where
    F: FnMut(&Tensor) -> (f64, u64),
{
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
        checked: 0,
        skipped: 0,
        passed: true,
        diagnostic: None,
    };
    if analytic.shape() != params.shape() {
        report.passed = false;
        report.max_rel_error = f64::INFINITY;
        report.diagnostic = Some(format!(
            "gradient shape {:?} differs from parameter shape {:?}",
            analytic.shape(),
            params.shape()
        ));
        return report;
    }
    if !params.is_finite() || !analytic.is_finite() {
        report.passed = false;
        report.max_rel_error = f64::INFINITY;
        report.diagnostic = Some("non-finite parameter or analytic gradient".into());
        return report;
    }
    let (_, pattern) = f(params);
    let mut probe = params.clone();
    for i in 0..params.len() {
        let w = params.data()[i];
        let plus = w + cfg.eps;
        let minus = w - cfg.eps;
        probe.data_mut()[i] = plus;
        let (fp, pattern_plus) = f(&probe);
        probe.data_mut()[i] = minus;
        let (fm, pattern_minus) = f(&probe);
        probe.data_mut()[i] = w;
        if !fp.is_finite() || !fm.is_finite() {
            report.passed = false;
            report.max_rel_error = f64::INFINITY;
            report.worst_index = i;
            report.diagnostic = Some(format!("non-finite objective when perturbing index {i}"));
            return report;
        }
        if pattern_plus != pattern || pattern_minus != pattern {
            report.skipped += 1;
            continue;
        }
        let numeric = (fp - fm) / (plus as f64 - minus as f64);
        let a = analytic.data()[i] as f64;
        let err = relative_error(a, numeric, cfg.floor);
        report.checked += 1;
        if err > report.max_rel_error {
            report.max_rel_error = err;
            report.worst_index = i;
            report.analytic = a;
            report.numeric = numeric;
        }
    }
    report.passed = report.max_rel_error < cfg.tol;
    report
}

/// Result of checking one layer across all its parameter tensors and its input.
#[derive(Clone, Debug)]
pub struct LayerCheck {
    pub layer: String,
    pub report: GradCheckReport,
}

/// Options for [`layer_suite`].
#[derive(Clone, Debug, Default)]
pub struct SuiteOptions {
    pub quick: bool,
    /// Name of a layer whose analytic gradient is deliberately scaled, to
    /// confirm the harness notices a broken backward pass.
    pub fault: Option<String>,
}

fn random_tensor(shape: &[usize], rng: &mut Rng, lo: Float, hi: Float) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(
        shape.to_vec(),
        (0..n).map(|_| rng.uniform(lo, hi)).collect(),
    )
    .unwrap()
}

fn project(out: &Tensor, weights: &Tensor) -> f64 {
    out.data()
        .iter()
        .zip(weights.data())
        .map(|(&o, &w)| o as f64 * w as f64)
        .sum()
}

fn inject(name: &str, opts: &SuiteOptions, g: &mut Tensor) {
    if opts.fault.as_deref() == Some(name) {
        g.scale(1.05);
    }
}

/// Checks every parameter tensor of a layer plus its input.
///
/// `forward(layer, x)` returns the layer output; `backward(layer, x, dout)`
/// returns `(parameter grads, dx)`.
fn check_layer<L, Fw, Bw>(
    name: &str,
    layer: &L,
    x: &Tensor,
    rng: &mut Rng,
    cfg: &GradCheckConfig,
    opts: &SuiteOptions,
    forward: Fw,
    backward: Bw,
) -> LayerCheck
where
    L: Parameters + Clone,
    Fw: Fn(&L, &Tensor) -> Tensor,
    Bw: Fn(&L, &Tensor, &Tensor) -> (L, Tensor),
{
    let out = forward(layer, x);
    let proj = random_tensor(out.shape(), rng, -1.0, 1.0);
    let (mut grads, mut dx) = backward(layer, x, &proj);
    for (_, _, g) in grads.params_mut() {
        inject(name, opts, g);
    }
    inject(name, opts, &mut dx);

    let mut report = grad_check(|xp| project(&forward(layer, xp), &proj), x, &dx, cfg);
    let names: Vec<String> = layer.params().into_iter().map(|(n, _, _)| n).collect();
    for (pi, pname) in names.iter().enumerate() {
        let base = layer.params()[pi].2.clone();
        let analytic = grads.params()[pi].2.clone();
        let r = grad_check(
            |p| {
                let mut l = layer.clone();
                *l.params_mut()[pi].2 = p.clone();
                project(&forward(&l, x), &proj)
            },
            &base,
            &analytic,
            cfg,
        );
        let r = if let Some(d) = r.diagnostic.clone() {
            GradCheckReport {
                diagnostic: Some(format!("{pname}: {d}")),
                ..r
            }
        } else {
            r
        };
        report = report.merge(r);
    }
    LayerCheck {
        layer: name.to_string(),
        report,
    }
}

/// Gradient checks for every layer primitive on small random shapes.
pub fn layer_suite(seed: u64, cfg: &GradCheckConfig, opts: &SuiteOptions) -> Vec<LayerCheck> {
    let mut rng = Rng::new(seed);
    let mut out = Vec::new();

    let conv = Conv1d::new(3, 4, 5, &mut rng).unwrap();
    let mut conv = conv;
    conv.bias = random_tensor(&[5], &mut rng, -0.1, 0.1);
    let x = random_tensor(&[10, 4], &mut rng, -1.0, 1.0);
    out.push(check_layer(
        "conv1d_relu",
        &conv,
        &x,
        &mut rng,
        cfg,
        opts,
        |l, x| l.forward(x).unwrap(),
        |l, x, d| {
            let mut g = l.zeros_like();
            let y = l.forward(x).unwrap();
            let dx = l.backward(x, &y, d, &mut g);
            (g, dx)
        },
    ));

    let mut att = Attention::new(8, &mut rng).unwrap();
    att.bias = random_tensor(&[8], &mut rng, -0.1, 0.1);
    let x = random_tensor(&[6, 8], &mut rng, -1.0, 1.0);
    out.push(check_layer(
        "attention",
        &att,
        &x,
        &mut rng,
        cfg,
        opts,
        |l, x| l.forward(x).unwrap().0,
        |l, x, d| {
            let mut g = l.zeros_like();
            let (_, _, cache) = l.forward(x).unwrap();
            let dx = l.backward(x, &cache, d, &mut g);
            (g, dx)
        },
    ));

    for (name, act) in [
        ("dense_relu", Activation::Relu),
        ("dense_linear", Activation::Linear),
        ("dense_softmax", Activation::Softmax),
    ] {
        if opts.quick && act != Activation::Relu {
            continue;
        }
        let mut dense = Dense::new(6, 4, act, &mut rng).unwrap();
        dense.bias = random_tensor(&[4], &mut rng, -0.1, 0.1);
        let x = random_tensor(&[5, 6], &mut rng, -1.0, 1.0);
        out.push(check_layer(
            name,
            &dense,
            &x,
            &mut rng,
            cfg,
            opts,
            |l, x| l.forward(x).unwrap(),
            |l, x, d| {
                let mut g = l.zeros_like();
                let y = l.forward(x).unwrap();
                let dx = l.backward(x, &y, d, &mut g);
                (g, dx)
            },
        ));
    }

    if !opts.quick {
        let x = random_tensor(&[5, 4], &mut rng, -1.0, 1.0);
        let mut bigru = BiGru {
            fwd: GruCell::new(4, 3, &mut rng).unwrap(),
            bwd: GruCell::new(4, 3, &mut rng).unwrap(),
        };
        for (_, _, b) in bigru
            .params_mut()
            .into_iter()
            .filter(|(n, _, _)| n.contains(".b_"))
        {
            *b = random_tensor(b.shape(), &mut rng, -0.2, 0.2);
        }
        out.push(check_layer(
            "bigru",
            &bigru,
            &x,
            &mut rng,
            cfg,
            opts,
            |l, x| bigru_forward(x, &l.fwd, &l.bwd).unwrap().0,
            |l, x, d| {
                let mut g = BiGru {
                    fwd: l.fwd.zeros_like(),
                    bwd: l.bwd.zeros_like(),
                };
                let (_, cache) = bigru_forward(x, &l.fwd, &l.bwd).unwrap();
                let dx = bigru_backward(x, &cache, d, &l.fwd, &l.bwd, &mut g.fwd, &mut g.bwd);
                (g, dx)
            },
        ));
    }

    // Max pooling and concatenation have no parameters; check dL/dx with
    // well-separated values so ±eps cannot change the argmax.
    let mut vals: Vec<Float> = (0..24).map(|i| i as Float * 0.05 - 0.6).collect();
    rng.shuffle(&mut vals);
    let x = Tensor::new(vec![8, 3], vals).unwrap();
    out.push(check_layer(
        "maxpool_concat",
        &NoParams,
        &x,
        &mut rng,
        cfg,
        opts,
        |_, x| {
            let parts = split_time(x, &[4, 4]);
            let pooled: Vec<Tensor> = parts.iter().map(|p| maxpool1d(p, 3).unwrap().0).collect();
            concat_time(&pooled).unwrap()
        },
        |_, x, d| {
            let parts = split_time(x, &[4, 4]);
            let dparts = split_time(d, &[1, 1]);
            let grads: Vec<Tensor> = parts
                .iter()
                .zip(&dparts)
                .map(|(p, dp)| {
                    let (_, idx) = maxpool1d(p, 3).unwrap();
                    maxpool1d_backward(p.shape(), &idx, dp)
                })
                .collect();
            (NoParams, concat_time(&grads).unwrap())
        },
    ));

    let z = random_tensor(&[5], &mut rng, -2.0, 2.0);
    out.push(check_layer(
        "softmax",
        &NoParams,
        &z,
        &mut rng,
        cfg,
        opts,
        |_, z| Tensor::from_slice(&softmax(z.data())),
        |_, z, d| {
            let p = softmax(z.data());
            (
                NoParams,
                Tensor::from_slice(&softmax_backward(&p, d.data())),
            )
        },
    ));

    if !opts.quick {
        let x = random_tensor(&[12], &mut rng, -1.0, 1.0);
        let mask_seed = rng.next_u64();
        out.push(check_layer(
            "dropout",
            &NoParams,
            &x,
            &mut rng,
            cfg,
            opts,
            move |_, x| dropout(x, 0.5, true, &mut Rng::new(mask_seed)).unwrap().0,
            move |_, x, d| {
                let (_, mask) = dropout(x, 0.5, true, &mut Rng::new(mask_seed)).unwrap();
                (NoParams, dropout_backward(mask.as_ref(), d))
            },
        ));
    }

    out
}

#[derive(Clone)]
struct BiGru {
    fwd: GruCell,
    bwd: GruCell,
}

impl Parameters for BiGru {
    fn params(&self) -> Vec<(String, super::ParamKind, &Tensor)> {
        let mut v = super::prefixed("fwd", self.fwd.params());
        v.extend(super::prefixed("bwd", self.bwd.params()));
        v
    }

    fn params_mut(&mut self) -> Vec<(String, super::ParamKind, &mut Tensor)> {
        let mut v = super::prefixed("fwd", self.fwd.params_mut());
        v.extend(super::prefixed("bwd", self.bwd.params_mut()));
        v
    }
}

#[derive(Clone)]
struct NoParams;

impl Parameters for NoParams {
    fn params(&self) -> Vec<(String, super::ParamKind, &Tensor)> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<(String, super::ParamKind, &mut Tensor)> {
        Vec::new()
    }
}
