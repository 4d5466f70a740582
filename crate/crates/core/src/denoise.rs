//! TGD-continuity denoising.
//!
//! The estimate `Y` is the only trainable quantity. For every frozen operator
//! `op`, `Z = conv(Y, op)` is taken over the valid region and the adjacent
//! differences `D_j = Z_j - Z_{j+1}` are penalised:
//!
//! ```text
//! L_op  = (sum_j |D_j|^p)^(1/p)      (the root is dropped in squared mode)
//! L     = l1 * sum L_first + l2 * sum L_second + loff * sum (Y - X)^2
//! ```
//!
//! `Y` starts at `X` and is updated by Adam with a step learning-rate decay.

use crate::conv::{convolve_1d_valid, convolve_1d_valid_adjoint, Padding};
use crate::operators::{build_first_order_1d, build_second_order_1d, KernelProfile, Operator, Order};
use crate::{conv, Error, Result, Signal};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;
/// A run aborts once the loss exceeds this multiple of its initial value.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepDecay {
    pub every: usize,
    pub factor: f64,
}

#[derive(Clone, Debug)]
pub struct DenoiseConfig {
    pub lambda_1st: f64,
    pub lambda_2nd: f64,
    pub lambda_offset: f64,
    /// Norm exponent, 1, 2 or 3.
    pub p: u32,
    /// Drop the outer `1/p` root.
    pub squared: bool,
    pub first_ops: Vec<Operator>,
    pub second_ops: Vec<Operator>,
    pub epochs: usize,
    pub lr: f64,
    pub decay: StepDecay,
    /// Recorded with the run. The optimiser itself is deterministic and
    /// draws nothing from it.
    pub seed: u64,
}

impl DenoiseConfig {
    /// Gaussian first- and second-order operators of radius `r` with the
    /// default loss weights and schedule.
    pub fn with_radius(r: usize) -> Result<Self> {
        let profile = KernelProfile::gaussian(r);
        Ok(Self {
            lambda_1st: 1.0,
            lambda_2nd: 10.0,
            lambda_offset: 0.01,
            p: 2,
            squared: true,
            first_ops: vec![build_first_order_1d(&profile)?],
            second_ops: vec![build_second_order_1d(&profile)?],
            epochs: 20_000,
            lr: 0.01,
            decay: StepDecay { every: 10_000, factor: 0.1 },
            seed: 0,
        })
    }

    fn max_taps(&self) -> usize {
        self.first_ops
            .iter()
            .chain(&self.second_ops)
            .map(|op| op.extent()[0])
            .max()
            .unwrap_or(1)
    }

    /// Checks the configuration against a signal of length `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        let lambdas = [
            ("lambda_1st", self.lambda_1st),
            ("lambda_2nd", self.lambda_2nd),
            ("lambda_offset", self.lambda_offset),
        ];
        for (name, l) in lambdas {
            if !(l.is_finite() && l >= 0.0) {
                return Err(Error::Config(format!("{name} must be a finite value >= 0, got {l}")));
            }
        }
        if lambdas.iter().all(|&(_, l)| l == 0.0) {
            return Err(Error::Config("at least one loss weight must be positive".into()));
        }
        if !(1..=3).contains(&self.p) {
            return Err(Error::Config(format!("p must be 1, 2 or 3, got {}", self.p)));
        }
        for (ops, lambda, order, name) in [
            (&self.first_ops, self.lambda_1st, Order::First, "first"),
            (&self.second_ops, self.lambda_2nd, Order::Second, "second"),
        ] {
            if lambda > 0.0 && ops.is_empty() {
                return Err(Error::Config(format!("{name}-order loss weighted but no {name}-order operators given")));
            }
            for op in ops {
                if op.rank() != 1 || op.order() != order {
                    return Err(Error::Config(format!("{name}-order operators must be rank-1 {order} order")));
                }
            }
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if self.decay.every == 0 || !(self.decay.factor > 0.0 && self.decay.factor <= 1.0) {
            return Err(Error::Config("lr decay needs every >= 1 and factor in (0, 1]".into()));
        }
        let need = self.max_taps() + 1;
        if n < need {
            return Err(Error::Config(format!(
                "signal of length {n} is too short: operators of {} taps need at least {need}",
                self.max_taps()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossTerms {
    pub first: f64,
    pub second: f64,
    pub offset: f64,
}

pub fn total_loss(terms: &LossTerms, cfg: &DenoiseConfig) -> f64 {
    cfg.lambda_1st * terms.first + cfg.lambda_2nd * terms.second + cfg.lambda_offset * terms.offset
}

fn abs_pow(d: f64, p: u32) -> f64 {
    match p {
        1 => d.abs(),
        2 => d * d,
        _ => d.abs().powi(p as i32),
    }
}

/// d|d|^p / dd, with sign(0) = 0.
fn abs_pow_grad(d: f64, p: u32) -> f64 {
    match p {
        1 => {
            if d > 0.0 {
                1.0
            } else if d < 0.0 {
                -1.0
            } else {
                0.0
            }
        }
        2 => 2.0 * d,
        _ => p as f64 * d.abs().powi(p as i32 - 1) * d.signum(),
    }
}

/// One continuity term; adds `scale * dL/dY` into `grad` when given.
fn continuity(y: &[f64], op: &Operator, cfg: &DenoiseConfig, scale: f64, grad: Option<&mut [f64]>) -> f64 {
    let w = op.weights().as_slice().expect("rank-1 operators are contiguous");
    let z = convolve_1d_valid(y, w);
    let d: Vec<f64> = z.windows(2).map(|p| p[0] - p[1]).collect();
    let s: f64 = d.iter().map(|&v| abs_pow(v, cfg.p)).sum();
    let loss = if cfg.squared || cfg.p == 1 { s } else { s.powf(1.0 / cfg.p as f64) };
    if let Some(grad) = grad {
        // dL/dS: 1 when squared, (1/p) S^(1/p - 1) otherwise.
        let outer = if cfg.squared || cfg.p == 1 {
            1.0
        } else if s == 0.0 {
            0.0
        } else {
            s.powf(1.0 / cfg.p as f64 - 1.0) / cfg.p as f64
        };
        if outer != 0.0 {
            let mut gz = vec![0.0; z.len()];
            for (j, &dj) in d.iter().enumerate() {
                let g = scale * outer * abs_pow_grad(dj, cfg.p);
                gz[j] += g;
                gz[j + 1] -= g;
            }
            convolve_1d_valid_adjoint(&gz, w, grad);
        }
    }
    loss
}

fn evaluate(y: &[f64], x: &[f64], cfg: &DenoiseConfig, mut grad: Option<&mut [f64]>) -> LossTerms {
    if let Some(g) = grad.as_deref_mut() {
        g.fill(0.0);
    }
    let mut terms = LossTerms::default();
    // Unweighted terms are still reported; they just contribute no gradient.
    for op in &cfg.first_ops {
        let g = grad.as_deref_mut().filter(|_| cfg.lambda_1st > 0.0);
        terms.first += continuity(y, op, cfg, cfg.lambda_1st, g);
    }
    for op in &cfg.second_ops {
        let g = grad.as_deref_mut().filter(|_| cfg.lambda_2nd > 0.0);
        terms.second += continuity(y, op, cfg, cfg.lambda_2nd, g);
    }
    for (i, (&a, &b)) in y.iter().zip(x).enumerate() {
        let r = a - b;
        terms.offset += r * r;
        if let Some(g) = grad.as_deref_mut() {
            g[i] += 2.0 * cfg.lambda_offset * r;
        }
    }
    terms
}

fn check_pair(y: &[f64], x: &[f64], cfg: &DenoiseConfig) -> Result<()> {
    if y.len() != x.len() {
        return Err(Error::Shape(format!("Y has {} samples, X has {}", y.len(), x.len())));
    }
    cfg.validate(x.len())
}

/// The three unweighted loss terms. A term with zero weight is still
/// evaluated when its operators are present.
pub fn loss_terms(y: &[f64], x: &[f64], cfg: &DenoiseConfig) -> Result<LossTerms> {
    check_pair(y, x, cfg)?;
    Ok(evaluate(y, x, cfg, None))
}

/// Exact gradient of [`total_loss`] with respect to `Y`.
pub fn loss_gradient(y: &[f64], x: &[f64], cfg: &DenoiseConfig) -> Result<Signal> {
    check_pair(y, x, cfg)?;
    let mut g = vec![0.0; y.len()];
    evaluate(y, x, cfg, Some(&mut g));
    Ok(Signal::from(g))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistoryEntry {
    pub epoch: usize,
    pub total: f64,
    pub first: f64,
    pub second: f64,
    pub offset: f64,
    pub lr: f64,
}

#[derive(Clone, Debug)]
pub struct DenoiseOutput {
    pub y: Signal,
    /// Loss at the start of each epoch, before its update.
    pub history: Vec<HistoryEntry>,
    /// Loss of the returned `y`.
    pub final_terms: LossTerms,
}

/// Learning rate in effect at 1-based `epoch`.
pub fn lr_at(cfg: &DenoiseConfig, epoch: usize) -> f64 {
    let steps = (epoch - 1) / cfg.decay.every;
    cfg.lr * cfg.decay.factor.powi(steps as i32)
}

/// Runs Adam from `Y = X` for `cfg.epochs` epochs.
pub fn denoise(x: &[f64], cfg: &DenoiseConfig) -> Result<DenoiseOutput> {
    cfg.validate(x.len())?;
    let n = x.len();
    let mut y = x.to_vec();
    let mut g = vec![0.0; n];
    let mut m = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut limit = f64::INFINITY;
    let (mut b1t, mut b2t) = (1.0, 1.0);
    for epoch in 1..=cfg.epochs {
        let terms = evaluate(&y, x, cfg, Some(&mut g));
        let total = total_loss(&terms, cfg);
        if epoch == 1 {
            limit = DIVERGENCE_FACTOR * total;
        }
        if !total.is_finite() || total > limit {
            return Err(Error::Divergence { epoch, loss: total, limit });
        }
        let lr = lr_at(cfg, epoch);
        history.push(HistoryEntry {
            epoch,
            total,
            first: terms.first,
            second: terms.second,
            offset: terms.offset,
            lr,
        });
        b1t *= ADAM_BETA1;
        b2t *= ADAM_BETA2;
        for i in 0..n {
            m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
            v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
            let m_hat = m[i] / (1.0 - b1t);
            let v_hat = v[i] / (1.0 - b2t);
            y[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }
    let final_terms = evaluate(&y, x, cfg, None);
    let final_total = total_loss(&final_terms, cfg);
    if !final_total.is_finite() || final_total > limit {
        return Err(Error::Divergence { epoch: cfg.epochs, loss: final_total, limit });
    }
    Ok(DenoiseOutput { y: Signal::from(y), history, final_terms })
}

/// Normalised Gaussian smoothing (`sigma = r/3`, `2r + 1` taps, replicated
/// edges), the classical baseline.
pub fn gaussian_smooth(x: &[f64], radius: usize) -> Result<Signal> {
    let profile = KernelProfile::gaussian(radius);
    let ri = radius as i64;
    let taps = (-ri..=ri).map(|d| profile.value(d)).collect::<Result<Vec<f64>>>()?;
    let total: f64 = taps.iter().sum();
    let taps: Vec<f64> = taps.iter().map(|t| t / total).collect();
    let op = Operator::from_weights(ndarray::Array1::from(taps).into_dyn(), Order::First)?;
    conv::convolve(&ndarray::ArrayView1::from(x), &op, Padding::Replicate)
}
