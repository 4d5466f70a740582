//! Signal quality metrics and seeded noise injection.
//!
//! Conventions:
//! - PSNR's `MAX` defaults to the peak magnitude `max |x|` of the reference.
//! - SSIM uses whole-signal statistics with population (1/N) moments;
//!   `L` defaults to the reference's dynamic range `max - min`.
//! - Noise draws come from `ChaCha8Rng::seed_from_u64(seed)`. Uniform variates
//!   take the top 53 bits of each `u64`; normals use Box–Muller on pairs of
//!   uniforms (both outputs consumed), so a seed reproduces bit-for-bit.

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result, Signal};

pub const K1: f64 = 0.01;
pub const K2: f64 = 0.03;

fn check_lengths(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

pub fn rmse(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x, y)?;
    if x.is_empty() {
        return Err(Error::Shape("rmse needs at least one sample".into()));
    }
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sse / x.len() as f64).sqrt())
}

/// Peak magnitude of the reference, the default PSNR `MAX`.
pub fn peak(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// `max - min`, the default SSIM `L`.
pub fn dynamic_range(x: &[f64]) -> f64 {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if lo.is_finite() {
        hi - lo
    } else {
        0.0
    }
}

/// `20 log10(MAX / rmse)`; identical inputs give `+inf`.
pub fn psnr(x: &[f64], y: &[f64], max_value: Option<f64>) -> Result<f64> {
    let e = rmse(x, y)?;
    let max = max_value.unwrap_or_else(|| peak(x));
    Ok(psnr_from_rmse(max, e))
}

pub fn psnr_from_rmse(max: f64, rmse: f64) -> f64 {
    if rmse == 0.0 {
        return f64::INFINITY;
    }
    20.0 * (max / rmse).log10()
}

fn ratio_or_one(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        1.0
    } else {
        num / den
    }
}

/// Global SSIM of `y` against reference `x`.
pub fn ssim(x: &[f64], y: &[f64], l: Option<f64>) -> Result<f64> {
    check_lengths(x, y)?;
    let n = x.len();
    if n < 2 {
        return Err(Error::Shape("ssim needs at least two samples".into()));
    }
    let l = l.unwrap_or_else(|| dynamic_range(x));
    let c1 = (K1 * l).powi(2);
    let c2 = (K2 * l).powi(2);
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        vx += da * da;
        vy += db * db;
        cxy += da * db;
    }
    vx /= nf;
    vy /= nf;
    cxy /= nf;
    let luminance = ratio_or_one(2.0 * mx * my + c1, mx * mx + my * my + c1);
    let structure = ratio_or_one(2.0 * cxy + c2, vx + vy + c2);
    Ok((luminance * structure).clamp(-1.0, 1.0))
}

/// Mean power `sum x^2 / N`.
pub fn power(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// `10 log10(P(signal) / P(noise))`; zero noise power gives `+inf`.
pub fn snr_db(signal: &[f64], noise: &[f64]) -> Result<f64> {
    check_lengths(signal, noise)?;
    let pn = power(noise);
    if pn == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (power(signal) / pn).log10())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseKind {
    Gaussian,
    Uniform,
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" | "normal" => Ok(Self::Gaussian),
            "uniform" => Ok(Self::Uniform),
            other => Err(Error::Config(format!("unknown noise kind `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseLevel {
    /// Standard deviation in signal units. Uniform noise uses half-width
    /// `sigma * sqrt(3)`.
    Sigma(f64),
    /// Noise rescaled so the achieved SNR against the clean signal hits this.
    TargetSnrDb(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub level: NoiseLevel,
    pub seed: u64,
}

/// Portable uniform/normal stream over ChaCha8.
pub struct NoiseStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box–Muller.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }
}

/// Adds i.i.d. noise to `x`; returns `(noisy, noise)`.
pub fn add_noise(x: &[f64], spec: &NoiseSpec) -> Result<(Signal, Signal)> {
    let mut stream = NoiseStream::new(spec.seed);
    let unit: Vec<f64> = match spec.kind {
        NoiseKind::Gaussian => (0..x.len()).map(|_| stream.normal()).collect(),
        NoiseKind::Uniform => (0..x.len())
            .map(|_| 3f64.sqrt() * (2.0 * stream.uniform() - 1.0))
            .collect(),
    };
    let scale = match spec.level {
        NoiseLevel::Sigma(s) => {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::Config(format!("noise sigma must be positive, got {s}")));
            }
            s
        }
        NoiseLevel::TargetSnrDb(db) => {
            if !db.is_finite() {
                return Err(Error::Config("target SNR must be finite".into()));
            }
            let target_power = power(x) / 10f64.powf(db / 10.0);
            let raw = power(&unit);
            if raw == 0.0 {
                0.0
            } else {
                (target_power / raw).sqrt()
            }
        }
    };
    let noise: Signal = unit.into_iter().map(|v| v * scale).collect();
    let noisy: Signal = x.iter().zip(noise.iter()).map(|(a, b)| a + b).collect();
    Ok((noisy, noise))
}

/// All four metrics plus the constants used to compute them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricReport {
    pub rmse: f64,
    pub psnr_db: f64,
    pub ssim: f64,
    pub snr_db: f64,
    pub max: f64,
    pub l: f64,
    pub c1: f64,
    pub c2: f64,
}

impl MetricReport {
    /// Scores `test` against `reference`. SNR treats `test - reference` as
    /// the noise.
    pub fn compute(reference: &[f64], test: &[f64], max: Option<f64>, l: Option<f64>) -> Result<Self> {
        check_lengths(reference, test)?;
        let max = max.unwrap_or_else(|| peak(reference));
        let l = l.unwrap_or_else(|| dynamic_range(reference));
        let e = rmse(reference, test)?;
        let residual: Vec<f64> = test.iter().zip(reference).map(|(t, r)| t - r).collect();
        Ok(Self {
            rmse: e,
            psnr_db: psnr_from_rmse(max, e),
            ssim: ssim(reference, test, Some(l))?,
            snr_db: snr_db(reference, &residual)?,
            max,
            l,
            c1: (K1 * l).powi(2),
            c2: (K2 * l).powi(2),
        })
    }

    pub const CSV_HEADER: &'static str = "rmse,psnr_db,ssim,snr_db,max,L,c1,c2,k1,k2";

    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.rmse, self.psnr_db, self.ssim, self.snr_db, self.max, self.l, self.c1, self.c2, K1, K2
        )
    }
}

impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RMSE    {:>14.6}", self.rmse)?;
        writeln!(f, "PSNR    {:>14.4} dB  (MAX = {})", self.psnr_db, self.max)?;
        writeln!(f, "SSIM    {:>14.6}     (L = {}, k1 = {K1}, k2 = {K2})", self.ssim, self.l)?;
        write!(f, "SNR     {:>14.4} dB", self.snr_db)
    }
}
