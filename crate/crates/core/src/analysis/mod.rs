//! Error-propagation math and data-quality metrics.
//!
//! The closed forms describe how per-compression errors aggregate
//! through reduction chains: a sum of n bounded, zero-mean normal errors
//! keeps a normal shape with variance growing linearly in n, an average
//! shrinks the variance by n, and max/min selection follows a
//! geometric-weighted accumulation. Each form has a seeded Monte Carlo
//! counterpart in [`montecarlo`], and [`coverage`] checks the sum result
//! against the real codec and collectives rather than the model.

mod coverage;
mod montecarlo;

pub use coverage::{empirical_allreduce_coverage, CoverageReport};
pub use montecarlo::{mc_avg_variance, mc_maxmin_variance, mc_sum_coverage};

use crate::error::{Error, Result};
use crate::field::FloatField;

/// Stochastic model of one compression's error: normal with mean `mu`
/// and std `sigma`, truncated to `[mu - eb, mu + eb]`, aggregated over
/// `n` independent contributors. The bound and the std are tied by
/// `eb ≈ 3·sigma`, which keeps ~99.7% of the untruncated mass inside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorModel {
    pub n: usize,
    pub mu: f64,
    pub sigma: f64,
    pub eb: f64,
}

impl ErrorModel {
    /// Model with `sigma = eb/3` and zero mean.
    pub fn from_bound(n: usize, eb: f64) -> Result<Self> {
        let m = Self { n, mu: 0.0, sigma: eb / 3.0, eb };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::Analysis("model needs at least one contributor".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Analysis(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.eb > 0.0 && self.eb.is_finite()) {
            return Err(Error::Analysis(format!("eb must be positive, got {}", self.eb)));
        }
        if !self.mu.is_finite() {
            return Err(Error::Analysis("mu must be finite".into()));
        }
        Ok(())
    }
}

/// Mean and variance of the summed error over `n` contributors:
/// `(n·mu, n·sigma²)`.
pub fn sum_error_distribution(model: &ErrorModel) -> (f64, f64) {
    let n = model.n as f64;
    (n * model.mu, n * model.sigma * model.sigma)
}

/// Half-width of the 95.44% (two-sigma) interval of the summed error:
/// `2·√n·sigma`. With `sigma = eb/3` and n = 100 this is `(20/3)·eb`.
pub fn sum_two_sigma_halfwidth(model: &ErrorModel) -> f64 {
    2.0 * (model.n as f64).sqrt() * model.sigma
}

/// Mean and variance of the averaged error: `(mu, sigma²/n)`.
pub fn avg_error_distribution(model: &ErrorModel) -> (f64, f64) {
    let n = model.n as f64;
    (model.mu, model.sigma * model.sigma / n)
}

/// Variance of the aggregated error under max/min selection over `n`
/// ranks: `(2 − (n+2)/2ⁿ)·sigma²`. At n = 1 this is `sigma²/2`; it
/// approaches `2·sigma²` as n grows.
pub fn maxmin_error_variance(n: usize, sigma: f64) -> f64 {
    let pow = 2f64.powi(n as i32);
    (2.0 - (n as f64 + 2.0) / pow) * sigma * sigma
}

/// Range-normalized fidelity of a decoded field against its original.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    /// `20·log10(range/RMSE)`; `+inf` when the error is exactly zero.
    pub psnr: f64,
    /// `RMSE / (max − min)` of the reference.
    pub nrmse: f64,
    pub max_abs_error: f64,
    pub value_range: f64,
}

/// Computes PSNR/NRMSE of `candidate` against `reference`.
pub fn quality(reference: &FloatField, candidate: &FloatField) -> Result<QualityReport> {
    if reference.is_empty() {
        return Err(Error::Analysis("quality of an empty field".into()));
    }
    if reference.len() != candidate.len() {
        return Err(Error::Analysis(format!(
            "length mismatch: {} vs {}",
            reference.len(),
            candidate.len()
        )));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut sq_sum = 0.0f64;
    let mut max_abs = 0.0f64;
    for (r, c) in reference.data().iter().zip(candidate.data()) {
        let rv = *r as f64;
        lo = lo.min(rv);
        hi = hi.max(rv);
        let d = *c as f64 - rv;
        sq_sum += d * d;
        max_abs = max_abs.max(d.abs());
    }
    let value_range = hi - lo;
    let rmse = (sq_sum / reference.len() as f64).sqrt();
    if rmse == 0.0 {
        return Ok(QualityReport { psnr: f64::INFINITY, nrmse: 0.0, max_abs_error: 0.0, value_range });
    }
    if !(value_range > 0.0) {
        return Err(Error::Analysis(
            "reference has zero value range but nonzero error; psnr undefined".into(),
        ));
    }
    Ok(QualityReport {
        psnr: 20.0 * (value_range / rmse).log10(),
        nrmse: rmse / value_range,
        max_abs_error: max_abs,
        value_range,
    })
}

/// Maximum-likelihood normal fit of elementwise errors plus their
/// histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFit {
    pub mean: f64,
    /// MLE std (1/n normalization).
    pub std: f64,
    /// `bins + 1` edges spanning the observed error range.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

/// Fits `decoded − original` errors.
pub fn fit_errors(original: &FloatField, decoded: &FloatField, bins: usize) -> Result<NormalFit> {
    if original.is_empty() || original.len() != decoded.len() {
        return Err(Error::Analysis("fit needs equal, nonempty fields".into()));
    }
    if bins == 0 {
        return Err(Error::Analysis("histogram needs at least one bin".into()));
    }
    let errors: Vec<f64> = original
        .data()
        .iter()
        .zip(decoded.data())
        .map(|(o, d)| *d as f64 - *o as f64)
        .collect();
    let n = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / n;
    let var = errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;
    let std = var.sqrt();

    let lo = errors.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = errors.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // Degenerate spread still gets a well-formed single-cell histogram.
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
    let width = (hi - lo) / bins as f64;
    let bin_edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * width).collect();
    let mut counts = vec![0u64; bins];
    for e in &errors {
        let idx = (((e - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    Ok(NormalFit { mean, std, bin_edges, counts })
}
