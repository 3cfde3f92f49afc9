//! Empirical check of the summed-error interval against the real codec
//! and collectives, rather than the stochastic model: run the compressed
//! allreduce on perturbed copies of a field, measure the per-compression
//! error std on the same data, and count how many output elements land
//! inside the predicted two-sigma aggregate interval.

use crate::codec::{compress, decompress, ErrorBound};
use crate::collectives::{self, reference, PipelineConfig, ReduceOp, Variant};
use crate::error::{Error, Result};
use crate::field::FloatField;
use crate::transport::{CommWorld, SimParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of the coverage experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageReport {
    /// Fraction of output elements within `±2·√n·sigma_emp` of the
    /// exact reduction.
    pub coverage: f64,
    /// Measured std of the single-compression error on the base field.
    pub sigma_emp: f64,
    /// Largest elementwise deviation seen across all trials.
    pub max_abs_error: f64,
    /// Worst-case bound `n·eb`: one codec error per contributing hop.
    pub hard_bound: f64,
    pub trials: usize,
}

impl CoverageReport {
    pub fn within_hard_bound(&self) -> bool {
        self.max_abs_error <= self.hard_bound
    }
}

fn single_compression_sigma(field: &FloatField, eb: ErrorBound) -> Result<f64> {
    let decoded = decompress(&compress(field, eb)?)?;
    let n = field.len() as f64;
    let mean: f64 = field
        .data()
        .iter()
        .zip(decoded.data())
        .map(|(a, b)| *b as f64 - *a as f64)
        .sum::<f64>()
        / n;
    let var: f64 = field
        .data()
        .iter()
        .zip(decoded.data())
        .map(|(a, b)| {
            let e = *b as f64 - *a as f64 - mean;
            e * e
        })
        .sum::<f64>()
        / n;
    Ok(var.sqrt())
}

/// Adds a smooth random sinusoid so each rank and trial compresses
/// slightly different data while staying compressible. The amplitude
/// scales with the field's value range, so a constant field (zero
/// range) passes through untouched and reduces exactly.
fn perturb(base: &FloatField, range: f64, rng: &mut ChaCha8Rng) -> FloatField {
    let amp = rng.gen_range(0.002..0.02) * range;
    let freq = rng.gen_range(1.0..30.0) * std::f64::consts::TAU / base.len() as f64;
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    FloatField::new(
        base.data()
            .iter()
            .enumerate()
            .map(|(i, v)| v + (amp * (freq * i as f64 + phase).sin()) as f32)
            .collect(),
    )
}

/// Runs `trials` compressed allreduce (Sum) experiments over `n` ranks
/// and reports the fraction of elements whose error falls inside
/// `±2·√n·sigma_emp`. With one rank there is no aggregation and the
/// result is the single-compression coverage of `±2·sigma_emp`.
pub fn empirical_allreduce_coverage(
    n: usize,
    field: &FloatField,
    eb: ErrorBound,
    trials: usize,
    seed: u64,
) -> Result<CoverageReport> {
    if n < 1 {
        return Err(Error::Analysis("need at least one rank".into()));
    }
    if field.is_empty() || field.len() % n != 0 {
        return Err(Error::Analysis(format!(
            "field of {} elements does not split across {n} ranks",
            field.len()
        )));
    }
    if trials < 1 {
        return Err(Error::Analysis("need at least one trial".into()));
    }
    let sigma_emp = single_compression_sigma(field, eb)?;
    let hard_bound = n as f64 * eb.get();

    if n == 1 {
        let decoded = decompress(&compress(field, eb)?)?;
        let half = 2.0 * sigma_emp;
        let mut within = 0usize;
        let mut max_abs = 0.0f64;
        for (a, b) in field.data().iter().zip(decoded.data()) {
            let e = (*b as f64 - *a as f64).abs();
            max_abs = max_abs.max(e);
            if e <= half {
                within += 1;
            }
        }
        return Ok(CoverageReport {
            coverage: within as f64 / field.len() as f64,
            sigma_emp,
            max_abs_error: max_abs,
            hard_bound,
            trials,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = 2.0 * (n as f64).sqrt() * sigma_emp;
    let cfg = PipelineConfig::default();
    let world = CommWorld::virtual_time(n, SimParams::default())?;
    let lo = field.data().iter().cloned().fold(f32::INFINITY, f32::min) as f64;
    let hi = field.data().iter().cloned().fold(f32::NEG_INFINITY, f32::max) as f64;
    let range = hi - lo;
    let mut within = 0u64;
    let mut total = 0u64;
    let mut max_abs = 0.0f64;
    for _ in 0..trials {
        let inputs: Vec<FloatField> = (0..n).map(|_| perturb(field, range, &mut rng)).collect();
        let exact = reference::allreduce(&inputs, ReduceOp::Sum)?;
        let (outputs, _) = collectives::run_allreduce(
            &world,
            Variant::CColl,
            &inputs,
            ReduceOp::Sum,
            Some(eb),
            &cfg,
        )?;
        for (a, b) in exact.data().iter().zip(outputs[0].data()) {
            let e = (*b as f64 - *a as f64).abs();
            max_abs = max_abs.max(e);
            if e <= half {
                within += 1;
            }
            total += 1;
        }
    }
    Ok(CoverageReport {
        coverage: within as f64 / total as f64,
        sigma_emp,
        max_abs_error: max_abs,
        hard_bound,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{self, DatasetKind};

    #[test]
    fn constant_field_has_zero_error_and_full_coverage() {
        let field = FloatField::new(vec![4.25; 1024]);
        let eb = ErrorBound::new(1e-3).unwrap();
        let rep = empirical_allreduce_coverage(4, &field, eb, 3, 9).unwrap();
        // A zero-range field is never perturbed; constants compress
        // exactly at every hop, so every error is exactly zero.
        assert_eq!(rep.sigma_emp, 0.0);
        assert_eq!(rep.max_abs_error, 0.0);
        assert_eq!(rep.coverage, 1.0);
        assert!(rep.within_hard_bound());
    }

    #[test]
    fn single_rank_reports_single_compression_coverage() {
        let field = synth::generate(DatasetKind::SinusoidMix, 8192, 3).unwrap();
        let eb = ErrorBound::new(1e-3).unwrap();
        let rep = empirical_allreduce_coverage(1, &field, eb, 1, 0).unwrap();
        assert!(rep.coverage > 0.5 && rep.coverage <= 1.0);
        assert!(rep.max_abs_error <= rep.hard_bound);
    }

    #[test]
    fn aggregate_coverage_sits_near_two_sigma_mass() {
        let field = synth::generate(DatasetKind::SinusoidMix, 16 * 512, 21).unwrap();
        let eb = ErrorBound::new(1e-3).unwrap();
        let rep = empirical_allreduce_coverage(16, &field, eb, 30, 4).unwrap();
        assert!(
            (0.93..=0.98).contains(&rep.coverage),
            "coverage {} sigma_emp {}",
            rep.coverage,
            rep.sigma_emp
        );
        assert!(rep.within_hard_bound(), "max {} bound {}", rep.max_abs_error, rep.hard_bound);
    }

    #[test]
    fn rejects_indivisible_fields() {
        let field = FloatField::new(vec![1.0; 10]);
        let eb = ErrorBound::new(1e-3).unwrap();
        assert!(empirical_allreduce_coverage(3, &field, eb, 5, 0).is_err());
    }
}
