//! Seeded synthetic datasets. The smooth kinds (sinusoid mix, gaussian
//! blobs) imitate the locally-correlated structure of scientific field
//! dumps, which is what makes error-bounded compression effective; ramp
//! and constant are degenerate shapes for edge-case testing.

use crate::error::{Error, Result};
use crate::field::FloatField;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Which generator to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    /// Sum of a handful of sinusoids with randomized frequency, phase
    /// and amplitude.
    SinusoidMix,
    /// Sum of randomly placed 1-D gaussian bumps on a gentle baseline.
    GaussianBlobs,
    /// Linear ramp over [0, 1].
    Ramp,
    /// Every element equal to one randomly drawn value.
    Constant,
}

impl DatasetKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "sinusoid-mix" => Ok(Self::SinusoidMix),
            "gaussian-blobs" => Ok(Self::GaussianBlobs),
            "ramp" => Ok(Self::Ramp),
            "constant" => Ok(Self::Constant),
            other => Err(Error::Analysis(format!("unknown dataset kind '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::SinusoidMix => "sinusoid-mix",
            Self::GaussianBlobs => "gaussian-blobs",
            Self::Ramp => "ramp",
            Self::Constant => "constant",
        }
    }
}

/// Generates `elements` values; identical output for identical
/// `(kind, elements, seed)`.
pub fn generate(kind: DatasetKind, elements: usize, seed: u64) -> Result<FloatField> {
    if elements == 0 {
        return Err(Error::Analysis("cannot generate an empty dataset".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = match kind {
        DatasetKind::SinusoidMix => sinusoid_mix(elements, &mut rng),
        DatasetKind::GaussianBlobs => gaussian_blobs(elements, &mut rng),
        DatasetKind::Ramp => (0..elements)
            .map(|i| i as f32 / (elements.max(2) - 1) as f32)
            .collect(),
        DatasetKind::Constant => {
            let v: f32 = rng.gen_range(-100.0..100.0);
            vec![v; elements]
        }
    };
    debug_assert!(data.iter().all(|v| v.is_finite()));
    Ok(FloatField::new(data))
}

fn sinusoid_mix(elements: usize, rng: &mut ChaCha8Rng) -> Vec<f32> {
    let waves: Vec<(f64, f64, f64)> = (0..6)
        .map(|_| {
            (
                rng.gen_range(0.5..40.0),   // cycles across the field
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(0.2..2.0),    // amplitude
            )
        })
        .collect();
    let step = std::f64::consts::TAU / elements as f64;
    (0..elements)
        .map(|i| {
            let x = i as f64 * step;
            waves
                .iter()
                .map(|(f, p, a)| a * (f * x + p).sin())
                .sum::<f64>() as f32
        })
        .collect()
}

fn gaussian_blobs(elements: usize, rng: &mut ChaCha8Rng) -> Vec<f32> {
    let blobs: Vec<(f64, f64, f64)> = (0..8)
        .map(|_| {
            (
                rng.gen_range(0.0..1.0),     // center
                rng.gen_range(0.01..0.15),   // width
                rng.gen_range(0.5..4.0),     // height
            )
        })
        .collect();
    let baseline: f64 = rng.gen_range(-1.0..1.0);
    (0..elements)
        .map(|i| {
            let x = i as f64 / elements as f64;
            let v: f64 = blobs
                .iter()
                .map(|(c, w, h)| h * (-(x - c) * (x - c) / (2.0 * w * w)).exp())
                .sum();
            (baseline + v) as f32
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{compress, decompress, ErrorBound};

    #[test]
    fn same_seed_same_bytes() {
        for kind in [
            DatasetKind::SinusoidMix,
            DatasetKind::GaussianBlobs,
            DatasetKind::Ramp,
            DatasetKind::Constant,
        ] {
            let a = generate(kind, 4096, 42).unwrap();
            let b = generate(kind, 4096, 42).unwrap();
            assert_eq!(a.data(), b.data(), "{kind:?}");
            let c = generate(kind, 4096, 43).unwrap();
            if kind != DatasetKind::Ramp {
                assert_ne!(a.data(), c.data(), "{kind:?} ignored its seed");
            }
        }
    }

    #[test]
    fn smooth_kinds_compress_well() {
        let eb = ErrorBound::new(1e-3).unwrap();
        for kind in [DatasetKind::SinusoidMix, DatasetKind::GaussianBlobs] {
            let field = generate(kind, 65536, 7).unwrap();
            let stream = compress(&field, eb).unwrap();
            let ratio = stream.compression_ratio().unwrap();
            assert!(ratio > 4.0, "{kind:?} ratio {ratio}");
            let back = decompress(&stream).unwrap();
            for (x, y) in field.data().iter().zip(back.data()) {
                assert!((x - y).abs() as f64 <= 1e-3);
            }
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for name in ["sinusoid-mix", "gaussian-blobs", "ramp", "constant"] {
            assert_eq!(DatasetKind::parse(name).unwrap().name(), name);
        }
        assert!(DatasetKind::parse("white-noise").is_err());
    }
}
