//! Single-process, no-network oracles for every collective.
//!
//! These reproduce the exact arithmetic the ring performs — same operand
//! order, same f32 precision — so Baseline results can be compared
//! bitwise and compressed variants can be bounded against them.

use crate::collectives::{combine_into, scale_for_avg, ReduceOp};
use crate::error::{Error, Result};
use crate::field::FloatField;

/// Rank-ordered concatenation: the allgather result.
pub fn allgather(inputs: &[FloatField]) -> Result<FloatField> {
    if inputs.is_empty() {
        return Err(Error::Collective("no inputs".into()));
    }
    let mut out = Vec::with_capacity(inputs.iter().map(|f| f.len()).sum());
    for f in inputs {
        out.extend_from_slice(f.data());
    }
    Ok(FloatField::new(out))
}

/// Equal slices of the root buffer: the scatter result for each rank.
pub fn scatter(root_field: &FloatField, n: usize) -> Result<Vec<FloatField>> {
    if n == 0 || root_field.len() % n != 0 {
        return Err(Error::Collective(format!(
            "field of {} elements does not split into {n} slices",
            root_field.len()
        )));
    }
    let sl = root_field.len() / n;
    Ok(root_field
        .data()
        .chunks_exact(sl)
        .map(|c| FloatField::new(c.to_vec()))
        .collect())
}

/// Reduced slice `s` for every `s`, folded in the ring's fixed order:
/// slice `s` starts at rank `(s+1) mod n` and accumulates one rank per
/// hop, finishing with rank `s` itself.
pub fn reduce_scatter(inputs: &[FloatField], op: ReduceOp) -> Result<Vec<FloatField>> {
    let n = inputs.len();
    if n == 0 {
        return Err(Error::Collective("no inputs".into()));
    }
    let len = inputs[0].len();
    if inputs.iter().any(|f| f.len() != len) || len % n != 0 {
        return Err(Error::Collective(
            "inputs must share a length divisible by the rank count".into(),
        ));
    }
    let sl = len / n;
    let mut out = Vec::with_capacity(n);
    for s in 0..n {
        let range = s * sl..(s + 1) * sl;
        let mut acc = inputs[(s + 1) % n].data()[range.clone()].to_vec();
        for j in 2..=n {
            combine_into(op, &mut acc, &inputs[(s + j) % n].data()[range.clone()]);
        }
        if op == ReduceOp::Avg {
            scale_for_avg(&mut acc, n);
        }
        out.push(FloatField::new(acc));
    }
    Ok(out)
}

/// Full reduced field: the allreduce result (reduce-scatter slices
/// concatenated in slice order).
pub fn allreduce(inputs: &[FloatField], op: ReduceOp) -> Result<FloatField> {
    let slices = reduce_scatter(inputs, op)?;
    allgather(&slices)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fields(n: usize, len: usize) -> Vec<FloatField> {
        (0..n)
            .map(|r| {
                FloatField::new(
                    (0..len).map(|i| ((r * len + i) as f32 * 0.37).sin()).collect(),
                )
            })
            .collect()
    }

    #[test]
    fn single_rank_reduce_scatter_is_identity() {
        let fs = fields(1, 8);
        let out = reduce_scatter(&fs, ReduceOp::Sum).unwrap();
        assert_eq!(out[0].data(), fs[0].data());
    }

    #[test]
    fn sum_slices_match_direct_accumulation_for_two_ranks() {
        let fs = fields(2, 6);
        let out = reduce_scatter(&fs, ReduceOp::Sum).unwrap();
        // slice 0 folds rank 1 then rank 0; slice 1 folds rank 0 then 1.
        for i in 0..3 {
            assert_eq!(out[0].data()[i], fs[1].data()[i] + fs[0].data()[i]);
            assert_eq!(out[1].data()[i], fs[0].data()[3 + i] + fs[1].data()[3 + i]);
        }
    }

    #[test]
    fn avg_is_sum_scaled_once() {
        let fs = fields(4, 8);
        let sum = allreduce(&fs, ReduceOp::Sum).unwrap();
        let avg = allreduce(&fs, ReduceOp::Avg).unwrap();
        for (s, a) in sum.data().iter().zip(avg.data()) {
            assert_eq!(*a, s * 0.25);
        }
    }

    #[test]
    fn max_min_pick_extremes() {
        let fs = vec![
            FloatField::new(vec![1.0, -5.0, 2.0, 8.0]),
            FloatField::new(vec![3.0, -1.0, 0.0, 9.0]),
        ];
        let mx = allreduce(&fs, ReduceOp::Max).unwrap();
        let mn = allreduce(&fs, ReduceOp::Min).unwrap();
        assert_eq!(mx.data(), &[3.0, -1.0, 2.0, 9.0]);
        assert_eq!(mn.data(), &[1.0, -5.0, 0.0, 8.0]);
    }

    #[test]
    fn rejects_indivisible_lengths() {
        let fs = fields(3, 7);
        assert!(reduce_scatter(&fs, ReduceOp::Sum).is_err());
        assert!(scatter(&fs[0], 3).is_err());
    }
}
