//! Per-block classification and encoding.
//!
//! Each block of up to `block_size` values is stored in one of three forms:
//!
//! * `Constant` — every value in the block is identical; one f32 is stored.
//! * `Dense` — values are quantized to the grid `base + q * 2*eb` and the
//!   offsets `q` are bit-packed at the narrowest width that fits.
//! * `Raw` — lossless fallback for blocks with non-finite values, offsets
//!   wider than 31 bits, or values the quantizer cannot reproduce within
//!   the bound.

use super::bitpack;
use super::CodecError;

pub const KIND_CONSTANT: u8 = 0;
pub const KIND_DENSE: u8 = 1;
pub const KIND_RAW: u8 = 2;

pub const MAX_DENSE_BITS: u8 = 31;

#[derive(Debug, Clone, PartialEq)]
pub enum BlockRecord {
    Constant(f32),
    Dense { bits: u8, base: f32, packed: Vec<u8> },
    Raw(Vec<f32>),
}

/// Quantized reconstruction, shared by encoder and decoder so the encoder
/// can verify exactly what the decoder will produce.
#[inline]
pub fn reconstruct(base: f32, q: u32, eb: f64) -> f32 {
    (base as f64 + q as f64 * 2.0 * eb) as f32
}

/// Encodes one block. `eb` is the absolute error bound, already validated.
pub fn encode_block(values: &[f32], eb: f64) -> BlockRecord {
    debug_assert!(!values.is_empty());
    if values.iter().any(|v| !v.is_finite()) {
        return BlockRecord::Raw(values.to_vec());
    }
    // Exactly uniform blocks round-trip losslessly through one stored value.
    if values.iter().all(|&v| v == values[0]) {
        return BlockRecord::Constant(values[0]);
    }
    match encode_dense(values, eb) {
        Some(rec) => rec,
        None => BlockRecord::Raw(values.to_vec()),
    }
}

fn encode_dense(values: &[f32], eb: f64) -> Option<BlockRecord> {
    let base = values.iter().copied().fold(f32::INFINITY, f32::min);
    let base_f64 = base as f64;
    let step = 2.0 * eb;
    let mut offsets = Vec::with_capacity(values.len());
    let mut q_max = 0u32;
    for &v in values {
        let v64 = v as f64;
        let q0 = ((v64 - base_f64) / step).round();
        if !(0.0..=u32::MAX as f64).contains(&q0) {
            return None;
        }
        let q0 = q0 as u32;
        // Among the nearest candidate grid points, prefer the one whose f32
        // reconstruction is closest to the input; values already sitting on
        // the grid reproduce bit-exactly, so re-compression is idempotent.
        let mut best_q = q0;
        let mut best_err = (v64 - reconstruct(base, q0, eb) as f64).abs();
        for cand in [q0.saturating_sub(1), q0.saturating_add(1)] {
            if cand == q0 {
                continue;
            }
            let err = (v64 - reconstruct(base, cand, eb) as f64).abs();
            if err < best_err || (err == best_err && cand < best_q) {
                best_q = cand;
                best_err = err;
            }
        }
        if best_err > eb {
            return None;
        }
        q_max = q_max.max(best_q);
        offsets.push(best_q);
    }
    let bits = (32 - q_max.leading_zeros()).max(1) as u8;
    if bits > MAX_DENSE_BITS {
        return None;
    }
    Some(BlockRecord::Dense {
        bits,
        base,
        packed: bitpack::pack(&offsets, bits),
    })
}

/// Decodes one block of `count` values.
pub fn decode_block(record: &BlockRecord, count: usize, eb: f64) -> Result<Vec<f32>, CodecError> {
    match record {
        BlockRecord::Constant(rep) => Ok(vec![*rep; count]),
        BlockRecord::Dense { bits, base, packed } => {
            if !(1..=MAX_DENSE_BITS).contains(bits) {
                return Err(CodecError::Corrupt("dense bit width out of range".into()));
            }
            let offsets = bitpack::unpack(packed, *bits, count)
                .ok_or_else(|| CodecError::Corrupt("dense payload too short".into()))?;
            Ok(offsets.iter().map(|&q| reconstruct(*base, q, eb)).collect())
        }
        BlockRecord::Raw(values) => {
            if values.len() != count {
                return Err(CodecError::Corrupt("raw block length mismatch".into()));
            }
            Ok(values.clone())
        }
    }
}

/// Serializes one block record.
pub fn write_block(record: &BlockRecord, out: &mut Vec<u8>) {
    match record {
        BlockRecord::Constant(rep) => {
            out.push(KIND_CONSTANT);
            out.extend_from_slice(&rep.to_le_bytes());
        }
        BlockRecord::Dense { bits, base, packed } => {
            out.push(KIND_DENSE);
            out.push(*bits);
            out.extend_from_slice(&base.to_le_bytes());
            out.extend_from_slice(packed);
        }
        BlockRecord::Raw(values) => {
            out.push(KIND_RAW);
            for v in values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
}

/// Parses one block record of `count` values, returning the record and the
/// number of bytes consumed.
pub fn read_block(bytes: &[u8], count: usize) -> Result<(BlockRecord, usize), CodecError> {
    let kind = *bytes
        .first()
        .ok_or_else(|| CodecError::Corrupt("truncated block header".into()))?;
    let body = &bytes[1..];
    match kind {
        KIND_CONSTANT => {
            if body.len() < 4 {
                return Err(CodecError::Corrupt("truncated constant block".into()));
            }
            let rep = f32::from_le_bytes([body[0], body[1], body[2], body[3]]);
            Ok((BlockRecord::Constant(rep), 5))
        }
        KIND_DENSE => {
            if body.len() < 5 {
                return Err(CodecError::Corrupt("truncated dense block header".into()));
            }
            let bits = body[0];
            if !(1..=MAX_DENSE_BITS).contains(&bits) {
                return Err(CodecError::Corrupt("dense bit width out of range".into()));
            }
            let base = f32::from_le_bytes([body[1], body[2], body[3], body[4]]);
            let packed_len = (count * bits as usize).div_ceil(8);
            if body.len() < 5 + packed_len {
                return Err(CodecError::Corrupt("truncated dense block payload".into()));
            }
            let packed = body[5..5 + packed_len].to_vec();
            Ok((BlockRecord::Dense { bits, base, packed }, 1 + 5 + packed_len))
        }
        KIND_RAW => {
            let need = count * 4;
            if body.len() < need {
                return Err(CodecError::Corrupt("truncated raw block".into()));
            }
            let values = body[..need]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            Ok((BlockRecord::Raw(values), 1 + need))
        }
        other => Err(CodecError::Corrupt(format!("unknown block kind {other}"))),
    }
}

/// Upper bound on the encoded size of a block with `count` values.
pub fn max_block_size(count: usize) -> usize {
    let raw = 1 + 4 * count;
    let dense = 1 + 1 + 4 + (count * MAX_DENSE_BITS as usize).div_ceil(8);
    raw.max(dense)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_block_is_exact() {
        let values = vec![3.5f32; 128];
        let rec = encode_block(&values, 1e-3);
        assert!(matches!(rec, BlockRecord::Constant(v) if v == 3.5));
        assert_eq!(decode_block(&rec, 128, 1e-3).unwrap(), values);
    }

    #[test]
    fn non_finite_forces_raw() {
        let mut values = vec![1.0f32; 16];
        values[7] = f32::NAN;
        let rec = encode_block(&values, 1e-2);
        assert!(matches!(rec, BlockRecord::Raw(_)));
        let back = decode_block(&rec, 16, 1e-2).unwrap();
        assert!(back[7].is_nan());
        assert_eq!(back[7].to_bits(), values[7].to_bits());
    }

    #[test]
    fn dense_respects_bound() {
        let eb = 1e-2;
        let values: Vec<f32> = (0..128).map(|i| i as f32 / 128.0).collect();
        let rec = encode_block(&values, eb);
        assert!(matches!(rec, BlockRecord::Dense { .. }));
        let back = decode_block(&rec, 128, eb).unwrap();
        for (v, d) in values.iter().zip(back.iter()) {
            assert!((*v as f64 - *d as f64).abs() <= eb);
        }
    }

    #[test]
    fn huge_spread_falls_back_to_raw() {
        let values = vec![-3.0e38f32, 3.0e38];
        let rec = encode_block(&values, 1e-4);
        assert!(matches!(rec, BlockRecord::Raw(_)));
    }

    #[test]
    fn wire_round_trip() {
        let eb = 1e-3;
        let values: Vec<f32> = (0..100).map(|i| (i as f32 * 0.37).sin()).collect();
        let rec = encode_block(&values, eb);
        let mut buf = Vec::new();
        write_block(&rec, &mut buf);
        let (parsed, used) = read_block(&buf, 100).unwrap();
        assert_eq!(used, buf.len());
        assert_eq!(parsed, rec);
    }
}
