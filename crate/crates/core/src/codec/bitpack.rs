//! LSB-first fixed-width packing of unsigned quantization offsets.

/// Packs each value into `bits` bits, least-significant bit first.
/// Caller guarantees every value fits in `bits` (1..=31).
pub fn pack(values: &[u32], bits: u8) -> Vec<u8> {
    debug_assert!((1..=31).contains(&bits));
    let total_bits = values.len() * bits as usize;
    let mut out = vec![0u8; total_bits.div_ceil(8)];
    let mut bit_pos = 0usize;
    for &v in values {
        debug_assert!(bits == 31 || v < (1u32 << bits));
        let mut acc = v as u64;
        let mut remaining = bits as usize;
        while remaining > 0 {
            let byte = bit_pos / 8;
            let offset = bit_pos % 8;
            let take = (8 - offset).min(remaining);
            out[byte] |= ((acc & ((1u64 << take) - 1)) as u8) << offset;
            acc >>= take;
            bit_pos += take;
            remaining -= take;
        }
    }
    out
}

/// Inverse of [`pack`]. Returns `None` if `bytes` is too short.
pub fn unpack(bytes: &[u8], bits: u8, count: usize) -> Option<Vec<u32>> {
    debug_assert!((1..=31).contains(&bits));
    let total_bits = count * bits as usize;
    if bytes.len() < total_bits.div_ceil(8) {
        return None;
    }
    let mut out = Vec::with_capacity(count);
    let mut bit_pos = 0usize;
    for _ in 0..count {
        let mut acc = 0u64;
        let mut got = 0usize;
        while got < bits as usize {
            let byte = bit_pos / 8;
            let offset = bit_pos % 8;
            let take = (8 - offset).min(bits as usize - got);
            let piece = (bytes[byte] >> offset) as u64 & ((1u64 << take) - 1);
            acc |= piece << got;
            got += take;
            bit_pos += take;
        }
        out.push(acc as u32);
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_various_widths() {
        for bits in 1..=31u8 {
            let mask = if bits == 31 { u32::MAX >> 1 } else { (1 << bits) - 1 };
            let values: Vec<u32> = (0..100u32).map(|i| i.wrapping_mul(2654435761) & mask).collect();
            let packed = pack(&values, bits);
            assert_eq!(packed.len(), (values.len() * bits as usize).div_ceil(8));
            let back = unpack(&packed, bits, values.len()).unwrap();
            assert_eq!(values, back);
        }
    }

    #[test]
    fn unpack_short_buffer_fails() {
        assert!(unpack(&[0xff], 7, 2).is_none());
    }
}
