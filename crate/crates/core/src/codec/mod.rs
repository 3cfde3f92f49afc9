//! Absolute-error-bounded block compressor for `f32` arrays.
//!
//! The monolithic container (`CCZX`) holds a header plus a sequence of
//! block records; the pipelined container (`CCPX`) splits the input into
//! fixed-element chunks, each independently decodable, with a 4-byte
//! compressed-size index at the front of the buffer so a decoder can seek
//! chunk starts without scanning.

mod bitpack;
mod block;
mod pipelined;

pub use block::BlockRecord;
pub use pipelined::{compress_pipelined, decompress_pipelined, PipelinedStream};

use crate::field::FloatField;
use thiserror::Error;

/// Values per block. 5120-element pipeline chunks are exactly 40 blocks,
/// so pipelined and monolithic payloads align on block boundaries.
pub const BLOCK_SIZE: usize = 128;

/// Default elements per pipelined chunk.
pub const DEFAULT_CHUNK_ELEMENTS: usize = 5120;

pub const MAGIC_MONOLITHIC: [u8; 4] = *b"CCZX";
pub const MAGIC_PIPELINED: [u8; 4] = *b"CCPX";
pub const VERSION: u8 = 0x01;

/// Fixed header: magic(4) + version(1) + element_count(8) + error_bound(8)
/// + block_size(2).
pub const HEADER_SIZE: usize = 23;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("empty input")]
    EmptyInput,
    #[error("invalid error bound {0}; must be positive and finite")]
    InvalidErrorBound(f64),
    #[error("magic mismatch")]
    MagicMismatch,
    #[error("unsupported version {0}")]
    VersionMismatch(u8),
    #[error("corrupt stream: {0}")]
    Corrupt(String),
    #[error("chunk elements {0} is not a positive multiple of block size {1}")]
    BadChunkElements(usize, usize),
}

/// Absolute error bound in data units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBound(f64);

impl ErrorBound {
    pub fn new(eb: f64) -> Result<Self, CodecError> {
        if eb > 0.0 && eb.is_finite() {
            Ok(Self(eb))
        } else {
            Err(CodecError::InvalidErrorBound(eb))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Self-describing byte container for one codec invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedStream {
    bytes: Vec<u8>,
    element_count: u64,
    error_bound: f64,
    block_size: u16,
}

impl CompressedStream {
    pub fn element_count(&self) -> u64 {
        self.element_count
    }

    pub fn error_bound(&self) -> f64 {
        self.error_bound
    }

    pub fn block_size(&self) -> u16 {
        self.block_size
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    /// Parses and validates container framing from raw bytes.
    pub fn from_bytes(bytes: Vec<u8>) -> Result<Self, CodecError> {
        let (element_count, error_bound, block_size) = parse_header(&bytes, MAGIC_MONOLITHIC)?;
        // Walk the block records to confirm the payload is complete.
        let mut pos = HEADER_SIZE;
        for count in block_counts(element_count as usize, block_size as usize) {
            let (_, used) = block::read_block(&bytes[pos..], count)?;
            pos += used;
        }
        if pos != bytes.len() {
            return Err(CodecError::Corrupt("trailing bytes after last block".into()));
        }
        Ok(Self { bytes, element_count, error_bound, block_size })
    }

    /// Original size divided by compressed size.
    pub fn compression_ratio(&self) -> Result<f64, CodecError> {
        compression_ratio(self.element_count, self.bytes.len())
    }
}

pub(crate) fn compression_ratio(element_count: u64, stream_bytes: usize) -> Result<f64, CodecError> {
    if element_count == 0 || stream_bytes == 0 {
        return Err(CodecError::EmptyInput);
    }
    Ok(element_count as f64 * 4.0 / stream_bytes as f64)
}

fn block_counts(elements: usize, block_size: usize) -> impl Iterator<Item = usize> {
    let full = elements / block_size;
    let tail = elements % block_size;
    (0..full)
        .map(move |_| block_size)
        .chain((tail > 0).then_some(tail))
}

fn parse_header(bytes: &[u8], magic: [u8; 4]) -> Result<(u64, f64, u16), CodecError> {
    if bytes.len() < HEADER_SIZE {
        return Err(CodecError::Corrupt("truncated header".into()));
    }
    if bytes[0..4] != magic {
        return Err(CodecError::MagicMismatch);
    }
    if bytes[4] != VERSION {
        return Err(CodecError::VersionMismatch(bytes[4]));
    }
    let element_count = u64::from_le_bytes(bytes[5..13].try_into().unwrap());
    let error_bound = f64::from_le_bytes(bytes[13..21].try_into().unwrap());
    let block_size = u16::from_le_bytes(bytes[21..23].try_into().unwrap());
    if element_count == 0 {
        return Err(CodecError::Corrupt("zero element count".into()));
    }
    if block_size == 0 {
        return Err(CodecError::Corrupt("zero block size".into()));
    }
    if !(error_bound > 0.0 && error_bound.is_finite()) {
        return Err(CodecError::InvalidErrorBound(error_bound));
    }
    Ok((element_count, error_bound, block_size))
}

fn write_header(out: &mut Vec<u8>, magic: [u8; 4], elements: u64, eb: f64, block_size: u16) {
    out.extend_from_slice(&magic);
    out.push(VERSION);
    out.extend_from_slice(&elements.to_le_bytes());
    out.extend_from_slice(&eb.to_le_bytes());
    out.extend_from_slice(&block_size.to_le_bytes());
}

/// Compresses a field under an absolute error bound.
///
/// Every finite input value is reproduced within `eb` by
/// [`decompress`]; non-finite values round-trip bit-exactly through raw
/// blocks.
pub fn compress(field: &FloatField, eb: ErrorBound) -> Result<CompressedStream, CodecError> {
    compress_slice(field.data(), eb)
}

pub(crate) fn compress_slice(data: &[f32], eb: ErrorBound) -> Result<CompressedStream, CodecError> {
    if data.is_empty() {
        return Err(CodecError::EmptyInput);
    }
    let mut bytes = Vec::with_capacity(HEADER_SIZE + data.len());
    write_header(
        &mut bytes,
        MAGIC_MONOLITHIC,
        data.len() as u64,
        eb.get(),
        BLOCK_SIZE as u16,
    );
    for chunk in data.chunks(BLOCK_SIZE) {
        let rec = block::encode_block(chunk, eb.get());
        block::write_block(&rec, &mut bytes);
    }
    Ok(CompressedStream {
        bytes,
        element_count: data.len() as u64,
        error_bound: eb.get(),
        block_size: BLOCK_SIZE as u16,
    })
}

/// Inverse of [`compress`].
pub fn decompress(stream: &CompressedStream) -> Result<FloatField, CodecError> {
    decompress_bytes(stream.as_bytes()).map(FloatField::new)
}

/// Decodes a monolithic container directly from raw bytes.
pub fn decompress_bytes(bytes: &[u8]) -> Result<Vec<f32>, CodecError> {
    let (element_count, error_bound, block_size) = parse_header(bytes, MAGIC_MONOLITHIC)?;
    let mut out = Vec::with_capacity(element_count as usize);
    let mut pos = HEADER_SIZE;
    for count in block_counts(element_count as usize, block_size as usize) {
        let (rec, used) = block::read_block(&bytes[pos..], count)?;
        pos += used;
        out.extend_from_slice(&block::decode_block(&rec, count, error_bound)?);
    }
    if pos != bytes.len() {
        return Err(CodecError::Corrupt("trailing bytes after last block".into()));
    }
    Ok(out)
}

/// Upper bound on the monolithic stream size for `elements` values; used to
/// size receive buffers.
pub fn max_stream_size(elements: usize) -> usize {
    let full = elements / BLOCK_SIZE;
    let tail = elements % BLOCK_SIZE;
    let mut size = HEADER_SIZE + full * block::max_block_size(BLOCK_SIZE);
    if tail > 0 {
        size += block::max_block_size(tail);
    }
    size
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(data: Vec<f32>) -> FloatField {
        FloatField::new(data)
    }

    #[test]
    fn constant_input_yields_all_constant_blocks() {
        let eb = ErrorBound::new(1e-3).unwrap();
        let stream = compress(&field(vec![0.0f32; 5120]), eb).unwrap();
        // 40 blocks, each a 5-byte constant record.
        assert_eq!(stream.as_bytes().len(), HEADER_SIZE + 40 * 5);
        let back = decompress(&stream).unwrap();
        assert_eq!(back.data(), vec![0.0f32; 5120]);
    }

    #[test]
    fn dense_width_matches_scalar_quantizer_oracle() {
        // Independent oracle: quantize each value against base=min with
        // step 2*eb and derive the width from the maximum offset.
        let eb = 1e-2;
        let mut state = 0x2545f4914f6cdd1du64;
        let mut vals = Vec::with_capacity(128);
        for _ in 0..128 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            vals.push((state >> 40) as f32 / (1u64 << 24) as f32); // uniform [0,1)
        }
        let min = vals.iter().copied().fold(f32::INFINITY, f32::min) as f64;
        let max = vals.iter().copied().fold(f32::NEG_INFINITY, f32::max) as f64;
        let expected_m = (((max - min) / (2.0 * eb) + 1.0).log2().ceil()) as u8;

        let stream = compress(&field(vals.clone()), ErrorBound::new(eb).unwrap()).unwrap();
        let body = &stream.as_bytes()[HEADER_SIZE..];
        assert_eq!(body[0], block::KIND_DENSE);
        assert_eq!(body[1], expected_m);

        let back = decompress(&stream).unwrap();
        let mut worst = 0f64;
        for (v, d) in vals.iter().zip(back.iter()) {
            worst = worst.max((*v as f64 - *d as f64).abs());
        }
        assert!(worst <= eb, "worst error {worst} > {eb}");
    }

    #[test]
    fn nan_block_is_raw_and_bit_exact() {
        let eb = ErrorBound::new(1e-2).unwrap();
        let mut vals: Vec<f32> = (0..300).map(|i| i as f32 * 0.01).collect();
        vals[150] = f32::from_bits(0x7fc00abc); // NaN with payload
        let stream = compress(&field(vals.clone()), eb).unwrap();
        let back = decompress(&stream).unwrap();
        assert_eq!(back[150].to_bits(), vals[150].to_bits());
        // Block 1 (values 128..256) holds the NaN and must be raw.
        let body = &stream.as_bytes()[HEADER_SIZE..];
        let (_, used0) = block::read_block(body, 128).unwrap();
        assert_eq!(body[used0], block::KIND_RAW);
    }

    #[test]
    fn dense_formula_direct_check() {
        // base + q * 2*eb with base=0, q=50, eb=1e-2 reconstructs 1.0.
        assert_eq!(block::reconstruct(0.0, 50, 1e-2), 1.0f32);
    }

    #[test]
    fn constant_record_decodes_to_copies() {
        let rec = BlockRecord::Constant(3.5);
        let out = block::decode_block(&rec, 128, 1e-3).unwrap();
        assert_eq!(out, vec![3.5f32; 128]);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            compress(&field(vec![]), ErrorBound::new(1e-3).unwrap()),
            Err(CodecError::EmptyInput)
        ));
        assert!(ErrorBound::new(0.0).is_err());
        assert!(ErrorBound::new(-1.0).is_err());
        assert!(ErrorBound::new(f64::NAN).is_err());
        assert!(ErrorBound::new(f64::INFINITY).is_err());
    }

    #[test]
    fn detects_corruption() {
        let eb = ErrorBound::new(1e-3).unwrap();
        let stream = compress(&field(vec![1.0; 256]), eb).unwrap();
        let bytes = stream.as_bytes();

        let mut magic = bytes.to_vec();
        magic[0] = b'X';
        assert!(matches!(
            decompress_bytes(&magic),
            Err(CodecError::MagicMismatch)
        ));

        let mut version = bytes.to_vec();
        version[4] = 9;
        assert!(matches!(
            decompress_bytes(&version),
            Err(CodecError::VersionMismatch(9))
        ));

        let truncated = &bytes[..bytes.len() - 3];
        assert!(decompress_bytes(truncated).is_err());
    }

    #[test]
    fn ratio_properties() {
        let eb = ErrorBound::new(1e-3).unwrap();
        let constant = compress(&field(vec![7.0; 5120]), eb).unwrap();
        assert!(constant.compression_ratio().unwrap() >= 20.0);

        // All-raw input (NaN everywhere) costs header plus type bytes.
        let raw = compress(&field(vec![f32::NAN; 5120]), eb).unwrap();
        let ratio = raw.compression_ratio().unwrap();
        assert!(ratio < 1.0 && ratio > 0.9);

        assert!(compression_ratio(0, 100).is_err());
    }

    #[test]
    fn header_is_self_describing() {
        let eb = ErrorBound::new(2.5e-4).unwrap();
        let stream = compress(&field(vec![1.0; 300]), eb).unwrap();
        let (count, bound, bsize) = parse_header(stream.as_bytes(), MAGIC_MONOLITHIC).unwrap();
        assert_eq!(count, 300);
        assert_eq!(bound, 2.5e-4);
        assert_eq!(bsize, BLOCK_SIZE as u16);
    }

    #[test]
    fn deterministic_output() {
        let eb = ErrorBound::new(1e-3).unwrap();
        let vals: Vec<f32> = (0..1000).map(|i| (i as f32 * 0.013).cos()).collect();
        let a = compress(&field(vals.clone()), eb).unwrap();
        let b = compress(&field(vals), eb).unwrap();
        assert_eq!(a.as_bytes(), b.as_bytes());
    }

    #[test]
    fn round_trip_is_idempotent() {
        let eb = ErrorBound::new(1e-3).unwrap();
        let vals: Vec<f32> = (0..2000)
            .map(|i| (i as f32 * 0.0137).sin() * 12.0 + 3.0)
            .collect();
        let once = decompress(&compress(&field(vals), eb).unwrap()).unwrap();
        let twice = decompress(&compress(&once, eb).unwrap()).unwrap();
        for (a, b) in once.iter().zip(twice.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
