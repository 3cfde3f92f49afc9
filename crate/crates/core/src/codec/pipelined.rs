//! Chunked compression with a front-of-buffer size index.
//!
//! The input is split into `chunk_elements`-sized chunks (last may be
//! partial); each chunk is compressed independently and its compressed byte
//! size recorded in a fixed-width index ahead of the payloads. A caller
//! supplied progress hook runs between consecutive chunk codec steps, which
//! is where collective implementations poll outstanding transfers.

use super::{
    compress_slice, compression_ratio, decompress_bytes, CodecError, ErrorBound, BLOCK_SIZE,
    MAGIC_PIPELINED, VERSION,
};
use crate::field::FloatField;

/// magic(4) + version(1) + chunk_elements(4) + chunk_count(4)
const PIPE_HEADER_SIZE: usize = 13;

/// Chunked compressed container with a fixed-width size index at the front.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelinedStream {
    bytes: Vec<u8>,
    chunk_elements: u32,
    chunk_count: u32,
    element_count: u64,
}

impl PipelinedStream {
    pub fn chunk_elements(&self) -> u32 {
        self.chunk_elements
    }

    pub fn chunk_count(&self) -> u32 {
        self.chunk_count
    }

    pub fn element_count(&self) -> u64 {
        self.element_count
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    /// Compressed byte size of each chunk, read from the index.
    pub fn index(&self) -> Vec<u32> {
        (0..self.chunk_count as usize)
            .map(|i| {
                let at = PIPE_HEADER_SIZE + 4 * i;
                u32::from_le_bytes(self.bytes[at..at + 4].try_into().unwrap())
            })
            .collect()
    }

    /// Parses and validates container framing from raw bytes.
    pub fn from_bytes(bytes: Vec<u8>) -> Result<Self, CodecError> {
        let (chunk_elements, chunk_count) = parse_pipe_header(&bytes)?;
        let index_end = PIPE_HEADER_SIZE + 4 * chunk_count as usize;
        if bytes.len() < index_end {
            return Err(CodecError::Corrupt("truncated chunk index".into()));
        }
        let mut pos = index_end;
        let mut element_count = 0u64;
        for i in 0..chunk_count as usize {
            let at = PIPE_HEADER_SIZE + 4 * i;
            let size = u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
            if pos + size > bytes.len() {
                return Err(CodecError::Corrupt(format!(
                    "index entry {i} ({size} bytes) exceeds remaining payload"
                )));
            }
            let chunk = super::CompressedStream::from_bytes(bytes[pos..pos + size].to_vec())?;
            element_count += chunk.element_count();
            pos += size;
        }
        if pos != bytes.len() {
            return Err(CodecError::Corrupt("trailing bytes after last chunk".into()));
        }
        Ok(Self { bytes, chunk_elements, chunk_count, element_count })
    }

    /// Original size divided by compressed size.
    pub fn compression_ratio(&self) -> Result<f64, CodecError> {
        compression_ratio(self.element_count, self.bytes.len())
    }
}

fn parse_pipe_header(bytes: &[u8]) -> Result<(u32, u32), CodecError> {
    if bytes.len() < PIPE_HEADER_SIZE {
        return Err(CodecError::Corrupt("truncated header".into()));
    }
    if bytes[0..4] != MAGIC_PIPELINED {
        return Err(CodecError::MagicMismatch);
    }
    if bytes[4] != VERSION {
        return Err(CodecError::VersionMismatch(bytes[4]));
    }
    let chunk_elements = u32::from_le_bytes(bytes[5..9].try_into().unwrap());
    let chunk_count = u32::from_le_bytes(bytes[9..13].try_into().unwrap());
    if chunk_elements == 0 || chunk_elements as usize % BLOCK_SIZE != 0 {
        return Err(CodecError::BadChunkElements(chunk_elements as usize, BLOCK_SIZE));
    }
    if chunk_count == 0 {
        return Err(CodecError::Corrupt("zero chunk count".into()));
    }
    Ok((chunk_elements, chunk_count))
}

/// Compresses in chunks, invoking `hook` between consecutive chunk
/// compressions. Chunk boundaries align with block boundaries, so the
/// decoded output is elementwise identical to the monolithic path.
pub fn compress_pipelined(
    field: &FloatField,
    eb: ErrorBound,
    chunk_elements: usize,
    mut hook: impl FnMut(),
) -> Result<PipelinedStream, CodecError> {
    if field.is_empty() {
        return Err(CodecError::EmptyInput);
    }
    if chunk_elements == 0 || chunk_elements % BLOCK_SIZE != 0 {
        return Err(CodecError::BadChunkElements(chunk_elements, BLOCK_SIZE));
    }
    let data = field.data();
    let chunk_count = data.len().div_ceil(chunk_elements);
    if chunk_count > u32::MAX as usize {
        return Err(CodecError::Corrupt("too many chunks".into()));
    }

    let mut index = Vec::with_capacity(chunk_count);
    let mut payloads = Vec::new();
    for (i, chunk) in data.chunks(chunk_elements).enumerate() {
        if i > 0 {
            hook();
        }
        let stream = compress_slice(chunk, eb)?;
        let size = stream.as_bytes().len();
        if size > u32::MAX as usize {
            return Err(CodecError::Corrupt("chunk exceeds 4 GiB index width".into()));
        }
        index.push(size as u32);
        payloads.extend_from_slice(stream.as_bytes());
    }

    let mut bytes = Vec::with_capacity(PIPE_HEADER_SIZE + 4 * chunk_count + payloads.len());
    bytes.extend_from_slice(&MAGIC_PIPELINED);
    bytes.push(VERSION);
    bytes.extend_from_slice(&(chunk_elements as u32).to_le_bytes());
    bytes.extend_from_slice(&(chunk_count as u32).to_le_bytes());
    for size in &index {
        bytes.extend_from_slice(&size.to_le_bytes());
    }
    bytes.extend_from_slice(&payloads);
    Ok(PipelinedStream {
        bytes,
        chunk_elements: chunk_elements as u32,
        chunk_count: chunk_count as u32,
        element_count: data.len() as u64,
    })
}

/// Inverse of [`compress_pipelined`]; `hook` runs between consecutive chunk
/// decompressions. Chunk starts are located through the front index.
pub fn decompress_pipelined(
    stream: &PipelinedStream,
    mut hook: impl FnMut(),
) -> Result<FloatField, CodecError> {
    let bytes = stream.as_bytes();
    let (_, chunk_count) = parse_pipe_header(bytes)?;
    let index_end = PIPE_HEADER_SIZE + 4 * chunk_count as usize;
    if bytes.len() < index_end {
        return Err(CodecError::Corrupt("truncated chunk index".into()));
    }
    let mut out = Vec::new();
    let mut pos = index_end;
    for i in 0..chunk_count as usize {
        if i > 0 {
            hook();
        }
        let at = PIPE_HEADER_SIZE + 4 * i;
        let size = u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
        if pos + size > bytes.len() {
            return Err(CodecError::Corrupt(format!(
                "index entry {i} ({size} bytes) exceeds remaining payload"
            )));
        }
        out.extend_from_slice(&decompress_bytes(&bytes[pos..pos + size])?);
        pos += size;
    }
    if pos != bytes.len() {
        return Err(CodecError::Corrupt("trailing bytes after last chunk".into()));
    }
    Ok(FloatField::new(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{compress, decompress};
    use std::cell::Cell;

    fn sample(n: usize) -> FloatField {
        FloatField::new((0..n).map(|i| (i as f32 * 0.0021).sin() * 4.0).collect())
    }

    #[test]
    fn two_chunks_for_10240_values() {
        let eb = ErrorBound::new(1e-3).unwrap();
        let stream = compress_pipelined(&sample(10240), eb, 5120, || {}).unwrap();
        assert_eq!(stream.chunk_count(), 2);
        assert_eq!(stream.index().len(), 2);
    }

    #[test]
    fn short_field_degenerates_to_single_chunk() {
        let eb = ErrorBound::new(1e-3).unwrap();
        let field = sample(700);
        let pipe = compress_pipelined(&field, eb, 5120, || {}).unwrap();
        assert_eq!(pipe.chunk_count(), 1);
        let mono = decompress(&compress(&field, eb).unwrap()).unwrap();
        let piped = decompress_pipelined(&pipe, || {}).unwrap();
        assert_eq!(mono.data(), piped.data());
    }

    #[test]
    fn matches_monolithic_bit_for_bit() {
        let eb = ErrorBound::new(1e-2).unwrap();
        for n in [128, 129, 5120, 5121, 13000] {
            let field = sample(n);
            let mono = decompress(&compress(&field, eb).unwrap()).unwrap();
            for chunk in [128usize, 640, 5120] {
                let pipe = compress_pipelined(&field, eb, chunk, || {}).unwrap();
                let piped = decompress_pipelined(&pipe, || {}).unwrap();
                assert_eq!(mono.len(), piped.len());
                for (a, b) in mono.iter().zip(piped.iter()) {
                    assert_eq!(a.to_bits(), b.to_bits());
                }
            }
        }
    }

    #[test]
    fn hook_runs_between_chunks() {
        let eb = ErrorBound::new(1e-3).unwrap();
        let field = sample(5120 * 4);
        let calls = Cell::new(0u32);
        let stream = compress_pipelined(&field, eb, 5120, || calls.set(calls.get() + 1)).unwrap();
        assert!(calls.get() >= 3);

        let calls = Cell::new(0u32);
        decompress_pipelined(&stream, || calls.set(calls.get() + 1)).unwrap();
        assert!(calls.get() >= stream.chunk_count() - 1);
    }

    #[test]
    fn rejects_misaligned_chunk_size() {
        let eb = ErrorBound::new(1e-3).unwrap();
        assert!(matches!(
            compress_pipelined(&sample(512), eb, 100, || {}),
            Err(CodecError::BadChunkElements(100, _))
        ));
    }

    #[test]
    fn oversized_index_entry_is_an_error() {
        let eb = ErrorBound::new(1e-3).unwrap();
        let stream = compress_pipelined(&sample(10240), eb, 5120, || {}).unwrap();
        let mut bytes = stream.into_bytes();
        // Inflate the first index entry past the payload.
        let at = PIPE_HEADER_SIZE;
        bytes[at..at + 4].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(PipelinedStream::from_bytes(bytes).is_err());
    }
}
