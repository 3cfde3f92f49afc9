//! MPI-style collectives over the in-process transport.
//!
//! Each collective comes in three variants: a plain [`Variant::Baseline`]
//! that moves raw floats, [`Variant::CprP2p`] which compresses before
//! every send and decompresses after every receive, and
//! [`Variant::CColl`] which integrates the codec into the collective
//! itself — data-movement collectives compress each chunk exactly once,
//! and the reduction collectives interleave chunked codec work with the
//! ring exchange so transfer time hides behind computation.
//!
//! Entry points come in two layers: per-rank functions taking a live
//! [`Endpoint`] (composable inside a world closure), and `run_*` drivers
//! that spin up a [`CommWorld`], scatter per-rank inputs, and return the
//! gathered outputs plus the timing/byte report.

mod movement;
mod reduction;
pub mod reference;

pub use movement::{allgather, bcast, scatter};
pub use reduction::{allreduce, reduce_scatter};

use crate::codec::ErrorBound;
use crate::error::{Error, Result};
use crate::field::FloatField;
use crate::transport::{CommWorld, Rank, RunReport};

/// Elementwise reduction operator; `Avg` is a sum followed by a single
/// scale by 1/N after the last combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReduceOp {
    Sum,
    Max,
    Min,
    Avg,
}

/// Which compression strategy a collective uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Raw floats on the wire; never touches the codec.
    Baseline,
    /// Compress before every send, decompress after every receive.
    CprP2p,
    /// Compression-integrated collective: compress-once for data
    /// movement, chunk-overlapped codec for reductions.
    CColl,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::CprP2p => "cpr-p2p",
            Variant::CColl => "c-coll",
        }
    }
}

/// Chunking knobs for the compression-integrated paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineConfig {
    /// Fixed segment size for forwarding compressed bytes around the
    /// allgather ring.
    pub segment_bytes: usize,
    /// Elements per codec chunk in the overlapped reduction pipeline;
    /// must be a positive multiple of the codec block size.
    pub chunk_elements: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self { segment_bytes: 65536, chunk_elements: crate::codec::DEFAULT_CHUNK_ELEMENTS }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.segment_bytes == 0 {
            return Err(Error::Collective("segment_bytes must be positive".into()));
        }
        if self.chunk_elements == 0 || self.chunk_elements % crate::codec::BLOCK_SIZE != 0 {
            return Err(Error::Collective(format!(
                "chunk_elements ({}) must be a positive multiple of {}",
                self.chunk_elements,
                crate::codec::BLOCK_SIZE
            )));
        }
        Ok(())
    }
}

/// Tag blocks keep concurrently-posted phases from cross-matching.
pub(crate) const TAG_ALLGATHER_SIZE: crate::transport::Tag = 16;
pub(crate) const TAG_ALLGATHER_DATA: crate::transport::Tag = 17;
pub(crate) const TAG_BCAST: crate::transport::Tag = 32;
pub(crate) const TAG_SCATTER: crate::transport::Tag = 48;
pub(crate) const TAG_REDUCE_SCATTER: crate::transport::Tag = 64;

pub(crate) fn require_eb(variant: Variant, eb: Option<ErrorBound>) -> Result<Option<ErrorBound>> {
    match (variant, eb) {
        (Variant::Baseline, _) => Ok(None),
        (_, Some(e)) => Ok(Some(e)),
        (_, None) => Err(Error::Collective(format!(
            "variant {} requires an error bound",
            variant.name()
        ))),
    }
}

pub(crate) fn f32s_to_bytes(values: &[f32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len() * 4);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub(crate) fn f32s_from_bytes(bytes: &[u8]) -> Result<Vec<f32>> {
    if bytes.len() % 4 != 0 {
        return Err(Error::Collective(format!(
            "raw float payload of {} bytes is not a multiple of 4",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// `acc = op(acc, next)` elementwise, in the fixed ring order: the
/// accumulator is always the left operand so float non-associativity
/// cannot produce run-to-run differences.
pub(crate) fn combine_into(op: ReduceOp, acc: &mut [f32], next: &[f32]) {
    debug_assert_eq!(acc.len(), next.len());
    match op {
        ReduceOp::Sum | ReduceOp::Avg => {
            for (a, b) in acc.iter_mut().zip(next) {
                *a += *b;
            }
        }
        ReduceOp::Max => {
            for (a, b) in acc.iter_mut().zip(next) {
                *a = a.max(*b);
            }
        }
        ReduceOp::Min => {
            for (a, b) in acc.iter_mut().zip(next) {
                *a = a.min(*b);
            }
        }
    }
}

/// Final 1/N scale for `Avg`, applied exactly once after the last combine.
pub(crate) fn scale_for_avg(values: &mut [f32], n: usize) {
    let inv = 1.0f32 / n as f32;
    for v in values {
        *v *= inv;
    }
}

fn check_inputs(world: &CommWorld, inputs: &[FloatField]) -> Result<()> {
    if inputs.len() != world.size() {
        return Err(Error::Collective(format!(
            "got {} inputs for a {}-rank world",
            inputs.len(),
            world.size()
        )));
    }
    let len = inputs[0].len();
    if inputs.iter().any(|f| f.len() != len) {
        return Err(Error::Collective("ranks supplied unequal field lengths".into()));
    }
    Ok(())
}

/// Runs allgather across a fresh set of rank contexts; `inputs[r]` is the
/// local block of rank `r`, and every entry of the output holds the
/// rank-ordered concatenation seen by that rank.
pub fn run_allgather(
    world: &CommWorld,
    variant: Variant,
    inputs: &[FloatField],
    eb: Option<ErrorBound>,
    cfg: &PipelineConfig,
) -> Result<(Vec<FloatField>, RunReport)> {
    check_inputs(world, inputs)?;
    world.run(|ep| allgather(ep, variant, &inputs[ep.rank()], eb, cfg))
}

/// Broadcasts `root_field` from `root` to every rank.
pub fn run_bcast(
    world: &CommWorld,
    variant: Variant,
    root_field: &FloatField,
    root: Rank,
    eb: Option<ErrorBound>,
    cfg: &PipelineConfig,
) -> Result<(Vec<FloatField>, RunReport)> {
    let elements = root_field.len();
    world.run(|ep| {
        let input = (ep.rank() == root).then_some(root_field);
        bcast(ep, variant, root, input, elements, eb, cfg)
    })
}

/// Scatters equal slices of `root_field` from `root`; rank `r` receives
/// slice `r`.
pub fn run_scatter(
    world: &CommWorld,
    variant: Variant,
    root_field: &FloatField,
    root: Rank,
    eb: Option<ErrorBound>,
    cfg: &PipelineConfig,
) -> Result<(Vec<FloatField>, RunReport)> {
    let elements = root_field.len();
    world.run(|ep| {
        let input = (ep.rank() == root).then_some(root_field);
        scatter(ep, variant, root, input, elements, eb, cfg)
    })
}

/// Runs reduce-scatter; rank `r` of the output holds the reduced slice `r`.
pub fn run_reduce_scatter(
    world: &CommWorld,
    variant: Variant,
    inputs: &[FloatField],
    op: ReduceOp,
    eb: Option<ErrorBound>,
    cfg: &PipelineConfig,
) -> Result<(Vec<FloatField>, RunReport)> {
    check_inputs(world, inputs)?;
    world.run(|ep| reduce_scatter(ep, variant, &inputs[ep.rank()], op, eb, cfg))
}

/// Runs allreduce; every output entry holds the full reduced field.
pub fn run_allreduce(
    world: &CommWorld,
    variant: Variant,
    inputs: &[FloatField],
    op: ReduceOp,
    eb: Option<ErrorBound>,
    cfg: &PipelineConfig,
) -> Result<(Vec<FloatField>, RunReport)> {
    check_inputs(world, inputs)?;
    world.run(|ep| allreduce(ep, variant, &inputs[ep.rank()], op, eb, cfg))
}

/// Parent/child bookkeeping for the binomial tree rooted at relative
/// rank 0. Works for any world size, not just powers of two: a child
/// link exists only when the child's relative rank is inside the world.
pub(crate) struct BinomialTree {
    pub relative: usize,
    pub size: usize,
    /// Bit found by the receive scan: lowest set bit of `relative`, or
    /// the smallest power of two >= size at the root.
    pub top_mask: usize,
}

impl BinomialTree {
    pub fn new(rank: Rank, root: Rank, size: usize) -> Self {
        let relative = (rank + size - root) % size;
        let mut mask = 1;
        while mask < size && relative & mask == 0 {
            mask <<= 1;
        }
        Self { relative, size, top_mask: mask }
    }

    pub fn is_root(&self) -> bool {
        self.relative == 0
    }

    /// Relative rank of the parent (meaningless at the root).
    pub fn parent(&self) -> usize {
        self.relative - self.top_mask
    }

    /// Relative child ranks in send order (largest subtree first).
    pub fn children(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut mask = self.top_mask >> 1;
        while mask > 0 {
            let child = self.relative + mask;
            if child < self.size {
                out.push(child);
            }
            mask >>= 1;
        }
        out
    }

    /// Number of relative ranks in this node's subtree (including self),
    /// clipped to the world size.
    pub fn subtree_span(&self) -> usize {
        self.top_mask.min(self.size - self.relative)
    }

    pub fn absolute(&self, relative: usize, root: Rank) -> Rank {
        (relative + root) % self.size
    }
}
