//! Reduction collectives: ring reduce-scatter and the allreduce built
//! from it. The compression-integrated path splits each slice into codec
//! chunks and keeps every chunk moving as an independent message, so a
//! rank decompresses and reduces chunk k while chunk k+1 is still on the
//! wire — the overlap that shrinks the Wait column.

use crate::codec::{compress_slice, decompress_bytes, max_stream_size, ErrorBound};
use crate::collectives::{
    allgather, combine_into, require_eb, scale_for_avg, PipelineConfig, ReduceOp, Variant,
    TAG_REDUCE_SCATTER,
};
use crate::error::{Error, Result};
use crate::field::FloatField;
use crate::transport::{Category, Endpoint};

/// Ring reduce-scatter: after N−1 rounds rank `r` holds slice `r`
/// reduced over all ranks, folded in a fixed order (slice `s` starts at
/// rank `s+1` and finishes at rank `s`).
pub fn reduce_scatter(
    ep: &mut Endpoint,
    variant: Variant,
    local: &FloatField,
    op: ReduceOp,
    eb: Option<ErrorBound>,
    cfg: &PipelineConfig,
) -> Result<FloatField> {
    let n = ep.size();
    if local.is_empty() || local.len() % n != 0 {
        return Err(Error::Collective(format!(
            "cannot reduce-scatter {} elements across {n} ranks",
            local.len()
        )));
    }
    cfg.validate()?;
    let eb = require_eb(variant, eb)?;
    if n == 1 {
        let mut out = local.data().to_vec();
        if op == ReduceOp::Avg {
            scale_for_avg(&mut out, 1);
        }
        return Ok(FloatField::new(out));
    }
    // Avg = Sum along the ring, one 1/N scale at the very end.
    let ring_op = if op == ReduceOp::Avg { ReduceOp::Sum } else { op };
    let mut slice = match variant {
        Variant::Baseline => ring_baseline(ep, local, ring_op)?,
        Variant::CprP2p => ring_monolithic(ep, local, ring_op, eb.unwrap())?,
        Variant::CColl => ring_overlapped(ep, local, ring_op, eb.unwrap(), cfg)?,
    };
    if op == ReduceOp::Avg {
        ep.charge(Category::Reduction, ep.cost_reduce(slice.len()), |_| {
            scale_for_avg(&mut slice, n);
        })?;
    }
    Ok(FloatField::new(slice))
}

/// Slice index sent by rank `i` in round `r`; the received slice is the
/// one the predecessor sends, i.e. `send_slice(pred, r)`.
fn send_slice(i: usize, r: usize, n: usize) -> usize {
    (i + 2 * n - 1 - r) % n
}

fn local_slice(local: &FloatField, s: usize, sl: usize) -> &[f32] {
    &local.data()[s * sl..(s + 1) * sl]
}

fn reduce_with_local(
    ep: &mut Endpoint,
    op: ReduceOp,
    mut incoming: Vec<f32>,
    local: &[f32],
) -> Result<Vec<f32>> {
    if incoming.len() != local.len() {
        return Err(Error::Collective(format!(
            "reduction payload held {} elements, expected {}",
            incoming.len(),
            local.len()
        )));
    }
    ep.charge(Category::Reduction, ep.cost_reduce(local.len()), |_| {
        combine_into(op, &mut incoming, local);
    })?;
    Ok(incoming)
}

fn ring_baseline(ep: &mut Endpoint, local: &FloatField, op: ReduceOp) -> Result<Vec<f32>> {
    let (n, i) = (ep.size(), ep.rank());
    let (succ, pred) = ((i + 1) % n, (i + n - 1) % n);
    let sl = local.len() / n;
    let mut acc = local_slice(local, send_slice(i, 0, n), sl).to_vec();
    for r in 0..n - 1 {
        let rreq = ep.irecv(pred, TAG_REDUCE_SCATTER, sl * 4)?;
        let sreq = ep.isend(succ, TAG_REDUCE_SCATTER, super::f32s_to_bytes(&acc))?;
        ep.wait_send_as(sreq, Category::Wait)?;
        let bytes = ep.wait_recv_as(rreq, Category::Wait)?;
        let incoming = super::f32s_from_bytes(&bytes)?;
        let s = send_slice(pred, r, n);
        acc = reduce_with_local(ep, op, incoming, local_slice(local, s, sl))?;
    }
    Ok(acc)
}

/// Compress the whole accumulated slice, send it, then sit in Wait until
/// the predecessor's slice lands. No overlap: this is the comparison
/// point for the chunked pipeline below.
fn ring_monolithic(
    ep: &mut Endpoint,
    local: &FloatField,
    op: ReduceOp,
    eb: ErrorBound,
) -> Result<Vec<f32>> {
    let (n, i) = (ep.size(), ep.rank());
    let (succ, pred) = ((i + 1) % n, (i + n - 1) % n);
    let sl = local.len() / n;
    let mut acc = local_slice(local, send_slice(i, 0, n), sl).to_vec();
    for r in 0..n - 1 {
        let comp = ep.charge(Category::ComDecom, ep.cost_compress(sl), |ep| {
            ep.record_compress();
            compress_slice(&acc, eb)
        })??;
        let rreq = ep.irecv(pred, TAG_REDUCE_SCATTER, max_stream_size(sl))?;
        let sreq = ep.isend(succ, TAG_REDUCE_SCATTER, comp.into_bytes())?;
        ep.wait_send_as(sreq, Category::Wait)?;
        let bytes = ep.wait_recv_as(rreq, Category::Wait)?;
        let incoming = ep.charge(Category::ComDecom, ep.cost_decompress(sl), |ep| {
            ep.record_decompress();
            decompress_bytes(&bytes)
        })??;
        let s = send_slice(pred, r, n);
        acc = reduce_with_local(ep, op, incoming, local_slice(local, s, sl))?;
    }
    Ok(acc)
}

/// Chunked, overlapped ring round: compress and launch chunk by chunk,
/// then drain incoming chunks — decompressing and reducing each one
/// while later chunks are still in flight. Send completions are
/// collected at the end of the round, when the clock has already moved
/// past them.
fn ring_overlapped(
    ep: &mut Endpoint,
    local: &FloatField,
    op: ReduceOp,
    eb: ErrorBound,
    cfg: &PipelineConfig,
) -> Result<Vec<f32>> {
    let (n, i) = (ep.size(), ep.rank());
    let (succ, pred) = ((i + 1) % n, (i + n - 1) % n);
    let sl = local.len() / n;
    let chunk = cfg.chunk_elements.min(sl);
    let chunks = sl.div_ceil(chunk);
    let mut acc = local_slice(local, send_slice(i, 0, n), sl).to_vec();
    for r in 0..n - 1 {
        let mut rreqs = Vec::with_capacity(chunks);
        for _ in 0..chunks {
            rreqs.push(ep.irecv(pred, TAG_REDUCE_SCATTER, max_stream_size(chunk))?);
        }
        let mut sreqs = Vec::with_capacity(chunks);
        for c in 0..chunks {
            let lo = c * chunk;
            let hi = sl.min(lo + chunk);
            let comp = ep.charge(Category::ComDecom, ep.cost_compress(hi - lo), |ep| {
                ep.record_compress();
                compress_slice(&acc[lo..hi], eb)
            })??;
            sreqs.push(ep.isend(succ, TAG_REDUCE_SCATTER, comp.into_bytes())?);
            ep.poll_progress();
        }
        let s = send_slice(pred, r, n);
        let local_s = local_slice(local, s, sl);
        let mut next = vec![0f32; sl];
        for (c, rreq) in rreqs.into_iter().enumerate() {
            let lo = c * chunk;
            let hi = sl.min(lo + chunk);
            let bytes = ep.wait_recv_as(rreq, Category::Wait)?;
            let mut vals = ep.charge(Category::ComDecom, ep.cost_decompress(hi - lo), |ep| {
                ep.record_decompress();
                decompress_bytes(&bytes)
            })??;
            if vals.len() != hi - lo {
                return Err(Error::Collective(format!(
                    "chunk {c} held {} elements, expected {}",
                    vals.len(),
                    hi - lo
                )));
            }
            ep.charge(Category::Reduction, ep.cost_reduce(hi - lo), |_| {
                combine_into(op, &mut vals, &local_s[lo..hi]);
            })?;
            next[lo..hi].copy_from_slice(&vals);
            ep.poll_progress();
        }
        for sreq in sreqs {
            ep.wait_send_as(sreq, Category::Others)?;
        }
        acc = next;
    }
    Ok(acc)
}

/// Allreduce = reduce-scatter + allgather of the reduced slices. The
/// compressed path pays at most one codec error per reduce-scatter hop
/// plus one for the gather, so the elementwise error never exceeds
/// N times the bound.
pub fn allreduce(
    ep: &mut Endpoint,
    variant: Variant,
    local: &FloatField,
    op: ReduceOp,
    eb: Option<ErrorBound>,
    cfg: &PipelineConfig,
) -> Result<FloatField> {
    if ep.size() == 1 {
        let mut out = local.data().to_vec();
        if op == ReduceOp::Avg {
            scale_for_avg(&mut out, 1);
        }
        return Ok(FloatField::new(out));
    }
    let slice = reduce_scatter(ep, variant, local, op, eb, cfg)?;
    allgather(ep, variant, &slice, eb, cfg)
}
