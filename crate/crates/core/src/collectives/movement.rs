//! Data-movement collectives: allgather (ring), bcast and scatter
//! (binomial tree). The compression-integrated variants compress every
//! element exactly once end to end, so the output error stays within one
//! codec bound regardless of how many hops the bytes traverse.

use crate::codec::{compress_slice, decompress_bytes, max_stream_size, ErrorBound};
use crate::collectives::{
    f32s_from_bytes, f32s_to_bytes, require_eb, BinomialTree, PipelineConfig, Variant,
    TAG_ALLGATHER_DATA, TAG_ALLGATHER_SIZE, TAG_BCAST, TAG_SCATTER,
};
use crate::error::{Error, Result};
use crate::field::FloatField;
use crate::transport::{Category, Endpoint, Rank};

/// Ring allgather: `local` from every rank, rank-ordered concatenation
/// out. Completes in N−1 rounds; the compressed path forwards a single
/// byte stream in fixed-size segments so round sizes do not depend on
/// per-rank compressed sizes.
pub fn allgather(
    ep: &mut Endpoint,
    variant: Variant,
    local: &FloatField,
    eb: Option<ErrorBound>,
    cfg: &PipelineConfig,
) -> Result<FloatField> {
    if local.is_empty() {
        return Err(Error::Collective("allgather of an empty field".into()));
    }
    cfg.validate()?;
    let eb = require_eb(variant, eb)?;
    if ep.size() == 1 {
        return Ok(local.clone());
    }
    match variant {
        Variant::Baseline => allgather_baseline(ep, local),
        Variant::CprP2p => allgather_cpr_p2p(ep, local, eb.unwrap()),
        Variant::CColl => allgather_compressed(ep, local, eb.unwrap(), cfg),
    }
}

fn place_block(ep: &mut Endpoint, out: &mut [f32], idx: usize, len: usize, vals: &[f32]) -> Result<()> {
    if vals.len() != len {
        return Err(Error::Collective(format!(
            "block {idx} arrived with {} elements, expected {len}",
            vals.len()
        )));
    }
    ep.charge(Category::Memcpy, ep.cost_memcpy(len * 4), |_| {
        out[idx * len..(idx + 1) * len].copy_from_slice(vals);
    })?;
    Ok(())
}

fn allgather_baseline(ep: &mut Endpoint, local: &FloatField) -> Result<FloatField> {
    let (n, i, len) = (ep.size(), ep.rank(), local.len());
    let (succ, pred) = ((i + 1) % n, (i + n - 1) % n);
    let mut out = vec![0f32; n * len];
    place_block(ep, &mut out, i, len, local.data())?;
    let mut forward = local.data().to_vec();
    for r in 0..n - 1 {
        let rreq = ep.irecv(pred, TAG_ALLGATHER_DATA, len * 4)?;
        let sreq = ep.isend(succ, TAG_ALLGATHER_DATA, f32s_to_bytes(&forward))?;
        ep.wait_send_as(sreq, Category::Allgather)?;
        let bytes = ep.wait_recv_as(rreq, Category::Allgather)?;
        let vals = f32s_from_bytes(&bytes)?;
        let idx = (i + n - 1 - r) % n;
        place_block(ep, &mut out, idx, len, &vals)?;
        forward = vals;
    }
    Ok(FloatField::new(out))
}

fn allgather_cpr_p2p(ep: &mut Endpoint, local: &FloatField, eb: ErrorBound) -> Result<FloatField> {
    let (n, i, len) = (ep.size(), ep.rank(), local.len());
    let (succ, pred) = ((i + 1) % n, (i + n - 1) % n);
    let mut out = vec![0f32; n * len];
    place_block(ep, &mut out, i, len, local.data())?;
    // Every hop re-encodes, so each forwarded block pays one codec pass
    // per round and its error can grow with the hop count.
    let mut forward = local.data().to_vec();
    for r in 0..n - 1 {
        let comp = ep.charge(Category::ComDecom, ep.cost_compress(len), |ep| {
            ep.record_compress();
            compress_slice(&forward, eb)
        })??;
        let rreq = ep.irecv(pred, TAG_ALLGATHER_DATA, max_stream_size(len))?;
        let sreq = ep.isend(succ, TAG_ALLGATHER_DATA, comp.into_bytes())?;
        ep.wait_send_as(sreq, Category::Allgather)?;
        let bytes = ep.wait_recv_as(rreq, Category::Allgather)?;
        let vals = ep.charge(Category::ComDecom, ep.cost_decompress(len), |ep| {
            ep.record_decompress();
            decompress_bytes(&bytes)
        })??;
        let idx = (i + n - 1 - r) % n;
        place_block(ep, &mut out, idx, len, &vals)?;
        forward = vals;
    }
    Ok(FloatField::new(out))
}

fn allgather_compressed(
    ep: &mut Endpoint,
    local: &FloatField,
    eb: ErrorBound,
    cfg: &PipelineConfig,
) -> Result<FloatField> {
    let (n, i, len) = (ep.size(), ep.rank(), local.len());
    let (succ, pred) = ((i + 1) % n, (i + n - 1) % n);

    // Compress the local block exactly once.
    let comp = ep.charge(Category::ComDecom, ep.cost_compress(len), |ep| {
        ep.record_compress();
        compress_slice(local.data(), eb)
    })??;
    let my_bytes = comp.into_bytes();

    // Ring-allgather the 4-byte compressed sizes so every rank knows the
    // exact byte budget before forwarding begins.
    let mut sizes = vec![0u32; n];
    sizes[i] = my_bytes.len() as u32;
    let mut fwd_size = sizes[i];
    for r in 0..n - 1 {
        let rreq = ep.irecv(pred, TAG_ALLGATHER_SIZE, 4)?;
        let sreq = ep.isend(succ, TAG_ALLGATHER_SIZE, fwd_size.to_le_bytes().to_vec())?;
        ep.wait_send_as(sreq, Category::Allgather)?;
        let bytes = ep.wait_recv_as(rreq, Category::Allgather)?;
        fwd_size = u32::from_le_bytes(bytes.as_slice().try_into().map_err(|_| {
            Error::Collective("size-exchange message was not 4 bytes".into())
        })?);
        sizes[(i + n - 1 - r) % n] = fwd_size;
    }

    // Forward the concatenated compressed stream around the ring in
    // fixed segments. The stream at rank i grows in descending ring
    // order [i, i−1, i−2, ...]; the successor's own block is the one
    // byte range never sent.
    let total: usize = sizes.iter().map(|&s| s as usize).sum();
    let to_send = total - sizes[succ] as usize;
    let to_recv = total - sizes[i] as usize;
    let mut stream = my_bytes;
    let (mut sent, mut received) = (0usize, 0usize);
    while sent < to_send || received < to_recv {
        while sent < to_send && stream.len() > sent {
            let piece = (stream.len() - sent).min(cfg.segment_bytes).min(to_send - sent);
            let sreq = ep.isend(succ, TAG_ALLGATHER_DATA, stream[sent..sent + piece].to_vec())?;
            ep.wait_send_as(sreq, Category::Allgather)?;
            sent += piece;
        }
        if received < to_recv {
            let rreq = ep.irecv(pred, TAG_ALLGATHER_DATA, cfg.segment_bytes)?;
            let bytes = ep.wait_recv_as(rreq, Category::Allgather)?;
            received += bytes.len();
            if received > to_recv {
                return Err(Error::Collective("ring delivered more bytes than expected".into()));
            }
            stream.extend_from_slice(&bytes);
        }
    }

    // Decompress each foreign block exactly once; the local block is
    // copied through unencoded.
    let mut out = vec![0f32; n * len];
    place_block(ep, &mut out, i, len, local.data())?;
    let mut pos = sizes[i] as usize;
    for d in 1..n {
        let idx = (i + n - d) % n;
        let sz = sizes[idx] as usize;
        let vals = ep.charge(Category::ComDecom, ep.cost_decompress(len), |ep| {
            ep.record_decompress();
            decompress_bytes(&stream[pos..pos + sz])
        })??;
        place_block(ep, &mut out, idx, len, &vals)?;
        pos += sz;
    }
    Ok(FloatField::new(out))
}

/// Binomial-tree broadcast from `root`. Non-root callers pass
/// `input = None` and must agree on `elements`.
pub fn bcast(
    ep: &mut Endpoint,
    variant: Variant,
    root: Rank,
    input: Option<&FloatField>,
    elements: usize,
    eb: Option<ErrorBound>,
    cfg: &PipelineConfig,
) -> Result<FloatField> {
    let n = ep.size();
    if root >= n {
        return Err(Error::Collective(format!("root {root} out of range for {n} ranks")));
    }
    if elements == 0 {
        return Err(Error::Collective("bcast of an empty field".into()));
    }
    cfg.validate()?;
    let eb = require_eb(variant, eb)?;
    let is_root = ep.rank() == root;
    let local = match (is_root, input) {
        (true, Some(f)) if f.len() == elements => Some(f),
        (true, _) => {
            return Err(Error::Collective("root must supply a field of the agreed length".into()))
        }
        (false, _) => None,
    };
    if n == 1 {
        return Ok(local.unwrap().clone());
    }
    let tree = BinomialTree::new(ep.rank(), root, n);

    // Receive phase: everyone but the root gets the payload from its
    // parent. The wire carries raw floats (Baseline) or one compressed
    // stream (both compressed variants).
    let payload: Vec<u8> = if tree.is_root() {
        match variant {
            Variant::Baseline => f32s_to_bytes(local.unwrap().data()),
            Variant::CprP2p => Vec::new(), // re-encoded per child below
            Variant::CColl => {
                let comp = ep.charge(Category::ComDecom, ep.cost_compress(elements), |ep| {
                    ep.record_compress();
                    compress_slice(local.unwrap().data(), eb.unwrap())
                })??;
                comp.into_bytes()
            }
        }
    } else {
        let src = tree.absolute(tree.parent(), root);
        let max = match variant {
            Variant::Baseline => elements * 4,
            _ => max_stream_size(elements),
        };
        let rreq = ep.irecv(src, TAG_BCAST, max)?;
        ep.wait_recv_as(rreq, Category::Wait)?
    };

    // Decode what this rank will return (and, for the re-encoding
    // variant, what it forwards from).
    let values: Vec<f32> = if tree.is_root() {
        local.unwrap().data().to_vec()
    } else {
        match variant {
            Variant::Baseline => f32s_from_bytes(&payload)?,
            _ => ep.charge(Category::ComDecom, ep.cost_decompress(elements), |ep| {
                ep.record_decompress();
                decompress_bytes(&payload)
            })??,
        }
    };
    if values.len() != elements {
        return Err(Error::Collective(format!(
            "bcast payload held {} elements, expected {elements}",
            values.len()
        )));
    }

    // Send phase: largest subtree first.
    for child in tree.children() {
        let dst = tree.absolute(child, root);
        let bytes = match variant {
            Variant::Baseline => f32s_to_bytes(&values),
            Variant::CprP2p => {
                let comp = ep.charge(Category::ComDecom, ep.cost_compress(elements), |ep| {
                    ep.record_compress();
                    compress_slice(&values, eb.unwrap())
                })??;
                comp.into_bytes()
            }
            // Forward the received stream unmodified: one compression
            // end to end.
            Variant::CColl => payload.clone(),
        };
        let sreq = ep.isend(dst, TAG_BCAST, bytes)?;
        ep.wait_send_as(sreq, Category::Wait)?;
    }
    Ok(FloatField::new(values))
}

/// What a scatter node holds for the slices of its subtree, in relative
/// rank order starting at its own slice.
enum ScatterHold {
    /// Raw f32 bytes, `slice_len * 4` per slice, concatenated.
    Raw(Vec<u8>),
    /// One compressed stream per slice, forwarded untouched.
    Streams(Vec<Vec<u8>>),
    /// Decoded values per slice; re-encoded on every send.
    Decoded(Vec<Vec<f32>>),
}

/// Binomial-tree scatter: slice `r` of the root buffer lands on rank `r`.
pub fn scatter(
    ep: &mut Endpoint,
    variant: Variant,
    root: Rank,
    input: Option<&FloatField>,
    total_elements: usize,
    eb: Option<ErrorBound>,
    cfg: &PipelineConfig,
) -> Result<FloatField> {
    let n = ep.size();
    if root >= n {
        return Err(Error::Collective(format!("root {root} out of range for {n} ranks")));
    }
    if total_elements == 0 || total_elements % n != 0 {
        return Err(Error::Collective(format!(
            "cannot scatter {total_elements} elements across {n} ranks"
        )));
    }
    cfg.validate()?;
    let eb = require_eb(variant, eb)?;
    let sl = total_elements / n;
    let is_root = ep.rank() == root;
    let local = match (is_root, input) {
        (true, Some(f)) if f.len() == total_elements => Some(f),
        (true, _) => {
            return Err(Error::Collective("root must supply a field of the agreed length".into()))
        }
        (false, _) => None,
    };
    if n == 1 {
        return Ok(local.unwrap().clone());
    }
    let tree = BinomialTree::new(ep.rank(), root, n);
    // Slice for relative rank x lives at absolute rank (x + root) % n.
    let slice_of = |field: &FloatField, relative: usize| -> Vec<f32> {
        let abs = (relative + root) % n;
        field.data()[abs * sl..(abs + 1) * sl].to_vec()
    };

    let mut hold: ScatterHold = if tree.is_root() {
        let field = local.unwrap();
        match variant {
            Variant::Baseline => {
                let mut bytes = Vec::with_capacity(total_elements * 4);
                for x in 0..n {
                    bytes.extend_from_slice(&f32s_to_bytes(&slice_of(field, x)));
                }
                ScatterHold::Raw(bytes)
            }
            Variant::CprP2p => {
                ScatterHold::Decoded((0..n).map(|x| slice_of(field, x)).collect())
            }
            Variant::CColl => {
                // Each slice becomes an independent stream so receivers
                // can decode their own slice without touching the rest.
                let mut streams = Vec::with_capacity(n);
                for x in 0..n {
                    let slice = slice_of(field, x);
                    let comp = ep.charge(Category::ComDecom, ep.cost_compress(sl), |ep| {
                        ep.record_compress();
                        compress_slice(&slice, eb.unwrap())
                    })??;
                    streams.push(comp.into_bytes());
                }
                ScatterHold::Streams(streams)
            }
        }
    } else {
        let src = tree.absolute(tree.parent(), root);
        let span = tree.subtree_span();
        let max = match variant {
            Variant::Baseline => span * sl * 4,
            _ => span * (4 + max_stream_size(sl)),
        };
        let rreq = ep.irecv(src, TAG_SCATTER, max)?;
        let bytes = ep.wait_recv_as(rreq, Category::Wait)?;
        match variant {
            Variant::Baseline => ScatterHold::Raw(bytes),
            Variant::CColl => ScatterHold::Streams(split_framed(&bytes, span)?),
            Variant::CprP2p => {
                let streams = split_framed(&bytes, span)?;
                let mut decoded = Vec::with_capacity(streams.len());
                for s in &streams {
                    let vals = ep.charge(Category::ComDecom, ep.cost_decompress(sl), |ep| {
                        ep.record_decompress();
                        decompress_bytes(s)
                    })??;
                    decoded.push(vals);
                }
                ScatterHold::Decoded(decoded)
            }
        }
    };

    // Forward each child its subtree's slices, largest subtree first.
    for child in tree.children() {
        let dst = tree.absolute(child, root);
        let lo = child - tree.relative;
        let cnt = (child + (child & child.wrapping_neg())).min(n) - child;
        let bytes = match &hold {
            ScatterHold::Raw(raw) => raw[lo * sl * 4..(lo + cnt) * sl * 4].to_vec(),
            ScatterHold::Streams(streams) => frame(&streams[lo..lo + cnt]),
            ScatterHold::Decoded(decoded) => {
                let mut streams = Vec::with_capacity(cnt);
                for vals in &decoded[lo..lo + cnt] {
                    let comp = ep.charge(Category::ComDecom, ep.cost_compress(sl), |ep| {
                        ep.record_compress();
                        compress_slice(vals, eb.unwrap())
                    })??;
                    streams.push(comp.into_bytes());
                }
                frame(&streams)
            }
        };
        let sreq = ep.isend(dst, TAG_SCATTER, bytes)?;
        ep.wait_send_as(sreq, Category::Wait)?;
    }

    // Own slice: the root returns its original data; a non-root decodes
    // entry 0 of whatever it received (one decompression total on the
    // compress-once path).
    if tree.is_root() {
        return Ok(FloatField::new(slice_of(local.unwrap(), 0)));
    }
    let own = match &mut hold {
        ScatterHold::Raw(raw) => f32s_from_bytes(&raw[..sl * 4])?,
        ScatterHold::Streams(streams) => {
            ep.charge(Category::ComDecom, ep.cost_decompress(sl), |ep| {
                ep.record_decompress();
                decompress_bytes(&streams[0])
            })??
        }
        ScatterHold::Decoded(decoded) => std::mem::take(&mut decoded[0]),
    };
    if own.len() != sl {
        return Err(Error::Collective(format!(
            "scatter slice held {} elements, expected {sl}",
            own.len()
        )));
    }
    Ok(FloatField::new(own))
}

/// Length-prefixed concatenation of independently decodable streams.
fn frame(streams: &[Vec<u8>]) -> Vec<u8> {
    let mut out = Vec::with_capacity(streams.iter().map(|s| 4 + s.len()).sum());
    for s in streams {
        out.extend_from_slice(&(s.len() as u32).to_le_bytes());
        out.extend_from_slice(s);
    }
    out
}

fn split_framed(bytes: &[u8], count: usize) -> Result<Vec<Vec<u8>>> {
    let mut out = Vec::with_capacity(count);
    let mut pos = 0;
    for _ in 0..count {
        if pos + 4 > bytes.len() {
            return Err(Error::Collective("truncated scatter bundle".into()));
        }
        let len = u32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
        pos += 4;
        if pos + len > bytes.len() {
            return Err(Error::Collective("scatter bundle entry overruns payload".into()));
        }
        out.push(bytes[pos..pos + len].to_vec());
        pos += len;
    }
    if pos != bytes.len() {
        return Err(Error::Collective("trailing bytes after scatter bundle".into()));
    }
    Ok(out)
}
