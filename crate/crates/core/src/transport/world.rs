use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use super::endpoint::{Endpoint, Substrate};
use super::report::{RankReport, RunReport};
use super::{Mode, SimParams, TransportError};
use crate::error::{Error, Result};

/// The rank set. Each call to [`CommWorld::run`] spawns one thread per rank,
/// hands it an [`Endpoint`], and collects the per-rank results and reports.
#[derive(Debug, Clone)]
pub struct CommWorld {
    size: usize,
    mode: Mode,
    params: SimParams,
}

impl CommWorld {
    pub fn virtual_time(size: usize, params: SimParams) -> Result<Self> {
        if size == 0 {
            return Err(Error::Transport(TransportError::InvalidRank(0, 0)));
        }
        params.validate().map_err(Error::Transport)?;
        Ok(Self { size, mode: Mode::VirtualTime, params })
    }

    pub fn real_time(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::Transport(TransportError::InvalidRank(0, 0)));
        }
        // Costs are measured, not modeled, in real time.
        Ok(Self { size, mode: Mode::RealTime, params: SimParams::default() })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    /// Runs one rank program per rank and waits for all of them.
    ///
    /// On any rank error or panic the substrate is shut down so blocked
    /// ranks unwind instead of deadlocking.
    pub fn run<T, F>(&self, rank_fn: F) -> Result<(Vec<T>, RunReport)>
    where
        T: Send,
        F: Fn(&mut Endpoint) -> Result<T> + Sync,
    {
        let substrate = Arc::new(Substrate::new(self.size));
        let mut slots: Vec<Option<Result<(T, RankReport)>>> = (0..self.size).map(|_| None).collect();

        std::thread::scope(|scope| {
            let mut handles = Vec::with_capacity(self.size);
            for (rank, slot) in slots.iter_mut().enumerate() {
                let substrate = Arc::clone(&substrate);
                let rank_fn = &rank_fn;
                let mode = self.mode;
                let params = self.params;
                let size = self.size;
                handles.push(scope.spawn(move || {
                    let mut ep = Endpoint::new(rank, size, mode, params, substrate.clone());
                    let outcome = catch_unwind(AssertUnwindSafe(|| rank_fn(&mut ep)));
                    let result = match outcome {
                        Ok(Ok(value)) => Ok((value, ep.finish())),
                        Ok(Err(err)) => {
                            substrate.shutdown();
                            Err(err)
                        }
                        Err(_) => {
                            substrate.shutdown();
                            Err(Error::Transport(TransportError::RankPanicked(rank)))
                        }
                    };
                    *slot = Some(result);
                }));
            }
            for handle in handles {
                // A panic inside the closure was already caught; join only
                // fails on forcible unwinds, which we propagate.
                handle.join().expect("rank thread join");
            }
        });

        let mut values = Vec::with_capacity(self.size);
        let mut reports = Vec::with_capacity(self.size);
        for slot in slots {
            let (value, report) = slot.expect("rank slot filled")?;
            values.push(value);
            reports.push(report);
        }
        if !substrate.all_empty() {
            return Err(Error::Transport(TransportError::UnconsumedMessages));
        }
        Ok((values, RunReport { per_rank: reports }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::{Category, Mode};

    const TAG: u32 = 7;

    fn params() -> SimParams {
        SimParams {
            latency: 1e-6,
            bandwidth: 1e9,
            ..SimParams::default()
        }
    }

    #[test]
    fn virtual_arrival_matches_closed_form() {
        // One 4000-byte message: arrival = latency + bytes/bandwidth.
        let world = CommWorld::virtual_time(2, params()).unwrap();
        let (clocks, report) = world
            .run(|ep| {
                if ep.rank() == 0 {
                    let req = ep.isend(1, TAG, vec![0u8; 4000])?;
                    ep.wait_send(req)?;
                } else {
                    let req = ep.irecv(0, TAG, 4096)?;
                    ep.wait_recv(req)?;
                }
                Ok(ep.clock())
            })
            .unwrap();
        let expected = 1e-6 + 4000.0 / 1e9;
        assert!((clocks[1] - expected).abs() < 1e-15);
        assert_eq!(report.per_rank[0].bytes_sent, 4000);
        assert_eq!(report.per_rank[1].bytes_received, 4000);
    }

    #[test]
    fn zero_byte_message_completes() {
        let world = CommWorld::virtual_time(2, params()).unwrap();
        let (_, report) = world
            .run(|ep| {
                if ep.rank() == 0 {
                    let req = ep.isend(1, TAG, vec![])?;
                    ep.wait_send(req)?;
                } else {
                    let req = ep.irecv(0, TAG, 0)?;
                    assert!(ep.wait_recv(req)?.is_empty());
                }
                Ok(())
            })
            .unwrap();
        assert_eq!(report.total_bytes_sent(), 0);
    }

    #[test]
    fn fifo_per_channel() {
        let world = CommWorld::virtual_time(2, params()).unwrap();
        world
            .run(|ep| {
                if ep.rank() == 0 {
                    for i in 0..10u8 {
                        let req = ep.isend(1, TAG, vec![i])?;
                        ep.wait_send(req)?;
                    }
                } else {
                    for i in 0..10u8 {
                        let req = ep.irecv(0, TAG, 1)?;
                        assert_eq!(ep.wait_recv(req)?, vec![i]);
                    }
                }
                Ok(())
            })
            .unwrap();
    }

    #[test]
    fn oversized_message_errors_at_completion() {
        let world = CommWorld::virtual_time(2, params()).unwrap();
        let err = world
            .run(|ep| {
                if ep.rank() == 0 {
                    let req = ep.isend(1, TAG, vec![0u8; 100])?;
                    ep.wait_send(req)?;
                } else {
                    let req = ep.irecv(0, TAG, 64)?;
                    ep.wait_recv(req)?;
                }
                Ok(())
            })
            .unwrap_err();
        assert!(matches!(
            err,
            Error::Transport(TransportError::MessageTooLong { got: 100, max: 64 })
        ));
    }

    #[test]
    fn poll_is_nonblocking_and_idempotent() {
        let world = CommWorld::virtual_time(2, params()).unwrap();
        world
            .run(|ep| {
                if ep.rank() == 0 {
                    // No matching send ever arrives for this tag before the
                    // poll; the pending request stays pending.
                    let pending = ep.irecv(1, 99, 16)?;
                    assert!(ep.poll_progress().is_empty());
                    let clock_before = ep.clock();
                    assert!(ep.poll_progress().is_empty());
                    assert_eq!(ep.clock(), clock_before);
                    // Resolve it so the world quiesces.
                    let req = ep.isend(1, TAG, vec![1])?;
                    ep.wait_send(req)?;
                    ep.wait_recv(pending)?;
                } else {
                    let req = ep.irecv(0, TAG, 1)?;
                    ep.wait_recv(req)?;
                    let req = ep.isend(0, 99, vec![2])?;
                    ep.wait_send(req)?;
                }
                Ok(())
            })
            .unwrap();
    }

    #[test]
    fn charge_advances_clock_and_rejects_nesting() {
        let world = CommWorld::virtual_time(1, params()).unwrap();
        let (_, report) = world
            .run(|ep| {
                let cost = ep.cost_reduce(1000);
                ep.charge(Category::Reduction, cost, |_| ())?;
                assert_eq!(ep.clock(), cost);
                let nested = ep.charge(Category::Others, 0.0, |inner| {
                    inner.charge(Category::Others, 0.0, |_| ()).is_err()
                })?;
                assert!(nested);
                Ok(())
            })
            .unwrap();
        assert!(report.per_rank[0].time(Category::Reduction) > 0.0);
    }

    #[test]
    fn category_times_sum_to_total() {
        let world = CommWorld::virtual_time(2, params()).unwrap();
        let (_, report) = world
            .run(|ep| {
                ep.charge(Category::Memcpy, ep.cost_memcpy(5000), |_| ())?;
                if ep.rank() == 0 {
                    let req = ep.isend(1, TAG, vec![0u8; 2048])?;
                    ep.wait_send(req)?;
                } else {
                    let req = ep.irecv(0, TAG, 2048)?;
                    ep.wait_recv(req)?;
                }
                ep.charge(Category::Others, 1e-7, |_| ())?;
                Ok(())
            })
            .unwrap();
        for rank in &report.per_rank {
            assert!((rank.category_sum() - rank.total_elapsed).abs() < 1e-12);
        }
    }

    #[test]
    fn conservation_of_bytes() {
        let world = CommWorld::virtual_time(4, params()).unwrap();
        let (_, report) = world
            .run(|ep| {
                let n = ep.size();
                let me = ep.rank();
                let mut reqs = Vec::new();
                for peer in 0..n {
                    if peer != me {
                        reqs.push(ep.irecv(peer, TAG, 64)?);
                        let s = ep.isend(peer, TAG, vec![me as u8; me + 1])?;
                        ep.wait_send(s)?;
                    }
                }
                for r in reqs {
                    ep.wait_recv(r)?;
                }
                Ok(())
            })
            .unwrap();
        assert_eq!(report.total_bytes_sent(), report.total_bytes_received());
    }

    #[test]
    fn virtual_time_is_deterministic() {
        let world = CommWorld::virtual_time(3, params()).unwrap();
        let body = |ep: &mut Endpoint| {
            let me = ep.rank();
            let n = ep.size();
            let right = (me + 1) % n;
            let left = (me + n - 1) % n;
            let mut payload = vec![me as u8; 1500];
            for _ in 0..n - 1 {
                let r = ep.irecv(left, TAG, 1500)?;
                let s = ep.isend(right, TAG, payload.clone())?;
                ep.charge(Category::Reduction, ep.cost_reduce(100), |_| ())?;
                payload = ep.wait_recv(r)?;
                ep.wait_send(s)?;
            }
            Ok(())
        };
        let (_, a) = world.run(body).unwrap();
        let (_, b) = world.run(body).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn real_time_delivers_same_data() {
        let world = CommWorld::real_time(2).unwrap();
        assert_eq!(world.mode(), Mode::RealTime);
        let (vals, _) = world
            .run(|ep| {
                if ep.rank() == 0 {
                    let req = ep.isend(1, TAG, vec![42u8; 8])?;
                    ep.wait_send(req)?;
                    Ok(0u8)
                } else {
                    let req = ep.irecv(0, TAG, 8)?;
                    Ok(ep.wait_recv(req)?[0])
                }
            })
            .unwrap();
        assert_eq!(vals[1], 42);
    }

    #[test]
    fn invalid_ranks_rejected() {
        let world = CommWorld::virtual_time(2, params()).unwrap();
        let err = world
            .run(|ep| {
                if ep.rank() == 0 {
                    ep.isend(5, TAG, vec![])?;
                }
                Ok(())
            })
            .unwrap_err();
        assert!(matches!(err, Error::Transport(TransportError::InvalidRank(5, 2))));

        let err = world
            .run(|ep| {
                if ep.rank() == 0 {
                    ep.isend(0, TAG, vec![])?;
                }
                Ok(())
            })
            .unwrap_err();
        assert!(matches!(err, Error::Transport(TransportError::SendToSelf)));
    }
}
