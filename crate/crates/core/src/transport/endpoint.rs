use std::collections::{HashMap, VecDeque};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::time::Instant;

use super::report::{Category, RankReport};
use super::{Mode, Rank, SimParams, Tag, TransportError};

#[derive(Debug)]
pub(crate) struct Message {
    pub payload: Vec<u8>,
    /// Virtual arrival time at the receiver (0 in real-time mode).
    pub arrival: f64,
}

#[derive(Debug, Default)]
pub(crate) struct MailboxInner {
    queues: HashMap<(Rank, Tag), VecDeque<Message>>,
    closed: bool,
}

/// Per-destination message store; FIFO per `(src, tag)` channel.
#[derive(Debug, Default)]
pub(crate) struct Mailbox {
    inner: Mutex<MailboxInner>,
    cv: Condvar,
}

impl Mailbox {
    fn push(&self, src: Rank, tag: Tag, msg: Message) {
        let mut inner = self.inner.lock().unwrap();
        inner.queues.entry((src, tag)).or_default().push_back(msg);
        drop(inner);
        self.cv.notify_all();
    }

    pub(crate) fn close(&self) {
        self.inner.lock().unwrap().closed = true;
        self.cv.notify_all();
    }
}

#[derive(Debug)]
pub(crate) struct Substrate {
    pub mailboxes: Vec<Arc<Mailbox>>,
}

impl Substrate {
    pub fn new(size: usize) -> Self {
        Self {
            mailboxes: (0..size).map(|_| Arc::new(Mailbox::default())).collect(),
        }
    }

    pub fn shutdown(&self) {
        for mb in &self.mailboxes {
            mb.close();
        }
    }

    pub fn all_empty(&self) -> bool {
        self.mailboxes
            .iter()
            .all(|mb| mb.inner.lock().unwrap().queues.values().all(VecDeque::is_empty))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Send,
    Recv,
}

/// Handle for a posted nonblocking operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Request {
    id: u64,
    dir: Direction,
}

impl Request {
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn direction(&self) -> Direction {
        self.dir
    }
}

struct SendState {
    /// Virtual time at which the sender may reuse the buffer.
    completion: f64,
}

struct RecvState {
    src: Rank,
    tag: Tag,
    max_bytes: usize,
    matched: Option<Message>,
}

/// One rank's handle onto the communication world. Owned by exactly one
/// rank context; never shared.
pub struct Endpoint {
    rank: Rank,
    size: usize,
    mode: Mode,
    params: SimParams,
    /// Local virtual clock (virtual-time mode only).
    clock: f64,
    /// Virtual time at which this rank's egress link becomes free.
    egress_free: f64,
    substrate: Arc<Substrate>,
    next_req: u64,
    sends: HashMap<u64, SendState>,
    recvs: HashMap<u64, RecvState>,
    /// Unmatched receive requests in post order; matching is FIFO per
    /// `(src, tag)` and per posting order.
    recv_order: VecDeque<u64>,
    report: RankReport,
    in_charge: bool,
    wall_origin: Instant,
}

impl Endpoint {
    pub(crate) fn new(rank: Rank, size: usize, mode: Mode, params: SimParams, substrate: Arc<Substrate>) -> Self {
        Self {
            rank,
            size,
            mode,
            params,
            clock: 0.0,
            egress_free: 0.0,
            substrate,
            next_req: 0,
            sends: HashMap::new(),
            recvs: HashMap::new(),
            recv_order: VecDeque::new(),
            report: RankReport::default(),
            in_charge: false,
            wall_origin: Instant::now(),
        }
    }

    pub fn rank(&self) -> Rank {
        self.rank
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

    /// Current local virtual clock (virtual seconds).
    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn report(&self) -> &RankReport {
        &self.report
    }

    fn next_request(&mut self, dir: Direction) -> Request {
        let id = self.next_req;
        self.next_req += 1;
        Request { id, dir }
    }

    /// Posts a nonblocking send. Returns immediately; the message is
    /// delivered FIFO per `(src, dst, tag)`.
    ///
    /// In virtual time a message posted at sender clock `t` occupies the
    /// egress serially and arrives at `start + latency + bytes/bandwidth`,
    /// where `start` is when the egress frees up.
    pub fn isend(&mut self, dst: Rank, tag: Tag, payload: Vec<u8>) -> Result<Request, TransportError> {
        if dst >= self.size {
            return Err(TransportError::InvalidRank(dst, self.size));
        }
        if dst == self.rank {
            return Err(TransportError::SendToSelf);
        }
        let len = payload.len() as u64;
        let (arrival, completion) = match self.mode {
            Mode::VirtualTime => {
                let start = self.clock.max(self.egress_free);
                let xfer = len as f64 / self.params.bandwidth;
                self.egress_free = start + xfer;
                (start + self.params.latency + xfer, start + xfer)
            }
            Mode::RealTime => (0.0, 0.0),
        };
        self.substrate.mailboxes[dst].push(self.rank, tag, Message { payload, arrival });
        let req = self.next_request(Direction::Send);
        self.sends.insert(req.id, SendState { completion });
        self.report.bytes_sent += len;
        Ok(req)
    }

    /// Posts a nonblocking receive for a message from `src` with `tag`,
    /// up to `max_bytes` long.
    pub fn irecv(&mut self, src: Rank, tag: Tag, max_bytes: usize) -> Result<Request, TransportError> {
        if src >= self.size {
            return Err(TransportError::InvalidRank(src, self.size));
        }
        let req = self.next_request(Direction::Recv);
        self.recvs.insert(req.id, RecvState { src, tag, max_bytes, matched: None });
        self.recv_order.push_back(req.id);
        Ok(req)
    }

    fn match_locked(
        recvs: &mut HashMap<u64, RecvState>,
        order: &mut VecDeque<u64>,
        inner: &mut MailboxInner,
    ) {
        order.retain(|id| {
            let st = recvs.get_mut(id).expect("recv state for ordered id");
            if let Some(queue) = inner.queues.get_mut(&(st.src, st.tag)) {
                if let Some(msg) = queue.pop_front() {
                    st.matched = Some(msg);
                    return false;
                }
            }
            true
        });
    }

    fn try_match(&mut self) {
        let mailbox = Arc::clone(&self.substrate.mailboxes[self.rank]);
        let mut inner = mailbox.inner.lock().unwrap();
        Self::match_locked(&mut self.recvs, &mut self.recv_order, &mut inner);
    }

    /// Non-blocking progress: advances message matching and returns the set
    /// of outstanding requests known to be complete. Never advances the
    /// virtual clock. Repeated calls are idempotent.
    pub fn poll_progress(&mut self) -> Vec<Request> {
        self.try_match();
        let mut done = Vec::new();
        for (id, st) in &self.sends {
            let complete = match self.mode {
                Mode::VirtualTime => st.completion <= self.clock,
                Mode::RealTime => true,
            };
            if complete {
                done.push(Request { id: *id, dir: Direction::Send });
            }
        }
        for (id, st) in &self.recvs {
            if let Some(msg) = &st.matched {
                let complete = match self.mode {
                    Mode::VirtualTime => msg.arrival <= self.clock,
                    Mode::RealTime => true,
                };
                if complete {
                    done.push(Request { id: *id, dir: Direction::Recv });
                }
            }
        }
        done.sort_by_key(Request::id);
        done
    }

    /// Waits for a send to complete, charging the elapsed time to `Wait`.
    pub fn wait_send(&mut self, req: Request) -> Result<(), TransportError> {
        self.wait_send_as(req, Category::Wait)
    }

    /// Waits for a send to complete, charging the elapsed time to the given
    /// category.
    pub fn wait_send_as(&mut self, req: Request, category: Category) -> Result<(), TransportError> {
        let st = self.sends.remove(&req.id).ok_or(TransportError::UnknownRequest)?;
        if self.mode == Mode::VirtualTime {
            let dt = (st.completion - self.clock).max(0.0);
            self.clock = self.clock.max(st.completion);
            self.report.add_time(category, dt);
        }
        Ok(())
    }

    /// Waits for a receive and returns the payload, charging the elapsed
    /// time to `Wait`.
    pub fn wait_recv(&mut self, req: Request) -> Result<Vec<u8>, TransportError> {
        self.wait_recv_as(req, Category::Wait)
    }

    /// Waits for a receive, charging the elapsed time to the given category.
    ///
    /// Blocks the rank context until a matching message is available; in
    /// virtual time the local clock then advances to the message arrival
    /// time if it has not passed it already.
    pub fn wait_recv_as(&mut self, req: Request, category: Category) -> Result<Vec<u8>, TransportError> {
        if !self.recvs.contains_key(&req.id) {
            return Err(TransportError::UnknownRequest);
        }
        let wall_start = Instant::now();
        let mailbox = Arc::clone(&self.substrate.mailboxes[self.rank]);
        {
            let mut inner: MutexGuard<MailboxInner> = mailbox.inner.lock().unwrap();
            loop {
                Self::match_locked(&mut self.recvs, &mut self.recv_order, &mut inner);
                if self.recvs[&req.id].matched.is_some() {
                    break;
                }
                if inner.closed {
                    return Err(TransportError::WorldShutDown);
                }
                inner = mailbox.cv.wait(inner).unwrap();
            }
        }
        let st = self.recvs.remove(&req.id).expect("matched recv state");
        let msg = st.matched.expect("matched message");
        if msg.payload.len() > st.max_bytes {
            return Err(TransportError::MessageTooLong { got: msg.payload.len(), max: st.max_bytes });
        }
        match self.mode {
            Mode::VirtualTime => {
                let dt = (msg.arrival - self.clock).max(0.0);
                self.clock = self.clock.max(msg.arrival);
                self.report.add_time(category, dt);
            }
            Mode::RealTime => {
                self.report.add_time(category, wall_start.elapsed().as_secs_f64());
            }
        }
        self.report.bytes_received += msg.payload.len() as u64;
        Ok(msg.payload)
    }

    /// Runs `op` and charges its cost to `category`.
    ///
    /// In virtual time the caller-declared `virtual_cost` advances the
    /// local clock (in-flight messages progress concurrently); in real time
    /// the measured wall time of `op` is charged. Charges do not nest.
    pub fn charge<T>(
        &mut self,
        category: Category,
        virtual_cost: f64,
        op: impl FnOnce(&mut Self) -> T,
    ) -> Result<T, TransportError> {
        if self.in_charge {
            return Err(TransportError::NestedCharge);
        }
        self.in_charge = true;
        let wall_start = Instant::now();
        let out = op(self);
        self.in_charge = false;
        match self.mode {
            Mode::VirtualTime => {
                self.clock += virtual_cost;
                self.report.add_time(category, virtual_cost);
            }
            Mode::RealTime => {
                self.report.add_time(category, wall_start.elapsed().as_secs_f64());
            }
        }
        Ok(out)
    }

    pub fn cost_compress(&self, elements: usize) -> f64 {
        elements as f64 * self.params.compress_cost
    }

    pub fn cost_decompress(&self, elements: usize) -> f64 {
        elements as f64 * self.params.decompress_cost
    }

    pub fn cost_reduce(&self, elements: usize) -> f64 {
        elements as f64 * self.params.reduce_cost
    }

    pub fn cost_memcpy(&self, bytes: usize) -> f64 {
        bytes as f64 * self.params.memcpy_cost
    }

    pub fn record_compress(&mut self) {
        self.report.compress_calls += 1;
    }

    pub fn record_decompress(&mut self) {
        self.report.decompress_calls += 1;
    }

    pub(crate) fn finish(mut self) -> RankReport {
        self.report.total_elapsed = match self.mode {
            Mode::VirtualTime => self.clock,
            Mode::RealTime => self.wall_origin.elapsed().as_secs_f64(),
        };
        self.report
    }
}
