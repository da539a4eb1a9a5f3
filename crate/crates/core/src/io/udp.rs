use std::collections::VecDeque;
use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use crate::config::{Mcs, SystemConfig};
use crate::header::MAX_PAYLOAD_LEN;
use crate::tx::n_data_symbols;

use super::IoError;

const RECV_BUFFER: usize = 65_536;
const POLL: Duration = Duration::from_millis(20);

/// Largest payload one DATA frame can carry at `mcs`.
pub fn max_payload_len(cfg: &SystemConfig, mcs: Mcs) -> usize {
    let n_data = cfg.data_subcarriers.len();
    let fits = |p: usize| n_data_symbols(p, mcs, n_data) <= cfg.max_data_symbols;
    // symbol count grows with payload length
    let (mut lo, mut hi) = (0usize, MAX_PAYLOAD_LEN);
    if fits(hi) {
        return hi;
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Snapshot of ingestion counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestCounters {
    pub received: u64,
    pub accepted: u64,
    pub rejected_empty: u64,
    pub rejected_oversize: u64,
    /// Queued payloads evicted to make room.
    pub dropped_oldest: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Offer {
    Accepted,
    /// Queued after evicting the oldest payload.
    AcceptedDroppedOldest,
    RejectedEmpty,
    RejectedOversize,
}

#[derive(Default)]
struct Counters {
    received: AtomicU64,
    accepted: AtomicU64,
    rejected_empty: AtomicU64,
    rejected_oversize: AtomicU64,
    dropped_oldest: AtomicU64,
}

/// Bounded FIFO of frame payloads; a full queue drops its oldest entry.
pub struct PacketQueue {
    items: Mutex<VecDeque<Vec<u8>>>,
    ready: Condvar,
    capacity: usize,
    max_payload: usize,
    counters: Counters,
}

impl PacketQueue {
    pub fn new(capacity: usize, max_payload: usize) -> Self {
        assert!(capacity > 0, "queue capacity must be positive");
        PacketQueue {
            items: Mutex::new(VecDeque::with_capacity(capacity)),
            ready: Condvar::new(),
            capacity,
            max_payload,
            counters: Counters::default(),
        }
    }

    pub fn offer(&self, payload: &[u8]) -> Offer {
        let c = &self.counters;
        c.received.fetch_add(1, Ordering::Relaxed);
        if payload.is_empty() {
            c.rejected_empty.fetch_add(1, Ordering::Relaxed);
            return Offer::RejectedEmpty;
        }
        if payload.len() > self.max_payload {
            c.rejected_oversize.fetch_add(1, Ordering::Relaxed);
            return Offer::RejectedOversize;
        }
        let mut q = self.items.lock().expect("queue lock");
        let dropped = q.len() >= self.capacity;
        if dropped {
            q.pop_front();
            c.dropped_oldest.fetch_add(1, Ordering::Relaxed);
        }
        q.push_back(payload.to_vec());
        c.accepted.fetch_add(1, Ordering::Relaxed);
        drop(q);
        self.ready.notify_one();
        if dropped {
            Offer::AcceptedDroppedOldest
        } else {
            Offer::Accepted
        }
    }

    pub fn try_pop(&self) -> Option<Vec<u8>> {
        self.items.lock().expect("queue lock").pop_front()
    }

    /// Wait up to `timeout` for a payload.
    pub fn pop_timeout(&self, timeout: Duration) -> Option<Vec<u8>> {
        let q = self.items.lock().expect("queue lock");
        let (mut q, _) = self.ready.wait_timeout_while(q, timeout, |q| q.is_empty()).expect("queue lock");
        q.pop_front()
    }

    pub fn len(&self) -> usize {
        self.items.lock().expect("queue lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn counters(&self) -> IngestCounters {
        let c = &self.counters;
        IngestCounters {
            received: c.received.load(Ordering::Relaxed),
            accepted: c.accepted.load(Ordering::Relaxed),
            rejected_empty: c.rejected_empty.load(Ordering::Relaxed),
            rejected_oversize: c.rejected_oversize.load(Ordering::Relaxed),
            dropped_oldest: c.dropped_oldest.load(Ordering::Relaxed),
        }
    }
}

/// A UDP socket feeding a [`PacketQueue`] from a background thread. Each
/// datagram is one payload.
pub struct UdpIngest {
    queue: Arc<PacketQueue>,
    local_addr: SocketAddr,
    stop: Arc<AtomicBool>,
    worker: Option<JoinHandle<()>>,
}

impl UdpIngest {
    pub fn bind(addr: impl ToSocketAddrs, capacity: usize, max_payload: usize) -> Result<Self, IoError> {
        let socket = UdpSocket::bind(addr).map_err(IoError::Socket)?;
        socket.set_read_timeout(Some(POLL)).map_err(IoError::Socket)?;
        let local_addr = socket.local_addr().map_err(IoError::Socket)?;
        let queue = Arc::new(PacketQueue::new(capacity, max_payload));
        let stop = Arc::new(AtomicBool::new(false));
        let worker = {
            let (queue, stop) = (Arc::clone(&queue), Arc::clone(&stop));
            std::thread::spawn(move || {
                let mut buf = vec![0u8; RECV_BUFFER];
                while !stop.load(Ordering::Relaxed) {
                    match socket.recv_from(&mut buf) {
                        Ok((n, _)) => {
                            let offer = queue.offer(&buf[..n]);
                            if offer != Offer::Accepted {
                                log::debug!("datagram of {n} bytes: {offer:?}");
                            }
                        }
                        Err(e) if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => {
                        }
                        Err(e) => log::warn!("udp receive: {e}"),
                    }
                }
            })
        };
        log::info!("listening for payloads on {local_addr}");
        Ok(UdpIngest { queue, local_addr, stop, worker: Some(worker) })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    pub fn queue(&self) -> &PacketQueue {
        &self.queue
    }

    /// Stop the receive thread and return the final counters.
    pub fn shutdown(mut self) -> IngestCounters {
        self.halt();
        self.queue.counters()
    }

    fn halt(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

impl Drop for UdpIngest {
    fn drop(&mut self) {
        self.halt();
    }
}
