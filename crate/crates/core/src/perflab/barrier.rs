//! Sense-reversing centralized barrier built on two atomics, plus the
//! phase-slot correctness harness and a comparison against `std::sync::Barrier`.

use std::hint;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::{mpsc, Arc, Barrier};
use std::thread;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const SPINS_BEFORE_YIELD: u32 = 16;

struct Shared {
    workers: usize,
    arrived: AtomicUsize,
    sense: AtomicBool,
    registered: AtomicUsize,
}

/// Reusable lock-free barrier for a fixed number of workers.
///
/// Every worker obtains its own [`BarrierHandle`] through [`register`](Self::register);
/// waiting is refused until exactly `workers` handles exist, so a short-handed
/// group fails fast instead of hanging.
#[derive(Clone)]
pub struct LockFreeBarrier {
    shared: Arc<Shared>,
}

pub struct BarrierHandle {
    shared: Arc<Shared>,
    local_sense: bool,
    phase: u64,
}

impl LockFreeBarrier {
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::Barrier("group size must be at least 1".into()));
        }
        Ok(Self {
            shared: Arc::new(Shared {
                workers,
                arrived: AtomicUsize::new(0),
                sense: AtomicBool::new(false),
                registered: AtomicUsize::new(0),
            }),
        })
    }

    pub fn workers(&self) -> usize {
        self.shared.workers
    }

    pub fn register(&self) -> Result<BarrierHandle> {
        let s = &self.shared;
        let prev = s
            .registered
            .fetch_update(Ordering::AcqRel, Ordering::Acquire, |r| (r < s.workers).then_some(r + 1));
        match prev {
            Ok(_) => Ok(BarrierHandle {
                shared: Arc::clone(s),
                local_sense: false,
                phase: 0,
            }),
            Err(_) => Err(Error::Barrier(format!(
                "all {} worker slots are already registered",
                s.workers
            ))),
        }
    }

    /// Registers every worker at once.
    pub fn handles(workers: usize) -> Result<Vec<BarrierHandle>> {
        let b = Self::new(workers)?;
        (0..workers).map(|_| b.register()).collect()
    }
}

impl BarrierHandle {
    /// Blocks until all registered workers reach this phase. Returns `true`
    /// for the last arriving worker.
    pub fn wait(&mut self) -> Result<bool> {
        let s = &*self.shared;
        let registered = s.registered.load(Ordering::Acquire);
        if registered != s.workers {
            return Err(Error::Barrier(format!(
                "only {registered} of {} workers registered",
                s.workers
            )));
        }
        self.local_sense = !self.local_sense;
        self.phase += 1;
        if s.arrived.fetch_add(1, Ordering::AcqRel) + 1 == s.workers {
            s.arrived.store(0, Ordering::Relaxed);
            s.sense.store(self.local_sense, Ordering::Release);
            return Ok(true);
        }
        let mut spins = 0u32;
        while s.sense.load(Ordering::Acquire) != self.local_sense {
            if spins < SPINS_BEFORE_YIELD {
                hint::spin_loop();
                spins += 1;
            } else {
                thread::yield_now();
            }
        }
        Ok(false)
    }

    /// Number of completed `wait` calls.
    pub fn phase(&self) -> u64 {
        self.phase
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HarnessReport {
    pub workers: usize,
    pub phases: u64,
    pub violations: u64,
    pub timed_out: bool,
    pub elapsed: Duration,
}

fn jitter(rng: &mut ChaCha8Rng, max_spin: u32) {
    if max_spin == 0 {
        return;
    }
    let r = rng.random_range(0..max_spin);
    if r == 0 {
        thread::yield_now();
    }
    for _ in 0..r {
        hint::spin_loop();
    }
}

/// Phase-slot check: in phase `k` each worker publishes `k` into its slot,
/// crosses the barrier, then verifies every slot reads exactly `k` before a
/// second crossing releases the next phase. Each worker adds a random spin
/// delay (up to `max_delay_spins`) before publishing.
pub fn phase_slot_harness(
    workers: usize,
    phases: u64,
    max_delay_spins: u32,
    seed: u64,
    watchdog: Duration,
) -> Result<HarnessReport> {
    let handles = LockFreeBarrier::handles(workers)?;
    let slots: Arc<Vec<AtomicU64>> = Arc::new((0..workers).map(|_| AtomicU64::new(0)).collect());
    let violations = Arc::new(AtomicU64::new(0));
    let (done_tx, done_rx) = mpsc::channel();
    let start = Instant::now();

    for (w, mut handle) in handles.into_iter().enumerate() {
        let slots = Arc::clone(&slots);
        let violations = Arc::clone(&violations);
        let done = done_tx.clone();
        thread::spawn(move || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(w as u64);
            let mut result = Ok(());
            for k in 1..=phases {
                jitter(&mut rng, max_delay_spins);
                slots[w].store(k, Ordering::Release);
                if let Err(e) = handle.wait() {
                    result = Err(e);
                    break;
                }
                let bad = slots.iter().filter(|s| s.load(Ordering::Acquire) != k).count();
                if bad > 0 {
                    violations.fetch_add(bad as u64, Ordering::Relaxed);
                }
                if let Err(e) = handle.wait() {
                    result = Err(e);
                    break;
                }
            }
            let _ = done.send(result);
        });
    }
    drop(done_tx);

    let mut finished = 0;
    let mut timed_out = false;
    while finished < workers {
        let remaining = watchdog.saturating_sub(start.elapsed());
        match done_rx.recv_timeout(remaining) {
            Ok(r) => {
                r?;
                finished += 1;
            }
            Err(_) => {
                // Stuck threads are left detached; the report carries the failure.
                timed_out = true;
                break;
            }
        }
    }
    Ok(HarnessReport {
        workers,
        phases,
        violations: violations.load(Ordering::Relaxed),
        timed_out,
        elapsed: start.elapsed(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarrierBench {
    pub workers: usize,
    pub phases: u64,
    pub lockfree_ns_per_sync: f64,
    pub native_ns_per_sync: f64,
    /// lock-free / native.
    pub ratio: f64,
    /// Phase-slot violations observed while timing the lock-free barrier.
    pub violations: u64,
}

/// Times `phases` rounds of the lock-free barrier and of `std::sync::Barrier`.
///
/// The lock-free run also performs the single-crossing slot check: after
/// crossing phase `k` every slot must read `k` or `k + 1`.
pub fn bench_barrier(workers: usize, phases: u64) -> Result<BarrierBench> {
    if workers < 2 {
        return Err(Error::invalid("barrier benchmark needs at least 2 workers"));
    }
    if phases == 0 {
        return Err(Error::invalid("barrier benchmark needs at least 1 phase"));
    }

    let handles = LockFreeBarrier::handles(workers)?;
    let slots: Arc<Vec<AtomicU64>> = Arc::new((0..workers).map(|_| AtomicU64::new(0)).collect());
    let violations = Arc::new(AtomicU64::new(0));
    let start = Instant::now();
    let joins: Vec<_> = handles
        .into_iter()
        .enumerate()
        .map(|(w, mut h)| {
            let slots = Arc::clone(&slots);
            let violations = Arc::clone(&violations);
            thread::spawn(move || -> Result<()> {
                for k in 1..=phases {
                    slots[w].store(k, Ordering::Release);
                    h.wait()?;
                    for s in slots.iter() {
                        let v = s.load(Ordering::Acquire);
                        if v < k || v > k + 1 {
                            violations.fetch_add(1, Ordering::Relaxed);
                        }
                    }
                }
                Ok(())
            })
        })
        .collect();
    for j in joins {
        j.join().map_err(|_| Error::Barrier("worker panicked".into()))??;
    }
    let lockfree = start.elapsed().as_secs_f64();

    let native = Arc::new(Barrier::new(workers));
    let start = Instant::now();
    let joins: Vec<_> = (0..workers)
        .map(|_| {
            let b = Arc::clone(&native);
            thread::spawn(move || {
                for _ in 0..phases {
                    b.wait();
                }
            })
        })
        .collect();
    for j in joins {
        j.join().map_err(|_| Error::Barrier("worker panicked".into()))?;
    }
    let native = start.elapsed().as_secs_f64();

    let lockfree_ns = lockfree * 1e9 / phases as f64;
    let native_ns = native * 1e9 / phases as f64;
    Ok(BarrierBench {
        workers,
        phases,
        lockfree_ns_per_sync: lockfree_ns,
        native_ns_per_sync: native_ns,
        ratio: lockfree_ns / native_ns,
        violations: violations.load(Ordering::Relaxed),
    })
}
