//! Deterministic parallel execution.
//!
//! Work is cut into fixed-size batches. Each batch owns a ChaCha8 stream
//! addressed by `(domain, point, batch index)`, so its draws do not depend on
//! which thread runs it. Batches run a round at a time and are merged in
//! index order; the stopping rule is checked only between rounds. Output is
//! therefore identical for any thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use spmc_core::frontend::ResultantAccumulator;

use crate::error::Result;

/// Batches per round.
pub const ROUND: u32 = 32;

/// Independent random stream families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Domain {
    Calibration = 1,
    Spmc = 2,
    Coherent = 3,
    Estimation = 4,
}

/// `point` must fit in 24 bits.
pub fn substream(seed: u64, domain: Domain, point: u32, batch: u32) -> ChaCha8Rng {
    debug_assert!(point < 1 << 24);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 56) | (u64::from(point & 0xff_ffff) << 32) | u64::from(batch));
    rng
}

pub trait Merge: Default + Send {
    fn merge(&mut self, other: Self);
}

impl Merge for ResultantAccumulator {
    fn merge(&mut self, other: Self) {
        ResultantAccumulator::merge(self, &other);
    }
}

impl<T: Send> Merge for Vec<T> {
    fn merge(&mut self, mut other: Self) {
        self.append(&mut other);
    }
}

/// Runs `work(batch_index, batch_len)` until `cap` trials are done or
/// `stop` holds after a round.
pub fn run_batches<A, W, S>(cap: u64, batch: u64, stop: S, work: W) -> Result<A>
where
    A: Merge,
    W: Fn(u32, u64) -> Result<A> + Sync,
    S: Fn(&A) -> bool,
{
    let mut acc = A::default();
    let mut done = 0u64;
    let mut next = 0u32;
    while done < cap {
        let mut jobs = Vec::with_capacity(ROUND as usize);
        for _ in 0..ROUND {
            if done >= cap {
                break;
            }
            let n = batch.min(cap - done);
            jobs.push((next, n));
            next += 1;
            done += n;
        }
        let parts: Vec<Result<A>> = jobs.into_par_iter().map(|(b, n)| work(b, n)).collect();
        for p in parts {
            acc.merge(p?);
        }
        if stop(&acc) {
            break;
        }
    }
    Ok(acc)
}

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        Some(n) => Ok(rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(f)),
        None => Ok(f()),
    }
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;

    #[derive(Default)]
    struct Sum(u64, u64);

    impl Merge for Sum {
        fn merge(&mut self, o: Self) {
            self.0 = self.0.wrapping_mul(31).wrapping_add(o.0);
            self.1 += o.1;
        }
    }

    fn draw(b: u32, n: u64) -> Result<Sum> {
        let mut rng = substream(7, Domain::Spmc, 3, b);
        Ok(Sum((0..n).map(|_| rng.random::<u32>() as u64).sum(), n))
    }

    #[test]
    fn independent_of_thread_count() {
        let a: Sum = with_threads(Some(1), || run_batches(10_000, 37, |_| false, draw)).unwrap().unwrap();
        let b: Sum = with_threads(Some(8), || run_batches(10_000, 37, |_| false, draw)).unwrap().unwrap();
        assert_eq!((a.0, a.1), (b.0, b.1));
        assert_eq!(a.1, 10_000);
    }

    #[test]
    fn stops_between_rounds() {
        let s: Sum = run_batches(1_000_000, 10, |s: &Sum| s.1 >= 5, draw).unwrap();
        assert_eq!(s.1, 10 * ROUND as u64);
    }

    #[test]
    fn streams_differ() {
        let a: u64 = substream(1, Domain::Spmc, 0, 0).random();
        let b: u64 = substream(1, Domain::Spmc, 0, 1).random();
        let c: u64 = substream(1, Domain::Coherent, 0, 0).random();
        let d: u64 = substream(2, Domain::Spmc, 0, 0).random();
        assert!(a != b && a != c && a != d);
    }
}
