//! Seeded random substreams.
//!
//! Every random quantity draws from its own ChaCha8 stream keyed by the
//! run seed and a fixed stream number, so adding a new consumer never
//! perturbs an existing one. Allocation draws use one stream per job
//! (`ALLOCATION_BASE + job id`), which gives paired runs common random
//! numbers: the k-th allocation attempt of a job sees the same uniform in
//! every run that shares the seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::domain::JobId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Arrivals = 0,
    DueTime = 1,
    ExecTime = 2,
    PrepTime = 3,
    Shape = 4,
    OrderAmount = 5,
    Relationship = 6,
    ClassThinning = 7,
}

pub const ALLOCATION_BASE: u64 = 1 << 32;

pub fn substream(seed: u64, stream: Stream) -> ChaCha8Rng {
    stream_by_number(seed, stream as u64)
}

pub fn allocation_stream(seed: u64, job: JobId) -> ChaCha8Rng {
    stream_by_number(seed, ALLOCATION_BASE.wrapping_add(job.0))
}

fn stream_by_number(seed: u64, number: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(number);
    rng
}
