//! Counter-style random streams.
//!
//! Every replicate of every simulation draws from its own ChaCha8 stream,
//! addressed by `(seed, domain, index)`. Streams never overlap, so batch
//! loops produce the same numbers regardless of how the work is split
//! across threads.

use std::sync::Once;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Items drawn from one stream inside [`par_generate`].
pub const BLOCK: usize = 1024;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "ARTCOMBINE_THREADS";

/// Separates independent uses of the same user seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Generic = 0,
    HeadSampler = 1,
    RtpNull = 2,
    Alternative = 3,
    NullCalibration = 4,
    ArtpNull = 5,
    Mvn = 6,
    CorrelationGen = 7,
    Shuffle = 8,
    Effects = 9,
}

/// Returns the generator for one `(seed, domain, index)` cell.
pub fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
    key[16..24].copy_from_slice(&0x6172_7463_6f6d_6221u64.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Uniform draw on the open interval (0, 1).
#[inline]
pub fn open01<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        // 53 random bits, offset by half an ulp so 0 is never returned.
        let v = ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
        if v < 1.0 {
            return v;
        }
    }
}

/// Sizes the global worker pool from `ARTCOMBINE_THREADS` on first use.
pub fn configure_threads() {
    static INIT: Once = Once::new();
    INIT.call_once(|| {
        if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
            // an already-built pool is fine
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    });
}

/// Produces `n` items in parallel. Item `i` is drawn from the stream of block
/// `i / BLOCK`, after the items before it in that block, so the output does
/// not depend on the number of workers.
pub fn par_generate<T, F>(seed: u64, domain: Domain, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
{
    configure_threads();
    let blocks = n.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = stream(seed, domain, b as u64);
            let start = b * BLOCK;
            let end = (start + BLOCK).min(n);
            (start..end).map(|i| f(&mut rng, i)).collect::<Vec<_>>()
        })
        .collect()
}
