//! Counter-based random streams.
//!
//! Every latency model draws from its own stream, identified by a 64-bit
//! stream id. The n-th sample of a stream is a pure function of
//! `(seed, stream_id, n)`, so adding or removing streams never perturbs the
//! samples other streams observe, and scheduler-induced reordering of draws
//! within a run cannot change any value.

use std::collections::HashMap;

/// SplitMix64 finalizer; good avalanche for counter-based generation.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash `(seed, stream, counter, lane)` into 64 uniform bits.
fn hash4(seed: u64, stream: u64, counter: u64, lane: u64) -> u64 {
    mix(mix(mix(mix(seed) ^ stream) ^ counter) ^ lane)
}

fn bits_to_unit(bits: u64) -> f64 {
    // 53 high bits -> [0, 1)
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Seeded collection of independent counter-based streams.
#[derive(Debug, Clone)]
pub struct StreamRng {
    seed: u64,
    counters: HashMap<u64, u64>,
}

impl StreamRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            counters: HashMap::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn next_counter(&mut self, stream: u64) -> u64 {
        let c = self.counters.entry(stream).or_insert(0);
        let n = *c;
        *c += 1;
        n
    }

    /// Next uniform draw in [0, 1) on `stream`.
    pub fn next_unit(&mut self, stream: u64) -> f64 {
        let n = self.next_counter(stream);
        bits_to_unit(hash4(self.seed, stream, n, 0))
    }

    /// Next standard-normal draw on `stream` (Box-Muller; one counter tick).
    pub fn next_normal(&mut self, stream: u64) -> f64 {
        let n = self.next_counter(stream);
        let u1 = bits_to_unit(hash4(self.seed, stream, n, 0)).max(f64::MIN_POSITIVE);
        let u2 = bits_to_unit(hash4(self.seed, stream, n, 1));
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

/// Stable stream id derived from a task name and a role tag, used when the
/// scenario does not pin stream ids explicitly.
pub fn derive_stream_id(task_id: &str, role: &str) -> u64 {
    // FNV-1a over "task\0role"
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in task_id.bytes().chain([0u8]).chain(role.bytes()) {
        h ^= b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    h
}
