//! Seeded, splittable random streams.
//!
//! Every stream is a ChaCha8 generator keyed by a 64-bit seed with a 64-bit
//! stream id selecting an independent keystream. Child streams are derived
//! by mixing labels into the stream id, so a run's randomness depends only on
//! where it sits in the experiment grid and never on scheduling order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Identity of a random stream; enough to rebuild it from scratch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamId {
    pub seed: u64,
    pub stream: u64,
}

impl StreamId {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Derives a child id by folding `label` into the stream id.
    pub fn child(self, label: u64) -> Self {
        Self {
            seed: self.seed,
            stream: splitmix64(self.stream ^ splitmix64(label.wrapping_add(0x5851_f42d_4c95_7f2d))),
        }
    }

    /// Derives a child id keyed by a string (agent spec, role name, ...).
    pub fn child_str(self, label: &str) -> Self {
        self.child(fnv1a(label.as_bytes()))
    }

    pub fn rng(self) -> RngStream {
        RngStream::new(self.seed, self.stream)
    }
}

/// A deterministic random stream. Identical `(seed, stream)` pairs replay
/// identical draws.
#[derive(Debug, Clone)]
pub struct RngStream {
    id: StreamId,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            id: StreamId { seed, stream },
            inner,
        }
    }

    pub fn id(&self) -> StreamId {
        self.id
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a, stable across platforms and toolchains.
pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_id_replays() {
        let mut a = RngStream::new(7, 3);
        let mut b = RngStream::new(7, 3);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn distinct_streams_differ_and_look_independent() {
        let mut a = RngStream::new(7, 3);
        let mut b = RngStream::new(7, 4);
        let n = 20_000;
        let xs: Vec<f64> = (0..n).map(|_| a.random::<f64>()).collect();
        let ys: Vec<f64> = (0..n).map(|_| b.random::<f64>()).collect();
        assert_ne!(xs[..8], ys[..8]);
        let mx = xs.iter().sum::<f64>() / n as f64;
        let my = ys.iter().sum::<f64>() / n as f64;
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / n as f64;
        // var of U(0,1) is 1/12
        let corr = cov * 12.0;
        assert!(corr.abs() < 0.03, "corr {corr}");
    }

    #[test]
    fn children_are_stable() {
        let root = StreamId::new(1, 0);
        assert_eq!(root.child(5), root.child(5));
        assert_ne!(root.child(5), root.child(6));
        assert_eq!(root.child_str("b-PD"), root.child_str("b-PD"));
        assert_ne!(root.child(1).child(2), root.child(2).child(1));
    }
}
