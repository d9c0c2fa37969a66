//! Seeded, labeled random streams.
//!
//! Every stochastic component draws from a `StreamRng`, identified by a
//! 64-bit seed plus a string label. Streams with different labels are
//! independent; identical (seed, label, call sequence) reproduces identical
//! output on every platform. Parallel code splits child streams instead of
//! sharing one generator.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

// splitmix64 finalizer, used to key the stream cipher from (seed, label).
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn derive_key(seed: u64, label: &str) -> [u8; 32] {
    let mut h = mix64(seed ^ 0x5851_f42d_4c95_7f2d);
    for &b in label.as_bytes() {
        h = mix64(h ^ u64::from(b));
    }
    let mut key = [0u8; 32];
    let mut word = h;
    for chunk in key.chunks_exact_mut(8) {
        word = mix64(word);
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    key
}

/// A deterministic random stream: ChaCha8 keyed by hash of (seed, label).
#[derive(Debug, Clone)]
pub struct StreamRng {
    seed: u64,
    label: String,
    inner: ChaCha8Rng,
}

impl StreamRng {
    pub fn new(seed: u64, label: &str) -> Self {
        StreamRng {
            seed,
            label: label.to_owned(),
            inner: ChaCha8Rng::from_seed(derive_key(seed, label)),
        }
    }

    /// Derive an independent child stream. The child label is
    /// `"{parent}/{label}"`, so split hierarchies never collide.
    pub fn split(&self, label: &str) -> Self {
        let child = format!("{}/{}", self.label, label);
        StreamRng::new(self.seed, &child)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Uniform in [0, 1) with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Bernoulli(p). Degenerate p values short-circuit so p=0 and p=1 are
    /// exact regardless of the draw.
    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        debug_assert!((0.0..=1.0).contains(&p));
        if p <= 0.0 {
            false
        } else if p >= 1.0 {
            true
        } else {
            self.uniform() < p
        }
    }

    /// Uniform in 0..n, unbiased (rejection on the short final block).
    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index range must be non-empty");
        let n = n as u64;
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let x = self.inner.next_u64();
            if x < zone {
                return (x % n) as usize;
            }
        }
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }
}

impl RngCore for StreamRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

// ======================================================================
// tests
// ======================================================================

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_label_reproduces() {
        let mut a = StreamRng::new(42, "unit");
        let mut b = StreamRng::new(42, "unit");
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn labels_change_the_stream() {
        let mut a = StreamRng::new(42, "x");
        let mut b = StreamRng::new(42, "y");
        let va: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let vb: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        assert_ne!(va, vb);
    }

    #[test]
    fn split_matches_flat_label() {
        let parent = StreamRng::new(7, "run");
        let mut child = parent.split("round3");
        let mut flat = StreamRng::new(7, "run/round3");
        for _ in 0..16 {
            assert_eq!(child.next_u64(), flat.next_u64());
        }
    }

    // Frozen outputs: guards cross-platform and cross-version stability of
    // the key derivation and cipher. If this breaks, every recorded
    // experiment changes meaning.
    #[test]
    fn portability_canary() {
        let mut r = StreamRng::new(0, "canary");
        let got: Vec<u64> = (0..4).map(|_| r.next_u64()).collect();
        assert_eq!(
            got,
            vec![
                14523031691899390906,
                7915455514034188649,
                9366862139546410046,
                13599334575476916738
            ]
        );
    }

    #[test]
    fn index_is_unbiased_at_boundaries() {
        let mut r = StreamRng::new(3, "idx");
        for _ in 0..1000 {
            let v = r.index(3);
            assert!(v < 3);
        }
        assert_eq!(r.index(1), 0);
    }

    #[test]
    fn bernoulli_degenerate() {
        let mut r = StreamRng::new(5, "b");
        assert!(!r.bernoulli(0.0));
        assert!(r.bernoulli(1.0));
    }

    // Independence across labels: X = #successes among 2+2 p=1/2 indicators
    // drawn from streams "a" and "b" must follow Bin(4, 1/2). Chi-square
    // goodness of fit over the 5 cells, 4 degrees of freedom, 10^4 trials.
    #[test]
    fn cross_stream_independence_chi_square() {
        let trials = 10_000usize;
        let mut counts = [0usize; 5];
        for t in 0..trials {
            let mut a = StreamRng::new(t as u64, "a");
            let mut b = StreamRng::new(t as u64, "b");
            let x = usize::from(a.bernoulli(0.5))
                + usize::from(a.bernoulli(0.5))
                + usize::from(b.bernoulli(0.5))
                + usize::from(b.bernoulli(0.5));
            counts[x] += 1;
        }
        let probs = [1.0, 4.0, 6.0, 4.0, 1.0].map(|w| w / 16.0);
        let mut chi2 = 0.0;
        for (cell, p) in counts.iter().zip(probs.iter()) {
            let expected = trials as f64 * p;
            let diff = *cell as f64 - expected;
            chi2 += diff * diff / expected;
        }
        // chi-square critical value, 4 df, alpha = 0.001
        assert!(chi2 < 18.467, "chi2 = {chi2}, streams look correlated");
    }
}
