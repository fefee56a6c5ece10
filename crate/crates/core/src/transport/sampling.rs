//! Sampled transition distributions and the assignment-based transport
//! distance between equal-size samples.

use rand::distributions::{Distribution as _, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{assign, Distribution, TransportError};
use crate::matrix::SquareMatrix;

/// Where a sample came from: the root seed, the stream derived from it and
/// the stream position at the first draw.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedRecord {
    pub root_seed: u64,
    pub stream: u64,
    pub word_pos: u128,
}

/// Deterministic random stream. Independent workers derive distinct streams
/// from one root seed by index, so results do not depend on scheduling.
#[derive(Clone, Debug)]
pub struct RngStream {
    root_seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(root_seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(root_seed);
        rng.set_stream(stream);
        Self { root_seed, stream, rng }
    }

    pub fn record(&self) -> SeedRecord {
        SeedRecord { root_seed: self.root_seed, stream: self.stream, word_pos: self.rng.get_word_pos() }
    }

    pub(crate) fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// `i` i.i.d. state indices drawn from one distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    draws: Vec<usize>,
    support: usize,
    seed: SeedRecord,
}

impl SampleSet {
    pub fn draws(&self) -> &[usize] {
        &self.draws
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn seed(&self) -> SeedRecord {
        self.seed
    }

    /// `P_i(x) = (1/i) Σ_k δ_{X_k}(x)`.
    pub fn empirical(&self) -> Distribution {
        Distribution::empirical(self.support, &self.draws).expect("a sample set is nonempty and in support")
    }
}

pub(crate) fn draw_indices(probs: &[f64], count: usize, rng: &mut RngStream) -> Vec<usize> {
    let dist = WeightedIndex::new(probs).expect("validated distribution has positive mass");
    (0..count).map(|_| dist.sample(rng.rng())).collect()
}

/// Draws `i` independent samples from `p`.
pub fn sample_empirical(p: &Distribution, i: usize, rng: &mut RngStream) -> Result<SampleSet, TransportError> {
    if i == 0 {
        return Err(TransportError::EmptySample);
    }
    let seed = rng.record();
    Ok(SampleSet { draws: draw_indices(p.probs(), i, rng), support: p.len(), seed })
}

/// `min_σ (1/i) Σ_k h(xs[k], ys[σ(k)])` for index samples of equal length.
pub(crate) fn empirical_tk(h: &SquareMatrix, xs: &[usize], ys: &[usize]) -> f64 {
    let i = xs.len();
    if xs.iter().all(|&x| x == xs[0]) && ys.iter().all(|&y| y == ys[0]) {
        return h.get(xs[0], ys[0]);
    }
    let perm = assign(i, |k, j| h.get(xs[k], ys[j]));
    perm.iter().enumerate().map(|(k, &j)| h.get(xs[k], ys[j])).sum::<f64>() / i as f64
}

/// Transport distance between the empirical distributions of two samples,
/// solved as an assignment problem.
pub fn empirical_kantorovich(h: &SquareMatrix, xs: &SampleSet, ys: &SampleSet) -> Result<f64, TransportError> {
    if xs.len() != ys.len() {
        return Err(TransportError::SampleLength { left: xs.len(), right: ys.len() });
    }
    if xs.is_empty() {
        return Err(TransportError::EmptySample);
    }
    let m = h.n();
    if let Some(&index) = xs.draws.iter().chain(&ys.draws).find(|&&x| x >= m) {
        return Err(TransportError::SampleOutOfSupport { index, support: m });
    }
    Ok(empirical_tk(h, &xs.draws, &ys.draws))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(draws: &[usize], support: usize) -> SampleSet {
        SampleSet { draws: draws.to_vec(), support, seed: RngStream::new(0, 0).record() }
    }

    fn discrete(m: usize) -> SquareMatrix {
        SquareMatrix::from_fn(m, |i, j| f64::from(u8::from(i != j)))
    }

    #[test]
    fn point_mass_sample_is_constant() {
        let mut rng = RngStream::new(3, 0);
        let s = sample_empirical(&Distribution::point(5, 2), 50, &mut rng).unwrap();
        assert!(s.draws().iter().all(|&x| x == 2));
        assert_eq!(s.empirical(), Distribution::point(5, 2));
    }

    #[test]
    fn single_draw_and_zero_draws() {
        let mut rng = RngStream::new(3, 0);
        assert_eq!(sample_empirical(&Distribution::uniform(3), 1, &mut rng).unwrap().len(), 1);
        assert_eq!(sample_empirical(&Distribution::uniform(3), 0, &mut rng), Err(TransportError::EmptySample));
    }

    #[test]
    fn same_seed_same_stream_same_draws() {
        let p = Distribution::new(vec![0.2, 0.5, 0.3]).unwrap();
        let a = sample_empirical(&p, 100, &mut RngStream::new(42, 5)).unwrap();
        let b = sample_empirical(&p, 100, &mut RngStream::new(42, 5)).unwrap();
        let c = sample_empirical(&p, 100, &mut RngStream::new(42, 6)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.draws(), c.draws());
        assert_eq!(a.seed().stream, 5);
    }

    #[test]
    fn fair_coin_concentrates() {
        // 5σ band for Binomial(10000, 0.5) is ±250 counts, inside [0.47, 0.53]
        let p = Distribution::uniform(2);
        for seed in 0..20 {
            let s = sample_empirical(&p, 10_000, &mut RngStream::new(seed, 0)).unwrap();
            let freq = s.empirical().probs()[0];
            assert!((0.47..=0.53).contains(&freq), "seed {seed}: {freq}");
        }
    }

    #[test]
    fn empirical_examples() {
        let h = discrete(3);
        assert_eq!(empirical_kantorovich(&h, &set(&[0, 1, 2], 3), &set(&[2, 0, 1], 3)).unwrap(), 0.0);
        assert_eq!(empirical_kantorovich(&h, &set(&[0, 0], 3), &set(&[0, 1], 3)).unwrap(), 0.5);
        assert_eq!(
            empirical_kantorovich(&h, &set(&[0], 3), &set(&[0, 1], 3)),
            Err(TransportError::SampleLength { left: 1, right: 2 })
        );
        assert_eq!(
            empirical_kantorovich(&h, &set(&[0], 3), &set(&[7], 9)),
            Err(TransportError::SampleOutOfSupport { index: 7, support: 3 })
        );
    }
}
