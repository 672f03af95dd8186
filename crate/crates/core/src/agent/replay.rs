use rand::seq::index;
use rand::Rng;

use crate::env::Transition;

/// Fixed-capacity ring of transitions; once full, the oldest entry is
/// overwritten first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: Vec<Transition>,
    capacity: usize,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            items: Vec::with_capacity(capacity.min(1 << 16)),
            capacity,
            cursor: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.items.get(i)
    }

    /// Storage indices of a minibatch drawn uniformly without replacement.
    pub fn sample_indices<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<usize> {
        assert!(n <= self.items.len(), "minibatch larger than buffer");
        index::sample(rng, self.items.len(), n).into_vec()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<Transition> {
        self.sample_indices(rng, n)
            .into_iter()
            .map(|i| self.items[i])
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::State;
    use crate::latency::Action;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn transition(reward: f64) -> Transition {
        let s = State {
            features: [0.0; 6],
            t: 1,
        };
        Transition {
            state: s,
            action: Action::from_free(0.5, 0.5, 0.5, 0.5, [1.0 / 3.0; 3]),
            reward,
            next_state: s,
            terminal: false,
        }
    }

    #[test]
    fn overwrites_oldest_first() {
        let mut buf = ReplayBuffer::new(4);
        for i in 0..6 {
            buf.push(transition(i as f64));
        }
        assert_eq!(buf.len(), 4);
        let rewards: Vec<f64> = buf.iter().map(|t| t.reward).collect();
        assert_eq!(rewards, vec![4.0, 5.0, 2.0, 3.0]);
        assert!(!rewards.contains(&0.0));
    }

    #[test]
    fn minibatch_has_no_repeats() {
        let mut buf = ReplayBuffer::new(50);
        for i in 0..50 {
            buf.push(transition(i as f64));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut idx = buf.sample_indices(&mut rng, 50);
        idx.sort_unstable();
        assert_eq!(idx, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn sampling_is_uniform() {
        let n = 20;
        let mut buf = ReplayBuffer::new(n);
        for i in 0..n {
            buf.push(transition(i as f64));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut counts = vec![0usize; n];
        let draws = 20_000;
        let batch = 5;
        for _ in 0..draws {
            for i in buf.sample_indices(&mut rng, batch) {
                counts[i] += 1;
            }
        }
        let p = batch as f64 / n as f64;
        let expected = draws as f64 * p;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - expected).abs() < 5.0 * sigma, "{c} vs {expected}");
        }
    }
}
