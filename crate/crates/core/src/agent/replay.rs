use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::rng::Rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

/// Fixed-capacity ring of transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    inserted: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay capacity must be positive".into()));
        }
        Ok(ReplayBuffer { capacity, items: Vec::with_capacity(capacity.min(1 << 16)), inserted: 0 })
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[(self.inserted % self.capacity as u64) as usize] = t;
        }
        self.inserted += 1;
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

    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    /// `batch` distinct slots chosen uniformly.
    pub fn sample_indices(&self, batch: usize, rng: &mut Rng) -> Result<Vec<usize>> {
        if self.items.len() < batch {
            return Err(Error::UnderfullBuffer { have: self.items.len(), need: batch });
        }
        Ok(index::sample(rng, self.items.len(), batch).into_vec())
    }

    pub fn sample(&self, batch: usize, rng: &mut Rng) -> Result<Vec<&Transition>> {
        Ok(self.sample_indices(batch, rng)?.into_iter().map(|i| &self.items[i]).collect())
    }

    pub fn get(&self, slot: usize) -> Option<&Transition> {
        self.items.get(slot)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn t(action: usize) -> Transition {
        Transition { state: vec![0.0], action, reward: 0.0, next_state: vec![0.0], done: false }
    }

    #[test]
    fn ring_overwrites_oldest() {
        let mut b = ReplayBuffer::new(3).unwrap();
        for a in 0..5 {
            b.push(t(a));
        }
        assert_eq!(b.len(), 3);
        assert_eq!(b.inserted(), 5);
        let mut actions: Vec<usize> = (0..3).map(|i| b.get(i).unwrap().action).collect();
        actions.sort();
        assert_eq!(actions, vec![2, 3, 4]);
    }

    #[test]
    fn batches_are_distinct_and_underfull_errors() {
        let mut b = ReplayBuffer::new(10).unwrap();
        for a in 0..10 {
            b.push(t(a));
        }
        let mut r = rng::rng(1);
        let mut idx = b.sample_indices(10, &mut r).unwrap();
        idx.sort();
        assert_eq!(idx, (0..10).collect::<Vec<_>>());
        assert!(matches!(b.sample(11, &mut r), Err(Error::UnderfullBuffer { have: 10, need: 11 })));
        assert!(ReplayBuffer::new(0).is_err());
    }
}
