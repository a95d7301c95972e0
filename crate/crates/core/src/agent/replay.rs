use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// One environment transition. States are stored at single precision and
/// shared between consecutive transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Arc<[f32]>,
    pub action: f64,
    pub reward: f64,
    pub next_state: Arc<[f32]>,
    pub done: bool,
}

pub fn state_to_shared(t: &Tensor) -> Arc<[f32]> {
    t.data().iter().map(|&v| v as f32).collect()
}

/// Mini-batch drawn from replay memory.
#[derive(Debug, Clone)]
pub struct Batch {
    pub states: Tensor,
    pub actions: Tensor,
    pub rewards: Vec<f64>,
    pub next_states: Tensor,
    pub dones: Vec<bool>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

/// Fixed-capacity FIFO ring with uniform sampling with replacement.
#[derive(Debug, Clone)]
pub struct ReplayMemory {
    capacity: usize,
    state_shape: [usize; 3],
    items: Vec<Transition>,
    next: usize,
    rng: ChaCha8Rng,
}

impl ReplayMemory {
    pub fn new(capacity: usize, state_shape: [usize; 3], seed: u64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay capacity must be positive".into()));
        }
        Ok(ReplayMemory {
            capacity,
            state_shape,
            items: Vec::new(),
            next: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn state_shape(&self) -> [usize; 3] {
        self.state_shape
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition) -> Result<()> {
        let n: usize = self.state_shape.iter().product();
        if t.state.len() != n || t.next_state.len() != n {
            return Err(Error::shape(
                "replay",
                format!(
                    "transition states have {} / {} values, expected {n}",
                    t.state.len(),
                    t.next_state.len()
                ),
            ));
        }
        if !t.action.is_finite() || !t.reward.is_finite() {
            return Err(Error::Domain("transition action and reward must be finite".into()));
        }
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
        Ok(())
    }

    /// Oldest-first view of the contents.
    pub fn iter_oldest_first(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.items.len() < self.capacity { 0 } else { self.next };
        self.items[split..].iter().chain(self.items[..split].iter())
    }

    pub fn sample_indices(&mut self, batch_size: usize) -> Result<Vec<usize>> {
        if batch_size == 0 || self.items.len() < batch_size {
            return Err(Error::Runtime(format!(
                "cannot sample {batch_size} transitions from memory holding {}",
                self.items.len()
            )));
        }
        let n = self.items.len();
        Ok((0..batch_size).map(|_| self.rng.random_range(0..n)).collect())
    }

    pub fn get(&self, idx: usize) -> Option<&Transition> {
        self.items.get(idx)
    }

    pub fn sample(&mut self, batch_size: usize) -> Result<Batch> {
        let idx = self.sample_indices(batch_size)?;
        let [c, h, w] = self.state_shape;
        let n = c * h * w;
        let mut s = Vec::with_capacity(batch_size * n);
        let mut ns = Vec::with_capacity(batch_size * n);
        let mut a = Vec::with_capacity(batch_size);
        let mut r = Vec::with_capacity(batch_size);
        let mut d = Vec::with_capacity(batch_size);
        for &i in &idx {
            let t = &self.items[i];
            s.extend(t.state.iter().map(|&v| v as f64));
            ns.extend(t.next_state.iter().map(|&v| v as f64));
            a.push(t.action);
            r.push(t.reward);
            d.push(t.done);
        }
        Ok(Batch {
            states: Tensor::from_vec(&[batch_size, c, h, w], s)?,
            actions: Tensor::from_vec(&[batch_size, 1], a)?,
            rewards: r,
            next_states: Tensor::from_vec(&[batch_size, c, h, w], ns)?,
            dones: d,
        })
    }

    pub(crate) fn rng(&self) -> &ChaCha8Rng {
        &self.rng
    }

    pub(crate) fn restore(
        capacity: usize,
        state_shape: [usize; 3],
        items_oldest_first: Vec<Transition>,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        if items_oldest_first.len() > capacity {
            return Err(Error::Data("replay snapshot exceeds its capacity".into()));
        }
        let next = items_oldest_first.len() % capacity;
        Ok(ReplayMemory {
            capacity,
            state_shape,
            items: items_oldest_first,
            next,
            rng,
        })
    }
}
