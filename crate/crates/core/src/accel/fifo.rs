use alloc::collections::VecDeque;

/// Bounded queue with occupancy statistics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FifoModel<T = i32> {
    depth: usize,
    queue: VecDeque<T>,
    high_water: usize,
    pushes: u64,
    pops: u64,
}

impl<T> FifoModel<T> {
    pub fn new(depth: usize) -> Self {
        FifoModel {
            depth,
            queue: VecDeque::with_capacity(depth.min(4096)),
            high_water: 0,
            pushes: 0,
            pops: 0,
        }
    }

    /// Hands the value back when the queue is full.
    pub fn push(&mut self, value: T) -> Result<(), T> {
        if self.is_full() {
            return Err(value);
        }
        self.queue.push_back(value);
        self.pushes += 1;
        self.high_water = self.high_water.max(self.queue.len());
        Ok(())
    }

    pub fn pop(&mut self) -> Option<T> {
        let v = self.queue.pop_front()?;
        self.pops += 1;
        Some(v)
    }

    pub fn is_full(&self) -> bool {
        self.queue.len() >= self.depth
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn occupancy(&self) -> usize {
        self.queue.len()
    }

    pub fn high_water(&self) -> usize {
        self.high_water
    }

    pub fn pushes(&self) -> u64 {
        self.pushes
    }

    pub fn pops(&self) -> u64 {
        self.pops
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn full_fifo_rejects() {
        let mut f = FifoModel::new(2);
        assert_eq!(f.push(1), Ok(()));
        assert_eq!(f.push(2), Ok(()));
        assert_eq!(f.push(3), Err(3));
        assert_eq!(f.pop(), Some(1));
        assert_eq!(f.push(3), Ok(()));
        assert_eq!((f.pop(), f.pop(), f.pop()), (Some(2), Some(3), None));
        assert_eq!((f.pushes(), f.pops(), f.high_water()), (3, 3, 2));
    }

    proptest! {
        #[test]
        fn counters_conserve_tokens(depth in 1usize..8, ops in proptest::collection::vec(any::<bool>(), 0..200)) {
            let mut f = FifoModel::new(depth);
            for (i, push) in ops.into_iter().enumerate() {
                if push { let _ = f.push(i); } else { f.pop(); }
                prop_assert!(f.occupancy() <= depth);
                prop_assert!(f.pops() <= f.pushes());
                prop_assert_eq!(f.pushes() - f.pops(), f.occupancy() as u64);
                prop_assert!(f.high_water() <= depth);
            }
        }
    }
}
