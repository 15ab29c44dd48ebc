//! Fixed-delay FIFO between the played rounds and the oracle.

use std::collections::VecDeque;

/// Holds each item for exactly `delay` rounds: an item pushed at round `t` is
/// returned by the push of round `t + delay`.
#[derive(Debug, Clone)]
pub struct DelayBuffer<T> {
    queue: VecDeque<T>,
    delay: usize,
}

impl<T> DelayBuffer<T> {
    pub fn new(delay: usize) -> Self {
        DelayBuffer {
            queue: VecDeque::with_capacity(delay + 1),
            delay,
        }
    }

    pub fn delay(&self) -> usize {
        self.delay
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    /// Enqueues this round's item and releases the one from `delay` rounds ago.
    pub fn push(&mut self, item: T) -> Option<T> {
        self.queue.push_back(item);
        if self.queue.len() > self.delay {
            self.queue.pop_front()
        } else {
            None
        }
    }

    /// Drops everything still in flight.
    pub fn clear(&mut self) {
        self.queue.clear();
    }
}
