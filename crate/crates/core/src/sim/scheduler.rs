use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

struct Entry<E> {
    t_ms: u64,
    seq: u64,
    event: E,
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        (self.t_ms, self.seq) == (other.t_ms, other.seq)
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Entry<E> {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.t_ms, self.seq).cmp(&(other.t_ms, other.seq))
    }
}

/// Discrete-event queue on a 1 ms clock. Events at the same tick come out in
/// the order they were scheduled.
pub struct Scheduler<E> {
    heap: BinaryHeap<Reverse<Entry<E>>>,
    seq: u64,
    now_ms: u64,
}

impl<E> Default for Scheduler<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> Scheduler<E> {
    pub fn new() -> Self {
        Scheduler {
            heap: BinaryHeap::new(),
            seq: 0,
            now_ms: 0,
        }
    }

    pub fn now_ms(&self) -> u64 {
        self.now_ms
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Events in the past are clamped to the current tick.
    pub fn schedule(&mut self, t_ms: u64, event: E) {
        let t_ms = t_ms.max(self.now_ms);
        self.heap.push(Reverse(Entry {
            t_ms,
            seq: self.seq,
            event,
        }));
        self.seq += 1;
    }

    pub fn pop(&mut self) -> Option<(u64, E)> {
        let Reverse(e) = self.heap.pop()?;
        self.now_ms = e.t_ms;
        Some((e.t_ms, e.event))
    }

    /// Everything due at the earliest pending tick.
    pub fn pop_tick(&mut self) -> Option<(u64, Vec<E>)> {
        let (t, first) = self.pop()?;
        let mut batch = vec![first];
        while self.heap.peek().is_some_and(|Reverse(e)| e.t_ms == t) {
            if let Some((_, e)) = self.pop() {
                batch.push(e);
            }
        }
        Some((t, batch))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_by_time_then_insertion() {
        let mut s = Scheduler::new();
        s.schedule(10, "b");
        s.schedule(5, "a");
        s.schedule(10, "c");
        assert_eq!(s.pop(), Some((5, "a")));
        assert_eq!(s.pop_tick(), Some((10, vec!["b", "c"])));
        assert!(s.is_empty());
        assert_eq!(s.now_ms(), 10);
    }

    #[test]
    fn past_events_run_now() {
        let mut s = Scheduler::new();
        s.schedule(100, 1);
        s.pop();
        s.schedule(50, 2);
        assert_eq!(s.pop(), Some((100, 2)));
    }
}
