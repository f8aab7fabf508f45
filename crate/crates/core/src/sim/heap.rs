use alloc::vec;
use alloc::vec::Vec;

const ABSENT: u32 = u32::MAX;

/// Binary min-heap of event times with at most one entry per key and
/// in-place updates.
#[derive(Debug, Clone)]
pub(crate) struct IndexedHeap {
    heap: Vec<(f64, u32)>,
    slot: Vec<u32>,
}

impl IndexedHeap {
    pub fn new(keys: usize) -> Self {
        IndexedHeap {
            heap: Vec::with_capacity(keys),
            slot: vec![ABSENT; keys],
        }
    }

    pub fn peek(&self) -> Option<(f64, usize)> {
        self.heap.first().map(|&(t, k)| (t, k as usize))
    }

    /// Inserts `key` at `time`, or moves it there.
    pub fn set(&mut self, key: usize, time: f64) {
        let i = self.slot[key];
        if i == ABSENT {
            let i = self.heap.len();
            self.heap.push((time, key as u32));
            self.slot[key] = i as u32;
            self.sift_up(i);
        } else {
            let i = i as usize;
            let old = self.heap[i].0;
            self.heap[i].0 = time;
            if time < old {
                self.sift_up(i);
            } else {
                self.sift_down(i);
            }
        }
    }

    pub fn remove(&mut self, key: usize) {
        let i = self.slot[key];
        if i == ABSENT {
            return;
        }
        let i = i as usize;
        let last = self.heap.len() - 1;
        self.swap(i, last);
        self.heap.pop();
        self.slot[key] = ABSENT;
        if i < self.heap.len() {
            self.sift_down(i);
            self.sift_up(i);
        }
    }

    fn swap(&mut self, a: usize, b: usize) {
        self.heap.swap(a, b);
        self.slot[self.heap[a].1 as usize] = a as u32;
        self.slot[self.heap[b].1 as usize] = b as u32;
    }

    fn less(&self, a: usize, b: usize) -> bool {
        let (ta, ka) = self.heap[a];
        let (tb, kb) = self.heap[b];
        ta < tb || (ta == tb && ka < kb)
    }

    fn sift_up(&mut self, mut i: usize) {
        while i > 0 {
            let parent = (i - 1) / 2;
            if !self.less(i, parent) {
                break;
            }
            self.swap(i, parent);
            i = parent;
        }
    }

    fn sift_down(&mut self, mut i: usize) {
        let len = self.heap.len();
        loop {
            let left = 2 * i + 1;
            if left >= len {
                break;
            }
            let right = left + 1;
            let child = if right < len && self.less(right, left) { right } else { left };
            if !self.less(child, i) {
                break;
            }
            self.swap(i, child);
            i = child;
        }
    }
}
