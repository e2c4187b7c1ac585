use std::collections::HashMap;
use std::rc::Rc;

/// Least-recently-used cache of kernel matrix rows.
pub(crate) struct RowCache {
    capacity: usize,
    clock: u64,
    rows: HashMap<usize, (Rc<[f64]>, u64)>,
    hits: u64,
    misses: u64,
}

impl RowCache {
    pub fn new(capacity: usize) -> Self {
        RowCache {
            capacity: capacity.max(2),
            clock: 0,
            rows: HashMap::new(),
            hits: 0,
            misses: 0,
        }
    }

    /// Returns row `i`, computing it with `fill` on a miss.
    pub fn get_or_insert_with(&mut self, i: usize, fill: impl FnOnce() -> Vec<f64>) -> Rc<[f64]> {
        self.clock += 1;
        if let Some((row, stamp)) = self.rows.get_mut(&i) {
            *stamp = self.clock;
            self.hits += 1;
            return Rc::clone(row);
        }
        self.misses += 1;
        if self.rows.len() >= self.capacity {
            // O(capacity) eviction scan; a miss already costs O(n d).
            let oldest = self
                .rows
                .iter()
                .min_by_key(|(_, (_, stamp))| *stamp)
                .map(|(&k, _)| k);
            if let Some(k) = oldest {
                self.rows.remove(&k);
            }
        }
        let row: Rc<[f64]> = fill().into();
        self.rows.insert(i, (Rc::clone(&row), self.clock));
        row
    }

    pub fn stats(&self) -> (u64, u64) {
        (self.hits, self.misses)
    }
}
