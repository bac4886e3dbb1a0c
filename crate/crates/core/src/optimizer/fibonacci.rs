/// Walk over the sequence 1, 2, 3, 5, 8, ... capped at a maximum value.
/// `prev` of the first item is the first item and `next` of the cap is the cap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FibonacciIterator {
    items: Vec<usize>,
}

impl FibonacciIterator {
    pub fn new(cap: usize) -> Self {
        let mut items = vec![1, 2];
        loop {
            let n = items[items.len() - 1] + items[items.len() - 2];
            if n > cap {
                break;
            }
            items.push(n);
        }
        items.retain(|&v| v <= cap.max(1));
        Self { items }
    }

    pub fn items(&self) -> &[usize] {
        &self.items
    }

    pub fn cap(&self) -> usize {
        *self.items.last().expect("non-empty")
    }

    pub fn contains(&self, value: usize) -> bool {
        self.items.contains(&value)
    }

    /// Item at a one-based index, clamped to the sequence.
    pub fn state_by_index(&self, index: usize) -> usize {
        self.items[index.clamp(1, self.items.len()) - 1]
    }

    fn position(&self, value: usize) -> usize {
        self.items.iter().rposition(|&v| v <= value).unwrap_or(0)
    }

    pub fn next(&self, value: usize) -> usize {
        self.items[(self.position(value) + 1).min(self.items.len() - 1)]
    }

    pub fn prev(&self, value: usize) -> usize {
        self.items[self.position(value).saturating_sub(1)]
    }
}

impl Default for FibonacciIterator {
    fn default() -> Self {
        Self::new(55)
    }
}
