/// Priority functions over cells, evaluated from a cell's count and volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Priority {
    /// Statistically equivalent blocks: the cell's count.
    Seb,
    /// Support carving: `(1 - count / n) * volume`, large for big sparse cells.
    Spc,
}

impl Priority {
    /// `n` is the size of the whole sample (not of the cell).
    #[inline]
    pub fn value(self, count: u64, volume: f64, n: u64) -> f64 {
        match self {
            Priority::Seb => count as f64,
            Priority::Spc => {
                if n == 0 {
                    volume
                } else {
                    (1.0 - count as f64 / n as f64) * volume
                }
            }
        }
    }
}
