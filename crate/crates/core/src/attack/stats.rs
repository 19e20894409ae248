//! Pearson chi-squared and squared Euclidean imbalance.

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DistributionCounts {
    pub bins: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StatError {
    #[error("expected distribution has a zero entry at {0}")]
    ZeroExpected(usize),
    #[error("dimension mismatch: {observed} observed bins, {expected} expected")]
    Dimension { observed: usize, expected: usize },
    #[error("no observations")]
    Empty,
}

impl DistributionCounts {
    pub fn new(bins: Vec<u64>) -> Self {
        DistributionCounts { bins }
    }

    /// Counts of a single bit: `(zeros, ones)`.
    pub fn bit(ones: u64, total: u64) -> Self {
        DistributionCounts {
            bins: vec![total - ones, ones],
        }
    }

    pub fn from_values(values: impl IntoIterator<Item = usize>, size: usize) -> Self {
        let mut bins = vec![0; size];
        for v in values {
            bins[v] += 1;
        }
        DistributionCounts { bins }
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().sum()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.total() as f64;
        self.bins.iter().map(|&c| c as f64 / n).collect()
    }
}

/// `N * sum (a(x) - b(x))^2 / b(x)` with `a` the observed frequencies.
pub fn chi_squared(observed: &DistributionCounts, expected: &[f64]) -> Result<f64, StatError> {
    if observed.bins.len() != expected.len() {
        return Err(StatError::Dimension {
            observed: observed.bins.len(),
            expected: expected.len(),
        });
    }
    if let Some(i) = expected.iter().position(|&b| b <= 0.0) {
        return Err(StatError::ZeroExpected(i));
    }
    let n = observed.total();
    if n == 0 {
        return Err(StatError::Empty);
    }
    let sum: f64 = observed
        .frequencies()
        .iter()
        .zip(expected)
        .map(|(a, b)| (a - b) * (a - b) / b)
        .sum();
    Ok(n as f64 * sum)
}

/// `sum (a(x) - 1/|S|)^2`.
pub fn sei(observed: &DistributionCounts) -> Result<f64, StatError> {
    if observed.total() == 0 {
        return Err(StatError::Empty);
    }
    let u = 1.0 / observed.bins.len() as f64;
    Ok(observed
        .frequencies()
        .iter()
        .map(|a| (a - u) * (a - u))
        .sum())
}

/// SEI of one bit with `ones` of `total` observations set; `0` when empty.
pub fn bit_sei(ones: u64, total: u64) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let (p0, p1) = ((total - ones) as f64 / n, ones as f64 / n);
    (p0 - 0.5) * (p0 - 0.5) + (p1 - 0.5) * (p1 - 0.5)
}
