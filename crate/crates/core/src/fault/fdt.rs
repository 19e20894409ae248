//! Fault distribution tables `p[s][s'] = P(S' = s' | S = s)`.

use rand::Rng;

use super::model::FaultModel;

/// Largest width for which an exact table may be built.
pub const MAX_EXACT_WIDTH: u32 = 16;
/// Largest width for a Monte-Carlo table (stored densely).
pub const MAX_ESTIMATE_WIDTH: u32 = 10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FdtError {
    #[error("width {w} is too large for an exact table (max {max}); use estimate_fdt or the analytic rate")]
    WidthTooLarge { w: u32, max: u32 },
    #[error("width must be at least 1")]
    ZeroWidth,
    #[error("at least one sample per input value is required")]
    NoSamples,
    #[error("no ineffective faults possible: the table's diagonal is zero")]
    NoIneffective,
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    /// Independent bits sharing one 2x2 matrix.
    Product([[f64; 2]; 2]),
    Dense(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fdt {
    w: u32,
    repr: Repr,
}

impl Fdt {
    pub fn width(&self) -> u32 {
        self.w
    }

    pub fn size(&self) -> usize {
        1usize << self.w
    }

    pub fn get(&self, s: usize, t: usize) -> f64 {
        match &self.repr {
            Repr::Product(m) => (0..self.w).fold(1.0, |acc, i| acc * m[(s >> i) & 1][(t >> i) & 1]),
            Repr::Dense(p) => p[s * self.size() + t],
        }
    }

    pub fn row(&self, s: usize) -> Vec<f64> {
        (0..self.size()).map(|t| self.get(s, t)).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.size()).map(|s| self.get(s, s)).collect()
    }

    /// All rows as a dense matrix; intended for small widths.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.size()).map(|s| self.row(s)).collect()
    }
}

pub fn build_fdt(model: &FaultModel, w: u32) -> Result<Fdt, FdtError> {
    if w == 0 {
        return Err(FdtError::ZeroWidth);
    }
    if w > MAX_EXACT_WIDTH {
        return Err(FdtError::WidthTooLarge {
            w,
            max: MAX_EXACT_WIDTH,
        });
    }
    Ok(Fdt {
        w,
        repr: Repr::Product(model.bit_matrix()),
    })
}

pub fn estimate_fdt<R: Rng + ?Sized>(
    model: &FaultModel,
    w: u32,
    samples: u64,
    rng: &mut R,
) -> Result<Fdt, FdtError> {
    if w == 0 {
        return Err(FdtError::ZeroWidth);
    }
    if w > MAX_ESTIMATE_WIDTH {
        return Err(FdtError::WidthTooLarge {
            w,
            max: MAX_ESTIMATE_WIDTH,
        });
    }
    if samples == 0 {
        return Err(FdtError::NoSamples);
    }
    let n = 1usize << w;
    let mut p = vec![0.0; n * n];
    let mut counts = vec![0u64; n];
    for s in 0..n {
        counts.iter_mut().for_each(|c| *c = 0);
        for _ in 0..samples {
            counts[model.apply(s as u32, w, rng) as usize] += 1;
        }
        for (t, &c) in counts.iter().enumerate() {
            p[s * n + t] = c as f64 / samples as f64;
        }
    }
    Ok(Fdt {
        w,
        repr: Repr::Dense(p),
    })
}

/// `sum_s p[s][s] / 2^w`, the ineffectiveness rate under a uniform prior.
pub fn ineffectiveness_rate(fdt: &Fdt) -> f64 {
    match &fdt.repr {
        Repr::Product(m) => ((m[0][0] + m[1][1]) / 2.0).powi(fdt.w as i32),
        Repr::Dense(_) => fdt.diagonal().iter().sum::<f64>() / fdt.size() as f64,
    }
}

/// Distribution of the value conditioned on the fault being ineffective.
pub fn diagonal_distribution(fdt: &Fdt) -> Result<Vec<f64>, FdtError> {
    let rate = ineffectiveness_rate(fdt);
    if rate == 0.0 {
        return Err(FdtError::NoIneffective);
    }
    let scale = fdt.size() as f64 * rate;
    Ok(fdt.diagonal().into_iter().map(|d| d / scale).collect())
}
