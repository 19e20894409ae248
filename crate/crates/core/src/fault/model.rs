//! The six fault models and their per-bit transition matrices.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FaultModel {
    StuckAt0,
    RandomAnd,
    RandomOr,
    BitFlip,
    RandomFault,
    /// Each bit independently: a 1 becomes 0 with `p10`, a 0 becomes 1 with `p01`.
    ProbabilisticBitFlip {
        p10: f64,
        p01: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseModelError {
    #[error(
        "unknown fault model `{0}` (expected stuck-at-0, random-and, random-or, bit-flip, random-fault or prob-bitflip[:p10,p01])"
    )]
    Unknown(String),
    #[error("bad probability `{0}`: expected a number or fraction in [0, 1]")]
    BadProbability(String),
}

impl FaultModel {
    /// Biased bit-flip: `1 -> 0` with 2/3, `0 -> 1` with 1/3.
    pub const BIASED_BITFLIP: FaultModel = FaultModel::ProbabilisticBitFlip {
        p10: 2.0 / 3.0,
        p01: 1.0 / 3.0,
    };

    pub const ALL_BASIC: [FaultModel; 5] = [
        FaultModel::StuckAt0,
        FaultModel::RandomAnd,
        FaultModel::RandomOr,
        FaultModel::BitFlip,
        FaultModel::RandomFault,
    ];

    pub fn probabilistic(p10: f64, p01: f64) -> Option<Self> {
        ((0.0..=1.0).contains(&p10) && (0.0..=1.0).contains(&p01))
            .then_some(FaultModel::ProbabilisticBitFlip { p10, p01 })
    }

    /// `m[s][s']` for one bit.
    pub fn bit_matrix(&self) -> [[f64; 2]; 2] {
        match *self {
            FaultModel::StuckAt0 => [[1.0, 0.0], [1.0, 0.0]],
            FaultModel::RandomAnd => [[1.0, 0.0], [0.5, 0.5]],
            FaultModel::RandomOr => [[0.5, 0.5], [0.0, 1.0]],
            FaultModel::BitFlip => [[0.0, 1.0], [1.0, 0.0]],
            FaultModel::RandomFault => [[0.5, 0.5], [0.5, 0.5]],
            FaultModel::ProbabilisticBitFlip { p10, p01 } => [[1.0 - p01, p01], [p10, 1.0 - p10]],
        }
    }

    /// Probability that one uniformly distributed bit survives unchanged.
    pub fn bit_survival(&self) -> f64 {
        let m = self.bit_matrix();
        (m[0][0] + m[1][1]) / 2.0
    }

    /// Closed-form ineffectiveness rate of a `w`-bit fault.
    pub fn analytic_rate(&self, w: u32) -> f64 {
        self.bit_survival().powi(w as i32)
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, FaultModel::StuckAt0 | FaultModel::BitFlip)
    }

    /// Faults the low `w` bits of `value`.
    pub fn apply<R: Rng + ?Sized>(&self, value: u32, w: u32, rng: &mut R) -> u32 {
        let mask = width_mask(w);
        let value = value & mask;
        match *self {
            FaultModel::StuckAt0 => 0,
            FaultModel::RandomAnd => value & rng.random::<u32>() & mask,
            FaultModel::RandomOr => (value | rng.random::<u32>()) & mask,
            FaultModel::BitFlip => value ^ mask,
            FaultModel::RandomFault => rng.random::<u32>() & mask,
            FaultModel::ProbabilisticBitFlip { p10, p01 } => {
                let mut out = value;
                for i in 0..w {
                    let p = if (value >> i) & 1 == 1 { p10 } else { p01 };
                    if rng.random::<f64>() < p {
                        out ^= 1 << i;
                    }
                }
                out
            }
        }
    }

    pub fn name(&self) -> String {
        self.to_string()
    }
}

pub fn width_mask(w: u32) -> u32 {
    if w >= 32 {
        u32::MAX
    } else {
        (1u32 << w) - 1
    }
}

impl fmt::Display for FaultModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FaultModel::StuckAt0 => f.write_str("stuck-at-0"),
            FaultModel::RandomAnd => f.write_str("random-and"),
            FaultModel::RandomOr => f.write_str("random-or"),
            FaultModel::BitFlip => f.write_str("bit-flip"),
            FaultModel::RandomFault => f.write_str("random-fault"),
            FaultModel::ProbabilisticBitFlip { p10, p01 } => {
                write!(f, "prob-bitflip:{p10},{p01}")
            }
        }
    }
}

fn parse_probability(s: &str) -> Result<f64, ParseModelError> {
    let bad = || ParseModelError::BadProbability(s.to_string());
    let v = match s.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n.trim().parse().map_err(|_| bad())?;
            let d: f64 = d.trim().parse().map_err(|_| bad())?;
            n / d
        }
        None => s.trim().parse().map_err(|_| bad())?,
    };
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(bad())
    }
}

impl FromStr for FaultModel {
    type Err = ParseModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (head, params) = match s.split_once(':') {
            Some((h, p)) => (h, Some(p)),
            None => (s, None),
        };
        let model = match (head.to_ascii_lowercase().as_str(), params) {
            ("stuck-at-0" | "stuck-at0" | "stuckat0", None) => FaultModel::StuckAt0,
            ("random-and", None) => FaultModel::RandomAnd,
            ("random-or", None) => FaultModel::RandomOr,
            ("bit-flip" | "bitflip", None) => FaultModel::BitFlip,
            ("random-fault" | "random", None) => FaultModel::RandomFault,
            ("prob-bitflip", None) => FaultModel::BIASED_BITFLIP,
            ("prob-bitflip", Some(p)) => {
                let (a, b) = p
                    .split_once(',')
                    .ok_or_else(|| ParseModelError::BadProbability(p.to_string()))?;
                FaultModel::ProbabilisticBitFlip {
                    p10: parse_probability(a)?,
                    p01: parse_probability(b)?,
                }
            }
            _ => return Err(ParseModelError::Unknown(s.to_string())),
        };
        Ok(model)
    }
}
