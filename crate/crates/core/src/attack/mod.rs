//! Distinguishers and the SIFA key-recovery loop.

pub mod sifa;
pub mod stats;

pub use sifa::{
    advantage_curve, attack, attack_bit, curve, rank_of, rank_scores, score_all, sei_curve,
    AttackError, AttackOptions, AttackReport, BitReport, CurvePoint, HypothesisScore,
    MAX_ATTACK_PARAMS, TIE_EPSILON,
};
pub use stats::{bit_sei, chi_squared, sei, DistributionCounts, StatError};
