//! Hypothesis enumeration and ranking (SIFA key recovery).
//!
//! For a single predicted bit the SEI is `((2c - N) / N)^2 / 2`, a monotone
//! function of `d = |2c - N|`, so hypotheses are ordered by the integer `d`.
//! Equal SEI therefore means equal `d`, independent of floating point.

use rayon::prelude::*;

use super::stats::bit_sei;
use crate::depend::{Hypothesis, HypothesisLayout, PreparedProgram, Target, WindowBit};
use crate::gimli::Nonce;

/// Hypothesis spaces above `2^MAX_ATTACK_PARAMS` are not enumerated.
pub const MAX_ATTACK_PARAMS: usize = 26;
/// Scores closer than this are reported as tied.
pub const TIE_EPSILON: f64 = 1.0 / (1u64 << 40) as f64;

const CHUNK: u64 = 1 << 12;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AttackError {
    #[error("no traces to attack")]
    NoTraces,
    #[error("{params} parameters ({target}) exceed the enumeration limit of {max}")]
    TooManyParameters {
        target: String,
        params: usize,
        max: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttackOptions {
    /// Bit value expected to dominate among ineffective traces. Breaks the
    /// tie between a hypothesis and its complement-predicting twin.
    pub bias_hint: Option<bool>,
    /// Number of top-ranked hypotheses kept in a report.
    pub keep: usize,
}

impl Default for AttackOptions {
    fn default() -> Self {
        AttackOptions {
            bias_hint: None,
            keep: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypothesisScore {
    pub index: u64,
    /// Traces on which the hypothesis predicts a 1.
    pub ones: u64,
    pub n: u64,
    pub sei: f64,
}

impl HypothesisScore {
    pub fn new(index: u64, ones: u64, n: u64) -> Self {
        HypothesisScore {
            index,
            ones,
            n,
            sei: bit_sei(ones, n),
        }
    }

    pub fn hypothesis(&self) -> Hypothesis {
        Hypothesis(self.index)
    }
}

/// Sort key: larger is better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Key {
    d: u64,
    hint_ok: bool,
    neg_index: std::cmp::Reverse<u64>,
}

fn key(index: u64, ones: u64, n: u64, hint: Option<bool>) -> Key {
    let d = (2 * ones).abs_diff(n);
    let hint_ok = match hint {
        None => true,
        Some(v) => 2 * ones != n && (2 * ones > n) == v,
    };
    Key {
        d,
        hint_ok,
        neg_index: std::cmp::Reverse(index),
    }
}

/// Orders scores best first: SEI descending, then agreement with the bias
/// hint, then ascending index.
pub fn rank_scores(scores: &mut [HypothesisScore], hint: Option<bool>) {
    scores.sort_unstable_by_key(|s| std::cmp::Reverse(key(s.index, s.ones, s.n, hint)));
}

#[derive(Debug, Clone, PartialEq)]
pub struct BitReport {
    pub target: Target,
    pub parameter_count: usize,
    pub n_used: u64,
    /// Best hypotheses, best first (at most `keep`).
    pub ranked: Vec<HypothesisScore>,
    /// Hypotheses whose SEI is within [`TIE_EPSILON`] of the maximum, best first.
    pub best_set: Vec<HypothesisScore>,
}

impl BitReport {
    pub fn top(&self) -> Hypothesis {
        self.ranked[0].hypothesis()
    }

    pub fn tie_count(&self) -> usize {
        self.best_set.len()
    }

    pub fn in_best_set(&self, h: Hypothesis) -> bool {
        self.best_set.iter().any(|s| s.index == h.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackReport {
    pub bits: Vec<BitReport>,
}

fn check_space(target: &Target, layout: &HypothesisLayout) -> Result<u64, AttackError> {
    let p = layout.parameter_count();
    if p > MAX_ATTACK_PARAMS {
        return Err(AttackError::TooManyParameters {
            target: target.to_string(),
            params: p,
            max: MAX_ATTACK_PARAMS,
        });
    }
    Ok(1u64 << p)
}

/// Ones count of every hypothesis over all prepared nonces.
pub fn score_all(prepared: &PreparedProgram) -> Vec<u64> {
    let space = 1u64 << prepared.param_count();
    let chunks = space.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut scratch = prepared.scratch();
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(space);
            (lo..hi)
                .map(|h| prepared.count_ones(h, &mut scratch))
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Ranks every hypothesis of one window bit against `nonces`.
pub fn attack_bit(
    bit: &WindowBit,
    nonces: &[Nonce],
    opts: &AttackOptions,
) -> Result<BitReport, AttackError> {
    if nonces.is_empty() {
        return Err(AttackError::NoTraces);
    }
    check_space(&bit.target, &bit.layout)?;
    let prepared = bit.layout.program().prepare(nonces);
    let n = nonces.len() as u64;
    let ones = score_all(&prepared);

    let best_d = ones.iter().map(|&c| (2 * c).abs_diff(n)).max().unwrap_or(0);
    let max_sei = bit_sei((n + best_d) / 2, n);
    let mut best_set: Vec<HypothesisScore> = ones
        .iter()
        .enumerate()
        .filter(|(_, &c)| (2 * c).abs_diff(n) + 2 >= best_d)
        .map(|(i, &c)| HypothesisScore::new(i as u64, c, n))
        .filter(|s| (max_sei - s.sei).abs() <= TIE_EPSILON)
        .collect();
    rank_scores(&mut best_set, opts.bias_hint);

    let keep = opts.keep.max(1);
    let mut idx: Vec<u64> = (0..ones.len() as u64).collect();
    let cmp = |a: &u64, b: &u64| {
        key(*b, ones[*b as usize], n, opts.bias_hint).cmp(&key(
            *a,
            ones[*a as usize],
            n,
            opts.bias_hint,
        ))
    };
    if idx.len() > keep {
        idx.select_nth_unstable_by(keep - 1, cmp);
        idx.truncate(keep);
    }
    idx.sort_unstable_by(cmp);
    let ranked = idx
        .into_iter()
        .map(|i| HypothesisScore::new(i, ones[i as usize], n))
        .collect();

    Ok(BitReport {
        target: bit.target,
        parameter_count: bit.layout.parameter_count(),
        n_used: n,
        ranked,
        best_set,
    })
}

/// 1-based position of `h` in the full ranking.
pub fn rank_of(
    bit: &WindowBit,
    nonces: &[Nonce],
    h: Hypothesis,
    opts: &AttackOptions,
) -> Result<u64, AttackError> {
    if nonces.is_empty() {
        return Err(AttackError::NoTraces);
    }
    check_space(&bit.target, &bit.layout)?;
    let prepared = bit.layout.program().prepare(nonces);
    let n = nonces.len() as u64;
    let ones = score_all(&prepared);
    let kh = key(h.0, ones[h.0 as usize], n, opts.bias_hint);
    let better = ones
        .par_iter()
        .enumerate()
        .filter(|(i, &c)| key(*i as u64, c, n, opts.bias_hint) > kh)
        .count();
    Ok(better as u64 + 1)
}

/// Attacks every bit of the window independently.
pub fn attack(
    window: &[WindowBit],
    nonces: &[Nonce],
    opts: &AttackOptions,
) -> Result<AttackReport, AttackError> {
    if nonces.is_empty() {
        return Err(AttackError::NoTraces);
    }
    let bits = window
        .iter()
        .map(|b| attack_bit(b, nonces, opts))
        .collect::<Result<_, _>>()?;
    Ok(AttackReport { bits })
}

/// One prefix of an advantage / SEI curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub n_used: u64,
    pub top: u64,
    /// Parameter bits of the top hypothesis that match the truth.
    pub advantage: usize,
    pub sei_correct: f64,
    pub sei_best_wrong: f64,
    /// Hypotheses sharing the maximal SEI.
    pub tie_size: u64,
    pub truth_in_tie: bool,
}

#[derive(Clone, Copy)]
struct Summary {
    best: Option<(Key, u64)>,
    best_d: u64,
    tie: u64,
    wrong_d: Option<u64>,
}

impl Summary {
    const EMPTY: Summary = Summary {
        best: None,
        best_d: 0,
        tie: 0,
        wrong_d: None,
    };

    fn add(&mut self, k: Key, index: u64, is_truth: bool) {
        if self.best.is_none_or(|(b, _)| k > b) {
            self.best = Some((k, index));
        }
        match k.d.cmp(&self.best_d) {
            std::cmp::Ordering::Greater => {
                self.best_d = k.d;
                self.tie = 1;
            }
            std::cmp::Ordering::Equal => self.tie += 1,
            std::cmp::Ordering::Less => {}
        }
        if !is_truth {
            self.wrong_d = Some(self.wrong_d.map_or(k.d, |w| w.max(k.d)));
        }
    }

    fn merge(mut self, o: Summary) -> Summary {
        if let Some((k, i)) = o.best {
            if self.best.is_none_or(|(b, _)| k > b) {
                self.best = Some((k, i));
            }
        }
        match o.best_d.cmp(&self.best_d) {
            std::cmp::Ordering::Greater => {
                self.best_d = o.best_d;
                self.tie = o.tie;
            }
            std::cmp::Ordering::Equal => self.tie += o.tie,
            std::cmp::Ordering::Less => {}
        }
        self.wrong_d = match (self.wrong_d, o.wrong_d) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        self
    }
}

/// Attack results on the prefixes `step, 2*step, ...` (and the full set)
/// of `nonces`, in one pass over the hypotheses.
pub fn curve(
    bit: &WindowBit,
    nonces: &[Nonce],
    truth: Hypothesis,
    step: usize,
    opts: &AttackOptions,
) -> Result<Vec<CurvePoint>, AttackError> {
    if nonces.is_empty() {
        return Err(AttackError::NoTraces);
    }
    let space = check_space(&bit.target, &bit.layout)?;
    let step = step.max(1);
    let mut prefixes: Vec<usize> = (1..)
        .map(|i| i * step)
        .take_while(|&n| n <= nonces.len())
        .collect();
    if prefixes.last() != Some(&nonces.len()) {
        prefixes.push(nonces.len());
    }
    let prepared = bit.layout.program().prepare(nonces);
    let params = bit.layout.parameter_count();

    let chunks = space.div_ceil(CHUNK);
    let summaries = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut scratch = prepared.scratch();
            let mut out = vec![0u64; prepared.words()];
            let mut sums = vec![Summary::EMPTY; prefixes.len()];
            let lo = c * CHUNK;
            for h in lo..(lo + CHUNK).min(space) {
                let counts = prepared.count_ones_prefixes(h, &mut scratch, &mut out, &prefixes);
                for ((s, &c), &n) in sums.iter_mut().zip(&counts).zip(&prefixes) {
                    s.add(key(h, c, n as u64, opts.bias_hint), h, h == truth.0);
                }
            }
            sums
        })
        .reduce(
            || vec![Summary::EMPTY; prefixes.len()],
            |a, b| a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect(),
        );

    let mut scratch = prepared.scratch();
    let mut out = vec![0u64; prepared.words()];
    let truth_counts = prepared.count_ones_prefixes(truth.0, &mut scratch, &mut out, &prefixes);

    Ok(prefixes
        .iter()
        .zip(summaries)
        .zip(truth_counts)
        .map(|((&n, s), tc)| {
            let n = n as u64;
            let (_, top) = s.best.expect("non-empty hypothesis space");
            let truth_d = (2 * tc).abs_diff(n);
            CurvePoint {
                n_used: n,
                top,
                advantage: Hypothesis(top).matching_params(&truth, params),
                sei_correct: bit_sei(tc, n),
                sei_best_wrong: s.wrong_d.map_or(0.0, |d| bit_sei((n + d) / 2, n)),
                tie_size: s.tie,
                truth_in_tie: truth_d == s.best_d,
            }
        })
        .collect())
}

/// `(n_used, advantage)` per prefix.
pub fn advantage_curve(
    bit: &WindowBit,
    nonces: &[Nonce],
    truth: Hypothesis,
    step: usize,
    opts: &AttackOptions,
) -> Result<Vec<(u64, usize)>, AttackError> {
    Ok(curve(bit, nonces, truth, step, opts)?
        .into_iter()
        .map(|p| (p.n_used, p.advantage))
        .collect())
}

/// `(n_used, sei_correct, sei_best_wrong)` per prefix.
pub fn sei_curve(
    bit: &WindowBit,
    nonces: &[Nonce],
    truth: Hypothesis,
    step: usize,
) -> Result<Vec<(u64, f64, f64)>, AttackError> {
    Ok(curve(bit, nonces, truth, step, &AttackOptions::default())?
        .into_iter()
        .map(|p| (p.n_used, p.sei_correct, p.sei_best_wrong))
        .collect())
}
