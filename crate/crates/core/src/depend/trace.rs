//! Backward tracing of a state bit to the nonce/key/constant bits it depends on.

use std::collections::HashMap;
use std::fmt;

use super::expr::{BitExpr, BitRef, ExprBuilder, NodeId};
use crate::gimli::{permute_hooked, GimliState, Key, Nonce, Row, SpBoxVariant, ROUNDS};

/// Rounds whose input state can be traced.
pub const TRACEABLE_ROUNDS: [u32; 4] = [23, 22, 21, 20];

/// A bit of the state *before* round `round` of the first permutation,
/// i.e. right after round `round + 1` completed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Target {
    pub round: u32,
    pub row: Row,
    pub col: usize,
    pub bit: u32,
}

impl Target {
    pub fn new(round: u32, row: Row, col: usize, bit: u32) -> Self {
        Target {
            round,
            row,
            col,
            bit,
        }
    }

    /// The bit attacked in the reference experiments, `b_0` bit 7.
    pub fn b07(round: u32) -> Self {
        Target::new(round, Row::B, 0, 7)
    }

    /// Round boundary at which the targeted value is observable.
    pub fn boundary(&self) -> u32 {
        self.round + 1
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}_{},{}", self.row, self.round, self.col, self.bit)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error("cannot trace the state before round {0}; supported rounds are 23, 22, 21 and 20")]
    UnsupportedRound(u32),
    #[error("column {0} out of range")]
    BadColumn(usize),
    #[error("bit {0} out of range")]
    BadBit(u32),
}

fn check(target: &Target) -> Result<(), TraceError> {
    if !TRACEABLE_ROUNDS.contains(&target.round) {
        return Err(TraceError::UnsupportedRound(target.round));
    }
    if target.col > 3 {
        return Err(TraceError::BadColumn(target.col));
    }
    if target.bit > 31 {
        return Err(TraceError::BadBit(target.bit));
    }
    Ok(())
}

/// Walks the rounds backwards, memoizing each `(round, row, col, bit)`.
struct Tracer {
    b: ExprBuilder,
    memo: HashMap<(u32, Row, usize, u32), NodeId>,
    c_shift: u32,
}

impl Tracer {
    fn new(variant: SpBoxVariant) -> Self {
        Tracer {
            b: ExprBuilder::new(),
            memo: HashMap::new(),
            c_shift: variant.c_shift(),
        }
    }

    /// Bit `i` of word `(row, col)` before round `r`. `r == 24` is the input.
    fn before(&mut self, r: u32, row: Row, col: usize, i: u32) -> NodeId {
        if let Some(&id) = self.memo.get(&(r, row, col, i)) {
            return id;
        }
        let id = if r == ROUNDS {
            match row {
                Row::A => self.b.leaf(BitRef::nonce(col, i)),
                Row::B => self.b.leaf(BitRef::key(col, i)),
                Row::C => self.b.leaf(BitRef::key(4 + col, i)),
            }
        } else {
            self.after_round(r, row, col, i)
        };
        self.memo.insert((r, row, col, i), id);
        id
    }

    /// Output of round `q = r + 1` in terms of the state before round `q`.
    fn after_round(&mut self, r: u32, row: Row, col: usize, i: u32) -> NodeId {
        let q = r + 1;
        // Undo the linear layer: which SP-box output lands here.
        let src_col = match (row, q & 3) {
            (Row::A, 0) => col ^ 1,
            (Row::A, 2) => col ^ 2,
            _ => col,
        };
        let out = self.sp_box_output(q, row, src_col, i);
        if row == Row::A && col == 0 && q & 3 == 0 {
            let k = if q == ROUNDS {
                self.b.leaf(BitRef::constant(i))
            } else {
                let v = (crate::gimli::round_constant(q) >> i) & 1 == 1;
                self.b.lit(v)
            };
            self.b.xor(&[out, k])
        } else {
            out
        }
    }

    // x = a <<< 24, y = b <<< 9, z = c, all before round q.
    fn x(&mut self, q: u32, col: usize, i: u32) -> NodeId {
        self.before(q, Row::A, col, (i + 8) % 32)
    }

    fn y(&mut self, q: u32, col: usize, i: u32) -> NodeId {
        self.before(q, Row::B, col, (i + 23) % 32)
    }

    fn z(&mut self, q: u32, col: usize, i: u32) -> NodeId {
        self.before(q, Row::C, col, i)
    }

    fn sp_box_output(&mut self, q: u32, row: Row, col: usize, i: u32) -> NodeId {
        match row {
            // x ^ (z << 1) ^ ((y & z) << s)
            Row::C => {
                let x = self.x(q, col, i);
                let z1 = if i >= 1 {
                    self.z(q, col, i - 1)
                } else {
                    self.b.lit(false)
                };
                let s = self.c_shift;
                let yz = if i >= s {
                    let y = self.y(q, col, i - s);
                    let z = self.z(q, col, i - s);
                    self.b.and(y, z)
                } else {
                    self.b.lit(false)
                };
                self.b.xor(&[x, z1, yz])
            }
            // y ^ x ^ ((x | z) << 1)
            Row::B => {
                let y = self.y(q, col, i);
                let x = self.x(q, col, i);
                let xz = if i >= 1 {
                    let x = self.x(q, col, i - 1);
                    let z = self.z(q, col, i - 1);
                    self.b.or(x, z)
                } else {
                    self.b.lit(false)
                };
                self.b.xor(&[y, x, xz])
            }
            // z ^ y ^ ((x & y) << 3)
            Row::A => {
                let z = self.z(q, col, i);
                let y = self.y(q, col, i);
                let xy = if i >= 3 {
                    let x = self.x(q, col, i - 3);
                    let y = self.y(q, col, i - 3);
                    self.b.and(x, y)
                } else {
                    self.b.lit(false)
                };
                self.b.xor(&[z, y, xy])
            }
        }
    }
}

/// Exact expression of `target` over nonce, key and round-constant bits.
pub fn trace(target: &Target, variant: SpBoxVariant) -> Result<BitExpr, TraceError> {
    check(target)?;
    let mut t = Tracer::new(variant);
    let root = t.before(target.round, target.row, target.col, target.bit);
    Ok(t.b.extract(root))
}

/// Ground truth: runs the real permutation and reads the target bit.
pub fn oracle_bit(key: &Key, nonce: &Nonce, target: &Target, variant: SpBoxVariant) -> bool {
    oracle_state(key, nonce, target.boundary(), variant).bit(target.row, target.col, target.bit)
}

/// State of the first permutation right after round `boundary` completed.
pub fn oracle_state(key: &Key, nonce: &Nonce, boundary: u32, variant: SpBoxVariant) -> GimliState {
    let mut seen = GimliState::zero();
    permute_hooked(&crate::gimli::init_state(key, nonce), variant, |b, s| {
        if b == boundary {
            seen = *s;
        }
    });
    seen
}
