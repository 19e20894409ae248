//! The Gimli permutation, round by round.
//!
//! Rounds are numbered downwards from 24 to 1. A *boundary* is the point right
//! after a round completed; boundary 25 is the freshly initialized state.

use std::fmt;
use std::str::FromStr;

use super::state::GimliState;

pub const ROUNDS: u32 = 24;

/// Boundary value passed to hooks for the state before round 24.
pub const INITIAL_BOUNDARY: u32 = ROUNDS + 1;

const ROUND_CONSTANT_BASE: u32 = 0x9e37_7900;

/// Which shift the c-row update of the SP-box uses for its non-linear term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SpBoxVariant {
    /// The published Gimli SP-box, `(y & z) << 2`.
    #[default]
    Official,
    /// `(y & z) << 3`, as printed in some write-ups of the algorithm.
    Paper,
}

impl SpBoxVariant {
    #[inline]
    pub const fn c_shift(self) -> u32 {
        match self {
            SpBoxVariant::Official => 2,
            SpBoxVariant::Paper => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SpBoxVariant::Official => "official",
            SpBoxVariant::Paper => "paper",
        }
    }
}

impl fmt::Display for SpBoxVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown sp-box variant `{0}` (expected official or paper)")]
pub struct ParseSpBoxError(pub String);

impl FromStr for SpBoxVariant {
    type Err = ParseSpBoxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "official" => Ok(SpBoxVariant::Official),
            "paper" => Ok(SpBoxVariant::Paper),
            other => Err(ParseSpBoxError(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("round {0} is outside 1..=24")]
pub struct RoundOutOfRange(pub u32);

/// The constant XORed into `a0` at rounds divisible by four.
///
/// The low byte of the base is zero, so XOR and OR with the round number agree.
#[inline]
pub const fn round_constant(round: u32) -> u32 {
    ROUND_CONSTANT_BASE ^ round
}

/// SP-box on one column. Returns the new `(a, b, c)`.
#[inline]
pub fn sp_box(a: u32, b: u32, c: u32, variant: SpBoxVariant) -> (u32, u32, u32) {
    let x = a.rotate_left(24);
    let y = b.rotate_left(9);
    let z = c;
    let new_c = x ^ (z << 1) ^ ((y & z) << variant.c_shift());
    let new_b = y ^ x ^ ((x | z) << 1);
    let new_a = z ^ y ^ ((x & y) << 3);
    (new_a, new_b, new_c)
}

/// Swaps and constant addition of round `round`.
pub fn linear_layer(state: &GimliState, round: u32) -> Result<GimliState, RoundOutOfRange> {
    if !(1..=ROUNDS).contains(&round) {
        return Err(RoundOutOfRange(round));
    }
    let mut s = *state;
    apply_linear_layer(&mut s, round);
    Ok(s)
}

#[inline]
fn apply_linear_layer(s: &mut GimliState, round: u32) {
    match round & 3 {
        0 => {
            s.a.swap(0, 1);
            s.a.swap(2, 3);
            s.a[0] ^= round_constant(round);
        }
        2 => {
            s.a.swap(0, 2);
            s.a.swap(1, 3);
        }
        _ => {}
    }
}

/// One full round: SP-box on every column, then the linear layer.
#[inline]
pub fn round(state: &mut GimliState, round: u32, variant: SpBoxVariant) {
    for j in 0..4 {
        let (a, b, c) = sp_box(state.a[j], state.b[j], state.c[j], variant);
        state.a[j] = a;
        state.b[j] = b;
        state.c[j] = c;
    }
    apply_linear_layer(state, round);
}

/// Runs rounds `24` down to `last` (inclusive).
#[inline]
pub fn permute_until(state: &mut GimliState, last: u32, variant: SpBoxVariant) {
    for r in (last..=ROUNDS).rev() {
        round(state, r, variant);
    }
}

pub fn permute(state: &GimliState) -> GimliState {
    permute_with(state, SpBoxVariant::Official)
}

pub fn permute_with(state: &GimliState, variant: SpBoxVariant) -> GimliState {
    let mut s = *state;
    permute_until(&mut s, 1, variant);
    s
}

/// Permutes with `hook(boundary, &mut state)` called at every round boundary,
/// starting with [`INITIAL_BOUNDARY`] and ending after round 1 (boundary 1).
pub fn permute_hooked<F>(state: &GimliState, variant: SpBoxVariant, mut hook: F) -> GimliState
where
    F: FnMut(u32, &mut GimliState),
{
    let mut s = *state;
    hook(INITIAL_BOUNDARY, &mut s);
    for r in (1..=ROUNDS).rev() {
        round(&mut s, r, variant);
        hook(r, &mut s);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Input of the designers' reference test: `i^3 + i * 0x9e3779b9`.
    fn reference_input() -> GimliState {
        let mut w = [0u32; 12];
        for (i, v) in w.iter_mut().enumerate() {
            let i = i as u32;
            *v = i
                .wrapping_mul(i)
                .wrapping_mul(i)
                .wrapping_add(i.wrapping_mul(0x9e37_79b9));
        }
        GimliState::from_words(w)
    }

    #[test]
    fn reference_test_vector() {
        let out = permute(&reference_input());
        assert_eq!(
            out.to_words(),
            [
                0xba11c85a, 0x91bad119, 0x380ce880, 0xd24c2c68, 0x3eceffea, 0x277a921c, 0x4f73a0bd,
                0xda5a9cd8, 0x84b673f0, 0x34e52ff7, 0x9e2bef49, 0xf41bb8d6,
            ]
        );
    }

    #[test]
    fn sp_box_zero_is_fixed() {
        assert_eq!(sp_box(0, 0, 0, SpBoxVariant::Official), (0, 0, 0));
        assert_eq!(sp_box(0, 0, 0, SpBoxVariant::Paper), (0, 0, 0));
    }

    #[test]
    fn sp_box_single_bit() {
        // x = 1 <<< 24 = 0x0100_0000, y = z = 0.
        // c = x, b = x ^ (x << 1), a = 0.
        assert_eq!(
            sp_box(1, 0, 0, SpBoxVariant::Official),
            (0, 0x0300_0000, 0x0100_0000)
        );
    }

    #[test]
    fn variants_differ_only_in_c_shift() {
        let (a0, b0, c0) = sp_box(
            0xdead_beef,
            0x0123_4567,
            0xffff_0000,
            SpBoxVariant::Official,
        );
        let (a1, b1, c1) = sp_box(0xdead_beef, 0x0123_4567, 0xffff_0000, SpBoxVariant::Paper);
        assert_eq!((a0, b0), (a1, b1));
        assert_ne!(c0, c1);
    }

    #[test]
    fn linear_layer_cases() {
        let mut s = GimliState::zero();
        s.a = [10, 11, 12, 13];
        s.b = [1, 2, 3, 4];
        assert_eq!(linear_layer(&s, 23).unwrap(), s);
        assert_eq!(linear_layer(&s, 22).unwrap().a, [12, 13, 10, 11]);
        let small = linear_layer(&s, 20).unwrap();
        assert_eq!(small.a, [11 ^ round_constant(20), 10, 13, 12]);
        assert_eq!(small.b, s.b);

        let z = linear_layer(&GimliState::zero(), 24).unwrap();
        assert_eq!(z.a, [0x9e37_7918, 0, 0, 0]);
        assert_eq!(z.b, [0; 4]);
        assert_eq!(z.c, [0; 4]);

        assert_eq!(linear_layer(&s, 0), Err(RoundOutOfRange(0)));
        assert_eq!(linear_layer(&s, 25), Err(RoundOutOfRange(25)));
    }

    #[test]
    fn round_constant_xor_equals_or() {
        for r in (4..=24).step_by(4) {
            assert_eq!(round_constant(r), 0x9e37_7900 | r);
        }
    }

    #[test]
    fn composed_rounds_match_permute() {
        let input = reference_input();
        let mut s = input;
        for r in (1..=24).rev() {
            for j in 0..4 {
                let (a, b, c) = sp_box(s.a[j], s.b[j], s.c[j], SpBoxVariant::Official);
                s.a[j] = a;
                s.b[j] = b;
                s.c[j] = c;
            }
            s = linear_layer(&s, r).unwrap();
        }
        assert_eq!(s, permute(&input));
    }

    #[test]
    fn hook_sees_every_boundary_in_order() {
        let mut seen = Vec::new();
        permute_hooked(&GimliState::zero(), SpBoxVariant::Official, |b, _| {
            seen.push(b)
        });
        let expected: Vec<u32> = (1..=25).rev().collect();
        assert_eq!(seen, expected);
    }

    #[test]
    fn hooked_fault_matches_manual_loop() {
        let input = reference_input();
        let hooked = permute_hooked(&input, SpBoxVariant::Official, |b, s| {
            if b == 23 {
                s.b[0] &= !0xff;
            }
        });
        let mut manual = input;
        for r in (1..=24).rev() {
            round(&mut manual, r, SpBoxVariant::Official);
            if r == 23 {
                manual.b[0] &= !0xff;
            }
        }
        assert_eq!(hooked, manual);
        assert_ne!(hooked, permute(&input));
    }

    proptest! {
        #[test]
        fn identity_hook_equals_permute(words in proptest::array::uniform12(any::<u32>())) {
            let s = GimliState::from_words(words);
            prop_assert_eq!(permute_hooked(&s, SpBoxVariant::Official, |_, _| {}), permute(&s));
            prop_assert_eq!(permute(&s), permute(&s));
        }

        #[test]
        fn small_swap_is_an_involution(a in proptest::array::uniform4(any::<u32>())) {
            let mut s = GimliState::zero();
            s.a = a;
            let once = linear_layer(&s, 24).unwrap();
            let mut undo = once;
            undo.a[0] ^= round_constant(24);
            let twice = linear_layer(&undo, 24).unwrap();
            let mut restored = twice;
            restored.a[0] ^= round_constant(24);
            prop_assert_eq!(restored.a, a);
        }
    }
}
