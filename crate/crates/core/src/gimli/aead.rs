//! Gimli-24-Cipher (the `gimli24v1` NIST submission).
//!
//! Byte layout, padding and domain separation follow the reference code:
//! data is XORed into the first 16 state bytes, the last partial block is
//! terminated by XORing `1` at its length, and byte 47 receives a `1` after
//! the associated data and again after the message.

use std::fmt;

use super::permutation::{permute_hooked, permute_with, SpBoxVariant};
use super::state::GimliState;

pub const KEY_BYTES: usize = 32;
pub const NONCE_BYTES: usize = 16;
pub const TAG_BYTES: usize = 16;
pub const RATE_BYTES: usize = 16;

const LAST_STATE_BYTE: usize = 47;

/// 256-bit key as words `k0..k7`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Key(pub [u32; 8]);

/// 128-bit nonce as words `n0..n3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Nonce(pub [u32; 4]);

// Keys stay out of debug output by default.
impl fmt::Debug for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Key(..)")
    }
}

impl Key {
    pub fn from_bytes(bytes: &[u8; KEY_BYTES]) -> Self {
        let mut w = [0u32; 8];
        for (w, c) in w.iter_mut().zip(bytes.chunks_exact(4)) {
            *w = u32::from_le_bytes([c[0], c[1], c[2], c[3]]);
        }
        Key(w)
    }

    pub fn to_bytes(&self) -> [u8; KEY_BYTES] {
        let mut out = [0u8; KEY_BYTES];
        for (c, w) in out.chunks_exact_mut(4).zip(self.0) {
            c.copy_from_slice(&w.to_le_bytes());
        }
        out
    }

    #[inline]
    pub fn bit(&self, word: usize, bit: u32) -> bool {
        (self.0[word] >> bit) & 1 == 1
    }

    pub fn flip_bit(&mut self, word: usize, bit: u32) {
        self.0[word] ^= 1 << bit;
    }
}

impl Nonce {
    pub fn from_bytes(bytes: &[u8; NONCE_BYTES]) -> Self {
        let mut w = [0u32; 4];
        for (w, c) in w.iter_mut().zip(bytes.chunks_exact(4)) {
            *w = u32::from_le_bytes([c[0], c[1], c[2], c[3]]);
        }
        Nonce(w)
    }

    pub fn to_bytes(&self) -> [u8; NONCE_BYTES] {
        let mut out = [0u8; NONCE_BYTES];
        for (c, w) in out.chunks_exact_mut(4).zip(self.0) {
            c.copy_from_slice(&w.to_le_bytes());
        }
        out
    }

    #[inline]
    pub fn bit(&self, word: usize, bit: u32) -> bool {
        (self.0[word] >> bit) & 1 == 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AeadResult {
    pub ciphertext: Vec<u8>,
    pub tag: [u8; TAG_BYTES],
}

/// Places the nonce in row `a` and the key in rows `b || c`.
pub fn init_state(key: &Key, nonce: &Nonce) -> GimliState {
    let mut s = GimliState::zero();
    s.a = nonce.0;
    s.b.copy_from_slice(&key.0[0..4]);
    s.c.copy_from_slice(&key.0[4..8]);
    s
}

fn absorb_ad(state: &mut GimliState, ad: &[u8], variant: SpBoxVariant) {
    let mut blocks = ad.chunks_exact(RATE_BYTES);
    for block in blocks.by_ref() {
        for (i, &b) in block.iter().enumerate() {
            state.xor_byte(i, b);
        }
        *state = permute_with(state, variant);
    }
    let rest = blocks.remainder();
    for (i, &b) in rest.iter().enumerate() {
        state.xor_byte(i, b);
    }
    state.xor_byte(rest.len(), 1);
    state.xor_byte(LAST_STATE_BYTE, 1);
    *state = permute_with(state, variant);
}

/// Init + first permutation; `hook` runs at every boundary of that permutation.
fn start<F>(key: &Key, nonce: &Nonce, variant: SpBoxVariant, hook: F) -> GimliState
where
    F: FnMut(u32, &mut GimliState),
{
    permute_hooked(&init_state(key, nonce), variant, hook)
}

pub fn aead_encrypt(key: &Key, nonce: &Nonce, ad: &[u8], msg: &[u8]) -> AeadResult {
    aead_encrypt_with(key, nonce, ad, msg, SpBoxVariant::Official)
}

pub fn aead_encrypt_with(
    key: &Key,
    nonce: &Nonce,
    ad: &[u8],
    msg: &[u8],
    variant: SpBoxVariant,
) -> AeadResult {
    let mut state = start(key, nonce, variant, |_, _| {});
    absorb_ad(&mut state, ad, variant);

    let mut ciphertext = Vec::with_capacity(msg.len());
    let mut blocks = msg.chunks_exact(RATE_BYTES);
    for block in blocks.by_ref() {
        for (i, &m) in block.iter().enumerate() {
            state.xor_byte(i, m);
            ciphertext.push(state.byte(i));
        }
        state = permute_with(&state, variant);
    }
    let rest = blocks.remainder();
    for (i, &m) in rest.iter().enumerate() {
        state.xor_byte(i, m);
        ciphertext.push(state.byte(i));
    }
    state.xor_byte(rest.len(), 1);
    state.xor_byte(LAST_STATE_BYTE, 1);
    state = permute_with(&state, variant);

    AeadResult {
        ciphertext,
        tag: squeeze_tag(&state),
    }
}

fn squeeze_tag(state: &GimliState) -> [u8; TAG_BYTES] {
    let mut tag = [0u8; TAG_BYTES];
    for (i, t) in tag.iter_mut().enumerate() {
        *t = state.byte(i);
    }
    tag
}

/// Returns the plaintext, or `None` (the ⊥ output) if the tag does not match.
pub fn aead_decrypt(
    key: &Key,
    nonce: &Nonce,
    ad: &[u8],
    ct: &[u8],
    tag: &[u8; TAG_BYTES],
) -> Option<Vec<u8>> {
    aead_decrypt_hooked(key, nonce, ad, ct, tag, SpBoxVariant::Official, |_, _| {})
}

/// Decryption with `hook` applied at the round boundaries of the first
/// permutation only (the one right after key/nonce loading).
pub fn aead_decrypt_hooked<F>(
    key: &Key,
    nonce: &Nonce,
    ad: &[u8],
    ct: &[u8],
    tag: &[u8; TAG_BYTES],
    variant: SpBoxVariant,
    hook: F,
) -> Option<Vec<u8>>
where
    F: FnMut(u32, &mut GimliState),
{
    let mut state = start(key, nonce, variant, hook);
    absorb_ad(&mut state, ad, variant);

    let mut plaintext = Vec::with_capacity(ct.len());
    let mut blocks = ct.chunks_exact(RATE_BYTES);
    for block in blocks.by_ref() {
        for (i, &c) in block.iter().enumerate() {
            plaintext.push(state.byte(i) ^ c);
            state.set_byte(i, c);
        }
        state = permute_with(&state, variant);
    }
    let rest = blocks.remainder();
    for (i, &c) in rest.iter().enumerate() {
        plaintext.push(state.byte(i) ^ c);
        state.set_byte(i, c);
    }
    state.xor_byte(rest.len(), 1);
    state.xor_byte(LAST_STATE_BYTE, 1);
    state = permute_with(&state, variant);

    if squeeze_tag(&state) == *tag {
        Some(plaintext)
    } else {
        None
    }
}
