//! Bit-exact Gimli permutation and Gimli-24-Cipher with per-round hooks.

pub mod aead;
pub mod kat;
pub mod permutation;
pub mod state;

pub use aead::{
    aead_decrypt, aead_decrypt_hooked, aead_encrypt, aead_encrypt_with, init_state, AeadResult,
    Key, Nonce, KEY_BYTES, NONCE_BYTES, TAG_BYTES,
};
pub use permutation::{
    linear_layer, permute, permute_hooked, permute_until, permute_with, round, round_constant,
    sp_box, RoundOutOfRange, SpBoxVariant, INITIAL_BOUNDARY, ROUNDS,
};
pub use state::{GimliState, Row};
