//! Gimli-Cipher fault-attack laboratory.
//!
//! * [`gimli`]: the permutation and AEAD, with hooks between rounds.
//! * [`fault`]: fault models, fault distribution tables, injection campaigns.
//! * [`depend`]: symbolic tracing of intermediate bits back to nonce/key bits.
//! * [`attack`]: SEI / chi-squared distinguishers and hypothesis ranking.
//! * [`cli`]: the `gimli-sifa` command-line driver.

pub mod attack;
pub mod cli;
pub mod depend;
pub mod fault;
pub mod gimli;
