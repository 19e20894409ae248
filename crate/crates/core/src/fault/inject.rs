//! Fault injection into the first permutation and ineffective-fault campaigns.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::model::{width_mask, FaultModel};
use crate::depend::Target;
use crate::gimli::{
    aead_decrypt_hooked, aead_encrypt_with, init_state, permute_until, GimliState, Key, Nonce, Row,
    SpBoxVariant, ROUNDS, TAG_BYTES,
};

/// Associated data used by every campaign trial.
pub const CAMPAIGN_AD: &[u8] = b"";
/// Message encrypted (and then decrypted under fault) by every campaign trial.
pub const CAMPAIGN_MSG: &[u8] = b"SIFA";
/// Default bound on decryption attempts per campaign.
pub const DEFAULT_TRIAL_CAP: u64 = 100_000_000;

const CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FaultLocation {
    /// Round just completed when the fault hits (24 = after the first round).
    pub boundary: u32,
    pub row: Row,
    pub col: usize,
    /// Lowest faulted bit.
    pub offset: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultSpec {
    pub model: FaultModel,
    pub width: u32,
    pub location: FaultLocation,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpecError {
    #[error("fault width {0} must be between 1 and 32")]
    Width(u32),
    #[error("fault window {offset}..{end} leaves the 32-bit word", end = .offset + .width)]
    Window { offset: u32, width: u32 },
    #[error("boundary {0} is outside the first permutation (expected 1..=24)")]
    Boundary(u32),
    #[error("column {0} out of range (expected 0..=3)")]
    Column(usize),
}

impl FaultSpec {
    pub fn new(model: FaultModel, width: u32, location: FaultLocation) -> Result<Self, SpecError> {
        let s = FaultSpec {
            model,
            width,
            location,
        };
        s.validate()?;
        Ok(s)
    }

    /// Fault on `width` bits starting at the target bit, right where the
    /// target value is observable.
    pub fn at_target(model: FaultModel, width: u32, target: &Target) -> Result<Self, SpecError> {
        FaultSpec::new(
            model,
            width,
            FaultLocation {
                boundary: target.boundary(),
                row: target.row,
                col: target.col,
                offset: target.bit,
            },
        )
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        let l = &self.location;
        if !(1..=32).contains(&self.width) {
            return Err(SpecError::Width(self.width));
        }
        if l.offset + self.width > 32 {
            return Err(SpecError::Window {
                offset: l.offset,
                width: self.width,
            });
        }
        if !(1..=ROUNDS).contains(&l.boundary) {
            return Err(SpecError::Boundary(l.boundary));
        }
        if l.col > 3 {
            return Err(SpecError::Column(l.col));
        }
        Ok(())
    }

    pub fn mask(&self) -> u32 {
        width_mask(self.width)
    }

    /// The faulted window of `state`, shifted down to bit 0.
    pub fn window(&self, state: &GimliState) -> u32 {
        let l = &self.location;
        (state.word(l.row, l.col) >> l.offset) & self.mask()
    }

    fn set_window(&self, state: &mut GimliState, value: u32) {
        let l = &self.location;
        let m = self.mask() << l.offset;
        let w = state.word_mut(l.row, l.col);
        *w = (*w & !m) | ((value << l.offset) & m);
    }

    /// The target (state before round `boundary - 1`) of the lowest faulted bit.
    pub fn base_target(&self) -> Target {
        let l = &self.location;
        Target::new(l.boundary - 1, l.row, l.col, l.offset)
    }
}

impl fmt::Display for FaultSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = &self.location;
        write!(
            f,
            "model={} w={} boundary={} row={} col={} off={}",
            self.model, self.width, l.boundary, l.row, l.col, l.offset
        )
    }
}

/// Window value before and after the fault.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowFault {
    pub before: u32,
    pub after: u32,
}

impl WindowFault {
    pub fn ineffective(&self) -> bool {
        self.before == self.after
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultedDecryption {
    /// `None` is the ⊥ output.
    pub plaintext: Option<Vec<u8>>,
    pub window: WindowFault,
}

impl FaultedDecryption {
    pub fn ineffective(&self) -> bool {
        self.plaintext.is_some()
    }
}

/// Authenticated decryption with the fault of `spec` injected into the
/// first permutation.
#[allow(clippy::too_many_arguments)]
pub fn faulted_decrypt<R: Rng + ?Sized>(
    key: &Key,
    nonce: &Nonce,
    ad: &[u8],
    ct: &[u8],
    tag: &[u8; TAG_BYTES],
    spec: &FaultSpec,
    variant: SpBoxVariant,
    rng: &mut R,
) -> Result<FaultedDecryption, SpecError> {
    spec.validate()?;
    let mut window = WindowFault {
        before: 0,
        after: 0,
    };
    let plaintext = aead_decrypt_hooked(key, nonce, ad, ct, tag, variant, |b, s| {
        if b == spec.location.boundary {
            let before = spec.window(s);
            let after = spec.model.apply(before, spec.width, rng);
            spec.set_window(s, after);
            window = WindowFault { before, after };
        }
    });
    Ok(FaultedDecryption { plaintext, window })
}

/// Fast path: computes only up to the fault and compares the window.
pub fn fault_window<R: Rng + ?Sized>(
    key: &Key,
    nonce: &Nonce,
    spec: &FaultSpec,
    variant: SpBoxVariant,
    rng: &mut R,
) -> WindowFault {
    let mut s = init_state(key, nonce);
    permute_until(&mut s, spec.location.boundary, variant);
    let before = spec.window(&s);
    WindowFault {
        before,
        after: spec.model.apply(before, spec.width, rng),
    }
}

/// Independent random stream of trial `index` in campaign `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TrialPath {
    /// Encrypt, then decrypt under fault and check the tag.
    #[default]
    Full,
    /// Window equality only.
    Fast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trial {
    pub nonce: Nonce,
    pub window: WindowFault,
    pub ineffective: bool,
}

/// One campaign trial: random nonce, then the faulted decryption.
pub fn run_trial(
    key: &Key,
    spec: &FaultSpec,
    variant: SpBoxVariant,
    seed: u64,
    index: u64,
    path: TrialPath,
) -> Trial {
    let mut rng = trial_rng(seed, index);
    let nonce = Nonce(rng.random());
    match path {
        TrialPath::Fast => {
            let window = fault_window(key, &nonce, spec, variant, &mut rng);
            Trial {
                nonce,
                window,
                ineffective: window.ineffective(),
            }
        }
        TrialPath::Full => {
            let enc = aead_encrypt_with(key, &nonce, CAMPAIGN_AD, CAMPAIGN_MSG, variant);
            let d = faulted_decrypt(
                key,
                &nonce,
                CAMPAIGN_AD,
                &enc.ciphertext,
                &enc.tag,
                spec,
                variant,
                &mut rng,
            )
            .expect("spec validated by caller");
            Trial {
                nonce,
                window: d.window,
                ineffective: d.ineffective(),
            }
        }
    }
}

/// Nonces whose faulted decryption was ineffective.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    pub spec: FaultSpec,
    pub seed: u64,
    /// Decryption attempts made, `N`.
    pub trials: u64,
    pub nonces: Vec<Nonce>,
}

impl TraceSet {
    pub fn n_ineff(&self) -> usize {
        self.nonces.len()
    }

    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.n_ineff() as f64 / self.trials as f64
        }
    }

    pub fn prefix(&self, n: usize) -> &[Nonce] {
        &self.nonces[..n.min(self.nonces.len())]
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CollectError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("fault model {0} never produces ineffective faults")]
    NoIneffective(FaultModel),
    #[error("trial cap of {cap} reached with {} of {target} ineffective faults", .partial.n_ineff())]
    CapExceeded {
        cap: u64,
        target: usize,
        partial: TraceSet,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CollectOptions {
    pub variant: SpBoxVariant,
    pub cap: u64,
    pub path: TrialPath,
}

impl Default for CollectOptions {
    fn default() -> Self {
        CollectOptions {
            variant: SpBoxVariant::Official,
            cap: DEFAULT_TRIAL_CAP,
            path: TrialPath::Full,
        }
    }
}

/// Runs trials `0, 1, 2, ...` until `target` ineffective faults are found.
/// Trials run in parallel chunks but are consumed in index order, so the
/// result does not depend on the thread count.
pub fn collect_ineffective(
    key: &Key,
    spec: &FaultSpec,
    target: usize,
    seed: u64,
    opts: &CollectOptions,
) -> Result<TraceSet, CollectError> {
    spec.validate()?;
    if spec.model.analytic_rate(spec.width) == 0.0 {
        return Err(CollectError::NoIneffective(spec.model));
    }
    let mut set = TraceSet {
        spec: *spec,
        seed,
        trials: 0,
        nonces: Vec::with_capacity(target),
    };
    let mut start = 0u64;
    while set.nonces.len() < target {
        if start >= opts.cap {
            set.trials = opts.cap;
            return Err(CollectError::CapExceeded {
                cap: opts.cap,
                target,
                partial: set,
            });
        }
        let end = (start + CHUNK).min(opts.cap);
        let hits: Vec<(u64, Nonce)> = (start..end)
            .into_par_iter()
            .filter_map(|i| {
                let t = run_trial(key, spec, opts.variant, seed, i, opts.path);
                t.ineffective.then_some((i, t.nonce))
            })
            .collect();
        for (i, n) in hits {
            set.nonces.push(n);
            if set.nonces.len() == target {
                set.trials = i + 1;
                return Ok(set);
            }
        }
        start = end;
        set.trials = end;
    }
    Ok(set)
}

/// Ineffective count over a fixed number of fast-path trials.
pub fn count_ineffective(
    key: &Key,
    spec: &FaultSpec,
    trials: u64,
    seed: u64,
    variant: SpBoxVariant,
) -> Result<u64, SpecError> {
    spec.validate()?;
    Ok((0..trials)
        .into_par_iter()
        .filter(|&i| run_trial(key, spec, variant, seed, i, TrialPath::Fast).ineffective)
        .count() as u64)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub nofault: Vec<u64>,
    pub ineffective: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HistogramError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("histogram width {0} exceeds 16 bits")]
    Width(u32),
}

/// Window values over `trials` random nonces, unconditioned and restricted
/// to ineffective faults.
pub fn intermediate_histogram(
    key: &Key,
    spec: &FaultSpec,
    trials: u64,
    seed: u64,
    variant: SpBoxVariant,
) -> Result<Histogram, HistogramError> {
    spec.validate()?;
    if spec.width > 16 {
        return Err(HistogramError::Width(spec.width));
    }
    let bins = 1usize << spec.width;
    let empty = || Histogram {
        nofault: vec![0; bins],
        ineffective: vec![0; bins],
    };
    Ok((0..trials)
        .into_par_iter()
        .fold(empty, |mut h, i| {
            let t = run_trial(key, spec, variant, seed, i, TrialPath::Fast);
            h.nofault[t.window.before as usize] += 1;
            if t.ineffective {
                h.ineffective[t.window.before as usize] += 1;
            }
            h
        })
        .reduce(empty, |mut a, b| {
            a.nofault
                .iter_mut()
                .zip(&b.nofault)
                .for_each(|(x, y)| *x += y);
            a.ineffective
                .iter_mut()
                .zip(&b.ineffective)
                .for_each(|(x, y)| *x += y);
            a
        }))
}
