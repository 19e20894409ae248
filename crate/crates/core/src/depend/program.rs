//! Parametric evaluation programs and nonce-parallel (bit-sliced) evaluation.
//!
//! A [`Program`] is an expression whose leaves are nonce bits, literals and
//! hypothesis parameters. [`PreparedProgram`] fixes a list of nonces, packs
//! them 64 per machine word and precomputes every node that does not depend
//! on a parameter, so scoring one hypothesis only touches the rest.

use crate::gimli::Nonce;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PNode {
    Lit(bool),
    Nonce { word: u8, bit: u8 },
    Param(u16),
    Xor(Vec<u32>),
    And(u32, u32),
    Or(u32, u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    nodes: Vec<PNode>,
    root: u32,
    param_count: usize,
}

#[derive(Debug, Default)]
pub(crate) struct ProgramBuilder {
    nodes: Vec<PNode>,
}

impl ProgramBuilder {
    fn push(&mut self, n: PNode) -> u32 {
        self.nodes.push(n);
        (self.nodes.len() - 1) as u32
    }

    fn lit_value(&self, id: u32) -> Option<bool> {
        match self.nodes[id as usize] {
            PNode::Lit(v) => Some(v),
            _ => None,
        }
    }

    pub(crate) fn lit(&mut self, v: bool) -> u32 {
        self.push(PNode::Lit(v))
    }

    pub(crate) fn nonce(&mut self, word: u8, bit: u8) -> u32 {
        self.push(PNode::Nonce { word, bit })
    }

    pub(crate) fn param(&mut self, p: u16) -> u32 {
        self.push(PNode::Param(p))
    }

    pub(crate) fn xor(&mut self, terms: Vec<u32>) -> u32 {
        let mut parity = false;
        let mut kept = Vec::with_capacity(terms.len());
        for t in terms {
            match self.lit_value(t) {
                Some(v) => parity ^= v,
                None => kept.push(t),
            }
        }
        if parity {
            kept.push(self.lit(true));
        }
        match kept.len() {
            0 => self.lit(false),
            1 => kept[0],
            _ => self.push(PNode::Xor(kept)),
        }
    }

    pub(crate) fn and(&mut self, a: u32, b: u32) -> u32 {
        match (self.lit_value(a), self.lit_value(b)) {
            (Some(false), _) | (_, Some(false)) => self.lit(false),
            (Some(true), _) => b,
            (_, Some(true)) => a,
            _ => self.push(PNode::And(a, b)),
        }
    }

    pub(crate) fn or(&mut self, a: u32, b: u32) -> u32 {
        match (self.lit_value(a), self.lit_value(b)) {
            (Some(true), _) | (_, Some(true)) => self.lit(true),
            (Some(false), _) => b,
            (_, Some(false)) => a,
            _ => self.push(PNode::Or(a, b)),
        }
    }

    pub(crate) fn finish(self, root: u32, param_count: usize) -> Program {
        Program {
            nodes: self.nodes,
            root,
            param_count,
        }
    }
}

impl Program {
    pub fn param_count(&self) -> usize {
        self.param_count
    }

    pub fn nodes(&self) -> &[PNode] {
        &self.nodes
    }

    /// Scalar evaluation; parameter `p` is bit `p` of `hypothesis`.
    pub fn eval(&self, hypothesis: u64, nonce: &Nonce) -> bool {
        let mut vals = Vec::with_capacity(self.nodes.len());
        for n in &self.nodes {
            let v = match n {
                PNode::Lit(v) => *v,
                PNode::Nonce { word, bit } => nonce.bit(*word as usize, *bit as u32),
                PNode::Param(p) => (hypothesis >> p) & 1 == 1,
                PNode::Xor(cs) => cs.iter().fold(false, |acc, &c| acc ^ vals[c as usize]),
                PNode::And(a, b) => vals[*a as usize] & vals[*b as usize],
                PNode::Or(a, b) => vals[*a as usize] | vals[*b as usize],
            };
            vals.push(v);
        }
        vals[self.root as usize]
    }

    /// Packs `nonces` and precomputes the parameter-free part of the program.
    pub fn prepare(&self, nonces: &[Nonce]) -> PreparedProgram {
        PreparedProgram::new(self, nonces)
    }
}

/// Bit-transposed nonces: for every nonce bit a vector of 64-lane words.
#[derive(Debug, Clone)]
pub struct NonceBatch {
    words: usize,
    len: usize,
    // lanes[(word * 32 + bit) * words + w]
    lanes: Vec<u64>,
}

impl NonceBatch {
    pub fn new(nonces: &[Nonce]) -> Self {
        let words = nonces.len().div_ceil(64);
        let mut lanes = vec![0u64; 128 * words];
        for (i, n) in nonces.iter().enumerate() {
            let (w, lane) = (i / 64, i % 64);
            for word in 0..4 {
                let mut v = n.0[word];
                while v != 0 {
                    let bit = v.trailing_zeros() as usize;
                    lanes[(word * 32 + bit) * words + w] |= 1 << lane;
                    v &= v - 1;
                }
            }
        }
        NonceBatch {
            words,
            len: nonces.len(),
            lanes,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> usize {
        self.words
    }

    fn bit_lanes(&self, word: u8, bit: u8) -> &[u64] {
        let start = (word as usize * 32 + bit as usize) * self.words;
        &self.lanes[start..start + self.words]
    }

    /// Mask of valid lanes for the first `n` nonces.
    pub fn prefix_mask(&self, n: usize) -> Vec<u64> {
        (0..self.words)
            .map(|w| {
                let lo = w * 64;
                if n >= lo + 64 {
                    u64::MAX
                } else if n <= lo {
                    0
                } else {
                    (1u64 << (n - lo)) - 1
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
enum Src {
    Static(u32),
    Dyn(u32),
    Param(u16),
}

#[derive(Debug, Clone)]
enum DynOp {
    Xor(Vec<Src>),
    And(Src, Src),
    Or(Src, Src),
}

/// A program specialised to one nonce list.
#[derive(Debug, Clone)]
pub struct PreparedProgram {
    words: usize,
    len: usize,
    statics: Vec<u64>,
    ops: Vec<DynOp>,
    root: Src,
    mask: Vec<u64>,
    param_count: usize,
}

impl PreparedProgram {
    fn new(program: &Program, nonces: &[Nonce]) -> Self {
        let batch = NonceBatch::new(nonces);
        let words = batch.words();
        let ones = vec![u64::MAX; words];
        let zeros = vec![0u64; words];
        let mut statics: Vec<u64> = Vec::new();
        let mut ops = Vec::new();
        let mut src: Vec<Src> = Vec::with_capacity(program.nodes.len());

        let push_static = |statics: &mut Vec<u64>, v: &[u64]| -> Src {
            let id = (statics.len() / words.max(1)) as u32;
            statics.extend_from_slice(v);
            Src::Static(id)
        };

        for n in &program.nodes {
            let s = match n {
                PNode::Lit(true) => push_static(&mut statics, &ones),
                PNode::Lit(false) => push_static(&mut statics, &zeros),
                PNode::Nonce { word, bit } => {
                    let v = batch.bit_lanes(*word, *bit).to_vec();
                    push_static(&mut statics, &v)
                }
                PNode::Param(p) => Src::Param(*p),
                PNode::Xor(cs) => {
                    let cs: Vec<Src> = cs.iter().map(|&c| src[c as usize]).collect();
                    if cs.iter().all(|c| matches!(c, Src::Static(_))) {
                        let mut v = vec![0u64; words];
                        for c in &cs {
                            let Src::Static(i) = c else { unreachable!() };
                            let base = *i as usize * words;
                            for (w, x) in v.iter_mut().enumerate() {
                                *x ^= statics[base + w];
                            }
                        }
                        push_static(&mut statics, &v)
                    } else {
                        // Fold the static terms into one operand.
                        let (st, dy): (Vec<Src>, Vec<Src>) =
                            cs.into_iter().partition(|c| matches!(c, Src::Static(_)));
                        let mut terms = dy;
                        if !st.is_empty() {
                            let mut v = vec![0u64; words];
                            for c in &st {
                                let Src::Static(i) = c else { unreachable!() };
                                let base = *i as usize * words;
                                for (w, x) in v.iter_mut().enumerate() {
                                    *x ^= statics[base + w];
                                }
                            }
                            terms.push(push_static(&mut statics, &v));
                        }
                        ops.push(DynOp::Xor(terms));
                        Src::Dyn((ops.len() - 1) as u32)
                    }
                }
                PNode::And(a, b) | PNode::Or(a, b) => {
                    let is_and = matches!(n, PNode::And(..));
                    let (sa, sb) = (src[*a as usize], src[*b as usize]);
                    match (sa, sb) {
                        (Src::Static(i), Src::Static(j)) => {
                            let v: Vec<u64> = (0..words)
                                .map(|w| {
                                    let x = statics[i as usize * words + w];
                                    let y = statics[j as usize * words + w];
                                    if is_and {
                                        x & y
                                    } else {
                                        x | y
                                    }
                                })
                                .collect();
                            push_static(&mut statics, &v)
                        }
                        _ => {
                            ops.push(if is_and {
                                DynOp::And(sa, sb)
                            } else {
                                DynOp::Or(sa, sb)
                            });
                            Src::Dyn((ops.len() - 1) as u32)
                        }
                    }
                }
            };
            src.push(s);
        }
        PreparedProgram {
            words,
            len: nonces.len(),
            statics,
            ops,
            root: src[program.root as usize],
            mask: batch.prefix_mask(nonces.len()),
            param_count: program.param_count,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    /// Number of parameter-dependent operations evaluated per hypothesis.
    pub fn dynamic_ops(&self) -> usize {
        self.ops.len()
    }

    pub fn scratch(&self) -> Vec<u64> {
        vec![0u64; self.ops.len() * self.words]
    }

    #[inline]
    fn fetch(&self, s: Src, hypothesis: u64, scratch: &[u64], w: usize) -> u64 {
        match s {
            Src::Static(i) => self.statics[i as usize * self.words + w],
            Src::Dyn(i) => scratch[i as usize * self.words + w],
            Src::Param(p) => 0u64.wrapping_sub((hypothesis >> p) & 1),
        }
    }

    /// Evaluates every nonce under `hypothesis`, leaving the packed result
    /// in `out` (one bit per nonce, 64 per word).
    pub fn eval_packed(&self, hypothesis: u64, scratch: &mut [u64], out: &mut [u64]) {
        let words = self.words;
        for (i, op) in self.ops.iter().enumerate() {
            for w in 0..words {
                let v = match op {
                    DynOp::Xor(terms) => terms
                        .iter()
                        .fold(0u64, |acc, &t| acc ^ self.fetch(t, hypothesis, scratch, w)),
                    DynOp::And(a, b) => {
                        self.fetch(*a, hypothesis, scratch, w)
                            & self.fetch(*b, hypothesis, scratch, w)
                    }
                    DynOp::Or(a, b) => {
                        self.fetch(*a, hypothesis, scratch, w)
                            | self.fetch(*b, hypothesis, scratch, w)
                    }
                };
                scratch[i * words + w] = v;
            }
        }
        for (w, o) in out.iter_mut().enumerate().take(words) {
            *o = self.fetch(self.root, hypothesis, scratch, w) & self.mask[w];
        }
    }

    /// Number of nonces for which the program evaluates to 1.
    pub fn count_ones(&self, hypothesis: u64, scratch: &mut [u64]) -> u64 {
        let mut out = vec![0u64; self.words];
        self.eval_packed(hypothesis, scratch, &mut out);
        out.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Ones counts for each prefix length in `prefixes` (ascending).
    pub fn count_ones_prefixes(
        &self,
        hypothesis: u64,
        scratch: &mut [u64],
        out: &mut [u64],
        prefixes: &[usize],
    ) -> Vec<u64> {
        self.eval_packed(hypothesis, scratch, out);
        prefixes
            .iter()
            .map(|&n| {
                let full = n / 64;
                let mut c: u64 = out[..full].iter().map(|w| w.count_ones() as u64).sum();
                if n % 64 != 0 {
                    c += (out[full] & ((1u64 << (n % 64)) - 1)).count_ones() as u64;
                }
                c
            })
            .collect()
    }

    pub fn words(&self) -> usize {
        self.words
    }
}
