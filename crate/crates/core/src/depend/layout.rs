//! Reduction of a traced expression to independently testable key parameters.
//!
//! Inside every XOR, the terms that contain key bits but no nonce bit are
//! summed into one key-only sub-expression. A sub-expression made of a single
//! key bit is a *unique bit*; anything larger is a *group* that can only be
//! recovered as one parameter bit. Groups whose key bits are all unique bits
//! carry no information of their own and are dropped; a group whose only
//! unknown bit enters linearly reveals that bit, which becomes unique.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use super::expr::{BitExpr, BitRef, ExprBuilder, Node, NodeId};
use super::program::{Program, ProgramBuilder};
use super::trace::{trace, Target, TraceError};
use crate::gimli::{Key, Nonce, SpBoxVariant};

/// A key-only sub-expression acting as one parameter bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyGroup {
    expr: BitExpr,
    bits: BTreeSet<BitRef>,
}

impl KeyGroup {
    fn new(expr: BitExpr) -> Self {
        let bits = expr.key_bits();
        KeyGroup { expr, bits }
    }

    pub fn expr(&self) -> &BitExpr {
        &self.expr
    }

    pub fn key_bits(&self) -> &BTreeSet<BitRef> {
        &self.bits
    }

    /// Value of the group under a full key.
    pub fn eval(&self, key: &Key) -> bool {
        self.expr.eval_with(|r| match r {
            BitRef::Key { word, bit } => key.bit(word as usize, bit as u32),
            BitRef::Constant { bit } => BitRef::constant_value(bit),
            BitRef::Nonce { .. } => unreachable!("key group contains a nonce bit"),
        })
    }

    // `k ^ rest` where `k` is a direct XOR term and appears nowhere else.
    fn linear_bit(&self, free: BitRef) -> bool {
        let root = self.expr.node(self.expr.root());
        let Node::Xor(cs) = root else {
            return false;
        };
        let direct = cs
            .iter()
            .filter(|&&c| *self.expr.node(c) == Node::Leaf(free))
            .count();
        // The leaf node is shared, so any other use shows up as a second parent.
        let uses = self
            .expr
            .nodes()
            .iter()
            .map(|n| match n {
                Node::Xor(cs) => cs
                    .iter()
                    .filter(|&&c| *self.expr.node(c) == Node::Leaf(free))
                    .count(),
                Node::And(a, b) | Node::Or(a, b) => [a, b]
                    .iter()
                    .filter(|&&&c| *self.expr.node(c) == Node::Leaf(free))
                    .count(),
                _ => 0,
            })
            .sum::<usize>();
        direct == 1 && uses == 1
    }
}

impl fmt::Display for KeyGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.expr)
    }
}

/// Packed hypothesis: parameter `i` is bit `i` of the index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Hypothesis(pub u64);

impl Hypothesis {
    pub fn param(&self, i: usize) -> bool {
        (self.0 >> i) & 1 == 1
    }

    /// Number of parameters on which two hypotheses agree.
    pub fn matching_params(&self, other: &Hypothesis, count: usize) -> usize {
        let mask = if count >= 64 {
            u64::MAX
        } else {
            (1u64 << count) - 1
        };
        count - ((self.0 ^ other.0) & mask).count_ones() as usize
    }
}

#[derive(Debug, Clone)]
pub struct HypothesisLayout {
    unique_bits: Vec<BitRef>,
    groups: Vec<KeyGroup>,
    determined: Vec<KeyGroup>,
    key_bits: BTreeSet<BitRef>,
    program: Program,
}

impl HypothesisLayout {
    /// Unique key bits, sorted; parameters `0..unique_bits().len()`.
    pub fn unique_bits(&self) -> &[BitRef] {
        &self.unique_bits
    }

    /// Group parameters, following the unique bits.
    pub fn groups(&self) -> &[KeyGroup] {
        &self.groups
    }

    /// Key-only sums whose value follows from the unique bits.
    pub fn determined_groups(&self) -> &[KeyGroup] {
        &self.determined
    }

    pub fn parameter_count(&self) -> usize {
        self.unique_bits.len() + self.groups.len()
    }

    pub fn n_keybits(&self) -> usize {
        self.key_bits.len()
    }

    pub fn key_bits(&self) -> &BTreeSet<BitRef> {
        &self.key_bits
    }

    /// Key bits that only enter through a group parameter.
    pub fn absorbed_bits(&self) -> BTreeSet<BitRef> {
        let unique: BTreeSet<BitRef> = self.unique_bits.iter().copied().collect();
        self.key_bits.difference(&unique).copied().collect()
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    /// The hypothesis a key induces: unique bits read directly, groups evaluated.
    pub fn induced(&self, key: &Key) -> Hypothesis {
        let mut h = 0u64;
        for (i, r) in self.unique_bits.iter().enumerate() {
            if r.value(key, &Nonce::default()) {
                h |= 1 << i;
            }
        }
        let base = self.unique_bits.len();
        for (j, g) in self.groups.iter().enumerate() {
            if g.eval(key) {
                h |= 1 << (base + j);
            }
        }
        Hypothesis(h)
    }

    pub fn evaluate(&self, h: Hypothesis, nonce: &Nonce) -> bool {
        self.program.eval(h.0, nonce)
    }

    /// Short name of parameter `i`, e.g. `k4.29` or `s1`.
    pub fn param_name(&self, i: usize) -> String {
        if i < self.unique_bits.len() {
            self.unique_bits[i].to_string()
        } else {
            format!("s{}", i - self.unique_bits.len() + 1)
        }
    }
}

impl fmt::Display for HypothesisLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "n_keybits={} parameters={} unique={} groups={}",
            self.n_keybits(),
            self.parameter_count(),
            self.unique_bits.len(),
            self.groups.len()
        )?;
        let names: Vec<String> = self.unique_bits.iter().map(|b| b.to_string()).collect();
        writeln!(f, "unique: {}", names.join(" "))?;
        for (j, g) in self.groups.iter().enumerate() {
            writeln!(f, "s{}: {}", j + 1, g)?;
        }
        Ok(())
    }
}

struct Flags {
    key: Vec<bool>,
    nonce: Vec<bool>,
}

impl Flags {
    fn new(expr: &BitExpr) -> Self {
        let n = expr.nodes().len();
        let (mut key, mut nonce) = (vec![false; n], vec![false; n]);
        for (i, node) in expr.nodes().iter().enumerate() {
            let (k, nn) = match node {
                Node::Lit(_) => (false, false),
                Node::Leaf(r) => (r.is_key(), r.is_nonce()),
                Node::Xor(cs) => cs.iter().fold((false, false), |(k, nn), &c| {
                    (k | key[c as usize], nn | nonce[c as usize])
                }),
                Node::And(a, b) | Node::Or(a, b) => (
                    key[*a as usize] | key[*b as usize],
                    nonce[*a as usize] | nonce[*b as usize],
                ),
            };
            key[i] = k;
            nonce[i] = nn;
        }
        Flags { key, nonce }
    }

    fn key_only(&self, id: NodeId) -> bool {
        self.key[id as usize] && !self.nonce[id as usize]
    }
}

/// Collects the key-only sums, keyed by their (sorted) node sets.
fn collect_sums(expr: &BitExpr, flags: &Flags) -> Vec<Vec<NodeId>> {
    let mut sums: Vec<Vec<NodeId>> = Vec::new();
    let mut seen_sum: HashMap<Vec<NodeId>, ()> = HashMap::new();
    let mut visited = vec![false; expr.nodes().len()];
    let mut add = |s: Vec<NodeId>, sums: &mut Vec<Vec<NodeId>>| {
        if seen_sum.insert(s.clone(), ()).is_none() {
            sums.push(s);
        }
    };
    let mut stack = vec![expr.root()];
    while let Some(id) = stack.pop() {
        if std::mem::replace(&mut visited[id as usize], true) {
            continue;
        }
        if flags.key_only(id) {
            add(vec![id], &mut sums);
            continue;
        }
        match expr.node(id) {
            Node::Xor(cs) => {
                let (k, rest): (Vec<NodeId>, Vec<NodeId>) =
                    cs.iter().partition(|&&c| flags.key_only(c));
                if !k.is_empty() {
                    add(k, &mut sums);
                }
                // Reverse so that traversal visits children left to right.
                stack.extend(rest.into_iter().rev());
            }
            Node::And(a, b) | Node::Or(a, b) => {
                stack.push(*b);
                stack.push(*a);
            }
            _ => {}
        }
    }
    sums
}

fn copy_into(
    expr: &BitExpr,
    id: NodeId,
    b: &mut ExprBuilder,
    memo: &mut HashMap<NodeId, NodeId>,
) -> NodeId {
    if let Some(&n) = memo.get(&id) {
        return n;
    }
    let n = match expr.node(id) {
        Node::Lit(v) => b.lit(*v),
        Node::Leaf(r) => b.leaf(*r),
        Node::Xor(cs) => {
            let cs: Vec<NodeId> = cs.iter().map(|&c| copy_into(expr, c, b, memo)).collect();
            b.xor(&cs)
        }
        Node::And(x, y) => {
            let (x, y) = (copy_into(expr, *x, b, memo), copy_into(expr, *y, b, memo));
            b.and(x, y)
        }
        Node::Or(x, y) => {
            let (x, y) = (copy_into(expr, *x, b, memo), copy_into(expr, *y, b, memo));
            b.or(x, y)
        }
    };
    memo.insert(id, n);
    n
}

fn sum_expr(expr: &BitExpr, sum: &[NodeId]) -> BitExpr {
    let mut b = ExprBuilder::new();
    let mut memo = HashMap::new();
    let terms: Vec<NodeId> = sum
        .iter()
        .map(|&c| copy_into(expr, c, &mut b, &mut memo))
        .collect();
    let root = b.xor(&terms);
    b.extract(root)
}

enum SumRole {
    Unique(u16),
    Param(u16),
    Determined,
}

struct Compiler<'a> {
    expr: &'a BitExpr,
    flags: &'a Flags,
    roles: &'a HashMap<Vec<NodeId>, SumRole>,
    unique_index: &'a HashMap<BitRef, u16>,
    pb: ProgramBuilder,
    memo: HashMap<NodeId, u32>,
    key_memo: HashMap<NodeId, u32>,
}

impl Compiler<'_> {
    fn leaf(&mut self, r: BitRef) -> u32 {
        match r {
            BitRef::Nonce { word, bit } => self.pb.nonce(word, bit),
            BitRef::Constant { bit } => self.pb.lit(BitRef::constant_value(bit)),
            BitRef::Key { .. } => self.pb.param(self.unique_index[&r]),
        }
    }

    /// Key-only node in terms of unique-bit parameters.
    fn key_node(&mut self, id: NodeId) -> u32 {
        if let Some(&p) = self.key_memo.get(&id) {
            return p;
        }
        let p = match self.expr.node(id).clone() {
            Node::Lit(v) => self.pb.lit(v),
            Node::Leaf(r) => self.leaf(r),
            Node::Xor(cs) => {
                let cs = cs.iter().map(|&c| self.key_node(c)).collect();
                self.pb.xor(cs)
            }
            Node::And(a, b) => {
                let (a, b) = (self.key_node(a), self.key_node(b));
                self.pb.and(a, b)
            }
            Node::Or(a, b) => {
                let (a, b) = (self.key_node(a), self.key_node(b));
                self.pb.or(a, b)
            }
        };
        self.key_memo.insert(id, p);
        p
    }

    fn sum(&mut self, sum: &[NodeId]) -> u32 {
        match self.roles[sum] {
            SumRole::Unique(p) | SumRole::Param(p) => self.pb.param(p),
            SumRole::Determined => {
                let terms = sum.iter().map(|&c| self.key_node(c)).collect();
                self.pb.xor(terms)
            }
        }
    }

    fn node(&mut self, id: NodeId) -> u32 {
        if let Some(&p) = self.memo.get(&id) {
            return p;
        }
        let p = if self.flags.key_only(id) {
            self.sum(&[id])
        } else {
            match self.expr.node(id).clone() {
                Node::Lit(v) => self.pb.lit(v),
                Node::Leaf(r) => self.leaf(r),
                Node::Xor(cs) => {
                    let (k, rest): (Vec<NodeId>, Vec<NodeId>) =
                        cs.iter().partition(|&&c| self.flags.key_only(c));
                    let mut terms: Vec<u32> = rest.into_iter().map(|c| self.node(c)).collect();
                    if !k.is_empty() {
                        terms.push(self.sum(&k));
                    }
                    self.pb.xor(terms)
                }
                Node::And(a, b) => {
                    let (a, b) = (self.node(a), self.node(b));
                    self.pb.and(a, b)
                }
                Node::Or(a, b) => {
                    let (a, b) = (self.node(a), self.node(b));
                    self.pb.or(a, b)
                }
            }
        };
        self.memo.insert(id, p);
        p
    }
}

/// Splits the key dependencies of `expr` into unique bits and group sums.
pub fn reduce_layout(expr: &BitExpr) -> HypothesisLayout {
    let flags = Flags::new(expr);
    let sums = collect_sums(expr, &flags);

    let mut unique: BTreeSet<BitRef> = BTreeSet::new();
    let mut candidates: Vec<(Vec<NodeId>, KeyGroup)> = Vec::new();
    for s in &sums {
        if let [id] = s[..] {
            if let Node::Leaf(r) = expr.node(id) {
                unique.insert(*r);
                continue;
            }
        }
        candidates.push((s.clone(), KeyGroup::new(sum_expr(expr, s))));
    }

    // Fixpoint: drop groups fixed by unique bits, promote linearly revealed bits.
    let mut settled = vec![false; candidates.len()];
    loop {
        let mut changed = false;
        for (i, (_, g)) in candidates.iter().enumerate() {
            if settled[i] {
                continue;
            }
            let free: Vec<BitRef> = g.bits.difference(&unique).copied().collect();
            match free[..] {
                [] => {
                    settled[i] = true;
                    changed = true;
                }
                [k] if g.linear_bit(k) => {
                    unique.insert(k);
                    settled[i] = true;
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            break;
        }
    }

    let unique_bits: Vec<BitRef> = unique.into_iter().collect();
    let unique_index: HashMap<BitRef, u16> = unique_bits
        .iter()
        .enumerate()
        .map(|(i, r)| (*r, i as u16))
        .collect();

    let mut roles: HashMap<Vec<NodeId>, SumRole> = HashMap::new();
    let mut groups = Vec::new();
    let mut determined = Vec::new();
    for s in &sums {
        if let [id] = s[..] {
            if let Node::Leaf(r) = expr.node(id) {
                roles.insert(s.clone(), SumRole::Unique(unique_index[r]));
            }
        }
    }
    for ((s, g), settled) in candidates.into_iter().zip(settled) {
        if settled {
            roles.insert(s, SumRole::Determined);
            determined.push(g);
        } else {
            roles.insert(s, SumRole::Param((unique_bits.len() + groups.len()) as u16));
            groups.push(g);
        }
    }

    let param_count = unique_bits.len() + groups.len();
    let mut c = Compiler {
        expr,
        flags: &flags,
        roles: &roles,
        unique_index: &unique_index,
        pb: ProgramBuilder::default(),
        memo: HashMap::new(),
        key_memo: HashMap::new(),
    };
    let root = c.node(expr.root());
    let program = c.pb.finish(root, param_count);

    HypothesisLayout {
        unique_bits,
        groups,
        determined,
        key_bits: expr.key_bits(),
        program,
    }
}

/// One traced bit of a fault window.
#[derive(Debug, Clone)]
pub struct WindowBit {
    pub target: Target,
    pub expr: BitExpr,
    pub layout: HypothesisLayout,
}

/// Traces and reduces bits `base.bit .. base.bit + width` of the base word.
pub fn target_window(
    base: &Target,
    width: u32,
    variant: SpBoxVariant,
) -> Result<Vec<WindowBit>, TraceError> {
    if width == 0 || base.bit + width > 32 {
        return Err(TraceError::BadBit(base.bit + width.max(1) - 1));
    }
    (base.bit..base.bit + width)
        .map(|bit| {
            let target = Target::new(base.round, base.row, base.col, bit);
            let expr = trace(&target, variant)?;
            let layout = reduce_layout(&expr);
            Ok(WindowBit {
                target,
                expr,
                layout,
            })
        })
        .collect()
}

/// 3x4 grid of the input words (rows a, b, c as nonce, key low, key high),
/// bit 31 first; `1` marks a bit the expression depends on.
pub fn render_dependency_map(expr: &BitExpr) -> String {
    let leaves = expr.leaves();
    let mut out = String::new();
    for (row, name) in ["a", "b", "c"].iter().enumerate() {
        out.push_str(name);
        for col in 0..4 {
            out.push(' ');
            for bit in (0..32).rev() {
                let r = match row {
                    0 => BitRef::nonce(col, bit),
                    1 => BitRef::key(col, bit),
                    _ => BitRef::key(4 + col, bit),
                };
                out.push(if leaves.contains(&r) { '1' } else { '-' });
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depend::oracle_bit;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn layout(round: u32) -> (BitExpr, HypothesisLayout) {
        let e = trace(&Target::b07(round), SpBoxVariant::Official).unwrap();
        let l = reduce_layout(&e);
        (e, l)
    }

    #[test]
    fn round_23_has_two_unique_bits() {
        let (_, l) = layout(23);
        assert_eq!(l.parameter_count(), 2);
        assert!(l.groups().is_empty());
    }

    #[test]
    fn round_22_shape() {
        let (_, l) = layout(22);
        assert_eq!(l.n_keybits(), 11);
        assert_eq!(l.unique_bits().len(), 3);
        assert_eq!(l.groups().len(), 3);
        let names: Vec<String> = l.unique_bits().iter().map(|b| b.to_string()).collect();
        assert_eq!(names, ["k1.2", "k1.3", "k4.29"]);
    }

    #[test]
    fn round_21_shape() {
        let (_, l) = layout(21);
        assert_eq!(l.unique_bits().len(), 15);
        assert_eq!(l.groups().len(), 7);
    }

    #[test]
    fn induced_hypothesis_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for round in [23, 22, 21] {
            let t = Target::b07(round);
            let (_, l) = layout(round);
            for _ in 0..20 {
                let key = Key(rng.random());
                let h = l.induced(&key);
                for _ in 0..50 {
                    let n = Nonce(rng.random());
                    assert_eq!(
                        l.evaluate(h, &n),
                        oracle_bit(&key, &n, &t, SpBoxVariant::Official)
                    );
                }
            }
        }
    }

    #[test]
    fn map_marks_leaves() {
        let (e, _) = layout(23);
        let m = render_dependency_map(&e);
        assert_eq!(m.matches('1').count(), 4);
        assert_eq!(m.lines().count(), 3);
    }

    #[test]
    fn window_validation() {
        let base = Target::b07(22);
        assert!(target_window(&base, 26, SpBoxVariant::Official).is_err());
        assert_eq!(
            target_window(&base, 1, SpBoxVariant::Official)
                .unwrap()
                .len(),
            1
        );
    }
}
