//! Boolean expression DAG over nonce, key and round-constant bits.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::gimli::{round_constant, Key, Nonce};

/// Leaf of an expression: one bit of the nonce, the key, or the constant
/// added in round 24 of the first permutation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BitRef {
    Nonce { word: u8, bit: u8 },
    Key { word: u8, bit: u8 },
    Constant { bit: u8 },
}

impl BitRef {
    pub fn nonce(word: usize, bit: u32) -> Self {
        debug_assert!(word < 4 && bit < 32);
        BitRef::Nonce {
            word: word as u8,
            bit: bit as u8,
        }
    }

    pub fn key(word: usize, bit: u32) -> Self {
        debug_assert!(word < 8 && bit < 32);
        BitRef::Key {
            word: word as u8,
            bit: bit as u8,
        }
    }

    pub fn constant(bit: u32) -> Self {
        debug_assert!(bit < 32);
        BitRef::Constant { bit: bit as u8 }
    }

    pub fn is_key(&self) -> bool {
        matches!(self, BitRef::Key { .. })
    }

    pub fn is_nonce(&self) -> bool {
        matches!(self, BitRef::Nonce { .. })
    }

    /// Value of a constant leaf (bit of `0x9e377900 ^ 24`).
    pub fn constant_value(bit: u8) -> bool {
        (round_constant(24) >> bit) & 1 == 1
    }

    pub fn value(&self, key: &Key, nonce: &Nonce) -> bool {
        match *self {
            BitRef::Nonce { word, bit } => nonce.bit(word as usize, bit as u32),
            BitRef::Key { word, bit } => key.bit(word as usize, bit as u32),
            BitRef::Constant { bit } => Self::constant_value(bit),
        }
    }
}

impl fmt::Display for BitRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BitRef::Nonce { word, bit } => write!(f, "n{word}.{bit}"),
            BitRef::Key { word, bit } => write!(f, "k{word}.{bit}"),
            BitRef::Constant { bit } => write!(f, "c{bit}"),
        }
    }
}

pub type NodeId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    Lit(bool),
    Leaf(BitRef),
    /// n-ary XOR; children sorted, no duplicates, no nested XOR, no literal 0.
    Xor(Vec<NodeId>),
    And(NodeId, NodeId),
    Or(NodeId, NodeId),
}

/// Hash-consing builder that applies local simplifications
/// (literal folding, XOR flattening and cancellation, idempotence).
#[derive(Debug, Default)]
pub struct ExprBuilder {
    nodes: Vec<Node>,
    index: HashMap<Node, NodeId>,
}

impl ExprBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(&mut self, node: Node) -> NodeId {
        if let Some(&id) = self.index.get(&node) {
            return id;
        }
        let id = self.nodes.len() as NodeId;
        self.nodes.push(node.clone());
        self.index.insert(node, id);
        id
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    pub fn lit(&mut self, v: bool) -> NodeId {
        self.intern(Node::Lit(v))
    }

    pub fn leaf(&mut self, r: BitRef) -> NodeId {
        self.intern(Node::Leaf(r))
    }

    pub fn xor(&mut self, terms: &[NodeId]) -> NodeId {
        let mut flat: Vec<NodeId> = Vec::with_capacity(terms.len());
        let mut parity = false;
        for &t in terms {
            match &self.nodes[t as usize] {
                Node::Lit(v) => parity ^= *v,
                Node::Xor(children) => flat.extend_from_slice(children),
                _ => flat.push(t),
            }
        }
        // A nested XOR may carry a literal 1 child.
        flat.retain(|&t| match self.nodes[t as usize] {
            Node::Lit(v) => {
                parity ^= v;
                false
            }
            _ => true,
        });
        flat.sort_unstable();
        let mut kept: Vec<NodeId> = Vec::with_capacity(flat.len());
        for t in flat {
            if kept.last() == Some(&t) {
                kept.pop();
            } else {
                kept.push(t);
            }
        }
        if parity {
            let one = self.lit(true);
            kept.insert(0, one);
            kept.sort_unstable();
        }
        match kept.len() {
            0 => self.lit(false),
            1 => kept[0],
            _ => self.intern(Node::Xor(kept)),
        }
    }

    pub fn and(&mut self, a: NodeId, b: NodeId) -> NodeId {
        match (&self.nodes[a as usize], &self.nodes[b as usize]) {
            (Node::Lit(false), _) | (_, Node::Lit(false)) => self.lit(false),
            (Node::Lit(true), _) => b,
            (_, Node::Lit(true)) => a,
            _ if a == b => a,
            _ => self.intern(Node::And(a.min(b), a.max(b))),
        }
    }

    pub fn or(&mut self, a: NodeId, b: NodeId) -> NodeId {
        match (&self.nodes[a as usize], &self.nodes[b as usize]) {
            (Node::Lit(true), _) | (_, Node::Lit(true)) => self.lit(true),
            (Node::Lit(false), _) => b,
            (_, Node::Lit(false)) => a,
            _ if a == b => a,
            _ => self.intern(Node::Or(a.min(b), a.max(b))),
        }
    }

    /// Copies the sub-DAG reachable from `root` into a compact expression.
    pub fn extract(&self, root: NodeId) -> BitExpr {
        let mut order = Vec::new();
        let mut seen = vec![false; self.nodes.len()];
        // Children always have smaller ids than parents, so marking reachable
        // nodes and emitting them in id order is a topological order.
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            if std::mem::replace(&mut seen[id as usize], true) {
                continue;
            }
            match &self.nodes[id as usize] {
                Node::Xor(cs) => stack.extend_from_slice(cs),
                Node::And(a, b) | Node::Or(a, b) => {
                    stack.push(*a);
                    stack.push(*b);
                }
                _ => {}
            }
        }
        let mut remap = vec![NodeId::MAX; self.nodes.len()];
        for (id, _) in seen.iter().enumerate().filter(|(_, s)| **s) {
            remap[id] = order.len() as NodeId;
            order.push(id);
        }
        let nodes = order
            .iter()
            .map(|&id| match &self.nodes[id] {
                Node::Xor(cs) => {
                    let mut cs: Vec<NodeId> = cs.iter().map(|&c| remap[c as usize]).collect();
                    cs.sort_unstable();
                    Node::Xor(cs)
                }
                Node::And(a, b) => Node::And(remap[*a as usize], remap[*b as usize]),
                Node::Or(a, b) => Node::Or(remap[*a as usize], remap[*b as usize]),
                other => other.clone(),
            })
            .collect();
        BitExpr {
            nodes,
            root: remap[root as usize],
        }
    }
}

/// An immutable expression in topological order; the root is the last node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitExpr {
    nodes: Vec<Node>,
    root: NodeId,
}

impl BitExpr {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    /// Distinct leaves, sorted.
    pub fn leaves(&self) -> BTreeSet<BitRef> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf(r) => Some(*r),
                _ => None,
            })
            .collect()
    }

    pub fn key_bits(&self) -> BTreeSet<BitRef> {
        self.leaves().into_iter().filter(BitRef::is_key).collect()
    }

    pub fn nonce_bits(&self) -> BTreeSet<BitRef> {
        self.leaves().into_iter().filter(BitRef::is_nonce).collect()
    }

    /// Evaluates every node; `leaf` supplies leaf values.
    pub fn eval_with(&self, mut leaf: impl FnMut(BitRef) -> bool) -> bool {
        let mut vals = Vec::with_capacity(self.nodes.len());
        for n in &self.nodes {
            let v = match n {
                Node::Lit(v) => *v,
                Node::Leaf(r) => leaf(*r),
                Node::Xor(cs) => cs.iter().fold(false, |acc, &c| acc ^ vals[c as usize]),
                Node::And(a, b) => vals[*a as usize] & vals[*b as usize],
                Node::Or(a, b) => vals[*a as usize] | vals[*b as usize],
            };
            vals.push(v);
        }
        vals[self.root as usize]
    }

    pub fn eval(&self, key: &Key, nonce: &Nonce) -> bool {
        self.eval_with(|r| r.value(key, nonce))
    }

    /// Prefix notation, e.g. `(xor k0.30 n0.15 (or n0.14 k4.6))`.
    pub fn to_prefix(&self) -> String {
        let mut out = String::new();
        self.write_prefix(self.root, &mut out);
        out
    }

    pub(crate) fn write_prefix(&self, id: NodeId, out: &mut String) {
        use std::fmt::Write;
        match &self.nodes[id as usize] {
            Node::Lit(v) => out.push(if *v { '1' } else { '0' }),
            Node::Leaf(r) => {
                let _ = write!(out, "{r}");
            }
            Node::Xor(cs) => {
                out.push_str("(xor");
                for &c in cs {
                    out.push(' ');
                    self.write_prefix(c, out);
                }
                out.push(')');
            }
            Node::And(a, b) | Node::Or(a, b) => {
                out.push_str(if matches!(self.nodes[id as usize], Node::And(..)) {
                    "(and "
                } else {
                    "(or "
                });
                self.write_prefix(*a, out);
                out.push(' ');
                self.write_prefix(*b, out);
                out.push(')');
            }
        }
    }
}

impl fmt::Display for BitExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_prefix())
    }
}
