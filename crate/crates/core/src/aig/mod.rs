//! And-inverter graphs.
//!
//! Node ids follow the AIGER convention: id 0 is the constant, ids
//! `1..=num_inputs` are primary inputs and AND nodes follow consecutively.
//! Every AND node only references strictly smaller ids, so id order is a
//! topological order.

mod aiger;

use std::collections::HashMap;
use std::fmt;
use std::ops::Not;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use aiger::{parse_aiger, write_aiger, AigerError};

/// Node identifier (AIGER variable index).
pub type NodeId = u32;

/// A possibly inverted reference to a node, encoded as `2 * var + inverted`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Literal(u32);

impl Literal {
    pub const FALSE: Literal = Literal(0);
    pub const TRUE: Literal = Literal(1);

    pub fn new(var: NodeId, inverted: bool) -> Literal {
        Literal(var * 2 + inverted as u32)
    }

    pub fn from_raw(raw: u32) -> Literal {
        Literal(raw)
    }

    pub fn raw(self) -> u32 {
        self.0
    }

    pub fn var(self) -> NodeId {
        self.0 >> 1
    }

    pub fn is_inverted(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn is_const(self) -> bool {
        self.0 < 2
    }

    /// The same literal with the inversion flag cleared.
    pub fn regular(self) -> Literal {
        Literal(self.0 & !1)
    }

    pub fn invert_if(self, cond: bool) -> Literal {
        Literal(self.0 ^ cond as u32)
    }
}

impl Not for Literal {
    type Output = Literal;

    fn not(self) -> Literal {
        Literal(self.0 ^ 1)
    }
}

impl fmt::Debug for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_inverted() {
            write!(f, "!{}", self.var())
        } else {
            write!(f, "{}", self.var())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AndNode {
    pub fanin0: Literal,
    pub fanin1: Literal,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AigError {
    #[error("literal {literal:?} references nonexistent variable (max id {max_id})")]
    NonexistentVariable { literal: Literal, max_id: NodeId },
}

/// Size figures of an AIG. The constant node is not counted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AigStats {
    pub num_nodes: usize,
    pub num_edges: usize,
    pub num_inputs: usize,
    pub num_outputs: usize,
    pub depth: usize,
}

/// A combinational and-inverter graph.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Aig {
    num_inputs: usize,
    ands: Vec<AndNode>,
    outputs: Vec<Literal>,
}

impl Aig {
    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn num_ands(&self) -> usize {
        self.ands.len()
    }

    /// Number of node ids including the constant node.
    pub fn num_ids(&self) -> usize {
        1 + self.num_inputs + self.ands.len()
    }

    pub fn max_var(&self) -> NodeId {
        (self.num_inputs + self.ands.len()) as NodeId
    }

    pub fn outputs(&self) -> &[Literal] {
        &self.outputs
    }

    pub fn ands(&self) -> &[AndNode] {
        &self.ands
    }

    pub fn input(&self, index: usize) -> Literal {
        assert!(index < self.num_inputs, "input index out of range");
        Literal::new(index as NodeId + 1, false)
    }

    pub fn inputs(&self) -> impl Iterator<Item = Literal> + '_ {
        (1..=self.num_inputs as NodeId).map(|v| Literal::new(v, false))
    }

    pub fn is_input(&self, node: NodeId) -> bool {
        node >= 1 && node as usize <= self.num_inputs
    }

    pub fn is_and(&self, node: NodeId) -> bool {
        node as usize > self.num_inputs && (node as usize) < self.num_ids()
    }

    pub fn first_and(&self) -> NodeId {
        self.num_inputs as NodeId + 1
    }

    /// Ids of all AND nodes in topological order.
    pub fn and_ids(&self) -> std::ops::Range<NodeId> {
        self.first_and()..self.num_ids() as NodeId
    }

    pub fn fanins(&self, node: NodeId) -> Option<[Literal; 2]> {
        if self.is_and(node) {
            let n = &self.ands[node as usize - self.num_inputs - 1];
            Some([n.fanin0, n.fanin1])
        } else {
            None
        }
    }

    pub fn stats(&self) -> AigStats {
        let levels = self.levels();
        let depth = self
            .outputs
            .iter()
            .map(|o| levels[o.var() as usize] as usize)
            .max()
            .unwrap_or(0);
        AigStats {
            num_nodes: self.num_inputs + self.ands.len(),
            num_edges: 2 * self.ands.len(),
            num_inputs: self.num_inputs,
            num_outputs: self.outputs.len(),
            depth,
        }
    }

    /// Logic level of every node id; PIs and the constant are at level 0.
    pub fn levels(&self) -> Vec<u32> {
        let mut levels = vec![0u32; self.num_ids()];
        for id in self.and_ids() {
            let [a, b] = self.fanins(id).unwrap();
            levels[id as usize] = 1 + levels[a.var() as usize].max(levels[b.var() as usize]);
        }
        levels
    }

    /// PIs first, then AND nodes with every fanin preceding its consumer.
    pub fn topo_order(&self) -> Vec<NodeId> {
        (1..self.num_ids() as NodeId).collect()
    }

    pub fn fanout_adjacency(&self) -> Fanouts {
        Fanouts::new(self)
    }

    /// Bit-parallel simulation: one 64-pattern word per input, one word per output.
    pub fn simulate(&self, input_words: &[u64]) -> Vec<u64> {
        let values = self.simulate_nodes(input_words);
        self.outputs.iter().map(|&o| eval_lit(&values, o)).collect()
    }

    /// Bit-parallel simulation returning the value word of every node id.
    pub fn simulate_nodes(&self, input_words: &[u64]) -> Vec<u64> {
        assert_eq!(
            input_words.len(),
            self.num_inputs,
            "one simulation word per primary input"
        );
        let mut values = Vec::with_capacity(self.num_ids());
        values.push(0u64);
        values.extend_from_slice(input_words);
        for n in &self.ands {
            let v = eval_lit(&values, n.fanin0) & eval_lit(&values, n.fanin1);
            values.push(v);
        }
        values
    }

    pub(crate) fn from_parts(num_inputs: usize, ands: Vec<AndNode>, outputs: Vec<Literal>) -> Aig {
        Aig {
            num_inputs,
            ands,
            outputs,
        }
    }

    /// Copies the graph into a builder, keeping node ids, so that more
    /// logic can be appended.
    pub fn into_builder(self) -> AigBuilder {
        let mut strash = HashMap::with_capacity(self.ands.len());
        for (i, n) in self.ands.iter().enumerate() {
            let lit = Literal::new((self.num_inputs + 1 + i) as NodeId, false);
            strash.entry(hash_key(n.fanin0, n.fanin1)).or_insert(lit);
        }
        AigBuilder { aig: self, strash }
    }
}

#[inline]
pub fn eval_lit(values: &[u64], lit: Literal) -> u64 {
    let v = values[lit.var() as usize];
    if lit.is_inverted() {
        !v
    } else {
        v
    }
}

fn hash_key(a: Literal, b: Literal) -> (Literal, Literal) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Incremental AIG construction with structural hashing and constant folding.
#[derive(Debug, Default)]
pub struct AigBuilder {
    aig: Aig,
    strash: HashMap<(Literal, Literal), Literal>,
}

impl AigBuilder {
    pub fn new(num_inputs: usize) -> AigBuilder {
        AigBuilder {
            aig: Aig {
                num_inputs,
                ands: Vec::new(),
                outputs: Vec::new(),
            },
            strash: HashMap::new(),
        }
    }

    pub fn aig(&self) -> &Aig {
        &self.aig
    }

    pub fn input(&self, index: usize) -> Literal {
        self.aig.input(index)
    }

    fn check(&self, lit: Literal) -> Result<(), AigError> {
        let max_id = self.aig.max_var();
        if lit.var() > max_id {
            Err(AigError::NonexistentVariable {
                literal: lit,
                max_id,
            })
        } else {
            Ok(())
        }
    }

    /// Returns a literal computing `a & b`, reusing an existing node when
    /// one with the same unordered fanin pair exists.
    pub fn add_and(&mut self, a: Literal, b: Literal) -> Result<Literal, AigError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.and(a, b))
    }

    /// Unchecked variant of [`AigBuilder::add_and`] for generators that only
    /// pass literals they created themselves.
    pub fn and(&mut self, a: Literal, b: Literal) -> Literal {
        debug_assert!(a.var() <= self.aig.max_var() && b.var() <= self.aig.max_var());
        if a == Literal::FALSE || b == Literal::FALSE || a == !b {
            return Literal::FALSE;
        }
        if a == Literal::TRUE || a == b {
            return b;
        }
        if b == Literal::TRUE {
            return a;
        }
        let key = hash_key(a, b);
        if let Some(&lit) = self.strash.get(&key) {
            return lit;
        }
        let lit = Literal::new(self.aig.max_var() + 1, false);
        self.aig.ands.push(AndNode {
            fanin0: a,
            fanin1: b,
        });
        self.strash.insert(key, lit);
        lit
    }

    pub fn or(&mut self, a: Literal, b: Literal) -> Literal {
        !self.and(!a, !b)
    }

    /// XOR as `!(a & b) & !(!a & !b)`: three AND nodes, the root has both
    /// fanins inverted.
    pub fn xor(&mut self, a: Literal, b: Literal) -> Literal {
        let both = self.and(a, b);
        let neither = self.and(!a, !b);
        self.and(!both, !neither)
    }

    pub fn mux(&mut self, sel: Literal, then: Literal, otherwise: Literal) -> Literal {
        let t = self.and(sel, then);
        let e = self.and(!sel, otherwise);
        self.or(t, e)
    }

    pub fn add_output(&mut self, lit: Literal) -> Result<(), AigError> {
        self.check(lit)?;
        self.aig.outputs.push(lit);
        Ok(())
    }

    pub fn finish(self) -> Aig {
        self.aig
    }
}

/// Fan-out lists in compressed row form: for every node id the consumers
/// together with the inversion flag of the consuming edge. The default
/// value has no entries.
#[derive(Clone, Debug, Default)]
pub struct Fanouts {
    offsets: Vec<u32>,
    entries: Vec<(NodeId, bool)>,
}

impl Fanouts {
    fn new(aig: &Aig) -> Fanouts {
        let n = aig.num_ids();
        let mut counts = vec![0u32; n + 1];
        for node in aig.ands() {
            counts[node.fanin0.var() as usize + 1] += 1;
            counts[node.fanin1.var() as usize + 1] += 1;
        }
        for i in 1..=n {
            counts[i] += counts[i - 1];
        }
        let mut fill = counts.clone();
        let mut entries = vec![(0, false); aig.num_ands() * 2];
        for id in aig.and_ids() {
            for lit in aig.fanins(id).unwrap() {
                let slot = &mut fill[lit.var() as usize];
                entries[*slot as usize] = (id, lit.is_inverted());
                *slot += 1;
            }
        }
        Fanouts {
            offsets: counts,
            entries,
        }
    }

    pub fn get(&self, node: NodeId) -> &[(NodeId, bool)] {
        let i = node as usize;
        match (self.offsets.get(i), self.offsets.get(i + 1)) {
            (Some(&a), Some(&b)) => &self.entries[a as usize..b as usize],
            _ => &[],
        }
    }

    pub fn num_edges(&self) -> usize {
        self.entries.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }
}
