//! K-feasible cut enumeration with truth tables.

use thiserror::Error;

use super::truth::{TruthTable, MAX_VARS};
use crate::aig::{Aig, Literal, NodeId};

/// A set of at most three leaves (sorted ascending) with the root's
/// function over them.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Cut {
    leaves: [NodeId; MAX_VARS],
    len: u8,
    pub tt: TruthTable,
}

impl Cut {
    pub fn trivial(node: NodeId) -> Cut {
        Cut {
            leaves: [node, 0, 0],
            len: 1,
            tt: if node == 0 {
                TruthTable::FALSE
            } else {
                TruthTable::var(0)
            },
        }
    }

    /// Builds a cut from leaves in any order; duplicates are removed.
    pub fn from_leaves(leaves: &[NodeId]) -> Option<Cut> {
        let mut v: Vec<NodeId> = leaves.to_vec();
        v.sort_unstable();
        v.dedup();
        if v.is_empty() || v.len() > MAX_VARS {
            return None;
        }
        let mut arr = [0; MAX_VARS];
        arr[..v.len()].copy_from_slice(&v);
        Some(Cut {
            leaves: arr,
            len: v.len() as u8,
            tt: TruthTable::FALSE,
        })
    }

    pub fn leaves(&self) -> &[NodeId] {
        &self.leaves[..self.len as usize]
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    fn signature(&self) -> u64 {
        self.leaves().iter().fold(0, |s, &l| s | 1u64 << (l & 63))
    }

    /// True if every leaf of `self` is a leaf of `other`.
    #[inline]
    pub fn is_subset_of(&self, other: &Cut) -> bool {
        if self.len > other.len {
            return false;
        }
        let mut j = 0;
        for &l in self.leaves() {
            while j < other.len() && other.leaves[j] < l {
                j += 1;
            }
            if j == other.len() || other.leaves[j] != l {
                return false;
            }
            j += 1;
        }
        true
    }
}

#[inline]
fn merge_leaves(a: &Cut, b: &Cut, k: usize) -> Option<([NodeId; MAX_VARS], u8)> {
    let mut out = [0; MAX_VARS];
    let (mut i, mut j, mut n) = (0, 0, 0);
    let (la, lb) = (a.leaves(), b.leaves());
    while i < la.len() || j < lb.len() {
        let next = if j == lb.len() || (i < la.len() && la[i] < lb[j]) {
            i += 1;
            la[i - 1]
        } else if i == la.len() || lb[j] < la[i] {
            j += 1;
            lb[j - 1]
        } else {
            i += 1;
            j += 1;
            la[i - 1]
        };
        if n == k {
            return None;
        }
        out[n] = next;
        n += 1;
    }
    Some((out, n as u8))
}

#[inline]
fn positions(sub: &Cut, leaves: &[NodeId]) -> u8 {
    let mut mask = 0u8;
    let mut j = 0;
    for &l in sub.leaves() {
        while leaves[j] != l {
            j += 1;
        }
        mask |= 1 << j;
    }
    mask
}

#[inline]
fn literal_tt(tt: TruthTable, lit: Literal) -> TruthTable {
    if lit.is_inverted() {
        !tt
    } else {
        tt
    }
}

/// Merges one cut from each fanin into a cut of the AND node, if the
/// union stays within `k` leaves.
pub fn merge_cuts(c0: &Cut, l0: Literal, c1: &Cut, l1: Literal, k: usize) -> Option<Cut> {
    let (leaves, len) = merge_leaves(c0, c1, k)?;
    let ls = &leaves[..len as usize];
    let t0 = literal_tt(c0.tt.stretch(positions(c0, ls)), l0);
    let t1 = literal_tt(c1.tt.stretch(positions(c1, ls)), l1);
    Some(Cut {
        leaves,
        len,
        tt: t0 & t1,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CutParams {
    pub cut_k: usize,
    pub max_cuts_per_node: usize,
}

impl Default for CutParams {
    fn default() -> Self {
        CutParams {
            cut_k: 3,
            max_cuts_per_node: 16,
        }
    }
}

/// Cut sets of every node id, stored contiguously. The first cut of every
/// set is the trivial cut.
#[derive(Clone, Debug)]
pub struct CutSets {
    offsets: Vec<u32>,
    cuts: Vec<Cut>,
}

impl CutSets {
    pub fn get(&self, node: NodeId) -> &[Cut] {
        let i = node as usize;
        &self.cuts[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn total_cuts(&self) -> usize {
        self.cuts.len()
    }
}

/// Reusable scratch for computing one node's cut set.
#[derive(Default)]
pub(crate) struct CutScratch {
    kept: Vec<(Cut, u64)>,
}

impl CutScratch {
    /// Non-trivial cuts of an AND node from its fanins' cut sets: all
    /// feasible merges, without dominated cuts, smallest first, capped.
    pub(crate) fn node_cuts(
        &mut self,
        fanin_cuts: [&[Cut]; 2],
        fanins: [Literal; 2],
        params: CutParams,
    ) {
        self.kept.clear();
        for c0 in fanin_cuts[0] {
            for c1 in fanin_cuts[1] {
                let Some(cut) = merge_cuts(c0, fanins[0], c1, fanins[1], params.cut_k) else {
                    continue;
                };
                let sig = cut.signature();
                if self
                    .kept
                    .iter()
                    .any(|(k, ks)| ks & !sig == 0 && k.is_subset_of(&cut))
                {
                    continue;
                }
                self.kept
                    .retain(|(k, ks)| !(sig & !ks == 0 && cut.is_subset_of(k)));
                self.kept.push((cut, sig));
            }
        }
        self.kept
            .sort_unstable_by(|a, b| (a.0.len, a.0.leaves).cmp(&(b.0.len, b.0.leaves)));
        self.kept
            .truncate(params.max_cuts_per_node.saturating_sub(1));
    }

    pub(crate) fn cuts(&self) -> impl Iterator<Item = Cut> + '_ {
        self.kept.iter().map(|(c, _)| *c)
    }
}

/// Enumerates up to `max_cuts_per_node` cuts of at most `cut_k` leaves
/// for every node, in topological order.
pub fn enumerate_cuts(aig: &Aig, params: CutParams) -> CutSets {
    assert!(
        (2..=MAX_VARS).contains(&params.cut_k),
        "cut size must be between 2 and {MAX_VARS}"
    );
    assert!(params.max_cuts_per_node >= 1);
    let n = aig.num_ids();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut cuts = Vec::with_capacity(n * 6);
    offsets.push(0u32);
    for id in 0..=aig.num_inputs() as NodeId {
        cuts.push(Cut::trivial(id));
        offsets.push(cuts.len() as u32);
    }
    let mut scratch = CutScratch::default();
    for id in aig.and_ids() {
        let fanins = aig.fanins(id).unwrap();
        let range = |v: NodeId| offsets[v as usize] as usize..offsets[v as usize + 1] as usize;
        let (r0, r1) = (range(fanins[0].var()), range(fanins[1].var()));
        cuts.push(Cut::trivial(id));
        scratch.node_cuts([&cuts[r0], &cuts[r1]], fanins, params);
        cuts.extend(scratch.cuts());
        offsets.push(cuts.len() as u32);
    }
    CutSets { offsets, cuts }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CutError {
    #[error("cut {leaves:?} does not separate node {node} from the primary inputs")]
    NotACut { node: NodeId, leaves: Vec<NodeId> },
    #[error("cut has {0} leaves, at most 3 are supported")]
    TooManyLeaves(usize),
}

/// Evaluates the cone of `node` above `leaves` with one truth-table
/// variable per leaf (sorted order). Fails if the cone reaches a primary
/// input that is not a leaf, or exceeds `budget` visited AND nodes.
pub fn cone_truth_table(
    aig: &Aig,
    node: NodeId,
    leaves: &[NodeId],
    budget: usize,
) -> Result<TruthTable, CutError> {
    if leaves.len() > MAX_VARS {
        return Err(CutError::TooManyLeaves(leaves.len()));
    }
    let mut sorted = leaves.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    ConeScratch::default()
        .eval(aig, node, &sorted, budget)
        .ok_or(CutError::NotACut {
            node,
            leaves: sorted,
        })
}

/// Reusable buffers for repeated small cone evaluations.
#[derive(Clone, Debug, Default)]
pub struct ConeScratch {
    memo: Vec<(NodeId, TruthTable)>,
    stack: Vec<NodeId>,
}

impl ConeScratch {
    /// As [`cone_truth_table`] with `leaves` already sorted and deduplicated.
    pub fn eval(
        &mut self,
        aig: &Aig,
        node: NodeId,
        leaves: &[NodeId],
        budget: usize,
    ) -> Option<TruthTable> {
        debug_assert!(leaves.len() <= MAX_VARS && leaves.windows(2).all(|w| w[0] < w[1]));
        self.memo.clear();
        self.stack.clear();
        self.stack.push(node);
        let lookup = |memo: &[(NodeId, TruthTable)], v: NodeId| -> Option<TruthTable> {
            if let Some(i) = leaves.iter().position(|&l| l == v) {
                return Some(if v == 0 {
                    TruthTable::FALSE
                } else {
                    TruthTable::var(i)
                });
            }
            if v == 0 {
                return Some(TruthTable::FALSE);
            }
            memo.iter().find(|(k, _)| *k == v).map(|(_, t)| *t)
        };
        while let Some(&v) = self.stack.last() {
            if lookup(&self.memo, v).is_some() {
                self.stack.pop();
                continue;
            }
            let [f0, f1] = aig.fanins(v)?;
            let t0 = lookup(&self.memo, f0.var());
            let t1 = lookup(&self.memo, f1.var());
            match (t0, t1) {
                (Some(t0), Some(t1)) => {
                    self.memo.push((v, literal_tt(t0, f0) & literal_tt(t1, f1)));
                    if self.memo.len() > budget {
                        return None;
                    }
                    self.stack.pop();
                }
                _ => {
                    if t0.is_none() {
                        self.stack.push(f0.var());
                    }
                    if t1.is_none() {
                        self.stack.push(f1.var());
                    }
                    // a cone within budget never needs a deeper stack
                    if self.stack.len() > budget.saturating_mul(2).saturating_add(1) {
                        return None;
                    }
                }
            }
        }
        lookup(&self.memo, node)
    }
}

/// Truth table of `node` over `cut`, evaluated on the cone.
pub fn cut_truth_table(aig: &Aig, node: NodeId, cut: &[NodeId]) -> Result<TruthTable, CutError> {
    cone_truth_table(aig, node, cut, usize::MAX)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aig::AigBuilder;

    fn xor3() -> Aig {
        let mut b = AigBuilder::new(3);
        let (i1, i2, i3) = (b.input(0), b.input(1), b.input(2));
        let x = b.xor(i1, i2);
        let o = b.xor(x, i3);
        b.add_output(o).unwrap();
        b.finish()
    }

    #[test]
    fn inputs_have_only_trivial_cuts() {
        let g = xor3();
        let cuts = enumerate_cuts(&g, CutParams::default());
        for pi in 1..=3 {
            assert_eq!(cuts.get(pi).len(), 1);
            assert_eq!(cuts.get(pi)[0].leaves(), &[pi]);
        }
    }

    #[test]
    fn xor_cone_cuts() {
        let g = xor3();
        let cuts = enumerate_cuts(&g, CutParams::default());
        let c6 = cuts.get(6).iter().find(|c| c.leaves() == [1, 2]).unwrap();
        assert_eq!(c6.tt, TruthTable(0x66));
        let c9 = cuts
            .get(9)
            .iter()
            .find(|c| c.leaves() == [1, 2, 3])
            .unwrap();
        assert_eq!(c9.tt, TruthTable(0x96));
        assert_eq!(cuts.get(9)[0].leaves(), &[9]);
        assert_eq!(cuts.get(9)[0].tt, TruthTable::var(0));
    }

    #[test]
    fn cone_evaluation() {
        let g = xor3();
        assert_eq!(cut_truth_table(&g, 6, &[1, 2]).unwrap(), TruthTable(0x66));
        assert_eq!(
            cut_truth_table(&g, 9, &[3, 2, 1]).unwrap(),
            TruthTable(0x96)
        );
        assert_eq!(cut_truth_table(&g, 9, &[9]).unwrap(), TruthTable::var(0));
        assert!(matches!(
            cut_truth_table(&g, 9, &[1, 2]),
            Err(CutError::NotACut { .. })
        ));
        assert!(cone_truth_table(&g, 9, &[1, 2, 3], 2).is_err());
    }

    #[test]
    fn constant_leaf_is_ignored() {
        let text = "aag 3 2 0 1 1\n2\n4\n6\n6 2 1\n";
        let g = crate::aig::parse_aiger(text).unwrap();
        let cuts = enumerate_cuts(&g, CutParams::default());
        let c = cuts.get(3).iter().find(|c| c.leaves() == [0, 1]).unwrap();
        // AND(x, TRUE) over {const, x}: independent of the constant position
        assert!(!c.tt.depends_on(0));
        assert_eq!(c.tt, TruthTable::var(1));
    }

    #[test]
    fn dominated_cuts_are_dropped() {
        // n = AND(a, AND(a, b)): the cut {a, AND(a,b)} is not dominated by
        // {a, b}, but {a, b} must not appear twice
        let mut b = AigBuilder::new(2);
        let (x, y) = (b.input(0), b.input(1));
        let ab = b.and(x, y);
        let n = b.and(x, !ab);
        b.add_output(n).unwrap();
        let g = b.finish();
        let cuts = enumerate_cuts(&g, CutParams::default());
        let sets: Vec<Vec<NodeId>> = cuts.get(4).iter().map(|c| c.leaves().to_vec()).collect();
        assert_eq!(sets, vec![vec![4], vec![1, 2], vec![1, 3]]);
    }
}
