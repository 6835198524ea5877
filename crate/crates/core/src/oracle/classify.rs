//! Per-node XOR/MAJ classification from cut truth tables.

use rustc_hash::FxHashSet;

use super::cut::{Cut, CutSets};
use super::truth::{function_class, FunctionClass, TruthTable, MAX_VARS};
use crate::aig::{Aig, Fanouts, NodeId};

/// The true support of a node's function over one cut, with its class.
/// Constant and don't-care leaves are dropped.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Support {
    pub class: FunctionClass,
    leaves: [NodeId; MAX_VARS],
    len: u8,
}

/// Hashable leaf set of a support, independent of its class.
pub type SupportKey = ([NodeId; MAX_VARS], u8);

impl Support {
    pub fn new(class: FunctionClass, leaves: &[NodeId]) -> Support {
        let mut arr = [0; MAX_VARS];
        arr[..leaves.len()].copy_from_slice(leaves);
        arr[..leaves.len()].sort_unstable();
        Support {
            class,
            leaves: arr,
            len: leaves.len() as u8,
        }
    }

    /// Classifies `cut`'s table; `None` for functions that are not
    /// XOR2/XOR3/MAJ3/AND2 over their true support.
    pub fn of_cut(cut: &Cut) -> Option<Support> {
        let (class, mask) = function_class(cut.tt)?;
        let mut arr = [0; MAX_VARS];
        let mut len = 0;
        for (i, &l) in cut.leaves().iter().enumerate() {
            if mask >> i & 1 == 1 {
                arr[len] = l;
                len += 1;
            }
        }
        Some(Support {
            class,
            leaves: arr,
            len: len as u8,
        })
    }

    pub fn leaves(&self) -> &[NodeId] {
        &self.leaves[..self.len as usize]
    }

    pub fn key(&self) -> SupportKey {
        (self.leaves, self.len)
    }

    pub fn is_xor(&self) -> bool {
        matches!(self.class, FunctionClass::Xor2 | FunctionClass::Xor3)
    }

    fn order(&self) -> (u8, [NodeId; MAX_VARS], FunctionClass) {
        (self.len, self.leaves, self.class)
    }
}

/// Outcome of classifying a single node. The matched support of each flag
/// is the smallest one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NodeClass {
    pub xor_root: bool,
    pub maj_root: bool,
    pub xor_support: Option<Support>,
    pub maj_support: Option<Support>,
}

/// Classified supports of a node over its cuts, deduplicated and sorted
/// smallest first.
pub fn cut_supports(cuts: &[Cut]) -> Vec<Support> {
    let mut out: Vec<Support> = cuts.iter().filter_map(Support::of_cut).collect();
    sort_dedup(&mut out, 0);
    out
}

fn sort_dedup(v: &mut Vec<Support>, start: usize) {
    let tail = &mut v[start..];
    tail.sort_unstable_by_key(Support::order);
    let mut w = start;
    for r in start..v.len() {
        if w == start || v[w - 1] != v[r] {
            v[w] = v[r];
            w += 1;
        }
    }
    v.truncate(w);
}

/// Per-node flags and the supports extraction may use to pair roots.
#[derive(Clone, Debug, Default)]
pub struct Classification {
    xor: Vec<bool>,
    maj: Vec<bool>,
    offsets: Vec<u32>,
    supports: Vec<Support>,
}

impl Classification {
    /// Builds a classification from explicit flags; `supports_of` is only
    /// called for flagged nodes.
    pub fn from_flags(
        xor: Vec<bool>,
        maj: Vec<bool>,
        mut supports_of: impl FnMut(NodeId, &mut Vec<Support>),
    ) -> Classification {
        assert_eq!(xor.len(), maj.len());
        Classification::from_fn(xor.len(), |id, out| {
            let flags = (xor[id as usize], maj[id as usize]);
            if flags.0 || flags.1 {
                supports_of(id, out);
            }
            flags
        })
    }

    /// Builds a classification node by node: `classify` returns the
    /// (xor, maj) flags of a node and may append candidate supports, of
    /// which only those relevant to the flags are kept.
    pub fn from_fn(
        num_nodes: usize,
        mut classify: impl FnMut(NodeId, &mut Vec<Support>) -> (bool, bool),
    ) -> Classification {
        let mut xor = Vec::with_capacity(num_nodes);
        let mut maj = Vec::with_capacity(num_nodes);
        let mut offsets = Vec::with_capacity(num_nodes + 1);
        let mut supports = Vec::new();
        offsets.push(0);
        for id in 0..num_nodes {
            let start = supports.len();
            let (x, m) = classify(id as NodeId, &mut supports);
            let wanted = |s: &Support| {
                (x && s.is_xor())
                    || (m && matches!(s.class, FunctionClass::Maj3 | FunctionClass::And2))
            };
            let mut w = start;
            for r in start..supports.len() {
                if wanted(&supports[r]) {
                    supports[w] = supports[r];
                    w += 1;
                }
            }
            supports.truncate(w);
            sort_dedup(&mut supports, start);
            xor.push(x);
            maj.push(m);
            offsets.push(supports.len() as u32);
        }
        Classification {
            xor,
            maj,
            offsets,
            supports,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.xor.len()
    }

    pub fn is_xor(&self, node: NodeId) -> bool {
        self.xor[node as usize]
    }

    pub fn is_maj(&self, node: NodeId) -> bool {
        self.maj[node as usize]
    }

    pub fn xor_flags(&self) -> &[bool] {
        &self.xor
    }

    pub fn maj_flags(&self) -> &[bool] {
        &self.maj
    }

    /// Supports relevant to the node's flags (XOR-class if XOR-flagged,
    /// MAJ3/AND2 if MAJ-flagged).
    pub fn supports(&self, node: NodeId) -> &[Support] {
        let i = node as usize;
        &self.supports[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    pub fn node(&self, node: NodeId) -> NodeClass {
        let s = self.supports(node);
        NodeClass {
            xor_root: self.is_xor(node),
            maj_root: self.is_maj(node),
            xor_support: s
                .iter()
                .copied()
                .find(Support::is_xor)
                .filter(|_| self.is_xor(node)),
            maj_support: s
                .iter()
                .copied()
                .find(|s| s.class == FunctionClass::Maj3)
                .or_else(|| s.iter().copied().find(|s| s.class == FunctionClass::And2))
                .filter(|_| self.is_maj(node)),
        }
    }
}

/// Classifies every node from its enumerated cuts. A node is an XOR root
/// if some cut realizes an XOR2/XOR3-class function, and a MAJ root if some
/// cut realizes a MAJ3-class function or it is an AND2-class function over
/// the same two leaves as some XOR2 root (half-adder carry candidate).
pub fn classify_all(aig: &Aig, cuts: &CutSets) -> Classification {
    let n = aig.num_ids();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut all = Vec::with_capacity(n * 2);
    offsets.push(0u32);
    for id in 0..n as NodeId {
        if aig.is_and(id) {
            let start = all.len();
            all.extend(cuts.get(id).iter().filter_map(Support::of_cut));
            sort_dedup(&mut all, start);
        }
        offsets.push(all.len() as u32);
    }
    let node = |id: usize| &all[offsets[id] as usize..offsets[id + 1] as usize];
    let xor2: FxHashSet<SupportKey> = all
        .iter()
        .filter(|s| s.class == FunctionClass::Xor2)
        .map(Support::key)
        .collect();
    let xor: Vec<bool> = (0..n)
        .map(|i| node(i).iter().any(Support::is_xor))
        .collect();
    let maj: Vec<bool> = (0..n)
        .map(|i| {
            node(i).iter().any(|s| {
                s.class == FunctionClass::Maj3
                    || (s.class == FunctionClass::And2 && xor2.contains(&s.key()))
            })
        })
        .collect();
    Classification::from_flags(xor, maj, |id, out| out.extend_from_slice(node(id as usize)))
}

/// Classifies one node from its cuts. The half-adder carry rule needs an
/// XOR2 sibling over the same two leaves; it is searched for in the
/// neighbourhood given by `fanouts`.
pub fn classify_node(aig: &Aig, node: NodeId, cuts: &CutSets, fanouts: &Fanouts) -> NodeClass {
    if !aig.is_and(node) {
        return NodeClass::default();
    }
    let supports = cut_supports(cuts.get(node));
    let xor_support = supports.iter().copied().find(Support::is_xor);
    let maj_support = supports
        .iter()
        .copied()
        .find(|s| s.class == FunctionClass::Maj3)
        .or_else(|| {
            supports.iter().copied().find(|s| {
                s.class == FunctionClass::And2
                    && has_xor2_sibling(aig, fanouts, node, s, |x, key| {
                        cut_supports(cuts.get(x))
                            .iter()
                            .any(|t| t.class == FunctionClass::Xor2 && t.key() == key)
                    })
            })
        });
    NodeClass {
        xor_root: xor_support.is_some(),
        maj_root: maj_support.is_some(),
        xor_support,
        maj_support,
    }
}

const SIBLING_VISIT_CAP: usize = 64;

/// Looks for a node with an XOR2 support equal to `support` among the
/// consumers of `node` and the nodes up to two levels above each support
/// leaf (at most a bounded number per leaf).
pub fn has_xor2_sibling(
    aig: &Aig,
    fanouts: &Fanouts,
    node: NodeId,
    support: &Support,
    mut is_xor2_over: impl FnMut(NodeId, SupportKey) -> bool,
) -> bool {
    let key = support.key();
    let mut check = |x: NodeId| aig.is_and(x) && x != node && is_xor2_over(x, key);
    if fanouts.get(node).iter().any(|&(x, _)| check(x)) {
        return true;
    }
    for &leaf in support.leaves() {
        let mut visited = 0;
        for &(p, _) in fanouts.get(leaf) {
            for &(x, _) in fanouts.get(p) {
                if check(x) {
                    return true;
                }
                visited += 1;
                if visited >= SIBLING_VISIT_CAP {
                    break;
                }
            }
            if visited >= SIBLING_VISIT_CAP {
                break;
            }
        }
    }
    false
}

/// Candidate supports of `node` from its local structure: the fanins, the
/// fanins' fanins, and either with XOR2-shaped nodes replaced by their own
/// two inputs. Each candidate is verified by cone evaluation.
pub fn structural_supports(aig: &Aig, node: NodeId, out: &mut Vec<Support>) {
    LocalClassifier::new(aig, &Fanouts::default()).supports(node, out);
}

const VAR_TT: [u8; 3] = [0xAA, 0xCC, 0xF0];

/// Truth table of `node` over `leaves` by direct recursion, failing if a
/// path reaches a non-leaf input or runs deeper than `depth`. Shared
/// subcones are re-evaluated, which the small depth keeps cheap.
fn shallow_tt(aig: &Aig, node: NodeId, leaves: &[NodeId], depth: u32) -> Option<u8> {
    if let Some(i) = leaves.iter().position(|&l| l == node) {
        return Some(VAR_TT[i]);
    }
    if node == 0 {
        return Some(0);
    }
    if depth == 0 {
        return None;
    }
    let [f0, f1] = aig.fanins(node)?;
    let lit = |l: crate::aig::Literal| {
        shallow_tt(aig, l.var(), leaves, depth - 1).map(|t| if l.is_inverted() { !t } else { t })
    };
    Some(lit(f0)? & lit(f1)?)
}

/// Classifies single nodes from their local structure only, without cut
/// enumeration over the whole graph.
pub struct LocalClassifier<'a> {
    aig: &'a Aig,
    fanouts: &'a Fanouts,
    own: Vec<Support>,
    other: Vec<Support>,
}

impl<'a> LocalClassifier<'a> {
    pub fn new(aig: &'a Aig, fanouts: &'a Fanouts) -> LocalClassifier<'a> {
        LocalClassifier {
            aig,
            fanouts,
            own: Vec::new(),
            other: Vec::new(),
        }
    }

    /// Appends the verified structural supports of `node` to `out`.
    pub fn supports(&mut self, node: NodeId, out: &mut Vec<Support>) {
        let aig = self.aig;
        let Some([f0, f1]) = aig.fanins(node) else {
            return;
        };
        let start = out.len();
        self.candidate(node, &[f0.var(), f1.var()], 1, out, start);
        for (v, other) in [(f0.var(), f1.var()), (f1.var(), f0.var())] {
            if let Some(pair) = xor2_shape(aig, v) {
                self.candidate(node, &[other, pair[0], pair[1]], 3, out, start);
            }
        }
        let mut grand = [0; 4];
        let mut n = 0;
        for v in [f0.var(), f1.var()] {
            match aig.fanins(v) {
                Some([g0, g1]) => {
                    grand[n] = g0.var();
                    grand[n + 1] = g1.var();
                    n += 2;
                }
                None => {
                    grand[n] = v;
                    n += 1;
                }
            }
        }
        let grand = &mut grand[..n];
        grand.sort_unstable();
        let mut w = 0;
        for r in 0..grand.len() {
            if w == 0 || grand[w - 1] != grand[r] {
                grand[w] = grand[r];
                w += 1;
            }
        }
        let grand = &grand[..w];
        self.candidate(node, grand, 2, out, start);
        for i in 0..w {
            if let Some(pair) = xor2_shape(aig, grand[i]) {
                let mut c = [0; 5];
                c[..grand.len()].copy_from_slice(grand);
                c[i] = pair[0];
                c[grand.len()] = pair[1];
                self.candidate(node, &c[..grand.len() + 1], 4, out, start);
            }
        }
    }

    /// Every path from `node` to a candidate's leaves has at most `depth`
    /// edges, so evaluation stops there.
    fn candidate(
        &mut self,
        node: NodeId,
        leaves: &[NodeId],
        depth: u32,
        out: &mut Vec<Support>,
        start: usize,
    ) {
        let mut c = [0; 5];
        let mut n = 0;
        for &v in leaves {
            if v != 0 {
                c[n] = v;
                n += 1;
            }
        }
        let c = &mut c[..n];
        c.sort_unstable();
        let mut w = 0;
        for r in 0..c.len() {
            if w == 0 || c[w - 1] != c[r] {
                c[w] = c[r];
                w += 1;
            }
        }
        if w == 0 || w > MAX_VARS {
            return;
        }
        if let Some(tt) = shallow_tt(self.aig, node, &c[..w], depth) {
            let mut cut = Cut::from_leaves(&c[..w]).expect("at most three leaves");
            cut.tt = TruthTable(tt);
            if let Some(s) = Support::of_cut(&cut) {
                if !out[start..].contains(&s) {
                    out.push(s);
                }
            }
        }
    }

    /// Flags and supports of one node. The half-adder carry rule looks for
    /// an XOR2 sibling as [`has_xor2_sibling`] does.
    pub fn classify(&mut self, node: NodeId) -> NodeClass {
        let mut own = std::mem::take(&mut self.own);
        own.clear();
        let c = self.classify_into(node, &mut own);
        self.own = own;
        c
    }

    /// As [`LocalClassifier::classify`], also appending the node's
    /// structural supports to `out`.
    pub fn classify_into(&mut self, node: NodeId, out: &mut Vec<Support>) -> NodeClass {
        self.check_into(node, true, out)
    }

    /// As [`LocalClassifier::classify_into`]; with `check_maj` false the
    /// half-adder carry rule is skipped and only MAJ3 supports set the MAJ
    /// flag.
    pub fn check_into(
        &mut self,
        node: NodeId,
        check_maj: bool,
        out: &mut Vec<Support>,
    ) -> NodeClass {
        let start = out.len();
        self.supports(node, out);
        let own = &out[start..];
        let xor_support = own.iter().copied().find(Support::is_xor);
        let mut maj_support = own.iter().copied().find(|s| s.class == FunctionClass::Maj3);
        if maj_support.is_none() && check_maj {
            let mut other = std::mem::take(&mut self.other);
            let (aig, fanouts) = (self.aig, self.fanouts);
            maj_support = own.iter().copied().find(|s| {
                s.class == FunctionClass::And2
                    && has_xor2_sibling(aig, fanouts, node, s, |x, key| {
                        let leaves = &key.0[..2];
                        if !leaves.iter().all(|&l| within_two_levels(aig, x, l)) {
                            return false;
                        }
                        other.clear();
                        self.supports(x, &mut other);
                        other
                            .iter()
                            .any(|t| t.class == FunctionClass::Xor2 && t.key() == key)
                    })
            });
            self.other = other;
        }
        NodeClass {
            xor_root: xor_support.is_some(),
            maj_root: maj_support.is_some(),
            xor_support,
            maj_support,
        }
    }
}

/// Whether `leaf` is a fanin or grandchild of `node`, or an input of an
/// XOR2-shaped fanin or grandchild. Every structural support of `node`
/// lies there.
fn within_two_levels(aig: &Aig, node: NodeId, leaf: NodeId) -> bool {
    let Some(f) = aig.fanins(node) else {
        return false;
    };
    f.iter().any(|l| {
        let v = l.var();
        v == leaf
            || xor2_shape(aig, v).is_some_and(|p| p.contains(&leaf))
            || aig.fanins(v).is_some_and(|g| {
                g.iter().any(|m| {
                    m.var() == leaf || xor2_shape(aig, m.var()).is_some_and(|p| p.contains(&leaf))
                })
            })
    })
}

/// The two inputs of a node shaped like AND(!AND(x,y), !AND(x',y')) over
/// the same variables x, y.
fn xor2_shape(aig: &Aig, node: NodeId) -> Option<[NodeId; 2]> {
    let [f0, f1] = aig.fanins(node)?;
    let [a0, a1] = aig.fanins(f0.var())?;
    let [b0, b1] = aig.fanins(f1.var())?;
    let mut a = [a0.var(), a1.var()];
    let mut b = [b0.var(), b1.var()];
    a.sort_unstable();
    b.sort_unstable();
    (a == b && a[0] != a[1]).then_some(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aig::AigBuilder;
    use crate::oracle::cut::{enumerate_cuts, CutParams};

    #[test]
    fn bare_and_is_not_maj() {
        let mut b = AigBuilder::new(2);
        let (x, y) = (b.input(0), b.input(1));
        let n = b.and(x, y);
        b.add_output(n).unwrap();
        let g = b.finish();
        let cuts = enumerate_cuts(&g, CutParams::default());
        let c = classify_node(&g, 3, &cuts, &g.fanout_adjacency());
        assert!(!c.maj_root && !c.xor_root);
        assert!(!classify_all(&g, &cuts).is_maj(3));
    }

    #[test]
    fn half_adder_carry_is_maj() {
        let mut b = AigBuilder::new(2);
        let (x, y) = (b.input(0), b.input(1));
        let s = b.xor(x, y);
        b.add_output(s).unwrap();
        let g = b.finish();
        let cuts = enumerate_cuts(&g, CutParams::default());
        let all = classify_all(&g, &cuts);
        let fo = g.fanout_adjacency();
        for id in g.and_ids() {
            assert_eq!(classify_node(&g, id, &cuts, &fo), all.node(id), "node {id}");
        }
        assert!(all.is_xor(5));
        assert!(all.is_maj(3) && all.is_maj(4));
        assert_eq!(all.node(5).xor_support.unwrap().leaves(), &[1, 2]);
    }
}
