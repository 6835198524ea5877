//! Pairing XOR and MAJ roots into full and half adders.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::classify::{Classification, Support, SupportKey};
use super::truth::FunctionClass;
use crate::aig::{Aig, NodeId};
use crate::netgen::AdderKind;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Adder {
    pub kind: AdderKind,
    pub inputs: Vec<NodeId>,
    pub sum: NodeId,
    pub carry: NodeId,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AdderTree {
    pub adders: Vec<Adder>,
    pub unpaired_xor_roots: Vec<NodeId>,
    pub unpaired_maj_roots: Vec<NodeId>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Line {
    Adder(Adder),
    Unpaired {
        unpaired_xor: Vec<NodeId>,
        unpaired_maj: Vec<NodeId>,
    },
}

impl AdderTree {
    pub fn count(&self, kind: AdderKind) -> usize {
        self.adders.iter().filter(|a| a.kind == kind).count()
    }

    /// Sorted (kind, input set) multiset, the unit of adder-level
    /// comparisons.
    pub fn signatures(&self) -> Vec<(AdderKind, Vec<NodeId>)> {
        let mut v: Vec<_> = self
            .adders
            .iter()
            .map(|a| (a.kind, a.inputs.clone()))
            .collect();
        v.sort();
        v
    }

    /// One JSON object per adder, then one line listing unpaired roots.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for a in &self.adders {
            writeln!(
                out,
                "{}",
                serde_json::to_string(&Line::Adder(a.clone())).unwrap()
            )
            .unwrap();
        }
        let tail = Line::Unpaired {
            unpaired_xor: self.unpaired_xor_roots.clone(),
            unpaired_maj: self.unpaired_maj_roots.clone(),
        };
        writeln!(out, "{}", serde_json::to_string(&tail).unwrap()).unwrap();
        out
    }

    pub fn from_json_lines(text: &str) -> Result<AdderTree, serde_json::Error> {
        let mut tree = AdderTree::default();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            match serde_json::from_str(line)? {
                Line::Adder(a) => tree.adders.push(a),
                Line::Unpaired {
                    unpaired_xor,
                    unpaired_maj,
                } => {
                    tree.unpaired_xor_roots.extend(unpaired_xor);
                    tree.unpaired_maj_roots.extend(unpaired_maj);
                }
            }
        }
        Ok(tree)
    }
}

/// Nodes strictly between `root` and `leaves` in the root's cone.
fn mark_cone(
    aig: &Aig,
    root: NodeId,
    leaves: &[NodeId],
    marks: &mut [bool],
    stack: &mut Vec<NodeId>,
) {
    stack.clear();
    if let Some(f) = aig.fanins(root) {
        stack.extend(f.iter().map(|l| l.var()));
    }
    while let Some(v) = stack.pop() {
        if leaves.contains(&v) || marks[v as usize] || v == root {
            continue;
        }
        let Some(f) = aig.fanins(v) else { continue };
        marks[v as usize] = true;
        stack.extend(f.iter().map(|l| l.var()));
    }
}

const CONE_CAP: usize = 64;

/// Number of nodes in the cone of `root` above `leaves`, stopping at
/// `CONE_CAP`. A support that does not cut the cone counts as large.
fn cone_size(aig: &Aig, root: NodeId, leaves: &[NodeId], stack: &mut Vec<NodeId>) -> usize {
    let mut seen: Vec<NodeId> = Vec::new();
    stack.clear();
    stack.push(root);
    while let Some(v) = stack.pop() {
        if leaves.contains(&v) || seen.contains(&v) {
            continue;
        }
        seen.push(v);
        if seen.len() >= CONE_CAP {
            break;
        }
        match aig.fanins(v) {
            Some(f) => stack.extend(f.iter().map(|l| l.var())),
            None => return CONE_CAP,
        }
    }
    seen.len()
}

/// Among pairings of one XOR root, the one whose sum cone above its inputs
/// is smallest; ties keep support order. Redundant logic can give a root
/// two valid input frames, and the smaller cone is the adder as built.
fn most_local(
    aig: &Aig,
    x: NodeId,
    options: &[(Support, NodeId)],
    stack: &mut Vec<NodeId>,
) -> Option<(Support, NodeId)> {
    if options.len() <= 1 {
        return options.first().copied();
    }
    options
        .iter()
        .enumerate()
        .min_by_key(|&(i, (s, _))| (cone_size(aig, x, s.leaves(), stack), i))
        .map(|(_, &o)| o)
}

/// Entries of a sorted list with the given key.
fn with_key(sorted: &[(SupportKey, NodeId)], key: SupportKey) -> &[(SupportKey, NodeId)] {
    let lo = sorted.partition_point(|e| e.0 < key);
    let hi = lo + sorted[lo..].partition_point(|e| e.0 == key);
    &sorted[lo..hi]
}

fn nearest(
    candidates: &[(SupportKey, NodeId)],
    to: NodeId,
    free: impl Fn(NodeId) -> bool,
) -> Option<NodeId> {
    candidates
        .iter()
        .map(|&(_, c)| c)
        .filter(|&c| free(c))
        .min_by_key(|&c| (c.abs_diff(to), c))
}

/// Greedy pairing of XOR-flagged and MAJ-flagged nodes with equal
/// supports: full adders over 3-supports first, then half adders over
/// 2-supports among roots not used or internal to a full adder. XOR roots
/// are visited in id order; the nearest free MAJ root wins and, of several
/// pairable supports, the most local one. Half-adder carries prefer a node
/// that is used outside the XOR root.
pub fn extract_adder_tree(aig: &Aig, cls: &Classification) -> AdderTree {
    let n = aig.num_ids();
    assert_eq!(
        cls.num_nodes(),
        n,
        "classification does not match the graph"
    );
    let mut maj3: Vec<(SupportKey, NodeId)> = Vec::new();
    let mut and2: Vec<(SupportKey, NodeId)> = Vec::new();
    let mut xor_roots = Vec::new();
    for id in 0..n as NodeId {
        if cls.is_xor(id) {
            xor_roots.push(id);
        }
        if cls.is_maj(id) {
            for s in cls.supports(id) {
                match s.class {
                    FunctionClass::Maj3 => maj3.push((s.key(), id)),
                    FunctionClass::And2 => and2.push((s.key(), id)),
                    _ => {}
                }
            }
        }
    }

    maj3.sort_unstable();
    and2.sort_unstable();
    let mut used = vec![false; n];
    let mut internal = vec![false; n];
    let mut stack = Vec::new();
    let mut tree = AdderTree::default();

    let mut options: Vec<(Support, NodeId)> = Vec::new();
    for &x in &xor_roots {
        options.clear();
        for s in cls
            .supports(x)
            .iter()
            .filter(|s| s.class == FunctionClass::Xor3)
        {
            let cands = with_key(&maj3, s.key());
            if let Some(m) = nearest(cands, x, |c| !used[c as usize] && c != x) {
                options.push((*s, m));
            }
        }
        if let Some((s, m)) = most_local(aig, x, &options, &mut stack) {
            used[x as usize] = true;
            used[m as usize] = true;
            tree.adders.push(Adder {
                kind: AdderKind::Full,
                inputs: s.leaves().to_vec(),
                sum: x,
                carry: m,
            });
        }
    }
    for a in &tree.adders {
        mark_cone(aig, a.sum, &a.inputs, &mut internal, &mut stack);
        mark_cone(aig, a.carry, &a.inputs, &mut internal, &mut stack);
    }

    let mut fanout_count = vec![0u32; n];
    for node in aig.ands() {
        fanout_count[node.fanin0.var() as usize] += 1;
        fanout_count[node.fanin1.var() as usize] += 1;
    }
    for o in aig.outputs() {
        fanout_count[o.var() as usize] += 1;
    }
    let external = |c: NodeId, x: NodeId| {
        let f = aig.fanins(x).unwrap();
        let from_x = f.iter().filter(|l| l.var() == c).count() as u32;
        fanout_count[c as usize] > from_x
    };

    let first_ha = tree.adders.len();
    for &x in &xor_roots {
        if used[x as usize] || internal[x as usize] {
            continue;
        }
        options.clear();
        for s in cls
            .supports(x)
            .iter()
            .filter(|s| s.class == FunctionClass::Xor2)
        {
            let best = with_key(&and2, s.key())
                .iter()
                .map(|&(_, c)| c)
                .filter(|&c| c != x && !used[c as usize] && !internal[c as usize])
                .min_by_key(|&c| (!external(c, x), c.abs_diff(x), c));
            if let Some(m) = best {
                options.push((*s, m));
            }
        }
        if let Some((s, m)) = most_local(aig, x, &options, &mut stack) {
            used[x as usize] = true;
            used[m as usize] = true;
            tree.adders.push(Adder {
                kind: AdderKind::Half,
                inputs: s.leaves().to_vec(),
                sum: x,
                carry: m,
            });
        }
    }
    for a in &tree.adders[first_ha..] {
        mark_cone(aig, a.sum, &a.inputs, &mut internal, &mut stack);
        mark_cone(aig, a.carry, &a.inputs, &mut internal, &mut stack);
    }

    for id in 0..n as NodeId {
        let i = id as usize;
        if used[i] || internal[i] {
            continue;
        }
        if cls.is_xor(id) {
            tree.unpaired_xor_roots.push(id);
        }
        if cls.is_maj(id) {
            tree.unpaired_maj_roots.push(id);
        }
    }
    tree
}
