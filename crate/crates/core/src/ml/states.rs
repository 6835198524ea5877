//! Deduplication of message-passing computations.
//!
//! With mean aggregation, a node's layer-k embedding is a function of its
//! layer-(k-1) embedding and the multisets of its neighbours' layer-(k-1)
//! embeddings. Every node gets a 64-bit hash of that recursive structure
//! per layer; nodes with equal hashes share a state and dense layers run
//! once per state. Distinct structures share a state only on a 64-bit hash
//! collision.

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::features::NodeFeatures;
use crate::aig::{Aig, Fanouts, NodeId};

/// Which neighbours a node aggregates over. With fan-outs, the consumer
/// mean is a separate input block next to the fanin mean.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Fanin,
    FaninFanout,
}

#[derive(Clone, Debug, Default)]
pub struct StateLayer {
    /// Per state: its own state in the previous layer.
    pub self_state: Vec<u32>,
    fanin_offsets: Vec<u32>,
    fanins: Vec<u32>,
    fanout_offsets: Vec<u32>,
    fanouts: Vec<u32>,
}

impl StateLayer {
    pub fn len(&self) -> usize {
        self.self_state.len()
    }

    pub fn is_empty(&self) -> bool {
        self.self_state.is_empty()
    }

    /// Previous-layer states of the fanins, with multiplicity, in an order
    /// that depends only on their structure.
    pub fn fanins(&self, state: usize) -> &[u32] {
        &self.fanins[self.fanin_offsets[state] as usize..self.fanin_offsets[state + 1] as usize]
    }

    /// Previous-layer states of the consumers (empty unless fan-outs are
    /// aggregated).
    pub fn fanouts(&self, state: usize) -> &[u32] {
        if self.fanout_offsets.is_empty() {
            return &[];
        }
        &self.fanouts[self.fanout_offsets[state] as usize..self.fanout_offsets[state + 1] as usize]
    }

    /// Neighbour group `g`: 0 fanins, 1 fanouts.
    pub fn group(&self, state: usize, g: usize) -> &[u32] {
        if g == 0 {
            self.fanins(state)
        } else {
            self.fanouts(state)
        }
    }

    fn new(with_fanouts: bool) -> StateLayer {
        StateLayer {
            fanin_offsets: vec![0],
            fanout_offsets: if with_fanouts { vec![0] } else { Vec::new() },
            ..StateLayer::default()
        }
    }

    fn push(&mut self, own: u32, fanins: &[u32], fanouts: &[u32]) -> u32 {
        self.self_state.push(own);
        self.fanins.extend_from_slice(fanins);
        self.fanin_offsets.push(self.fanins.len() as u32);
        if !self.fanout_offsets.is_empty() {
            self.fanouts.extend_from_slice(fanouts);
            self.fanout_offsets.push(self.fanouts.len() as u32);
        }
        (self.self_state.len() - 1) as u32
    }
}

/// Per-layer states of one or more graphs (node ids concatenated in order).
#[derive(Clone, Debug, Default)]
pub struct StateGraph {
    /// Feature rows of the layer-0 states.
    pub inputs: Vec<[u8; 3]>,
    pub layers: Vec<StateLayer>,
    /// Final-layer state of every node.
    pub node_state: Vec<u32>,
    /// Start of each graph's nodes in `node_state`, then the total.
    pub graph_offsets: Vec<usize>,
}

impl StateGraph {
    pub fn num_nodes(&self) -> usize {
        self.node_state.len()
    }

    pub fn num_states(&self, layer: usize) -> usize {
        if layer == 0 {
            self.inputs.len()
        } else {
            self.layers[layer - 1].len()
        }
    }

    pub fn build(
        graphs: &[(&Aig, &NodeFeatures)],
        num_layers: usize,
        aggregation: Aggregation,
    ) -> StateGraph {
        let fanouts: Vec<Fanouts> = match aggregation {
            Aggregation::Fanin => Vec::new(),
            Aggregation::FaninFanout => graphs.iter().map(|(g, _)| g.fanout_adjacency()).collect(),
        };
        let with: Vec<_> = graphs
            .iter()
            .enumerate()
            .map(|(i, &(g, f))| (g, f, fanouts.get(i)))
            .collect();
        StateGraph::build_with(&with, num_layers, aggregation)
    }

    /// As [`StateGraph::build`] with precomputed fan-out lists, which are
    /// required when fan-outs are aggregated.
    pub fn build_with(
        graphs: &[(&Aig, &NodeFeatures, Option<&Fanouts>)],
        num_layers: usize,
        aggregation: Aggregation,
    ) -> StateGraph {
        let with_fanouts = aggregation == Aggregation::FaninFanout;
        let mut graph_offsets = Vec::with_capacity(graphs.len() + 1);
        graph_offsets.push(0);
        for (g, f, fo) in graphs {
            assert_eq!(f.len(), g.num_ids(), "one feature row per node id");
            assert!(
                !with_fanouts || fo.is_some(),
                "fan-out aggregation needs fan-out lists"
            );
            graph_offsets.push(graph_offsets.last().unwrap() + g.num_ids());
        }
        let total = *graph_offsets.last().unwrap();

        // structural hash of every node's receptive field, per layer
        let mut fanin_of: Vec<[u32; 2]> = Vec::with_capacity(total);
        for (gi, (g, _, _)) in graphs.iter().enumerate() {
            let base = graph_offsets[gi] as u32;
            fanin_of.extend((0..g.num_ids() as NodeId).map(|id| match g.fanins(id) {
                Some([f0, f1]) => [base + f0.var(), base + f1.var()],
                None => [NO_FANIN; 2],
            }));
        }
        let mut hashes: Vec<Vec<u64>> = Vec::with_capacity(num_layers + 1);
        let mut h0 = Vec::with_capacity(total);
        for (_, f, _) in graphs {
            h0.extend(
                f.rows()
                    .iter()
                    .map(|r| mix(u64::from_le_bytes([r[0], r[1], r[2], 1, 0, 0, 0, 0]))),
            );
        }
        hashes.push(h0);
        let mut consumer_sum = if with_fanouts {
            vec![0u64; total]
        } else {
            Vec::new()
        };
        for _ in 0..num_layers {
            let prev = hashes.last().unwrap();
            if with_fanouts {
                consumer_sum.fill(0);
                for (v, f) in fanin_of.iter().enumerate() {
                    if f[0] != NO_FANIN {
                        let c = mix(prev[v] ^ FANOUT_SEED);
                        consumer_sum[f[0] as usize] = consumer_sum[f[0] as usize].wrapping_add(c);
                        consumer_sum[f[1] as usize] = consumer_sum[f[1] as usize].wrapping_add(c);
                    }
                }
            }
            let next: Vec<u64> = fanin_of
                .iter()
                .enumerate()
                .map(|(v, f)| {
                    let fanin = if f[0] == NO_FANIN {
                        FANIN_SEED
                    } else {
                        let (a, b) = (prev[f[0] as usize], prev[f[1] as usize]);
                        mix(a.min(b) ^ FANIN_SEED).wrapping_add(a.max(b))
                    };
                    let cons = consumer_sum.get(v).copied().unwrap_or(0);
                    mix(prev[v].wrapping_mul(SELF_MUL)
                        ^ fanin.rotate_left(21)
                        ^ cons.rotate_left(43))
                })
                .collect();
            hashes.push(next);
        }

        // intern the final layer for every node, lower layers on demand
        let locate = |v: usize| -> (usize, NodeId) {
            let gi = graph_offsets.partition_point(|&o| o <= v) - 1;
            (gi, (v - graph_offsets[gi]) as NodeId)
        };
        let mut interner = Interner::default();
        let node_state: Vec<u32> = hashes[num_layers]
            .iter()
            .enumerate()
            .map(|(v, &h)| interner.intern(h, v))
            .collect();
        let mut layers = vec![StateLayer::default(); num_layers];
        for k in (1..=num_layers).rev() {
            let mut below = Interner::default();
            let mut layer = StateLayer::new(with_fanouts);
            let prev = &hashes[k - 1];
            let mut fanin_buf: Vec<(u64, u32)> = Vec::with_capacity(2);
            let mut fanout_buf: Vec<(u64, u32)> = Vec::new();
            let (mut fanin_ids, mut fanout_ids) = (Vec::with_capacity(2), Vec::new());
            for &rep in &interner.reps {
                let (gi, id) = locate(rep);
                let (g, _, fo) = graphs[gi];
                let base = graph_offsets[gi];
                let own = below.intern(prev[rep], rep);
                fanin_buf.clear();
                if let Some(f) = g.fanins(id) {
                    for l in f {
                        let u = base + l.var() as usize;
                        fanin_buf.push((prev[u], below.intern(prev[u], u)));
                    }
                }
                fanout_buf.clear();
                if let (true, Some(fo)) = (with_fanouts, fo) {
                    for &(c, _) in fo.get(id) {
                        let u = base + c as usize;
                        fanout_buf.push((prev[u], below.intern(prev[u], u)));
                    }
                }
                // order by hash, not by state id, so float sums over a
                // group do not depend on what else is in the batch
                canonical(&mut fanin_buf, &mut fanin_ids);
                canonical(&mut fanout_buf, &mut fanout_ids);
                layer.push(own, &fanin_ids, &fanout_ids);
            }
            layers[k - 1] = layer;
            interner = below;
        }
        let inputs = interner
            .reps
            .iter()
            .map(|&rep| {
                let (gi, id) = locate(rep);
                graphs[gi].1.row(id as usize)
            })
            .collect();
        StateGraph {
            inputs,
            layers,
            node_state,
            graph_offsets,
        }
    }
}

fn canonical(group: &mut [(u64, u32)], ids: &mut Vec<u32>) {
    group.sort_unstable();
    ids.clear();
    ids.extend(group.iter().map(|&(_, s)| s));
}

const NO_FANIN: u32 = u32::MAX;
const FANIN_SEED: u64 = 0x9e37_79b9_7f4a_7c15;
const FANOUT_SEED: u64 = 0xc2b2_ae3d_27d4_eb4f;
const SELF_MUL: u64 = 0xff51_afd7_ed55_8ccd;

/// splitmix64 finaliser.
#[inline]
fn mix(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Dense ids for hashes in first-seen order, with one representative node
/// per id.
#[derive(Default)]
struct Interner {
    ids: FxHashMap<u64, u32>,
    reps: Vec<usize>,
}

impl Interner {
    #[inline]
    fn intern(&mut self, h: u64, node: usize) -> u32 {
        let next = self.reps.len() as u32;
        let id = *self.ids.entry(h).or_insert(next);
        if id == next {
            self.reps.push(node);
        }
        id
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ml::features::node_features;
    use crate::netgen::{generate, Family};

    #[test]
    fn regular_structure_compresses() {
        let (small, _) = generate(Family::Csa, 16).unwrap();
        let (large, _) = generate(Family::Csa, 48).unwrap();
        let fs = node_features(&small);
        let fl = node_features(&large);
        let a = StateGraph::build(&[(&small, &fs)], 4, Aggregation::Fanin);
        let b = StateGraph::build(&[(&large, &fl)], 4, Aggregation::Fanin);
        assert_eq!(a.num_states(4), b.num_states(4));
        assert!(b.num_states(4) * 20 < large.num_ids());
    }

    #[test]
    fn states_are_consistent_with_neighbors() {
        let (g, _) = generate(Family::Booth, 6).unwrap();
        let f = node_features(&g);
        for agg in [Aggregation::Fanin, Aggregation::FaninFanout] {
            let sg = StateGraph::build(&[(&g, &f)], 3, agg);
            assert_eq!(sg.num_nodes(), g.num_ids());
            for layer in &sg.layers {
                for s in 0..layer.len() {
                    assert!(layer.fanins(s).len() == 0 || layer.fanins(s).len() == 2);
                }
            }
        }
    }
}
