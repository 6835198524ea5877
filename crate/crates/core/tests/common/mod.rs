#![allow(dead_code)]

use aigsage_core::aig::{parse_aiger, Aig, NodeId};
use aigsage_core::ml::{Model, NodeFeatures};

/// AIGER text for explicit AND triples (lhs var, rhs literals), kept in the
/// given fanin order.
pub fn aiger_text(num_inputs: usize, ands: &[(u32, u32, u32)], outputs: &[u32]) -> String {
    let m = num_inputs + ands.len();
    let mut s = format!("aag {m} {num_inputs} 0 {} {}\n", outputs.len(), ands.len());
    for i in 1..=num_inputs {
        s += &format!("{}\n", 2 * i);
    }
    for o in outputs {
        s += &format!("{o}\n");
    }
    for (v, a, b) in ands {
        s += &format!("{} {a} {b}\n", 2 * v);
    }
    s
}

/// AND triples of a graph with fanin order preserved.
pub fn and_triples(g: &Aig) -> Vec<(u32, u32, u32)> {
    g.and_ids()
        .map(|id| {
            let [a, b] = g.fanins(id).unwrap();
            (id, a.raw(), b.raw())
        })
        .collect()
}

/// Relabels a graph: `pi_perm` permutes the inputs, `and_order` lists the
/// old AND ids in their new (topologically valid) order. Returns the new
/// graph and the old-to-new id map.
pub fn relabel(g: &Aig, pi_perm: &[usize], and_order: &[NodeId]) -> (Aig, Vec<NodeId>) {
    let n_in = g.num_inputs();
    let mut map = vec![0 as NodeId; g.num_ids()];
    for (old, &new) in pi_perm.iter().enumerate() {
        map[old + 1] = new as NodeId + 1;
    }
    for (k, &old) in and_order.iter().enumerate() {
        map[old as usize] = (n_in + 1 + k) as NodeId;
    }
    let lit = |raw: u32| 2 * map[(raw / 2) as usize] + raw % 2;
    let ands: Vec<_> = and_order
        .iter()
        .map(|&old| {
            let [a, b] = g.fanins(old).unwrap();
            (map[old as usize], lit(a.raw()), lit(b.raw()))
        })
        .collect();
    let outs: Vec<u32> = g.outputs().iter().map(|o| lit(o.raw())).collect();
    (parse_aiger(&aiger_text(n_in, &ands, &outs)).unwrap(), map)
}

/// Disjoint union: inputs of `a` then `b`, ANDs of `a` then `b`. Returns
/// the graph and the id maps of both parts.
pub fn disjoint_union(a: &Aig, b: &Aig) -> (Aig, Vec<NodeId>, Vec<NodeId>) {
    let (ia, ib) = (a.num_inputs() as u32, b.num_inputs() as u32);
    let aa = a.num_ands() as u32;
    let map_a: Vec<NodeId> = (0..a.num_ids() as u32)
        .map(|v| {
            if v == 0 {
                0
            } else if v <= ia {
                v
            } else {
                v + ib
            }
        })
        .collect();
    let map_b: Vec<NodeId> = (0..b.num_ids() as u32)
        .map(|v| {
            if v == 0 {
                0
            } else if v <= ib {
                v + ia
            } else {
                v + ia + aa
            }
        })
        .collect();
    let la = |r: u32| 2 * map_a[(r / 2) as usize] + r % 2;
    let lb = |r: u32| 2 * map_b[(r / 2) as usize] + r % 2;
    let mut ands: Vec<_> = and_triples(a)
        .into_iter()
        .map(|(v, x, y)| (map_a[v as usize], la(x), la(y)))
        .collect();
    ands.extend(
        and_triples(b)
            .into_iter()
            .map(|(v, x, y)| (map_b[v as usize], lb(x), lb(y))),
    );
    let mut outs: Vec<u32> = a.outputs().iter().map(|o| la(o.raw())).collect();
    outs.extend(b.outputs().iter().map(|o| lb(o.raw())));
    let g = parse_aiger(&aiger_text((ia + ib) as usize, &ands, &outs)).unwrap();
    (g, map_a, map_b)
}

/// Reference GraphSAGE evaluation node by node, in f64 from the stored f32
/// parameters: layer embeddings, then shared head and task softmaxes.
pub struct Reference {
    pub embeddings: Vec<Vec<f64>>,
    pub probs: Vec<Vec<Vec<f64>>>,
}

fn affine(w: &[f32], b: &[f32], x: &[f64]) -> Vec<f64> {
    let inp = x.len();
    b.iter()
        .enumerate()
        .map(|(o, &bias)| bias as f64 + (0..inp).map(|i| w[o * inp + i] as f64 * x[i]).sum::<f64>())
        .collect()
}

pub fn reference_forward(
    model: &Model,
    g: &Aig,
    features: &NodeFeatures,
    with_fanouts: bool,
) -> Reference {
    let n = g.num_ids();
    let mut fanin: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut fanout: Vec<Vec<usize>> = vec![Vec::new(); n];
    for id in g.and_ids() {
        for l in g.fanins(id).unwrap() {
            fanin[id as usize].push(l.var() as usize);
            fanout[l.var() as usize].push(id as usize);
        }
    }
    let mean = |h: &[Vec<f64>], set: &[usize], d: usize| {
        let mut agg = vec![0.0; d];
        for &u in set {
            for k in 0..d {
                agg[k] += h[u][k];
            }
        }
        if !set.is_empty() {
            for a in &mut agg {
                *a /= set.len() as f64;
            }
        }
        agg
    };
    let mut h: Vec<Vec<f64>> = (0..n)
        .map(|i| features.row(i).iter().map(|&x| x as f64).collect())
        .collect();
    for layer in &model.params.layers {
        h = (0..n)
            .map(|v| {
                let d = h[v].len();
                let mut x = h[v].clone();
                x.extend(mean(&h, &fanin[v], d));
                if with_fanouts {
                    x.extend(mean(&h, &fanout[v], d));
                }
                affine(&layer.w, &layer.b, &x)
                    .into_iter()
                    .map(|y| y.max(0.0))
                    .collect()
            })
            .collect();
    }
    let probs = model
        .params
        .tasks
        .iter()
        .map(|task| {
            (0..n)
                .map(|v| {
                    let a: Vec<f64> = affine(&model.params.head.w, &model.params.head.b, &h[v])
                        .into_iter()
                        .map(|y| y.max(0.0))
                        .collect();
                    let z = affine(&task.w, &task.b, &a);
                    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let e: Vec<f64> = z.iter().map(|x| (x - m).exp()).collect();
                    let s: f64 = e.iter().sum();
                    e.into_iter().map(|x| x / s).collect()
                })
                .collect()
        })
        .collect();
    Reference {
        embeddings: h,
        probs,
    }
}
