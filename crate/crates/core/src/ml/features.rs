use crate::aig::{Aig, NodeId};

/// Binary node features `[is_internal, fanin0_inverted, fanin1_inverted]`,
/// one row per node id. The constant and primary inputs are all zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeFeatures {
    rows: Vec<[u8; 3]>,
}

pub const FEATURE_DIM: usize = 3;

pub fn node_features(aig: &Aig) -> NodeFeatures {
    let rows = (0..aig.num_ids() as NodeId)
        .map(|id| match aig.fanins(id) {
            Some([f0, f1]) => [1, f0.is_inverted() as u8, f1.is_inverted() as u8],
            None => [0, 0, 0],
        })
        .collect();
    NodeFeatures { rows }
}

impl NodeFeatures {
    pub fn from_rows(rows: Vec<[u8; 3]>) -> NodeFeatures {
        assert!(
            rows.iter().flatten().all(|&x| x <= 1),
            "features are binary"
        );
        NodeFeatures { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, node: usize) -> [u8; 3] {
        self.rows[node]
    }

    pub fn rows(&self) -> &[[u8; 3]] {
        &self.rows
    }

    /// Drops the inversion flags, keeping only the node type.
    pub fn without_function_columns(&self) -> NodeFeatures {
        NodeFeatures {
            rows: self.rows.iter().map(|r| [r[0], 0, 0]).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aig::AigBuilder;

    #[test]
    fn rows_by_node_kind() {
        let mut b = AigBuilder::new(2);
        let (x, y) = (b.input(0), b.input(1));
        let plain = b.and(x, y);
        let both = b.and(!x, !y);
        let mixed = b.and(!plain, y);
        b.add_output(both).unwrap();
        b.add_output(mixed).unwrap();
        let f = node_features(&b.finish());
        assert_eq!(
            f.rows(),
            &[
                [0, 0, 0],
                [0, 0, 0],
                [0, 0, 0],
                [1, 0, 0],
                [1, 1, 1],
                [1, 1, 0]
            ]
        );
        assert_eq!(f.without_function_columns().row(4), [1, 0, 0]);
    }
}
