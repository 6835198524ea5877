//! Ground-truth node labels for the three classification tasks.

use std::fmt::Write as _;

use thiserror::Error;

use super::classify::{classify_all, Classification};
use super::cut::{enumerate_cuts, CutParams};
use super::extract::{extract_adder_tree, AdderTree};
use super::truth::FunctionClass;
use crate::aig::{Aig, NodeId};

pub const NEITHER: u8 = 0;
pub const ROOT: u8 = 1;
pub const LEAF: u8 = 2;
pub const ROOT_AND_LEAF: u8 = 3;

/// Per node id (constant included, always zero): adder boundary class,
/// XOR-root flag, MAJ-root flag.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NodeLabels {
    pub boundary: Vec<u8>,
    pub xor: Vec<u8>,
    pub maj: Vec<u8>,
}

#[derive(Debug, Error)]
pub enum LabelCsvError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
}

impl NodeLabels {
    pub fn zeros(num_ids: usize) -> NodeLabels {
        NodeLabels {
            boundary: vec![0; num_ids],
            xor: vec![0; num_ids],
            maj: vec![0; num_ids],
        }
    }

    pub fn len(&self) -> usize {
        self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundary.is_empty()
    }

    /// Labels of `task` (0 boundary, 1 XOR, 2 MAJ).
    pub fn task(&self, task: usize) -> &[u8] {
        match task {
            0 => &self.boundary,
            1 => &self.xor,
            2 => &self.maj,
            _ => panic!("task index {task} out of range"),
        }
    }

    pub fn task_mut(&mut self, task: usize) -> &mut Vec<u8> {
        match task {
            0 => &mut self.boundary,
            1 => &mut self.xor,
            2 => &mut self.maj,
            _ => panic!("task index {task} out of range"),
        }
    }

    pub fn nodes_with(&self, task: usize, class: u8) -> Vec<NodeId> {
        self.task(task)
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == class)
            .map(|(i, _)| i as NodeId)
            .collect()
    }

    /// `node_id,task1,task2,task3` for every non-constant node.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node_id,task1,task2,task3\n");
        for i in 1..self.len() {
            writeln!(
                out,
                "{i},{},{},{}",
                self.boundary[i], self.xor[i], self.maj[i]
            )
            .unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<NodeLabels, LabelCsvError> {
        let mut labels = NodeLabels::zeros(1);
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (ln == 0 && line.starts_with("node_id")) {
                continue;
            }
            let err = |msg: &str| LabelCsvError::Syntax {
                line: ln + 1,
                msg: msg.to_string(),
            };
            let f: Vec<u32> = line
                .split(',')
                .map(|t| t.trim().parse::<u32>())
                .collect::<Result<_, _>>()
                .map_err(|e| err(&e.to_string()))?;
            if f.len() != 4 {
                return Err(err("expected 4 fields"));
            }
            if f[0] as usize != labels.len() {
                return Err(err("node ids must be consecutive from 1"));
            }
            if f[1] > 3 || f[2] > 1 || f[3] > 1 {
                return Err(err("class out of range"));
            }
            labels.boundary.push(f[1] as u8);
            labels.xor.push(f[2] as u8);
            labels.maj.push(f[3] as u8);
        }
        Ok(labels)
    }
}

/// Oracle output for one graph.
#[derive(Clone, Debug)]
pub struct OracleResult {
    pub classification: Classification,
    pub tree: AdderTree,
    pub labels: NodeLabels,
}

/// Runs cut enumeration, classification and extraction, and derives labels:
/// XOR flag for XOR2/XOR3-class nodes, MAJ flag for MAJ3-class nodes and
/// extracted half-adder carries, and the boundary class from the roots and
/// inputs of the extracted adders.
pub fn run_oracle(aig: &Aig, params: CutParams) -> OracleResult {
    let cuts = enumerate_cuts(aig, params);
    let classification = classify_all(aig, &cuts);
    let tree = extract_adder_tree(aig, &classification);
    let labels = labels_from(aig, &classification, &tree);
    OracleResult {
        classification,
        tree,
        labels,
    }
}

pub fn label_graph(aig: &Aig) -> NodeLabels {
    run_oracle(aig, CutParams::default()).labels
}

/// Labels implied by a classification and the tree extracted from it.
pub fn labels_from(aig: &Aig, cls: &Classification, tree: &AdderTree) -> NodeLabels {
    let mut labels = NodeLabels::zeros(aig.num_ids());
    for id in aig.and_ids() {
        let i = id as usize;
        labels.xor[i] = cls.is_xor(id) as u8;
        labels.maj[i] = (cls.is_maj(id)
            && cls
                .supports(id)
                .iter()
                .any(|s| s.class == FunctionClass::Maj3)) as u8;
    }
    for a in &tree.adders {
        labels.maj[a.carry as usize] = 1;
        labels.boundary[a.sum as usize] |= ROOT;
        labels.boundary[a.carry as usize] |= ROOT;
        for &l in &a.inputs {
            labels.boundary[l as usize] |= LEAF;
        }
    }
    labels
}
