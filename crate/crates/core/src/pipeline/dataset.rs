use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aig::Aig;
use crate::ml::{node_features, NodeFeatures, TrainGraph};
use crate::netgen::{generate, Family, NetgenError};
use crate::oracle::{run_oracle, AdderTree, CutParams, NodeLabels};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// One generated, oracle-labelled design.
#[derive(Clone, Debug)]
pub struct Design {
    pub name: String,
    pub family: Family,
    pub bits: usize,
    pub split: Split,
    pub aig: Aig,
    pub features: NodeFeatures,
    pub labels: NodeLabels,
    /// The oracle's tree, kept for adder-level metrics.
    pub oracle_tree: AdderTree,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DatasetError {
    #[error(transparent)]
    Netgen(#[from] NetgenError),
    #[error("design {0} appears more than once")]
    Duplicate(String),
}

#[derive(Clone, Debug, Default)]
pub struct Dataset {
    designs: Vec<Design>,
}

pub fn design_name(family: Family, bits: usize) -> String {
    format!("{family}{bits}")
}

/// Generates and labels every `(family, bits)` design and tags it with
/// `split`.
pub fn build_dataset(specs: &[(Family, usize)], split: Split) -> Result<Dataset, DatasetError> {
    let mut ds = Dataset::default();
    for &(family, bits) in specs {
        let (aig, _) = generate(family, bits)?;
        let oracle = run_oracle(&aig, CutParams::default());
        ds.push(Design {
            name: design_name(family, bits),
            family,
            bits,
            split,
            features: node_features(&aig),
            labels: oracle.labels,
            oracle_tree: oracle.tree,
            aig,
        })?;
    }
    Ok(ds)
}

impl Dataset {
    /// Adds a design; names are unique, so a design has exactly one split.
    pub fn push(&mut self, design: Design) -> Result<(), DatasetError> {
        if self.designs.iter().any(|d| d.name == design.name) {
            return Err(DatasetError::Duplicate(design.name));
        }
        self.designs.push(design);
        Ok(())
    }

    /// Merges `other` into `self`.
    pub fn extend(&mut self, other: Dataset) -> Result<(), DatasetError> {
        for d in other.designs {
            self.push(d)?;
        }
        Ok(())
    }

    pub fn designs(&self) -> &[Design] {
        &self.designs
    }

    pub fn len(&self) -> usize {
        self.designs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.designs.is_empty()
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &Design> {
        self.designs.iter().filter(move |d| d.split == split)
    }

    /// Training graphs, drawn from the training split only.
    pub fn training_graphs(&self) -> Vec<TrainGraph<'_>> {
        self.split(Split::Train)
            .map(|d| TrainGraph {
                aig: &d.aig,
                labels: &d.labels,
            })
            .collect()
    }
}
