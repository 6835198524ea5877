//! Exact adder-tree recognition: cut enumeration, function
//! classification and full/half adder extraction.

pub mod classify;
pub mod cut;
pub mod extract;
pub mod label;
pub mod truth;

pub use classify::{
    classify_all, classify_node, has_xor2_sibling, structural_supports, Classification,
    LocalClassifier, NodeClass, Support, SupportKey,
};
pub use cut::{
    cone_truth_table, cut_truth_table, enumerate_cuts, ConeScratch, Cut, CutError, CutParams,
    CutSets,
};
pub use extract::{extract_adder_tree, Adder, AdderTree};
pub use label::{label_graph, labels_from, run_oracle, NodeLabels, OracleResult};
pub use truth::{function_class, npn_class, FunctionClass, TruthTable};
