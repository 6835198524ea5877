pub mod aig;
pub mod ml;
pub mod netgen;
pub mod oracle;
pub mod pipeline;
