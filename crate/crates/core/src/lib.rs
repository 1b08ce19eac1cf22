//! Security smell detection for infrastructure-as-code scripts.

pub mod cli;
pub mod dataset;
pub mod eval;
pub mod ir;
pub mod parsers;
pub mod pruner;
pub mod rules;
