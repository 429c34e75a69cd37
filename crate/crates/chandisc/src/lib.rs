//! Optimal discrimination of unitary channel ensembles with parallel, sequential
//! and general (indefinite causal order) testers.

pub mod basis;
pub mod catalog;
pub mod certificates;
pub mod channels;
pub mod constructions;
pub mod exec;
pub mod io;
pub mod linalg;
pub mod sdp;
pub mod strategies;
pub mod sweep;
pub mod tensor;

pub use exec::Execution;
