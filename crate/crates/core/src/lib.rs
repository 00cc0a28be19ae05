//! Classical and hierarchical planning over a STRIPS subset of PDDL.

pub mod csp;
pub mod fixtures;
pub mod ground;
pub mod htn;
pub mod model;
pub mod oracle;
pub mod pddl;
pub mod search;
pub mod validate;

pub use model::*;
