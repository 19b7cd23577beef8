//! Static analysis of conjunctive queries: the q-hierarchical test, q-trees,
//! homomorphic cores and the tractability classification built on them.

mod classify;
mod core;
mod hierarchy;
mod qtree;

pub use self::core::{homomorphic_core, homomorphism_exists, is_isomorphic};
pub use classify::{classify, Classification, Verdict};
pub use hierarchy::{hierarchy_violation, is_q_hierarchical, Condition, Violation};
pub(crate) use qtree::atom_text;
pub use qtree::{build_qtree, QTree, QTreeError};
