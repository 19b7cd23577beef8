//! Dynamic evaluation of conjunctive queries under single-tuple updates.
//!
//! Queries whose homomorphic core is q-hierarchical are maintained with
//! constant update time, constant-time counting and Boolean answering, and
//! constant-delay enumeration ([`DynamicEngine`]). [`classify`] decides
//! which of these tasks are tractable for a given query, and [`oracle`]
//! evaluates any query from scratch for comparison.

pub mod analysis;
pub mod bench;
pub mod database;
pub mod engine;
pub mod oracle;
pub mod parse;
pub mod query;
pub mod weight;
pub mod workload;

pub use analysis::{classify, Classification, Verdict};
pub use database::{parse_snapshot, Const, Database, DatabaseError, UpdateCommand, UpdateKind};
pub use engine::{ChangeSummary, Cursor, DynamicEngine, EngineError, StaleCursor};
pub use parse::parse_query;
pub use query::{Query, QueryError, Schema};
pub use weight::Weight;

/// Engine with 64-bit weights.
pub type Engine = DynamicEngine<u64>;
/// Engine with 128-bit weights.
pub type WideEngine = DynamicEngine<u128>;
/// Engine with arbitrary-precision weights.
pub type ExactEngine = DynamicEngine<num_bigint::BigUint>;
