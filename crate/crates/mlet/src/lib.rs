//! Power-efficient TCAM IP lookup: routing-table compaction, a multi-stage
//! TCAM behavioral model with level-by-level enabling, and power accounting
//! in enabled ternary cells per search.
//!
//! The pipeline has three parts:
//!
//! - [`compact`]: overlap elimination, partitioning into per-port partial
//!   routing tables, heuristic cube minimization against a trie oracle,
//!   and a merger that records per-port row ranges;
//! - [`engine`]: the multi-stage TCAM model — rows split into stages, a
//!   stage enabled only when every earlier stage of its row matched, with
//!   incremental insert/withdraw support;
//! - [`metrics`]: EPS / MEPS / POF accounting and the stage-configuration
//!   sweep harness, with [`synth`] supplying deterministic synthetic
//!   tables and traces.
//!
//! All core values are immutable after construction and safe to share
//! across threads; `lookup` is pure with respect to engine state.

pub mod compact;
pub mod cube;
pub mod engine;
pub mod metrics;
pub mod report;
pub mod synth;
pub mod table;
pub mod trie;

pub use compact::{compact, MinimizedTable, PartialRoutingTable};
pub use cube::TernaryCube;
pub use engine::{split_address, LookupResult, MstcamEngine, StageConfig};
pub use table::{Prefix, RoutingTable};
pub use trie::LpmTrie;
