//! Protocol transformations: trace-ratio value tables and referee-side
//! simulation with clamping, deterministic message replacement, the
//! one-way-LOCC-to-hybrid reduction, public-coin derandomization, and the
//! sequential-measurement success floor.

pub mod hybrid;
pub mod newman;
pub mod replace;
pub mod union_bound;
pub mod value_table;

pub use hybrid::{locc1_to_hybrid, max_joint_deviation, HybridProtocol, OneWayLoccProtocol};
pub use newman::{
    newman_derandomize, sample_count, Derandomized, ParityHashEq, PublicCoinProtocol,
};
pub use replace::{
    reconstruct_estimates, replace_message, sequence_distance, ReplaceMessage, ReplaceParams,
    ReplaceRun,
};
pub use union_bound::{union_bound_check, UnionBoundCheck};
pub use value_table::{
    both_replaced_error_envelope, both_replaced_reference_order, chain_success_values,
    clamp_depth_error_bound, clamp_table, ratio_conditionals, replacement_error_bound,
    sequential_success_probs, simulate_both_replaced, simulate_from_tables, value_table, ClampRule,
    ClampedTable, PerturbPattern, ValueTable,
};
