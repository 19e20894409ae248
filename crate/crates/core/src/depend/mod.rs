//! Bit-level dependency tracing and hypothesis layouts.

pub mod expr;
pub mod layout;
pub mod program;
pub mod trace;

pub use expr::{BitExpr, BitRef, ExprBuilder, Node, NodeId};
pub use layout::{
    reduce_layout, render_dependency_map, target_window, Hypothesis, HypothesisLayout, KeyGroup,
    WindowBit,
};
pub use program::{NonceBatch, PNode, PreparedProgram, Program};
pub use trace::{oracle_bit, oracle_state, trace, Target, TraceError, TRACEABLE_ROUNDS};
