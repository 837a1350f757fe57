//! Anvil compiler core: front end, event-graph type checker, optimizer,
//! SystemVerilog back end, and an execution-log oracle.

pub mod codegen;
pub mod diagnostics;
pub mod driver;
pub mod event_graph;
pub mod frontend;
pub mod optimizer;
pub mod semantics;
pub mod timing;
pub mod typecheck;
