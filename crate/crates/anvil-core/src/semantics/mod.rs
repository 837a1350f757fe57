//! Executable operational semantics: bounded enumeration of execution logs and the
//! safety predicate over them. This is the ground truth the type checker is tested
//! against.

mod enumerate;
mod log;
mod verify;

pub use enumerate::{enumerate_logs, msg_key, msg_of_key, number_nodes, Enumerator};
pub use log::{
    check_log_safety, compose_logs, hull, interval_ok, is_safe, lt, reg_dep, value_facts, Action, ExecutionLog,
    LogDuration, MsgKey, RegKey, UnsafeReason, ValId, ValueFacts, Violation, Window,
};
pub use verify::{
    compose_prefix, composition_count, concretize, verify_program, Bounds, Mode, Names, VerifyError, VerifyReport,
    Witness,
};
