use super::ast::ThreadKind;
use super::resolve::{RKind, RTerm, ResolvedThread};

/// The term checked for a thread: `iters` unrolled copies of its body.
///
/// Loops become `t >> t >> ...`. Recursive threads become nested `Recur` nodes so
/// that each copy starts where the previous one reaches `recurse`; in the last
/// copy `recurse` is inert.
pub fn check_term(thread: &ResolvedThread, iters: usize) -> RTerm {
    let iters = iters.max(1);
    let body = &thread.body;
    match thread.kind {
        ThreadKind::Loop => {
            let mut t = body.clone();
            for _ in 1..iters {
                t = RTerm::new(RKind::Wait(Box::new(body.clone()), Box::new(t)), body.span);
            }
            t
        }
        ThreadKind::Recursive => {
            let mut t = body.clone();
            for _ in 1..iters {
                t = RTerm::new(RKind::Recur { body: Box::new(body.clone()), next: Box::new(t) }, body.span);
            }
            t
        }
    }
}

/// The term lowered to hardware: one iteration; the FSM restarts it.
pub fn codegen_term(thread: &ResolvedThread) -> RTerm {
    thread.body.clone()
}
