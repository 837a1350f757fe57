//! Timing-safety type checking.
//!
//! Each thread is unrolled, lowered to an event graph, and every value use, send,
//! and register assignment turns into an obligation over event patterns. The
//! obligations are then discharged with [`crate::timing::Timing`]; anything not
//! proved is reported.

mod discharge;
mod infer;

pub use infer::build;

use crate::diagnostics::{self, Diagnostic};
use crate::event_graph::{EventGraph, EventId};
use crate::frontend::desugar;
use crate::frontend::resolve::{
    EndpointId, EndpointOrigin, MsgRef, ProcId, RKind, RTerm, RegId, ResolvedProgram, VarId,
};
use crate::frontend::span::Span;
use crate::timing::{Pattern, PatternSet, Timing};
use serde::Serialize;

pub type LoanId = usize;

/// One element of a lifetime's end set: a pattern, or the loan of a register read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum EndItem {
    Pat(Pattern),
    Loan(LoanId),
}

/// `[start, min(end))`. An empty end set lives forever.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Lifetime {
    pub start: EventId,
    pub end: Vec<EndItem>,
}

impl Lifetime {
    pub fn patterns(&self) -> PatternSet {
        PatternSet::of(self.end.iter().filter_map(|i| match i {
            EndItem::Pat(p) => Some(*p),
            EndItem::Loan(_) => None,
        }))
    }
}

/// A point where the value read from a register must still be unchanged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Demand {
    /// The demand only applies in executions reaching this event.
    pub anchor: EventId,
    pub until: PatternSet,
}

/// A register read: the register is borrowed from `read` until every demand.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LoanVar {
    pub reg: RegId,
    pub read: EventId,
    pub demands: Vec<Demand>,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum UseCtx {
    Assign,
    Cond,
    Print,
    Expr,
}

impl UseCtx {
    pub fn message(self) -> &'static str {
        match self {
            UseCtx::Assign => "Value not live long enough in register assignment!",
            UseCtx::Cond => "Value not live long enough in branch condition!",
            UseCtx::Print => "Value not live long enough in debug print!",
            UseCtx::Expr => "Value not live long enough in expression!",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Obligation {
    /// The value must be available at `start` and live until `until`.
    ValueUse { ctx: UseCtx, anchor: EventId, start: EventId, until: PatternSet, value: Lifetime, span: Span },
    /// A sent value must be available when the send starts and outlive the message contract.
    SendCoverage { msg: MsgRef, anchor: EventId, start: EventId, required: PatternSet, value: Lifetime, span: Span },
    /// No loan of `reg` may be live across the assignment at `at`.
    RegMutation { reg: RegId, at: EventId, span: Span },
    /// Two sends of the same message must not overlap.
    SendNonOverlap { msg: MsgRef, first: (EventId, PatternSet), second: (EventId, PatternSet), span: Span },
    /// An attempt must begin no later than the deadline its sync mode sets.
    SyncMode { msg: MsgRef, anchors: Vec<EventId>, attempt: EventId, deadline: PatternSet, span: Span, what: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Binding {
    pub var: VarId,
    pub lifetime: Lifetime,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SyncRecord {
    pub msg: MsgRef,
    pub sync: EventId,
    pub attempt: EventId,
    pub span: Span,
}

/// Everything derived from one unrolled thread.
#[derive(Debug, Clone, Default)]
pub struct ThreadCheck {
    pub graph: EventGraph,
    pub ty: Lifetime,
    pub obligations: Vec<Obligation>,
    pub loans: Vec<LoanVar>,
    /// Let-bound values in build order.
    pub bindings: Vec<Binding>,
    /// Values assigned to registers, in build order.
    pub assigns: Vec<(RegId, Lifetime, Span)>,
    pub syncs: Vec<SyncRecord>,
    pub sends: Vec<(MsgRef, EventId, PatternSet, Span)>,
    /// Events reaching a `recurse` that has no unrolled copy after it.
    pub recurse_points: Vec<EventId>,
    /// Errors found while building, before discharge.
    pub early: Vec<Diagnostic>,
    pub diagnostics: Vec<Diagnostic>,
}

impl Default for Lifetime {
    fn default() -> Self {
        Lifetime { start: EventId(0), end: vec![] }
    }
}

impl ThreadCheck {
    /// The end of a lifetime with each loan replaced by its latest demands.
    pub fn resolved_end(&self, t: &Timing, lt: &Lifetime) -> PatternSet {
        let mut pats: Vec<Pattern> = Vec::new();
        for item in &lt.end {
            match item {
                EndItem::Pat(p) => pats.push(*p),
                EndItem::Loan(l) => {
                    for d in self.loan_extent(t, *l) {
                        pats.extend(d.0);
                    }
                }
            }
        }
        PatternSet::of(pats)
    }

    /// Demands of a loan that are not provably covered by another demand.
    pub fn loan_extent(&self, t: &Timing, l: LoanId) -> Vec<PatternSet> {
        let ds: Vec<&PatternSet> = self.loans[l].demands.iter().map(|d| &d.until).collect();
        let mut out: Vec<PatternSet> = Vec::new();
        for (i, d) in ds.iter().enumerate() {
            let covered = ds
                .iter()
                .enumerate()
                .any(|(j, o)| j != i && *o != *d && t.le(d, o).proved() && !(t.le(o, d).proved() && j > i))
                || ds[..i].contains(d);
            if !covered {
                out.push((*d).clone());
            }
        }
        out
    }

    /// Loan intervals of a register: `(read event, until)` for every non-redundant demand.
    pub fn loan_time(&self, t: &Timing, reg: RegId) -> Vec<(EventId, PatternSet)> {
        let mut v = Vec::new();
        for (i, l) in self.loans.iter().enumerate() {
            if l.reg == reg {
                for d in self.loan_extent(t, i) {
                    v.push((l.read, d));
                }
            }
        }
        v.sort();
        v.dedup();
        v
    }

    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.is_error())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    /// Copies of each thread body to unroll.
    pub iters: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { iters: 2 }
    }
}

#[derive(Debug, Clone)]
pub struct ProcessCheck {
    pub proc: ProcId,
    pub name: String,
    pub threads: Vec<ThreadCheck>,
    pub diagnostics: Vec<Diagnostic>,
}

impl ProcessCheck {
    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.is_error())
    }
}

#[derive(Debug, Clone)]
pub struct ProgramCheck {
    pub processes: Vec<ProcessCheck>,
    /// All diagnostics, deduplicated and in source order.
    pub diagnostics: Vec<Diagnostic>,
}

impl ProgramCheck {
    pub fn ok(&self) -> bool {
        !self.diagnostics.iter().any(|d| d.is_error())
    }

    pub fn process(&self, name: &str) -> Option<&ProcessCheck> {
        self.processes.iter().find(|p| p.name == name)
    }

    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.is_error())
    }
}

/// Builds and discharges one thread of a process.
pub fn check_thread(prog: &ResolvedProgram, proc: ProcId, thread: usize, opts: CheckOptions) -> ThreadCheck {
    let p = &prog.procs[proc];
    let term = desugar::check_term(&p.threads[thread], opts.iters);
    let mut tc = build(prog, p, &term);
    discharge::discharge(prog, p, &mut tc);
    tc
}

pub fn check_process(prog: &ResolvedProgram, proc: ProcId, opts: CheckOptions) -> ProcessCheck {
    let p = &prog.procs[proc];
    let threads: Vec<ThreadCheck> = (0..p.threads.len()).map(|i| check_thread(prog, proc, i, opts)).collect();
    let mut diagnostics: Vec<Diagnostic> = threads.iter().flat_map(|t| t.diagnostics.iter().cloned()).collect();
    diagnostics.extend(endpoint_checks(prog, proc));
    diagnostics::dedup(&mut diagnostics);
    ProcessCheck { proc, name: p.name.clone(), threads, diagnostics }
}

/// Checks every process independently, plus endpoint ownership and spawn compatibility.
pub fn check_program(prog: &ResolvedProgram, opts: CheckOptions) -> ProgramCheck {
    let processes: Vec<ProcessCheck> = (0..prog.procs.len()).map(|i| check_process(prog, i, opts)).collect();
    let mut diagnostics: Vec<Diagnostic> = processes.iter().flat_map(|p| p.diagnostics.iter().cloned()).collect();
    diagnostics::dedup(&mut diagnostics);
    ProgramCheck { processes, diagnostics }
}

fn used_endpoints(t: &RTerm, out: &mut Vec<(EndpointId, Span)>) {
    match &t.kind {
        RKind::Send { msg, .. } | RKind::Recv { msg } | RKind::Ready { msg } => out.push((msg.ep, t.span)),
        _ => {}
    }
    for c in t.children() {
        used_endpoints(c, out);
    }
}

fn endpoint_checks(prog: &ResolvedProgram, proc: ProcId) -> Vec<Diagnostic> {
    let p = &prog.procs[proc];
    let mut ds = Vec::new();
    let mut used: Vec<(EndpointId, Span)> = Vec::new();
    for t in &p.threads {
        used_endpoints(&t.body, &mut used);
    }
    let mut passed: Vec<Option<(String, Span)>> = vec![None; p.endpoints.len()];
    for s in &p.spawns {
        let callee = &prog.procs[s.proc];
        if callee.params.len() != s.args.len() {
            ds.push(Diagnostic::error(
                "endpoint",
                format!("`{}` expects {} endpoint(s), got {}", callee.name, callee.params.len(), s.args.len()),
                s.span,
            ));
        }
        for (arg, param) in s.args.iter().zip(&callee.params) {
            let a = &p.endpoints[*arg];
            let f = &callee.endpoints[*param];
            if a.chan != f.chan {
                ds.push(Diagnostic::error(
                    "endpoint",
                    format!(
                        "Endpoint `{}` has channel type `{}` but `{}` expects `{}`",
                        a.name, prog.channels[a.chan].name, callee.name, prog.channels[f.chan].name
                    ),
                    s.span,
                ));
            } else if a.side != f.side {
                ds.push(Diagnostic::error(
                    "endpoint",
                    format!(
                        "Endpoint `{}` is on the wrong side of `{}` for `{}`",
                        a.name, prog.channels[a.chan].name, callee.name
                    ),
                    s.span,
                ));
            }
            if let Some((other, _)) = &passed[*arg] {
                ds.push(Diagnostic::error(
                    "endpoint",
                    format!("Endpoint `{}` is already owned by `{other}`", a.name),
                    s.span,
                ));
            }
            passed[*arg] = Some((callee.name.clone(), s.span));
        }
    }
    for (ep, span) in &used {
        if let Some((owner, _)) = &passed[*ep] {
            ds.push(Diagnostic::error(
                "endpoint",
                format!("Endpoint `{}` is used here but owned by spawned `{owner}`", p.endpoints[*ep].name),
                *span,
            ));
        }
    }
    for (i, e) in p.endpoints.iter().enumerate() {
        if matches!(e.origin, EndpointOrigin::Local(_)) && passed[i].is_none() && !used.iter().any(|(u, _)| *u == i) {
            ds.push(Diagnostic::warning("endpoint", format!("Endpoint `{}` is never used", e.name), e.span));
        }
    }
    ds
}
