//! Builds a thread's event graph and timing obligations in one pass over its term.

use super::{Binding, Demand, EndItem, Lifetime, LoanVar, Obligation, SyncRecord, ThreadCheck, UseCtx};
use crate::diagnostics::Diagnostic;
use crate::event_graph::{ActionKind, EventGraph, EventId, ValueExpr, ValueId};
use crate::frontend::resolve::{Dur, MsgRef, RKind, RTerm, ResolvedProc, ResolvedProgram, Sync};
use crate::frontend::span::Span;
use crate::timing::{Pattern, PatternSet};
use std::collections::HashMap;

/// Type of a term: when its value becomes available, how long it lives, and what it is.
#[derive(Debug, Clone)]
struct Ty {
    ev: EventId,
    end: Vec<EndItem>,
    val: ValueId,
}

struct Builder<'a> {
    prog: &'a ResolvedProgram,
    proc: &'a ResolvedProc,
    g: EventGraph,
    env: HashMap<usize, (EventId, Vec<EndItem>, ValueId)>,
    recur: Vec<Vec<EventId>>,
    out: ThreadCheck,
}

/// Lowers `term`, rooted at a fresh entry event, into an event graph plus the
/// obligations its typing requires. Nothing is discharged here.
pub fn build(prog: &ResolvedProgram, proc: &ResolvedProc, term: &RTerm) -> ThreadCheck {
    let g = EventGraph::new();
    let entry = g.entry;
    let mut b = Builder { prog, proc, g, env: HashMap::new(), recur: vec![], out: ThreadCheck::default() };
    let ty = b.infer(term, entry);
    b.finish_sends();
    let mut out = b.out;
    out.ty = Lifetime { start: ty.ev, end: ty.end };
    out.graph = b.g;
    out
}

fn union(a: &[EndItem], b: &[EndItem]) -> Vec<EndItem> {
    let mut v: Vec<EndItem> = a.iter().chain(b).copied().collect();
    v.sort();
    v.dedup();
    v
}

impl Builder<'_> {
    fn unit(&mut self, ev: EventId) -> Ty {
        let val = self.g.add_value(ValueExpr::Unit);
        Ty { ev, end: vec![], val }
    }

    fn duration(&self, m: MsgRef, sync: EventId) -> PatternSet {
        match self.prog.msg(self.proc, m).duration {
            Dur::Cycles(k) => PatternSet::single(Pattern::cycles(sync, k)),
            Dur::Message(idx) => PatternSet::single(Pattern::msg(sync, MsgRef { ep: m.ep, msg: idx })),
            Dur::Eternal => PatternSet::eternal(),
        }
    }

    fn sync_event(&mut self, m: MsgRef, ec: EventId, span: Span) -> EventId {
        let name = self.prog.msg_name(self.proc, m);
        self.g.msg_names.entry(m).or_insert(name);
        let pin = self.sync_mode(m, ec, span);
        let s = match pin {
            Some((p, k)) => self.g.pinned_sync(m, ec, p, k),
            None => self.g.msg_sync(m, ec),
        };
        self.out.syncs.push(SyncRecord { msg: m, sync: s, attempt: ec, span });
        s
    }

    /// Own-side sync modes constrain when an attempt may begin. A dependent mode
    /// also fixes when the sync happens, returned as a pin.
    fn sync_mode(&mut self, m: MsgRef, ec: EventId, span: Span) -> Option<(EventId, u32)> {
        let side = self.proc.endpoints[m.ep].side;
        let info = self.prog.msg(self.proc, m);
        let name = self.prog.msg_name(self.proc, m);
        match *info.sync_of(side) {
            Sync::Dynamic => None,
            Sync::Static(n) => {
                if let Some(prev) = self.out.syncs.iter().rev().find(|r| r.msg == m) {
                    self.out.obligations.push(Obligation::SyncMode {
                        msg: m,
                        anchors: vec![prev.sync, ec],
                        attempt: ec,
                        deadline: PatternSet::single(Pattern::cycles(prev.sync, n)),
                        span,
                        what: format!("Message `{name}` is not ready within its static sync window!"),
                    });
                }
                None
            }
            Sync::Dependent { msg, offset } => {
                let dep = MsgRef { ep: m.ep, msg };
                let dep_name = self.prog.msg_name(self.proc, dep);
                match self.out.syncs.iter().rev().find(|r| r.msg == dep) {
                    Some(prev) => {
                        let p = prev.sync;
                        self.out.obligations.push(Obligation::SyncMode {
                            msg: m,
                            anchors: vec![p, ec],
                            attempt: ec,
                            deadline: PatternSet::single(Pattern::cycles(p, offset)),
                            span,
                            what: format!("Message `{name}` misses its sync point relative to `{dep_name}`!"),
                        });
                        Some((p, offset))
                    }
                    None => {
                        self.out.early.push(Diagnostic::error(
                            "sync-mode",
                            format!(
                                "Message `{name}` is timed after `{dep_name}`, which has not synchronized before it!"
                            ),
                            span,
                        ));
                        None
                    }
                }
            }
        }
    }

    fn add_demands(&mut self, end: &[EndItem], anchor: EventId, until: &PatternSet) {
        for item in end {
            if let EndItem::Loan(l) = item {
                self.out.loans[*l].demands.push(Demand { anchor, until: until.clone() });
            }
        }
    }

    fn value_use(&mut self, ctx: UseCtx, ec: EventId, value: &Ty, span: Span) {
        let until = PatternSet::single(Pattern::cycles(ec, 1));
        self.add_demands(&value.end, ec, &until);
        self.out.obligations.push(Obligation::ValueUse {
            ctx,
            anchor: ec,
            start: ec,
            until,
            value: Lifetime { start: value.ev, end: value.end.clone() },
            span,
        });
    }

    fn infer(&mut self, t: &RTerm, ec: EventId) -> Ty {
        match &t.kind {
            RKind::Lit { width, value } => {
                let val = self.g.add_value(ValueExpr::Lit { width: *width, value: *value });
                Ty { ev: ec, end: vec![], val }
            }
            RKind::Unit => self.unit(ec),
            RKind::Cycle(k) => {
                let e = self.g.delay(*k, vec![ec]);
                self.unit(e)
            }
            RKind::Var(x) => {
                let (ex, end, val) = self.env.get(x).cloned().expect("resolver binds every variable");
                let e = self.g.delay(0, vec![ec, ex]);
                Ty { ev: e, end, val }
            }
            RKind::RegRead(r) => {
                self.out.loans.push(LoanVar { reg: *r, read: ec, demands: vec![], span: t.span });
                let val = self.g.add_value(ValueExpr::Reg(*r));
                Ty { ev: ec, end: vec![EndItem::Loan(self.out.loans.len() - 1)], val }
            }
            RKind::Wait(a, b) => {
                let ta = self.infer(a, ec);
                self.infer(b, ta.ev)
            }
            RKind::Join(a, b) => {
                let ta = self.infer(a, ec);
                let tb = self.infer(b, ec);
                let e = self.g.delay(0, vec![ta.ev, tb.ev]);
                Ty { ev: e, ..tb }
            }
            RKind::Let { var, value, body } => {
                let tv = self.infer(value, ec);
                self.out.bindings.push(Binding {
                    var: *var,
                    lifetime: Lifetime { start: tv.ev, end: tv.end.clone() },
                    span: value.span,
                });
                let saved = self.env.insert(*var, (tv.ev, tv.end.clone(), tv.val));
                let tb = self.infer(body, ec);
                match saved {
                    Some(s) => self.env.insert(*var, s),
                    None => self.env.remove(var),
                };
                let e = self.g.delay(0, vec![tv.ev, tb.ev]);
                Ty { ev: e, ..tb }
            }
            RKind::If { cond, then_, else_ } => {
                let tc = self.infer(cond, ec);
                self.value_use(UseCtx::Cond, ec, &tc, cond.span);
                let (c, bt, bf) = self.g.branch(ec);
                self.g.cond_values.insert(c, tc.val);
                let tt = self.infer(then_, bt);
                let tf = self.infer(else_, bf);
                let e = self.g.join(vec![tt.ev, tf.ev]);
                let val = self.g.add_value(ValueExpr::Mux { cond: c, then_: tt.val, else_: tf.val });
                Ty { ev: e, end: union(&tt.end, &tf.end), val }
            }
            RKind::Send { msg, value } => {
                let tv = self.infer(value, ec);
                let s = self.sync_event(*msg, ec, t.span);
                self.g.attach(s, ActionKind::Send { msg: *msg, value: tv.val });
                let required = self.duration(*msg, s);
                self.add_demands(&tv.end, s, &required);
                self.out.obligations.push(Obligation::SendCoverage {
                    msg: *msg,
                    anchor: s,
                    start: ec,
                    required: required.clone(),
                    value: Lifetime { start: tv.ev, end: tv.end.clone() },
                    span: t.span,
                });
                self.out.sends.push((*msg, s, required, t.span));
                self.unit(s)
            }
            RKind::Recv { msg } => {
                let s = self.sync_event(*msg, ec, t.span);
                let val = self.g.add_value(ValueExpr::RecvData(*msg));
                self.g.attach(s, ActionKind::Recv { msg: *msg, value: val });
                let end = self.duration(*msg, s).0.into_iter().map(EndItem::Pat).collect();
                Ty { ev: s, end, val }
            }
            RKind::Set { reg, value } => {
                let tv = self.infer(value, ec);
                self.value_use(UseCtx::Assign, ec, &tv, t.span);
                self.out.assigns.push((*reg, Lifetime { start: tv.ev, end: tv.end.clone() }, t.span));
                self.g.attach(ec, ActionKind::SetReg { reg: *reg, value: tv.val });
                self.out.obligations.push(Obligation::RegMutation { reg: *reg, at: ec, span: t.span });
                let e = self.g.delay(1, vec![ec]);
                self.unit(e)
            }
            RKind::Ready { msg } => {
                let name = self.prog.msg_name(self.proc, *msg);
                self.g.msg_names.entry(*msg).or_insert(name);
                let val = self.g.add_value(ValueExpr::Ready(*msg));
                Ty { ev: ec, end: vec![EndItem::Pat(Pattern::cycles(ec, 1))], val }
            }
            RKind::Binary { op, lhs, rhs } => {
                let tl = self.infer(lhs, ec);
                let tr = self.infer(rhs, ec);
                let e = self.g.delay(0, vec![tl.ev, tr.ev]);
                let end = union(&tl.end, &tr.end);
                let val = self.g.add_value(ValueExpr::Binary { op: *op, lhs: tl.val, rhs: tr.val });
                let ty = Ty { ev: e, end, val };
                // The result is computed at `e`, so both operands must still be live there.
                self.value_use(UseCtx::Expr, e, &ty, t.span);
                ty
            }
            RKind::Unary { op, operand } => {
                let to = self.infer(operand, ec);
                let val = self.g.add_value(ValueExpr::Unary { op: *op, operand: to.val });
                Ty { val, ..to }
            }
            RKind::Recurse => {
                match self.recur.last_mut() {
                    Some(points) => points.push(ec),
                    None => self.out.recurse_points.push(ec),
                }
                self.unit(ec)
            }
            RKind::Dprint { fmt, args } => {
                let mut vals = Vec::new();
                for a in args {
                    let ta = self.infer(a, ec);
                    self.value_use(UseCtx::Print, ec, &ta, t.span);
                    vals.push(ta.val);
                }
                self.g.attach(ec, ActionKind::Print { fmt: fmt.clone(), args: vals });
                self.unit(ec)
            }
            RKind::Recur { body, next } => {
                self.recur.push(vec![]);
                let tb = self.infer(body, ec);
                let points = self.recur.pop().unwrap_or_default();
                if points.is_empty() {
                    return tb;
                }
                let restart = if points.len() == 1 { points[0] } else { self.g.join(points) };
                let tn = self.infer(next, restart);
                let e = self.g.delay(0, vec![tb.ev, tn.ev]);
                Ty { ev: e, ..tn }
            }
        }
    }

    /// Every pair of sends of the same message must not overlap in time.
    fn finish_sends(&mut self) {
        let sends = self.out.sends.clone();
        for (j, (m2, s2, until2, span2)) in sends.iter().enumerate() {
            for (m1, s1, until1, _) in &sends[..j] {
                if m1 == m2 {
                    self.out.obligations.push(Obligation::SendNonOverlap {
                        msg: *m1,
                        first: (*s1, until1.clone()),
                        second: (*s2, until2.clone()),
                        span: *span2,
                    });
                }
            }
        }
    }
}
