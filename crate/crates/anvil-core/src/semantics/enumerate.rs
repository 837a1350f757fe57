//! Enumerates the execution logs of a term by exploring every nondeterministic
//! choice: each send or receive may complete after any slack in `0..=bound`, and
//! each `if` may take either branch.
//!
//! Evaluation works on absolute cycle indices, so a term started at cycle `s`
//! records its actions at `s` and later and reports the cycle its value is ready.
//! Value ids are fixed per syntax node (`2 * preorder index`, plus one for the raw
//! payload of a receive), which makes logs of different choices comparable.

use super::log::{Action, ExecutionLog, LogDuration, MsgKey, RegKey, ValId};
use crate::frontend::resolve::{Dur, MsgRef, RKind, RTerm, ResolvedProc, ResolvedProgram, Sync};
use std::collections::{BTreeSet, HashMap};

/// Key of a message in logs of a single process.
pub fn msg_key(m: MsgRef) -> MsgKey {
    (m.ep as u32) << 8 | m.msg as u32
}

pub fn msg_of_key(k: MsgKey) -> MsgRef {
    MsgRef { ep: (k >> 8) as usize, msg: (k & 0xff) as usize }
}

/// Preorder numbering of the nodes of `t`, keyed by address.
pub fn number_nodes(t: &RTerm) -> HashMap<*const RTerm, u32> {
    fn go(t: &RTerm, next: &mut u32, out: &mut HashMap<*const RTerm, u32>) {
        out.insert(t as *const RTerm, *next);
        *next += 1;
        for c in t.children() {
            go(c, next, out);
        }
    }
    let mut out = HashMap::new();
    go(t, &mut 0, &mut out);
    out
}

#[derive(Default)]
struct State {
    acts: Vec<(u32, Action)>,
    env: HashMap<usize, (u32, ValId)>,
    recur: Vec<Option<u32>>,
    /// Syncs so far in evaluation order, for dependent sync modes.
    syncs: Vec<(MsgRef, u32)>,
}

pub struct Enumerator<'a> {
    prog: &'a ResolvedProgram,
    proc: &'a ResolvedProc,
    bound: u32,
    ids: HashMap<*const RTerm, u32>,
}

/// Continuation: receives the state, the value, and the cycle it is ready.
/// Returns `false` to stop the enumeration.
type K<'k> = &'k mut dyn FnMut(&mut State, ValId, u32) -> bool;

impl<'a> Enumerator<'a> {
    pub fn new(prog: &'a ResolvedProgram, proc: &'a ResolvedProc, term: &RTerm, bound: u32) -> Enumerator<'a> {
        Enumerator { prog, proc, bound, ids: number_nodes(term) }
    }

    fn id(&self, t: &RTerm) -> ValId {
        2 * self.ids[&(t as *const RTerm)]
    }

    fn dur(&self, m: MsgRef) -> LogDuration {
        match self.prog.msg(self.proc, m).duration {
            Dur::Cycles(l) => LogDuration::Cycles(l),
            Dur::Message(i) => LogDuration::Msg(msg_key(MsgRef { ep: m.ep, msg: i })),
            Dur::Eternal => LogDuration::Eternal,
        }
    }

    /// Cycles at which a sync attempted at `s` may complete.
    fn sync_times(&self, st: &State, m: MsgRef, s: u32) -> Vec<u32> {
        let side = self.proc.endpoints[m.ep].side;
        if let Sync::Dependent { msg, offset } = *self.prog.msg(self.proc, m).sync_of(side) {
            let dep = MsgRef { ep: m.ep, msg };
            if let Some((_, p)) = st.syncs.iter().rev().find(|(r, _)| *r == dep) {
                return vec![s.max(p + offset)];
            }
        }
        (s..=s + self.bound).collect()
    }

    fn with(&self, st: &mut State, acts: Vec<(u32, Action)>, f: impl FnOnce(&mut State) -> bool) -> bool {
        let n = st.acts.len();
        st.acts.extend(acts);
        let r = f(st);
        st.acts.truncate(n);
        r
    }

    /// Runs `term` from cycle 0 and calls `f` on every log, until `f` returns false.
    /// Returns false if stopped early.
    pub fn run(&self, term: &RTerm, f: &mut dyn FnMut(ExecutionLog) -> bool) -> bool {
        let mut st = State::default();
        self.eval(term, 0, &mut st, &mut |st, _, end| {
            let len = st.acts.iter().map(|(i, _)| i + 1).max().unwrap_or(0).max(end + 1) as usize;
            let mut cycles = vec![BTreeSet::new(); len];
            for (i, a) in &st.acts {
                cycles[*i as usize].insert(a.clone());
            }
            f(ExecutionLog::new(cycles))
        })
    }

    fn eval(&self, t: &RTerm, s: u32, st: &mut State, k: K) -> bool {
        let id = self.id(t);
        match &t.kind {
            RKind::Lit { .. } | RKind::Unit | RKind::Ready { .. } => {
                self.with(st, vec![(s, Action::create(id, &[], &[]))], |st| k(st, id, s))
            }
            RKind::Cycle(n) => self.with(st, vec![(s + n, Action::create(id, &[], &[]))], |st| k(st, id, s + n)),
            RKind::RegRead(r) => self.with(st, vec![(s, Action::create(id, &[*r as RegKey], &[]))], |st| k(st, id, s)),
            RKind::Var(x) => {
                let (e, v) = st.env[x];
                k(st, v, s.max(e))
            }
            RKind::Wait(a, b) => self.eval(a, s, st, &mut |st, _, e1| self.eval(b, e1, st, k)),
            RKind::Join(a, b) => {
                self.eval(a, s, st, &mut |st, _, e1| self.eval(b, s, st, &mut |st, v2, e2| k(st, v2, e1.max(e2))))
            }
            RKind::Let { var, value, body } => self.eval(value, s, st, &mut |st, v1, e1| {
                let saved = st.env.insert(*var, (e1, v1));
                let r = self.eval(body, s, st, &mut |st, v2, e2| {
                    // The continuation is outside the binding's scope.
                    let inner = restore(&mut st.env, *var, saved);
                    let r = k(st, v2, e1.max(e2));
                    restore(&mut st.env, *var, inner);
                    r
                });
                restore(&mut st.env, *var, saved);
                r
            }),
            RKind::If { cond, then_, else_ } => self.eval(cond, s, st, &mut |st, v1, e1| {
                self.with(st, vec![(s, Action::Use(v1))], |st| {
                    let mut kb = |st: &mut State, v2, e2: u32| k(st, v2, e1.max(e2));
                    self.eval(then_, s, st, &mut kb) && self.eval(else_, s, st, &mut kb)
                })
            }),
            RKind::Send { msg, value } => self.eval(value, s, st, &mut |st, v, e| {
                let dur = self.dur(*msg);
                for j in self.sync_times(st, *msg, s) {
                    let acts =
                        vec![(j, Action::Send { msg: msg_key(*msg), v, dur }), (j, Action::create(id, &[], &[]))];
                    st.syncs.push((*msg, j));
                    let r = self.with(st, acts, |st| k(st, id, e.max(j)));
                    st.syncs.pop();
                    if !r {
                        return false;
                    }
                }
                true
            }),
            RKind::Recv { msg } => {
                let raw = id + 1;
                let dur = self.dur(*msg);
                for j in self.sync_times(st, *msg, s) {
                    let acts = vec![
                        (j, Action::Recv { msg: msg_key(*msg), v: raw, dur }),
                        (j, Action::create(id, &[], &[raw])),
                    ];
                    st.syncs.push((*msg, j));
                    let r = self.with(st, acts, |st| k(st, id, j));
                    st.syncs.pop();
                    if !r {
                        return false;
                    }
                }
                true
            }
            RKind::Set { reg, value } => self.eval(value, s, st, &mut |st, v, e| {
                let acts =
                    vec![(s, Action::Use(v)), (s, Action::Mut(*reg as RegKey)), (s + 1, Action::create(id, &[], &[]))];
                self.with(st, acts, |st| k(st, id, e.max(s + 1)))
            }),
            RKind::Binary { lhs, rhs, .. } => self.eval(lhs, s, st, &mut |st, v1, e1| {
                self.eval(rhs, s, st, &mut |st, v2, e2| {
                    let m = e1.max(e2);
                    self.with(st, vec![(m, Action::create(id, &[], &[v1, v2]))], |st| k(st, id, m))
                })
            }),
            RKind::Unary { operand, .. } => self.eval(operand, s, st, k),
            RKind::Recurse => {
                let top = st.recur.last().copied();
                if let Some(p) = top {
                    *st.recur.last_mut().unwrap() = Some(p.map_or(s, |p| p.min(s)));
                }
                let r = self.with(st, vec![(s, Action::create(id, &[], &[]))], |st| k(st, id, s));
                if let Some(p) = top {
                    *st.recur.last_mut().unwrap() = p;
                }
                r
            }
            RKind::Dprint { args, .. } => self.dprint(args, id, s, s, vec![], st, k),
            RKind::Recur { body, next } => {
                st.recur.push(None);
                let r = self.eval(body, s, st, &mut |st, vb, eb| {
                    let point = st.recur.pop().expect("pushed above");
                    let r = match point {
                        None => k(st, vb, eb),
                        Some(p) => self.eval(next, p, st, &mut |st, vn, en| k(st, vn, eb.max(en))),
                    };
                    st.recur.push(point);
                    r
                });
                st.recur.pop();
                r
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn dprint(&self, args: &[RTerm], id: ValId, s: u32, end: u32, vals: Vec<ValId>, st: &mut State, k: K) -> bool {
        match args.split_first() {
            None => {
                let mut acts: Vec<(u32, Action)> = vals.iter().map(|v| (s, Action::Use(*v))).collect();
                acts.push((s, Action::create(id, &[], &[])));
                self.with(st, acts, |st| k(st, id, end))
            }
            Some((a, rest)) => self.eval(a, s, st, &mut |st, v, e| {
                let mut vals = vals.clone();
                vals.push(v);
                self.dprint(rest, id, s, end.max(e), vals, st, k)
            }),
        }
    }
}

fn restore(env: &mut HashMap<usize, (u32, ValId)>, var: usize, saved: Option<(u32, ValId)>) -> Option<(u32, ValId)> {
    match saved {
        Some(x) => env.insert(var, x),
        None => env.remove(&var),
    }
}

/// Every distinct log of `term` run by `proc` with slack up to `bound`.
pub fn enumerate_logs(prog: &ResolvedProgram, proc: &ResolvedProc, term: &RTerm, bound: u32) -> Vec<ExecutionLog> {
    let en = Enumerator::new(prog, proc, term, bound);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    en.run(term, &mut |l| {
        if seen.insert(l.clone()) {
            out.push(l);
        }
        true
    });
    out
}
