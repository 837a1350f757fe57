//! Execution logs and their safety predicate.

use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub type ValId = u32;
pub type RegKey = u32;
pub type MsgKey = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum LogDuration {
    Cycles(u32),
    Msg(MsgKey),
    Eternal,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Action {
    Create { v: ValId, regs: Vec<RegKey>, vals: Vec<ValId> },
    Use(ValId),
    Mut(RegKey),
    Send { msg: MsgKey, v: ValId, dur: LogDuration },
    Recv { msg: MsgKey, v: ValId, dur: LogDuration },
}

impl Action {
    pub fn create(v: ValId, regs: &[RegKey], vals: &[ValId]) -> Action {
        let mut regs = regs.to_vec();
        regs.sort();
        regs.dedup();
        let mut vals = vals.to_vec();
        vals.sort();
        vals.dedup();
        Action::Create { v, regs, vals }
    }

    pub fn message(&self) -> Option<MsgKey> {
        match self {
            Action::Send { msg, .. } | Action::Recv { msg, .. } => Some(*msg),
            _ => None,
        }
    }

    /// The value this action mentions as its subject.
    pub fn subject(&self) -> Option<ValId> {
        match self {
            Action::Create { v, .. } | Action::Use(v) | Action::Send { v, .. } | Action::Recv { v, .. } => Some(*v),
            Action::Mut(_) => None,
        }
    }
}

/// A sequence of per-cycle action sets.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ExecutionLog {
    pub cycles: Vec<BTreeSet<Action>>,
}

impl ExecutionLog {
    pub fn new(cycles: Vec<BTreeSet<Action>>) -> ExecutionLog {
        ExecutionLog { cycles }
    }

    /// A log of one cycle holding `acts`.
    pub fn single(acts: impl IntoIterator<Item = Action>) -> ExecutionLog {
        ExecutionLog { cycles: vec![acts.into_iter().collect()] }
    }

    /// `k` empty cycles.
    pub fn empty(k: usize) -> ExecutionLog {
        ExecutionLog { cycles: vec![BTreeSet::new(); k] }
    }

    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    /// Overlapping concatenation: the last cycle of `self` and the first of `other`
    /// are the same cycle. An empty operand is the identity.
    pub fn concat(&self, other: &ExecutionLog) -> ExecutionLog {
        if self.cycles.is_empty() {
            return other.clone();
        }
        if other.cycles.is_empty() {
            return self.clone();
        }
        let mut cycles = self.cycles.clone();
        let last = cycles.last_mut().expect("non-empty");
        last.extend(other.cycles[0].iter().cloned());
        cycles.extend(other.cycles[1..].iter().cloned());
        ExecutionLog { cycles }
    }

    /// Pointwise union, padding the shorter log with empty cycles.
    pub fn merge(&self, other: &ExecutionLog) -> ExecutionLog {
        let n = self.len().max(other.len());
        let cycles = (0..n)
            .map(|i| {
                let mut s = self.cycles.get(i).cloned().unwrap_or_default();
                if let Some(o) = other.cycles.get(i) {
                    s.extend(o.iter().cloned());
                }
                s
            })
            .collect();
        ExecutionLog { cycles }
    }

    pub fn prefix(&self, n: usize) -> ExecutionLog {
        ExecutionLog { cycles: self.cycles[..n.min(self.len())].to_vec() }
    }

    pub fn actions(&self) -> impl Iterator<Item = (usize, &Action)> {
        self.cycles.iter().enumerate().flat_map(|(i, c)| c.iter().map(move |a| (i, a)))
    }

    /// Every value id mentioned anywhere.
    pub fn values(&self) -> BTreeSet<ValId> {
        let mut out = BTreeSet::new();
        for (_, a) in self.actions() {
            out.extend(a.subject());
            if let Action::Create { vals, .. } = a {
                out.extend(vals.iter().copied());
            }
        }
        out
    }

    /// Renames values; ids not in `map` are kept.
    pub fn rename(&self, map: &BTreeMap<ValId, ValId>) -> ExecutionLog {
        let r = |v: &ValId| *map.get(v).unwrap_or(v);
        let cycles = self
            .cycles
            .iter()
            .map(|c| {
                c.iter()
                    .map(|a| match a {
                        Action::Create { v, regs, vals } => {
                            Action::create(r(v), regs, &vals.iter().map(r).collect::<Vec<_>>())
                        }
                        Action::Use(v) => Action::Use(r(v)),
                        Action::Mut(x) => Action::Mut(*x),
                        Action::Send { msg, v, dur } => Action::Send { msg: *msg, v: r(v), dur: *dur },
                        Action::Recv { msg, v, dur } => Action::Recv { msg: *msg, v: r(v), dur: *dur },
                    })
                    .collect()
            })
            .collect();
        ExecutionLog { cycles }
    }
}

/// Composes two logs of equal length (the shorter is padded) over messages `sigma`.
/// Every send on a message in `sigma` must be matched in the same cycle by a receive
/// of the same value and duration in the other log, and vice versa; the matched pairs
/// are erased from the union.
pub fn compose_logs(a: &ExecutionLog, b: &ExecutionLog, sigma: &BTreeSet<MsgKey>) -> Option<ExecutionLog> {
    let n = a.len().max(b.len());
    let mut cycles = Vec::with_capacity(n);
    let empty = BTreeSet::new();
    for i in 0..n {
        let (x, y) = (a.cycles.get(i).unwrap_or(&empty), b.cycles.get(i).unwrap_or(&empty));
        if !cycle_matches(x, y, sigma) || !cycle_matches(y, x, sigma) {
            return None;
        }
        cycles.push(x.iter().chain(y).filter(|a| !a.message().is_some_and(|m| sigma.contains(&m))).cloned().collect());
    }
    Some(ExecutionLog { cycles })
}

fn cycle_matches(x: &BTreeSet<Action>, y: &BTreeSet<Action>, sigma: &BTreeSet<MsgKey>) -> bool {
    x.iter().all(|a| match a {
        Action::Send { msg, v, dur } if sigma.contains(msg) => {
            y.contains(&Action::Recv { msg: *msg, v: *v, dur: *dur })
        }
        Action::Recv { msg, v, dur } if sigma.contains(msg) => {
            y.contains(&Action::Send { msg: *msg, v: *v, dur: *dur })
        }
        _ => true,
    })
}

/// Register dependency set of `v`, or `None` (undefined) if `v` is never created.
pub fn reg_dep(log: &ExecutionLog, v: ValId) -> Option<BTreeSet<RegKey>> {
    reg_deps(log, false).remove(&v)
}

/// Dependency sets of every created value. With `recv_roots`, a received value is
/// treated as created from no registers, so values derived from it stay defined.
fn reg_deps(log: &ExecutionLog, recv_roots: bool) -> BTreeMap<ValId, BTreeSet<RegKey>> {
    let mut d: BTreeMap<ValId, BTreeSet<RegKey>> = BTreeMap::new();
    for c in &log.cycles {
        if recv_roots {
            for a in c {
                if let Action::Recv { v, .. } = a {
                    d.entry(*v).or_default();
                }
            }
        }
        // Creations in one cycle may depend on each other; iterate to a fixpoint.
        loop {
            let mut changed = false;
            for a in c {
                if let Action::Create { v, regs, vals } = a {
                    if d.contains_key(v) && !recv_roots {
                        continue;
                    }
                    if vals.iter().all(|u| d.contains_key(u)) {
                        let mut s: BTreeSet<RegKey> = regs.iter().copied().collect();
                        if recv_roots {
                            // A value created more than once depends on every creation.
                            s.extend(d.get(v).into_iter().flatten().copied());
                        }
                        for u in vals {
                            s.extend(d[u].iter().copied());
                        }
                        if d.get(v) != Some(&s) {
                            d.insert(*v, s);
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }
    d
}

/// Half-open `[lo, hi)`; `hi = None` is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Window {
    pub lo: usize,
    pub hi: Option<usize>,
}

/// The window a message action at cycle `i` promises. `send_side` truncates an
/// unmatched message-relative window at the end of the log; on the receiving side
/// it stays open.
pub fn lt(log: &ExecutionLog, i: usize, dur: LogDuration, send_side: bool) -> Window {
    match dur {
        LogDuration::Cycles(l) => Window { lo: i, hi: Some(i + l as usize) },
        LogDuration::Eternal => Window { lo: i, hi: if send_side { Some(log.len().max(i + 1)) } else { None } },
        LogDuration::Msg(m) => {
            // The earliest later (or same-cycle) action on `m`; at least one cycle.
            let w = (i..log.len()).find(|j| log.cycles[*j].iter().any(|a| a.message() == Some(m)));
            match w {
                Some(w) => Window { lo: i, hi: Some(w.max(i + 1)) },
                None if send_side => Window { lo: i, hi: Some(log.len().max(i + 1)) },
                None => Window { lo: i, hi: None },
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum UnsafeReason {
    /// A use or a promised lifetime falls outside what received values guarantee.
    OutsideReceived { hull: (usize, usize), live: Window },
    /// A register the value depends on changes within its live window.
    Mutated { reg: RegKey, at: usize, hull: (usize, usize) },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub value: ValId,
    pub reason: UnsafeReason,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.reason {
            UnsafeReason::OutsideReceived { hull, live } => {
                let hi = live.hi.map(|h| h.to_string()).unwrap_or_else(|| "inf".into());
                write!(
                    f,
                    "value v{} is needed over [{}, {}] but only live over [{}, {hi})",
                    self.value, hull.0, hull.1, live.lo
                )
            }
            UnsafeReason::Mutated { reg, at, hull } => {
                write!(
                    f,
                    "value v{} depends on register r{reg}, mutated at cycle {at} within [{}, {})",
                    self.value, hull.0, hull.1
                )
            }
        }
    }
}

/// Per-value facts the safety predicate needs.
#[derive(Debug, Clone, Default)]
pub struct ValueFacts {
    pub use_set: BTreeSet<usize>,
    pub lt_send: Vec<Window>,
    pub lt_recv: Window,
    pub mutations: BTreeSet<usize>,
    pub mut_regs: BTreeMap<usize, RegKey>,
}

/// Value-dependency edges from created values to the values they were built from.
fn value_edges(log: &ExecutionLog) -> BTreeMap<ValId, Vec<ValId>> {
    let mut e: BTreeMap<ValId, Vec<ValId>> = BTreeMap::new();
    for (_, a) in log.actions() {
        if let Action::Create { v, vals, .. } = a {
            e.entry(*v).or_default().extend(vals.iter().copied());
        }
    }
    e
}

fn closure(edges: &BTreeMap<ValId, Vec<ValId>>, v: ValId) -> BTreeSet<ValId> {
    let mut seen = BTreeSet::from([v]);
    let mut stack = vec![v];
    while let Some(x) = stack.pop() {
        for u in edges.get(&x).into_iter().flatten() {
            if seen.insert(*u) {
                stack.push(*u);
            }
        }
    }
    seen
}

pub fn value_facts(log: &ExecutionLog) -> BTreeMap<ValId, ValueFacts> {
    let edges = value_edges(log);
    let deps = reg_deps(log, true);
    let values = log.values();
    let closures: BTreeMap<ValId, BTreeSet<ValId>> = values.iter().map(|v| (*v, closure(&edges, *v))).collect();
    let mut out = BTreeMap::new();
    for &v in &values {
        let mut f = ValueFacts { lt_recv: Window { lo: 0, hi: None }, ..Default::default() };
        for (i, a) in log.actions() {
            if a.subject() == Some(v) {
                f.use_set.insert(i);
            }
            match a {
                // Sends of values derived from `v`.
                Action::Send { v: u, dur, .. } if closures.get(u).is_some_and(|c| c.contains(&v)) => {
                    f.lt_send.push(lt(log, i, *dur, true));
                }
                // Receives `v` depends on.
                Action::Recv { v: u, dur, .. } if closures[&v].contains(u) => {
                    let w = lt(log, i, *dur, false);
                    f.lt_recv.lo = f.lt_recv.lo.max(w.lo);
                    f.lt_recv.hi = match (f.lt_recv.hi, w.hi) {
                        (Some(a), Some(b)) => Some(a.min(b)),
                        (a, b) => a.or(b),
                    };
                }
                Action::Mut(r) if deps.get(&v).is_some_and(|d| d.contains(r)) => {
                    f.mutations.insert(i);
                    f.mut_regs.entry(i).or_insert(*r);
                }
                _ => {}
            }
        }
        out.insert(v, f);
    }
    out
}

/// The smallest interval covering every use and promised lifetime of a value.
pub fn hull(f: &ValueFacts) -> Option<(usize, usize)> {
    let mut pts: Vec<usize> = f.use_set.iter().copied().collect();
    for w in &f.lt_send {
        pts.push(w.lo);
        if let Some(h) = w.hi {
            if h > w.lo {
                pts.push(h - 1);
            }
        }
    }
    Some((*pts.iter().min()?, *pts.iter().max()?))
}

/// Whether `[a, b]` witnesses the safety of a value with facts `f`.
pub fn interval_ok(f: &ValueFacts, a: usize, b: usize) -> bool {
    let covers = |i: usize| a <= i && i <= b;
    f.use_set.iter().all(|i| covers(*i))
        && f.lt_send.iter().all(|w| w.hi.is_some_and(|h| (w.lo..h).all(covers)))
        && f.lt_recv.lo <= a
        && f.lt_recv.hi.is_none_or(|h| b < h)
        && !f.mutations.iter().any(|m| a <= *m && *m < b)
}

/// Checks every value of `log`; returns the first violation by value id.
pub fn check_log_safety(log: &ExecutionLog) -> Result<(), Violation> {
    for (v, f) in value_facts(log) {
        let Some((a, b)) = hull(&f) else { continue };
        let live = f.lt_recv;
        if live.lo > a || live.hi.is_some_and(|h| b >= h) {
            return Err(Violation { value: v, reason: UnsafeReason::OutsideReceived { hull: (a, b), live } });
        }
        if let Some(m) = f.mutations.iter().find(|m| a <= **m && **m < b) {
            return Err(Violation {
                value: v,
                reason: UnsafeReason::Mutated { reg: f.mut_regs[m], at: *m, hull: (a, b) },
            });
        }
    }
    Ok(())
}

pub fn is_safe(log: &ExecutionLog) -> bool {
    check_log_safety(log).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log(cycles: Vec<Vec<Action>>) -> ExecutionLog {
        ExecutionLog::new(cycles.into_iter().map(|c| c.into_iter().collect()).collect())
    }

    #[test]
    fn concat_and_merge_lengths() {
        let a = ExecutionLog::empty(3);
        let b = ExecutionLog::empty(2);
        assert_eq!(a.concat(&b).len(), 4);
        assert_eq!(a.merge(&b).len(), 3);
    }

    #[test]
    fn empty_log_is_safe() {
        assert!(is_safe(&ExecutionLog::default()));
        assert!(is_safe(&log(vec![vec![Action::create(0, &[], &[]), Action::Use(0)]])));
    }

    #[test]
    fn mutation_inside_window() {
        let l = log(vec![vec![Action::create(0, &[7], &[])], vec![Action::Mut(7)], vec![Action::Use(0)]]);
        let err = check_log_safety(&l).unwrap_err();
        assert_eq!(err.value, 0);
        assert_eq!(err.reason, UnsafeReason::Mutated { reg: 7, at: 1, hull: (0, 2) });
    }

    #[test]
    fn received_value_used_too_late() {
        let dur = LogDuration::Cycles(1);
        let l = log(vec![
            vec![Action::Recv { msg: 0, v: 1, dur }, Action::create(0, &[], &[1])],
            vec![],
            vec![Action::Use(0)],
        ]);
        assert!(matches!(check_log_safety(&l).unwrap_err().reason, UnsafeReason::OutsideReceived { .. }));
    }

    #[test]
    fn reg_dep_rules() {
        let l = log(vec![vec![Action::create(0, &[1], &[])], vec![Action::create(2, &[3], &[0])]]);
        assert_eq!(reg_dep(&l, 0), Some(BTreeSet::from([1])));
        assert_eq!(reg_dep(&l, 2), Some(BTreeSet::from([1, 3])));
        assert_eq!(reg_dep(&l, 9), None);
    }

    #[test]
    fn compose_erases_matched() {
        let dur = LogDuration::Cycles(1);
        let a = log(vec![vec![], vec![], vec![Action::Send { msg: 4, v: 0, dur }]]);
        let b = log(vec![vec![], vec![], vec![Action::Recv { msg: 4, v: 0, dur }, Action::Use(0)]]);
        let sigma = BTreeSet::from([4]);
        let c = compose_logs(&a, &b, &sigma).unwrap();
        assert_eq!(c.cycles[2], BTreeSet::from([Action::Use(0)]));
        let late = log(vec![vec![], vec![Action::Recv { msg: 4, v: 0, dur }]]);
        assert!(compose_logs(&a, &late, &sigma).is_none());
        assert_eq!(compose_logs(&a, &late, &BTreeSet::new()).unwrap(), a.merge(&late));
    }
}
