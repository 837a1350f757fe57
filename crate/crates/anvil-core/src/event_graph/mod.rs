//! Event graphs: labelled DAGs of abstract time points, with actions attached to events.

mod dot;

pub use dot::dump_dot;

use crate::frontend::ast::{BinOp, UnOp};
use crate::frontend::resolve::{MsgRef, RegId};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct EventId(pub u32);

impl EventId {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

pub type CondId = u32;
pub type ValueId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum EventLabel {
    Root,
    /// Occurs `k` cycles after the latest predecessor.
    Delay {
        k: u32,
        preds: Vec<EventId>,
    },
    /// Occurs at or after its predecessor, when `msg` synchronizes. A pinned sync
    /// happens exactly `k` cycles after event `pin.0` (or at `pred`, if later).
    MsgSync {
        msg: MsgRef,
        pred: EventId,
        pin: Option<(EventId, u32)>,
    },
    /// One side of a branch on condition `cond`; `side` is true for the then-arm.
    Branch {
        cond: CondId,
        side: bool,
        pred: EventId,
    },
    /// Occurs at the earliest predecessor.
    Join {
        preds: Vec<EventId>,
    },
}

impl EventLabel {
    pub fn preds(&self) -> Vec<EventId> {
        match self {
            EventLabel::Root => vec![],
            EventLabel::Delay { preds, .. } | EventLabel::Join { preds } => preds.clone(),
            EventLabel::MsgSync { pred, pin: Some((p, _)), .. } => vec![*pred, *p],
            EventLabel::MsgSync { pred, .. } | EventLabel::Branch { pred, .. } => vec![*pred],
        }
    }

    pub fn map_preds(&mut self, mut f: impl FnMut(EventId) -> EventId) {
        match self {
            EventLabel::Root => {}
            EventLabel::Delay { preds, .. } | EventLabel::Join { preds } => {
                for p in preds.iter_mut() {
                    *p = f(*p);
                }
                preds.sort();
                preds.dedup();
            }
            EventLabel::MsgSync { pred, pin, .. } => {
                *pred = f(*pred);
                if let Some((p, _)) = pin {
                    *p = f(*p);
                }
            }
            EventLabel::Branch { pred, .. } => *pred = f(*pred),
        }
    }
}

/// Combinational value expressions referenced by actions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum ValueExpr {
    Lit {
        width: Option<u32>,
        value: u128,
    },
    Unit,
    Reg(RegId),
    RecvData(MsgRef),
    Ready(MsgRef),
    Binary {
        op: BinOp,
        lhs: ValueId,
        rhs: ValueId,
    },
    Unary {
        op: UnOp,
        operand: ValueId,
    },
    /// Value of an `if`: `then_` if the branch on `cond` took its then-arm.
    Mux {
        cond: CondId,
        then_: ValueId,
        else_: ValueId,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum ActionKind {
    SetReg { reg: RegId, value: ValueId },
    Send { msg: MsgRef, value: ValueId },
    Recv { msg: MsgRef, value: ValueId },
    Print { fmt: String, args: Vec<ValueId> },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Action {
    /// Stable identity, preserved by optimization passes.
    pub id: u32,
    pub kind: ActionKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Event {
    pub label: EventLabel,
    pub actions: Vec<Action>,
}

/// A labelled DAG. Predecessors always have smaller ids than their successors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EventGraph {
    pub events: Vec<Event>,
    pub entry: EventId,
    pub values: Vec<ValueExpr>,
    /// Display names for message references.
    pub msg_names: BTreeMap<MsgRef, String>,
    pub num_conds: u32,
    /// The value each branch condition tests, when known.
    pub cond_values: BTreeMap<CondId, ValueId>,
    next_action: u32,
}

impl Default for EventGraph {
    fn default() -> Self {
        Self::new()
    }
}

impl EventGraph {
    /// A graph holding only the root event.
    pub fn new() -> EventGraph {
        EventGraph {
            events: vec![Event { label: EventLabel::Root, actions: vec![] }],
            entry: EventId(0),
            values: vec![],
            msg_names: BTreeMap::new(),
            num_conds: 0,
            cond_values: BTreeMap::new(),
            next_action: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn ids(&self) -> impl DoubleEndedIterator<Item = EventId> {
        (0..self.events.len() as u32).map(EventId)
    }

    pub fn label(&self, e: EventId) -> &EventLabel {
        &self.events[e.idx()].label
    }

    pub fn actions(&self, e: EventId) -> &[Action] {
        &self.events[e.idx()].actions
    }

    pub fn add(&mut self, label: EventLabel) -> EventId {
        let id = EventId(self.events.len() as u32);
        debug_assert!(label.preds().iter().all(|p| p.0 < id.0));
        self.events.push(Event { label, actions: vec![] });
        id
    }

    pub fn delay(&mut self, k: u32, mut preds: Vec<EventId>) -> EventId {
        preds.sort();
        preds.dedup();
        self.add(EventLabel::Delay { k, preds })
    }

    pub fn msg_sync(&mut self, msg: MsgRef, pred: EventId) -> EventId {
        self.add(EventLabel::MsgSync { msg, pred, pin: None })
    }

    pub fn pinned_sync(&mut self, msg: MsgRef, pred: EventId, pin: EventId, k: u32) -> EventId {
        self.add(EventLabel::MsgSync { msg, pred, pin: Some((pin, k)) })
    }

    pub fn join(&mut self, mut preds: Vec<EventId>) -> EventId {
        preds.sort();
        preds.dedup();
        self.add(EventLabel::Join { preds })
    }

    /// Allocates a fresh condition and its two branch events.
    pub fn branch(&mut self, pred: EventId) -> (CondId, EventId, EventId) {
        let c = self.num_conds;
        self.num_conds += 1;
        let t = self.add(EventLabel::Branch { cond: c, side: true, pred });
        let f = self.add(EventLabel::Branch { cond: c, side: false, pred });
        (c, t, f)
    }

    pub fn add_value(&mut self, v: ValueExpr) -> ValueId {
        self.values.push(v);
        self.values.len() as ValueId - 1
    }

    pub fn attach(&mut self, e: EventId, kind: ActionKind) -> u32 {
        let id = self.next_action;
        self.next_action += 1;
        self.events[e.idx()].actions.push(Action { id, kind });
        id
    }

    pub fn msg_name(&self, m: MsgRef) -> String {
        self.msg_names.get(&m).cloned().unwrap_or_else(|| format!("ep{}.m{}", m.ep, m.msg))
    }

    /// Successor lists, in id order.
    pub fn succs(&self) -> Vec<Vec<EventId>> {
        let mut s = vec![Vec::new(); self.events.len()];
        for e in self.ids() {
            for p in self.label(e).preds() {
                s[p.idx()].push(e);
            }
        }
        s
    }

    /// Checks the structural invariants: single root, predecessors precede, branch pairing.
    pub fn validate(&self) -> Result<(), String> {
        let mut branch: BTreeMap<CondId, Vec<(bool, EventId)>> = BTreeMap::new();
        for e in self.ids() {
            let l = self.label(e);
            if matches!(l, EventLabel::Root) != (e == self.entry) {
                return Err(format!("{e}: root must be exactly the entry"));
            }
            for p in l.preds() {
                if p.0 >= e.0 {
                    return Err(format!("{e}: predecessor {p} does not precede it"));
                }
            }
            match l {
                EventLabel::Delay { preds, .. } | EventLabel::Join { preds } if preds.is_empty() => {
                    return Err(format!("{e}: no predecessors"));
                }
                EventLabel::Branch { cond, side, pred } => {
                    branch.entry(*cond).or_default().push((*side, *pred));
                }
                _ => {}
            }
        }
        for (c, v) in branch {
            if v.len() != 2 || v[0].0 == v[1].0 || v[0].1 != v[1].1 {
                return Err(format!("condition {c}: branch events are not a matched pair"));
            }
        }
        Ok(())
    }

    /// Events that carry at least one action.
    pub fn action_events(&self) -> Vec<EventId> {
        self.ids().filter(|e| !self.actions(*e).is_empty()).collect()
    }

    /// Versioned JSON form for tooling.
    pub fn to_json(&self) -> serde_json::Value {
        let events: Vec<serde_json::Value> = self
            .ids()
            .map(|e| {
                let (kind, extra) = match self.label(e) {
                    EventLabel::Root => ("root", serde_json::json!({})),
                    EventLabel::Delay { k, preds } => (
                        "delay",
                        serde_json::json!({"cycles": k, "preds": preds.iter().map(|p| p.0).collect::<Vec<_>>()}),
                    ),
                    EventLabel::MsgSync { msg, pred, pin } => (
                        "sync",
                        serde_json::json!({
                            "message": self.msg_name(*msg),
                            "preds": [pred.0],
                            "pin": pin.map(|(p, k)| serde_json::json!({"event": p.0, "cycles": k})),
                        }),
                    ),
                    EventLabel::Branch { cond, side, pred } => {
                        ("branch", serde_json::json!({"cond": cond, "side": side, "preds": [pred.0]}))
                    }
                    EventLabel::Join { preds } => {
                        ("join", serde_json::json!({"preds": preds.iter().map(|p| p.0).collect::<Vec<_>>()}))
                    }
                };
                let actions: Vec<String> = self.actions(e).iter().map(|a| self.describe_action(a)).collect();
                let mut obj = serde_json::json!({"id": e.0, "kind": kind, "actions": actions});
                if let (Some(o), serde_json::Value::Object(x)) = (obj.as_object_mut(), extra) {
                    o.extend(x);
                }
                obj
            })
            .collect();
        serde_json::json!({"schema": "anvil-event-graph/1", "entry": self.entry.0, "events": events})
    }

    pub fn describe_action(&self, a: &Action) -> String {
        match &a.kind {
            ActionKind::SetReg { reg, .. } => format!("set r{reg}"),
            ActionKind::Send { msg, .. } => format!("send {}", self.msg_name(*msg)),
            ActionKind::Recv { msg, .. } => format!("recv {}", self.msg_name(*msg)),
            ActionKind::Print { fmt, .. } => format!("dprint {fmt:?}"),
        }
    }

    /// Removes every event `e` with `redirect[e] != e`, moving its actions and references
    /// to the (transitively resolved) target, and renumbers the survivors in topological
    /// order. Returns the old-to-new id map.
    pub fn compact(&mut self, redirect: &[EventId]) -> Vec<Option<EventId>> {
        let n = self.events.len();
        assert_eq!(redirect.len(), n);
        let resolved: Vec<EventId> = (0..n)
            .map(|i| {
                let mut e = EventId(i as u32);
                for _ in 0..=n {
                    if redirect[e.idx()] == e {
                        break;
                    }
                    e = redirect[e.idx()];
                }
                e
            })
            .collect();
        let redirect = |e: EventId| resolved[e.idx()];
        let mut alive = vec![false; n];
        for e in self.ids() {
            alive[e.idx()] = redirect(e) == e;
        }
        // Topological renumbering of the surviving events.
        let mut labels: Vec<EventLabel> = self.events.iter().map(|ev| ev.label.clone()).collect();
        for l in labels.iter_mut() {
            l.map_preds(&redirect);
        }
        let mut indeg = vec![0usize; n];
        let mut succ: Vec<Vec<usize>> = vec![vec![]; n];
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            for p in labels[i].preds() {
                indeg[i] += 1;
                succ[p.idx()].push(i);
            }
        }
        let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|i| alive[*i] && indeg[*i] == 0).collect();
        let mut order = Vec::new();
        while let Some(i) = ready.pop_first() {
            order.push(i);
            for &s in &succ[i] {
                indeg[s] -= 1;
                if indeg[s] == 0 {
                    ready.insert(s);
                }
            }
        }
        assert_eq!(order.len(), alive.iter().filter(|a| **a).count(), "event graph has a cycle");
        let mut map: Vec<Option<EventId>> = vec![None; n];
        for (new, &old) in order.iter().enumerate() {
            map[old] = Some(EventId(new as u32));
        }
        let mut old_events = std::mem::take(&mut self.events);
        let mut moved: Vec<Vec<Action>> = vec![vec![]; n];
        for i in 0..n {
            if !alive[i] {
                let to = redirect(EventId(i as u32)).idx();
                let acts = std::mem::take(&mut old_events[i].actions);
                moved[to].extend(acts);
            }
        }
        for &old in &order {
            let mut label = labels[old].clone();
            label.map_preds(|p| map[p.idx()].expect("redirect target survives"));
            let mut actions = std::mem::take(&mut old_events[old].actions);
            actions.append(&mut moved[old]);
            actions.sort_by_key(|a| a.id);
            self.events.push(Event { label, actions });
        }
        self.entry = map[self.entry.idx()].expect("root survives");
        // Chained redirects resolve through the final map.
        (0..n).map(|i| map[redirect(EventId(i as u32)).idx()]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_of_delays() {
        let mut g = EventGraph::new();
        let a = g.delay(2, vec![g.entry]);
        let _b = g.delay(3, vec![a]);
        assert_eq!(g.len(), 3);
        assert!(g.validate().is_ok());
    }

    #[test]
    fn branch_pairs_validate() {
        let mut g = EventGraph::new();
        let (_, t, f) = g.branch(g.entry);
        g.join(vec![t, f]);
        assert!(g.validate().is_ok());
        g.events[2].label = EventLabel::Branch { cond: 0, side: true, pred: EventId(0) };
        assert!(g.validate().is_err());
    }

    #[test]
    fn compact_moves_actions_and_renumbers() {
        let mut g = EventGraph::new();
        let a = g.delay(0, vec![g.entry]);
        let b = g.delay(1, vec![a]);
        let v = g.add_value(ValueExpr::Unit);
        g.attach(a, ActionKind::SetReg { reg: 0, value: v });
        let map = g.compact(&[EventId(0), EventId(0), b]);
        assert_eq!(g.len(), 2);
        assert_eq!(map[b.idx()], Some(EventId(1)));
        assert_eq!(g.actions(EventId(0)).len(), 1);
        assert_eq!(g.label(EventId(1)), &EventLabel::Delay { k: 1, preds: vec![EventId(0)] });
    }
}
