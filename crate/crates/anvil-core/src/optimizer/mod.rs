//! Event-graph shrinking passes.
//!
//! Every pass preserves the timestamps of surviving events, so the actions they
//! carry happen in exactly the same cycles as before.

use crate::event_graph::{ActionKind, EventGraph, EventId, EventLabel};
use crate::timing::Timing;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PassConfig {
    pub merge_outbound: bool,
    pub unbalanced_joins: bool,
    pub shift_branch_joins: bool,
    pub branch_joins: bool,
    pub max_iters: usize,
}

impl PassConfig {
    pub fn all() -> PassConfig {
        PassConfig {
            merge_outbound: true,
            unbalanced_joins: true,
            shift_branch_joins: true,
            branch_joins: true,
            max_iters: 1000,
        }
    }

    pub fn none() -> PassConfig {
        PassConfig {
            merge_outbound: false,
            unbalanced_joins: false,
            shift_branch_joins: false,
            branch_joins: false,
            max_iters: 1,
        }
    }

    pub fn for_level(level: u8) -> PassConfig {
        if level == 0 {
            PassConfig::none()
        } else {
            PassConfig::all()
        }
    }
}

impl Default for PassConfig {
    fn default() -> Self {
        PassConfig::all()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OptError {
    #[error("optimizer did not reach a fixpoint within {0} iterations")]
    NoFixpoint(usize),
    #[error("merged event {0} writes register r{1} twice")]
    ConflictingWrites(EventId, usize),
}

/// Old-to-new event ids; `None` never occurs for ids that had a redirect target.
pub type Remap = Vec<Option<EventId>>;

fn identity(g: &EventGraph) -> Vec<EventId> {
    g.ids().collect()
}

fn compose(first: &Remap, then: &Remap) -> Remap {
    first.iter().map(|e| e.and_then(|e| then[e.idx()])).collect()
}

fn apply(g: &mut EventGraph, redirect: &[EventId]) -> Option<Remap> {
    if redirect.iter().enumerate().all(|(i, e)| e.idx() == i) {
        return None;
    }
    Some(g.compact(redirect))
}

/// Merges sibling `Delay` events that share their only predecessor and delay.
pub fn pass_merge_outbound(g: &mut EventGraph) -> Option<Remap> {
    let mut redirect = identity(g);
    let mut seen: BTreeMap<(EventId, u32), EventId> = BTreeMap::new();
    for e in g.ids() {
        if let EventLabel::Delay { k, preds } = g.label(e) {
            if preds.len() == 1 {
                match seen.get(&(preds[0], *k)) {
                    Some(first) => redirect[e.idx()] = *first,
                    None => {
                        seen.insert((preds[0], *k), e);
                    }
                }
            }
        }
    }
    apply(g, &redirect)
}

/// Removes zero-delay joins whose result is always one particular predecessor.
pub fn pass_remove_unbalanced_joins(g: &mut EventGraph) -> Option<Remap> {
    let t = Timing::new(g);
    let mut redirect = identity(g);
    for e in g.ids() {
        let preds = match g.label(e) {
            EventLabel::Delay { k: 0, preds } => preds,
            EventLabel::Join { preds } if preds.len() == 1 => preds,
            _ => continue,
        };
        if preds.len() == 1 {
            redirect[e.idx()] = preds[0];
            continue;
        }
        let latest = preds.iter().find(|b| preds.iter().all(|a| a == *b || t.le_events(*a, **b).proved()));
        if let Some(b) = latest {
            redirect[e.idx()] = *b;
        }
    }
    apply(g, &redirect)
}

/// Rewrites `join(a + N, b + N)` into `join(a, b) + N` when both delays are bare.
pub fn pass_shift_branch_joins(g: &mut EventGraph) -> Option<Remap> {
    let succs = g.succs();
    let bare = |x: EventId| -> Option<(u32, EventId)> {
        match g.label(x) {
            EventLabel::Delay { k, preds }
                if preds.len() == 1 && g.actions(x).is_empty() && succs[x.idx()].len() == 1 =>
            {
                Some((*k, preds[0]))
            }
            _ => None,
        }
    };
    let mut rewrites = Vec::new();
    for e in g.ids() {
        let EventLabel::Join { preds } = g.label(e) else { continue };
        if preds.len() != 2 {
            continue;
        }
        if let (Some((k1, a)), Some((k2, b))) = (bare(preds[0]), bare(preds[1])) {
            if k1 == k2 && k1 > 0 {
                rewrites.push((e, preds[0], preds[1], k1, a, b));
            }
        }
    }
    if rewrites.is_empty() {
        return None;
    }
    let n = g.len();
    let mut redirect = identity(g);
    for (j, x, y, k, a, b) in rewrites {
        let j2 = g.join(vec![a, b]);
        let d = g.delay(k, vec![j2]);
        redirect[j.idx()] = d;
        redirect[x.idx()] = d;
        redirect[y.idx()] = d;
    }
    redirect.extend((n..g.len()).map(|i| EventId(i as u32)));
    let mut map = g.compact(&redirect);
    map.truncate(n);
    Some(map)
}

/// A join of the two sides of one branch happens exactly when the branch does.
pub fn pass_remove_branch_joins(g: &mut EventGraph) -> Option<Remap> {
    let mut redirect = identity(g);
    for e in g.ids() {
        let EventLabel::Join { preds } = g.label(e) else { continue };
        if preds.len() != 2 {
            continue;
        }
        if let (
            EventLabel::Branch { cond: c1, side: s1, pred: p1 },
            EventLabel::Branch { cond: c2, side: s2, pred: p2 },
        ) = (g.label(preds[0]), g.label(preds[1]))
        {
            if c1 == c2 && s1 != s2 && p1 == p2 {
                redirect[e.idx()] = *p1;
            }
        }
    }
    apply(g, &redirect)
}

fn check_writes(g: &EventGraph) -> Result<(), OptError> {
    for e in g.ids() {
        let mut regs = BTreeSet::new();
        for a in g.actions(e) {
            if let ActionKind::SetReg { reg, .. } = a.kind {
                if !regs.insert(reg) {
                    return Err(OptError::ConflictingWrites(e, reg));
                }
            }
        }
    }
    Ok(())
}

/// Runs the enabled passes in order until none applies. Returns the old-to-new map.
pub fn optimize(g: &mut EventGraph, cfg: PassConfig) -> Result<Remap, OptError> {
    let mut map: Remap = g.ids().map(Some).collect();
    type Pass = fn(&mut EventGraph) -> Option<Remap>;
    let passes: [(bool, Pass); 4] = [
        (cfg.merge_outbound, pass_merge_outbound),
        (cfg.unbalanced_joins, pass_remove_unbalanced_joins),
        (cfg.shift_branch_joins, pass_shift_branch_joins),
        (cfg.branch_joins, pass_remove_branch_joins),
    ];
    for _ in 0..cfg.max_iters.max(1) {
        let mut changed = false;
        for (on, pass) in passes {
            if on {
                if let Some(m) = pass(g) {
                    map = compose(&map, &m);
                    changed = true;
                }
            }
        }
        check_writes(g)?;
        if !changed {
            return Ok(map);
        }
    }
    Err(OptError::NoFixpoint(cfg.max_iters))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_graph::ValueExpr;

    fn setreg(g: &mut EventGraph, e: EventId, reg: usize) {
        let v = g.add_value(ValueExpr::Unit);
        g.attach(e, ActionKind::SetReg { reg, value: v });
    }

    #[test]
    fn merges_identical_siblings() {
        let mut g = EventGraph::new();
        let b = g.delay(2, vec![g.entry]);
        let c = g.delay(2, vec![g.entry]);
        setreg(&mut g, b, 0);
        setreg(&mut g, c, 1);
        assert!(pass_merge_outbound(&mut g).is_some());
        assert_eq!(g.len(), 2);
        assert_eq!(g.actions(EventId(1)).len(), 2);
    }

    #[test]
    fn distinct_labels_untouched() {
        let mut g = EventGraph::new();
        let a = g.delay(1, vec![g.entry]);
        g.delay(1, vec![a]);
        g.delay(2, vec![g.entry]);
        assert!(pass_merge_outbound(&mut g).is_none());
    }

    #[test]
    fn conflicting_writes_rejected() {
        let mut g = EventGraph::new();
        let b = g.delay(1, vec![g.entry]);
        let c = g.delay(1, vec![g.entry]);
        setreg(&mut g, b, 0);
        setreg(&mut g, c, 0);
        assert_eq!(optimize(&mut g, PassConfig::all()), Err(OptError::ConflictingWrites(EventId(1), 0)));
    }

    #[test]
    fn disabled_is_identity() {
        let mut g = EventGraph::new();
        let a = g.delay(0, vec![g.entry]);
        g.delay(0, vec![a, g.entry]);
        let before = g.clone();
        optimize(&mut g, PassConfig::none()).unwrap();
        assert_eq!(g, before);
    }
}
