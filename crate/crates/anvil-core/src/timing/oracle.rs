//! Brute-force reference for timestamp relations.
//!
//! Enumerates every valid timestamp function in which each sync event fires at most
//! `bound` cycles after its predecessor, and evaluates patterns directly.

use super::{Delay, Pattern, PatternSet};
use crate::event_graph::{CondId, EventGraph, EventId, EventLabel};
use std::collections::BTreeMap;

/// `None` is infinity (the event never occurs).
pub type Timestamps = Vec<Option<u64>>;

fn ancestors(g: &EventGraph, roots: &[EventId]) -> Vec<bool> {
    let mut rel = vec![false; g.len()];
    for r in roots {
        rel[r.idx()] = true;
    }
    for e in g.ids().rev() {
        if rel[e.idx()] {
            for p in g.label(e).preds() {
                rel[p.idx()] = true;
            }
        }
    }
    rel
}

fn pattern_roots(g: &EventGraph, sets: &[&PatternSet]) -> Vec<EventId> {
    let mut roots = Vec::new();
    for s in sets {
        for p in &s.0 {
            roots.push(p.base);
            if let Delay::Msg(m) = p.delay {
                roots.extend(g.ids().filter(|e| matches!(g.label(*e), EventLabel::MsgSync { msg, .. } if *msg == m)));
            }
        }
    }
    roots
}

/// Visits every timestamp function with sync slack in `0..=bound`. Events outside
/// `relevant` are left at `None`. Stops early when `f` returns false; returns whether
/// the enumeration ran to completion.
pub fn for_each_timestamp(
    g: &EventGraph,
    bound: u64,
    relevant: Option<&[bool]>,
    f: &mut dyn FnMut(&[Option<u64>]) -> bool,
) -> bool {
    let order: Vec<EventId> = g.ids().filter(|e| relevant.is_none_or(|r| r[e.idx()])).collect();
    let mut conds: Vec<CondId> = order
        .iter()
        .filter_map(|e| match g.label(*e) {
            EventLabel::Branch { cond, .. } => Some(*cond),
            _ => None,
        })
        .collect();
    conds.sort();
    conds.dedup();
    for bits in 0u64..(1u64 << conds.len()) {
        let chi: BTreeMap<CondId, bool> = conds.iter().enumerate().map(|(i, c)| (*c, bits >> i & 1 == 1)).collect();
        let mut ts: Timestamps = vec![None; g.len()];
        if !visit(g, bound, &order, 0, &chi, &mut ts, f) {
            return false;
        }
    }
    true
}

fn visit(
    g: &EventGraph,
    bound: u64,
    order: &[EventId],
    pos: usize,
    chi: &BTreeMap<CondId, bool>,
    ts: &mut Timestamps,
    f: &mut dyn FnMut(&[Option<u64>]) -> bool,
) -> bool {
    let Some(&e) = order.get(pos) else { return f(ts) };
    let val = |p: &EventId, ts: &Timestamps| ts[p.idx()];
    match g.label(e) {
        EventLabel::MsgSync { pred, pin: Some((p, k)), .. } => {
            ts[e.idx()] = match (val(pred, ts), val(p, ts)) {
                (Some(a), Some(b)) => Some(a.max(b + *k as u64)),
                _ => None,
            };
        }
        EventLabel::MsgSync { pred, .. } => {
            if let Some(t) = val(pred, ts) {
                for s in 0..=bound {
                    ts[e.idx()] = Some(t + s);
                    if !visit(g, bound, order, pos + 1, chi, ts, f) {
                        return false;
                    }
                }
                return true;
            }
            ts[e.idx()] = None;
        }
        EventLabel::Root => ts[e.idx()] = Some(0),
        EventLabel::Delay { k, preds } => {
            let mut m = Some(0u64);
            for p in preds {
                m = match (m, val(p, ts)) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    _ => None,
                };
            }
            ts[e.idx()] = m.map(|t| t + *k as u64);
        }
        EventLabel::Branch { cond, side, pred } => {
            ts[e.idx()] = if chi.get(cond) == Some(side) { val(pred, ts) } else { None };
        }
        EventLabel::Join { preds } => {
            ts[e.idx()] = preds.iter().filter_map(|p| val(p, ts)).min();
        }
    }
    visit(g, bound, order, pos + 1, chi, ts, f)
}

/// All timestamp functions with slack up to `bound`.
pub fn enumerate_timestamps(g: &EventGraph, bound: u64) -> Vec<Timestamps> {
    let mut out = Vec::new();
    for_each_timestamp(g, bound, None, &mut |ts| {
        out.push(ts.to_vec());
        true
    });
    out
}

pub fn pattern_timestamp(g: &EventGraph, ts: &[Option<u64>], p: &Pattern) -> Option<u64> {
    let t = ts[p.base.idx()]?;
    match p.delay {
        Delay::Cycles(k) => Some(t + k as u64),
        Delay::Msg(m) => {
            let next = g
                .ids()
                .filter(|c| *c != p.base && matches!(g.label(*c), EventLabel::MsgSync { msg, .. } if *msg == m))
                .filter_map(|c| ts[c.idx()])
                .filter(|tc| *tc >= t)
                .min()?;
            Some(next.max(t + 1))
        }
    }
}

pub fn set_timestamp(g: &EventGraph, ts: &[Option<u64>], s: &PatternSet) -> Option<u64> {
    s.0.iter().filter_map(|p| pattern_timestamp(g, ts, p)).min()
}

fn check(g: &EventGraph, a: &PatternSet, b: &PatternSet, bound: u64, strict: bool) -> bool {
    let rel = ancestors(g, &pattern_roots(g, &[a, b]));
    for_each_timestamp(g, bound, Some(&rel), &mut |ts| match (set_timestamp(g, ts, a), set_timestamp(g, ts, b)) {
        (_, None) => !strict || set_timestamp(g, ts, a).is_some(),
        (None, Some(_)) => false,
        (Some(x), Some(y)) => {
            if strict {
                x < y
            } else {
                x <= y
            }
        }
    })
}

/// `A <= B` in every enumerated timestamp function.
pub fn oracle_le(g: &EventGraph, a: &PatternSet, b: &PatternSet, bound: u64) -> bool {
    check(g, a, b, bound, false)
}

/// `A < B` in every enumerated timestamp function.
pub fn oracle_lt(g: &EventGraph, a: &PatternSet, b: &PatternSet, bound: u64) -> bool {
    check(g, a, b, bound, true)
}
