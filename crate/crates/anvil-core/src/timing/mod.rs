//! Timestamp reasoning over event graphs.
//!
//! [`Timing`] decides `A <= B` and `A < B` between event patterns for every valid
//! timestamp function of a graph. Answers are sound but incomplete: `Proved` means
//! the relation holds in every execution, `Unknown` means it could not be shown.

pub mod oracle;
pub mod sym;

use crate::event_graph::{CondId, EventGraph, EventId, EventLabel};
use crate::frontend::resolve::MsgRef;
use serde::Serialize;
use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
pub use sym::Sym;

/// Branch-choice enumeration is abandoned above this many conditions.
pub const MAX_CHI_CONDS: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Delay {
    Cycles(u32),
    /// Until the next synchronization of the message after the base event.
    Msg(MsgRef),
}

/// `base:delay`, a time point relative to an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Pattern {
    pub base: EventId,
    pub delay: Delay,
}

impl Pattern {
    pub fn at(base: EventId) -> Pattern {
        Pattern { base, delay: Delay::Cycles(0) }
    }

    pub fn cycles(base: EventId, k: u32) -> Pattern {
        Pattern { base, delay: Delay::Cycles(k) }
    }

    pub fn msg(base: EventId, m: MsgRef) -> Pattern {
        Pattern { base, delay: Delay::Msg(m) }
    }

    pub fn display(&self, g: &EventGraph) -> String {
        match self.delay {
            Delay::Cycles(0) => format!("{}", self.base),
            Delay::Cycles(k) => format!("{}:#{k}", self.base),
            Delay::Msg(m) => format!("{}:{}", self.base, g.msg_name(m)),
        }
    }
}

/// The earliest of a set of patterns; the empty set never occurs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Default)]
pub struct PatternSet(pub Vec<Pattern>);

impl PatternSet {
    pub fn eternal() -> PatternSet {
        PatternSet(vec![])
    }

    pub fn of(ps: impl IntoIterator<Item = Pattern>) -> PatternSet {
        let mut v: Vec<Pattern> = ps.into_iter().collect();
        v.sort();
        v.dedup();
        PatternSet(v)
    }

    pub fn single(p: Pattern) -> PatternSet {
        PatternSet(vec![p])
    }

    pub fn is_eternal(&self) -> bool {
        self.0.is_empty()
    }

    pub fn union(&self, other: &PatternSet) -> PatternSet {
        PatternSet::of(self.0.iter().chain(other.0.iter()).copied())
    }

    pub fn display(&self, g: &EventGraph) -> String {
        match self.0.len() {
            0 => "inf".to_string(),
            1 => self.0[0].display(g),
            _ => format!("{{{}}}", self.0.iter().map(|p| p.display(g)).collect::<Vec<_>>().join(", ")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Proved,
    Unknown,
}

impl Verdict {
    pub fn proved(self) -> bool {
        self == Verdict::Proved
    }

    fn of(b: bool) -> Verdict {
        if b {
            Verdict::Proved
        } else {
            Verdict::Unknown
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Proved => "proved",
            Verdict::Unknown => "unknown",
        })
    }
}

/// Calls `f` for every assignment of the given conditions; stops at the first `false`.
/// Returns `None` when there are too many conditions to enumerate.
pub fn forall_chi(conds: &[CondId], mut f: impl FnMut(&BTreeMap<CondId, bool>) -> bool) -> Option<bool> {
    let mut conds = conds.to_vec();
    conds.sort();
    conds.dedup();
    if conds.len() > MAX_CHI_CONDS {
        return None;
    }
    for bits in 0u32..(1u32 << conds.len()) {
        let chi: BTreeMap<CondId, bool> = conds.iter().enumerate().map(|(i, c)| (*c, bits >> i & 1 == 1)).collect();
        if !f(&chi) {
            return Some(false);
        }
    }
    Some(true)
}

/// Conditions appearing in any of the symbols.
pub fn conds_of<'a>(syms: impl IntoIterator<Item = &'a Sym>) -> Vec<CondId> {
    let mut v: Vec<CondId> = syms.into_iter().flat_map(|s| s.conds()).collect();
    v.sort();
    v.dedup();
    v
}

/// Symbolic timestamps for every event of a graph, with cached pattern bounds.
pub struct Timing<'g> {
    pub graph: &'g EventGraph,
    syms: Vec<Sym>,
    syncs: BTreeMap<MsgRef, Vec<EventId>>,
    upper_cache: RefCell<HashMap<Pattern, Sym>>,
    lower_cache: RefCell<HashMap<Pattern, Sym>>,
}

impl<'g> Timing<'g> {
    pub fn new(graph: &'g EventGraph) -> Timing<'g> {
        let mut syms: Vec<Sym> = Vec::with_capacity(graph.len());
        let mut syncs: BTreeMap<MsgRef, Vec<EventId>> = BTreeMap::new();
        for e in graph.ids() {
            let s = match graph.label(e) {
                EventLabel::Root => Sym::zero(),
                EventLabel::Delay { k, preds } => Sym::max_all(preds.iter().map(|p| &syms[p.idx()])).shift(*k as u64),
                EventLabel::MsgSync { msg, pred, pin } => {
                    syncs.entry(*msg).or_default().push(e);
                    match pin {
                        Some((p, k)) => syms[pred.idx()].max(&syms[p.idx()].shift(*k as u64)),
                        None => syms[pred.idx()].add_var(e.0),
                    }
                }
                EventLabel::Branch { cond, side, pred } => syms[pred.idx()].guard(*cond, *side),
                EventLabel::Join { preds } => Sym::min_all(preds.iter().map(|p| &syms[p.idx()])),
            };
            syms.push(s);
        }
        Timing {
            graph,
            syms,
            syncs,
            upper_cache: RefCell::new(HashMap::new()),
            lower_cache: RefCell::new(HashMap::new()),
        }
    }

    pub fn event(&self, e: EventId) -> &Sym {
        &self.syms[e.idx()]
    }

    pub fn syncs_of(&self, m: MsgRef) -> &[EventId] {
        self.syncs.get(&m).map(|v| v.as_slice()).unwrap_or(&[])
    }

    fn cmp_syms(&self, x: &Sym, y: &Sym, shift: u64) -> Verdict {
        if x.overflow || y.overflow {
            return Verdict::Unknown;
        }
        let conds = conds_of([x, y]);
        Verdict::of(forall_chi(&conds, |chi| sym::le_under(x, y, shift, chi)).unwrap_or(false))
    }

    pub fn le_events(&self, a: EventId, b: EventId) -> Verdict {
        self.cmp_syms(self.event(a), self.event(b), 0)
    }

    pub fn lt_events(&self, a: EventId, b: EventId) -> Verdict {
        self.cmp_syms(self.event(a), self.event(b), 1)
    }

    /// A symbol that is never earlier than the pattern's timestamp.
    pub fn upper(&self, p: &Pattern) -> Sym {
        if let Some(s) = self.upper_cache.borrow().get(p) {
            return s.clone();
        }
        let base = self.event(p.base);
        let s = match p.delay {
            Delay::Cycles(k) => base.shift(k as u64),
            Delay::Msg(m) => {
                let cands: Vec<&Sym> = self
                    .syncs_of(m)
                    .iter()
                    .filter(|c| **c != p.base && self.le_events(p.base, **c).proved())
                    .map(|c| self.event(*c))
                    .collect();
                base.shift(1).max(&Sym::min_all(cands))
            }
        };
        self.upper_cache.borrow_mut().insert(*p, s.clone());
        s
    }

    /// A symbol that is never later than the pattern's timestamp.
    pub fn lower(&self, p: &Pattern) -> Sym {
        if let Some(s) = self.lower_cache.borrow().get(p) {
            return s.clone();
        }
        let base = self.event(p.base);
        let s = match p.delay {
            Delay::Cycles(k) => base.shift(k as u64),
            Delay::Msg(m) => {
                let cands: Vec<&Sym> = self
                    .syncs_of(m)
                    .iter()
                    .filter(|c| **c != p.base && !self.lt_events(**c, p.base).proved())
                    .map(|c| self.event(*c))
                    .collect();
                base.shift(1).max(&Sym::min_all(cands))
            }
        };
        self.lower_cache.borrow_mut().insert(*p, s.clone());
        s
    }

    pub fn upper_set(&self, s: &PatternSet) -> Sym {
        s.0.iter().fold(Sym::inf(), |acc, p| acc.min(&self.upper(p)))
    }

    pub fn lower_set(&self, s: &PatternSet) -> Sym {
        s.0.iter().fold(Sym::inf(), |acc, p| acc.min(&self.lower(p)))
    }

    pub fn le(&self, a: &PatternSet, b: &PatternSet) -> Verdict {
        self.cmp_syms(&self.upper_set(a), &self.lower_set(b), 0)
    }

    pub fn lt(&self, a: &PatternSet, b: &PatternSet) -> Verdict {
        self.cmp_syms(&self.upper_set(a), &self.lower_set(b), 1)
    }

    pub fn le_pat(&self, a: &Pattern, b: &Pattern) -> Verdict {
        self.cmp_syms(&self.upper(a), &self.lower(b), 0)
    }
}

/// `A <= B` under every valid timestamp function of `g`.
pub fn le_g(g: &EventGraph, a: &PatternSet, b: &PatternSet) -> Verdict {
    Timing::new(g).le(a, b)
}

/// `A < B` under every valid timestamp function of `g`.
pub fn lt_g(g: &EventGraph, a: &PatternSet, b: &PatternSet) -> Verdict {
    Timing::new(g).lt(a, b)
}
