//! Symbolic timestamps.
//!
//! A timestamp is a function of the branch choices and of the non-negative slack of
//! every sync event. [`Sym`] represents it exactly as a minimum over guarded
//! alternatives, each the maximum of linear terms `sum(slack vars) + c`.

use crate::event_graph::CondId;
use std::collections::BTreeMap;

const MAX_ALTS: usize = 256;
const MAX_TERMS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term {
    /// Sorted ids of the sync events whose slack is summed.
    pub vars: Vec<u32>,
    pub c: u64,
}

impl Term {
    fn le(&self, other: &Term, shift: u64) -> bool {
        self.c + shift <= other.c && is_subset(&self.vars, &other.vars)
    }
}

fn is_subset(a: &[u32], b: &[u32]) -> bool {
    let mut j = 0;
    for x in a {
        while j < b.len() && b[j] < *x {
            j += 1;
        }
        if j == b.len() || b[j] != *x {
            return false;
        }
        j += 1;
    }
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Alt {
    /// Sorted branch choices under which this alternative applies.
    pub guard: Vec<(CondId, bool)>,
    pub terms: Vec<Term>,
}

impl Alt {
    fn satisfied(&self, chi: &BTreeMap<CondId, bool>) -> bool {
        self.guard.iter().all(|(c, s)| chi.get(c).is_none_or(|v| v == s))
    }

    /// `max(self) + shift <= max(other)` for every slack assignment.
    fn dominated_by(&self, other: &Alt, shift: u64) -> bool {
        self.terms.iter().all(|t| other.terms.iter().any(|u| t.le(u, shift)))
    }

    fn normalize(&mut self) {
        self.terms.sort();
        self.terms.dedup();
        let ts = std::mem::take(&mut self.terms);
        for (i, t) in ts.iter().enumerate() {
            let redundant = ts.iter().enumerate().any(|(j, u)| j != i && t.le(u, 0));
            if !redundant {
                self.terms.push(t.clone());
            }
        }
    }
}

fn merge_guards(a: &[(CondId, bool)], b: &[(CondId, bool)]) -> Option<Vec<(CondId, bool)>> {
    let mut m: BTreeMap<CondId, bool> = a.iter().copied().collect();
    for (c, s) in b {
        if let Some(prev) = m.insert(*c, *s) {
            if prev != *s {
                return None;
            }
        }
    }
    Some(m.into_iter().collect())
}

/// Minimum over alternatives; no alternatives means never (infinity).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sym {
    pub alts: Vec<Alt>,
    /// Set when the representation exceeded its size cap; comparisons become unknown.
    pub overflow: bool,
}

impl Sym {
    pub fn zero() -> Sym {
        Sym { alts: vec![Alt { guard: vec![], terms: vec![Term { vars: vec![], c: 0 }] }], overflow: false }
    }

    pub fn inf() -> Sym {
        Sym { alts: vec![], overflow: false }
    }

    pub fn overflowed() -> Sym {
        Sym { alts: vec![], overflow: true }
    }

    pub fn is_inf(&self) -> bool {
        self.alts.is_empty() && !self.overflow
    }

    pub fn shift(&self, k: u64) -> Sym {
        let mut s = self.clone();
        for a in &mut s.alts {
            for t in &mut a.terms {
                t.c += k;
            }
        }
        s
    }

    /// Adds a fresh slack variable to every term.
    pub fn add_var(&self, v: u32) -> Sym {
        let mut s = self.clone();
        for a in &mut s.alts {
            for t in &mut a.terms {
                if let Err(pos) = t.vars.binary_search(&v) {
                    t.vars.insert(pos, v);
                }
            }
        }
        s
    }

    pub fn guard(&self, c: CondId, side: bool) -> Sym {
        let mut s = Sym { alts: vec![], overflow: self.overflow };
        for a in &self.alts {
            if let Some(g) = merge_guards(&a.guard, &[(c, side)]) {
                s.alts.push(Alt { guard: g, terms: a.terms.clone() });
            }
        }
        s
    }

    pub fn min(&self, other: &Sym) -> Sym {
        let mut s = Sym { alts: self.alts.clone(), overflow: self.overflow || other.overflow };
        s.alts.extend(other.alts.iter().cloned());
        s.normalize()
    }

    pub fn max(&self, other: &Sym) -> Sym {
        let overflow = self.overflow || other.overflow;
        if overflow {
            return Sym::overflowed();
        }
        let mut alts = Vec::new();
        for a in &self.alts {
            for b in &other.alts {
                let Some(guard) = merge_guards(&a.guard, &b.guard) else { continue };
                let mut terms = a.terms.clone();
                terms.extend(b.terms.iter().cloned());
                let mut alt = Alt { guard, terms };
                alt.normalize();
                if alt.terms.len() > MAX_TERMS {
                    return Sym::overflowed();
                }
                alts.push(alt);
                if alts.len() > MAX_ALTS * 4 {
                    return Sym::overflowed();
                }
            }
        }
        Sym { alts, overflow }.normalize()
    }

    pub fn min_all<'a>(it: impl IntoIterator<Item = &'a Sym>) -> Sym {
        it.into_iter().fold(Sym::inf(), |acc, s| acc.min(s))
    }

    pub fn max_all<'a>(it: impl IntoIterator<Item = &'a Sym>) -> Sym {
        let mut it = it.into_iter();
        let Some(first) = it.next() else { return Sym::zero() };
        it.fold(first.clone(), |acc, s| acc.max(s))
    }

    fn normalize(mut self) -> Sym {
        if self.overflow {
            return Sym::overflowed();
        }
        for a in &mut self.alts {
            a.normalize();
        }
        self.alts.sort();
        self.alts.dedup();
        let alts = std::mem::take(&mut self.alts);
        for (i, a) in alts.iter().enumerate() {
            let redundant = alts.iter().enumerate().any(|(j, b)| {
                j != i
                    && is_subset_guard(&b.guard, &a.guard)
                    && b.dominated_by(a, 0)
                    && (j < i || !a.dominated_by(b, 0) || b.guard.len() < a.guard.len())
            });
            if !redundant {
                self.alts.push(a.clone());
            }
        }
        if self.alts.len() > MAX_ALTS {
            return Sym::overflowed();
        }
        self
    }

    pub fn conds(&self) -> Vec<CondId> {
        let mut v: Vec<CondId> = self.alts.iter().flat_map(|a| a.guard.iter().map(|g| g.0)).collect();
        v.sort();
        v.dedup();
        v
    }

    /// Whether the timestamp is finite under the (complete) branch choice `chi`.
    pub fn finite_under(&self, chi: &BTreeMap<CondId, bool>) -> bool {
        self.alts.iter().any(|a| a.satisfied(chi))
    }

    /// Evaluates under concrete branch choices and slacks (`None` is infinity).
    pub fn eval(&self, chi: &BTreeMap<CondId, bool>, slack: &dyn Fn(u32) -> u64) -> Option<u64> {
        self.alts
            .iter()
            .filter(|a| a.satisfied(chi))
            .map(|a| a.terms.iter().map(|t| t.c + t.vars.iter().map(|v| slack(*v)).sum::<u64>()).max().unwrap_or(0))
            .min()
    }
}

fn is_subset_guard(a: &[(CondId, bool)], b: &[(CondId, bool)]) -> bool {
    a.iter().all(|g| b.contains(g))
}

/// `x + shift <= y` for every slack assignment, under branch choice `chi`.
/// Requires `chi` to decide every condition appearing in either guard.
pub fn le_under(x: &Sym, y: &Sym, shift: u64, chi: &BTreeMap<CondId, bool>) -> bool {
    let ys: Vec<&Alt> = y.alts.iter().filter(|a| a.satisfied(chi)).collect();
    if ys.is_empty() {
        // y is infinite: only a strict comparison needs x finite.
        return shift == 0 || x.finite_under(chi);
    }
    let xs: Vec<&Alt> = x.alts.iter().filter(|a| a.satisfied(chi)).collect();
    ys.iter().all(|ya| xs.iter().any(|xa| xa.dominated_by(ya, shift)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chi(v: &[(u32, bool)]) -> BTreeMap<CondId, bool> {
        v.iter().copied().collect()
    }

    #[test]
    fn max_distributes_over_min() {
        let a = Sym::zero().add_var(1);
        let b = Sym::zero().shift(2);
        let m = a.max(&b);
        assert_eq!(m.alts.len(), 1);
        assert_eq!(m.alts[0].terms.len(), 2);
        let s = a.min(&b);
        assert_eq!(s.alts.len(), 2);
    }

    #[test]
    fn dominated_terms_pruned() {
        let a = Sym::zero().shift(1).add_var(3);
        let b = Sym::zero().shift(1);
        let m = a.max(&b);
        assert_eq!(m.alts[0].terms, vec![Term { vars: vec![3], c: 1 }]);
    }

    #[test]
    fn comparisons_under_branches() {
        let base = Sym::zero().add_var(0);
        let t = base.guard(0, true).shift(1);
        let f = base.guard(0, false).shift(3);
        let j = t.min(&f);
        assert!(le_under(&base, &j, 1, &chi(&[(0, true)])));
        assert!(!le_under(&j, &base.shift(2), 0, &chi(&[(0, false)])));
        assert!(le_under(&j, &base.shift(3), 0, &chi(&[(0, false)])));
        // the then-side is infinite when the else-arm is taken
        assert!(le_under(&base, &t, 5, &chi(&[(0, false)])));
        assert!(!le_under(&Sym::inf(), &Sym::inf(), 1, &chi(&[])));
        assert!(le_under(&Sym::inf(), &Sym::inf(), 0, &chi(&[])));
    }

    #[test]
    fn eval_matches_structure() {
        let s = Sym::zero().add_var(4).shift(1).max(&Sym::zero().shift(3));
        assert_eq!(s.eval(&chi(&[]), &|_| 0), Some(3));
        assert_eq!(s.eval(&chi(&[]), &|_| 5), Some(6));
        assert_eq!(Sym::inf().eval(&chi(&[]), &|_| 0), None);
    }
}
