use super::{Lifetime, Obligation, ThreadCheck};
use crate::diagnostics::{self, Diagnostic};
use crate::event_graph::EventGraph;
use crate::frontend::resolve::{ResolvedProc, ResolvedProgram};
use crate::timing::sym::{le_under, Sym};
use crate::timing::{conds_of, forall_chi, PatternSet, Timing};

/// Checks `f` under every branch choice that decides `syms`. Unknown counts as failure.
fn holds(syms: &[&Sym], f: impl Fn(&std::collections::BTreeMap<u32, bool>) -> bool) -> bool {
    if syms.iter().any(|s| s.overflow) {
        return false;
    }
    forall_chi(&conds_of(syms.iter().copied()), f).unwrap_or(false)
}

fn show_lifetime(tc: &ThreadCheck, t: &Timing, g: &EventGraph, lt: &Lifetime) -> String {
    format!("[{}, {})", lt.start, tc.resolved_end(t, lt).display(g))
}

fn show_window(g: &EventGraph, start: crate::event_graph::EventId, until: &PatternSet) -> String {
    format!("[{}, {})", start, until.display(g))
}

pub(super) fn discharge(prog: &ResolvedProgram, proc: &ResolvedProc, tc: &mut ThreadCheck) {
    let g = tc.graph.clone();
    let t = Timing::new(&g);
    let mut ds: Vec<Diagnostic> = std::mem::take(&mut tc.early);
    for ob in &tc.obligations {
        match ob {
            Obligation::ValueUse { ctx, anchor, start, until, value, span } => {
                let (a, vs, ws) = (t.event(*anchor), t.event(value.start), t.event(*start));
                let (u, l) = (t.upper_set(until), t.lower_set(&value.patterns()));
                let ok = holds(&[a, vs, ws, &u, &l], |chi| {
                    !a.finite_under(chi) || (le_under(vs, ws, 0, chi) && le_under(&u, &l, 0, chi))
                });
                if !ok {
                    ds.push(Diagnostic::error("value-use", ctx.message(), *span).with_note(format!(
                        "cannot prove the value's lifetime {} covers its use {}",
                        show_lifetime(tc, &t, &g, value),
                        show_window(&g, *start, until)
                    )));
                }
            }
            Obligation::SendCoverage { anchor, start, required, value, span, .. } => {
                let (a, vs, ws) = (t.event(*anchor), t.event(value.start), t.event(*start));
                let (u, l) = (t.upper_set(required), t.lower_set(&value.patterns()));
                let ok = holds(&[a, vs, ws, &u, &l], |chi| {
                    !a.finite_under(chi) || (le_under(vs, ws, 0, chi) && le_under(&u, &l, 0, chi))
                });
                if !ok {
                    ds.push(
                        Diagnostic::error("send-coverage", "Value not live long enough in message send!", *span)
                            .with_note(format!(
                                "cannot prove the value's lifetime {} covers the message contract {}",
                                show_lifetime(tc, &t, &g, value),
                                show_window(&g, *start, required)
                            )),
                    );
                }
            }
            Obligation::RegMutation { reg, at, span } => {
                let m = t.event(*at);
                let m1 = m.shift(1);
                for (li, loan) in tc.loans.iter().enumerate() {
                    if loan.reg != *reg {
                        continue;
                    }
                    let r = t.event(loan.read);
                    let demands: Vec<(&Sym, Sym)> =
                        loan.demands.iter().map(|d| (t.event(d.anchor), t.upper_set(&d.until))).collect();
                    let mut syms: Vec<&Sym> = vec![m, r, &m1];
                    for (a, u) in &demands {
                        syms.push(a);
                        syms.push(u);
                    }
                    let ok = holds(&syms, |chi| {
                        !m.finite_under(chi)
                            || !r.finite_under(chi)
                            || le_under(m, r, 1, chi)
                            || demands.iter().all(|(a, u)| !a.finite_under(chi) || le_under(u, &m1, 0, chi))
                    });
                    if !ok {
                        let until: Vec<String> = tc.loan_extent(&t, li).iter().map(|d| d.display(&g)).collect();
                        ds.push(
                            Diagnostic::error(
                                "reg-mutation",
                                format!("Assignment to `{}` conflicts with its loan time!", proc.regs[*reg].name),
                                *span,
                            )
                            .with_note(format!(
                                "assigned at {at}, while borrowed from {} until {}",
                                loan.read,
                                if until.is_empty() { "its read".to_string() } else { until.join(" and ") }
                            )),
                        );
                    }
                }
            }
            Obligation::SendNonOverlap { msg, first, second, span } => {
                let (s1, s2) = (t.event(first.0), t.event(second.0));
                let (u1, u2) = (t.upper_set(&first.1), t.upper_set(&second.1));
                let ok = holds(&[s1, s2, &u1, &u2], |chi| {
                    !s1.finite_under(chi)
                        || !s2.finite_under(chi)
                        || le_under(&u1, s2, 0, chi)
                        || le_under(&u2, s1, 0, chi)
                });
                if !ok {
                    let name = prog.msg_name(proc, *msg);
                    ds.push(
                        Diagnostic::error(
                            "send-overlap",
                            format!("Message `{name}` sent again before the previous send expired!"),
                            *span,
                        )
                        .with_note(format!(
                            "sends at {} and {} may overlap; contracts end at {} and {}",
                            first.0,
                            second.0,
                            first.1.display(&g),
                            second.1.display(&g)
                        )),
                    );
                }
            }
            Obligation::SyncMode { anchors, attempt, deadline, span, what, .. } => {
                let ans: Vec<&Sym> = anchors.iter().map(|a| t.event(*a)).collect();
                let (at, l) = (t.event(*attempt), t.lower_set(deadline));
                let mut syms = ans.clone();
                syms.push(at);
                syms.push(&l);
                let ok = holds(&syms, |chi| !ans.iter().all(|a| a.finite_under(chi)) || le_under(at, &l, 0, chi));
                if !ok {
                    ds.push(Diagnostic::error("sync-mode", what.clone(), *span).with_note(format!(
                        "cannot prove the attempt at {attempt} starts by {}",
                        deadline.display(&g)
                    )));
                }
            }
        }
    }
    diagnostics::dedup(&mut ds);
    tc.diagnostics = ds;
}
