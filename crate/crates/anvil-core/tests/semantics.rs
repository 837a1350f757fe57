mod common;

use anvil_core::driver::compile_source;
use anvil_core::frontend::desugar::check_term;
use anvil_core::frontend::resolve::{Dur, RKind, RTerm, ResolvedProc, ResolvedProgram};
use anvil_core::semantics::*;
use proptest::prelude::*;
use rand::SeedableRng;
use std::collections::{BTreeMap, BTreeSet, HashMap};

fn prog(src: &str) -> ResolvedProgram {
    compile_source("t.anvil", src).unwrap_or_else(|f| panic!("{}", f.render())).program
}

fn logs_of(src: &str, bound: u32) -> Vec<ExecutionLog> {
    let p = prog(src);
    let term = p.procs[0].threads[0].body.clone();
    enumerate_logs(&p, &p.procs[0], &term, bound)
}

fn set(acts: Vec<Action>) -> BTreeSet<Action> {
    acts.into_iter().collect()
}

const CH: &str = "chan ch { right m : (logic[8]@#1), left n : (logic[8]@#1) }\n";

#[test]
fn cycle_one() {
    let logs = logs_of("proc p() { loop { cycle 1 } }", 3);
    assert_eq!(logs.len(), 1);
    assert_eq!(logs[0].cycles, vec![BTreeSet::new(), set(vec![Action::create(0, &[], &[])])]);
}

#[test]
fn literal() {
    let logs = logs_of("proc p() { loop { 8'd3 } }", 3);
    assert_eq!(logs, vec![ExecutionLog::single([Action::create(0, &[], &[])])]);
}

#[test]
fn recv_without_slack() {
    let logs = logs_of(&format!("{CH}proc p(e : right ch) {{ loop {{ recv e.m }} }}"), 0);
    let dur = LogDuration::Cycles(1);
    let msg = msg_key(anvil_core::frontend::resolve::MsgRef { ep: 0, msg: 0 });
    assert_eq!(logs, vec![ExecutionLog::single([Action::Recv { msg, v: 1, dur }, Action::create(0, &[], &[1])])]);
}

#[test]
fn recv_slack_choices() {
    let logs = logs_of(&format!("{CH}proc p(e : right ch) {{ loop {{ recv e.m }} }}"), 3);
    let lens: BTreeSet<usize> = logs.iter().map(|l| l.len()).collect();
    assert_eq!(lens, BTreeSet::from([1, 2, 3, 4]));
}

#[test]
fn register_read() {
    let logs = logs_of("proc p() { reg r : logic; loop { *r } }", 3);
    assert_eq!(logs, vec![ExecutionLog::single([Action::create(0, &[0], &[])])]);
}

#[test]
fn both_branches_explored() {
    let logs = logs_of("proc p() { reg r : logic; loop { if *r { cycle 1 } else { cycle 2 } } }", 0);
    assert_eq!(logs.len(), 2);
}

#[test]
fn safety_examples() {
    assert!(is_safe(&ExecutionLog::default()));
    let l = ExecutionLog::single([Action::create(0, &[], &[]), Action::Use(0)]);
    assert!(is_safe(&l));
    let l = ExecutionLog::new(vec![
        set(vec![Action::create(0, &[4], &[])]),
        set(vec![Action::Mut(4)]),
        set(vec![Action::Use(0)]),
    ]);
    let v = check_log_safety(&l).unwrap_err();
    assert_eq!(v.reason, UnsafeReason::Mutated { reg: 4, at: 1, hull: (0, 2) });
    let dur = LogDuration::Cycles(1);
    let l = ExecutionLog::new(vec![
        set(vec![Action::Recv { msg: 0, v: 1, dur }, Action::create(0, &[], &[1])]),
        BTreeSet::new(),
        set(vec![Action::Use(0)]),
    ]);
    assert!(matches!(check_log_safety(&l).unwrap_err().reason, UnsafeReason::OutsideReceived { .. }));
}

#[test]
fn reg_dep_examples() {
    let l = ExecutionLog::new(vec![set(vec![Action::create(1, &[7], &[])]), set(vec![Action::create(2, &[8], &[1])])]);
    assert_eq!(reg_dep(&l, 1), Some(BTreeSet::from([7])));
    assert_eq!(reg_dep(&l, 2), Some(BTreeSet::from([7, 8])));
    assert_eq!(reg_dep(&l, 3), None);
}

#[test]
fn compose_examples() {
    let dur = LogDuration::Cycles(1);
    let send = ExecutionLog::new(vec![BTreeSet::new(), BTreeSet::new(), set(vec![Action::Send { msg: 3, v: 9, dur }])]);
    let recv = ExecutionLog::new(vec![BTreeSet::new(), BTreeSet::new(), set(vec![Action::Recv { msg: 3, v: 9, dur }])]);
    let sigma = BTreeSet::from([3]);
    assert_eq!(compose_logs(&send, &recv, &sigma), Some(ExecutionLog::empty(3)));
    let early = ExecutionLog::new(vec![BTreeSet::new(), set(vec![Action::Recv { msg: 3, v: 9, dur }])]);
    assert_eq!(compose_logs(&send, &early, &sigma), None);
    assert_eq!(compose_logs(&send, &early, &BTreeSet::new()), Some(send.merge(&early)));
}

#[test]
fn concretize_loop_family() {
    let p = prog("proc p() { loop { cycle 1 } }");
    let fam = concretize(&p.procs[0].threads[0], 2);
    assert_eq!(fam.len(), 2);
    assert_eq!(fam[0].kind, RKind::Cycle(1));
    assert!(matches!(&fam[1].kind, RKind::Wait(a, b) if a.kind == RKind::Cycle(1) && b.kind == RKind::Cycle(1)));
}

#[test]
fn composition_counts() {
    let src = format!(
        "{CH}proc a(e : left ch) {{ loop {{ send e.m(8'd1) }} }}\nproc b() {{ chan l -- r : ch; spawn a(l); loop {{ recv r.m }} }}"
    );
    assert_eq!(composition_count(&prog(&src), "b", 1).unwrap(), 1);
    let top = common::load("Top.anvil");
    // One loop thread in Top, one in child, two in grandchild.
    assert_eq!(composition_count(&top.program, "Top", 2).unwrap(), 16);
}

#[test]
fn corpus_witnesses() {
    let r = verify_program(&common::load("top_unsafe.anvil").program, None, Bounds::default(), Mode::Local).unwrap();
    let w = r.witness.expect("unsafe");
    let UnsafeReason::Mutated { reg, .. } = w.violation.reason else { panic!("{}", w.reason) };
    assert_eq!(reg, 0, "address is the first register");
    assert!(w.reason.contains("`address`"));

    let r = verify_program(&common::load("Top.anvil").program, None, Bounds::default(), Mode::Local).unwrap();
    let w = r.witness.expect("unsafe");
    assert!(w.scope.starts_with("child"), "{}", w.scope);
    assert!(matches!(w.violation.reason, UnsafeReason::OutsideReceived { .. }));
    assert!(w.trace.contains("send ep.data"));
}

#[test]
fn accepted_corpus_is_safe() {
    for name in ["counter.anvil", "fifo.anvil", "top_safe.anvil", "mem.anvil"] {
        let c = common::load(name);
        assert!(c.check(Default::default()).ok(), "{name}");
        let r = verify_program(&c.program, None, Bounds::default(), Mode::Local).unwrap();
        assert!(r.is_safe() && r.complete, "{name}: {}", r.render());
        assert!(r.logs > 0);
    }
}

#[test]
fn composed_pipe_is_safe() {
    let c = common::load("fifo.anvil");
    let r = verify_program(&c.program, Some("pipe"), Bounds { slack: 1, iters: 1, budget: 1_000_000 }, Mode::Composed)
        .unwrap();
    assert!(r.is_safe() && r.complete, "{}", r.render());
}

#[test]
fn composed_receiver_inherits_sender_registers() {
    // The child sends a register value; the parent mutates nothing, but the child
    // changes the register while the parent still uses the value.
    let src = format!(
        "{CH}proc a(e : left ch) {{ reg r : logic[8]; loop {{ send e.m(*r) >> set r := 8'd1 }} }}\n\
         proc b() {{ chan l -- rr : ch; spawn a(l); loop {{ let x = recv rr.m >> cycle 1 >> dprint \"%d\" (x) }} }}"
    );
    let p = prog(&src);
    let r = verify_program(&p, Some("b"), Bounds { slack: 0, iters: 1, budget: 100_000 }, Mode::Composed).unwrap();
    let w = r.witness.expect("composed log is unsafe");
    assert!(w.reason.contains("b/a.r"), "{}", w.reason);
}

#[test]
fn budget_marks_incomplete() {
    let c = common::load("top_safe.anvil");
    let r = verify_program(&c.program, None, Bounds { slack: 3, iters: 2, budget: 10 }, Mode::Local).unwrap();
    assert!(!r.complete);
    assert!(r.render().contains("incomplete"));
}

#[test]
fn report_is_deterministic() {
    let c = common::load("Top.anvil");
    let a = verify_program(&c.program, None, Bounds::default(), Mode::Local).unwrap();
    let b = verify_program(&c.program, None, Bounds::default(), Mode::Local).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

/// Reference evaluator written directly against the log algebra: relative logs,
/// an environment of remaining delays, and `shift` when sequencing.
struct Reference<'a> {
    prog: &'a ResolvedProgram,
    proc: &'a ResolvedProc,
    bound: u32,
    ids: HashMap<*const RTerm, u32>,
}

type Gamma = BTreeMap<usize, (usize, ValId)>;

fn shift(g: &Gamma, k: usize) -> Gamma {
    g.iter().map(|(x, (d, v))| (*x, (d.saturating_sub(k), *v))).collect()
}

impl Reference<'_> {
    fn id(&self, t: &RTerm) -> ValId {
        2 * self.ids[&(t as *const RTerm)]
    }

    fn after(&self, k: usize, acts: Vec<Action>) -> ExecutionLog {
        ExecutionLog::empty(k + 1).concat(&ExecutionLog::single(acts))
    }

    /// `(log, value, first recurse point)` for every choice.
    fn eval(&self, t: &RTerm, g: &Gamma) -> Vec<(ExecutionLog, ValId, Option<usize>)> {
        let id = self.id(t);
        let one = |acts: Vec<Action>| vec![(ExecutionLog::single(acts), id, None)];
        match &t.kind {
            RKind::Lit { .. } | RKind::Unit | RKind::Ready { .. } => one(vec![Action::create(id, &[], &[])]),
            RKind::Cycle(n) => vec![(self.after(*n as usize, vec![Action::create(id, &[], &[])]), id, None)],
            RKind::RegRead(r) => one(vec![Action::create(id, &[*r as u32], &[])]),
            RKind::Var(x) => {
                let (k, v) = g[x];
                vec![(ExecutionLog::empty(k + 1), v, None)]
            }
            RKind::Wait(a, b) => {
                let mut out = vec![];
                for (l1, _, p1) in self.eval(a, g) {
                    let n = l1.len() - 1;
                    for (l2, v2, p2) in self.eval(b, &shift(g, n)) {
                        out.push((l1.concat(&l2), v2, p1.or(p2.map(|p| p + n))));
                    }
                }
                out
            }
            RKind::Join(a, b) => {
                let mut out = vec![];
                for (l1, _, p1) in self.eval(a, g) {
                    for (l2, v2, p2) in self.eval(b, g) {
                        out.push((l1.merge(&l2), v2, min_opt(p1, p2)));
                    }
                }
                out
            }
            RKind::Let { var, value, body } => {
                let mut out = vec![];
                for (l1, v1, p1) in self.eval(value, g) {
                    let mut g2 = g.clone();
                    g2.insert(*var, (l1.len() - 1, v1));
                    for (l2, v2, p2) in self.eval(body, &g2) {
                        out.push((l1.merge(&l2), v2, min_opt(p1, p2)));
                    }
                }
                out
            }
            RKind::If { cond, then_, else_ } => {
                let mut out = vec![];
                for (l1, v1, p1) in self.eval(cond, g) {
                    for arm in [then_, else_] {
                        for (l2, v2, p2) in self.eval(arm, g) {
                            let l = l1.merge(&l2).merge(&ExecutionLog::single([Action::Use(v1)]));
                            out.push((l, v2, min_opt(p1, p2)));
                        }
                    }
                }
                out
            }
            RKind::Send { msg, value } => {
                let mut out = vec![];
                for (l, v, p) in self.eval(value, g) {
                    for j in 0..=self.bound as usize {
                        let send = Action::Send { msg: msg_key(*msg), v, dur: self.dur(*msg) };
                        out.push((l.merge(&self.after(j, vec![send, Action::create(id, &[], &[])])), id, p));
                    }
                }
                out
            }
            RKind::Recv { msg } => (0..=self.bound as usize)
                .map(|j| {
                    let recv = Action::Recv { msg: msg_key(*msg), v: id + 1, dur: self.dur(*msg) };
                    (self.after(j, vec![recv, Action::create(id, &[], &[id + 1])]), id, None)
                })
                .collect(),
            RKind::Set { reg, value } => self
                .eval(value, g)
                .into_iter()
                .map(|(l, v, p)| {
                    let w = ExecutionLog::new(vec![
                        [Action::Use(v), Action::Mut(*reg as u32)].into_iter().collect(),
                        [Action::create(id, &[], &[])].into_iter().collect(),
                    ]);
                    (l.merge(&w), id, p)
                })
                .collect(),
            RKind::Binary { lhs, rhs, .. } => {
                let mut out = vec![];
                for (l1, v1, p1) in self.eval(lhs, g) {
                    for (l2, v2, p2) in self.eval(rhs, g) {
                        let m = l1.len().max(l2.len());
                        let c =
                            ExecutionLog::empty(m).concat(&ExecutionLog::single([Action::create(id, &[], &[v1, v2])]));
                        out.push((l1.merge(&l2).merge(&c), id, min_opt(p1, p2)));
                    }
                }
                out
            }
            RKind::Unary { operand, .. } => self.eval(operand, g),
            RKind::Recurse => vec![(ExecutionLog::single([Action::create(id, &[], &[])]), id, Some(0))],
            RKind::Dprint { args, .. } => {
                let mut acc: Vec<(ExecutionLog, Vec<ValId>, Option<usize>)> =
                    vec![(ExecutionLog::empty(1), vec![], None)];
                for a in args {
                    let mut next = vec![];
                    for (l, vs, p) in &acc {
                        for (la, va, pa) in self.eval(a, g) {
                            let mut vs = vs.clone();
                            vs.push(va);
                            next.push((l.merge(&la), vs, min_opt(*p, pa)));
                        }
                    }
                    acc = next;
                }
                acc.into_iter()
                    .map(|(l, vs, p)| {
                        let mut acts: Vec<Action> = vs.iter().map(|v| Action::Use(*v)).collect();
                        acts.push(Action::create(id, &[], &[]));
                        (l.merge(&ExecutionLog::single(acts)), id, p)
                    })
                    .collect()
            }
            RKind::Recur { body, next } => {
                let mut out = vec![];
                for (lb, vb, p) in self.eval(body, g) {
                    match p {
                        None => out.push((lb, vb, None)),
                        Some(p) => {
                            for (ln, vn, _) in self.eval(next, &shift(g, p)) {
                                out.push((lb.merge(&ExecutionLog::empty(p + 1).concat(&ln)), vn, None));
                            }
                        }
                    }
                }
                out
            }
        }
    }

    fn dur(&self, m: anvil_core::frontend::resolve::MsgRef) -> LogDuration {
        match self.prog.msg(self.proc, m).duration {
            Dur::Cycles(l) => LogDuration::Cycles(l),
            Dur::Message(i) => LogDuration::Msg(msg_key(anvil_core::frontend::resolve::MsgRef { ep: m.ep, msg: i })),
            Dur::Eternal => LogDuration::Eternal,
        }
    }
}

fn min_opt(a: Option<usize>, b: Option<usize>) -> Option<usize> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, y) => x.or(y),
    }
}

fn reference_logs(p: &ResolvedProgram, term: &RTerm, bound: u32) -> BTreeSet<ExecutionLog> {
    let r = Reference { prog: p, proc: &p.procs[0], bound, ids: number_nodes(term) };
    r.eval(term, &Gamma::new()).into_iter().map(|(l, _, _)| l).collect()
}

fn check_against_reference(p: &ResolvedProgram, iters: usize, bound: u32) {
    let term = check_term(&p.procs[0].threads[0], iters);
    let want = reference_logs(p, &term, bound);
    let got: BTreeSet<ExecutionLog> = enumerate_logs(p, &p.procs[0], &term, bound).into_iter().collect();
    assert_eq!(got, want);
}

#[test]
fn enumeration_matches_reference_on_corpus_threads() {
    for name in ["counter.anvil", "fifo.anvil", "top_unsafe.anvil", "encrypt.anvil"] {
        let c = common::load(name);
        let p = &c.program;
        for (i, proc) in p.procs.iter().enumerate() {
            // Dependent sync modes pin syncs, which the reference does not model.
            if p.procs[i].threads.is_empty() {
                continue;
            }
            let single = ResolvedProgram { channels: p.channels.clone(), procs: vec![proc.clone()] };
            check_against_reference(&single, 1, 1);
        }
    }
}

#[test]
fn recursive_thread_matches_reference() {
    let p = prog(&format!("{CH}proc p(e : right ch) {{ recursive {{ let x = recv e.m >> {{ cycle 1 >> recurse }}; {{ cycle 2 >> dprint \"%d\" (x) }} }} }}"));
    check_against_reference(&p, 2, 1);
    check_against_reference(&p, 3, 0);
}

#[test]
fn enumeration_matches_reference_on_random_programs() {
    let mut checked = 0;
    for seed in 0..60u64 {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let src = common::random_program(&mut rng, 3);
        let p = prog(&src);
        if p.channels.iter().any(|c| {
            c.messages.iter().any(|m| {
                !matches!(
                    m.sync_left,
                    anvil_core::frontend::resolve::Sync::Dynamic | anvil_core::frontend::resolve::Sync::Static(_)
                )
            })
        }) {
            continue;
        }
        check_against_reference(&p, 2, 1);
        checked += 1;
    }
    assert!(checked >= 50);
}

fn arb_action() -> impl Strategy<Value = Action> {
    let dur = prop_oneof![
        (1u32..3).prop_map(LogDuration::Cycles),
        (0u32..2).prop_map(LogDuration::Msg),
        Just(LogDuration::Eternal)
    ];
    prop_oneof![
        (0u32..4, proptest::collection::vec(0u32..2, 0..2), proptest::collection::vec(0u32..4, 0..2))
            .prop_map(|(v, r, vs)| Action::create(v, &r, &vs.into_iter().filter(|u| *u != v).collect::<Vec<_>>())),
        (0u32..4).prop_map(Action::Use),
        (0u32..2).prop_map(Action::Mut),
        (0u32..2, 0u32..4, dur.clone()).prop_map(|(msg, v, dur)| Action::Send { msg, v, dur }),
        (0u32..2, 0u32..4, dur).prop_map(|(msg, v, dur)| Action::Recv { msg, v, dur }),
    ]
}

fn arb_log(max: usize) -> impl Strategy<Value = ExecutionLog> {
    proptest::collection::vec(proptest::collection::btree_set(arb_action(), 0..3), 0..max).prop_map(ExecutionLog::new)
}

/// Safety by exhaustive search for a witnessing interval.
fn brute_safe(l: &ExecutionLog) -> bool {
    value_facts(l).values().all(|f| {
        if f.use_set.is_empty() && f.lt_send.is_empty() {
            return true;
        }
        let top = l.len() + 4;
        (0..top).any(|a| (a..top).any(|b| interval_ok(f, a, b)))
    })
}

proptest! {
    #[test]
    fn concat_length(a in arb_log(5), b in arb_log(5)) {
        prop_assume!(!a.is_empty() && !b.is_empty());
        prop_assert_eq!(a.concat(&b).len(), a.len() + b.len() - 1);
    }

    #[test]
    fn merge_length_and_commutes(a in arb_log(5), b in arb_log(5)) {
        prop_assert_eq!(a.merge(&b).len(), a.len().max(b.len()));
        prop_assert_eq!(a.merge(&b), b.merge(&a));
    }

    #[test]
    fn concat_associates(a in arb_log(4), b in arb_log(4), c in arb_log(4)) {
        prop_assert_eq!(a.concat(&b).concat(&c), a.concat(&b.concat(&c)));
    }

    #[test]
    fn hull_is_sufficient(l in arb_log(6)) {
        prop_assert_eq!(is_safe(&l), brute_safe(&l));
    }

    #[test]
    fn prefixes_of_safe_logs_are_safe(l in arb_log(6)) {
        if is_safe(&l) {
            for n in 0..l.len() {
                prop_assert!(is_safe(&l.prefix(n)));
            }
        }
    }
}

#[test]
fn enumerated_prefixes_stay_safe() {
    let c = common::load("fifo.anvil");
    let p = &c.program;
    for (i, proc) in p.procs.iter().enumerate() {
        for th in &p.procs[i].threads {
            let term = check_term(th, 2);
            for l in enumerate_logs(p, proc, &term, 2) {
                assert!(is_safe(&l));
                for n in 0..l.len() {
                    assert!(is_safe(&l.prefix(n)));
                }
            }
        }
    }
}
