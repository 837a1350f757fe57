mod common;

use anvil_core::driver::compile_source;
use anvil_core::event_graph::{dump_dot, ActionKind, EventGraph, EventId, EventLabel};
use anvil_core::frontend::desugar::check_term;
use anvil_core::optimizer::{optimize, PassConfig};
use anvil_core::timing::Timing;
use anvil_core::typecheck::{check_thread, CheckOptions};
use std::collections::BTreeMap;

fn graphs() -> Vec<(String, EventGraph, usize)> {
    let mut out = vec![];
    for (name, _) in common::corpus() {
        let c = common::load(&name);
        for (i, p) in c.program.procs.iter().enumerate() {
            for (t, th) in p.threads.iter().enumerate() {
                let size = check_term(th, 2).size();
                out.push((
                    format!("{name}:{}#{t}", p.name),
                    check_thread(&c.program, i, t, CheckOptions::default()).graph,
                    size,
                ));
            }
        }
    }
    out
}

#[test]
fn corpus_graphs_are_well_formed() {
    for (what, g, size) in graphs() {
        g.validate().unwrap_or_else(|e| panic!("{what}: {e}"));
        assert!(g.len() <= 3 * size + 1, "{what}: {} events for {size} nodes", g.len());
        // Predecessors come first, so id order is a topological order.
        for e in g.ids() {
            assert!(g.label(e).preds().iter().all(|p| *p < e), "{what}: {e}");
        }
        let mut pairs: BTreeMap<u32, Vec<(bool, EventId)>> = BTreeMap::new();
        for e in g.ids() {
            if let EventLabel::Branch { cond, side, pred } = g.label(e) {
                pairs.entry(*cond).or_default().push((*side, *pred));
            }
        }
        for (c, v) in pairs {
            assert_eq!(v.len(), 2, "{what}: condition {c}");
            assert!(v[0].0 != v[1].0 && v[0].1 == v[1].1, "{what}: condition {c}");
        }
    }
}

#[test]
fn delay_chain() {
    let c = compile_source("t.anvil", "proc p() { loop { cycle 2 >> cycle 3 } }").unwrap();
    let g = check_thread(&c.program, 0, 0, CheckOptions { iters: 1 }).graph;
    assert_eq!(g.len(), 3);
    assert!(matches!(g.label(EventId(1)), EventLabel::Delay { k: 2, preds } if preds == &vec![EventId(0)]));
    assert!(matches!(g.label(EventId(2)), EventLabel::Delay { k: 3, preds } if preds == &vec![EventId(1)]));
}

#[test]
fn encrypt_graph_shape() {
    let c = common::load("encrypt.anvil");
    let mut g = check_thread(&c.program, 0, 0, CheckOptions { iters: 1 }).graph;
    optimize(&mut g, PassConfig::all()).unwrap();
    assert!(g.len() >= 11, "{}", g.len());
    let syncs: Vec<(EventId, String, EventId)> = g
        .ids()
        .filter_map(|e| match g.label(e) {
            EventLabel::MsgSync { msg, pred, .. } => Some((e, g.msg_name(*msg), *pred)),
            _ => None,
        })
        .collect();
    let names: Vec<&str> = syncs.iter().map(|s| s.1.as_str()).collect();
    assert_eq!(names, ["ch1.enc_req", "ch2.rng_req", "ch2.rng_res", "ch1.enc_res", "ch1.enc_res"]);
    assert_eq!(syncs[0].2, g.entry);
    assert_eq!(syncs[1].2, g.entry);
    assert_eq!(syncs[3].2, syncs[2].0);
    assert_eq!(syncs[4].2, syncs[3].0);
    let branches = g.ids().filter(|e| matches!(g.label(*e), EventLabel::Branch { .. })).count();
    assert_eq!(branches, 2);
}

#[test]
fn top_safe_updates_coincide() {
    let c = common::load("top_safe.anvil");
    let g = check_thread(&c.program, 0, 0, CheckOptions { iters: 1 }).graph;
    let t = Timing::new(&g);
    let at = |reg: usize| {
        g.ids()
            .find(|e| g.actions(*e).iter().any(|a| matches!(a.kind, ActionKind::SetReg { reg: r, .. } if r == reg)))
            .unwrap()
    };
    let (addr, data) = (at(0), at(1));
    assert!(t.le_events(addr, data).proved() && t.le_events(data, addr).proved());
    let send = g
        .ids()
        .find(|e| matches!(g.label(*e), EventLabel::MsgSync { msg, .. } if g.msg_name(*msg) == "fifo.enq_req"))
        .unwrap();
    // The send may start one cycle after both updates, when they complete.
    let EventLabel::MsgSync { pred, .. } = g.label(send) else { unreachable!() };
    for r in [addr, data] {
        assert!(t.lt_events(r, *pred).proved());
        let one = anvil_core::timing::PatternSet::single(anvil_core::timing::Pattern::cycles(r, 1));
        let p = anvil_core::timing::PatternSet::single(anvil_core::timing::Pattern::at(*pred));
        assert!(t.le(&one, &p).proved() && t.le(&p, &one).proved());
    }
}

#[test]
fn dot_output() {
    let g = EventGraph::new();
    let d = dump_dot(&g, "root");
    assert_eq!(d.matches("[label=").count(), 1);
    assert_eq!(d.matches(" -> ").count(), 0);

    let mut g = EventGraph::new();
    g.delay(3, vec![g.entry]);
    g.delay(3, vec![g.entry]);
    let d = dump_dot(&g, "fanout");
    assert_eq!(d.matches("e0 -> ").count(), 2);
    assert_eq!(d.matches("[label=\"#3\"]").count(), 2);

    let c = common::load("encrypt.anvil");
    let g = check_thread(&c.program, 0, 0, CheckOptions::default()).graph;
    assert_eq!(dump_dot(&g, "Encrypt"), dump_dot(&g.clone(), "Encrypt"));
    assert_eq!(dump_dot(&g, "Encrypt").matches(": ").count(), g.len());
}

#[test]
fn json_form() {
    let c = common::load("mem.anvil");
    let g = check_thread(&c.program, 0, 0, CheckOptions::default()).graph;
    let j = g.to_json();
    assert_eq!(j["schema"], "anvil-event-graph/1");
    assert_eq!(j["events"].as_array().unwrap().len(), g.len());
    assert_eq!(j["events"][0]["kind"], "root");
    let kinds: Vec<&str> = j["events"].as_array().unwrap().iter().map(|e| e["kind"].as_str().unwrap()).collect();
    assert!(kinds.contains(&"sync"));
}
