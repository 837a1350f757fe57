//! Shared generators and helpers for integration tests.
#![allow(dead_code)]

use anvil_core::driver::{compile_source, Compilation};
use anvil_core::event_graph::{ActionKind, EventGraph, EventId, EventLabel, ValueExpr};
use anvil_core::frontend::resolve::MsgRef;
use anvil_core::timing::oracle::for_each_timestamp;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;
use std::path::PathBuf;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// Every corpus file as `(file name, text)`, sorted by name.
pub fn corpus() -> Vec<(String, String)> {
    let mut v: Vec<(String, String)> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "anvil"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap()))
        .collect();
    v.sort();
    v
}

pub fn load(name: &str) -> Compilation {
    let text = std::fs::read_to_string(corpus_dir().join(name)).unwrap();
    compile_source(name, &text).unwrap_or_else(|f| panic!("{}", f.render()))
}

/// A random well-formed event graph of at most `max` events.
pub fn random_graph(rng: &mut StdRng, max: usize) -> EventGraph {
    let mut g = EventGraph::new();
    let n = rng.gen_range(2..=max);
    let msgs: Vec<MsgRef> = (0..3).map(|m| MsgRef { ep: 0, msg: m }).collect();
    let mut syncs: Vec<EventId> = vec![];
    while g.len() < n {
        let ids: Vec<EventId> = g.ids().collect();
        let pick = |rng: &mut StdRng| *ids.choose(rng).unwrap();
        match rng.gen_range(0..6) {
            0 | 1 => {
                let k = rng.gen_range(0..3);
                let mut preds = vec![pick(rng)];
                if rng.gen_bool(0.4) {
                    preds.push(pick(rng));
                }
                g.delay(k, preds);
            }
            2 => {
                let s = g.msg_sync(*msgs.choose(rng).unwrap(), pick(rng));
                syncs.push(s);
            }
            3 if !syncs.is_empty() => {
                let pin = *syncs.choose(rng).unwrap();
                let s = g.pinned_sync(*msgs.choose(rng).unwrap(), pick(rng), pin, rng.gen_range(0..3));
                syncs.push(s);
            }
            4 if g.len() + 2 <= n => {
                let (_, t, f) = g.branch(pick(rng));
                if g.len() < n && rng.gen_bool(0.5) {
                    g.join(vec![t, f]);
                }
            }
            5 if ids.len() >= 2 => {
                let a = pick(rng);
                let b = pick(rng);
                g.join(vec![a, b]);
            }
            _ => {
                g.delay(1, vec![pick(rng)]);
            }
        }
    }
    g.validate().expect("generator builds valid graphs");
    g
}

/// Sorted timestamp vectors of the given action ids, one per timestamp function.
pub fn action_times(g: &EventGraph, actions: &[u32], bound: u64) -> Vec<Vec<Option<u64>>> {
    let at: Vec<EventId> = actions
        .iter()
        .map(|a| g.ids().find(|e| g.actions(*e).iter().any(|x| x.id == *a)).expect("action survives"))
        .collect();
    let mut out = vec![];
    for_each_timestamp(g, bound, None, &mut |ts| {
        out.push(at.iter().map(|e| ts[e.idx()]).collect());
        true
    });
    out.sort();
    out
}

pub fn action_ids(g: &EventGraph) -> Vec<u32> {
    let mut v: Vec<u32> = g.ids().flat_map(|e| g.actions(e).iter().map(|a| a.id)).collect();
    v.sort();
    v
}

/// Events carrying no label other than the ones listed.
pub fn count_labels(g: &EventGraph, f: impl Fn(&EventLabel) -> bool) -> usize {
    g.ids().filter(|e| f(g.label(*e))).count()
}

struct ProgGen<'r> {
    rng: &'r mut StdRng,
    regs: usize,
    /// `(endpoint.message, we send it)`
    msgs: Vec<(String, bool)>,
    vars: Vec<String>,
    next_var: usize,
}

impl ProgGen<'_> {
    fn lit(&mut self) -> String {
        format!("8'd{}", self.rng.gen_range(0..16))
    }

    fn reg(&mut self) -> String {
        format!("r{}", self.rng.gen_range(0..self.regs))
    }

    fn recv_msg(&mut self) -> Option<String> {
        let r: Vec<&String> = self.msgs.iter().filter(|m| !m.1).map(|m| &m.0).collect();
        r.choose(self.rng).map(|s| s.to_string())
    }

    fn send_msg(&mut self) -> Option<String> {
        let s: Vec<&String> = self.msgs.iter().filter(|m| m.1).map(|m| &m.0).collect();
        s.choose(self.rng).map(|s| s.to_string())
    }

    /// An expression producing a value.
    fn expr(&mut self, depth: u32) -> String {
        let leaf = depth == 0 || self.rng.gen_bool(0.4);
        if leaf {
            return match self.rng.gen_range(0..5) {
                0 | 1 if !self.vars.is_empty() => self.vars.choose(self.rng).unwrap().clone(),
                2 => format!("*{}", self.reg()),
                3 => match self.recv_msg() {
                    Some(m) => format!("(recv {m})"),
                    None => self.lit(),
                },
                _ => self.lit(),
            };
        }
        match self.rng.gen_range(0..4) {
            0 => format!("({} + {})", self.expr(depth - 1), self.expr(depth - 1)),
            1 => format!("({} ^ {})", self.expr(depth - 1), self.expr(depth - 1)),
            2 => format!("(~{})", self.expr(depth - 1)),
            _ => format!("(cycle {} >> {})", self.rng.gen_range(1..3), self.expr(depth - 1)),
        }
    }

    /// A term, usually run for its effect.
    fn term(&mut self, depth: u32) -> String {
        if depth == 0 {
            return match self.rng.gen_range(0..4) {
                0 => format!("cycle {}", self.rng.gen_range(1..3)),
                1 => {
                    let (r, e) = (self.reg(), self.expr(0));
                    format!("set {r} := {e}")
                }
                2 => match self.send_msg() {
                    Some(m) => format!("send {m}({})", self.expr(0)),
                    None => "cycle 1".into(),
                },
                _ => self.expr(0),
            };
        }
        let d = depth - 1;
        match self.rng.gen_range(0..9) {
            0 | 1 => format!("{{ {} >> {} }}", self.term(d), self.term(d)),
            2 => format!("{{ {}; {} }}", self.term(d), self.term(d)),
            3 | 4 => {
                let v = self.expr(d.min(2));
                let x = format!("x{}", self.next_var);
                self.next_var += 1;
                self.vars.push(x.clone());
                let body = self.term(d);
                self.vars.pop();
                format!("{{ let {x} = {v} >> {body} }}")
            }
            5 => format!("if {} {{ {} }} else {{ {} }}", self.expr(d.min(1)), self.term(d), self.term(d)),
            6 => {
                let (r, e) = (self.reg(), self.expr(d.min(2)));
                format!("set {r} := {e}")
            }
            7 => match self.send_msg() {
                Some(m) => format!("send {m}({})", self.expr(d.min(2))),
                None => self.term(d),
            },
            _ => format!("dprint \"v %d\" ({})", self.expr(d.min(1))),
        }
    }
}

fn duration(rng: &mut StdRng, other: &str) -> String {
    match rng.gen_range(0..5) {
        0 | 1 => "@#1".into(),
        2 => "@#2".into(),
        3 => format!("@{other}"),
        _ => String::new(),
    }
}

/// A random program with one process of one thread: at most three registers, two
/// channels, and terms nested at most `depth` deep.
pub fn random_program(rng: &mut StdRng, depth: u32) -> String {
    let nchan = rng.gen_range(1..=2);
    let mut src = String::new();
    let mut params = vec![];
    let mut msgs = vec![];
    for c in 0..nchan {
        let (a, b) = (format!("a{c}"), format!("b{c}"));
        let da = if rng.gen_bool(0.5) { "left" } else { "right" };
        let db = if rng.gen_bool(0.5) { "left" } else { "right" };
        let (du_a, du_b) = (duration(rng, &b), duration(rng, &a));
        let sync = if rng.gen_bool(0.2) { " @#2-@dyn" } else { "" };
        src.push_str(&format!("chan c{c} {{ {da} {a} : (logic[8]{du_a}){sync}, {db} {b} : (logic[8]{du_b}) }}\n"));
        let side = if rng.gen_bool(0.5) { "left" } else { "right" };
        params.push(format!("p{c} : {side} c{c}"));
        for (m, dir) in [(&a, da), (&b, db)] {
            // A left endpoint sends messages travelling right.
            let sends = (side == "left") == (dir == "right");
            msgs.push((format!("p{c}.{m}"), sends));
        }
    }
    let regs = rng.gen_range(1..=3);
    let mut g = ProgGen { rng, regs, msgs, vars: vec![], next_var: 0 };
    let body = g.term(depth);
    src.push_str(&format!("proc P({}) {{\n", params.join(", ")));
    for r in 0..regs {
        src.push_str(&format!("  reg r{r} : logic[8];\n"));
    }
    src.push_str(&format!("  loop {{ {body} }}\n}}\n"));
    src
}

/// Attaches a register write to roughly a third of the events of `g`, and to at
/// least one event.
pub fn sprinkle_actions(rng: &mut StdRng, g: &mut EventGraph) {
    let ids: Vec<EventId> = g.ids().collect();
    let mut any = false;
    for (i, e) in ids.iter().enumerate() {
        if rng.gen_bool(0.35) || (!any && i + 1 == ids.len()) {
            let v = g.add_value(ValueExpr::Unit);
            g.attach(*e, ActionKind::SetReg { reg: i, value: v });
            any = true;
        }
    }
}
