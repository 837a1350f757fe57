use super::fsm::{FsmPlan, Input};
use super::{lower_messages, mangle, plan_process, CodegenError, PortSet, VERSION};
use crate::event_graph::{ActionKind, EventId, EventLabel, ValueExpr, ValueId};
use crate::frontend::ast::UnOp;
use crate::frontend::resolve::{EndpointId, EndpointOrigin, MsgRef, Polarity, ProcId, ResolvedProc, ResolvedProgram};
use crate::optimizer::PassConfig;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

fn decl(width: u32) -> String {
    if width > 1 {
        format!("logic [{}:0]", width - 1)
    } else {
        "logic".to_string()
    }
}

fn sv_string(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c if c.is_ascii_graphic() || c == ' ' => out.push(c),
            _ => out.push('?'),
        }
    }
    out.push('"');
    out
}

fn or_all(xs: &[String]) -> String {
    if xs.is_empty() {
        "1'b0".into()
    } else {
        xs.join(" | ")
    }
}

/// Signal prefix of an endpoint's message wires. Both ends of a local channel share
/// the wires named after its left endpoint.
fn ep_base(proc: &ResolvedProc, ep: EndpointId) -> String {
    let e = &proc.endpoints[ep];
    match e.origin {
        EndpointOrigin::Param(_) => mangle(&e.name),
        EndpointOrigin::Local(c) => mangle(&proc.endpoints[proc.chans[c].left].name),
    }
}

fn port_sets(prog: &ResolvedProgram, proc: &ResolvedProc, ep: EndpointId) -> Vec<PortSet> {
    let e = &proc.endpoints[ep];
    lower_messages(&prog.channels[e.chan], e.side, &proc.endpoints[ep].name)
        .into_iter()
        .map(|mut ps| {
            // Re-root the names on the shared wire prefix.
            let base = format!("{}_{}", ep_base(proc, ep), mangle(&prog.channels[e.chan].messages[ps.msg].name));
            ps.data.name = format!("{base}_data");
            if let Some(v) = ps.valid.as_mut() {
                v.name = format!("{base}_valid");
            }
            if let Some(a) = ps.ack.as_mut() {
                a.name = format!("{base}_ack");
            }
            ps
        })
        .collect()
}

/// Signals a thread drives onto one message's wires.
#[derive(Default)]
struct Drivers {
    /// (pending, value) per send attempt.
    sends: Vec<(String, String)>,
    /// Pending receive attempts.
    recvs: Vec<String>,
}

struct ModuleCtx<'a> {
    prog: &'a ResolvedProgram,
    proc: &'a ResolvedProc,
    drivers: BTreeMap<MsgRef, Drivers>,
    reg_writes: Vec<String>,
    prints: Vec<String>,
    body: String,
}

impl ModuleCtx<'_> {
    fn ports(&self, m: MsgRef) -> PortSet {
        port_sets(self.prog, self.proc, m.ep).swap_remove(m.msg)
    }

    /// The handshake signal this side waits on, if the peer has one.
    fn peer_signal(&self, m: MsgRef) -> Option<String> {
        let ps = self.ports(m);
        match ps.polarity {
            Polarity::Send => ps.ack.map(|p| p.name),
            Polarity::Recv => ps.valid.map(|p| p.name),
        }
    }
}

struct CopyEmitter<'a, 'b> {
    m: &'b mut ModuleCtx<'a>,
    plan: &'b FsmPlan,
    px: String,
    values: BTreeMap<ValueId, String>,
    recv_event: BTreeMap<ValueId, EventId>,
    selects: BTreeSet<u32>,
    decls: Vec<String>,
    assigns: Vec<String>,
    resets: Vec<String>,
    clears: Vec<String>,
    updates: Vec<String>,
}

impl CopyEmitter<'_, '_> {
    fn cur(&self, e: EventId) -> String {
        format!("{}_e{}_cur", self.px, e.0)
    }

    fn reg(&mut self, name: String, width: u32, clear: bool) -> String {
        self.decls.push(format!("{} {name};", decl(width)));
        self.resets.push(format!("{name} <= '0;"));
        if clear {
            self.clears.push(format!("{name} <= '0;"));
        }
        name
    }

    fn wire(&mut self, name: String, width: u32, expr: String) -> String {
        self.decls.push(format!("{} {name};", decl(width)));
        self.assigns.push(format!("assign {name} = {expr};"));
        name
    }

    fn value(&mut self, v: ValueId) -> String {
        if let Some(s) = self.values.get(&v) {
            return s.clone();
        }
        let g = &self.plan.graph;
        let s = match g.values[v as usize].clone() {
            ValueExpr::Lit { width: Some(w), value } => format!("{w}'d{value}"),
            ValueExpr::Lit { width: None, value } if value <= u32::MAX as u128 => format!("{value}"),
            ValueExpr::Lit { width: None, value } => format!("128'd{value}"),
            ValueExpr::Unit => "1'b0".into(),
            ValueExpr::Reg(r) => mangle(&self.m.proc.regs[r].name),
            ValueExpr::RecvData(msg) => {
                let data = self.m.ports(msg).data;
                match self.recv_event.get(&v) {
                    Some(&e) => {
                        let q = self.reg(format!("{}_v{v}_q", self.px), data.width, false);
                        let cur = self.cur(e);
                        self.updates.push(format!("if ({cur}) {q} <= {};", data.name));
                        format!("({cur} ? {} : {q})", data.name)
                    }
                    None => data.name,
                }
            }
            ValueExpr::Ready(msg) => self.m.peer_signal(msg).unwrap_or_else(|| "1'b1".into()),
            ValueExpr::Binary { op, lhs, rhs } => {
                let (l, r) = (self.value(lhs), self.value(rhs));
                format!("({l} {} {r})", op.as_str())
            }
            ValueExpr::Unary { op, operand } => {
                let x = self.value(operand);
                match op {
                    UnOp::Not => format!("(~{x})"),
                    UnOp::LNot => format!("(!{x})"),
                    UnOp::Neg => format!("(-{x})"),
                }
            }
            ValueExpr::Mux { cond, then_, else_ } => {
                let sel = self.select(cond);
                let (t, e) = (self.value(then_), self.value(else_));
                format!("({sel} ? {t} : {e})")
            }
        };
        self.values.insert(v, s.clone());
        s
    }

    /// `|(cond)` evaluated when its branch happens, held afterwards.
    fn select(&mut self, c: u32) -> String {
        let name = format!("{}_c{c}_sel", self.px);
        if !self.selects.insert(c) {
            return name;
        }
        let g = &self.plan.graph;
        let branch_pred = g.ids().find_map(|e| match g.label(e) {
            EventLabel::Branch { cond, pred, .. } if *cond == c => Some(*pred),
            _ => None,
        });
        let q = self.reg(format!("{name}_q"), 1, false);
        let expr = match (branch_pred, g.cond_values.get(&c).copied()) {
            (Some(p), Some(v)) => {
                let cond = self.value(v);
                let cur = self.cur(p);
                self.updates.push(format!("if ({cur}) {q} <= |({cond});"));
                format!("{cur} ? |({cond}) : {q}")
            }
            _ => q.clone(),
        };
        self.wire(name, 1, expr)
    }

    /// Returns the copy's declarations and its logic separately so that every
    /// declaration of the module can precede its first use.
    fn emit(&mut self, restart_from: Option<String>, copy: usize) -> (String, String) {
        let g = &self.plan.graph;
        let px = self.px.clone();
        // Iteration start.
        let start = format!("{px}_start_q");
        self.decls.push(format!("logic {start};"));
        let restart = restart_from.unwrap_or_else(|| "1'b0".into());
        let go = if self.plan.comb_restart {
            self.updates.push(format!("{start} <= 1'b0;"));
            format!("{start} | {restart}")
        } else {
            self.updates.push(format!("{start} <= {restart};"));
            start.clone()
        };
        let go = self.wire(format!("{px}_go"), 1, go);
        for (v, e) in g.ids().flat_map(|e| g.actions(e).iter().map(move |a| (a, e))).filter_map(|(a, e)| match a.kind {
            ActionKind::Recv { value, .. } => Some((value, e)),
            _ => None,
        }) {
            self.recv_event.insert(v, e);
        }
        for e in g.ids() {
            self.decls.push(format!("logic {};", self.cur(e)));
        }
        for e in g.ids() {
            let st = self.plan.states[e.idx()].clone();
            let cur = self.cur(e);
            let name = |s: &str| format!("{px}_e{}_{s}", e.0);
            // Timer for a dependent sync.
            let timer_fire = match g.label(e) {
                EventLabel::MsgSync { pin: Some((p, k)), .. } if st.timer_bits > 0 => {
                    let t = self.reg(name("tmr"), st.timer_bits, true);
                    let w = st.timer_bits;
                    let pc = self.cur(*p);
                    self.updates.push(format!(
                        "if ({pc}) {t} <= {w}'d1; else if ({t} == {w}'d{k}) {t} <= '0; else if ({t} != '0) {t} <= {t} + {w}'d1;"
                    ));
                    Some(format!("({t} == {w}'d{k})"))
                }
                _ => None,
            };
            let ins: Vec<String> = st
                .inputs
                .iter()
                .map(|i| match i {
                    Input::Event(p) => self.cur(*p),
                    Input::Timer => timer_fire.clone().unwrap_or_else(|| "1'b0".into()),
                })
                .collect();
            let arrive = if st.seen_bits() > 0 {
                let mut terms = Vec::new();
                let arrive = name("arrive");
                for (i, x) in ins.iter().enumerate() {
                    let s = self.reg(name(&format!("seen{i}")), 1, true);
                    self.updates.push(format!("if ({arrive}) {s} <= 1'b0; else if ({x}) {s} <= 1'b1;"));
                    terms.push(format!("({x} | {s})"));
                }
                self.wire(arrive, 1, terms.join(" & "))
            } else {
                ins.first().cloned().unwrap_or_else(|| "1'b0".into())
            };
            let expr = match g.label(e) {
                EventLabel::Root => go.clone(),
                EventLabel::Delay { k: 0, .. } => arrive,
                EventLabel::Delay { k, .. } => {
                    let w = st.counter_bits;
                    let c = self.reg(name("cnt"), w, true);
                    self.updates.push(format!(
                        "if ({arrive}) {c} <= {w}'d1; else if ({c} == {w}'d{k}) {c} <= '0; else if ({c} != '0) {c} <= {c} + {w}'d1;"
                    ));
                    format!("({c} == {w}'d{k})")
                }
                EventLabel::Join { preds } => or_all(&preds.iter().map(|p| self.cur(*p)).collect::<Vec<_>>()),
                EventLabel::Branch { cond, side, pred } => {
                    let sel = match g.cond_values.get(cond) {
                        Some(v) => format!("(|({}))", self.value(*v)),
                        None => "1'b0".into(),
                    };
                    let pc = self.cur(*pred);
                    if *side {
                        format!("{pc} & {sel}")
                    } else {
                        format!("{pc} & !{sel}")
                    }
                }
                EventLabel::MsgSync { msg, .. } => {
                    let pend = if st.wait {
                        let w = self.reg(name("wait"), 1, true);
                        self.updates.push(format!("if ({cur}) {w} <= 1'b0; else if ({arrive}) {w} <= 1'b1;"));
                        self.wire(name("pend"), 1, format!("{arrive} | {w}"))
                    } else {
                        self.wire(name("pend"), 1, arrive)
                    };
                    for a in g.actions(e) {
                        match &a.kind {
                            ActionKind::Send { value, .. } => {
                                let v = self.value(*value);
                                self.m.drivers.entry(*msg).or_default().sends.push((pend.clone(), v));
                            }
                            ActionKind::Recv { .. } => self.m.drivers.entry(*msg).or_default().recvs.push(pend.clone()),
                            _ => {}
                        }
                    }
                    match self.m.peer_signal(*msg) {
                        Some(s) if st.wait => format!("{pend} & {s}"),
                        _ => pend,
                    }
                }
            };
            self.assigns.push(format!("assign {cur} = {expr};"));
            for a in g.actions(e) {
                match &a.kind {
                    ActionKind::SetReg { reg, value } => {
                        let v = self.value(*value);
                        let r = mangle(&self.m.proc.regs[*reg].name);
                        self.m.reg_writes.push(format!("if ({cur}) {r} <= {v};"));
                    }
                    ActionKind::Print { fmt, args } => {
                        let mut parts = vec![sv_string(fmt)];
                        parts.extend(args.iter().map(|v| self.value(*v)));
                        self.m.prints.push(format!("if ({cur}) $display({});", parts.join(", ")));
                    }
                    _ => {}
                }
            }
        }
        let mut decls = String::new();
        let _ = writeln!(decls, "  // thread {} copy {}", self.plan.thread, copy);
        for d in &self.decls {
            let _ = writeln!(decls, "  {d}");
        }
        let mut out = String::new();
        let _ = writeln!(out, "  // thread {} copy {}", self.plan.thread, copy);
        for a in &self.assigns {
            let _ = writeln!(out, "  {a}");
        }
        let _ = writeln!(out, "  always_ff @(posedge clk_i) begin");
        let _ = writeln!(out, "    if (!rst_ni) begin");
        let _ = writeln!(out, "      {start} <= 1'b{};", (copy == 0) as u8);
        for r in &self.resets {
            let _ = writeln!(out, "      {r}");
        }
        let _ = writeln!(out, "    end else begin");
        if !self.clears.is_empty() {
            let _ = writeln!(out, "      if ({go}) begin");
            for c in &self.clears {
                let _ = writeln!(out, "        {c}");
            }
            let _ = writeln!(out, "      end");
        }
        for u in &self.updates {
            let _ = writeln!(out, "      {u}");
        }
        let _ = writeln!(out, "    end");
        let _ = writeln!(out, "  end");
        (decls, out)
    }
}

/// Emits one module for process `proc` from its thread plans.
pub fn emit_sv(prog: &ResolvedProgram, proc: ProcId, plans: &[FsmPlan]) -> String {
    let p = &prog.procs[proc];
    let mut m =
        ModuleCtx { prog, proc: p, drivers: BTreeMap::new(), reg_writes: vec![], prints: vec![], body: String::new() };
    let mut out = String::new();
    let _ = writeln!(out, "// Generated by anvil {VERSION} from process `{}`.", p.name);
    let _ = writeln!(out, "module {} (", mangle(&p.name));
    let mut ports = vec!["input logic clk_i".to_string(), "input logic rst_ni".to_string()];
    for &ep in &p.params {
        for ps in port_sets(prog, p, ep) {
            for port in ps.ports() {
                ports.push(format!("{} {} {}", port.dir.keyword(), decl(port.width), port.name));
            }
        }
    }
    let _ = writeln!(out, "  {}", ports.join(",\n  "));
    let _ = writeln!(out, ");");
    for r in &p.regs {
        let _ = writeln!(out, "  {} {};", decl(r.width.max(1)), mangle(&r.name));
    }
    for c in &p.chans {
        let chan = &prog.channels[c.chan];
        let _ =
            writeln!(out, "  // chan {} -- {} : {}", p.endpoints[c.left].name, p.endpoints[c.right].name, chan.name);
        for ps in port_sets(prog, p, c.left) {
            for port in ps.ports() {
                let _ = writeln!(out, "  {} {};", decl(port.width), port.name);
            }
        }
    }
    // Endpoints handed to spawned processes are driven by the child instance.
    let mut to_child = vec![false; p.endpoints.len()];
    for (i, s) in p.spawns.iter().enumerate() {
        let child = &prog.procs[s.proc];
        let mut conns = vec![".clk_i(clk_i)".to_string(), ".rst_ni(rst_ni)".to_string()];
        for (&arg, &param) in s.args.iter().zip(&child.params) {
            to_child[arg] = true;
            for (cp, pp) in port_sets(prog, child, param).iter().zip(port_sets(prog, p, arg)) {
                for (a, b) in cp.ports().iter().zip(pp.ports()) {
                    conns.push(format!(".{}({})", a.name, b.name));
                }
            }
        }
        let _ = writeln!(
            out,
            "  {} u{i}_{} (\n    {}\n  );",
            mangle(&child.name),
            mangle(&child.name),
            conns.join(",\n    ")
        );
    }
    for plan in plans {
        let restart_sources: Vec<Vec<String>> = (0..plan.copies)
            .map(|c| {
                let px = format!("_t{}c{c}", plan.thread);
                let evs = match plan.kind {
                    crate::frontend::ast::ThreadKind::Loop => vec![plan.done],
                    crate::frontend::ast::ThreadKind::Recursive => plan.restarts.clone(),
                };
                evs.iter().map(|e| format!("{px}_e{}_cur", e.0)).collect()
            })
            .collect();
        for c in 0..plan.copies {
            let from = match plan.kind {
                crate::frontend::ast::ThreadKind::Loop => &restart_sources[c],
                crate::frontend::ast::ThreadKind::Recursive => &restart_sources[(c + 1) % plan.copies],
            };
            let from = (!from.is_empty()).then(|| or_all(from));
            let mut ce = CopyEmitter {
                m: &mut m,
                plan,
                px: format!("_t{}c{c}", plan.thread),
                values: BTreeMap::new(),
                recv_event: BTreeMap::new(),
                selects: BTreeSet::new(),
                decls: vec![],
                assigns: vec![],
                resets: vec![],
                clears: vec![],
                updates: vec![],
            };
            let (d, text) = ce.emit(from, c);
            out.push_str(&d);
            m.body.push_str(&text);
        }
    }
    out.push_str(&m.body);
    if !p.regs.is_empty() {
        let _ = writeln!(out, "  always_ff @(posedge clk_i) begin");
        let _ = writeln!(out, "    if (!rst_ni) begin");
        for r in &p.regs {
            let _ = writeln!(out, "      {} <= '0;", mangle(&r.name));
        }
        let _ = writeln!(out, "    end else begin");
        for w in &m.reg_writes {
            let _ = writeln!(out, "      {w}");
        }
        let _ = writeln!(out, "    end");
        let _ = writeln!(out, "  end");
    }
    // Message outputs this module drives itself.
    for (ep, _) in to_child.iter().enumerate().filter(|(_, c)| !**c) {
        for ps in port_sets(prog, p, ep) {
            let d = m.drivers.get(&MsgRef { ep, msg: ps.msg });
            match ps.polarity {
                Polarity::Send => {
                    let sends = d.map(|d| d.sends.as_slice()).unwrap_or(&[]);
                    let mut data = "'0".to_string();
                    for (pend, v) in sends.iter().rev() {
                        data = format!("{pend} ? {v} : {data}");
                    }
                    let _ = writeln!(out, "  assign {} = {data};", ps.data.name);
                    if let Some(v) = &ps.valid {
                        let pends: Vec<String> = sends.iter().map(|(p, _)| p.clone()).collect();
                        let _ = writeln!(out, "  assign {} = {};", v.name, or_all(&pends));
                    }
                }
                Polarity::Recv => {
                    if let Some(a) = &ps.ack {
                        let recvs = d.map(|d| d.recvs.as_slice()).unwrap_or(&[]);
                        let _ = writeln!(out, "  assign {} = {};", a.name, or_all(recvs));
                    }
                }
            }
        }
    }
    if !m.prints.is_empty() {
        let _ = writeln!(out, "`ifndef SYNTHESIS");
        let _ = writeln!(out, "  always_ff @(posedge clk_i) begin");
        let _ = writeln!(out, "    if (rst_ni) begin");
        for pr in &m.prints {
            let _ = writeln!(out, "      {pr}");
        }
        let _ = writeln!(out, "    end");
        let _ = writeln!(out, "  end");
        let _ = writeln!(out, "`endif");
    }
    let _ = writeln!(out, "endmodule");
    out
}

fn collect(
    prog: &ResolvedProgram,
    p: ProcId,
    stack: &mut Vec<ProcId>,
    out: &mut Vec<ProcId>,
) -> Result<(), CodegenError> {
    if out.contains(&p) {
        return Ok(());
    }
    if stack.contains(&p) {
        return Err(CodegenError::RecursiveSpawn(prog.procs[p].name.clone()));
    }
    stack.push(p);
    for s in &prog.procs[p].spawns {
        collect(prog, s.proc, stack, out)?;
    }
    stack.pop();
    out.push(p);
    Ok(())
}

/// Emits `top` and every process it instantiates (children first), or every process
/// in source order when no top is given.
pub fn emit_program(prog: &ResolvedProgram, top: Option<&str>, cfg: PassConfig) -> Result<String, CodegenError> {
    let procs: Vec<ProcId> = match top {
        Some(name) => {
            let t = prog.proc_by_name(name).ok_or_else(|| CodegenError::UnknownTop(name.to_string()))?;
            let mut out = Vec::new();
            collect(prog, t, &mut vec![], &mut out)?;
            out
        }
        None => {
            for i in 0..prog.procs.len() {
                collect(prog, i, &mut vec![], &mut vec![])?;
            }
            (0..prog.procs.len()).collect()
        }
    };
    let mut out = String::new();
    for (i, p) in procs.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let plans = plan_process(prog, *p, cfg)?;
        out.push_str(&emit_sv(prog, *p, &plans));
    }
    Ok(out)
}
