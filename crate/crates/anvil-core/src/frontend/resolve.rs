//! Name resolution: binds endpoints, messages, registers and let-variables to indices.

use super::ast::{self, BinOp, Direction, Side, ThreadKind, UnOp};
use super::span::Span;
use serde::Serialize;
use std::collections::HashMap;

pub type ChanId = usize;
pub type ProcId = usize;
pub type EndpointId = usize;
pub type RegId = usize;
pub type VarId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Polarity {
    Send,
    Recv,
}

/// Whether an endpoint on `side` sends or receives a message travelling in `direction`.
pub fn polarity(side: Side, direction: Direction) -> Polarity {
    if (side == Side::Left) == (direction == Direction::Right) {
        Polarity::Send
    } else {
        Polarity::Recv
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Dur {
    Cycles(u32),
    /// Index of another message of the same channel.
    Message(usize),
    Eternal,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Sync {
    Dynamic,
    Static(u32),
    Dependent { msg: usize, offset: u32 },
}

impl Sync {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Sync::Dynamic => "dynamic",
            Sync::Static(_) => "static",
            Sync::Dependent { .. } => "dependent",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MsgInfo {
    pub name: String,
    pub direction: Direction,
    pub width: u32,
    pub duration: Dur,
    pub sync_left: Sync,
    pub sync_right: Sync,
    pub span: Span,
}

impl MsgInfo {
    pub fn sync_of(&self, side: Side) -> &Sync {
        match side {
            Side::Left => &self.sync_left,
            Side::Right => &self.sync_right,
        }
    }

    /// The endpoint side that sends this message.
    pub fn sender_side(&self) -> Side {
        match self.direction {
            Direction::Right => Side::Left,
            Direction::Left => Side::Right,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChannelInfo {
    pub name: String,
    pub messages: Vec<MsgInfo>,
    pub span: Span,
}

impl ChannelInfo {
    pub fn message_index(&self, name: &str) -> Option<usize> {
        self.messages.iter().position(|m| m.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EndpointOrigin {
    Param(usize),
    Local(usize),
}

#[derive(Debug, Clone, Serialize)]
pub struct Endpoint {
    pub name: String,
    pub chan: ChanId,
    pub side: Side,
    pub origin: EndpointOrigin,
    pub span: Span,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegInfo {
    pub name: String,
    pub width: u32,
    pub span: Span,
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalChan {
    pub left: EndpointId,
    pub right: EndpointId,
    pub chan: ChanId,
    pub span: Span,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedSpawn {
    pub proc: ProcId,
    pub args: Vec<EndpointId>,
    pub span: Span,
}

/// A message reference `ep.m` with its polarity at the using endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct MsgRef {
    pub ep: EndpointId,
    pub msg: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RTerm {
    pub kind: RKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum RKind {
    Lit {
        width: Option<u32>,
        value: u128,
    },
    Unit,
    Cycle(u32),
    Var(VarId),
    RegRead(RegId),
    Wait(Box<RTerm>, Box<RTerm>),
    Join(Box<RTerm>, Box<RTerm>),
    Let {
        var: VarId,
        value: Box<RTerm>,
        body: Box<RTerm>,
    },
    If {
        cond: Box<RTerm>,
        then_: Box<RTerm>,
        else_: Box<RTerm>,
    },
    Send {
        msg: MsgRef,
        value: Box<RTerm>,
    },
    Recv {
        msg: MsgRef,
    },
    Set {
        reg: RegId,
        value: Box<RTerm>,
    },
    Ready {
        msg: MsgRef,
    },
    Binary {
        op: BinOp,
        lhs: Box<RTerm>,
        rhs: Box<RTerm>,
    },
    Unary {
        op: UnOp,
        operand: Box<RTerm>,
    },
    Recurse,
    Dprint {
        fmt: String,
        args: Vec<RTerm>,
    },
    /// Unrolled recursive iteration: `next` starts where `body` reaches `recurse`.
    Recur {
        body: Box<RTerm>,
        next: Box<RTerm>,
    },
}

impl RTerm {
    pub fn new(kind: RKind, span: Span) -> RTerm {
        RTerm { kind, span }
    }

    pub fn children(&self) -> Vec<&RTerm> {
        use RKind::*;
        match &self.kind {
            Lit { .. } | Unit | Cycle(_) | Var(_) | RegRead(_) | Recv { .. } | Ready { .. } | Recurse => vec![],
            Wait(a, b) | Join(a, b) => vec![a, b],
            Let { value, body, .. } => vec![value, body],
            If { cond, then_, else_ } => vec![cond, then_, else_],
            Send { value, .. } | Set { value, .. } => vec![value],
            Binary { lhs, rhs, .. } => vec![lhs, rhs],
            Unary { operand, .. } => vec![operand],
            Dprint { args, .. } => args.iter().collect(),
            Recur { body, next } => vec![body, next],
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn contains_recurse(&self) -> bool {
        matches!(self.kind, RKind::Recurse) || self.children().iter().any(|c| c.contains_recurse())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedThread {
    pub kind: ThreadKind,
    pub body: RTerm,
    /// Names of let-bound variables, indexed by `VarId`.
    pub vars: Vec<String>,
    pub span: Span,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedProc {
    pub name: String,
    pub span: Span,
    pub name_span: Span,
    pub endpoints: Vec<Endpoint>,
    pub params: Vec<EndpointId>,
    pub regs: Vec<RegInfo>,
    pub chans: Vec<LocalChan>,
    pub spawns: Vec<ResolvedSpawn>,
    pub threads: Vec<ResolvedThread>,
}

impl ResolvedProc {
    pub fn endpoint_by_name(&self, name: &str) -> Option<EndpointId> {
        self.endpoints.iter().position(|e| e.name == name)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedProgram {
    pub channels: Vec<ChannelInfo>,
    pub procs: Vec<ResolvedProc>,
}

impl ResolvedProgram {
    pub fn proc_by_name(&self, name: &str) -> Option<ProcId> {
        self.procs.iter().position(|p| p.name == name)
    }

    pub fn msg(&self, proc: &ResolvedProc, m: MsgRef) -> &MsgInfo {
        &self.channels[proc.endpoints[m.ep].chan].messages[m.msg]
    }

    pub fn polarity(&self, proc: &ResolvedProc, m: MsgRef) -> Polarity {
        polarity(proc.endpoints[m.ep].side, self.msg(proc, m).direction)
    }

    pub fn msg_name(&self, proc: &ResolvedProc, m: MsgRef) -> String {
        format!("{}.{}", proc.endpoints[m.ep].name, self.msg(proc, m).name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize)]
#[error("{message}")]
pub struct ResolveError {
    pub message: String,
    pub span: Span,
}

fn rerr(span: Span, message: impl Into<String>) -> ResolveError {
    ResolveError { message: message.into(), span }
}

struct Structs<'a> {
    defs: HashMap<&'a str, &'a ast::StructDef>,
}

impl<'a> Structs<'a> {
    fn width(&self, t: &ast::DataType, depth: usize, errs: &mut Vec<ResolveError>) -> u32 {
        match t {
            ast::DataType::Logic { width, .. } => *width,
            ast::DataType::Named(id) => match self.defs.get(id.name.as_str()) {
                Some(_) if depth > 32 => {
                    errs.push(rerr(id.span, format!("recursive struct `{}`", id.name)));
                    1
                }
                Some(s) => {
                    let w: u32 = s.fields.iter().map(|(_, ft)| self.width(ft, depth + 1, errs)).sum();
                    w.max(1)
                }
                None => {
                    errs.push(rerr(id.span, format!("unknown data type `{}`", id.name)));
                    1
                }
            },
        }
    }
}

fn convert_sync(s: &ast::SyncMode, msgs: &[ast::MessageDef], errs: &mut Vec<ResolveError>) -> Sync {
    match s {
        ast::SyncMode::Dynamic => Sync::Dynamic,
        ast::SyncMode::Static(n) => Sync::Static(*n),
        ast::SyncMode::Dependent { msg, offset } => match msgs.iter().position(|m| m.ident.name == msg.name) {
            Some(i) => Sync::Dependent { msg: i, offset: *offset },
            None => {
                errs.push(rerr(msg.span, format!("unknown message `{}` in sync mode", msg.name)));
                Sync::Dynamic
            }
        },
    }
}

/// Resolves a parsed program. All errors are collected.
pub fn resolve(prog: &ast::Program) -> Result<ResolvedProgram, Vec<ResolveError>> {
    let mut errs = Vec::new();
    let mut structs = Structs { defs: HashMap::new() };
    for s in prog.structs() {
        if structs.defs.insert(&s.name.name, s).is_some() {
            errs.push(rerr(s.name.span, format!("duplicate struct `{}`", s.name.name)));
        }
    }
    let mut channels = Vec::new();
    let mut chan_ids: HashMap<&str, ChanId> = HashMap::new();
    for c in prog.chans() {
        if chan_ids.insert(&c.name.name, channels.len()).is_some() {
            errs.push(rerr(c.name.span, format!("duplicate channel type `{}`", c.name.name)));
        }
        let mut messages: Vec<MsgInfo> = Vec::new();
        for m in &c.messages {
            if messages.iter().any(|x| x.name == m.ident.name) {
                errs.push(rerr(
                    m.ident.span,
                    format!("duplicate message `{}` in channel `{}`", m.ident.name, c.name.name),
                ));
            }
            let duration = match &m.duration {
                ast::Duration::Cycles(n) => Dur::Cycles(*n),
                ast::Duration::Eternal => Dur::Eternal,
                ast::Duration::Message(id) => match c.messages.iter().position(|x| x.ident.name == id.name) {
                    Some(i) => Dur::Message(i),
                    None => {
                        errs.push(rerr(id.span, format!("unknown message `{}` in duration", id.name)));
                        Dur::Eternal
                    }
                },
            };
            messages.push(MsgInfo {
                name: m.ident.name.clone(),
                direction: m.direction,
                width: structs.width(&m.data_type, 0, &mut errs),
                duration,
                sync_left: convert_sync(&m.sync_left, &c.messages, &mut errs),
                sync_right: convert_sync(&m.sync_right, &c.messages, &mut errs),
                span: m.span,
            });
        }
        channels.push(ChannelInfo { name: c.name.name.clone(), messages, span: c.span });
    }
    let mut proc_ids: HashMap<&str, ProcId> = HashMap::new();
    for (i, p) in prog.procs().enumerate() {
        if proc_ids.insert(&p.name.name, i).is_some() {
            errs.push(rerr(p.name.span, format!("duplicate process `{}`", p.name.name)));
        }
    }
    let mut procs = Vec::new();
    for p in prog.procs() {
        procs.push(resolve_proc(p, &channels, &chan_ids, &proc_ids, &structs, &mut errs));
    }
    if errs.is_empty() {
        Ok(ResolvedProgram { channels, procs })
    } else {
        Err(errs)
    }
}

fn resolve_proc(
    p: &ast::ProcDef,
    channels: &[ChannelInfo],
    chan_ids: &HashMap<&str, ChanId>,
    proc_ids: &HashMap<&str, ProcId>,
    structs: &Structs,
    errs: &mut Vec<ResolveError>,
) -> ResolvedProc {
    let mut endpoints: Vec<Endpoint> = Vec::new();
    let mut add_ep =
        |name: &ast::Ident, chan: ChanId, side: Side, origin: EndpointOrigin, errs: &mut Vec<ResolveError>| {
            if endpoints.iter().any(|e| e.name == name.name) {
                errs.push(rerr(name.span, format!("duplicate endpoint `{}`", name.name)));
            }
            endpoints.push(Endpoint { name: name.name.clone(), chan, side, origin, span: name.span });
            endpoints.len() - 1
        };
    let lookup_chan = |id: &ast::Ident, errs: &mut Vec<ResolveError>| match chan_ids.get(id.name.as_str()) {
        Some(c) => Some(*c),
        None => {
            errs.push(rerr(id.span, format!("unknown channel type `{}`", id.name)));
            None
        }
    };
    let mut params = Vec::new();
    for (i, pa) in p.params.iter().enumerate() {
        if let Some(c) = lookup_chan(&pa.chan, errs) {
            params.push(add_ep(&pa.name, c, pa.side, EndpointOrigin::Param(i), errs));
        }
    }
    let mut chans = Vec::new();
    for (i, ci) in p.chans.iter().enumerate() {
        if let Some(c) = lookup_chan(&ci.chan, errs) {
            let l = add_ep(&ci.left, c, Side::Left, EndpointOrigin::Local(i), errs);
            let r = add_ep(&ci.right, c, Side::Right, EndpointOrigin::Local(i), errs);
            chans.push(LocalChan { left: l, right: r, chan: c, span: ci.span });
        }
    }
    let mut regs: Vec<RegInfo> = Vec::new();
    for r in &p.regs {
        if regs.iter().any(|x| x.name == r.name.name) {
            errs.push(rerr(r.name.span, format!("duplicate register `{}`", r.name.name)));
        }
        regs.push(RegInfo { name: r.name.name.clone(), width: structs.width(&r.ty, 0, errs), span: r.span });
    }
    let mut spawns = Vec::new();
    for s in &p.spawns {
        let Some(&pid) = proc_ids.get(s.proc_name.name.as_str()) else {
            errs.push(rerr(s.proc_name.span, format!("unknown process `{}`", s.proc_name.name)));
            continue;
        };
        let mut args = Vec::new();
        for a in &s.args {
            match endpoints.iter().position(|e| e.name == a.name) {
                Some(e) => args.push(e),
                None => errs.push(rerr(a.span, format!("unbound endpoint `{}`", a.name))),
            }
        }
        spawns.push(ResolvedSpawn { proc: pid, args, span: s.span });
    }
    let mut threads = Vec::new();
    for t in &p.threads {
        let mut cx = TermCx { endpoints: &endpoints, channels, regs: &regs, scope: Vec::new(), vars: Vec::new(), errs };
        let body = cx.term(&t.body);
        if t.kind == ThreadKind::Loop {
            if let Some(sp) = find_recurse(&t.body) {
                cx.errs.push(rerr(sp, "`recurse` is only allowed inside a `recursive` thread"));
            }
        }
        let vars = cx.vars;
        threads.push(ResolvedThread { kind: t.kind, body, vars, span: t.span });
    }
    ResolvedProc {
        name: p.name.name.clone(),
        span: p.span,
        name_span: p.name.span,
        endpoints,
        params,
        regs,
        chans,
        spawns,
        threads,
    }
}

fn find_recurse(t: &ast::Term) -> Option<Span> {
    if matches!(t.kind, ast::TermKind::Recurse) {
        return Some(t.span);
    }
    t.children().into_iter().find_map(find_recurse)
}

struct TermCx<'a> {
    endpoints: &'a [Endpoint],
    channels: &'a [ChannelInfo],
    regs: &'a [RegInfo],
    scope: Vec<(String, VarId)>,
    vars: Vec<String>,
    errs: &'a mut Vec<ResolveError>,
}

impl TermCx<'_> {
    fn msg_ref(&mut self, ep: &ast::Ident, msg: &ast::Ident, want: Option<Polarity>) -> Option<MsgRef> {
        let Some(e) = self.endpoints.iter().position(|x| x.name == ep.name) else {
            self.errs.push(rerr(ep.span, format!("unbound endpoint `{}`", ep.name)));
            return None;
        };
        let endpoint = &self.endpoints[e];
        let chan = &self.channels[endpoint.chan];
        let Some(m) = chan.message_index(&msg.name) else {
            self.errs.push(rerr(msg.span, format!("channel `{}` has no message `{}`", chan.name, msg.name)));
            return None;
        };
        let pol = polarity(endpoint.side, chan.messages[m].direction);
        if let Some(w) = want {
            if w != pol {
                let (verb, actual) = match w {
                    Polarity::Send => ("sent", "receives"),
                    Polarity::Recv => ("received", "sends"),
                };
                self.errs.push(rerr(
                    ep.span.to(msg.span),
                    format!(
                        "message `{}.{}` cannot be {verb} here: endpoint `{}` {actual} it",
                        ep.name, msg.name, ep.name
                    ),
                ));
                return None;
            }
        }
        Some(MsgRef { ep: e, msg: m })
    }

    fn term(&mut self, t: &ast::Term) -> RTerm {
        use ast::TermKind as K;
        let b = |x: RTerm| Box::new(x);
        let kind = match &t.kind {
            K::Lit(l) => RKind::Lit { width: l.width, value: l.value },
            K::Unit => RKind::Unit,
            K::Cycle(n) => RKind::Cycle(*n),
            K::Var(x) => match self.scope.iter().rev().find(|(n, _)| n == x) {
                Some((_, v)) => RKind::Var(*v),
                None => {
                    self.errs.push(rerr(t.span, format!("unbound identifier `{x}`")));
                    RKind::Unit
                }
            },
            K::RegRead(r) => match self.regs.iter().position(|x| x.name == r.name) {
                Some(i) => RKind::RegRead(i),
                None => {
                    self.errs.push(rerr(r.span, format!("unbound register `{}`", r.name)));
                    RKind::Unit
                }
            },
            K::Wait(a, c) => RKind::Wait(b(self.term(a)), b(self.term(c))),
            K::Join(a, c) => RKind::Join(b(self.term(a)), b(self.term(c))),
            K::Let { name, value, body } => {
                let value = self.term(value);
                let var = self.vars.len();
                self.vars.push(name.name.clone());
                self.scope.push((name.name.clone(), var));
                let body = self.term(body);
                self.scope.pop();
                RKind::Let { var, value: b(value), body: b(body) }
            }
            K::If { cond, then_, else_ } => {
                RKind::If { cond: b(self.term(cond)), then_: b(self.term(then_)), else_: b(self.term(else_)) }
            }
            K::Send { ep, msg, value } => {
                let value = self.term(value);
                match self.msg_ref(ep, msg, Some(Polarity::Send)) {
                    Some(m) => RKind::Send { msg: m, value: b(value) },
                    None => RKind::Unit,
                }
            }
            K::Recv { ep, msg } => match self.msg_ref(ep, msg, Some(Polarity::Recv)) {
                Some(m) => RKind::Recv { msg: m },
                None => RKind::Unit,
            },
            K::Ready { ep, msg } => match self.msg_ref(ep, msg, None) {
                Some(m) => RKind::Ready { msg: m },
                None => RKind::Unit,
            },
            K::Set { reg, value } => {
                let value = self.term(value);
                match self.regs.iter().position(|x| x.name == reg.name) {
                    Some(i) => RKind::Set { reg: i, value: b(value) },
                    None => {
                        self.errs.push(rerr(reg.span, format!("unbound register `{}`", reg.name)));
                        RKind::Unit
                    }
                }
            }
            K::Binary { op, lhs, rhs } => RKind::Binary { op: *op, lhs: b(self.term(lhs)), rhs: b(self.term(rhs)) },
            K::Unary { op, operand } => RKind::Unary { op: *op, operand: b(self.term(operand)) },
            K::Recurse => RKind::Recurse,
            K::Dprint { fmt, args } => {
                RKind::Dprint { fmt: fmt.clone(), args: args.iter().map(|a| self.term(a)).collect() }
            }
        };
        RTerm::new(kind, t.span)
    }
}
