//! Source pretty-printer and a compact s-expression dump used by tests.
//!
//! The printer braces every compound term, so its output re-parses to the same tree
//! regardless of operator precedence.

use super::ast::*;
use std::fmt::Write;

pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for (i, item) in p.items.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        match item {
            Item::Struct(s) => print_struct(&mut out, s),
            Item::Chan(c) => print_chan(&mut out, c),
            Item::Proc(pr) => print_proc(&mut out, pr),
        }
    }
    out
}

fn dtype(t: &DataType) -> String {
    match t {
        DataType::Logic { width: 1, .. } => "logic".to_string(),
        DataType::Logic { width, .. } => format!("logic[{width}]"),
        DataType::Named(id) => id.name.clone(),
    }
}

fn sync(s: &SyncMode) -> String {
    match s {
        SyncMode::Dynamic => "@dyn".to_string(),
        SyncMode::Static(n) => format!("@#{n}"),
        SyncMode::Dependent { msg, offset: 0 } => format!("@#{}", msg.name),
        SyncMode::Dependent { msg, offset } => format!("@#{}+{offset}", msg.name),
    }
}

fn print_struct(out: &mut String, s: &StructDef) {
    let fields: Vec<String> = s.fields.iter().map(|(f, t)| format!("{} : {}", f.name, dtype(t))).collect();
    let _ = writeln!(out, "struct {} {{ {} }}", s.name.name, fields.join(", "));
}

fn print_chan(out: &mut String, c: &ChannelTypeDef) {
    let _ = writeln!(out, "chan {} {{", c.name.name);
    for (i, m) in c.messages.iter().enumerate() {
        let dir = match m.direction {
            Direction::Left => "left",
            Direction::Right => "right",
        };
        let dur = match &m.duration {
            Duration::Cycles(n) => format!("@#{n}"),
            Duration::Message(id) => format!("@{}", id.name),
            Duration::Eternal => String::new(),
        };
        let sep = if i + 1 == c.messages.len() { "" } else { "," };
        let _ = writeln!(
            out,
            "  {dir} {} : ({}{dur}) {}-{}{sep}",
            m.ident.name,
            dtype(&m.data_type),
            sync(&m.sync_left),
            sync(&m.sync_right)
        );
    }
    out.push_str("}\n");
}

fn print_proc(out: &mut String, p: &ProcDef) {
    let params: Vec<String> = p
        .params
        .iter()
        .map(|pa| {
            let side = match pa.side {
                Side::Left => "left",
                Side::Right => "right",
            };
            format!("{} : {side} {}", pa.name.name, pa.chan.name)
        })
        .collect();
    let _ = writeln!(out, "proc {}({}) {{", p.name.name, params.join(", "));
    for r in &p.regs {
        let _ = writeln!(out, "  reg {} : {};", r.name.name, dtype(&r.ty));
    }
    for c in &p.chans {
        let _ = writeln!(out, "  chan {} -- {} : {};", c.left.name, c.right.name, c.chan.name);
    }
    for s in &p.spawns {
        let args: Vec<&str> = s.args.iter().map(|a| a.name.as_str()).collect();
        let _ = writeln!(out, "  spawn {}({});", s.proc_name.name, args.join(", "));
    }
    for t in &p.threads {
        let kw = match t.kind {
            ThreadKind::Loop => "loop",
            ThreadKind::Recursive => "recursive",
        };
        let _ = writeln!(out, "  {kw} {{ {} }}", print_term(&t.body));
    }
    out.push_str("}\n");
}

fn escape(s: &str) -> String {
    let mut o = String::new();
    for c in s.chars() {
        match c {
            '"' => o.push_str("\\\""),
            '\\' => o.push_str("\\\\"),
            '\n' => o.push_str("\\n"),
            '\t' => o.push_str("\\t"),
            c => o.push(c),
        }
    }
    o
}

pub fn print_term(t: &Term) -> String {
    use TermKind::*;
    match &t.kind {
        Lit(Literal { width: None, value }) => value.to_string(),
        Lit(Literal { width: Some(w), value }) => format!("{w}'d{value}"),
        Unit => "()".to_string(),
        Cycle(n) => format!("cycle {n}"),
        Var(x) => x.clone(),
        RegRead(r) => format!("*{}", r.name),
        Wait(a, b) => format!("{{ {} >> {} }}", print_term(a), print_term(b)),
        Join(a, b) => format!("{{ {}; {} }}", print_term(a), print_term(b)),
        Let { name, value, body } => {
            format!("{{ let {} = {} in {} }}", name.name, print_term(value), print_term(body))
        }
        If { cond, then_, else_ } => {
            format!("{{ if {} {{ {} }} else {{ {} }} }}", print_term(cond), print_term(then_), print_term(else_))
        }
        Send { ep, msg, value } => format!("send {}.{}({})", ep.name, msg.name, print_term(value)),
        Recv { ep, msg } => format!("recv {}.{}", ep.name, msg.name),
        Set { reg, value } => format!("{{ set {} := {} }}", reg.name, print_term(value)),
        Ready { ep, msg } => format!("ready({}.{})", ep.name, msg.name),
        Binary { op, lhs, rhs } => format!("({} {} {})", print_term(lhs), op.as_str(), print_term(rhs)),
        Unary { op, operand } => format!("{}({})", op.as_str(), print_term(operand)),
        Recurse => "recurse".to_string(),
        Dprint { fmt, args } if args.is_empty() => format!("dprint \"{}\"", escape(fmt)),
        Dprint { fmt, args } => {
            let a: Vec<String> = args.iter().map(print_term).collect();
            format!("dprint \"{}\" ({})", escape(fmt), a.join(", "))
        }
    }
}

/// Span-free s-expression form of a term.
pub fn term_sexpr(t: &Term) -> String {
    use TermKind::*;
    match &t.kind {
        Lit(Literal { width: None, value }) => value.to_string(),
        Lit(Literal { width: Some(w), value }) => format!("{w}'d{value}"),
        Unit => "()".into(),
        Cycle(n) => format!("(cycle {n})"),
        Var(x) => format!("(var {x})"),
        RegRead(r) => format!("(reg {})", r.name),
        Wait(a, b) => format!("(wait {} {})", term_sexpr(a), term_sexpr(b)),
        Join(a, b) => format!("(join {} {})", term_sexpr(a), term_sexpr(b)),
        Let { name, value, body } => format!("(let {} {} {})", name.name, term_sexpr(value), term_sexpr(body)),
        If { cond, then_, else_ } => {
            format!("(if {} {} {})", term_sexpr(cond), term_sexpr(then_), term_sexpr(else_))
        }
        Send { ep, msg, value } => format!("(send {}.{} {})", ep.name, msg.name, term_sexpr(value)),
        Recv { ep, msg } => format!("(recv {}.{})", ep.name, msg.name),
        Set { reg, value } => format!("(set {} {})", reg.name, term_sexpr(value)),
        Ready { ep, msg } => format!("(ready {}.{})", ep.name, msg.name),
        Binary { op, lhs, rhs } => format!("({} {} {})", op.as_str(), term_sexpr(lhs), term_sexpr(rhs)),
        Unary { op, operand } => format!("({} {})", op.as_str(), term_sexpr(operand)),
        Recurse => "recurse".into(),
        Dprint { fmt, args } => {
            let a: Vec<String> = args.iter().map(term_sexpr).collect();
            format!("(dprint {:?} {})", fmt, a.join(" "))
        }
    }
}

/// The program as JSON with every `span` field removed, for structural comparison.
pub fn erase_spans(p: &Program) -> serde_json::Value {
    fn strip(v: &mut serde_json::Value) {
        match v {
            serde_json::Value::Object(m) => {
                m.remove("span");
                m.values_mut().for_each(strip);
            }
            serde_json::Value::Array(a) => a.iter_mut().for_each(strip),
            _ => {}
        }
    }
    let mut v = serde_json::to_value(p).expect("AST serializes");
    strip(&mut v);
    v
}
