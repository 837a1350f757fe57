//! Surface syntax tree. Every node carries a [`Span`].

use super::span::Span;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Program {
    pub items: Vec<Item>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Item {
    Struct(StructDef),
    Chan(ChannelTypeDef),
    Proc(ProcDef),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StructDef {
    pub name: Ident,
    pub fields: Vec<(Ident, DataType)>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum DataType {
    /// `logic` (width 1) or `logic[N]`.
    Logic { width: u32, span: Span },
    /// A struct name.
    Named(Ident),
}

impl DataType {
    pub fn span(&self) -> Span {
        match self {
            DataType::Logic { span, .. } => *span,
            DataType::Named(id) => id.span,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Direction {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum SyncMode {
    Dynamic,
    Static(u32),
    Dependent { msg: Ident, offset: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Duration {
    Cycles(u32),
    Message(Ident),
    Eternal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MessageDef {
    pub ident: Ident,
    pub direction: Direction,
    pub data_type: DataType,
    pub duration: Duration,
    pub sync_left: SyncMode,
    pub sync_right: SyncMode,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChannelTypeDef {
    pub name: Ident,
    pub messages: Vec<MessageDef>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Param {
    pub name: Ident,
    pub side: Side,
    pub chan: Ident,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegDef {
    pub name: Ident,
    pub ty: DataType,
    pub span: Span,
}

/// `chan a -- b : T;`
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChanInst {
    pub left: Ident,
    pub right: Ident,
    pub chan: Ident,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Spawn {
    pub proc_name: Ident,
    pub args: Vec<Ident>,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ThreadKind {
    Loop,
    Recursive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Thread {
    pub kind: ThreadKind,
    pub body: Term,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProcDef {
    pub name: Ident,
    pub params: Vec<Param>,
    pub regs: Vec<RegDef>,
    pub chans: Vec<ChanInst>,
    pub spawns: Vec<Spawn>,
    pub threads: Vec<Thread>,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BinOp {
    Add,
    Sub,
    And,
    Or,
    Xor,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    LAnd,
    LOr,
}

impl BinOp {
    pub fn as_str(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::And => "&",
            BinOp::Or => "|",
            BinOp::Xor => "^",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
            BinOp::LAnd => "&&",
            BinOp::LOr => "||",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::LOr => 1,
            BinOp::LAnd => 2,
            BinOp::Or => 3,
            BinOp::Xor => 4,
            BinOp::And => 5,
            BinOp::Eq | BinOp::Ne => 6,
            BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge => 7,
            BinOp::Add | BinOp::Sub => 8,
        }
    }

    /// Comparisons and logical connectives produce one bit.
    pub fn is_boolean(self) -> bool {
        matches!(self, BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge | BinOp::LAnd | BinOp::LOr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum UnOp {
    Not,
    LNot,
    Neg,
}

impl UnOp {
    pub fn as_str(self) -> &'static str {
        match self {
            UnOp::Not => "~",
            UnOp::LNot => "!",
            UnOp::Neg => "-",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Literal {
    pub width: Option<u32>,
    pub value: u128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Term {
    pub kind: TermKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum TermKind {
    Lit(Literal),
    Unit,
    Cycle(u32),
    Var(String),
    RegRead(Ident),
    Wait(Box<Term>, Box<Term>),
    Join(Box<Term>, Box<Term>),
    Let { name: Ident, value: Box<Term>, body: Box<Term> },
    If { cond: Box<Term>, then_: Box<Term>, else_: Box<Term> },
    Send { ep: Ident, msg: Ident, value: Box<Term> },
    Recv { ep: Ident, msg: Ident },
    Set { reg: Ident, value: Box<Term> },
    Ready { ep: Ident, msg: Ident },
    Binary { op: BinOp, lhs: Box<Term>, rhs: Box<Term> },
    Unary { op: UnOp, operand: Box<Term> },
    Recurse,
    Dprint { fmt: String, args: Vec<Term> },
}

impl Term {
    pub fn new(kind: TermKind, span: Span) -> Term {
        Term { kind, span }
    }

    /// Direct sub-terms, in source order.
    pub fn children(&self) -> Vec<&Term> {
        use TermKind::*;
        match &self.kind {
            Lit(_) | Unit | Cycle(_) | Var(_) | RegRead(_) | Recv { .. } | Ready { .. } | Recurse => vec![],
            Wait(a, b) | Join(a, b) => vec![a, b],
            Let { value, body, .. } => vec![value, body],
            If { cond, then_, else_ } => vec![cond, then_, else_],
            Send { value, .. } | Set { value, .. } => vec![value],
            Binary { lhs, rhs, .. } => vec![lhs, rhs],
            Unary { operand, .. } => vec![operand],
            Dprint { args, .. } => args.iter().collect(),
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn contains_recurse(&self) -> bool {
        matches!(self.kind, TermKind::Recurse) || self.children().iter().any(|c| c.contains_recurse())
    }
}

impl Program {
    pub fn procs(&self) -> impl Iterator<Item = &ProcDef> {
        self.items.iter().filter_map(|i| match i {
            Item::Proc(p) => Some(p),
            _ => None,
        })
    }

    pub fn chans(&self) -> impl Iterator<Item = &ChannelTypeDef> {
        self.items.iter().filter_map(|i| match i {
            Item::Chan(c) => Some(c),
            _ => None,
        })
    }

    pub fn structs(&self) -> impl Iterator<Item = &StructDef> {
        self.items.iter().filter_map(|i| match i {
            Item::Struct(s) => Some(s),
            _ => None,
        })
    }
}
