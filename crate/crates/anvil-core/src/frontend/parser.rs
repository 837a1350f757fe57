use super::ast::*;
use super::lexer::{Keyword, Sym, Token, TokenKind};
use super::span::Span;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    pub span: Span,
    pub expected: Vec<String>,
    pub found: String,
}

pub fn parse_program(tokens: &[Token]) -> Result<Program, ParseError> {
    let mut p = Parser { toks: tokens, pos: 0 };
    let mut items = Vec::new();
    while !p.at_eof() {
        items.push(p.item()?);
    }
    Ok(Program { items })
}

/// Parses a single term (used by tests and the Python bindings).
pub fn parse_term(tokens: &[Token]) -> Result<Term, ParseError> {
    let mut p = Parser { toks: tokens, pos: 0 };
    let t = p.seq()?;
    if !p.at_eof() {
        return Err(p.unexpected(&["end of input"]));
    }
    Ok(t)
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &'a Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek().kind, TokenKind::Eof)
    }

    fn bump(&mut self) -> &'a Token {
        let t = self.peek();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn prev_hi(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn is_sym(&self, s: Sym) -> bool {
        self.peek().kind == TokenKind::Sym(s)
    }

    fn is_kw(&self, k: Keyword) -> bool {
        self.peek().kind == TokenKind::Kw(k)
    }

    fn eat_sym(&mut self, s: Sym) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let t = self.peek();
        ParseError {
            span: t.span,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.kind.to_string(),
        }
    }

    fn expect_sym(&mut self, s: Sym) -> Result<Span, ParseError> {
        if self.is_sym(s) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&[&format!("`{}`", s.as_str())]))
        }
    }

    fn expect_kw(&mut self, k: Keyword) -> Result<Span, ParseError> {
        if self.is_kw(k) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&[&format!("`{}`", k.as_str())]))
        }
    }

    fn ident(&mut self) -> Result<Ident, ParseError> {
        match &self.peek().kind {
            TokenKind::Ident(name) => {
                let span = self.bump().span;
                Ok(Ident { name: name.clone(), span })
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn int(&mut self) -> Result<(u32, Span), ParseError> {
        match self.peek().kind {
            TokenKind::Int(v) if v <= u32::MAX as u128 => {
                let span = self.bump().span;
                Ok((v as u32, span))
            }
            _ => Err(self.unexpected(&["integer"])),
        }
    }

    fn item(&mut self) -> Result<Item, ParseError> {
        match self.peek().kind {
            TokenKind::Kw(Keyword::Chan) => Ok(Item::Chan(self.chan_def()?)),
            TokenKind::Kw(Keyword::Proc) => Ok(Item::Proc(self.proc_def()?)),
            TokenKind::Kw(Keyword::Struct) => Ok(Item::Struct(self.struct_def()?)),
            _ => Err(self.unexpected(&["`chan`", "`proc`", "`struct`"])),
        }
    }

    fn struct_def(&mut self) -> Result<StructDef, ParseError> {
        let lo = self.expect_kw(Keyword::Struct)?;
        let name = self.ident()?;
        self.expect_sym(Sym::LBrace)?;
        let mut fields = Vec::new();
        while !self.is_sym(Sym::RBrace) {
            let f = self.ident()?;
            self.expect_sym(Sym::Colon)?;
            let ty = self.data_type()?;
            fields.push((f, ty));
            if !self.eat_sym(Sym::Comma) {
                break;
            }
        }
        let hi = self.expect_sym(Sym::RBrace)?;
        Ok(StructDef { name, fields, span: lo.to(hi) })
    }

    fn data_type(&mut self) -> Result<DataType, ParseError> {
        let id = self.ident()?;
        if id.name == "logic" {
            if self.eat_sym(Sym::LBracket) {
                let (w, _) = self.int()?;
                let hi = self.expect_sym(Sym::RBracket)?;
                if w == 0 {
                    return Err(ParseError {
                        span: id.span.to(hi),
                        expected: vec!["positive width".into()],
                        found: "0".into(),
                    });
                }
                return Ok(DataType::Logic { width: w, span: id.span.to(hi) });
            }
            return Ok(DataType::Logic { width: 1, span: id.span });
        }
        Ok(DataType::Named(id))
    }

    fn chan_def(&mut self) -> Result<ChannelTypeDef, ParseError> {
        let lo = self.expect_kw(Keyword::Chan)?;
        let name = self.ident()?;
        self.expect_sym(Sym::LBrace)?;
        let mut messages = Vec::new();
        while !self.is_sym(Sym::RBrace) {
            messages.push(self.message_def()?);
            if !self.eat_sym(Sym::Comma) {
                break;
            }
        }
        let hi = self.expect_sym(Sym::RBrace)?;
        Ok(ChannelTypeDef { name, messages, span: lo.to(hi) })
    }

    fn message_def(&mut self) -> Result<MessageDef, ParseError> {
        let lo = self.peek().span;
        let direction = match self.peek().kind {
            TokenKind::Kw(Keyword::Left) => Direction::Left,
            TokenKind::Kw(Keyword::Right) => Direction::Right,
            _ => return Err(self.unexpected(&["`left`", "`right`"])),
        };
        self.bump();
        let ident = self.ident()?;
        self.expect_sym(Sym::Colon)?;
        self.expect_sym(Sym::LParen)?;
        let data_type = self.data_type()?;
        let duration = if self.eat_sym(Sym::At) {
            if self.eat_sym(Sym::Hash) {
                let (n, sp) = self.int()?;
                if n == 0 {
                    return Err(ParseError {
                        span: sp,
                        expected: vec!["duration of at least 1".into()],
                        found: "0".into(),
                    });
                }
                Duration::Cycles(n)
            } else {
                Duration::Message(self.ident()?)
            }
        } else {
            Duration::Eternal
        };
        let mut hi = self.expect_sym(Sym::RParen)?;
        let (sync_left, sync_right) = if self.is_sym(Sym::At) || self.is_sym(Sym::AtDyn) {
            let l = self.sync_mode()?;
            self.expect_sym(Sym::Minus)?;
            let r = self.sync_mode()?;
            hi = self.prev_hi();
            (l, r)
        } else {
            (SyncMode::Dynamic, SyncMode::Dynamic)
        };
        Ok(MessageDef { ident, direction, data_type, duration, sync_left, sync_right, span: lo.to(hi) })
    }

    fn sync_mode(&mut self) -> Result<SyncMode, ParseError> {
        if self.eat_sym(Sym::AtDyn) {
            return Ok(SyncMode::Dynamic);
        }
        self.expect_sym(Sym::At)?;
        self.expect_sym(Sym::Hash)?;
        if let TokenKind::Ident(_) = self.peek().kind {
            let msg = self.ident()?;
            let offset = if self.eat_sym(Sym::Plus) { self.int()?.0 } else { 0 };
            return Ok(SyncMode::Dependent { msg, offset });
        }
        let (n, sp) = self.int()?;
        if n == 0 {
            return Err(ParseError { span: sp, expected: vec!["static sync of at least 1".into()], found: "0".into() });
        }
        Ok(SyncMode::Static(n))
    }

    fn proc_def(&mut self) -> Result<ProcDef, ParseError> {
        let lo = self.expect_kw(Keyword::Proc)?;
        let name = self.ident()?;
        self.expect_sym(Sym::LParen)?;
        let mut params = Vec::new();
        while !self.is_sym(Sym::RParen) {
            let pname = self.ident()?;
            self.expect_sym(Sym::Colon)?;
            let side = match self.peek().kind {
                TokenKind::Kw(Keyword::Left) => Side::Left,
                TokenKind::Kw(Keyword::Right) => Side::Right,
                _ => return Err(self.unexpected(&["`left`", "`right`"])),
            };
            self.bump();
            let chan = self.ident()?;
            params.push(Param { span: pname.span.to(chan.span), name: pname, side, chan });
            if !self.eat_sym(Sym::Comma) {
                break;
            }
        }
        self.expect_sym(Sym::RParen)?;
        self.expect_sym(Sym::LBrace)?;
        let mut def = ProcDef { name, params, regs: vec![], chans: vec![], spawns: vec![], threads: vec![], span: lo };
        loop {
            match self.peek().kind {
                TokenKind::Sym(Sym::RBrace) => break,
                TokenKind::Sym(Sym::Semi) => {
                    self.bump();
                }
                TokenKind::Kw(Keyword::Reg) => {
                    let lo = self.bump().span;
                    let name = self.ident()?;
                    self.expect_sym(Sym::Colon)?;
                    let ty = self.data_type()?;
                    let hi = self.expect_sym(Sym::Semi)?;
                    def.regs.push(RegDef { name, ty, span: lo.to(hi) });
                }
                TokenKind::Kw(Keyword::Chan) => {
                    let lo = self.bump().span;
                    let left = self.ident()?;
                    self.expect_sym(Sym::DashDash)?;
                    let right = self.ident()?;
                    self.expect_sym(Sym::Colon)?;
                    let chan = self.ident()?;
                    let hi = self.expect_sym(Sym::Semi)?;
                    def.chans.push(ChanInst { left, right, chan, span: lo.to(hi) });
                }
                TokenKind::Kw(Keyword::Spawn) => {
                    let lo = self.bump().span;
                    let proc_name = self.ident()?;
                    self.expect_sym(Sym::LParen)?;
                    let mut args = Vec::new();
                    while !self.is_sym(Sym::RParen) {
                        args.push(self.ident()?);
                        if !self.eat_sym(Sym::Comma) {
                            break;
                        }
                    }
                    self.expect_sym(Sym::RParen)?;
                    let hi = self.expect_sym(Sym::Semi)?;
                    def.spawns.push(Spawn { proc_name, args, span: lo.to(hi) });
                }
                TokenKind::Kw(k @ (Keyword::Loop | Keyword::Recursive)) => {
                    let lo = self.bump().span;
                    self.expect_sym(Sym::LBrace)?;
                    let body = self.seq()?;
                    let hi = self.expect_sym(Sym::RBrace)?;
                    let kind = if k == Keyword::Loop { ThreadKind::Loop } else { ThreadKind::Recursive };
                    def.threads.push(Thread { kind, body, span: lo.to(hi) });
                }
                _ => {
                    return Err(self.unexpected(&["`reg`", "`chan`", "`spawn`", "`loop`", "`recursive`", "`}`"]));
                }
            }
        }
        let hi = self.expect_sym(Sym::RBrace)?;
        def.span = lo.to(hi);
        Ok(def)
    }

    fn at_seq_end(&self) -> bool {
        matches!(self.peek().kind, TokenKind::Sym(Sym::RBrace | Sym::RParen) | TokenKind::Eof)
    }

    /// seq := let-stmt | join ('>>' seq)?
    fn seq(&mut self) -> Result<Term, ParseError> {
        if self.at_seq_end() {
            let sp = self.peek().span;
            return Ok(Term::new(TermKind::Unit, Span::empty_at(sp.file, sp.lo as usize)));
        }
        if self.is_kw(Keyword::Let) {
            return self.let_stmt();
        }
        let lhs = self.join()?;
        if self.eat_sym(Sym::Wait) {
            let rhs = self.seq()?;
            let span = lhs.span.to(rhs.span);
            return Ok(Term::new(TermKind::Wait(Box::new(lhs), Box::new(rhs)), span));
        }
        Ok(lhs)
    }

    fn let_stmt(&mut self) -> Result<Term, ParseError> {
        let lo = self.expect_kw(Keyword::Let)?;
        let name = self.ident()?;
        self.expect_sym(Sym::Eq)?;
        let value = self.expr()?;
        let body = if self.is_kw(Keyword::In) {
            self.bump();
            self.seq()?
        } else if self.eat_sym(Sym::Semi) {
            if self.at_seq_end() {
                unit_at(value.span)
            } else {
                self.seq()?
            }
        } else if self.eat_sym(Sym::Wait) {
            let rest = self.seq()?;
            let r = Term::new(TermKind::Var(name.name.clone()), name.span);
            let span = name.span.to(rest.span);
            Term::new(TermKind::Wait(Box::new(r), Box::new(rest)), span)
        } else if self.at_seq_end() {
            unit_at(value.span)
        } else {
            return Err(self.unexpected(&["`;`", "`>>`", "`in`", "`}`"]));
        };
        let span = lo.to(value.span).to(body.span);
        Ok(Term::new(TermKind::Let { name, value: Box::new(value), body: Box::new(body) }, span))
    }

    /// join := expr (';' (let-stmt | expr))* ';'?
    fn join(&mut self) -> Result<Term, ParseError> {
        let mut lhs = self.expr()?;
        while self.eat_sym(Sym::Semi) {
            if self.at_seq_end() || self.is_sym(Sym::Wait) {
                break;
            }
            if self.is_kw(Keyword::Let) {
                let rhs = self.let_stmt()?;
                let span = lhs.span.to(rhs.span);
                return Ok(Term::new(TermKind::Join(Box::new(lhs), Box::new(rhs)), span));
            }
            let rhs = self.expr()?;
            let span = lhs.span.to(rhs.span);
            lhs = Term::new(TermKind::Join(Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek().kind {
            TokenKind::Sym(Sym::Plus) => BinOp::Add,
            TokenKind::Sym(Sym::Minus) => BinOp::Sub,
            TokenKind::Sym(Sym::Amp) => BinOp::And,
            TokenKind::Sym(Sym::Pipe) => BinOp::Or,
            TokenKind::Sym(Sym::Caret) => BinOp::Xor,
            TokenKind::Sym(Sym::EqEq) => BinOp::Eq,
            TokenKind::Sym(Sym::Ne) => BinOp::Ne,
            TokenKind::Sym(Sym::Lt) => BinOp::Lt,
            TokenKind::Sym(Sym::Gt) => BinOp::Gt,
            TokenKind::Sym(Sym::Le) => BinOp::Le,
            TokenKind::Sym(Sym::Ge) => BinOp::Ge,
            TokenKind::Sym(Sym::AndAnd) => BinOp::LAnd,
            TokenKind::Sym(Sym::OrOr) => BinOp::LOr,
            _ => return None,
        })
    }

    fn expr(&mut self) -> Result<Term, ParseError> {
        self.expr_prec(0)
    }

    fn expr_prec(&mut self, min: u8) -> Result<Term, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec <= min {
                break;
            }
            self.bump();
            let rhs = self.expr_prec(prec)?;
            let span = lhs.span.to(rhs.span);
            lhs = Term::new(TermKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, span);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Term, ParseError> {
        let op = match self.peek().kind {
            TokenKind::Sym(Sym::Tilde) => Some(UnOp::Not),
            TokenKind::Sym(Sym::Bang) => Some(UnOp::LNot),
            TokenKind::Sym(Sym::Minus) => Some(UnOp::Neg),
            _ => None,
        };
        if let Some(op) = op {
            let lo = self.bump().span;
            let operand = self.unary()?;
            let span = lo.to(operand.span);
            return Ok(Term::new(TermKind::Unary { op, operand: Box::new(operand) }, span));
        }
        if self.is_sym(Sym::Star) {
            let lo = self.bump().span;
            let reg = self.ident()?;
            let span = lo.to(reg.span);
            return Ok(Term::new(TermKind::RegRead(reg), span));
        }
        self.primary()
    }

    fn msg_ref(&mut self) -> Result<(Ident, Ident), ParseError> {
        let ep = self.ident()?;
        self.expect_sym(Sym::Dot)?;
        let msg = self.ident()?;
        Ok((ep, msg))
    }

    fn block(&mut self) -> Result<Term, ParseError> {
        let lo = self.expect_sym(Sym::LBrace)?;
        if self.is_sym(Sym::RBrace) {
            let hi = self.bump().span;
            return Ok(Term::new(TermKind::Unit, lo.to(hi)));
        }
        let t = self.seq()?;
        self.expect_sym(Sym::RBrace)?;
        Ok(t)
    }

    fn primary(&mut self) -> Result<Term, ParseError> {
        let tok = self.peek();
        let lo = tok.span;
        match &tok.kind {
            TokenKind::Int(v) => {
                self.bump();
                Ok(Term::new(TermKind::Lit(Literal { width: None, value: *v }), lo))
            }
            TokenKind::Sized { width, value } => {
                self.bump();
                Ok(Term::new(TermKind::Lit(Literal { width: Some(*width), value: *value }), lo))
            }
            TokenKind::Kw(Keyword::True) | TokenKind::Kw(Keyword::False) => {
                let v = matches!(tok.kind, TokenKind::Kw(Keyword::True)) as u128;
                self.bump();
                Ok(Term::new(TermKind::Lit(Literal { width: Some(1), value: v }), lo))
            }
            TokenKind::Ident(name) => {
                self.bump();
                Ok(Term::new(TermKind::Var(name.clone()), lo))
            }
            TokenKind::Sym(Sym::LParen) => {
                self.bump();
                if self.is_sym(Sym::RParen) {
                    let hi = self.bump().span;
                    return Ok(Term::new(TermKind::Unit, lo.to(hi)));
                }
                let t = self.seq()?;
                self.expect_sym(Sym::RParen)?;
                Ok(t)
            }
            TokenKind::Sym(Sym::LBrace) => self.block(),
            TokenKind::Kw(Keyword::If) => self.if_term(),
            TokenKind::Kw(Keyword::Recv) => {
                self.bump();
                let (ep, msg) = self.msg_ref()?;
                let span = lo.to(msg.span);
                Ok(Term::new(TermKind::Recv { ep, msg }, span))
            }
            TokenKind::Kw(Keyword::Send) => {
                self.bump();
                let (ep, msg) = self.msg_ref()?;
                self.expect_sym(Sym::LParen)?;
                let value = if self.is_sym(Sym::RParen) {
                    let sp = self.peek().span;
                    Term::new(TermKind::Unit, Span::empty_at(sp.file, sp.lo as usize))
                } else {
                    self.seq()?
                };
                let hi = self.expect_sym(Sym::RParen)?;
                Ok(Term::new(TermKind::Send { ep, msg, value: Box::new(value) }, lo.to(hi)))
            }
            TokenKind::Kw(Keyword::Set) => {
                self.bump();
                let reg = self.ident()?;
                self.expect_sym(Sym::Assign)?;
                let value = self.expr()?;
                let span = lo.to(value.span);
                Ok(Term::new(TermKind::Set { reg, value: Box::new(value) }, span))
            }
            TokenKind::Kw(Keyword::Cycle) => {
                self.bump();
                let (n, hi) = self.int()?;
                Ok(Term::new(TermKind::Cycle(n), lo.to(hi)))
            }
            TokenKind::Kw(Keyword::Ready) => {
                self.bump();
                self.expect_sym(Sym::LParen)?;
                let (ep, msg) = self.msg_ref()?;
                let hi = self.expect_sym(Sym::RParen)?;
                Ok(Term::new(TermKind::Ready { ep, msg }, lo.to(hi)))
            }
            TokenKind::Kw(Keyword::Recurse) => {
                self.bump();
                Ok(Term::new(TermKind::Recurse, lo))
            }
            TokenKind::Kw(Keyword::Dprint) => {
                self.bump();
                let fmt = match &self.peek().kind {
                    TokenKind::Str(s) => s.clone(),
                    _ => return Err(self.unexpected(&["string literal"])),
                };
                let mut hi = self.bump().span;
                let mut args = Vec::new();
                if self.eat_sym(Sym::LParen) {
                    while !self.is_sym(Sym::RParen) {
                        args.push(self.expr()?);
                        if !self.eat_sym(Sym::Comma) {
                            break;
                        }
                    }
                    hi = self.expect_sym(Sym::RParen)?;
                }
                Ok(Term::new(TermKind::Dprint { fmt, args }, lo.to(hi)))
            }
            _ => Err(self.unexpected(&["term"])),
        }
    }

    fn if_term(&mut self) -> Result<Term, ParseError> {
        let lo = self.expect_kw(Keyword::If)?;
        let cond = self.expr()?;
        let then_ = self.block()?;
        let mut hi = self.prev_hi();
        let else_ = if self.is_kw(Keyword::Else) {
            self.bump();
            let e = if self.is_kw(Keyword::If) { self.if_term()? } else { self.block()? };
            hi = self.prev_hi();
            e
        } else {
            Term::new(TermKind::Unit, Span::empty_at(hi.file, hi.hi as usize))
        };
        Ok(Term::new(TermKind::If { cond: Box::new(cond), then_: Box::new(then_), else_: Box::new(else_) }, lo.to(hi)))
    }
}

fn unit_at(after: Span) -> Term {
    Term::new(TermKind::Unit, Span::empty_at(after.file, after.hi as usize))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::lexer::tokenize;
    use crate::frontend::span::FileId;

    fn term(s: &str) -> Term {
        parse_term(&tokenize(FileId(0), s).unwrap()).unwrap()
    }

    fn strip(t: &Term) -> String {
        crate::frontend::pretty::term_sexpr(t)
    }

    #[test]
    fn counter_loop_shape() {
        let t = term("set counter := *counter + 1 >> cycle 1");
        assert_eq!(strip(&t), "(wait (set counter (+ (reg counter) 1)) (cycle 1))");
    }

    #[test]
    fn wait_is_right_assoc_and_looser_than_join() {
        assert_eq!(strip(&term("cycle 1 >> cycle 2 >> cycle 3")), "(wait (cycle 1) (wait (cycle 2) (cycle 3)))");
        assert_eq!(strip(&term("cycle 1; cycle 2 >> cycle 3")), "(wait (join (cycle 1) (cycle 2)) (cycle 3))");
        assert_eq!(strip(&term("cycle 1 >> cycle 2; cycle 3")), "(wait (cycle 1) (join (cycle 2) (cycle 3)))");
    }

    #[test]
    fn let_forms() {
        assert_eq!(strip(&term("let x = 1; x")), "(let x 1 (var x))");
        assert_eq!(strip(&term("let x = 1 in x")), "(let x 1 (var x))");
        assert_eq!(strip(&term("let x = recv a.b >> cycle 1")), "(let x (recv a.b) (wait (var x) (cycle 1)))");
        assert_eq!(strip(&term("cycle 1; let x = 1; x")), "(join (cycle 1) (let x 1 (var x)))");
    }

    #[test]
    fn precedence() {
        assert_eq!(strip(&term("a + b ^ c & d")), "(^ (+ (var a) (var b)) (& (var c) (var d)))");
        assert_eq!(strip(&term("~*r & d")), "(& (~ (reg r)) (var d))");
    }

    #[test]
    fn mem_ch_definition() {
        let src = "chan mem_ch {
  left rd_req : (logic[8]@#1) @#2-@dyn,
  left wr_req : (addr_data_pair@#1),
  right rd_res : (logic[8]@rd_req) @#rd_req+1-@#rd_req+1,
  right wr_res : (logic[1]@#1) @#wr_req+1-@#wr_req+1
}";
        let p = parse_program(&tokenize(FileId(0), src).unwrap()).unwrap();
        let c = p.chans().next().unwrap();
        assert_eq!(c.messages.len(), 4);
        let m = &c.messages;
        assert_eq!(m[0].direction, Direction::Left);
        assert_eq!(m[0].duration, Duration::Cycles(1));
        assert_eq!(m[0].sync_left, SyncMode::Static(2));
        assert_eq!(m[0].sync_right, SyncMode::Dynamic);
        assert!(matches!(&m[1].data_type, DataType::Named(n) if n.name == "addr_data_pair"));
        assert_eq!((&m[1].sync_left, &m[1].sync_right), (&SyncMode::Dynamic, &SyncMode::Dynamic));
        assert_eq!(m[2].direction, Direction::Right);
        assert!(matches!(&m[2].duration, Duration::Message(n) if n.name == "rd_req"));
        assert!(matches!(&m[2].sync_left, SyncMode::Dependent { msg, offset: 1 } if msg.name == "rd_req"));
        assert!(matches!(&m[3].sync_right, SyncMode::Dependent { msg, offset: 1 } if msg.name == "wr_req"));
        assert!(matches!(m[3].data_type, DataType::Logic { width: 1, .. }));
    }

    #[test]
    fn empty_proc() {
        let p = parse_program(&tokenize(FileId(0), "proc p() {}").unwrap()).unwrap();
        let d = p.procs().next().unwrap();
        assert!(d.regs.is_empty() && d.threads.is_empty() && d.params.is_empty());
    }

    #[test]
    fn syntax_error_lists_expected() {
        let e = parse_program(&tokenize(FileId(0), "proc p( {}").unwrap()).unwrap_err();
        assert_eq!(e.expected, vec!["identifier".to_string()]);
        assert_eq!(e.found, "`{`");
    }
}
