use super::span::{FileId, Span};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Chan,
    Proc,
    Loop,
    Recursive,
    Recurse,
    Let,
    In,
    Set,
    Send,
    Recv,
    Ready,
    Cycle,
    If,
    Else,
    Spawn,
    Reg,
    Left,
    Right,
    Dprint,
    Struct,
    True,
    False,
}

impl Keyword {
    fn lookup(s: &str) -> Option<Keyword> {
        use Keyword::*;
        Some(match s {
            "chan" => Chan,
            "proc" => Proc,
            "loop" => Loop,
            "recursive" => Recursive,
            "recurse" => Recurse,
            "let" => Let,
            "in" => In,
            "set" => Set,
            "send" => Send,
            "recv" => Recv,
            "ready" => Ready,
            "cycle" => Cycle,
            "if" => If,
            "else" => Else,
            "spawn" => Spawn,
            "reg" => Reg,
            "left" => Left,
            "right" => Right,
            "dprint" => Dprint,
            "struct" => Struct,
            "true" => True,
            "false" => False,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        use Keyword::*;
        match self {
            Chan => "chan",
            Proc => "proc",
            Loop => "loop",
            Recursive => "recursive",
            Recurse => "recurse",
            Let => "let",
            In => "in",
            Set => "set",
            Send => "send",
            Recv => "recv",
            Ready => "ready",
            Cycle => "cycle",
            If => "if",
            Else => "else",
            Spawn => "spawn",
            Reg => "reg",
            Left => "left",
            Right => "right",
            Dprint => "dprint",
            Struct => "struct",
            True => "true",
            False => "false",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sym {
    Wait,
    Semi,
    Assign,
    DashDash,
    At,
    AtDyn,
    Hash,
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Dot,
    Eq,
    Plus,
    Minus,
    Star,
    Tilde,
    Bang,
    Amp,
    Pipe,
    Caret,
    EqEq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    AndAnd,
    OrOr,
}

impl Sym {
    pub fn as_str(self) -> &'static str {
        use Sym::*;
        match self {
            Wait => ">>",
            Semi => ";",
            Assign => ":=",
            DashDash => "--",
            At => "@",
            AtDyn => "@dyn",
            Hash => "#",
            LBrace => "{",
            RBrace => "}",
            LParen => "(",
            RParen => ")",
            LBracket => "[",
            RBracket => "]",
            Comma => ",",
            Colon => ":",
            Dot => ".",
            Eq => "=",
            Plus => "+",
            Minus => "-",
            Star => "*",
            Tilde => "~",
            Bang => "!",
            Amp => "&",
            Pipe => "|",
            Caret => "^",
            EqEq => "==",
            Ne => "!=",
            Lt => "<",
            Gt => ">",
            Le => "<=",
            Ge => ">=",
            AndAnd => "&&",
            OrOr => "||",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Int(u128),
    /// `32'h100000`: explicit width and value.
    Sized {
        width: u32,
        value: u128,
    },
    Str(String),
    Kw(Keyword),
    Sym(Sym),
    Eof,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(s) => write!(f, "identifier `{s}`"),
            TokenKind::Int(v) => write!(f, "integer `{v}`"),
            TokenKind::Sized { width, value } => write!(f, "literal `{width}'d{value}`"),
            TokenKind::Str(_) => write!(f, "string literal"),
            TokenKind::Kw(k) => write!(f, "`{}`", k.as_str()),
            TokenKind::Sym(s) => write!(f, "`{}`", s.as_str()),
            TokenKind::Eof => write!(f, "end of file"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message}")]
pub struct LexError {
    pub message: String,
    pub span: Span,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits source text into tokens. The stream always ends with `Eof`.
pub fn tokenize(file: FileId, src: &str) -> Result<Vec<Token>, LexError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    let err = |lo: usize, hi: usize, msg: String| LexError { message: msg, span: Span::new(file, lo, hi) };
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if src[i..].starts_with("//") {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if src[i..].starts_with("/*") {
            let start = i;
            match src[i + 2..].find("*/") {
                Some(off) => i = i + 2 + off + 2,
                None => return Err(err(start, src.len(), "unterminated block comment".into())),
            }
            continue;
        }
        let start = i;
        if is_ident_start(c) {
            while i < bytes.len() && is_ident_char(bytes[i] as char) {
                i += 1;
            }
            let word = &src[start..i];
            let kind = match Keyword::lookup(word) {
                Some(k) => TokenKind::Kw(k),
                None => TokenKind::Ident(word.to_string()),
            };
            toks.push(Token { kind, span: Span::new(file, start, i) });
            continue;
        }
        if c.is_ascii_digit() {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'_') {
                i += 1;
            }
            let digits: String = src[start..i].chars().filter(|c| *c != '_').collect();
            if i < bytes.len() && bytes[i] == b'\'' {
                let width: u32 = digits.parse().map_err(|_| err(start, i, "literal width out of range".into()))?;
                i += 1;
                let radix = match bytes.get(i).map(|b| b.to_ascii_lowercase()) {
                    Some(b'b') => 2,
                    Some(b'o') => 8,
                    Some(b'd') => 10,
                    Some(b'h') => 16,
                    _ => return Err(err(start, (i + 1).min(src.len()), "expected base b, o, d or h after `'`".into())),
                };
                i += 1;
                let vstart = i;
                while i < bytes.len() && ((bytes[i] as char).is_digit(radix) || bytes[i] == b'_') {
                    i += 1;
                }
                if vstart == i {
                    return Err(err(start, i, "sized literal without digits".into()));
                }
                let vdigits: String = src[vstart..i].chars().filter(|c| *c != '_').collect();
                let value = u128::from_str_radix(&vdigits, radix)
                    .map_err(|_| err(start, i, "literal value out of range".into()))?;
                if width == 0 || width > 128 {
                    return Err(err(start, i, format!("unsupported literal width {width}")));
                }
                toks.push(Token { kind: TokenKind::Sized { width, value }, span: Span::new(file, start, i) });
            } else {
                let value: u128 = digits.parse().map_err(|_| err(start, i, "integer out of range".into()))?;
                toks.push(Token { kind: TokenKind::Int(value), span: Span::new(file, start, i) });
            }
            continue;
        }
        if c == '"' {
            i += 1;
            let mut s = String::new();
            loop {
                match bytes.get(i) {
                    None | Some(b'\n') => return Err(err(start, i, "unterminated string literal".into())),
                    Some(b'"') => {
                        i += 1;
                        break;
                    }
                    Some(b'\\') => {
                        let esc = bytes.get(i + 1).copied();
                        match esc {
                            Some(b'n') => s.push('\n'),
                            Some(b't') => s.push('\t'),
                            Some(b'"') => s.push('"'),
                            Some(b'\\') => s.push('\\'),
                            _ => return Err(err(i, i + 2, "unknown escape sequence".into())),
                        }
                        i += 2;
                    }
                    Some(_) => {
                        let ch = src[i..].chars().next().unwrap();
                        s.push(ch);
                        i += ch.len_utf8();
                    }
                }
            }
            toks.push(Token { kind: TokenKind::Str(s), span: Span::new(file, start, i) });
            continue;
        }
        let rest = &src[i..];
        if rest.starts_with("@dyn") && !rest[4..].chars().next().is_some_and(is_ident_char) {
            i += 4;
            toks.push(Token { kind: TokenKind::Sym(Sym::AtDyn), span: Span::new(file, start, i) });
            continue;
        }
        const TWO: [(&str, Sym); 10] = [
            (">>", Sym::Wait),
            (":=", Sym::Assign),
            ("--", Sym::DashDash),
            ("==", Sym::EqEq),
            ("!=", Sym::Ne),
            ("<=", Sym::Le),
            (">=", Sym::Ge),
            ("&&", Sym::AndAnd),
            ("||", Sym::OrOr),
            ("=>", Sym::Wait),
        ];
        if let Some((text, sym)) = TWO.iter().find(|(t, _)| rest.starts_with(t)) {
            if *text == "=>" {
                return Err(err(i, i + 2, "`=>` is not accepted; write `>>`".into()));
            }
            i += 2;
            toks.push(Token { kind: TokenKind::Sym(*sym), span: Span::new(file, start, i) });
            continue;
        }
        let sym = match c {
            ';' => Sym::Semi,
            '@' => Sym::At,
            '#' => Sym::Hash,
            '{' => Sym::LBrace,
            '}' => Sym::RBrace,
            '(' => Sym::LParen,
            ')' => Sym::RParen,
            '[' => Sym::LBracket,
            ']' => Sym::RBracket,
            ',' => Sym::Comma,
            ':' => Sym::Colon,
            '.' => Sym::Dot,
            '=' => Sym::Eq,
            '+' => Sym::Plus,
            '-' => Sym::Minus,
            '*' => Sym::Star,
            '~' => Sym::Tilde,
            '!' => Sym::Bang,
            '&' => Sym::Amp,
            '|' => Sym::Pipe,
            '^' => Sym::Caret,
            '<' => Sym::Lt,
            '>' => Sym::Gt,
            _ => {
                let ch = rest.chars().next().unwrap();
                return Err(err(i, i + ch.len_utf8(), format!("unrecognized character `{ch}`")));
            }
        };
        i += 1;
        toks.push(Token { kind: TokenKind::Sym(sym), span: Span::new(file, start, i) });
    }
    toks.push(Token { kind: TokenKind::Eof, span: Span::new(file, src.len(), src.len()) });
    Ok(toks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(s: &str) -> Vec<TokenKind> {
        tokenize(FileId(0), s).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn cycle_recurse() {
        assert_eq!(
            kinds("cycle 1 >> recurse"),
            vec![
                TokenKind::Kw(Keyword::Cycle),
                TokenKind::Int(1),
                TokenKind::Sym(Sym::Wait),
                TokenKind::Kw(Keyword::Recurse),
                TokenKind::Eof
            ]
        );
    }

    #[test]
    fn sync_pair() {
        assert_eq!(
            kinds("@#2-@dyn"),
            vec![
                TokenKind::Sym(Sym::At),
                TokenKind::Sym(Sym::Hash),
                TokenKind::Int(2),
                TokenKind::Sym(Sym::Minus),
                TokenKind::Sym(Sym::AtDyn),
                TokenKind::Eof
            ]
        );
    }

    #[test]
    fn at_dyn_prefix_of_ident() {
        assert_eq!(
            kinds("@dynamic"),
            vec![TokenKind::Sym(Sym::At), TokenKind::Ident("dynamic".into()), TokenKind::Eof]
        );
    }

    #[test]
    fn nested_braces_balance() {
        let ks = kinds("let v1 = { let r = recv ep1.rd_req >> { r } }");
        let open = ks.iter().filter(|k| **k == TokenKind::Sym(Sym::LBrace)).count();
        let close = ks.iter().filter(|k| **k == TokenKind::Sym(Sym::RBrace)).count();
        assert_eq!((open, close), (2, 2));
    }

    #[test]
    fn sized_literals_and_comments() {
        assert_eq!(
            kinds("32'h100000 /* x */ 1'b1 // tail\n 8'd3"),
            vec![
                TokenKind::Sized { width: 32, value: 0x100000 },
                TokenKind::Sized { width: 1, value: 1 },
                TokenKind::Sized { width: 8, value: 3 },
                TokenKind::Eof
            ]
        );
    }

    #[test]
    fn bad_byte_is_reported_with_span() {
        let e = tokenize(FileId(0), "cycle $").unwrap_err();
        assert_eq!((e.span.lo, e.span.hi), (6, 7));
    }
}
