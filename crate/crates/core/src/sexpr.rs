//! S-expression reader for SyGuS-IF / SMT-LIB text.

use std::fmt;

use num_bigint::BigUint;

use crate::term::{FRESH_MARKER, MAX_BV_WIDTH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub offset: usize,
    /// 1-based.
    pub line: usize,
    /// 1-based, in characters.
    pub column: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SourceSpan {
    pub start: Pos,
    pub end: Pos,
}

impl SourceSpan {
    pub fn point(p: Pos) -> SourceSpan {
        SourceSpan { start: p, end: p }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start.line, self.start.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Atom {
    Symbol(String),
    Keyword(String),
    Numeral(BigUint),
    Str(String),
    /// `#b...` or `#x...`; width is the digit count times 1 or 4.
    BitVec { width: u32, bits: u128 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SExprKind {
    Atom(Atom),
    List(Vec<SExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SExpr {
    pub kind: SExprKind,
    pub span: SourceSpan,
}

impl SExpr {
    pub fn as_symbol(&self) -> Option<&str> {
        match &self.kind {
            SExprKind::Atom(Atom::Symbol(s)) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match &self.kind {
            SExprKind::List(items) => Some(items),
            _ => None,
        }
    }
}

impl fmt::Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            SExprKind::Atom(Atom::Symbol(s)) => write!(f, "{}", crate::printer::print_symbol(s)),
            SExprKind::Atom(Atom::Keyword(k)) => write!(f, ":{k}"),
            SExprKind::Atom(Atom::Numeral(n)) => write!(f, "{n}"),
            SExprKind::Atom(Atom::Str(s)) => write!(f, "{}", crate::printer::print_string(s)),
            SExprKind::Atom(Atom::BitVec { width, bits }) => {
                write!(f, "#b{:0w$b}", bits, w = *width as usize)
            }
            SExprKind::List(items) => {
                write!(f, "(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{it}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{span}: {message}")]
pub struct LexError {
    pub message: String,
    pub span: SourceSpan,
}

struct Reader<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: Pos,
}

fn is_symbol_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || b"~!@$%^&*_-+=<>.?/".contains(&c)
}

impl<'a> Reader<'a> {
    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos.offset).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos.offset += 1;
        if c == b'\n' {
            self.pos.line += 1;
            self.pos.column = 1;
        } else if (c & 0xC0) != 0x80 {
            self.pos.column += 1;
        }
        Some(c)
    }

    fn err<T>(&self, start: Pos, message: impl Into<String>) -> Result<T, LexError> {
        Err(LexError { message: message.into(), span: SourceSpan { start, end: self.pos } })
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_ascii_whitespace() {
                self.bump();
            } else if c == b';' {
                while let Some(c) = self.bump() {
                    if c == b'\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<Option<SExpr>, LexError> {
        self.skip_trivia();
        let start = self.pos;
        let Some(c) = self.peek() else { return Ok(None) };
        let kind = match c {
            b'(' => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.peek() {
                        None => return self.err(start, "unbalanced parentheses: missing `)`"),
                        Some(b')') => {
                            self.bump();
                            break;
                        }
                        Some(_) => items.push(self.read()?.expect("input remains")),
                    }
                }
                SExprKind::List(items)
            }
            b')' => {
                self.bump();
                return self.err(start, "unbalanced parentheses: unexpected `)`");
            }
            b'"' => SExprKind::Atom(Atom::Str(self.read_string(start)?)),
            b'|' => {
                self.bump();
                let body_start = self.pos.offset;
                loop {
                    match self.bump() {
                        None => return self.err(start, "unterminated quoted symbol"),
                        Some(b'|') => break,
                        Some(b'\\') => return self.err(start, "`\\` not allowed in quoted symbol"),
                        Some(_) => {}
                    }
                }
                let name = &self.src[body_start..self.pos.offset - 1];
                self.check_reserved(start, name)?;
                SExprKind::Atom(Atom::Symbol(name.to_string()))
            }
            b'#' => self.read_bitvec(start)?,
            b':' => {
                self.bump();
                let name = self.take_while(is_symbol_char);
                if name.is_empty() {
                    return self.err(start, "empty keyword");
                }
                SExprKind::Atom(Atom::Keyword(name.to_string()))
            }
            c if c.is_ascii_digit() => {
                let digits = self.take_while(|c| c.is_ascii_digit());
                if self.peek() == Some(b'.') {
                    return self.err(start, "decimal literals are not supported");
                }
                if digits.len() > 1 && digits.starts_with('0') {
                    return self.err(start, format!("numeral `{digits}` has a leading zero"));
                }
                if self.peek().is_some_and(is_symbol_char) {
                    return self.err(start, "symbols may not start with a digit");
                }
                SExprKind::Atom(Atom::Numeral(digits.parse().expect("ascii digits")))
            }
            c if is_symbol_char(c) => {
                let name = self.take_while(is_symbol_char);
                self.check_reserved(start, name)?;
                SExprKind::Atom(Atom::Symbol(name.to_string()))
            }
            _ => {
                let ch = self.src[self.pos.offset..].chars().next().unwrap();
                self.bump();
                return self.err(start, format!("unexpected character `{ch}`"));
            }
        };
        Ok(Some(SExpr { kind, span: SourceSpan { start, end: self.pos } }))
    }

    fn check_reserved(&self, start: Pos, name: &str) -> Result<(), LexError> {
        if name.contains(FRESH_MARKER) {
            return self.err(start, format!("`{FRESH_MARKER}` is reserved in identifiers"));
        }
        Ok(())
    }

    fn take_while(&mut self, pred: impl Fn(u8) -> bool) -> &'a str {
        let s = self.pos.offset;
        while self.peek().is_some_and(&pred) {
            self.bump();
        }
        &self.src[s..self.pos.offset]
    }

    fn read_bitvec(&mut self, start: Pos) -> Result<SExprKind, LexError> {
        self.bump();
        let (radix, bits_per) = match self.bump() {
            Some(b'b') => (2, 1),
            Some(b'x') => (16, 4),
            _ => return self.err(start, "expected `#b` or `#x` literal"),
        };
        let digits = self.take_while(|c| c.is_ascii_alphanumeric());
        let width = digits.len() as u32 * bits_per;
        if width == 0 {
            return self.err(start, "empty bit-vector literal");
        }
        if width > MAX_BV_WIDTH {
            return self.err(start, format!("bit-vector literal wider than {MAX_BV_WIDTH} bits"));
        }
        match u128::from_str_radix(digits, radix) {
            Ok(bits) => Ok(SExprKind::Atom(Atom::BitVec { width, bits })),
            Err(_) => self.err(start, format!("malformed bit-vector literal `{digits}`")),
        }
    }

    /// SMT-LIB 2.6 strings: `""` escapes a quote, `\u{h..}` and `\udddd`
    /// escape code points; everything else must be printable ASCII.
    fn read_string(&mut self, start: Pos) -> Result<String, LexError> {
        self.bump();
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return self.err(start, "unterminated string literal"),
                Some(b'"') => {
                    if self.peek() == Some(b'"') {
                        self.bump();
                        out.push('"');
                    } else {
                        return Ok(out);
                    }
                }
                Some(b'\\') if self.peek() == Some(b'u') => {
                    let rest = &self.src[self.pos.offset + 1..];
                    let (hex, consumed) = if let Some(r) = rest.strip_prefix('{') {
                        match r.find('}') {
                            Some(end) if (1..=5).contains(&end) => (&r[..end], end + 2),
                            _ => ("", 0),
                        }
                    } else if rest.len() >= 4 && rest.as_bytes()[..4].iter().all(u8::is_ascii_hexdigit) {
                        (&rest[..4], 4)
                    } else {
                        ("", 0)
                    };
                    match u32::from_str_radix(hex, 16).ok().and_then(char::from_u32) {
                        Some(ch) if consumed > 0 => {
                            for _ in 0..=consumed {
                                self.bump();
                            }
                            out.push(ch);
                        }
                        _ => out.push('\\'),
                    }
                }
                Some(c) if (0x20..0x7f).contains(&c) => out.push(c as char),
                Some(b'\n') | Some(b'\t') | Some(b'\r') => {
                    return self.err(start, "string literals must be printable ASCII");
                }
                Some(_) => return self.err(start, "string literals must be printable ASCII"),
            }
        }
    }
}

/// Reads every top-level s-expression in `src`.
pub fn parse_all(src: &str) -> Result<Vec<SExpr>, LexError> {
    let mut r = Reader { src, bytes: src.as_bytes(), pos: Pos { offset: 0, line: 1, column: 1 } };
    let mut out = Vec::new();
    while let Some(e) = r.read()? {
        out.push(e);
    }
    Ok(out)
}
