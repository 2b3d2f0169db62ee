//! Surface syntax for causal types.
//!
//! ```text
//! expr    -> par
//! par     -> seq ( "@" seq )*          ⅋
//! seq     -> tensor ( "<" tensor )*    ◁
//! tensor  -> postfix ( "*" postfix )*  ⊗
//! postfix -> primary "^"*              dual
//! primary -> "FO(" n ")" | "ANY(" n ")" | "CLA(" n ")" | "I"
//!          | "[" expr "," expr "]" | "(" expr ")"
//! ```
//!
//! All infix operators are left-associative. `⊗`, `⅋` and `◁` are accepted as
//! aliases of `*`, `@` and `<`.

use std::collections::HashMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{self, CausObject, TypeError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Atom {
    /// First-order system of dimension `d`.
    Fo(usize),
    /// `|A|` on a `d`-dimensional system: every normalized state.
    Any(usize),
    /// Classical system with `n` outcomes.
    Cla(usize),
    Unit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    Tensor,
    Par,
    Seq,
}

impl BinOp {
    fn precedence(self) -> u8 {
        match self {
            BinOp::Par => 1,
            BinOp::Seq => 2,
            BinOp::Tensor => 3,
        }
    }

    fn symbol(self) -> char {
        match self {
            BinOp::Par => '@',
            BinOp::Seq => '<',
            BinOp::Tensor => '*',
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TypeExpr {
    Atom(Atom),
    Dual(Box<TypeExpr>),
    Tensor(Box<TypeExpr>, Box<TypeExpr>),
    Par(Box<TypeExpr>, Box<TypeExpr>),
    Seq(Box<TypeExpr>, Box<TypeExpr>),
    Hom(Box<TypeExpr>, Box<TypeExpr>),
}

impl TypeExpr {
    pub fn fo(d: usize) -> Self {
        TypeExpr::Atom(Atom::Fo(d))
    }

    pub fn dual(e: TypeExpr) -> Self {
        TypeExpr::Dual(Box::new(e))
    }

    pub fn binary(op: BinOp, l: TypeExpr, r: TypeExpr) -> Self {
        let (l, r) = (Box::new(l), Box::new(r));
        match op {
            BinOp::Tensor => TypeExpr::Tensor(l, r),
            BinOp::Par => TypeExpr::Par(l, r),
            BinOp::Seq => TypeExpr::Seq(l, r),
        }
    }

    pub fn hom(l: TypeExpr, r: TypeExpr) -> Self {
        TypeExpr::Hom(Box::new(l), Box::new(r))
    }

    fn as_binary(&self) -> Option<(BinOp, &TypeExpr, &TypeExpr)> {
        match self {
            TypeExpr::Tensor(l, r) => Some((BinOp::Tensor, l, r)),
            TypeExpr::Par(l, r) => Some((BinOp::Par, l, r)),
            TypeExpr::Seq(l, r) => Some((BinOp::Seq, l, r)),
            _ => None,
        }
    }

    /// Dimension of the underlying system.
    pub fn dim(&self) -> usize {
        match self {
            TypeExpr::Atom(Atom::Fo(d) | Atom::Any(d) | Atom::Cla(d)) => *d,
            TypeExpr::Atom(Atom::Unit) => 1,
            TypeExpr::Dual(e) => e.dim(),
            TypeExpr::Tensor(l, r) | TypeExpr::Par(l, r) | TypeExpr::Seq(l, r) | TypeExpr::Hom(l, r) => {
                l.dim() * r.dim()
            }
        }
    }

    pub fn size(&self) -> usize {
        match self {
            TypeExpr::Atom(_) => 1,
            TypeExpr::Dual(e) => 1 + e.size(),
            TypeExpr::Tensor(l, r) | TypeExpr::Par(l, r) | TypeExpr::Seq(l, r) | TypeExpr::Hom(l, r) => {
                1 + l.size() + r.size()
            }
        }
    }
}

/// Canonical text: minimal parentheses, single spaces around infix operators.
impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::Atom(Atom::Fo(d)) => write!(f, "FO({d})"),
            TypeExpr::Atom(Atom::Any(d)) => write!(f, "ANY({d})"),
            TypeExpr::Atom(Atom::Cla(n)) => write!(f, "CLA({n})"),
            TypeExpr::Atom(Atom::Unit) => write!(f, "I"),
            TypeExpr::Dual(e) => {
                if e.as_binary().is_some() {
                    write!(f, "({e})^")
                } else {
                    write!(f, "{e}^")
                }
            }
            TypeExpr::Hom(l, r) => write!(f, "[{l}, {r}]"),
            _ => {
                let (op, l, r) = self.as_binary().expect("binary node");
                let p = op.precedence();
                match l.as_binary() {
                    Some((lo, _, _)) if lo.precedence() < p => write!(f, "({l})")?,
                    _ => write!(f, "{l}")?,
                }
                write!(f, " {} ", op.symbol())?;
                match r.as_binary() {
                    Some((ro, _, _)) if ro.precedence() <= p => write!(f, "({r})"),
                    _ => write!(f, "{r}"),
                }
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        offset: usize,
        expected: Vec<&'static str>,
        found: String,
    },
    #[error("semantic error at byte {offset}: {message}")]
    Semantic { offset: usize, message: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::Semantic { offset, .. } => *offset,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Word(String),
    Num(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Caret,
    Op(BinOp),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("`{w}`"),
            Tok::Num(n) => format!("`{n}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Caret => "`^`".into(),
            Tok::Op(op) => format!("`{}`", op.symbol()),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, ch)) = chars.peek() {
        let single = match ch {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            '^' => Some(Tok::Caret),
            '*' | '⊗' => Some(Tok::Op(BinOp::Tensor)),
            '@' | '⅋' => Some(Tok::Op(BinOp::Par)),
            '<' | '◁' => Some(Tok::Op(BinOp::Seq)),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, pos));
            chars.next();
        } else if ch.is_whitespace() {
            chars.next();
        } else if ch.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if !c.is_ascii_digit() {
                    break;
                }
                s.push(c);
                chars.next();
            }
            out.push((Tok::Num(s), pos));
        } else if ch.is_ascii_alphabetic() {
            let mut s = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if !c.is_ascii_alphanumeric() {
                    break;
                }
                s.push(c);
                chars.next();
            }
            out.push((Tok::Word(s), pos));
        } else {
            return Err(ParseError::Syntax {
                offset: pos,
                expected: vec!["a type expression"],
                found: format!("`{ch}`"),
            });
        }
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

const PRIMARY: &[&str] = &["`FO(`", "`ANY(`", "`CLA(`", "`I`", "`[`", "`(`"];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&'static str]) -> ParseError {
        ParseError::Syntax {
            offset: self.offset(),
            expected: expected.to_vec(),
            found: self.peek().describe(),
        }
    }

    fn expect(&mut self, t: Tok, name: &'static str) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[name]))
        }
    }

    fn expr(&mut self, min_prec: u8) -> Result<TypeExpr, ParseError> {
        let mut lhs = self.postfix()?;
        while let Tok::Op(op) = *self.peek() {
            let p = op.precedence();
            if p < min_prec {
                break;
            }
            self.bump();
            let rhs = self.expr(p + 1)?;
            lhs = TypeExpr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn postfix(&mut self) -> Result<TypeExpr, ParseError> {
        let mut e = self.primary()?;
        while *self.peek() == Tok::Caret {
            self.bump();
            e = TypeExpr::dual(e);
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<TypeExpr, ParseError> {
        match self.peek().clone() {
            Tok::Word(w) => {
                let start = self.offset();
                self.bump();
                let make: fn(usize) -> Atom = match w.as_str() {
                    "I" => return Ok(TypeExpr::Atom(Atom::Unit)),
                    "FO" => Atom::Fo,
                    "ANY" => Atom::Any,
                    "CLA" => Atom::Cla,
                    _ => {
                        return Err(ParseError::Syntax {
                            offset: start,
                            expected: PRIMARY.to_vec(),
                            found: format!("`{w}`"),
                        })
                    }
                };
                self.expect(Tok::LParen, "`(`")?;
                let n = self.number()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(TypeExpr::Atom(make(n)))
            }
            Tok::LBracket => {
                self.bump();
                let l = self.expr(0)?;
                self.expect(Tok::Comma, "`,`")?;
                let r = self.expr(0)?;
                self.expect(Tok::RBracket, "`]`")?;
                Ok(TypeExpr::hom(l, r))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr(0)?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            _ => Err(self.error(PRIMARY)),
        }
    }

    fn number(&mut self) -> Result<usize, ParseError> {
        let Tok::Num(s) = self.peek().clone() else {
            return Err(self.error(&["a dimension"]));
        };
        let offset = self.offset();
        self.bump();
        let n: usize = s.parse().map_err(|_| ParseError::Semantic {
            offset,
            message: format!("dimension {s} is too large"),
        })?;
        if n == 0 {
            return Err(ParseError::Semantic {
                offset,
                message: "dimensions must be at least 1".into(),
            });
        }
        Ok(n)
    }
}

pub fn parse_type(text: &str) -> Result<TypeExpr, ParseError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let e = p.expr(0)?;
    if *p.peek() != Tok::End {
        let mut expected = vec!["an infix operator", "`^`"];
        if p.pos > 0 {
            expected.push("end of input");
        }
        return Err(p.error(&expected));
    }
    Ok(e)
}

/// Elaborates expressions into objects, caching every subtree.
#[derive(Default)]
pub struct Elaborator {
    cache: HashMap<TypeExpr, CausObject>,
}

impl Elaborator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn elaborate(&mut self, e: &TypeExpr) -> Result<CausObject, TypeError> {
        if let Some(o) = self.cache.get(e) {
            return Ok(o.clone());
        }
        let o = match e {
            TypeExpr::Atom(Atom::Fo(d) | Atom::Any(d)) => types::mk_first_order(*d)?,
            TypeExpr::Atom(Atom::Cla(n)) => types::mk_classical(*n)?,
            TypeExpr::Atom(Atom::Unit) => types::unit(),
            TypeExpr::Dual(a) => types::dual_obj(&self.elaborate(a)?),
            TypeExpr::Tensor(a, b) => types::tensor_obj(&self.elaborate(a)?, &self.elaborate(b)?),
            TypeExpr::Par(a, b) => types::par_obj(&self.elaborate(a)?, &self.elaborate(b)?),
            TypeExpr::Seq(a, b) => types::seq_obj(&self.elaborate(a)?, &self.elaborate(b)?),
            TypeExpr::Hom(a, b) => types::hom_obj(&self.elaborate(a)?, &self.elaborate(b)?),
        };
        self.cache.insert(e.clone(), o.clone());
        Ok(o)
    }

    pub fn cached(&self) -> usize {
        self.cache.len()
    }
}

pub fn elaborate(e: &TypeExpr) -> Result<CausObject, TypeError> {
    Elaborator::new().elaborate(e)
}

/// Parses and elaborates in one step.
#[derive(Debug, Error)]
pub enum ReadTypeError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Type(#[from] TypeError),
}

pub fn read_type(text: &str) -> Result<CausObject, ReadTypeError> {
    Ok(elaborate(&parse_type(text)?)?)
}

/// A random expression whose underlying system has dimension at most
/// `max_dim`, with at most `depth` levels of nesting.
pub fn random_expr<R: Rng + ?Sized>(rng: &mut R, max_dim: usize, depth: usize) -> TypeExpr {
    let max_dim = max_dim.max(1);
    if depth == 0 || max_dim < 4 || rng.random_bool(0.3) {
        let e = random_atom(rng, max_dim);
        return if rng.random_bool(0.2) { TypeExpr::dual(e) } else { e };
    }
    let l = random_expr(rng, max_dim / 2, depth - 1);
    let r = random_expr(rng, max_dim / l.dim(), depth - 1);
    let e = match rng.random_range(0..4) {
        0 => TypeExpr::binary(BinOp::Tensor, l, r),
        1 => TypeExpr::binary(BinOp::Par, l, r),
        2 => TypeExpr::binary(BinOp::Seq, l, r),
        _ => TypeExpr::hom(l, r),
    };
    if rng.random_bool(0.15) {
        TypeExpr::dual(e)
    } else {
        e
    }
}

fn random_atom<R: Rng + ?Sized>(rng: &mut R, max_dim: usize) -> TypeExpr {
    let d = rng.random_range(1..=max_dim.min(3));
    TypeExpr::Atom(match rng.random_range(0..8) {
        0 => Atom::Unit,
        1 => Atom::Any(d),
        2 => Atom::Cla(d),
        _ => Atom::Fo(d),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::rng;

    fn fo(d: usize) -> TypeExpr {
        TypeExpr::fo(d)
    }

    #[test]
    fn precedence_goldens() {
        assert_eq!(
            parse_type("[FO(2),FO(2)] < [FO(2),FO(2)]").unwrap(),
            TypeExpr::binary(BinOp::Seq, TypeExpr::hom(fo(2), fo(2)), TypeExpr::hom(fo(2), fo(2)))
        );
        assert_eq!(parse_type("FO(2)^^").unwrap(), TypeExpr::dual(TypeExpr::dual(fo(2))));
        assert_eq!(
            parse_type("FO(2)*FO(2)@FO(3)").unwrap(),
            TypeExpr::binary(BinOp::Par, TypeExpr::binary(BinOp::Tensor, fo(2), fo(2)), fo(3))
        );
        assert_eq!(
            parse_type("FO(1) @ FO(2) < FO(3) * FO(4)").unwrap(),
            TypeExpr::binary(
                BinOp::Par,
                fo(1),
                TypeExpr::binary(BinOp::Seq, fo(2), TypeExpr::binary(BinOp::Tensor, fo(3), fo(4)))
            )
        );
        assert_eq!(
            parse_type("FO(1) < FO(2) < FO(3)").unwrap(),
            TypeExpr::binary(BinOp::Seq, TypeExpr::binary(BinOp::Seq, fo(1), fo(2)), fo(3))
        );
        assert_eq!(
            parse_type("FO(2) * FO(3)^").unwrap(),
            TypeExpr::binary(BinOp::Tensor, fo(2), TypeExpr::dual(fo(3)))
        );
    }

    #[test]
    fn unicode_aliases() {
        assert_eq!(parse_type("FO(2) ⊗ FO(2) ⅋ FO(3)").unwrap(), parse_type("FO(2)*FO(2)@FO(3)").unwrap());
        assert_eq!(parse_type("I ◁ CLA(2)").unwrap(), parse_type("I<CLA(2)").unwrap());
    }

    #[test]
    fn errors_carry_byte_offsets() {
        let e = parse_type("FO(2) * ").unwrap_err();
        assert_eq!(e.offset(), 8);
        assert_eq!(
            e.to_string(),
            "syntax error at byte 8: expected `FO(` or `ANY(` or `CLA(` or `I` or `[` or `(`, found end of input"
        );
        let e = parse_type("FO(0)").unwrap_err();
        assert!(matches!(e, ParseError::Semantic { offset: 3, .. }));
        // offsets count bytes, so the 3-byte ⊗ shifts what follows
        assert_eq!(parse_type("FO(2)⊗ $").unwrap_err().offset(), 9);
        assert_eq!(parse_type("[FO(2) FO(2)]").unwrap_err().offset(), 7);
        assert_eq!(parse_type("FO(2))").unwrap_err().offset(), 5);
        assert!(parse_type("XY(2)").is_err());
    }

    #[test]
    fn printing_is_canonical() {
        let e = parse_type("(FO(2)*FO(2))@(FO(3)<(I@ANY(2)))^").unwrap();
        assert_eq!(e.to_string(), "FO(2) * FO(2) @ (FO(3) < (I @ ANY(2)))^");
        let e = parse_type("FO(1) * (FO(2) * FO(3))").unwrap();
        assert_eq!(e.to_string(), "FO(1) * (FO(2) * FO(3))");
    }

    #[test]
    fn print_parse_round_trip() {
        let mut r = rng(12);
        for _ in 0..300 {
            let e = random_expr(&mut r, 64, 5);
            let text = e.to_string();
            assert_eq!(parse_type(&text).unwrap(), e, "{text}");
        }
    }

    #[test]
    fn elaboration_examples() {
        assert!(read_type("I").unwrap().approx_eq(&types::unit(), 1e-15));
        assert!(read_type("FO(2)*FO(2)").unwrap().is_first_order());
        assert_eq!(read_type("[FO(2),FO(2)]").unwrap().state_rank(), 12);
        assert!(read_type("ANY(3)").unwrap().approx_eq(&read_type("FO(3)").unwrap(), 1e-15));
    }

    #[test]
    fn elaboration_is_memoized() {
        let mut el = Elaborator::new();
        let e = parse_type("[FO(2),FO(2)] * [FO(2),FO(2)]").unwrap();
        el.elaborate(&e).unwrap();
        // FO(2), [FO(2),FO(2)], and the product
        assert_eq!(el.cached(), 3);
    }
}
