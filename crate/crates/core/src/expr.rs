//! Control-entry expressions: a small arithmetic language over the control
//! variables `u1, u2, ...` with `pi`, the functions `sin`, `cos`, `exp`, and
//! the usual four operators.
//!
//! Grammar (recursive descent, one token lookahead):
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := factor (("*" | "/") factor)*
//! factor  := "-" factor | primary
//! primary := NUMBER | "pi" | VAR | FUNC "(" expr ")" | "(" expr ")"
//! VAR     := "u" [1-9][0-9]*
//! FUNC    := "sin" | "cos" | "exp"
//! ```
//!
//! Evaluation comes in two flavors: plain `f64` and forward-mode dual numbers
//! carrying the exact gradient with respect to every control component.

use std::fmt;

use thiserror::Error;

/// Parse failure with the byte offset where it happened.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} at byte {offset}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character '{0}'")]
    UnexpectedChar(char),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("expected {0}")]
    Expected(&'static str),
    #[error("unknown identifier '{0}'")]
    UnknownIdentifier(String),
    #[error("control variable u{index} exceeds control dimension {dim}")]
    VarOutOfRange { index: usize, dim: usize },
    #[error("malformed number literal")]
    BadNumber,
    #[error("trailing input after expression")]
    TrailingInput,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("expression evaluated to a non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
        }
    }
}

/// Expression tree. `Var(i)` is the 1-based control component `u{i}`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Pi,
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Value together with its gradient with respect to the control vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DualScalar {
    pub value: f64,
    pub deriv: Vec<f64>,
}

impl DualScalar {
    pub fn constant(value: f64, dim: usize) -> Self {
        DualScalar { value, deriv: vec![0.0; dim] }
    }

    /// Seed for the `index`-th (0-based) of `dim` variables.
    pub fn variable(value: f64, index: usize, dim: usize) -> Self {
        let mut deriv = vec![0.0; dim];
        deriv[index] = 1.0;
        DualScalar { value, deriv }
    }

    fn zip(&self, other: &Self, v: f64, f: impl Fn(f64, f64) -> f64) -> Self {
        let deriv = self
            .deriv
            .iter()
            .zip(&other.deriv)
            .map(|(&a, &b)| f(a, b))
            .collect();
        DualScalar { value: v, deriv }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, self.value + other.value, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, self.value - other.value, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (x, y) = (self.value, other.value);
        self.zip(other, x * y, |a, b| a * y + x * b)
    }

    pub fn div(&self, other: &Self) -> Result<Self, EvalError> {
        if other.value == 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        let (x, y) = (self.value, other.value);
        Ok(self.zip(other, x / y, |a, b| (a * y - x * b) / (y * y)))
    }

    pub fn neg(&self) -> Self {
        DualScalar {
            value: -self.value,
            deriv: self.deriv.iter().map(|d| -d).collect(),
        }
    }

    fn chain(&self, v: f64, dv: f64) -> Self {
        DualScalar {
            value: v,
            deriv: self.deriv.iter().map(|d| d * dv).collect(),
        }
    }

    pub fn sin(&self) -> Self {
        self.chain(self.value.sin(), self.value.cos())
    }

    pub fn cos(&self) -> Self {
        self.chain(self.value.cos(), -self.value.sin())
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        self.chain(e, e)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Number(f64),
    Word(String),
}

fn lex(src: &str) -> Result<Vec<(Token, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push((Token::Plus, i));
                i += 1;
            }
            '-' => {
                out.push((Token::Minus, i));
                i += 1;
            }
            '*' => {
                out.push((Token::Star, i));
                i += 1;
            }
            '/' => {
                out.push((Token::Slash, i));
                i += 1;
            }
            '(' => {
                out.push((Token::LParen, i));
                i += 1;
            }
            ')' => {
                out.push((Token::RParen, i));
                i += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    let frac_start = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    if i == frac_start {
                        return Err(ParseError { kind: ParseErrorKind::BadNumber, offset: start });
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    let exp_start = j;
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    // Only consume the exponent if digits follow; otherwise
                    // the 'e' belongs to a (bad) identifier after the number.
                    if j > exp_start {
                        i = j;
                    }
                }
                let text = &src[start..i];
                let value: f64 = text
                    .parse()
                    .map_err(|_| ParseError { kind: ParseErrorKind::BadNumber, offset: start })?;
                out.push((Token::Number(value), start));
            }
            'a'..='z' | 'A'..='Z' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric()) {
                    i += 1;
                }
                out.push((Token::Word(src[start..i].to_string()), start));
            }
            other => {
                return Err(ParseError { kind: ParseErrorKind::UnexpectedChar(other), offset: i })
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [(Token, usize)],
    pos: usize,
    src_len: usize,
    dim: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.src_len, |(_, o)| *o)
    }

    fn bump(&mut self) -> Option<&(Token, usize)> {
        let t = self.tokens.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Token, label: &'static str) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if *t == want => {
                self.pos += 1;
                Ok(())
            }
            Some(_) => Err(ParseError { kind: ParseErrorKind::Expected(label), offset: self.offset() }),
            None => Err(ParseError { kind: ParseErrorKind::UnexpectedEnd, offset: self.src_len }),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
                }
                Some(Token::Minus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Some(Token::Slash) => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if matches!(self.peek(), Some(Token::Minus)) {
            self.pos += 1;
            let inner = self.factor()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let src_len = self.src_len;
        let dim = self.dim;
        match self.bump() {
            None => Err(ParseError { kind: ParseErrorKind::UnexpectedEnd, offset: src_len }),
            Some((Token::Number(v), _)) => Ok(Expr::Number(*v)),
            Some((Token::LParen, _)) => {
                let inner = self.expr()?;
                self.expect(Token::RParen, "closing parenthesis")?;
                Ok(inner)
            }
            Some((Token::Word(w), off)) => {
                let (w, off) = (w.clone(), *off);
                match w.as_str() {
                    "pi" => Ok(Expr::Pi),
                    "sin" | "cos" | "exp" => {
                        let f = match w.as_str() {
                            "sin" => Func::Sin,
                            "cos" => Func::Cos,
                            _ => Func::Exp,
                        };
                        self.expect(Token::LParen, "opening parenthesis after function")?;
                        let arg = self.expr()?;
                        self.expect(Token::RParen, "closing parenthesis")?;
                        Ok(Expr::Call(f, Box::new(arg)))
                    }
                    _ => match parse_var_name(&w) {
                        Some(index) => {
                            if index > dim {
                                Err(ParseError {
                                    kind: ParseErrorKind::VarOutOfRange { index, dim },
                                    offset: off,
                                })
                            } else {
                                Ok(Expr::Var(index))
                            }
                        }
                        None => Err(ParseError {
                            kind: ParseErrorKind::UnknownIdentifier(w),
                            offset: off,
                        }),
                    },
                }
            }
            Some((_, off)) => {
                Err(ParseError { kind: ParseErrorKind::Expected("a value"), offset: *off })
            }
        }
    }
}

/// `u` followed by a decimal index with no leading zero.
fn parse_var_name(w: &str) -> Option<usize> {
    let rest = w.strip_prefix('u')?;
    let mut chars = rest.chars();
    let first = chars.next()?;
    if !('1'..='9').contains(&first) || !chars.all(|c| c.is_ascii_digit()) {
        return None;
    }
    rest.parse().ok()
}

/// Parses one expression over `dim` control variables. The whole input must
/// be consumed; anything left over is an error at its byte offset.
pub fn parse_expression(src: &str, dim: usize) -> Result<Expr, ParseError> {
    let tokens = lex(src)?;
    let mut p = Parser { tokens: &tokens, pos: 0, src_len: src.len(), dim };
    let e = p.expr()?;
    if p.pos != tokens.len() {
        return Err(ParseError { kind: ParseErrorKind::TrailingInput, offset: p.offset() });
    }
    Ok(e)
}

/// Plain evaluation at the control point `u` (0-based slice for `u1..`).
pub fn evaluate(expr: &Expr, u: &[f64]) -> Result<f64, EvalError> {
    let v = eval_inner(expr, u)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite)
    }
}

fn eval_inner(expr: &Expr, u: &[f64]) -> Result<f64, EvalError> {
    Ok(match expr {
        Expr::Number(v) => *v,
        Expr::Pi => std::f64::consts::PI,
        Expr::Var(i) => u[*i - 1],
        Expr::Neg(e) => -eval_inner(e, u)?,
        Expr::Add(a, b) => eval_inner(a, u)? + eval_inner(b, u)?,
        Expr::Sub(a, b) => eval_inner(a, u)? - eval_inner(b, u)?,
        Expr::Mul(a, b) => eval_inner(a, u)? * eval_inner(b, u)?,
        Expr::Div(a, b) => {
            let d = eval_inner(b, u)?;
            if d == 0.0 {
                return Err(EvalError::DivisionByZero);
            }
            eval_inner(a, u)? / d
        }
        Expr::Call(f, e) => {
            let x = eval_inner(e, u)?;
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Exp => x.exp(),
            }
        }
    })
}

/// Dual-number evaluation: value plus the exact gradient with respect to all
/// `u.len()` control components, by the chain rule at every node.
pub fn evaluate_dual(expr: &Expr, u: &[f64]) -> Result<DualScalar, EvalError> {
    let dim = u.len();
    let out = eval_dual_inner(expr, u, dim)?;
    if out.value.is_finite() && out.deriv.iter().all(|d| d.is_finite()) {
        Ok(out)
    } else {
        Err(EvalError::NonFinite)
    }
}

fn eval_dual_inner(expr: &Expr, u: &[f64], dim: usize) -> Result<DualScalar, EvalError> {
    Ok(match expr {
        Expr::Number(v) => DualScalar::constant(*v, dim),
        Expr::Pi => DualScalar::constant(std::f64::consts::PI, dim),
        Expr::Var(i) => DualScalar::variable(u[*i - 1], *i - 1, dim),
        Expr::Neg(e) => eval_dual_inner(e, u, dim)?.neg(),
        Expr::Add(a, b) => eval_dual_inner(a, u, dim)?.add(&eval_dual_inner(b, u, dim)?),
        Expr::Sub(a, b) => eval_dual_inner(a, u, dim)?.sub(&eval_dual_inner(b, u, dim)?),
        Expr::Mul(a, b) => eval_dual_inner(a, u, dim)?.mul(&eval_dual_inner(b, u, dim)?),
        Expr::Div(a, b) => eval_dual_inner(a, u, dim)?.div(&eval_dual_inner(b, u, dim)?)?,
        Expr::Call(f, e) => {
            let x = eval_dual_inner(e, u, dim)?;
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Exp => x.exp(),
            }
        }
    })
}

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            _ => 4,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let prec = self.precedence();
        let parens = prec < min;
        if parens {
            write!(f, "(")?;
        }
        match self {
            Expr::Number(v) => write!(f, "{v}")?,
            Expr::Pi => write!(f, "pi")?,
            Expr::Var(i) => write!(f, "u{i}")?,
            Expr::Neg(e) => {
                write!(f, "-")?;
                e.fmt_prec(f, 3)?;
            }
            Expr::Add(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, "+")?;
                b.fmt_prec(f, 2)?;
            }
            Expr::Sub(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, "-")?;
                b.fmt_prec(f, 2)?;
            }
            Expr::Mul(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, "*")?;
                b.fmt_prec(f, 3)?;
            }
            Expr::Div(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, "/")?;
                b.fmt_prec(f, 3)?;
            }
            Expr::Call(func, e) => {
                write!(f, "{}(", func.name())?;
                e.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
        }
        if parens {
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// Prints in the same grammar the parser accepts, with minimal parentheses,
/// so `parse(print(parse(s)))` equals `parse(s)` node for node.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}
