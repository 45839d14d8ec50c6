//! Scalar expression language: parser, evaluator, serializer.
//!
//! Metric components, structure-endomorphism entries, and connection
//! coefficients are supplied as textual expressions in the chart coordinates.
//! The grammar is deliberately small:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-'? atom ('^' integer)?
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! `-x^2` parses as `-(x^2)`, exponents are (possibly negative) integers, and
//! there is no implicit multiplication. Identifiers are either coordinate
//! names (resolved against the chart at parse time) or one of the built-in
//! unary functions.

use std::fmt;

use thiserror::Error;

/// Built-in unary functions usable in expressions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryFn {
    Exp,
    Log,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Tanh,
    Sqrt,
}

impl UnaryFn {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Self::Exp,
            "log" => Self::Log,
            "sin" => Self::Sin,
            "cos" => Self::Cos,
            "sinh" => Self::Sinh,
            "cosh" => Self::Cosh,
            "tanh" => Self::Tanh,
            "sqrt" => Self::Sqrt,
            _ => return None,
        })
    }

    /// Name as it appears in source text.
    pub fn name(self) -> &'static str {
        match self {
            Self::Exp => "exp",
            Self::Log => "log",
            Self::Sin => "sin",
            Self::Cos => "cos",
            Self::Sinh => "sinh",
            Self::Cosh => "cosh",
            Self::Tanh => "tanh",
            Self::Sqrt => "sqrt",
        }
    }
}

/// Parsed scalar expression over a fixed coordinate chart.
///
/// Coordinates are stored by index into the chart's coordinate list, so
/// evaluation needs no name lookups.
#[derive(Clone, Debug, PartialEq)]
pub enum ScalarExpr {
    Const(f64),
    /// Coordinate by position in the chart.
    Coord(usize),
    Add(Box<ScalarExpr>, Box<ScalarExpr>),
    Sub(Box<ScalarExpr>, Box<ScalarExpr>),
    Mul(Box<ScalarExpr>, Box<ScalarExpr>),
    Div(Box<ScalarExpr>, Box<ScalarExpr>),
    Neg(Box<ScalarExpr>),
    /// Integer power; the exponent may be negative.
    Pow(Box<ScalarExpr>, i32),
    Apply(UnaryFn, Box<ScalarExpr>),
}

/// Error produced by [`parse_expr`], carrying the byte offset into the source.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("{message} at byte {offset}")]
pub struct ParseError {
    pub message: String,
    pub offset: usize,
}

impl ParseError {
    fn new(message: impl Into<String>, offset: usize) -> Self {
        Self {
            message: message.into(),
            offset,
        }
    }
}

/// Error raised when evaluation hits a point outside an expression's domain.
#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("{func}({arg}) is outside the function domain")]
    Domain { func: &'static str, arg: f64 },
    #[error("zero raised to the negative power {exponent}")]
    ZeroToNegativePower { exponent: i32 },
    #[error("evaluation produced a non-finite value")]
    NonFinite,
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Next token plus the byte offset where it starts.
    fn next(&mut self) -> Result<Option<(Token, usize)>, ParseError> {
        self.skip_ws();
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let start = self.pos;
        let b = self.src[start];
        let tok = match b {
            b'+' => Token::Plus,
            b'-' => Token::Minus,
            b'*' => Token::Star,
            b'/' => Token::Slash,
            b'^' => Token::Caret,
            b'(' => Token::LParen,
            b')' => Token::RParen,
            b'0'..=b'9' | b'.' => return self.lex_number(start).map(Some),
            b if b.is_ascii_alphabetic() || b == b'_' => return self.lex_ident(start).map(Some),
            other => {
                return Err(ParseError::new(
                    format!("unexpected character '{}'", other as char),
                    start,
                ))
            }
        };
        self.pos += 1;
        Ok(Some((tok, start)))
    }

    fn lex_number(&mut self, start: usize) -> Result<(Token, usize), ParseError> {
        let mut end = start;
        while end < self.src.len() && self.src[end].is_ascii_digit() {
            end += 1;
        }
        if end < self.src.len() && self.src[end] == b'.' {
            end += 1;
            let frac_start = end;
            while end < self.src.len() && self.src[end].is_ascii_digit() {
                end += 1;
            }
            if end == frac_start {
                return Err(ParseError::new("expected digits after decimal point", end));
            }
        }
        if end < self.src.len() && (self.src[end] == b'e' || self.src[end] == b'E') {
            let mut exp_end = end + 1;
            if exp_end < self.src.len() && (self.src[exp_end] == b'+' || self.src[exp_end] == b'-')
            {
                exp_end += 1;
            }
            let digits_start = exp_end;
            while exp_end < self.src.len() && self.src[exp_end].is_ascii_digit() {
                exp_end += 1;
            }
            if exp_end == digits_start {
                return Err(ParseError::new("expected digits in exponent", digits_start));
            }
            end = exp_end;
        }
        let text = std::str::from_utf8(&self.src[start..end]).expect("ascii slice");
        let value: f64 = text
            .parse()
            .map_err(|_| ParseError::new(format!("invalid number '{text}'"), start))?;
        self.pos = end;
        Ok((Token::Number(value), start))
    }

    fn lex_ident(&mut self, start: usize) -> Result<(Token, usize), ParseError> {
        let mut end = start;
        while end < self.src.len()
            && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
        {
            end += 1;
        }
        let text = std::str::from_utf8(&self.src[start..end]).expect("ascii slice");
        self.pos = end;
        Ok((Token::Ident(text.to_owned()), start))
    }
}

struct Parser<'a> {
    tokens: Vec<(Token, usize)>,
    cursor: usize,
    coords: &'a [String],
    src_len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&(Token, usize)> {
        self.tokens.get(self.cursor)
    }

    fn advance(&mut self) -> Option<(Token, usize)> {
        let tok = self.tokens.get(self.cursor).cloned();
        if tok.is_some() {
            self.cursor += 1;
        }
        tok
    }

    fn current_offset(&self) -> usize {
        self.peek().map(|(_, off)| *off).unwrap_or(self.src_len)
    }

    fn parse_expr(&mut self) -> Result<ScalarExpr, ParseError> {
        let mut lhs = self.parse_term()?;
        while let Some((tok, _)) = self.peek() {
            let op = match tok {
                Token::Plus => true,
                Token::Minus => false,
                _ => break,
            };
            self.advance();
            let rhs = self.parse_term()?;
            lhs = if op {
                ScalarExpr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                ScalarExpr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn parse_term(&mut self) -> Result<ScalarExpr, ParseError> {
        let mut lhs = self.parse_factor()?;
        while let Some((tok, _)) = self.peek() {
            let mul = match tok {
                Token::Star => true,
                Token::Slash => false,
                _ => break,
            };
            self.advance();
            let rhs = self.parse_factor()?;
            lhs = if mul {
                ScalarExpr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                ScalarExpr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn parse_factor(&mut self) -> Result<ScalarExpr, ParseError> {
        let negated = matches!(self.peek(), Some((Token::Minus, _)));
        if negated {
            self.advance();
        }
        let atom = self.parse_atom()?;
        let powered = if matches!(self.peek(), Some((Token::Caret, _))) {
            self.advance();
            let exponent = self.parse_integer()?;
            ScalarExpr::Pow(Box::new(atom), exponent)
        } else {
            atom
        };
        // The leading minus binds more loosely than '^': -x^2 is -(x^2).
        Ok(if negated {
            ScalarExpr::Neg(Box::new(powered))
        } else {
            powered
        })
    }

    fn parse_integer(&mut self) -> Result<i32, ParseError> {
        let negative = matches!(self.peek(), Some((Token::Minus, _)));
        if negative {
            self.advance();
        }
        let offset = self.current_offset();
        match self.advance() {
            Some((Token::Number(v), _)) => {
                if v.fract() != 0.0 || v.abs() > i32::MAX as f64 {
                    return Err(ParseError::new("exponent must be an integer", offset));
                }
                let n = v as i32;
                Ok(if negative { -n } else { n })
            }
            _ => Err(ParseError::new("expected integer exponent after '^'", offset)),
        }
    }

    fn parse_atom(&mut self) -> Result<ScalarExpr, ParseError> {
        let offset = self.current_offset();
        match self.advance() {
            Some((Token::Number(v), _)) => Ok(ScalarExpr::Const(v)),
            Some((Token::Ident(name), off)) => {
                if matches!(self.peek(), Some((Token::LParen, _))) {
                    let func = UnaryFn::from_name(&name).ok_or_else(|| {
                        ParseError::new(format!("unknown function '{name}'"), off)
                    })?;
                    self.advance(); // consume '('
                    let arg = self.parse_expr()?;
                    self.expect_rparen()?;
                    Ok(ScalarExpr::Apply(func, Box::new(arg)))
                } else {
                    let idx = self
                        .coords
                        .iter()
                        .position(|c| c == &name)
                        .ok_or_else(|| {
                            ParseError::new(format!("unknown identifier '{name}'"), off)
                        })?;
                    Ok(ScalarExpr::Coord(idx))
                }
            }
            Some((Token::LParen, _)) => {
                let inner = self.parse_expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Some((tok, off)) => Err(ParseError::new(
                format!("unexpected token {tok:?}"),
                off,
            )),
            None => Err(ParseError::new("unexpected end of input", offset)),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        let offset = self.current_offset();
        match self.advance() {
            Some((Token::RParen, _)) => Ok(()),
            _ => Err(ParseError::new("expected ')'", offset)),
        }
    }
}

/// Parse `src` against a coordinate chart. Every identifier must be either a
/// chart coordinate or a built-in function name; anything else errors with
/// the byte offset where it occurs.
pub fn parse_expr(src: &str, coords: &[String]) -> Result<ScalarExpr, ParseError> {
    let mut lexer = Lexer::new(src);
    let mut tokens = Vec::new();
    while let Some(tok) = lexer.next()? {
        tokens.push(tok);
    }
    if tokens.is_empty() {
        return Err(ParseError::new("empty expression", 0));
    }
    let mut parser = Parser {
        tokens,
        cursor: 0,
        coords,
        src_len: src.len(),
    };
    let expr = parser.parse_expr()?;
    if let Some((tok, off)) = parser.peek() {
        return Err(ParseError::new(
            format!("unexpected trailing token {tok:?}"),
            *off,
        ));
    }
    Ok(expr)
}

impl ScalarExpr {
    /// Evaluate at a point, reporting domain violations (division by zero,
    /// `log`/`sqrt` of non-positive arguments, negative powers of zero, or any
    /// non-finite intermediate) instead of propagating NaN.
    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        let v = self.eval_inner(point)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    fn eval_inner(&self, point: &[f64]) -> Result<f64, EvalError> {
        Ok(match self {
            Self::Const(c) => *c,
            Self::Coord(i) => point[*i],
            Self::Add(a, b) => a.eval_inner(point)? + b.eval_inner(point)?,
            Self::Sub(a, b) => a.eval_inner(point)? - b.eval_inner(point)?,
            Self::Mul(a, b) => a.eval_inner(point)? * b.eval_inner(point)?,
            Self::Div(a, b) => {
                let denom = b.eval_inner(point)?;
                if denom == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                a.eval_inner(point)? / denom
            }
            Self::Neg(a) => -a.eval_inner(point)?,
            Self::Pow(a, n) => {
                let base = a.eval_inner(point)?;
                if base == 0.0 && *n < 0 {
                    return Err(EvalError::ZeroToNegativePower { exponent: *n });
                }
                base.powi(*n)
            }
            Self::Apply(func, a) => {
                let arg = a.eval_inner(point)?;
                match func {
                    UnaryFn::Exp => arg.exp(),
                    UnaryFn::Log => {
                        if arg <= 0.0 {
                            return Err(EvalError::Domain { func: "log", arg });
                        }
                        arg.ln()
                    }
                    UnaryFn::Sin => arg.sin(),
                    UnaryFn::Cos => arg.cos(),
                    UnaryFn::Sinh => arg.sinh(),
                    UnaryFn::Cosh => arg.cosh(),
                    UnaryFn::Tanh => arg.tanh(),
                    UnaryFn::Sqrt => {
                        if arg < 0.0 {
                            return Err(EvalError::Domain { func: "sqrt", arg });
                        }
                        arg.sqrt()
                    }
                }
            }
        })
    }

    /// True when the expression contains no coordinate references, i.e. it
    /// evaluates to the same value at every point.
    pub fn is_constant(&self) -> bool {
        match self {
            Self::Const(_) => true,
            Self::Coord(_) => false,
            Self::Add(a, b) | Self::Sub(a, b) | Self::Mul(a, b) | Self::Div(a, b) => {
                a.is_constant() && b.is_constant()
            }
            Self::Neg(a) | Self::Pow(a, _) | Self::Apply(_, a) => a.is_constant(),
        }
    }

    /// Render to text that [`parse_expr`] accepts and parses back to the same
    /// tree. Fully parenthesized, so no precedence reasoning is needed.
    pub fn serialize(&self, coords: &[String]) -> String {
        let mut out = String::new();
        self.write(&mut out, coords);
        out
    }

    fn write(&self, out: &mut String, coords: &[String]) {
        use fmt::Write;
        match self {
            Self::Const(c) => {
                // {:?} prints the shortest digits that round-trip through the
                // grammar's number syntax (e.g. "0.1", "1.0", "1e-7").
                if c.is_sign_negative() {
                    write!(out, "(-{:?})", -c).unwrap();
                } else {
                    write!(out, "{c:?}").unwrap();
                }
            }
            Self::Coord(i) => out.push_str(&coords[*i]),
            Self::Add(a, b) => Self::write_binary(out, coords, a, '+', b),
            Self::Sub(a, b) => Self::write_binary(out, coords, a, '-', b),
            Self::Mul(a, b) => Self::write_binary(out, coords, a, '*', b),
            Self::Div(a, b) => Self::write_binary(out, coords, a, '/', b),
            Self::Neg(a) => {
                out.push_str("(-");
                a.write(out, coords);
                out.push(')');
            }
            Self::Pow(a, n) => {
                out.push('(');
                a.write(out, coords);
                write!(out, "^{n}").unwrap();
                out.push(')');
            }
            Self::Apply(func, a) => {
                out.push_str(func.name());
                out.push('(');
                a.write(out, coords);
                out.push(')');
            }
        }
    }

    fn write_binary(
        out: &mut String,
        coords: &[String],
        a: &ScalarExpr,
        op: char,
        b: &ScalarExpr,
    ) {
        out.push('(');
        a.write(out, coords);
        out.push(' ');
        out.push(op);
        out.push(' ');
        b.write(out, coords);
        out.push(')');
    }
}

/// Convenience constructor for a constant expression.
pub fn constant(v: f64) -> ScalarExpr {
    ScalarExpr::Const(v)
}
