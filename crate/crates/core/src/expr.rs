//! Coefficient expressions over the time variable `t`.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | identifier | func '(' expr ')' | '(' expr ')'
//! ```

use std::collections::BTreeMap;
use std::fmt;

use crate::error::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
        }
    }

    fn apply(self, x: f64) -> Result<f64, String> {
        match self {
            Func::Sin => Ok(x.sin()),
            Func::Cos => Ok(x.cos()),
            Func::Tan if x.cos().abs() < 1e-9 => Err(format!("tan pole at argument {x}")),
            Func::Tan => Ok(x.tan()),
            Func::Exp => Ok(x.exp()),
            Func::Ln if x <= 0.0 => Err(format!("ln of non-positive value {x}")),
            Func::Ln => Ok(x.ln()),
            Func::Sqrt if x < 0.0 => Err(format!("sqrt of negative value {x}")),
            Func::Sqrt => Ok(x.sqrt()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// The time variable `t`.
    Time,
    Const(String),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ParseError> {
        parse_expression(src)
    }

    /// Evaluates at time `t`; named constants must already be substituted,
    /// except the builtin `pi`.
    pub fn eval(&self, t: f64) -> Result<f64, String> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Time => t,
            Expr::Const(name) if name == "pi" => std::f64::consts::PI,
            Expr::Const(name) => return Err(format!("unbound constant `{name}`")),
            Expr::Neg(e) => -e.eval(t)?,
            Expr::Call(f, e) => f.apply(e.eval(t)?)?,
            Expr::Bin(op, l, r) => {
                let (l, r) = (l.eval(t)?, r.eval(t)?);
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div if r == 0.0 => return Err("division by zero".into()),
                    BinOp::Div => l / r,
                    BinOp::Pow => l.powf(r),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("non-finite value {v}"))
        }
    }

    /// Replaces named constants by their values. `pi` is kept unless the map overrides it.
    pub fn substitute(&self, constants: &BTreeMap<String, f64>) -> Result<Expr, String> {
        Ok(match self {
            Expr::Const(name) => match constants.get(name) {
                Some(v) => Expr::Num(*v),
                None if name == "pi" => self.clone(),
                None => return Err(format!("unknown constant `{name}`")),
            },
            Expr::Num(_) | Expr::Time => self.clone(),
            Expr::Neg(e) => Expr::Neg(Box::new(e.substitute(constants)?)),
            Expr::Call(f, e) => Expr::Call(*f, Box::new(e.substitute(constants)?)),
            Expr::Bin(op, l, r) => {
                Expr::Bin(*op, Box::new(l.substitute(constants)?), Box::new(r.substitute(constants)?))
            }
        })
    }

    /// True if `t` does not occur.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Time => false,
            Expr::Num(_) | Expr::Const(_) => true,
            Expr::Neg(e) | Expr::Call(_, e) => e.is_constant(),
            Expr::Bin(_, l, r) => l.is_constant() && r.is_constant(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Bin(BinOp::Pow, ..) => 4,
            Expr::Num(v) if v.is_sign_negative() => 3,
            _ => 5,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "(")?;
            self.write_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Num(v) if v.is_sign_negative() => write!(f, "-{:?}", -v),
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Time => write!(f, "t"),
            Expr::Const(name) => write!(f, "{name}"),
            Expr::Neg(e) => {
                write!(f, "-")?;
                e.write_at(f, 3)
            }
            Expr::Call(func, e) => {
                write!(f, "{}(", func.name())?;
                e.write_at(f, 0)?;
                write!(f, ")")
            }
            Expr::Bin(BinOp::Pow, l, r) => {
                l.write_at(f, 5)?;
                write!(f, "^")?;
                r.write_at(f, 3)
            }
            Expr::Bin(op, l, r) => {
                let p = self.precedence();
                l.write_at(f, p)?;
                write!(f, " {} ", op.symbol())?;
                r.write_at(f, p + 1)
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Num(v) => format!("number {v}"),
            Token::Ident(s) => format!("identifier `{s}`"),
            Token::Sym(c) => format!("'{c}'"),
            Token::End => "end of input".into(),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

const OPERAND: &[&str] = &["number", "identifier", "'('", "'-'"];

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    /// Returns the next token and its start offset without consuming it.
    fn peek(&mut self) -> Result<(Token, usize, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let Some(c) = rest.chars().next() else {
            return Ok((Token::End, start, start));
        };
        if c.is_ascii_digit() || (c == '.' && rest[1..].starts_with(|d: char| d.is_ascii_digit())) {
            let bytes = rest.as_bytes();
            let mut end = 0;
            while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                end += 1;
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut k = end + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    end = k;
                }
            }
            let text = &rest[..end];
            return match text.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok((Token::Num(v), start, start + end)),
                _ => Err(ParseError {
                    offset: start,
                    expected: vec!["finite number".into()],
                    found: format!("`{text}`"),
                }),
            };
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let end = rest.find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_')).unwrap_or(rest.len());
            return Ok((Token::Ident(rest[..end].to_string()), start, start + end));
        }
        if "+-*/^()".contains(c) {
            return Ok((Token::Sym(c), start, start + 1));
        }
        Err(ParseError { offset: start, expected: OPERAND.iter().map(|s| s.to_string()).collect(), found: format!("'{c}'") })
    }

    fn error(offset: usize, expected: &[&str], found: &Token) -> ParseError {
        ParseError { offset, expected: expected.iter().map(|s| s.to_string()).collect(), found: found.describe() }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let (tok, _, end) = self.peek()?;
            let op = match tok {
                Token::Sym('+') => BinOp::Add,
                Token::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos = end;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let (tok, _, end) = self.peek()?;
            let op = match tok {
                Token::Sym('*') => BinOp::Mul,
                Token::Sym('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos = end;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        let (tok, _, end) = self.peek()?;
        if tok == Token::Sym('-') {
            self.pos = end;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        let (tok, _, end) = self.peek()?;
        if tok == Token::Sym('^') {
            self.pos = end;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let (tok, start, end) = self.peek()?;
        match tok {
            Token::Num(v) => {
                self.pos = end;
                Ok(Expr::Num(v))
            }
            Token::Ident(name) => {
                self.pos = end;
                if let Some(func) = Func::from_name(&name) {
                    let (next, at, after) = self.peek()?;
                    if next != Token::Sym('(') {
                        return Err(Self::error(at, &["'('"], &next));
                    }
                    self.pos = after;
                    let arg = self.expr()?;
                    self.close_paren()?;
                    Ok(Expr::Call(func, Box::new(arg)))
                } else if name == "t" {
                    Ok(Expr::Time)
                } else {
                    Ok(Expr::Const(name))
                }
            }
            Token::Sym('(') => {
                self.pos = end;
                let inner = self.expr()?;
                self.close_paren()?;
                Ok(inner)
            }
            other => Err(Self::error(start, OPERAND, &other)),
        }
    }

    fn close_paren(&mut self) -> Result<(), ParseError> {
        let (tok, at, end) = self.peek()?;
        if tok != Token::Sym(')') {
            return Err(Self::error(at, &["operator", "')'"], &tok));
        }
        self.pos = end;
        Ok(())
    }
}

/// Parses a coefficient expression. Errors carry the byte offset of the
/// offending token.
pub fn parse_expression(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { src, pos: 0 };
    let e = p.expr()?;
    let (tok, at, _) = p.peek()?;
    if tok != Token::End {
        return Err(Parser::error(at, &["operator", "end of input"], &tok));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eval(src: &str, t: f64) -> f64 {
        parse_expression(src).unwrap().eval(t).unwrap()
    }

    #[test]
    fn arithmetic_examples() {
        assert_eq!(eval("0.5*sin(2*t)+1e-3", 0.0), 1e-3);
        assert_eq!(eval("2^3^2", 0.0), 512.0);
        assert_eq!(eval("-2^2", 0.0), -4.0);
        assert_eq!(eval("2^-1", 0.0), 0.5);
        assert_eq!(eval("8/4/2", 0.0), 1.0);
        assert_eq!(eval("1-2-3", 0.0), -4.0);
        assert_eq!(eval(" ( t ) * t ", 3.0), 9.0);
        assert_eq!(eval(".5E1", 0.0), 5.0);
        assert!((eval("cos(pi)", 0.0) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn function_needs_parentheses() {
        let e = parse_expression("sin t").unwrap_err();
        assert_eq!(e.offset, 4);
        assert_eq!(e.expected, vec!["'('"]);
    }

    #[test]
    fn error_offsets_are_byte_exact() {
        assert_eq!(parse_expression("").unwrap_err().offset, 0);
        assert_eq!(parse_expression("1 +").unwrap_err().offset, 3);
        assert_eq!(parse_expression("(1 + 2").unwrap_err().offset, 6);
        assert_eq!(parse_expression("1 2").unwrap_err().offset, 2);
        assert_eq!(parse_expression("2 * $").unwrap_err().offset, 4);
        assert_eq!(parse_expression("exp(1) )").unwrap_err().offset, 7);
        // multi-byte characters count in bytes
        assert_eq!(parse_expression("ω + 1").unwrap_err().offset, 0);
        assert_eq!(parse_expression("1 + ω").unwrap_err().offset, 4);
        assert_eq!(parse_expression("1e999").unwrap_err().expected, vec!["finite number"]);
    }

    #[test]
    fn domain_errors() {
        assert!(parse_expression("ln(t)").unwrap().eval(0.0).is_err());
        assert!(parse_expression("sqrt(t)").unwrap().eval(-1.0).is_err());
        assert!(parse_expression("tan(t)").unwrap().eval(std::f64::consts::FRAC_PI_2).is_err());
        assert!(parse_expression("1/t").unwrap().eval(0.0).is_err());
        assert!(parse_expression("m*t").unwrap().eval(1.0).is_err());
    }

    #[test]
    fn constants_substitute() {
        let mut c = BTreeMap::new();
        c.insert("m".to_string(), 2.0);
        let e = parse_expression("1/(2*m) + pi*0").unwrap().substitute(&c).unwrap();
        assert_eq!(e.eval(0.0).unwrap(), 0.25);
        assert!(parse_expression("k").unwrap().substitute(&c).is_err());
        assert!(e.is_constant());
        assert!(!parse_expression("t*m").unwrap().is_constant());
    }

    const CORPUS: &[&str] = &[
        "0", "1", "t", "-t", "--t", "1e-3", "2.5e10", "0.1", "pi", "m", "omega_c",
        "1 + 2", "1 - 2 - 3", "1 - (2 - 3)", "1 - (2 + 3)", "2 * 3 / 4", "2 / (3 * 4)", "2 / (3 / 4)",
        "2^3^2", "(2^3)^2", "-2^2", "(-2)^2", "2^-t", "2^(-t)", "-(1 + t)", "-(t * 2)",
        "sin(t)", "cos(2 * t)", "tan(t / 2)", "exp(-t)", "ln(1 + t^2)", "sqrt(1 + t)",
        "0.5 * sin(2 * t) + 1e-3", "m * omega^2 / 8", "1 / (2 * m)", "exp(-gamma * t) / (2 * m)",
        "e * Ex", "-e * Ey", "omega_c / 2", "-omega_c / 2", "sin(t) * cos(t)", "sin(cos(tan(t)))",
        "(1 + t) * (1 - t)", "t^2 - 2 * t + 1", "((t))", "-(-(-t))", "2 * -t", "t / -2",
        "exp(t)^2", "sqrt(t)^3^0.5", "-sin(t)^2", "a - b * c + d / e ^ f", "(a - b) * (c + d)",
        "1 / (1 + exp(-t))", "cos(omega * t) * A + B", "t * t * t", "t - -t", "3.25 * (t - 1)^2",
    ];

    #[test]
    fn corpus_round_trips() {
        assert!(CORPUS.len() >= 50);
        for src in CORPUS {
            let tree = parse_expression(src).unwrap();
            let printed = tree.to_string();
            let again = parse_expression(&printed).unwrap_or_else(|e| panic!("{src} -> {printed}: {e}"));
            assert_eq!(tree, again, "{src} -> {printed}");
        }
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0f64..1e6).prop_map(Expr::Num),
            Just(Expr::Time),
            "[a-df-z][a-z_]{0,3}".prop_filter_map("reserved", |s| {
                (s != "t" && Func::from_name(&s).is_none()).then_some(Expr::Const(s))
            }),
        ];
        leaf.prop_recursive(5, 40, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (inner.clone(), 0usize..6).prop_map(|(e, k)| {
                    let f = [Func::Sin, Func::Cos, Func::Tan, Func::Exp, Func::Ln, Func::Sqrt][k];
                    Expr::Call(f, Box::new(e))
                }),
                (inner.clone(), inner, 0usize..5).prop_map(|(l, r, k)| {
                    let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow][k];
                    Expr::Bin(op, Box::new(l), Box::new(r))
                }),
            ]
        })
    }

    proptest! {
        #[test]
        fn printed_trees_reparse(e in arb_expr()) {
            let printed = e.to_string();
            prop_assert_eq!(parse_expression(&printed).unwrap(), e);
        }
    }
}
