//! Coefficient expressions in `x` and `t`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | 'x' | 't' | func '(' sum ')' | '(' sum ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-x^2`
//! is `-(x^2)` and `2^-x` is allowed. There is no implicit multiplication.

use std::fmt;

use crate::error::{Error, Result, SyntaxError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Tanh,
    Abs,
    Sign,
    Sqrt,
}

const FUNCS: [(&str, Func); 7] = [
    ("sin", Func::Sin),
    ("cos", Func::Cos),
    ("exp", Func::Exp),
    ("tanh", Func::Tanh),
    ("abs", Func::Abs),
    ("sign", Func::Sign),
    ("sqrt", Func::Sqrt),
];

impl Func {
    pub fn name(self) -> &'static str {
        FUNCS.iter().find(|(_, f)| *f == self).map(|(n, _)| *n).unwrap_or("?")
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Tanh => v.tanh(),
            Func::Abs => v.abs(),
            Func::Sign => {
                if v > 0.0 {
                    1.0
                } else if v < 0.0 {
                    -1.0
                } else if v == 0.0 {
                    0.0
                } else {
                    f64::NAN
                }
            }
            Func::Sqrt => v.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(Var::X) => x,
            Expr::Var(Var::T) => t,
            Expr::Neg(e) => -e.eval(x, t),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(x, t), b.eval(x, t));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(f, e) => f.apply(e.eval(x, t)),
        }
    }

    /// True for the literal `0` (possibly negated), not for expressions that
    /// merely evaluate to zero.
    pub fn is_zero_literal(&self) -> bool {
        match self {
            Expr::Num(v) => *v == 0.0,
            Expr::Neg(e) => e.is_zero_literal(),
            _ => false,
        }
    }

    pub fn depends_on(&self, var: Var) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Neg(e) | Expr::Call(_, e) => e.depends_on(var),
            Expr::Bin(_, a, b) => a.depends_on(var) || b.depends_on(var),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Num(v) if v.is_sign_negative() => 3,
            Expr::Bin(BinOp::Pow, ..) => 4,
            _ => 5,
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, paren: bool) -> fmt::Result {
    if paren {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => {
                if v.is_sign_negative() {
                    write!(f, "-{}", -v)
                } else {
                    write!(f, "{v}")
                }
            }
            Expr::Var(Var::X) => f.write_str("x"),
            Expr::Var(Var::T) => f.write_str("t"),
            Expr::Neg(e) => {
                f.write_str("-")?;
                write_child(f, e, e.precedence() < 3)
            }
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
            Expr::Bin(op, a, b) => {
                let p = self.precedence();
                let (sym, left_paren, right_paren) = match op {
                    BinOp::Pow => ("^", a.precedence() <= 4, b.precedence() < 3),
                    BinOp::Add => (" + ", a.precedence() < p, b.precedence() <= p),
                    BinOp::Sub => (" - ", a.precedence() < p, b.precedence() <= p),
                    BinOp::Mul => ("*", a.precedence() < p, b.precedence() <= p),
                    BinOp::Div => ("/", a.precedence() < p, b.precedence() <= p),
                };
                write_child(f, a, left_paren)?;
                f.write_str(sym)?;
                write_child(f, b, right_paren)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> std::result::Result<Vec<(usize, Tok)>, SyntaxError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                let v = text.parse::<f64>().map_err(|_| SyntaxError {
                    offset: start,
                    expected: vec!["number".into()],
                    found: format!("'{text}'"),
                })?;
                out.push((start, Tok::Num(v)));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(src[start..i].to_string())));
                continue;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(SyntaxError {
                    offset: start,
                    expected: operand_expected(),
                    found: format!("'{ch}'"),
                });
            }
        };
        out.push((start, tok));
        i += 1;
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

fn operand_expected() -> Vec<String> {
    vec![
        "number".into(),
        "'x'".into(),
        "'t'".into(),
        "function name".into(),
        "'('".into(),
        "'-'".into(),
    ]
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: Vec<String>) -> SyntaxError {
        SyntaxError {
            offset: self.offset(),
            expected,
            found: self.peek().describe(),
        }
    }

    fn sum(&mut self) -> std::result::Result<Expr, SyntaxError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.product()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> std::result::Result<Expr, SyntaxError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> std::result::Result<Expr, SyntaxError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> std::result::Result<Expr, SyntaxError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn expect_rparen(&mut self) -> std::result::Result<(), SyntaxError> {
        if *self.peek() == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            Err(self.error(vec!["operator".into(), "')'".into()]))
        }
    }

    fn atom(&mut self) -> std::result::Result<Expr, SyntaxError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.sum()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => {
                    self.bump();
                    Ok(Expr::Var(Var::X))
                }
                "t" => {
                    self.bump();
                    Ok(Expr::Var(Var::T))
                }
                _ => {
                    let Some(&(_, func)) = FUNCS.iter().find(|(n, _)| *n == name) else {
                        let mut expected = vec!["'x'".to_string(), "'t'".to_string()];
                        expected.extend(FUNCS.iter().map(|(n, _)| format!("'{n}'")));
                        return Err(self.error(expected));
                    };
                    self.bump();
                    if *self.peek() != Tok::LParen {
                        return Err(self.error(vec!["'('".into()]));
                    }
                    self.bump();
                    let arg = self.sum()?;
                    self.expect_rparen()?;
                    Ok(Expr::Call(func, Box::new(arg)))
                }
            },
            _ => Err(self.error(operand_expected())),
        }
    }
}

/// Parses `src` into an expression tree.
pub fn parse(src: &str) -> std::result::Result<Expr, SyntaxError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let e = p.sum()?;
    if *p.peek() != Tok::End {
        return Err(p.error(vec!["operator".into(), "end of input".into()]));
    }
    Ok(e)
}

pub fn eval(e: &Expr, x: f64, t: f64) -> f64 {
    e.eval(x, t)
}

/// Drift `F`, diffusion `σ` and jump amplitude `h` of the SDE.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    pub drift: Expr,
    pub sigma: Expr,
    pub jump: Expr,
}

impl CoefficientField {
    pub fn parse(drift: &str, sigma: &str, jump: &str) -> Result<Self> {
        Ok(Self {
            drift: parse(drift)?,
            sigma: parse(sigma)?,
            jump: parse(jump)?,
        })
    }

    pub fn drift(&self, x: f64, t: f64) -> f64 {
        self.drift.eval(x, t)
    }

    /// `σ(x, t)`; negative or non-finite values are a contract violation.
    pub fn sigma(&self, x: f64, t: f64) -> Result<f64> {
        let s = self.sigma.eval(x, t);
        if s.is_nan() || s < 0.0 {
            return Err(Error::Contract(format!("σ({x}, {t}) = {s} must be nonnegative")));
        }
        Ok(s)
    }

    pub fn jump(&self, x: f64, t: f64) -> f64 {
        self.jump.eval(x, t)
    }

    /// Checks finiteness of all three fields and `σ ≥ 0` on the sample
    /// points. Lipschitz and smoothness conditions are not checked.
    pub fn check_on(&self, xs: &[f64], ts: &[f64]) -> Result<()> {
        for &t in ts {
            for &x in xs {
                let s = self.sigma(x, t)?;
                let (f, h) = (self.drift(x, t), self.jump(x, t));
                if !(f.is_finite() && s.is_finite() && h.is_finite()) {
                    return Err(Error::Contract(format!(
                        "coefficients not finite at (x={x}, t={t}): F={f}, σ={s}, h={h}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(src: &str, x: f64, t: f64) -> f64 {
        parse(src).unwrap().eval(x, t)
    }

    #[test]
    fn examples() {
        assert_eq!(ev("x^2 + sin(t)", 2.0, 0.0), 4.0);
        assert_eq!(ev("-x*t", 3.0, 2.0), -6.0);
        assert_eq!(ev("sign(x)*abs(x)^0.5", -4.0, 1.0), -2.0);
        assert_eq!(ev("exp(x)", 0.0, 0.0), 1.0);
        assert_eq!(ev("x/t", 1.0, 0.0), f64::INFINITY);
        // tanh(10) = 1 - 2/(e^20 + 1)
        let oracle = 1.0 - 2.0 / (20f64.exp() + 1.0);
        assert!((ev("tanh(10*x)", 1.0, 0.0) - 0.99999999587).abs() < 1e-11);
        assert_eq!(ev("tanh(10*x)", 1.0, 0.0), oracle);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("-x^2", 3.0, 0.0), -9.0);
        assert_eq!(ev("2^3^2", 0.0, 0.0), 512.0);
        assert_eq!(ev("2^-1", 0.0, 0.0), 0.5);
        assert_eq!(ev("8/4/2", 0.0, 0.0), 1.0);
        assert_eq!(ev("1 - 2 - 3", 0.0, 0.0), -4.0);
        assert_eq!(ev("(1 + 2)*3", 0.0, 0.0), 9.0);
        assert_eq!(ev("1.5e-3*1e3", 0.0, 0.0), 1.5);
        assert!(ev("sqrt(x)", -1.0, 0.0).is_nan());
        assert_eq!(ev("0^-1", 0.0, 0.0), f64::INFINITY);
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        let e = parse("x + * t").unwrap_err();
        assert_eq!(e.offset, 4);
        assert!(e.expected.iter().any(|s| s == "number"));
        let e = parse("2x").unwrap_err();
        assert_eq!(e.offset, 1);
        let e = parse("foo(x)").unwrap_err();
        assert_eq!(e.offset, 0);
        assert!(e.expected.contains(&"'sin'".to_string()));
        let e = parse("sin(x").unwrap_err();
        assert_eq!((e.offset, e.found.as_str()), (5, "end of input"));
        assert_eq!(parse("x $ 1").unwrap_err().offset, 2);
        assert_eq!(parse("").unwrap_err().offset, 0);
    }

    #[test]
    fn printing_is_minimal() {
        for (src, printed) in [
            ("-x^2", "-x^2"),
            ("(-x)^2", "(-x)^2"),
            ("x - (t - 1)", "x - (t - 1)"),
            ("(x - t) - 1", "x - t - 1"),
            ("2^(3^2)", "2^3^2"),
            ("(2^3)^2", "(2^3)^2"),
            ("x^-t", "x^-t"),
            ("sin(x)*(1 + t)", "sin(x)*(1 + t)"),
        ] {
            assert_eq!(parse(src).unwrap().to_string(), printed);
        }
    }

    #[test]
    fn coefficient_field_checks_sigma() {
        let c = CoefficientField::parse("-x", "x", "1").unwrap();
        assert!(matches!(c.sigma(-1.0, 0.0), Err(Error::Contract(_))));
        assert!(c.check_on(&[0.0, 1.0], &[0.0]).is_ok());
        assert!(c.check_on(&[-1.0], &[0.0]).is_err());
        let d = CoefficientField::parse("1/x", "1", "0").unwrap();
        assert!(d.check_on(&[0.0], &[0.0]).is_err());
        assert!(d.jump.is_zero_literal());
        assert!(!d.drift.is_zero_literal());
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (-5.0f64..5.0).prop_map(Expr::Num),
            Just(Expr::Num(0.5)),
            Just(Expr::Var(Var::X)),
            Just(Expr::Var(Var::T)),
        ];
        leaf.prop_recursive(5, 48, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (
                    prop_oneof![
                        Just(BinOp::Add),
                        Just(BinOp::Sub),
                        Just(BinOp::Mul),
                        Just(BinOp::Div),
                        Just(BinOp::Pow)
                    ],
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(|(op, a, b)| Expr::Bin(op, Box::new(a), Box::new(b))),
                (
                    prop_oneof![
                        Just(Func::Sin),
                        Just(Func::Cos),
                        Just(Func::Exp),
                        Just(Func::Tanh),
                        Just(Func::Abs),
                        Just(Func::Sign),
                        Just(Func::Sqrt)
                    ],
                    inner
                )
                    .prop_map(|(f, e)| Expr::Call(f, Box::new(e))),
            ]
        })
    }

    fn same(a: f64, b: f64) -> bool {
        a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan())
    }

    proptest! {
        #[test]
        fn print_parse_preserves_value(e in arb_expr(), x in -3.0f64..3.0, t in 0.0f64..2.0) {
            let printed = e.to_string();
            let back = parse(&printed).unwrap();
            prop_assert!(same(back.eval(x, t), e.eval(x, t)), "{} -> {:?}", printed, back);
        }

        #[test]
        fn print_is_fixed_point(e in arb_expr()) {
            let once = e.to_string();
            let twice = parse(&once).unwrap().to_string();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn parse_never_panics(s in "[-+*/^() xt0-9.a-z]{0,24}") {
            let _ = parse(&s);
        }
    }
}
