//! Small expression language for coefficient fields in config files.
//!
//! Grammar: numbers, `pi`, coordinates `x y z`, `+ - * /`, integer powers
//! `^`, unary minus, and the functions `sin cos exp`. Expressions can be
//! differentiated symbolically, which is how user-defined manufactured
//! solutions get their forcing terms.

use std::fmt;
use std::sync::Arc;

use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Neg(Arc<Expr>),
    Pow(Arc<Expr>, i32),
    Sin(Arc<Expr>),
    Cos(Arc<Expr>),
    Exp(Arc<Expr>),
}

use Expr::*;

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.sum()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Expression(format!("trailing input in {src:?}")));
        }
        Ok(e)
    }

    pub fn eval(&self, x: &Vec3) -> f64 {
        match self {
            Const(c) => *c,
            Var(i) => x[*i],
            Add(a, b) => a.eval(x) + b.eval(x),
            Sub(a, b) => a.eval(x) - b.eval(x),
            Mul(a, b) => a.eval(x) * b.eval(x),
            Div(a, b) => a.eval(x) / b.eval(x),
            Neg(a) => -a.eval(x),
            Pow(a, n) => a.eval(x).powi(*n),
            Sin(a) => a.eval(x).sin(),
            Cos(a) => a.eval(x).cos(),
            Exp(a) => a.eval(x).exp(),
        }
    }

    /// Partial derivative with respect to coordinate `var`.
    pub fn diff(&self, var: usize) -> Expr {
        match self {
            Const(_) => Const(0.0),
            Var(i) => Const(if *i == var { 1.0 } else { 0.0 }),
            Add(a, b) => add(a.diff(var), b.diff(var)),
            Sub(a, b) => sub(a.diff(var), b.diff(var)),
            Mul(a, b) => add(mul(a.diff(var), (**b).clone()), mul((**a).clone(), b.diff(var))),
            Div(a, b) => {
                let num = sub(mul(a.diff(var), (**b).clone()), mul((**a).clone(), b.diff(var)));
                div(num, Pow(b.clone(), 2))
            }
            Neg(a) => neg(a.diff(var)),
            Pow(a, n) => match n {
                0 => Const(0.0),
                _ => mul(mul(Const(*n as f64), pow((**a).clone(), n - 1)), a.diff(var)),
            },
            Sin(a) => mul(Cos(a.clone()), a.diff(var)),
            Cos(a) => neg(mul(Sin(a.clone()), a.diff(var))),
            Exp(a) => mul(Exp(a.clone()), a.diff(var)),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Const(c) if *c == 0.0)
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Const(_) => true,
            Var(_) => false,
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => a.is_constant() && b.is_constant(),
            Neg(a) | Pow(a, _) | Sin(a) | Cos(a) | Exp(a) => a.is_constant(),
        }
    }
}

// Constructors with light constant folding so derivative trees stay small.
pub fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Const(x), Const(y)) => Const(x + y),
        _ if a.is_zero() => b,
        _ if b.is_zero() => a,
        _ => Add(Arc::new(a), Arc::new(b)),
    }
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Const(x), Const(y)) => Const(x - y),
        _ if b.is_zero() => a,
        _ if a.is_zero() => neg(b),
        _ => Sub(Arc::new(a), Arc::new(b)),
    }
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Const(x), Const(y)) => Const(x * y),
        _ if a.is_zero() || b.is_zero() => Const(0.0),
        (Const(x), _) if *x == 1.0 => b,
        (_, Const(y)) if *y == 1.0 => a,
        _ => Mul(Arc::new(a), Arc::new(b)),
    }
}

pub fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Const(x), Const(y)) => Const(x / y),
        _ if a.is_zero() => Const(0.0),
        _ => Div(Arc::new(a), Arc::new(b)),
    }
}

pub fn neg(a: Expr) -> Expr {
    match a {
        Const(x) => Const(-x),
        Neg(inner) => (*inner).clone(),
        _ => Neg(Arc::new(a)),
    }
}

fn pow(a: Expr, n: i32) -> Expr {
    match n {
        0 => Const(1.0),
        1 => a,
        _ => Pow(Arc::new(a), n),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Const(c) => write!(f, "{c}"),
            Var(i) => write!(f, "{}", ["x", "y", "z"][*i]),
            Add(a, b) => write!(f, "({a} + {b})"),
            Sub(a, b) => write!(f, "({a} - {b})"),
            Mul(a, b) => write!(f, "{a}*{b}"),
            Div(a, b) => write!(f, "{a}/{b}"),
            Neg(a) => write!(f, "-{a}"),
            Pow(a, n) => write!(f, "{a}^{n}"),
            Sin(a) => write!(f, "sin({a})"),
            Cos(a) => write!(f, "cos({a})"),
            Exp(a) => write!(f, "exp({a})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent part, e.g. 1e-3
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let save = i;
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
                if i < chars.len() && chars[i].is_ascii_digit() {
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v = s.parse().map_err(|_| Error::Expression(format!("bad number {s:?}")))?;
            out.push(Token::Num(v));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Token::Op(c));
            i += 1;
        } else {
            return Err(Error::Expression(format!("unexpected character {c:?}")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eat_op(&mut self, op: char) -> bool {
        if self.peek() == Some(&Token::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        loop {
            if self.eat_op('+') {
                lhs = Add(Arc::new(lhs), Arc::new(self.product()?));
            } else if self.eat_op('-') {
                lhs = Sub(Arc::new(lhs), Arc::new(self.product()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat_op('*') {
                lhs = Mul(Arc::new(lhs), Arc::new(self.unary()?));
            } else if self.eat_op('/') {
                lhs = Div(Arc::new(lhs), Arc::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat_op('-') {
            return Ok(Neg(Arc::new(self.unary()?)));
        }
        if self.eat_op('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat_op('^') {
            let neg = self.eat_op('-');
            match self.tokens.get(self.pos) {
                Some(Token::Num(n)) if n.fract() == 0.0 => {
                    let n = *n as i32;
                    self.pos += 1;
                    return Ok(Pow(Arc::new(base), if neg { -n } else { n }));
                }
                _ => return Err(Error::Expression("exponent must be an integer literal".into())),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let tok = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| Error::Expression("unexpected end of expression".into()))?;
        self.pos += 1;
        match tok {
            Token::Num(v) => Ok(Const(v)),
            Token::Op('(') => {
                let e = self.sum()?;
                if !self.eat_op(')') {
                    return Err(Error::Expression("missing ')'".into()));
                }
                Ok(e)
            }
            Token::Ident(name) => match name.as_str() {
                "x" => Ok(Var(0)),
                "y" => Ok(Var(1)),
                "z" => Ok(Var(2)),
                "pi" => Ok(Const(std::f64::consts::PI)),
                "sin" | "cos" | "exp" => {
                    if !self.eat_op('(') {
                        return Err(Error::Expression(format!("expected '(' after {name}")));
                    }
                    let arg = Arc::new(self.sum()?);
                    if !self.eat_op(')') {
                        return Err(Error::Expression("missing ')'".into()));
                    }
                    Ok(match name.as_str() {
                        "sin" => Sin(arg),
                        "cos" => Cos(arg),
                        _ => Exp(arg),
                    })
                }
                other => Err(Error::Expression(format!("unknown identifier {other:?}"))),
            },
            Token::Op(c) => Err(Error::Expression(format!("unexpected {c:?}"))),
        }
    }
}

/// A vector field given componentwise by expressions.
#[derive(Debug, Clone)]
pub struct VectorExpr {
    pub components: Vec<Expr>,
}

impl VectorExpr {
    pub fn parse(dim: usize, sources: &[String]) -> Result<Self> {
        if sources.len() != dim {
            return Err(Error::Expression(format!(
                "expected {dim} components, got {}",
                sources.len()
            )));
        }
        Ok(Self {
            components: sources.iter().map(|s| Expr::parse(s)).collect::<Result<_>>()?,
        })
    }

    pub fn eval(&self, x: &Vec3) -> Vec3 {
        let mut v = Vec3::zeros();
        for (i, c) in self.components.iter().enumerate() {
            v[i] = c.eval(x);
        }
        v
    }

    /// `jac[i][j] = d comp_i / d x_j`.
    pub fn jacobian(&self) -> Vec<Vec<Expr>> {
        let dim = self.components.len();
        self.components
            .iter()
            .map(|c| (0..dim).map(|j| c.diff(j)).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_eval() {
        let e = Expr::parse("2*sin(pi*y)^2 - x/4 + 1e-3*z").unwrap();
        let p = Vec3::new(1.0, 0.25, 2.0);
        let expected = 2.0 * (std::f64::consts::PI * 0.25).sin().powi(2) - 0.25 + 2e-3;
        assert!((e.eval(&p) - expected).abs() < 1e-15);
        assert_eq!(Expr::parse("-x^2").unwrap().eval(&Vec3::new(3.0, 0.0, 0.0)), -9.0);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Expr::parse("sin x").is_err());
        assert!(Expr::parse("x +").is_err());
        assert!(Expr::parse("w").is_err());
        assert!(Expr::parse("x^y").is_err());
        assert!(Expr::parse("(x").is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let srcs = ["sin(x*y) + exp(z)*x^3", "cos(2*x - y)/(1 + x^2)", "x*y*z - 3"];
        let p = Vec3::new(0.3, -0.7, 0.45);
        for s in srcs {
            let e = Expr::parse(s).unwrap();
            for var in 0..3 {
                let d = e.diff(var).eval(&p);
                let h = 1e-6;
                let mut a = p;
                let mut b = p;
                a[var] += h;
                b[var] -= h;
                let fd = (e.eval(&a) - e.eval(&b)) / (2.0 * h);
                assert!((d - fd).abs() < 1e-7, "{s} d/dx{var}: {d} vs {fd}");
            }
        }
    }
}
