//! Scalar expressions in `x` and `t` for scenario coefficients.
//!
//! Grammar: `+ - * / ^`, parentheses, numeric literals, the variables `x`
//! and `t`, the constants `i` (imaginary unit) and `pi`, and the functions
//! `exp sin cos sech tanh cosh sinh sqrt log`. Expressions are differentiated
//! symbolically in `x`.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Sech,
    Tanh,
    Cosh,
    Sinh,
    Sqrt,
    Log,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sech" => Func::Sech,
            "tanh" => Func::Tanh,
            "cosh" => Func::Cosh,
            "sinh" => Func::Sinh,
            "sqrt" => Func::Sqrt,
            "log" => Func::Log,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sech => "sech",
            Func::Tanh => "tanh",
            Func::Cosh => "cosh",
            Func::Sinh => "sinh",
            Func::Sqrt => "sqrt",
            Func::Log => "log",
        }
    }

    fn eval_real(self, v: f64) -> f64 {
        match self {
            Func::Exp => v.exp(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Sech => 1.0 / v.cosh(),
            Func::Tanh => v.tanh(),
            Func::Cosh => v.cosh(),
            Func::Sinh => v.sinh(),
            Func::Sqrt => v.sqrt(),
            Func::Log => v.ln(),
        }
    }

    fn eval_complex(self, v: Complex64) -> Complex64 {
        match self {
            Func::Exp => v.exp(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Sech => v.cosh().inv(),
            Func::Tanh => v.tanh(),
            Func::Cosh => v.cosh(),
            Func::Sinh => v.sinh(),
            Func::Sqrt => v.sqrt(),
            Func::Log => v.ln(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Imag,
    X,
    T,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

use Expr::*;

fn num(v: f64) -> Expr {
    Num(v)
}

// Smart constructors with constant folding keep derivative trees small.
fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Num(x), Num(y)) => Num(x + y),
        (Num(z), e) | (e, Num(z)) if z == 0.0 => e,
        (a, b) => Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Num(x), Num(y)) => Num(x - y),
        (e, Num(z)) if z == 0.0 => e,
        (Num(z), e) if z == 0.0 => neg(e),
        (a, b) => Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Num(x), Num(y)) => Num(x * y),
        (Num(z), _) | (_, Num(z)) if z == 0.0 => Num(0.0),
        (Num(o), e) | (e, Num(o)) if o == 1.0 => e,
        (a, b) => Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Num(z), _) if z == 0.0 => Num(0.0),
        (e, Num(o)) if o == 1.0 => e,
        (a, b) => Div(Box::new(a), Box::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Num(x) => Num(-x),
        Neg(e) => *e,
        e => Neg(Box::new(e)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (_, Num(z)) if z == 0.0 => Num(1.0),
        (e, Num(o)) if o == 1.0 => e,
        (a, b) => Pow(Box::new(a), Box::new(b)),
    }
}

fn call(f: Func, a: Expr) -> Expr {
    Call(f, Box::new(a))
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Expr(format!(
                "unexpected trailing input at token {} in {src:?}",
                p.pos
            )));
        }
        Ok(e)
    }

    pub fn depends_on_x(&self) -> bool {
        match self {
            X => true,
            Num(_) | Imag | T => false,
            Neg(a) | Call(_, a) => a.depends_on_x(),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Pow(a, b) => a.depends_on_x() || b.depends_on_x(),
        }
    }

    pub fn depends_on_t(&self) -> bool {
        match self {
            T => true,
            Num(_) | Imag | X => false,
            Neg(a) | Call(_, a) => a.depends_on_t(),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Pow(a, b) => a.depends_on_t() || b.depends_on_t(),
        }
    }

    pub fn is_real(&self) -> bool {
        match self {
            Imag => false,
            Num(_) | X | T => true,
            Neg(a) | Call(_, a) => a.is_real(),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Pow(a, b) => a.is_real() && b.is_real(),
        }
    }

    /// Symbolic `∂/∂x`.
    pub fn dx(&self) -> Expr {
        if !self.depends_on_x() {
            return num(0.0);
        }
        match self {
            X => num(1.0),
            Num(_) | Imag | T => num(0.0),
            Neg(a) => neg(a.dx()),
            Add(a, b) => add(a.dx(), b.dx()),
            Sub(a, b) => sub(a.dx(), b.dx()),
            Mul(a, b) => add(mul(a.dx(), (**b).clone()), mul((**a).clone(), b.dx())),
            Div(a, b) => div(
                sub(mul(a.dx(), (**b).clone()), mul((**a).clone(), b.dx())),
                pow((**b).clone(), num(2.0)),
            ),
            Pow(a, b) => {
                if !b.depends_on_x() {
                    // b a^{b-1} a'
                    mul(
                        mul((**b).clone(), pow((**a).clone(), sub((**b).clone(), num(1.0)))),
                        a.dx(),
                    )
                } else {
                    // a^b (b' log a + b a'/a)
                    mul(
                        self.clone(),
                        add(
                            mul(b.dx(), call(Func::Log, (**a).clone())),
                            div(mul((**b).clone(), a.dx()), (**a).clone()),
                        ),
                    )
                }
            }
            Call(f, a) => {
                let inner = a.dx();
                let u = (**a).clone();
                let outer = match f {
                    Func::Exp => call(Func::Exp, u),
                    Func::Sin => call(Func::Cos, u),
                    Func::Cos => neg(call(Func::Sin, u)),
                    Func::Sech => neg(mul(call(Func::Sech, u.clone()), call(Func::Tanh, u))),
                    Func::Tanh => pow(call(Func::Sech, u), num(2.0)),
                    Func::Cosh => call(Func::Sinh, u),
                    Func::Sinh => call(Func::Cosh, u),
                    Func::Sqrt => div(num(0.5), call(Func::Sqrt, u)),
                    Func::Log => div(num(1.0), u),
                };
                mul(outer, inner)
            }
        }
    }

    /// Real evaluation; `None` if the expression involves `i`.
    pub fn eval_real(&self, x: f64, t: f64) -> Option<f64> {
        if !self.is_real() {
            return None;
        }
        Some(self.eval_r(x, t))
    }

    fn eval_r(&self, x: f64, t: f64) -> f64 {
        match self {
            Num(v) => *v,
            Imag => f64::NAN,
            X => x,
            T => t,
            Neg(a) => -a.eval_r(x, t),
            Add(a, b) => a.eval_r(x, t) + b.eval_r(x, t),
            Sub(a, b) => a.eval_r(x, t) - b.eval_r(x, t),
            Mul(a, b) => a.eval_r(x, t) * b.eval_r(x, t),
            Div(a, b) => a.eval_r(x, t) / b.eval_r(x, t),
            Pow(a, b) => {
                let base = a.eval_r(x, t);
                match **b {
                    Num(e) if e.fract() == 0.0 && e.abs() < 64.0 => base.powi(e as i32),
                    _ => base.powf(b.eval_r(x, t)),
                }
            }
            Call(f, a) => f.eval_real(a.eval_r(x, t)),
        }
    }

    pub fn eval(&self, x: f64, t: f64) -> Complex64 {
        if self.is_real() {
            return Complex64::new(self.eval_r(x, t), 0.0);
        }
        self.eval_c(x, t)
    }

    fn eval_c(&self, x: f64, t: f64) -> Complex64 {
        match self {
            Num(v) => Complex64::new(*v, 0.0),
            Imag => Complex64::new(0.0, 1.0),
            X => Complex64::new(x, 0.0),
            T => Complex64::new(t, 0.0),
            Neg(a) => -a.eval_c(x, t),
            Add(a, b) => a.eval_c(x, t) + b.eval_c(x, t),
            Sub(a, b) => a.eval_c(x, t) - b.eval_c(x, t),
            Mul(a, b) => a.eval_c(x, t) * b.eval_c(x, t),
            Div(a, b) => a.eval_c(x, t) / b.eval_c(x, t),
            Pow(a, b) => {
                let base = a.eval_c(x, t);
                match **b {
                    Num(e) if e.fract() == 0.0 && e.abs() < 64.0 => base.powi(e as i32),
                    _ => base.powc(b.eval_c(x, t)),
                }
            }
            Call(f, a) => f.eval_complex(a.eval_c(x, t)),
        }
    }

    pub fn sample(&self, xs: &[f64], t: f64) -> Vec<Complex64> {
        xs.iter().map(|&x| self.eval(x, t)).collect()
    }

    /// Real samples; the imaginary part must vanish.
    pub fn sample_real(&self, xs: &[f64], t: f64) -> Result<Vec<f64>> {
        if self.is_real() {
            return Ok(xs.iter().map(|&x| self.eval_r(x, t)).collect());
        }
        xs.iter()
            .map(|&x| {
                let v = self.eval_c(x, t);
                if v.im.abs() > 1e-12 * v.re.abs().max(1.0) {
                    Err(Error::Validation(format!(
                        "expression {self} is not real at (x, t) = ({x}, {t}): {v}"
                    )))
                } else {
                    Ok(v.re)
                }
            })
            .collect()
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num(v) => write!(f, "{v}"),
            Imag => write!(f, "i"),
            X => write!(f, "x"),
            T => write!(f, "t"),
            Neg(a) => write!(f, "(-{a})"),
            Add(a, b) => write!(f, "({a} + {b})"),
            Sub(a, b) => write!(f, "({a} - {b})"),
            Mul(a, b) => write!(f, "({a} * {b})"),
            Div(a, b) => write!(f, "({a} / {b})"),
            Pow(a, b) => write!(f, "({a} ^ {b})"),
            Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' | '\n' => i += 1,
            '+' | '*' | '/' | '^' => {
                out.push(Token::Op(c));
                i += 1;
            }
            '-' | '\u{2212}' => {
                out.push(Token::Op('-'));
                i += 1;
            }
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
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
                let v = s.parse::<f64>().map_err(|_| Error::Expr(format!("bad number {s:?}")))?;
                out.push(Token::Num(v));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Token::Ident(chars[start..i].iter().collect()));
            }
            other => return Err(Error::Expr(format!("unexpected character {other:?} in {src:?}"))),
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

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(Token::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Add(Box::new(lhs), Box::new(rhs))
            } else {
                Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(Token::Op(op @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(Token::Op('-')) => {
                self.pos += 1;
                Ok(Neg(Box::new(self.unary()?)))
            }
            Some(Token::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if let Some(Token::Op('^')) = self.peek() {
            self.pos += 1;
            // right associative, exponent may carry a sign
            let exponent = self.unary()?;
            return Ok(Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.next() {
            Some(Token::Num(v)) => Ok(Num(v)),
            Some(Token::LParen) => {
                let e = self.expr()?;
                match self.next() {
                    Some(Token::RParen) => Ok(e),
                    _ => Err(Error::Expr("missing ')'".into())),
                }
            }
            Some(Token::Ident(name)) => match name.as_str() {
                "x" => Ok(X),
                "t" => Ok(T),
                "i" => Ok(Imag),
                "pi" => Ok(Num(std::f64::consts::PI)),
                _ => {
                    let f =
                        Func::from_name(&name).ok_or_else(|| Error::Expr(format!("unknown identifier {name:?}")))?;
                    match self.next() {
                        Some(Token::LParen) => {}
                        _ => return Err(Error::Expr(format!("{name} must be followed by '('"))),
                    }
                    let arg = self.expr()?;
                    match self.next() {
                        Some(Token::RParen) => Ok(Call(f, Box::new(arg))),
                        _ => Err(Error::Expr(format!("missing ')' after {name}(...)"))),
                    }
                }
            },
            Some(tok) => Err(Error::Expr(format!("unexpected token {tok:?}"))),
            None => Err(Error::Expr("unexpected end of expression".into())),
        }
    }
}
