//! Arithmetic expressions over named real variables.
//!
//! Grammar (recursive descent):
//! ```text
//! expr  := term (('+'|'-') term)*
//! term  := unary (('*'|'/') unary)*
//! unary := '-' unary | atom
//! atom  := number | name | name '(' expr ')' | '(' expr ')'
//! ```
//! Supported functions: `sin`, `cos`, `exp`. Any other name must be one of
//! the declared variables. Gradients are exact (forward-mode on the tree),
//! which gives observables and vector fields analytic derivatives for free.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

impl Expr {
    /// Parse `src` with the given variable names (e.g. `["x1", "x2"]`).
    pub fn parse(src: &str, variables: &[&str]) -> Result<Expr> {
        let mut p = Parser {
            src: src.as_bytes(),
            pos: 0,
            vars: variables,
        };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn eval(&self, vars: &[f64]) -> f64 {
        match self {
            Expr::Const(v) => *v,
            Expr::Var(i) => vars[*i],
            Expr::Add(a, b) => a.eval(vars) + b.eval(vars),
            Expr::Sub(a, b) => a.eval(vars) - b.eval(vars),
            Expr::Mul(a, b) => a.eval(vars) * b.eval(vars),
            Expr::Div(a, b) => a.eval(vars) / b.eval(vars),
            Expr::Neg(a) => -a.eval(vars),
            Expr::Sin(a) => a.eval(vars).sin(),
            Expr::Cos(a) => a.eval(vars).cos(),
            Expr::Exp(a) => a.eval(vars).exp(),
        }
    }

    /// Value and full gradient in one forward sweep.
    pub fn eval_grad(&self, vars: &[f64]) -> (f64, Vec<f64>) {
        let n = vars.len();
        let (v, g) = self.sweep(vars, n);
        (v, g)
    }

    fn sweep(&self, vars: &[f64], n: usize) -> (f64, Vec<f64>) {
        match self {
            Expr::Const(v) => (*v, vec![0.0; n]),
            Expr::Var(i) => {
                let mut g = vec![0.0; n];
                g[*i] = 1.0;
                (vars[*i], g)
            }
            Expr::Add(a, b) => {
                let (va, ga) = a.sweep(vars, n);
                let (vb, gb) = b.sweep(vars, n);
                (va + vb, zip(ga, gb, |x, y| x + y))
            }
            Expr::Sub(a, b) => {
                let (va, ga) = a.sweep(vars, n);
                let (vb, gb) = b.sweep(vars, n);
                (va - vb, zip(ga, gb, |x, y| x - y))
            }
            Expr::Mul(a, b) => {
                let (va, ga) = a.sweep(vars, n);
                let (vb, gb) = b.sweep(vars, n);
                (va * vb, zip(ga, gb, |x, y| x * vb + va * y))
            }
            Expr::Div(a, b) => {
                let (va, ga) = a.sweep(vars, n);
                let (vb, gb) = b.sweep(vars, n);
                (va / vb, zip(ga, gb, |x, y| (x * vb - va * y) / (vb * vb)))
            }
            Expr::Neg(a) => {
                let (v, g) = a.sweep(vars, n);
                (-v, g.into_iter().map(|x| -x).collect())
            }
            Expr::Sin(a) => {
                let (v, g) = a.sweep(vars, n);
                let c = v.cos();
                (v.sin(), g.into_iter().map(|x| x * c).collect())
            }
            Expr::Cos(a) => {
                let (v, g) = a.sweep(vars, n);
                let s = -v.sin();
                (v.cos(), g.into_iter().map(|x| x * s).collect())
            }
            Expr::Exp(a) => {
                let (v, g) = a.sweep(vars, n);
                let e = v.exp();
                (e, g.into_iter().map(|x| x * e).collect())
            }
        }
    }
}

fn zip(a: Vec<f64>, b: Vec<f64>, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    a.into_iter().zip(b).map(|(x, y)| f(x, y)).collect()
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: &'a [&'a str],
}

impl<'a> Parser<'a> {
    fn error(&self, msg: &str) -> Error {
        Error::ExprParse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.name(),
            Some(_) => Err(self.error("expected a number, name, or '('")),
            None => Err(self.error("unexpected end of expression")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.')
        {
            self.pos += 1;
        }
        // Optional exponent part: e or E, optional sign, digits.
        if self.pos < self.src.len() && (self.src[self.pos] | 0x20) == b'e' {
            let mark = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-')
            {
                self.pos += 1;
            }
            if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        text.parse::<f64>()
            .map(Expr::Const)
            .map_err(|_| Error::ExprParse {
                pos: start,
                msg: format!("invalid number literal `{text}`"),
            })
    }

    fn name(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        let is_call = self.peek() == Some(b'(');
        if is_call {
            self.pos += 1;
            let arg = Box::new(self.expr()?);
            if self.peek() != Some(b')') {
                return Err(self.error("expected ')' after function argument"));
            }
            self.pos += 1;
            return match name {
                "sin" => Ok(Expr::Sin(arg)),
                "cos" => Ok(Expr::Cos(arg)),
                "exp" => Ok(Expr::Exp(arg)),
                _ => Err(Error::ExprParse {
                    pos: start,
                    msg: format!("unknown function `{name}` (supported: sin, cos, exp)"),
                }),
            };
        }
        match self.vars.iter().position(|v| *v == name) {
            Some(i) => Ok(Expr::Var(i)),
            None => Err(Error::ExprParse {
                pos: start,
                msg: format!("unknown variable `{name}` (declared: {})", self.vars.join(", ")),
            }),
        }
    }
}
