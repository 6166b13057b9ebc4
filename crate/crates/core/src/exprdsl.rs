//! A small expression language for coefficient fields and test functions.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          right-associative
//! primary := number | name | func '(' expr ')' | '(' expr ')'
//! func    := exp | log | sqrt | sin | cos | tanh
//! ```
//!
//! Names resolve, in order, to declared coordinates, bound parameters, and
//! the constants `pi` and `e`.  There is no implicit multiplication.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jets::{Jet3, MAX_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Tanh,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tanh" => Func::Tanh,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tanh => "tanh",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    /// `pi` or `e`.
    Const(&'static str, f64),
    Var(usize),
    Param(String, f64),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn has_var(&self) -> bool {
        match self {
            Node::Var(_) => true,
            Node::Num(_) | Node::Const(..) | Node::Param(..) => false,
            Node::Neg(a) | Node::Call(_, a) => a.has_var(),
            Node::Bin(_, a, b) => a.has_var() || b.has_var(),
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Node::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Node::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Node::Neg(_) => 3,
            Node::Num(v) if v.is_sign_negative() => 3,
            Node::Bin(BinOp::Pow, ..) => 4,
            _ => 5,
        }
    }
}

/// A parsed expression over a fixed list of coordinate names.
#[derive(Debug, Clone)]
pub struct Expr {
    node: Node,
    coords: Arc<Vec<String>>,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Expr) -> bool {
        self.node == other.node && self.coords == other.coords
    }
}

/// Parse `text` with the given coordinate names and bound parameters.
pub fn parse<S: AsRef<str>>(
    text: &str,
    coords: &[S],
    params: &BTreeMap<String, f64>,
) -> Result<Expr> {
    let coords: Vec<String> = coords.iter().map(|s| s.as_ref().to_string()).collect();
    if coords.len() > MAX_DIM {
        return Err(Error::InvalidArgument(format!(
            "at most {MAX_DIM} coordinates are supported"
        )));
    }
    let tokens = lex(text)?;
    let mut p = Parser {
        toks: &tokens,
        at: 0,
        coords: &coords,
        params,
    };
    if tokens.len() == 1 {
        return Err(Error::Syntax {
            pos: 0,
            msg: "empty expression".into(),
        });
    }
    let node = p.expr()?;
    let t = p.peek();
    if t.kind != Tok::End {
        return Err(Error::Syntax {
            pos: t.pos,
            msg: format!("unexpected {}", t.kind.describe()),
        });
    }
    Ok(Expr {
        node,
        coords: Arc::new(coords),
    })
}

impl Expr {
    /// A constant expression over `coords`.
    pub fn constant<S: AsRef<str>>(c: f64, coords: &[S]) -> Expr {
        Expr {
            node: Node::Num(c),
            coords: Arc::new(coords.iter().map(|s| s.as_ref().to_string()).collect()),
        }
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    /// True when the expression does not reference any coordinate.
    pub fn is_constant(&self) -> bool {
        !self.node.has_var()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        let vars: Vec<f64> = x.to_vec();
        eval_node(&self.node, &vars, &|c| c)
    }

    /// Value and gradient (first-order forward mode).
    pub fn eval_grad(&self, x: &[f64]) -> Result<Dual> {
        self.check_point(x)?;
        let d = x.len();
        let vars: Vec<Dual> = (0..d).map(|i| Dual::variable(i, x[i], d)).collect();
        eval_node(&self.node, &vars, &|c| Dual::constant(c, d))
    }

    /// Exact partials up to `order` at `x`.
    pub fn eval_jet(&self, x: &[f64], order: u8) -> Result<Jet3> {
        self.check_point(x)?;
        if order > 3 {
            return Err(Error::InvalidArgument(format!("jet order {order} > 3")));
        }
        let d = x.len();
        let vars: Vec<Jet3> = (0..d).map(|i| Jet3::variable(i, x[i], d, order)).collect();
        eval_node(&self.node, &vars, &|c| Jet3::constant(c, d, order))
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.coords.len() {
            return Err(Error::InvalidArgument(format!(
                "point has {} components, expression expects {}",
                x.len(),
                self.coords.len()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, &self.node, &self.coords)
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, n: &Node, names: &[String]) -> fmt::Result {
    let wrap = |f: &mut fmt::Formatter<'_>, c: &Node, paren: bool| -> fmt::Result {
        if paren {
            write!(f, "(")?;
            write_node(f, c, names)?;
            write!(f, ")")
        } else {
            write_node(f, c, names)
        }
    };
    match n {
        Node::Num(v) => write!(f, "{v:?}"),
        Node::Const(name, _) => write!(f, "{name}"),
        Node::Var(i) => write!(f, "{}", names[*i]),
        Node::Param(name, _) => write!(f, "{name}"),
        Node::Neg(a) => {
            write!(f, "-")?;
            wrap(f, a, a.prec() < 3)
        }
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_node(f, a, names)?;
            write!(f, ")")
        }
        Node::Bin(op, a, b) => {
            let (p, sym) = match op {
                BinOp::Add => (1, " + "),
                BinOp::Sub => (1, " - "),
                BinOp::Mul => (2, "*"),
                BinOp::Div => (2, "/"),
                BinOp::Pow => (4, "^"),
            };
            if *op == BinOp::Pow {
                // left binds tighter than '^'; right may be any unary
                wrap(f, a, a.prec() <= 4)?;
                write!(f, "{sym}")?;
                wrap(f, b, b.prec() < 3)
            } else {
                wrap(f, a, a.prec() < p)?;
                write!(f, "{sym}")?;
                wrap(f, b, b.prec() <= p)
            }
        }
    }
}

// ---------------------------------------------------------------- lexer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::End => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: Tok,
    pos: usize,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            // exponent only when digits follow; otherwise `e` is a name
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v = s.parse::<f64>().map_err(|_| Error::Syntax {
                pos: start,
                msg: format!("malformed number `{s}`"),
            })?;
            out.push(Token { kind: Tok::Num(v), pos: start });
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            out.push(Token { kind: Tok::Ident(s), pos: start });
        } else if "+-*/^()".contains(c) {
            out.push(Token { kind: Tok::Sym(c), pos: i });
            i += 1;
        } else {
            return Err(Error::Syntax {
                pos: i,
                msg: format!("unexpected character `{c}`"),
            });
        }
    }
    out.push(Token { kind: Tok::End, pos: chars.len() });
    Ok(out)
}

// --------------------------------------------------------------- parser

struct Parser<'a> {
    toks: &'a [Token],
    at: usize,
    coords: &'a [String],
    params: &'a BTreeMap<String, f64>,
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.toks[self.at]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if t.kind != Tok::End {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek().kind == Tok::Sym(c) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            let t = self.peek();
            Err(Error::Syntax {
                pos: t.pos,
                msg: format!("expected `{c}`, found {}", t.kind.describe()),
            })
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                BinOp::Add
            } else if self.eat('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                BinOp::Mul
            } else if self.eat('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat('-') {
            Ok(Node::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.primary()?;
        if self.eat('^') {
            let exp = self.unary()?;
            Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)))
        } else {
            Ok(base)
        }
    }

    fn primary(&mut self) -> Result<Node> {
        let t = self.bump();
        match t.kind {
            Tok::Num(v) => Ok(Node::Num(v)),
            Tok::Sym('(') => {
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if self.peek().kind == Tok::Sym('(') {
                    let func = Func::from_name(&name).ok_or_else(|| Error::UnknownIdentifier {
                        name: name.clone(),
                        pos: t.pos,
                    })?;
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                if let Some(i) = self.coords.iter().position(|c| *c == name) {
                    Ok(Node::Var(i))
                } else if let Some(&v) = self.params.get(&name) {
                    Ok(Node::Param(name, v))
                } else if name == "pi" {
                    Ok(Node::Const("pi", std::f64::consts::PI))
                } else if name == "e" {
                    Ok(Node::Const("e", std::f64::consts::E))
                } else {
                    Err(Error::UnknownIdentifier { name, pos: t.pos })
                }
            }
            other => Err(Error::Syntax {
                pos: t.pos,
                msg: format!("unexpected {}", other.describe()),
            }),
        }
    }
}

// ----------------------------------------------------------- evaluation

/// Value and gradient of a scalar in up to `MAX_DIM` variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub value: f64,
    pub grad: [f64; MAX_DIM],
    pub dim: usize,
}

impl Dual {
    pub fn constant(c: f64, dim: usize) -> Dual {
        Dual {
            value: c,
            grad: [0.0; MAX_DIM],
            dim,
        }
    }

    pub fn variable(i: usize, v: f64, dim: usize) -> Dual {
        let mut d = Dual::constant(v, dim);
        d.grad[i] = 1.0;
        d
    }

    fn chain(mut self, v: f64, dv: f64) -> Dual {
        self.value = v;
        for g in &mut self.grad[..self.dim] {
            *g *= dv;
        }
        self
    }
}

/// Scalar types the evaluator can run on.
trait Scalar: Copy {
    fn val(&self) -> f64;
    fn differentiable(&self) -> bool;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn neg(self) -> Self;
    fn recip(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tanh(self) -> Self;
    fn powi(self, n: u32) -> Self;
    fn powf(self, p: f64) -> Self;
}

impl Scalar for f64 {
    fn val(&self) -> f64 {
        *self
    }
    fn differentiable(&self) -> bool {
        false
    }
    fn add(self, o: f64) -> f64 {
        self + o
    }
    fn sub(self, o: f64) -> f64 {
        self - o
    }
    fn mul(self, o: f64) -> f64 {
        self * o
    }
    fn neg(self) -> f64 {
        -self
    }
    fn recip(self) -> f64 {
        1.0 / self
    }
    fn exp(self) -> f64 {
        f64::exp(self)
    }
    fn ln(self) -> f64 {
        f64::ln(self)
    }
    fn sqrt(self) -> f64 {
        f64::sqrt(self)
    }
    fn sin(self) -> f64 {
        f64::sin(self)
    }
    fn cos(self) -> f64 {
        f64::cos(self)
    }
    fn tanh(self) -> f64 {
        f64::tanh(self)
    }
    fn powi(self, n: u32) -> f64 {
        let mut acc = 1.0;
        for _ in 0..n {
            acc *= self;
        }
        acc
    }
    fn powf(self, p: f64) -> f64 {
        f64::powf(self, p)
    }
}

impl Scalar for Dual {
    fn val(&self) -> f64 {
        self.value
    }
    fn differentiable(&self) -> bool {
        true
    }
    fn add(mut self, o: Dual) -> Dual {
        self.value += o.value;
        for i in 0..self.dim {
            self.grad[i] += o.grad[i];
        }
        self
    }
    fn sub(mut self, o: Dual) -> Dual {
        self.value -= o.value;
        for i in 0..self.dim {
            self.grad[i] -= o.grad[i];
        }
        self
    }
    fn mul(mut self, o: Dual) -> Dual {
        for i in 0..self.dim {
            self.grad[i] = self.grad[i] * o.value + self.value * o.grad[i];
        }
        self.value *= o.value;
        self
    }
    fn neg(self) -> Dual {
        self.chain(-self.value, -1.0)
    }
    fn recip(self) -> Dual {
        let r = 1.0 / self.value;
        self.chain(r, -r * r)
    }
    fn exp(self) -> Dual {
        let e = self.value.exp();
        self.chain(e, e)
    }
    fn ln(self) -> Dual {
        self.chain(self.value.ln(), 1.0 / self.value)
    }
    fn sqrt(self) -> Dual {
        let s = self.value.sqrt();
        self.chain(s, 0.5 / s)
    }
    fn sin(self) -> Dual {
        self.chain(self.value.sin(), self.value.cos())
    }
    fn cos(self) -> Dual {
        self.chain(self.value.cos(), -self.value.sin())
    }
    fn tanh(self) -> Dual {
        let t = self.value.tanh();
        self.chain(t, 1.0 - t * t)
    }
    fn powi(self, n: u32) -> Dual {
        let mut acc = Dual::constant(1.0, self.dim);
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }
    fn powf(self, p: f64) -> Dual {
        let xp = self.value.powf(p);
        self.chain(xp, p * xp / self.value)
    }
}

impl Scalar for Jet3 {
    fn val(&self) -> f64 {
        self.value()
    }
    fn differentiable(&self) -> bool {
        self.order() > 0
    }
    fn add(self, o: Jet3) -> Jet3 {
        self + o
    }
    fn sub(self, o: Jet3) -> Jet3 {
        self - o
    }
    fn mul(self, o: Jet3) -> Jet3 {
        self * o
    }
    fn neg(self) -> Jet3 {
        -self
    }
    fn recip(self) -> Jet3 {
        Jet3::recip(&self)
    }
    fn exp(self) -> Jet3 {
        Jet3::exp(&self)
    }
    fn ln(self) -> Jet3 {
        Jet3::ln(&self)
    }
    fn sqrt(self) -> Jet3 {
        Jet3::sqrt(&self)
    }
    fn sin(self) -> Jet3 {
        Jet3::sin(&self)
    }
    fn cos(self) -> Jet3 {
        Jet3::cos(&self)
    }
    fn tanh(self) -> Jet3 {
        Jet3::tanh(&self)
    }
    fn powi(self, n: u32) -> Jet3 {
        Jet3::powi(&self, n)
    }
    fn powf(self, p: f64) -> Jet3 {
        Jet3::powf(&self, p)
    }
}

fn eval_node<T: Scalar>(n: &Node, vars: &[T], lift: &dyn Fn(f64) -> T) -> Result<T> {
    Ok(match n {
        Node::Num(v) => lift(*v),
        Node::Const(_, v) | Node::Param(_, v) => lift(*v),
        Node::Var(i) => vars[*i],
        Node::Neg(a) => eval_node(a, vars, lift)?.neg(),
        Node::Call(func, a) => {
            let x = eval_node(a, vars, lift)?;
            let v = x.val();
            match func {
                Func::Exp => x.exp(),
                Func::Log => {
                    if !(v > 0.0) {
                        return Err(Error::Domain(format!("log of nonpositive value {v}")));
                    }
                    x.ln()
                }
                Func::Sqrt => {
                    if v < 0.0 || (v == 0.0 && x.differentiable()) || v.is_nan() {
                        return Err(Error::Domain(format!("sqrt of {v} is not differentiable")));
                    }
                    x.sqrt()
                }
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Tanh => x.tanh(),
            }
        }
        Node::Bin(op, a, b) => {
            if *op == BinOp::Pow {
                return eval_pow(a, b, vars, lift);
            }
            let x = eval_node(a, vars, lift)?;
            let y = eval_node(b, vars, lift)?;
            match op {
                BinOp::Add => x.add(y),
                BinOp::Sub => x.sub(y),
                BinOp::Mul => x.mul(y),
                BinOp::Div => {
                    if y.val() == 0.0 {
                        return Err(Error::Domain("division by zero".into()));
                    }
                    x.mul(y.recip())
                }
                BinOp::Pow => unreachable!(),
            }
        }
    })
}

fn eval_pow<T: Scalar>(a: &Node, b: &Node, vars: &[T], lift: &dyn Fn(f64) -> T) -> Result<T> {
    let base = eval_node(a, vars, lift)?;
    if !b.has_var() {
        let p = eval_node::<f64>(b, &[], &|c| c)?;
        if p.fract() == 0.0 && p.abs() <= 1024.0 {
            let n = p.abs() as u32;
            let r = base.powi(n);
            if p < 0.0 {
                if r.val() == 0.0 {
                    return Err(Error::Domain("zero raised to a negative power".into()));
                }
                return Ok(r.recip());
            }
            return Ok(r);
        }
        if !(base.val() > 0.0) {
            return Err(Error::Domain(format!(
                "non-integer power {p} of nonpositive base {}",
                base.val()
            )));
        }
        return Ok(base.powf(p));
    }
    if !(base.val() > 0.0) {
        return Err(Error::Domain(format!(
            "variable exponent requires a positive base, got {}",
            base.val()
        )));
    }
    let e = eval_node(b, vars, lift)?;
    Ok(e.mul(base.ln()).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xyz(s: &str) -> Result<Expr> {
        parse(s, &["x", "y", "z"], &BTreeMap::new())
    }

    #[test]
    fn spec_examples() {
        assert_eq!(xyz("x^2 + y*z").unwrap().eval(&[1.0, 2.0, 3.0]).unwrap(), 7.0);
        assert_eq!(xyz("-y/2").unwrap().eval(&[0.0, 3.0, 0.0]).unwrap(), -1.5);
        assert!(matches!(xyz("x +"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn precedence_and_associativity() {
        let at = [2.0, 3.0, 0.0];
        assert_eq!(xyz("2^3^2").unwrap().eval(&at).unwrap(), 512.0);
        assert_eq!(xyz("-x^2").unwrap().eval(&at).unwrap(), -4.0);
        assert_eq!(xyz("-x*y").unwrap().eval(&at).unwrap(), -6.0);
        assert_eq!(xyz("x - y - 1").unwrap().eval(&at).unwrap(), -2.0);
        assert_eq!(xyz("x / y * 3").unwrap().eval(&at).unwrap(), 2.0);
        assert_eq!(xyz("x^-1").unwrap().eval(&at).unwrap(), 0.5);
        assert_eq!(xyz("1.5e1 + .5").unwrap().eval(&at).unwrap(), 15.5);
    }

    #[test]
    fn errors_carry_positions() {
        match xyz("x + w") {
            Err(Error::UnknownIdentifier { name, pos }) => {
                assert_eq!(name, "w");
                assert_eq!(pos, 4);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(xyz("2x"), Err(Error::Syntax { pos: 1, .. })));
        assert!(matches!(xyz("foo(x)"), Err(Error::UnknownIdentifier { .. })));
        assert!(matches!(xyz("(x"), Err(Error::Syntax { pos: 2, .. })));
        assert!(matches!(xyz(""), Err(Error::Syntax { .. })));
        assert!(matches!(xyz("x $ y"), Err(Error::Syntax { pos: 2, .. })));
    }

    #[test]
    fn domain_errors() {
        let at = [0.0, -1.0, 0.0];
        assert!(matches!(xyz("log(y)").unwrap().eval(&at), Err(Error::Domain(_))));
        assert!(matches!(xyz("1/x").unwrap().eval(&at), Err(Error::Domain(_))));
        assert!(matches!(xyz("y^0.5").unwrap().eval(&at), Err(Error::Domain(_))));
        assert!(matches!(xyz("sqrt(x)").unwrap().eval_jet(&at, 1), Err(Error::Domain(_))));
        assert_eq!(xyz("sqrt(x)").unwrap().eval(&at).unwrap(), 0.0);
        assert_eq!(xyz("y^3").unwrap().eval(&at).unwrap(), -1.0);
    }

    #[test]
    fn params_and_constants() {
        let mut params = BTreeMap::new();
        params.insert("beta".to_string(), 2.0);
        let e = parse("exp(beta*theta) + pi - e", &["theta", "x", "y"], &params).unwrap();
        let v = e.eval(&[0.5, 0.0, 0.0]).unwrap();
        assert!((v - (1f64.exp() + std::f64::consts::PI - std::f64::consts::E)).abs() < 1e-15);
        assert_eq!(e.to_string(), "exp(beta*theta) + pi - e");
    }

    #[test]
    fn jet_examples() {
        let x1 = parse("exp(x)", &["x"], &BTreeMap::new()).unwrap();
        let j = x1.eval_jet(&[0.0], 3).unwrap();
        assert_eq!((j.value(), j.d1(0), j.d2(0, 0), j.d3(0, 0, 0)), (1.0, 1.0, 1.0, 1.0));

        let xy = parse("x*y", &["x", "y"], &BTreeMap::new()).unwrap();
        let j = xy.eval_jet(&[2.0, 5.0], 2).unwrap();
        assert_eq!(j.value(), 10.0);
        assert_eq!((j.d1(0), j.d1(1)), (5.0, 2.0));
        assert_eq!((j.d2(0, 1), j.d2(0, 0), j.d2(1, 1)), (1.0, 0.0, 0.0));

        let y2 = parse("y^2/2", &["y"], &BTreeMap::new()).unwrap();
        let j = y2.eval_jet(&[3.0], 3).unwrap();
        assert_eq!((j.value(), j.d1(0), j.d2(0, 0), j.d3(0, 0, 0)), (4.5, 3.0, 1.0, 0.0));
        // central differences, step 1e-4
        let h = 1e-4;
        let f = |t: f64| y2.eval(&[t]).unwrap();
        let fd1 = (f(3.0 + h) - f(3.0 - h)) / (2.0 * h);
        let fd2 = (f(3.0 + h) - 2.0 * f(3.0) + f(3.0 - h)) / (h * h);
        assert!((fd1 - j.d1(0)).abs() <= 1e-6);
        assert!((fd2 - j.d2(0, 0)).abs() <= 1e-6 * 10.0);
    }

    #[test]
    fn printer_round_trips_tricky_shapes() {
        for s in [
            "-x^2",
            "(-x)^2",
            "x^-y",
            "(x^y)^z",
            "x^y^z",
            "x - (y - z)",
            "x/(y*z)",
            "-(x + y)",
            "--x",
            "sin(x)^2 + cos(-y)",
        ] {
            let e = xyz(s).unwrap();
            let back = xyz(&e.to_string()).unwrap();
            assert_eq!(e.node(), back.node(), "{s} -> {e}");
        }
        let neg = Expr {
            node: Node::Bin(BinOp::Pow, Box::new(Node::Num(-2.0)), Box::new(Node::Num(2.0))),
            coords: Arc::new(vec!["x".into()]),
        };
        let back = parse(&neg.to_string(), &["x"], &BTreeMap::new()).unwrap();
        assert_eq!(back.eval(&[0.0]).unwrap(), 4.0);
    }

    #[test]
    fn dual_matches_jet() {
        let e = xyz("tanh(x*y) + sqrt(1 + z^2)/exp(y) - x^2.5").unwrap();
        let p = [0.7, -0.4, 1.3];
        let d = e.eval_grad(&p).unwrap();
        let j = e.eval_jet(&p, 1).unwrap();
        for i in 0..3 {
            assert!((d.grad[i] - j.d1(i)).abs() < 1e-14);
        }
        assert_eq!(d.value, j.value());
    }
}
