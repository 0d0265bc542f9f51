//! Coefficient functions over chart coordinates.
//!
//! Expressions are parsed by a small recursive-descent parser:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | base ('^' '-'? natural)?
//! base   := number | ident | '(' expr ')' | func '(' expr ')'
//! ident  := 'x' natural            (1-based coordinate index)
//! func   := exp | sin | cos | ln
//! ```
//!
//! Negative exponents are rewritten to quotients at parse time. Evaluation is
//! available on plain `f64` points and on [`Jet`]s of any order up to the
//! expression's cap.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::jet::Jet;

/// Default cap on the jet order an expression may be evaluated at.
pub const DEFAULT_MAX_ORDER: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at offset {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("variable x{index} at offset {pos} is out of range for dimension {dim}")]
    VariableOutOfRange { index: usize, pos: usize, dim: usize },
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("point has {got} coordinates, expected {expected}")]
    PointDimension { expected: usize, got: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("ln of non-positive value {0}")]
    Domain(f64),
    #[error("jet order {requested} exceeds the configured maximum {max}")]
    OrderTooHigh { requested: usize, max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Ln,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Ln => "ln",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    /// 0-based coordinate index.
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, u32),
    Func(Func, Box<Node>),
}

impl Node {
    fn max_var(&self) -> Option<usize> {
        match self {
            Node::Const(_) => None,
            Node::Var(i) => Some(*i),
            Node::Neg(a) | Node::Pow(a, _) | Node::Func(_, a) => a.max_var(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                match (a.max_var(), b.max_var()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                }
            }
        }
    }

    fn collect_denominators<'a>(&'a self, out: &mut Vec<&'a Node>) {
        match self {
            Node::Const(_) | Node::Var(_) => {}
            Node::Neg(a) | Node::Pow(a, _) | Node::Func(_, a) => a.collect_denominators(out),
            Node::Div(a, b) => {
                a.collect_denominators(out);
                out.push(b);
                b.collect_denominators(out);
            }
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) => {
                a.collect_denominators(out);
                b.collect_denominators(out);
            }
        }
    }

    fn scalar(&self, p: &[f64]) -> Result<f64, ExprError> {
        Ok(match self {
            Node::Const(c) => *c,
            Node::Var(i) => p[*i],
            Node::Neg(a) => -a.scalar(p)?,
            Node::Add(a, b) => a.scalar(p)? + b.scalar(p)?,
            Node::Sub(a, b) => a.scalar(p)? - b.scalar(p)?,
            Node::Mul(a, b) => a.scalar(p)? * b.scalar(p)?,
            Node::Div(a, b) => {
                let d = b.scalar(p)?;
                if d == 0.0 {
                    return Err(ExprError::DivisionByZero);
                }
                a.scalar(p)? / d
            }
            Node::Pow(a, k) => a.scalar(p)?.powi(*k as i32),
            Node::Func(f, a) => {
                let v = a.scalar(p)?;
                match f {
                    Func::Exp => v.exp(),
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Ln => {
                        if v <= 0.0 {
                            return Err(ExprError::Domain(v));
                        }
                        v.ln()
                    }
                }
            }
        })
    }

    fn jet(&self, p: &[f64], order: usize) -> Result<Jet, ExprError> {
        let n = p.len();
        Ok(match self {
            Node::Const(c) => Jet::constant(n, order, *c),
            Node::Var(i) => Jet::variable(n, order, *i, p[*i]),
            Node::Neg(a) => -a.jet(p, order)?,
            Node::Add(a, b) => a.jet(p, order)? + b.jet(p, order)?,
            Node::Sub(a, b) => a.jet(p, order)? - b.jet(p, order)?,
            Node::Mul(a, b) => a.jet(p, order)? * b.jet(p, order)?,
            Node::Div(a, b) => {
                let num = a.jet(p, order)?;
                let den = b.jet(p, order)?;
                num.checked_div(&den).ok_or(ExprError::DivisionByZero)?
            }
            Node::Pow(a, k) => a.jet(p, order)?.powi(*k),
            Node::Func(f, a) => {
                let v = a.jet(p, order)?;
                match f {
                    Func::Exp => v.exp(),
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Ln => v.ln().ok_or(ExprError::Domain(v.value()))?,
                }
            }
        })
    }
}

fn precedence(node: &Node) -> u8 {
    match node {
        Node::Add(..) | Node::Sub(..) => 1,
        Node::Mul(..) | Node::Div(..) => 2,
        Node::Neg(_) => 3,
        Node::Pow(..) => 4,
        _ => 5,
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, n: &Node, min: u8| {
            if precedence(n) < min {
                write!(f, "({n})")
            } else {
                write!(f, "{n}")
            }
        };
        match self {
            Node::Const(c) => write!(f, "{c}"),
            Node::Var(i) => write!(f, "x{}", i + 1),
            Node::Neg(a) => {
                write!(f, "-")?;
                wrap(f, a, 4)
            }
            Node::Add(a, b) | Node::Sub(a, b) => {
                wrap(f, a, 1)?;
                write!(f, " {} ", if matches!(self, Node::Add(..)) { '+' } else { '-' })?;
                wrap(f, b, 2)
            }
            Node::Mul(a, b) | Node::Div(a, b) => {
                wrap(f, a, 2)?;
                write!(f, "{}", if matches!(self, Node::Mul(..)) { '*' } else { '/' })?;
                wrap(f, b, 3)
            }
            Node::Pow(a, k) => {
                wrap(f, a, 5)?;
                write!(f, "^{k}")
            }
            Node::Func(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

/// A parsed coefficient function on a chart of dimension `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
    dim: usize,
    denominators: usize,
    max_order: usize,
}

impl Expression {
    pub fn parse(source: &str, dim: usize) -> Result<Expression, ExprError> {
        if dim == 0 {
            return Err(ExprError::ZeroDimension);
        }
        let root = Parser::new(source, dim).parse()?;
        Ok(Expression::from_node(root, dim))
    }

    /// Wrap an already-built tree. Panics if a variable exceeds `dim`.
    pub fn from_node(root: Node, dim: usize) -> Expression {
        if let Some(v) = root.max_var() {
            assert!(v < dim, "variable index {v} out of range for dimension {dim}");
        }
        let mut dens = Vec::new();
        root.collect_denominators(&mut dens);
        let denominators = dens.len();
        Expression {
            root,
            dim,
            denominators,
            max_order: DEFAULT_MAX_ORDER,
        }
    }

    pub fn constant(value: f64, dim: usize) -> Expression {
        Expression::from_node(Node::Const(value), dim)
    }

    pub fn with_max_order(mut self, max_order: usize) -> Expression {
        self.max_order = max_order;
        self
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Number of quotient denominators guarded at evaluation time.
    pub fn denominator_count(&self) -> usize {
        self.denominators
    }

    pub fn denominators(&self) -> Vec<&Node> {
        let mut out = Vec::new();
        self.root.collect_denominators(&mut out);
        out
    }

    /// True when the tree is the literal constant zero.
    pub fn is_zero(&self) -> bool {
        matches!(self.root, Node::Const(c) if c == 0.0)
    }

    fn check_point(&self, point: &[f64]) -> Result<(), ExprError> {
        if point.len() != self.dim {
            return Err(ExprError::PointDimension {
                expected: self.dim,
                got: point.len(),
            });
        }
        Ok(())
    }

    pub fn eval_scalar(&self, point: &[f64]) -> Result<f64, ExprError> {
        self.check_point(point)?;
        self.root.scalar(point)
    }

    pub fn eval_jet(&self, point: &[f64], order: usize) -> Result<Jet, ExprError> {
        self.check_point(point)?;
        if order > self.max_order {
            return Err(ExprError::OrderTooHigh {
                requested: order,
                max: self.max_order,
            });
        }
        self.root.jet(point, order)
    }

    /// `∂^α e` at `point`.
    pub fn partial(&self, point: &[f64], alpha: &[u8]) -> Result<f64, ExprError> {
        if alpha.len() != self.dim {
            return Err(ExprError::PointDimension {
                expected: self.dim,
                got: alpha.len(),
            });
        }
        let order: usize = alpha.iter().map(|&a| a as usize).sum();
        let jet = self.eval_jet(point, order)?;
        Ok(jet.partial(alpha).expect("order covers alpha"))
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

/// Parses with the dimension inferred from the largest variable used.
impl FromStr for Expression {
    type Err = ExprError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let root = Parser::new(s, usize::MAX).parse()?;
        let dim = root.max_var().map_or(1, |v| v + 1);
        Ok(Expression::from_node(root, dim))
    }
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    dim: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, dim: usize) -> Self {
        Parser {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            dim,
        }
    }

    fn parse(mut self) -> Result<Node, ExprError> {
        let node = self.expr()?;
        self.skip_ws();
        if self.pos < self.bytes.len() {
            return Err(self.error(format!("unexpected `{}`", self.peek_char())));
        }
        Ok(node)
    }

    fn error(&self, msg: impl Into<String>) -> ExprError {
        ExprError::Syntax {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn peek_char(&self) -> char {
        self.src[self.pos..].chars().next().unwrap_or('\0')
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else if self.pos >= self.bytes.len() {
            Err(self.error(format!("expected `{}`, found end of input", c as char)))
        } else {
            Err(self.error(format!("expected `{}`, found `{}`", c as char, self.peek_char())))
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(b'*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.factor()?));
            } else if self.eat(b'/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.factor()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Node, ExprError> {
        if self.eat(b'-') {
            return Ok(Node::Neg(Box::new(self.factor()?)));
        }
        let base = self.base()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let negative = self.eat(b'-');
        self.skip_ws();
        let start = self.pos;
        let k = self.natural()?;
        let k = u32::try_from(k).map_err(|_| ExprError::Syntax {
            pos: start,
            msg: "exponent too large".into(),
        })?;
        let pow = Node::Pow(Box::new(base), k);
        Ok(if negative {
            Node::Div(Box::new(Node::Const(1.0)), Box::new(pow))
        } else {
            pow
        })
    }

    fn natural(&mut self) -> Result<usize, ExprError> {
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a natural number"));
        }
        self.src[start..self.pos].parse().map_err(|_| ExprError::Syntax {
            pos: start,
            msg: "number too large".into(),
        })
    }

    fn number(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.bytes.len() && p.bytes[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut count = digits(self);
        if self.pos < self.bytes.len() && self.bytes[self.pos] == b'.' {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            return Err(ExprError::Syntax {
                pos: start,
                msg: "malformed number".into(),
            });
        }
        if self.pos < self.bytes.len() && matches!(self.bytes[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.bytes.len() && matches!(self.bytes[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>()
            .map(Node::Const)
            .map_err(|_| ExprError::Syntax {
                pos: start,
                msg: format!("malformed number `{text}`"),
            })
    }

    fn base(&mut self) -> Result<Node, ExprError> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(_) => Err(self.error(format!("unexpected `{}`", self.peek_char()))),
        }
    }

    fn identifier(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        let word = &self.src[start..self.pos];
        let func = match word {
            "exp" => Some(Func::Exp),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "ln" => Some(Func::Ln),
            _ => None,
        };
        if let Some(func) = func {
            self.expect(b'(')?;
            let arg = self.expr()?;
            self.expect(b')')?;
            return Ok(Node::Func(func, Box::new(arg)));
        }
        let has_digits = self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit();
        if word != "x" || !has_digits {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_alphanumeric() {
                self.pos += 1;
            }
            return Err(ExprError::UnknownIdentifier {
                name: self.src[start..self.pos].to_string(),
                pos: start,
            });
        }
        let index = self.natural()?;
        if index == 0 || index > self.dim {
            return Err(ExprError::VariableOutOfRange {
                index,
                pos: start,
                dim: self.dim,
            });
        }
        Ok(Node::Var(index - 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expression {
        Expression::parse(s, 4).unwrap()
    }

    #[test]
    fn product_plus_constant() {
        let e = p("x1*x2 + 3");
        assert_eq!(
            e.root(),
            &Node::Add(
                Box::new(Node::Mul(Box::new(Node::Var(0)), Box::new(Node::Var(1)))),
                Box::new(Node::Const(3.0))
            )
        );
        assert_eq!(e.eval_scalar(&[2.0, 5.0, 0.0, 0.0]).unwrap(), 13.0);
    }

    #[test]
    fn rational_records_denominator() {
        let e = p("x1^2 / (1 + x3^2)");
        assert_eq!(e.denominator_count(), 1);
        assert!(matches!(e.root(), Node::Div(..)));
        assert_eq!(e.denominators()[0].to_string(), "1 + x3^2");
    }

    #[test]
    fn variable_out_of_range() {
        assert_eq!(
            Expression::parse("x9", 4),
            Err(ExprError::VariableOutOfRange { index: 9, pos: 0, dim: 4 })
        );
        assert!(matches!(
            Expression::parse("x0", 4),
            Err(ExprError::VariableOutOfRange { index: 0, .. })
        ));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        assert_eq!(
            Expression::parse("x1 + * x2", 4),
            Err(ExprError::Syntax { pos: 5, msg: "unexpected `*`".into() })
        );
        assert!(matches!(
            Expression::parse("(x1 + x2", 4),
            Err(ExprError::Syntax { pos: 8, .. })
        ));
        assert!(matches!(
            Expression::parse("x1 x2", 4),
            Err(ExprError::Syntax { pos: 3, .. })
        ));
        assert!(matches!(Expression::parse("", 4), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn unknown_identifier() {
        assert_eq!(
            Expression::parse("2*tan(x1)", 4),
            Err(ExprError::UnknownIdentifier { name: "tan".into(), pos: 2 })
        );
        assert!(matches!(
            Expression::parse("y1", 4),
            Err(ExprError::UnknownIdentifier { .. })
        ));
    }

    #[test]
    fn zero_power_is_one() {
        assert_eq!(p("x1^0").eval_scalar(&[7.0, 1.0, 1.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn division_by_zero() {
        assert_eq!(
            p("1/x1").eval_scalar(&[0.0, 1.0, 1.0, 1.0]),
            Err(ExprError::DivisionByZero)
        );
        assert_eq!(
            p("1/x1").eval_jet(&[0.0, 1.0, 1.0, 1.0], 2),
            Err(ExprError::DivisionByZero)
        );
    }

    #[test]
    fn ln_domain() {
        assert_eq!(p("ln(x1)").eval_scalar(&[-1.0, 0.0, 0.0, 0.0]), Err(ExprError::Domain(-1.0)));
        assert!(matches!(
            p("ln(x1 - 1)").eval_jet(&[1.0, 0.0, 0.0, 0.0], 1),
            Err(ExprError::Domain(_))
        ));
    }

    #[test]
    fn negative_power_becomes_quotient() {
        let e = p("x2^-2");
        assert_eq!(e.denominator_count(), 1);
        assert_eq!(e.eval_scalar(&[0.0, 2.0, 0.0, 0.0]).unwrap(), 0.25);
    }

    #[test]
    fn unary_minus_and_precedence() {
        let e = p("-x1^2 + 2*-x2");
        assert_eq!(e.eval_scalar(&[3.0, 1.0, 0.0, 0.0]).unwrap(), -11.0);
        let e = p("2 - 3 - 4");
        assert_eq!(e.eval_scalar(&[0.0; 4]).unwrap(), -5.0);
        let e = p("8 / 2 / 2");
        assert_eq!(e.eval_scalar(&[0.0; 4]).unwrap(), 2.0);
    }

    #[test]
    fn scientific_numbers() {
        assert_eq!(p("1.5e2 + .5").eval_scalar(&[0.0; 4]).unwrap(), 150.5);
        assert_eq!(p("2E-1").eval_scalar(&[0.0; 4]).unwrap(), 0.2);
    }

    #[test]
    fn display_round_trips() {
        for src in ["x1*x2 + 3", "x1^2/(1 + x3^2)", "exp(-x1)*sin(x2 - x3)", "(x1 - x2)^3", "1 - (x1 - x2)"] {
            let e = p(src);
            let again = Expression::parse(&e.to_string(), 4).unwrap();
            assert_eq!(e, again, "{src} -> {e}");
        }
    }

    #[test]
    fn jet_of_square() {
        let e = Expression::parse("x1^2", 1).unwrap();
        assert_eq!(e.eval_jet(&[3.0], 2).unwrap().coeffs(), &[9.0, 6.0, 1.0]);
    }

    #[test]
    fn jet_order_cap() {
        let e = p("x1").with_max_order(2);
        assert_eq!(
            e.eval_jet(&[0.0; 4], 3),
            Err(ExprError::OrderTooHigh { requested: 3, max: 2 })
        );
    }

    #[test]
    fn constant_jet() {
        let j = p("5").eval_jet(&[0.3, 0.1, 0.2, 0.9], 3).unwrap();
        assert_eq!(j.value(), 5.0);
        assert!(j.coeffs()[1..].iter().all(|&c| c == 0.0));
    }

    #[test]
    fn bilinear_mixed_partial() {
        let e = p("x1*x2");
        for pt in [[0.0, 0.0, 0.0, 0.0], [1.5, -2.0, 3.0, 0.1]] {
            assert_eq!(e.partial(&pt, &[1, 1, 0, 0]).unwrap(), 1.0);
        }
        let cube = Expression::parse("x1^3", 1).unwrap();
        assert_eq!(cube.partial(&[2.0], &[2]).unwrap(), 12.0);
    }

    #[test]
    fn from_str_infers_dimension() {
        let e: Expression = "x1 + x5".parse().unwrap();
        assert_eq!(e.dim(), 5);
    }
}
