//! Bitwise boolean expressions over named page-sized operands.
//!
//! The text grammar (loosest to tightest binding):
//!
//! ```text
//! or    := xor ('|' xor)*
//! xor   := and ('^' and)*
//! and   := unary ('&' unary)*
//! unary := '!' unary | ident | '(' or ')'
//! ```
//!
//! NAND/NOR/XNOR exist as AST nodes (they print as negated forms) so plans
//! can be requested for them directly. [`Expr::eval`] is the reference
//! bit-parallel evaluator: it is the correctness oracle for everything the
//! planner and sensing engine produce, and the compute path for the
//! host-processing system model.

use crate::bits::Bits;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Expr {
    Var(String),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Xor(Box<Expr>, Box<Expr>),
    Xnor(Box<Expr>, Box<Expr>),
    Nand(Vec<Expr>),
    Nor(Vec<Expr>),
}

#[derive(Debug, PartialEq, Eq)]
pub enum ExprError {
    UnknownVariable(String),
    EmptyOperandList,
    LengthMismatch { var: String, expected: usize, got: usize },
    Parse { pos: usize, message: String },
}

impl std::fmt::Display for ExprError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExprError::UnknownVariable(v) => write!(f, "unknown variable '{v}'"),
            ExprError::EmptyOperandList => write!(f, "operator with no operands"),
            ExprError::LengthMismatch { var, expected, got } => {
                write!(f, "variable '{var}' is {got} bits, expected {expected}")
            }
            ExprError::Parse { pos, message } => write!(f, "parse error at byte {pos}: {message}"),
        }
    }
}

impl std::error::Error for ExprError {}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    /// All variable names, sorted.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Not(e) => e.collect_vars(out),
            Expr::And(es) | Expr::Or(es) | Expr::Nand(es) | Expr::Nor(es) => {
                es.iter().for_each(|e| e.collect_vars(out))
            }
            Expr::Xor(a, b) | Expr::Xnor(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Reference bit-parallel evaluation over full operand vectors.
    pub fn eval(&self, env: &BTreeMap<String, Bits>) -> Result<Bits, ExprError> {
        let width = env
            .values()
            .next()
            .map(Bits::len)
            .ok_or(ExprError::EmptyOperandList)?;
        self.eval_width(env, width)
    }

    fn eval_width(&self, env: &BTreeMap<String, Bits>, width: usize) -> Result<Bits, ExprError> {
        match self {
            Expr::Var(v) => {
                let b = env.get(v).ok_or_else(|| ExprError::UnknownVariable(v.clone()))?;
                if b.len() != width {
                    return Err(ExprError::LengthMismatch {
                        var: v.clone(),
                        expected: width,
                        got: b.len(),
                    });
                }
                Ok(b.clone())
            }
            Expr::Not(e) => {
                let mut r = e.eval_width(env, width)?;
                r.not_assign();
                Ok(r)
            }
            Expr::And(es) | Expr::Nand(es) => {
                if es.is_empty() {
                    return Err(ExprError::EmptyOperandList);
                }
                let mut r = Bits::ones(width);
                for e in es {
                    r.and_assign(&e.eval_width(env, width)?);
                }
                if matches!(self, Expr::Nand(_)) {
                    r.not_assign();
                }
                Ok(r)
            }
            Expr::Or(es) | Expr::Nor(es) => {
                if es.is_empty() {
                    return Err(ExprError::EmptyOperandList);
                }
                let mut r = Bits::zeros(width);
                for e in es {
                    r.or_assign(&e.eval_width(env, width)?);
                }
                if matches!(self, Expr::Nor(_)) {
                    r.not_assign();
                }
                Ok(r)
            }
            Expr::Xor(a, b) | Expr::Xnor(a, b) => {
                let mut r = a.eval_width(env, width)?;
                r.xor_assign(&b.eval_width(env, width)?);
                if matches!(self, Expr::Xnor(..)) {
                    r.not_assign();
                }
                Ok(r)
            }
        }
    }

    pub fn parse(src: &str) -> Result<Expr, ExprError> {
        let mut p = Parser { src: src.as_bytes(), pos: 0 };
        p.skip_ws();
        let e = p.parse_or()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(ExprError::Parse {
                pos: p.pos,
                message: format!("unexpected '{}'", p.src[p.pos] as char),
            });
        }
        Ok(e)
    }

    /// Random expression with at most `max_depth` operator levels above the
    /// leaves, drawing variables from `pool`.
    pub fn random<R: Rng>(rng: &mut R, pool: &[String], max_depth: u32) -> Expr {
        assert!(!pool.is_empty());
        let leaf = |rng: &mut R| {
            let v = Expr::Var(pool[rng.gen_range(0..pool.len())].clone());
            if rng.gen_bool(0.25) {
                Expr::Not(Box::new(v))
            } else {
                v
            }
        };
        if max_depth == 0 {
            return leaf(rng);
        }
        match rng.gen_range(0..10) {
            0 | 1 => {
                let n = rng.gen_range(2..=6);
                Expr::And((0..n).map(|_| Expr::random(rng, pool, max_depth - 1)).collect())
            }
            2 | 3 => {
                let n = rng.gen_range(2..=6);
                Expr::Or((0..n).map(|_| Expr::random(rng, pool, max_depth - 1)).collect())
            }
            4 => Expr::Xor(
                Box::new(Expr::random(rng, pool, max_depth - 1)),
                Box::new(Expr::random(rng, pool, max_depth - 1)),
            ),
            5 => Expr::Xnor(
                Box::new(Expr::random(rng, pool, max_depth - 1)),
                Box::new(Expr::random(rng, pool, max_depth - 1)),
            ),
            6 => {
                let n = rng.gen_range(2..=4);
                Expr::Nand((0..n).map(|_| Expr::random(rng, pool, max_depth - 1)).collect())
            }
            7 => {
                let n = rng.gen_range(2..=4);
                Expr::Nor((0..n).map(|_| Expr::random(rng, pool, max_depth - 1)).collect())
            }
            8 => Expr::Not(Box::new(Expr::random(rng, pool, max_depth - 1))),
            _ => leaf(rng),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Or(_) => 1,
            Expr::Xor(..) => 2,
            Expr::And(_) => 3,
            _ => 4, // leaves and negated forms print atomically
        }
    }

    fn fmt_prec(&self, f: &mut std::fmt::Formatter<'_>, min: u8) -> std::fmt::Result {
        let sep = |f: &mut std::fmt::Formatter<'_>,
                   es: &[Expr],
                   op: &str,
                   prec: u8|
         -> std::fmt::Result {
            for (i, e) in es.iter().enumerate() {
                if i > 0 {
                    write!(f, " {op} ")?;
                }
                e.fmt_prec(f, prec + 1)?;
            }
            Ok(())
        };
        let me = self.precedence();
        let parens = me < min;
        if parens {
            write!(f, "(")?;
        }
        match self {
            Expr::Var(v) => write!(f, "{v}")?,
            Expr::Not(e) => {
                write!(f, "!")?;
                e.fmt_prec(f, 4)?;
            }
            Expr::And(es) => sep(f, es, "&", 3)?,
            Expr::Or(es) => sep(f, es, "|", 1)?,
            Expr::Xor(a, b) => {
                a.fmt_prec(f, 3)?;
                write!(f, " ^ ")?;
                b.fmt_prec(f, 3)?;
            }
            Expr::Xnor(a, b) => {
                write!(f, "!(")?;
                a.fmt_prec(f, 3)?;
                write!(f, " ^ ")?;
                b.fmt_prec(f, 3)?;
                write!(f, ")")?;
            }
            Expr::Nand(es) => {
                write!(f, "!(")?;
                sep(f, es, "&", 3)?;
                write!(f, ")")?;
            }
            Expr::Nor(es) => {
                write!(f, "!(")?;
                sep(f, es, "|", 1)?;
                write!(f, ")")?;
            }
        }
        if parens {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.fmt_prec(f, 0)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.src.get(self.pos).is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn parse_or(&mut self) -> Result<Expr, ExprError> {
        let mut items = vec![self.parse_xor()?];
        while self.eat(b'|') {
            items.push(self.parse_xor()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Expr::Or(items) })
    }

    fn parse_xor(&mut self) -> Result<Expr, ExprError> {
        let mut e = self.parse_and()?;
        while self.eat(b'^') {
            e = Expr::Xor(Box::new(e), Box::new(self.parse_and()?));
        }
        Ok(e)
    }

    fn parse_and(&mut self) -> Result<Expr, ExprError> {
        let mut items = vec![self.parse_unary()?];
        while self.eat(b'&') {
            items.push(self.parse_unary()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Expr::And(items) })
    }

    fn parse_unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'!') {
            return Ok(Expr::Not(Box::new(self.parse_unary()?)));
        }
        if self.eat(b'(') {
            let e = self.parse_or()?;
            if !self.eat(b')') {
                return Err(ExprError::Parse { pos: self.pos, message: "expected ')'".into() });
            }
            return Ok(e);
        }
        self.skip_ws();
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_')
        {
            self.pos += 1;
        }
        if self.pos == start || self.src[start].is_ascii_digit() {
            return Err(ExprError::Parse {
                pos: start,
                message: "expected variable, '!' or '('".into(),
            });
        }
        Ok(Expr::Var(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()))
    }
}
