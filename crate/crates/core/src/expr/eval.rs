use std::collections::HashMap;
use std::fmt;

use super::{BinaryOp, Expr, Kind, UnaryOp, VarKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalErrorKind {
    SqrtOfNegative,
    LogOfNonPositive,
    DivisionByZero,
    InvalidPower,
    NonFinite,
    DimensionMismatch,
}

impl fmt::Display for EvalErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EvalErrorKind::SqrtOfNegative => "sqrt of a negative value",
            EvalErrorKind::LogOfNonPositive => "log of a non-positive value",
            EvalErrorKind::DivisionByZero => "division by zero",
            EvalErrorKind::InvalidPower => "invalid power",
            EvalErrorKind::NonFinite => "non-finite value",
            EvalErrorKind::DimensionMismatch => "point dimension too small",
        };
        f.write_str(s)
    }
}

/// Domain failure during evaluation, with the offending subexpression.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("{kind} in `{subexpr}`")]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub subexpr: String,
}

const EXCERPT_LEN: usize = 160;

fn excerpt(e: &Expr) -> String {
    let s = e.to_string();
    if s.len() <= EXCERPT_LEN {
        s
    } else {
        let mut cut = EXCERPT_LEN;
        while !s.is_char_boundary(cut) {
            cut -= 1;
        }
        format!("{}...", &s[..cut])
    }
}

pub(super) fn pow(base: f64, exponent: f64) -> Result<f64, EvalErrorKind> {
    if exponent.fract() == 0.0 && exponent.abs() <= i32::MAX as f64 {
        if base == 0.0 && exponent < 0.0 {
            return Err(EvalErrorKind::DivisionByZero);
        }
        return Ok(base.powi(exponent as i32));
    }
    if base < 0.0 || (base == 0.0 && exponent < 0.0) {
        return Err(EvalErrorKind::InvalidPower);
    }
    Ok(base.powf(exponent))
}

pub(super) fn unary(op: UnaryOp, a: f64) -> Result<f64, EvalErrorKind> {
    match op {
        UnaryOp::Neg => Ok(-a),
        UnaryOp::Sqrt if a < 0.0 => Err(EvalErrorKind::SqrtOfNegative),
        UnaryOp::Sqrt => Ok(a.sqrt()),
        UnaryOp::Exp => Ok(a.exp()),
        UnaryOp::Log if a <= 0.0 => Err(EvalErrorKind::LogOfNonPositive),
        UnaryOp::Log => Ok(a.ln()),
        UnaryOp::Sin => Ok(a.sin()),
        UnaryOp::Cos => Ok(a.cos()),
    }
}

#[derive(Clone, Copy, Debug)]
enum Instr {
    Const(f64),
    X(usize),
    Y(usize),
    Binary(BinaryOp, u32, u32),
    Unary(UnaryOp, u32),
    Pow(u32, f64),
}

/// A compiled, topologically ordered evaluation program for a set of
/// expressions. Shared subexpressions are evaluated once per call.
#[derive(Clone)]
pub struct Tape {
    instrs: Vec<Instr>,
    origin: Vec<Expr>,
    outputs: Vec<u32>,
    dim: usize,
}

impl fmt::Debug for Tape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tape").field("len", &self.instrs.len()).field("outputs", &self.outputs.len()).finish()
    }
}

impl Tape {
    pub fn compile(roots: &[Expr]) -> Tape {
        let mut slot: HashMap<u64, u32> = HashMap::new();
        let mut instrs = Vec::new();
        let mut origin = Vec::new();
        let mut dim = 0;
        let mut stack: Vec<(Expr, bool)> = roots.iter().rev().map(|r| (r.clone(), false)).collect();
        while let Some((e, expanded)) = stack.pop() {
            if slot.contains_key(&e.id()) {
                continue;
            }
            if !expanded {
                stack.push((e.clone(), true));
                for c in e.children() {
                    if !slot.contains_key(&c.id()) {
                        stack.push((c.clone(), false));
                    }
                }
                continue;
            }
            let s = |c: &Expr| slot[&c.id()];
            let instr = match e.kind() {
                Kind::Const(c) => Instr::Const(*c),
                Kind::Var(v) => {
                    dim = dim.max(v.index + 1);
                    match v.kind {
                        VarKind::Base => Instr::X(v.index),
                        VarKind::Fibre => Instr::Y(v.index),
                    }
                }
                Kind::Binary(op, a, b) => Instr::Binary(*op, s(a), s(b)),
                Kind::Unary(op, a) => Instr::Unary(*op, s(a)),
                Kind::Pow(a, c) => Instr::Pow(s(a), *c),
            };
            slot.insert(e.id(), instrs.len() as u32);
            instrs.push(instr);
            origin.push(e);
        }
        let outputs = roots.iter().map(|r| slot[&r.id()]).collect();
        Tape { instrs, origin, outputs, dim }
    }

    pub fn len(&self) -> usize {
        self.instrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instrs.is_empty()
    }

    pub fn outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Smallest point dimension this tape can be evaluated at.
    pub fn required_dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>, EvalError> {
        let mut scratch = Vec::new();
        self.eval_with(x, y, &mut scratch)
    }

    /// Evaluates reusing `scratch` as the register file.
    pub fn eval_with(&self, x: &[f64], y: &[f64], scratch: &mut Vec<f64>) -> Result<Vec<f64>, EvalError> {
        if x.len() < self.dim || y.len() < self.dim {
            return Err(EvalError {
                kind: EvalErrorKind::DimensionMismatch,
                subexpr: format!("needs dimension {}", self.dim),
            });
        }
        scratch.clear();
        scratch.reserve(self.instrs.len());
        for (k, instr) in self.instrs.iter().enumerate() {
            let r = match *instr {
                Instr::Const(c) => Ok(c),
                Instr::X(i) => Ok(x[i]),
                Instr::Y(i) => Ok(y[i]),
                Instr::Binary(op, a, b) => {
                    let (a, b) = (scratch[a as usize], scratch[b as usize]);
                    match op {
                        BinaryOp::Add => Ok(a + b),
                        BinaryOp::Sub => Ok(a - b),
                        BinaryOp::Mul => Ok(a * b),
                        BinaryOp::Div if b == 0.0 => Err(EvalErrorKind::DivisionByZero),
                        BinaryOp::Div => Ok(a / b),
                    }
                }
                Instr::Unary(op, a) => unary(op, scratch[a as usize]),
                Instr::Pow(a, c) => pow(scratch[a as usize], c),
            };
            let v = r.and_then(|v| if v.is_finite() { Ok(v) } else { Err(EvalErrorKind::NonFinite) });
            match v {
                Ok(v) => scratch.push(v),
                Err(kind) => {
                    return Err(EvalError { kind, subexpr: excerpt(&self.origin[k]) });
                }
            }
        }
        Ok(self.outputs.iter().map(|&o| scratch[o as usize]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[test]
    fn arithmetic_examples() {
        let e = parse("y1^2+y2^2", 2).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 25.0);
        let e = parse("sqrt(y1^2+y2^2)", 2).unwrap();
        assert_eq!(e.eval(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 5.0);
    }

    #[test]
    fn log_of_negative_reports_subexpression() {
        let e = parse("log(x1)", 2).unwrap();
        let err = e.eval(&[-1.0, 0.0], &[1.0, 0.0]).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::LogOfNonPositive);
        assert_eq!(err.subexpr, "log(x1)");
    }

    #[test]
    fn division_by_zero_and_sqrt_domain() {
        let e = parse("1/(x1 - x2)", 2).unwrap();
        assert_eq!(e.eval(&[1.0, 1.0], &[1.0, 0.0]).unwrap_err().kind, EvalErrorKind::DivisionByZero);
        let e = parse("sqrt(x1)", 2).unwrap();
        assert_eq!(e.eval(&[-1.0, 0.0], &[1.0, 0.0]).unwrap_err().kind, EvalErrorKind::SqrtOfNegative);
        let e = parse("x1^0.5", 2).unwrap();
        assert_eq!(e.eval(&[-1.0, 0.0], &[1.0, 0.0]).unwrap_err().kind, EvalErrorKind::InvalidPower);
        let e = parse("x1^3", 2).unwrap();
        assert_eq!(e.eval(&[-2.0, 0.0], &[1.0, 0.0]).unwrap(), -8.0);
    }

    #[test]
    fn evaluation_is_bit_deterministic() {
        let e = parse("sin(x1*y2)/exp(y1) + log(1 + x2^2)", 2).unwrap();
        let t = Tape::compile(std::slice::from_ref(&e));
        let a = t.eval(&[0.3, -0.7], &[1.1, 2.3]).unwrap();
        let b = t.eval(&[0.3, -0.7], &[1.1, 2.3]).unwrap();
        assert_eq!(a[0].to_bits(), b[0].to_bits());
    }

    #[test]
    fn shared_subexpressions_compile_once() {
        let s = parse("sqrt(y1^2+y2^2)", 2).unwrap();
        let t = Tape::compile(&[s.clone(), &s * 2.0, &s + &s]);
        // y1, 2, y1^2, y2, y2^2, sum, sqrt, const 2 reused, s*2, s+s
        assert!(t.len() <= 10, "{}", t.len());
        assert_eq!(t.outputs(), 3);
    }

    #[test]
    fn dimension_checked() {
        let e = parse("x3", 3).unwrap();
        let err = e.eval(&[0.0, 0.0], &[1.0, 0.0]).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::DimensionMismatch);
    }
}
