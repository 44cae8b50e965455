//! Expression DAG over base coordinates `x1..xn` and fibre coordinates `y1..yn`.
//!
//! Every node is hash-consed into a process-wide pool, so structurally equal
//! subtrees share one allocation and one id. Derivatives are memoized per
//! `(node, variable)`. Nodes are never freed; the pool lives for the process.

mod diff;
mod eval;
mod parse;
mod print;

use std::collections::HashMap;
use std::fmt;
use std::ops;
use std::sync::{Arc, LazyLock, Mutex};

pub use eval::{EvalError, EvalErrorKind, Tape};
pub use parse::{parse, ParseError};

/// Largest supported dimension; dependency masks use one bit per coordinate.
pub const MAX_DIM: usize = 32;

/// Which half of the tangent bundle coordinates a variable belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    Base,
    Fibre,
}

/// A coordinate variable; `index` is zero-based (`x1` has index 0).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub kind: VarKind,
    pub index: usize,
}

impl Var {
    pub fn x(index: usize) -> Self {
        assert!(index < MAX_DIM, "variable index {index} out of range");
        Var { kind: VarKind::Base, index }
    }

    pub fn y(index: usize) -> Self {
        assert!(index < MAX_DIM, "variable index {index} out of range");
        Var { kind: VarKind::Fibre, index }
    }

    fn mask(self) -> u64 {
        match self.kind {
            VarKind::Base => 1 << self.index,
            VarKind::Fibre => 1 << (32 + self.index),
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            VarKind::Base => write!(f, "x{}", self.index + 1),
            VarKind::Fibre => write!(f, "y{}", self.index + 1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug)]
pub enum Kind {
    Const(f64),
    Var(Var),
    Binary(BinaryOp, Expr, Expr),
    Unary(UnaryOp, Expr),
    /// Power with a constant exponent.
    Pow(Expr, f64),
}

#[derive(Debug)]
struct Node {
    id: u64,
    deps: u64,
    kind: Kind,
}

/// Immutable, cheaply clonable handle to a hash-consed expression node.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Key {
    Const(u64),
    Var(Var),
    Binary(BinaryOp, u64, u64),
    Unary(UnaryOp, u64),
    Pow(u64, u64),
}

#[derive(Default)]
struct Pool {
    nodes: HashMap<Key, Expr>,
    next_id: u64,
}

static POOL: LazyLock<Mutex<Pool>> = LazyLock::new(|| Mutex::new(Pool::default()));

fn intern(key: Key, make: impl FnOnce() -> (Kind, u64)) -> Expr {
    let mut pool = POOL.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(e) = pool.nodes.get(&key) {
        return e.clone();
    }
    let (kind, deps) = make();
    let id = pool.next_id;
    pool.next_id += 1;
    let e = Expr(Arc::new(Node { id, deps, kind }));
    pool.nodes.insert(key, e.clone());
    e
}

/// Number of distinct nodes created so far in the process-wide pool.
pub fn pool_size() -> usize {
    POOL.lock().unwrap_or_else(|e| e.into_inner()).nodes.len()
}

impl Expr {
    pub fn constant(c: f64) -> Expr {
        intern(Key::Const(c.to_bits()), || (Kind::Const(c), 0))
    }

    pub fn zero() -> Expr {
        Expr::constant(0.0)
    }

    pub fn one() -> Expr {
        Expr::constant(1.0)
    }

    pub fn var(v: Var) -> Expr {
        intern(Key::Var(v), || (Kind::Var(v), v.mask()))
    }

    /// Base coordinate `x{index+1}`.
    pub fn x(index: usize) -> Expr {
        Expr::var(Var::x(index))
    }

    /// Fibre coordinate `y{index+1}`.
    pub fn y(index: usize) -> Expr {
        Expr::var(Var::y(index))
    }

    pub fn id(&self) -> u64 {
        self.0.id
    }

    pub fn kind(&self) -> &Kind {
        &self.0.kind
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.0.kind {
            Kind::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    /// True when the expression structurally mentions `v`.
    pub fn depends_on(&self, v: Var) -> bool {
        self.0.deps & v.mask() != 0
    }

    /// True when no fibre coordinate appears.
    pub fn is_fibre_free(&self) -> bool {
        self.0.deps >> 32 == 0
    }

    /// Smallest dimension `n` such that every variable index is below `n`.
    pub fn min_dim(&self) -> usize {
        let base = self.0.deps & 0xffff_ffff;
        let fibre = self.0.deps >> 32;
        let top = |m: u64| if m == 0 { 0 } else { 64 - m.leading_zeros() as usize };
        top(base).max(top(fibre))
    }

    fn binary(op: BinaryOp, a: &Expr, b: &Expr) -> Expr {
        let deps = a.0.deps | b.0.deps;
        let (a2, b2) = (a.clone(), b.clone());
        intern(Key::Binary(op, a.id(), b.id()), move || (Kind::Binary(op, a2, b2), deps))
    }

    fn unary(op: UnaryOp, a: &Expr) -> Expr {
        let deps = a.0.deps;
        let a2 = a.clone();
        intern(Key::Unary(op, a.id()), move || (Kind::Unary(op, a2), deps))
    }

    pub fn add(&self, other: &Expr) -> Expr {
        match (self.as_const(), other.as_const()) {
            (Some(a), Some(b)) => fold(a + b).unwrap_or_else(|| Expr::binary(BinaryOp::Add, self, other)),
            (Some(0.0), _) => other.clone(),
            (_, Some(0.0)) => self.clone(),
            _ => Expr::binary(BinaryOp::Add, self, other),
        }
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        match (self.as_const(), other.as_const()) {
            (Some(a), Some(b)) => fold(a - b).unwrap_or_else(|| Expr::binary(BinaryOp::Sub, self, other)),
            (_, Some(0.0)) => self.clone(),
            (Some(0.0), _) => other.neg(),
            _ => Expr::binary(BinaryOp::Sub, self, other),
        }
    }

    pub fn mul(&self, other: &Expr) -> Expr {
        match (self.as_const(), other.as_const()) {
            (Some(a), Some(b)) => fold(a * b).unwrap_or_else(|| Expr::binary(BinaryOp::Mul, self, other)),
            (Some(a), _) | (_, Some(a)) if a == 0.0 => Expr::zero(),
            (Some(1.0), _) => other.clone(),
            (_, Some(1.0)) => self.clone(),
            (Some(-1.0), _) => other.neg(),
            (_, Some(-1.0)) => self.neg(),
            _ => Expr::binary(BinaryOp::Mul, self, other),
        }
    }

    pub fn div(&self, other: &Expr) -> Expr {
        match (self.as_const(), other.as_const()) {
            (Some(a), Some(b)) if b != 0.0 => fold(a / b).unwrap_or_else(|| Expr::binary(BinaryOp::Div, self, other)),
            (Some(0.0), _) => Expr::zero(),
            (_, Some(1.0)) => self.clone(),
            _ => Expr::binary(BinaryOp::Div, self, other),
        }
    }

    pub fn neg(&self) -> Expr {
        match &self.0.kind {
            Kind::Const(c) => Expr::constant(-c),
            Kind::Unary(UnaryOp::Neg, inner) => inner.clone(),
            _ => Expr::unary(UnaryOp::Neg, self),
        }
    }

    pub fn powf(&self, exponent: f64) -> Expr {
        if exponent == 0.0 {
            return Expr::one();
        }
        if exponent == 1.0 {
            return self.clone();
        }
        if let Some(c) = self.as_const() {
            if let Some(v) = eval::pow(c, exponent).ok().and_then(fold) {
                return v;
            }
        }
        let a = self.clone();
        let deps = self.0.deps;
        intern(Key::Pow(self.id(), exponent.to_bits()), move || (Kind::Pow(a, exponent), deps))
    }

    pub fn sqrt(&self) -> Expr {
        self.unary_folded(UnaryOp::Sqrt)
    }

    pub fn exp(&self) -> Expr {
        self.unary_folded(UnaryOp::Exp)
    }

    pub fn ln(&self) -> Expr {
        self.unary_folded(UnaryOp::Log)
    }

    pub fn sin(&self) -> Expr {
        self.unary_folded(UnaryOp::Sin)
    }

    pub fn cos(&self) -> Expr {
        self.unary_folded(UnaryOp::Cos)
    }

    fn unary_folded(&self, op: UnaryOp) -> Expr {
        if let Some(c) = self.as_const() {
            if let Some(v) = eval::unary(op, c).ok().and_then(fold) {
                return v;
            }
        }
        Expr::unary(op, self)
    }

    pub fn scale(&self, c: f64) -> Expr {
        Expr::constant(c).mul(self)
    }

    /// Sum of a sequence; empty sums are zero.
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        terms.into_iter().fold(Expr::zero(), |acc, t| acc.add(&t))
    }

    /// Exact partial derivative with respect to `v`.
    pub fn diff(&self, v: Var) -> Expr {
        diff::diff(self, v)
    }

    /// Evaluates at a single point. Compiles a throwaway tape; use [`Tape`]
    /// for repeated evaluation.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
        Tape::compile(std::slice::from_ref(self)).eval(x, y).map(|v| v[0])
    }

    /// Number of distinct nodes reachable from this expression.
    pub fn dag_size(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.id()) {
                continue;
            }
            stack.extend(e.children().cloned());
        }
        seen.len()
    }

    pub(crate) fn children(&self) -> impl Iterator<Item = &Expr> {
        let (a, b): (Option<&Expr>, Option<&Expr>) = match &self.0.kind {
            Kind::Const(_) | Kind::Var(_) => (None, None),
            Kind::Binary(_, a, b) => (Some(a), Some(b)),
            Kind::Unary(_, a) | Kind::Pow(a, _) => (Some(a), None),
        };
        a.into_iter().chain(b)
    }
}

fn fold(v: f64) -> Option<Expr> {
    v.is_finite().then(|| Expr::constant(v))
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.id() == other.id()
    }
}

impl Eq for Expr {}

impl std::hash::Hash for Expr {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.id().hash(state)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl From<f64> for Expr {
    fn from(c: f64) -> Self {
        Expr::constant(c)
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident) => {
        impl ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$method(self, rhs)
            }
        }
        impl ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$method(&self, &rhs)
            }
        }
        impl ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$method(&self, rhs)
            }
        }
        impl ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$method(self, &rhs)
            }
        }
        impl ops::$trait<f64> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::$method(self, &Expr::constant(rhs))
            }
        }
        impl ops::$trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::$method(&self, &Expr::constant(rhs))
            }
        }
    };
}

impl_binop!(Add, add);
impl_binop!(Sub, sub);
impl_binop!(Mul, mul);
impl_binop!(Div, div);

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

/// Euclidean norm `sqrt(y1^2 + ... + yn^2)` of the fibre coordinates.
pub fn fibre_norm(dim: usize) -> Expr {
    fibre_norm_squared(dim).sqrt()
}

pub fn fibre_norm_squared(dim: usize) -> Expr {
    Expr::sum((0..dim).map(|i| Expr::y(i).powf(2.0)))
}

/// `<x, y>` in the standard inner product.
pub fn base_dot_fibre(dim: usize) -> Expr {
    Expr::sum((0..dim).map(|i| Expr::x(i) * Expr::y(i)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_consing_shares_nodes() {
        let a = Expr::x(0) * Expr::y(1);
        let b = Expr::x(0) * Expr::y(1);
        assert_eq!(a.id(), b.id());
        assert_ne!(a.id(), (Expr::y(1) * Expr::x(0)).id());
    }

    #[test]
    fn zero_one_identities() {
        let x = Expr::x(0);
        assert_eq!(&x + 0.0, x);
        assert_eq!(&x * 1.0, x);
        assert!((&x * 0.0).is_zero());
        assert!((Expr::zero() / &x).is_zero());
        assert_eq!(x.powf(1.0), x);
        assert!(x.powf(0.0).is_one());
        assert_eq!((Expr::constant(2.0) * 3.0).as_const(), Some(6.0));
    }

    #[test]
    fn division_by_zero_is_not_folded() {
        let e = Expr::one() / Expr::zero();
        assert!(e.as_const().is_none());
    }

    #[test]
    fn dependency_masks() {
        let e = Expr::x(1) * Expr::y(2).sin();
        assert!(e.depends_on(Var::x(1)));
        assert!(e.depends_on(Var::y(2)));
        assert!(!e.depends_on(Var::x(0)));
        assert_eq!(e.min_dim(), 3);
        assert!(!e.is_fibre_free());
        assert!(Expr::x(0).exp().is_fibre_free());
    }
}
