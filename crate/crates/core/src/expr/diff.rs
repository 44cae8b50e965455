use std::collections::HashMap;
use std::sync::{LazyLock, Mutex};

use super::{BinaryOp, Expr, Kind, UnaryOp, Var};

static MEMO: LazyLock<Mutex<HashMap<(u64, Var), Expr>>> = LazyLock::new(|| Mutex::new(HashMap::new()));

fn memo_get(id: u64, v: Var) -> Option<Expr> {
    MEMO.lock().unwrap_or_else(|e| e.into_inner()).get(&(id, v)).cloned()
}

fn memo_put(id: u64, v: Var, d: Expr) {
    MEMO.lock().unwrap_or_else(|e| e.into_inner()).insert((id, v), d);
}

/// Symbolic partial derivative. Iterative post-order over the sub-DAG that
/// depends on `v`, so deep expressions do not grow the call stack.
pub(super) fn diff(root: &Expr, v: Var) -> Expr {
    if !root.depends_on(v) {
        return Expr::zero();
    }
    if let Some(d) = memo_get(root.id(), v) {
        return d;
    }

    let mut local: HashMap<u64, Expr> = HashMap::new();
    // (node, children_pushed)
    let mut stack: Vec<(Expr, bool)> = vec![(root.clone(), false)];
    while let Some((e, expanded)) = stack.pop() {
        if local.contains_key(&e.id()) {
            continue;
        }
        if !e.depends_on(v) {
            local.insert(e.id(), Expr::zero());
            continue;
        }
        if let Some(d) = memo_get(e.id(), v) {
            local.insert(e.id(), d);
            continue;
        }
        if !expanded {
            stack.push((e.clone(), true));
            for c in e.children() {
                if !local.contains_key(&c.id()) {
                    stack.push((c.clone(), false));
                }
            }
            continue;
        }
        let d = rule(&e, v, &|c: &Expr| local[&c.id()].clone());
        memo_put(e.id(), v, d.clone());
        local.insert(e.id(), d);
    }
    local.remove(&root.id()).expect("root derivative computed")
}

fn rule(e: &Expr, v: Var, d: &dyn Fn(&Expr) -> Expr) -> Expr {
    match e.kind() {
        Kind::Const(_) => Expr::zero(),
        Kind::Var(w) => {
            if *w == v {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Kind::Binary(op, a, b) => {
            let (da, db) = (d(a), d(b));
            match op {
                BinaryOp::Add => da.add(&db),
                BinaryOp::Sub => da.sub(&db),
                BinaryOp::Mul => da.mul(b).add(&a.mul(&db)),
                BinaryOp::Div => {
                    let first = da.div(b);
                    if db.is_zero() {
                        first
                    } else {
                        first.sub(&a.mul(&db).div(&b.powf(2.0)))
                    }
                }
            }
        }
        Kind::Pow(a, c) => {
            let da = d(a);
            Expr::constant(*c).mul(&a.powf(c - 1.0)).mul(&da)
        }
        Kind::Unary(op, a) => {
            let da = d(a);
            match op {
                UnaryOp::Neg => da.neg(),
                UnaryOp::Sqrt => da.div(&Expr::constant(2.0).mul(e)),
                UnaryOp::Exp => e.mul(&da),
                UnaryOp::Log => da.div(a),
                UnaryOp::Sin => a.cos().mul(&da),
                UnaryOp::Cos => a.sin().mul(&da).neg(),
            }
        }
    }
}
