//! A list of expressions compiled once and evaluated at many points.

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::check::ResidualStats;
use crate::error::Result;
use crate::expr::{Expr, Tape};
use crate::point::PhasePoint;

#[derive(Debug)]
pub struct Field {
    exprs: Vec<Expr>,
    tape: OnceLock<Tape>,
}

impl Clone for Field {
    fn clone(&self) -> Self {
        Field { exprs: self.exprs.clone(), tape: self.tape.clone() }
    }
}

impl Field {
    pub fn new(exprs: Vec<Expr>) -> Field {
        Field { exprs, tape: OnceLock::new() }
    }

    pub fn scalar(e: Expr) -> Field {
        Field::new(vec![e])
    }

    pub fn exprs(&self) -> &[Expr] {
        &self.exprs
    }

    pub fn len(&self) -> usize {
        self.exprs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exprs.is_empty()
    }

    pub fn tape(&self) -> &Tape {
        self.tape.get_or_init(|| Tape::compile(&self.exprs))
    }

    pub fn eval(&self, p: &PhasePoint) -> Result<Vec<f64>> {
        Ok(self.tape().eval(&p.x, &p.y)?)
    }

    pub fn eval_scalar(&self, p: &PhasePoint) -> Result<f64> {
        Ok(self.eval(p)?[0])
    }

    /// Evaluates at every point, in parallel, preserving point order.
    pub fn eval_all(&self, points: &[PhasePoint]) -> Result<Vec<Vec<f64>>> {
        let tape = self.tape();
        points.par_iter().map_init(Vec::new, |scratch, p| Ok(tape.eval_with(&p.x, &p.y, scratch)?)).collect()
    }
}

/// Compiles and evaluates in one go.
pub fn eval_exprs(exprs: &[Expr], p: &PhasePoint) -> Result<Vec<f64>> {
    Ok(Tape::compile(exprs).eval(&p.x, &p.y)?)
}

/// Residuals of quantities that should vanish, each given as the list of
/// terms it sums. Per quantity the residual is `|sum| / (1 + max |term|)`;
/// one residual per point, the largest over the quantities.
pub fn vanishing_stats(quantities: &[Vec<Expr>], points: &[PhasePoint]) -> Result<ResidualStats> {
    let flat: Vec<Expr> = quantities.iter().flatten().cloned().collect();
    let mut stats = ResidualStats::default();
    if flat.is_empty() {
        stats.extend(std::iter::repeat_n(0.0, points.len()));
        return Ok(stats);
    }
    for v in Field::new(flat).eval_all(points)? {
        let mut k = 0;
        let mut worst = 0.0f64;
        for q in quantities {
            let terms = &v[k..k + q.len()];
            k += q.len();
            let sum: f64 = terms.iter().sum();
            let scale = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
            worst = worst_of(worst, crate::check::rel_zero(sum, scale));
        }
        stats.push(worst);
    }
    Ok(stats)
}

fn worst_of(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// Residuals `rel(lhs_i, rhs_i)` of componentwise identities, one per point.
pub fn identity_stats(lhs: &[Expr], rhs: &[Expr], points: &[PhasePoint]) -> Result<ResidualStats> {
    assert_eq!(lhs.len(), rhs.len());
    let n = lhs.len();
    let field = Field::new(lhs.iter().chain(rhs).cloned().collect());
    let mut stats = ResidualStats::default();
    for v in field.eval_all(points)? {
        stats.push((0..n).fold(0.0, |w, i| worst_of(w, crate::check::rel(v[i], v[n + i]))));
    }
    Ok(stats)
}
