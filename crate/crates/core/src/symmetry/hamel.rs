use nalgebra::DMatrix;

use super::{CandidatePair, Outcome};
use crate::check::Tolerances;
use crate::error::Result;
use crate::expr::{Expr, Var};
use crate::field::{eval_exprs, vanishing_stats};
use crate::point::PhasePoint;
use crate::spray::SpraySpec;

/// Terms of `G(h)`.
pub(super) fn spray_terms(s: &SpraySpec, h: &Expr) -> Vec<Expr> {
    s.geodesic_field().apply_terms(h)
}

/// Terms of `delta h / delta x^i`.
pub(super) fn delta_terms(s: &SpraySpec, h: &Expr, i: usize) -> Vec<Expr> {
    let nc = s.connection();
    let mut t = vec![h.diff(Var::x(i))];
    t.extend((0..s.dim()).filter(|&j| !nc[j][i].is_zero()).map(|j| -(&nc[j][i] * h.diff(Var::y(j)))));
    t.retain(|e| !e.is_zero());
    t
}

/// Terms of `(delta_G f)_i = G(df/dy^i) - df/dx^i`.
pub(super) fn euler_lagrange_terms(s: &SpraySpec, f: &Expr) -> Vec<Vec<Expr>> {
    (0..s.dim())
        .map(|i| {
            let mut t = spray_terms(s, &f.diff(Var::y(i)));
            t.push(-f.diff(Var::x(i)));
            t.retain(|e| !e.is_zero());
            t
        })
        .collect()
}

fn negate(t: Vec<Expr>) -> impl Iterator<Item = Expr> {
    t.into_iter().map(|e| -e)
}

/// `delta_G f = 0` on `points`.
pub fn is_hamel(f: &Expr, s: &SpraySpec, points: &[PhasePoint], tol: &Tolerances) -> Result<Outcome> {
    Ok(Outcome::from_stats(vanishing_stats(&euler_lagrange_terms(s, f), points)?, tol.hamel))
}

fn closure_terms(f: &Expr, s: &SpraySpec) -> Vec<Vec<Expr>> {
    let n = s.dim();
    let fy: Vec<Expr> = (0..n).map(|j| f.diff(Var::y(j))).collect();
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut t = delta_terms(s, &fy[j], i);
            t.extend(negate(delta_terms(s, &fy[i], j)));
            out.push(t);
        }
    }
    out
}

/// `M_ij = delta/delta x^i (df/dy^j) - delta/delta x^j (df/dy^i)`, the
/// components of `d_h d_J f`.
pub fn dh_dj_closure(f: &Expr, s: &SpraySpec, p: &PhasePoint) -> Result<DMatrix<f64>> {
    let n = s.dim();
    let fy: Vec<Expr> = (0..n).map(|j| f.diff(Var::y(j))).collect();
    let d: Vec<Vec<Expr>> = fy.iter().map(|h| s.delta(h)).collect();
    let flat: Vec<Expr> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| &d[j][i] - &d[i][j]).collect();
    let v = eval_exprs(&flat, p)?;
    let mut m = DMatrix::from_row_slice(n, n, &v);
    // exact antisymmetry
    for i in 0..n {
        m[(i, i)] = 0.0;
        for j in (i + 1)..n {
            m[(j, i)] = -m[(i, j)];
        }
    }
    Ok(m)
}

/// `d_h d_J f = 0` on `points`, at the Hamel tolerance.
pub fn dh_dj_closure_check(f: &Expr, s: &SpraySpec, points: &[PhasePoint], tol: &Tolerances) -> Result<Outcome> {
    Ok(Outcome::from_stats(vanishing_stats(&closure_terms(f, s), points)?, tol.hamel))
}

/// Hamel and `f = G(f')`; unknown without a witness.
pub fn is_strong_hamel(
    pair: &CandidatePair,
    s: &SpraySpec,
    points: &[PhasePoint],
    tol: &Tolerances,
) -> Result<Outcome> {
    let Some(fp) = &pair.fprime else {
        return Ok(Outcome::unknown(tol.strong_hamel));
    };
    let mut quantities = euler_lagrange_terms(s, &pair.f);
    let mut t = vec![pair.f.clone()];
    t.extend(negate(spray_terms(s, fp)));
    quantities.push(t);
    Ok(Outcome::from_stats(vanishing_stats(&quantities, points)?, tol.strong_hamel))
}

/// `delta_G~ f = delta_G f` for `G~ = G - 2 P C`, both sides computed
/// from their own spray.
pub fn projective_invariance_check(
    f: &Expr,
    s: &SpraySpec,
    p_factor: &Expr,
    points: &[PhasePoint],
    tol: &Tolerances,
) -> Result<Outcome> {
    let st = s.deform_unchecked(p_factor);
    let q: Vec<Vec<Expr>> = euler_lagrange_terms(&st, f)
        .into_iter()
        .zip(euler_lagrange_terms(s, f))
        .map(|(mut a, b)| {
            a.extend(negate(b));
            a
        })
        .collect();
    Ok(Outcome::from_stats(vanishing_stats(&q, points)?, tol.projective_invariance))
}
