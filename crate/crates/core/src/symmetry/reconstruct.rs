use super::hamel::spray_terms;
use super::Outcome;
use crate::check::Tolerances;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::field::{vanishing_stats, Field};
use crate::forms::OneForm;
use crate::point::PhasePoint;
use crate::spray::SpraySpec;

const PANELS: usize = 16;
const MAX_PANELS: usize = 4096;
const GAUSS_NODES: [f64; 4] =
    [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
const GAUSS_WEIGHTS: [f64; 4] =
    [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];

/// Result of integrating `-beta_i dy^i` along a fibre.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reconstruction {
    /// `f'(x, y) - f'(x, y0)`.
    pub value: f64,
    /// Difference between the two integration paths.
    pub discrepancy: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// Integral of `beta_i dy^i` along the segment `a -> b` in the fibre over `x`.
fn segment(beta: &Field, x: &[f64], a: &[f64], b: &[f64]) -> Result<f64> {
    let d: Vec<f64> = a.iter().zip(b).map(|(u, v)| v - u).collect();
    // refine when the segment passes close to the singular point y = 0
    let len = norm(&d);
    let t = if len > 0.0 { (-dot(a, &d) / (len * len)).clamp(0.0, 1.0) } else { 0.0 };
    let gap = norm(&a.iter().zip(&d).map(|(u, dv)| u + t * dv).collect::<Vec<f64>>());
    let panels = ((PANELS as f64 * len / gap.max(1e-3)).ceil() as usize).clamp(PANELS, MAX_PANELS);
    let h = 1.0 / panels as f64;
    let mut acc = 0.0;
    for k in 0..panels {
        let mid = (k as f64 + 0.5) * h;
        for (node, w) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
            let t = mid + 0.5 * h * node;
            let y: Vec<f64> = a.iter().zip(&d).map(|(u, dv)| u + t * dv).collect();
            let v = beta.eval(&PhasePoint { x: x.to_vec(), y })?;
            acc += 0.5 * h * w * dot(&v, &d);
        }
    }
    Ok(acc)
}

fn polyline(beta: &Field, x: &[f64], nodes: &[&[f64]]) -> Result<f64> {
    nodes.windows(2).map(|w| segment(beta, x, w[0], w[1])).sum()
}

/// Unit vector orthogonal to `d`, preferring the plane of `d` and `m`, with
/// `u . m >= 0`.
fn offset_direction(d: &[f64], m: &[f64]) -> Vec<f64> {
    let dn = norm(d);
    let mut u: Vec<f64> = if dn > 0.0 {
        let k = dot(m, d) / (dn * dn);
        m.iter().zip(d).map(|(a, b)| a - k * b).collect()
    } else {
        m.to_vec()
    };
    if norm(&u) < 1e-6 * (1.0 + norm(m)) {
        // m parallel to d: pick the coordinate axis least aligned with d
        let i = (0..d.len()).min_by(|&a, &b| d[a].abs().total_cmp(&d[b].abs())).unwrap_or(0);
        let mut e = vec![0.0; d.len()];
        e[i] = 1.0;
        let k = if dn > 0.0 { dot(&e, d) / (dn * dn) } else { 0.0 };
        u = e.iter().zip(d).map(|(a, b)| a - k * b).collect();
    }
    let un = norm(&u);
    u.iter().map(|a| a / un).collect()
}

/// `f'(x, y) - f'(x, y0) = -int beta_i dy^i` along the fibre over `p.x`,
/// computed on two different polylines from `y0` to `p.y`. Fails with
/// [`Error::PathDependent`] when they disagree by more than `tol`.
pub fn reconstruct_vertical_potential(beta: &[Expr], y0: &[f64], p: &PhasePoint, tol: f64) -> Result<Reconstruction> {
    let n = p.dim();
    if beta.len() != n || y0.len() != n {
        return Err(Error::Dimension { expected: n, got: beta.len().min(y0.len()) });
    }
    let field = Field::new(beta.to_vec());
    let y = &p.y;
    let radius = norm(y).max(norm(y0));
    let d: Vec<f64> = y0.iter().zip(y).map(|(a, b)| b - a).collect();
    let mid: Vec<f64> = y0.iter().zip(y).map(|(a, b)| 0.5 * (a + b)).collect();
    let u = offset_direction(&d, &mid);
    let waypoint = |scale: f64| mid.iter().zip(&u).map(|(m, e)| m + scale * radius * e).collect::<Vec<f64>>();
    // Closest approach of the straight segment to the origin.
    let t = if norm(&d) > 0.0 { (-dot(y0, &d) / dot(&d, &d)).clamp(0.0, 1.0) } else { 0.0 };
    let closest: Vec<f64> = y0.iter().zip(&d).map(|(a, b)| a + t * b).collect();
    let straight_ok = norm(&closest) > 0.1 * norm(y).min(norm(y0));

    let w1 = waypoint(0.5);
    let first =
        if straight_ok { polyline(&field, &p.x, &[y0, y])? } else { polyline(&field, &p.x, &[y0, &waypoint(1.0), y])? };
    let second = polyline(&field, &p.x, &[y0, &w1, y])?;
    let discrepancy = (first - second).abs();
    if !(discrepancy <= tol) {
        return Err(Error::PathDependent { discrepancy, tolerance: tol });
    }
    Ok(Reconstruction { value: -first, discrepancy })
}

/// For a geodesically invariant `alpha = alpha_i dx^i + beta_i dy^i`, the
/// vertical part of `L_G alpha = 0` gives `alpha_i = -G(beta_i) + 2 N^j_i beta_j`.
pub fn vertical_potential_converse(
    alpha: &OneForm,
    s: &SpraySpec,
    points: &[PhasePoint],
    tol: &Tolerances,
) -> Result<Outcome> {
    let n = s.dim();
    let nc = s.connection();
    let b = alpha.dy();
    let q: Vec<Vec<Expr>> = (0..n)
        .map(|i| {
            let mut t = vec![alpha.dx()[i].clone()];
            t.extend(spray_terms(s, &b[i]));
            t.extend((0..n).filter(|&j| !nc[j][i].is_zero()).map(|j| (&nc[j][i] * &b[j]).scale(-2.0)));
            t
        })
        .collect();
    Ok(Outcome::from_stats(vanishing_stats(&q, points)?, tol.alpha_identity))
}
