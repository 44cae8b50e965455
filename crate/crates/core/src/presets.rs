//! Built-in metrics.

use crate::error::{Error, Result};
use crate::expr::{base_dot_fibre, fibre_norm, fibre_norm_squared, Expr};
use crate::metric::MetricSpec;
use crate::point::Domain;

pub const NAMES: [&str; 6] = ["euclidean", "randers-constant", "conformal", "funk", "berwald", "randers-perturbed"];

/// Half-width of the sampling box used by the ball-domain presets.
pub const BALL_BOX: f64 = 0.4;

/// `F = |y|`.
pub fn euclidean(dim: usize) -> MetricSpec {
    MetricSpec::with_both("euclidean", dim, fibre_norm(dim), fibre_norm_squared(dim).scale(0.5), Domain::cube(dim, 1.0))
}

/// Minkowski-Randers norm `F = |y| + b.y` with constant `b`, `|b| < 1`.
pub fn randers_constant(dim: usize, b: &[f64]) -> MetricSpec {
    assert_eq!(b.len(), dim);
    let drift = Expr::sum(b.iter().enumerate().map(|(i, &bi)| Expr::y(i).scale(bi)));
    MetricSpec::from_finsler("randers-constant", dim, fibre_norm(dim) + drift, Domain::cube(dim, 1.0))
}

pub fn default_randers_drift(dim: usize) -> Vec<f64> {
    (0..dim).map(|i| 0.3 / (i + 1) as f64 * if i % 2 == 0 { 1.0 } else { -1.0 }).collect()
}

/// Riemannian `F^2 = e^(2 phi(x)) |y|^2`.
pub fn conformal(dim: usize, phi: &Expr) -> MetricSpec {
    assert!(phi.is_fibre_free(), "conformal factor must not depend on y");
    let energy = phi.scale(2.0).exp() * fibre_norm_squared(dim).scale(0.5);
    let finsler = phi.exp() * fibre_norm(dim);
    MetricSpec::with_both("conformal", dim, finsler, energy, Domain::cube(dim, 0.5))
}

/// `phi = x1`.
pub fn default_conformal_factor() -> Expr {
    Expr::x(0)
}

fn funk_parts(dim: usize) -> (Expr, Expr, Expr) {
    let xx = Expr::sum((0..dim).map(|i| Expr::x(i) * Expr::x(i)));
    let w = Expr::one() - xx;
    let xy = base_dot_fibre(dim);
    let radicand = &w * fibre_norm_squared(dim) + &xy * &xy;
    (radicand.sqrt(), xy, w)
}

/// Funk metric of the unit ball.
pub fn funk_finsler(dim: usize) -> Expr {
    let (root, xy, w) = funk_parts(dim);
    (root + xy) / w
}

fn ball_domain(dim: usize) -> Domain {
    Domain::cube(dim, BALL_BOX).within_ball(1.0)
}

pub fn funk(dim: usize) -> MetricSpec {
    MetricSpec::from_finsler("funk", dim, funk_finsler(dim), ball_domain(dim))
}

/// `F^~ / 2`, the projective factor relating the flat spray to the Funk
/// geodesic spray.
pub fn funk_factor(dim: usize) -> Expr {
    funk_finsler(dim).scale(0.5)
}

/// Berwald's metric `(sqrt A + <x,y>)^2 / ((1 - |x|^2)^2 sqrt A)` on the
/// unit ball, whose spray is the flat spray deformed by the Funk metric.
pub fn berwald(dim: usize) -> MetricSpec {
    let (root, xy, w) = funk_parts(dim);
    let num = (&root + xy).powf(2.0);
    MetricSpec::from_finsler("berwald", dim, num / (w.powf(2.0) * root), ball_domain(dim))
}

/// Randers metric `|y| + b(x).y` with a non-closed drift form, used as the
/// fixture with non-vanishing chi-curvature.
pub fn randers_perturbed(dim: usize) -> MetricSpec {
    let x = Expr::x;
    let mut b = vec![
        Expr::constant(0.2) + x(1).scale(0.15),
        Expr::constant(-0.1) + x(0).powf(2.0).scale(0.2),
        (x(0) * x(1)).scale(0.1),
    ];
    b.resize(dim.max(3), Expr::zero());
    b.truncate(dim);
    let drift = Expr::sum(b.iter().enumerate().map(|(i, bi)| bi * Expr::y(i)));
    MetricSpec::from_finsler("randers-perturbed", dim, fibre_norm(dim) + drift, Domain::cube(dim, 0.5))
}

/// Looks a preset up by name with its default parameters.
pub fn by_name(name: &str, dim: usize) -> Result<MetricSpec> {
    if !(2..=8).contains(&dim) {
        return Err(Error::Invalid(format!("preset dimension {dim} outside 2..=8")));
    }
    Ok(match name {
        "euclidean" => euclidean(dim),
        "randers-constant" => randers_constant(dim, &default_randers_drift(dim)),
        "conformal" => conformal(dim, &default_conformal_factor()),
        "funk" => funk(dim),
        "berwald" => berwald(dim),
        "randers-perturbed" => randers_perturbed(dim),
        other => return Err(Error::Invalid(format!("unknown preset `{other}`; known: {}", NAMES.join(", ")))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for dim in [2, 3] {
            for name in NAMES {
                let m = by_name(name, dim).unwrap();
                let pts = m.domain().sample(30, 7);
                m.validate(&pts, 1e-9).unwrap_or_else(|e| panic!("{name}({dim}): {e}"));
            }
        }
    }

    #[test]
    fn ball_sprays_are_projectively_flat() {
        use crate::field::Field;
        for (m, factor) in [(funk(2), 0.5), (berwald(2), 1.0), (funk(3), 0.5)] {
            let n = m.dim();
            let s = m.geodesic_spray();
            let pts = m.domain().sample(20, 3);
            let phi = funk_finsler(n);
            let expect: Vec<Expr> = (0..n).map(|i| (&phi * Expr::y(i)).scale(factor)).collect();
            let a = Field::new(s.coeffs().to_vec());
            let b = Field::new(expect);
            for (u, v) in a.eval_all(&pts).unwrap().iter().zip(b.eval_all(&pts).unwrap()) {
                for (p, q) in u.iter().zip(&v) {
                    assert!((p - q).abs() < 1e-11 * (1.0 + q.abs()), "{}: {p} vs {q}", m.name());
                }
            }
        }
    }

    #[test]
    fn funk_at_origin_is_euclidean() {
        let f = funk_finsler(2);
        assert!((f.eval(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 5.0).abs() < 1e-15);
    }
}
