//! Sprays `G = y^i d/dx^i - 2 G^i d/dy^i` and the geometry they induce:
//! nonlinear connection, horizontal derivatives, curvature, dynamical
//! covariant derivative and Euler-Lagrange form.

use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::field::{eval_exprs, Field};
use crate::forms::{liouville, OneForm, VectorField};
use crate::point::PhasePoint;

/// Where a spray came from.
#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    Metric {
        name: String,
    },
    User,
    /// `G^i + P y^i` applied to `base`.
    Deformed {
        base: Box<Provenance>,
        factor: Expr,
    },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Metric { name } => write!(f, "geodesic spray of {name}"),
            Provenance::User => f.write_str("user-supplied"),
            Provenance::Deformed { base, factor } => write!(f, "({base}) deformed by P = {factor}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpraySpec {
    dim: usize,
    coeffs: Vec<Expr>,
    provenance: Provenance,
    cache: Arc<SprayCache>,
}

#[derive(Debug, Default)]
struct SprayCache {
    connection: OnceLock<Vec<Vec<Expr>>>,
    connection_field: OnceLock<Field>,
    delta_connection: OnceLock<Vec<Vec<Vec<Expr>>>>,
    curvature_field: OnceLock<Field>,
}

impl SpraySpec {
    pub fn new(dim: usize, coeffs: Vec<Expr>) -> SpraySpec {
        SpraySpec::with_provenance(dim, coeffs, Provenance::User)
    }

    pub fn with_provenance(dim: usize, coeffs: Vec<Expr>, provenance: Provenance) -> SpraySpec {
        assert_eq!(coeffs.len(), dim, "spray needs one coefficient per dimension");
        SpraySpec { dim, coeffs, provenance, cache: Arc::default() }
    }

    /// `G^i = 0`.
    pub fn flat(dim: usize) -> SpraySpec {
        SpraySpec::new(dim, vec![Expr::zero(); dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeffs(&self) -> &[Expr] {
        &self.coeffs
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn is_flat(&self) -> bool {
        self.coeffs.iter().all(Expr::is_zero)
    }

    /// The spray as a vector field on `T M`.
    pub fn geodesic_field(&self) -> VectorField {
        VectorField::from_parts(
            (0..self.dim).map(Expr::y).collect(),
            self.coeffs.iter().map(|g| g.scale(-2.0)).collect(),
        )
    }

    /// `G(f) = y^i df/dx^i - 2 G^i df/dy^i`, which is also `nabla f`.
    pub fn apply(&self, f: &Expr) -> Expr {
        let n = self.dim;
        let mut terms: Vec<Expr> = (0..n).map(|i| Expr::y(i) * f.diff(Var::x(i))).collect();
        for (i, g) in self.coeffs.iter().enumerate() {
            if !g.is_zero() {
                terms.push((g * f.diff(Var::y(i))).scale(-2.0));
            }
        }
        Expr::sum(terms)
    }

    /// `N^i_j = dG^i/dy^j`, indexed `[i][j]`.
    pub fn connection(&self) -> &[Vec<Expr>] {
        self.cache
            .connection
            .get_or_init(|| self.coeffs.iter().map(|g| (0..self.dim).map(|j| g.diff(Var::y(j))).collect()).collect())
    }

    pub fn nonlinear_connection(&self, p: &PhasePoint) -> Result<DMatrix<f64>> {
        self.check_point(p)?;
        let field = self
            .cache
            .connection_field
            .get_or_init(|| Field::new(self.connection().iter().flatten().cloned().collect()));
        Ok(DMatrix::from_row_slice(self.dim, self.dim, &field.eval(p)?))
    }

    /// `delta f / delta x^i = df/dx^i - N^j_i df/dy^j`.
    pub fn delta(&self, f: &Expr) -> Vec<Expr> {
        let n = self.dim;
        let fy: Vec<Expr> = (0..n).map(|j| f.diff(Var::y(j))).collect();
        let nc = self.connection();
        (0..n)
            .map(|i| {
                let correction = Expr::sum((0..n).filter(|&j| !nc[j][i].is_zero()).map(|j| &nc[j][i] * &fy[j]));
                f.diff(Var::x(i)) - correction
            })
            .collect()
    }

    pub fn delta_derivative(&self, f: &Expr, p: &PhasePoint) -> Result<Vec<f64>> {
        self.check_point(p)?;
        eval_exprs(&self.delta(f), p)
    }

    /// `D[i][a][b] = delta N^i_b / delta x^a`.
    fn delta_connection(&self) -> &[Vec<Vec<Expr>>] {
        self.cache.delta_connection.get_or_init(|| {
            let n = self.dim;
            let nc = self.connection();
            (0..n)
                .map(|i| {
                    let per_b: Vec<Vec<Expr>> = (0..n).map(|b| self.delta(&nc[i][b])).collect();
                    (0..n).map(|a| (0..n).map(|b| per_b[b][a].clone()).collect()).collect()
                })
                .collect()
        })
    }

    /// Symbolic `R^i_jk = delta N^i_k / delta x^j - delta N^i_j / delta x^k`.
    pub fn curvature_exprs(&self) -> Vec<Vec<Vec<Expr>>> {
        let d = self.delta_connection();
        let n = self.dim;
        (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| &d[i][j][k] - &d[i][k][j]).collect()).collect()).collect()
    }

    pub fn curvature(&self, p: &PhasePoint) -> Result<CurvatureValue> {
        self.check_point(p)?;
        let n = self.dim;
        let field = self
            .cache
            .curvature_field
            .get_or_init(|| Field::new(self.delta_connection().iter().flatten().flatten().cloned().collect()));
        let d = field.eval(p)?;
        let at = |i: usize, a: usize, b: usize| d[(i * n + a) * n + b];
        let r = (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| at(i, j, k) - at(i, k, j)).collect()).collect()).collect();
        Ok(CurvatureValue { r, point: p.clone() })
    }

    /// `(nabla w)_i = G(w_i) - N^j_i w_j` for semi-basic components `w`.
    pub fn nabla_covector(&self, w: &[Expr]) -> Vec<Expr> {
        let n = self.dim;
        assert_eq!(w.len(), n);
        let nc = self.connection();
        (0..n)
            .map(|i| {
                let correction = Expr::sum((0..n).filter(|&j| !nc[j][i].is_zero()).map(|j| &nc[j][i] * &w[j]));
                self.apply(&w[i]) - correction
            })
            .collect()
    }

    /// `(nabla g)_ij = G(g_ij) - N^m_i g_mj - N^m_j g_im`.
    pub fn nabla_tensor(&self, g: &[Vec<Expr>]) -> Vec<Vec<Expr>> {
        let n = self.dim;
        let nc = self.connection();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let c = Expr::sum((0..n).map(|m| &nc[m][i] * &g[m][j] + &nc[m][j] * &g[i][m]));
                        self.apply(&g[i][j]) - c
                    })
                    .collect()
            })
            .collect()
    }

    /// Components `G(df/dy^i) - df/dx^i` of the Euler-Lagrange form.
    pub fn euler_lagrange(&self, f: &Expr) -> Vec<Expr> {
        (0..self.dim).map(|i| self.apply(&f.diff(Var::y(i))) - f.diff(Var::x(i))).collect()
    }

    /// `G^i + P y^i` without the homogeneity check on `P`.
    pub fn deform_unchecked(&self, p: &Expr) -> SpraySpec {
        let coeffs = self.coeffs.iter().enumerate().map(|(i, g)| g + p * Expr::y(i)).collect();
        SpraySpec::with_provenance(
            self.dim,
            coeffs,
            Provenance::Deformed { base: Box::new(self.provenance.clone()), factor: p.clone() },
        )
    }

    /// Projective deformation `G^i + P y^i`, after checking that `P` is
    /// 1-homogeneous on `points`.
    pub fn projective_deform(&self, p: &Expr, points: &[PhasePoint], tol: f64) -> Result<SpraySpec> {
        let r = homogeneity_residual(p, 1.0, points)?;
        if r > tol {
            return Err(Error::Homogeneity {
                what: "projective factor P".into(),
                degree: 1.0,
                residual: r,
                tolerance: tol,
            });
        }
        Ok(self.deform_unchecked(p))
    }

    /// Largest Liouville residual `C(G^i) = 2 G^i` over the coefficients.
    pub fn homogeneity_residual(&self, points: &[PhasePoint]) -> Result<f64> {
        let mut worst = 0.0f64;
        for g in &self.coeffs {
            worst = worst.max(homogeneity_residual(g, 2.0, points)?);
        }
        Ok(worst)
    }

    /// Rejects sprays whose coefficients are not 2-homogeneous.
    pub fn validate(&self, points: &[PhasePoint], tol: f64) -> Result<()> {
        let r = self.homogeneity_residual(points)?;
        if r > tol {
            return Err(Error::Homogeneity {
                what: "spray coefficients".into(),
                degree: 2.0,
                residual: r,
                tolerance: tol,
            });
        }
        Ok(())
    }

    /// `L_G alpha`.
    pub fn lie_derivative_one_form(&self, alpha: &OneForm) -> OneForm {
        alpha.lie_derivative(&self.geodesic_field())
    }

    pub(crate) fn check_point(&self, p: &PhasePoint) -> Result<()> {
        if p.dim() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: p.dim() });
        }
        Ok(())
    }
}

/// `max |C(f) - p f| / (1 + |f|)` over `points`.
pub fn homogeneity_residual(f: &Expr, degree: f64, points: &[PhasePoint]) -> Result<f64> {
    let dim = points.first().map_or(0, PhasePoint::dim);
    let field = Field::new(vec![f.clone(), liouville(f, dim)]);
    let mut worst = 0.0f64;
    for v in field.eval_all(points)? {
        let r = (v[1] - degree * v[0]).abs() / (1.0 + v[0].abs());
        worst = worst.max(if r.is_nan() { f64::INFINITY } else { r });
    }
    Ok(worst)
}

/// Components of `[X, Y]` at `p`.
pub fn commutator(x: &VectorField, y: &VectorField, p: &PhasePoint) -> Result<Vec<f64>> {
    x.bracket(y).eval(p)
}

/// Pointwise curvature tensor, entry `[i][j][k] = R^i_jk`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureValue {
    pub r: Vec<Vec<Vec<f64>>>,
    pub point: PhasePoint,
}

impl CurvatureValue {
    pub fn max_abs(&self) -> f64 {
        self.r.iter().flatten().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{base_dot_fibre, fibre_norm, parse};

    fn pt(x: &[f64], y: &[f64]) -> PhasePoint {
        PhasePoint::new(x.to_vec(), y.to_vec()).unwrap()
    }

    #[test]
    fn flat_spray_derivative_is_transport() {
        let s = SpraySpec::flat(2);
        let f = parse("x1*y1", 2).unwrap();
        let p = pt(&[0.4, 0.1], &[1.5, -0.5]);
        assert_eq!(eval_exprs(&[s.apply(&f)], &p).unwrap()[0], 2.25);
        assert_eq!(s.delta_derivative(&f, &p).unwrap(), vec![1.5, 0.0]);
    }

    #[test]
    fn homogeneity_examples() {
        let pts = vec![pt(&[0.1, 0.2], &[1.0, 0.5]), pt(&[-0.3, 0.2], &[-0.2, 2.0])];
        assert!(homogeneity_residual(&fibre_norm(2), 1.0, &pts).unwrap() < 1e-12);
        let f0 = base_dot_fibre(2) / fibre_norm(2);
        assert!(homogeneity_residual(&f0, 0.0, &pts).unwrap() < 1e-12);
        assert!(homogeneity_residual(&parse("y1^2+y2^2", 2).unwrap(), 1.0, &pts).unwrap() > 0.1);
    }

    #[test]
    fn deformation_connection_and_inverse() {
        let s = SpraySpec::new(2, vec![parse("x1*y1*y2", 2).unwrap(), parse("y2^2 - x2*y1^2", 2).unwrap()]);
        let p_fac = parse("sqrt(y1^2+y2^2) + x1*y2", 2).unwrap();
        let pts = vec![pt(&[0.3, -0.7], &[0.8, 1.1])];
        let t = s.projective_deform(&p_fac, &pts, 1e-9).unwrap();
        let n0 = s.nonlinear_connection(&pts[0]).unwrap();
        let n1 = t.nonlinear_connection(&pts[0]).unwrap();
        let pv = eval_exprs(std::slice::from_ref(&p_fac), &pts[0]).unwrap()[0];
        let py = eval_exprs(&[p_fac.diff(Var::y(0)), p_fac.diff(Var::y(1))], &pts[0]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expect = n0[(i, j)] + py[j] * pts[0].y[i] + if i == j { pv } else { 0.0 };
                assert!((n1[(i, j)] - expect).abs() < 1e-13);
            }
        }
        let back = t.deform_unchecked(&-&p_fac);
        let a = eval_exprs(back.coeffs(), &pts[0]).unwrap();
        let b = eval_exprs(s.coeffs(), &pts[0]).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() <= 1e-12);
        }
        assert!(s.projective_deform(&parse("y1^2", 2).unwrap(), &pts, 1e-9).is_err());
    }

    #[test]
    fn spray_condition_bracket() {
        let s = SpraySpec::new(2, vec![parse("x1*y1*y2", 2).unwrap(), parse("y2^2 - x2*y1^2", 2).unwrap()]);
        let g = s.geodesic_field();
        let c = VectorField::liouville(2);
        let p = pt(&[0.2, 0.5], &[0.7, -1.3]);
        let cg = commutator(&c, &g, &p).unwrap();
        let gv = g.eval(&p).unwrap();
        for (a, b) in cg.iter().zip(&gv) {
            assert!((a - b).abs() < 1e-13);
        }
        assert!(commutator(&g, &g, &p).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn curvature_is_antisymmetric_and_homogeneous() {
        let s = SpraySpec::new(2, vec![parse("x2*y1*y2", 2).unwrap(), parse("x1^2*y2^2 - y1^2", 2).unwrap()]);
        let p = pt(&[0.2, 0.5], &[0.7, -1.3]);
        let r = s.curvature(&p).unwrap();
        let r2 = s.curvature(&p.scaled(2.0)).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert_eq!(r.r[i][j][k], -r.r[i][k][j]);
                    assert!((r2.r[i][j][k] - 2.0 * r.r[i][j][k]).abs() < 1e-12);
                }
            }
        }
        assert!(r.max_abs() > 1e-3);
    }
}
