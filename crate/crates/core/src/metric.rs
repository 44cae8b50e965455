//! Finsler metrics `F`, their energy `L = F^2/2`, metric tensor and
//! geodesic spray.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;

use crate::check::{rel_zero, ResidualStats};
use crate::error::{describe, Error, Result};
use crate::expr::{Expr, Var};
use crate::field::Field;
use crate::forms::{OneForm, OneFormValue};
use crate::point::{Domain, PhasePoint};
use crate::spray::{homogeneity_residual, Provenance, SpraySpec};

/// Relative singularity threshold for `|det g|`.
pub const SINGULAR_DET: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct MetricSpec {
    name: String,
    dim: usize,
    finsler: Expr,
    energy: Expr,
    domain: Domain,
    cache: Arc<OnceLock<MetricExprs>>,
}

#[derive(Debug)]
struct MetricExprs {
    g: Vec<Vec<Expr>>,
    det: Expr,
    adjugate: Vec<Vec<Expr>>,
    g_field: Field,
}

impl MetricSpec {
    /// Metric from a 1-homogeneous `F`; the energy is `F^2 / 2`.
    pub fn from_finsler(name: impl Into<String>, dim: usize, finsler: Expr, domain: Domain) -> MetricSpec {
        let energy = finsler.powf(2.0).scale(0.5);
        MetricSpec::with_both(name, dim, finsler, energy, domain)
    }

    /// Metric from a 2-homogeneous energy `L`; `F = sqrt(2L)`.
    pub fn from_energy(name: impl Into<String>, dim: usize, energy: Expr, domain: Domain) -> MetricSpec {
        let finsler = energy.scale(2.0).sqrt();
        MetricSpec::with_both(name, dim, finsler, energy, domain)
    }

    /// Both forms supplied; the caller guarantees `L = F^2 / 2`.
    pub fn with_both(name: impl Into<String>, dim: usize, finsler: Expr, energy: Expr, domain: Domain) -> MetricSpec {
        assert_eq!(domain.dim(), dim, "domain dimension");
        MetricSpec { name: name.into(), dim, finsler, energy, domain, cache: Arc::new(OnceLock::new()) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn finsler(&self) -> &Expr {
        &self.finsler
    }

    pub fn energy(&self) -> &Expr {
        &self.energy
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    fn exprs(&self) -> &MetricExprs {
        self.cache.get_or_init(|| {
            let n = self.dim;
            let mut g = vec![vec![Expr::zero(); n]; n];
            for i in 0..n {
                let li = self.energy.diff(Var::y(i));
                for j in i..n {
                    let gij = li.diff(Var::y(j));
                    g[i][j] = gij.clone();
                    g[j][i] = gij;
                }
            }
            let (det, adjugate) = det_and_adjugate(&g);
            let g_field = Field::new(g.iter().flatten().cloned().collect());
            MetricExprs { g, det, adjugate, g_field }
        })
    }

    /// `g_ij = d^2 L / dy^i dy^j`, symmetric by construction.
    pub fn metric_exprs(&self) -> &[Vec<Expr>] {
        &self.exprs().g
    }

    pub fn det_expr(&self) -> &Expr {
        &self.exprs().det
    }

    /// Adjugate of `g`, so that `g^ij = adj_ij / det g`.
    pub fn adjugate_exprs(&self) -> &[Vec<Expr>] {
        &self.exprs().adjugate
    }

    /// Symbolic inverse metric `g^ij`.
    pub fn inverse_exprs(&self) -> Vec<Vec<Expr>> {
        let det = self.det_expr();
        self.adjugate_exprs().iter().map(|row| row.iter().map(|a| a / det).collect()).collect()
    }

    pub fn metric_tensor(&self, p: &PhasePoint) -> Result<MetricTensorValue> {
        self.check_point(p)?;
        let n = self.dim;
        let vals = self.exprs().g_field.eval(p)?;
        let g = DMatrix::from_row_slice(n, n, &vals);
        let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let lu = g.clone().lu();
        let det = lu.determinant();
        let threshold = SINGULAR_DET * scale.powi(n as i32);
        if !(det.abs() >= threshold) || scale == 0.0 {
            return Err(Error::SingularMetric { point: describe(p), det, threshold });
        }
        let inverse = lu.try_inverse().ok_or_else(|| Error::SingularMetric { point: describe(p), det, threshold })?;
        let sv = g.clone().singular_values();
        let condition = sv.max() / sv.min();
        let residual = (&g * &inverse - DMatrix::identity(n, n)).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(MetricTensorValue { g, inverse, det, condition, inverse_residual: residual })
    }

    pub(crate) fn check_point(&self, p: &PhasePoint) -> Result<()> {
        if p.dim() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: p.dim() });
        }
        Ok(())
    }

    /// Load-time validation: Liouville test for `F`, positivity of `F` and
    /// regularity of `g` on the given points.
    pub fn validate(&self, points: &[PhasePoint], tol: f64) -> Result<()> {
        let r = homogeneity_residual(&self.finsler, 1.0, points)?;
        if r > tol {
            return Err(Error::Homogeneity {
                what: format!("F of `{}`", self.name),
                degree: 1.0,
                residual: r,
                tolerance: tol,
            });
        }
        let f = Field::scalar(self.finsler.clone());
        for (p, v) in points.iter().zip(f.eval_all(points)?) {
            if v[0] <= 0.0 {
                return Err(Error::Invalid(format!("F = {} is not positive at {}", v[0], describe(p))));
            }
            self.metric_tensor(p)?;
        }
        Ok(())
    }

    /// Geodesic spray `G^i = 1/2 g^il (y^k d^2L/dy^l dx^k - dL/dx^l)`.
    pub fn geodesic_spray(&self) -> SpraySpec {
        let n = self.dim;
        let l = &self.energy;
        let rhs: Vec<Expr> = (0..n)
            .map(|ell| {
                let ly = l.diff(Var::y(ell));
                let mixed = Expr::sum((0..n).map(|k| Expr::y(k) * ly.diff(Var::x(k))));
                mixed - l.diff(Var::x(ell))
            })
            .collect();
        let coeffs = if rhs.iter().all(Expr::is_zero) {
            vec![Expr::zero(); n]
        } else {
            let adj = self.adjugate_exprs();
            let det = self.det_expr();
            (0..n)
                .map(|i| {
                    let num = Expr::sum((0..n).map(|ell| &adj[i][ell] * &rhs[ell]));
                    num.scale(0.5) / det
                })
                .collect()
        };
        SpraySpec::with_provenance(n, coeffs, Provenance::Metric { name: self.name.clone() })
    }

    /// Checks that `g` is regular at each point and returns the geodesic
    /// spray.
    pub fn geodesic_spray_checked(&self, points: &[PhasePoint]) -> Result<SpraySpec> {
        for p in points {
            self.metric_tensor(p)?;
        }
        Ok(self.geodesic_spray())
    }

    /// Matrix `W` of `omega_L = g_ij delta y^i ^ dx^j` in the frame
    /// `(dx, dy)`, so that `omega_L(X, Y) = X^T W Y`. Needs the connection of
    /// the geodesic spray `s`.
    pub fn symplectic_matrix(&self, s: &SpraySpec, p: &PhasePoint) -> Result<DMatrix<f64>> {
        let n = self.dim;
        let g = self.metric_tensor(p)?.g;
        let nc = s.nonlinear_connection(p)?;
        let mut w = DMatrix::zeros(2 * n, 2 * n);
        let xx = nc.transpose() * &g - &g * &nc;
        w.view_mut((0, 0), (n, n)).copy_from(&xx);
        w.view_mut((n, 0), (n, n)).copy_from(&g);
        w.view_mut((0, n), (n, n)).copy_from(&(-&g));
        Ok(w)
    }

    /// `omega_L(X, Y) = g_ij (delta y^i(X) dx^j(Y) - delta y^i(Y) dx^j(X))`.
    pub fn symplectic_value(&self, s: &SpraySpec, p: &PhasePoint, x: &[f64], y: &[f64]) -> Result<f64> {
        let w = self.symplectic_matrix(s, p)?;
        let (xv, yv) = (nalgebra::DVector::from_column_slice(x), nalgebra::DVector::from_column_slice(y));
        Ok(xv.dot(&(w * yv)))
    }

    /// Components of `i_G dd_J L + dL` for a candidate spray `s`, computed
    /// from the exterior derivative of `d_J L`.
    pub fn defining_equation_form(&self, s: &SpraySpec) -> DefiningEquation {
        let n = self.dim;
        let theta = OneForm::vertical_differential(&self.energy, n);
        let omega = theta.exterior_derivative();
        let g = s.geodesic_field();
        let contracted = omega.contract(&g);
        let dl = OneForm::differential(&self.energy, n);
        // Largest individual term G^a Omega_ab feeding each component.
        let mut terms = Vec::new();
        for b in 0..2 * n {
            for a in 0..2 * n {
                let t = &g.comps()[a] * &omega.comps()[a][b];
                if !t.is_zero() {
                    terms.push((b, t));
                }
            }
        }
        let residual: Vec<Expr> = contracted.comps().iter().zip(dl.comps()).map(|(c, d)| c + d).collect();
        let mut exprs = residual;
        exprs.extend(dl.comps().iter().cloned());
        let term_index: Vec<usize> = terms.iter().map(|(b, _)| *b).collect();
        exprs.extend(terms.into_iter().map(|(_, t)| t));
        DefiningEquation { dim: n, field: Field::new(exprs), term_index }
    }
}

/// Residual evaluator for `i_G dd_J L = -dL`.
#[derive(Debug, Clone)]
pub struct DefiningEquation {
    dim: usize,
    field: Field,
    term_index: Vec<usize>,
}

impl DefiningEquation {
    /// Raw components of `i_G dd_J L + dL` at `p`.
    pub fn value(&self, p: &PhasePoint) -> Result<OneFormValue> {
        let v = self.field.eval(p)?;
        Ok(OneFormValue::from_stacked(&v[..2 * self.dim], p))
    }

    /// Max over components of `|r_b| / (1 + scale_b)`, with `scale_b` the
    /// largest term entering component `b`.
    pub fn normalized(&self, p: &PhasePoint) -> Result<f64> {
        let v = self.field.eval(p)?;
        Ok(self.normalize(&v))
    }

    fn normalize(&self, v: &[f64]) -> f64 {
        let m = 2 * self.dim;
        let mut scale: Vec<f64> = v[m..2 * m].iter().map(|d| d.abs()).collect();
        for (k, &b) in self.term_index.iter().enumerate() {
            scale[b] = scale[b].max(v[2 * m + k].abs());
        }
        (0..m).map(|b| rel_zero(v[b], scale[b])).fold(0.0, f64::max)
    }

    pub fn stats(&self, points: &[PhasePoint]) -> Result<ResidualStats> {
        let mut s = ResidualStats::default();
        for v in self.field.eval_all(points)? {
            s.push(self.normalize(&v));
        }
        Ok(s)
    }
}

#[derive(Clone, Debug)]
pub struct MetricTensorValue {
    pub g: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
    pub det: f64,
    /// 2-norm condition number.
    pub condition: f64,
    /// `max |g g^-1 - I|`.
    pub inverse_residual: f64,
}

/// Symbolic determinant and adjugate by cofactor expansion with shared minors.
pub fn det_and_adjugate(m: &[Vec<Expr>]) -> (Expr, Vec<Vec<Expr>>) {
    let n = m.len();
    let full: u32 = (1u32 << n) - 1;
    let mut memo: HashMap<(u32, u32), Expr> = HashMap::new();
    let det = minor(m, full, full, &mut memo);
    let mut adj = vec![vec![Expr::zero(); n]; n];
    if n == 1 {
        adj[0][0] = Expr::one();
        return (det, adj);
    }
    for i in 0..n {
        for j in 0..n {
            let c = minor(m, full & !(1 << i), full & !(1 << j), &mut memo);
            let c = if (i + j) % 2 == 0 { c } else { -c };
            // adj_ji = cofactor_ij
            adj[j][i] = c;
        }
    }
    (det, adj)
}

fn minor(m: &[Vec<Expr>], rows: u32, cols: u32, memo: &mut HashMap<(u32, u32), Expr>) -> Expr {
    if let Some(e) = memo.get(&(rows, cols)) {
        return e.clone();
    }
    let r = rows.trailing_zeros() as usize;
    let result = if rows.count_ones() == 1 {
        m[r][cols.trailing_zeros() as usize].clone()
    } else {
        let rest = rows & !(1 << r);
        let mut acc = Expr::zero();
        let mut sign = 1.0;
        for c in (0..m.len()).filter(|c| cols & (1 << c) != 0) {
            if !m[r][c].is_zero() {
                let sub = minor(m, rest, cols & !(1 << c), memo);
                let term = &m[r][c] * sub;
                acc = if sign > 0.0 { acc + term } else { acc - term };
            }
            sign = -sign;
        }
        acc
    };
    memo.insert((rows, cols), result.clone());
    result
}
