//! Vector fields and 1-forms on `T_0 M` in the coordinate frame
//! `(d/dx^1..d/dx^n, d/dy^1..d/dy^n)`, with Lie derivatives, brackets and
//! exterior derivatives.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::expr::{Expr, Var};
use crate::field::eval_exprs;
use crate::point::PhasePoint;

/// The coordinate `z^a` of `T M`: `x^a` for `a < n`, `y^(a-n)` otherwise.
pub fn zvar(dim: usize, a: usize) -> Var {
    if a < dim {
        Var::x(a)
    } else {
        Var::y(a - dim)
    }
}

/// Gradient of `f` in `z = (x, y)`.
pub fn gradient(f: &Expr, dim: usize) -> Vec<Expr> {
    (0..2 * dim).map(|a| f.diff(zvar(dim, a))).collect()
}

/// Vertical gradient `(df/dy^i)_i`, the components of `d_J f`.
pub fn vertical_gradient(f: &Expr, dim: usize) -> Vec<Expr> {
    (0..dim).map(|i| f.diff(Var::y(i))).collect()
}

/// Liouville action `C(f) = y^i df/dy^i`.
pub fn liouville(f: &Expr, dim: usize) -> Expr {
    Expr::sum((0..dim).map(|i| Expr::y(i) * f.diff(Var::y(i))))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorField {
    dim: usize,
    comps: Vec<Expr>,
}

impl VectorField {
    /// `comps` holds the `d/dx` components followed by the `d/dy` ones.
    pub fn new(comps: Vec<Expr>) -> VectorField {
        assert!(comps.len().is_multiple_of(2), "vector field needs 2n components");
        VectorField { dim: comps.len() / 2, comps }
    }

    pub fn from_parts(horizontal: Vec<Expr>, vertical: Vec<Expr>) -> VectorField {
        assert_eq!(horizontal.len(), vertical.len());
        VectorField::new(horizontal.into_iter().chain(vertical).collect())
    }

    /// `C = y^i d/dy^i`.
    pub fn liouville(dim: usize) -> VectorField {
        VectorField::from_parts(vec![Expr::zero(); dim], (0..dim).map(Expr::y).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn comps(&self) -> &[Expr] {
        &self.comps
    }

    pub fn horizontal(&self) -> &[Expr] {
        &self.comps[..self.dim]
    }

    pub fn vertical_part(&self) -> &[Expr] {
        &self.comps[self.dim..]
    }

    /// Derivative of `f` along the field.
    pub fn apply(&self, f: &Expr) -> Expr {
        Expr::sum(self.apply_terms(f))
    }

    /// The nonzero products `V^a df/dz^a` making up `V(f)`.
    pub fn apply_terms(&self, f: &Expr) -> Vec<Expr> {
        self.comps
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(a, c)| c * f.diff(zvar(self.dim, a)))
            .filter(|t| !t.is_zero())
            .collect()
    }

    /// `[self, other]^a = self(other^a) - other(self^a)`.
    pub fn bracket(&self, other: &VectorField) -> VectorField {
        assert_eq!(self.dim, other.dim);
        VectorField::new(
            self.comps.iter().zip(&other.comps).map(|(mine, theirs)| self.apply(theirs) - other.apply(mine)).collect(),
        )
    }

    /// Per component, the individual products summed by [`Self::bracket`].
    pub fn bracket_terms(&self, other: &VectorField) -> Vec<Vec<Expr>> {
        assert_eq!(self.dim, other.dim);
        self.comps
            .iter()
            .zip(&other.comps)
            .map(|(mine, theirs)| {
                let mut t = self.apply_terms(theirs);
                t.extend(other.apply_terms(mine).into_iter().map(|e| -e));
                t
            })
            .collect()
    }

    /// `J X`: moves the `d/dx` components into the `d/dy` slots.
    pub fn vertical_lift(&self) -> VectorField {
        VectorField::from_parts(vec![Expr::zero(); self.dim], self.horizontal().to_vec())
    }

    pub fn scale_by(&self, f: &Expr) -> VectorField {
        VectorField::new(self.comps.iter().map(|c| c * f).collect())
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        VectorField::new(self.comps.iter().zip(&other.comps).map(|(a, b)| a - b).collect())
    }

    pub fn eval(&self, p: &PhasePoint) -> Result<Vec<f64>> {
        eval_exprs(&self.comps, p)
    }
}

/// A 1-form `a_i dx^i + b_i dy^i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OneForm {
    dim: usize,
    comps: Vec<Expr>,
}

impl OneForm {
    pub fn new(comps: Vec<Expr>) -> OneForm {
        assert!(comps.len().is_multiple_of(2), "1-form needs 2n components");
        OneForm { dim: comps.len() / 2, comps }
    }

    pub fn from_parts(dx: Vec<Expr>, dy: Vec<Expr>) -> OneForm {
        assert_eq!(dx.len(), dy.len());
        OneForm::new(dx.into_iter().chain(dy).collect())
    }

    /// Semi-basic form `w_i dx^i`.
    pub fn semi_basic(dx: Vec<Expr>) -> OneForm {
        let n = dx.len();
        OneForm::from_parts(dx, vec![Expr::zero(); n])
    }

    /// `df`.
    pub fn differential(f: &Expr, dim: usize) -> OneForm {
        OneForm::new(gradient(f, dim))
    }

    /// `d_J f = (df/dy^i) dx^i`.
    pub fn vertical_differential(f: &Expr, dim: usize) -> OneForm {
        OneForm::semi_basic(vertical_gradient(f, dim))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn comps(&self) -> &[Expr] {
        &self.comps
    }

    pub fn dx(&self) -> &[Expr] {
        &self.comps[..self.dim]
    }

    pub fn dy(&self) -> &[Expr] {
        &self.comps[self.dim..]
    }

    /// `i_J alpha = b_i dx^i`.
    pub fn vertical_contraction(&self) -> OneForm {
        OneForm::semi_basic(self.dy().to_vec())
    }

    pub fn contract(&self, v: &VectorField) -> Expr {
        assert_eq!(self.dim, v.dim());
        Expr::sum(self.comps.iter().zip(v.comps()).map(|(a, b)| a * b))
    }

    /// `(L_V alpha)_a = V(alpha_a) + alpha_b dV^b/dz^a`.
    pub fn lie_derivative(&self, v: &VectorField) -> OneForm {
        OneForm::new(self.lie_derivative_terms(v).into_iter().map(Expr::sum).collect())
    }

    /// Per component, the individual products summed by
    /// [`Self::lie_derivative`].
    pub fn lie_derivative_terms(&self, v: &VectorField) -> Vec<Vec<Expr>> {
        assert_eq!(self.dim, v.dim());
        let n = self.dim;
        (0..2 * n)
            .map(|a| {
                let za = zvar(n, a);
                let mut t = v.apply_terms(&self.comps[a]);
                t.extend(
                    self.comps
                        .iter()
                        .zip(v.comps())
                        .filter(|(w, _)| !w.is_zero())
                        .map(|(w, vb)| w * vb.diff(za))
                        .filter(|e| !e.is_zero()),
                );
                t
            })
            .collect()
    }

    /// Components `Omega_ab = d_a alpha_b - d_b alpha_a` of `d alpha`,
    /// so that `i_V d alpha = V^a Omega_ab dz^b`.
    pub fn exterior_derivative(&self) -> TwoForm {
        let n = self.dim;
        let mut m = vec![vec![Expr::zero(); 2 * n]; 2 * n];
        for a in 0..2 * n {
            for b in (a + 1)..2 * n {
                let v = self.comps[b].diff(zvar(n, a)) - self.comps[a].diff(zvar(n, b));
                m[b][a] = -&v;
                m[a][b] = v;
            }
        }
        TwoForm { dim: n, comps: m }
    }

    pub fn sub(&self, other: &OneForm) -> OneForm {
        OneForm::new(self.comps.iter().zip(&other.comps).map(|(a, b)| a - b).collect())
    }

    pub fn eval(&self, p: &PhasePoint) -> Result<OneFormValue> {
        let v = eval_exprs(&self.comps, p)?;
        Ok(OneFormValue::from_stacked(&v, p))
    }
}

/// Antisymmetric `2n x 2n` component matrix of a 2-form.
#[derive(Clone, Debug)]
pub struct TwoForm {
    dim: usize,
    comps: Vec<Vec<Expr>>,
}

impl TwoForm {
    pub fn comps(&self) -> &[Vec<Expr>] {
        &self.comps
    }

    /// `i_V Omega`.
    pub fn contract(&self, v: &VectorField) -> OneForm {
        let n = self.dim;
        OneForm::new((0..2 * n).map(|b| Expr::sum((0..2 * n).map(|a| &v.comps()[a] * &self.comps[a][b]))).collect())
    }
}

/// Pointwise value of a 1-form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneFormValue {
    /// `dx^i` components.
    pub a: Vec<f64>,
    /// `dy^i` components.
    pub b: Vec<f64>,
    pub point: PhasePoint,
}

impl OneFormValue {
    pub fn from_stacked(v: &[f64], p: &PhasePoint) -> OneFormValue {
        let n = v.len() / 2;
        OneFormValue { a: v[..n].to_vec(), b: v[n..].to_vec(), point: p.clone() }
    }

    pub fn stacked(&self) -> Vec<f64> {
        self.a.iter().chain(&self.b).copied().collect()
    }

    pub fn is_semi_basic(&self) -> bool {
        self.b.iter().all(|v| *v == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().chain(&self.b).fold(0.0, |m, v| m.max(v.abs()))
    }
}
