//! Distortion, S-function and chi-curvature, and their behaviour under
//! projective deformation.

use serde::{Deserialize, Serialize};

use crate::check::{rel, CheckRecord, ResidualStats, Tolerances};
use crate::error::{describe, Error, Result};
use crate::expr::{Expr, Var};
use crate::field::Field;
use crate::metric::MetricSpec;
use crate::point::PhasePoint;
use crate::spray::SpraySpec;

/// Volume density `sigma(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct VolumeSpec {
    sigma: Expr,
}

impl Default for VolumeSpec {
    fn default() -> Self {
        VolumeSpec { sigma: Expr::one() }
    }
}

impl VolumeSpec {
    pub fn new(sigma: Expr) -> Result<VolumeSpec> {
        if !sigma.is_fibre_free() {
            return Err(Error::Invalid(format!("volume density `{sigma}` depends on y")));
        }
        Ok(VolumeSpec { sigma })
    }

    pub fn sigma(&self) -> &Expr {
        &self.sigma
    }

    pub fn check_positive(&self, points: &[PhasePoint]) -> Result<()> {
        for v in Field::scalar(self.sigma.clone()).eval_all(points)?.into_iter().zip(points) {
            if !(v.0[0] > 0.0) {
                return Err(Error::Invalid(format!("sigma = {} is not positive at {}", v.0[0], describe(v.1))));
            }
        }
        Ok(())
    }
}

/// `tau = 1/2 ln(det g / sigma)`.
pub fn distortion_expr(m: &MetricSpec, vol: &VolumeSpec) -> Expr {
    (m.det_expr() / vol.sigma()).ln().scale(0.5)
}

/// Symbolic `tau`, `I_k`, `S` and both routes to `chi` for a metric, a
/// volume and a spray, compiled once and evaluated pointwise.
#[derive(Clone, Debug)]
pub struct Invariants {
    dim: usize,
    pub tau: Expr,
    pub mean_torsion: Vec<Expr>,
    pub s: Expr,
    /// `1/2 (G(dS/dy^i) - dS/dx^i)`.
    pub chi: Vec<Expr>,
    /// `1/2 ((nabla d_J S)_i - delta S / delta x^i)`.
    pub chi_horizontal: Vec<Expr>,
    det: Expr,
    field: Field,
    torsion_field: Field,
    metric: MetricSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantValue {
    pub tau: f64,
    pub mean_torsion: Vec<f64>,
    /// `1/2 g^ij dg_ij/dy^k`.
    pub mean_torsion_trace: Vec<f64>,
    pub s: f64,
    pub chi: Vec<f64>,
    pub chi_horizontal: Vec<f64>,
}

impl InvariantValue {
    /// Largest normalized disagreement between the two `I_k` expressions.
    pub fn torsion_residual(&self) -> f64 {
        self.mean_torsion.iter().zip(&self.mean_torsion_trace).map(|(a, b)| rel(*a, *b)).fold(0.0, f64::max)
    }

    pub fn chi_route_residual(&self) -> f64 {
        self.chi.iter().zip(&self.chi_horizontal).map(|(a, b)| rel(*a, *b)).fold(0.0, f64::max)
    }
}

impl Invariants {
    pub fn new(m: &MetricSpec, vol: &VolumeSpec, s: &SpraySpec) -> Invariants {
        let n = m.dim();
        assert_eq!(s.dim(), n);
        let tau = distortion_expr(m, vol);
        let mean_torsion: Vec<Expr> = (0..n).map(|k| tau.diff(Var::y(k))).collect();
        let s_fn = s.apply(&tau);
        let chi: Vec<Expr> = s.euler_lagrange(&s_fn).iter().map(|c| c.scale(0.5)).collect();
        let sy: Vec<Expr> = (0..n).map(|i| s_fn.diff(Var::y(i))).collect();
        let chi_horizontal: Vec<Expr> =
            s.nabla_covector(&sy).iter().zip(s.delta(&s_fn)).map(|(a, b)| (a - b).scale(0.5)).collect();
        let det = m.det_expr().clone();
        let mut exprs = vec![det.clone(), tau.clone(), s_fn.clone()];
        exprs.extend(mean_torsion.iter().cloned());
        exprs.extend(chi.iter().cloned());
        exprs.extend(chi_horizontal.iter().cloned());
        let g = m.metric_exprs();
        let torsion_field = Field::new(
            (0..n).flat_map(|k| (0..n).flat_map(move |i| (0..n).map(move |j| g[i][j].diff(Var::y(k))))).collect(),
        );
        Invariants {
            dim: n,
            tau,
            mean_torsion,
            s: s_fn,
            chi,
            chi_horizontal,
            det,
            field: Field::new(exprs),
            torsion_field,
            metric: m.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn det(&self) -> &Expr {
        &self.det
    }

    pub fn at(&self, p: &PhasePoint) -> Result<InvariantValue> {
        let v = self.field.eval(p)?;
        self.unpack(p, &v)
    }

    pub fn at_all(&self, points: &[PhasePoint]) -> Result<Vec<InvariantValue>> {
        let vals = self.field.eval_all(points).map_err(|e| self.explain(points, e))?;
        points.iter().zip(vals).map(|(p, v)| self.unpack(p, &v)).collect()
    }

    // Evaluation failures of tau usually mean det g <= 0; say so.
    fn explain(&self, points: &[PhasePoint], e: Error) -> Error {
        let det = Field::scalar(self.det.clone());
        for p in points {
            if let Ok(d) = det.eval_scalar(p) {
                if d <= 0.0 {
                    return Error::NonPositiveDeterminant { point: describe(p), det: d };
                }
            }
        }
        e
    }

    fn unpack(&self, p: &PhasePoint, v: &[f64]) -> Result<InvariantValue> {
        let n = self.dim;
        if v[0] <= 0.0 {
            return Err(Error::NonPositiveDeterminant { point: describe(p), det: v[0] });
        }
        let gt = self.metric.metric_tensor(p)?;
        let dg = self.torsion_field.eval(p)?;
        let trace = (0..n)
            .map(|k| {
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        acc += gt.inverse[(i, j)] * dg[(k * n + i) * n + j];
                    }
                }
                0.5 * acc
            })
            .collect();
        Ok(InvariantValue {
            tau: v[1],
            s: v[2],
            mean_torsion: v[3..3 + n].to_vec(),
            mean_torsion_trace: trace,
            chi: v[3 + n..3 + 2 * n].to_vec(),
            chi_horizontal: v[3 + 2 * n..3 + 3 * n].to_vec(),
        })
    }
}

pub fn distortion(m: &MetricSpec, vol: &VolumeSpec, p: &PhasePoint) -> Result<InvariantValue> {
    Invariants::new(m, vol, &m.geodesic_spray()).at(p)
}

/// Per-point record of an invariant report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantSample {
    pub point: PhasePoint,
    pub tau: f64,
    pub s: f64,
    pub chi: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub fixtures: Vec<String>,
    pub samples: Vec<InvariantSample>,
    pub records: Vec<CheckRecord>,
}

impl InvariantReport {
    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.verdict.passed())
    }
}

/// Compares `S~ = S + (n+1) P`, `chi~ = chi + (n+1)/2 delta_G P` and the
/// trace recovery `P = (N~^i_i - N^i_i)/(n+1)` between a metric with spray
/// `s` and a metric whose spray `s~` is the deformation of `s` by `P`.
pub fn verify_projective_laws(
    base: (&MetricSpec, &SpraySpec),
    deformed: (&MetricSpec, &SpraySpec),
    p_factor: &Expr,
    vol: &VolumeSpec,
    points: &[PhasePoint],
    tol: &Tolerances,
) -> Result<InvariantReport> {
    let (m, s) = base;
    let (mt, st) = deformed;
    let n = m.dim();
    let nf = (n + 1) as f64;

    let related = Field::new(
        (0..n)
            .map(|i| &st.coeffs()[i] - &s.coeffs()[i] - p_factor * Expr::y(i))
            .chain(st.coeffs().iter().cloned())
            .collect(),
    );
    let mut rel_stats = ResidualStats::default();
    for v in related.eval_all(points)? {
        for i in 0..n {
            rel_stats.push(v[i].abs() / (1.0 + v[n + i].abs()));
        }
    }
    if !rel_stats.within(tol.strong_hamel) {
        return Err(Error::NotProjectivelyRelated { residual: rel_stats.max, tolerance: tol.strong_hamel });
    }

    let inv = Invariants::new(m, vol, s);
    let inv_t = Invariants::new(mt, vol, st);
    let el_p: Vec<Expr> = s.euler_lagrange(p_factor);
    let trace_n = Expr::sum((0..n).map(|i| s.connection()[i][i].clone()));
    let trace_nt = Expr::sum((0..n).map(|i| st.connection()[i][i].clone()));
    let mut extra = vec![p_factor.clone(), (trace_nt - trace_n).scale(1.0 / nf)];
    extra.extend(el_p);
    let extra = Field::new(extra);

    let a = inv.at_all(points)?;
    let b = inv_t.at_all(points)?;
    let e = extra.eval_all(points)?;

    let mut s_stats = ResidualStats::default();
    let mut chi_stats = ResidualStats::default();
    let mut trace_stats = ResidualStats::default();
    let mut route_stats = ResidualStats::default();
    let mut samples = Vec::with_capacity(points.len());
    for ((p, (va, vb)), ve) in points.iter().zip(a.iter().zip(&b)).zip(&e) {
        let pv = ve[0];
        s_stats.push(rel(vb.s, va.s + nf * pv));
        for i in 0..n {
            chi_stats.push(rel(vb.chi[i], va.chi[i] + 0.5 * nf * ve[2 + i]));
        }
        trace_stats.push(rel(ve[1], pv));
        route_stats.push(va.chi_route_residual().max(vb.chi_route_residual()));
        samples.push(InvariantSample { point: p.clone(), tau: vb.tau, s: vb.s, chi: vb.chi.clone() });
    }
    let records = vec![
        CheckRecord::from_stats("projective relatedness", "G~^i = G^i + P y^i", &rel_stats, tol.strong_hamel),
        CheckRecord::from_stats("S law", "S~ = S + (n+1) P", &s_stats, tol.projective_laws),
        CheckRecord::from_stats("chi law", "chi~ = chi + (n+1)/2 delta_G P", &chi_stats, tol.projective_laws),
        CheckRecord::from_stats("trace recovery", "P = (N~^i_i - N^i_i)/(n+1)", &trace_stats, tol.trace_recovery),
        CheckRecord::from_stats("chi routes", "chi = 1/2 delta_G S", &route_stats, tol.invariant_routes),
    ];
    Ok(InvariantReport { fixtures: vec![m.name().to_string(), mt.name().to_string()], samples, records })
}
