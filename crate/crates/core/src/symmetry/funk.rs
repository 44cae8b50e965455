use serde::{Deserialize, Serialize};

use super::hamel::{delta_terms, is_strong_hamel, spray_terms};
use super::{CandidatePair, Outcome};
use crate::check::{rel, CheckRecord, Tolerances, Verdict};
use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::field::{vanishing_stats, Field};
use crate::metric::MetricSpec;
use crate::point::PhasePoint;
use crate::spray::{homogeneity_residual, SpraySpec};

fn weak_funk_terms(f: &Expr, s: &SpraySpec) -> Vec<Vec<Expr>> {
    let mut t = spray_terms(s, f);
    t.push(-(f * f));
    vec![t]
}

/// `G(f) = f^2`.
pub fn is_weak_funk(f: &Expr, s: &SpraySpec, points: &[PhasePoint], tol: &Tolerances) -> Result<Outcome> {
    Ok(Outcome::from_stats(vanishing_stats(&weak_funk_terms(f, s), points)?, tol.funk))
}

/// `delta f / delta x^i = f df/dy^i`.
pub fn is_funk(f: &Expr, s: &SpraySpec, points: &[PhasePoint], tol: &Tolerances) -> Result<Outcome> {
    let q: Vec<Vec<Expr>> = (0..s.dim())
        .map(|i| {
            let mut t = delta_terms(s, f, i);
            t.push(-(f * f.diff(Var::y(i))));
            t
        })
        .collect();
    Ok(Outcome::from_stats(vanishing_stats(&q, points)?, tol.funk))
}

/// The three semi-basic covectors `d_h f`, `nabla d_J f` and
/// `2 f d_J f - nabla d_J f` compared pairwise, with the verdict-level
/// biconditional `funk <=> hamel and weak funk`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunkDecomposition {
    /// `d_h f = nabla d_J f`.
    pub hamel_nabla: Outcome,
    /// `d_h f = 2 f d_J f - nabla d_J f`.
    pub weak_funk_covector: Outcome,
    /// `G(f) = f^2`.
    pub weak_funk: Outcome,
    /// `d_h f = f d_J f`.
    pub funk: Outcome,
    /// `d_h f` against the mean of the right-hand sides of the two
    /// covector identities.
    pub sum_check: Outcome,
    pub strong_hamel: Outcome,
    pub biconditional_holds: bool,
}

impl FunkDecomposition {
    pub fn records(&self) -> Vec<CheckRecord> {
        vec![
            self.hamel_nabla.record("hamel via d_h f = nabla d_J f", "d_h f = nabla d_J f"),
            self.weak_funk_covector.record("weak funk covector", "d_h f = 2 f d_J f - nabla d_J f"),
            self.weak_funk.record("weak funk", "G(f) = f^2"),
            self.funk.record("funk", "d_h f = f d_J f"),
            self.sum_check.record("sum of identities", "d_h f = f d_J f"),
            CheckRecord::logical(
                "funk biconditional",
                "funk <=> strong hamel and weak funk",
                self.biconditional_holds,
                self.funk.stats.count,
            ),
        ]
    }
}

pub fn funk_decomposition_check(
    pair: &CandidatePair,
    s: &SpraySpec,
    points: &[PhasePoint],
    tol: &Tolerances,
) -> Result<FunkDecomposition> {
    let n = s.dim();
    let f = &pair.f;
    let nc = s.connection();
    let fy: Vec<Expr> = (0..n).map(|i| f.diff(Var::y(i))).collect();
    let nabla: Vec<Vec<Expr>> = (0..n)
        .map(|i| {
            let mut t = spray_terms(s, &fy[i]);
            t.extend((0..n).filter(|&j| !nc[j][i].is_zero()).map(|j| -(&nc[j][i] * &fy[j])));
            t
        })
        .collect();
    let neg = |v: &[Expr]| v.iter().map(|e| -e).collect::<Vec<_>>();
    let half = |v: &[Expr]| v.iter().map(|e| e.scale(0.5)).collect::<Vec<_>>();
    let mut hn = Vec::new();
    let mut wf = Vec::new();
    let mut sum = Vec::new();
    let mut fk = Vec::new();
    for i in 0..n {
        let dh = delta_terms(s, f, i);
        let ffy = f * &fy[i];
        hn.push([dh.clone(), neg(&nabla[i])].concat());
        wf.push([dh.clone(), vec![-ffy.scale(2.0)], nabla[i].clone()].concat());
        sum.push([dh.clone(), vec![-ffy.clone()], neg(&half(&nabla[i])), half(&nabla[i])].concat());
        fk.push([dh, vec![-ffy]].concat());
    }
    let hamel_nabla = Outcome::from_stats(vanishing_stats(&hn, points)?, tol.hamel);
    let weak_funk_covector = Outcome::from_stats(vanishing_stats(&wf, points)?, tol.funk);
    let funk = Outcome::from_stats(vanishing_stats(&fk, points)?, tol.funk);
    let sum_check = Outcome::from_stats(vanishing_stats(&sum, points)?, tol.funk);
    let weak_funk = is_weak_funk(f, s, points, tol)?;
    let strong_hamel = is_strong_hamel(pair, s, points, tol)?;
    let hamel_side = hamel_nabla.passed() || strong_hamel.passed();
    let biconditional_holds = funk.passed() == (hamel_side && weak_funk.passed());
    Ok(FunkDecomposition {
        hamel_nabla,
        weak_funk_covector,
        weak_funk,
        funk,
        sum_check,
        strong_hamel,
        biconditional_holds,
    })
}

/// Outcome of building a strong Hamel function from a weak Funk projective
/// factor: with `G~ = G - 2 P C` the geodesic spray of `F~`, `F~` is strong
/// Hamel for `G` with witness `F~ / P`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakFunkConstruction {
    /// Precondition: the geodesic spray of `F~` is `G^i + P y^i`.
    pub related: Outcome,
    /// Precondition and identity: `G(P) = P^2`.
    pub p_weak_funk: Outcome,
    /// `G(F~) = 2 P F~`.
    pub transport: Outcome,
    /// `G(F~/P) = F~`; unknown when the witness is constant.
    pub witness_identity: Outcome,
    /// Liouville residual of the witness at degree 0.
    pub witness_homogeneity: f64,
    /// The witness `F~/P` takes a single value on the samples.
    pub degenerate: bool,
    /// Relative spread of the witness over the samples.
    pub witness_spread: f64,
}

impl WeakFunkConstruction {
    pub fn preconditions_hold(&self) -> bool {
        self.related.passed() && self.p_weak_funk.passed()
    }

    pub fn records(&self) -> Vec<CheckRecord> {
        let mut r = vec![
            self.related.record("precondition: projectively related", "G~^i = G^i + P y^i"),
            self.p_weak_funk.record("precondition: P weak funk", "G(P) = P^2"),
            self.transport.record("G(F~) = 2 P F~", "G(F~) = 2 P F~"),
            self.witness_identity.record("G(F~/P) = F~", "G(F~/P) = F~"),
        ];
        r.push(CheckRecord {
            name: "witness 0-homogeneous".into(),
            anchor: "C(F~/P) = 0".into(),
            verdict: Verdict::from_bool(self.witness_homogeneity <= self.witness_identity.tolerance.max(1e-9)),
            max_residual: self.witness_homogeneity,
            tolerance: self.witness_identity.tolerance.max(1e-9),
            points: self.related.stats.count,
        });
        r
    }

    pub fn passed(&self) -> bool {
        self.records().iter().all(|r| r.verdict != Verdict::Fail)
    }
}

pub fn strong_hamel_from_weak_funk(
    mt: &MetricSpec,
    s: &SpraySpec,
    p_factor: &Expr,
    points: &[PhasePoint],
    tol: &Tolerances,
) -> Result<WeakFunkConstruction> {
    let n = s.dim();
    let pv = Field::scalar(p_factor.clone()).eval_all(points)?;
    if p_factor.is_zero() || pv.iter().any(|v| v[0] == 0.0) {
        return Err(Error::Precondition("projective factor P vanishes, so F~/P is undefined".into()));
    }
    let ft = mt.finsler();
    let st = mt.geodesic_spray();
    let rel_q: Vec<Vec<Expr>> =
        (0..n).map(|i| vec![st.coeffs()[i].clone(), -&s.coeffs()[i], -(p_factor * Expr::y(i))]).collect();
    let related = Outcome::from_stats(vanishing_stats(&rel_q, points)?, tol.strong_hamel);
    let p_weak_funk = is_weak_funk(p_factor, s, points, tol)?;
    let mut tq = spray_terms(s, ft);
    tq.push(-(p_factor * ft).scale(2.0));
    let transport = Outcome::from_stats(vanishing_stats(&[tq], points)?, tol.strong_hamel);

    let witness = ft / p_factor;
    let wv = Field::scalar(witness.clone()).eval_all(points)?;
    let w0 = wv.first().map_or(0.0, |v| v[0]);
    let witness_spread = wv.iter().map(|v| rel(v[0], w0)).fold(0.0, f64::max);
    let degenerate = witness_spread <= 1e-9;
    let witness_identity = if degenerate {
        Outcome::unknown(tol.strong_hamel)
    } else {
        let mut wq = spray_terms(s, &witness);
        wq.push(-ft);
        Outcome::from_stats(vanishing_stats(&[wq], points)?, tol.strong_hamel)
    };
    let witness_homogeneity = homogeneity_residual(&witness, 0.0, points)?;
    Ok(WeakFunkConstruction {
        related,
        p_weak_funk,
        transport,
        witness_identity,
        witness_homogeneity,
        degenerate,
        witness_spread,
    })
}
