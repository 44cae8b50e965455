//! Hamel and Funk functions, dual and dynamical symmetries.

mod dual;
mod funk;
mod hamel;
mod reconstruct;

pub use dual::{
    alpha_form, alpha_from_potential_check, alpha_torsion_check, dual_symmetry_check, dynamical_symmetry_field,
    symmetry_suite, DualSymmetryReport, DynamicalSymmetry, SuiteReport,
};
pub use funk::{
    funk_decomposition_check, is_funk, is_weak_funk, strong_hamel_from_weak_funk, FunkDecomposition,
    WeakFunkConstruction,
};
pub use hamel::{dh_dj_closure, dh_dj_closure_check, is_hamel, is_strong_hamel, projective_invariance_check};
pub use reconstruct::{reconstruct_vertical_potential, vertical_potential_converse, Reconstruction};

use serde::{Deserialize, Serialize};

use crate::check::{CheckRecord, ResidualStats, Tolerances, Verdict};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::field::Field;
use crate::point::PhasePoint;
use crate::spray::{homogeneity_residual, SpraySpec};

/// A candidate `f` with an optional 0-homogeneous witness `f'`.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidatePair {
    pub f: Expr,
    pub fprime: Option<Expr>,
}

impl CandidatePair {
    pub fn new(f: Expr, fprime: Option<Expr>) -> CandidatePair {
        CandidatePair { f, fprime }
    }

    /// Liouville tests: `f` of degree 1, `f'` of degree 0.
    pub fn validate(&self, points: &[PhasePoint], tol: f64) -> Result<()> {
        let r = homogeneity_residual(&self.f, 1.0, points)?;
        if r > tol {
            return Err(Error::Homogeneity { what: "candidate f".into(), degree: 1.0, residual: r, tolerance: tol });
        }
        if let Some(fp) = &self.fprime {
            let r = homogeneity_residual(fp, 0.0, points)?;
            if r > tol {
                return Err(Error::Homogeneity { what: "witness f'".into(), degree: 0.0, residual: r, tolerance: tol });
            }
        }
        Ok(())
    }
}

/// Verdict of one residual test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub verdict: Verdict,
    pub stats: ResidualStats,
    pub tolerance: f64,
}

impl Outcome {
    pub fn from_stats(stats: ResidualStats, tolerance: f64) -> Outcome {
        Outcome { verdict: stats.verdict(tolerance), stats, tolerance }
    }

    pub fn unknown(tolerance: f64) -> Outcome {
        Outcome { verdict: Verdict::Unknown, stats: ResidualStats::default(), tolerance }
    }

    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }

    pub fn record(&self, name: &str, anchor: &str) -> CheckRecord {
        CheckRecord {
            name: name.into(),
            anchor: anchor.into(),
            verdict: self.verdict,
            max_residual: self.stats.max,
            tolerance: self.tolerance,
            points: self.stats.count,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WitnessStatus {
    Supplied,
    Reconstructed,
    Absent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub hamel: Outcome,
    pub strong_hamel: Outcome,
    pub weak_funk: Outcome,
    pub funk: Outcome,
    pub witness: WitnessStatus,
    /// `f` vanishes at every sample, so every equation holds vacuously.
    pub degenerate: bool,
    pub seed: Option<u64>,
    pub samples: usize,
    /// Violations of the hierarchy `funk => hamel and weak funk`.
    pub inconsistencies: Vec<String>,
}

impl ClassificationReport {
    pub fn records(&self) -> Vec<CheckRecord> {
        vec![
            self.hamel.record("hamel", "delta_G f = 0"),
            self.strong_hamel.record("strong hamel", "delta_G f = 0 and f = G(f')"),
            self.weak_funk.record("weak funk", "G(f) = f^2"),
            self.funk.record("funk", "d_h f = f d_J f"),
        ]
    }
}

/// Runs the four hierarchy tests on `pair` for the spray `s`.
pub fn classify(
    pair: &CandidatePair,
    s: &SpraySpec,
    points: &[PhasePoint],
    seed: Option<u64>,
    tol: &Tolerances,
) -> Result<ClassificationReport> {
    pair.validate(points, tol.homogeneity)?;
    let hamel = is_hamel(&pair.f, s, points, tol)?;
    let strong_hamel = is_strong_hamel(pair, s, points, tol)?;
    let weak_funk = is_weak_funk(&pair.f, s, points, tol)?;
    let funk = is_funk(&pair.f, s, points, tol)?;
    let degenerate = Field::scalar(pair.f.clone()).eval_all(points)?.iter().all(|v| v[0] == 0.0);
    let mut inconsistencies = Vec::new();
    if funk.passed() && !weak_funk.passed() {
        inconsistencies.push("funk passes but weak funk does not".to_string());
    }
    if funk.passed() && !hamel.passed() {
        inconsistencies.push("funk passes but hamel does not".to_string());
    }
    if hamel.passed() && weak_funk.passed() && !funk.passed() {
        inconsistencies.push("hamel and weak funk pass but funk does not".to_string());
    }
    Ok(ClassificationReport {
        hamel,
        strong_hamel,
        weak_funk,
        funk,
        witness: if pair.fprime.is_some() { WitnessStatus::Supplied } else { WitnessStatus::Absent },
        degenerate,
        seed,
        samples: points.len(),
        inconsistencies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{base_dot_fibre, fibre_norm, parse};
    use crate::point::Domain;
    use crate::presets;

    #[test]
    fn classification_patterns_on_flat_spray() {
        let s = SpraySpec::flat(2);
        let tol = Tolerances::default();
        let pts = Domain::cube(2, presets::BALL_BOX).within_ball(1.0).sample(40, 11);
        let flat = CandidatePair::new(fibre_norm(2), Some(base_dot_fibre(2) / fibre_norm(2)));
        let r = classify(&flat, &s, &pts, Some(11), &tol).unwrap();
        assert_eq!(
            [r.hamel.verdict, r.strong_hamel.verdict, r.weak_funk.verdict, r.funk.verdict],
            [Verdict::Pass, Verdict::Pass, Verdict::Fail, Verdict::Fail]
        );
        let funk = CandidatePair::new(presets::funk_finsler(2), None);
        let r = classify(&funk, &s, &pts, None, &tol).unwrap();
        assert_eq!(
            [r.hamel.verdict, r.strong_hamel.verdict, r.weak_funk.verdict, r.funk.verdict],
            [Verdict::Pass, Verdict::Unknown, Verdict::Pass, Verdict::Pass]
        );
        let bad = CandidatePair::new(parse("x1*sqrt(y1^2+y2^2)", 2).unwrap(), None);
        let r = classify(&bad, &s, &pts, None, &tol).unwrap();
        assert!(!r.hamel.passed() && !r.weak_funk.passed() && !r.funk.passed());
        assert!(r.inconsistencies.is_empty());
        let zero = CandidatePair::new(Expr::zero(), None);
        let r = classify(&zero, &s, &pts, None, &tol).unwrap();
        assert!(r.degenerate && r.funk.passed() && r.weak_funk.passed());
    }

    #[test]
    fn declared_homogeneity_is_enforced() {
        let pts = Domain::cube(2, 1.0).sample(10, 0);
        let pair = CandidatePair::new(parse("y1^2", 2).unwrap(), None);
        assert!(matches!(pair.validate(&pts, 1e-6), Err(Error::Homogeneity { .. })));
        let pair = CandidatePair::new(fibre_norm(2), Some(Expr::y(0)));
        assert!(matches!(pair.validate(&pts, 1e-6), Err(Error::Homogeneity { .. })));
    }
}
