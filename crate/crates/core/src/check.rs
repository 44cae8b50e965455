//! Residual bookkeeping and pass/fail thresholds.
//!
//! Residuals of an identity `lhs = rhs` are normalized as
//! `|lhs - rhs| / (1 + max(|lhs|, |rhs|))` unless noted otherwise.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Unknown,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Verdict {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }

    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::Pass, Verdict::Pass) => Verdict::Pass,
            _ => Verdict::Unknown,
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Unknown => "unknown",
        })
    }
}

/// Normalized residual of `lhs = rhs`.
pub fn rel(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / (1.0 + lhs.abs().max(rhs.abs()))
}

/// Normalized residual of a quantity expected to vanish, with `scale` the
/// magnitude of the largest term that entered it.
pub fn rel_zero(value: f64, scale: f64) -> f64 {
    value.abs() / (1.0 + scale.abs())
}

/// Max-and-mean accumulator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub max: f64,
    pub mean: f64,
    pub count: usize,
}

impl ResidualStats {
    pub fn push(&mut self, r: f64) {
        let r = if r.is_nan() { f64::INFINITY } else { r };
        self.max = self.max.max(r);
        self.mean += (r - self.mean) / (self.count + 1) as f64;
        self.count += 1;
    }

    pub fn extend<I: IntoIterator<Item = f64>>(&mut self, rs: I) {
        for r in rs {
            self.push(r);
        }
    }

    pub fn merge(&mut self, other: &ResidualStats) {
        if other.count == 0 {
            return;
        }
        let total = self.count + other.count;
        self.mean = (self.mean * self.count as f64 + other.mean * other.count as f64) / total as f64;
        self.max = self.max.max(other.max);
        self.count = total;
    }

    pub fn within(&self, tol: f64) -> bool {
        self.max <= tol
    }

    pub fn verdict(&self, tol: f64) -> Verdict {
        Verdict::from_bool(self.within(tol))
    }
}

/// Pass thresholds. Every field is multiplied by the same factor under
/// [`Tolerances::scaled`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Liouville test for user-declared homogeneity.
    pub homogeneity: f64,
    /// Liouville test for metrics and spray coefficients.
    pub strict_homogeneity: f64,
    /// `i_G dd_J L + dL = 0`.
    pub defining_equation: f64,
    pub hamel: f64,
    pub strong_hamel: f64,
    pub funk: f64,
    pub projective_invariance: f64,
    pub dual_symmetry: f64,
    pub alpha_identity: f64,
    pub invariant_routes: f64,
    pub projective_laws: f64,
    pub trace_recovery: f64,
    pub path_independence: f64,
    pub metric_inverse: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            homogeneity: 1e-6,
            strict_homogeneity: 1e-9,
            defining_equation: 1e-9,
            hamel: 1e-8,
            strong_hamel: 1e-8,
            funk: 1e-8,
            projective_invariance: 1e-9,
            dual_symmetry: 1e-8,
            alpha_identity: 1e-8,
            invariant_routes: 1e-8,
            projective_laws: 1e-6,
            trace_recovery: 1e-8,
            path_independence: 1e-6,
            metric_inverse: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn scaled(&self, k: f64) -> Tolerances {
        Tolerances {
            homogeneity: self.homogeneity * k,
            strict_homogeneity: self.strict_homogeneity * k,
            defining_equation: self.defining_equation * k,
            hamel: self.hamel * k,
            strong_hamel: self.strong_hamel * k,
            funk: self.funk * k,
            projective_invariance: self.projective_invariance * k,
            dual_symmetry: self.dual_symmetry * k,
            alpha_identity: self.alpha_identity * k,
            invariant_routes: self.invariant_routes * k,
            projective_laws: self.projective_laws * k,
            trace_recovery: self.trace_recovery * k,
            path_independence: self.path_independence * k,
            metric_inverse: self.metric_inverse * k,
        }
    }
}

/// One line of a verification report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// The identity being checked, or "plumbing".
    pub anchor: String,
    pub verdict: Verdict,
    pub max_residual: f64,
    pub tolerance: f64,
    pub points: usize,
}

impl CheckRecord {
    pub fn from_stats(name: impl Into<String>, anchor: impl Into<String>, stats: &ResidualStats, tol: f64) -> Self {
        CheckRecord {
            name: name.into(),
            anchor: anchor.into(),
            verdict: stats.verdict(tol),
            max_residual: stats.max,
            tolerance: tol,
            points: stats.count,
        }
    }

    /// A record whose verdict was decided by logic rather than a threshold.
    pub fn logical(name: impl Into<String>, anchor: impl Into<String>, ok: bool, points: usize) -> Self {
        CheckRecord {
            name: name.into(),
            anchor: anchor.into(),
            verdict: Verdict::from_bool(ok),
            max_residual: if ok { 0.0 } else { 1.0 },
            tolerance: 0.0,
            points,
        }
    }
}
