//! Metric spec files.
//!
//! ```toml
//! dim = 2
//!
//! [metric]
//! F = "sqrt(y1^2 + y2^2)"     # or L = "...", or preset = "funk"
//! sigma = "1"
//!
//! [spray]
//! kind = "geodesic"           # or "flat"
//! P = "0.5*y1"                # optional projective deformation
//!
//! [candidate]
//! f = "sqrt(y1^2 + y2^2)"
//! fprime = "(x1*y1 + x2*y2)/sqrt(y1^2 + y2^2)"
//!
//! [domain]
//! x_min = [-1, -1]
//! x_max = [1, 1]
//! ball_radius = 1.0
//!
//! [sampling]
//! seed = 7
//! samples = 50
//! ```

use std::path::Path;

use finsler_lab::check::Tolerances;
use finsler_lab::expr::{parse, Expr};
use finsler_lab::invariants::VolumeSpec;
use finsler_lab::metric::MetricSpec;
use finsler_lab::point::{Domain, PhasePoint, Region};
use finsler_lab::presets;
use finsler_lab::spray::SpraySpec;
use finsler_lab::symmetry::CandidatePair;
use serde::Deserialize;
use sha2::{Digest, Sha256};
use toml::Spanned;

use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    dim: usize,
    #[serde(default)]
    metric: RawMetric,
    #[serde(default)]
    spray: RawSpray,
    #[serde(default)]
    candidate: RawCandidate,
    #[serde(default)]
    domain: RawDomain,
    #[serde(default)]
    sampling: RawSampling,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMetric {
    preset: Option<String>,
    #[serde(rename = "F")]
    finsler: Option<Spanned<String>>,
    #[serde(rename = "L")]
    energy: Option<Spanned<String>>,
    sigma: Option<Spanned<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpray {
    kind: Option<Spanned<String>>,
    #[serde(rename = "P")]
    factor: Option<Spanned<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCandidate {
    f: Option<Spanned<String>>,
    fprime: Option<Spanned<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    x_min: Option<Vec<f64>>,
    x_max: Option<Vec<f64>>,
    ball_radius: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSampling {
    seed: Option<u64>,
    samples: Option<usize>,
}

/// Where a spec came from, used in messages and the hash.
#[derive(Clone, Debug)]
pub enum Source {
    File { path: String, text: String },
    Preset { name: String, dim: usize },
}

/// A loaded and validated spec.
#[derive(Clone, Debug)]
pub struct Spec {
    pub dim: usize,
    pub metric: Option<MetricSpec>,
    pub volume: VolumeSpec,
    pub spray: SpraySpec,
    /// The spray is the geodesic spray of `metric`.
    pub geodesic: bool,
    pub factor: Option<Expr>,
    pub candidate: Option<CandidatePair>,
    pub domain: Domain,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub hash: String,
}

/// Overrides coming from the command line.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub f: Option<String>,
    pub fprime: Option<String>,
    pub flat: bool,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

struct Ctx<'a> {
    path: &'a str,
    text: &'a str,
    dim: usize,
}

impl Ctx<'_> {
    fn err(&self, span: Option<std::ops::Range<usize>>, msg: impl std::fmt::Display) -> CliError {
        match span {
            Some(s) => CliError::Input(format!("{}:{}: {msg}", self.path, line_of(self.text, s.start))),
            None => CliError::Input(format!("{}: {msg}", self.path)),
        }
    }

    fn expr(&self, field: &str, s: &Spanned<String>) -> Result<Expr, CliError> {
        parse(s.get_ref(), self.dim).map_err(|e| self.err(Some(s.span()), format!("`{field}`: {e}")))
    }

    fn validated<T>(&self, span: Option<std::ops::Range<usize>>, r: finsler_lab::Result<T>) -> Result<T, CliError> {
        r.map_err(|e| self.err(span, e))
    }
}

pub fn load_file(path: &Path, seed: u64, samples: usize, tol: &Tolerances, over: &Overrides) -> Result<Spec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let source = Source::File { path: path.display().to_string(), text };
    load(&source, seed, samples, tol, over)
}

pub fn load_preset(
    name: &str,
    dim: usize,
    seed: u64,
    samples: usize,
    tol: &Tolerances,
    over: &Overrides,
) -> Result<Spec, CliError> {
    load(&Source::Preset { name: name.to_string(), dim }, seed, samples, tol, over)
}

fn load(source: &Source, seed: u64, samples: usize, tol: &Tolerances, over: &Overrides) -> Result<Spec, CliError> {
    let (path, text, raw, mut hash_input) = match source {
        Source::File { path, text } => {
            let raw: RawSpec = toml::from_str(text).map_err(|e| {
                let line = e.span().map(|s| format!(":{}", line_of(text, s.start))).unwrap_or_default();
                CliError::Input(format!("{path}{line}: {}", e.message()))
            })?;
            (path.clone(), text.as_str(), raw, text.clone())
        }
        Source::Preset { name, dim } => {
            let raw = RawSpec {
                dim: *dim,
                metric: RawMetric { preset: Some(name.clone()), ..Default::default() },
                ..Default::default()
            };
            (format!("preset {name}"), "", raw, format!("preset={name}\ndim={dim}\n"))
        }
    };
    if over.f.is_some() || over.fprime.is_some() || over.flat {
        hash_input.push_str(&format!("f={:?}\nfprime={:?}\nflat={}\n", over.f, over.fprime, over.flat));
    }
    let dim = raw.dim;
    let ctx = Ctx { path: &path, text, dim };
    if !(2..=8).contains(&dim) {
        return Err(ctx.err(None, format!("dim = {dim} outside 2..=8")));
    }

    let m = &raw.metric;
    let given = [m.preset.is_some(), m.finsler.is_some(), m.energy.is_some()].iter().filter(|b| **b).count();
    if given > 1 {
        return Err(ctx.err(None, "[metric] takes one of `preset`, `F` or `L`"));
    }
    let explicit_domain = raw.domain.x_min.is_some() || raw.domain.x_max.is_some();
    let mut domain = match (&raw.domain.x_min, &raw.domain.x_max) {
        (Some(lo), Some(hi)) => {
            if lo.len() != dim || hi.len() != dim {
                return Err(ctx.err(None, format!("domain bounds must have {dim} entries")));
            }
            if lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                return Err(ctx.err(None, "domain needs x_min < x_max componentwise"));
            }
            Domain { x_min: lo.clone(), x_max: hi.clone(), region: Region::Everywhere }
        }
        (None, None) => Domain::cube(dim, 1.0),
        _ => return Err(ctx.err(None, "give both `x_min` and `x_max`")),
    };
    let metric = if let Some(name) = &m.preset {
        let pm = presets::by_name(name, dim).map_err(|e| ctx.err(None, e))?;
        if explicit_domain {
            domain.region = pm.domain().region.clone();
        } else {
            domain = pm.domain().clone();
        }
        Some(MetricSpec::with_both(pm.name(), dim, pm.finsler().clone(), pm.energy().clone(), domain.clone()))
    } else if let Some(f) = &m.finsler {
        Some(MetricSpec::from_finsler("spec", dim, ctx.expr("F", f)?, domain.clone()))
    } else if let Some(l) = &m.energy {
        Some(MetricSpec::from_energy("spec", dim, ctx.expr("L", l)?, domain.clone()))
    } else {
        None
    };
    if let Some(r) = raw.domain.ball_radius {
        if !(r > 0.0) {
            return Err(ctx.err(None, "ball_radius must be positive"));
        }
        domain.region = Region::Ball { radius: r };
    }
    let metric = metric
        .map(|pm| MetricSpec::with_both(pm.name(), dim, pm.finsler().clone(), pm.energy().clone(), domain.clone()));

    let seed = raw.sampling.seed.unwrap_or(seed);
    let samples = raw.sampling.samples.unwrap_or(samples);
    if samples == 0 {
        return Err(ctx.err(None, "samples must be positive"));
    }
    let points: Vec<PhasePoint> = domain.sample(samples, seed).points;
    if points.is_empty() {
        return Err(ctx.err(None, "the domain box does not meet the region"));
    }

    let metric_span = m.finsler.as_ref().or(m.energy.as_ref()).map(|s| s.span());
    if let Some(metric) = &metric {
        ctx.validated(metric_span.clone(), metric.validate(&points, tol.homogeneity))?;
    }
    let volume = match &m.sigma {
        Some(s) => {
            let v = ctx.validated(Some(s.span()), VolumeSpec::new(ctx.expr("sigma", s)?))?;
            ctx.validated(Some(s.span()), v.check_positive(&points))?;
            v
        }
        None => VolumeSpec::default(),
    };

    let kind = raw.spray.kind.as_ref().map(|k| (k.get_ref().as_str(), Some(k.span())));
    let flat = over.flat
        || match kind {
            Some(("flat", _)) => true,
            Some(("geodesic", _)) => false,
            Some((other, span)) => {
                return Err(ctx.err(span, format!("spray kind `{other}` is not `geodesic` or `flat`")))
            }
            None => metric.is_none(),
        };
    let mut spray = if flat {
        SpraySpec::flat(dim)
    } else {
        match &metric {
            Some(mm) => ctx.validated(metric_span.clone(), mm.geodesic_spray_checked(&points))?,
            None => return Err(ctx.err(None, "a geodesic spray needs a [metric]")),
        }
    };
    let factor = match &raw.spray.factor {
        Some(p) => {
            let e = ctx.expr("P", p)?;
            spray = ctx.validated(Some(p.span()), spray.projective_deform(&e, &points, tol.homogeneity))?;
            Some(e)
        }
        None => None,
    };

    let f_expr = match &over.f {
        Some(t) => Some(parse(t, dim).map_err(|e| CliError::Input(format!("--f: {e}")))?),
        None => raw.candidate.f.as_ref().map(|s| ctx.expr("f", s)).transpose()?,
    };
    let fp_expr = match &over.fprime {
        Some(t) => Some(parse(t, dim).map_err(|e| CliError::Input(format!("--fprime: {e}")))?),
        None => raw.candidate.fprime.as_ref().map(|s| ctx.expr("fprime", s)).transpose()?,
    };
    let candidate = match (f_expr, fp_expr) {
        (Some(f), fp) => {
            let pair = CandidatePair::new(f, fp);
            let span = raw.candidate.f.as_ref().map(|s| s.span());
            ctx.validated(span, pair.validate(&points, tol.homogeneity))?;
            Some(pair)
        }
        (None, Some(_)) => return Err(ctx.err(None, "`fprime` given without `f`")),
        (None, None) => None,
    };

    Ok(Spec {
        dim,
        metric,
        volume,
        geodesic: !flat && factor.is_none(),
        spray,
        factor,
        candidate,
        domain,
        seed: raw.sampling.seed,
        samples: raw.sampling.samples,
        hash: sha256_hex(hash_input.as_bytes()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load_str(text: &str) -> Result<Spec, CliError> {
        let src = Source::File { path: "t.toml".into(), text: text.into() };
        load(&src, 1, 20, &Tolerances::default(), &Overrides::default())
    }

    #[test]
    fn flat_candidate_spec() {
        let s = load_str("dim = 2\n[candidate]\nf = \"sqrt(y1^2+y2^2)\"\n").unwrap();
        assert!(s.metric.is_none() && s.spray.is_flat() && s.candidate.is_some());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = load_str("dim = 2\n[metric]\nF = \"y1^2 + y2^2\"\n").unwrap_err().to_string();
        assert!(e.starts_with("t.toml:3:") && e.contains("homogeneity"), "{e}");
        let e = load_str("dim = 2\n\n[metric]\nF = \"sqrt(y1^2 +\"\n").unwrap_err().to_string();
        assert!(e.starts_with("t.toml:4:"), "{e}");
        let e = load_str("dim = 2\nbogus = 1\n").unwrap_err().to_string();
        assert!(e.contains("t.toml:2"), "{e}");
    }

    #[test]
    fn preset_domain_is_kept() {
        let s = load_str("dim = 2\n[metric]\npreset = \"funk\"\n").unwrap();
        assert!(matches!(s.domain.region, Region::Ball { .. }));
        assert!(!s.spray.is_flat());
    }
}
