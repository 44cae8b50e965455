//! Fixed-step RK4 integration of `x' = y, y' = -2 G(x, y)` with monitored
//! scalars.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::field::Field;
use crate::point::{PhasePoint, Region, SLIT_EPS};
use crate::spray::SpraySpec;

/// Largest relative change of the energy allowed in one step.
pub const MAX_STEP_DRIFT: f64 = 1e-2;

#[derive(Clone, Debug)]
pub struct Monitor {
    pub name: String,
    pub expr: Expr,
}

impl Monitor {
    pub fn new(name: impl Into<String>, expr: Expr) -> Monitor {
        Monitor { name: name.into(), expr }
    }
}

#[derive(Clone, Debug)]
pub struct FlowOptions {
    pub h: f64,
    pub t_end: f64,
    pub region: Region,
    /// Energy used for the step-size guard.
    pub energy: Option<Expr>,
}

impl FlowOptions {
    pub fn new(h: f64, t_end: f64) -> FlowOptions {
        FlowOptions { h, t_end, region: Region::Everywhere, energy: None }
    }

    pub fn region(mut self, region: Region) -> FlowOptions {
        self.region = region;
        self
    }

    pub fn energy(mut self, energy: Expr) -> FlowOptions {
        self.energy = Some(energy);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    LeftDomain { t: f64 },
    SlitReached { t: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub h: f64,
    pub times: Vec<f64>,
    pub points: Vec<PhasePoint>,
    pub monitor_names: Vec<String>,
    /// `logs[k][m]` is monitor `m` at step `k`.
    pub logs: Vec<Vec<f64>>,
    pub stop: StopReason,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, PhasePoint::dim)
    }

    pub fn monitor(&self, name: &str) -> Result<Vec<f64>> {
        let m = self.monitor_names.iter().position(|n| n == name).ok_or_else(|| Error::UnknownMonitor(name.into()))?;
        Ok(self.logs.iter().map(|row| row[m]).collect())
    }

    pub fn last(&self) -> &PhasePoint {
        self.points.last().expect("trajectory has its initial point")
    }

    /// CSV with columns `t, x1..xn, y1..yn` and one column per monitor.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let n = self.dim();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.extend((1..=n).map(|i| format!("y{i}")));
        header.extend(self.monitor_names.iter().cloned());
        w.write_record(&header).map_err(io)?;
        for ((t, p), log) in self.times.iter().zip(&self.points).zip(&self.logs) {
            let row: Vec<String> =
                std::iter::once(t).chain(&p.x).chain(&p.y).chain(log).map(|v| format!("{v:e}")).collect();
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Invalid(e.to_string()))
    }
}

fn io(e: csv::Error) -> Error {
    Error::Invalid(format!("csv export: {e}"))
}

struct Rhs<'a> {
    field: &'a Field,
    scratch: Vec<f64>,
}

impl Rhs<'_> {
    fn eval(&mut self, z: &[f64], out: &mut [f64]) -> Result<()> {
        let n = z.len() / 2;
        let g = self.field.tape().eval_with(&z[..n], &z[n..], &mut self.scratch)?;
        out[..n].copy_from_slice(&z[n..]);
        for i in 0..n {
            out[n + i] = -2.0 * g[i];
        }
        Ok(())
    }
}

/// Classical RK4 from `init` with fixed step `opts.h` up to `opts.t_end`.
pub fn integrate(s: &SpraySpec, init: &PhasePoint, monitors: &[Monitor], opts: &FlowOptions) -> Result<Trajectory> {
    if !(opts.h > 0.0) || !(opts.t_end >= 0.0) {
        return Err(Error::Invalid(format!("need h > 0 and T >= 0, got h = {}, T = {}", opts.h, opts.t_end)));
    }
    if init.dim() != s.dim() {
        return Err(Error::Dimension { expected: s.dim(), got: init.dim() });
    }
    let init = PhasePoint::new(init.x.clone(), init.y.clone())?;
    if !opts.region.contains(&init.x) {
        return Err(Error::Invalid(format!("initial point x = {:?} is outside the domain", init.x)));
    }
    let n = s.dim();
    let field = Field::new(s.coeffs().to_vec());
    let mut rhs = Rhs { field: &field, scratch: Vec::new() };
    let mon = Field::new(monitors.iter().map(|m| m.expr.clone()).collect());
    let energy = opts.energy.clone().map(Field::scalar);

    let steps = (opts.t_end / opts.h).round() as usize;
    let mut z = init.stacked();
    let mut times = vec![0.0];
    let mut logs = vec![mon.eval(&init)?];
    let mut points = vec![init.clone()];
    let mut e_prev = match &energy {
        Some(e) => Some(e.eval_scalar(&init)?),
        None => None,
    };
    let mut stop = StopReason::Completed;
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; 2 * n], vec![0.0; 2 * n], vec![0.0; 2 * n], vec![0.0; 2 * n]);
    let mut tmp = vec![0.0; 2 * n];
    let h = opts.h;
    for step in 1..=steps {
        rhs.eval(&z, &mut k1)?;
        for a in 0..2 * n {
            tmp[a] = z[a] + 0.5 * h * k1[a];
        }
        rhs.eval(&tmp, &mut k2)?;
        for a in 0..2 * n {
            tmp[a] = z[a] + 0.5 * h * k2[a];
        }
        rhs.eval(&tmp, &mut k3)?;
        for a in 0..2 * n {
            tmp[a] = z[a] + h * k3[a];
        }
        rhs.eval(&tmp, &mut k4)?;
        for a in 0..2 * n {
            z[a] += h / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
        }
        let t = step as f64 * h;
        let p = PhasePoint::from_stacked(&z);
        if !opts.region.contains(&p.x) {
            stop = StopReason::LeftDomain { t };
            break;
        }
        if p.fibre_norm() < SLIT_EPS {
            stop = StopReason::SlitReached { t };
            break;
        }
        if let (Some(e), Some(prev)) = (&energy, e_prev) {
            let now = e.eval_scalar(&p)?;
            let drift = (now - prev).abs() / prev.abs().max(f64::MIN_POSITIVE);
            if drift > MAX_STEP_DRIFT {
                return Err(Error::StepTooLarge { t, drift });
            }
            e_prev = Some(now);
        }
        logs.push(mon.eval(&p)?);
        times.push(t);
        points.push(p);
    }
    Ok(Trajectory { h, times, points, monitor_names: monitors.iter().map(|m| m.name.clone()).collect(), logs, stop })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub monitor: String,
    pub initial: f64,
    /// `max |m(t) - m(0)|`.
    pub max_drift: f64,
    /// `max_drift / |m(0)|`, or the absolute drift when `m(0) = 0`.
    pub relative_drift: f64,
    /// First time the relative drift exceeds `threshold`.
    pub first_exceed: Option<f64>,
    pub threshold: f64,
}

pub fn drift_report(t: &Trajectory, monitor: &str, threshold: f64) -> Result<DriftReport> {
    let values = t.monitor(monitor)?;
    let initial = values[0];
    let denom = if initial == 0.0 { 1.0 } else { initial.abs() };
    let mut max_drift = 0.0f64;
    let mut first_exceed = None;
    for (time, v) in t.times.iter().zip(&values) {
        let d = (v - initial).abs();
        max_drift = max_drift.max(d);
        if first_exceed.is_none() && d / denom > threshold {
            first_exceed = Some(*time);
        }
    }
    Ok(DriftReport {
        monitor: monitor.into(),
        initial,
        max_drift,
        relative_drift: max_drift / denom,
        first_exceed,
        threshold,
    })
}

const GL4_NODES: [f64; 4] =
    [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
const GL4_WEIGHTS: [f64; 4] =
    [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];

/// Cubic Hermite interpolant of the base curve `x(t)`, using `y = dx/dt`.
struct HermiteCurve<'a> {
    t: &'a Trajectory,
    /// Cumulative arc length at each node.
    cumulative: Vec<f64>,
}

impl<'a> HermiteCurve<'a> {
    fn new(t: &'a Trajectory) -> HermiteCurve<'a> {
        let mut c = HermiteCurve { t, cumulative: vec![0.0] };
        for k in 0..t.points.len().saturating_sub(1) {
            let l = c.partial_length(k, 1.0);
            let last = *c.cumulative.last().unwrap();
            c.cumulative.push(last + l);
        }
        c
    }

    fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    fn segment_h(&self, k: usize) -> f64 {
        self.t.times[k + 1] - self.t.times[k]
    }

    fn position(&self, k: usize, s: f64) -> Vec<f64> {
        let (p0, p1) = (&self.t.points[k], &self.t.points[k + 1]);
        let h = self.segment_h(k);
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        (0..p0.dim()).map(|i| h00 * p0.x[i] + h10 * h * p0.y[i] + h01 * p1.x[i] + h11 * h * p1.y[i]).collect()
    }

    /// `|dx/dt|` at local parameter `s` of segment `k`.
    fn speed(&self, k: usize, s: f64) -> f64 {
        let (p0, p1) = (&self.t.points[k], &self.t.points[k + 1]);
        let h = self.segment_h(k);
        let s2 = s * s;
        let d00 = 6.0 * s2 - 6.0 * s;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = -6.0 * s2 + 6.0 * s;
        let d11 = 3.0 * s2 - 2.0 * s;
        (0..p0.dim())
            .map(|i| {
                let v = (d00 * p0.x[i] + d01 * p1.x[i]) / h + d10 * p0.y[i] + d11 * p1.y[i];
                v * v
            })
            .sum::<f64>()
            .sqrt()
    }

    fn partial_length(&self, k: usize, upto: f64) -> f64 {
        let h = self.segment_h(k);
        GL4_NODES.iter().zip(GL4_WEIGHTS).map(|(z, w)| w * self.speed(k, 0.5 * upto * (z + 1.0))).sum::<f64>()
            * 0.5
            * upto
            * h
    }

    /// Point at arc length `s` from the start.
    fn at_arclength(&self, s: f64) -> Vec<f64> {
        let k = match self.cumulative.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(k) => k.min(self.cumulative.len() - 2),
            Err(k) => k.saturating_sub(1).min(self.cumulative.len() - 2),
        };
        let target = s - self.cumulative[k];
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.partial_length(k, mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        self.position(k, 0.5 * (lo + hi))
    }
}

/// Largest Euclidean distance between the base curves of two trajectories
/// compared at equal arc length over their common length.
pub fn path_distance(a: &Trajectory, b: &Trajectory, samples: usize) -> Result<f64> {
    if a.points.len() < 2 || b.points.len() < 2 {
        return Err(Error::Invalid("path comparison needs at least two points per trajectory".into()));
    }
    let (ca, cb) = (HermiteCurve::new(a), HermiteCurve::new(b));
    let common = ca.length().min(cb.length());
    let mut worst = 0.0f64;
    for j in 0..=samples {
        let s = common * j as f64 / samples as f64;
        let (pa, pb) = (ca.at_arclength(s), cb.at_arclength(s));
        let d = pa.iter().zip(&pb).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
        worst = worst.max(d);
    }
    Ok(worst)
}
