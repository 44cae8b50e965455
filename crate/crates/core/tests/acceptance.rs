//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the
//! process exits non-zero if any fails.

use finsler_lab::check::{rel, Tolerances};
use finsler_lab::expr::{fibre_norm, parse, Expr, Var};
use finsler_lab::field::Field;
use finsler_lab::flows::{drift_report, integrate, path_distance, FlowOptions, Monitor, StopReason};
use finsler_lab::invariants::{verify_projective_laws, Invariants, VolumeSpec};
use finsler_lab::metric::MetricSpec;
use finsler_lab::point::{Domain, PhasePoint};
use finsler_lab::presets;
use finsler_lab::spray::SpraySpec;
use finsler_lab::symmetry::{
    dh_dj_closure_check, dynamical_symmetry_field, funk_decomposition_check, is_funk, is_hamel, is_strong_hamel,
    is_weak_funk, projective_invariance_check, symmetry_suite, CandidatePair,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20240611;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn points(domain: &Domain, count: usize) -> Vec<PhasePoint> {
    domain.sample(count, SEED).points
}

fn eval(e: &Expr, p: &PhasePoint) -> f64 {
    e.eval(&p.x, &p.y).expect("evaluation")
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// Funk metric of the unit ball, written out independently of the presets.
fn funk_text(n: usize) -> String {
    let sum = |f: &dyn Fn(usize) -> String| (1..=n).map(f).collect::<Vec<_>>().join(" + ");
    let xx = sum(&|i| format!("x{i}^2"));
    let yy = sum(&|i| format!("y{i}^2"));
    let xy = sum(&|i| format!("x{i}*y{i}"));
    format!("(sqrt(({yy})*(1 - ({xx})) + ({xy})^2) + {xy}) / (1 - ({xx}))")
}

fn funk_value(x: &[f64], y: &[f64]) -> f64 {
    let w = 1.0 - dot(x, x);
    let xy = dot(x, y);
    ((dot(y, y) * w + xy * xy).sqrt() + xy) / w
}

/// Terms of `G(h) = y^i dh/dx^i - 2 G^i dh/dy^i`, built from raw coefficients.
fn spray_apply_terms(coeffs: &[Expr], h: &Expr) -> Vec<Expr> {
    let n = coeffs.len();
    let mut t = Vec::new();
    for i in 0..n {
        t.push(Expr::y(i) * h.diff(Var::x(i)));
        t.push((&coeffs[i] * h.diff(Var::y(i))).scale(-2.0));
    }
    t
}

/// Euler-Lagrange components, each as a list of terms.
fn euler_lagrange_terms(coeffs: &[Expr], f: &Expr) -> Vec<Vec<Expr>> {
    (0..coeffs.len())
        .map(|i| {
            let mut t = spray_apply_terms(coeffs, &f.diff(Var::y(i)));
            t.push(-f.diff(Var::x(i)));
            t
        })
        .collect()
}

/// `max |sum| / (1 + max |term|)` over quantities and points.
fn vanishing(quantities: &[Vec<Expr>], pts: &[PhasePoint]) -> f64 {
    let mut worst = 0.0f64;
    for p in pts {
        for q in quantities {
            let v: Vec<f64> = q.iter().map(|e| eval(e, p)).collect();
            let sum: f64 = v.iter().sum();
            let scale = v.iter().fold(0.0f64, |m, t| m.max(t.abs()));
            let r = sum.abs() / (1.0 + scale);
            worst = if r.is_nan() { f64::INFINITY } else { worst.max(r) };
        }
    }
    worst
}

/// Candidates `a(x).y + c sqrt(y^T A y)`. Closed ones use `a = grad phi`
/// and are Hamel for the flat spray; the rest are not.
fn candidates(n: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<(Expr, bool)> {
    let mut out = Vec::new();
    for k in 0..count {
        let closed = k % 2 == 0;
        let a: Vec<Expr> = if closed {
            let mut phi = Expr::zero();
            for i in 0..n {
                phi = phi + Expr::x(i).scale(rng.gen_range(-1.0..1.0));
                for j in 0..n {
                    phi = phi + (Expr::x(i) * Expr::x(j)).scale(rng.gen_range(-1.0..1.0));
                }
                phi = phi + Expr::x(i).powf(3.0).scale(rng.gen_range(-0.5..0.5));
            }
            (0..n).map(|i| phi.diff(Var::x(i))).collect()
        } else {
            let mut a: Vec<Expr> = (0..n)
                .map(|_| {
                    let mut ai = Expr::constant(rng.gen_range(-1.0..1.0));
                    for j in 0..n {
                        ai = ai + Expr::x(j).scale(rng.gen_range(-1.0..1.0));
                    }
                    ai
                })
                .collect();
            // force a non-zero curl
            a[0] = &a[0] + Expr::x(1).scale(1.0 + rng.gen_range(0.0..1.0));
            a
        };
        let mut quad = Expr::zero();
        for i in 0..n {
            quad = quad + Expr::y(i).powf(2.0).scale(rng.gen_range(0.5..2.0));
        }
        quad = quad + (Expr::y(0) * Expr::y(1)).scale(rng.gen_range(-0.4..0.4));
        let f =
            Expr::sum(a.iter().enumerate().map(|(i, ai)| ai * Expr::y(i))) + quad.sqrt().scale(rng.gen_range(0.5..1.5));
        out.push((f, closed));
    }
    out
}

fn c1_flat_sanity() -> Outcome {
    let mut worst = 0.0f64;
    for n in [2, 3] {
        let m = presets::euclidean(n);
        let s = m.geodesic_spray();
        let inv = Invariants::new(&m, &VolumeSpec::default(), &s);
        for p in points(m.domain(), 100) {
            let nc = s.nonlinear_connection(&p).unwrap();
            let r = s.curvature(&p).unwrap();
            let v = inv.at(&p).unwrap();
            let chi = v.chi.iter().fold(0.0f64, |a, c| a.max(c.abs()));
            worst = worst.max(nc.amax()).max(r.max_abs()).max(v.tau.abs()).max(v.s.abs()).max(chi);
        }
    }
    outcome(worst <= 1e-12, format!("max |N|, |R|, |tau|, |S|, |chi| = {worst:.2e} at 100 points, n = 2, 3"))
}

/// Christoffel symbols and curvature of `e^(2 phi) delta` from the gradient
/// and Hessian of `phi`.
struct ConformalOracle {
    n: usize,
    grad: fn(&[f64]) -> Vec<f64>,
    hess: fn(&[f64]) -> Vec<Vec<f64>>,
}

impl ConformalOracle {
    fn kd(i: usize, j: usize) -> f64 {
        (i == j) as u8 as f64
    }

    /// `Gamma^i_jk = delta^i_j phi_k + delta^i_k phi_j - delta_jk phi_i`.
    fn gamma(&self, x: &[f64]) -> Vec<Vec<Vec<f64>>> {
        let g = (self.grad)(x);
        let n = self.n;
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        (0..n).map(|k| Self::kd(i, j) * g[k] + Self::kd(i, k) * g[j] - Self::kd(j, k) * g[i]).collect()
                    })
                    .collect()
            })
            .collect()
    }

    /// `d_l Gamma^i_jk`.
    fn dgamma(&self, x: &[f64]) -> Vec<Vec<Vec<Vec<f64>>>> {
        let h = (self.hess)(x);
        let n = self.n;
        (0..n)
            .map(|l| {
                (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| {
                                (0..n)
                                    .map(|k| {
                                        Self::kd(i, j) * h[k][l] + Self::kd(i, k) * h[j][l] - Self::kd(j, k) * h[i][l]
                                    })
                                    .collect()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    /// `R^i_ljk = d_j Gamma^i_lk - d_k Gamma^i_lj + Gamma^i_jm Gamma^m_lk - Gamma^i_km Gamma^m_lj`.
    fn riemann(&self, x: &[f64]) -> Vec<Vec<Vec<Vec<f64>>>> {
        let n = self.n;
        let g = self.gamma(x);
        let dg = self.dgamma(x);
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|l| {
                        (0..n)
                            .map(|j| {
                                (0..n)
                                    .map(|k| {
                                        let mut r = dg[j][i][l][k] - dg[k][i][l][j];
                                        for m in 0..n {
                                            r += g[i][j][m] * g[m][l][k] - g[i][k][m] * g[m][l][j];
                                        }
                                        r
                                    })
                                    .collect()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }
}

fn c2_conformal_oracle() -> Outcome {
    // phi = 0.3 x1 + 0.2 x2^2 + 0.1 x1 x3 (last term only for n = 3)
    fn grad2(x: &[f64]) -> Vec<f64> {
        vec![0.3, 0.4 * x[1]]
    }
    fn hess2(_: &[f64]) -> Vec<Vec<f64>> {
        vec![vec![0.0, 0.0], vec![0.0, 0.4]]
    }
    fn grad3(x: &[f64]) -> Vec<f64> {
        vec![0.3 + 0.1 * x[2], 0.4 * x[1], 0.1 * x[0]]
    }
    fn hess3(_: &[f64]) -> Vec<Vec<f64>> {
        vec![vec![0.0, 0.0, 0.1], vec![0.0, 0.4, 0.0], vec![0.1, 0.0, 0.0]]
    }
    let mut spray_err = 0.0f64;
    let mut conn_err = 0.0f64;
    let mut curv_err = 0.0f64;
    for n in [2, 3] {
        let (phi, oracle) = if n == 2 {
            ("0.3*x1 + 0.2*x2^2", ConformalOracle { n, grad: grad2, hess: hess2 })
        } else {
            ("0.3*x1 + 0.2*x2^2 + 0.1*x1*x3", ConformalOracle { n, grad: grad3, hess: hess3 })
        };
        let m = presets::conformal(n, &parse(phi, n).unwrap());
        let s = m.geodesic_spray();
        let coeffs = Field::new(s.coeffs().to_vec());
        for p in points(m.domain(), 50) {
            let (x, y) = (&p.x, &p.y);
            let gam = oracle.gamma(x);
            let riem = oracle.riemann(x);
            let g_or: Vec<f64> = (0..n)
                .map(|i| {
                    0.5 * (0..n)
                        .flat_map(|j| (0..n).map(move |k| (j, k)))
                        .map(|(j, k)| gam[i][j][k] * y[j] * y[k])
                        .sum::<f64>()
                })
                .collect();
            let g_lib = coeffs.eval(&p).unwrap();
            let scale = g_or.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for i in 0..n {
                spray_err = spray_err.max((g_lib[i] - g_or[i]).abs() / scale);
            }
            let nc = s.nonlinear_connection(&p).unwrap();
            let n_or: Vec<Vec<f64>> =
                (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| gam[i][j][k] * y[k]).sum()).collect()).collect();
            let scale = n_or.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
            for i in 0..n {
                for j in 0..n {
                    conn_err = conn_err.max((nc[(i, j)] - n_or[i][j]).abs() / scale);
                }
            }
            let r = s.curvature(&p).unwrap();
            let r_or: Vec<Vec<Vec<f64>>> = (0..n)
                .map(|i| {
                    (0..n).map(|j| (0..n).map(|k| (0..n).map(|l| riem[i][l][j][k] * y[l]).sum()).collect()).collect()
                })
                .collect();
            let scale = r_or.iter().flatten().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        curv_err = curv_err.max((r.r[i][j][k] - r_or[i][j][k]).abs() / scale);
                    }
                }
            }
        }
    }
    let worst = spray_err.max(conn_err).max(curv_err);
    outcome(
        worst <= 1e-8,
        format!("relative error: spray {spray_err:.2e}, connection {conn_err:.2e}, R^i_jk vs R^i_ljk y^l {curv_err:.2e}; 50 points, n = 2, 3"),
    )
}

fn c3_defining_equation() -> Outcome {
    let mut form = 0.0f64;
    let mut el = 0.0f64;
    let mut names = Vec::new();
    for n in [2, 3] {
        for name in presets::NAMES {
            let m = presets::by_name(name, n).unwrap();
            let s = m.geodesic_spray();
            let pts = points(m.domain(), 50);
            form = form.max(m.defining_equation_form(&s).stats(&pts).unwrap().max);
            el = el.max(vanishing(&euler_lagrange_terms(s.coeffs(), m.energy()), &pts));
            if n == 2 {
                names.push(name);
            }
        }
    }
    outcome(
        form <= 1e-9 && el <= 1e-9,
        format!(
            "i_G dd_J L + dL: {form:.2e}; independent G(dL/dy^i) - dL/dx^i: {el:.2e}; presets {}; n = 2, 3",
            names.join(", ")
        ),
    )
}

fn c4_projective_invariance() -> Outcome {
    let mut worst_lib = 0.0f64;
    let mut worst_oracle = 0.0f64;
    let tol = Tolerances::default();
    for n in [2, 3] {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + n as u64);
        let fam = candidates(n, 20, &mut rng);
        let p_factor = parse(&funk_text(n), n).unwrap().scale(0.5);
        let pts = points(&Domain::cube(n, presets::BALL_BOX).within_ball(1.0), 50);
        let flat = SpraySpec::flat(n);
        let flat_coeffs = vec![Expr::zero(); n];
        let deformed: Vec<Expr> = (0..n).map(|i| &p_factor * Expr::y(i)).collect();
        for (f, _) in &fam {
            worst_lib = worst_lib.max(projective_invariance_check(f, &flat, &p_factor, &pts, &tol).unwrap().stats.max);
            let diff: Vec<Vec<Expr>> = euler_lagrange_terms(&deformed, f)
                .into_iter()
                .zip(euler_lagrange_terms(&flat_coeffs, f))
                .map(|(mut a, b)| {
                    a.extend(b.into_iter().map(|e| -e));
                    a
                })
                .collect();
            worst_oracle = worst_oracle.max(vanishing(&diff, &pts));
        }
    }
    outcome(
        worst_lib <= 1e-9 && worst_oracle <= 1e-9,
        format!("20 candidates, P = F~/2, n = 2, 3: library {worst_lib:.2e}, independent {worst_oracle:.2e}"),
    )
}

fn c5_dhdj_equivalence() -> Outcome {
    let tol = Tolerances::default();
    let mut total = 0;
    let mut mismatches = Vec::new();
    for n in [2, 3] {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + 10 + n as u64);
        let mut fam: Vec<(String, Expr, bool)> = candidates(n, 20, &mut rng)
            .into_iter()
            .enumerate()
            .map(|(k, (f, c))| (format!("candidate {k}"), f, c))
            .collect();
        fam.push(("|y|".into(), fibre_norm(n), true));
        fam.push(("Funk metric".into(), parse(&funk_text(n), n).unwrap(), true));
        fam.push(("x1 |y|".into(), Expr::x(0) * fibre_norm(n), false));
        fam.push(("x2 y1".into(), Expr::x(1) * Expr::y(0), false));
        let pts = points(&Domain::cube(n, presets::BALL_BOX).within_ball(1.0), 50);
        let funk_spray = presets::funk(n).geodesic_spray();
        for (name, f, expected) in &fam {
            let flat = SpraySpec::flat(n);
            let h = is_hamel(f, &flat, &pts, &tol).unwrap().passed();
            let c = dh_dj_closure_check(f, &flat, &pts, &tol).unwrap().passed();
            if h != c || h != *expected {
                mismatches.push(format!("flat n={n} {name}: hamel {h}, closure {c}, expected {expected}"));
            }
            let h = is_hamel(f, &funk_spray, &pts, &tol).unwrap().passed();
            let c = dh_dj_closure_check(f, &funk_spray, &pts, &tol).unwrap().passed();
            if h != c {
                mismatches.push(format!("funk spray n={n} {name}: hamel {h}, closure {c}"));
            }
            total += 2;
        }
    }
    outcome(
        mismatches.is_empty(),
        format!(
            "{total} verdict pairs over flat and Funk sprays, n = 2, 3, including negative controls; mismatches: [{}]",
            mismatches.join("; ")
        ),
    )
}

fn c6_shf_chain() -> Outcome {
    let tol = Tolerances::default();
    let required =
        ["delta_G f = 0", "L_G alpha = 0", "i_J alpha d_J-closed", "[G, X] = 0", "X(L) = 0", "i_X omega_L = alpha"];
    let mut worst = 0.0f64;
    let mut missing = Vec::new();
    let mut x_err = 0.0f64;
    for n in [2, 3] {
        let m = presets::euclidean(n);
        let pts = points(m.domain(), 50);
        let fp = finsler_lab::expr::base_dot_fibre(n) / fibre_norm(n);
        let pair = CandidatePair::new(fibre_norm(n), Some(fp.clone()));
        let report = symmetry_suite(&pair, &m, &pts, &tol).unwrap();
        for name in required {
            match report.get(name) {
                Some(r) if r.verdict.passed() => worst = worst.max(r.max_residual),
                Some(r) => {
                    worst = worst.max(r.max_residual);
                    missing.push(format!("{name} failed"));
                }
                None => missing.push(format!("{name} absent")),
            }
        }
        // X = (x|y|^2 - <x,y> y)/|y|^3 d/dx for this fixture
        let x = dynamical_symmetry_field(&fp, &m, &m.geodesic_spray());
        for p in &pts {
            let v = x.eval(p).unwrap();
            let ny = dot(&p.y, &p.y).sqrt();
            let xy = dot(&p.x, &p.y);
            for i in 0..n {
                x_err = x_err.max((v[i] - (p.x[i] / ny - xy * p.y[i] / ny.powi(3))).abs());
                x_err = x_err.max(v[n + i].abs());
            }
        }
    }
    outcome(
        missing.is_empty() && worst <= 1e-8 && x_err <= 1e-12,
        format!(
            "f = |y|, f' = <x,y>/|y|, n = 2, 3: max residual {worst:.2e}; X vs closed form {x_err:.2e} [{}]",
            missing.join("; ")
        ),
    )
}

fn c7_noether() -> Outcome {
    let n = 3;
    let m = presets::euclidean(n);
    let s = m.geodesic_spray();
    let fp = finsler_lab::expr::base_dot_fibre(n) / fibre_norm(n);
    let x = dynamical_symmetry_field(&fp, &m, &s);
    let jxl = x.field.vertical_lift().apply(m.energy());
    let gjxl = s.apply(&jxl);
    let monitors = [Monitor::new("JX(L)", jxl), Monitor::new("G(JX(L))", gjxl)];
    let mut along = 0.0f64;
    let mut drift = 0.0f64;
    let mut oracle = 0.0f64;
    let mut line = 0.0f64;
    let inits = m.domain().sample(10, SEED ^ 7).points;
    for init in &inits {
        let t = integrate(&s, init, &monitors, &FlowOptions::new(1e-2, 1.0)).unwrap();
        for name in ["JX(L)", "G(JX(L))"] {
            along = t.monitor(name).unwrap().iter().fold(along, |a, v| a.max(v.abs()));
        }
        drift = drift.max(drift_report(&t, "JX(L)", 1e-10).unwrap().max_drift);
        for (time, p) in t.times.iter().zip(&t.points) {
            // straight line x0 + t y0; JX(L) = sum_i X^i y^i with X^i from the closed form
            for i in 0..n {
                line = line.max((p.x[i] - init.x[i] - time * init.y[i]).abs());
            }
            let ny = dot(&p.y, &p.y).sqrt();
            let xy = dot(&p.x, &p.y);
            let v: f64 = (0..n).map(|i| (p.x[i] / ny - xy * p.y[i] / ny.powi(3)) * p.y[i]).sum();
            oracle = oracle.max(v.abs());
        }
    }
    outcome(
        along <= 1e-10 && drift <= 1e-10 && oracle <= 1e-10 && line <= 1e-12,
        format!("10 geodesics: max |JX(L)|, |G(JX(L))| {along:.2e}, drift {drift:.2e}, closed-form JX(L) {oracle:.2e}, straight-line error {line:.2e}"),
    )
}

fn c8_schi() -> Outcome {
    let tol = Tolerances::default();
    let mut worst_s = 0.0f64;
    let mut worst_chi = 0.0f64;
    let mut worst_trace = 0.0f64;
    let mut oracle_s = 0.0f64;
    let mut oracle_trace = 0.0f64;
    for n in [2, 3] {
        let flat_m = presets::euclidean(n);
        let funk_m = presets::funk(n);
        let funk_s = funk_m.geodesic_spray();
        let pts = points(funk_m.domain(), 50);
        let p_factor = parse(&funk_text(n), n).unwrap().scale(0.5);
        let r = verify_projective_laws(
            (&flat_m, &flat_m.geodesic_spray()),
            (&funk_m, &funk_s),
            &p_factor,
            &VolumeSpec::default(),
            &pts,
            &tol,
        )
        .unwrap();
        for rec in &r.records {
            match rec.name.as_str() {
                "S law" => worst_s = worst_s.max(rec.max_residual),
                "chi law" => worst_chi = worst_chi.max(rec.max_residual),
                "trace recovery" => worst_trace = worst_trace.max(rec.max_residual),
                _ => {}
            }
        }
        let nf = (n + 1) as f64;
        for (smp, p) in r.samples.iter().zip(&pts) {
            let pv = 0.5 * funk_value(&p.x, &p.y);
            oracle_s = oracle_s.max(rel(smp.s, nf * pv));
            let nt = funk_s.nonlinear_connection(p).unwrap();
            oracle_trace = oracle_trace.max(rel(nt.trace() / nf, pv));
        }
    }
    let ok = worst_s <= 1e-6 && worst_chi <= 1e-6 && worst_trace <= 1e-8 && oracle_s <= 1e-6 && oracle_trace <= 1e-8;
    outcome(
        ok,
        format!(
            "(flat, Funk), n = 2, 3, 50 points: S law {worst_s:.2e}, chi law {worst_chi:.2e}, trace {worst_trace:.2e}; \
             S~ vs (n+1)F~/2 {oracle_s:.2e}, trace(N~)/(n+1) vs F~/2 {oracle_trace:.2e}"
        ),
    )
}

fn c9_funk_hierarchy() -> Outcome {
    let tol = Tolerances::default();
    let mut verdicts_ok = true;
    let mut worst = 0.0f64;
    let mut agree = 0.0f64;
    let mut bicond = Vec::new();
    let mut count = 0;
    for n in [2, 3] {
        let flat = SpraySpec::flat(n);
        let pts = points(&Domain::cube(n, presets::BALL_BOX).within_ball(1.0), 50);
        let ft = parse(&funk_text(n), n).unwrap();
        for p in &pts {
            agree = agree.max(rel(eval(&presets::funk_finsler(n), p), funk_value(&p.x, &p.y)));
        }
        for o in [
            is_funk(&ft, &flat, &pts, &tol).unwrap(),
            is_weak_funk(&ft, &flat, &pts, &tol).unwrap(),
            is_hamel(&ft, &flat, &pts, &tol).unwrap(),
        ] {
            verdicts_ok &= o.passed();
            worst = worst.max(o.stats.max);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + 20 + n as u64);
        let mut fam: Vec<CandidatePair> =
            candidates(n, 10, &mut rng).into_iter().map(|(f, _)| CandidatePair::new(f, None)).collect();
        fam.push(CandidatePair::new(ft.clone(), None));
        fam.push(CandidatePair::new(fibre_norm(n), Some(finsler_lab::expr::base_dot_fibre(n) / fibre_norm(n))));
        fam.push(CandidatePair::new(Expr::x(0) * fibre_norm(n), None));
        fam.push(CandidatePair::new(presets::berwald(n).finsler().clone(), None));
        fam.push(CandidatePair::new(ft.scale(2.0), None));
        for pair in &fam {
            let d = funk_decomposition_check(pair, &flat, &pts, &tol).unwrap();
            count += 1;
            if !d.biconditional_holds {
                bicond.push(pair.f.to_string());
            }
        }
    }
    outcome(
        verdicts_ok && worst <= 1e-8 && agree <= 1e-14 && bicond.is_empty(),
        format!(
            "F~ on flat spray: funk, weak funk, hamel pass (max {worst:.2e}); preset vs formula {agree:.1e}; biconditional on {count} candidates, violations {}",
            bicond.len()
        ),
    )
}

fn c10_chi_strong_hamel() -> Outcome {
    let tol = Tolerances::default();
    let mut lines = Vec::new();
    let mut ok = true;
    for n in [2, 3] {
        let phi = presets::default_conformal_factor();
        let sigma = phi.scale(2.0 * n as f64).exp();
        let fixtures: Vec<(MetricSpec, VolumeSpec, bool)> = vec![
            (presets::euclidean(n), VolumeSpec::default(), true),
            (presets::conformal(n, &phi), VolumeSpec::new(sigma).unwrap(), true),
            (presets::funk(n), VolumeSpec::default(), true),
            (presets::randers_perturbed(n), VolumeSpec::default(), false),
        ];
        for (m, vol, chi_free) in fixtures {
            let s = m.geodesic_spray();
            let pts = points(m.domain(), 50);
            let inv = Invariants::new(&m, &vol, &s);
            let mut chi = 0.0f64;
            for v in inv.at_all(&pts).unwrap() {
                chi = v.chi.iter().fold(chi, |a, c| a.max(c.abs() / (1.0 + v.s.abs())));
            }
            let sh =
                is_strong_hamel(&CandidatePair::new(inv.s.clone(), Some(inv.tau.clone())), &s, &pts, &tol).unwrap();
            let chi_zero = chi <= 1e-6;
            let coherent = chi_zero == sh.passed() && chi_zero == chi_free;
            ok &= coherent;
            if n == 2 {
                lines.push(format!("{} chi {chi:.1e} strong {}", m.name(), sh.verdict));
            }
        }
    }
    outcome(ok, format!("n = 2, 3; {}", lines.join(", ")))
}

fn c11_flows() -> Outcome {
    let mut drift = 0.0f64;
    for n in [2, 3] {
        for name in presets::NAMES {
            let m = presets::by_name(name, n).unwrap();
            let s = m.geodesic_spray();
            for init in m.domain().sample(3, SEED ^ 3).points {
                let opts = FlowOptions::new(1e-3, 1.0).region(m.domain().region.clone()).energy(m.energy().clone());
                let t = integrate(&s, &init, &[Monitor::new("L", m.energy().clone())], &opts).unwrap();
                drift = drift.max(drift_report(&t, "L", 1e-6).unwrap().relative_drift);
            }
        }
    }
    let conf = presets::conformal(2, &presets::default_conformal_factor());
    let cs = conf.geodesic_spray();
    let mut ratios = Vec::new();
    for init in conf.domain().sample(3, SEED ^ 5).points {
        let end = |h: f64| {
            let t = integrate(&cs, &init, &[], &FlowOptions::new(h, 1.0)).unwrap();
            assert_eq!(t.stop, StopReason::Completed);
            t.last().stacked()
        };
        let reference = end(1e-4);
        let err = |z: Vec<f64>| z.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        ratios.push(err(end(0.1)) / err(end(0.05)));
    }
    let order_ok = ratios.iter().all(|r| (8.0..=32.0).contains(r));
    let mut path = 0.0f64;
    let mut off_line = 0.0f64;
    for n in [2, 3] {
        let funk_m = presets::funk(n);
        let fs = funk_m.geodesic_spray();
        for init in funk_m.domain().sample(3, SEED ^ 9).points {
            let opts = FlowOptions::new(1e-3, 1.0).region(funk_m.domain().region.clone());
            let a = integrate(&SpraySpec::flat(n), &init, &[], &opts).unwrap();
            let b = integrate(&fs, &init, &[], &opts).unwrap();
            path = path.max(path_distance(&a, &b, 400).unwrap());
            // Funk geodesics are straight: distance of each base point from the initial line
            let d = &init.y;
            let dd = dot(d, d);
            for p in &b.points {
                let r: Vec<f64> = p.x.iter().zip(&init.x).map(|(a, b)| a - b).collect();
                let k = dot(&r, d) / dd;
                let perp = r.iter().zip(d).map(|(a, b)| (a - k * b).powi(2)).sum::<f64>().sqrt();
                off_line = off_line.max(perp);
            }
        }
    }
    let ratio_text: Vec<String> = ratios.iter().map(|r| format!("{r:.2}")).collect();
    outcome(
        drift <= 1e-6 && order_ok && path <= 1e-4 && off_line <= 1e-4,
        format!(
            "energy drift {drift:.2e} (all presets, n = 2, 3); step-halving ratios [{}]; flat/Funk path distance {path:.2e}, Funk off-line {off_line:.2e}",
            ratio_text.join(", ")
        ),
    )
}

fn random_expr(rng: &mut ChaCha8Rng, depth: usize) -> Expr {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..3) {
            0 => Expr::x(rng.gen_range(0..2)),
            1 => Expr::y(rng.gen_range(0..2)),
            _ => Expr::constant(rng.gen_range(-2.0..2.0)),
        };
    }
    let a = random_expr(rng, depth - 1);
    match rng.gen_range(0..10) {
        0 => a + random_expr(rng, depth - 1),
        1 => a - random_expr(rng, depth - 1),
        2 | 3 => a * random_expr(rng, depth - 1),
        4 => a / (random_expr(rng, depth - 1).sin() + 1.5),
        5 => a.sin(),
        6 => a.cos(),
        7 => a.sin().scale(0.5).exp(),
        8 => (a.powf(2.0) + 1.0).sqrt(),
        _ => (a.cos() + 2.0).ln(),
    }
}

fn c12_expr_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let vars = [Var::x(0), Var::x(1), Var::y(0), Var::y(1)];
    let h = 1e-5;
    let mut first = 0.0f64;
    let mut mixed = 0.0f64;
    for _ in 0..1000 {
        let e = random_expr(&mut rng, 4);
        let mut z: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let k = rng.gen_range(0..4);
        let at = |z: &[f64], e: &Expr| e.eval(&z[..2], &z[2..]).unwrap();
        let d = at(&z, &e.diff(vars[k]));
        z[k] += h;
        let up = at(&z, &e);
        z[k] -= 2.0 * h;
        let down = at(&z, &e);
        z[k] += h;
        let fd = (up - down) / (2.0 * h);
        first = first.max((d - fd).abs() / d.abs().max(1.0));
        let j = rng.gen_range(0..4);
        let a = at(&z, &e.diff(vars[k]).diff(vars[j]));
        let b = at(&z, &e.diff(vars[j]).diff(vars[k]));
        mixed = mixed.max((a - b).abs() / (1.0 + a.abs().max(b.abs())));
    }
    outcome(
        first <= 1e-5 && mixed <= 1e-10,
        format!("1000 random expressions: derivative vs central difference {first:.2e}, mixed partials {mixed:.2e}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 12] = [
        ("flat sanity", c1_flat_sanity),
        ("Riemannian cross-check", c2_conformal_oracle),
        ("geodesic spray defining equation", c3_defining_equation),
        ("projective invariance of delta_G f", c4_projective_invariance),
        ("delta_G f = 0 iff d_h d_J f = 0", c5_dhdj_equivalence),
        ("strong Hamel chain on the flat fixture", c6_shf_chain),
        ("first integral JX(L)", c7_noether),
        ("projective laws for S and chi", c8_schi),
        ("Funk hierarchy", c9_funk_hierarchy),
        ("chi = 0 iff S strong Hamel", c10_chi_strong_hamel),
        ("flows", c11_flows),
        ("expression oracle", c12_expr_oracle),
    ];
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (k, (title, run)) in criteria.iter().enumerate() {
        let label = format!("criterion {:>2}", k + 1);
        if let Some(f) = &filter {
            if !label.contains(f.as_str()) && !title.contains(f.as_str()) {
                continue;
            }
        }
        let o = run();
        if !o.ok {
            failed += 1;
        }
        println!("{label} {} {title}: {}", if o.ok { "PASS" } else { "FAIL" }, o.detail);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
