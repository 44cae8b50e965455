//! Verification suites over the built-in fixtures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::check::{rel, CheckRecord, ResidualStats, Tolerances, Verdict};
use crate::error::{Error, Result};
use crate::expr::{base_dot_fibre, fibre_norm, Expr, Var};
use crate::field::{vanishing_stats, Field};
use crate::flows::{drift_report, integrate, FlowOptions, Monitor};
use crate::forms::VectorField;
use crate::invariants::{verify_projective_laws, Invariants, VolumeSpec};
use crate::metric::MetricSpec;
use crate::point::{Domain, PhasePoint};
use crate::presets;
use crate::spray::SpraySpec;
use crate::symmetry::{
    alpha_form, alpha_torsion_check, dh_dj_closure_check, dual_symmetry_check, dynamical_symmetry_field,
    funk_decomposition_check, is_funk, is_hamel, is_strong_hamel, is_weak_funk, projective_invariance_check,
    reconstruct_vertical_potential, strong_hamel_from_weak_funk, symmetry_suite, vertical_potential_converse,
    CandidatePair,
};

pub const SUITES: [&str; 6] = ["projective", "shf", "schi", "funk", "geometry", "flows"];

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub dim: usize,
    pub seed: u64,
    pub samples: usize,
    pub tol: Tolerances,
}

impl SuiteConfig {
    pub fn new(dim: usize) -> SuiteConfig {
        SuiteConfig { dim, seed: 2024, samples: 50, tol: Tolerances::default() }
    }

    fn points(&self, domain: &Domain) -> Vec<PhasePoint> {
        domain.sample(self.samples, self.seed).points
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub suite: String,
    pub records: Vec<CheckRecord>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.verdict.passed())
    }
}

/// Runs one named suite, or every suite for `"all"`.
pub fn run(name: &str, cfg: &SuiteConfig) -> Result<Vec<SuiteOutcome>> {
    if name == "all" {
        return SUITES.iter().map(|s| run_one(s, cfg)).collect();
    }
    Ok(vec![run_one(name, cfg)?])
}

fn run_one(name: &str, cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let records = match name {
        "projective" => projective(cfg)?,
        "shf" => shf(cfg)?,
        "schi" => schi(cfg)?,
        "funk" => funk(cfg)?,
        "geometry" => geometry(cfg)?,
        "flows" => flows(cfg)?,
        other => {
            return Err(Error::Invalid(format!("unknown suite `{other}`; known: {}, all", SUITES.join(", "))));
        }
    };
    Ok(SuiteOutcome { suite: name.to_string(), records })
}

/// 1-homogeneous candidates `a_i(x) y^i + c |y|` with polynomial `a_i`:
/// even indices use a gradient `a = grad phi` (Hamel for the flat spray),
/// odd ones a generic non-closed `a`.
pub fn candidate_family(dim: usize, count: usize, seed: u64) -> Vec<(String, Expr)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let c = rng.gen_range(0.5..1.5);
        let a: Vec<Expr> = if k % 2 == 0 {
            let mut phi = Expr::zero();
            for i in 0..dim {
                phi = phi + Expr::x(i).scale(rng.gen_range(-1.0..1.0));
                for j in i..dim {
                    phi = phi + (Expr::x(i) * Expr::x(j)).scale(rng.gen_range(-1.0..1.0));
                }
            }
            (0..dim).map(|i| phi.diff(Var::x(i))).collect()
        } else {
            (0..dim)
                .map(|_| {
                    let mut a = Expr::constant(rng.gen_range(-1.0..1.0));
                    for j in 0..dim {
                        a = a + Expr::x(j).scale(rng.gen_range(-1.0..1.0));
                        a = a + Expr::x(j).powf(2.0).scale(rng.gen_range(-0.5..0.5));
                    }
                    a
                })
                .collect()
        };
        let f = Expr::sum(a.iter().enumerate().map(|(i, ai)| ai * Expr::y(i))) + fibre_norm(dim).scale(c);
        let kind = if k % 2 == 0 { "closed" } else { "generic" };
        out.push((format!("candidate {k} ({kind})"), f));
    }
    out
}

fn negative_control(name: &str, anchor: &str, failed: bool, points: usize) -> CheckRecord {
    CheckRecord::logical(format!("negative control: {name}"), anchor, failed, points)
}

/// Projective invariance of the Euler-Lagrange form and the `d_h d_J`
/// characterization of Hamel functions.
fn projective(cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let n = cfg.dim;
    let tol = &cfg.tol;
    let s = SpraySpec::flat(n);
    let pts = cfg.points(presets::funk(n).domain());
    let p_factor = presets::funk_factor(n);
    let mut records = Vec::new();

    let mut family = candidate_family(n, 20, cfg.seed);
    let mut inv = ResidualStats::default();
    for (_, f) in &family {
        inv.merge(&projective_invariance_check(f, &s, &p_factor, &pts, tol)?.stats);
    }
    records.push(CheckRecord::from_stats(
        "projective invariance (20 candidates)",
        "delta_G~ f = delta_G f",
        &inv,
        tol.projective_invariance,
    ));
    let zero = projective_invariance_check(&family[0].1, &s, &Expr::zero(), &pts, tol)?;
    records.push(CheckRecord::logical(
        "P = 0 leaves delta_G f unchanged",
        "delta_G~ f = delta_G f",
        zero.stats.max == 0.0,
        pts.len(),
    ));

    family.push(("|y|".into(), fibre_norm(n)));
    family.push(("Funk metric".into(), presets::funk_finsler(n)));
    family.push(("x1 |y|".into(), Expr::x(0) * fibre_norm(n)));
    let mut agree = true;
    let mut hamel_count = 0;
    for (_, f) in &family {
        let h = is_hamel(f, &s, &pts, tol)?;
        let c = dh_dj_closure_check(f, &s, &pts, tol)?;
        agree &= h.verdict == c.verdict;
        hamel_count += h.passed() as usize;
    }
    records.push(CheckRecord::logical(
        format!("verdict(delta_G f = 0) = verdict(d_h d_J f = 0) on {} candidates", family.len()),
        "delta_G f = 0 iff d_h d_J f = 0",
        agree,
        pts.len() * family.len(),
    ));
    records.push(CheckRecord::logical(
        format!("family has both verdicts ({hamel_count} hamel of {})", family.len()),
        "plumbing",
        hamel_count > 0 && hamel_count < family.len(),
        family.len(),
    ));
    Ok(records)
}

fn flat_pair(n: usize) -> CandidatePair {
    CandidatePair::new(fibre_norm(n), Some(base_dot_fibre(n) / fibre_norm(n)))
}

/// Deterministic initial conditions inside `domain`.
fn initial_points(domain: &Domain, count: usize, seed: u64) -> Vec<PhasePoint> {
    domain.sample(count, seed ^ 0x5eed).points
}

/// The chain strong Hamel function -> dual symmetry -> dynamical symmetry,
/// its converse via fibre integration, and the conserved quantity.
fn shf(cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let n = cfg.dim;
    let tol = &cfg.tol;
    let m = presets::euclidean(n);
    let pts = cfg.points(m.domain());
    let pair = flat_pair(n);
    let fp = pair.fprime.clone().unwrap();
    let mut records = symmetry_suite(&pair, &m, &pts, tol)?.records;
    let s = m.geodesic_spray();

    // First integral along geodesics.
    let x = dynamical_symmetry_field(&fp, &m, &s);
    let jxl = x.field.vertical_lift().apply(m.energy());
    let g_jxl = s.apply(&jxl);
    let monitors = [Monitor::new("JX(L)", jxl), Monitor::new("G(JX(L))", g_jxl)];
    let mut along = ResidualStats::default();
    let mut drift = ResidualStats::default();
    for init in initial_points(m.domain(), 10, cfg.seed) {
        let t = integrate(&s, &init, &monitors, &FlowOptions::new(1e-2, 1.0))?;
        along.extend(t.monitor("G(JX(L))")?.iter().map(|v| v.abs()));
        along.extend(t.monitor("JX(L)")?.iter().map(|v| v.abs()));
        drift.push(drift_report(&t, "JX(L)", 1e-10)?.max_drift);
    }
    records.push(CheckRecord::from_stats(
        "JX(L) and G(JX(L)) vanish along 10 geodesics",
        "JX(L) is a first integral",
        &along,
        1e-10,
    ));
    records.push(CheckRecord::from_stats("JX(L) drift along 10 geodesics", "JX(L) is a first integral", &drift, 1e-10));

    // Converse: reconstruct f' from beta and compare with the witness.
    let alpha = alpha_form(&fp, &s);
    let beta = alpha.dy().to_vec();
    let mut recon = ResidualStats::default();
    let sub: Vec<&PhasePoint> = pts.iter().take(20).collect();
    let fpf = Field::scalar(fp.clone());
    for p in &sub {
        let y0: Vec<f64> = (0..n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
        let r = reconstruct_vertical_potential(&beta, &y0, p, tol.path_independence)?;
        let exact = fpf.eval_scalar(p)? - fpf.eval_scalar(&PhasePoint { x: p.x.clone(), y: y0 })?;
        recon.push((r.value - exact).abs());
    }
    records.push(CheckRecord::from_stats(
        "fibre integration recovers f'",
        "i_J alpha = -d_J f'",
        &recon,
        tol.path_independence,
    ));
    let conv = vertical_potential_converse(&alpha, &s, &pts, tol)?;
    records.push(conv.record("alpha_i = -G(beta_i) + 2 N^j_i beta_j", "alpha = d_J f - d f'"));
    let f_rec = s.apply(&fp);
    let sh = is_strong_hamel(&CandidatePair::new(f_rec, Some(fp.clone())), &s, &pts, tol)?;
    records.push(sh.record("f = G(f') is strong Hamel", "f is a strong Hamel function"));
    let twisted: Vec<Expr> = (0..n)
        .map(|i| {
            if i == 0 {
                Expr::y(1)
            } else if i == 1 {
                -Expr::y(0)
            } else {
                Expr::zero()
            }
        })
        .collect();
    let p0 = PhasePoint::new((0..n).map(|_| 0.0).collect(), (0..n).map(|i| if i == 1 { 1.0 } else { 0.0 }).collect())?;
    let y0: Vec<f64> = (0..n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
    let rejected = matches!(
        reconstruct_vertical_potential(&twisted, &y0, &p0, tol.path_independence),
        Err(Error::PathDependent { .. })
    );
    records.push(negative_control("non-closed beta", "i_J alpha is d_J-closed", rejected, 1));

    // The form built from the distortion on a chi-free and a chi-carrying metric.
    let vol = VolumeSpec::default();
    let funk_m = presets::funk(n);
    let funk_pts: Vec<PhasePoint> = cfg.points(funk_m.domain()).into_iter().take(cfg.samples.min(30)).collect();
    let funk_s = funk_m.geodesic_spray();
    records.push(
        alpha_torsion_check(&funk_m, &vol, &funk_s, &funk_pts, tol)?
            .record("alpha(tau) on Funk", "alpha = nabla I_k dx^k - I_k delta y^k"),
    );
    let tau_f = crate::invariants::distortion_expr(&funk_m, &vol);
    let dual_f = dual_symmetry_check(&alpha_form(&tau_f, &funk_s), &funk_s, &funk_pts, tol)?;
    records.push(dual_f.invariant.record("L_G alpha(tau) = 0 on Funk", "chi = 0 iff alpha(tau) is invariant"));
    let rp = presets::randers_perturbed(n);
    let rp_pts: Vec<PhasePoint> = cfg.points(rp.domain()).into_iter().take(cfg.samples.min(30)).collect();
    let rp_s = rp.geodesic_spray();
    let tau_r = crate::invariants::distortion_expr(&rp, &vol);
    let dual_r = dual_symmetry_check(&alpha_form(&tau_r, &rp_s), &rp_s, &rp_pts, tol)?;
    records.push(negative_control(
        "L_G alpha(tau) != 0 on perturbed Randers",
        "chi = 0 iff alpha(tau) is invariant",
        !dual_r.invariant.passed(),
        rp_pts.len(),
    ));
    Ok(records)
}

/// The volume `det a(x)` of the conformal preset, `e^(2 n phi)`.
pub fn conformal_volume(n: usize) -> VolumeSpec {
    VolumeSpec::new(presets::default_conformal_factor().scale(2.0 * n as f64).exp()).expect("fibre-free")
}

/// Max of `|chi_i| / (1 + |S|)` over `points`.
pub fn chi_magnitude(inv: &Invariants, points: &[PhasePoint]) -> Result<f64> {
    let mut worst = 0.0f64;
    for v in inv.at_all(points)? {
        for c in &v.chi {
            worst = worst.max(c.abs() / (1.0 + v.s.abs()));
        }
    }
    Ok(worst)
}

/// Projective laws for S and chi, and chi = 0 iff S is strong Hamel with
/// witness tau.
fn schi(cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let n = cfg.dim;
    let tol = &cfg.tol;
    let flat_m = presets::euclidean(n);
    let funk_m = presets::funk(n);
    let pts = cfg.points(funk_m.domain());
    let p_factor = presets::funk_factor(n);
    let vol = VolumeSpec::default();
    let report = verify_projective_laws(
        (&flat_m, &flat_m.geodesic_spray()),
        (&funk_m, &funk_m.geodesic_spray()),
        &p_factor,
        &vol,
        &pts,
        tol,
    )?;
    let mut records = report.records;

    let trivial = verify_projective_laws(
        (&funk_m, &funk_m.geodesic_spray()),
        (&funk_m, &funk_m.geodesic_spray()),
        &Expr::zero(),
        &vol,
        &pts[..10.min(pts.len())],
        tol,
    )?;
    records.push(CheckRecord::logical(
        "P = 0 gives identical invariants",
        "S~ = S + (n+1) P",
        trivial.passed(),
        trivial.samples.len(),
    ));

    let mut direct = ResidualStats::default();
    let ft = Field::scalar(presets::funk_finsler(n));
    for (smp, p) in report.samples.iter().zip(&pts) {
        direct.push(rel(smp.s, (n + 1) as f64 * 0.5 * ft.eval_scalar(p)?));
    }
    records.push(CheckRecord::from_stats("Funk S = (n+1) F~/2", "S~ = S + (n+1) P", &direct, 1e-7));

    let fixtures: Vec<(MetricSpec, VolumeSpec, bool)> = vec![
        (presets::euclidean(n), VolumeSpec::default(), true),
        (presets::conformal(n, &presets::default_conformal_factor()), conformal_volume(n), true),
        (presets::funk(n), VolumeSpec::default(), true),
        (presets::randers_perturbed(n), VolumeSpec::default(), false),
    ];
    for (m, vol, expect_zero) in fixtures {
        let s = m.geodesic_spray();
        let fpts: Vec<PhasePoint> = cfg.points(m.domain()).into_iter().take(cfg.samples.min(30)).collect();
        let inv = Invariants::new(&m, &vol, &s);
        let chi = chi_magnitude(&inv, &fpts)?;
        let chi_zero = chi <= tol.projective_laws;
        let sh = is_strong_hamel(&CandidatePair::new(inv.s.clone(), Some(inv.tau.clone())), &s, &fpts, tol)?;
        let coherent = chi_zero == sh.passed() && chi_zero == expect_zero;
        records.push(CheckRecord {
            name: format!(
                "chi = 0 iff S strong Hamel on {} (max |chi| {chi:.3e}, strong hamel {})",
                m.name(),
                sh.verdict
            ),
            anchor: "chi = 0 iff S = G(tau) is strong Hamel".into(),
            verdict: Verdict::from_bool(coherent),
            max_residual: if expect_zero { chi } else { sh.stats.max },
            tolerance: tol.projective_laws,
            points: fpts.len(),
        });
    }
    Ok(records)
}

/// The Funk hierarchy and the strong Hamel construction from a weak Funk
/// projective factor.
fn funk(cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let n = cfg.dim;
    let tol = &cfg.tol;
    let s = SpraySpec::flat(n);
    let funk_m = presets::funk(n);
    let pts = cfg.points(funk_m.domain());
    let ft = presets::funk_finsler(n);
    let mut records = vec![
        is_funk(&ft, &s, &pts, tol)?.record("Funk metric is Funk", "d_h f = f d_J f"),
        is_weak_funk(&ft, &s, &pts, tol)?.record("Funk metric is weak Funk", "G(f) = f^2"),
        is_hamel(&ft, &s, &pts, tol)?.record("Funk metric is Hamel", "delta_G f = 0"),
    ];

    let mut candidates = vec![
        ("Funk metric".to_string(), CandidatePair::new(ft.clone(), None)),
        ("|y| with witness".to_string(), flat_pair(n)),
        ("x1 |y|".to_string(), CandidatePair::new(Expr::x(0) * fibre_norm(n), None)),
        ("Berwald metric".to_string(), CandidatePair::new(presets::berwald(n).finsler().clone(), None)),
    ];
    candidates.extend(candidate_family(n, 6, cfg.seed).into_iter().map(|(k, f)| (k, CandidatePair::new(f, None))));
    let mut all_hold = true;
    let mut sum = ResidualStats::default();
    let mut patterns = Vec::new();
    for (name, pair) in &candidates {
        let d = funk_decomposition_check(pair, &s, &pts, tol)?;
        all_hold &= d.biconditional_holds;
        if d.funk.passed() {
            sum.merge(&d.sum_check.stats);
        }
        let v = |o: &crate::symmetry::Outcome| if o.passed() { 'T' } else { 'F' };
        patterns.push(format!("{name}: {}{}{}", v(&d.hamel_nabla), v(&d.weak_funk), v(&d.funk)));
    }
    records.push(CheckRecord::logical(
        format!("funk iff (hamel and weak funk) on {} candidates [{}]", candidates.len(), patterns.join("; ")),
        "funk <=> strong hamel and weak funk",
        all_hold,
        candidates.len() * pts.len(),
    ));
    records.push(CheckRecord::from_stats(
        "sum of covector identities on Funk candidates",
        "d_h f = f d_J f",
        &sum,
        tol.funk,
    ));

    let berwald = presets::berwald(n);
    let c = strong_hamel_from_weak_funk(&berwald, &s, &ft, &pts, tol)?;
    for mut r in c.records() {
        r.name = format!("Berwald, P = Funk: {}", r.name);
        records.push(r);
    }
    records.push(CheckRecord::logical("Berwald witness F~/P is not constant", "plumbing", !c.degenerate, pts.len()));

    let c = strong_hamel_from_weak_funk(&funk_m, &s, &presets::funk_factor(n), &pts, tol)?;
    records.push(c.related.record("Funk, P = F~/2: projectively related", "G~^i = G^i + P y^i"));
    records.push(c.transport.record("Funk, P = F~/2: G(F~) = 2 P F~", "G(F~) = 2 P F~"));
    records.push(CheckRecord::logical(
        "Funk, P = F~/2: witness constant (degenerate)",
        "plumbing",
        c.degenerate,
        pts.len(),
    ));
    records.push(negative_control(
        "P = F~/2 is not weak Funk for the flat spray",
        "G(P) = P^2",
        !c.p_weak_funk.passed(),
        pts.len(),
    ));
    let zero = strong_hamel_from_weak_funk(&funk_m, &s, &Expr::zero(), &pts, tol);
    records.push(CheckRecord::logical("P = 0 rejected", "plumbing", matches!(zero, Err(Error::Precondition(_))), 1));
    Ok(records)
}

/// Spray-level identities on every preset.
fn geometry(cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let n = cfg.dim;
    let tol = &cfg.tol;
    let mut records = Vec::new();
    for name in presets::NAMES {
        let m = presets::by_name(name, n)?;
        let pts = cfg.points(m.domain());
        m.validate(&pts, tol.strict_homogeneity)?;
        let s = m.geodesic_spray_checked(&pts)?;
        let de = m.defining_equation_form(&s).stats(&pts)?;
        records.push(CheckRecord::from_stats(
            format!("{name}: i_G dd_J L + dL = 0"),
            "i_G dd_J L = -dL",
            &de,
            tol.defining_equation,
        ));
        let h = s.homogeneity_residual(&pts)?;
        records.push(CheckRecord::from_stats(
            format!("{name}: C(G^i) = 2 G^i"),
            "[C, G] = G",
            &single(h),
            tol.strict_homogeneity,
        ));
        let nabla_g: Vec<Vec<Expr>> = {
            let g = m.metric_exprs();
            let nc = s.connection();
            (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| {
                    let mut t = s.geodesic_field().apply_terms(&g[i][j]);
                    for k in 0..n {
                        t.push(-(&nc[k][i] * &g[k][j]));
                        t.push(-(&nc[k][j] * &g[i][k]));
                    }
                    t
                })
                .collect()
        };
        records.push(CheckRecord::from_stats(
            format!("{name}: nabla g = 0"),
            "nabla g_ij = 0",
            &vanishing_stats(&nabla_g, &pts)?,
            tol.defining_equation,
        ));
        let el = s.euler_lagrange(m.finsler());
        let el_terms: Vec<Vec<Expr>> = (0..n)
            .map(|i| {
                let mut t = s.geodesic_field().apply_terms(&m.finsler().diff(Var::y(i)));
                t.push(-m.finsler().diff(Var::x(i)));
                t
            })
            .collect();
        drop(el);
        records.push(CheckRecord::from_stats(
            format!("{name}: delta_G F = 0"),
            "F is Hamel for its geodesic spray",
            &vanishing_stats(&el_terms, &pts)?,
            tol.hamel,
        ));
        let c = VectorField::liouville(n);
        let mut worst = ResidualStats::default();
        for p in pts.iter().take(20) {
            let cg = crate::spray::commutator(&c, &s.geodesic_field(), p)?;
            let g = s.geodesic_field().eval(p)?;
            for (a, b) in cg.iter().zip(&g) {
                worst.push(rel(*a, *b));
            }
        }
        records.push(CheckRecord::from_stats(
            format!("{name}: [C, G] = G"),
            "[C, G] = G",
            &worst,
            tol.strict_homogeneity,
        ));
    }
    Ok(records)
}

fn single(v: f64) -> ResidualStats {
    let mut s = ResidualStats::default();
    s.push(v);
    s
}

/// Energy conservation on every preset and agreement of projectively
/// related paths.
fn flows(cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let n = cfg.dim;
    let mut records = Vec::new();
    for name in presets::NAMES {
        let m = presets::by_name(name, n)?;
        let s = m.geodesic_spray();
        let mut drift = ResidualStats::default();
        for init in initial_points(m.domain(), 3, cfg.seed) {
            let opts = FlowOptions::new(1e-3, 1.0).region(m.domain().region.clone()).energy(m.energy().clone());
            let t = integrate(&s, &init, &[Monitor::new("L", m.energy().clone())], &opts)?;
            drift.push(drift_report(&t, "L", 1e-6)?.relative_drift);
        }
        records.push(CheckRecord::from_stats(
            format!("{name}: energy drift, h = 1e-3, T = 1"),
            "G(L) = 0",
            &drift,
            1e-6,
        ));
    }
    let conf = presets::conformal(n, &presets::default_conformal_factor());
    let conf_s = conf.geodesic_spray();
    let mut order_ok = true;
    let mut ratios = Vec::new();
    for init in initial_points(conf.domain(), 3, cfg.seed) {
        let r = step_halving_ratio(&conf_s, &init, 0.1, 1.0)?;
        order_ok &= (8.0..=32.0).contains(&r);
        ratios.push(format!("{r:.2}"));
    }
    records.push(CheckRecord::logical(
        format!("RK4 step halving on conformal: error ratios [{}] within [8, 32]", ratios.join(", ")),
        "fourth-order convergence",
        order_ok,
        ratios.len(),
    ));
    let flat = SpraySpec::flat(n);
    let funk_m = presets::funk(n);
    let funk_s = funk_m.geodesic_spray();
    let mut dist = ResidualStats::default();
    for init in initial_points(funk_m.domain(), 3, cfg.seed) {
        let opts = FlowOptions::new(1e-3, 1.0).region(funk_m.domain().region.clone());
        let a = integrate(&flat, &init, &[], &opts)?;
        let b = integrate(&funk_s, &init, &[], &opts)?;
        dist.push(crate::flows::path_distance(&a, &b, 400)?);
    }
    records.push(CheckRecord::from_stats(
        "flat and Funk geodesics share their paths",
        "G~ = G - 2 P C has the same geodesic paths",
        &dist,
        1e-4,
    ));
    Ok(records)
}

/// `e(h) / e(h/2)` for the state at `t_end`, errors measured against a run
/// with step `1e-4`. Close to 16 for a fourth-order method.
pub fn step_halving_ratio(s: &SpraySpec, init: &PhasePoint, h: f64, t_end: f64) -> Result<f64> {
    let end = |h: f64| -> Result<Vec<f64>> {
        let t = integrate(s, init, &[], &FlowOptions::new(h, t_end))?;
        if t.stop != crate::flows::StopReason::Completed {
            return Err(Error::Precondition(format!("trajectory stopped early with h = {h}")));
        }
        Ok(t.last().stacked())
    };
    let reference = end(1e-4)?;
    let err = |z: Vec<f64>| z.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(err(end(h)?) / err(end(0.5 * h)?))
}
