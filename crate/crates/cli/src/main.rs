//! `finsler-lab` command line.

mod report;
mod spec;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use finsler_lab::check::{rel, CheckRecord, ResidualStats, Tolerances};
use finsler_lab::expr::{parse, Expr};
use finsler_lab::flows::{drift_report, integrate, FlowOptions, Monitor};
use finsler_lab::invariants::Invariants;
use finsler_lab::point::PhasePoint;
use finsler_lab::suites::{self, SuiteConfig, SUITES};
use finsler_lab::symmetry::classify;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use report::Report;
use spec::{Overrides, Spec};

#[derive(Debug)]
pub enum CliError {
    Input(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => f.write_str(m),
        }
    }
}

impl From<finsler_lab::Error> for CliError {
    fn from(e: finsler_lab::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "finsler-lab", version, about = "Spray and Finsler geometry checks")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Dimension for presets and suites.
    #[arg(long, global = true, default_value_t = 2)]
    dim: usize,
    #[arg(long, global = true, default_value_t = 2024)]
    seed: u64,
    /// Sample points per check.
    #[arg(long, global = true, default_value_t = 50)]
    samples: usize,
    /// Multiplies every tolerance.
    #[arg(long, global = true, default_value_t = 1.0)]
    tol_scale: f64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Include wall-clock timings (makes output nondeterministic).
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Debug, Args)]
struct Input {
    /// Spec file (TOML).
    spec: Option<PathBuf>,
    /// Built-in metric instead of a spec file.
    #[arg(long, conflicts_with = "spec")]
    preset: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Metric, spray, connection, curvature and invariants at points.
    Analyze {
        #[command(flatten)]
        input: Input,
        /// Phase point `x1,x2,..:y1,y2,..`; repeatable. Sampled when absent.
        #[arg(long = "at")]
        at: Vec<String>,
    },
    /// Hamel / strong Hamel / weak Funk / Funk verdicts for a candidate.
    Classify {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        f: Option<String>,
        #[arg(long)]
        fprime: Option<String>,
        /// Use the flat spray regardless of the metric.
        #[arg(long)]
        flat: bool,
    },
    /// Run a verification suite over the built-in fixtures.
    Verify {
        #[arg(value_parser = suite_names())]
        suite: String,
    },
    /// Integrate a geodesic and export the trajectory.
    Geodesic {
        #[command(flatten)]
        input: Input,
        /// Initial phase point `x1,x2,..:y1,y2,..`.
        #[arg(long)]
        init: String,
        #[arg(long, default_value_t = 1e-3)]
        h: f64,
        #[arg(long = "t-end", default_value_t = 1.0)]
        t_end: f64,
        /// Extra monitor `name=expr`; repeatable.
        #[arg(long = "monitor")]
        monitors: Vec<String>,
        /// Trajectory CSV output.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn suite_names() -> clap::builder::PossibleValuesParser {
    let mut names: Vec<&'static str> = SUITES.to_vec();
    names.push("all");
    clap::builder::PossibleValuesParser::new(names)
}

fn parse_point(s: &str, dim: usize) -> Result<PhasePoint, CliError> {
    let (xs, ys) = s.split_once(':').ok_or_else(|| CliError::Input(format!("point `{s}`: expected `x1,..:y1,..`")))?;
    let nums = |part: &str| -> Result<Vec<f64>, CliError> {
        part.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|e| CliError::Input(format!("point `{s}`: `{v}`: {e}"))))
            .collect()
    };
    let (x, y) = (nums(xs)?, nums(ys)?);
    if x.len() != dim {
        return Err(CliError::Input(format!("point `{s}`: expected {dim} coordinates, got {}", x.len())));
    }
    Ok(PhasePoint::new(x, y)?)
}

struct Run {
    global: Global,
    tol: Tolerances,
}

impl Run {
    fn load(&self, input: &Input, over: &Overrides) -> Result<Spec, CliError> {
        let g = &self.global;
        match (&input.spec, &input.preset) {
            (Some(p), _) => spec::load_file(p, g.seed, g.samples, &self.tol, over),
            (None, Some(name)) => spec::load_preset(name, g.dim, g.seed, g.samples, &self.tol, over),
            (None, None) => Err(CliError::Input("give a spec file or --preset".into())),
        }
    }

    fn report(&self, command: &str, spec: &Spec) -> Report {
        let g = &self.global;
        Report::new(
            command,
            spec.hash.clone(),
            spec.dim,
            spec.seed.unwrap_or(g.seed),
            spec.samples.unwrap_or(g.samples),
            g.tol_scale,
        )
    }

    fn points(&self, spec: &Spec) -> Vec<PhasePoint> {
        spec.domain.sample(spec.samples.unwrap_or(self.global.samples), spec.seed.unwrap_or(self.global.seed)).points
    }
}

fn matrix(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

#[derive(Serialize)]
struct PointData {
    x: Vec<f64>,
    y: Vec<f64>,
    #[serde(rename = "F")]
    finsler: f64,
    g: Vec<Vec<f64>>,
    det_g: f64,
    condition: f64,
    spray: Vec<f64>,
    connection: Vec<Vec<f64>>,
    curvature: Vec<Vec<Vec<f64>>>,
    tau: f64,
    mean_torsion: Vec<f64>,
    #[serde(rename = "S")]
    s: f64,
    chi: Vec<f64>,
}

fn analyze(run: &Run, input: &Input, at: &[String]) -> Result<Report, CliError> {
    let spec = run.load(input, &Overrides::default())?;
    let m = spec.metric.as_ref().ok_or_else(|| CliError::Input("analyze needs a [metric]".into()))?;
    let points = if at.is_empty() {
        run.points(&spec)
    } else {
        at.iter().map(|s| parse_point(s, spec.dim)).collect::<Result<_, _>>()?
    };
    let s = &spec.spray;
    let inv = Invariants::new(m, &spec.volume, s);
    let values = inv.at_all(&points)?;
    let spray_field = finsler_lab::field::Field::new(s.coeffs().to_vec());
    let mut data = Vec::new();
    let mut torsion = ResidualStats::default();
    let mut chi_routes = ResidualStats::default();
    let mut antisym = ResidualStats::default();
    for (p, v) in points.iter().zip(&values) {
        let mt = m.metric_tensor(p)?;
        let r = s.curvature(p)?;
        let n = spec.dim;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    antisym.push(rel(r.r[i][j][k], -r.r[i][k][j]));
                }
            }
        }
        torsion.push(v.torsion_residual());
        chi_routes.push(v.chi_route_residual());
        data.push(PointData {
            x: p.x.clone(),
            y: p.y.clone(),
            finsler: m.finsler().eval(&p.x, &p.y).map_err(finsler_lab::Error::from)?,
            g: matrix(&mt.g),
            det_g: mt.det,
            condition: mt.condition,
            spray: spray_field.eval(p)?,
            connection: matrix(&s.nonlinear_connection(p)?),
            curvature: r.r,
            tau: v.tau,
            mean_torsion: v.mean_torsion.clone(),
            s: v.s,
            chi: v.chi.clone(),
        });
    }
    let mut records = Vec::new();
    if spec.geodesic {
        let de = m.defining_equation_form(s).stats(&points)?;
        records.push(CheckRecord::from_stats(
            "i_G dd_J L + dL = 0",
            "i_G dd_J L = -dL",
            &de,
            run.tol.defining_equation,
        ));
    }
    let mut h = ResidualStats::default();
    h.push(s.homogeneity_residual(&points)?);
    records.push(CheckRecord::from_stats("C(G^i) = 2 G^i", "[C, G] = G", &h, run.tol.strict_homogeneity));
    records.push(CheckRecord::from_stats(
        "R^i_jk = -R^i_kj",
        "curvature is antisymmetric",
        &antisym,
        run.tol.strict_homogeneity,
    ));
    records.push(CheckRecord::from_stats(
        "I_k = dtau/dy^k = 1/2 g^ij dg_ij/dy^k",
        "mean Cartan torsion",
        &torsion,
        run.tol.invariant_routes,
    ));
    records.push(CheckRecord::from_stats(
        "chi = 1/2 delta_G S = 1/2 (nabla d_J S - d_h S)",
        "chi routes",
        &chi_routes,
        run.tol.invariant_routes,
    ));
    let mut rep = run.report("analyze", &spec);
    rep.samples = points.len();
    rep.push("analyze", records);
    rep.data = json!({
        "metric": m.name(),
        "spray": s.provenance().to_string(),
        "projective_factor": spec.factor.as_ref().map(Expr::to_string),
        "points": data,
    });
    Ok(rep)
}

fn classify_cmd(run: &Run, input: &Input, over: Overrides) -> Result<Report, CliError> {
    let spec = run.load(input, &over)?;
    let pair = spec.candidate.as_ref().ok_or_else(|| CliError::Input("classify needs a candidate `f`".into()))?;
    let points = run.points(&spec);
    let seed = spec.seed.unwrap_or(run.global.seed);
    let c = classify(pair, &spec.spray, &points, Some(seed), &run.tol)?;
    let mut rep = run.report("classify", &spec);
    rep.push("classify", c.records());
    rep.data = json!({
        "f": pair.f.to_string(),
        "fprime": pair.fprime.as_ref().map(Expr::to_string),
        "spray": spec.spray.provenance().to_string(),
        "classification": c,
    });
    Ok(rep)
}

fn verify(run: &Run, suite: &str) -> Result<Report, CliError> {
    let g = &run.global;
    let cfg = SuiteConfig { dim: g.dim, seed: g.seed, samples: g.samples, tol: run.tol };
    let names: Vec<&str> = if suite == "all" { SUITES.to_vec() } else { vec![suite] };
    let results: Vec<_> = names
        .par_iter()
        .map(|name| {
            let t0 = Instant::now();
            let r = suites::run(name, &cfg);
            (r, t0.elapsed().as_secs_f64())
        })
        .collect();
    let hash = spec::sha256_hex(
        format!("verify={suite}\ndim={}\nseed={}\nsamples={}\ntol_scale={}\n", g.dim, g.seed, g.samples, g.tol_scale)
            .as_bytes(),
    );
    let mut rep = Report::new(format!("verify {suite}"), hash, g.dim, g.seed, g.samples, g.tol_scale);
    let mut timings = Vec::new();
    for (name, (r, secs)) in names.iter().zip(results) {
        for outcome in r? {
            rep.push(outcome.suite, outcome.records);
        }
        timings.push(report::Timing { section: name.to_string(), seconds: secs });
    }
    if g.timings {
        rep.timings = Some(timings);
    }
    Ok(rep)
}

#[allow(clippy::too_many_arguments)]
fn geodesic(
    run: &Run,
    input: &Input,
    init: &str,
    h: f64,
    t_end: f64,
    extra: &[String],
    csv: Option<&Path>,
) -> Result<Report, CliError> {
    let spec = run.load(input, &Overrides::default())?;
    let init = parse_point(init, spec.dim)?;
    if !(h > 0.0 && t_end > 0.0) {
        return Err(CliError::Input("--h and --t-end must be positive".into()));
    }
    let mut monitors = Vec::new();
    let mut conserved = Vec::new();
    if let Some(m) = &spec.metric {
        if spec.geodesic {
            monitors.push(Monitor::new("L", m.energy().clone()));
            monitors.push(Monitor::new("F", m.finsler().clone()));
            conserved.extend(["L", "F"]);
        }
    }
    for e in extra {
        let (name, text) =
            e.split_once('=').ok_or_else(|| CliError::Input(format!("monitor `{e}`: expected `name=expr`")))?;
        let expr = parse(text, spec.dim).map_err(|err| CliError::Input(format!("monitor `{name}`: {err}")))?;
        monitors.push(Monitor::new(name.trim(), expr));
    }
    let mut opts = FlowOptions::new(h, t_end).region(spec.domain.region.clone());
    if let Some(name) = conserved.first() {
        opts = opts.energy(monitors.iter().find(|m| m.name == *name).expect("monitor").expr.clone());
    }
    let traj = integrate(&spec.spray, &init, &monitors, &opts)?;
    if let Some(path) = csv {
        let file = std::fs::File::create(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        traj.write_csv(std::io::BufWriter::new(file))?;
    }
    let threshold = 1e-6 * run.global.tol_scale;
    let mut records = Vec::new();
    let mut drifts = Vec::new();
    for name in &conserved {
        let d = drift_report(&traj, name, threshold)?;
        let mut st = ResidualStats::default();
        st.push(d.relative_drift);
        records.push(CheckRecord::from_stats(format!("{name} drift over the run"), "G(L) = 0", &st, threshold));
        drifts.push(d);
    }
    for m in monitors.iter().filter(|m| !conserved.contains(&m.name.as_str())) {
        drifts.push(drift_report(&traj, &m.name, threshold)?);
    }
    let mut rep = run.report("geodesic", &spec);
    rep.samples = traj.times.len();
    rep.push("geodesic", records);
    let last = traj.last();
    rep.data = json!({
        "spray": spec.spray.provenance().to_string(),
        "h": h,
        "t_end": t_end,
        "steps": traj.times.len() - 1,
        "stop": traj.stop,
        "final": { "t": traj.times.last(), "x": last.x, "y": last.y },
        "monitors": drifts,
        "csv": csv.map(|p| p.display().to_string()),
    });
    Ok(rep)
}

fn threads_from_env() -> Result<(), CliError> {
    let Ok(v) = std::env::var("FINSLER_LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Input(format!("FINSLER_LAB_THREADS=`{v}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Input(e.to_string()))
}

fn execute(cli: Cli) -> Result<(Report, bool), CliError> {
    threads_from_env()?;
    let g = &cli.global;
    if !(g.tol_scale > 0.0 && g.tol_scale.is_finite()) {
        return Err(CliError::Input("--tol-scale must be positive".into()));
    }
    if !(2..=8).contains(&g.dim) {
        return Err(CliError::Input(format!("--dim {} outside 2..=8", g.dim)));
    }
    if g.samples == 0 {
        return Err(CliError::Input("--samples must be positive".into()));
    }
    let tol = Tolerances::default().scaled(g.tol_scale);
    let run = Run { global: cli.global, tol };
    let t0 = Instant::now();
    let (mut rep, strict) = match &cli.command {
        Command::Analyze { input, at } => (analyze(&run, input, at)?, true),
        Command::Classify { input, f, fprime, flat } => {
            let over = Overrides { f: f.clone(), fprime: fprime.clone(), flat: *flat };
            (classify_cmd(&run, input, over)?, false)
        }
        Command::Verify { suite } => (verify(&run, suite)?, true),
        Command::Geodesic { input, init, h, t_end, monitors, csv } => {
            (geodesic(&run, input, init, *h, *t_end, monitors, csv.as_deref())?, true)
        }
    };
    if run.global.timings && rep.timings.is_none() {
        rep.timings = Some(vec![report::Timing { section: "total".into(), seconds: t0.elapsed().as_secs_f64() }]);
    }
    let text = match run.global.format {
        Format::Json => rep.to_json(),
        Format::Text => rep.to_text(),
    };
    match &run.global.out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
        None => print!("{text}"),
    }
    let ok = !strict || rep.all_passed();
    Ok((rep, ok))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok((_, true)) => ExitCode::SUCCESS,
        Ok((_, false)) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
