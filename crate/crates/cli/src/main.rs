use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use cgflow::flows::{flat_circle, integrate, FlowKind, Initial, Termination, Trajectory};
use cgflow::killing::{gh_check, killing_cg_criterion, killing_residual, triholomorphic_residual, KillingField};
use cgflow::{cp2, eguchi_hanson as eh, taubnut, MetricModel};

mod models;
mod output;
mod report;
mod scenario;

use output::Format;
use report::Recorded;
use scenario::{ClosedFormSpec, Scenario};

#[derive(Parser, Debug)]
#[command(name = "cgflow", version, about = "Conformal geodesics on gravitational instantons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory for trajectory and report files.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    /// Parameter span `s0,s1`, overriding the scenario.
    #[arg(long, value_parser = parse_span, allow_hyphen_values = true)]
    span: Option<(f64, f64)>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
enum ClosedForm {
    Flat,
    Cp2ConstR,
    EhOrbit,
    TnQuadrature,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate a scenario; writes the trajectory and an invariant report.
    Integrate(RunArgs),
    /// Compare a numerical trajectory with a closed form or quadrature.
    Compare {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum)]
        closed_form: ClosedForm,
    },
    /// Invariant report for a scenario, or for a previously exported trajectory.
    Invariants {
        #[arg(long, conflicts_with = "trajectory", required_unless_present = "trajectory")]
        scenario: Option<PathBuf>,
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-6)]
        drift_tolerance: f64,
    },
    /// Roots of the constant-r cubic for given torsion τ and |a|².
    Cp2Classify {
        #[arg(long, allow_hyphen_values = true)]
        tau: f64,
        #[arg(long = "a")]
        a: f64,
    },
    /// Killing residual and conformal-geodesic criterion of a Killing field at random points.
    KillingCheck {
        /// e.g. cp2, taub_nut:1, eguchi_hanson:1
        #[arg(long)]
        model: String,
        /// `psi`, `phi`, `rot1`..`rot3` or a coordinate index.
        #[arg(long)]
        field: String,
        #[arg(long, default_value_t = 50)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Killing, tri-holomorphy, moment-map and monopole checks of the fibre field.
    GhCheck {
        /// gh_taub_nut:M, gh_eguchi_hanson:A, taub_nut:M or flat4
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_span(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected `s0,s1`")?;
    let p = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x}: {e}"));
    Ok((p(a)?, p(b)?))
}

/// Outcome of a successful command, mapped to the exit status.
#[derive(Debug, PartialEq)]
enum Status {
    Ok,
    /// Constraint or invariant drift above tolerance.
    Drift,
    /// The trajectory left the chart.
    Domain,
}

fn print_json<T: Serialize>(v: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(v)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn write_report(dir: &Path, name: &str, v: &impl Serialize) -> anyhow::Result<()> {
    std::fs::write(dir.join(name), serde_json::to_string_pretty(v)? + "\n")?;
    Ok(())
}

fn prepare(run: &RunArgs) -> anyhow::Result<Scenario> {
    let mut sc = scenario::load(&run.scenario)?;
    if let Some(t) = run.rel_tol {
        sc.integrator.rel_tol = t;
    }
    if let Some(t) = run.abs_tol {
        sc.integrator.abs_tol = t;
    }
    if let Some(s) = run.span {
        sc.span = s;
    }
    sc.integrator.validate()?;
    Ok(sc)
}

fn run_scenario(sc: &Scenario) -> anyhow::Result<Trajectory> {
    let init = sc.initial()?;
    let traj = integrate(&sc.model, &init, sc.span, &sc.integrator)?;
    log::info!(
        "{}: {} steps ({} rejected), {} evaluations, {:?}",
        sc.model.name(),
        traj.stats.accepted,
        traj.stats.rejected,
        traj.stats.evaluations,
        traj.termination
    );
    Ok(traj)
}

fn status_of(rep: &report::Report) -> Status {
    match rep.termination {
        Termination::ChartExit { .. } => Status::Domain,
        _ if !rep.within_tolerance => Status::Drift,
        _ => Status::Ok,
    }
}

fn cmd_integrate(run: &RunArgs) -> anyhow::Result<Status> {
    let sc = prepare(run)?;
    let traj = run_scenario(&sc)?;
    let rec = Recorded::from(&traj);
    let rep = report::build(&rec, sc.drift_tolerance);
    let dir = run.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    match run.format {
        Format::Csv => output::write_csv(&dir.join("trajectory.csv"), &rec)?,
        Format::Json => output::write_json(&dir.join("trajectory.json"), &rec)?,
    }
    write_report(&dir, "report.json", &rep)?;
    print_json(&rep)?;
    Ok(status_of(&rep))
}

fn cmd_invariants(scenario: Option<&Path>, trajectory: Option<&Path>, tol: f64) -> anyhow::Result<Status> {
    let (rec, tol) = match (scenario, trajectory) {
        (Some(p), _) => {
            let sc = scenario::load(p)?;
            (Recorded::from(&run_scenario(&sc)?), sc.drift_tolerance)
        }
        (None, Some(p)) => (output::read_any(p)?, tol),
        (None, None) => bail!("give --scenario or --trajectory"),
    };
    let rep = report::build(&rec, tol);
    print_json(&rep)?;
    Ok(status_of(&rep))
}

#[derive(Serialize)]
struct Comparison {
    closed_form: &'static str,
    model: String,
    max_deviation: f64,
    tolerance: f64,
    within_tolerance: bool,
    #[serde(skip_serializing_if = "serde_json::Map::is_empty")]
    details: serde_json::Map<String, serde_json::Value>,
}

fn max_abs_diff<'a>(a: impl IntoIterator<Item = &'a f64>, b: impl IntoIterator<Item = &'a f64>) -> f64 {
    a.into_iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn cmd_compare(run: &RunArgs, which: ClosedForm) -> anyhow::Result<Status> {
    let sc = prepare(run)?;
    let tol = sc.drift_tolerance;
    let mut details = serde_json::Map::new();
    let (name, dev) = match which {
        ClosedForm::Flat => {
            if sc.model != MetricModel::Flat4 {
                bail!("the flat closed form applies to flat4 scenarios only");
            }
            let traj = run_scenario(&sc)?;
            if traj.kind != FlowKind::Conformal {
                bail!("the flat closed form needs a conformal run");
            }
            let s0 = &traj.samples[0];
            let dev = traj
                .samples
                .iter()
                .map(|s| max_abs_diff(&flat_circle(&s0.coords, &s0.u, &s0.a, s.s - s0.s), &s.coords))
                .fold(0.0, f64::max);
            ("flat", dev)
        }
        ClosedForm::Cp2ConstR => {
            if sc.model != MetricModel::Cp2 {
                bail!("cp2_const_r applies to the cp2 model only");
            }
            let k = sc.closed_form.as_ref().context("cp2_const_r needs a `closed_form` section")?.cp2_constants()?;
            let n = sc.integrator.samples;
            let (s0, s1) = sc.span;
            let grid: Vec<f64> = (0..n).map(|i| s0 + (s1 - s0) * i as f64 / (n - 1) as f64).collect();
            let exact = cp2::constant_r_solution(&k, &grid)?;
            let init = Initial::Conformal(exact[0].state()?);
            let traj = integrate(&sc.model, &init, sc.span, &sc.integrator)?;
            if !traj.completed() {
                bail!(cgflow::Error::Domain { model: sc.model.name(), bound: format!("{:?}", traj.termination) });
            }
            let dev = traj
                .samples
                .iter()
                .zip(&exact)
                .map(|(s, e)| {
                    let want = e.state()?;
                    let (u, a) = (want.u.as_slice(), want.a.as_slice());
                    Ok(max_abs_diff(&s.coords, &e.coords).max(max_abs_diff(&s.u, u)).max(max_abs_diff(&s.a, a)))
                })
                .collect::<anyhow::Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            details.insert("constants".into(), serde_json::to_value(k)?);
            details.insert("closed_form_residual".into(), cp2::constant_r_residual(&k, s1 - s0, 41)?.into());
            ("cp2_const_r", dev)
        }
        ClosedForm::EhOrbit => {
            let Some(ClosedFormSpec::EhOrbit { alpha, r, c, v0 }) = sc.closed_form.clone() else {
                bail!("eh_orbit needs an `eh_orbit` closed_form section");
            };
            if sc.model != (MetricModel::EguchiHanson { alpha }) {
                bail!("eh_orbit applies to eguchi_hanson with the same α");
            }
            let k = eh::EHOrbitConstants::from_initial(alpha, r, c, v0, [0.0; 3])?;
            let (n, s_end) = (sc.integrator.samples, sc.span.1 - sc.span.0);
            let rec = eh::orbit_solution(&k, v0, s_end, n)?;
            let num = eh::orbit_direct(&k, v0, s_end, n)?;
            let dev = rec.iter().zip(&num).map(|(a, b)| max_abs_diff(&a.u, b)).fold(0.0, f64::max);
            let normal = rec.iter().map(|s| eh::orbit_frame_residual(&k, s)[3].abs()).fold(0.0, f64::max);
            details.insert("constants".into(), serde_json::to_value(k)?);
            // the frame equation normal to the orbit is not satisfied by generic curves
            details.insert("u4_equation_residual".into(), normal.into());
            ("eh_orbit", dev)
        }
        ClosedForm::TnQuadrature => {
            if !matches!(sc.model, MetricModel::TaubNut { .. }) {
                bail!("tn_quadrature applies to taub_nut scenarios only");
            }
            let traj = run_scenario(&sc)?;
            let k = taubnut::extract_constants(&traj)?;
            let hj = taubnut::hj_residual(&traj, &k)?;
            let qc = taubnut::quadrature_check(&traj, &k)?;
            details.insert("constants".into(), serde_json::to_value(k)?);
            details.insert("hamilton_jacobi".into(), serde_json::to_value(&hj)?);
            details.insert("quadrature".into(), serde_json::to_value(&qc)?);
            ("tn_quadrature", hj.max_residual.max(qc.mismatch))
        }
    };
    let cmp = Comparison {
        closed_form: name,
        model: sc.model.name(),
        max_deviation: dev,
        tolerance: tol,
        within_tolerance: dev <= tol,
        details,
    };
    if let Some(dir) = &run.out {
        std::fs::create_dir_all(dir)?;
        write_report(dir, "compare.json", &cmp)?;
    }
    print_json(&cmp)?;
    Ok(if cmp.within_tolerance { Status::Ok } else { Status::Drift })
}

fn named_field(model: &MetricModel, field: &str) -> anyhow::Result<KillingField> {
    let m = match model {
        MetricModel::TaubNut { m } => *m,
        _ => 1.0,
    };
    let polar = matches!(model, MetricModel::TaubNut { .. } | MetricModel::EguchiHanson { .. } | MetricModel::Cp2);
    Ok(match field {
        "psi" if polar => KillingField::coordinate("psi", 3),
        "phi" if polar => KillingField::coordinate("phi", 2),
        "rot1" | "rot2" | "rot3" if polar => KillingField::su2(field[3..].parse::<usize>()? - 1, m),
        "tau" if !polar => KillingField::coordinate("tau", 3),
        _ => match field.parse::<usize>() {
            Ok(i) if i < 4 => KillingField::coordinate(&format!("d{i}"), i),
            _ => bail!("unknown field `{field}` for {}", model.name()),
        },
    })
}

#[derive(Serialize)]
struct KillingReport {
    model: String,
    field: String,
    points: usize,
    killing_residual: f64,
    /// Range of the conformal-geodesic criterion over the points.
    criterion_min: f64,
    criterion_max: f64,
    three_form_max: f64,
    null_points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    triholomorphic_residual: Option<f64>,
}

fn cmd_killing(model: &str, field: &str, n: usize, seed: u64) -> anyhow::Result<Status> {
    let model = models::parse_model(model)?;
    let k = named_field(&model, field)?;
    let pts = models::sample_points(&model, n, seed);
    let (mut lo, mut hi, mut three, mut null) = (f64::INFINITY, 0.0_f64, 0.0_f64, 0);
    for q in &pts {
        match killing_cg_criterion(&model, &k, q) {
            Ok(c) => {
                lo = lo.min(c.value);
                hi = hi.max(c.value);
                three = three.max(c.three_form);
            }
            Err(cgflow::Error::Degenerate(_)) => null += 1,
            Err(e) => return Err(e.into()),
        }
    }
    let rep = KillingReport {
        model: model.name(),
        field: k.name.clone(),
        points: pts.len(),
        killing_residual: killing_residual(&model, &k, &pts)?,
        criterion_min: lo,
        criterion_max: hi,
        three_form_max: three,
        null_points: null,
        triholomorphic_residual: if model.is_hyperkahler() { Some(triholomorphic_residual(&model, &k, &pts)?) } else { None },
    };
    print_json(&rep)?;
    Ok(Status::Ok)
}

fn cmd_gh(model: &str, n: usize, seed: u64) -> anyhow::Result<Status> {
    let model = models::parse_model(model)?;
    let pts = models::sample_points(&model, n, seed);
    print_json(&gh_check(&model, &pts)?)?;
    Ok(Status::Ok)
}

fn configure_threads() {
    if let Some(n) = std::env::var("FLOWS_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("FLOWS_THREADS ignored: {e}");
        }
    }
}

fn is_domain_error(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        matches!(
            c.downcast_ref::<cgflow::Error>(),
            Some(cgflow::Error::Domain { .. } | cgflow::Error::SingularCoordinates(_))
        )
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    configure_threads();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Integrate(run) => cmd_integrate(run),
        Command::Compare { run, closed_form } => cmd_compare(run, *closed_form),
        Command::Invariants { scenario, trajectory, drift_tolerance } => {
            cmd_invariants(scenario.as_deref(), trajectory.as_deref(), *drift_tolerance)
        }
        Command::Cp2Classify { tau, a } => cp2::roots_from_tau_a(*tau, *a).map_err(Into::into).and_then(|c| {
            print_json(&c)?;
            Ok(Status::Ok)
        }),
        Command::KillingCheck { model, field, points, seed } => cmd_killing(model, field, *points, *seed),
        Command::GhCheck { model, points, seed } => cmd_gh(model, *points, *seed),
    };
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Drift) => {
            eprintln!("error: drift above tolerance");
            ExitCode::from(2)
        }
        Ok(Status::Domain) => {
            eprintln!("error: trajectory left the chart");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_domain_error(&e) { 3 } else { 1 })
        }
    }
}
