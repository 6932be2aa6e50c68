use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use mixlab::bounds::{
    integrate_equality_case, integrate_equality_rk4, new_bound, s_alpha, BoundReport,
};
use mixlab::descent_pde::evolve_to_mixed;
use mixlab::hull::{
    in_k_hull, probe_convex_combinations, probe_gamma_implication, probe_k1_segments,
    probe_negative_controls, probe_wave_cone, HullPoint, ProbeSummary,
};
use mixlab::io;
use mixlab::rearrange::{symmetric_competitor, symmetric_competitor_exact};
use mixlab::subsolution::{
    epsilon_gap_family, gamma_certificate, verify_hamilton_jacobi, weak_form_residual, BumpSineTest,
};
use mixlab::torus_field::hminus1_norm_1d;
use mixlab::variational::{certify_supremum, reduce_to_w0, sample_admissible};
use mixlab::{GridFunction, MixError, MixParams, PiecewiseLinear, SharpFamily};

const EXIT_INVALID: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_DEGENERATE: u8 = 4;
const EXIT_INVARIANT: u8 = 5;
const EXIT_HULL: u8 = 6;

#[derive(Parser)]
#[command(
    name = "mixlab",
    version,
    about = "Optimal mixing experiments under an energy budget"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Torus side length.
    #[arg(long = "L", global = true, default_value_t = 2.0 * std::f64::consts::PI)]
    l: f64,
    /// Energy budget.
    #[arg(long = "E", global = true, default_value_t = 1.0)]
    e: f64,
    /// Space dimension.
    #[arg(long = "d", global = true, default_value_t = 2)]
    d: usize,
    /// Grid size (power of two, at least 16).
    #[arg(long = "n", global = true, default_value_t = 1024)]
    n: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Old and new lower bounds on a grid of r₀.
    Bounds,
    /// Steepest-descent evolution until h ≤ h-stop.
    Simulate {
        /// Initial density as "x,value" CSV; square wave when omitted.
        #[arg(long)]
        rho0: Option<PathBuf>,
        /// Stopping threshold for h; defaults to 0.01·h_max.
        #[arg(long = "h-stop")]
        h_stop: Option<f64>,
    },
    /// Checks of the sharp subsolution (eps = 0) or the ε-gap family.
    VerifySubsolution {
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long, default_value_t = 50)]
        times: usize,
    },
    /// Stochastic certification of the variational supremum.
    Variational {
        /// h as a fraction of h_max.
        #[arg(long = "h-frac", default_value_t = 0.5)]
        h_frac: f64,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
    },
    /// Rearranges a random admissible profile and reports the contracts.
    Rearrange {
        /// h as a fraction of h_max.
        #[arg(long = "h-frac", default_value_t = 0.5)]
        h_frac: f64,
    },
    /// Randomized hull soundness suites.
    HullProbe {
        #[arg(long, default_value_t = 100_000)]
        probes: usize,
        /// Append a point outside the hull as a negative control.
        #[arg(long)]
        inject_violation: bool,
    },
    /// Equality-case trace of the ODE inequality.
    Ode {
        #[arg(long, default_value_t = 1.0)]
        alpha0: f64,
        #[arg(long, default_value_t = 201)]
        steps: usize,
        /// Integrate numerically with adaptive RK4 from q = 1 − 1e−6 instead.
        #[arg(long)]
        rk4: bool,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<MixError> for Failure {
    fn from(e: MixError) -> Self {
        let code = match e {
            MixError::DegenerateState(_) => EXIT_DEGENERATE,
            MixError::InvalidParams(_)
            | MixError::InvalidGrid(_)
            | MixError::OutOfRange { .. }
            | MixError::NonPositiveEnergy(_) => EXIT_INVALID,
            _ => EXIT_INVARIANT,
        };
        Self::new(code, e.to_string())
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn emit(out: &Option<PathBuf>, text: &str) -> CmdResult {
    match out {
        Some(path) => io::write_atomic(path, text.as_bytes()).map_err(|e| {
            Failure::new(
                EXIT_INVALID,
                format!("cannot write {}: {e}", path.display()),
            )
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn params(c: &Common) -> std::result::Result<MixParams, Failure> {
    if !(c.n >= 16 && c.n.is_power_of_two()) {
        return Err(Failure::new(
            EXIT_INVALID,
            format!("n must be a power of two >= 16, got {}", c.n),
        ));
    }
    Ok(MixParams::new(c.l, c.e, c.d)?)
}

fn cmd_bounds(c: &Common) -> CmdResult {
    let p = params(c)?;
    let rows = (0..=20)
        .map(|i| BoundReport::new(i as f64 / 20.0, &p))
        .collect::<mixlab::Result<Vec<_>>>()?;
    let text = match c.format {
        Format::Csv => io::bounds_csv(&rows),
        Format::Json => to_json(&rows),
    };
    emit(&c.out, &text)
}

fn load_rho0(path: &Path) -> std::result::Result<GridFunction, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_PARSE, format!("cannot read {}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|x| x == "json") {
        io::grid_from_json(&text)
    } else {
        io::grid_from_csv(&text)
    };
    parsed.map_err(|e| Failure::new(EXIT_PARSE, format!("cannot parse {}: {e}", path.display())))
}

fn cmd_simulate(c: &Common, rho0: &Option<PathBuf>, h_stop: Option<f64>) -> CmdResult {
    let p = params(c)?;
    let rho = match rho0 {
        Some(path) => load_rho0(path)?,
        None => GridFunction::square_wave(p.l, c.n)?,
    };
    if (rho.period() - p.l).abs() > 1e-9 * p.l {
        return Err(Failure::new(
            EXIT_INVALID,
            format!("input period {} differs from L = {}", rho.period(), p.l),
        ));
    }
    if rho.max_abs() > 1.0 + 1e-9 || rho.mean().abs() > 1e-9 {
        return Err(Failure::new(
            EXIT_INVALID,
            "initial density must have mean zero and |rho| <= 1",
        ));
    }
    if rho.max_abs() == 0.0 {
        return Err(Failure::new(
            EXIT_DEGENERATE,
            "initial density is already mixed",
        ));
    }
    let h_stop = h_stop.unwrap_or(0.01 * p.h_max());
    let r0 = (hminus1_norm_1d(&rho)? / p.h_max()).min(1.0);
    let (t_sim, states) = evolve_to_mixed(&rho, &p, h_stop)?;
    let lower = new_bound(r0, &p)?;
    let summary = json!({
        "T_sim": t_sim,
        "T_lower_bound": lower,
        "ratio": t_sim / lower,
        "T_hat": p.sharp_mixing_time(),
        "r0": r0,
    });
    let text = match c.format {
        Format::Csv => io::trajectory_csv(&states, &p),
        Format::Json => to_json(&json!({ "summary": summary, "states": states })),
    };
    if let Some(out) = &c.out {
        emit(&c.out, &text)?;
        let mut name = out.as_os_str().to_owned();
        name.push(".summary.json");
        emit(&Some(PathBuf::from(name)), &to_json(&summary))?;
    }
    print!("{}", to_json(&summary));
    Ok(())
}

#[derive(Serialize)]
struct CheckLine {
    check: String,
    passed: bool,
    worst: f64,
}

fn cmd_verify_subsolution(c: &Common, eps: f64, times: usize) -> CmdResult {
    let p = params(c)?;
    if !(eps >= 0.0 && eps < p.e / 2.0) {
        return Err(Failure::new(
            EXIT_INVALID,
            format!("eps must lie in [0, E/2), got {eps}"),
        ));
    }
    if times == 0 {
        return Err(Failure::new(EXIT_INVALID, "times must be positive"));
    }
    let sharp = eps == 0.0;
    let family = SharpFamily::new(&p.with_energy(p.e - 2.0 * eps)?);
    let mut lines: Vec<CheckLine> = Vec::new();
    let mut record = |check: &str, passed: bool, worst: f64| {
        lines.push(CheckLine {
            check: check.to_string(),
            passed,
            worst,
        });
    };
    let (mut rho_excess, mut hull, mut energy, mut zone, mut gamma_margin, mut ratio_dev) = (
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::INFINITY,
        0.0f64,
        f64::INFINITY,
        0.0f64,
    );
    for i in 1..=times {
        let t = family.t_final * i as f64 / (times + 1) as f64;
        let snap = if sharp {
            family.snapshot_at(t, c.n)?
        } else {
            epsilon_gap_family(eps, &p, t, c.n)?
        };
        let m = snap.margins(&p);
        rho_excess = rho_excess.max(m.rho_excess);
        hull = hull.min(m.hull_slack);
        energy = energy.min(m.energy_slack);
        if sharp {
            zone = zone.max(m.zone_saturation);
        } else {
            gamma_margin = gamma_margin.min(gamma_certificate(&snap, eps, &p)?);
            let expected = (p.e - eps) / (p.e - 2.0 * eps);
            ratio_dev =
                ratio_dev.max(((snap.lambda_e / snap.lambda).powi(2) - expected).abs() / expected);
        }
    }
    record("rho_bound", rho_excess <= 1e-12, rho_excess);
    record("hull_inequality", hull >= -1e-9, hull);
    record("energy_budget", energy >= -1e-8, energy);
    if sharp {
        record("saturation_on_mixing_zone", zone <= 1e-9, zone);
        let hj = verify_hamilton_jacobi(&family, family.time_of_alpha(0.6)?, c.n)?;
        record("hamilton_jacobi_residual", hj.residual <= 1e-3, hj.residual);
        record(
            "tau_dot_equals_lambda",
            hj.tau_defect <= 1e-8,
            hj.tau_defect,
        );
        let weak = weak_form_residual(
            &family,
            &BumpSineTest::for_family(&family).with_phase(p.l / 8.0),
            c.n.min(512),
            512,
        )?;
        record("weak_form_residual", weak <= 1e-3, weak);
    } else {
        record("gamma_certificate", gamma_margin > 0.0, gamma_margin);
        record("energy_ratio", ratio_dev <= 0.01, ratio_dev);
    }
    let text = match c.format {
        Format::Csv => {
            let mut s = String::from("check,passed,worst\n");
            for l in &lines {
                s.push_str(&format!(
                    "{},{},{}\n",
                    l.check,
                    l.passed,
                    io::fmt_num(l.worst)
                ));
            }
            s
        }
        Format::Json => to_json(&lines),
    };
    emit(&c.out, &text)?;
    match lines.iter().find(|l| !l.passed) {
        Some(l) => Err(Failure::new(
            EXIT_INVARIANT,
            format!("failed invariant: {} (worst {})", l.check, l.worst),
        )),
        None => Ok(()),
    }
}

fn cmd_variational(c: &Common, h_frac: f64, samples: usize) -> CmdResult {
    let p = params(c)?;
    let report = certify_supremum(h_frac * p.h_max(), p.l, samples, c.n.min(256), c.seed)?;
    let text = match c.format {
        Format::Csv => format!(
            "h,closed_form,best_numeric,best_pipeline,extremizer,violation,accepted,attempted\n{},{},{},{},{},{},{},{}\n",
            io::fmt_num(report.h),
            io::fmt_num(report.closed_form_value),
            io::fmt_num(report.best_numeric_value),
            io::fmt_num(report.best_pipeline_value),
            io::fmt_num(report.extremizer_value),
            io::fmt_num(report.violation),
            report.accepted,
            report.attempted
        ),
        Format::Json => to_json(&report),
    };
    emit(&c.out, &text)?;
    if report.certified(1e-6) {
        Ok(())
    } else {
        Err(Failure::new(EXIT_INVARIANT, "supremum certificate failed"))
    }
}

fn cmd_rearrange(c: &Common, h_frac: f64) -> CmdResult {
    let p = params(c)?;
    let w = sample_admissible(h_frac * p.h_max(), p.l, c.n, c.seed)?;
    let sym = symmetric_competitor(&w)?;
    let exact = PiecewiseLinear::from_periodic(&w);
    let sym_exact = symmetric_competitor_exact(&exact)?;
    let reduced = reduce_to_w0(&w)?;
    let summary = json!({
        "l2_sq": exact.integral_sq(),
        "l2_sq_symmetric": sym_exact.integral_sq(),
        "l2_sq_odd": 2.0 * reduced.integral_sq(),
        "f1": exact.integral_slope_sq_weighted(),
        "f1_symmetric": sym_exact.integral_slope_sq_weighted(),
        "f1_odd": 2.0 * reduced.integral_slope_sq_weighted(),
    });
    let text = match c.format {
        Format::Csv => {
            let mut s = String::from("x,w,w_symmetric\n");
            for j in 0..w.n() {
                s.push_str(&format!(
                    "{},{},{}\n",
                    io::fmt_num(w.x(j)),
                    io::fmt_num(w.values()[j]),
                    io::fmt_num(sym.values()[j])
                ));
            }
            s
        }
        Format::Json => {
            to_json(&json!({ "summary": summary, "w": w.values(), "w_symmetric": sym.values() }))
        }
    };
    emit(&c.out, &text)?;
    eprintln!("{}", summary);
    let f1 = exact.integral_slope_sq_weighted();
    let f1_ok = sym_exact.integral_slope_sq_weighted() <= f1 + 1e-9;
    let f2_ok = 2.0 * reduced.integral_slope_sq_weighted() <= f1 + 1e-9;
    if f1_ok && f2_ok {
        Ok(())
    } else {
        Err(Failure::new(
            EXIT_INVARIANT,
            "rearrangement increased the weighted Dirichlet energy",
        ))
    }
}

fn cmd_hull_probe(c: &Common, probes: usize, inject: bool) -> CmdResult {
    if probes == 0 {
        return Err(Failure::new(EXIT_INVALID, "probes must be positive"));
    }
    if c.d < 2 {
        return Err(Failure::new(
            EXIT_INVALID,
            format!("d must be at least 2, got {}", c.d),
        ));
    }
    let mut suites: Vec<ProbeSummary> = vec![
        probe_convex_combinations(c.seed, probes, c.d, 1e-9),
        probe_k1_segments(c.seed, probes.div_ceil(10), c.d, 1e-9),
        probe_gamma_implication(c.seed, probes.div_ceil(10), c.d),
        probe_wave_cone(c.seed, probes.div_ceil(10), c.d),
        probe_negative_controls(c.seed, probes.div_ceil(10), c.d, 0.01),
    ];
    if inject {
        let mut m = vec![0.0; c.d];
        m[0] = 1.0;
        let bad = HullPoint::new(0.0, vec![0.0; c.d], m, 0.5)?;
        // the injected point poses as a convex combination; rejection is a violation
        let rejected = !in_k_hull(&bad, 1e-9);
        suites.push(ProbeSummary {
            suite: "injected".into(),
            seed: c.seed,
            probes: 1,
            violations: usize::from(rejected),
            worst_margin: bad.hull_slack(),
            first_violation: rejected.then_some(bad),
        });
    }
    let text = match c.format {
        Format::Csv => {
            let mut s = String::from("suite,seed,probes,violations,worst_margin\n");
            for r in &suites {
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.suite,
                    r.seed,
                    r.probes,
                    r.violations,
                    io::fmt_num(r.worst_margin)
                ));
            }
            s
        }
        Format::Json => to_json(&suites),
    };
    emit(&c.out, &text)?;
    match suites.iter().find(|s| !s.passed()) {
        Some(s) => Err(Failure::new(
            EXIT_HULL,
            format!(
                "hull violation in suite {}: {}",
                s.suite,
                s.first_violation
                    .as_ref()
                    .map(|p| serde_json::to_string(p).expect("serializable"))
                    .unwrap_or_default()
            ),
        )),
        None => Ok(()),
    }
}

fn cmd_ode(c: &Common, alpha0: f64, steps: usize, rk4: bool) -> CmdResult {
    let p = params(c)?;
    let trace = if rk4 {
        let q0: f64 = 1.0 - 1e-6;
        let a0 = (q0 * q0 / (1.0 + (1.0 - q0 * q0).sqrt())).sqrt();
        let t0 = (std::f64::consts::FRAC_PI_4 - s_alpha(a0)?) / p.rate_c();
        integrate_equality_rk4(q0, t0, &p, 1e-13)?
    } else {
        integrate_equality_case(alpha0, &p, steps)?
    };
    let text = match c.format {
        Format::Csv => io::ode_trace_csv(&trace),
        Format::Json => to_json(&trace),
    };
    emit(&c.out, &text)
}

fn run(cli: Cli) -> CmdResult {
    if let Ok(v) = std::env::var("MIXLAB_THREADS") {
        let threads: usize = v.parse().map_err(|_| {
            Failure::new(
                EXIT_INVALID,
                format!("MIXLAB_THREADS must be an integer, got {v}"),
            )
        })?;
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let c = &cli.common;
    match &cli.command {
        Command::Bounds => cmd_bounds(c),
        Command::Simulate { rho0, h_stop } => cmd_simulate(c, rho0, *h_stop),
        Command::VerifySubsolution { eps, times } => cmd_verify_subsolution(c, *eps, *times),
        Command::Variational { h_frac, samples } => cmd_variational(c, *h_frac, *samples),
        Command::Rearrange { h_frac } => cmd_rearrange(c, *h_frac),
        Command::HullProbe {
            probes,
            inject_violation,
        } => cmd_hull_probe(c, *probes, *inject_violation),
        Command::Ode { alpha0, steps, rk4 } => cmd_ode(c, *alpha0, *steps, *rk4),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("mixlab: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
