use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Parser, Subcommand, ValueEnum};
use coloedr::analysis::{
    bound_sweep, certify_nash, kkt_residuals, nash_tolerance, vdr_kkt_residuals, MandatoryGame, NashCertificate,
    VoluntaryGame, KKT_TOLERANCE,
};
use coloedr::cost::{make_worst_case_instance, WorstCaseSpec};
use coloedr::mandatory::{self, MandatoryOutcome, MandatoryScenario};
use coloedr::simkit::{
    emit_report, winter_event_day, run_simulation, EdrSchedule, ReportFormat, SimConfig, TraceSource, WorkloadTrace,
};
use coloedr::voluntary::{solve_vdr, VoluntaryOutcome, VoluntaryScenario};
use coloedr::Mode;
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "coloedr", version, about = "Supply-function bidding for colocation emergency demand response")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Clear one mandatory or voluntary scenario.
    Solve {
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Taking)]
        mode: ModeArg,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Check the equilibrium outcomes of a scenario against best-response scans and optimality conditions.
    Verify {
        config: PathBuf,
        /// Grid points per best-response scan stage.
        #[arg(long, default_value_t = 2000)]
        grid: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Randomized sweep over assumption-satisfying mandatory scenarios.
    Bounds {
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Solve the instance maximizing the anticipating-mode diesel gap.
    WorstCase {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run a schedule of events against workload traces.
    Simulate {
        /// Simulation config JSON; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Event schedule CSV; a 24-hour mandatory day when omitted.
        #[arg(long)]
        schedule: Option<PathBuf>,
        /// Day of the generated schedule.
        #[arg(long, default_value = "2014-01-07")]
        date: NaiveDate,
        /// Largest target of the generated schedule.
        #[arg(long, default_value_t = 900.0)]
        peak_kwh: f64,
        /// Overrides the synthetic trace seed.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Write a synthetic workload trace as CSV.
    GenTrace {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        mean: Option<f64>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(clap::Args, Debug)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    Taking,
    Anticipating,
    Social,
    DieselOnly,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Taking => Mode::Taking,
            ModeArg::Anticipating => Mode::Anticipating,
            ModeArg::Social => Mode::Social,
            ModeArg::DieselOnly => Mode::DieselOnly,
        }
    }
}

/// Failure with its exit status: 2 for bad input, 1 for failed checks.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<coloedr::Error> for Failure {
    fn from(e: coloedr::Error) -> Self {
        Failure::input(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn parse_json<T: DeserializeOwned>(path: &Path, text: &str) -> CliResult<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        Failure::input(format!("{}: at `{at}`: {}", path.display(), e.inner()))
    })
}

enum Scenario {
    Mandatory(MandatoryScenario),
    Voluntary(VoluntaryScenario),
}

fn load_scenario(path: &Path) -> CliResult<Scenario> {
    let text = read(path)?;
    let probe: serde_json::Value = parse_json(path, &text)?;
    let scn = if probe.get("u_per_kwh").is_some() {
        let s: VoluntaryScenario = parse_json(path, &text)?;
        s.validate()?;
        Scenario::Voluntary(s)
    } else {
        let s: MandatoryScenario = parse_json(path, &text)?;
        s.validate()?;
        Scenario::Mandatory(s)
    };
    Ok(scn)
}

fn load_sim_config(path: Option<&Path>) -> CliResult<SimConfig> {
    let cfg = match path {
        Some(p) => parse_json(p, &read(p)?)?,
        None => SimConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::input(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            let written = stdout
                .write_all(text.as_bytes())
                .and_then(|_| if text.ends_with('\n') { Ok(()) } else { stdout.write_all(b"\n") });
            match written {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::input(e.to_string())),
                _ => Ok(()),
            }
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> CliResult<String> {
    serde_json::to_string_pretty(v).map_err(|e| Failure::input(e.to_string()))
}

fn csv_lines(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

fn mandatory_csv(outcomes: &[&MandatoryOutcome]) -> String {
    let header = [
        "mode",
        "price_per_kwh",
        "diesel_kwh",
        "tenant",
        "reduction_kwh",
        "bid_usd",
        "payoff_usd",
        "tenant_cost_usd",
    ];
    let mut rows = Vec::new();
    for o in outcomes {
        for n in 0..o.reductions.len() {
            rows.push(vec![
                o.mode.to_string(),
                o.price.to_string(),
                o.diesel.to_string(),
                (n + 1).to_string(),
                o.reductions[n].to_string(),
                o.bids[n].to_string(),
                o.payoffs[n].to_string(),
                o.tenant_costs[n].to_string(),
            ]);
        }
    }
    csv_lines(&header, rows)
}

fn voluntary_csv(o: &VoluntaryOutcome) -> String {
    let header = [
        "mode",
        "price_per_kwh",
        "total_reduction_kwh",
        "tenant",
        "reduction_kwh",
        "bid_usd",
        "payoff_usd",
        "tenant_cost_usd",
    ];
    let rows = (0..o.reductions.len())
        .map(|n| {
            vec![
                o.mode.to_string(),
                o.price.to_string(),
                o.total_reduction.to_string(),
                (n + 1).to_string(),
                o.reductions[n].to_string(),
                o.bids[n].to_string(),
                o.payoffs[n].to_string(),
                o.tenant_costs[n].to_string(),
            ]
        })
        .collect();
    csv_lines(&header, rows)
}

fn solve(config: &Path, mode: Mode, out: &OutputArgs) -> CliResult<()> {
    let text = match load_scenario(config)? {
        Scenario::Mandatory(scn) => {
            let o = mandatory::solve(&scn, mode)?;
            match out.format {
                FormatArg::Json => to_json(&o)?,
                FormatArg::Csv => mandatory_csv(&[&o]),
            }
        }
        Scenario::Voluntary(scn) => {
            let o = solve_vdr(&scn, mode)?;
            match out.format {
                FormatArg::Json => to_json(&o)?,
                FormatArg::Csv => voluntary_csv(&o),
            }
        }
    };
    emit(out.output.as_deref(), &text)
}

#[derive(Serialize)]
struct ModeCheck {
    mode: Mode,
    kkt_residual: f64,
    nash: NashCertificate,
    passed: bool,
}

fn verify(config: &Path, grid: usize, out: &OutputArgs) -> CliResult<()> {
    let checks: Vec<ModeCheck> = match load_scenario(config)? {
        Scenario::Mandatory(scn) => [Mode::Taking, Mode::Anticipating]
            .into_iter()
            .map(|mode| {
                let o = mandatory::solve(&scn, mode)?;
                let kkt = kkt_residuals(&o, &scn);
                let game = MandatoryGame::for_outcome(&scn, &o);
                let nash = certify_nash(&game, &o.bids, grid, nash_tolerance(&o, &scn));
                Ok(ModeCheck {
                    mode,
                    passed: nash.passed && kkt <= KKT_TOLERANCE,
                    kkt_residual: kkt,
                    nash,
                })
            })
            .collect::<CliResult<_>>()?,
        Scenario::Voluntary(scn) => [Mode::Taking, Mode::Anticipating]
            .into_iter()
            .map(|mode| {
                let o = solve_vdr(&scn, mode)?;
                let kkt = vdr_kkt_residuals(&o, &scn);
                let game = VoluntaryGame::for_outcome(&scn, &o);
                let tol = 1e-4 * scn.u * scn.total_capacity();
                let nash = certify_nash(&game, &o.bids, grid, tol);
                Ok(ModeCheck {
                    mode,
                    passed: nash.passed && kkt <= KKT_TOLERANCE,
                    kkt_residual: kkt,
                    nash,
                })
            })
            .collect::<CliResult<_>>()?,
    };
    let text = match out.format {
        FormatArg::Json => to_json(&checks)?,
        FormatArg::Csv => csv_lines(
            &["mode", "kkt_residual", "max_improvement_usd", "tolerance_usd", "passed"],
            checks
                .iter()
                .map(|c| {
                    vec![
                        c.mode.to_string(),
                        c.kkt_residual.to_string(),
                        c.nash.max_improvement.to_string(),
                        c.nash.tolerance.to_string(),
                        c.passed.to_string(),
                    ]
                })
                .collect(),
        ),
    };
    emit(out.output.as_deref(), &text)?;
    if checks.iter().all(|c| c.passed) {
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            message: "verification failed".into(),
        })
    }
}

fn bounds(count: usize, seed: u64, out: &OutputArgs) -> CliResult<()> {
    let summary = bound_sweep(count, seed);
    let text = match out.format {
        FormatArg::Json => to_json(&summary)?,
        FormatArg::Csv => csv_lines(
            &[
                "count",
                "seed",
                "bounds_checked",
                "worst_normalized_margin",
                "max_kkt_residual",
                "max_balance_error",
                "failures",
            ],
            vec![vec![
                summary.count.to_string(),
                summary.seed.to_string(),
                summary.bounds_checked.to_string(),
                summary.worst_normalized_margin.to_string(),
                summary.max_kkt_residual.to_string(),
                summary.max_balance_error.to_string(),
                summary.failures.len().to_string(),
            ]],
        ),
    };
    emit(out.output.as_deref(), &text)?;
    if summary.passed() {
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            message: format!("{} of {} scenarios failed", summary.failures.len(), count),
        })
    }
}

#[derive(Serialize)]
struct WorstCaseReport {
    spec: WorstCaseSpec,
    social: MandatoryOutcome,
    taking: MandatoryOutcome,
    anticipating: MandatoryOutcome,
    diesel_gap_kwh: f64,
}

fn worst_case(spec: WorstCaseSpec, out: &OutputArgs) -> CliResult<()> {
    spec.validate()?;
    let scn = MandatoryScenario::new(spec.delta, spec.alpha, make_worst_case_instance(&spec)?);
    let social = mandatory::solve(&scn, Mode::Social)?;
    let taking = mandatory::solve(&scn, Mode::Taking)?;
    let anticipating = mandatory::solve(&scn, Mode::Anticipating)?;
    let gap = anticipating.diesel - social.diesel;
    let text = match out.format {
        FormatArg::Json => to_json(&WorstCaseReport {
            spec,
            diesel_gap_kwh: gap,
            social,
            taking,
            anticipating,
        })?,
        FormatArg::Csv => {
            let mut s = mandatory_csv(&[&social, &taking, &anticipating]);
            s.push_str(&format!("# diesel_gap_kwh,{gap}\n"));
            s
        }
    };
    emit(out.output.as_deref(), &text)?;
    eprintln!("diesel gap (anticipating - social): {gap:.6} kWh");
    Ok(())
}

fn simulate(
    config: Option<&Path>,
    schedule: Option<&Path>,
    date: NaiveDate,
    peak_kwh: f64,
    seed: Option<u64>,
    out: &OutputArgs,
) -> CliResult<()> {
    let mut cfg = load_sim_config(config)?;
    if let (Some(seed), TraceSource::Synthetic(s)) = (seed, &mut cfg.trace) {
        s.seed = seed;
    }
    let schedule = match schedule {
        Some(p) => {
            let f = fs::File::open(p).map_err(|e| Failure::input(format!("{}: {e}", p.display())))?;
            EdrSchedule::from_csv(f)?
        }
        None => winter_event_day(date, peak_kwh),
    };
    let records = run_simulation(&cfg, &schedule)?;
    let format = match out.format {
        FormatArg::Json => ReportFormat::Json,
        FormatArg::Csv => ReportFormat::Csv,
    };
    emit(out.output.as_deref(), &emit_report(&records, format)?)
}

fn gen_trace(
    config: Option<&Path>,
    steps: Option<usize>,
    seed: Option<u64>,
    mean: Option<f64>,
    output: Option<&Path>,
) -> CliResult<()> {
    let cfg = load_sim_config(config)?;
    let mut params = match &cfg.trace {
        TraceSource::Synthetic(s) => s.clone(),
        TraceSource::File { .. } => Default::default(),
    };
    params.steps = steps.unwrap_or(params.steps);
    params.seed = seed.unwrap_or(params.seed);
    params.mean_utilization = mean.unwrap_or(params.mean_utilization);
    let check = SimConfig {
        trace: TraceSource::Synthetic(params.clone()),
        ..cfg.clone()
    };
    check.validate()?;
    let trace = WorkloadTrace::synthetic(&params, cfg.tenants.len())?;
    let mut buf = Vec::new();
    trace.to_csv(&mut buf)?;
    emit(output, &String::from_utf8_lossy(&buf))
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Solve { config, mode, out } => solve(&config, mode.into(), &out),
        Command::Verify { config, grid, out } => verify(&config, grid, &out),
        Command::Bounds { count, seed, out } => bounds(count, seed, &out),
        Command::WorstCase {
            epsilon,
            delta,
            alpha,
            n,
            out,
        } => worst_case(WorstCaseSpec { epsilon, delta, alpha, n }, &out),
        Command::Simulate {
            config,
            schedule,
            date,
            peak_kwh,
            seed,
            out,
        } => simulate(config.as_deref(), schedule.as_deref(), date, peak_kwh, seed, &out),
        Command::GenTrace {
            config,
            steps,
            seed,
            mean,
            output,
        } => gen_trace(config.as_deref(), steps, seed, mean, output.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
