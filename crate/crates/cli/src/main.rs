mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qlink_core::model::{CtapParams, Protocol};
use qlink_core::sweep::{
    csv_string, default_g_grid, run_point, run_sweep, uniform_grid, write_csv, GridPoint,
    PointSettings, ProtocolSelection, ResultRow, SweepSpec,
};
use qlink_core::verify::{run_suite, Suite, VerifyParams};

use config::{parse_list, parse_range, FileConfig};

#[derive(Debug, Parser)]
#[command(
    name = "qlink",
    version,
    about = "Qubit state transfer through a d-level interconnect"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Coherent information of the transfer channel at one point
    Capacity(SingleArgs),
    /// Leakage out of the low-excitation and target subspaces at one point
    Leakage(SingleArgs),
    /// Evaluate a (protocol, d, g) grid and write CSV
    Sweep(SweepArgs),
    /// Run invariant checks
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// key = value file; flags override its entries
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Rotating-wave model instead of the full coupling
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    rwa: Option<bool>,
    /// CTAP pulse area g*T
    #[arg(long)]
    gt: Option<f64>,
    /// CTAP half delay in units of T
    #[arg(long)]
    tau_over_t: Option<f64>,
    /// CTAP half window in units of T
    #[arg(long)]
    window: Option<f64>,
    /// eps1 - omega_c
    #[arg(long, allow_negative_numbers = true)]
    detuning1: Option<f64>,
    /// eps2 - omega_c
    #[arg(long, allow_negative_numbers = true)]
    detuning2: Option<f64>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
}

#[derive(Debug, Args)]
struct SingleArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// qb or ctap
    #[arg(long)]
    protocol: Option<String>,
    /// Peak coupling in units of omega_c
    #[arg(long)]
    g: Option<f64>,
    /// Interconnect levels
    #[arg(long)]
    d: Option<usize>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// qb, ctap or both
    #[arg(long)]
    protocol: Option<String>,
    /// Comma-separated coupling values
    #[arg(long, conflicts_with = "g_range", allow_negative_numbers = true)]
    g_grid: Option<String>,
    /// start:stop:step
    #[arg(long)]
    g_range: Option<String>,
    /// Comma-separated interconnect levels
    #[arg(long)]
    d_list: Option<String>,
    /// CSV destination; stdout when absent
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Evaluate points one at a time
    #[arg(long)]
    serial: bool,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// hermiticity, symmetry, unitarity, cptp, entropy, numerics or all
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    g: Option<f64>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Random Hamiltonian samples per check
    #[arg(long, default_value_t = 12)]
    samples: usize,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Numeric(String),
}

impl Failure {
    fn exit_code(&self) -> ExitCode {
        match self {
            Failure::Usage(_) => ExitCode::from(1),
            Failure::Numeric(_) => ExitCode::from(2),
        }
    }
}

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Capacity(a) => single(&a, false),
        Command::Leakage(a) => single(&a, true),
        Command::Sweep(a) => sweep(&a),
        Command::Verify(a) => verify(&a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Numeric(m) => eprintln!("failure: {m}"),
            }
            f.exit_code()
        }
    }
}

fn load_file(model: &ModelArgs) -> Result<FileConfig, Failure> {
    match &model.config {
        Some(path) => FileConfig::load(path).map_err(usage),
        None => Ok(FileConfig::default()),
    }
}

fn pick<T: std::str::FromStr>(
    flag: Option<T>,
    file: &FileConfig,
    key: &str,
) -> Result<Option<T>, Failure>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.get(key).map_err(usage),
    }
}

fn settings(model: &ModelArgs, file: &FileConfig) -> Result<PointSettings, Failure> {
    let base = PointSettings::default();
    let ctap = CtapParams {
        g_t: pick(model.gt, file, "gt")?.unwrap_or(base.ctap.g_t),
        tau_over_t: pick(model.tau_over_t, file, "tau_over_t")?.unwrap_or(base.ctap.tau_over_t),
        half_window_over_t: pick(model.window, file, "window")?
            .unwrap_or(base.ctap.half_window_over_t),
    };
    let s = PointSettings {
        rwa: pick(model.rwa, file, "rwa")?.unwrap_or(base.rwa),
        ctap,
        detuning1: pick(model.detuning1, file, "detuning1")?.unwrap_or(base.detuning1),
        detuning2: pick(model.detuning2, file, "detuning2")?.unwrap_or(base.detuning2),
        rtol: pick(model.rtol, file, "rtol")?.unwrap_or(base.rtol),
        atol: pick(model.atol, file, "atol")?.unwrap_or(base.atol),
    };
    if !(s.rtol > 0.0 && s.atol > 0.0) {
        return Err(usage("rtol and atol must be positive"));
    }
    if [s.ctap.g_t, s.ctap.tau_over_t, s.ctap.half_window_over_t]
        .iter()
        .any(|x| !(x.is_finite() && *x > 0.0))
    {
        return Err(usage("gt, tau-over-t and window must be positive"));
    }
    if !(s.detuning1.is_finite() && s.detuning2.is_finite()) {
        return Err(usage("detunings must be finite"));
    }
    Ok(s)
}

fn single(args: &SingleArgs, leakage_view: bool) -> Result<(), Failure> {
    let file = load_file(&args.model)?;
    let settings = settings(&args.model, &file)?;
    let protocol: Protocol = pick(args.protocol.clone(), &file, "protocol")?
        .ok_or_else(|| usage("--protocol is required"))?
        .parse()
        .map_err(usage)?;
    let g: f64 = pick(args.g, &file, "g")?.ok_or_else(|| usage("--g is required"))?;
    let d: usize = pick(args.d, &file, "d")?.ok_or_else(|| usage("--d is required"))?;
    if !(g.is_finite() && g > 0.0) {
        return Err(usage(format!("--g {g} must be positive")));
    }
    if d < 2 {
        return Err(usage(format!("--d {d} must be at least 2")));
    }

    let row = run_point(&GridPoint { protocol, d, g }, &settings);
    let mut out = io::stdout().lock();
    write_summary(&mut out, &row, settings.rwa, leakage_view).map_err(usage)?;
    writeln!(out)
        .and_then(|_| out.write_all(csv_string(std::slice::from_ref(&row)).as_bytes()))
        .map_err(usage)?;
    match &row.error {
        Some(e) => Err(Failure::Numeric(e.clone())),
        None => Ok(()),
    }
}

fn write_summary(
    out: &mut impl Write,
    row: &ResultRow,
    rwa: bool,
    leakage_view: bool,
) -> io::Result<()> {
    writeln!(out, "protocol      = {}", row.protocol)?;
    writeln!(out, "model         = {}", if rwa { "rwa" } else { "full" })?;
    writeln!(out, "d             = {}", row.d)?;
    writeln!(out, "g             = {}", row.g)?;
    writeln!(out, "T             = {:.6}", row.t_width)?;
    writeln!(out, "tau           = {:.6}", row.tau)?;
    if leakage_view {
        writeln!(out, "leak_pair     = {:.6e}", row.leak_pair)?;
        writeln!(out, "leak_target   = {:.6e}", row.leak_target)?;
    } else {
        writeln!(out, "q1            = {:.6}", row.q1)?;
        writeln!(out, "coherent_info = {:.6}", row.coherent_info)?;
        writeln!(out, "s_output      = {:.6}", row.s_output)?;
        writeln!(out, "s_exchange    = {:.6}", row.s_exchange)?;
    }
    writeln!(out, "norm_drift    = {:.3e}", row.norm_drift)?;
    writeln!(out, "n_steps       = {}", row.n_steps)?;
    writeln!(out, "wall_time     = {:.3}s", row.wall_time)?;
    if let Some(e) = &row.error {
        writeln!(out, "error         = {e}")?;
    }
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<(), Failure> {
    let file = load_file(&args.model)?;
    let settings = settings(&args.model, &file)?;
    let protocols: ProtocolSelection = pick(args.protocol.clone(), &file, "protocol")?
        .unwrap_or_else(|| "both".to_string())
        .parse()
        .map_err(usage)?;

    let g_grid = match (&args.g_grid, &args.g_range) {
        (Some(list), _) => parse_list::<f64>(list).map_err(usage)?,
        (None, Some(range)) => grid_from_range(range)?,
        (None, None) => match (file.get_raw("g_grid"), file.get_raw("g_range")) {
            (Some(list), _) => parse_list::<f64>(list).map_err(usage)?,
            (None, Some(range)) => grid_from_range(range)?,
            (None, None) => default_g_grid(),
        },
    };
    let d_list = match args.d_list.as_deref().or(file.get_raw("d_list")) {
        Some(list) => parse_list::<usize>(list).map_err(usage)?,
        None => vec![2, 3, 4],
    };
    let serial = args.serial || pick(None, &file, "serial")?.unwrap_or(false);
    let output: Option<PathBuf> = args
        .output
        .clone()
        .or_else(|| file.get_raw("output").map(PathBuf::from));

    let spec = SweepSpec {
        protocols,
        g_grid,
        d_list,
        settings,
        parallel: !serial,
    };
    spec.validate().map_err(usage)?;

    let rows = run_sweep(&spec).map_err(usage)?;
    let written = match &output {
        Some(path) => File::create(path)
            .map_err(|e| e.to_string())
            .and_then(|f| write_csv(&rows, BufWriter::new(f)).map_err(|e| e.to_string())),
        None => write_csv(&rows, io::stdout().lock()).map_err(|e| e.to_string()),
    };
    written.map_err(|e| Failure::Numeric(format!("writing csv: {e}")))?;

    let failed: Vec<&ResultRow> = rows.iter().filter(|r| r.failed()).collect();
    eprintln!("{} points, {} failed", rows.len(), failed.len());
    for r in &failed {
        eprintln!(
            "  {} d={} g={}: {}",
            r.protocol,
            r.d,
            r.g,
            r.error.as_deref().unwrap_or("failed")
        );
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Numeric(format!(
            "{} grid points failed",
            failed.len()
        )))
    }
}

fn grid_from_range(range: &str) -> Result<Vec<f64>, Failure> {
    let (start, stop, step) = parse_range(range).map_err(usage)?;
    Ok(uniform_grid(start, stop, step))
}

fn verify(args: &VerifyArgs) -> Result<(), Failure> {
    let suite: Suite = args.suite.parse().map_err(usage)?;
    if let Some(d) = args.d {
        if d < 2 {
            return Err(usage(format!("--d {d} must be at least 2")));
        }
    }
    if let Some(g) = args.g {
        if !(g.is_finite() && g > 0.0) {
            return Err(usage(format!("--g {g} must be positive")));
        }
    }
    if args.samples == 0 {
        return Err(usage("--samples must be at least 1"));
    }
    let params = VerifyParams {
        d: args.d,
        g: args.g,
        seed: args.seed,
        samples: args.samples,
    };
    let outcomes = run_suite(suite, &params);
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    for o in &outcomes {
        println!("{o}");
    }
    println!("{} checks, {} failed", outcomes.len(), failed);
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Numeric(format!("{failed} checks failed")))
    }
}
