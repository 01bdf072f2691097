use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chns::config::{parse_precond_flag, parse_times, Overrides};
use chns::{eoc_sweep, run, AppError, AppResult, RunConfig};
use chns_core::imex::Scheme;
use chns_core::linsolve::PrecondKind;
use chns_core::scenario::ScenarioName;

#[derive(Parser, Debug)]
#[command(name = "chns", version, about = "Compressible Cahn-Hilliard-Navier-Stokes solver on staggered grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario and write diagnostics and snapshots.
    Run(RunArgs),
    /// Convergence sweep of the order test over several grids.
    Eoc(EocArgs),
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, value_parser = parse_scenario)]
    scenario: Option<ScenarioName>,
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<Scheme>,
    #[arg(long)]
    cfl: Option<f64>,
    #[arg(long = "T")]
    t_final: Option<f64>,
    #[arg(long, value_parser = parse_precond_flag)]
    precond: Option<PrecondKind>,
    /// key = value file overriding model parameters and solver tolerances.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long = "M")]
    m: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated output times.
    #[arg(long)]
    snapshots: Option<String>,
}

#[derive(Args, Debug)]
struct EocArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated grid sizes.
    #[arg(long, default_value = "8,16,32,64,128")]
    levels: String,
}

fn parse_scenario(s: &str) -> Result<ScenarioName, String> {
    s.parse().map_err(|e: chns_core::Error| e.to_string())
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: chns_core::Error| e.to_string())
}

fn overrides(c: &Common, m: Option<usize>, seed: Option<u64>) -> AppResult<Overrides> {
    let file = match &c.config {
        Some(p) => Overrides::from_file(p)?,
        None => Overrides::default(),
    };
    let cli = Overrides {
        scenario: c.scenario,
        scheme: c.scheme,
        cfl: c.cfl,
        t_final: c.t_final,
        precond: c.precond,
        m,
        seed,
        ..Default::default()
    };
    Ok(file.merged(&cli))
}

fn execute(cli: Cli) -> AppResult<()> {
    match cli.command {
        Command::Run(a) => {
            let mut cfg = RunConfig::from_overrides(&overrides(&a.common, a.m, a.seed)?)?;
            if let Some(s) = &a.snapshots {
                cfg.snapshots = parse_times(s)?;
            }
            let s = run(&cfg, Some(&a.common.out))?;
            let last = s.history.last().expect("initial row");
            println!(
                "{} M={} steps={} t={:.6} err_rho={:e} err_q={:e} c=[{:.4}, {:.4}] rhomin={:.4e}",
                cfg.scenario, cfg.m, s.steps, last.t, last.err_rho, last.err_q, last.cmin, last.cmax, last.rhomin
            );
            if let Some(e) = s.error {
                println!("e_M = {e:.4e}");
            }
        }
        Command::Eoc(a) => {
            let mut o = overrides(&a.common, None, None)?;
            o.scenario = Some(o.scenario.unwrap_or(ScenarioName::Order));
            let cfg = RunConfig::from_overrides(&o)?;
            let levels: Vec<usize> = a
                .levels
                .split(',')
                .map(|l| l.trim().parse().map_err(|_| AppError::Config(format!("invalid level `{l}`"))))
                .collect::<AppResult<_>>()?;
            let table = eoc_sweep(&cfg, &levels, Some(&a.common.out))?;
            println!("{:>6} {:>12} {:>8}", "M", "e_M", "EOC_M");
            for (k, &(m, e)) in table.iter().enumerate() {
                let eoc = table.get(k + 1).map(|&(_, f)| format!("{:.2}", chns_core::scenario::eoc(e, f)));
                println!("{m:>6} {e:>12.4e} {:>8}", eoc.unwrap_or_else(|| "-".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
