use clap::{Args, Parser, Subcommand};
use mop::commands;
use mop::output::Sink;
use mop::suites::Suite;
use mop::{init_threads, CliError, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mop", version, about = "Zeros, supports and asymptotics of two-diagonal Hessenberg recurrences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the configured one.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Zero scatter of Q_n and P_{1,n} with the Γ_k overlay.
    Figure(Common),
    /// Run a verification suite and print its JSON report.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_suite)]
        suite: Suite,
    },
    /// Intervals of the star-like sets Γ_k.
    Gamma(Common),
    /// Equilibrium densities, masses and weak convergence of zero counts.
    Measure(Common),
    /// Ratio asymptotics table.
    Ratio(Common),
    /// Residue signs and degree slopes.
    Nikishin(Common),
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e| format!("{e}; expected one of interlace, widom, gamma, mass, ratio, nikishin, patterns, all"))
}

fn load(common: &Common) -> Result<(RunConfig, PathBuf), CliError> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out = Some(out.clone());
    }
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    Ok((cfg, dir))
}

fn execute(command: Command) -> Result<ExitCode, CliError> {
    init_threads()?;
    let (common, suite) = match &command {
        Command::Verify { common, suite } => (common, Some(*suite)),
        Command::Figure(c) | Command::Gamma(c) | Command::Measure(c) | Command::Ratio(c) | Command::Nikishin(c) => (c, None),
    };
    let (cfg, dir) = load(common)?;
    let mut sink = Sink::new(&dir)?;
    if let Some(suite) = suite {
        let report = commands::verify(&cfg, suite, Some(&mut sink))?;
        println!("{}", serde_json::to_string_pretty(&report).map_err(CliError::Json)?);
        return Ok(if report.ok() { ExitCode::SUCCESS } else { ExitCode::from(1) });
    }
    let result = match command {
        Command::Figure(_) => commands::figure(&cfg, &mut sink),
        Command::Gamma(_) => commands::gamma(&cfg, &mut sink),
        Command::Measure(_) => commands::measure(&cfg, &mut sink),
        Command::Ratio(_) => commands::ratio(&cfg, &mut sink),
        Command::Nikishin(_) => commands::nikishin(&cfg, &mut sink),
        Command::Verify { .. } => unreachable!("handled above"),
    };
    for path in &sink.written {
        println!("{}", path.display());
    }
    result.map(|()| ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("mop: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
