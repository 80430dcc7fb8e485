mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{CommandFactory, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use commands::{
    ConvergenceArgs, GreenArgs, MandelGridArgs, MuNArgs, Outcome, Outputs, RenderArgs, SliceArgs, TangencyArgs,
    VerifyArgs,
};

/// Green functions, vertical tangency measures and bifurcation potentials of
/// the quadratic family z^2 + c.
#[derive(Debug, Parser)]
#[command(name = "bifcurrent", version, propagate_version = true)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct CommonArgs {
    /// JSON file of parameters; keys mirror the long flag names, flags win.
    #[arg(long, global = true)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Output directory [default: bifcurrent-out]
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for every random choice [default: 42]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads, 0 for one per core; falls back to BIFCURRENT_THREADS [default: 0]
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dump the dynamical Green function g_c on a z-grid
    Green(GreenArgs),
    /// Membership and Green function of the Mandelbrot set on a c-grid
    MandelGrid(MandelGridArgs),
    /// Vertical tangencies: count table for n = 1..N and the depth-N cloud
    Tangency(TangencyArgs),
    /// Build the tangency measure of depth n, its marginal and potential
    MuN(MuNArgs),
    /// Compare slices of tangency measures with the equilibrium measure of K_c0
    Slice(SliceArgs),
    /// L1 convergence of 2^-n ln|b Q_n - a| to the Mandelbrot Green function
    Convergence(ConvergenceArgs),
    /// Run the full invariant suite
    Verify(VerifyArgs),
    /// Render a BFGRID01 grid file as a PGM image
    Render(RenderArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Green(_) => "green",
            Command::MandelGrid(_) => "mandel-grid",
            Command::Tangency(_) => "tangency",
            Command::MuN(_) => "mu-n",
            Command::Slice(_) => "slice",
            Command::Convergence(_) => "convergence",
            Command::Verify(_) => "verify",
            Command::Render(_) => "render",
        }
    }
}

const COMMON_KEYS: [&str; 3] = ["out", "seed", "threads"];

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let informational = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            if informational {
                return ExitCode::SUCCESS;
            }
            eprintln!("\n{}", Cli::command().render_help());
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(2),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<Outcome, String> {
    let name = cli.command.name();
    let mut file = match &cli.common.config {
        Some(path) => Some(config::load_config(path, name)?),
        None => None,
    };
    // Split the file into common keys and command keys.
    let mut common_file = serde_json::Map::new();
    if let Some(serde_json::Value::Object(map)) = file.as_mut() {
        map.remove("command");
        for key in COMMON_KEYS {
            if let Some(v) = map.remove(key) {
                common_file.insert(key.to_string(), v);
            }
        }
    }
    let common_defaults = CommonArgs {
        config: None,
        out: Some(PathBuf::from("bifcurrent-out")),
        seed: Some(42),
        threads: Some(env_threads()?.unwrap_or(0)),
    };
    let (common, _) = config::merge(
        &common_defaults,
        Some(&serde_json::Value::Object(common_file)),
        &cli.common,
    )?;
    let threads = common.threads.unwrap_or(0);
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| format!("thread pool: {e}"))?;
    }
    let seed = common.seed.unwrap_or(42);
    let out_dir = common.out.clone().unwrap_or_else(|| PathBuf::from("bifcurrent-out"));

    let start = Instant::now();
    let mut outputs = Outputs::new(out_dir)?;
    let file = file.as_ref();
    let result = match cli.command {
        Command::Green(a) => commands::resolve(a, file).and_then(|(a, v)| {
            outputs.write_config(name, &common, &v)?;
            commands::green(&a, &mut outputs)
        }),
        Command::MandelGrid(a) => commands::resolve(a, file).and_then(|(a, v)| {
            outputs.write_config(name, &common, &v)?;
            commands::mandel_grid(&a, &mut outputs)
        }),
        Command::Tangency(a) => commands::resolve(a, file).and_then(|(a, v)| {
            outputs.write_config(name, &common, &v)?;
            commands::tangency(&a, &mut outputs)
        }),
        Command::MuN(a) => commands::resolve(a, file).and_then(|(a, v)| {
            outputs.write_config(name, &common, &v)?;
            commands::mu_n(&a, seed, &mut outputs)
        }),
        Command::Slice(a) => commands::resolve(a, file).and_then(|(a, v)| {
            outputs.write_config(name, &common, &v)?;
            commands::slice(&a, seed, &mut outputs)
        }),
        Command::Convergence(a) => commands::resolve(a, file).and_then(|(a, v)| {
            outputs.write_config(name, &common, &v)?;
            commands::convergence(&a, &mut outputs)
        }),
        Command::Verify(a) => commands::resolve(a, file).and_then(|(a, v)| {
            outputs.write_config(name, &common, &v)?;
            commands::verify(&a, seed, &mut outputs)
        }),
        Command::Render(a) => commands::resolve(a, file).and_then(|(a, v)| {
            outputs.write_config(name, &common, &v)?;
            commands::render(&a, &mut outputs)
        }),
    };
    match result {
        Ok(outcome) => {
            eprintln!("{name}: {:.2} s", start.elapsed().as_secs_f64());
            Ok(outcome)
        }
        Err(e) => {
            outputs.remove_created();
            Err(e)
        }
    }
}

fn env_threads() -> Result<Option<usize>, String> {
    match std::env::var("BIFCURRENT_THREADS") {
        Ok(s) if !s.trim().is_empty() => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| format!("BIFCURRENT_THREADS must be a non-negative integer, got {s:?}")),
        _ => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_schema_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn parses_negative_complex_and_lists() {
        let cli = Cli::try_parse_from([
            "bifcurrent",
            "slice",
            "--c0",
            "-2,0",
            "--ns",
            "4,6",
            "--seed",
            "7",
        ])
        .unwrap();
        assert_eq!(cli.common.seed, Some(7));
        match cli.command {
            Command::Slice(a) => {
                assert_eq!(a.c0.unwrap().0, bifcurrent::Complex::new(-2.0, 0.0));
                assert_eq!(a.ns, Some(vec![4, 6]));
            }
            _ => panic!("wrong subcommand"),
        }
    }
}
