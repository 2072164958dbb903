use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use phack::experiment::{self, PlotKind, RunOptions};
use phack::Error;

#[derive(Parser)]
#[command(name = "phack", version, about = "Belief dynamics under project choice and distorted success reports")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Worker threads for trajectory and policy computations.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Directory that receives run and sweep directories [default: runs].
    /// For plotdata, the directory for the CSV; defaults to the manifest's.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// First trajectory index.
    #[arg(long, global = true, default_value_t = 0)]
    seed_offset: u64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate a scenario and write trajectories, aggregates and diagnostics.
    Run { config: PathBuf },
    /// Tabulate the optimal project over a belief grid for each payoff.
    Sweep { config: PathBuf },
    /// Emit long-format CSV for plotting.
    Plotdata {
        manifest: PathBuf,
        #[arg(long)]
        kind: String,
    },
    /// Recompute diagnostics from a run's trajectory files.
    Diagnose { manifest: PathBuf },
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Config(_) | Error::Validation(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut opts = RunOptions {
        out: cli.out.clone().unwrap_or_else(|| PathBuf::from("runs")),
        seed_offset: cli.seed_offset,
        ..RunOptions::default()
    };
    if let Some(w) = cli.workers {
        if w == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        opts.workers = w;
    }
    match cli.cmd {
        Cmd::Run { config } => match experiment::run_scenario(&config, &opts) {
            Ok(out) => {
                let a = &out.manifest.aggregate;
                println!("{}", out.dir.join("manifest.json").display());
                println!(
                    "trajectories {}  learned {}  failed {}  undecided {}  learned_fraction {:.4}  mean_lambda_T {:.3}",
                    a.trajectories, a.learned, a.failed, a.undecided, a.learned_fraction, a.mean_lambda_final
                );
                for c in &out.manifest.acceptance {
                    println!(
                        "acceptance {}: {:.4} vs {:.4} {}",
                        c.name,
                        c.value,
                        c.bound,
                        if c.pass { "pass" } else { "FAIL" }
                    );
                }
                if out.manifest.acceptance_passed {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => fail(e),
        },
        Cmd::Sweep { config } => match experiment::run_policy_sweep(&config, &opts) {
            Ok((dir, m)) => {
                println!("{}", dir.join("sweep_manifest.json").display());
                for e in &m.payoffs {
                    println!(
                        "{} {}: rows {} failures {} max l* {}",
                        e.index,
                        e.payoff.label(),
                        e.rows,
                        e.failures,
                        e.max_l_star.map_or("-".into(), |x| format!("{x:.6e}"))
                    );
                }
                for g in &m.growth {
                    println!("growth {} vs {}: {:?}", g.a, g.b, g.order);
                }
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Cmd::Plotdata { manifest, kind } => {
            let kind: PlotKind = match kind.parse() {
                Ok(k) => k,
                Err(e) => return fail(e),
            };
            match experiment::emit_plotdata(&manifest, kind, cli.out.as_deref()) {
                Ok(p) => {
                    println!("{}", p.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Cmd::Diagnose { manifest } => match experiment::diagnose(&manifest) {
            Ok((p, r)) => {
                println!("{}", p.display());
                println!(
                    "learned_fraction {:.4}  max reconstruction error {:.3e}  errors {}",
                    r.aggregate.learned_fraction,
                    r.doob.max_reconstruction_error,
                    r.errors.len()
                );
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
    }
}
