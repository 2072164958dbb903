//! Run a shrunken copy of a bundled scenario through the experiment layer and
//! print where the outputs went.
//!
//! `cargo run --release --example scenario_run -- [scenario.toml] [out-dir]`

use std::path::PathBuf;

use phack::experiment::{run_scenario_file, RunOptions, ScenarioFile};

fn main() -> phack::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/slow_payoff_small_eps.toml")
    });
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("phack-example"));
    let mut file = ScenarioFile::load(&path)?;
    file.dynamics.trajectories = file.dynamics.trajectories.min(20);
    file.dynamics.horizon = file.dynamics.horizon.min(5000);
    let run = run_scenario_file(
        &file,
        &RunOptions {
            out,
            ..RunOptions::default()
        },
    )?;
    let a = &run.manifest.aggregate;
    println!("{}", run.dir.display());
    println!(
        "learned {}/{}  mean lambda_T {:.2}  mean drift {:.4e}",
        a.learned, a.trajectories, a.mean_lambda_final, a.mean_drift
    );
    println!("acceptance passed: {}", run.manifest.acceptance_passed);
    if let Some(e) = &run.report.epsilon_threshold {
        println!("eps_bar {:.4e} at delta {:.4e}", e.eps_bar, e.delta);
    }
    Ok(())
}
