//! One simulated trajectory per payoff family, printed every 2000 periods.
//!
//! `cargo run --release --example belief_trajectory`

use phack::diagnostics::classify_convergence;
use phack::dynamics::{simulate, ScenarioConfig, TrueState};
use phack::payoff::PayoffSpec;
use phack::success::SuccessModel;

fn main() -> phack::Result<()> {
    let sm = SuccessModel::default();
    for (name, ps, eps) in [
        ("bounded, eps=0.01", PayoffSpec::bounded_exp(1.0, 8.0)?, 0.01),
        ("fast, eps=0.05", PayoffSpec::fast_reciprocal(1.0, 2.0, sm)?, 0.05),
    ] {
        let cfg = ScenarioConfig {
            p: 0.5,
            eps,
            sm,
            ps,
            lambda0: 0.0,
            horizon: 20_000,
            seed: 2024,
            true_state: TrueState::A,
        };
        let tr = simulate(&cfg)?;
        println!("{name}");
        for t in (0..=tr.steps()).step_by(2000) {
            let l = tr.l_star.get(t).map_or(String::from("-"), |l| format!("{l:.4}"));
            println!("  t={t:>6} lambda={:>10.3} l*={l}", tr.lambda[t]);
        }
        let c = classify_convergence(&tr, -30.0, 2000);
        println!("  label {} (successes {})", c.label.as_str(), tr.summary().successes);
    }
    Ok(())
}
