//! Doob decomposition, martingale means, Azuma comparison and the CLT probe on
//! a small ensemble.
//!
//! `cargo run --release --example martingale_diagnostics`

use phack::diagnostics::{
    azuma_check, base_drift_extremes, clt_probe, doob_decompose, empirical_policy_range, increment_bound,
    martingale_rows, variance_bound,
};
use phack::dynamics::{run_ensemble, ScenarioConfig, TrueState};
use phack::payoff::PayoffSpec;
use phack::success::SuccessModel;

fn main() -> phack::Result<()> {
    let sm = SuccessModel::default();
    let cfg = ScenarioConfig {
        p: 0.5,
        eps: 0.01,
        sm,
        ps: PayoffSpec::bounded_exp(1.0, 8.0)?,
        lambda0: 0.0,
        horizon: 5000,
        seed: 99,
        true_state: TrueState::A,
    };
    let ens = run_ensemble(&cfg, 0..100, 1)?;
    let decomps = ens.iter().map(doob_decompose).collect::<phack::Result<Vec<_>>>()?;
    let rec = decomps.iter().map(|d| d.reconstruction_error).fold(0.0, f64::max);
    println!("max reconstruction error {rec:.2e}");
    for r in martingale_rows(&decomps, &[100, 1000, 5000]) {
        println!("M_{}: mean {:+.4} se {:.4} z {:+.2}", r.t, r.mean, r.std_error, r.z);
    }

    let (range, _) = empirical_policy_range(&cfg.ps, &sm, -40.0, 40.0, 0.25)?;
    let (_, sup_base) = base_drift_extremes(&sm, cfg.p, &range, 2000)?;
    let delta = sup_base.abs() / 2.0;
    let d = increment_bound(&sm, cfg.p, &range, 2000)?;
    let az = azuma_check(&ens, delta, d, &[1000, 5000]);
    println!("Azuma delta={delta:.4e} d={d:.4} applicable={}", az.applicable);
    for r in &az.rows {
        println!("  t={} frequency {:.3} bound {:.4}", r.t, r.frequency, r.bound);
    }
    let s = variance_bound(&sm, cfg.p, cfg.eps, &range, 2000)?;
    for r in clt_probe(&decomps, &[25.0, 50.0], s) {
        println!(
            "nu={} reached {} ks {:?} tau_min {:?} >= {:.1}: {}",
            r.nu, r.reached, r.ks, r.tau_min, r.tau_lower_bound, r.tau_bound_holds
        );
    }
    Ok(())
}
