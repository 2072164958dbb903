//! Distortion threshold for the bounded payoff and escape threshold for the
//! fast payoff.
//!
//! `cargo run --release --example thresholds`

use phack::diagnostics::{base_drift_extremes, empirical_policy_range, epsilon_threshold, escape_threshold};
use phack::payoff::PayoffSpec;
use phack::success::SuccessModel;

fn main() -> phack::Result<()> {
    let sm = SuccessModel::default();
    let p = 0.5;

    let bounded = PayoffSpec::bounded_exp(1.0, 8.0)?;
    let (range, _) = empirical_policy_range(&bounded, &sm, -40.0, 40.0, 0.25)?;
    println!("policy range {:?}", range.intervals);
    let (lo, hi) = base_drift_extremes(&sm, p, &range, 2000)?;
    println!("base drift over the range in [{lo:.4e}, {hi:.4e}]");
    for delta in [hi.abs() / 4.0, hi.abs() / 2.0, 0.9 * hi.abs()] {
        let th = epsilon_threshold(&sm, p, &range, delta)?;
        println!("delta={delta:.4e}: eps_bar={:.4e}", th.eps_bar);
    }

    let fast = PayoffSpec::fast_reciprocal(1.0, 2.0, sm)?;
    for eps in [0.02, 0.05, 0.1] {
        match escape_threshold(&fast, &sm, p, eps, eps * p / 4.0) {
            Ok(e) => println!(
                "eps={eps}: lambda_bar={} l_bar={:.3} min drift below {:.4e}",
                e.lambda_bar, e.l_bar, e.min_drift_below
            ),
            Err(e) => println!("eps={eps}: {e}"),
        }
    }
    match escape_threshold(&bounded, &sm, p, 0.05, 0.05 * p / 4.0) {
        Ok(e) => println!("bounded: {e:?}"),
        Err(e) => println!("bounded: {e}"),
    }
    Ok(())
}
