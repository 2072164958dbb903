//! Optimal project across beliefs for a bounded and a fast payoff.
//!
//! `cargo run --release --example policy_table`

use phack::optimizer::{feasible_bracket, optimal_project, policy_table};
use phack::payoff::PayoffSpec;
use phack::success::SuccessModel;

fn main() -> phack::Result<()> {
    let sm = SuccessModel::default();
    let u_grid: Vec<f64> = (2..=8)
        .map(|k| 1.0 - 10f64.powi(-k))
        .chain([0.1, 0.3, 0.5, 0.7, 0.9])
        .collect();
    for ps in [PayoffSpec::bounded_exp(1.0, 8.0)?, PayoffSpec::fast_reciprocal(1.0, 2.0, sm)?] {
        println!("{ps:?}");
        let table = policy_table(&ps, &sm, &u_grid);
        for r in &table.rows {
            match &r.point {
                Some(p) => println!(
                    "  u={:<12} l*={:<12.5e} EP*={:<10.5} foc={:.1e} tie_gap={:?}",
                    r.u, p.l_star, p.ep_star, p.foc_scaled, p.tie_gap
                ),
                None => println!("  u={} failed: {}", r.u, r.error.as_deref().unwrap_or("")),
            }
        }
        println!("  l* spans [{:?}, {:?}]", table.l_min, table.l_max);
    }
    let ps = PayoffSpec::bounded_exp(1.0, 8.0)?;
    let br = feasible_bracket(&ps, &sm, 0.5)?;
    let pt = optimal_project(&ps, &sm, 0.5)?;
    println!("u=0.5: bracket [{:.4}, {:.4}], l*={:.6}", br.l_lo, br.l_hi, pt.l_star);
    Ok(())
}
