//! Success probabilities of the default model, their peaks and validation.

use phack::success::SuccessModel;

fn main() -> phack::Result<()> {
    let sm = SuccessModel::default();
    let (la, lb) = sm.peaks();
    let (sa, sb) = sm.sups();
    println!("alpha={} beta={} kappa={}", sm.alpha, sm.beta, sm.kappa);
    println!("p_A peaks at l={la:.4} ({sa:.4}), p_B at l={lb:.4} ({sb:.4})");
    for k in -6..=6 {
        let l = 10f64.powf(k as f64 / 2.0);
        let (pa, pb) = sm.success_probs(l)?;
        println!("l={l:>10.3e}  p_A={pa:.6e}  p_B={pb:.6e}");
    }
    for (p, eps) in [(0.5, 0.01), (0.5, 0.5), (1.0, 0.0)] {
        let report = sm.validate(p, eps);
        if report.is_valid() {
            println!("p={p} eps={eps}: valid");
        } else {
            for v in &report.violations {
                println!("p={p} eps={eps}: {v}");
            }
        }
    }
    Ok(())
}
