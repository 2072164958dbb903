//! The two payoff families, their values along I, and pairwise growth order.

use phack::payoff::{growth_compare, PayoffSpec};
use phack::success::SuccessModel;

fn main() -> phack::Result<()> {
    let sm = SuccessModel::default();
    let specs = [
        ("bounded c=1 gamma=8", PayoffSpec::bounded_exp(1.0, 8.0)?),
        ("fast c=1 d=2", PayoffSpec::fast_reciprocal(1.0, 2.0, sm)?),
        ("fast c=1 d=3", PayoffSpec::fast_reciprocal(1.0, 3.0, sm)?),
    ];
    for i in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 400.0] {
        let row: Vec<String> = specs
            .iter()
            .map(|(_, s)| match s.eval(i) {
                Ok(v) => format!("{v:>14.6e}"),
                Err(_) => format!("{:>14}", format!("ln={:.1}", s.ln_eval(i))),
            })
            .collect();
        println!("I={i:>6}: {}", row.join(" "));
    }
    for (na, a) in &specs {
        for (nb, b) in &specs {
            if na != nb {
                println!("{na} vs {nb}: {:?}", growth_compare(a, b));
            }
        }
    }
    Ok(())
}
