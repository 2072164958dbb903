//! Information from a successful project at a few beliefs, and the bound it
//! never reaches.

use phack::model::{information, information_derivative, information_sup, update_on_success, BeliefState};

fn main() -> phack::Result<()> {
    println!("{:>6} {:>10} {:>12} {:>12} {:>10}", "u", "l", "I(u,l)", "dI/dl", "sup");
    for u in [0.1, 0.5, 0.9, 0.999] {
        let sup = information_sup(u)?;
        for l in [1e-3, 0.5, 1.0, 2.0, 1e3] {
            println!(
                "{u:>6} {l:>10} {:>12.6} {:>12.4e} {:>10.4}",
                information(u, l)?.value(),
                information_derivative(u, l)?,
                sup.m
            );
        }
    }
    for u in [0.9, 0.999] {
        let post = update_on_success(&BeliefState::from_prob(u)?, 10.0)?;
        println!("success of l=10 at u={u}: weight on A becomes {:.2}%", 100.0 * post.u());
    }
    Ok(())
}
