//! Shortest stroke duration at which the bare cycle refrigerates, located by
//! bisection. Arguments: N (default 4), lower and upper bracket.

use otto_cd::cycle::{refrigeration_threshold, CycleConfig};

fn main() -> otto_cd::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let n = args.first().map_or(4, |&x| x as usize);
    let (lo, hi) = (args.get(1).copied().unwrap_or(1.0), args.get(2).copied().unwrap_or(60.0));
    let base = CycleConfig::reference(n, 0, lo)?.with_steps(200.0, None);
    match refrigeration_threshold(&base, lo, hi, 0.5)? {
        Some(found) => {
            for (tau, qc) in &found.evaluations {
                println!("tau = {tau:7.3}  Qc = {qc:+.6e}");
            }
            println!("N={n}: Qc changes sign at tau = {:.2} (bracket {:?})", found.tau, found.bracket);
        }
        None => println!("N={n}: no sign change of Qc on [{lo}, {hi}]"),
    }
    Ok(())
}
