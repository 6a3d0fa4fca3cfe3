//! Energetic cost nu * integral Tr[H_CD^2] dt of one sweep against its
//! duration and the system size.

use otto_cd::cycle::{sweep_cost, AgpCache, CycleConfig};

fn main() -> otto_cd::Result<()> {
    let n_max: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(4);
    let cache = AgpCache::new();
    for n in 1..=n_max {
        let cfg = CycleConfig::reference(n, n.min(4), 1.0)?;
        let costs: Vec<String> = [1.0, 2.0, 5.0, 10.0, 40.0]
            .iter()
            .map(|&tau| Ok(format!("{:.3e}", sweep_cost(&cfg, tau, &cache)?)))
            .collect::<otto_cd::Result<_>>()?;
        println!("N={n} p={}: cost at tau = 1, 2, 5, 10, 40: {}", cfg.p, costs.join(", "));
    }
    Ok(())
}
