//! Counter-diabatic work at tau = 1: it vanishes once the ansatz is complete.

use otto_cd::cycle::{run_cycle_cached, AgpCache, CycleConfig};

fn main() -> otto_cd::Result<()> {
    let cache = AgpCache::new();
    for n in 1..=4 {
        let row: Vec<String> = (1..=n)
            .map(|p| {
                let cfg = CycleConfig::reference(n, p, 1.0)?.with_steps(1000.0, None);
                Ok(format!("p={p}: {:+.3e}", run_cycle_cached(&cfg, &cache)?.wcd_total))
            })
            .collect::<otto_cd::Result<_>>()?;
        println!("N={n}  W_CD  {}", row.join("  "));
    }
    Ok(())
}
