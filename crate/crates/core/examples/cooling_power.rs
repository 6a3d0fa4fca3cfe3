//! Cooling power against ansatz order at tau = 40, with the adiabatic limit.
//! Pass the largest system size as the first argument (default 4).

use otto_cd::cycle::{sweep, CycleConfig};

fn main() -> otto_cd::Result<()> {
    let n_max: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(4);
    let mut grid = Vec::new();
    for n in 2..=n_max {
        for p in [0, 1, 2, 4] {
            grid.push(CycleConfig::reference(n, p.min(n), 40.0)?.with_steps(200.0, Some(1e-7)));
        }
    }
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    for out in sweep(&grid, workers) {
        let r = out.result?;
        println!(
            "N={} p={}: J = {:.6e}, J_ad = {:.6e}, converged {}",
            r.n,
            r.p,
            r.j,
            r.qc_adiabatic / (r.tau1 + r.tau2 + r.tau3 + r.tau4),
            r.converged
        );
    }
    Ok(())
}
