//! Single-spin Otto refrigerator with exact counter-diabatic driving against
//! its closed forms.

use otto_cd::cycle::{lz_cop, run_cycle, CycleConfig};

fn main() -> otto_cd::Result<()> {
    let (h, b, tc, th) = (0.2f64, 0.5f64, 0.2f64, 0.4f64);
    let closed = [
        -h * (h / tc).tanh(),
        -b * (h / tc).tanh(),
        -b * (b / th).tanh(),
        -h * (b / th).tanh(),
    ];
    for tau in [0.5, 1.0, 5.0] {
        for p in [0, 1] {
            let r = run_cycle(&CycleConfig::reference(1, p, tau)?)?;
            let err = r.energies.iter().zip(&closed).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            println!(
                "tau={tau:<4} p={p}: Qc = {:+.6e}, CoP = {}, |E - closed form| = {err:.1e}",
                r.qc,
                r.cop.map_or("undefined".into(), |c| format!("{c:.8}"))
            );
        }
    }
    println!("Landau–Zener CoP h/(b-h) = {}", lz_cop(h, b)?);
    println!("Carnot CoP = {}", tc / (th - tc));
    Ok(())
}
