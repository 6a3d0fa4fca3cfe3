//! Variational gauge potential along the sweep for a small chain, compared
//! with the exact spectral construction.

use otto_cd::agp::{basis_size, build_basis, exact_agp_default, solve_agp};
use otto_cd::model::{dh0_dtheta, h0_at, EndpointParams};

fn main() -> otto_cd::Result<()> {
    let n = 3;
    let params = EndpointParams::reference(n)?;
    let d = dh0_dtheta(&params);
    println!("ansatz sizes for N={n}: {:?}", (1..=n).map(|p| basis_size(n, p)).collect::<Vec<_>>());
    for p in 1..=n {
        let basis = build_basis(n, p)?;
        for theta in [0.25, 0.5, 0.75] {
            let h = h0_at(&params, theta)?;
            let sol = solve_agp(&basis, &h, &d)?;
            let exact = exact_agp_default(&h, &d)?;
            let dev = (basis.combine(&sol.coefficients).to_dense()? - exact).norm();
            println!(
                "p={p} theta={theta}: S = {:.6e}, rank {}/{}, |A - A_exact| = {dev:.3e}",
                sol.residual_action,
                sol.rank,
                basis.len()
            );
        }
    }
    Ok(())
}
