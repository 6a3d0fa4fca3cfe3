//! Symbolic Pauli-string algebra: products, commutators and the
//! Hilbert–Schmidt inner product, cross-checked against dense matrices.

use otto_cd::operator::{commutator, hs_inner, OperatorSum, PauliString};

fn main() -> otto_cd::Result<()> {
    let xy: PauliString = "XY".parse()?;
    let zz: PauliString = "ZZ".parse()?;
    println!("{xy} * {zz} = {}", xy.multiply(&zz)?);
    println!("commute: {}", xy.commutes_with(&zz));

    let a = OperatorSum::from_strings(2, ["XI".parse::<PauliString>()?, "YZ".parse()?])?;
    let b = OperatorSum::from(zz);
    let c = commutator(&a, &b)?;
    println!("[{a}, {b}] = {c}");
    println!("<a, a> = {}", hs_inner(&a, &a)?);

    let dense = a.to_dense()? * b.to_dense()? - b.to_dense()? * a.to_dense()?;
    let err = (dense - c.to_dense()?).norm();
    println!("dense cross-check error: {err:e}");
    Ok(())
}
