//! Arithmetic in GF(2^8) and a Vandermonde system solved back exactly.

use coded_compute::gf::{FieldMatrix, GaloisField};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f = GaloisField::new(8)?;
    let a = f.element(0x57)?;
    let b = f.element(0x83)?;
    println!("GF(2^8) with polynomial {:#x}", f.polynomial());
    println!(
        "{:#04x} + {:#04x} = {:#04x}",
        a.value(),
        b.value(),
        f.add(a, b).value()
    );
    println!(
        "{:#04x} * {:#04x} = {:#04x}",
        a.value(),
        b.value(),
        f.mul(a, b).value()
    );
    let inv = f.inv(a).expect("nonzero");
    println!("inverse of {:#04x} is {:#04x}", a.value(), inv.value());

    // distinct points give a full-rank Vandermonde matrix
    let points: Vec<_> = (1..=5u16).map(|v| f.element(v)).collect::<Result<_, _>>()?;
    let v = f.vandermonde(&points, 5);
    println!("rank of 5x5 Vandermonde: {}", f.mat_rank(&v));

    let x = FieldMatrix::from_values(5, 1, &[9, 8, 7, 6, 5])?;
    let y = f.mat_mul(&v, &x)?;
    let back = f.mat_solve(&v, &y)?;
    println!(
        "solved back: {:?}",
        back.column_vec(0)
            .iter()
            .map(|e| e.value())
            .collect::<Vec<_>>()
    );
    assert_eq!(back, x);
    Ok(())
}
