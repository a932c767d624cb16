//! Encodes A, lets the fastest servers compute their coded products and
//! decodes A x from what they hold.

use coded_compute::codec::{
    build_storage_plan, reduce_decode, server_storage_matrix, SchemeParams,
};
use coded_compute::gf::FieldMatrix;
use coded_compute::rational::ratio;
use coded_compute::stragglers::trial_rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = SchemeParams::new(5, 3, ratio(2, 5), 6, 3, 6);
    let plan = build_storage_plan(&params)?;
    let f = plan.field().clone();
    let mut rng = trial_rng(11, 0);
    let a = f.random_matrix(params.rows, params.cols, &mut rng);
    let x = f.random_matrix(params.cols, 1, &mut rng);
    let truth = f.mat_mul(&a, &x)?;

    // servers 1, 2 and 4 finish first
    let mut values = Vec::new();
    for k in [1, 2, 4] {
        let stored = server_storage_matrix(&plan, k, &a)?;
        let products = f.mat_mul(&stored, &x)?;
        for (i, &row) in plan.server_rows(k).iter().enumerate() {
            if values.iter().all(|&(r, _)| r != row) {
                values.push((row, products[(i, 0)]));
            }
        }
    }
    println!(
        "{} distinct coded products for m = {}",
        values.len(),
        params.rows
    );
    let decoded: FieldMatrix = reduce_decode(&plan, &values)?;
    println!("decoded matches A x: {}", decoded == truth);
    assert_eq!(decoded, truth);
    Ok(())
}
