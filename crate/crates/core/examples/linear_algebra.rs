//! Systematic form over Z_q and brute-force lambda_1 of a small q-ary lattice.

use sis_wagner::dgauss::lambda1_inf_lower_bound;
use sis_wagner::zqlin::{lambda1_inf_bruteforce, random_instance, systematic_form};

fn main() -> sis_wagner::Result<()> {
    let inst = random_instance(3, 8, 101, 0)?;
    let (sys, perm) = systematic_form(&inst)?;
    println!("A  = {:?}", inst.a.to_rows());
    println!("A' = {:?} (column order {:?})", sys.a_prime().to_rows(), perm.perm);
    let l = lambda1_inf_bruteforce(&random_instance(2, 6, 101, 1)?.a, 50_000_000)?;
    println!("lambda1 = {l}, bound {:.3}", lambda1_inf_lower_bound(2, 6, 101)?);
    Ok(())
}
