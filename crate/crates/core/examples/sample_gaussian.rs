//! Exact integer Gaussian sampling checked against the enumerated pmf.
//!
//! cargo run --release --example sample_gaussian -- [s] [c] [draws]

use std::collections::HashMap;

use sis_wagner::dgauss::{empirical_similarity, gaussian_pmf, sample_z, sample_zn, GaussParam, ScaledIntegers};
use sis_wagner::rng::seeded;

fn main() -> sis_wagner::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let s = args.first().copied().unwrap_or(2.0);
    let c = args.get(1).copied().unwrap_or(0.3);
    let draws = args.get(2).map(|&d| d as usize).unwrap_or(1_000_000);

    let param = GaussParam::scalar(s, c)?;
    let mut rng = seeded(1);
    let xs: Vec<i64> = (0..draws).map(|_| sample_z(&param, &mut rng)).collect::<sis_wagner::Result<_>>()?;
    let pmf: HashMap<i64, f64> =
        gaussian_pmf(&ScaledIntegers::new(1, 1.0), &param, None)?.probs.into_iter().map(|(k, v)| (k[0], v)).collect();

    let mut counts: HashMap<i64, usize> = HashMap::new();
    for &x in &xs {
        *counts.entry(x).or_default() += 1;
    }
    let mut keys: Vec<_> = pmf.iter().filter(|(_, &p)| p > 1e-3).map(|(&k, _)| k).collect();
    keys.sort();
    for k in keys {
        let f = counts.get(&k).copied().unwrap_or(0) as f64 / draws as f64;
        println!("{k:>4} {:.5} {f:.5}", pmf[&k]);
    }
    let rep = empirical_similarity(&xs, &pmf)?;
    println!("chi2 p = {:.4}, max |freq - pmf| = {:.2e}", rep.chi2_p, rep.max_abs_freq_dev);

    let wide = GaussParam::new(5.0, &[0.5, -0.25, 0.0])?;
    println!("three draws from D_Z^3,5,c: {:?}", (0..3).map(|_| sample_zn(&wide, 3, &mut rng)).collect::<Result<Vec<_>, _>>()?);
    Ok(())
}
