//! Provable mode end to end on a toy instance, with its smoothing certificate.
//!
//! cargo run --release --example provable_tiny

use sis_wagner::rng::seeded;
use sis_wagner::wagner::{certify_smoothing, choose_provable_params, gaussian_wagner, Mode, Schedule, WagnerOptions};
use sis_wagner::zqlin::{matvec_mod, random_systematic_instance};

fn main() -> sis_wagner::Result<()> {
    let mut rng = seeded(3);
    let inst = random_systematic_instance(2, 6, 5, &mut rng)?;
    println!("A = {:?}", inst.a.to_rows());

    let schedule = Schedule::manual(Mode::ProvableGaussian, 12, 8.0, vec![2], vec![2]);
    let (out, stats) = gaussian_wagner(&inst, &schedule, &mut rng, &WagnerOptions::default())?;
    println!("list sizes {:?}", stats.stage_sizes);
    for x in &out[..4] {
        println!("{x:?} -> {:?}", matvec_mod(&inst.a, x, 5)?);
    }
    let cert = certify_smoothing(&inst, &schedule)?;
    println!("stage eps {:?}, output delta {:.3e}", cert.stage_epsilon, cert.output_delta);

    // The same machinery at scale only schedules; the lists are astronomically large.
    let eps = 15.0 * (-14.96f64).exp();
    let big = choose_provable_params(20, 40, 257, 4.0, eps)?;
    println!("n=20 q=257: r={} p={:?} b={:?} log2 N={:.1}", big.r, big.p, big.b, big.log2_n);
    Ok(())
}
