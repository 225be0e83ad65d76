//! The rounding variant of Wagner's algorithm and its infinity-norm bound.
//!
//! cargo run --release --example naive_rounding

use sis_wagner::rng::seeded;
use sis_wagner::wagner::{choose_naive_params, naive_norm_bound, naive_wagner_with_stats, Mode, Schedule, WagnerOptions};
use sis_wagner::zqlin::{linf, random_systematic_instance};

fn main() -> sis_wagner::Result<()> {
    let s = choose_naive_params(512, 1 << 20, 32.0)?;
    println!("n=512 q=2^20 f=32: r={} log2 N={:.2} first p={}", s.r, s.log2_n, s.p[0]);

    let mut rng = seeded(4);
    let inst = random_systematic_instance(4, 12, 16, &mut rng)?;
    let small = Schedule::manual(Mode::NaiveRounding, 200, 0.0, vec![8, 4], vec![2, 2]);
    let (out, stats) = naive_wagner_with_stats(&inst, &small, &mut rng, &WagnerOptions::default())?;
    let worst = out.iter().map(|x| linf(x)).max().unwrap_or(0);
    println!(
        "{} outputs ({} zero), max |x|_inf = {worst}, bound {}",
        stats.outputs,
        stats.zero_outputs,
        naive_norm_bound(16, &small.p)
    );
    Ok(())
}
