//! Heuristic SIS solving on small random instances.
//!
//! cargo run --release --example solve_heuristic -- [runs]

use std::time::Instant;

use sis_wagner::rng::seeded;
use sis_wagner::solvers::{solve_sis_inf, verify, SolveOptions, Verdict};
use sis_wagner::zqlin::{random_instance, NormKind, SisInstance};

fn main() -> sis_wagner::Result<()> {
    let runs: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100);
    let (n, m, q) = (8, 20, 257);
    let opts = SolveOptions { f: 4.0 * (m as f64).ln().sqrt(), ..SolveOptions::default() };
    let t = Instant::now();
    let mut ok = 0;
    for seed in 0..runs {
        let base = random_instance(n, m, q, seed)?;
        let inst = SisInstance::new(base.a, Some(q / 4), NormKind::Linf)?;
        let report = solve_sis_inf(&inst, &opts, &mut seeded(seed ^ 0x5eed))?;
        if report.success {
            assert!(report.solutions.iter().all(|s| verify(&inst, &s.x) == Verdict::Valid));
            ok += 1;
        }
        if seed == 0 {
            let s = &report.schedule;
            println!("N = 2^{}, w = {:?}, p = {:?}, b = {:?}, ell = {}", s.log2_n, s.weight, s.p, s.b, s.ell);
            if let Some(best) = report.solutions.first() {
                println!("shortest: {:?} (norm {})", best.x, best.norm_value);
            }
        }
    }
    println!("{ok}/{runs} solved in {:.2?}", t.elapsed());
    Ok(())
}
