use std::time::Instant;

use proptest::prelude::*;
use sis_wagner::estimator::*;
use sis_wagner::Error;

fn log2_binom(n: usize, k: usize) -> f64 {
    (1..=k).map(|i| ((n - k + i) as f64 / i as f64).log2()).sum()
}

#[test]
fn min_weight_examples() {
    assert_eq!(min_weight(10, 0.0).unwrap(), 0);
    assert_eq!(min_weight(1280, 269.9).unwrap(), 37);
    assert_eq!(min_weight(1536, 343.0).unwrap(), 47);
    assert!(matches!(min_weight(2, 3.2), Err(Error::Infeasible(_))));
    assert!(min_weight(0, 1.0).is_err());
    // 2^1 C(3,1) = 6
    assert_eq!(min_weight_count(3, 6).unwrap(), 1);
    assert_eq!(min_weight_count(3, 7).unwrap(), 2);
    assert_eq!(min_weight_count(3, 12).unwrap(), 2);
    assert!(min_weight_count(3, 13).is_err());
}

#[test]
fn dilithium2_schedule() {
    let q = &dilithium_presets()[0];
    let plan = heuristic_schedule(q, 269.9).unwrap();
    assert_eq!(plan.w, 37);
    let st = &plan.stages[39];
    assert_eq!(st.i, 40);
    assert!((st.sigma - 178277.2).abs() < 0.1, "{}", st.sigma);
    assert!((st.ell - 28.9).abs() < 0.05, "{}", st.ell);
}

#[test]
fn sigma_doubles_every_two_stages() {
    let q = &dilithium_presets()[0];
    let plan = heuristic_schedule(q, 269.9).unwrap();
    assert_eq!(plan.stages[9].sigma / plan.sigma0, 32.0);
    for w in plan.stages.windows(2) {
        assert!(w[1].b > w[0].b);
        assert!(w[1].p < w[0].p);
        assert!(w[1].ell < w[0].ell);
    }
    assert!(plan.stages.last().unwrap().ell >= 0.0);
}

#[test]
fn success_probability_limits() {
    let q = CostQuery::new(10, 20, 1000, 100, Variant::Rounding);
    assert!((success_probability(&q, 1e-9, 0.0) - 1.0).abs() < 1e-12);
    let half = CostQuery::new(10, 20, 1000, 500, Variant::Rounding);
    let a = log_success_probability(&half, 30.0, 0.0);
    let b = log_success_probability(&half, 30.0, 0.0) + 0.0 * log_success_probability(&half, 30.0, 7.0);
    assert_eq!(a, b);
    let with_ell = log_success_probability(&half, 30.0, 7.0);
    let unclamped = (20.0 - 7.0) * ((-statrs::function::erf::erfc(500.0 / (30.0 * 2f64.sqrt()))).ln_1p());
    assert!((with_ell - unclamped).abs() < 1e-15);
}

#[test]
fn preset_ratios() {
    let d = dilithium_presets();
    let rows: Vec<_> = d.iter().map(|c| (c.n, c.m, c.q, c.beta)).collect();
    assert_eq!(rows, vec![(1024, 2304, 8380417, 350209), (1536, 3072, 8380417, 724481), (2048, 4096, 8380417, 769537)]);
    let ratios: Vec<String> = d.iter().map(|c| format!("{:.1}", c.q as f64 / c.beta as f64)).collect();
    assert_eq!(ratios, ["23.9", "11.6", "10.9"]);
    assert!(preset("dilithium6").is_none());
    assert_eq!(preset("shine").unwrap(), shine_preset());
}

#[test]
fn dilithium_table() {
    let expect = [(269.9, 37, 40), (343.0, 47, 42), (450.2, 61, 42)];
    for (q, (l, w, r)) in dilithium_presets().iter().zip(expect) {
        let t = Instant::now();
        let rep = estimate(q).unwrap();
        assert!(t.elapsed().as_secs_f64() < 10.0);
        assert!((rep.log2_n - l).abs() <= 2.0, "{rep:?}");
        assert!(rep.w.abs_diff(w) <= 2 && rep.r_prime.abs_diff(r) <= 2, "{rep:?}");
    }
}

#[test]
fn level2_row() {
    let rep = estimate(&dilithium_presets()[0]).unwrap();
    assert_eq!(rep.csv_row(), "269.9,37,0.1700,40,178277.2,28.9,quantization");
    assert!(rep.feasible);
}

#[test]
fn optimum_respects_stopping_rule() {
    for q in dilithium_presets().iter().chain([&shine_preset()]) {
        let rep = estimate(q).unwrap();
        assert!(rep.log2_n + rep.log2_p_success > -1.0);
        let k = q.m - q.n;
        assert!(rep.w as f64 + log2_binom(k, rep.w) >= rep.log2_n - 1e-9);
        assert!(rep.w == 0 || (rep.w - 1) as f64 + log2_binom(k, rep.w - 1) < rep.log2_n);
        // one grid step earlier no abort point succeeds
        let prev = heuristic_schedule(q, rep.log2_n - q.grid).unwrap();
        assert!(prev
            .stages
            .iter()
            .all(|st| rep.log2_n - q.grid + log_success_probability(q, st.sigma, st.ell) / std::f64::consts::LN_2 <= -1.0));
    }
}

#[test]
fn quantization_never_costs_more() {
    for c in dilithium_presets().iter().chain([&shine_preset()]) {
        let quant = estimate(c).unwrap();
        let round = estimate(&CostQuery { variant: Variant::Rounding, ..c.clone() }).unwrap();
        assert!(quant.log2_n <= round.log2_n, "{quant:?} {round:?}");
    }
}

#[test]
fn shine_example() {
    // the model here gives about 2^106, far from 2^54
    let rep = estimate(&shine_preset()).unwrap();
    assert_eq!(rep.csv_row(), "105.6,27,0.5196,16,133.0,57.6,quantization");
}

#[test]
fn query_validation() {
    assert!(estimate(&CostQuery::new(10, 20, 100, 50, Variant::Rounding)).is_err());
    assert!(estimate(&CostQuery::new(10, 10, 100, 10, Variant::Rounding)).is_err());
    assert!(heuristic_schedule(&CostQuery::new(10, 20, 3, 1, Variant::Rounding), 10.0).is_err());
}

#[test]
fn csv_output() {
    let reps: Vec<_> = dilithium_presets().iter().map(|q| estimate(q).unwrap()).collect();
    let csv = to_csv(&reps);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("log2N,w,sigma0,r_prime,sigma_rprime,ell,variant"));
    assert_eq!(lines.count(), 3);
    let v: serde_json::Value = serde_json::to_value(&reps[0]).unwrap();
    assert_eq!(v["log2N"], 269.9);
    assert_eq!(v["variant"], "quantization");
}

#[test]
fn variant_parsing() {
    assert_eq!("rounding".parse::<Variant>().unwrap(), Variant::Rounding);
    assert_eq!("quantization".parse::<Variant>().unwrap(), Variant::Quantization);
    assert!("lattice".parse::<Variant>().is_err());
    assert!(Variant::Quantization.kappa() > Variant::Rounding.kappa());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn larger_beta_is_never_harder(n in 20usize..120, extra in 20usize..120, b1 in 5u64..240, db in 1u64..200) {
        let q = 1000;
        let b2 = (b1 + db).min(499);
        prop_assume!(b2 > b1);
        let lo = estimate(&CostQuery::new(n, n + extra, q, b1, Variant::Quantization));
        let hi = estimate(&CostQuery::new(n, n + extra, q, b2, Variant::Quantization));
        if let (Ok(lo), Ok(hi)) = (lo, hi) {
            prop_assert!(hi.log2_n <= lo.log2_n, "{lo:?} {hi:?}");
        }
    }
}
