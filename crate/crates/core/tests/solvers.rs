use sis_wagner::rng::seeded;
use sis_wagner::solvers::*;
use sis_wagner::wagner::{Mode, Schedule};
use sis_wagner::zqlin::{random_instance, NormKind, SisInstance, ZqMatrix};
use sis_wagner::Error;

fn inst(rows: &[Vec<u64>], q: u64, beta: Option<u64>, norm: NormKind) -> SisInstance {
    SisInstance::new(ZqMatrix::from_rows(rows, q).unwrap(), beta, norm).unwrap()
}

#[test]
fn verdicts() {
    let a = inst(&[vec![1, 1]], 3, Some(2), NormKind::Linf);
    assert_eq!(verify(&a, &[1, 2]), Verdict::Valid);
    assert_eq!(verify(&a, &[0, 0]), Verdict::ZeroVector);
    assert_eq!(verify(&a, &[3, 0]), Verdict::NormExceeded);
    assert_eq!(verify(&a, &[1, 0]), Verdict::NotInLattice);
    assert_eq!(verify(&a, &[1]), Verdict::NotInLattice);
}

#[test]
fn multiples_of_q_are_trivial_in_l2() {
    let a = inst(&[vec![1, 1]], 3, None, NormKind::L2);
    assert_eq!(verify(&a, &[3, 0]), Verdict::ZeroVector);
    assert_eq!(verify(&a, &[3, -3]), Verdict::ZeroVector);
    assert_eq!(verify(&a, &[1, 2]), Verdict::Valid);
    let linf = inst(&[vec![1, 1]], 3, None, NormKind::Linf);
    assert_eq!(verify(&linf, &[3, 0]), Verdict::Valid);
}

#[test]
fn norm_bounds_are_exact() {
    assert!(NormBound::new(3.0).admits_l2(&[2, 2, 1]));
    assert!(!NormBound::new(2.9999999999999996).admits_l2(&[2, 2, 1]));
    assert!(NormBound::new(2.5).admits_linf(&[2, -2]));
    assert!(!NormBound::new(2.5).admits_linf(&[-3]));
    assert!(!NormBound::new(-1.0).admits_l2(&[0]));
    assert!(NormBound::new(0.0).admits(&[0, 0], NormKind::L2));
}

fn desk_opts() -> SolveOptions {
    // beta = 64 at m = 20, q = 257
    SolveOptions { f: 257.0 / 64.0 * 20f64.ln().sqrt(), ..Default::default() }
}

#[test]
fn heuristic_inf_round_trip() {
    let mut solved = 0;
    for seed in 0..10 {
        let a = random_instance(8, 20, 257, seed).unwrap();
        let rep = solve_sis_inf(&a, &desk_opts(), &mut seeded(seed)).unwrap();
        assert!((rep.norm_bound_used - 64.0).abs() < 1e-9);
        assert!(!rep.trivial_regime);
        assert_eq!(rep.mode, Mode::HeuristicGaussian);
        for s in &rep.solutions {
            assert_eq!(verify(&a, &s.x), Verdict::Valid);
            assert!(s.norm_value <= 64.0);
        }
        assert!(rep.solutions.windows(2).all(|w| w[0].norm_value <= w[1].norm_value));
        solved += rep.success as usize;
    }
    assert!(solved >= 9, "{solved}/10");
}

#[test]
fn instance_beta_caps_the_bound() {
    let mut a = random_instance(8, 20, 257, 3).unwrap();
    a.beta = Some(60);
    let rep = solve_sis_inf(&a, &desk_opts(), &mut seeded(3)).unwrap();
    assert_eq!(rep.norm_bound_used, 60.0);
    assert!(rep.solutions.iter().all(|s| verify(&a, &s.x) == Verdict::Valid));
}

#[test]
fn trivial_regime_is_flagged() {
    let a = random_instance(4, 12, 257, 1).unwrap();
    let rep = solve_sis_inf(&a, &SolveOptions { f: 1.0, ..Default::default() }, &mut seeded(1)).unwrap();
    assert!(rep.trivial_regime);
    assert!(rep.warnings.iter().any(|w| w.contains("trivial")));
}

#[test]
fn l2_solutions_are_nonzero_mod_q() {
    let mut a = random_instance(4, 16, 257, 2).unwrap();
    a.norm = NormKind::L2;
    let rep = solve_sis_l2(&a, &SolveOptions { f: 4.0, ..Default::default() }, &mut seeded(2)).unwrap();
    assert!(rep.success);
    for s in &rep.solutions {
        assert_eq!(verify(&a, &s.x), Verdict::Valid);
        assert!(s.x.iter().any(|&v| v % 257 != 0));
    }
}

#[test]
fn provable_preconditions() {
    let a = random_instance(2, 6, 5, 1).unwrap();
    let opts = SolveOptions { mode: Mode::ProvableGaussian, epsilon: 1.0 / 6.0, ..Default::default() };
    assert!(matches!(solve_sis_inf(&a, &opts, &mut seeded(0)), Err(Error::PreconditionViolated(_))));
    let c = random_instance(2, 6, 16, 1).unwrap();
    let opts = SolveOptions { mode: Mode::ProvableGaussian, ..Default::default() };
    assert!(matches!(solve_sis_inf(&c, &opts, &mut seeded(0)), Err(Error::PreconditionViolated(_))));
}

#[test]
fn explicit_schedule_tiny_provable() {
    let a = random_instance(2, 6, 5, 4).unwrap();
    let s = Schedule::manual(Mode::ProvableGaussian, 12, 8.0, vec![2], vec![2]);
    let opts = SolveOptions { f: 1.0, schedule: Some(s), max_solutions: 100, ..Default::default() };
    let rep = solve_sis_inf(&a, &opts, &mut seeded(4)).unwrap();
    assert_eq!(rep.stats[0].stage_sizes, vec![36, 12]);
    assert!(rep.solutions.iter().all(|s| verify(&a, &s.x) == Verdict::Valid));
}

#[test]
fn bad_options() {
    let a = random_instance(2, 6, 5, 1).unwrap();
    let bad = SolveOptions { f: 0.0, ..Default::default() };
    assert!(matches!(solve_sis_inf(&a, &bad, &mut seeded(0)), Err(Error::PreconditionViolated(_))));
    assert!(solve_sis_l2(&a, &SolveOptions::default(), &mut seeded(0)).is_err());
}

#[test]
fn report_serializes() {
    let a = random_instance(8, 20, 257, 5).unwrap();
    let rep = solve_sis_inf(&a, &desk_opts(), &mut seeded(5)).unwrap();
    let v: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
    assert_eq!(v["mode"], "heuristic_gaussian");
    assert_eq!(v["success"], rep.success);
}
