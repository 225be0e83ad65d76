use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;

use proptest::prelude::*;
use sis_wagner::chain::*;
use sis_wagner::dgauss::{empirical_similarity, eta_zn_bound_inverse, GaussParam, sample_zn};
use sis_wagner::rng::seeded;
use sis_wagner::wagner::{Mode, Schedule};
use sis_wagner::zqlin::{matvec_mod, random_systematic_instance, NormKind, SisInstance, ZqMatrix};
use sis_wagner::Error;

fn inst(rows: &[&[u64]], q: u64) -> SisInstance {
    let rows: Vec<Vec<u64>> = rows.iter().map(|r| r.to_vec()).collect();
    SisInstance::new(ZqMatrix::from_rows(&rows, q).unwrap(), None, NormKind::Linf).unwrap()
}

#[test]
fn chain_bookkeeping() {
    let a = random_systematic_instance(4, 10, 17, &mut seeded(1)).unwrap();
    let s = Schedule::manual(Mode::ProvableGaussian, 100, 4.0, vec![17, 17], vec![2, 2]);
    let stages = build_chain(&a, &s).unwrap();
    assert_eq!(stages.iter().map(|s| s.kappa).collect::<Vec<_>>(), vec![2, 4]);
    assert_eq!(stages[1].head_len(), 8);
    assert_eq!(stages[1].out_len(), 10);
    let bad = Schedule::manual(Mode::ProvableGaussian, 100, 4.0, vec![17, 17], vec![3, 2]);
    assert!(matches!(build_chain(&a, &bad), Err(Error::BlockSumMismatch { .. })));
}

#[test]
fn chain_needs_systematic_form() {
    let a = inst(&[&[1, 0]], 5);
    assert!(!a.systematic);
    assert!(build_stages(&a, &[1], &[5], false).is_err());
}

#[test]
fn integer_lift_examples() {
    let a = inst(&[&[1, 1, 1]], 5);
    let st = &build_stages(&a, &[1], &[5], false).unwrap()[0];
    assert_eq!(lift_integer(st, &[0, 0]).unwrap(), vec![0]);
    assert_eq!(lift_integer(st, &[1, 2]).unwrap(), vec![-3]);
    assert_eq!(matvec_mod(&a.a, &[1, 2, -3], 5).unwrap(), vec![0]);

    let a = inst(&[&[1, 1, 1, 0], &[1, 2, 0, 1]], 5);
    let stages = build_stages(&a, &[1, 1], &[5, 5], false).unwrap();
    assert!(matches!(lift_integer(&stages[1], &[1, 2, 0]), Err(Error::NotInLattice)));
    assert_eq!(lift_integer(&stages[1], &[1, 2, -3]).unwrap(), vec![-5]);
}

#[test]
fn lift_records_projection_and_coset() {
    let a = inst(&[&[1, 1]], 4);
    let st = &build_stages(&a, &[1], &[2], false).unwrap()[0];
    let mut rng = seeded(2);
    let n = 200_000;
    let mut even = 0;
    for _ in 0..n {
        let sv = dglift(st, &[-1], 8.0, &mut rng).unwrap();
        assert_eq!(sv.head, vec![-1]);
        assert_eq!(sv.y_last(st), vec![1]);
        assert_eq!(sv.tail_num[0], 2 + 4 * sv.k[0] as i128);
        assert_eq!(coset_label(&sv)[0], sv.k[0].rem_euclid(2) as u64);
        even += usize::from(sv.label[0] == 0);
    }
    // k ~ D_{Z, 4, -1/2}
    let w = |off: f64| (-200..=200).map(|j| (-PI * ((2 * j) as f64 + off).powi(2) / 16.0).exp()).sum::<f64>();
    let p_even = w(0.5) / (w(0.5) + w(1.5));
    let freq = even as f64 / n as f64;
    assert!((freq - p_even).abs() < 4.0 * (p_even * (1.0 - p_even) / n as f64).sqrt(), "{freq} vs {p_even}");
}

#[test]
fn lift_rejects_narrow_width_and_foreign_vectors() {
    let a = inst(&[&[1, 1, 1, 0], &[1, 2, 0, 1]], 5);
    let stages = build_stages(&a, &[1, 1], &[2, 2], false).unwrap();
    assert!(matches!(dglift(&stages[0], &[0, 0], 1.0, &mut seeded(0)), Err(Error::WidthTooSmall { .. })));
    assert!(matches!(dglift(&stages[1], &[1, 2, 0], 9.0, &mut seeded(0)), Err(Error::NotInLattice)));
}

#[test]
fn equal_labels_difference_into_the_next_lattice() {
    let mut rng = seeded(3);
    for _ in 0..50 {
        let a = random_systematic_instance(3, 7, 11, &mut rng).unwrap();
        let stages = build_stages(&a, &[2, 1], &[3, 5], false).unwrap();
        let st = &stages[0];
        let mut by_label: HashMap<Vec<u64>, StagedVector> = HashMap::new();
        let p = GaussParam::new(12.0, &[]).unwrap();
        for _ in 0..200 {
            let x = sample_zn(&p, 4, &mut rng).unwrap();
            let sv = dglift(st, &x, 12.0, &mut rng).unwrap();
            if let Some(prev) = by_label.get(&sv.label) {
                let v = combine(st, prev, &sv);
                assert!(st.contains(&v));
                assert!(stages[1].contains_prev(&v));
            } else {
                by_label.insert(sv.label.clone(), sv);
            }
        }
    }
}

#[test]
fn every_label_is_realized() {
    let a = random_systematic_instance(2, 5, 7, &mut seeded(4)).unwrap();
    let st = &build_stages(&a, &[2], &[4], false).unwrap()[0];
    assert_eq!(st.quotient_size(), Some(16));
    let mut rng = seeded(5);
    let mut seen = HashSet::new();
    for _ in 0..5000 {
        seen.insert(dglift(st, &[0, 0, 0], 10.0, &mut rng).unwrap().label);
    }
    assert_eq!(seen.len(), 16);
}

#[test]
fn uniform_stand_in_is_centered() {
    let a = random_systematic_instance(3, 8, 13, &mut seeded(6)).unwrap();
    let z = [4i64, -7, 100, 3, -1];
    let tail = lift_centered(&a.a_prime(), &z, 0..3);
    let mut x = z.to_vec();
    x.extend(&tail);
    assert!(tail.iter().all(|&t| t > -7 && t <= 6));
    assert_eq!(matvec_mod(&a.a, &x, 13).unwrap(), vec![0, 0, 0]);
}

/// `D_{Lambda'_1, s}` on `(z; tail_num)` with `tail_num = p y`.
fn lifted_pmf(a1: &[u64], q: i64, p: i64, s: f64) -> HashMap<Vec<i64>, f64> {
    let r = (12.0 * s).ceil() as i64;
    let mut out = HashMap::new();
    let mut total = 0.0;
    for z0 in -r..=r {
        for z1 in -r..=r {
            let base = -(p * (a1[0] as i64 * z0 + a1[1] as i64 * z1)).rem_euclid(q);
            let (lo, hi) = (-(p * r), p * r);
            let mut t = base + ((lo - base).div_euclid(q)) * q;
            while t <= hi {
                let y = t as f64 / p as f64;
                let w = (-PI * ((z0 * z0 + z1 * z1) as f64 + y * y) / (s * s)).exp();
                if w > 1e-30 {
                    out.insert(vec![z0, z1, t], w);
                    total += w;
                }
                t += q;
            }
        }
    }
    out.values_mut().for_each(|v| *v /= total);
    out
}

#[test]
fn lifted_distribution_matches_enumeration() {
    let (q, p, s) = (5u64, 2u64, 6.0);
    let a = random_systematic_instance(2, 4, q, &mut seeded(7)).unwrap();
    let st = &build_stages(&a, &[1, 1], &[p, p], false).unwrap()[0];
    let eps = eta_zn_bound_inverse(1, s * p as f64 / q as f64).max(eta_zn_bound_inverse(2, s));
    let pmf = lifted_pmf(a.a_prime().row(0), q as i64, p as i64, s);
    let param = GaussParam::new(s, &[]).unwrap();
    let mut rng = seeded(8);
    let samples: Vec<Vec<i64>> = (0..1_000_000)
        .map(|_| {
            let x = sample_zn(&param, 2, &mut rng).unwrap();
            let sv = dglift(st, &x, s, &mut rng).unwrap();
            vec![sv.head[0], sv.head[1], sv.tail_num[0] as i64]
        })
        .collect();
    let rep = empirical_similarity(&samples, &pmf).unwrap();
    assert!(rep.within_family(3.0 * eps, 1e-3), "{rep:?}");
    assert!(rep.chi2_p >= 1e-3, "{rep:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn staged_vector_invariants(seed in any::<u64>(), z in prop::collection::vec(-50i64..50, 4), p in 2u64..=13) {
        let q = 13;
        let a = random_systematic_instance(2, 6, q, &mut seeded(seed)).unwrap();
        let stages = build_stages(&a, &[1, 1], &[p, p], false).unwrap();
        let s = stages[0].min_lift_width() * 1.5;
        let sv = dglift(&stages[0], &z, s, &mut seeded(seed ^ 1)).unwrap();
        let y = lift_integer(&stages[0], &z).unwrap();
        prop_assert_eq!(&sv.head, &z);
        prop_assert_eq!(sv.y_last(&stages[0]), y.clone());
        for j in 0..sv.tail_num.len() {
            prop_assert_eq!(sv.tail_num[j], p as i128 * y[j] + q as i128 * sv.k[j] as i128);
            prop_assert!(sv.label[j] < p);
            prop_assert_eq!(sv.label[j], sv.k[j].rem_euclid(p as i64) as u64);
            prop_assert_eq!((sv.tail_num[j] - p as i128 * y[j]).rem_euclid(q as i128), 0);
        }
        let exact = sv.to_rationals(&stages[0]);
        prop_assert_eq!(exact.len(), 5);
    }
}
