mod common;

use avdim_core::cfs::*;
use common::*;
use proptest::prelude::*;
use rand::Rng;

fn random_problem(n: usize, d: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let ya: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
    let yv: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
    let weights: Vec<(f64, f64)> = (0..d).map(|_| (r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect();
    let x = (0..n)
        .map(|i| weights.iter().map(|(wa, wv)| wa * ya[i] + wv * yv[i] + r.random_range(-1.5..1.5)).collect())
        .collect();
    (x, ya, yv)
}

fn column(x: &[Vec<f64>], j: usize) -> Vec<f64> {
    x.iter().map(|row| row[j]).collect()
}

fn names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("f{j}")).collect()
}

#[test]
fn tables_match_pearson_oracle() {
    let (x, ya, yv) = random_problem(30, 6, 3);
    let t = correlation_tables(&x, &ya, &yv).unwrap();
    for j in 0..6 {
        let cj = column(&x, j);
        let expected = (ref_pearson(&cj, &ya).abs() + ref_pearson(&cj, &yv).abs()) / 2.0;
        assert!((t.r_fc[j] - expected).abs() < 1e-12);
        for k in 0..6 {
            assert!((t.r_ff[j][k] - ref_pearson(&cj, &column(&x, k))).abs() < 1e-12);
        }
        assert_eq!(t.r_ff[j][j], 1.0);
    }
}

#[test]
fn orthogonal_feature_has_no_class_correlation() {
    let mut r = rng(17);
    let n = 25;
    let ya: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    let yv: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    // Gram-Schmidt a random vector against {1, ya, yv}.
    let centre = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| x - m).collect::<Vec<f64>>()
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let project_out = |v: &mut Vec<f64>, u: &[f64]| {
        let c = dot(v, u) / dot(u, u);
        v.iter_mut().zip(u).for_each(|(a, b)| *a -= c * b);
    };
    let a = centre(&ya);
    let mut b = centre(&yv);
    project_out(&mut b, &a);
    let mut z = centre(&(0..n).map(|_| r.random_range(-1.0..1.0)).collect::<Vec<f64>>());
    project_out(&mut z, &a);
    project_out(&mut z, &b);
    let x: Vec<Vec<f64>> = (0..n).map(|i| vec![z[i], ya[i]]).collect();
    let t = correlation_tables(&x, &ya, &yv).unwrap();
    assert!(t.r_fc[0].abs() < 1e-12, "{}", t.r_fc[0]);
}

#[test]
fn substituted_merit() {
    let t = CorrelationTables {
        r_fc: vec![0.6, 0.8],
        r_ff: vec![vec![1.0, 0.5], vec![0.5, 1.0]],
    };
    let m = merit(&[0, 1], &t).unwrap();
    assert!((m - 1.4 / 3f64.sqrt()).abs() < 1e-12);
}

#[test]
fn duplicate_pair_is_picked_last() {
    let t = CorrelationTables {
        r_fc: vec![0.9, 0.9, 0.5],
        r_ff: vec![vec![1.0, 1.0, 0.0], vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
    };
    // Enumerating every pair: the best one is {0, 2}.
    let mut best_pair = (0, 0, f64::MIN);
    for a in 0..3 {
        for b in a + 1..3 {
            let m = ref_merit(&[a, b], &t.r_fc, &t.r_ff);
            if m > best_pair.2 {
                best_pair = (a, b, m);
            }
        }
    }
    assert_eq!((best_pair.0, best_pair.1), (0, 2));
    let sel = greedy_forward_select(&t, &names(3), 20);
    assert_eq!(sel.indices, vec![0, 2, 1]);
    let hand = [0.9, 1.4 / 2f64.sqrt(), 2.3 / 5f64.sqrt()];
    for (m, h) in sel.merit_trace.iter().zip(hand) {
        assert!((m - h).abs() < 1e-12);
    }
    assert_eq!(sel.plateau_at, None);
}

#[test]
fn greedy_steps_match_brute_force() {
    for seed in 0..20 {
        let (x, ya, yv) = random_problem(40, 8, 100 + seed);
        let t = correlation_tables(&x, &ya, &yv).unwrap();
        let sel = greedy_forward_select(&t, &names(8), 20);
        assert_eq!(sel.indices.len(), 8);
        let mut current: Vec<usize> = Vec::new();
        for (step, &chosen) in sel.indices.iter().enumerate() {
            let mut best = (usize::MAX, f64::MIN);
            for j in (0..8).filter(|j| !current.contains(j)) {
                let mut s = current.clone();
                s.push(j);
                let m = ref_merit(&s, &t.r_fc, &t.r_ff);
                if m > best.1 {
                    best = (j, m);
                }
            }
            assert_eq!(chosen, best.0, "seed {seed} step {step}");
            assert!((sel.merit_trace[step] - best.1).abs() < 1e-12);
            current.push(chosen);
        }
        let argmax = (0..8).max_by(|&a, &b| t.r_fc[a].total_cmp(&t.r_fc[b]).then(b.cmp(&a))).unwrap();
        assert_eq!(sel.indices[0], argmax);
    }
}

fn tables_strategy() -> impl Strategy<Value = CorrelationTables> {
    (2usize..9, any::<u64>()).prop_map(|(d, seed)| {
        let (x, ya, yv) = random_problem(20, d, seed);
        correlation_tables(&x, &ya, &yv).unwrap()
    })
}

proptest! {
    #[test]
    fn merit_ignores_subset_order(t in tables_strategy(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut subset: Vec<usize> = (0..t.dim()).collect();
        let mut r = rng(seed);
        subset.shuffle(&mut r);
        subset.truncate(r.random_range(1..=t.dim()));
        let a = merit(&subset, &t).unwrap();
        subset.reverse();
        prop_assert!((a - merit(&subset, &t).unwrap()).abs() < 1e-12);
        prop_assert!((a - ref_merit(&subset, &t.r_fc, &t.r_ff)).abs() < 1e-12);
    }

    #[test]
    fn singleton_merit_is_class_correlation(t in tables_strategy()) {
        for j in 0..t.dim() {
            prop_assert_eq!(merit(&[j], &t).unwrap(), t.r_fc[j]);
        }
    }

    #[test]
    fn selection_is_deterministic_and_unique(t in tables_strategy(), cap in 1usize..25) {
        let a = greedy_forward_select(&t, &names(t.dim()), cap);
        prop_assert_eq!(&a, &greedy_forward_select(&t, &names(t.dim()), cap));
        prop_assert_eq!(a.indices.len(), cap.min(t.dim()));
        prop_assert_eq!(a.merit_trace.len(), a.indices.len());
        let mut sorted = a.indices.clone();
        sorted.sort();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), a.indices.len());
    }

    #[test]
    fn tables_are_bounded_and_symmetric(t in tables_strategy()) {
        for j in 0..t.dim() {
            prop_assert!((0.0..=1.0).contains(&t.r_fc[j]));
            for k in 0..t.dim() {
                prop_assert_eq!(t.r_ff[j][k], t.r_ff[k][j]);
                prop_assert!(t.r_ff[j][k].abs() <= 1.0);
            }
        }
    }
}
