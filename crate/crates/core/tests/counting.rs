use std::collections::HashSet;

use num_bigint::BigUint;
use proptest::prelude::*;

use latin_transversals::counting::*;
use latin_transversals::sampler::uniform_random_square;
use latin_transversals::{cyclic_square, relabel, Error, LatinSquare};

/// Counts transversals by trying every column permutation.
fn naive_count(sq: &LatinSquare) -> u64 {
    fn go(sq: &LatinSquare, row: usize, cols: &mut Vec<bool>, syms: &mut Vec<bool>) -> u64 {
        let n = sq.order();
        if row == n {
            return 1;
        }
        let mut total = 0;
        for c in 0..n {
            let s = sq.symbol_index(row, c);
            if cols[c] || syms[s] {
                continue;
            }
            cols[c] = true;
            syms[s] = true;
            total += go(sq, row + 1, cols, syms);
            cols[c] = false;
            syms[s] = false;
        }
        total
    }
    let n = sq.order();
    go(sq, 0, &mut vec![false; n], &mut vec![false; n])
}

fn count(sq: &LatinSquare) -> BigUint {
    count_exact(sq).unwrap().count
}

#[test]
fn cyclic_counts() {
    // Number of transversals of the cyclic group table, orders 1..=13.
    let known: [u64; 13] = [1, 0, 3, 0, 15, 0, 133, 0, 2025, 0, 37851, 0, 1030367];
    for (i, &want) in known.iter().enumerate() {
        let n = i + 1;
        assert_eq!(count(&cyclic_square(n).unwrap()), BigUint::from(want), "order {n}");
    }
}

#[test]
fn naive_oracle_agrees_on_small_squares() {
    for n in 1..=8 {
        let c = cyclic_square(n).unwrap();
        assert_eq!(count(&c), BigUint::from(naive_count(&c)));
        for seed in 0..5 {
            let r = uniform_random_square(n, seed).unwrap();
            assert_eq!(count(&r), BigUint::from(naive_count(&r)), "order {n} seed {seed}");
        }
    }
}

#[test]
fn enumeration_matches_count() {
    for seed in 0..5 {
        let sq = uniform_random_square(7, seed).unwrap();
        let all = enumerate_transversals(&sq, None).unwrap();
        assert_eq!(BigUint::from(all.len()), count(&sq));
        assert!(all.iter().all(|t| t.is_transversal_of(&sq)));
        let distinct: HashSet<Vec<usize>> = all.iter().map(|t| t.columns()).collect();
        assert_eq!(distinct.len(), all.len());
    }
    let c = cyclic_square(9).unwrap();
    assert_eq!(enumerate_transversals(&c, Some(10)).unwrap().len(), 10);
}

#[test]
fn serial_and_parallel_are_identical() {
    for seed in 0..3 {
        let sq = uniform_random_square(9, seed).unwrap();
        let par = count_exact_with(&sq, &CountOptions::default()).unwrap();
        let ser = count_exact_with(&sq, &CountOptions::serial()).unwrap();
        assert_eq!(par.count, ser.count);
        assert_eq!(par.nodes_visited, ser.nodes_visited);
        let ep = estimate_sis_with(&sq, 3000, seed, SisOrder::Fixed, true).unwrap();
        let es = estimate_sis_with(&sq, 3000, seed, SisOrder::Fixed, false).unwrap();
        assert_eq!(ep, es);
    }
}

#[test]
fn guard_and_invalid_input() {
    let big = cyclic_square(DEFAULT_GUARD + 1).unwrap();
    assert!(matches!(count_exact(&big), Err(Error::TooLarge { .. })));
    let bad = LatinSquare::from_rows(&[vec![0, 1], vec![0, 1]]).unwrap();
    assert!(count_exact(&bad).is_err());
    assert!(estimate_sis(&cyclic_square(3).unwrap(), 1, 0).is_err());
}

#[test]
fn wide_masks_past_sixty_four() {
    let c = uniform_random_square(65, 1).unwrap();
    let t = random_transversal(&c, |_, _| true, 1, 200_000).unwrap();
    assert!(t.is_transversal_of(&c));
}

#[test]
fn estimator_tracks_exact_counts() {
    let mut within = 0;
    for seed in 0..20 {
        let sq = uniform_random_square(7, seed).unwrap();
        let exact = naive_count(&sq) as f64;
        let est = estimate_sis(&sq, 10_000, seed).unwrap();
        if (est.mean - exact).abs() <= 4.0 * est.stderr {
            within += 1;
        }
    }
    assert!(within >= 18, "{within}/20 within 4 standard errors");
}

#[test]
fn estimator_orders_agree_on_average() {
    let sq = uniform_random_square(8, 4).unwrap();
    let exact = naive_count(&sq) as f64;
    for order in [SisOrder::Fixed, SisOrder::MostConstrained] {
        let est = estimate_sis_with(&sq, 20_000, 7, order, true).unwrap();
        assert!((est.mean - exact).abs() <= 4.0 * est.stderr, "{order:?}: {} vs {exact}", est.mean);
    }
}

#[test]
fn estimator_is_exact_without_transversals() {
    let est = estimate_sis(&cyclic_square(6).unwrap(), 500, 0).unwrap();
    assert_eq!(est.mean, 0.0);
    assert_eq!(est.log_mean, f64::NEG_INFINITY);
}

fn permutation(n: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn count_is_isotopy_invariant(n in 1usize..=7, seed in any::<u64>()) {
        let sq = uniform_random_square(n, seed).unwrap();
        let moved = relabel(&sq, &permutation(n, seed ^ 1), &permutation(n, seed ^ 2), &permutation(n, seed ^ 3)).unwrap();
        prop_assert!(moved.is_latin());
        prop_assert_eq!(count(&moved), count(&sq));
    }

    #[test]
    fn exact_matches_oracle(n in 1usize..=6, seed in any::<u64>()) {
        let sq = uniform_random_square(n, seed).unwrap();
        prop_assert_eq!(count(&sq), BigUint::from(naive_count(&sq)));
        prop_assert_eq!(has_transversal(&sq).unwrap(), naive_count(&sq) > 0);
    }
}
