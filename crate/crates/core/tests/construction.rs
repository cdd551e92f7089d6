use std::collections::HashSet;

use latin_transversals::construction::*;
use latin_transversals::sampler::SamplerConfig;
use latin_transversals::{Error, LatinSquare, Transversal};

fn small() -> ConstructionParams {
    relaxed_params(3, 1).unwrap()
}

fn assert_disjoint(ts: &[Transversal]) {
    let mut seen = HashSet::new();
    for t in ts {
        for &p in &t.positions {
            assert!(seen.insert(p), "cell {p:?} used twice");
        }
    }
}

#[test]
fn build_is_latin_and_deterministic() {
    let p = small();
    for seed in 0..5 {
        let a = build_l(&p, seed).unwrap();
        assert!(a.l.is_latin(), "seed {seed}");
        assert_eq!(a.l.order(), 81);
        let b = build_l(&p, seed).unwrap();
        assert_eq!(a.l, b.l);
    }
}

#[test]
fn serial_and_parallel_builds_agree() {
    let p = small();
    let par = build_l_with(&p, 9, &BuildOptions { parallel: true, ..BuildOptions::default() }).unwrap();
    let ser = build_l_with(&p, 9, &BuildOptions { parallel: false, ..BuildOptions::default() }).unwrap();
    assert_eq!(par.l, ser.l);
}

#[test]
fn blocks_follow_the_structure_square() {
    let bs = build_l(&small(), 3).unwrap();
    let (n, m) = (bs.params.n, bs.params.block_order());
    for i in 0..n {
        for j in 0..n {
            let block = bs.subsquare(i, j);
            let start = bs.alphabet_start(bs.s.symbol_index(i, j));
            assert!(block.cells().iter().all(|&v| (start..start + m as u32).contains(&v)));
            for r in 0..m {
                for c in 0..m {
                    assert_eq!(bs.l.get(i * m + r, j * m + c), block.get(r, c));
                }
            }
            if bs.is_special_block(i, j) {
                assert_eq!(block, &bs.designated.with_offset(start));
            }
        }
    }
}

#[test]
fn random_blocks_vary_with_seed() {
    let p = small();
    let n = p.n;
    for seed in 0..10 {
        let a = build_l(&p, 2 * seed).unwrap();
        let b = build_l(&p, 2 * seed + 1).unwrap();
        let differs = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).any(|(i, j)| {
            !a.is_special_block(i, j) && a.subsquare(i, j) != b.subsquare(i, j)
        });
        assert!(differs, "seeds {} and {} gave identical random blocks", 2 * seed, 2 * seed + 1);
    }
}

#[test]
fn special_transversals_are_disjoint_and_special() {
    let bs = build_l(&small(), 5).unwrap();
    let ts = special_transversals(&bs);
    assert_eq!(ts.len(), 54);
    for t in &ts {
        assert!(t.is_transversal_of(&bs.l));
        assert!(t.positions.iter().all(|&(r, c)| bs.is_special(r, c)));
    }
    assert_disjoint(&ts);
}

#[test]
fn full_size_structure() {
    let p = derive_params(7).unwrap();
    let (s, specials) = build_structure(&p, 0).unwrap();
    assert_eq!(s.order(), 49);
    assert_eq!(specials.len(), 42);
    for t in &specials {
        assert!(t.is_transversal_of(&s));
    }
    assert_disjoint(&specials);
}

#[test]
fn full_size_special_transversals() {
    // Random blocks barely matter here; a short chain keeps this fast.
    let opts = BuildOptions { sampler: SamplerConfig { moves: Some(200) }, parallel: true };
    let bs = build_l_with(&derive_params(7).unwrap(), 1, &opts).unwrap();
    assert_eq!(bs.l.order(), 2401);
    let ts = special_transversals(&bs);
    assert_eq!(ts.len(), 2058);
    assert!(ts.iter().all(|t| t.is_transversal_of(&bs.l)));
    assert_disjoint(&ts);
}

fn check_padding(bs: &BlockStructure, target: usize) {
    let padded = pad_to(bs, target).unwrap();
    let big = bs.params.order;
    let s = target - big;
    assert!(padded.lprime.is_latin());
    assert_eq!(padded.lprime.order(), target);
    assert_eq!(padded.s, s);
    // Corner occupies the new symbols and keeps its transversal.
    for a in 0..s {
        for b in 0..s {
            assert_eq!(padded.lprime.get(big + a, big + b), padded.corner.get(a, b) + big as u32);
        }
    }
    assert!(padded.corner_transversal.is_transversal_of(&padded.corner));
    // Cells of L outside the consumed transversals are untouched.
    let consumed: HashSet<(usize, usize)> = padded.consumed_specials.iter().flat_map(|t| t.positions.iter().copied()).collect();
    for r in 0..big {
        for c in 0..big {
            if !consumed.contains(&(r, c)) {
                assert_eq!(padded.lprime.get(r, c), bs.l.get(r, c));
            }
        }
    }
    for (t, special) in padded.consumed_specials.iter().enumerate() {
        for &(x, y) in &special.positions {
            assert_eq!(padded.lprime.get(x, y), (big + t) as u32);
        }
    }
    let mut found = 0;
    for seed in 0..100 {
        let t = sample_non_special_transversal(bs, seed, 1_000_000).expect("non-special transversal");
        assert!(t.is_transversal_of(&bs.l));
        assert!(padded.extend(&t).is_transversal_of(&padded.lprime));
        found += 1;
    }
    assert_eq!(found, 100);
}

#[test]
fn padding_smallest_and_largest() {
    let bs = build_l(&small(), 17).unwrap();
    check_padding(&bs, 84);
    check_padding(&bs, 135);
}

#[test]
fn padding_even_corner() {
    let bs = build_l(&small(), 4).unwrap();
    let padded = pad_to(&bs, 81 + 10).unwrap();
    assert!(padded.lprime.is_latin());
    assert!(padded.corner_transversal.is_transversal_of(&padded.corner));
}

#[test]
fn padding_limits() {
    let bs = build_l(&small(), 0).unwrap();
    assert_eq!(pad_to(&bs, 83).unwrap_err(), Error::STooSmall(2));
    assert_eq!(pad_to(&bs, 81).unwrap_err(), Error::STooSmall(0));
    assert!(matches!(pad_to(&bs, 136), Err(Error::STooLarge { s: 55, max: 54 })));
}

#[test]
fn corner_is_a_valid_square() {
    for s in [3, 4, 6, 54] {
        let (sq, t): (LatinSquare, Transversal) = corner_square(s).unwrap();
        assert!(sq.is_latin());
        assert!(t.is_transversal_of(&sq));
    }
}
