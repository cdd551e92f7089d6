//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Run with `cargo test -p latin-transversals --test acceptance`.

use std::collections::HashSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigUint;

use latin_transversals::bounds::{
    big_ln, integral_closed_form_d2, integral_quadrature, upper_bound_log, verify_claim1, verify_claim2,
};
use latin_transversals::construction::{
    build_l, build_l_with, pad_to, relaxed_params, sample_non_special_transversal, special_transversals, BuildOptions,
};
use latin_transversals::counting::{count_exact, count_exact_with, enumerate_transversals, estimate_sis, estimate_sis_with, CountOptions, SisOrder};
use latin_transversals::experiment::{parse_config, pick_transversal, run_experiment};
use latin_transversals::hypercube::{
    count_transversals_brute, enumerate_hypercube_transversals, from_square, group_hypercube, transversal_from_square, Group,
    HypercubeTransversal, LatinHypercube01,
};
use latin_transversals::rng::derive_seed;
use latin_transversals::sampler::uniform_random_square;
use latin_transversals::{cyclic_square, validate_latin, LatinSquare};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Counts transversals by walking all `n!` column permutations.
fn permutation_oracle(sq: &LatinSquare) -> u64 {
    fn go(sq: &LatinSquare, row: usize, cols: &mut [bool], syms: &mut [bool]) -> u64 {
        if row == sq.order() {
            return 1;
        }
        let mut total = 0;
        for c in 0..sq.order() {
            if cols[c] {
                continue;
            }
            cols[c] = true;
            let s = sq.symbol_index(row, c);
            if !syms[s] {
                syms[s] = true;
                total += go(sq, row + 1, cols, syms);
                syms[s] = false;
            }
            cols[c] = false;
        }
        total
    }
    let n = sq.order();
    go(sq, 0, &mut vec![false; n], &mut vec![false; n])
}

fn oracle_counts() -> Outcome {
    let start = Instant::now();
    let mut got = Vec::new();
    for n in 1..=7 {
        let c = cyclic_square(n).map_err(|e| e.to_string())?;
        let exact = count_exact(&c).map_err(|e| e.to_string())?.count;
        let oracle = permutation_oracle(&c);
        ensure(exact == BigUint::from(oracle), || format!("C_{n}: {exact} vs oracle {oracle}"))?;
        got.push(oracle);
    }
    ensure(got == [1, 0, 3, 0, 15, 0, 133], || format!("unexpected counts {got:?}"))?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("C_1..C_7 = {got:?} in {elapsed:.2?}"))
}

fn cross_representation() -> Outcome {
    let mut squares: Vec<LatinSquare> = (1..=5).map(|n| cyclic_square(n).unwrap()).collect();
    squares.extend((0..50).map(|seed| uniform_random_square(5, derive_seed(0xacc2, &[seed])).unwrap()));
    for (i, sq) in squares.iter().enumerate() {
        let brute = count_transversals_brute(&from_square(sq).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let exact = count_exact(sq).map_err(|e| e.to_string())?.count;
        ensure(brute == exact, || format!("square {i}: brute {brute} vs exact {exact}"))?;
    }
    Ok(format!("{} squares agree", squares.len()))
}

fn estimator_calibration() -> Outcome {
    let mut within = 0;
    for i in 0..50 {
        let sq = uniform_random_square(7, derive_seed(0xacc3, &[i])).unwrap();
        let exact = count_exact(&sq).map_err(|e| e.to_string())?.count;
        let exact: f64 = exact.to_string().parse().unwrap();
        let est = estimate_sis(&sq, 10_000, derive_seed(0xacc3, &[i, 1])).map_err(|e| e.to_string())?;
        if (est.mean - exact).abs() <= 4.0 * est.stderr {
            within += 1;
        }
    }
    ensure(within >= 45, || format!("{within}/50 within 4 se"))?;
    Ok(format!("{within}/50 within 4 se"))
}

fn construction_validity() -> Outcome {
    let params = relaxed_params(3, 1).map_err(|e| e.to_string())?;
    for seed in 0..20 {
        let bs = build_l(&params, seed).map_err(|e| e.to_string())?;
        let report = validate_latin(&bs.l);
        ensure(report.valid, || format!("seed {seed}: {} violations", report.violations.len()))?;
        let ts = special_transversals(&bs);
        let want = params.ell * params.n * params.k;
        ensure(ts.len() == want && want == 54, || format!("seed {seed}: {} special transversals, want {want}", ts.len()))?;
        let mut seen = HashSet::new();
        for t in &ts {
            ensure(t.is_transversal_of(&bs.l), || format!("seed {seed}: not a transversal"))?;
            for &(r, c) in &t.positions {
                ensure(bs.is_special(r, c), || format!("seed {seed}: ({r}, {c}) is not special"))?;
                ensure(seen.insert((r, c)), || format!("seed {seed}: ({r}, {c}) shared"))?;
            }
        }
    }
    Ok("20 seeds; 54 disjoint special transversals each".into())
}

fn padding_validity() -> Outcome {
    let bs = build_l(&relaxed_params(3, 1).unwrap(), 5).map_err(|e| e.to_string())?;
    let mut valid = 0;
    for target in [84, 135] {
        let padded = pad_to(&bs, target).map_err(|e| e.to_string())?;
        ensure(padded.lprime.order() == target && validate_latin(&padded.lprime).valid, || format!("order {target} invalid"))?;
        for i in 0..100 {
            let t = sample_non_special_transversal(&bs, derive_seed(0xacc5, &[target as u64, i]), 1_000_000)
                .ok_or_else(|| format!("no non-special transversal for sample {i}"))?;
            if padded.extend(&t).is_transversal_of(&padded.lprime) {
                valid += 1;
            }
        }
    }
    ensure(valid == 200, || format!("{valid}/200 extensions valid"))?;
    Ok("orders 84 and 135 Latin; 100/100 extensions valid at each".into())
}

fn check_every_hyperplane(h: &LatinHypercube01, x: &HypercubeTransversal, what: &str) -> Result<usize, String> {
    for i in 0..h.order() {
        let c1 = verify_claim1(h, x, i).map_err(|e| e.to_string())?;
        let c2 = verify_claim2(h, x, i).map_err(|e| e.to_string())?;
        ensure(c1.claim1_ok, || format!("{what}, hyperplane {i}: |U| = {} > {}", c1.u_size, c1.claim1_bound))?;
        ensure(c2.claim2_ok, || format!("{what}, hyperplane {i}: counterexample {:?}", c2.counterexample))?;
    }
    Ok(h.order())
}

fn claims() -> Outcome {
    let mut triples = 0;
    for n in [3, 5, 7] {
        let sq = cyclic_square(n).unwrap();
        let h = from_square(&sq).unwrap();
        for t in enumerate_transversals(&sq, None).map_err(|e| e.to_string())? {
            triples += check_every_hyperplane(&h, &transversal_from_square(&sq, &t), &format!("C_{n}"))?;
        }
    }
    let opts = CountOptions::default();
    for n in 5..=9u64 {
        let mut pairs = 0;
        let mut attempt = 0;
        while pairs < 100 {
            let seed = derive_seed(0xacc6, &[n, attempt]);
            attempt += 1;
            let sq = uniform_random_square(n as usize, seed).unwrap();
            let Some(t) = pick_transversal(&sq, seed, &opts) else { continue };
            triples += check_every_hyperplane(&from_square(&sq).unwrap(), &transversal_from_square(&sq, &t), &format!("order {n} seed {seed}"))?;
            pairs += 1;
        }
    }
    for group in [Group::Cyclic, Group::Elementary2] {
        let h = group_hypercube(4, 3, group).unwrap();
        for x in enumerate_hypercube_transversals(&h).map_err(|e| e.to_string())? {
            triples += check_every_hyperplane(&h, &x, &format!("{group:?} cube"))?;
        }
    }
    Ok(format!("{triples} (square, transversal, hyperplane) triples, zero failures"))
}

fn upper_bound() -> Outcome {
    let mut corpus: Vec<LatinSquare> = (5..=11).map(|n| cyclic_square(n).unwrap()).collect();
    corpus.extend((0..200u64).map(|i| uniform_random_square(5 + (i % 6) as usize, derive_seed(0xacc7, &[i])).unwrap()));
    let mut worst_gap = f64::INFINITY;
    for sq in &corpus {
        let n = sq.order() as u64;
        let log_count = big_ln(&count_exact(sq).map_err(|e| e.to_string())?.count);
        let bound = upper_bound_log(2, n).map_err(|e| e.to_string())?.log_upper;
        ensure(log_count <= bound, || format!("order {n}: log T = {log_count} > {bound}"))?;
        if log_count.is_finite() {
            worst_gap = worst_gap.min(bound - log_count);
        }
    }
    let bs = build_l(&relaxed_params(3, 1).unwrap(), 2024).map_err(|e| e.to_string())?;
    let est = estimate_sis_with(&bs.l, 100_000, 81, SisOrder::MostConstrained, true).map_err(|e| e.to_string())?;
    let bound = upper_bound_log(2, 81).unwrap().log_upper;
    ensure(est.log_mean.is_finite(), || "every walk died on the N = 81 square".into())?;
    ensure(est.log_mean - 3.0 * est.log_stderr <= bound, || format!("N = 81: {} ± {} vs {bound}", est.log_mean, est.log_stderr))?;
    Ok(format!(
        "{} corpus squares (min slack {worst_gap:.3}); N = 81 estimate {:.2} ± {:.2} <= {bound:.2}",
        corpus.len(),
        est.log_mean,
        est.log_stderr
    ))
}

fn bound_asymptotics() -> Outcome {
    let mut ratios = Vec::new();
    for n in [100u64, 1_000, 10_000, 100_000] {
        let nf = n as f64;
        ratios.push(upper_bound_log(2, n).unwrap().log_upper / (nf * (nf.ln() - 2.0)));
    }
    ensure(ratios.windows(2).all(|w| w[1] < w[0]), || format!("not decreasing: {ratios:?}"))?;
    ensure(ratios[3] < 1.2, || format!("ratio at 1e5 is {}", ratios[3]))?;
    let mut worst = 0.0f64;
    for n in 5..=100 {
        worst = worst.max((integral_closed_form_d2(n).unwrap() - integral_quadrature(2, n).unwrap()).abs());
    }
    for n in [1_000, 10_000, 100_000] {
        worst = worst.max((integral_closed_form_d2(n).unwrap() - integral_quadrature(2, n).unwrap()).abs());
    }
    ensure(worst < 1e-8, || format!("quadrature off by {worst:e}"))?;
    Ok(format!("ratios {:.4?}; quadrature within {worst:.1e}", ratios))
}

const CONFIG: &str = r#"{
  "seed": 2024,
  "instances": [
    {"source": {"kind": "cyclic", "n": [3, 5, 7, 9]}, "count": "exact", "bounds": true, "claims": {"pairs": 3}},
    {"source": {"kind": "random", "n": [6, 8, 10]}, "count": "exact", "bounds": true, "claims": {"pairs": 3}},
    {"source": {"kind": "random", "n": 12}, "count": {"estimate": {"samples": 4000}}, "bounds": true},
    {"source": {"kind": "construct", "b": 3, "k": 1}, "count": {"estimate": {"samples": 2000}}, "bounds": true}
  ]
}"#;

fn determinism() -> Outcome {
    let mut config = parse_config(CONFIG).map_err(|e| e.to_string())?;
    let a = run_experiment(&config).map_err(|e| e.to_string())?;
    let b = run_experiment(&config).map_err(|e| e.to_string())?;
    config.parallel = false;
    let c = run_experiment(&config).map_err(|e| e.to_string())?;
    ensure(a.ok, || "experiment invariants failed".into())?;
    for (label, other) in [("rerun", &b), ("serial", &c)] {
        ensure(a.to_csv() == other.to_csv(), || format!("{label}: CSV differs"))?;
        ensure(a.to_json(None) == other.to_json(None), || format!("{label}: JSON differs"))?;
    }

    let params = relaxed_params(3, 1).unwrap();
    let par = build_l_with(&params, 77, &BuildOptions { parallel: true, ..BuildOptions::default() }).map_err(|e| e.to_string())?;
    let ser = build_l_with(&params, 77, &BuildOptions { parallel: false, ..BuildOptions::default() }).map_err(|e| e.to_string())?;
    ensure(par.l == ser.l, || "construction differs serial vs parallel".into())?;
    let sq = uniform_random_square(10, 3).unwrap();
    let cp = count_exact_with(&sq, &CountOptions::default()).map_err(|e| e.to_string())?;
    let cs = count_exact_with(&sq, &CountOptions::serial()).map_err(|e| e.to_string())?;
    ensure(cp.count == cs.count && cp.nodes_visited == cs.nodes_visited, || "exact count differs".into())?;
    for order in [SisOrder::Fixed, SisOrder::MostConstrained] {
        let ep = estimate_sis_with(&sq, 5000, 9, order, true).map_err(|e| e.to_string())?;
        let es = estimate_sis_with(&sq, 5000, 9, order, false).map_err(|e| e.to_string())?;
        ensure(ep == es, || format!("{order:?} estimate differs"))?;
    }
    Ok(format!("{} report rows byte-identical across reruns and serial/parallel", a.rows.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("oracle counts", oracle_counts),
        ("cross-representation consistency", cross_representation),
        ("estimator calibration", estimator_calibration),
        ("construction validity", construction_validity),
        ("padding validity", padding_validity),
        ("claims hold", claims),
        ("non-asymptotic upper bound", upper_bound),
        ("bound asymptotics", bound_asymptotics),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {}. {name}: {detail} [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}. {name}: {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
