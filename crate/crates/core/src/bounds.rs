//! The entropy upper bound on transversal counts, made executable.
//!
//! For an order-`n`, dimension-`d` Latin hypercube `A` the number of
//! transversals satisfies
//!
//! ```text
//! log T(A) <= n * ∫_0^1 log(d² n^(d-2) + (1 - d²/n) n^(d-1) a^d) da
//! ```
//!
//! whenever `n > d²`. [`upper_bound_log`] evaluates the right-hand side
//! (closed form for `d = 2`, adaptive Gauss–Kronrod otherwise). The rest of the
//! module replays the random-ordering process behind the bound on concrete
//! hypercubes: legal counts `N_i` under a random exposure order, and checkers
//! for the two structural claims that bound `E[N_i]`.

use rand::Rng as _;

use crate::counting::{count_exact_with, CountOptions};
use crate::error::{Error, Result};
use crate::hypercube::{validate_hypercube, HypercubeTransversal, LatinHypercube01};
use crate::latin::LatinSquare;
use crate::rng::rng_from;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BoundValue {
    pub d: u32,
    pub n: u64,
    /// Natural-log upper bound on the transversal count.
    pub log_upper: f64,
    /// `n ((d - 1) log n - d)`, the log of `(n^(d-1) / e^d)^n`.
    pub log_lower_target: f64,
}

fn coefficients(d: u32, n: u64) -> Result<(f64, f64)> {
    if d == 0 {
        return Err(Error::DomainError("dimension must be at least 1".into()));
    }
    let d2 = (d as u64) * (d as u64);
    if n <= d2 {
        return Err(Error::DomainError(format!("need n > d^2, got n = {n}, d = {d}")));
    }
    let nf = n as f64;
    let df = d as f64;
    let a = df * df * nf.powi(d as i32 - 2);
    let b = (1.0 - df * df / nf) * nf.powi(d as i32 - 1);
    Ok((a, b))
}

/// `n * ∫_0^1 log(d² n^(d-2) + (1 - d²/n) n^(d-1) a^d) da` and the matching
/// lower-bound target.
pub fn upper_bound_log(d: u32, n: u64) -> Result<BoundValue> {
    let integral = if d == 2 { integral_closed_form_d2(n)? } else { integral_quadrature(d, n)? };
    Ok(BoundValue { d, n, log_upper: n as f64 * integral, log_lower_target: lower_target(d, n) })
}

pub fn lower_target(d: u32, n: u64) -> f64 {
    let nf = n as f64;
    nf * ((d as f64 - 1.0) * nf.ln() - d as f64)
}

/// The `d = 2` integral `∫_0^1 log(4 + (n-4) a²) da`, using the antiderivative
/// `a log(4 + c a²) - 2a + (4/√c) arctan(√c a / 2)` with `c = n - 4`.
pub fn integral_closed_form_d2(n: u64) -> Result<f64> {
    coefficients(2, n)?;
    let c = n as f64 - 4.0;
    let rc = c.sqrt();
    Ok((n as f64).ln() - 2.0 + 4.0 / rc * (rc / 2.0).atan())
}

/// The per-hyperplane integral by adaptive quadrature, for any `d`.
pub fn integral_quadrature(d: u32, n: u64) -> Result<f64> {
    let (a, b) = coefficients(d, n)?;
    let ln_a = a.ln();
    let ratio = b / a;
    let f = |x: f64| ln_a + (ratio * x.powi(d as i32)).ln_1p();
    Ok(adaptive_gauss_kronrod(&f, 0.0, 1.0, 1e-13))
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const GK_GAUSS_WEIGHTS: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kronrod = 0.0;
    let mut gauss = 0.0;
    for (k, (&x, &w)) in GK_NODES.iter().zip(&GK_KRONROD_WEIGHTS).enumerate() {
        let vals = if x == 0.0 { f(mid) } else { f(mid - half * x) + f(mid + half * x) };
        kronrod += w * vals;
        if k % 2 == 1 {
            gauss += GK_GAUSS_WEIGHTS[k / 2] * vals;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive 7/15-point Gauss–Kronrod: bisects until each panel's error
/// estimate is below its share of `tol`.
pub fn adaptive_gauss_kronrod(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (value, err) = gk15(f, a, b);
        if err <= tol || depth >= 50 {
            return value;
        }
        let mid = 0.5 * (a + b);
        recurse(f, a, mid, tol / 2.0, depth + 1) + recurse(f, mid, b, tol / 2.0, depth + 1)
    }
    recurse(f, a, b, tol, 0)
}

/// One run of the random exposure process for a fixed transversal.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaProcessTrace {
    pub alphas: Vec<f64>,
    /// Hyperplane indices by decreasing `alpha`, ties by index.
    pub expose_order: Vec<usize>,
    /// `legal_counts[i]` is `N_i`: the legal 1-elements of hyperplane `i` at the
    /// moment `X_i` is exposed.
    pub legal_counts: Vec<usize>,
    pub transversal: HypercubeTransversal,
}

impl AlphaProcessTrace {
    pub fn sum_log_legal(&self) -> f64 {
        self.legal_counts.iter().map(|&k| (k as f64).ln()).sum()
    }
}

fn check_pair(h: &LatinHypercube01, x: &HypercubeTransversal) -> Result<()> {
    let report = validate_hypercube(h);
    if !report.valid {
        return Err(Error::InvalidHypercube(format!("{} line violations", report.violations.len())));
    }
    x.check(h)
}

/// Draws `alpha` uniformly, exposes the transversal's elements in decreasing
/// `alpha` order and records the legal count of each hyperplane (along the
/// first axis) when its element is exposed.
pub fn sample_alpha_process(h: &LatinHypercube01, x: &HypercubeTransversal, seed: u64) -> Result<AlphaProcessTrace> {
    check_pair(h, x)?;
    let mut rng = rng_from(seed, &[0xa1fa]);
    let alphas: Vec<f64> = (0..h.order()).map(|_| rng.random::<f64>()).collect();
    Ok(alpha_process(h, x, alphas))
}

/// The exposure process for given `alphas` (no input validation).
pub fn alpha_process(h: &LatinHypercube01, x: &HypercubeTransversal, alphas: Vec<f64>) -> AlphaProcessTrace {
    let n = h.order();
    let arity = h.arity();
    let mut expose_order: Vec<usize> = (0..n).collect();
    expose_order.sort_by(|&a, &b| alphas[b].total_cmp(&alphas[a]).then(a.cmp(&b)));

    let planes: Vec<Vec<&[usize]>> = (0..n).map(|i| h.hyperplane(i).collect()).collect();
    let mut seen = vec![vec![false; n]; arity];
    let mut legal_counts = vec![0; n];
    for &i in &expose_order {
        legal_counts[i] = planes[i].iter().filter(|v| (0..arity).all(|a| !seen[a][v[a]])).count();
        let xi = x.in_hyperplane(i).expect("transversal covers every hyperplane");
        for a in 0..arity {
            seen[a][xi[a]] = true;
        }
    }
    AlphaProcessTrace { alphas, expose_order, legal_counts, transversal: x.clone() }
}

/// Mean and standard error of `Σ_i log N_i` over `samples` draws, with the
/// transversal drawn uniformly from `transversals` and a fresh `alpha` each
/// time. Its expectation upper-bounds `log T(A)` when `transversals` lists
/// every transversal.
pub fn alpha_entropy_estimate(h: &LatinHypercube01, transversals: &[HypercubeTransversal], samples: u64, seed: u64) -> Result<(f64, f64)> {
    if transversals.is_empty() || samples < 2 {
        return Err(Error::InvalidArgument("need at least one transversal and two samples".into()));
    }
    let mut rng = rng_from(seed, &[0xe7]);
    let values: Vec<f64> = (0..samples)
        .map(|_| {
            let x = &transversals[rng.random_range(0..transversals.len())];
            let alphas = (0..h.order()).map(|_| rng.random::<f64>()).collect();
            alpha_process(h, x, alphas).sum_log_legal()
        })
        .collect();
    let s = samples as f64;
    let mean = values.iter().sum::<f64>() / s;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (s - 1.0);
    Ok((mean, (var / s).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct ClaimReport {
    pub hyperplane: usize,
    /// 1-elements of the hyperplane sharing at least two indices with some
    /// transversal element.
    pub u_size: usize,
    pub claim1_bound: u64,
    pub claim1_ok: bool,
    /// Every 1-element outside `U` is ruled out by exactly `d` transversal
    /// elements, from distinct hyperplanes other than this one.
    pub claim2_ok: bool,
    pub counterexample: Option<Vec<usize>>,
}

fn shared_indices(a: &[usize], b: &[usize]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x == y).count()
}

fn check_claims(h: &LatinHypercube01, x: &HypercubeTransversal, i: usize) -> Result<ClaimReport> {
    check_pair(h, x)?;
    let (n, d) = (h.order(), h.dim());
    if d < 2 {
        return Err(Error::DomainError("claims need dimension at least 2".into()));
    }
    if i >= n {
        return Err(Error::InvalidArgument(format!("hyperplane {i} out of range for order {n}")));
    }
    let in_u = |v: &[usize]| x.elements.iter().any(|e| shared_indices(v, e) >= 2);
    let plane: Vec<&[usize]> = h.hyperplane(i).collect();
    let u_size = plane.iter().filter(|v| in_u(v)).count();
    let claim1_bound = (d * d) as u64 * (n as u64).pow(d as u32 - 2);

    // For each axis k >= 1, the transversal element with the same index there
    // is unique; those elements rule v out.
    let owner: Vec<Vec<usize>> = (0..h.arity())
        .map(|axis| {
            let mut by_value = vec![0; n];
            for e in &x.elements {
                by_value[e[axis]] = e[0];
            }
            by_value
        })
        .collect();
    let mut counterexample = None;
    for v in plane.iter().filter(|v| !in_u(v)) {
        let mut rulers: Vec<usize> = (1..=d).map(|k| owner[k][v[k]]).collect();
        rulers.sort_unstable();
        rulers.dedup();
        let mut literal: Vec<usize> = x.elements.iter().filter(|e| e[0] != i && shared_indices(v, e) > 0).map(|e| e[0]).collect();
        literal.sort_unstable();
        if rulers.len() != d || rulers.contains(&i) || rulers != literal {
            counterexample = Some(v.to_vec());
            break;
        }
    }
    Ok(ClaimReport {
        hyperplane: i,
        u_size,
        claim1_bound,
        claim1_ok: (u_size as u64) <= claim1_bound,
        claim2_ok: counterexample.is_none(),
        counterexample,
    })
}

/// `|U| <= d² n^(d-2)` for hyperplane `i`.
pub fn verify_claim1(h: &LatinHypercube01, x: &HypercubeTransversal, i: usize) -> Result<ClaimReport> {
    check_claims(h, x, i)
}

/// Every `v` in hyperplane `i` outside `U` has exactly `d` distinct ruling
/// hyperplanes, none equal to `i`.
pub fn verify_claim2(h: &LatinHypercube01, x: &HypercubeTransversal, i: usize) -> Result<ClaimReport> {
    check_claims(h, x, i)
}

/// Both claims on every hyperplane; the reports of any failures.
pub fn verify_all_claims(h: &LatinHypercube01, x: &HypercubeTransversal) -> Result<Vec<ClaimReport>> {
    let mut failures = Vec::new();
    for i in 0..h.order() {
        let r = check_claims(h, x, i)?;
        if !(r.claim1_ok && r.claim2_ok) {
            failures.push(r);
        }
    }
    Ok(failures)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EntropyGap {
    /// `log T(L)`; `-inf` when the square has no transversal.
    pub log_count: f64,
    pub log_upper: f64,
    pub holds: bool,
}

/// Exact `log T(L)` next to the `d = 2` bound for its order.
pub fn entropy_gap_report(square: &LatinSquare) -> Result<EntropyGap> {
    entropy_gap_report_with(square, &CountOptions::default())
}

pub fn entropy_gap_report_with(square: &LatinSquare, opts: &CountOptions) -> Result<EntropyGap> {
    let bound = upper_bound_log(2, square.order() as u64)?;
    let count = count_exact_with(square, opts)?.count;
    let log_count = big_ln(&count);
    Ok(EntropyGap { log_count, log_upper: bound.log_upper, holds: log_count <= bound.log_upper })
}

/// Natural log of a big integer; `-inf` for zero.
pub fn big_ln(x: &num_bigint::BigUint) -> f64 {
    if x.bits() == 0 {
        return f64::NEG_INFINITY;
    }
    let shift = x.bits().saturating_sub(60);
    let top: u64 = (x >> shift).try_into().expect("fits in 64 bits");
    (top as f64).ln() + shift as f64 * std::f64::consts::LN_2
}
