//! Orthogonal pairs of Latin squares.
//!
//! Dispatch by order:
//!
//! * prime `p`: `(i + j, 2i + j) mod p`;
//! * prime power `p^m`, `m >= 2`: `(i + j, g*i + j)` over `GF(p^m)` with `g` a
//!   primitive element;
//! * other odd orders: `(i + j, 2i + j) mod n`;
//! * `n = 0 mod 4`: direct product of the prime-power pairs of its factors;
//! * `n = 2 mod 4`, `n >= 10`: randomized search for a square together with a
//!   partition of its cells into `n` disjoint transversals, under a timeout;
//! * `n` in `{1, 2, 6}`: unsupported.

use std::ops::ControlFlow;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;

use crate::counting::for_each_transversal;
use crate::error::{Error, Result};
use crate::latin::LatinSquare;
use crate::rng::{derive_seed, rng_from};
use crate::sampler::uniform_random_square;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MolsOptions {
    /// Wall-clock limit for the `n = 2 mod 4` search.
    pub timeout: Duration,
    pub seed: u64,
}

impl Default for MolsOptions {
    fn default() -> Self {
        Self { timeout: Duration::from_secs(60), seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MolsStrategy {
    Linear,
    FiniteField,
    DirectProduct,
    RandomSearch,
}

/// Which construction [`mols_pair`] uses for order `n`.
pub fn strategy(n: usize) -> Result<MolsStrategy> {
    match n {
        0 => Err(Error::InvalidOrder(0)),
        1 | 2 | 6 => Err(Error::UnsupportedOrder(n)),
        _ => Ok(match prime_power(n) {
            Some((_, 1)) => MolsStrategy::Linear,
            Some(_) => MolsStrategy::FiniteField,
            None if n % 2 == 1 => MolsStrategy::Linear,
            None if n.is_multiple_of(4) => MolsStrategy::DirectProduct,
            None => MolsStrategy::RandomSearch,
        }),
    }
}

pub fn mols_pair(n: usize) -> Result<(LatinSquare, LatinSquare)> {
    mols_pair_with(n, &MolsOptions::default())
}

pub fn mols_pair_with(n: usize, opts: &MolsOptions) -> Result<(LatinSquare, LatinSquare)> {
    match strategy(n)? {
        MolsStrategy::Linear => Ok(linear_pair(n)),
        MolsStrategy::FiniteField => {
            let (p, m) = prime_power(n).expect("prime power");
            Ok(field_pair(p, m))
        }
        MolsStrategy::DirectProduct => Ok(product_pair(n)),
        MolsStrategy::RandomSearch => random_pair(n, opts),
    }
}

fn linear_pair(n: usize) -> (LatinSquare, LatinSquare) {
    (
        LatinSquare::from_fn(n, 0, |i, j| ((i + j) % n) as u32),
        LatinSquare::from_fn(n, 0, |i, j| ((2 * i + j) % n) as u32),
    )
}

/// `n = p^m` for a prime `p`, if it is one.
pub fn prime_power(n: usize) -> Option<(usize, u32)> {
    if n < 2 {
        return None;
    }
    let p = (2..).find(|d| n.is_multiple_of(*d) || d * d > n).map(|d| if n.is_multiple_of(d) { d } else { n })?;
    let mut rest = n;
    let mut m = 0;
    while rest.is_multiple_of(p) {
        rest /= p;
        m += 1;
    }
    (rest == 1).then_some((p, m))
}

fn factor_prime_powers(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            let mut q = 1;
            while n.is_multiple_of(d) {
                n /= d;
                q *= d;
            }
            out.push(q);
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Arithmetic in `GF(p^m)`. Elements are encoded as integers whose base-`p`
/// digits are polynomial coefficients, lowest degree first.
#[derive(Debug, Clone)]
pub struct FiniteField {
    p: usize,
    m: u32,
    /// Monic irreducible modulus, coefficients lowest first (length `m + 1`).
    modulus: Vec<usize>,
}

impl FiniteField {
    pub fn new(p: usize, m: u32) -> Self {
        let modulus = if m == 1 { vec![0, 1] } else { find_irreducible(p, m as usize) };
        Self { p, m, modulus }
    }

    pub fn order(&self) -> usize {
        self.p.pow(self.m)
    }

    fn digits(&self, mut x: usize) -> Vec<usize> {
        (0..self.m)
            .map(|_| {
                let d = x % self.p;
                x /= self.p;
                d
            })
            .collect()
    }

    fn encode(&self, digits: &[usize]) -> usize {
        digits.iter().rev().fold(0, |acc, &d| acc * self.p + d)
    }

    pub fn add(&self, a: usize, b: usize) -> usize {
        let (da, db) = (self.digits(a), self.digits(b));
        let sum: Vec<usize> = da.iter().zip(&db).map(|(x, y)| (x + y) % self.p).collect();
        self.encode(&sum)
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        let prod = poly_mul(&self.digits(a), &self.digits(b), self.p);
        self.encode(&poly_rem(&prod, &self.modulus, self.p))
    }

    /// A generator of the multiplicative group.
    pub fn primitive_element(&self) -> usize {
        let q = self.order();
        (2..q.max(3))
            .find(|&g| {
                let mut x = 1;
                for k in 1..q - 1 {
                    x = self.mul(x, g);
                    if x == 1 {
                        return k == q - 1;
                    }
                }
                true
            })
            .unwrap_or(1)
    }
}

fn poly_mul(a: &[usize], b: &[usize], p: usize) -> Vec<usize> {
    let mut out = vec![0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y) % p;
        }
    }
    out
}

/// Remainder of `a` modulo a monic `modulus`.
fn poly_rem(a: &[usize], modulus: &[usize], p: usize) -> Vec<usize> {
    let deg = modulus.len() - 1;
    let mut r = a.to_vec();
    for top in (deg..r.len()).rev() {
        let coef = r[top];
        if coef == 0 {
            continue;
        }
        for (k, &mc) in modulus.iter().enumerate() {
            let idx = top - deg + k;
            r[idx] = (r[idx] + p * p - coef * mc % p) % p;
        }
    }
    r.truncate(deg);
    r.resize(deg, 0);
    r
}

/// The first monic irreducible polynomial of degree `m` over `GF(p)` in
/// coefficient order, found by trial division.
fn find_irreducible(p: usize, m: usize) -> Vec<usize> {
    let count = p.pow(m as u32);
    (0..count)
        .map(|low| {
            let mut coeffs: Vec<usize> = (0..m).scan(low, |x, _| {
                let d = *x % p;
                *x /= p;
                Some(d)
            }).collect();
            coeffs.push(1);
            coeffs
        })
        .find(|f| f[0] != 0 && !has_factor(f, p))
        .expect("irreducible polynomials exist for every degree")
}

fn has_factor(f: &[usize], p: usize) -> bool {
    let m = f.len() - 1;
    (1..=m / 2).any(|deg| {
        (0..p.pow(deg as u32)).any(|low| {
            let mut g: Vec<usize> = (0..deg).scan(low, |x, _| {
                let d = *x % p;
                *x /= p;
                Some(d)
            }).collect();
            g.push(1);
            poly_rem(f, &g, p).iter().all(|&c| c == 0)
        })
    })
}

fn field_pair(p: usize, m: u32) -> (LatinSquare, LatinSquare) {
    let field = FiniteField::new(p, m);
    let q = field.order();
    let g = field.primitive_element();
    let times_g: Vec<usize> = (0..q).map(|i| field.mul(g, i)).collect();
    (
        LatinSquare::from_fn(q, 0, |i, j| field.add(i, j) as u32),
        LatinSquare::from_fn(q, 0, |i, j| field.add(times_g[i], j) as u32),
    )
}

/// Kronecker-style product: the cell `((i, i'), (j, j'))` holds
/// `a(i, j) * n' + b(i', j')`.
pub fn direct_product(a: &LatinSquare, b: &LatinSquare) -> LatinSquare {
    let nb = b.order();
    LatinSquare::from_fn(a.order() * nb, 0, |r, c| {
        (a.symbol_index(r / nb, c / nb) * nb + b.symbol_index(r % nb, c % nb)) as u32
    })
}

fn product_pair(n: usize) -> (LatinSquare, LatinSquare) {
    factor_prime_powers(n)
        .into_iter()
        .map(|q| {
            let (p, m) = prime_power(q).expect("prime power factor");
            if m == 1 {
                linear_pair(q)
            } else {
                field_pair(p, m)
            }
        })
        .reduce(|(a1, a2), (b1, b2)| (direct_product(&a1, &b1), direct_product(&a2, &b2)))
        .expect("n >= 4 has a factor")
}

/// Draws random squares and looks for a partition of each into `n` disjoint
/// transversals. The partition gives the mate: cell `(r, c)` of the mate holds
/// the index of the transversal covering it.
fn random_pair(n: usize, opts: &MolsOptions) -> Result<(LatinSquare, LatinSquare)> {
    // Exhaustive transversal lists stay manageable only for small orders.
    const MAX_TRANSVERSALS: usize = 2_000_000;
    let start = Instant::now();
    let deadline = start + opts.timeout;
    for attempt in 0u64.. {
        if Instant::now() >= deadline {
            break;
        }
        let square = uniform_random_square(n, derive_seed(opts.seed, &[n as u64, attempt]))?;
        let mut transversals: Vec<Vec<usize>> = Vec::new();
        let mut overflow = false;
        for_each_transversal(&square, |cols| {
            transversals.push(cols.to_vec());
            if transversals.len() >= MAX_TRANSVERSALS || Instant::now() >= deadline {
                overflow = true;
                return ControlFlow::Break(());
            }
            ControlFlow::Continue(())
        });
        if overflow || transversals.len() < n {
            continue;
        }
        let mut rng = rng_from(opts.seed, &[n as u64, attempt, 1]);
        transversals.shuffle(&mut rng);
        if let Some(chosen) = partition_cells(n, &transversals, deadline) {
            let mut mate = vec![0u32; n * n];
            for (k, &t) in chosen.iter().enumerate() {
                for (r, &c) in transversals[t].iter().enumerate() {
                    mate[r * n + c] = k as u32;
                }
            }
            return Ok((square, LatinSquare::new(n, mate, 0)?));
        }
    }
    Err(Error::ConstructionFailed { order: n, elapsed: start.elapsed() })
}

/// Exact cover of the `n^2` cells by `n` transversals (column vectors). Each
/// transversal covers exactly one cell of row 0, so the search picks one
/// transversal per row-0 column, most constrained column first.
fn partition_cells(n: usize, transversals: &[Vec<usize>], deadline: Instant) -> Option<Vec<usize>> {
    let mut by_first: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, t) in transversals.iter().enumerate() {
        by_first[t[0]].push(i);
    }
    let mut used = vec![vec![false; n]; n];
    let mut chosen = Vec::with_capacity(n);
    let mut done = vec![false; n];
    let mut nodes = 0u64;
    fn compatible(t: &[usize], used: &[Vec<bool>]) -> bool {
        t.iter().enumerate().all(|(r, &c)| !used[r][c])
    }
    fn go(
        n: usize,
        ts: &[Vec<usize>],
        by_first: &[Vec<usize>],
        used: &mut [Vec<bool>],
        done: &mut [bool],
        chosen: &mut Vec<usize>,
        nodes: &mut u64,
        deadline: Instant,
    ) -> bool {
        if chosen.len() == n {
            return true;
        }
        *nodes += 1;
        if (*nodes).is_multiple_of(4096) && Instant::now() >= deadline {
            return false;
        }
        let mut best: Option<(usize, Vec<usize>)> = None;
        for c in (0..n).filter(|&c| !done[c]) {
            let cands: Vec<usize> = by_first[c].iter().copied().filter(|&i| compatible(&ts[i], used)).collect();
            if cands.is_empty() {
                return false;
            }
            if best.as_ref().is_none_or(|(_, b)| cands.len() < b.len()) {
                best = Some((c, cands));
            }
        }
        let (col, cands) = best.expect("open column");
        done[col] = true;
        for i in cands {
            for (r, &c) in ts[i].iter().enumerate() {
                used[r][c] = true;
            }
            chosen.push(i);
            if go(n, ts, by_first, used, done, chosen, nodes, deadline) {
                return true;
            }
            chosen.pop();
            for (r, &c) in ts[i].iter().enumerate() {
                used[r][c] = false;
            }
        }
        done[col] = false;
        false
    }
    go(n, transversals, &by_first, &mut used, &mut done, &mut chosen, &mut nodes, deadline).then_some(chosen)
}
