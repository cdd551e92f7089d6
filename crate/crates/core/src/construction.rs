//! Block construction of a Latin square with many transversals, and padding to
//! an arbitrary larger order.
//!
//! Parameters: `n = b²`, `k = floor(b - b^0.9)`, `ell = n - b k` and
//! `N = n² k`. A structure square `S` of order `n` with `ell` disjoint
//! transversals decides the layout: block `(i, j)` of the order-`N` square `L`
//! is an order-`nk` square over alphabet `A_{S(i,j)}`, where the alphabets
//! split `0..N` into `n` runs of `nk` symbols. Blocks on the `ell` special
//! transversals of `S` hold a fixed square that decomposes into disjoint
//! transversals; all other blocks are independent random squares.
//!
//! Padding to `N' = N + s` takes `s` of the special transversals of `L`,
//! writes a fresh symbol over each, and moves the displaced symbols into one
//! new row and one new column per consumed transversal.

use crate::error::{Error, Result};
use crate::latin::{cyclic_square, transversal_decomposition, validate_latin, LatinSquare, Transversal};
use crate::mols::{mols_pair_with, strategy, MolsOptions};
use crate::par;
use crate::rng::derive_seed;
use crate::sampler::{uniform_random_square_with, SamplerConfig};

/// Smallest `N'` reachable with derived (not relaxed) parameters: `b = 7`, `N = 2401`, plus 3.
pub const MIN_TARGET: u64 = 2404;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct ConstructionParams {
    pub b: usize,
    pub k: usize,
    /// Order of the structure square, `b²`.
    pub n: usize,
    /// Number of special transversals of the structure square, `n - b k`.
    pub ell: usize,
    /// Order of the assembled square, `n² k`.
    pub order: usize,
    /// `k` was supplied by the caller rather than derived from `b`.
    pub relaxed: bool,
}

impl ConstructionParams {
    /// Order of each block, `n k`.
    pub fn block_order(&self) -> usize {
        self.n * self.k
    }

    /// Number of special transversals of `L`, `ell * n * k`.
    pub fn special_count(&self) -> usize {
        self.ell * self.block_order()
    }
}

/// `floor(b - b^0.9)`.
pub fn derived_k(b: u64) -> i64 {
    let bf = b as f64;
    (bf - bf.powf(0.9)).floor() as i64
}

fn check_orders(n: usize, block: usize) -> Result<()> {
    strategy(n).map_err(|_| Error::UnsupportedSubsquareOrder(n))?;
    strategy(block).map_err(|_| Error::UnsupportedSubsquareOrder(block))?;
    Ok(())
}

pub fn derive_params(b: usize) -> Result<ConstructionParams> {
    if b < 2 {
        return Err(Error::InvalidArgument(format!("b must be at least 2, got {b}")));
    }
    let k = derived_k(b as u64);
    if k < 1 {
        return Err(Error::KTooSmall { b: b as u64, k });
    }
    let mut params = relaxed_params(b, k as usize)?;
    params.relaxed = false;
    Ok(params)
}

/// Same layout with a caller-chosen `k`, for instances small enough to run.
pub fn relaxed_params(b: usize, k: usize) -> Result<ConstructionParams> {
    if b < 2 || k < 1 {
        return Err(Error::InvalidArgument(format!("need b >= 2 and k >= 1, got b = {b}, k = {k}")));
    }
    let n = b * b;
    let ell = n as i64 - (b * k) as i64;
    if ell < 3 {
        return Err(Error::EllTooSmall { ell });
    }
    check_orders(n, n * k)?;
    Ok(ConstructionParams { b, k, n, ell: ell as usize, order: n * n * k, relaxed: true })
}

/// The largest `b` whose derived `N` satisfies `N <= target - 3`.
pub fn choose_b(target: u64) -> Result<usize> {
    if target < MIN_TARGET {
        return Err(Error::TooSmallTarget { target, min: MIN_TARGET });
    }
    let order_for = |b: u64| -> u128 { (b as u128).pow(4) * derived_k(b).max(0) as u128 };
    let limit = (target - 3) as u128;
    let mut b = 7u64;
    while order_for(b + 1) <= limit {
        b += 1;
    }
    Ok(b as usize)
}

/// The structure square (first square of an orthogonal pair of order `n`) and
/// the first `ell` transversals of its decomposition.
pub fn build_structure(params: &ConstructionParams, seed: u64) -> Result<(LatinSquare, Vec<Transversal>)> {
    let opts = MolsOptions { seed: derive_seed(seed, &[0x5]), ..MolsOptions::default() };
    let (s, mate) = mols_pair_with(params.n, &opts)?;
    let mut specials = transversal_decomposition(&s, &mate)?;
    specials.truncate(params.ell);
    Ok((s, specials))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildOptions {
    pub sampler: SamplerConfig,
    /// Generate random blocks on the rayon pool. Output does not depend on it.
    pub parallel: bool,
}

#[derive(Debug, Clone)]
pub struct BlockStructure {
    pub params: ConstructionParams,
    /// Structure square of order `n`.
    pub s: LatinSquare,
    /// The `ell` disjoint transversals of `S` whose positions are special.
    pub special_positions: Vec<Transversal>,
    /// The order-`nk` square placed (shifted into the right alphabet) at every
    /// special position, and its decomposition into disjoint transversals.
    pub designated: LatinSquare,
    pub designated_transversals: Vec<Transversal>,
    /// Row-major `n x n` grid of blocks, each over its own alphabet.
    pub subsquares: Vec<LatinSquare>,
    /// The assembled order-`N` square.
    pub l: LatinSquare,
    special_blocks: Vec<bool>,
}

impl BlockStructure {
    pub fn subsquare(&self, i: usize, j: usize) -> &LatinSquare {
        &self.subsquares[i * self.params.n + j]
    }

    /// Whether block `(i, j)` of `S` is special.
    pub fn is_special_block(&self, i: usize, j: usize) -> bool {
        self.special_blocks[i * self.params.n + j]
    }

    /// Whether cell `(r, c)` of `L` lies in a special block.
    pub fn is_special(&self, r: usize, c: usize) -> bool {
        let m = self.params.block_order();
        self.is_special_block(r / m, c / m)
    }

    /// First symbol of alphabet `A_a`.
    pub fn alphabet_start(&self, a: usize) -> u32 {
        (a * self.params.block_order()) as u32
    }
}

pub fn build_l(params: &ConstructionParams, seed: u64) -> Result<BlockStructure> {
    build_l_with(params, seed, &BuildOptions { parallel: true, ..BuildOptions::default() })
}

pub fn build_l_with(params: &ConstructionParams, seed: u64, opts: &BuildOptions) -> Result<BlockStructure> {
    let (s, special_positions) = build_structure(params, seed)?;
    let (n, m) = (params.n, params.block_order());
    let big = params.order;

    let mut special_blocks = vec![false; n * n];
    for t in &special_positions {
        for &(i, j) in &t.positions {
            special_blocks[i * n + j] = true;
        }
    }

    let mols_opts = MolsOptions { seed: derive_seed(seed, &[0xd]), ..MolsOptions::default() };
    let (designated, mate) = mols_pair_with(m, &mols_opts)?;
    let designated_transversals = transversal_decomposition(&designated, &mate)?;

    let positions: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let blocks = par::map_ordered(positions, opts.parallel, |(i, j)| -> Result<LatinSquare> {
        let offset = (s.symbol_index(i, j) * m) as u32;
        if special_blocks[i * n + j] {
            Ok(designated.with_offset(offset))
        } else {
            let seed = derive_seed(seed, &[0xb10c, i as u64, j as u64]);
            Ok(uniform_random_square_with(m, seed, &opts.sampler)?.with_offset(offset))
        }
    });
    let subsquares: Vec<LatinSquare> = blocks.into_iter().collect::<Result<_>>()?;

    let mut cells = vec![0u32; big * big];
    for (idx, block) in subsquares.iter().enumerate() {
        let (bi, bj) = (idx / n, idx % n);
        for r in 0..m {
            let dst = (bi * m + r) * big + bj * m;
            cells[dst..dst + m].copy_from_slice(block.row(r));
        }
    }
    let l = LatinSquare::new(big, cells, 0)?;
    let report = validate_latin(&l);
    if !report.valid {
        return Err(Error::InvalidSquare(format!("assembled square has {} violations", report.violations.len())));
    }
    Ok(BlockStructure { params: *params, s, special_positions, designated, designated_transversals, subsquares, l, special_blocks })
}

/// The `ell * n * k` disjoint transversals of `L` inside special blocks.
///
/// For each special transversal of `S` and each transversal `t` of the
/// designated square, the copies of `t` in the `n` blocks along the
/// `S`-transversal join into one transversal of `L`. Ordered by
/// `S`-transversal, then by `t`.
pub fn special_transversals(bs: &BlockStructure) -> Vec<Transversal> {
    let m = bs.params.block_order();
    bs.special_positions
        .iter()
        .flat_map(|tau| {
            bs.designated_transversals.iter().map(move |t| {
                let positions = tau
                    .positions
                    .iter()
                    .flat_map(|&(bi, bj)| t.positions.iter().map(move |&(r, c)| (bi * m + r, bj * m + c)))
                    .collect();
                Transversal::from_positions(&bs.l, positions)
            })
        })
        .collect()
}

/// A square of order `s >= 3` together with one of its transversals.
///
/// Odd `s`: the cyclic square and its main diagonal. Even `s`: the cyclic
/// square of order `s - 1` prolonged along its main diagonal, with the
/// transversal made of the superdiagonal `(i, i+1 mod s-1)` plus the new corner
/// cell.
pub fn corner_square(s: usize) -> Result<(LatinSquare, Transversal)> {
    if s < 3 {
        return Err(Error::LStarConstructionFailed(s));
    }
    let (square, columns): (LatinSquare, Vec<usize>) = if s % 2 == 1 {
        (cyclic_square(s)?, (0..s).collect())
    } else {
        let m = s - 1;
        let base = cyclic_square(m)?;
        let square = LatinSquare::from_fn(s, 0, |r, c| match (r == m, c == m) {
            (true, true) => m as u32,
            (false, false) if r == c => m as u32,
            (false, false) => base.get(r, c),
            (false, true) => base.get(r, r),
            (true, false) => base.get(c, c),
        });
        (square, (0..m).map(|i| (i + 1) % m).chain([m]).collect())
    };
    let t = Transversal::from_columns(&square, &columns);
    if !square.is_latin() || !t.is_transversal_of(&square) {
        return Err(Error::LStarConstructionFailed(s));
    }
    Ok((square, t))
}

#[derive(Debug, Clone)]
pub struct PaddedSquare {
    /// The order-`N'` square.
    pub lprime: LatinSquare,
    /// `N' - N`.
    pub s: usize,
    /// The special transversals of `L` overwritten by new symbols; the `t`-th
    /// one now holds symbol `N + t` and owns row and column `N + t`.
    pub consumed_specials: Vec<Transversal>,
    /// The bottom-right corner, over symbols `N..N'`, and a transversal of it.
    pub corner: LatinSquare,
    pub corner_transversal: Transversal,
    /// Order of the original square.
    pub base_order: usize,
}

impl PaddedSquare {
    /// Extends a transversal of `L` that avoids every consumed cell by the
    /// corner transversal, giving a transversal of `L'`.
    pub fn extend(&self, t: &Transversal) -> Transversal {
        let big = self.base_order;
        let positions = t
            .positions
            .iter()
            .copied()
            .chain(self.corner_transversal.positions.iter().map(|&(r, c)| (big + r, big + c)))
            .collect();
        Transversal::from_positions(&self.lprime, positions)
    }
}

/// Pads `L` to order `target = N + s` using the first `s` special
/// transversals.
pub fn pad_to(bs: &BlockStructure, target: usize) -> Result<PaddedSquare> {
    let big = bs.params.order;
    let s = target as i64 - big as i64;
    if s < 3 {
        return Err(Error::STooSmall(s));
    }
    let s = s as usize;
    let max = bs.params.special_count();
    if s > max {
        return Err(Error::STooLarge { s: s as u64, max: max as u64 });
    }
    let consumed_specials: Vec<Transversal> = special_transversals(bs).into_iter().take(s).collect();
    let (corner, corner_transversal) = corner_square(s)?;

    let mut cells = vec![0u32; target * target];
    for r in 0..big {
        cells[r * target..r * target + big].copy_from_slice(bs.l.row(r));
    }
    for (t, special) in consumed_specials.iter().enumerate() {
        let fresh = (big + t) as u32;
        for (&(x, y), &sym) in special.positions.iter().zip(&special.symbols) {
            cells[x * target + y] = fresh;
            cells[x * target + big + t] = sym;
            cells[(big + t) * target + y] = sym;
        }
    }
    for a in 0..s {
        for b in 0..s {
            cells[(big + a) * target + big + b] = corner.get(a, b) + big as u32;
        }
    }
    let lprime = LatinSquare::new(target, cells, 0)?;
    let report = validate_latin(&lprime);
    if !report.valid {
        return Err(Error::InvalidSquare(format!("padded square has {} violations", report.violations.len())));
    }
    Ok(PaddedSquare { lprime, s, consumed_specials, corner, corner_transversal, base_order: big })
}

/// A random transversal of `L` avoiding every special cell, if the randomized
/// search finds one within `node_budget` placements.
pub fn sample_non_special_transversal(bs: &BlockStructure, seed: u64, node_budget: u64) -> Option<Transversal> {
    crate::counting::random_transversal(&bs.l, |r, c| !bs.is_special(r, c), seed, node_budget)
}
