//! Exact transversal counting and enumeration, plus a sequential importance
//! sampling estimator.
//!
//! The exact kernel walks rows `0..n` in order and tries columns in ascending
//! order, pruning with used-column and used-symbol bitmasks. Orders up to 64 use
//! single-word masks; larger orders fall back to multiword masks.

use std::ops::ControlFlow;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::latin::{LatinSquare, Transversal};
use crate::par;
use crate::rng::rng_from;

pub const DEFAULT_GUARD: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountOptions {
    /// Largest order accepted by the exact routines.
    pub guard: usize,
    /// Split the search over independent subtrees on the rayon pool. Ignored
    /// when the crate is built without the `parallel` feature.
    pub parallel: bool,
}

impl Default for CountOptions {
    fn default() -> Self {
        Self { guard: DEFAULT_GUARD, parallel: true }
    }
}

impl CountOptions {
    pub fn serial() -> Self {
        Self { parallel: false, ..Self::default() }
    }

    pub fn with_guard(guard: usize) -> Self {
        Self { guard, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountResult {
    pub count: BigUint,
    pub nodes_visited: u64,
    pub elapsed: Duration,
}

trait Mask: Clone + Send {
    fn empty(n: usize) -> Self;
    fn test(&self, i: usize) -> bool;
    fn set(&mut self, i: usize);
    fn clear(&mut self, i: usize);
    /// First clear bit at index `>= from` and `< n`.
    fn next_clear(&self, from: usize, n: usize) -> Option<usize>;
}

impl Mask for u64 {
    #[inline]
    fn empty(_: usize) -> Self {
        0
    }
    #[inline]
    fn test(&self, i: usize) -> bool {
        self >> i & 1 == 1
    }
    #[inline]
    fn set(&mut self, i: usize) {
        *self |= 1 << i;
    }
    #[inline]
    fn clear(&mut self, i: usize) {
        *self &= !(1 << i);
    }
    #[inline]
    fn next_clear(&self, from: usize, n: usize) -> Option<usize> {
        if from >= n {
            return None;
        }
        let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let free = !self & full & (u64::MAX << from);
        (free != 0).then(|| free.trailing_zeros() as usize)
    }
}

#[derive(Clone)]
struct WideMask(Vec<u64>);

impl Mask for WideMask {
    fn empty(n: usize) -> Self {
        WideMask(vec![0; n.div_ceil(64)])
    }
    #[inline]
    fn test(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }
    #[inline]
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    #[inline]
    fn clear(&mut self, i: usize) {
        self.0[i / 64] &= !(1 << (i % 64));
    }
    fn next_clear(&self, from: usize, n: usize) -> Option<usize> {
        let mut w = from / 64;
        let mut bits = !self.0.get(w)? & (u64::MAX << (from % 64));
        loop {
            if bits != 0 {
                let i = w * 64 + bits.trailing_zeros() as usize;
                return (i < n).then_some(i);
            }
            w += 1;
            bits = !*self.0.get(w)?;
        }
    }
}

/// Backtracking state over one square.
struct Search<'a, M> {
    n: usize,
    symbols: &'a [usize],
    cols: M,
    syms: M,
    chosen: Vec<usize>,
    nodes: u64,
}

impl<'a, M: Mask> Search<'a, M> {
    fn new(n: usize, symbols: &'a [usize]) -> Self {
        Self { n, symbols, cols: M::empty(n), syms: M::empty(n), chosen: Vec::with_capacity(n), nodes: 1 }
    }

    #[inline]
    fn push(&mut self, c: usize) {
        let row = self.chosen.len();
        self.cols.set(c);
        self.syms.set(self.symbols[row * self.n + c]);
        self.chosen.push(c);
        self.nodes += 1;
    }

    #[inline]
    fn pop(&mut self) {
        let c = self.chosen.pop().expect("non-empty");
        let row = self.chosen.len();
        self.cols.clear(c);
        self.syms.clear(self.symbols[row * self.n + c]);
    }

    /// Legal columns for the next row, ascending.
    fn legal(&self) -> impl Iterator<Item = usize> + '_ {
        let row = self.chosen.len();
        let base = row * self.n;
        let mut from = 0;
        std::iter::from_fn(move || loop {
            let c = self.cols.next_clear(from, self.n)?;
            from = c + 1;
            if !self.syms.test(self.symbols[base + c]) {
                return Some(c);
            }
        })
    }

    fn count(&mut self) -> u128 {
        if self.chosen.len() == self.n {
            return 1;
        }
        // Last row: at most one legal column remains.
        if self.chosen.len() + 1 == self.n {
            let hit = self.legal().next().is_some();
            self.nodes += hit as u64;
            return hit as u128;
        }
        let mut total = 0;
        let mut from = 0;
        let row = self.chosen.len();
        while let Some(c) = self.cols.next_clear(from, self.n) {
            from = c + 1;
            if self.syms.test(self.symbols[row * self.n + c]) {
                continue;
            }
            self.push(c);
            total += self.count();
            self.pop();
        }
        total
    }

    fn visit<F: FnMut(&[usize]) -> ControlFlow<()>>(&mut self, f: &mut F) -> ControlFlow<()> {
        if self.chosen.len() == self.n {
            return f(&self.chosen);
        }
        let mut from = 0;
        let row = self.chosen.len();
        while let Some(c) = self.cols.next_clear(from, self.n) {
            from = c + 1;
            if self.syms.test(self.symbols[row * self.n + c]) {
                continue;
            }
            self.push(c);
            let flow = self.visit(f);
            self.pop();
            flow?;
        }
        ControlFlow::Continue(())
    }
}

fn check_input(square: &LatinSquare, guard: usize) -> Result<()> {
    if square.order() > guard {
        return Err(Error::TooLarge { order: square.order(), limit: guard });
    }
    if !square.is_latin() {
        return Err(Error::InvalidSquare("transversal search needs a Latin square".into()));
    }
    Ok(())
}

/// Counts transversals exactly. Results are identical with or without
/// parallelism.
pub fn count_exact(square: &LatinSquare) -> Result<CountResult> {
    count_exact_with(square, &CountOptions::default())
}

pub fn count_exact_with(square: &LatinSquare, opts: &CountOptions) -> Result<CountResult> {
    check_input(square, opts.guard)?;
    let start = Instant::now();
    let symbols = square.index_table();
    let (count, nodes) = if square.order() <= 64 {
        count_split::<u64>(square.order(), &symbols, opts.parallel)
    } else {
        count_split::<WideMask>(square.order(), &symbols, opts.parallel)
    };
    Ok(CountResult { count: BigUint::from(count), nodes_visited: nodes, elapsed: start.elapsed() })
}

/// Expands the first two rows into prefixes, then counts each subtree
/// independently. The serial path uses the same decomposition so node counts
/// match exactly.
fn count_split<M: Mask>(n: usize, symbols: &[usize], parallel: bool) -> (u128, u64) {
    let depth = n.min(2);
    let mut prefixes = Vec::new();
    let mut search = Search::<M>::new(n, symbols);
    collect_prefixes(&mut search, depth, &mut prefixes);
    let prefix_nodes = search.nodes;

    let results = par::map_ordered(prefixes, parallel, |prefix: Vec<usize>| {
        let mut s = Search::<M>::new(n, symbols);
        for &c in &prefix {
            s.push(c);
        }
        s.nodes = 0;
        (s.count(), s.nodes)
    });
    results.into_iter().fold((0, prefix_nodes), |(c, k), (dc, dk)| (c + dc, k + dk))
}

fn collect_prefixes<M: Mask>(s: &mut Search<'_, M>, depth: usize, out: &mut Vec<Vec<usize>>) {
    if s.chosen.len() == depth {
        out.push(s.chosen.clone());
        return;
    }
    let legal: Vec<usize> = s.legal().collect();
    for c in legal {
        s.push(c);
        collect_prefixes(s, depth, out);
        s.pop();
    }
}

/// Calls `f` with the column sequence of every transversal, in lexicographic
/// order, until it breaks. No order guard.
pub fn for_each_transversal<F>(square: &LatinSquare, mut f: F)
where
    F: FnMut(&[usize]) -> ControlFlow<()>,
{
    let symbols = square.index_table();
    let n = square.order();
    if n <= 64 {
        let _ = Search::<u64>::new(n, &symbols).visit(&mut f);
    } else {
        let _ = Search::<WideMask>::new(n, &symbols).visit(&mut f);
    }
}

/// The first `limit` transversals (all of them for `None`) in lexicographic
/// order of their column sequences.
pub fn enumerate_transversals(square: &LatinSquare, limit: Option<usize>) -> Result<Vec<Transversal>> {
    enumerate_transversals_with(square, limit, &CountOptions::default())
}

pub fn enumerate_transversals_with(square: &LatinSquare, limit: Option<usize>, opts: &CountOptions) -> Result<Vec<Transversal>> {
    check_input(square, opts.guard)?;
    let limit = limit.unwrap_or(usize::MAX);
    let mut out = Vec::new();
    if limit == 0 {
        return Ok(out);
    }
    for_each_transversal(square, |cols| {
        out.push(Transversal::from_columns(square, cols));
        if out.len() >= limit {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    Ok(out)
}

/// Whether any transversal exists; stops at the first one found.
pub fn has_transversal(square: &LatinSquare) -> Result<bool> {
    has_transversal_with(square, &CountOptions::default())
}

pub fn has_transversal_with(square: &LatinSquare, opts: &CountOptions) -> Result<bool> {
    check_input(square, opts.guard)?;
    let mut found = false;
    for_each_transversal(square, |_| {
        found = true;
        ControlFlow::Break(())
    });
    Ok(found)
}

/// Randomized search for one transversal using only cells accepted by
/// `allowed`. Rows are filled most-constrained first and candidate columns are
/// shuffled, so different seeds reach different transversals. The search
/// restarts with a doubling node cap whenever an attempt stalls, and gives up
/// after `node_budget` placements in total.
pub fn random_transversal<F>(square: &LatinSquare, allowed: F, seed: u64, node_budget: u64) -> Option<Transversal>
where
    F: Fn(usize, usize) -> bool,
{
    let n = square.order();
    let symbols = square.index_table();
    let mut rng = rng_from(seed, &[0x7261_6e64]);
    let mut spent = 0u64;
    let mut cap = 8 * n as u64;
    while spent < node_budget {
        let budget = cap.min(node_budget - spent);
        let mut state = RandomSearch {
            n,
            symbols: &symbols,
            allowed: &allowed,
            col_used: vec![false; n],
            sym_used: vec![false; n],
            assigned: vec![usize::MAX; n],
            nodes: 0,
            budget,
        };
        if state.solve(&mut rng, 0) {
            return Some(Transversal::from_columns(square, &state.assigned));
        }
        if state.nodes < budget {
            // the whole tree was searched
            return None;
        }
        spent += state.nodes;
        cap *= 2;
    }
    None
}

struct RandomSearch<'a, F> {
    n: usize,
    symbols: &'a [usize],
    allowed: &'a F,
    col_used: Vec<bool>,
    sym_used: Vec<bool>,
    assigned: Vec<usize>,
    nodes: u64,
    budget: u64,
}

impl<F: Fn(usize, usize) -> bool> RandomSearch<'_, F> {
    fn options(&self, r: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&c| !self.col_used[c] && !self.sym_used[self.symbols[r * self.n + c]] && (self.allowed)(r, c))
    }

    fn solve(&mut self, rng: &mut crate::rng::Rng, placed: usize) -> bool {
        if placed == self.n {
            return true;
        }
        let mut best: Option<(usize, usize)> = None;
        for r in (0..self.n).filter(|&r| self.assigned[r] == usize::MAX) {
            let k = self.options(r).count();
            if best.is_none_or(|(_, bk)| k < bk) {
                best = Some((r, k));
                if k == 0 {
                    return false;
                }
            }
        }
        let (row, _) = best.expect("unassigned row exists");
        let mut cands: Vec<usize> = self.options(row).collect();
        cands.shuffle(rng);
        for c in cands {
            if self.nodes >= self.budget {
                return false;
            }
            self.nodes += 1;
            let s = self.symbols[row * self.n + c];
            self.assigned[row] = c;
            self.col_used[c] = true;
            self.sym_used[s] = true;
            if self.solve(rng, placed + 1) {
                return true;
            }
            self.assigned[row] = usize::MAX;
            self.col_used[c] = false;
            self.sym_used[s] = false;
        }
        false
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    /// Estimate of the transversal count.
    pub mean: f64,
    pub stderr: f64,
    /// Natural log of `mean`; `-inf` when every walk died.
    pub log_mean: f64,
    /// Standard error of `log_mean` by the delta method (`stderr / mean`).
    pub log_stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Which row a sampling walk fills next.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SisOrder {
    /// Rows `0..n` in order.
    #[default]
    Fixed,
    /// The unfilled row with the fewest legal columns (lowest index on ties).
    /// Still unbiased, since the branching row depends only on the partial
    /// assignment, and walks survive far more often on large squares.
    MostConstrained,
}

/// Sequential importance sampling: each walk fills rows in order, choosing a
/// legal column uniformly and multiplying its weight by the number of legal
/// choices. A walk that reaches a row with no legal column has weight 0.
///
/// Walk `i` draws from its own stream derived from `(seed, i)`, and the
/// reduction runs in sample order, so the result is independent of
/// parallelism.
pub fn estimate_sis(square: &LatinSquare, samples: u64, seed: u64) -> Result<EstimateResult> {
    estimate_sis_with(square, samples, seed, SisOrder::Fixed, true)
}

pub fn estimate_sis_with(square: &LatinSquare, samples: u64, seed: u64, order: SisOrder, parallel: bool) -> Result<EstimateResult> {
    if samples < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {samples}")));
    }
    if !square.is_latin() {
        return Err(Error::InvalidSquare("estimator needs a Latin square".into()));
    }
    let walker = Walker::new(square);
    let chunk = 1024u64;
    let chunks: Vec<u64> = (0..samples.div_ceil(chunk)).collect();
    let log_weights: Vec<f64> = par::map_ordered(chunks, parallel, |k| {
        let lo = k * chunk;
        let hi = (lo + chunk).min(samples);
        let mut state = walker.state();
        (lo..hi)
            .map(|i| {
                let mut rng = rng_from(seed, &[0x53_4953, i]);
                match order {
                    SisOrder::Fixed => walker.walk_fixed(&mut state, &mut rng),
                    SisOrder::MostConstrained => walker.walk_most_constrained(&mut state, &mut rng),
                }
            })
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect();
    Ok(summarize(&log_weights, seed))
}

struct Walker {
    n: usize,
    symbols: Vec<usize>,
    /// `position[r * n + s]`: column of symbol `s` in row `r`.
    position: Vec<usize>,
}

struct WalkState {
    col_used: Vec<bool>,
    sym_used: Vec<bool>,
    open: Vec<usize>,
    legal_count: Vec<usize>,
    legal: Vec<usize>,
}

impl Walker {
    fn new(square: &LatinSquare) -> Self {
        let n = square.order();
        let symbols = square.index_table();
        let mut position = vec![0; n * n];
        for r in 0..n {
            for c in 0..n {
                position[r * n + symbols[r * n + c]] = c;
            }
        }
        Self { n, symbols, position }
    }

    fn state(&self) -> WalkState {
        let n = self.n;
        WalkState { col_used: vec![false; n], sym_used: vec![false; n], open: Vec::with_capacity(n), legal_count: vec![n; n], legal: Vec::with_capacity(n) }
    }

    /// Log weight of one walk; `-inf` on a dead end.
    fn walk_fixed(&self, st: &mut WalkState, rng: &mut crate::rng::Rng) -> f64 {
        let n = self.n;
        st.col_used.fill(false);
        st.sym_used.fill(false);
        let mut log_w = 0.0;
        for r in 0..n {
            st.legal.clear();
            st.legal.extend((0..n).filter(|&c| !st.col_used[c] && !st.sym_used[self.symbols[r * n + c]]));
            if st.legal.is_empty() {
                return f64::NEG_INFINITY;
            }
            log_w += (st.legal.len() as f64).ln();
            let c = st.legal[rng.random_range(0..st.legal.len())];
            st.col_used[c] = true;
            st.sym_used[self.symbols[r * n + c]] = true;
        }
        log_w
    }

    fn walk_most_constrained(&self, st: &mut WalkState, rng: &mut crate::rng::Rng) -> f64 {
        let n = self.n;
        st.col_used.fill(false);
        st.sym_used.fill(false);
        st.legal_count.fill(n);
        // unfilled rows, kept sorted so ties go to the lowest index
        st.open.clear();
        st.open.extend(0..n);
        let mut log_w = 0.0;
        while !st.open.is_empty() {
            let mut best = 0;
            for (i, &r) in st.open.iter().enumerate() {
                if st.legal_count[r] < st.legal_count[st.open[best]] {
                    best = i;
                }
            }
            let row = st.open.remove(best);
            let count = st.legal_count[row];
            if count == 0 {
                return f64::NEG_INFINITY;
            }
            log_w += (count as f64).ln();
            let base = row * n;
            let mut pick = rng.random_range(0..count);
            let c = (0..n)
                .find(|&c| {
                    if st.col_used[c] || st.sym_used[self.symbols[base + c]] {
                        return false;
                    }
                    if pick == 0 {
                        return true;
                    }
                    pick -= 1;
                    false
                })
                .expect("legal column");
            let s = self.symbols[base + c];
            for &r in &st.open {
                // (r, c) and the cell of symbol s in row r stop being legal
                let lost = !st.sym_used[self.symbols[r * n + c]] as usize + !st.col_used[self.position[r * n + s]] as usize;
                st.legal_count[r] -= lost;
            }
            st.col_used[c] = true;
            st.sym_used[s] = true;
        }
        log_w
    }
}

/// Mean and standard error of `exp(log_weights)`, computed relative to the
/// largest weight so orders with huge counts do not overflow intermediate
/// sums.
fn summarize(log_weights: &[f64], seed: u64) -> EstimateResult {
    let samples = log_weights.len() as u64;
    let top = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return EstimateResult { mean: 0.0, stderr: 0.0, log_mean: f64::NEG_INFINITY, log_stderr: 0.0, samples, seed };
    }
    let s = samples as f64;
    let scaled: Vec<f64> = log_weights.iter().map(|&lw| (lw - top).exp()).collect();
    let mean = scaled.iter().sum::<f64>() / s;
    let var = scaled.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (s - 1.0);
    let stderr = (var / s).sqrt();
    let scale = top.exp();
    EstimateResult {
        mean: mean * scale,
        stderr: stderr * scale,
        log_mean: mean.ln() + top,
        log_stderr: stderr / mean,
        samples,
        seed,
    }
}
