//! Near-uniform random Latin squares via the Jacobson–Matthews chain.
//!
//! The chain walks on the incidence cube of a square (a `n x n x n` array with
//! entries in `{-1, 0, 1}`), alternating between proper squares and improper
//! ones carrying a single `-1` cell. Its stationary distribution restricted to
//! proper squares is uniform.

use rand::Rng as _;

use crate::error::Result;
use crate::latin::{cyclic_square, LatinSquare};
use crate::rng::{rng_from, Rng};

/// Chain moves per sample. `None` uses `10 * n^3`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SamplerConfig {
    pub moves: Option<u64>,
}

impl SamplerConfig {
    pub fn moves_for(&self, n: usize) -> u64 {
        self.moves.unwrap_or(10 * (n as u64).pow(3))
    }
}

/// A random order-`n` square with the default chain length, fully determined by
/// `seed`.
pub fn uniform_random_square(n: usize, seed: u64) -> Result<LatinSquare> {
    uniform_random_square_with(n, seed, &SamplerConfig::default())
}

pub fn uniform_random_square_with(n: usize, seed: u64, config: &SamplerConfig) -> Result<LatinSquare> {
    let start = cyclic_square(n)?;
    let mut rng = rng_from(seed, &[0x4a4d]);
    Ok(jacobson_matthews(&start, config.moves_for(n), &mut rng))
}

/// Runs the chain from `start` (which must be a valid square) for about
/// `moves` moves and returns a proper square.
///
/// The stopping rule counts proper squares, not moves: the chain watched only
/// at proper squares is itself a Markov chain, uniform in the limit, whereas
/// the first proper square after a fixed number of moves is biased (where an
/// improper excursion ends depends on where it started). A proper visit takes
/// `n - 1` moves on average, so the chain stops after `ceil(moves / (n - 1))`
/// of them.
pub fn jacobson_matthews(start: &LatinSquare, moves: u64, rng: &mut Rng) -> LatinSquare {
    let n = start.order();
    if n == 1 {
        return start.clone();
    }
    let mut cube = IncidenceCube::from_square(start);
    let target = moves.div_ceil(n as u64 - 1).max(1);
    let mut visited = 0u64;
    while visited < target {
        cube.step(rng);
        visited += cube.improper.is_none() as u64;
    }
    cube.to_square(start.alphabet_offset())
}

struct IncidenceCube {
    n: usize,
    cells: Vec<i8>,
    improper: Option<(usize, usize, usize)>,
}

impl IncidenceCube {
    fn from_square(square: &LatinSquare) -> Self {
        let n = square.order();
        let mut cells = vec![0i8; n * n * n];
        for r in 0..n {
            for c in 0..n {
                cells[(r * n + c) * n + square.symbol_index(r, c)] = 1;
            }
        }
        Self { n, cells, improper: None }
    }

    #[inline]
    fn idx(&self, x: usize, y: usize, z: usize) -> usize {
        (x * self.n + y) * self.n + z
    }

    #[inline]
    fn at(&self, x: usize, y: usize, z: usize) -> i8 {
        self.cells[self.idx(x, y, z)]
    }

    #[inline]
    fn add(&mut self, x: usize, y: usize, z: usize, d: i8) {
        let i = self.idx(x, y, z);
        self.cells[i] += d;
    }

    /// Positions along a line holding `+1`, via `probe(t)`. A proper line has
    /// one; a line through the improper cell has two.
    fn ones(&self, probe: impl Fn(usize) -> i8) -> ([usize; 2], usize) {
        let mut found = [0usize; 2];
        let mut count = 0;
        for t in 0..self.n {
            if probe(t) == 1 {
                found[count] = t;
                count += 1;
                if count == 2 {
                    break;
                }
            }
        }
        (found, count)
    }

    fn pick(&self, probe: impl Fn(usize) -> i8, rng: &mut Rng) -> usize {
        let (found, count) = self.ones(probe);
        debug_assert!(count >= 1);
        if count == 2 && rng.random_bool(0.5) {
            found[1]
        } else {
            found[0]
        }
    }

    fn step(&mut self, rng: &mut Rng) {
        let n = self.n;
        let (x, y, z) = match self.improper {
            Some(cell) => cell,
            None => {
                // uniform over the 0-cells of a proper cube
                let x = rng.random_range(0..n);
                let y = rng.random_range(0..n);
                let current = self.ones(|t| self.at(x, y, t)).0[0];
                let mut z = rng.random_range(0..n - 1);
                if z >= current {
                    z += 1;
                }
                (x, y, z)
            }
        };
        let x1 = self.pick(|t| self.at(t, y, z), rng);
        let y1 = self.pick(|t| self.at(x, t, z), rng);
        let z1 = self.pick(|t| self.at(x, y, t), rng);

        self.add(x, y, z, 1);
        self.add(x, y1, z1, 1);
        self.add(x1, y, z1, 1);
        self.add(x1, y1, z, 1);
        self.add(x, y, z1, -1);
        self.add(x, y1, z, -1);
        self.add(x1, y, z, -1);
        self.add(x1, y1, z1, -1);

        self.improper = (self.at(x1, y1, z1) == -1).then_some((x1, y1, z1));
    }

    fn to_square(&self, offset: u32) -> LatinSquare {
        debug_assert!(self.improper.is_none());
        let n = self.n;
        LatinSquare::from_fn(n, offset, |r, c| (0..n).find(|&z| self.at(r, c, z) == 1).expect("proper cube") as u32 + offset)
    }
}

/// Uniformly random permutation of `0..n`.
pub fn random_permutation(n: usize, rng: &mut Rng) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}
