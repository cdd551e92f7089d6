//! Latin hypercubes in 0-1 representation.
//!
//! An order-`n`, dimension-`d` Latin hypercube is stored as the set of its
//! `n^d` 1-elements, each an index tuple in `[n]^(d+1)`. Every line (all
//! indices fixed but one) holds exactly one 1-element.

use std::ops::ControlFlow;

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::latin::LatinSquare;

pub const MAX_BRUTE_ORDER: usize = 8;
pub const MAX_BRUTE_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatinHypercube01 {
    order: usize,
    dim: usize,
    /// 1-elements, sorted, flattened with stride `dim + 1`.
    ones: Vec<usize>,
}

/// Group used by [`group_hypercube`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    /// `Z_n` under addition.
    Cyclic,
    /// `Z_2^m` under XOR; `n` must be a power of two.
    Elementary2,
}

impl LatinHypercube01 {
    /// Wraps a list of 1-elements. Only tuple arity is checked; use
    /// [`validate_hypercube`] for the line property.
    pub fn new(order: usize, dim: usize, mut ones: Vec<Vec<usize>>) -> Result<Self> {
        if order == 0 || dim == 0 {
            return Err(Error::InvalidHypercube(format!("order {order}, dimension {dim}")));
        }
        if let Some(bad) = ones.iter().find(|t| t.len() != dim + 1) {
            return Err(Error::InvalidHypercube(format!("tuple {bad:?} does not have {} indices", dim + 1)));
        }
        ones.sort_unstable();
        Ok(Self { order, dim, ones: ones.concat() })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn arity(&self) -> usize {
        self.dim + 1
    }

    pub fn len(&self) -> usize {
        self.ones.len() / self.arity()
    }

    pub fn is_empty(&self) -> bool {
        self.ones.is_empty()
    }

    pub fn ones(&self) -> impl Iterator<Item = &[usize]> {
        self.ones.chunks(self.arity())
    }

    /// 1-elements whose first index is `i`.
    pub fn hyperplane(&self, i: usize) -> impl Iterator<Item = &[usize]> {
        self.ones().filter(move |t| t[0] == i)
    }

    /// 1-elements whose index on `axis` is `value`.
    pub fn hyperplane_on(&self, axis: usize, value: usize) -> impl Iterator<Item = &[usize]> {
        self.ones().filter(move |t| t[axis] == value)
    }

    pub fn contains(&self, tuple: &[usize]) -> bool {
        // ones are sorted, so chunks are in lexicographic order
        let arity = self.arity();
        let (mut lo, mut hi) = (0, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.ones[mid * arity..(mid + 1) * arity].cmp(tuple) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    /// Copy without one 1-element (used to build broken inputs).
    pub fn without(&self, tuple: &[usize]) -> Self {
        let ones = self.ones().filter(|t| *t != tuple).map(<[usize]>::to_vec).collect();
        Self::new(self.order, self.dim, ones).expect("same shape")
    }
}

/// The 0-1 form of a square: 1-elements `(i, j, L[i][j] - offset)`.
pub fn from_square(square: &LatinSquare) -> Result<LatinHypercube01> {
    if !square.is_latin() {
        return Err(Error::InvalidSquare("hypercube conversion needs a Latin square".into()));
    }
    let n = square.order();
    let ones = (0..n).flat_map(|i| (0..n).map(move |j| vec![i, j, square.symbol_index(i, j)])).collect();
    LatinHypercube01::new(n, 2, ones)
}

/// Dimension-1 hypercube of a permutation: 1-elements `(i, perm[i])`.
pub fn from_permutation(perm: &[usize]) -> Result<LatinHypercube01> {
    let ones = perm.iter().enumerate().map(|(i, &p)| vec![i, p]).collect();
    LatinHypercube01::new(perm.len(), 1, ones)
}

/// The iterated group table: 1-elements `(x_1, ..., x_d, x_1 * ... * x_d)`.
pub fn group_hypercube(order: usize, dim: usize, group: Group) -> Result<LatinHypercube01> {
    if group == Group::Elementary2 && !order.is_power_of_two() {
        return Err(Error::InvalidOrder(order));
    }
    if order == 0 || dim == 0 {
        return Err(Error::InvalidHypercube(format!("order {order}, dimension {dim}")));
    }
    let total = order.pow(dim as u32);
    let ones = (0..total)
        .map(|mut code| {
            let mut t: Vec<usize> = (0..dim)
                .map(|_| {
                    let x = code % order;
                    code /= order;
                    x
                })
                .rev()
                .collect();
            let last = match group {
                Group::Cyclic => t.iter().sum::<usize>() % order,
                Group::Elementary2 => t.iter().fold(0, |a, &x| a ^ x),
            };
            t.push(last);
            t
        })
        .collect();
    LatinHypercube01::new(order, dim, ones)
}

/// A line (all indices but `axis` fixed) whose 1-element count is not 1.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct LineViolation {
    pub axis: usize,
    /// Full index tuple with the free `axis` entry set to 0.
    pub line: Vec<usize>,
    pub ones: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct HypercubeValidation {
    pub valid: bool,
    pub count: usize,
    pub expected_count: usize,
    pub out_of_range: Vec<Vec<usize>>,
    pub violations: Vec<LineViolation>,
}

pub fn validate_hypercube(h: &LatinHypercube01) -> HypercubeValidation {
    let (n, arity) = (h.order(), h.arity());
    let expected_count = n.pow(h.dim() as u32);
    let out_of_range: Vec<Vec<usize>> = h.ones().filter(|t| t.iter().any(|&x| x >= n)).map(<[usize]>::to_vec).collect();
    let mut violations = Vec::new();
    if out_of_range.is_empty() {
        for axis in 0..arity {
            let mut counts = vec![0usize; expected_count];
            for t in h.ones() {
                counts[line_key(t, axis, n)] += 1;
            }
            for (key, &ones) in counts.iter().enumerate().filter(|(_, &k)| k != 1) {
                violations.push(LineViolation { axis, line: line_from_key(key, axis, n, arity), ones });
            }
        }
    }
    let count = h.len();
    HypercubeValidation {
        valid: out_of_range.is_empty() && violations.is_empty() && count == expected_count,
        count,
        expected_count,
        out_of_range,
        violations,
    }
}

fn line_key(t: &[usize], axis: usize, n: usize) -> usize {
    t.iter().enumerate().filter(|&(a, _)| a != axis).fold(0, |acc, (_, &x)| acc * n + x)
}

fn line_from_key(mut key: usize, axis: usize, n: usize, arity: usize) -> Vec<usize> {
    let mut line = vec![0; arity];
    for a in (0..arity).rev().filter(|&a| a != axis) {
        line[a] = key % n;
        key /= n;
    }
    line
}

/// `n` 1-elements, exactly one in each hyperplane of every axis.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HypercubeTransversal {
    pub elements: Vec<Vec<usize>>,
}

impl HypercubeTransversal {
    pub fn check(&self, h: &LatinHypercube01) -> Result<()> {
        let n = h.order();
        if self.elements.len() != n {
            return Err(Error::NotATransversal(format!("expected {n} elements, got {}", self.elements.len())));
        }
        for e in &self.elements {
            if !h.contains(e) {
                return Err(Error::NotATransversal(format!("{e:?} is not a 1-element")));
            }
        }
        for axis in 0..h.arity() {
            let mut seen = vec![false; n];
            for e in &self.elements {
                if std::mem::replace(&mut seen[e[axis]], true) {
                    return Err(Error::NotATransversal(format!("axis {axis} value {} repeated", e[axis])));
                }
            }
        }
        Ok(())
    }

    /// The element in hyperplane `i` of the first axis.
    pub fn in_hyperplane(&self, i: usize) -> Option<&[usize]> {
        self.elements.iter().find(|e| e[0] == i).map(Vec::as_slice)
    }
}

/// A square transversal as a hypercube transversal of [`from_square`].
pub fn transversal_from_square(square: &LatinSquare, t: &crate::latin::Transversal) -> HypercubeTransversal {
    HypercubeTransversal {
        elements: t.positions.iter().map(|&(r, c)| vec![r, c, square.symbol_index(r, c)]).collect(),
    }
}

fn check_brute_guard(h: &LatinHypercube01) -> Result<()> {
    if h.order() > MAX_BRUTE_ORDER || h.dim() > MAX_BRUTE_DIM {
        return Err(Error::TooLarge { order: h.order().max(h.dim()), limit: MAX_BRUTE_ORDER });
    }
    let report = validate_hypercube(h);
    if !report.valid {
        return Err(Error::InvalidHypercube(format!("{} line violations", report.violations.len())));
    }
    Ok(())
}

/// Visits each transversal as the sequence of its elements ordered by first
/// index: one representative per hyperplane, with pairwise distinct values on
/// every other axis.
fn visit_transversals<F>(h: &LatinHypercube01, mut f: F)
where
    F: FnMut(&[&[usize]]) -> ControlFlow<()>,
{
    let n = h.order();
    let arity = h.arity();
    let planes: Vec<Vec<&[usize]>> = (0..n).map(|i| h.hyperplane(i).collect()).collect();
    let mut used = vec![vec![false; n]; arity];
    let mut chosen: Vec<&[usize]> = Vec::with_capacity(n);

    fn go<'a, F: FnMut(&[&[usize]]) -> ControlFlow<()>>(
        planes: &[Vec<&'a [usize]>],
        used: &mut [Vec<bool>],
        chosen: &mut Vec<&'a [usize]>,
        f: &mut F,
    ) -> ControlFlow<()> {
        let i = chosen.len();
        if i == planes.len() {
            return f(chosen);
        }
        for &e in &planes[i] {
            if (1..e.len()).any(|a| used[a][e[a]]) {
                continue;
            }
            for a in 1..e.len() {
                used[a][e[a]] = true;
            }
            chosen.push(e);
            let flow = go(planes, used, chosen, f);
            chosen.pop();
            for a in 1..e.len() {
                used[a][e[a]] = false;
            }
            flow?;
        }
        ControlFlow::Continue(())
    }
    let _ = go(&planes, &mut used, &mut chosen, &mut f);
}

/// Exact transversal count by exhaustive search. Guarded to `n <= 8`,
/// `d <= 3`.
pub fn count_transversals_brute(h: &LatinHypercube01) -> Result<BigUint> {
    check_brute_guard(h)?;
    let mut count = 0u64;
    visit_transversals(h, |_| {
        count += 1;
        ControlFlow::Continue(())
    });
    Ok(BigUint::from(count))
}

/// Every transversal, under the same guard as [`count_transversals_brute`].
pub fn enumerate_hypercube_transversals(h: &LatinHypercube01) -> Result<Vec<HypercubeTransversal>> {
    check_brute_guard(h)?;
    let mut out = Vec::new();
    visit_transversals(h, |els| {
        out.push(HypercubeTransversal { elements: els.iter().map(|e| e.to_vec()).collect() });
        ControlFlow::Continue(())
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latin::cyclic_square;

    #[test]
    fn square_conversion() {
        let h = from_square(&cyclic_square(3).unwrap()).unwrap();
        assert_eq!(h.len(), 9);
        assert!(h.ones().all(|t| t[2] == (t[0] + t[1]) % 3));
        assert!(validate_hypercube(&h).valid);
        let h1 = from_square(&cyclic_square(1).unwrap()).unwrap();
        assert_eq!(h1.ones().collect::<Vec<_>>(), vec![&[0, 0, 0][..]]);
    }

    #[test]
    fn deleted_element_leaves_empty_lines() {
        let h = from_square(&cyclic_square(3).unwrap()).unwrap().without(&[1, 1, 2]);
        let report = validate_hypercube(&h);
        assert!(!report.valid);
        assert!(report.violations.iter().all(|v| v.ones == 0));
        // one empty line per axis through the deleted element
        assert_eq!(report.violations.len(), 3);
        assert!(report.violations.contains(&LineViolation { axis: 2, line: vec![1, 1, 0], ones: 0 }));
    }

    #[test]
    fn group_hypercubes_are_latin() {
        for (n, d, g) in [(2, 3, Group::Elementary2), (4, 3, Group::Elementary2), (4, 3, Group::Cyclic), (3, 1, Group::Cyclic), (5, 2, Group::Cyclic)] {
            let h = group_hypercube(n, d, g).unwrap();
            let report = validate_hypercube(&h);
            assert!(report.valid, "n={n} d={d} {g:?}");
            for axis in 0..=d {
                for v in 0..n {
                    assert_eq!(h.hyperplane_on(axis, v).count(), n.pow(d as u32 - 1));
                }
            }
        }
        assert!(group_hypercube(3, 2, Group::Elementary2).is_err());
    }

    #[test]
    fn permutation_matrix_has_one_transversal() {
        let h = from_permutation(&[2, 0, 3, 1]).unwrap();
        assert!(validate_hypercube(&h).valid);
        assert_eq!(count_transversals_brute(&h).unwrap(), BigUint::from(1u32));
    }

    #[test]
    fn brute_guard() {
        let h = from_square(&cyclic_square(9).unwrap()).unwrap();
        assert!(matches!(count_transversals_brute(&h), Err(Error::TooLarge { .. })));
        let h4 = group_hypercube(2, 4, Group::Cyclic).unwrap();
        assert!(matches!(count_transversals_brute(&h4), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn enumerated_transversals_check() {
        let h = group_hypercube(4, 3, Group::Elementary2).unwrap();
        let all = enumerate_hypercube_transversals(&h).unwrap();
        assert_eq!(all.len() as u64, count_transversals_brute(&h).unwrap().try_into().unwrap_or(u64::MAX));
        assert!(all.iter().all(|t| t.check(&h).is_ok()));
    }
}
