//! Latin squares, transversals and validation.

use std::fmt;

use crate::error::{Error, Result};

/// An order-`n` Latin square over the alphabet `offset..offset + n`.
///
/// Construction only checks the shape; use [`validate_latin`] (or
/// [`LatinSquare::is_latin`]) to check the Latin property. This lets callers
/// load and diagnose broken inputs.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LatinSquare {
    order: usize,
    cells: Vec<u32>,
    alphabet_offset: u32,
}

impl LatinSquare {
    /// Builds a square from row-major cells.
    pub fn new(order: usize, cells: Vec<u32>, alphabet_offset: u32) -> Result<Self> {
        if order == 0 || cells.len() != order * order {
            return Err(Error::InvalidOrder(order));
        }
        Ok(Self { order, cells, alphabet_offset })
    }

    pub fn from_rows(rows: &[Vec<u32>]) -> Result<Self> {
        let order = rows.len();
        if rows.iter().any(|r| r.len() != order) {
            return Err(Error::InvalidOrder(order));
        }
        Self::new(order, rows.concat(), 0)
    }

    /// Builds a square from a cell function. The caller vouches for the shape.
    pub(crate) fn from_fn(order: usize, offset: u32, f: impl Fn(usize, usize) -> u32) -> Self {
        let cells = (0..order).flat_map(|r| (0..order).map(move |c| (r, c))).map(|(r, c)| f(r, c)).collect();
        Self { order, cells, alphabet_offset: offset }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alphabet_offset(&self) -> u32 {
        self.alphabet_offset
    }

    /// Symbol at `(row, col)`.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.cells[row * self.order + col]
    }

    /// Symbol at `(row, col)` relative to the alphabet start, in `0..n` for a
    /// valid square.
    #[inline]
    pub fn symbol_index(&self, row: usize, col: usize) -> usize {
        (self.get(row, col) - self.alphabet_offset) as usize
    }

    pub fn row(&self, row: usize) -> &[u32] {
        &self.cells[row * self.order..(row + 1) * self.order]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.cells.chunks(self.order)
    }

    pub fn cells(&self) -> &[u32] {
        &self.cells
    }

    /// A copy with one cell overwritten (no validity check).
    pub fn with_cell(&self, row: usize, col: usize, symbol: u32) -> Self {
        let mut out = self.clone();
        out.cells[row * self.order + col] = symbol;
        out
    }

    /// The same square with every symbol moved into `offset..offset + n`.
    pub fn with_offset(&self, offset: u32) -> Self {
        let delta = offset as i64 - self.alphabet_offset as i64;
        Self {
            order: self.order,
            cells: self.cells.iter().map(|&v| (v as i64 + delta) as u32).collect(),
            alphabet_offset: offset,
        }
    }

    pub fn is_latin(&self) -> bool {
        validate_latin(self).valid
    }

    /// Row-major symbol indices (`cell - offset`) as bytes-friendly `usize`s.
    pub(crate) fn index_table(&self) -> Vec<usize> {
        self.cells.iter().map(|&v| v.wrapping_sub(self.alphabet_offset) as usize).collect()
    }
}

impl fmt::Debug for LatinSquare {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "LatinSquare(order={}, offset={})", self.order, self.alphabet_offset)?;
        for row in self.rows() {
            let line: Vec<String> = row.iter().map(u32::to_string).collect();
            writeln!(f, "  {}", line.join(" "))?;
        }
        Ok(())
    }
}

/// `n` cells of a square, one per row, one per column, one per symbol.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Transversal {
    pub positions: Vec<(usize, usize)>,
    pub symbols: Vec<u32>,
}

impl Transversal {
    /// Reads the transversal picking column `columns[r]` in row `r`. The result
    /// is not checked; see [`Transversal::check`].
    pub fn from_columns(square: &LatinSquare, columns: &[usize]) -> Self {
        let positions: Vec<_> = columns.iter().copied().enumerate().collect();
        Self::from_positions(square, positions)
    }

    /// Reads symbols for arbitrary positions; positions are sorted by row.
    pub fn from_positions(square: &LatinSquare, mut positions: Vec<(usize, usize)>) -> Self {
        positions.sort_unstable();
        let symbols = positions.iter().map(|&(r, c)| square.get(r, c)).collect();
        Self { positions, symbols }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Column chosen in each row, for a transversal sorted by row.
    pub fn columns(&self) -> Vec<usize> {
        self.positions.iter().map(|&(_, c)| c).collect()
    }

    /// Checks the transversal invariants against `square`.
    pub fn check(&self, square: &LatinSquare) -> Result<()> {
        let n = square.order();
        if self.positions.len() != n || self.symbols.len() != n {
            return Err(Error::NotATransversal(format!("expected {n} cells, got {}", self.positions.len())));
        }
        let mut rows = vec![false; n];
        let mut cols = vec![false; n];
        let mut syms = vec![false; n];
        for (&(r, c), &s) in self.positions.iter().zip(&self.symbols) {
            if r >= n || c >= n {
                return Err(Error::NotATransversal(format!("cell ({r},{c}) out of range")));
            }
            if square.get(r, c) != s {
                return Err(Error::NotATransversal(format!("cell ({r},{c}) holds {}, not {s}", square.get(r, c))));
            }
            let idx = s.wrapping_sub(square.alphabet_offset()) as usize;
            if idx >= n {
                return Err(Error::NotATransversal(format!("symbol {s} outside the alphabet")));
            }
            for (seen, v, what) in [(&mut rows, r, "row"), (&mut cols, c, "column"), (&mut syms, idx, "symbol")] {
                if std::mem::replace(&mut seen[v], true) {
                    return Err(Error::NotATransversal(format!("{what} {v} repeated")));
                }
            }
        }
        Ok(())
    }

    pub fn is_transversal_of(&self, square: &LatinSquare) -> bool {
        self.check(square).is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    RowDup,
    ColDup,
    Range,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub row: usize,
    pub column: usize,
    pub symbol: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub(crate) fn from_violations(violations: Vec<Violation>) -> Self {
        Self { valid: violations.is_empty(), violations }
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

/// The addition table of `Z_n`: `cells[i][j] = (i + j) mod n`.
pub fn cyclic_square(n: usize) -> Result<LatinSquare> {
    if n == 0 {
        return Err(Error::InvalidOrder(0));
    }
    Ok(LatinSquare::from_fn(n, 0, |r, c| ((r + c) % n) as u32))
}

/// Reports every repeated symbol in a row or column and every out-of-range
/// cell. A duplicate is reported at its second and later occurrences.
pub fn validate_latin(square: &LatinSquare) -> ValidationReport {
    let n = square.order();
    let offset = square.alphabet_offset();
    let mut violations = Vec::new();
    for r in 0..n {
        for c in 0..n {
            let v = square.get(r, c);
            if v < offset || (v - offset) as usize >= n {
                violations.push(Violation { kind: ViolationKind::Range, row: r, column: c, symbol: v });
            }
        }
    }
    let mut seen = vec![usize::MAX; n];
    for (kind, by_row) in [(ViolationKind::RowDup, true), (ViolationKind::ColDup, false)] {
        for line in 0..n {
            for pos in 0..n {
                let (r, c) = if by_row { (line, pos) } else { (pos, line) };
                let v = square.get(r, c);
                let Some(idx) = v.checked_sub(offset).map(|x| x as usize).filter(|&x| x < n) else {
                    continue;
                };
                if seen[idx] == line {
                    violations.push(Violation { kind, row: r, column: c, symbol: v });
                }
                seen[idx] = line;
            }
        }
        seen.fill(usize::MAX);
    }
    ValidationReport::from_violations(violations)
}

fn check_permutation(perm: &[usize], n: usize, what: &'static str) -> Result<()> {
    let mut seen = vec![false; n];
    let ok = perm.len() == n && perm.iter().all(|&p| p < n && !std::mem::replace(&mut seen[p], true));
    if ok {
        Ok(())
    } else {
        Err(Error::NotAPermutation { what, len: n })
    }
}

/// Applies an isotopy: row `r` moves to `row_perm[r]`, column `c` to
/// `col_perm[c]`, and symbol index `s` becomes `sym_perm[s]`.
pub fn relabel(square: &LatinSquare, row_perm: &[usize], col_perm: &[usize], sym_perm: &[usize]) -> Result<LatinSquare> {
    let n = square.order();
    check_permutation(row_perm, n, "row permutation")?;
    check_permutation(col_perm, n, "column permutation")?;
    check_permutation(sym_perm, n, "symbol permutation")?;
    let offset = square.alphabet_offset();
    let mut cells = vec![0u32; n * n];
    for r in 0..n {
        for c in 0..n {
            let s = square.symbol_index(r, c);
            if s >= n {
                return Err(Error::InvalidSquare(format!("symbol {} out of range", square.get(r, c))));
            }
            cells[row_perm[r] * n + col_perm[c]] = sym_perm[s] as u32 + offset;
        }
    }
    LatinSquare::new(n, cells, offset)
}

/// Whether the `n^2` superimposed symbol pairs are pairwise distinct.
pub fn are_orthogonal(a: &LatinSquare, b: &LatinSquare) -> bool {
    let n = a.order();
    if b.order() != n || !a.is_latin() || !b.is_latin() {
        return false;
    }
    let mut seen = vec![false; n * n];
    (0..n).all(|r| (0..n).all(|c| !std::mem::replace(&mut seen[a.symbol_index(r, c) * n + b.symbol_index(r, c)], true)))
}

/// Splits `square` into the `n` disjoint transversals given by the symbol
/// classes of an orthogonal `mate`: transversal `s` is the set of cells where
/// the mate holds its `s`-th symbol.
pub fn transversal_decomposition(square: &LatinSquare, mate: &LatinSquare) -> Result<Vec<Transversal>> {
    if !square.is_latin() {
        return Err(Error::InvalidSquare("decomposed square".into()));
    }
    if !are_orthogonal(square, mate) {
        return Err(Error::NotOrthogonal);
    }
    let n = square.order();
    let mut classes = vec![Vec::with_capacity(n); n];
    for r in 0..n {
        for c in 0..n {
            classes[mate.symbol_index(r, c)].push((r, c));
        }
    }
    Ok(classes.into_iter().map(|pos| Transversal::from_positions(square, pos)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_small_orders() {
        let c3 = cyclic_square(3).unwrap();
        assert_eq!(c3.cells(), &[0, 1, 2, 1, 2, 0, 2, 0, 1]);
        assert_eq!(cyclic_square(1).unwrap().cells(), &[0]);
        assert_eq!(cyclic_square(0), Err(Error::InvalidOrder(0)));
        for n in 1..=12 {
            assert!(cyclic_square(n).unwrap().is_latin());
        }
    }

    #[test]
    fn overwritten_cell_reports_both_duplicates() {
        let broken = cyclic_square(3).unwrap().with_cell(0, 0, 1);
        let report = validate_latin(&broken);
        assert!(!report.valid);
        assert!(report.has(ViolationKind::RowDup));
        assert!(report.has(ViolationKind::ColDup));
        assert!(!report.has(ViolationKind::Range));
    }

    #[test]
    fn range_violation_respects_offset() {
        let sq = cyclic_square(3).unwrap().with_offset(10);
        assert!(sq.is_latin());
        let report = validate_latin(&sq.with_cell(1, 1, 2));
        assert!(report.has(ViolationKind::Range));
    }

    #[test]
    fn relabel_identity_and_errors() {
        let c4 = cyclic_square(4).unwrap();
        let id: Vec<usize> = (0..4).collect();
        assert_eq!(relabel(&c4, &id, &id, &id).unwrap(), c4);
        assert!(matches!(relabel(&c4, &[0, 0, 1, 2], &id, &id), Err(Error::NotAPermutation { .. })));
        assert!(matches!(relabel(&c4, &id, &id, &[0, 1, 2]), Err(Error::NotAPermutation { .. })));
    }

    #[test]
    fn square_is_not_its_own_mate() {
        let c4 = cyclic_square(4).unwrap();
        assert_eq!(transversal_decomposition(&c4, &c4), Err(Error::NotOrthogonal));
    }

    #[test]
    fn transversal_check_rejects_repeats() {
        let c3 = cyclic_square(3).unwrap();
        assert!(Transversal::from_columns(&c3, &[0, 1, 2]).check(&c3).is_ok());
        // columns (0, 2, 1) all read symbol 0
        assert!(Transversal::from_columns(&c3, &[0, 2, 1]).check(&c3).is_err());
        assert!(Transversal::from_columns(&c3, &[0, 0, 1]).check(&c3).is_err());
    }
}
