//! Dense matrices over [`PadicScalar`] with valuation-pivoted elimination.
//!
//! Pivots are chosen with minimal valuation in their column, so every
//! multiplier used below a pivot is an l-adic integer. Rank decisions are
//! refused when a leftover entry is zero only modulo a power of `l` that is
//! not strictly smaller than every accepted pivot.

use std::fmt;

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::padics::{PadicScalar, Valuation};

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    prime: u64,
    data: Vec<PadicScalar>,
}

/// Reduced row echelon form together with the pivot bookkeeping.
#[derive(Clone, Debug)]
pub struct Reduced {
    pub rref: Matrix,
    /// Pivot column of each nonzero row, in order.
    pub pivots: Vec<usize>,
    /// Valuations of the pivots at the moment they were selected.
    pub pivot_valuations: Vec<i64>,
}

impl Reduced {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

impl Matrix {
    pub fn zeros(prime: u64, rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, prime, data: vec![PadicScalar::zero(prime); rows * cols] }
    }

    pub fn identity(prime: u64, n: usize, precision: i64) -> Self {
        let mut m = Self::zeros(prime, n, n);
        for i in 0..n {
            m.set(i, i, PadicScalar::one(prime, precision));
        }
        m
    }

    pub fn scalar(prime: u64, n: usize, value: &PadicScalar) -> Self {
        let mut m = Self::zeros(prime, n, n);
        for i in 0..n {
            m.set(i, i, value.clone());
        }
        m
    }

    pub fn from_rows(prime: u64, rows: Vec<Vec<PadicScalar>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        if let Some(x) = rows.iter().flatten().find(|x| x.prime() != prime) {
            return Err(Error::PrimeMismatch(prime, x.prime()));
        }
        Ok(Matrix { rows: r, cols: c, prime, data: rows.into_iter().flatten().collect() })
    }

    pub fn from_int_rows<T: Clone + Into<BigInt>>(prime: u64, rows: &[Vec<T>], precision: i64) -> Result<Self> {
        let rows = rows
            .iter()
            .map(|row| row.iter().map(|x| PadicScalar::from_int(x.clone(), prime, precision)).collect())
            .collect();
        Self::from_rows(prime, rows)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &PadicScalar {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: PadicScalar) {
        self.data[i * self.cols + j] = value;
    }

    pub fn entries(&self) -> impl Iterator<Item = &PadicScalar> {
        self.data.iter()
    }

    pub fn row(&self, i: usize) -> &[PadicScalar] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<PadicScalar> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn from_columns(prime: u64, rows: usize, columns: &[Vec<PadicScalar>]) -> Self {
        let mut m = Self::zeros(prime, rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            for (i, x) in col.iter().enumerate() {
                m.set(i, j, x.clone());
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.prime, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.prime != other.prime {
            return Err(Error::PrimeMismatch(self.prime, other.prime));
        }
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(self.with_data(data))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(self.with_data(data))
    }

    fn with_data(&self, data: Vec<PadicScalar>) -> Self {
        Matrix { rows: self.rows, cols: self.cols, prime: self.prime, data }
    }

    pub fn scale(&self, s: &PadicScalar) -> Self {
        self.with_data(self.data.iter().map(|a| a * s).collect())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.prime != other.prime {
            return Err(Error::PrimeMismatch(self.prime, other.prime));
        }
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.prime, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_exact_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if b.is_exact_zero() {
                        continue;
                    }
                    let cur = out.get(i, j) + &(a * b);
                    out.set(i, j, cur);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[PadicScalar]) -> Result<Vec<PadicScalar>> {
        if v.len() != self.cols {
            return Err(Error::Dimension("vector length".into()));
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(PadicScalar::zero(self.prime), |acc, (a, b)| &acc + &(a * b))
            })
            .collect())
    }

    pub fn pow(&self, k: u64, precision: i64) -> Result<Self> {
        let mut acc = Self::identity(self.prime, self.rows, precision);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    pub fn trace(&self) -> PadicScalar {
        (0..self.rows.min(self.cols)).fold(PadicScalar::zero(self.prime), |acc, i| &acc + self.get(i, i))
    }

    /// All entries vanish at their precision.
    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    /// Minimum entry valuation (`Infinity` for the zero matrix).
    pub fn min_valuation(&self) -> Valuation {
        self.data.iter().map(|x| x.valuation()).min().unwrap_or(Valuation::Infinity)
    }

    /// Minimum absolute precision among entries (`None` when every entry is exact).
    pub fn min_precision(&self) -> Option<i64> {
        self.data.iter().filter_map(|x| x.precision()).min()
    }

    pub fn eq_at_precision(&self, other: &Self) -> bool {
        self.sub(other).map(|d| d.is_zero()).unwrap_or(false)
    }

    /// Is `self` equal to `value * Id` at precision?
    pub fn is_scalar(&self, value: &PadicScalar) -> bool {
        self.is_square() && self.eq_at_precision(&Self::scalar(self.prime, self.rows, value))
    }

    pub fn hstack(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::Dimension("hstack row count".into()));
        }
        let mut m = Self::zeros(self.prime, self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.set(i, j, self.get(i, j).clone());
            }
            for j in 0..other.cols {
                m.set(i, self.cols + j, other.get(i, j).clone());
            }
        }
        Ok(m)
    }

    pub fn vstack(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::Dimension("vstack column count".into()));
        }
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        Ok(Matrix { rows: self.rows + other.rows, cols: self.cols, prime: self.prime, data })
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut m = Self::zeros(self.prime, rows.len(), cols.len());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                m.set(a, b, self.get(i, j).clone());
            }
        }
        m
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Reduced row echelon form, considering only the first `limit` columns
    /// for pivots.
    fn reduce_limited(&self, limit: usize) -> Result<Reduced> {
        self.reduce_grouped(&[limit])
    }

    /// Gauss-Jordan elimination with pivots drawn from consecutive column
    /// groups ending at `bounds`. Within the current group the pivot is an
    /// entry of least valuation over all remaining rows and columns, so
    /// every elimination factor is integral. `pivots[k]` is the pivot column
    /// of row `k`; pivots of earlier groups come first.
    pub fn reduce_grouped(&self, bounds: &[usize]) -> Result<Reduced> {
        let limit = bounds.last().copied().unwrap_or(0).min(self.cols);
        let mut m = self.clone();
        let mut pivots: Vec<usize> = Vec::new();
        let mut pivot_valuations = Vec::new();
        let mut r = 0;
        let mut start = 0;
        for &end in bounds {
            let end = end.min(limit);
            loop {
                if r == m.rows {
                    break;
                }
                let best = (start..end)
                    .filter(|c| !pivots.contains(c))
                    .flat_map(|c| (r..m.rows).map(move |i| (i, c)))
                    .filter_map(|(i, c)| m.get(i, c).valuation().finite().map(|v| (v, c, i)))
                    .min();
                let Some((v, c, i)) = best else { break };
                m.swap_rows(r, i);
                let pivot = m.get(r, c).clone();
                for i in 0..m.rows {
                    if i == r || m.get(i, c).is_zero() {
                        continue;
                    }
                    let factor = m.get(i, c).checked_div(&pivot)?;
                    for j in 0..m.cols {
                        let x = m.get(r, j);
                        if x.is_exact_zero() {
                            continue;
                        }
                        let updated = m.get(i, j) - &(&factor * x);
                        m.set(i, j, updated);
                    }
                    // the pivot column is zero by construction
                    m.set(i, c, PadicScalar::zero(m.prime));
                }
                pivots.push(c);
                pivot_valuations.push(v);
                r += 1;
            }
            start = end;
        }
        // leftover rows only hold zeros known to some floor
        let threshold = pivot_valuations.iter().copied().max().unwrap_or(0).max(0) + 1;
        for i in r..m.rows {
            for j in 0..limit {
                let x = m.get(i, j);
                if let Some(f) = x.precision() {
                    if f < threshold {
                        return Err(Error::Precision(format!(
                            "rank undecidable: residual entry known only mod {}^{f}",
                            m.prime
                        )));
                    }
                }
            }
        }
        for (k, &c) in pivots.iter().enumerate() {
            let inv = m.get(k, c).inv()?;
            for j in 0..m.cols {
                let x = m.get(k, j) * &inv;
                m.set(k, j, x);
            }
        }
        Ok(Reduced { rref: m, pivots, pivot_valuations })
    }

    pub fn reduce(&self) -> Result<Reduced> {
        self.reduce_limited(self.cols)
    }

    pub fn rank(&self) -> Result<usize> {
        Ok(self.reduce()?.rank())
    }

    /// Basis of the right kernel, one column per basis vector.
    pub fn kernel(&self) -> Result<Matrix> {
        let red = self.reduce()?;
        let free: Vec<usize> = (0..self.cols).filter(|c| !red.pivots.contains(c)).collect();
        let precision = self.min_precision().unwrap_or(crate::padics::DEFAULT_PRECISION);
        let mut columns = Vec::with_capacity(free.len());
        for &f in &free {
            let mut v = vec![PadicScalar::zero(self.prime); self.cols];
            v[f] = PadicScalar::one(self.prime, precision);
            for (k, &c) in red.pivots.iter().enumerate() {
                v[c] = red.rref.get(k, f).neg();
            }
            columns.push(v);
        }
        Ok(Self::from_columns(self.prime, self.cols, &columns))
    }

    /// Solves `self * x = b`; free variables are set to zero.
    pub fn solve(&self, b: &[PadicScalar]) -> Result<Vec<PadicScalar>> {
        if b.len() != self.rows {
            return Err(Error::Dimension("right-hand side length".into()));
        }
        let aug = self.hstack(&Self::from_columns(self.prime, self.rows, &[b.to_vec()]))?;
        let red = aug.reduce_limited(self.cols)?;
        for i in red.rank()..self.rows {
            if !red.rref.get(i, self.cols).is_zero() {
                return Err(Error::InvalidParameter("inconsistent linear system".into()));
            }
        }
        let mut x = vec![PadicScalar::zero(self.prime); self.cols];
        for (k, &c) in red.pivots.iter().enumerate() {
            x[c] = red.rref.get(k, self.cols).clone();
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::Dimension("inverse of a non-square matrix".into()));
        }
        let precision = self.min_precision().unwrap_or(crate::padics::DEFAULT_PRECISION);
        let aug = self.hstack(&Self::identity(self.prime, self.rows, precision))?;
        let red = aug.reduce_limited(self.cols)?;
        if red.rank() < self.rows {
            return Err(Error::DivisionByZero);
        }
        let cols: Vec<usize> = (self.cols..2 * self.cols).collect();
        let mut rows = vec![0; self.rows];
        for (k, &c) in red.pivots.iter().enumerate() {
            rows[c] = k;
        }
        Ok(red.rref.submatrix(&rows, &cols))
    }

    /// Determinant by fraction-tracking elimination.
    pub fn det(&self) -> Result<PadicScalar> {
        if !self.is_square() {
            return Err(Error::Dimension("determinant of a non-square matrix".into()));
        }
        let n = self.rows;
        let precision = self.min_precision().unwrap_or(crate::padics::DEFAULT_PRECISION);
        let mut m = self.clone();
        let mut det = PadicScalar::one(self.prime, precision);
        for c in 0..n {
            let best = (c..n).filter_map(|i| m.get(i, c).valuation().finite().map(|v| (v, i))).min();
            let Some((_, i)) = best else {
                let floor = m.column(c)[c..].iter().filter_map(|x| x.precision()).min();
                return Ok(PadicScalar::zero_mod(self.prime, floor.unwrap_or(precision)));
            };
            if i != c {
                m.swap_rows(i, c);
                det = det.neg();
            }
            let pivot = m.get(c, c).clone();
            det = &det * &pivot;
            for i in c + 1..n {
                if m.get(i, c).is_zero() {
                    continue;
                }
                let factor = m.get(i, c).checked_div(&pivot)?;
                for j in c..n {
                    let updated = m.get(i, j) - &(&factor * m.get(c, j));
                    m.set(i, j, updated);
                }
            }
        }
        Ok(det)
    }

    /// Integer entries as balanced residues modulo `l^precision`, for reports.
    pub fn to_residue_rows(&self, precision: i64) -> Result<Vec<Vec<String>>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.balanced_residue(precision).map(|r| r.to_string())).collect())
            .collect()
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[Vec<i64>]) -> Matrix {
        Matrix::from_int_rows(3, rows, 20).unwrap()
    }

    #[test]
    fn rank_and_kernel() {
        let a = m(&[vec![1, 2, 3], vec![2, 4, 6], vec![0, 3, 9]]);
        assert_eq!(a.rank().unwrap(), 2);
        let k = a.kernel().unwrap();
        assert_eq!(k.cols(), 1);
        assert!(a.mul(&k).unwrap().is_zero());
    }

    #[test]
    fn inverse_round_trip() {
        let a = m(&[vec![1, 3], vec![9, 1]]);
        let inv = a.inverse().unwrap();
        assert!(a.mul(&inv).unwrap().eq_at_precision(&Matrix::identity(3, 2, 20)));
    }

    #[test]
    fn inverse_with_denominators() {
        let a = m(&[vec![3, 0], vec![0, 1]]);
        let inv = a.inverse().unwrap();
        assert_eq!(inv.get(0, 0).valuation(), Valuation::Finite(-1));
    }

    #[test]
    fn solve_consistent_and_inconsistent() {
        let a = m(&[vec![1, 1], vec![1, -1]]);
        let b: Vec<PadicScalar> = [4, 2].iter().map(|&x| PadicScalar::from_int(x, 3, 20)).collect();
        let x = a.solve(&b).unwrap();
        assert!(x[0].eq_at_precision(&PadicScalar::from_int(3, 3, 20)));
        assert!(x[1].eq_at_precision(&PadicScalar::from_int(1, 3, 20)));
        let sing = m(&[vec![1, 1], vec![1, 1]]);
        assert!(sing.solve(&b).is_err());
    }

    #[test]
    fn determinant() {
        let a = m(&[vec![2, 1], vec![7, 4]]);
        assert!(a.det().unwrap().eq_at_precision(&PadicScalar::from_int(1, 3, 20)));
        let s = m(&[vec![1, 2], vec![2, 4]]);
        assert!(s.det().unwrap().is_zero());
    }

    #[test]
    fn low_precision_residual_is_undecidable() {
        let a = Matrix::from_rows(
            3,
            vec![
                vec![PadicScalar::from_int(1, 3, 20), PadicScalar::zero(3)],
                vec![PadicScalar::zero(3), PadicScalar::zero_mod(3, 0)],
            ],
        )
        .unwrap();
        assert!(matches!(a.rank(), Err(Error::Precision(_))));
    }
}
