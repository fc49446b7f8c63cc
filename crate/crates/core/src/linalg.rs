//! Dense linear algebra over the rationals.

use crate::rational::Rational;

/// A dense row-major matrix of exact rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rational::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged matrix");
            data.extend(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += &(a * b);
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Vec<Rational> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = Rational::zero();
                for (j, x) in v.iter().enumerate() {
                    if !x.is_zero() {
                        acc += &(&self[(i, j)] * x);
                    }
                }
                acc
            })
            .collect()
    }

    /// Row echelon form in place; returns the pivot columns.
    fn eliminate(&mut self, reduced: bool) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row == self.rows {
                break;
            }
            let Some(p) = (row..self.rows).find(|&r| !self[(r, col)].is_zero()) else {
                continue;
            };
            self.swap_rows(row, p);
            let inv = self[(row, col)].recip().unwrap();
            for j in 0..self.cols {
                self[(row, j)] = &self[(row, j)] * &inv;
            }
            let lo = if reduced { 0 } else { row + 1 };
            for r in lo..self.rows {
                if r == row || self[(r, col)].is_zero() {
                    continue;
                }
                let factor = self[(r, col)].clone();
                for j in col..self.cols {
                    let delta = &factor * &self[(row, j)];
                    self[(r, j)] -= &delta;
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self) -> usize {
        self.clone().eliminate(false).len()
    }

    pub fn inverse(&self) -> Option<Matrix> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = Self::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, n + i)] = Rational::one();
        }
        let pivots = aug.eliminate(true);
        if pivots.len() < n || pivots[n - 1] >= n {
            return None;
        }
        let mut inv = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv[(i, j)] = aug[(i, n + j)].clone();
            }
        }
        Some(inv)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Rational::is_zero)
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = Rational;
    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        &mut self.data[i * self.cols + j]
    }
}

/// Symplectic basis of a nondegenerate antisymmetric matrix `m`.
///
/// Returns `a` whose columns are `e_1..e_k, f_1..f_k` with
/// `aᵀ m a` equal to the standard block matrix `[[0, I], [-I, 0]]`.
pub fn symplectic_basis(m: &Matrix) -> Option<Matrix> {
    let n = m.rows();
    if !n.is_multiple_of(2) {
        return None;
    }
    let k = n / 2;
    let form = |u: &[Rational], v: &[Rational]| -> Rational {
        let mv = m.mul_vec(v);
        u.iter()
            .zip(&mv)
            .fold(Rational::zero(), |acc, (a, b)| acc + &(a * b))
    };
    let mut pool: Vec<Vec<Rational>> = (0..n)
        .map(|i| (0..n).map(|j| Rational::from_int((i == j) as i64)).collect())
        .collect();
    let mut es = Vec::with_capacity(k);
    let mut fs = Vec::with_capacity(k);
    for _ in 0..k {
        let e = pool.iter().position(|v| v.iter().any(|x| !x.is_zero()))?;
        let e = pool.remove(e);
        let fi = pool.iter().position(|v| !form(&e, v).is_zero())?;
        let f = pool.remove(fi);
        let scale = form(&e, &f).recip()?;
        let f: Vec<Rational> = f.iter().map(|x| x * &scale).collect();
        // Project the remaining vectors onto the complement of span(e, f).
        for v in pool.iter_mut() {
            let a = form(v, &f);
            let b = form(&e, v);
            // v' = v - ω(v,f) e - ω(e,v) f, so that ω(e,v') = ω(f,v') = 0.
            for (i, x) in v.iter_mut().enumerate() {
                *x = &*x - &(&a * &e[i]) - &(&b * &f[i]);
            }
        }
        es.push(e);
        fs.push(f);
    }
    let mut a = Matrix::zeros(n, n);
    for (c, v) in es.iter().chain(fs.iter()).enumerate() {
        for (r, x) in v.iter().enumerate() {
            a[(r, c)] = x.clone();
        }
    }
    Some(a)
}

/// The standard block matrix of `Σ dp_i ∧ dq_i` in `2k` variables ordered `(p, q)`.
pub fn standard_symplectic(k: usize) -> Matrix {
    let mut j = Matrix::zeros(2 * k, 2 * k);
    for i in 0..k {
        j[(i, k + i)] = Rational::one();
        j[(k + i, i)] = -Rational::one();
    }
    j
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> Rational {
        Rational::from_int(n)
    }

    #[test]
    fn inverse_and_rank() {
        let m = Matrix::from_rows(vec![vec![r(2), r(1)], vec![r(1), r(1)]]);
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv), Matrix::identity(2));
        let s = Matrix::from_rows(vec![vec![r(1), r(2)], vec![r(2), r(4)]]);
        assert!(s.inverse().is_none());
        assert_eq!(s.rank(), 1);
    }

    #[test]
    fn symplectic_basis_normalizes() {
        let m = Matrix::from_rows(vec![
            vec![r(0), r(2), r(1), r(0)],
            vec![r(-2), r(0), r(0), r(3)],
            vec![r(-1), r(0), r(0), r(1)],
            vec![r(0), r(-3), r(-1), r(0)],
        ]);
        let a = symplectic_basis(&m).unwrap();
        assert_eq!(a.transpose().mul(&m).mul(&a), standard_symplectic(2));
    }
}
