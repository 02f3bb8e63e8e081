//! Dense linear algebra over a [`Field`]: reduced row echelon subspaces,
//! kernels and affine solves.

use crate::field::{Fe, Field};

/// A subspace of `k^n` in reduced row echelon form. The pivot of a row is
/// its first nonzero column; rows are sorted by pivot and every pivot column
/// is zero outside its own row.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rref {
    ncols: usize,
    pivots: Vec<usize>,
    rows: Vec<Vec<Fe>>,
}

impl Rref {
    pub fn zero(ncols: usize) -> Self {
        Rref { ncols, pivots: Vec::new(), rows: Vec::new() }
    }

    pub fn full(ncols: usize) -> Self {
        let rows = (0..ncols).map(|i| unit(ncols, i)).collect();
        Rref { ncols, pivots: (0..ncols).collect(), rows }
    }

    pub fn from_rows<I: IntoIterator<Item = Vec<Fe>>>(ncols: usize, rows: I, f: &Field) -> Self {
        let mut s = Rref::zero(ncols);
        for r in rows {
            s.insert(r, f);
        }
        s
    }

    /// Build directly from rows already in reduced echelon form.
    pub fn from_reduced(ncols: usize, pivots: Vec<usize>, rows: Vec<Vec<Fe>>) -> Self {
        debug_assert_eq!(pivots.len(), rows.len());
        Rref { ncols, pivots, rows }
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn rows(&self) -> &[Vec<Fe>] {
        &self.rows
    }

    pub fn is_pivot(&self, col: usize) -> bool {
        self.pivots.binary_search(&col).is_ok()
    }

    /// Columns that are not pivots, ascending.
    pub fn free_columns(&self) -> Vec<usize> {
        (0..self.ncols).filter(|c| !self.is_pivot(*c)).collect()
    }

    /// Reduce `v` modulo the subspace: the result vanishes on every pivot column.
    pub fn reduce(&self, v: &[Fe], f: &Field) -> Vec<Fe> {
        let mut v = v.to_vec();
        self.reduce_in_place(&mut v, f);
        v
    }

    pub fn reduce_in_place(&self, v: &mut [Fe], f: &Field) {
        for (p, row) in self.pivots.iter().zip(&self.rows) {
            let c = v[*p];
            if !c.is_zero() {
                let nc = f.neg(c);
                axpy(v, nc, row, *p, f);
            }
        }
    }

    pub fn contains(&self, v: &[Fe], f: &Field) -> bool {
        self.reduce(v, f).iter().all(|x| x.is_zero())
    }

    /// Add `v` to the span; returns whether the dimension grew.
    pub fn insert(&mut self, v: Vec<Fe>, f: &Field) -> bool {
        debug_assert_eq!(v.len(), self.ncols);
        let mut v = v;
        self.reduce_in_place(&mut v, f);
        let Some(p) = v.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = f.inv(v[p]).unwrap();
        for x in v.iter_mut().skip(p) {
            *x = f.mul(*x, inv);
        }
        for row in self.rows.iter_mut() {
            let c = row[p];
            if !c.is_zero() {
                axpy(row, f.neg(c), &v, p, f);
            }
        }
        let at = self.pivots.partition_point(|&q| q < p);
        self.pivots.insert(at, p);
        self.rows.insert(at, v);
        true
    }

    pub fn sum(&self, other: &Rref, f: &Field) -> Rref {
        let mut s = self.clone();
        for r in &other.rows {
            s.insert(r.clone(), f);
        }
        s
    }

    pub fn is_subspace_of(&self, other: &Rref, f: &Field) -> bool {
        self.rows.iter().all(|r| other.contains(r, f))
    }

    pub fn intersect(&self, other: &Rref, f: &Field) -> Rref {
        // coefficient vectors c with sum c_k u_k reducing to zero modulo `other`
        let images: Vec<Vec<Fe>> = self.rows.iter().map(|r| other.reduce(r, f)).collect();
        let d = self.rows.len();
        let mat: Vec<Vec<Fe>> = (0..self.ncols)
            .map(|col| (0..d).map(|k| images[k][col]).collect())
            .collect();
        let ker = kernel(&mat, d, f);
        let vecs = ker.into_iter().map(|c| combine(&c, &self.rows, self.ncols, f));
        Rref::from_rows(self.ncols, vecs, f)
    }

    /// Image of the subspace under a linear map given on coordinates.
    pub fn map(&self, ncols_out: usize, f: &Field, apply: impl Fn(&[Fe]) -> Vec<Fe>) -> Rref {
        Rref::from_rows(ncols_out, self.rows.iter().map(|r| apply(r)), f)
    }
}

pub fn unit(n: usize, i: usize) -> Vec<Fe> {
    let mut v = vec![Fe::ZERO; n];
    v[i] = Fe::ONE;
    v
}

/// `v[from..] += c * w[from..]`
#[inline]
pub fn axpy(v: &mut [Fe], c: Fe, w: &[Fe], from: usize, f: &Field) {
    for (x, y) in v[from..].iter_mut().zip(&w[from..]) {
        if !y.is_zero() {
            *x = f.mul_add(*x, c, *y);
        }
    }
}

/// `sum c_k rows_k`
pub fn combine(c: &[Fe], rows: &[Vec<Fe>], ncols: usize, f: &Field) -> Vec<Fe> {
    let mut out = vec![Fe::ZERO; ncols];
    for (ck, r) in c.iter().zip(rows) {
        if !ck.is_zero() {
            axpy(&mut out, *ck, r, 0, f);
        }
    }
    out
}

/// Basis of `{x in k^n : A x = 0}` for `A` given as a list of rows of length `n`.
pub fn kernel(a: &[Vec<Fe>], n: usize, f: &Field) -> Vec<Vec<Fe>> {
    let r = Rref::from_rows(n, a.iter().cloned(), f);
    let mut out = Vec::new();
    for free in r.free_columns() {
        let mut x = vec![Fe::ZERO; n];
        x[free] = Fe::ONE;
        for (p, row) in r.pivots.iter().zip(&r.rows) {
            x[*p] = f.neg(row[free]);
        }
        out.push(x);
    }
    out
}

pub fn rank(a: &[Vec<Fe>], n: usize, f: &Field) -> usize {
    Rref::from_rows(n, a.iter().cloned(), f).dim()
}

/// Solutions of `A x = b`: a particular solution and a kernel basis, or
/// `None` if the system is inconsistent.
pub fn solve(a: &[Vec<Fe>], b: &[Fe], n: usize, f: &Field) -> Option<(Vec<Fe>, Vec<Vec<Fe>>)> {
    debug_assert_eq!(a.len(), b.len());
    // augmented column n holds -b, so [x, 1] in the kernel means A x = b
    let aug: Vec<Vec<Fe>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(f.neg(*bi));
            r
        })
        .collect();
    let r = Rref::from_rows(n + 1, aug, f);
    if r.is_pivot(n) {
        return None;
    }
    let mut x0 = vec![Fe::ZERO; n];
    for (p, row) in r.pivots.iter().zip(&r.rows) {
        x0[*p] = f.neg(row[n]);
    }
    let mut ker = Vec::new();
    for free in r.free_columns().into_iter().filter(|&c| c < n) {
        let mut x = vec![Fe::ZERO; n];
        x[free] = Fe::ONE;
        for (p, row) in r.pivots.iter().zip(&r.rows) {
            x[*p] = f.neg(row[free]);
        }
        ker.push(x);
    }
    Some((x0, ker))
}

/// `M v` for a matrix given by rows.
pub fn mat_vec(m: &[Vec<Fe>], v: &[Fe], f: &Field) -> Vec<Fe> {
    m.iter()
        .map(|row| {
            row.iter()
                .zip(v)
                .fold(Fe::ZERO, |acc, (a, b)| f.mul_add(acc, *a, *b))
        })
        .collect()
}

/// Determinant by Gaussian elimination.
pub fn det(mut m: Vec<Vec<Fe>>, f: &Field) -> Fe {
    let n = m.len();
    let mut d = Fe::ONE;
    for k in 0..n {
        let Some(r) = (k..n).find(|&r| !m[r][k].is_zero()) else {
            return Fe::ZERO;
        };
        if r != k {
            m.swap(r, k);
            d = f.neg(d);
        }
        d = f.mul(d, m[k][k]);
        let inv = f.inv(m[k][k]).unwrap();
        let (top, rest) = m.split_at_mut(k + 1);
        for row in rest.iter_mut() {
            let c = row[k];
            if !c.is_zero() {
                axpy(row, f.neg(f.mul(c, inv)), &top[k], k, f);
            }
        }
    }
    d
}
