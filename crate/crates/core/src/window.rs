//! Finite coordinate windows `t^lo Ã / t^hi Ã` of the product of branch rings.
//!
//! Column order is branch-major, increasing exponent inside a branch. Every
//! multiplication by an element of positive valuation therefore moves a
//! column strictly forward.

use crate::error::{Error, Result};
use crate::field::{Fe, Field};
use crate::series::TruncatedSeries;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Window {
    lo: Vec<i64>,
    hi: Vec<i64>,
    start: Vec<usize>,
    dim: usize,
}

impl Window {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        let mut start = Vec::with_capacity(lo.len());
        let mut dim = 0;
        for (l, h) in lo.iter().zip(&hi) {
            start.push(dim);
            dim += (h - l).max(0) as usize;
        }
        Window { lo, hi, start, dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn branches(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn hi(&self) -> &[i64] {
        &self.hi
    }

    pub fn width(&self, i: usize) -> usize {
        (self.hi[i] - self.lo[i]).max(0) as usize
    }

    pub fn block(&self, i: usize) -> std::ops::Range<usize> {
        self.start[i]..self.start[i] + self.width(i)
    }

    pub fn col(&self, i: usize, e: i64) -> Option<usize> {
        if e < self.lo[i] || e >= self.hi[i] {
            None
        } else {
            Some(self.start[i] + (e - self.lo[i]) as usize)
        }
    }

    pub fn coord(&self, col: usize) -> (usize, i64) {
        let i = self.start.partition_point(|&s| s <= col) - 1;
        // skip empty blocks sharing the same start
        let i = (i..self.lo.len()).find(|&j| self.block(j).contains(&col)).unwrap_or(i);
        (i, self.lo[i] + (col - self.start[i]) as i64)
    }

    pub fn zero(&self) -> Vec<Fe> {
        vec![Fe::ZERO; self.dim]
    }

    pub fn monomial(&self, i: usize, e: i64) -> Option<Vec<Fe>> {
        let c = self.col(i, e)?;
        let mut v = self.zero();
        v[c] = Fe::ONE;
        Some(v)
    }

    /// Image of `x = (x_i)` (a series in `t_i` per branch). Coefficients at or
    /// above `hi` are dropped; a nonzero coefficient below `lo` is an overflow.
    pub fn embed(&self, x: &[TruncatedSeries]) -> Result<Vec<Fe>> {
        let mut v = self.zero();
        for (i, xi) in x.iter().enumerate() {
            if let Some(p) = xi.precision() {
                if p < self.hi[i] {
                    return Err(Error::Precision(format!(
                        "branch {i} known below t^{p}, window needs t^{}",
                        self.hi[i]
                    )));
                }
            }
            for (e, c) in xi.terms() {
                if e < self.lo[i] {
                    return Err(Error::WindowOverflow(format!(
                        "term t_{i}^{e} below window start {}",
                        self.lo[i]
                    )));
                }
                if let Some(col) = self.col(i, e) {
                    v[col] = c;
                }
            }
        }
        Ok(v)
    }

    /// Per-branch coefficient lists `(exponent, coefficient)` of a vector.
    pub fn terms(&self, v: &[Fe], i: usize) -> Vec<(i64, Fe)> {
        self.block(i)
            .zip(self.lo[i]..)
            .filter(|(c, _)| !v[*c].is_zero())
            .map(|(c, e)| (e, v[c]))
            .collect()
    }

    /// Multiply by an element of `Ã` given by exact per-branch polynomials.
    pub fn mul(&self, v: &[Fe], g: &[Vec<(i64, Fe)>], f: &Field) -> Vec<Fe> {
        let mut out = self.zero();
        for i in 0..self.branches() {
            for (e, a) in self.terms(v, i) {
                for &(k, b) in &g[i] {
                    debug_assert!(k >= 0);
                    if let Some(c) = self.col(i, e + k) {
                        out[c] = f.mul_add(out[c], a, b);
                    }
                }
            }
        }
        out
    }

    /// Multiply branch `i` by `t_i^{shift_i}`.
    pub fn shift(&self, v: &[Fe], shift: &[i64]) -> Result<Vec<Fe>> {
        let mut out = self.zero();
        for i in 0..self.branches() {
            for (e, a) in self.terms(v, i) {
                let e2 = e + shift[i];
                if e2 < self.lo[i] {
                    return Err(Error::WindowOverflow(format!(
                        "shift moves t_{i}^{e} below window start {}",
                        self.lo[i]
                    )));
                }
                if let Some(c) = self.col(i, e2) {
                    out[c] = a;
                }
            }
        }
        Ok(out)
    }

    /// Same element in another window.
    pub fn transfer(&self, v: &[Fe], to: &Window) -> Result<Vec<Fe>> {
        self.shift_into(v, &vec![0; self.branches()], to)
    }

    /// `t^shift * v` written in window `to`.
    pub fn shift_into(&self, v: &[Fe], shift: &[i64], to: &Window) -> Result<Vec<Fe>> {
        let mut out = to.zero();
        for i in 0..self.branches() {
            for (e, a) in self.terms(v, i) {
                let e2 = e + shift[i];
                if e2 < to.lo[i] {
                    return Err(Error::WindowOverflow(format!(
                        "t_{i}^{e2} below window start {}",
                        to.lo[i]
                    )));
                }
                if let Some(c) = to.col(i, e2) {
                    out[c] = a;
                }
            }
        }
        Ok(out)
    }

    /// Matrix of multiplication by `g`, as the list of images of the columns.
    pub fn op_images(&self, g: &[Vec<(i64, Fe)>], f: &Field) -> Vec<Vec<Fe>> {
        (0..self.dim)
            .map(|c| {
                let mut u = self.zero();
                u[c] = Fe::ONE;
                self.mul(&u, g, f)
            })
            .collect()
    }

    /// Smallest exponent on branch `i` among the rows, or `None`.
    pub fn min_exponent(&self, rows: &[Vec<Fe>], i: usize) -> Option<i64> {
        rows.iter()
            .filter_map(|r| self.block(i).position(|c| !r[c].is_zero()))
            .min()
            .map(|k| self.lo[i] + k as i64)
    }
}

/// Apply a linear map given by column images.
pub fn apply(images: &[Vec<Fe>], v: &[Fe], f: &Field) -> Vec<Fe> {
    let n = images.first().map_or(0, |r| r.len());
    let mut out = vec![Fe::ZERO; n];
    for (x, img) in v.iter().zip(images) {
        if !x.is_zero() {
            crate::linalg::axpy(&mut out, *x, img, 0, f);
        }
    }
    out
}
