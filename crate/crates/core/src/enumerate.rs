//! Enumeration of subspaces stable under a family of strictly triangular
//! operators.
//!
//! The operators act on `k^D` with basis `b_0..b_{D-1}` and send each `b_j`
//! into the span of `b_{j+1}..`. A stable subspace `S` is then determined by
//! the chain `S ∩ span(b_{>=j})`, each member of which is again stable. The
//! search walks `j` from `D-1` down to `0` and at each step either keeps the
//! current subspace or adjoins the unique reduced row with pivot `j`; the
//! stability of the new row is an affine system in its free entries, whose
//! solutions are listed exhaustively.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{Fe, Field};
use crate::linalg::{solve, Rref};

pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Dim(usize),
    Any,
}

pub struct Search<'a> {
    field: &'a Field,
    dim: usize,
    /// `ops[o][j]` is the image of `b_j` under operator `o`.
    ops: &'a [Vec<Vec<Fe>>],
    target: Target,
    budget: u64,
    used: AtomicU64,
}

impl<'a> Search<'a> {
    pub fn new(field: &'a Field, dim: usize, ops: &'a [Vec<Vec<Fe>>], target: Target, budget: u64) -> Self {
        Search { field, dim, ops, target, budget, used: AtomicU64::new(0) }
    }

    /// Number of candidate subspaces visited so far.
    pub fn visited(&self) -> u64 {
        self.used.load(Ordering::Relaxed)
    }

    /// All stable subspaces of the target dimension, sorted.
    pub fn run(&self) -> Result<Vec<Rref>> {
        if let Target::Dim(w) = self.target {
            if w > self.dim {
                return Ok(Vec::new());
            }
        }
        let mut out = self.descend(self.dim, Rref::zero(self.dim))?;
        out.sort_by(|a, b| a.pivots().cmp(b.pivots()).then_with(|| a.rows().cmp(b.rows())));
        Ok(out)
    }

    fn tick(&self, n: u64) -> Result<()> {
        let before = self.used.fetch_add(n, Ordering::Relaxed);
        if before + n > self.budget {
            return Err(Error::Budget { budget: self.budget });
        }
        Ok(())
    }

    /// `s` is stable and supported on columns `>= j`.
    fn descend(&self, j: usize, s: Rref) -> Result<Vec<Rref>> {
        let w = s.dim();
        if j == 0 {
            return Ok(match self.target {
                Target::Dim(t) if t != w => Vec::new(),
                _ => vec![s],
            });
        }
        let j = j - 1;
        let (can_skip, can_add) = match self.target {
            Target::Dim(t) => (w + j >= t, w < t),
            Target::Any => (true, true),
        };
        let mut children: Vec<Rref> = Vec::new();
        if can_add {
            children = self.extensions(j, &s)?;
        }
        if can_skip {
            children.push(s);
        }
        self.tick(children.len() as u64)?;
        let parts: Result<Vec<Vec<Rref>>> = if children.len() > 1 {
            children.into_par_iter().map(|c| self.descend(j, c)).collect()
        } else {
            children.into_iter().map(|c| self.descend(j, c)).collect()
        };
        Ok(parts?.into_iter().flatten().collect())
    }

    /// All stable `s + <e_j + v>` with `v` on the free columns after `j`.
    fn extensions(&self, j: usize, s: &Rref) -> Result<Vec<Rref>> {
        let f = self.field;
        let n = self.dim;
        let free: Vec<usize> = (j + 1..n).filter(|&c| !s.is_pivot(c)).collect();
        // rows: one equation per (operator, non-pivot column)
        let mut a: Vec<Vec<Fe>> = Vec::new();
        let mut b: Vec<Fe> = Vec::new();
        for op in self.ops {
            let base = s.reduce(&op[j], f);
            let cols: Vec<Vec<Fe>> = free.iter().map(|&k| s.reduce(&op[k], f)).collect();
            for c in j + 1..n {
                if s.is_pivot(c) {
                    continue;
                }
                let row: Vec<Fe> = cols.iter().map(|v| v[c]).collect();
                if row.iter().all(|x| x.is_zero()) {
                    if !base[c].is_zero() {
                        return Ok(Vec::new());
                    }
                    continue;
                }
                a.push(row);
                b.push(f.neg(base[c]));
            }
        }
        let Some((x0, ker)) = solve(&a, &b, free.len(), f) else {
            return Ok(Vec::new());
        };
        let q = f.order() as u64;
        let count = q.checked_pow(ker.len() as u32).filter(|&c| c <= self.budget);
        let Some(count) = count else {
            return Err(Error::Budget { budget: self.budget });
        };
        self.tick(count)?;
        let mut out = Vec::with_capacity(count as usize);
        let mut digits = vec![0u32; ker.len()];
        for _ in 0..count {
            let mut x = x0.clone();
            for (d, kv) in digits.iter().zip(&ker) {
                if *d != 0 {
                    crate::linalg::axpy(&mut x, Fe(*d as u16), kv, 0, f);
                }
            }
            let mut row = vec![Fe::ZERO; n];
            row[j] = Fe::ONE;
            for (k, xv) in free.iter().zip(&x) {
                row[*k] = *xv;
            }
            let mut pivots = Vec::with_capacity(s.dim() + 1);
            pivots.push(j);
            pivots.extend_from_slice(s.pivots());
            let mut rows = Vec::with_capacity(s.dim() + 1);
            rows.push(row);
            rows.extend_from_slice(s.rows());
            out.push(Rref::from_reduced(n, pivots, rows));
            // next assignment of the kernel coordinates
            for d in digits.iter_mut() {
                *d += 1;
                if *d < q as u32 {
                    break;
                }
                *d = 0;
            }
        }
        Ok(out)
    }
}

/// Convenience wrapper around [`Search`].
pub fn stable_subspaces(
    field: &Field,
    dim: usize,
    ops: &[Vec<Vec<Fe>>],
    target: Target,
    budget: u64,
) -> Result<Vec<Rref>> {
    Search::new(field, dim, ops, target, budget).run()
}

/// Check that every operator sends `b_j` into `span(b_{>j})`.
pub fn is_strictly_triangular(ops: &[Vec<Vec<Fe>>]) -> bool {
    ops.iter()
        .all(|op| op.iter().enumerate().all(|(j, img)| img.iter().take(j + 1).all(|x| x.is_zero())))
}
