#![allow(dead_code)]

use std::path::{Path, PathBuf};

use springer_lab::config::ExperimentConfig;
use springer_lab::field::{Fe, Field};

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn corpus() -> Vec<ExperimentConfig> {
    springer_lab::cli::corpus_files(&corpus_dir())
        .unwrap()
        .iter()
        .map(|p| ExperimentConfig::load(p).unwrap())
        .collect()
}

pub fn load(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&corpus_dir().join(format!("{name}.toml"))).unwrap()
}

/// Rank by plain Gaussian elimination, kept apart from the library's own.
pub fn naive_rank(rows: &[Vec<Fe>], f: &Field) -> usize {
    let mut m: Vec<Vec<Fe>> = rows.to_vec();
    let ncols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for col in 0..ncols {
        let Some(p) = (rank..m.len()).find(|&r| !m[r][col].is_zero()) else { continue };
        m.swap(rank, p);
        let inv = f.inv(m[rank][col]).unwrap();
        for r in 0..m.len() {
            if r != rank && !m[r][col].is_zero() {
                let c = f.mul(m[r][col], inv);
                for j in 0..ncols {
                    let t = f.mul(c, m[rank][j]);
                    m[r][j] = f.sub(m[r][j], t);
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Every `dim`-dimensional subspace of `k^len` as a row-reduced basis.
pub fn all_subspaces(len: usize, dim: usize, f: &Field) -> Vec<Vec<Vec<Fe>>> {
    let elems: Vec<Fe> = f.elements().collect();
    let mut out = Vec::new();
    for pivots in combinations(len, dim) {
        // free slots: row i, column j > pivots[i] not a pivot
        let slots: Vec<(usize, usize)> = (0..dim)
            .flat_map(|i| (pivots[i] + 1..len).filter(|j| !pivots.contains(j)).map(move |j| (i, j)))
            .collect();
        let total = (elems.len() as u64).pow(slots.len() as u32);
        for mut code in 0..total {
            let mut rows = vec![vec![Fe::ZERO; len]; dim];
            for (i, &p) in pivots.iter().enumerate() {
                rows[i][p] = Fe::ONE;
            }
            for &(i, j) in &slots {
                rows[i][j] = elems[(code % elems.len() as u64) as usize];
                code /= elems.len() as u64;
            }
            out.push(rows);
        }
    }
    out
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if n < k {
        return Vec::new();
    }
    let mut out = combinations(n - 1, k);
    for mut c in combinations(n - 1, k - 1) {
        c.push(n - 1);
        out.push(c);
    }
    out
}

/// Whether the span of `rows` is carried into itself by `op`.
pub fn is_stable(rows: &[Vec<Fe>], op: impl Fn(&[Fe]) -> Vec<Fe>, f: &Field) -> bool {
    let r = naive_rank(rows, f);
    rows.iter().all(|v| {
        let mut ext = rows.to_vec();
        ext.push(op(v));
        naive_rank(&ext, f) == r
    })
}

/// Multiplication by `c t^m` on `k[[t]] / t^len` in the monomial basis.
pub fn shift_op(c: Fe, m: usize, f: &Field) -> impl Fn(&[Fe]) -> Vec<Fe> + '_ {
    move |v: &[Fe]| {
        let mut out = vec![Fe::ZERO; v.len()];
        for j in 0..v.len() {
            if j + m < v.len() {
                out[j + m] = f.mul(c, v[j]);
            }
        }
        out
    }
}
