//! Branch data, the local order `A = O_F[gamma]` inside `Ã = prod k[[t_i]]`,
//! and its invariants: delta, conductor, resultants and the residue pairing.

use std::sync::Arc;

use log::debug;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Fe, Field};
use crate::linalg::{det, Rref};
use crate::series::{resultant_valuation_auto, SeriesPolynomial, TruncatedSeries, Var};
use crate::window::Window;

pub const DEFAULT_PRECISION_CEILING: i64 = 128;

/// One branch: `pi = t^n` and `gamma` an exact polynomial in `t` with `gamma(0) = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Branch {
    n: usize,
    gamma: TruncatedSeries,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl Branch {
    /// `terms` are `(exponent, coefficient)` pairs of `gamma` in `t_index`.
    pub fn new(index: usize, n: usize, terms: &[(i64, Fe)], field: &Field) -> Result<Branch> {
        if n == 0 {
            return Err(Error::InvalidDatum(format!("branch {index}: ramification n = 0")));
        }
        if (n as u32).is_multiple_of(field.characteristic()) {
            return Err(Error::InvalidDatum(format!(
                "branch {index}: n = {n} is divisible by the characteristic, so k((t)) is inseparable over k((t^n))"
            )));
        }
        let top = terms.iter().map(|t| t.0).max().unwrap_or(0);
        let mut coeffs = vec![Fe::ZERO; (top + 1).max(1) as usize];
        for &(e, c) in terms {
            if e < 0 {
                return Err(Error::InvalidDatum(format!("branch {index}: negative exponent {e}")));
            }
            coeffs[e as usize] = field.add(coeffs[e as usize], c);
        }
        let gamma = TruncatedSeries::poly(Var::T(index), coeffs);
        match gamma.valuation()? {
            None => {
                return Err(Error::InvalidDatum(format!(
                    "branch {index}: gamma = 0 does not generate the branch"
                )))
            }
            Some(0) => {
                return Err(Error::InvalidDatum(format!("branch {index}: gamma(0) must vanish")))
            }
            Some(_) => {}
        }
        let g = gamma.terms().fold(n as i64, |g, (e, _)| gcd(g, e));
        if g != 1 {
            return Err(Error::InvalidDatum(format!(
                "branch {index}: gcd of n and the exponents of gamma is {g}, so gamma does not generate k((t))"
            )));
        }
        Ok(Branch { n, gamma })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> &TruncatedSeries {
        &self.gamma
    }

    pub fn terms(&self) -> Vec<(i64, Fe)> {
        self.gamma.terms().collect()
    }

    /// `gamma^* = -gamma`.
    pub fn is_skew(&self, f: &Field) -> bool {
        self.gamma.conj(f) == self.gamma.neg(f)
    }

    fn reindexed(&self, index: usize) -> Branch {
        let coeffs: Vec<Fe> = (0..self.gamma.high()).map(|e| self.gamma.coeff(e)).collect();
        Branch { n: self.n, gamma: TruncatedSeries::poly(Var::T(index), coeffs) }
    }

    /// Minimal polynomial over `O_F`: the characteristic polynomial of
    /// multiplication by `gamma` on the basis `1, t, .., t^{n-1}`.
    pub fn minimal_polynomial(&self, f: &Field) -> SeriesPolynomial {
        let n = self.n;
        let mut m = vec![vec![TruncatedSeries::zero(Var::Pi); n]; n];
        for a in 0..n {
            for (k, g) in self.gamma.terms() {
                let e = a as i64 + k;
                let (q, r) = (e / n as i64, (e % n as i64) as usize);
                let term = TruncatedSeries::monomial(Var::Pi, g, q);
                m[r][a] = m[r][a].add(&term, f).expect("same variable");
            }
        }
        berkowitz(&m, f)
    }
}

/// Characteristic polynomial `det(T - M)` by Berkowitz's division-free recursion.
pub fn berkowitz(m: &[Vec<TruncatedSeries>], f: &Field) -> SeriesPolynomial {
    let n = m.len();
    let zero = TruncatedSeries::zero(Var::Pi);
    let one = TruncatedSeries::one(Var::Pi);
    if n == 0 {
        return SeriesPolynomial::one();
    }
    let mul = |a: &TruncatedSeries, b: &TruncatedSeries| a.mul(b, f).expect("same variable");
    let add = |a: &TruncatedSeries, b: &TruncatedSeries| a.add(b, f).expect("same variable");
    // coefficients from the leading one down
    let mut vect = vec![one.clone(), m[0][0].neg(f)];
    for r in 1..n {
        let row: Vec<TruncatedSeries> = m[r][..r].to_vec();
        let mut col: Vec<TruncatedSeries> = (0..r).map(|i| m[i][r].clone()).collect();
        let mut c = vec![one.clone(), m[r][r].neg(f)];
        for _ in 0..r {
            // c_k = -R A^k S
            let dot = row.iter().zip(&col).fold(zero.clone(), |acc, (x, y)| add(&acc, &mul(x, y)));
            c.push(dot.neg(f));
            col = (0..r)
                .map(|i| (0..r).fold(zero.clone(), |acc, j| add(&acc, &mul(&m[i][j], &col[j]))))
                .collect();
        }
        let next: Vec<TruncatedSeries> = (0..r + 2)
            .map(|i| {
                (0..=r.min(i)).fold(zero.clone(), |acc, j| {
                    if i - j < c.len() && j < vect.len() {
                        add(&acc, &mul(&c[i - j], &vect[j]))
                    } else {
                        acc
                    }
                })
            })
            .collect();
        vect = next;
    }
    vect.reverse();
    SeriesPolynomial::new(vect)
}

/// Per-branch exact polynomials, the form operators take on windows.
pub type Element = Vec<Vec<(i64, Fe)>>;

/// Image of `pi^shift * A` in `window`, built by closing `pi^shift` under
/// multiplication by `pi` and `gamma`.
pub fn order_image(field: &Field, branches: &[Branch], window: &Window, shift: i64) -> Result<Rref> {
    let pi: Element = branches.iter().map(|b| vec![(b.n as i64, Fe::ONE)]).collect();
    let gamma: Element = branches.iter().map(|b| b.terms()).collect();
    let seed: Vec<TruncatedSeries> = branches
        .iter()
        .enumerate()
        .map(|(i, b)| TruncatedSeries::monomial(Var::T(i), Fe::ONE, shift * b.n as i64))
        .collect();
    let start = window.embed(&seed)?;
    let mut span = Rref::zero(window.dim());
    let mut frontier = vec![start];
    // each pass either grows the span or ends the loop
    for _ in 0..=window.dim() + 1 {
        let mut next = Vec::new();
        for v in frontier {
            if span.insert(v.clone(), field) {
                next.push(window.mul(&v, &pi, field));
                next.push(window.mul(&v, &gamma, field));
            }
        }
        if next.is_empty() {
            return Ok(span);
        }
        frontier = next;
    }
    Err(Error::Stabilization("order saturation did not close".into()))
}

/// The image of `A` in `prod k[t_i]/(t_i^M)`.
#[derive(Clone, Debug)]
pub struct OrderWindow {
    pub level: i64,
    pub window: Window,
    pub basis: Rref,
}

impl OrderWindow {
    pub fn codim(&self) -> usize {
        self.window.dim() - self.basis.dim()
    }

    /// Restriction to a smaller level.
    pub fn truncate(&self, level: i64, f: &Field) -> Result<OrderWindow> {
        let r = self.window.branches();
        let w = Window::new(vec![0; r], vec![level; r]);
        let rows: Result<Vec<_>> = self.basis.rows().iter().map(|v| self.window.transfer(v, &w)).collect();
        Ok(OrderWindow { level, window: w.clone(), basis: Rref::from_rows(w.dim(), rows?, f) })
    }
}

fn order_window_raw(field: &Field, branches: &[Branch], level: i64) -> Result<OrderWindow> {
    let r = branches.len();
    let window = Window::new(vec![0; r], vec![level; r]);
    let basis = order_image(field, branches, &window, 0)?;
    Ok(OrderWindow { level, window, basis })
}

/// `t^M Ã ⊂ A`, checked in the window `[0, M + max n)`.
fn contains_uniform_ideal(field: &Field, branches: &[Branch], level: i64) -> Result<bool> {
    let maxn = branches.iter().map(|b| b.n as i64).max().unwrap_or(1);
    let ow = order_window_raw(field, branches, level + maxn)?;
    for i in 0..branches.len() {
        for e in level..level + maxn {
            if !ow.basis.contains(&ow.window.monomial(i, e).unwrap(), field) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn delta_direct_raw(field: &Field, branches: &[Branch], ceiling: i64) -> Result<i64> {
    let maxn = branches.iter().map(|b| b.n as i64).max().unwrap_or(1);
    let mut prev: Option<(i64, i64)> = None;
    let mut level = 1;
    while level + maxn <= ceiling {
        let a = order_window_raw(field, branches, level)?.codim() as i64;
        let b = match prev {
            Some((l, v)) if l == level + maxn => v,
            _ => order_window_raw(field, branches, level + maxn)?.codim() as i64,
        };
        prev = Some((level + maxn, b));
        if a == b && contains_uniform_ideal(field, branches, level)? {
            debug!("delta stabilized at level {level}: {a}");
            return Ok(a);
        }
        level += 1;
    }
    Err(Error::Stabilization(format!(
        "codimension of the order did not stabilize below t^{ceiling}"
    )))
}

/// Residue pairing between `Ã/A` and `omega/Omega`.
#[derive(Clone, Debug, Serialize)]
pub struct RosenlichtPairing {
    /// Monomials `(branch, exponent)` spanning a complement of `A` in `Ã`.
    pub complement: Vec<(usize, i64)>,
    /// Differentials as coefficient vectors of `t_i^e dt_i`, `-c_i <= e < 0`.
    #[serde(skip)]
    pub omega: Vec<Vec<Fe>>,
    pub matrix: Vec<Vec<Fe>>,
    pub perfect: bool,
}

#[derive(Clone, Debug)]
pub struct SpectralDatum {
    field: Arc<Field>,
    branches: Vec<Branch>,
    precision_ceiling: i64,
    n_total: usize,
    min_polys: Vec<SeriesPolynomial>,
    r: Vec<Vec<i64>>,
    delta_branch: Vec<i64>,
    delta: i64,
    conductor: Vec<i64>,
}

impl SpectralDatum {
    pub fn new(field: Arc<Field>, branches: Vec<Branch>, precision_ceiling: i64) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::InvalidDatum("at least one branch is required".into()));
        }
        let f = &*field;
        let branches: Vec<Branch> = branches.iter().enumerate().map(|(i, b)| b.reindexed(i)).collect();
        let min_polys: Vec<SeriesPolynomial> = branches.iter().map(|b| b.minimal_polynomial(f)).collect();
        for (i, (b, p)) in branches.iter().zip(&min_polys).enumerate() {
            let at = p.eval_on_branch(b.gamma(), b.n as i64, f)?;
            if !at.is_exact_zero() {
                return Err(Error::Invariant(format!("branch {i}: minimal polynomial does not vanish")));
            }
        }
        let k = branches.len();
        let mut r = vec![vec![0i64; k]; k];
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                let v = min_polys[j]
                    .eval_on_branch(branches[i].gamma(), branches[i].n as i64, f)?
                    .valuation()?;
                r[i][j] = v.ok_or_else(|| {
                    Error::InvalidDatum(format!("branches {i} and {j} have the same minimal polynomial"))
                })?;
            }
        }
        let delta_branch: Vec<i64> = branches
            .iter()
            .map(|b| delta_direct_raw(f, std::slice::from_ref(b), precision_ceiling))
            .collect::<Result<_>>()?;
        let pair_sum: i64 = r.iter().flatten().sum();
        let delta = delta_branch.iter().sum::<i64>() + pair_sum / 2;
        let conductor = (0..k)
            .map(|i| 2 * delta_branch[i] + (0..k).filter(|&j| j != i).map(|j| r[i][j]).sum::<i64>())
            .collect();
        Ok(SpectralDatum {
            n_total: branches.iter().map(|b| b.n).sum(),
            field,
            branches,
            precision_ceiling,
            min_polys,
            r,
            delta_branch,
            delta,
            conductor,
        })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn field_arc(&self) -> Arc<Field> {
        self.field.clone()
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn precision_ceiling(&self) -> i64 {
        self.precision_ceiling
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn ns(&self) -> Vec<i64> {
        self.branches.iter().map(|b| b.n as i64).collect()
    }

    pub fn minimal_polynomial(&self, i: usize) -> &SeriesPolynomial {
        &self.min_polys[i]
    }

    /// `r_ij = v(P_j(gamma_i))`.
    pub fn r(&self) -> &[Vec<i64>] {
        &self.r
    }

    pub fn delta_branches(&self) -> &[i64] {
        &self.delta_branch
    }

    /// `sum delta_i + (1/2) sum_{i != j} r_ij`
    pub fn delta_formula(&self) -> i64 {
        self.delta
    }

    pub fn delta(&self) -> i64 {
        self.delta
    }

    /// `c_i = 2 delta_i + sum_{j != i} r_ij`
    pub fn conductor_exponents(&self) -> &[i64] {
        &self.conductor
    }

    /// `pi` as an element.
    pub fn pi(&self) -> Element {
        self.branches.iter().map(|b| vec![(b.n as i64, Fe::ONE)]).collect()
    }

    /// `gamma` as an element.
    pub fn gamma(&self) -> Element {
        self.branches.iter().map(|b| b.terms()).collect()
    }

    /// Fresh datum on a subset of the branches.
    pub fn sub_datum(&self, indices: &[usize]) -> Result<SpectralDatum> {
        let bs = indices.iter().map(|&i| self.branches[i].clone()).collect();
        SpectralDatum::new(self.field.clone(), bs, self.precision_ceiling)
    }

    pub fn order_window(&self, level: i64) -> Result<OrderWindow> {
        order_window_raw(&self.field, &self.branches, level)
    }

    pub fn order_image(&self, window: &Window, shift: i64) -> Result<Rref> {
        order_image(&self.field, &self.branches, window, shift)
    }

    /// Codimension of `A` in `Ã`, by truncating at growing levels.
    pub fn delta_direct(&self) -> Result<i64> {
        delta_direct_raw(&self.field, &self.branches, self.precision_ceiling)
    }

    /// `r_ij` through the Sylvester determinant of the minimal polynomials.
    pub fn r_sylvester(&self, i: usize, j: usize) -> Result<i64> {
        resultant_valuation_auto(&self.min_polys[i], &self.min_polys[j], &self.field, 8, self.precision_ceiling)
    }

    /// Window `[lo, lo + width)` per branch with the given offsets.
    pub fn window(&self, lo: &[i64], width: &[i64]) -> Window {
        Window::new(lo.to_vec(), lo.iter().zip(width).map(|(l, w)| l + w).collect())
    }

    /// Conductor exponents read off the order: `1 + max{e : t_i^e e_i not in A}`.
    pub fn conductor_direct(&self) -> Result<Vec<i64>> {
        let f = &*self.field;
        let maxc = self.conductor.iter().copied().max().unwrap_or(0);
        let maxn = self.ns().into_iter().max().unwrap_or(1);
        // the window must reach past the true conductor for membership to be exact
        let mut level = maxc + maxn;
        loop {
            if level > self.precision_ceiling {
                return Err(Error::Stabilization("conductor exceeds the precision ceiling".into()));
            }
            if contains_uniform_ideal(f, &self.branches, level - maxn)? {
                break;
            }
            level += maxn;
        }
        let ow = self.order_window(level)?;
        Ok((0..self.len())
            .map(|i| {
                (0..level)
                    .rev()
                    .find(|&e| !ow.basis.contains(&ow.window.monomial(i, e).unwrap(), f))
                    .map_or(0, |e| e + 1)
            })
            .collect())
    }

    /// Checks `t^c Ã ⊂ A`, minimality of each `c_i`, and `dim A/t^c Ã = delta`.
    pub fn verify_conductor(&self) -> Result<()> {
        let direct = self.conductor_direct()?;
        if direct != self.conductor {
            return Err(Error::Invariant(format!(
                "conductor from the order {direct:?} differs from 2 delta_i + sum r_ij = {:?}",
                self.conductor
            )));
        }
        let c = &self.conductor;
        let w = self.window(&vec![0; self.len()], c);
        let img = self.order_image(&w, 0)?;
        let quotient = img.dim() as i64;
        let expected = c.iter().sum::<i64>() - self.delta;
        if quotient != expected {
            return Err(Error::Invariant(format!(
                "dim A/a = {quotient}, expected {}",
                self.delta
            )));
        }
        Ok(())
    }

    pub fn rosenlicht_pairing(&self) -> Result<RosenlichtPairing> {
        let f = &*self.field;
        let c = &self.conductor;
        let k = self.len();
        let w = self.window(&vec![0; k], c);
        let a = self.order_image(&w, 0)?;
        // unknown y_{i,e} at column col(i, -1-e): Res(x y) = sum_col x_col y_col
        let omega = crate::linalg::kernel(a.rows(), w.dim(), f);
        if omega.len() as i64 != self.delta {
            return Err(Error::Invariant(format!(
                "omega/Omega has dimension {}, expected delta = {}",
                omega.len(),
                self.delta
            )));
        }
        let complement: Vec<(usize, i64)> = a.free_columns().into_iter().map(|col| w.coord(col)).collect();
        let matrix: Vec<Vec<Fe>> = complement
            .iter()
            .map(|&(i, e)| omega.iter().map(|y| y[w.col(i, e).unwrap()]).collect())
            .collect();
        let perfect = det(matrix.clone(), f) != Fe::ZERO;
        // store differentials in exponent order -c_i..-1
        let omega = omega
            .into_iter()
            .map(|y| {
                let mut out = Vec::with_capacity(y.len());
                for (i, &ci) in c.iter().enumerate() {
                    for e in -ci..0 {
                        out.push(y[w.col(i, -1 - e).unwrap()]);
                    }
                }
                out
            })
            .collect();
        Ok(RosenlichtPairing { complement, omega, matrix, perfect })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f9() -> Arc<Field> {
        Arc::new(Field::new(3, 2).unwrap())
    }

    fn eps_branch(f: &Field, idx: usize, n: usize, terms: &[(i64, i64)]) -> Branch {
        let eps = f.epsilon().unwrap();
        let t: Vec<(i64, Fe)> = terms.iter().map(|&(e, c)| (e, f.scale_int(eps, c))).collect();
        Branch::new(idx, n, &t, f).unwrap()
    }

    #[test]
    fn rejects_bad_branches() {
        let f = f9();
        let eps = f.epsilon().unwrap();
        assert!(Branch::new(0, 2, &[], &f).is_err());
        assert!(Branch::new(0, 2, &[(0, eps), (3, eps)], &f).is_err());
        assert!(Branch::new(0, 2, &[(2, eps), (4, eps)], &f).is_err());
        assert!(Branch::new(0, 3, &[(4, eps)], &f).is_err());
    }

    #[test]
    fn cusp_minimal_polynomial() {
        let f = f9();
        let b = eps_branch(&f, 0, 2, &[(3, 1)]);
        let p = b.minimal_polynomial(&f);
        // T^2 - eps^2 pi^3 = T^2 + pi^3
        let expect = SeriesPolynomial::new(vec![
            TruncatedSeries::monomial(Var::Pi, Fe::ONE, 3),
            TruncatedSeries::zero(Var::Pi),
            TruncatedSeries::one(Var::Pi),
        ]);
        assert_eq!(p, expect);
    }

    #[test]
    fn minimal_polynomial_vanishes_on_mixed_branch() {
        let f = Arc::new(Field::new(5, 1).unwrap());
        let b = Branch::new(0, 2, &[(2, Fe::ONE), (3, Fe::ONE)], &f).unwrap();
        let p = b.minimal_polynomial(&f);
        assert_eq!(p.degree(), 2);
        assert!(p.is_monic());
        assert!(p.eval_on_branch(b.gamma(), 2, &f).unwrap().is_exact_zero());
    }

    #[test]
    fn order_windows() {
        let f = f9();
        let cusp = SpectralDatum::new(f.clone(), vec![eps_branch(&f, 0, 2, &[(3, 1)])], 64).unwrap();
        let ow = cusp.order_window(6).unwrap();
        assert_eq!(ow.codim(), 1);
        assert!(!ow.basis.contains(&ow.window.monomial(0, 1).unwrap(), &f));

        let node = SpectralDatum::new(
            f.clone(),
            vec![eps_branch(&f, 0, 1, &[(1, 1)]), eps_branch(&f, 1, 1, &[(1, -1)])],
            64,
        )
        .unwrap();
        let ow = node.order_window(3).unwrap();
        assert_eq!(ow.basis.dim(), 5);
        // a_0 = b_0 is the only condition
        let mut v = ow.window.zero();
        v[ow.window.col(0, 0).unwrap()] = Fe::ONE;
        v[ow.window.col(1, 0).unwrap()] = Fe::ONE;
        v[ow.window.col(1, 2).unwrap()] = f.from_int(2);
        assert!(ow.basis.contains(&v, &f));
        assert!(!ow.basis.contains(&ow.window.monomial(0, 0).unwrap(), &f));
    }

    #[test]
    fn node_and_tacnode_invariants() {
        let f = f9();
        let node = SpectralDatum::new(
            f.clone(),
            vec![eps_branch(&f, 0, 1, &[(1, 1)]), eps_branch(&f, 1, 1, &[(1, -1)])],
            64,
        )
        .unwrap();
        assert_eq!(node.delta(), 1);
        assert_eq!(node.delta_direct().unwrap(), 1);
        assert_eq!(node.conductor_exponents(), &[1, 1]);
        node.verify_conductor().unwrap();
        assert_eq!(node.r_sylvester(0, 1).unwrap(), 1);

        let tac = SpectralDatum::new(
            f.clone(),
            vec![eps_branch(&f, 0, 1, &[(1, 1)]), eps_branch(&f, 1, 1, &[(1, 1), (2, 1)])],
            64,
        )
        .unwrap();
        assert_eq!(tac.r()[0][1], 2);
        assert_eq!(tac.delta(), 2);
        assert_eq!(tac.delta_direct().unwrap(), 2);
        let rp = tac.rosenlicht_pairing().unwrap();
        assert_eq!(rp.matrix.len(), 2);
        assert!(rp.perfect);
    }

    #[test]
    fn truncation_is_compatible() {
        let f = Arc::new(Field::new(5, 2).unwrap());
        let d = SpectralDatum::new(f.clone(), vec![eps_branch(&f, 0, 3, &[(4, 1)])], 64).unwrap();
        let big = d.order_window(9).unwrap();
        for level in 1..9 {
            let t = big.truncate(level, &f).unwrap();
            assert_eq!(t.basis, d.order_window(level).unwrap().basis);
        }
    }
}
