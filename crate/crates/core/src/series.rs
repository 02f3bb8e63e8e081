//! Truncated Laurent series in one variable and polynomials over them.
//!
//! A series stores the coefficients it knows, starting at `low`, together
//! with an exclusive precision bound: coefficients at exponents `>= prec`
//! are unknown. `prec == None` marks an exact (finite) series, which is what
//! every input polynomial is; precision only appears through inversion.

use std::cmp::min;

use crate::error::{Error, Result};
use crate::field::{Fe, Field};

/// Which uniformizer a series is written in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    /// The uniformizer of the base field `F`.
    Pi,
    /// The uniformizer `t_i` of branch `i`.
    T(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncatedSeries {
    var: Var,
    low: i64,
    coeffs: Vec<Fe>,
    prec: Option<i64>,
}

fn pmin(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(min(x, y)),
        (Some(x), None) | (None, Some(x)) => Some(x),
        (None, None) => None,
    }
}

impl TruncatedSeries {
    pub fn new(var: Var, low: i64, coeffs: Vec<Fe>, prec: Option<i64>) -> Self {
        let mut s = TruncatedSeries { var, low, coeffs, prec };
        s.normalize();
        s
    }

    pub fn zero(var: Var) -> Self {
        TruncatedSeries { var, low: 0, coeffs: Vec::new(), prec: None }
    }

    /// `O(var^prec)`
    pub fn big_o(var: Var, prec: i64) -> Self {
        TruncatedSeries { var, low: 0, coeffs: Vec::new(), prec: Some(prec) }
    }

    pub fn one(var: Var) -> Self {
        Self::monomial(var, Fe::ONE, 0)
    }

    pub fn constant(var: Var, c: Fe) -> Self {
        Self::monomial(var, c, 0)
    }

    pub fn monomial(var: Var, c: Fe, exp: i64) -> Self {
        Self::new(var, exp, vec![c], None)
    }

    /// Exact polynomial `sum coeffs[e] var^e`.
    pub fn poly(var: Var, coeffs: Vec<Fe>) -> Self {
        Self::new(var, 0, coeffs, None)
    }

    fn normalize(&mut self) {
        if let Some(p) = self.prec {
            let keep = (p - self.low).max(0) as usize;
            self.coeffs.truncate(keep);
        }
        let lead = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        if lead > 0 {
            self.coeffs.drain(..lead);
            self.low += lead as i64;
        }
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.low = 0;
        }
    }

    pub fn var(&self) -> Var {
        self.var
    }

    pub fn precision(&self) -> Option<i64> {
        self.prec
    }

    pub fn is_exact(&self) -> bool {
        self.prec.is_none()
    }

    /// Lowest stored exponent (meaningless for a zero series).
    pub fn low(&self) -> i64 {
        self.low
    }

    /// Exclusive upper bound of the stored exponents.
    pub fn high(&self) -> i64 {
        self.low + self.coeffs.len() as i64
    }

    pub fn is_exact_zero(&self) -> bool {
        self.coeffs.is_empty() && self.prec.is_none()
    }

    /// No nonzero coefficient below the precision bound.
    pub fn is_zero_to_precision(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, exp: i64) -> Fe {
        if exp < self.low || exp >= self.high() {
            Fe::ZERO
        } else {
            self.coeffs[(exp - self.low) as usize]
        }
    }

    /// `(exponent, coefficient)` pairs for the nonzero coefficients, lowest first.
    pub fn terms(&self) -> impl Iterator<Item = (i64, Fe)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(k, &c)| (self.low + k as i64, c))
    }

    /// `Ok(Some(v))` for a known valuation, `Ok(None)` for the exact zero
    /// series, and `Indeterminate` when every known coefficient vanishes.
    pub fn valuation(&self) -> Result<Option<i64>> {
        if !self.coeffs.is_empty() {
            return Ok(Some(self.low));
        }
        match self.prec {
            None => Ok(None),
            Some(prec) => Err(Error::Indeterminate { prec }),
        }
    }

    /// Known finite valuation, treating the exact zero series as an error.
    pub fn finite_valuation(&self) -> Result<i64> {
        self.valuation()?
            .ok_or_else(|| Error::Incompatible("the zero series has infinite valuation".into()))
    }

    /// Lower bound for the valuation (the precision for an unknown series).
    fn val_bound(&self) -> Option<i64> {
        if !self.coeffs.is_empty() {
            Some(self.low)
        } else {
            self.prec
        }
    }

    fn check_var(&self, other: &Self) -> Result<()> {
        if self.var != other.var {
            return Err(Error::Incompatible(format!(
                "series in {:?} combined with series in {:?}",
                self.var, other.var
            )));
        }
        Ok(())
    }

    pub fn truncate(&self, prec: i64) -> Self {
        Self::new(self.var, self.low, self.coeffs.clone(), pmin(self.prec, Some(prec)))
    }

    pub fn add(&self, other: &Self, f: &Field) -> Result<Self> {
        self.check_var(other)?;
        let prec = pmin(self.prec, other.prec);
        if self.coeffs.is_empty() {
            return Ok(Self::new(other.var, other.low, other.coeffs.clone(), prec));
        }
        if other.coeffs.is_empty() {
            return Ok(Self::new(self.var, self.low, self.coeffs.clone(), prec));
        }
        let low = min(self.low, other.low);
        let high = self.high().max(other.high());
        let coeffs = (low..high)
            .map(|e| f.add(self.coeff(e), other.coeff(e)))
            .collect();
        Ok(Self::new(self.var, low, coeffs, prec))
    }

    pub fn neg(&self, f: &Field) -> Self {
        let coeffs = self.coeffs.iter().map(|&c| f.neg(c)).collect();
        Self::new(self.var, self.low, coeffs, self.prec)
    }

    pub fn sub(&self, other: &Self, f: &Field) -> Result<Self> {
        self.add(&other.neg(f), f)
    }

    pub fn scale(&self, c: Fe, f: &Field) -> Self {
        let coeffs = self.coeffs.iter().map(|&x| f.mul(c, x)).collect();
        Self::new(self.var, self.low, coeffs, self.prec)
    }

    /// Multiply by `var^k`.
    pub fn shift(&self, k: i64) -> Self {
        Self::new(self.var, self.low + k, self.coeffs.clone(), self.prec.map(|p| p + k))
    }

    pub fn mul(&self, other: &Self, f: &Field) -> Result<Self> {
        self.check_var(other)?;
        if self.is_exact_zero() || other.is_exact_zero() {
            return Ok(Self::zero(self.var));
        }
        let va = self.val_bound();
        let vb = other.val_bound();
        let prec = pmin(
            self.prec.map(|p| p + vb.unwrap_or(0)),
            other.prec.map(|p| p + va.unwrap_or(0)),
        );
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Ok(Self::new(self.var, 0, Vec::new(), prec));
        }
        let mut coeffs = vec![Fe::ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] = f.mul_add(coeffs[i + j], a, b);
            }
        }
        Ok(Self::new(self.var, self.low + other.low, coeffs, prec))
    }

    /// Inverse of a series with known valuation. For an exact input the
    /// result carries `rel_prec` coefficients.
    pub fn inv(&self, f: &Field, rel_prec: i64) -> Result<Self> {
        let v = match self.valuation()? {
            Some(v) => v,
            None => return Err(Error::NotUnit("inverting zero".into())),
        };
        let rel = match self.prec {
            Some(p) => min(p - v, rel_prec),
            None => rel_prec,
        };
        let n = rel.max(0) as usize;
        let u0_inv = f.inv(self.coeffs[0]).expect("leading coefficient is nonzero");
        let mut out = vec![Fe::ZERO; n];
        for k in 0..n {
            // sum_{j<=k} u_j out_{k-j} = [k == 0]
            let mut acc = if k == 0 { Fe::ONE } else { Fe::ZERO };
            for j in 1..=k {
                let uj = self.coeffs.get(j).copied().unwrap_or(Fe::ZERO);
                if !uj.is_zero() {
                    acc = f.sub(acc, f.mul(uj, out[k - j]));
                }
            }
            out[k] = f.mul(acc, u0_inv);
        }
        Ok(Self::new(self.var, -v, out, Some(-v + rel)))
    }

    /// Inverse of a unit (valuation exactly zero).
    pub fn inv_unit(&self, f: &Field, rel_prec: i64) -> Result<Self> {
        match self.valuation()? {
            Some(0) => self.inv(f, rel_prec),
            Some(v) => Err(Error::NotUnit(format!("valuation {v}"))),
            None => Err(Error::NotUnit("inverting zero".into())),
        }
    }

    pub fn derivative(&self, f: &Field) -> Self {
        let coeffs: Vec<Fe> = (self.low..self.high())
            .map(|e| f.scale_int(self.coeff(e), e))
            .collect();
        Self::new(self.var, self.low - 1, coeffs, self.prec.map(|p| p - 1))
    }

    /// Coefficientwise `a -> a^q`.
    pub fn conj(&self, f: &Field) -> Self {
        let coeffs = self.coeffs.iter().map(|&c| f.conj(c)).collect();
        Self::new(self.var, self.low, coeffs, self.prec)
    }

    /// Substitute `var = new_var^n`.
    pub fn substitute_power(&self, new_var: Var, n: i64) -> Self {
        let mut coeffs = vec![Fe::ZERO; ((self.coeffs.len().max(1) - 1) as i64 * n + 1) as usize];
        for (k, &c) in self.coeffs.iter().enumerate() {
            coeffs[k * n as usize] = c;
        }
        Self::new(new_var, self.low * n, coeffs, self.prec.map(|p| p * n))
    }

    /// `self(g)` for a power series `self` and `g` of positive valuation.
    pub fn compose(&self, g: &Self, f: &Field) -> Result<Self> {
        if self.low < 0 && !self.coeffs.is_empty() {
            return Err(Error::Incompatible("composing a Laurent tail".into()));
        }
        let vg = match g.valuation()? {
            Some(v) if v >= 1 => v,
            _ => return Err(Error::Incompatible("inner series must have positive valuation".into())),
        };
        let mut acc = TruncatedSeries::zero(g.var);
        for e in (0..self.high()).rev() {
            acc = acc.mul(g, f)?;
            acc = acc.add(&Self::constant(g.var, self.coeff(e)), f)?;
        }
        if let Some(p) = self.prec {
            acc = acc.truncate(p * vg);
        }
        Ok(acc)
    }
}

/// Polynomial in `T` whose coefficients are series in `pi`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeriesPolynomial {
    coeffs: Vec<TruncatedSeries>,
}

impl SeriesPolynomial {
    pub fn new(mut coeffs: Vec<TruncatedSeries>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_exact_zero()) {
            coeffs.pop();
        }
        SeriesPolynomial { coeffs }
    }

    pub fn one() -> Self {
        SeriesPolynomial { coeffs: vec![TruncatedSeries::one(Var::Pi)] }
    }

    /// `T - a`
    pub fn linear(a: TruncatedSeries, f: &Field) -> Self {
        Self::new(vec![a.neg(f), TruncatedSeries::one(Var::Pi)])
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeffs(&self) -> &[TruncatedSeries] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> TruncatedSeries {
        self.coeffs.get(k).cloned().unwrap_or_else(|| TruncatedSeries::zero(Var::Pi))
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs.last().is_some_and(|c| *c == TruncatedSeries::one(Var::Pi))
    }

    pub fn mul(&self, other: &Self, f: &Field) -> Result<Self> {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Ok(Self::new(Vec::new()));
        }
        let mut out = vec![TruncatedSeries::zero(Var::Pi); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].add(&a.mul(b, f)?, f)?;
            }
        }
        Ok(Self::new(out))
    }

    pub fn derivative(&self, f: &Field) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c.scale(f.from_int(k as i64), f))
            .collect();
        Self::new(coeffs)
    }

    /// Evaluate at `gamma`, a series in `t_i` where `pi = t_i^n`.
    pub fn eval_on_branch(&self, gamma: &TruncatedSeries, n: i64, f: &Field) -> Result<TruncatedSeries> {
        let mut acc = TruncatedSeries::zero(gamma.var());
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(gamma, f)?;
            acc = acc.add(&c.substitute_power(gamma.var(), n), f)?;
        }
        Ok(acc)
    }

    pub fn conj(&self, f: &Field) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.conj(f)).collect())
    }
}

/// Valuation of the determinant of a square matrix over `F_q[[pi]]`,
/// by elimination with minimal-valuation pivots.
pub fn det_valuation(mut m: Vec<Vec<TruncatedSeries>>, f: &Field, rel_prec: i64) -> Result<i64> {
    let n = m.len();
    let mut total = 0;
    for k in 0..n {
        let mut best: Option<(i64, usize, usize)> = None;
        let mut unknown_floor: Option<i64> = None;
        for (r, row) in m.iter().enumerate().skip(k) {
            for (c, a) in row.iter().enumerate().skip(k) {
                if a.is_zero_to_precision() {
                    if let Some(p) = a.precision() {
                        unknown_floor = Some(unknown_floor.map_or(p, |u: i64| u.min(p)));
                    }
                } else if best.is_none_or(|(bv, _, _)| a.low() < bv) {
                    best = Some((a.low(), r, c));
                }
            }
        }
        // an entry known only as O(pi^p) might hide a smaller pivot
        let (v, r, c) = match (best, unknown_floor) {
            (Some(b), Some(p)) if p < b.0 => return Err(Error::Indeterminate { prec: p }),
            (Some(b), _) => b,
            (None, Some(p)) => return Err(Error::Indeterminate { prec: p }),
            (None, None) => return Err(Error::InvalidDatum("determinant vanishes identically".into())),
        };
        m.swap(k, r);
        for row in m.iter_mut() {
            row.swap(k, c);
        }
        total += v;
        let pivot = m[k][k].clone();
        let unit = pivot.shift(-v);
        let unit_inv = unit.inv_unit(f, rel_prec)?;
        let (top, rest) = m.split_at_mut(k + 1);
        let prow = &top[k];
        for row in rest.iter_mut() {
            if row[k].is_exact_zero() {
                continue;
            }
            // factor = row[k] / pivot, integral because v is minimal
            let factor = row[k].shift(-v).mul(&unit_inv, f)?;
            for c in k..n {
                let t = factor.mul(&prow[c], f)?;
                row[c] = row[c].sub(&t, f)?;
            }
        }
    }
    Ok(total)
}

/// Sylvester matrix of `p` and `q` (entries series in `pi`).
pub fn sylvester(p: &SeriesPolynomial, q: &SeriesPolynomial) -> Vec<Vec<TruncatedSeries>> {
    let (m, n) = (p.degree(), q.degree());
    let size = m + n;
    let mut rows = vec![vec![TruncatedSeries::zero(Var::Pi); size]; size];
    for i in 0..n {
        for k in 0..=m {
            rows[i][i + k] = p.coeff(m - k);
        }
    }
    for i in 0..m {
        for k in 0..=n {
            rows[n + i][i + k] = q.coeff(n - k);
        }
    }
    rows
}

/// `v_pi(Res(P, Q))` from the Sylvester determinant at relative precision `rel_prec`.
pub fn resultant_valuation(p: &SeriesPolynomial, q: &SeriesPolynomial, f: &Field, rel_prec: i64) -> Result<i64> {
    if !p.is_monic() || !q.is_monic() {
        return Err(Error::InvalidDatum("resultant of non-monic polynomials".into()));
    }
    if p.degree() + q.degree() == 0 {
        return Ok(0);
    }
    det_valuation(sylvester(p, q), f, rel_prec)
}

/// [`resultant_valuation`] with precision doubling up to `ceiling`.
pub fn resultant_valuation_auto(
    p: &SeriesPolynomial,
    q: &SeriesPolynomial,
    f: &Field,
    start: i64,
    ceiling: i64,
) -> Result<i64> {
    let mut prec = start.max(1);
    loop {
        match resultant_valuation(p, q, f, prec) {
            Err(Error::Indeterminate { .. }) if prec < ceiling => prec = (2 * prec).min(ceiling),
            Err(Error::Indeterminate { prec: at }) => {
                return Err(Error::Precision(format!(
                    "resultant valuation still indeterminate at precision {at} (ceiling {ceiling})"
                )))
            }
            other => return other,
        }
    }
}
