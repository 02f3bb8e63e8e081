//! `A`-lattices in `E = prod k((t_i))` in normal form.
//!
//! A lattice `M` with `A M ⊂ M` satisfies `t^{nu+c} Ã ⊂ M ⊂ t^nu Ã`, where
//! `nu_i` is the valuation of its projection to branch `i` and `c` is the
//! conductor. It is stored as `nu` together with the subspace
//! `M / t^{nu+c} Ã` written in offset coordinates `(i, e - nu_i)`, which is
//! canonical. In these coordinates multiplication by `pi`, by `gamma` and by
//! any `t^lambda` never touches the subspace, only `nu`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Fe, Field};
use crate::linalg::Rref;
use crate::spectral::{Element, SpectralDatum};
use crate::window::{apply, Window};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePoint {
    nu: Vec<i64>,
    sub: Rref,
}

/// The window `[0, c)` holding normal-form subspaces.
pub fn offset_window(datum: &SpectralDatum) -> Window {
    let c = datum.conductor_exponents();
    Window::new(vec![0; c.len()], c.to_vec())
}

impl LatticePoint {
    pub fn from_parts(datum: &SpectralDatum, nu: Vec<i64>, sub: Rref) -> Result<Self> {
        let w = offset_window(datum);
        if nu.len() != datum.len() || sub.ncols() != w.dim() {
            return Err(Error::Incompatible("lattice shape does not match the datum".into()));
        }
        Ok(LatticePoint { nu, sub })
    }

    /// `A` itself.
    pub fn order(datum: &SpectralDatum) -> Result<Self> {
        let w = offset_window(datum);
        let sub = datum.order_image(&w, 0)?;
        Ok(LatticePoint { nu: vec![0; datum.len()], sub })
    }

    /// The normalization `Ã`.
    pub fn normalization(datum: &SpectralDatum) -> Self {
        let w = offset_window(datum);
        LatticePoint { nu: vec![0; datum.len()], sub: Rref::full(w.dim()) }
    }

    pub fn nu(&self) -> &[i64] {
        &self.nu
    }

    pub fn sub(&self) -> &Rref {
        &self.sub
    }

    /// `[M : A]`
    pub fn index(&self, datum: &SpectralDatum) -> i64 {
        self.sub.dim() as i64 - self.nu.iter().sum::<i64>() - datum.delta()
    }

    /// `t^shift M` for any integer vector.
    pub fn shift(&self, shift: &[i64]) -> Self {
        LatticePoint { nu: self.nu.iter().zip(shift).map(|(a, b)| a + b).collect(), sub: self.sub.clone() }
    }

    /// Action of a zero-sum vector.
    pub fn lambda_act(&self, lambda: &[i64]) -> Result<Self> {
        if lambda.len() != self.nu.len() || lambda.iter().sum::<i64>() != 0 {
            return Err(Error::Incompatible(format!("{lambda:?} is not a zero-sum vector over the branches")));
        }
        Ok(self.shift(lambda))
    }

    /// `pi^k M`
    pub fn pi_pow(&self, datum: &SpectralDatum, k: i64) -> Self {
        let s: Vec<i64> = datum.ns().iter().map(|n| n * k).collect();
        self.shift(&s)
    }

    /// Orbit representative with `nu_i = 0` off the absorbing branch, and the
    /// zero-sum vector taking `self` to it.
    pub fn canonicalize(&self, absorb: usize) -> (Self, Vec<i64>) {
        let total: i64 = self.nu.iter().sum();
        let target: Vec<i64> = (0..self.nu.len()).map(|i| if i == absorb { total } else { 0 }).collect();
        let lambda: Vec<i64> = target.iter().zip(&self.nu).map(|(a, b)| a - b).collect();
        (LatticePoint { nu: target, sub: self.sub.clone() }, lambda)
    }

    /// Coefficientwise `a -> a^q`.
    pub fn conj(&self, f: &Field) -> Self {
        let rows = self.sub.rows().iter().map(|r| r.iter().map(|&x| f.conj(x)).collect());
        LatticePoint { nu: self.nu.clone(), sub: Rref::from_rows(self.sub.ncols(), rows, f) }
    }

    /// Stable under multiplication by `pi` and `gamma`.
    pub fn is_stable(&self, datum: &SpectralDatum) -> bool {
        let w = offset_window(datum);
        let f = datum.field();
        [datum.pi(), datum.gamma()].iter().all(|g| {
            self.sub.rows().iter().all(|r| self.sub.contains(&w.mul(r, g, f), f))
        })
    }

    /// The projection to branch `i` reaches `t_i^{nu_i}` whenever `c_i > 0`.
    pub fn has_exact_valuations(&self, datum: &SpectralDatum) -> bool {
        let w = offset_window(datum);
        (0..datum.len()).all(|i| w.width(i) == 0 || w.min_exponent(self.sub.rows(), i) == Some(0))
    }

    /// Image of `M` in `t^lo Ã / t^hi Ã`.
    pub fn to_window(&self, datum: &SpectralDatum, w: &Window) -> Result<Rref> {
        let f = datum.field();
        let c = datum.conductor_exponents();
        let ow = offset_window(datum);
        for i in 0..datum.len() {
            if self.nu[i] < w.lo()[i] {
                return Err(Error::WindowOverflow(format!(
                    "branch {i}: lattice reaches t^{} below window start {}",
                    self.nu[i],
                    w.lo()[i]
                )));
            }
        }
        let mut m = Rref::zero(w.dim());
        for r in self.sub.rows() {
            m.insert(ow.shift_into(r, &self.nu, w)?, f);
        }
        for i in 0..datum.len() {
            for e in (self.nu[i] + c[i]).max(w.lo()[i])..w.hi()[i] {
                m.insert(w.monomial(i, e).unwrap(), f);
            }
        }
        Ok(m)
    }

    /// Inverse of [`to_window`](Self::to_window) for `M ⊃ t^hi Ã`.
    pub fn from_window(datum: &SpectralDatum, w: &Window, m: &Rref) -> Result<Self> {
        let f = datum.field();
        let c = datum.conductor_exponents();
        let ow = offset_window(datum);
        let nu: Vec<i64> = (0..datum.len())
            .map(|i| w.min_exponent(m.rows(), i).unwrap_or(w.hi()[i]))
            .collect();
        let neg: Vec<i64> = nu.iter().map(|x| -x).collect();
        let mut sub = Rref::zero(ow.dim());
        for r in m.rows() {
            sub.insert(w.shift_into(r, &neg, &ow)?, f);
        }
        for i in 0..datum.len() {
            for a in (w.hi()[i] - nu[i]).max(0)..c[i] {
                sub.insert(ow.monomial(i, a).unwrap(), f);
            }
        }
        Ok(LatticePoint { nu, sub })
    }

    /// A window containing both lattices with room `extra` above the conductor.
    pub fn common_window(datum: &SpectralDatum, lattices: &[&LatticePoint], extra: &[i64]) -> Window {
        let c = datum.conductor_exponents();
        let k = datum.len();
        let lo: Vec<i64> = (0..k).map(|i| lattices.iter().map(|m| m.nu[i]).min().unwrap_or(0)).collect();
        let hi: Vec<i64> = (0..k)
            .map(|i| lattices.iter().map(|m| m.nu[i] + c[i]).max().unwrap_or(0) + extra.get(i).copied().unwrap_or(0))
            .collect();
        Window::new(lo, hi)
    }

    pub fn contains(&self, other: &LatticePoint, datum: &SpectralDatum) -> Result<bool> {
        let w = Self::common_window(datum, &[self, other], &[]);
        let a = self.to_window(datum, &w)?;
        let b = other.to_window(datum, &w)?;
        Ok(b.is_subspace_of(&a, datum.field()))
    }

    pub fn sum(&self, other: &LatticePoint, datum: &SpectralDatum) -> Result<LatticePoint> {
        let w = Self::common_window(datum, &[self, other], &[]);
        let a = self.to_window(datum, &w)?;
        let b = other.to_window(datum, &w)?;
        Self::from_window(datum, &w, &a.sum(&b, datum.field()))
    }

    pub fn intersect(&self, other: &LatticePoint, datum: &SpectralDatum) -> Result<LatticePoint> {
        let w = Self::common_window(datum, &[self, other], &[]);
        let a = self.to_window(datum, &w)?;
        let b = other.to_window(datum, &w)?;
        Self::from_window(datum, &w, &a.intersect(&b, datum.field()))
    }

    /// `[self : other]`
    pub fn index_of(&self, other: &LatticePoint, datum: &SpectralDatum) -> i64 {
        self.index(datum) - other.index(datum)
    }

    /// Free of rank one over `A`: `dim M / m M = 1` with `m = (pi, gamma)`.
    pub fn is_free(&self, datum: &SpectralDatum) -> bool {
        let f = datum.field();
        let c = datum.conductor_exponents();
        let ns = datum.ns();
        let k = datum.len();
        // m M ⊃ pi t^{nu+c} Ã, so the window [nu, nu+c+n) sees everything
        let w = Window::new(vec![0; k], (0..k).map(|i| c[i] + ns[i]).collect());
        let zeroed = LatticePoint { nu: vec![0; k], sub: self.sub.clone() };
        let m = zeroed.to_window(datum, &w).expect("window starts at nu");
        let mut mm = Rref::zero(w.dim());
        for g in [datum.pi(), datum.gamma()] {
            for r in m.rows() {
                mm.insert(w.mul(r, &g, f), f);
            }
        }
        m.dim() - mm.dim() == 1
    }

    /// Multiply by an element of `Ã` (exact per-branch polynomials).
    pub fn mul_element(&self, datum: &SpectralDatum, g: &Element) -> Result<LatticePoint> {
        let f = datum.field();
        // g M contains t^{nu+c+v(g)} Ã
        let mut extra = Vec::with_capacity(g.len());
        for (i, gi) in g.iter().enumerate() {
            let v = gi.iter().filter(|t| !t.1.is_zero()).map(|t| t.0).min();
            extra.push(v.ok_or_else(|| Error::Incompatible(format!("zero component on branch {i}")))?);
        }
        let w = Self::common_window(datum, &[self], &extra);
        let m = self.to_window(datum, &w)?;
        let img = m.map(w.dim(), f, |r| w.mul(r, g, f));
        Self::from_window(datum, &w, &img)
    }

    /// Rows of the normal-form subspace as elements, for display.
    pub fn generators(&self, datum: &SpectralDatum) -> Vec<Vec<Vec<(i64, Fe)>>> {
        let ow = offset_window(datum);
        self.sub
            .rows()
            .iter()
            .map(|r| (0..datum.len()).map(|i| {
                ow.terms(r, i).into_iter().map(|(e, a)| (e + self.nu[i], a)).collect()
            }).collect())
            .collect()
    }
}

/// Serializable summary of a lattice.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct LatticeSummary {
    pub nu: Vec<i64>,
    pub dim: usize,
    pub pivots: Vec<usize>,
    pub rows: Vec<Vec<Fe>>,
    pub index: i64,
    pub free: bool,
}

impl LatticeSummary {
    pub fn of(m: &LatticePoint, datum: &SpectralDatum) -> Self {
        LatticeSummary {
            nu: m.nu.clone(),
            dim: m.sub.dim(),
            pivots: m.sub.pivots().to_vec(),
            rows: m.sub.rows().to_vec(),
            index: m.index(datum),
            free: m.is_free(datum),
        }
    }
}

/// Apply an operator given by column images to every row of a subspace.
pub fn image(sub: &Rref, images: &[Vec<Fe>], f: &Field) -> Rref {
    sub.map(sub.ncols(), f, |r| apply(images, r, f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::spectral::Branch;

    fn node(f: &Arc<Field>) -> SpectralDatum {
        let eps = f.epsilon().unwrap();
        SpectralDatum::new(
            f.clone(),
            vec![
                Branch::new(0, 1, &[(1, eps)], f).unwrap(),
                Branch::new(1, 1, &[(1, f.neg(eps))], f).unwrap(),
            ],
            64,
        )
        .unwrap()
    }

    fn cusp(f: &Arc<Field>) -> SpectralDatum {
        let eps = f.epsilon().unwrap();
        SpectralDatum::new(f.clone(), vec![Branch::new(0, 2, &[(3, eps)], f).unwrap()], 64).unwrap()
    }

    #[test]
    fn order_and_normalization_indices() {
        let f = Arc::new(Field::new(3, 2).unwrap());
        for d in [node(&f), cusp(&f)] {
            let a = LatticePoint::order(&d).unwrap();
            let at = LatticePoint::normalization(&d);
            assert_eq!(a.index(&d), 0);
            assert_eq!(at.index_of(&a, &d), d.delta());
            assert_eq!(a.pi_pow(&d, -1).index_of(&a, &d), d.n_total() as i64);
            assert!(a.is_stable(&d) && at.is_stable(&d));
            assert!(a.is_free(&d));
            assert!(!at.is_free(&d));
            assert!(at.contains(&a, &d).unwrap());
            assert!(!a.contains(&at, &d).unwrap());
        }
    }

    #[test]
    fn window_round_trip_and_lambda() {
        let f = Arc::new(Field::new(3, 2).unwrap());
        let d = node(&f);
        let a = LatticePoint::order(&d).unwrap();
        let m = a.lambda_act(&[1, -1]).unwrap();
        assert_eq!(m.nu(), &[1, -1]);
        assert_eq!(m.index(&d), 0);
        let w = Window::new(vec![-3, -3], vec![4, 4]);
        let img = m.to_window(&d, &w).unwrap();
        assert_eq!(LatticePoint::from_window(&d, &w, &img).unwrap(), m);
        assert_eq!(m.canonicalize(0).0, a.canonicalize(0).0);
        assert!(a.lambda_act(&[1, 0]).is_err());
        // the direct product (t) x (t^{-1}) agrees with lambda_act
        let direct = a.mul_element(&d, &vec![vec![(1, Fe::ONE)], vec![(0, Fe::ONE)]]).unwrap();
        assert_eq!(direct.shift(&[0, -1]), m);
    }

    #[test]
    fn sum_and_intersection_indices() {
        let f = Arc::new(Field::new(3, 2).unwrap());
        let d = node(&f);
        let a = LatticePoint::order(&d).unwrap();
        let b = a.lambda_act(&[1, -1]).unwrap();
        let s = a.sum(&b, &d).unwrap();
        let i = a.intersect(&b, &d).unwrap();
        assert_eq!(s.index(&d) + i.index(&d), a.index(&d) + b.index(&d));
        assert!(s.contains(&a, &d).unwrap() && s.contains(&b, &d).unwrap());
    }
}
