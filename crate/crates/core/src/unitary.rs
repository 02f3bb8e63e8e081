//! The hermitian structure on `E = prod E_i` over `k = F_{q^2}`, the dual
//! lattice it induces, and the count of Frobenius-fixed orbits.
//!
//! The form is `<x, y> = sum_i Tr_{E_i/F}(alpha_i^{-1} x_i^* y_i)` with
//! `alpha = eps^{n-1} P'(gamma)`, where `*` raises coefficients to the
//! `q`-th power and fixes every `t_i`. Twisted Frobenius sends a lattice to
//! its dual under this form.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Fe, Field};
use crate::lattice::{offset_window, LatticePoint};
use crate::linalg::{kernel, Rref};
use crate::series::{SeriesPolynomial, TruncatedSeries, Var};
use crate::spectral::SpectralDatum;
use crate::window::Window;

#[derive(Clone, Debug)]
pub struct HermitianForm {
    q: u32,
    alpha: Vec<TruncatedSeries>,
    alpha_inv: Vec<TruncatedSeries>,
    valuations: Vec<i64>,
}

/// Check the hypotheses of the unitary setting: an involution on `k`, odd
/// characteristic and `gamma_i^* = -gamma_i` on every branch.
pub fn check_hermitian(datum: &SpectralDatum) -> Result<()> {
    let f = datum.field();
    if f.characteristic() == 2 {
        return Err(Error::InvalidDatum("hermitian data need odd characteristic".into()));
    }
    if !f.has_involution() {
        return Err(Error::InvalidDatum(format!(
            "F_{} has no involution; hermitian data need k = F_(q^2)",
            f.order()
        )));
    }
    for (i, b) in datum.branches().iter().enumerate() {
        if !b.is_skew(f) {
            return Err(Error::InvalidDatum(format!("branch {i}: gamma^* + gamma is not zero")));
        }
    }
    Ok(())
}

impl HermitianForm {
    pub fn new(datum: &SpectralDatum) -> Result<Self> {
        check_hermitian(datum)?;
        let f = datum.field();
        let q = f.sub_order().expect("checked above");
        let eps = f.epsilon().expect("field has an involution");
        let mut p = SeriesPolynomial::one();
        for i in 0..datum.len() {
            p = p.mul(datum.minimal_polynomial(i), f)?;
        }
        let dp = p.derivative(f);
        let scale = f.pow(eps, datum.n_total() as u64 - 1);
        let c = datum.conductor_exponents();
        let mut alpha = Vec::new();
        let mut alpha_inv = Vec::new();
        let mut valuations = Vec::new();
        for (i, b) in datum.branches().iter().enumerate() {
            let a = dp.eval_on_branch(b.gamma(), b.n() as i64, f)?.scale(scale, f);
            if a.conj(f) != a {
                return Err(Error::Invariant(format!("branch {i}: alpha is not fixed by the involution")));
            }
            let v = a.finite_valuation()?;
            if v != c[i] + b.n() as i64 - 1 {
                return Err(Error::Invariant(format!(
                    "branch {i}: v(alpha) = {v}, expected c + n - 1 = {}",
                    c[i] + b.n() as i64 - 1
                )));
            }
            // enough relative precision for pairings of elements known to t^{4v}
            alpha_inv.push(a.inv(f, 4 * v + 8)?);
            alpha.push(a);
            valuations.push(v);
        }
        Ok(HermitianForm { q, alpha, alpha_inv, valuations })
    }

    /// Order `q` of the fixed field of the involution.
    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn alpha(&self) -> &[TruncatedSeries] {
        &self.alpha
    }

    /// `v_{t_i}(alpha_i)`
    pub fn alpha_valuations(&self) -> &[i64] {
        &self.valuations
    }

    /// `<x, y>` as a series in `pi`.
    pub fn pair(&self, datum: &SpectralDatum, x: &[TruncatedSeries], y: &[TruncatedSeries]) -> Result<TruncatedSeries> {
        let f = datum.field();
        let mut acc = TruncatedSeries::zero(Var::Pi);
        for (i, b) in datum.branches().iter().enumerate() {
            let z = self.alpha_inv[i].mul(&x[i].conj(f), f)?.mul(&y[i], f)?;
            acc = acc.add(&trace(&z, b.n() as i64, f), f)?;
        }
        Ok(acc)
    }

    /// `M^perp = { y : <M, y> ⊂ O_F }`.
    pub fn dual(&self, datum: &SpectralDatum, m: &LatticePoint) -> Result<LatticePoint> {
        let f = datum.field();
        let c = datum.conductor_exponents();
        let ns = datum.ns();
        let k = datum.len();
        let nu = m.nu();
        let ow = offset_window(datum);
        // t^{c-nu} Ã ⊂ M^perp ⊂ t^{-nu} Ã
        let w = Window::new(nu.iter().map(|x| -x).collect(), (0..k).map(|i| c[i] - nu[i]).collect());
        let top = (0..k).map(|i| (self.valuations[i]) / ns[i]).max().unwrap_or(0);
        let mut eqs: Vec<Vec<Fe>> = Vec::new();
        for row in m.sub().rows() {
            // z_i = alpha_i^{-1} x_i^*, needed at exponents below nu_i
            let z: Vec<Vec<(i64, Fe)>> = (0..k)
                .map(|i| {
                    let mut out: BTreeMap<i64, Fe> = BTreeMap::new();
                    for (a, xa) in ow.terms(row, i) {
                        let xa = f.conj(xa);
                        for (e, b) in self.alpha_inv[i].terms() {
                            let s = e + a + nu[i];
                            if s < nu[i] {
                                let slot = out.entry(s).or_insert(Fe::ZERO);
                                *slot = f.mul_add(*slot, xa, b);
                            }
                        }
                    }
                    out.into_iter().filter(|t| !t.1.is_zero()).collect()
                })
                .collect();
            for mm in 1..=top {
                let mut eq = w.zero();
                for i in 0..k {
                    let ni = f.from_int(ns[i]);
                    for &(s, zs) in &z[i] {
                        // coefficient of t_i^{-mm n_i} in z_i y_i
                        if let Some(col) = w.col(i, -mm * ns[i] - s) {
                            eq[col] = f.mul_add(eq[col], ni, zs);
                        }
                    }
                }
                if eq.iter().any(|x| !x.is_zero()) {
                    eqs.push(eq);
                }
            }
        }
        let ker = kernel(&eqs, w.dim(), f);
        let sub = Rref::from_rows(w.dim(), ker, f);
        LatticePoint::from_window(datum, &w, &sub)
    }

    /// Twisted Frobenius on lattices, `M -> M^perp`.
    pub fn frobenius(&self, datum: &SpectralDatum, m: &LatticePoint) -> Result<LatticePoint> {
        self.dual(datum, m)
    }
}

/// `Tr_{E_i/F}` for `E_i = F(t)`, `t^n = pi`.
pub fn trace(z: &TruncatedSeries, n: i64, f: &Field) -> TruncatedSeries {
    let nf = f.from_int(n);
    let low = z.low().div_euclid(n);
    let prec = z.precision().map(|p| (p + n - 1).div_euclid(n));
    let hi = match prec {
        Some(p) => p,
        None => z.high().div_euclid(n) + 1,
    };
    let coeffs = (low..hi.max(low)).map(|m| f.mul(nf, z.coeff(m * n))).collect();
    TruncatedSeries::new(Var::Pi, low, coeffs, prec)
}

/// Frobenius behaviour of one canonical representative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Classified {
    pub point: LatticePoint,
    /// `Some(lambda)` when `Frob(M) = sigma(lambda) M`.
    pub lambda: Option<Vec<i64>>,
}

/// Uniformizers `u_i t_i` with `u_i ∈ F_q^×` defining the section of `Λ⁰`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Section {
    pub units: Vec<Fe>,
}

impl Section {
    pub fn standard(k: usize) -> Self {
        Section { units: vec![Fe::ONE; k] }
    }

    pub fn check(&self, datum: &SpectralDatum) -> Result<()> {
        let f = datum.field();
        if self.units.len() != datum.len() {
            return Err(Error::Config(format!("{} units for {} branches", self.units.len(), datum.len())));
        }
        for (i, &u) in self.units.iter().enumerate() {
            if u.is_zero() || !f.is_real(u) {
                return Err(Error::Config(format!("unit on branch {i} must be a nonzero element of F_q")));
            }
        }
        Ok(())
    }

    /// Sub-space of `sigma(lambda) M` in offset coordinates.
    fn act(&self, datum: &SpectralDatum, sub: &Rref, lambda: &[i64]) -> Rref {
        let f = datum.field();
        let ow = offset_window(datum);
        let scale: Vec<Fe> = (0..datum.len())
            .map(|i| {
                let u = self.units[i];
                if lambda[i] >= 0 {
                    f.pow(u, lambda[i] as u64)
                } else {
                    f.pow(f.inv(u).unwrap(), (-lambda[i]) as u64)
                }
            })
            .collect();
        let rows = sub.rows().iter().map(|r| {
            let mut v = r.clone();
            for (c, x) in v.iter_mut().enumerate() {
                *x = f.mul(*x, scale[ow.coord(c).0]);
            }
            v
        });
        Rref::from_rows(sub.ncols(), rows, f)
    }
}

/// Decide for each canonical point of `Z⁰` whether it is fixed by twisted
/// Frobenius and read off `lambda`.
pub fn classify(
    datum: &SpectralDatum,
    form: &HermitianForm,
    section: &Section,
    points: &[LatticePoint],
) -> Result<Vec<Classified>> {
    section.check(datum)?;
    points
        .par_iter()
        .map(|m| {
            let fm = form.frobenius(datum, m)?;
            if fm.index(datum) != -m.index(datum) {
                return Err(Error::Invariant(format!(
                    "[Frob(M) : A] = {} but [M : A] = {}",
                    fm.index(datum),
                    m.index(datum)
                )));
            }
            let lambda: Vec<i64> = fm.nu().iter().zip(m.nu()).map(|(a, b)| a - b).collect();
            let fixed = lambda.iter().sum::<i64>() == 0 && section.act(datum, m.sub(), &lambda) == *fm.sub();
            Ok(Classified { point: m.clone(), lambda: fixed.then_some(lambda) })
        })
        .collect()
}

/// `lambda mod 2`
pub fn class_of(lambda: &[i64]) -> Vec<u8> {
    lambda.iter().map(|x| x.rem_euclid(2) as u8).collect()
}

/// `kappa(lambda) = (-1)^{sum_{i in I_1} lambda_i}`
pub fn kappa(class: &[u8], part: &[usize]) -> i64 {
    if part.iter().map(|&i| class[i] as u32).sum::<u32>() % 2 == 0 {
        1
    } else {
        -1
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassCount {
    pub class: Vec<u8>,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrbitalCounts {
    pub q: u32,
    pub points: usize,
    pub fixed: u64,
    pub not_fixed: u64,
    /// `O_λ̄` for every class met, sorted by class.
    pub classes: Vec<ClassCount>,
}

impl OrbitalCounts {
    pub fn from_classified(q: u32, cl: &[Classified]) -> Self {
        let mut by: BTreeMap<Vec<u8>, u64> = BTreeMap::new();
        for c in cl {
            if let Some(l) = &c.lambda {
                *by.entry(class_of(l)).or_default() += 1;
            }
        }
        let fixed = by.values().sum();
        OrbitalCounts {
            q,
            points: cl.len(),
            fixed,
            not_fixed: cl.len() as u64 - fixed,
            classes: by.into_iter().map(|(class, count)| ClassCount { class, count }).collect(),
        }
    }

    /// Stable count `SO = |Z⁰(F_q)|`.
    pub fn stable(&self) -> i64 {
        self.fixed as i64
    }

    /// `O^kappa` for the character attached to the block `part`.
    pub fn kappa(&self, part: &[usize]) -> i64 {
        self.classes.iter().map(|c| kappa(&c.class, part) * c.count as i64).sum()
    }
}

/// Classify `points` and collect the counts; also checks that the counts do
/// not depend on which branch absorbs `nu`.
pub fn orbital_counts(
    datum: &SpectralDatum,
    form: &HermitianForm,
    section: &Section,
    points: &[LatticePoint],
) -> Result<OrbitalCounts> {
    let cl = classify(datum, form, section, points)?;
    let counts = OrbitalCounts::from_classified(form.q(), &cl);
    if datum.len() > 1 {
        let absorb = points.first().map_or(0, |m| {
            m.nu().iter().position(|&x| x != 0).unwrap_or(0)
        });
        let other = (absorb + 1) % datum.len();
        let moved: Vec<LatticePoint> = points.iter().map(|m| m.canonicalize(other).0).collect();
        let again = OrbitalCounts::from_classified(form.q(), &classify(datum, form, section, &moved)?);
        if again != counts {
            return Err(Error::Invariant(format!(
                "orbital counts change with the absorbing branch: {:?} vs {:?}",
                counts.classes, again.classes
            )));
        }
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use proptest::prelude::*;

    use crate::enumerate::DEFAULT_BUDGET;
    use crate::spectral::Branch;
    use crate::springer::saturated_points;

    fn eps_datum(p: u32, spec: &[(usize, &[(i64, i64)])]) -> SpectralDatum {
        let f = Arc::new(Field::new(p, 2).unwrap());
        let eps = f.epsilon().unwrap();
        let bs = spec
            .iter()
            .enumerate()
            .map(|(i, (n, t))| {
                let terms: Vec<(i64, Fe)> = t.iter().map(|&(x, c)| (x, f.scale_int(eps, c))).collect();
                Branch::new(i, *n, &terms, &f).unwrap()
            })
            .collect();
        SpectralDatum::new(f, bs, 64).unwrap()
    }

    fn node(p: u32) -> SpectralDatum {
        eps_datum(p, &[(1, &[(1, 1)]), (1, &[(1, -1)])])
    }

    fn samples() -> Vec<SpectralDatum> {
        vec![
            node(3),
            eps_datum(3, &[(2, &[(3, 1)])]),
            eps_datum(3, &[(1, &[(1, 1)]), (1, &[(1, 1), (2, 1)])]),
            eps_datum(5, &[(2, &[(3, 1)]), (1, &[(1, 1)])]),
        ]
    }

    #[test]
    fn order_is_self_dual() {
        for d in samples() {
            let h = HermitianForm::new(&d).unwrap();
            let a = LatticePoint::order(&d).unwrap();
            assert_eq!(h.dual(&d, &a).unwrap(), a);
            assert_eq!(h.dual(&d, &a.pi_pow(&d, -1)).unwrap(), a.pi_pow(&d, 1));
            let at = LatticePoint::normalization(&d);
            let dt = h.dual(&d, &at).unwrap();
            assert_eq!(dt.index(&d), -d.delta());
            assert_eq!(h.dual(&d, &dt).unwrap(), at);
        }
    }

    #[test]
    fn alpha_valuation_and_cusp_example() {
        let cusp = eps_datum(3, &[(2, &[(3, 1)])]);
        let h = HermitianForm::new(&cusp).unwrap();
        assert_eq!(h.alpha_valuations(), &[3]);
        assert_eq!(h.q(), 3);
    }

    #[test]
    fn dual_is_an_involution_on_points() {
        for d in samples() {
            let h = HermitianForm::new(&d).unwrap();
            for m in saturated_points(&d, 0, 0, DEFAULT_BUDGET).unwrap() {
                let fm = h.dual(&d, &m).unwrap();
                assert!(fm.is_stable(&d));
                assert_eq!(fm.index(&d), 0);
                assert_eq!(h.dual(&d, &fm).unwrap(), m);
            }
        }
    }

    #[test]
    fn node_classes() {
        for p in [3u32, 5] {
            let d = node(p);
            let h = HermitianForm::new(&d).unwrap();
            let pts = saturated_points(&d, 0, 0, DEFAULT_BUDGET).unwrap();
            let oc = orbital_counts(&d, &h, &Section::standard(2), &pts).unwrap();
            let q = p as u64;
            assert_eq!(oc.classes, vec![
                ClassCount { class: vec![0, 0], count: q + 1 },
                ClassCount { class: vec![1, 1], count: 1 },
            ]);
            assert_eq!(oc.stable(), q as i64 + 2);
            assert_eq!(oc.kappa(&[0]), q as i64);
        }
    }

    #[test]
    fn other_section_keeps_the_totals() {
        let d = node(5);
        let h = HermitianForm::new(&d).unwrap();
        let pts = saturated_points(&d, 0, 0, DEFAULT_BUDGET).unwrap();
        let std = orbital_counts(&d, &h, &Section::standard(2), &pts).unwrap();
        let twisted = Section { units: vec![d.field().from_int(2), Fe::ONE] };
        let oc = orbital_counts(&d, &h, &twisted, &pts).unwrap();
        assert_eq!((oc.stable(), oc.kappa(&[0])), (std.stable(), std.kappa(&[0])));
        let bad = Section { units: vec![d.field().epsilon().unwrap(), Fe::ONE] };
        assert!(matches!(classify(&d, &h, &bad, &pts), Err(Error::Config(_))));
    }

    #[test]
    fn smooth_branch_counts_one() {
        let d = eps_datum(5, &[(1, &[(1, 1), (3, 2)])]);
        let h = HermitianForm::new(&d).unwrap();
        let pts = saturated_points(&d, 0, 0, DEFAULT_BUDGET).unwrap();
        let oc = orbital_counts(&d, &h, &Section::standard(1), &pts).unwrap();
        assert_eq!((oc.points, oc.stable()), (1, 1));
    }

    #[test]
    fn rejects_non_skew_gamma() {
        let f = Arc::new(Field::new(3, 2).unwrap());
        let b = Branch::new(0, 2, &[(3, Fe::ONE)], &f).unwrap();
        let d = SpectralDatum::new(f, vec![b], 64).unwrap();
        assert!(matches!(HermitianForm::new(&d), Err(Error::InvalidDatum(_))));
    }

    fn element(d: &SpectralDatum, coeffs: &[Vec<u16>]) -> Vec<TruncatedSeries> {
        coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let v: Vec<Fe> = c.iter().map(|&x| Fe(x % d.field().order() as u16)).collect();
                TruncatedSeries::new(Var::T(i), -2, v, None)
            })
            .collect()
    }

    proptest! {
        #[test]
        fn form_is_hermitian(
            x in proptest::collection::vec(proptest::collection::vec(0u16..9, 6), 2),
            y in proptest::collection::vec(proptest::collection::vec(0u16..9, 6), 2),
            a in 1u16..9,
        ) {
            let d = node(3);
            let f = d.field();
            let h = HermitianForm::new(&d).unwrap();
            let xs = element(&d, &x);
            let ys = element(&d, &y);
            let xy = h.pair(&d, &xs, &ys).unwrap();
            let yx = h.pair(&d, &ys, &xs).unwrap();
            prop_assert_eq!(xy.conj(f), yx);
            // linear in y, conjugate linear in x
            let ay: Vec<_> = ys.iter().map(|s| s.scale(Fe(a), f)).collect();
            let ax: Vec<_> = xs.iter().map(|s| s.scale(Fe(a), f)).collect();
            prop_assert_eq!(h.pair(&d, &xs, &ay).unwrap(), xy.scale(Fe(a), f));
            prop_assert_eq!(h.pair(&d, &ax, &ys).unwrap(), xy.scale(f.conj(Fe(a)), f));
        }
    }
}
