//! Partitions `I = I_1 ⊔ I_2` of the branches: sub and quotient lattices,
//! their indices, the stratification by `rho`, the rank of the fibration
//! over pairs `(M_1, M_2)` and the end-to-end identity check.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Fe, Field};
use crate::lattice::LatticePoint;
use crate::linalg::{kernel, rank, Rref};
use crate::series::SeriesPolynomial;
use crate::spectral::{Element, SpectralDatum};
use crate::springer::{points, Route, Stabilization};
use crate::unitary::{classify, orbital_counts, ClassCount, Classified, HermitianForm, Section};
use crate::window::Window;

/// A partition of the branches together with fresh data on both blocks.
#[derive(Clone, Debug)]
pub struct PartitionSpec {
    blocks: [Vec<usize>; 2],
    r: i64,
    /// `r_ij` for `i` in the first block and `j` in the second.
    cross: Vec<Vec<i64>>,
    sub: [SpectralDatum; 2],
}

impl PartitionSpec {
    /// `first` is `I_1`; `I_2` is its complement.
    pub fn new(datum: &SpectralDatum, first: &[usize]) -> Result<Self> {
        let k = datum.len();
        let b1: BTreeSet<usize> = first.iter().copied().collect();
        if b1.len() != first.len() || b1.iter().any(|&i| i >= k) {
            return Err(Error::Config(format!("partition block {first:?} is not a set of branch indices below {k}")));
        }
        let b1: Vec<usize> = b1.into_iter().collect();
        let b2: Vec<usize> = (0..k).filter(|i| !b1.contains(i)).collect();
        if b1.is_empty() || b2.is_empty() {
            return Err(Error::Config(format!("partition {first:?} leaves an empty block")));
        }
        let cross: Vec<Vec<i64>> = b1.iter().map(|&i| b2.iter().map(|&j| datum.r()[i][j]).collect()).collect();
        let r: i64 = cross.iter().flatten().sum();
        let sub = [datum.sub_datum(&b1)?, datum.sub_datum(&b2)?];
        let expect = datum.delta() - sub[0].delta() - sub[1].delta();
        if r != expect {
            return Err(Error::Invariant(format!("r = {r} but delta_I - delta_1 - delta_2 = {expect}")));
        }
        Ok(PartitionSpec { blocks: [b1, b2], r, cross, sub })
    }

    pub fn blocks(&self) -> &[Vec<usize>; 2] {
        &self.blocks
    }

    pub fn first(&self) -> &[usize] {
        &self.blocks[0]
    }

    pub fn r(&self) -> i64 {
        self.r
    }

    pub fn sub_datum(&self, alpha: usize) -> &SpectralDatum {
        &self.sub[alpha]
    }
}

/// `M'_a = M ∩ E_a` and `M''_a = pr_a(M)`, in the normal form of the block data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitLattice {
    pub inter: [LatticePoint; 2],
    pub proj: [LatticePoint; 2],
}

pub fn split_lattice(datum: &SpectralDatum, spec: &PartitionSpec, m: &LatticePoint) -> Result<SplitLattice> {
    let f = datum.field();
    let c = datum.conductor_exponents();
    let nu = m.nu();
    let k = datum.len();
    let w = Window::new(nu.to_vec(), (0..k).map(|i| nu[i] + c[i]).collect());
    let img = m.to_window(datum, &w)?;
    let mut inter = Vec::new();
    let mut proj = Vec::new();
    for (alpha, block) in spec.blocks.iter().enumerate() {
        let sd = &spec.sub[alpha];
        let bw = Window::new(block.iter().map(|&i| nu[i]).collect(), block.iter().map(|&i| nu[i] + c[i]).collect());
        let cols: Vec<usize> = block.iter().flat_map(|&i| w.block(i)).collect();
        let restrict = |v: &[Fe]| -> Vec<Fe> { cols.iter().map(|&c| v[c]).collect() };
        let coord = Rref::from_rows(w.dim(), cols.iter().map(|&c| crate::linalg::unit(w.dim(), c)), f);
        let cap = img.intersect(&coord, f);
        let a = Rref::from_rows(bw.dim(), cap.rows().iter().map(|r| restrict(r)), f);
        let b = Rref::from_rows(bw.dim(), img.rows().iter().map(|r| restrict(r)), f);
        inter.push(LatticePoint::from_window(sd, &bw, &a)?);
        proj.push(LatticePoint::from_window(sd, &bw, &b)?);
    }
    let (i1, i2) = (inter.remove(0), inter.remove(0));
    let (p1, p2) = (proj.remove(0), proj.remove(0));
    Ok(SplitLattice { inter: [i1, i2], proj: [p1, p2] })
}

/// The four indices of a lattice relative to the block orders.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct IndexProfile {
    pub inter: [i64; 2],
    pub proj: [i64; 2],
    pub rho: i64,
}

/// Indices of `M'_a`, `M''_a` and `rho = ind''_1 - ind'_1`, with the
/// identities `ind'_1 + ind''_2 = ind'_2 + ind''_1 = [M : A] - r` and the
/// bounds `0 <= rho <= r` checked.
pub fn index_profile(datum: &SpectralDatum, spec: &PartitionSpec, m: &LatticePoint) -> Result<IndexProfile> {
    let s = split_lattice(datum, spec, m)?;
    let inter = [s.inter[0].index(&spec.sub[0]), s.inter[1].index(&spec.sub[1])];
    let proj = [s.proj[0].index(&spec.sub[0]), s.proj[1].index(&spec.sub[1])];
    let total = m.index(datum) - spec.r;
    if inter[0] + proj[1] != total || inter[1] + proj[0] != total {
        return Err(Error::Invariant(format!(
            "index profile {inter:?}/{proj:?} does not add up to [M : A] - r = {total}"
        )));
    }
    let rho = proj[0] - inter[0];
    if rho != proj[1] - inter[1] || rho < 0 || rho > spec.r {
        return Err(Error::Invariant(format!("rho = {rho} outside [0, {}]", spec.r)));
    }
    Ok(IndexProfile { inter, proj, rho })
}

/// Points grouped by `rho`.
pub fn stratify(
    datum: &SpectralDatum,
    spec: &PartitionSpec,
    pts: &[LatticePoint],
) -> Result<BTreeMap<i64, Vec<LatticePoint>>> {
    let rhos: Vec<i64> = pts
        .par_iter()
        .map(|m| index_profile(datum, spec, m).map(|p| p.rho))
        .collect::<Result<_>>()?;
    let mut out: BTreeMap<i64, Vec<LatticePoint>> = BTreeMap::new();
    for (m, rho) in pts.iter().zip(rhos) {
        out.entry(rho).or_default().push(m.clone());
    }
    Ok(out)
}

/// `ind'_a(Frob M) = -r - ind''_a(M)` for `M` of index zero.
pub fn check_frobenius_exchange(
    datum: &SpectralDatum,
    form: &HermitianForm,
    spec: &PartitionSpec,
    m: &LatticePoint,
) -> Result<()> {
    let pm = index_profile(datum, spec, m)?;
    let pf = index_profile(datum, spec, &form.frobenius(datum, m)?)?;
    for a in 0..2 {
        if pf.inter[a] != -spec.r - pm.proj[a] {
            return Err(Error::Invariant(format!(
                "block {a}: ind'(Frob M) = {} but -r - ind''(M) = {}",
                pf.inter[a],
                -spec.r - pm.proj[a]
            )));
        }
    }
    Ok(())
}

/// `sum_rho (-1)^{r-rho} |fixed points in stratum rho|`, and the per-stratum
/// `(rho, points, fixed)` counts.
pub fn signed_strata_sum(
    datum: &SpectralDatum,
    spec: &PartitionSpec,
    classified: &[Classified],
) -> Result<(i64, Vec<StratumCount>)> {
    let pts: Vec<LatticePoint> = classified.iter().map(|c| c.point.clone()).collect();
    let strata = stratify(datum, spec, &pts)?;
    let fixed: BTreeSet<&LatticePoint> = classified.iter().filter(|c| c.lambda.is_some()).map(|c| &c.point).collect();
    let mut sum = 0i64;
    let mut counts = Vec::new();
    for (rho, ms) in &strata {
        let nf = ms.iter().filter(|m| fixed.contains(m)).count() as i64;
        let sign = if (spec.r - rho) % 2 == 0 { 1 } else { -1 };
        sum += sign * nf;
        counts.push(StratumCount { rho: *rho, points: ms.len(), fixed: nf });
    }
    Ok((sum, counts))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StratumCount {
    pub rho: i64,
    pub points: usize,
    pub fixed: i64,
}

fn element_of(p: &SeriesPolynomial, datum: &SpectralDatum) -> Result<Element> {
    let f = datum.field();
    datum
        .branches()
        .iter()
        .map(|b| {
            let v = p.eval_on_branch(b.gamma(), b.n() as i64, f)?;
            Ok(v.terms().collect())
        })
        .collect()
}

/// Quotient `S / T` of subspaces `T ⊂ S` with a fixed basis.
struct Quotient {
    small: Rref,
    basis: Rref,
}

impl Quotient {
    fn new(big: &Rref, small: Rref, f: &Field) -> Self {
        let basis = Rref::from_rows(big.ncols(), big.rows().iter().map(|r| small.reduce(r, f)), f);
        Quotient { small, basis }
    }

    fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn coords(&self, v: &[Fe], f: &Field) -> Vec<Fe> {
        let r = self.small.reduce(v, f);
        self.basis.pivots().iter().map(|&p| r[p]).collect()
    }

    fn matrix(&self, g: &Element, w: &Window, f: &Field) -> Vec<Vec<Fe>> {
        self.basis.rows().iter().map(|b| self.coords(&w.mul(b, g, f), f)).collect()
    }
}

/// Dimension of `Hom_{O_F[T]}(M_2, E_1 / M_1)` with `T` acting through
/// `gamma` on each side, for `M_1` a lattice of the first block datum and
/// `M_2` one of the second.
pub fn fiber_dimension(spec: &PartitionSpec, m1: &LatticePoint, m2: &LatticePoint) -> Result<usize> {
    let s = spec.r.max(1);
    let a = hom_dimension(spec, m1, m2, s)?;
    let b = hom_dimension(spec, m1, m2, s + 1)?;
    if a != b {
        return Err(Error::Stabilization(format!("Hom dimension {a} at depth {s}, {b} at depth {}", s + 1)));
    }
    Ok(a)
}

/// The same count with `M_2` truncated modulo `pi^s M_2`.
pub fn hom_dimension(spec: &PartitionSpec, m1: &LatticePoint, m2: &LatticePoint, s: i64) -> Result<usize> {
    let (d1, d2) = (&spec.sub[0], &spec.sub[1]);
    let f = d1.field();
    // g = P_2(gamma_1) kills the target
    let mut p2 = SeriesPolynomial::one();
    for j in 0..d2.len() {
        p2 = p2.mul(d2.minimal_polynomial(j), f)?;
    }
    let g = element_of(&p2, d1)?;
    let c1 = d1.conductor_exponents();
    let nu1 = m1.nu();
    let shift: Vec<i64> = g.iter().map(|gi| gi.first().map_or(0, |t| t.0)).collect();
    for (i, &bi) in spec.blocks[0].iter().enumerate() {
        let expect: i64 = spec.cross[i].iter().sum();
        if shift[i] != expect {
            return Err(Error::Invariant(format!("v(P_2(gamma_{bi})) = {} but sum r = {expect}", shift[i])));
        }
    }
    let wq = Window::new(
        (0..d1.len()).map(|i| nu1[i] - shift[i]).collect(),
        (0..d1.len()).map(|i| nu1[i] + c1[i]).collect(),
    );
    let m1w = m1.to_window(d1, &wq)?;
    // preimage of M_1 under g
    let images: Vec<Vec<Fe>> = (0..wq.dim()).map(|col| m1w.reduce(&wq.mul(&crate::linalg::unit(wq.dim(), col), &g, f), f)).collect();
    let rows: Vec<Vec<Fe>> = (0..wq.dim()).map(|r| images.iter().map(|img| img[r]).collect()).collect();
    let pre = Rref::from_rows(wq.dim(), kernel(&rows, wq.dim(), f), f);
    let q = Quotient::new(&pre, m1w, f);
    if q.dim() as i64 != spec.r {
        return Err(Error::Invariant(format!("P_2(gamma_1)^-1 M_1 / M_1 has dimension {}, expected r = {}", q.dim(), spec.r)));
    }
    let c2 = d2.conductor_exponents();
    let nu2 = m2.nu();
    let ns2 = d2.ns();
    let w2 = Window::new(nu2.to_vec(), (0..d2.len()).map(|i| nu2[i] + c2[i] + s * ns2[i]).collect());
    let src = Quotient::new(&m2.to_window(d2, &w2)?, m2.pi_pow(d2, s).to_window(d2, &w2)?, f);
    let (ms, mq) = (src.dim(), q.dim());
    let ops = [(src.matrix(&d2.pi(), &w2, f), q.matrix(&d1.pi(), &wq, f)), (src.matrix(&d2.gamma(), &w2, f), q.matrix(&d1.gamma(), &wq, f))];
    // unknown X[a][j] at a * mq + j; X(op_2 b_a) = op_1 X(b_a)
    let mut eqs: Vec<Vec<Fe>> = Vec::new();
    for (c, d) in &ops {
        for a in 0..ms {
            for j in 0..mq {
                let mut eq = vec![Fe::ZERO; ms * mq];
                for b in 0..ms {
                    eq[b * mq + j] = f.add(eq[b * mq + j], c[a][b]);
                }
                for i in 0..mq {
                    eq[a * mq + i] = f.sub(eq[a * mq + i], d[i][j]);
                }
                eqs.push(eq);
            }
        }
    }
    Ok(ms * mq - rank(&eqs, ms * mq, f))
}

/// `t_j^r M` for the first branch `j` of the second block: the map used to
/// identify `Z^0` with `Z^{-r}` there.
pub fn shift_to_minus_r(spec: &PartitionSpec, m: &LatticePoint) -> LatticePoint {
    let mut s = vec![0; spec.sub[1].len()];
    s[0] = spec.r;
    m.shift(&s)
}

/// Points of `X^0_{I_1}` and `X^{-r}_{I_2}`: canonical representatives and
/// their translates by zero-sum vectors with entries in `[-spread, spread]`.
pub fn candidate_pairs(spec: &PartitionSpec, spread: i64, budget: u64) -> Result<Vec<(LatticePoint, LatticePoint)>> {
    let side = |alpha: usize| -> Result<Vec<LatticePoint>> {
        let d = &spec.sub[alpha];
        let base = points(d, 0, Route::Conductor, 0, budget)?.points;
        let base: Vec<LatticePoint> =
            if alpha == 1 { base.iter().map(|m| shift_to_minus_r(spec, m)).collect() } else { base };
        let mut out = BTreeSet::new();
        for l in zero_sum_vectors(d.len(), spread) {
            for m in &base {
                out.insert(m.shift(&l));
            }
        }
        Ok(out.into_iter().collect())
    };
    let (a, b) = (side(0)?, side(1)?);
    Ok(a.iter().flat_map(|x| b.iter().map(move |y| (x.clone(), y.clone()))).collect())
}

fn zero_sum_vectors(k: usize, spread: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|v| (-spread..=spread).map(move |x| {
                let mut w = v.clone();
                w.push(x);
                w
            }))
            .collect();
    }
    out.retain(|v| v.iter().sum::<i64>() == 0);
    out
}

/// Up to `count` distinct pairs drawn from [`candidate_pairs`] with a seeded generator.
pub fn sample_pairs(
    spec: &PartitionSpec,
    count: usize,
    seed: u64,
    budget: u64,
) -> Result<Vec<(LatticePoint, LatticePoint)>> {
    let mut all = candidate_pairs(spec, 2, budget)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    all.shuffle(&mut rng);
    all.truncate(count);
    Ok(all)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FiberCheck {
    pub pairs: usize,
    pub distinct_pairs: usize,
    pub dimensions: Vec<usize>,
    pub all_equal_r: bool,
}

pub fn check_fiber_rank(spec: &PartitionSpec, count: usize, seed: u64, budget: u64) -> Result<FiberCheck> {
    let pairs = sample_pairs(spec, count, seed, budget)?;
    let dims: Vec<usize> = pairs
        .par_iter()
        .map(|(a, b)| fiber_dimension(spec, a, b))
        .collect::<Result<_>>()?;
    let distinct: BTreeSet<_> = pairs.iter().collect();
    Ok(FiberCheck {
        pairs: pairs.len(),
        distinct_pairs: distinct.len(),
        all_equal_r: dims.iter().all(|&d| d as i64 == spec.r),
        dimensions: dims,
    })
}

/// Both sides of `O^kappa = q^r SO_1 SO_2` and the strata cross-check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FlVerdict {
    pub first: Vec<usize>,
    pub second: Vec<usize>,
    pub r: i64,
    pub q: u32,
    pub points: usize,
    pub classes: Vec<ClassCount>,
    pub o_kappa: i64,
    pub so: i64,
    pub so_first: i64,
    pub so_second: i64,
    pub rhs: i64,
    pub holds: bool,
    pub strata: Vec<StratumCount>,
    pub signed_strata_sum: i64,
    pub strata_agree: bool,
    /// Branch of the second block whose uniformizer identifies `Z^0` with `Z^{-r}`.
    pub shift_branch: usize,
    pub depth: Option<i64>,
    pub stabilization: Vec<Stabilization>,
}

#[derive(Clone, Debug)]
pub struct FlOptions {
    pub route: Route,
    pub budget: u64,
    pub section: Option<Section>,
}

/// Count everything on the full datum and on fresh block data and compare.
pub fn verify_fundamental_lemma(datum: &SpectralDatum, spec: &PartitionSpec, opts: &FlOptions) -> Result<FlVerdict> {
    let form = HermitianForm::new(datum)?;
    let section = opts.section.clone().unwrap_or_else(|| Section::standard(datum.len()));
    let set = points(datum, 0, opts.route, 0, opts.budget)?;
    let classified = classify(datum, &form, &section, &set.points)?;
    let counts = orbital_counts(datum, &form, &section, &set.points)?;
    for m in &set.points {
        check_frobenius_exchange(datum, &form, spec, m)?;
    }
    let mut so_blocks = [0i64; 2];
    for (alpha, so) in so_blocks.iter_mut().enumerate() {
        let sd = &spec.sub[alpha];
        let form_a = HermitianForm::new(sd)?;
        let pts = points(sd, 0, opts.route, 0, opts.budget)?.points;
        *so = orbital_counts(sd, &form_a, &Section::standard(sd.len()), &pts)?.stable();
    }
    let q = form.q();
    let o_kappa = counts.kappa(spec.first());
    let rhs = (q as i64).pow(spec.r as u32) * so_blocks[0] * so_blocks[1];
    let (signed, strata) = signed_strata_sum(datum, spec, &classified)?;
    Ok(FlVerdict {
        first: spec.blocks[0].clone(),
        second: spec.blocks[1].clone(),
        r: spec.r,
        q,
        points: set.points.len(),
        classes: counts.classes.clone(),
        o_kappa,
        so: counts.stable(),
        so_first: so_blocks[0],
        so_second: so_blocks[1],
        rhs,
        holds: o_kappa == rhs,
        strata,
        signed_strata_sum: signed,
        strata_agree: signed == o_kappa,
        shift_branch: spec.blocks[1][0],
        depth: set.depth,
        stabilization: set.stabilization,
    })
}
