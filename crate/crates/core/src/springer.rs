//! Affine Springer fibers as finite sets of stable subspaces.
//!
//! Two independent realizations are provided. [`WindowModel`] is the finite
//! Grassmannian `pi^{-N} A / pi^K A`, `K = (n-1)N - d`, in which lattices of
//! index `d` are the stable planes of dimension `(n-1)(nN - d)`.
//! [`saturated_points`] works directly in the conductor window `Ã / t^c Ã`,
//! where every orbit of the zero-sum lattice action has exactly one
//! representative.

use std::collections::BTreeSet;

use log::{debug, info};
use serde::Serialize;

use crate::enumerate::{Search, Target};
use crate::error::{Error, Result};
use crate::field::Fe;
use crate::lattice::{offset_window, LatticePoint};
use crate::linalg::{combine, Rref};
use crate::spectral::SpectralDatum;
use crate::window::Window;

pub struct WindowModel<'a> {
    datum: &'a SpectralDatum,
    depth: i64,
    d: i64,
    k: i64,
    window: Window,
    lower: Rref,
    upper: Rref,
    /// Basis of `V`, rows of `upper` with pivots off `lower`, reduced.
    basis: Vec<Vec<Fe>>,
    pi_op: Vec<Vec<Fe>>,
    gamma_op: Vec<Vec<Fe>>,
}

impl<'a> WindowModel<'a> {
    pub fn new(datum: &'a SpectralDatum, depth: i64, d: i64) -> Result<Self> {
        let n = datum.n_total() as i64;
        if depth < 0 || d > n * depth {
            return Err(Error::WindowOverflow(format!("index {d} needs d <= n N = {}", n * depth)));
        }
        let f = datum.field();
        let k = (n - 1) * depth - d;
        let ns = datum.ns();
        let c = datum.conductor_exponents();
        let lo: Vec<i64> = ns.iter().map(|ni| -depth * ni).collect();
        // pi^K A ⊃ pi^K a = t^{Kn + c} Ã
        let hi: Vec<i64> = ns.iter().zip(c).map(|(ni, ci)| (k * ni + ci).max(-depth * ni)).collect();
        for (i, (l, h)) in lo.iter().zip(&hi).enumerate() {
            if h - l > 4 * datum.precision_ceiling() {
                return Err(Error::Precision(format!("branch {i}: window [{l}, {h}) exceeds the precision ceiling")));
            }
        }
        let window = Window::new(lo, hi);
        let lower = datum.order_image(&window, k)?;
        let upper = datum.order_image(&window, -depth)?;
        if !lower.is_subspace_of(&upper, f) {
            return Err(Error::Invariant("pi^K A is not inside pi^{-N} A".into()));
        }
        let basis: Vec<Vec<Fe>> = upper
            .pivots()
            .iter()
            .zip(upper.rows())
            .filter(|(p, _)| !lower.is_pivot(**p))
            .map(|(_, r)| lower.reduce(r, f))
            .collect();
        let mut model = WindowModel {
            datum,
            depth,
            d,
            k,
            window,
            lower,
            upper,
            basis,
            pi_op: Vec::new(),
            gamma_op: Vec::new(),
        };
        let pi = datum.pi();
        let gamma = datum.gamma();
        model.pi_op = model.basis.iter().map(|b| model.coords(&model.window.mul(b, &pi, f))).collect::<Result<_>>()?;
        model.gamma_op =
            model.basis.iter().map(|b| model.coords(&model.window.mul(b, &gamma, f))).collect::<Result<_>>()?;
        model.check()?;
        Ok(model)
    }

    fn check(&self) -> Result<()> {
        let n = self.datum.n_total() as i64;
        let expect = n * (n * self.depth - self.d);
        if self.dim() as i64 != expect {
            return Err(Error::Invariant(format!("dim V = {}, expected {expect}", self.dim())));
        }
        if !crate::enumerate::is_strictly_triangular(&[self.pi_op.clone(), self.gamma_op.clone()]) {
            return Err(Error::Invariant("operators on V are not nilpotent in flag form".into()));
        }
        let f = self.datum.field();
        let apply = crate::window::apply;
        for j in 0..self.dim() {
            let e = crate::linalg::unit(self.dim(), j);
            let a = apply(&self.pi_op, &apply(&self.gamma_op, &e, f), f);
            let b = apply(&self.gamma_op, &apply(&self.pi_op, &e, f), f);
            if a != b {
                return Err(Error::Invariant("pi and gamma do not commute on V".into()));
            }
        }
        Ok(())
    }

    /// Coordinates in the `V` basis of a vector of `upper`.
    fn coords(&self, v: &[Fe]) -> Result<Vec<Fe>> {
        let f = self.datum.field();
        let mut v = self.lower.reduce(v, f);
        let mut out = vec![Fe::ZERO; self.basis.len()];
        for (j, b) in self.basis.iter().enumerate() {
            let p = b.iter().position(|x| !x.is_zero()).unwrap();
            let c = v[p];
            if !c.is_zero() {
                out[j] = c;
                crate::linalg::axpy(&mut v, f.neg(c), b, p, f);
            }
        }
        if v.iter().any(|x| !x.is_zero()) {
            return Err(Error::WindowOverflow("vector is not in pi^{-N} A".into()));
        }
        Ok(out)
    }

    pub fn datum(&self) -> &SpectralDatum {
        self.datum
    }

    pub fn depth(&self) -> i64 {
        self.depth
    }

    pub fn index(&self) -> i64 {
        self.d
    }

    /// `K = (n_I - 1) N - d`
    pub fn lower_exponent(&self) -> i64 {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Dimension of the stable planes: `(n_I - 1)(n_I N - d)`.
    pub fn plane_dim(&self) -> usize {
        let n = self.datum.n_total() as i64;
        ((n - 1) * (n * self.depth - self.d)) as usize
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn lower(&self) -> &Rref {
        &self.lower
    }

    pub fn upper(&self) -> &Rref {
        &self.upper
    }

    pub fn pi_op(&self) -> &[Vec<Fe>] {
        &self.pi_op
    }

    pub fn gamma_op(&self) -> &[Vec<Fe>] {
        &self.gamma_op
    }

    /// Lift a subspace of `V` to the lattice it defines.
    pub fn lattice(&self, s: &Rref) -> Result<LatticePoint> {
        let f = self.datum.field();
        let mut m = self.lower.clone();
        for r in s.rows() {
            m.insert(combine(r, &self.basis, self.window.dim(), f), f);
        }
        LatticePoint::from_window(self.datum, &self.window, &m)
    }

    /// The subspace of `V` of a lattice, if it lies in the window.
    pub fn subspace(&self, m: &LatticePoint) -> Result<Rref> {
        let f = self.datum.field();
        let img = m.to_window(self.datum, &self.window)?;
        if !self.lower.is_subspace_of(&img, f) {
            return Err(Error::WindowOverflow("lattice does not contain pi^K A".into()));
        }
        let rows: Vec<Vec<Fe>> = img.rows().iter().map(|r| self.coords(r)).collect::<Result<_>>()?;
        Ok(Rref::from_rows(self.dim(), rows, f))
    }

    pub fn contains_lattice(&self, m: &LatticePoint) -> bool {
        self.subspace(m).is_ok()
    }

    /// `lambda_act` followed by a window membership check.
    pub fn lambda_act(&self, m: &LatticePoint, lambda: &[i64]) -> Result<LatticePoint> {
        let out = m.lambda_act(lambda)?;
        self.subspace(&out)?;
        Ok(out)
    }
}

/// Every stable plane of the window model, as lattices, in the order of
/// their subspaces of `V` (pivots, then entries).
pub fn enumerate_fiber(model: &WindowModel, budget: u64) -> Result<Vec<LatticePoint>> {
    let f = model.datum.field();
    let ops = [model.pi_op.clone(), model.gamma_op.clone()];
    let search = Search::new(f, model.dim(), &ops, Target::Dim(model.plane_dim()), budget);
    let subs = search.run()?;
    debug!(
        "window N={} d={}: {} stable planes, {} candidates",
        model.depth,
        model.d,
        subs.len(),
        search.visited()
    );
    subs.iter().map(|s| model.lattice(s)).collect()
}

/// Depth sufficient for every orbit of index `d` to meet the window.
///
/// An orbit representative with `nu` satisfies `t^nu Ã ⊂ pi^{-N} A` once
/// `nu_i >= c_i - N n_i` and `pi^K A ⊂ t^{nu+c} Ã` once `nu_i + c_i <= K n_i`;
/// the total `sum nu` ranges over `[-delta - d, delta - d]`.
pub fn rigorous_depth(datum: &SpectralDatum, d: i64) -> i64 {
    let n = datum.n_total() as i64;
    let ns = datum.ns();
    let c = datum.conductor_exponents();
    let delta = datum.delta();
    let (smin, smax) = (-delta - d, delta - d);
    let mut depth = 0i64;
    loop {
        let k = (n - 1) * depth - d;
        let bounds: Vec<(i64, i64)> = ns.iter().zip(c).map(|(ni, ci)| (ci - depth * ni, k * ni - ci)).collect();
        let ok = d <= n * depth
            && bounds.iter().all(|(l, h)| l <= h)
            && bounds.iter().map(|b| b.0).sum::<i64>() <= smin
            && bounds.iter().map(|b| b.1).sum::<i64>() >= smax;
        if ok {
            return depth;
        }
        depth += 1;
    }
}

/// `ceil((|d| + delta + max c) / n) + 1`
pub fn heuristic_depth(datum: &SpectralDatum, d: i64) -> i64 {
    let n = datum.n_total() as i64;
    let maxc = datum.conductor_exponents().iter().copied().max().unwrap_or(0);
    let num = d.abs() + datum.delta() + maxc;
    (num + n - 1) / n + 1
}

pub fn default_depth(datum: &SpectralDatum, d: i64) -> i64 {
    rigorous_depth(datum, d).max(heuristic_depth(datum, d))
}

/// Canonical orbit representatives of index `d` and how they were found.
#[derive(Clone, Debug)]
pub struct ZPoints {
    pub d: i64,
    pub absorb: usize,
    pub depth: i64,
    pub points: Vec<LatticePoint>,
    /// `(N, number of canonical points, number of window planes)` per depth tried.
    pub history: Vec<(i64, usize, usize)>,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct Stabilization {
    pub depth: i64,
    pub points: usize,
    pub planes: usize,
}

impl ZPoints {
    pub fn stabilization(&self) -> Vec<Stabilization> {
        self.history
            .iter()
            .map(|&(depth, points, planes)| Stabilization { depth, points, planes })
            .collect()
    }
}

fn canonical_set(model: &WindowModel, absorb: usize, budget: u64) -> Result<(BTreeSet<LatticePoint>, usize)> {
    let planes = enumerate_fiber(model, budget)?;
    let n = planes.len();
    Ok((planes.into_iter().map(|m| m.canonicalize(absorb).0).collect(), n))
}

/// Points of `Z^d` through the window model, deepening until the canonical
/// set is the same at two consecutive depths.
pub fn z_points(
    datum: &SpectralDatum,
    d: i64,
    depth: Option<i64>,
    absorb: usize,
    budget: u64,
    max_depth: i64,
) -> Result<ZPoints> {
    let mut n = depth.unwrap_or_else(|| default_depth(datum, d));
    let mut history = Vec::new();
    let mut prev = canonical_set(&WindowModel::new(datum, n, d)?, absorb, budget)?;
    history.push((n, prev.0.len(), prev.1));
    loop {
        if n + 1 > max_depth {
            return Err(Error::Stabilization(format!("point count still changing at depth {n}")));
        }
        let next = canonical_set(&WindowModel::new(datum, n + 1, d)?, absorb, budget)?;
        history.push((n + 1, next.0.len(), next.1));
        if next.0 == prev.0 {
            info!("Z^{d}: {} points, stable at N = {n}", next.0.len());
            return Ok(ZPoints { d, absorb, depth: n, points: next.0.into_iter().collect(), history });
        }
        prev = next;
        n += 1;
    }
}

/// Points of `Z^d` read directly from the conductor window: stable
/// subspaces of `Ã / t^c Ã` whose projection to each branch reaches the
/// constant term, with `nu` placed on the absorbing branch.
pub fn saturated_points(datum: &SpectralDatum, d: i64, absorb: usize, budget: u64) -> Result<Vec<LatticePoint>> {
    let f = datum.field();
    let w = offset_window(datum);
    let ops = [w.op_images(&datum.pi(), f), w.op_images(&datum.gamma(), f)];
    let subs = Search::new(f, w.dim(), &ops, Target::Any, budget).run()?;
    let mut out = Vec::new();
    for s in subs {
        let s_total = s.dim() as i64 - datum.delta() - d;
        let nu: Vec<i64> = (0..datum.len()).map(|i| if i == absorb { s_total } else { 0 }).collect();
        let m = LatticePoint::from_parts(datum, nu, s)?;
        if m.has_exact_valuations(datum) {
            out.push(m);
        }
    }
    out.sort();
    Ok(out)
}

/// How the points of `Z^d` are produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Route {
    /// [`saturated_points`]
    Conductor,
    /// [`z_points`], starting at `depth` or the default depth.
    Window { depth: Option<i64>, max_depth: i64 },
}

#[derive(Clone, Debug)]
pub struct PointSet {
    pub route: Route,
    pub points: Vec<LatticePoint>,
    /// Depth at which the window route stabilized.
    pub depth: Option<i64>,
    pub stabilization: Vec<Stabilization>,
}

pub fn points(datum: &SpectralDatum, d: i64, route: Route, absorb: usize, budget: u64) -> Result<PointSet> {
    match route {
        Route::Conductor => Ok(PointSet {
            route,
            points: saturated_points(datum, d, absorb, budget)?,
            depth: None,
            stabilization: Vec::new(),
        }),
        Route::Window { depth, max_depth } => {
            let z = z_points(datum, d, depth, absorb, budget, max_depth)?;
            Ok(PointSet { route, depth: Some(z.depth), stabilization: z.stabilization(), points: z.points })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::enumerate::DEFAULT_BUDGET;
    use crate::field::Field;
    use crate::spectral::Branch;

    fn eps_datum(p: u32, e: u32, spec: &[(usize, &[(i64, i64)])]) -> SpectralDatum {
        let f = Arc::new(Field::new(p, e).unwrap());
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

    #[test]
    fn window_dimensions() {
        let smooth = eps_datum(3, 2, &[(1, &[(1, 1)])]);
        let m = WindowModel::new(&smooth, 1, 0).unwrap();
        assert_eq!((m.dim(), m.plane_dim()), (1, 0));
        let cusp = eps_datum(3, 2, &[(2, &[(3, 1)])]);
        let m = WindowModel::new(&cusp, 1, 0).unwrap();
        assert_eq!((m.dim(), m.plane_dim()), (4, 2));
        let node = eps_datum(3, 2, &[(1, &[(1, 1)]), (1, &[(1, -1)])]);
        let m = WindowModel::new(&node, 1, 0).unwrap();
        assert_eq!((m.dim(), m.plane_dim()), (4, 2));
    }

    #[test]
    fn smooth_fiber_is_a_point() {
        let smooth = eps_datum(3, 2, &[(1, &[(1, 1)])]);
        for n in 1..4 {
            let m = WindowModel::new(&smooth, n, 0).unwrap();
            let pts = enumerate_fiber(&m, DEFAULT_BUDGET).unwrap();
            assert_eq!(pts, vec![LatticePoint::order(&smooth).unwrap()]);
        }
    }

    #[test]
    fn cusp_has_q_plus_one_points() {
        let cusp = eps_datum(3, 2, &[(2, &[(3, 1)])]);
        let z = z_points(&cusp, 0, None, 0, DEFAULT_BUDGET, 12).unwrap();
        assert_eq!(z.points.len(), 10);
        assert_eq!(z.points, saturated_points(&cusp, 0, 0, DEFAULT_BUDGET).unwrap());
    }

    #[test]
    fn node_points_and_window_closure() {
        let node = eps_datum(3, 2, &[(1, &[(1, 1)]), (1, &[(1, -1)])]);
        let z = z_points(&node, 0, None, 0, DEFAULT_BUDGET, 12).unwrap();
        // q'-1 lines with both coordinates nonzero, plus (t, 1) Ã
        assert_eq!(z.points.len(), 9);
        assert_eq!(z.points, saturated_points(&node, 0, 0, DEFAULT_BUDGET).unwrap());
        let model = WindowModel::new(&node, 3, 0).unwrap();
        let planes = enumerate_fiber(&model, DEFAULT_BUDGET).unwrap();
        let set: BTreeSet<_> = planes.iter().cloned().collect();
        for m in &planes {
            assert_eq!(m.index(&node), 0);
            assert!(m.is_stable(&node));
            for lam in [[1, -1], [-1, 1]] {
                if let Ok(x) = model.lambda_act(m, &lam) {
                    assert!(set.contains(&x));
                }
            }
        }
    }

    #[test]
    fn depth_bounds() {
        let node = eps_datum(3, 2, &[(1, &[(1, 1)]), (1, &[(1, -1)])]);
        assert_eq!(rigorous_depth(&node, 0), 2);
        assert_eq!(heuristic_depth(&node, 0), 2);
    }
}
