//! Machine-readable run reports and their plain-text summaries.
//!
//! Everything in a report is an integer or a field element written as its
//! table index, and every list has a fixed order, so a report depends only
//! on the configuration and the command.

use std::fmt::Write as _;

use log::info;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::field::Fe;
use crate::lattice::{LatticePoint, LatticeSummary};
use crate::spectral::SpectralDatum;
use crate::springer::{points, Route, Stabilization};
use crate::strata::{
    check_fiber_rank, check_frobenius_exchange, stratify, verify_fundamental_lemma, FiberCheck, FlOptions, FlVerdict,
    PartitionSpec,
};
use crate::unitary::{orbital_counts, ClassCount, HermitianForm};

pub const SCHEMA_VERSION: u32 = 1;

/// Point lists longer than this are summarized by their count only.
pub const MAX_LISTED_POINTS: usize = 64;

/// Pairs sampled per partition for the fiber rank check.
pub const FIBER_SAMPLES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Command {
    Invariants,
    Enumerate,
    Orbital,
    Strata,
    VerifyFl,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Invariants => "invariants",
            Command::Enumerate => "enumerate",
            Command::Orbital => "orbital",
            Command::Strata => "strata",
            Command::VerifyFl => "verify-fl",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub name: String,
    pub command: &'static str,
    pub field: FieldInfo,
    pub branches: Vec<BranchInfo>,
    pub invariants: Invariants,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub enumeration: Option<Enumeration>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orbital: Option<Orbital>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strata: Option<Vec<StrataReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fundamental_lemma: Option<Vec<FlVerdict>>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct FieldInfo {
    pub p: u32,
    pub order: u32,
    pub hermitian: bool,
    /// `q` with `k = F_(q^2)` in hermitian mode.
    pub q: Option<u32>,
    pub epsilon: Option<Fe>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BranchInfo {
    pub n: usize,
    pub gamma: Vec<(i64, Fe)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Invariants {
    pub n_total: usize,
    pub delta: i64,
    pub delta_direct: i64,
    pub delta_branches: Vec<i64>,
    pub r: Vec<Vec<i64>>,
    pub r_sylvester: Vec<Vec<i64>>,
    pub conductor: Vec<i64>,
    pub conductor_direct: Vec<i64>,
    pub pairing_dim: usize,
    pub pairing_perfect: bool,
    pub pairing_complement: Vec<(usize, i64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hermitian: Option<HermitianInfo>,
}

#[derive(Clone, Debug, Serialize)]
pub struct HermitianInfo {
    pub alpha_valuations: Vec<i64>,
    pub order_self_dual: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Enumeration {
    pub route: Route,
    pub depth: Option<i64>,
    pub stabilization: Vec<Stabilization>,
    pub points: usize,
    pub free_points: usize,
    /// Every canonical point when there are at most [`MAX_LISTED_POINTS`].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub listed: Option<Vec<LatticeSummary>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Orbital {
    pub q: u32,
    pub units: Vec<Fe>,
    pub fixed: u64,
    pub not_fixed: u64,
    pub classes: Vec<ClassCount>,
    pub so: i64,
    pub kappa: Vec<KappaValue>,
}

#[derive(Clone, Debug, Serialize)]
pub struct KappaValue {
    pub first: Vec<usize>,
    pub o_kappa: i64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StrataReport {
    pub first: Vec<usize>,
    pub second: Vec<usize>,
    pub r: i64,
    /// Points whose index profile was checked.
    pub checked: usize,
    pub strata: Vec<(i64, usize)>,
    pub frobenius_exchange_checked: bool,
    pub fiber: FiberCheck,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Verdict {
    pub ok: bool,
    pub failures: Vec<String>,
}

impl Report {
    /// Exit status for the CLI: 0, or 4 when a checked identity failed.
    pub fn exit_code(&self) -> i32 {
        if self.verdict.ok {
            0
        } else {
            Error::Identity(String::new()).exit_code()
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Run `command` on a configuration.
pub fn build(cfg: &ExperimentConfig, command: Command) -> Result<Report> {
    let datum = cfg.datum()?;
    let f = datum.field();
    let mut failures = Vec::new();
    info!("{}: {} on {} branches over F_{}", cfg.name, command.name(), datum.len(), f.order());

    let form = if cfg.hermitian { Some(HermitianForm::new(&datum)?) } else { None };
    let invariants = invariants(&datum, form.as_ref(), &mut failures)?;

    let needs_points = command >= Command::Enumerate;
    let set = if needs_points { Some(points(&datum, 0, cfg.route, 0, cfg.budget)?) } else { None };
    let enumeration = set.as_ref().map(|s| Enumeration {
        route: s.route,
        depth: s.depth,
        stabilization: s.stabilization.clone(),
        points: s.points.len(),
        free_points: s.points.iter().filter(|m| m.is_free(&datum)).count(),
        listed: (s.points.len() <= MAX_LISTED_POINTS)
            .then(|| s.points.iter().map(|m| LatticeSummary::of(m, &datum)).collect()),
    });

    let specs: Vec<PartitionSpec> = if command >= Command::Strata || (command == Command::Orbital && form.is_some()) {
        cfg.partitions.iter().map(|p| PartitionSpec::new(&datum, p)).collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let orbital = match (&form, &set) {
        (Some(h), Some(s)) if command >= Command::Orbital => {
            let section = cfg.section();
            let oc = orbital_counts(&datum, h, &section, &s.points)?;
            Some(Orbital {
                q: oc.q,
                units: section.units.clone(),
                fixed: oc.fixed,
                not_fixed: oc.not_fixed,
                so: oc.stable(),
                kappa: specs.iter().map(|sp| KappaValue { first: sp.first().to_vec(), o_kappa: oc.kappa(sp.first()) }).collect(),
                classes: oc.classes,
            })
        }
        (None, _) if command == Command::Orbital => {
            return Err(Error::Config("orbital counts need a hermitian configuration".into()));
        }
        _ => None,
    };

    let strata = match &set {
        Some(s) if command >= Command::Strata => {
            let mut out = Vec::new();
            for sp in &specs {
                out.push(strata_report(&datum, form.as_ref(), sp, &s.points, cfg)?);
            }
            Some(out)
        }
        _ => None,
    };
    if let Some(st) = &strata {
        for s in st {
            if !s.fiber.all_equal_r {
                failures.push(format!("fiber rank differs from r = {} for block {:?}", s.r, s.first));
            }
        }
    }

    let fundamental_lemma = if command == Command::VerifyFl {
        if form.is_none() {
            return Err(Error::Config("verify-fl needs a hermitian configuration".into()));
        }
        let opts = FlOptions { route: cfg.route, budget: cfg.budget, section: Some(cfg.section()) };
        let mut out = Vec::new();
        for sp in &specs {
            let v = verify_fundamental_lemma(&datum, sp, &opts)?;
            if !v.holds {
                failures.push(format!("O^kappa = {} but q^r SO_1 SO_2 = {} for block {:?}", v.o_kappa, v.rhs, v.first));
            }
            if !v.strata_agree {
                failures.push(format!(
                    "signed strata sum {} differs from O^kappa = {} for block {:?}",
                    v.signed_strata_sum, v.o_kappa, v.first
                ));
            }
            out.push(v);
        }
        Some(out)
    } else {
        None
    };

    Ok(Report {
        schema_version: SCHEMA_VERSION,
        name: cfg.name.clone(),
        command: command.name(),
        field: FieldInfo {
            p: cfg.p,
            order: f.order(),
            hermitian: cfg.hermitian,
            q: form.as_ref().map(|h| h.q()),
            epsilon: f.epsilon(),
        },
        branches: datum.branches().iter().map(|b| BranchInfo { n: b.n(), gamma: b.terms() }).collect(),
        invariants,
        enumeration,
        orbital,
        strata,
        fundamental_lemma,
        verdict: Verdict { ok: failures.is_empty(), failures },
    })
}

fn invariants(datum: &SpectralDatum, form: Option<&HermitianForm>, failures: &mut Vec<String>) -> Result<Invariants> {
    let k = datum.len();
    let delta_direct = datum.delta_direct()?;
    if delta_direct != datum.delta() {
        failures.push(format!("delta from the order {delta_direct} differs from the formula {}", datum.delta()));
    }
    let mut r_syl = vec![vec![0i64; k]; k];
    for (i, row) in r_syl.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            if i != j {
                *x = datum.r_sylvester(i, j)?;
            }
        }
    }
    if r_syl != datum.r() {
        failures.push("resultant valuations differ from r_ij".into());
    }
    let conductor_direct = datum.conductor_direct()?;
    if conductor_direct != datum.conductor_exponents() {
        failures.push("conductor read from the order differs from 2 delta_i + sum r_ij".into());
    }
    let pairing = datum.rosenlicht_pairing()?;
    if !pairing.perfect {
        failures.push("residue pairing is degenerate".into());
    }
    let hermitian = match form {
        Some(h) => {
            let a = LatticePoint::order(datum)?;
            let self_dual = h.dual(datum, &a)? == a;
            if !self_dual {
                failures.push("A is not its own dual".into());
            }
            Some(HermitianInfo { alpha_valuations: h.alpha_valuations().to_vec(), order_self_dual: self_dual })
        }
        None => None,
    };
    Ok(Invariants {
        n_total: datum.n_total(),
        delta: datum.delta(),
        delta_direct,
        delta_branches: datum.delta_branches().to_vec(),
        r: datum.r().to_vec(),
        r_sylvester: r_syl,
        conductor: datum.conductor_exponents().to_vec(),
        conductor_direct,
        pairing_dim: pairing.matrix.len(),
        pairing_perfect: pairing.perfect,
        pairing_complement: pairing.complement,
        hermitian,
    })
}

fn strata_report(
    datum: &SpectralDatum,
    form: Option<&HermitianForm>,
    spec: &PartitionSpec,
    pts: &[LatticePoint],
    cfg: &ExperimentConfig,
) -> Result<StrataReport> {
    let st = stratify(datum, spec, pts)?;
    if let Some(h) = form {
        for m in pts {
            check_frobenius_exchange(datum, h, spec, m)?;
        }
    }
    Ok(StrataReport {
        first: spec.blocks()[0].clone(),
        second: spec.blocks()[1].clone(),
        r: spec.r(),
        checked: pts.len(),
        strata: st.iter().map(|(rho, v)| (*rho, v.len())).collect(),
        frobenius_exchange_checked: form.is_some(),
        fiber: check_fiber_rank(spec, FIBER_SAMPLES, cfg.seed, cfg.budget)?,
    })
}

/// Plain-text rendering of a report.
pub fn summary(r: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} ({}) over F_{}", r.name, r.command, r.field.order);
    let inv = &r.invariants;
    let _ = writeln!(s, "  branches: {}  n = {}", r.branches.len(), inv.n_total);
    let _ = writeln!(s, "  delta = {} (direct {})  delta_i = {:?}", inv.delta, inv.delta_direct, inv.delta_branches);
    let _ = writeln!(s, "  r = {:?}", inv.r);
    let _ = writeln!(s, "  conductor = {:?}", inv.conductor);
    let _ = writeln!(s, "  residue pairing {}x{} perfect: {}", inv.pairing_dim, inv.pairing_dim, inv.pairing_perfect);
    if let Some(h) = &inv.hermitian {
        let _ = writeln!(s, "  v(alpha) = {:?}  A self-dual: {}", h.alpha_valuations, h.order_self_dual);
    }
    if let Some(e) = &r.enumeration {
        let _ = writeln!(s, "  Z^0: {} points ({} free)", e.points, e.free_points);
        for st in &e.stabilization {
            let _ = writeln!(s, "    N = {:>2}: {} points from {} planes", st.depth, st.points, st.planes);
        }
    }
    if let Some(o) = &r.orbital {
        let _ = writeln!(s, "  fixed by Frobenius: {} of {} (q = {})", o.fixed, o.fixed + o.not_fixed, o.q);
        for c in &o.classes {
            let _ = writeln!(s, "    O{:?} = {}", c.class, c.count);
        }
        let _ = writeln!(s, "  SO = {}", o.so);
        for k in &o.kappa {
            let _ = writeln!(s, "  O^kappa{:?} = {}", k.first, k.o_kappa);
        }
    }
    for st in r.strata.iter().flatten() {
        let _ = writeln!(s, "  partition {:?} | {:?}: r = {}, strata {:?}", st.first, st.second, st.r, st.strata);
        let _ = writeln!(
            s,
            "    fiber rank over {} pairs ({} distinct): {:?}",
            st.fiber.pairs, st.fiber.distinct_pairs, st.fiber.dimensions
        );
    }
    for v in r.fundamental_lemma.iter().flatten() {
        let _ = writeln!(
            s,
            "  {:?} | {:?}: O^kappa = {}  q^r SO_1 SO_2 = {}^{} * {} * {} = {}  [{}]",
            v.first,
            v.second,
            v.o_kappa,
            v.q,
            v.r,
            v.so_first,
            v.so_second,
            v.rhs,
            if v.holds { "PASS" } else { "FAIL" }
        );
        let _ = writeln!(
            s,
            "    signed strata sum = {}  [{}]",
            v.signed_strata_sum,
            if v.strata_agree { "PASS" } else { "FAIL" }
        );
    }
    if r.verdict.ok {
        let _ = writeln!(s, "  verdict: ok");
    } else {
        for f in &r.verdict.failures {
            let _ = writeln!(s, "  FAILED: {f}");
        }
    }
    s
}
