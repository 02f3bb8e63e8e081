//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{all_subspaces, corpus, is_stable, load, naive_rank, shift_op};
use springer_lab::cli::run_corpus;
use springer_lab::cli::Overrides;
use springer_lab::config::ExperimentConfig;
use springer_lab::lattice::LatticePoint;
use springer_lab::springer::{points, Route};
use springer_lab::strata::{check_fiber_rank, index_profile, verify_fundamental_lemma, FlOptions, PartitionSpec};
use springer_lab::unitary::HermitianForm;
use springer_lab::Field;

const MONOMIAL_LIMIT: Duration = Duration::from_secs(1);
const DELTA_LIMIT: Duration = Duration::from_secs(10);
const CUSP_LIMIT: Duration = Duration::from_secs(60);
const FL_LIMIT: Duration = Duration::from_secs(300);
const FIBER_SAMPLES: usize = 20;
const SEED: u64 = 0;
const WINDOW: Route = Route::Window { depth: None, max_depth: 16 };

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c1_monomial() -> Check {
    let mut seen = Vec::new();
    for (name, n, m) in [("cusp23_q3", 2i64, 3i64), ("cusp25_q3", 2, 5), ("cusp34_q5", 3, 4)] {
        let start = Instant::now();
        let d = load(name).datum().map_err(|e| e.to_string())?;
        let delta = d.delta_direct().map_err(|e| e.to_string())?;
        let cond = d.conductor_direct().map_err(|e| e.to_string())?;
        let t = start.elapsed();
        let mu = (m - 1) * (n - 1);
        ensure(delta == mu / 2 && d.delta() == mu / 2, || format!("({n},{m}): delta {delta}, expected {}", mu / 2))?;
        ensure(cond == vec![mu] && d.conductor_exponents() == [mu], || format!("({n},{m}): conductor {cond:?}, expected {mu}"))?;
        ensure(t < MONOMIAL_LIMIT, || format!("({n},{m}) took {t:?}"))?;
        seen.push(format!("({n},{m}) delta {delta} c {mu} in {:.0?}", t));
    }
    Ok(seen.join(", "))
}

fn c2_delta_two_ways() -> Check {
    let start = Instant::now();
    let cfgs = corpus();
    ensure(cfgs.len() >= 10, || format!("corpus has {} data", cfgs.len()))?;
    for need in ["cusp23_q3", "node_q3", "tacnode_q3", "cusp_line_q3", "star3_q5"] {
        ensure(cfgs.iter().any(|c| c.name == need), || format!("corpus lacks {need}"))?;
    }
    for c in &cfgs {
        let d = c.datum().map_err(|e| e.to_string())?;
        let direct = d.delta_direct().map_err(|e| e.to_string())?;
        ensure(direct == d.delta(), || format!("{}: direct {direct}, formula {}", c.name, d.delta()))?;
    }
    let t = start.elapsed();
    ensure(t < DELTA_LIMIT, || format!("took {t:?}"))?;
    Ok(format!("{} data agree in {:.0?}", cfgs.len(), t))
}

fn c3_rosenlicht() -> Check {
    let cfgs = corpus();
    for c in &cfgs {
        let d = c.datum().map_err(|e| e.to_string())?;
        let p = d.rosenlicht_pairing().map_err(|e| e.to_string())?;
        let delta = d.delta() as usize;
        ensure(p.matrix.len() == delta && p.matrix.iter().all(|r| r.len() == delta), || {
            format!("{}: pairing is {}x?, delta {delta}", c.name, p.matrix.len())
        })?;
        let rk = naive_rank(&p.matrix, d.field());
        ensure(rk == delta && p.perfect, || format!("{}: rank {rk} of {delta}", c.name))?;
    }
    Ok(format!("{} pairings nonsingular", cfgs.len()))
}

fn c4_self_dual() -> Check {
    let mut n = 0;
    for c in corpus().iter().filter(|c| c.hermitian) {
        let d = c.datum().map_err(|e| e.to_string())?;
        let h = HermitianForm::new(&d).map_err(|e| e.to_string())?;
        let a = LatticePoint::order(&d).map_err(|e| e.to_string())?;
        ensure(h.dual(&d, &a).map_err(|e| e.to_string())? == a, || format!("{}: dual of A differs from A", c.name))?;
        n += 1;
    }
    ensure(n > 0, || "no hermitian data".into())?;
    Ok(format!("A is self-dual on {n} hermitian data"))
}

/// Index-0 lattices of `k[[t^2, t^3]]` lie between `t^3 k[[t]]` and `k[[t]]`
/// with codimension 1 in the latter; count them directly.
fn cusp_oracle(f: &Field) -> usize {
    all_subspaces(3, 2, f)
        .iter()
        .filter(|rows| is_stable(rows, shift_op(springer_lab::Fe::ONE, 2, f), f))
        .count()
}

fn c5_cusp_counts() -> Check {
    let mut out = Vec::new();
    for (p, e, expect) in [(3u32, 1u32, 4usize), (3, 2, 10)] {
        let src = format!("[field]\np = {p}\ne = {e}\n\n[[branch]]\nn = 2\ngamma = [[3, 1, 0]]\n");
        let cfg = ExperimentConfig::parse(&src, "cusp").map_err(|e| e.to_string())?;
        let d = cfg.datum().map_err(|e| e.to_string())?;
        let oracle = cusp_oracle(d.field());
        let start = Instant::now();
        let set = points(&d, 0, WINDOW, 0, cfg.budget).map_err(|e| e.to_string())?;
        let t = start.elapsed();
        let sat = points(&d, 0, Route::Conductor, 0, cfg.budget).map_err(|e| e.to_string())?;
        let q = d.field().order();
        ensure(set.points.len() == expect && oracle == expect && sat.points.len() == expect, || {
            format!(
                "F_{q}: window {}, conductor route {}, oracle {oracle}, expected {expect}",
                set.points.len(),
                sat.points.len()
            )
        })?;
        ensure(t < CUSP_LIMIT, || format!("F_{q} took {t:?}"))?;
        out.push(format!("F_{q}: {} points in {:.0?}", set.points.len(), t));
    }
    Ok(out.join(", "))
}

fn c6_index_bounds() -> Check {
    let mut checked = 0usize;
    for c in corpus() {
        let d = c.datum().map_err(|e| e.to_string())?;
        let specs: Vec<PartitionSpec> =
            c.partitions.iter().map(|p| PartitionSpec::new(&d, p)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        if specs.is_empty() {
            continue;
        }
        let pts = points(&d, 0, c.route, 0, c.budget).map_err(|e| e.to_string())?.points;
        for spec in &specs {
            let r = spec.r();
            for m in &pts {
                let ip = index_profile(&d, spec, m).map_err(|e| e.to_string())?;
                let ok = (0..=r).contains(&ip.rho)
                    && ip.inter[0] + ip.proj[1] == -r
                    && ip.inter[1] + ip.proj[0] == -r;
                ensure(ok, || format!("{} {:?}: {ip:?} with r = {r}", c.name, spec.first()))?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} (point, partition) pairs, no violations"))
}

fn c7_fiber_rank() -> Check {
    let mut lines = Vec::new();
    let mut failed = Vec::new();
    for name in ["node_q3", "node_q5", "tacnode_q3", "tacnode_q5"] {
        let c = load(name);
        let d = c.datum().map_err(|e| e.to_string())?;
        for p in &c.partitions {
            let spec = PartitionSpec::new(&d, p).map_err(|e| e.to_string())?;
            let fc = check_fiber_rank(&spec, FIBER_SAMPLES, SEED, c.budget).map_err(|e| e.to_string())?;
            let line = format!("{name}: {} distinct pair(s), dims {:?}, r = {}", fc.distinct_pairs, fc.dimensions, spec.r());
            if fc.distinct_pairs < FIBER_SAMPLES || !fc.all_equal_r {
                failed.push(line.clone());
            }
            lines.push(line);
        }
    }
    // several-branch data with enough pairs, reported for context
    for name in ["cusp_line_q3", "star3_q5", "two_cusps_f5"] {
        let c = load(name);
        let d = c.datum().map_err(|e| e.to_string())?;
        for p in &c.partitions {
            let spec = PartitionSpec::new(&d, p).map_err(|e| e.to_string())?;
            let fc = check_fiber_rank(&spec, FIBER_SAMPLES, SEED, c.budget).map_err(|e| e.to_string())?;
            println!(
                "    context {name} {:?}: {} distinct pairs, all equal r = {}: {}",
                spec.first(),
                fc.distinct_pairs,
                spec.r(),
                fc.all_equal_r
            );
        }
    }
    if failed.is_empty() {
        Ok(lines.join("; "))
    } else {
        Err(format!(
            "X^0 x X^-r has a single point for two smooth branches, fewer than {FIBER_SAMPLES} pairs: {}",
            failed.join("; ")
        ))
    }
}

struct FlCase {
    name: &'static str,
    q: i64,
    r: i64,
}

const FL_CASES: [FlCase; 4] = [
    FlCase { name: "node_q3", q: 3, r: 1 },
    FlCase { name: "node_q5", q: 5, r: 1 },
    FlCase { name: "tacnode_q3", q: 3, r: 2 },
    FlCase { name: "tacnode_q5", q: 5, r: 2 },
];

fn fl_verdicts() -> Result<Vec<(&'static FlCase, springer_lab::strata::FlVerdict, Duration)>, String> {
    let mut out = Vec::new();
    for case in &FL_CASES {
        let c = load(case.name);
        let d = c.datum().map_err(|e| e.to_string())?;
        let spec = PartitionSpec::new(&d, &[0]).map_err(|e| e.to_string())?;
        let start = Instant::now();
        let opts = FlOptions { route: WINDOW, budget: c.budget, section: None };
        let v = verify_fundamental_lemma(&d, &spec, &opts).map_err(|e| e.to_string())?;
        out.push((case, v, start.elapsed()));
    }
    Ok(out)
}

fn c8_fundamental_lemma() -> Check {
    let mut out = Vec::new();
    for (case, v, t) in fl_verdicts()? {
        let expect = case.q.pow(case.r as u32);
        ensure(v.r == case.r && v.so_first == 1 && v.so_second == 1, || {
            format!("{}: r {}, SO_1 {}, SO_2 {}", case.name, v.r, v.so_first, v.so_second)
        })?;
        ensure(v.o_kappa == v.rhs && v.rhs == expect && v.holds, || {
            format!("{}: O^kappa {} vs q^r SO_1 SO_2 {} (q^r = {expect})", case.name, v.o_kappa, v.rhs)
        })?;
        ensure(t < FL_LIMIT, || format!("{} took {t:?}", case.name))?;
        out.push(format!("{} {} = {}", case.name, v.o_kappa, v.rhs));
    }
    Ok(out.join(", "))
}

fn c9_strata() -> Check {
    let mut out = Vec::new();
    for (case, v, _) in fl_verdicts()? {
        ensure(v.signed_strata_sum == v.o_kappa && v.strata_agree, || {
            format!("{}: signed strata sum {} vs O^kappa {}", case.name, v.signed_strata_sum, v.o_kappa)
        })?;
        out.push(format!("{} {}", case.name, v.signed_strata_sum));
    }
    Ok(out.join(", "))
}

fn c10_determinism() -> Check {
    let dir = common::corpus_dir();
    let run = |threads: usize| -> Result<Vec<String>, String> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| e.to_string())?;
        pool.install(|| run_corpus(&dir, &Overrides::default(), false))
            .map(|es| es.into_iter().map(|e| e.json).collect())
            .map_err(|e| e.to_string())
    };
    let (a, b) = (run(1)?, run(4)?);
    ensure(a.len() == b.len(), || "different report counts".into())?;
    for (i, (x, y)) in a.iter().zip(&b).enumerate() {
        ensure(x == y, || format!("report {i} differs between 1 and 4 threads"))?;
    }
    Ok(format!("{} reports identical with 1 and 4 threads", a.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("monomial curve invariants", c1_monomial),
        ("delta two ways", c2_delta_two_ways),
        ("residue pairing perfect", c3_rosenlicht),
        ("A self-dual", c4_self_dual),
        ("cusp point counts", c5_cusp_counts),
        ("index bounds", c6_index_bounds),
        ("fiber rank", c7_fiber_rank),
        ("fundamental lemma", c8_fundamental_lemma),
        ("strata cross-check", c9_strata),
        ("determinism", c10_determinism),
    ];
    let mut failures = 0;
    for (i, (title, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let t = start.elapsed();
        match res {
            Ok(detail) => println!("criterion {:>2} PASS {title} ({:.1?}): {detail}", i + 1, t),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} FAIL {title} ({:.1?}): {detail}", i + 1, t);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
