//! Experiment configuration files.
//!
//! ```toml
//! name = "node"
//! partitions = [[0]]    # first blocks I_1; default: every block containing branch 0
//! units = [1, 1]        # u_i in the uniformizers u_i t_i of the section
//!
//! [field]
//! p = 3
//! e = 1            # q = p^e
//! hermitian = true # work over k = F_(q^2); otherwise k = F_q
//!
//! [[branch]]
//! n = 1
//! gamma = [[1, 0, 1]]   # [exponent, plain, eps]: (plain + eps * ε) t^exponent
//!
//! [[branch]]
//! n = 1
//! gamma = [[1, 0, -1]]
//!
//! [compute]
//! route = "conductor"   # or "window"
//! depth = 3             # starting N for the window route
//! max_depth = 16
//! precision_ceiling = 128
//! budget = 10000000
//! seed = 0
//!
//! [output]
//! json = "node.json"
//! text = "node.txt"
//! ```
//!
//! Integers are read modulo `p`. `ε` is the first nonzero element of `k`
//! (in table order) with `ε^q = -ε`; it exists whenever `k` has even degree
//! over its prime field.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;
use toml::Spanned;

use crate::enumerate::DEFAULT_BUDGET;
use crate::error::{Error, Result};
use crate::field::{Fe, Field};
use crate::spectral::{Branch, SpectralDatum, DEFAULT_PRECISION_CEILING};
use crate::springer::Route;
use crate::unitary::Section;

const DEFAULT_MAX_DEPTH: i64 = 16;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    description: Option<String>,
    field: Spanned<RawField>,
    #[serde(default)]
    branch: Vec<Spanned<RawBranch>>,
    partitions: Option<Vec<Spanned<Vec<i64>>>>,
    units: Option<Spanned<Vec<i64>>>,
    compute: Option<RawCompute>,
    output: Option<RawOutput>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawField {
    p: u32,
    #[serde(default = "one")]
    e: u32,
    #[serde(default)]
    hermitian: bool,
}

fn one() -> u32 {
    1
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBranch {
    n: i64,
    gamma: Vec<Spanned<Vec<i64>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCompute {
    route: Option<Spanned<String>>,
    depth: Option<i64>,
    max_depth: Option<i64>,
    precision_ceiling: Option<i64>,
    budget: Option<u64>,
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    json: Option<PathBuf>,
    text: Option<PathBuf>,
}

/// One term `(plain + eps * ε) t^exp` of a branch parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Term {
    pub exp: i64,
    pub plain: i64,
    pub eps: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BranchSpec {
    pub n: usize,
    pub gamma: Vec<Term>,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub name: String,
    pub description: Option<String>,
    pub p: u32,
    pub e: u32,
    pub hermitian: bool,
    pub field: Arc<Field>,
    pub branches: Vec<BranchSpec>,
    pub partitions: Vec<Vec<usize>>,
    pub units: Option<Vec<i64>>,
    pub route: Route,
    pub precision_ceiling: i64,
    pub budget: u64,
    pub seed: u64,
    pub json: Option<PathBuf>,
    pub text: Option<PathBuf>,
}

/// `line:column` (1-based) of a byte offset.
fn position(src: &str, offset: usize) -> String {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    format!("{line}:{col}")
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("experiment");
        Self::parse(&text, stem).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}:{m}", path.display())),
            other => other,
        })
    }

    /// Parse and validate; `default_name` is used when the file has no `name`.
    pub fn parse(src: &str, default_name: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(src).map_err(|e| {
            let at = e.span().map(|s| position(src, s.start)).unwrap_or_else(|| "?".into());
            Error::Config(format!("{at}: {}", e.message()))
        })?;
        let err = |offset: usize, msg: String| Error::Config(format!("{}: {msg}", position(src, offset)));

        let fspan = raw.field.span().start;
        let rf = raw.field.into_inner();
        if rf.hermitian && rf.p == 2 {
            return Err(err(fspan, "hermitian data need an odd characteristic".into()));
        }
        let degree = if rf.hermitian { 2 * rf.e } else { rf.e };
        let field = Field::new(rf.p, degree).map_err(|e| err(fspan, e.to_string()))?;
        let field = Arc::new(field);

        if raw.branch.is_empty() {
            return Err(err(src.len(), "at least one [[branch]] is required".into()));
        }
        let mut branches = Vec::new();
        for (bi, b) in raw.branch.iter().enumerate() {
            let at = b.span().start;
            let rb = b.get_ref();
            if rb.n < 1 {
                return Err(err(at, format!("branch {bi}: n must be at least 1")));
            }
            if rb.n % rf.p as i64 == 0 {
                return Err(err(at, format!("branch {bi}: n = {} is divisible by p = {}", rb.n, rf.p)));
            }
            let mut gamma = Vec::new();
            for t in &rb.gamma {
                let tat = t.span().start;
                let v = t.get_ref();
                if v.len() != 3 {
                    return Err(err(tat, format!("branch {bi}: a gamma term is [exponent, plain, eps], got {v:?}")));
                }
                let term = Term { exp: v[0], plain: v[1], eps: v[2] };
                if term.exp < 1 {
                    return Err(err(tat, format!("branch {bi}: exponent {} must be at least 1", term.exp)));
                }
                if term.eps.rem_euclid(rf.p as i64) != 0 && !field.has_involution() {
                    return Err(err(tat, format!("branch {bi}: eps coefficients need k of even degree over F_{}", rf.p)));
                }
                if rf.hermitian && term.plain.rem_euclid(rf.p as i64) != 0 {
                    return Err(err(
                        tat,
                        format!("branch {bi}: hermitian data need gamma^* = -gamma, so plain parts must vanish mod {}", rf.p),
                    ));
                }
                gamma.push(term);
            }
            branches.push(BranchSpec { n: rb.n as usize, gamma });
        }

        let k = branches.len();
        let partitions = match &raw.partitions {
            Some(ps) => {
                let mut out = Vec::new();
                for ps in ps {
                    let at = ps.span().start;
                    let mut v = Vec::new();
                    for &i in ps.get_ref() {
                        if i < 0 || i as usize >= k {
                            return Err(err(at, format!("partition index {i} out of range for {k} branches")));
                        }
                        if v.contains(&(i as usize)) {
                            return Err(err(at, format!("partition repeats branch {i}")));
                        }
                        v.push(i as usize);
                    }
                    if v.is_empty() || v.len() == k {
                        return Err(err(at, "both blocks of a partition must be nonempty".into()));
                    }
                    v.sort();
                    out.push(v);
                }
                out
            }
            None => default_partitions(k),
        };

        let units = match &raw.units {
            Some(u) => {
                let at = u.span().start;
                let v = u.get_ref();
                if v.len() != k {
                    return Err(err(at, format!("{} units for {k} branches", v.len())));
                }
                if v.iter().any(|x| x.rem_euclid(rf.p as i64) == 0) {
                    return Err(err(at, "units must be nonzero mod p".into()));
                }
                Some(v.clone())
            }
            None => None,
        };

        let c = raw.compute.as_ref();
        let route = match c.and_then(|c| c.route.as_ref()) {
            None => Route::Conductor,
            Some(r) => match r.get_ref().as_str() {
                "conductor" => Route::Conductor,
                "window" => Route::Window {
                    depth: c.and_then(|c| c.depth),
                    max_depth: c.and_then(|c| c.max_depth).unwrap_or(DEFAULT_MAX_DEPTH),
                },
                other => return Err(err(r.span().start, format!("unknown route {other:?}; use \"conductor\" or \"window\""))),
            },
        };
        let precision_ceiling = c.and_then(|c| c.precision_ceiling).unwrap_or(DEFAULT_PRECISION_CEILING);
        if precision_ceiling < 1 {
            return Err(Error::Config("precision_ceiling must be positive".into()));
        }

        Ok(ExperimentConfig {
            name: raw.name.unwrap_or_else(|| default_name.to_string()),
            description: raw.description,
            p: rf.p,
            e: rf.e,
            hermitian: rf.hermitian,
            field,
            branches,
            partitions,
            units,
            route,
            precision_ceiling,
            budget: c.and_then(|c| c.budget).unwrap_or(DEFAULT_BUDGET),
            seed: c.and_then(|c| c.seed).unwrap_or(0),
            json: raw.output.as_ref().and_then(|o| o.json.clone()),
            text: raw.output.as_ref().and_then(|o| o.text.clone()),
        })
    }

    /// `plain + eps * ε` in `k`.
    pub fn coefficient(&self, t: &Term) -> Fe {
        let f = &*self.field;
        let plain = f.from_int(t.plain);
        if t.eps.rem_euclid(self.p as i64) == 0 {
            return plain;
        }
        let eps = f.epsilon().expect("validated at parse time");
        f.add(plain, f.scale_int(eps, t.eps))
    }

    pub fn datum(&self) -> Result<SpectralDatum> {
        let bs = self
            .branches
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let terms: Vec<(i64, Fe)> = b.gamma.iter().map(|t| (t.exp, self.coefficient(t))).collect();
                Branch::new(i, b.n, &terms, &self.field)
            })
            .collect::<Result<Vec<_>>>()?;
        SpectralDatum::new(self.field.clone(), bs, self.precision_ceiling)
    }

    pub fn section(&self) -> Section {
        match &self.units {
            Some(u) => Section { units: u.iter().map(|&x| self.field.from_int(x)).collect() },
            None => Section::standard(self.branches.len()),
        }
    }
}

/// Every `I_1` containing branch 0, in lexicographic order.
pub fn default_partitions(k: usize) -> Vec<Vec<usize>> {
    if k < 2 {
        return Vec::new();
    }
    let mut out: Vec<Vec<usize>> = (0u64..1 << (k - 1))
        .map(|mask| {
            let mut v = vec![0];
            v.extend((1..k).filter(|i| mask >> (i - 1) & 1 == 1));
            v
        })
        .filter(|v| v.len() < k)
        .collect();
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const NODE: &str = r#"
name = "node"
[field]
p = 3
hermitian = true

[[branch]]
n = 1
gamma = [[1, 0, 1]]

[[branch]]
n = 1
gamma = [[1, 0, -1]]
"#;

    #[test]
    fn parses_node() {
        let c = ExperimentConfig::parse(NODE, "x").unwrap();
        assert_eq!(c.name, "node");
        assert_eq!(c.field.order(), 9);
        assert_eq!(c.partitions, vec![vec![0]]);
        assert_eq!(c.route, Route::Conductor);
        let d = c.datum().unwrap();
        assert_eq!(d.delta(), 1);
        assert_eq!(d.r()[0][1], 1);
    }

    #[test]
    fn trace_condition_is_checked_before_computing() {
        let bad = NODE.replacen("[[1, 0, 1]]", "[[1, 1, 1]]", 1);
        let e = ExperimentConfig::parse(&bad, "x").unwrap_err();
        let Error::Config(m) = e else { panic!("{e:?}") };
        assert!(m.starts_with("9:"), "{m}");
        assert!(m.contains("gamma^* = -gamma"));
    }

    #[test]
    fn positioned_errors() {
        let e = ExperimentConfig::parse("[field]\np = 3\nq = 4\n", "x").unwrap_err();
        let Error::Config(m) = e else { panic!() };
        assert!(m.starts_with("3:"), "{m}");
        let e = ExperimentConfig::parse("[field]\np = 2\nhermitian = true\n[[branch]]\nn = 1\ngamma = [[1, 1, 0]]\n", "x")
            .unwrap_err();
        assert!(matches!(e, Error::Config(m) if m.contains("odd")));
        let e = ExperimentConfig::parse("[field]\np = 3\n[[branch]]\nn = 3\ngamma = [[1, 1, 0]]\n", "x").unwrap_err();
        assert!(matches!(e, Error::Config(m) if m.starts_with("3:") && m.contains("divisible")));
        let e = ExperimentConfig::parse("[field]\np = 3\n[[branch]]\nn = 2\ngamma = [[3, 0, 1]]\n", "x").unwrap_err();
        assert!(matches!(e, Error::Config(m) if m.contains("even degree")));
        let e = ExperimentConfig::parse("[field]\np = 4\n[[branch]]\nn = 1\ngamma = [[1, 1, 0]]\n", "x").unwrap_err();
        assert!(matches!(e, Error::Config(_)));
    }

    #[test]
    fn partitions_and_units() {
        let src = NODE.replacen("name = \"node\"", "name = \"node\"\npartitions = [[1]]\nunits = [2, 1]", 1);
        let c = ExperimentConfig::parse(&src, "x").unwrap();
        assert_eq!(c.partitions, vec![vec![1]]);
        assert_eq!(c.section().units, vec![c.field.from_int(2), Fe::ONE]);
        let bad = NODE.replacen("name = \"node\"", "partitions = [[0, 1]]", 1);
        assert!(ExperimentConfig::parse(&bad, "x").is_err());
    }

    #[test]
    fn default_partition_list() {
        assert_eq!(default_partitions(1), Vec::<Vec<usize>>::new());
        assert_eq!(default_partitions(3), vec![vec![0], vec![0, 1], vec![0, 2]]);
    }

    #[test]
    fn window_route() {
        let src = format!("{NODE}\n[compute]\nroute = \"window\"\ndepth = 3\nbudget = 5\n");
        let c = ExperimentConfig::parse(&src, "x").unwrap();
        assert_eq!(c.route, Route::Window { depth: Some(3), max_depth: DEFAULT_MAX_DEPTH });
        assert_eq!(c.budget, 5);
        let bad = format!("{NODE}\n[compute]\nroute = \"fast\"\n");
        assert!(ExperimentConfig::parse(&bad, "x").is_err());
    }
}
