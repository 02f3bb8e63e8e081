//! Command-line front end and the golden corpus runner.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::report::{self, Command, Report};

#[derive(Parser, Debug)]
#[command(name = "springer-lab", version, about = "Point counts on affine Springer fibers and unitary orbital integral checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Subcommand, Debug)]
pub enum Sub {
    /// delta both ways, r_ij, conductor, residue pairing
    Invariants(RunArgs),
    /// Canonical points of the index-0 fiber with the stabilization table
    Enumerate(RunArgs),
    /// Frobenius-fixed points by parity class, SO and O^kappa
    Orbital(RunArgs),
    /// Index profiles, strata and sampled fiber ranks per partition
    Strata(RunArgs),
    /// Full check of O^kappa = q^r SO_1 SO_2 per partition
    VerifyFl(RunArgs),
    /// Run every config in a directory against its golden report
    Corpus(CorpusArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct Overrides {
    /// Worker threads (default: available cores)
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub precision_ceiling: Option<i64>,
    /// Candidate budget for subspace enumeration
    #[arg(long)]
    pub budget: Option<u64>,
    /// Seed for sampled property checks
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Write the JSON report here (overrides the config's output.json)
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Print the JSON report on stdout instead of the text summary
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Args, Debug)]
pub struct CorpusArgs {
    #[arg(long, value_name = "DIR", default_value = "corpus")]
    pub dir: PathBuf,
    /// Rewrite the golden files instead of comparing
    #[arg(long)]
    pub bless: bool,
    #[command(flatten)]
    pub overrides: Overrides,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(p) = self.precision_ceiling {
            cfg.precision_ceiling = p;
        }
        if let Some(b) = self.budget {
            cfg.budget = b;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn set_threads(n: Option<usize>) {
    if let Some(n) = n {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            warn!("thread pool already initialized: {e}");
        }
    }
}

pub fn run(cli: Cli) -> Result<i32> {
    let (command, args) = match cli.command {
        Sub::Invariants(a) => (Command::Invariants, a),
        Sub::Enumerate(a) => (Command::Enumerate, a),
        Sub::Orbital(a) => (Command::Orbital, a),
        Sub::Strata(a) => (Command::Strata, a),
        Sub::VerifyFl(a) => (Command::VerifyFl, a),
        Sub::Corpus(a) => {
            set_threads(a.overrides.threads);
            return corpus_main(&a);
        }
    };
    set_threads(args.overrides.threads);
    let mut cfg = ExperimentConfig::load(&args.config)?;
    args.overrides.apply(&mut cfg);
    let base = args.config.parent().unwrap_or(Path::new("."));
    let start = Instant::now();
    let rep = report::build(&cfg, command)?;
    let elapsed = start.elapsed();

    let json = rep.to_json();
    let mut text = report::summary(&rep);
    text.push_str(&format!("  time: {:.3} s\n", elapsed.as_secs_f64()));
    if let Some(path) = args.out.clone().or_else(|| cfg.json.as_ref().map(|p| base.join(p))) {
        write(&path, &json)?;
    }
    if let Some(p) = &cfg.text {
        write(&base.join(p), &text)?;
    }
    if args.json {
        print!("{json}");
    } else {
        print!("{text}");
    }
    if !rep.verdict.ok {
        eprintln!("{}", diagnostic(&rep));
    }
    Ok(rep.exit_code())
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn diagnostic(rep: &Report) -> String {
    let mut s = format!("{}: {} check(s) failed", rep.name, rep.verdict.failures.len());
    for f in &rep.verdict.failures {
        s.push_str("\n  ");
        s.push_str(f);
    }
    s
}

/// The command a corpus config is run with.
pub fn corpus_command(cfg: &ExperimentConfig) -> Command {
    if cfg.hermitian {
        Command::VerifyFl
    } else {
        Command::Strata
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CorpusStatus {
    Match,
    Blessed,
    Missing,
    Differs,
    /// The report itself has failed checks.
    Failed,
}

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub config: PathBuf,
    pub report: Report,
    pub json: String,
    pub status: CorpusStatus,
}

/// Sorted list of `*.toml` files in `dir`.
pub fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let rd = fs::read_dir(dir).map_err(|e| Error::Config(format!("{}: {e}", dir.display())))?;
    let mut out: Vec<PathBuf> = rd
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    out.sort();
    Ok(out)
}

pub fn golden_path(config: &Path) -> PathBuf {
    let dir = config.parent().unwrap_or(Path::new("."));
    let stem = config.file_stem().and_then(|s| s.to_str()).unwrap_or("experiment");
    dir.join("golden").join(format!("{stem}.json"))
}

/// Run every config under `dir`, comparing with or rewriting `dir/golden/*.json`.
pub fn run_corpus(dir: &Path, overrides: &Overrides, bless: bool) -> Result<Vec<CorpusEntry>> {
    let mut out = Vec::new();
    for path in corpus_files(dir)? {
        let mut cfg = ExperimentConfig::load(&path)?;
        overrides.apply(&mut cfg);
        let report = report::build(&cfg, corpus_command(&cfg))?;
        let json = report.to_json();
        let golden = golden_path(&path);
        let status = if !report.verdict.ok {
            CorpusStatus::Failed
        } else if bless {
            if let Some(d) = golden.parent() {
                fs::create_dir_all(d).map_err(|e| Error::Config(format!("{}: {e}", d.display())))?;
            }
            write(&golden, &json)?;
            CorpusStatus::Blessed
        } else {
            match fs::read_to_string(&golden) {
                Ok(g) if g == json => CorpusStatus::Match,
                Ok(_) => CorpusStatus::Differs,
                Err(_) => CorpusStatus::Missing,
            }
        };
        info!("{}: {:?}", path.display(), status);
        out.push(CorpusEntry { config: path, report, json, status });
    }
    Ok(out)
}

fn corpus_main(a: &CorpusArgs) -> Result<i32> {
    let entries = run_corpus(&a.dir, &a.overrides, a.bless)?;
    let mut code = 0;
    for e in &entries {
        let name = e.config.file_name().and_then(|s| s.to_str()).unwrap_or("?");
        let tag = match e.status {
            CorpusStatus::Match => "ok",
            CorpusStatus::Blessed => "blessed",
            CorpusStatus::Missing => "no golden",
            CorpusStatus::Differs => "DIFFERS",
            CorpusStatus::Failed => "FAILED",
        };
        println!("{name:<24} {:<10} {tag}", e.report.command);
        match e.status {
            CorpusStatus::Failed => {
                eprintln!("{}", diagnostic(&e.report));
                code = 4;
            }
            CorpusStatus::Differs | CorpusStatus::Missing => code = 4,
            CorpusStatus::Match | CorpusStatus::Blessed => {}
        }
    }
    Ok(code)
}
