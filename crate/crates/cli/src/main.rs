use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use hcgrowth::harness::{parse_integer_grid, run_suite, RunConfig, SuiteSelection};
use hcgrowth::kernel_polynomials::{bounded_kernel, default_check_exponents, sign_kernel, validate, KernelFamily};
use hcgrowth::target_catalogue::{first_active_n, format_rational, Catalogue, ProofConstants, Regime};
use hcgrowth::weighted_density::{log_partial_sum, upper_density_scan, IntegerSet, SumMode, WeightSpec};
use hcgrowth::{float_serde, Error, Result};

#[derive(Parser)]
#[command(name = "hcgrowth", version, about = "Weighted-density hypercyclic growth construction and checks")]
struct Cli {
    /// File of `key = value` lines applied before any flag.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the series and write it with the build report.
    Construct(RunArgs),
    /// Growth profile on a radius grid.
    Growth(RunArgs),
    /// Orbit approximation at the hitting indices.
    Orbit {
        #[command(flatten)]
        run: RunArgs,
        /// Restrict to one target class.
        #[arg(long)]
        k: Option<u32>,
        /// Check an evenly spread sample of this many indices.
        #[arg(long, conflicts_with = "all")]
        sample: Option<usize>,
        /// Check every hitting index.
        #[arg(long)]
        all: bool,
    },
    /// Weighted density of the hitting sets.
    TkDensity {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long)]
        slack: Option<String>,
    },
    /// Weighted upper density of an integer set.
    Density(DensityArgs),
    /// Generate a kernel polynomial and validate its norms.
    RsGen(RsGenArgs),
    /// Show a catalogue entry.
    Catalogue(CatalogueArgs),
    /// Every suite.
    All(RunArgs),
}

/// Run-configuration overrides; each flag maps to the config key of the same name.
#[derive(Args, Default)]
struct RunArgs {
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long = "c")]
    c: Option<String>,
    #[arg(long = "C")]
    big_c: Option<String>,
    #[arg(long)]
    e: Option<String>,
    #[arg(long)]
    k_max: Option<String>,
    #[arg(long)]
    n_max: Option<String>,
    /// `relaxed` or `paper`.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    subseq: Option<String>,
    #[arg(long)]
    min_nodes: Option<String>,
    #[arg(long)]
    refinement: Option<String>,
    #[arg(long)]
    tail_eps: Option<String>,
    /// Any config key, as `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl RunArgs {
    fn pairs(&self) -> Vec<(&'static str, &str)> {
        [
            ("gamma", &self.gamma),
            ("p", &self.p),
            ("c", &self.c),
            ("C", &self.big_c),
            ("e", &self.e),
            ("k_max", &self.k_max),
            ("n_max", &self.n_max),
            ("mode", &self.mode),
            ("grid", &self.grid),
            ("subseq", &self.subseq),
            ("min_nodes", &self.min_nodes),
            ("refinement", &self.refinement),
            ("tail_eps", &self.tail_eps),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
        .collect()
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DensityMode {
    Exact,
    Asymptotic,
    Auto,
}

#[derive(Args)]
struct DensityArgs {
    #[arg(long)]
    gamma: f64,
    /// `all`, `even`, `squares`, `ap:d`, or a file of sorted integers.
    #[arg(long = "set", value_name = "SET")]
    set: String,
    /// Comma list, `log:lo:hi:count` or `lin:lo:hi:count`.
    #[arg(long)]
    grid: String,
    #[arg(long, value_enum, default_value = "auto")]
    mode: DensityMode,
    /// Largest prefix summed term by term in auto mode.
    #[arg(long, default_value_t = 10_000_000)]
    cap: u64,
}

#[derive(Args)]
struct RsGenArgs {
    /// `sign` or `bounded`.
    #[arg(long, default_value = "sign")]
    family: String,
    #[arg(long)]
    n: usize,
    /// Comma list of exponents; defaults to the family's guarantees.
    #[arg(long, value_name = "P-LIST")]
    check_norms: Option<String>,
}

#[derive(Args)]
struct CatalogueArgs {
    #[arg(long)]
    k: usize,
    /// Exponent p selecting the regime (`inf`, `2`, `1.5`, ...).
    #[arg(long, alias = "p", default_value = "inf")]
    regime: String,
    /// `paper`, `relaxed` or `custom:C,c[,e]`.
    #[arg(long, default_value = "relaxed")]
    constants: String,
    /// Weight exponent used for the first active block.
    #[arg(long, default_value_t = 0.75)]
    gamma: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    let base = || -> Result<RunConfig> {
        match &cli.config {
            Some(path) => RunConfig::from_file(path),
            None => Ok(RunConfig::default()),
        }
    };
    let suites = |names: &str| SuiteSelection::parse(names);
    match &cli.command {
        Command::Construct(run) => run_with(base()?, run, suites("construct")?, &[], cli.out.as_deref()),
        Command::Growth(run) => run_with(base()?, run, suites("construct,growth")?, &[], cli.out.as_deref()),
        Command::Orbit { run, k, sample, all } => {
            let mut extra = Vec::new();
            if let Some(k) = k {
                extra.push(("orbit_k", k.to_string()));
            }
            if let Some(n) = sample {
                extra.push(("orbit_sample", n.to_string()));
            } else if *all {
                extra.push(("orbit_sample", "all".into()));
            }
            run_with(base()?, run, suites("construct,orbit")?, &extra, cli.out.as_deref())
        }
        Command::TkDensity { run, k, slack } => {
            let mut extra = Vec::new();
            if let Some(k) = k {
                extra.push(("density_k", k.to_string()));
            }
            if let Some(s) = slack {
                extra.push(("density_slack", s.clone()));
            }
            run_with(base()?, run, suites("construct,density")?, &extra, cli.out.as_deref())
        }
        Command::All(run) => run_with(base()?, run, SuiteSelection::ALL, &[], cli.out.as_deref()),
        Command::Density(args) => density(args, cli.out.as_deref()),
        Command::RsGen(args) => rs_gen(args, cli.out.as_deref()),
        Command::Catalogue(args) => catalogue(args, cli.out.as_deref()),
    }
}

fn run_with(
    mut cfg: RunConfig,
    run: &RunArgs,
    selection: SuiteSelection,
    extra: &[(&'static str, String)],
    out: Option<&Path>,
) -> Result<i32> {
    cfg.suites = selection;
    for (k, v) in run.pairs() {
        cfg.set(k, v)?;
    }
    for (k, v) in extra {
        cfg.set(k, v)?;
    }
    for pair in &run.set {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("--set expects key=value, got '{pair}'")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(dir) = out {
        cfg.output_dir = dir.to_path_buf();
    }
    let outcome = run_suite(&cfg)?;
    for s in &outcome.bundle.suites {
        let verdict = match s.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None if s.ran => "INFO",
            None => "SKIP",
        };
        println!("{verdict} {}: {}", s.name, s.detail);
    }
    for w in &outcome.bundle.warnings {
        println!("warning: {w}");
    }
    println!("status: {} ({})", outcome.status, cfg.output_dir.display());
    Ok(outcome.exit_code)
}

fn emit(value: &Value, out: Option<&Path>, name: &str) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            println!("{}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn read_members(spec: &str) -> Result<IntegerSet> {
    if let Ok(set) = IntegerSet::parse_builtin(spec) {
        return Ok(set);
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let members = text
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<u64>().map_err(|_| Error::Parse(format!("{}: '{t}' is not an integer", path.display()))))
        .collect::<Result<Vec<u64>>>()?;
    if members.windows(2).any(|w| w[0] >= w[1]) || members.first() == Some(&0) {
        return Err(Error::Parse(format!("{}: members must be positive and strictly increasing", path.display())));
    }
    Ok(IntegerSet::Explicit(members))
}

fn density(args: &DensityArgs, out: Option<&Path>) -> Result<i32> {
    let spec = WeightSpec::new(args.gamma)?;
    let members = read_members(&args.set)?;
    let grid = parse_integer_grid(&args.grid)?;
    let mode = match args.mode {
        DensityMode::Exact => SumMode::Exact,
        DensityMode::Asymptotic => SumMode::Asymptotic,
        DensityMode::Auto => SumMode::Auto,
    };
    let scan = upper_density_scan(members.iter(), &spec, &grid)?;
    let mut running = f64::NEG_INFINITY;
    let mut points = Vec::new();
    for pt in &scan.points {
        let (log_total, ratio) = match mode {
            SumMode::Exact => (pt.log_weighted_total, pt.ratio),
            _ => {
                let total = log_partial_sum(pt.n, &spec, mode, args.cap)?.value;
                (total, (pt.log_weighted_count - total).exp())
            }
        };
        running = running.max(ratio);
        points.push(json!({ "n": pt.n, "ratio": ratio, "log_total": log_total }));
    }
    let doc = json!({ "gamma": args.gamma, "grid": points, "running_max": running });
    emit(&doc, out, "density.json")?;
    Ok(0)
}

fn rs_gen(args: &RsGenArgs, out: Option<&Path>) -> Result<i32> {
    let family: KernelFamily = args.family.parse()?;
    let kernel = match family {
        KernelFamily::Sign => sign_kernel(args.n)?,
        KernelFamily::Bounded => bounded_kernel(args.n)?,
    };
    let ps = match &args.check_norms {
        Some(list) => list
            .split(',')
            .map(|t| float_serde::parse_extended(t).map_err(Error::Parse))
            .collect::<Result<Vec<f64>>>()?,
        None => default_check_exponents(family).to_vec(),
    };
    let v = validate(&kernel, &ps)?;
    let norms: BTreeMap<String, f64> = v
        .norms
        .iter()
        .map(|c| (float_serde::format_extended(c.norm.p), c.norm.value))
        .collect();
    let doc = json!({
        "N": v.n,
        "family": family,
        "plus_count": v.plus_count,
        "required_plus": v.required_plus,
        "coefficients_ok": v.coefficients_ok,
        "norms": norms,
        "checks": v.norms,
        "bounds_ok": v.bounds_ok,
    });
    let dir = out.map_or_else(|| PathBuf::from("out"), Path::to_path_buf);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let csv_path = dir.join(format!("kernel_{}_{}.csv", args.family, args.n));
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| Error::Parse(format!("csv: {e}")))?;
    let csv_err = |e: csv::Error| Error::Parse(format!("csv: {e}"));
    w.write_record(["index", "coefficient"]).map_err(csv_err)?;
    for (i, c) in kernel.coefficients.iter().enumerate() {
        w.write_record([i.to_string(), c.to_string()]).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(&csv_path, e))?;
    println!("{}", csv_path.display());
    emit(&doc, Some(&dir), &format!("kernel_{}_{}.json", args.family, args.n))?;
    Ok(if v.bounds_ok { 0 } else { 1 })
}

fn catalogue(args: &CatalogueArgs, out: Option<&Path>) -> Result<i32> {
    let p = float_serde::parse_extended(&args.regime).map_err(Error::Parse)?;
    let regime = Regime::from_p(p)?;
    let constants = ProofConstants::parse(&args.constants, regime)?;
    let mut cat = Catalogue::new(constants);
    let entry = cat.entry(args.k)?.clone();
    let k = u32::try_from(args.k).map_err(|_| Error::Parse(format!("k = {} is too large", args.k)))?;
    let first = first_active_n(&entry, k, args.gamma)?;
    let doc = json!({
        "k": entry.k,
        "regime": regime,
        "constants": constants,
        "coeffs": entry.q_coeffs.iter().map(format_rational).collect::<Vec<_>>(),
        "d_k": entry.degree,
        "l1": format_rational(&entry.l1_norm),
        "l_k": format_rational(&entry.l_k),
        "alpha_k": entry.alpha_k,
        "gamma": args.gamma,
        "first_active_n": first,
    });
    emit(&doc, out, &format!("catalogue_{}.json", args.k))?;
    Ok(0)
}
