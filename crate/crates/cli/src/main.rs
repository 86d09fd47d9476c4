use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use sphdeg::calibrate::calibrate_constants;
use sphdeg::degree::{
    degree_consistency, holder_degree, oracle_report, pairing_degree, smooth_degree, ConsistencySettings, DegreeReport,
    HolderOptions, Method, OracleOptions,
};
use sphdeg::exterior::KernelConstants;
use sphdeg::geometry::ChartPoint;
use sphdeg::maps::{fixture, SampledMap};
use sphdeg::quadrature::MCConfig;
use sphdeg::suites::{run_suite, Suite};

const SCHEMA_DEGREE: &str = "sphdeg.degree/1";
const SCHEMA_CONSISTENCY: &str = "sphdeg.consistency/1";
const SCHEMA_VERIFY: &str = "sphdeg.verify/1";
const SCHEMA_CONSTANTS: &str = "sphdeg.constants/1";

#[derive(Parser)]
#[command(name = "sphdeg", version, about = "Degrees of maps between even-dimensional spheres")]
struct Cli {
    /// Flat `key = value` file supplying defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Suppress the human-readable summary on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a degree with one method.
    #[command(subcommand)]
    Degree(DegreeCommand),
    /// Degree through the operator-level pairing on S².
    Pairing(PairingArgs),
    /// Run several methods and compare the rounded degrees.
    Consistency(ConsistencyArgs),
    /// Run a property suite; exits nonzero on failure.
    Verify(VerifyArgs),
    #[command(subcommand)]
    Calibrate(CalibrateCommand),
}

#[derive(Subcommand)]
enum DegreeCommand {
    /// Monte Carlo integral of the pulled-back Chern form.
    Smooth(McArgs),
    /// Monte Carlo integral of the Hölder kernel formula.
    Holder(HolderArgs),
    /// Signed count of preimages of a regular value.
    Oracle(OracleArgs),
}

#[derive(Subcommand)]
enum CalibrateCommand {
    /// Compute c_n and c_n' numerically.
    Constants(CalibrateArgs),
}

#[derive(Args, Clone, Default)]
struct MapArgs {
    /// Fixture name: identity, antipodal, constant, z^D, power:D, snowflake:D:BETA, shift:EPS.
    #[arg(long)]
    map: Option<String>,
    /// Half the sphere dimension (S^{2n}).
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args, Clone, Default)]
struct McArgs {
    #[command(flatten)]
    map: MapArgs,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Clone, Default)]
struct HolderArgs {
    #[command(flatten)]
    mc: McArgs,
    #[arg(long)]
    k: Option<usize>,
    /// Importance exponent for near-diagonal sampling.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    strata: Option<usize>,
    /// JSON file written by `calibrate constants --store`.
    #[arg(long)]
    constants: Option<PathBuf>,
    /// Also estimate the harmonic-kernel terms.
    #[arg(long)]
    harmonic: bool,
}

#[derive(Args, Clone, Default)]
struct OracleArgs {
    #[command(flatten)]
    map: MapArgs,
    /// Comma-separated chart coordinates of the target value.
    #[arg(long, allow_hyphen_values = true)]
    value: Option<String>,
    #[arg(long)]
    starts: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Clone, Default)]
struct PairingArgs {
    #[arg(long)]
    map: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    /// Spectral truncation degree.
    #[arg(long = "L", alias = "l")]
    l: Option<usize>,
    #[arg(long)]
    t: Option<f64>,
}

#[derive(Args, Clone, Default)]
struct ConsistencyArgs {
    #[command(flatten)]
    mc: McArgs,
    /// Comma-separated: de_rham, holder_kernel, connes_pairing, preimage_oracle.
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long = "L", alias = "l")]
    l: Option<usize>,
}

#[derive(Args, Clone)]
struct VerifyArgs {
    /// chern, gamma, tracalc, russo, trace-formula, exterior, homlem, projections or all.
    suite: String,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Clone, Default)]
struct CalibrateArgs {
    #[arg(long)]
    n: Option<usize>,
    /// Write the constants as JSON for `degree holder --constants`.
    #[arg(long)]
    store: Option<PathBuf>,
}

/// Flag values fall back to the config file, then to built-in defaults.
struct Settings {
    file: BTreeMap<String, String>,
}

impl Settings {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self { file: BTreeMap::new() });
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Ok(Self { file: parse_config(&text)? })
    }

    fn get<T: std::str::FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.file.get(key).map(|v| v.parse::<T>().map_err(|e| anyhow!("config key `{key}` = `{v}`: {e}"))).transpose()
    }

    fn or<T: std::str::FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(flag, key)?.unwrap_or(default))
    }

    fn map(&self, args: &MapArgs) -> Result<SampledMap> {
        let name: String = self.get(args.map.clone(), "map")?.ok_or_else(|| anyhow!("--map is required"))?;
        let n = self.or(args.n, "n", 1)?;
        Ok(fixture(&name, n)?)
    }

    fn mc(&self, args: &McArgs, default_samples: u64) -> Result<MCConfig> {
        let cfg = MCConfig::new(self.or(args.samples, "samples", default_samples)?, self.or(args.seed, "seed", 1)?)
            .with_workers(self.or(args.workers, "workers", 1)?);
        Ok(cfg)
    }
}

fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("config line {}: expected `key = value`", i + 1))?;
        out.insert(k.trim().to_string(), v.trim().trim_matches('"').to_string());
    }
    Ok(out)
}

fn emit(record: Value) {
    println!("{record}");
}

fn degree_record(r: &DegreeReport) -> Result<Value> {
    let mut v = serde_json::to_value(r)?;
    v["schema"] = json!(SCHEMA_DEGREE);
    Ok(v)
}

fn summarize(r: &DegreeReport) -> String {
    let verdict = match r.degree() {
        Some(d) => format!("degree {d}"),
        None => "inconclusive".to_string(),
    };
    format!(
        "{} [{}] n={}: {:.4} ± {:.4} (95%) → {verdict}  ({:.2}s)",
        r.map,
        r.method.name(),
        r.n,
        r.estimate,
        r.half_width(),
        r.wall_time
    )
}

fn parse_value(s: &str, n: usize) -> Result<ChartPoint<f64>> {
    let coords = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad coordinate `{t}`")))
        .collect::<Result<Vec<_>>>()?;
    if coords.len() != 2 * n {
        bail!("--value needs {} coordinates, got {}", 2 * n, coords.len());
    }
    Ok(ChartPoint::Finite(coords))
}

fn load_constants(path: Option<&Path>, n: usize) -> Result<KernelConstants> {
    let Some(path) = path else {
        return Ok(KernelConstants::analytic(n));
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: Value = serde_json::from_str(&text)?;
    let c: KernelConstants = serde_json::from_value(v.get("constants").cloned().unwrap_or(v))?;
    if c.n != n {
        bail!("constants in {} are for n = {}, map has n = {n}", path.display(), c.n);
    }
    Ok(c)
}

fn run(cli: Cli) -> Result<bool> {
    let s = Settings::load(cli.config.as_deref())?;
    let say = |msg: String| {
        if !cli.quiet {
            eprintln!("{msg}");
        }
    };
    match cli.command {
        Command::Degree(DegreeCommand::Smooth(a)) => {
            let f = s.map(&a.map)?;
            let r = smooth_degree(&f, &s.mc(&a, 1_000_000)?)?;
            emit(degree_record(&r)?);
            say(summarize(&r));
        }
        Command::Degree(DegreeCommand::Holder(a)) => {
            let f = s.map(&a.mc.map)?;
            let k = s.or(a.k, "k", (f.n() as f64 / f.alpha()).floor() as usize + 1)?;
            let mut cfg = s.mc(&a.mc, 1_000_000)?.with_importance(s.or(a.beta, "beta", 1.5)?);
            if let Some(st) = s.get(a.strata, "strata")? {
                cfg = cfg.with_strata(st);
            }
            let consts = load_constants(s.get(a.constants.clone(), "constants")?.as_deref(), f.n())?;
            let harmonic = a.harmonic || s.or(None, "harmonic", false)?;
            let r = holder_degree(&f, k, &consts, &cfg, &HolderOptions { harmonic_diagnostic: harmonic })?;
            emit(degree_record(&r)?);
            say(summarize(&r));
        }
        Command::Degree(DegreeCommand::Oracle(a)) => {
            let f = s.map(&a.map)?;
            let value = match s.get(a.value.clone(), "value")? {
                Some(v) => parse_value(&v, f.n())?,
                None => sphdeg::degree::default_regular_value(f.n()),
            };
            let o = OracleOptions {
                starts: s.or(a.starts, "starts", OracleOptions::default().starts)?,
                seed: s.or(a.seed, "seed", OracleOptions::default().seed)?,
            };
            let r = oracle_report(&f, &value, &o)?;
            emit(degree_record(&r)?);
            say(summarize(&r));
        }
        Command::Pairing(a) => {
            let f = s.map(&MapArgs { map: a.map.clone(), n: Some(1) })?;
            let r = pairing_degree(&f, s.or(a.k, "k", 2)?, s.or(a.l, "L", 16)?, s.or(a.t, "t", 1.0)?)?;
            emit(degree_record(&r)?);
            say(summarize(&r));
        }
        Command::Consistency(a) => {
            let f = s.map(&a.mc.map)?;
            let methods = s
                .or(a.methods.clone(), "methods", "de_rham,preimage_oracle".to_string())?
                .split(',')
                .map(|m| m.trim().parse::<Method>())
                .collect::<Result<Vec<_>, _>>()?;
            let settings = ConsistencySettings {
                mc: s.mc(&a.mc, 200_000)?.with_importance(s.or(None, "beta", 1.5)?),
                holder_k: s.get(a.k, "k")?,
                pairing_l: s.or(a.l, "L", 16)?,
                ..ConsistencySettings::default()
            };
            let r = degree_consistency(&f, &methods, &settings)?;
            let mut v = serde_json::to_value(&r)?;
            v["schema"] = json!(SCHEMA_CONSISTENCY);
            emit(v);
            for rep in &r.reports {
                say(summarize(rep));
            }
            for (m, why) in &r.skipped {
                say(format!("skipped {}: {why}", m.name()));
            }
            say(match (r.agree, r.degree) {
                (true, Some(d)) => format!("all methods agree: degree {d}"),
                _ => format!("disagreement: {}", r.discrepancy.clone().unwrap_or_default()),
            });
            return Ok(r.agree);
        }
        Command::Verify(a) => {
            let suites: Vec<Suite> = if a.suite == "all" { Suite::ALL.to_vec() } else { vec![a.suite.parse()?] };
            let seed = s.or(a.seed, "seed", 1)?;
            let mut ok = true;
            for suite in suites {
                let r = run_suite(suite, seed)?;
                let mut v = serde_json::to_value(&r)?;
                v["schema"] = json!(SCHEMA_VERIFY);
                emit(v);
                for c in &r.checks {
                    say(format!(
                        "  {} {:<36} {:>12.4e} {}",
                        if c.passed { "ok  " } else { "FAIL" },
                        c.name,
                        c.value,
                        c.condition
                    ));
                }
                say(format!("{}: {} ({:.2}s)", suite.name(), if r.passed { "passed" } else { "FAILED" }, r.wall_time));
                ok &= r.passed;
            }
            return Ok(ok);
        }
        Command::Calibrate(CalibrateCommand::Constants(a)) => {
            let n = s.or(a.n, "n", 1)?;
            let c = calibrate_constants(n)?;
            let record = json!({
                "schema": SCHEMA_CONSTANTS,
                "calibration": c,
                "constants": c.constants(),
            });
            if let Some(path) = s.get(a.store.clone(), "store")? {
                std::fs::write(&path, serde_json::to_string_pretty(&record)?)
                    .with_context(|| format!("writing {}", path.display()))?;
                say(format!("stored constants in {}", path.display()));
            }
            emit(record);
            say(format!(
                "n={n}: c_n = {:.12} (rel. err {:.1e}), c_n' = {:.12} (rel. err {:.1e})",
                c.c_n, c.c_n_rel_error, c.c_n_prime, c.c_n_prime_rel_error
            ));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
