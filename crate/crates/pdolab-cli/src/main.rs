//! `pdolab` command line driver.
//!
//! Settings resolve in order: `--config` file, then `--set KEY=VALUE`, then explicit flags.
//! Exit status: 0 when every contract holds, 2 when one fails, 1 on usage or input errors.

mod builtins;
mod commands;
mod config;

use clap::{error::ErrorKind, Args, Parser, Subcommand};
use commands::Outcome;
use config::{CliError, CliResult, Config};
use pdolab::csvio::{Cell, Report};
use serde_json::{json, Map, Value};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "pdolab", version, about = "Pseudodifferential operator lab on periodic grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Print the report as JSON on stdout
    #[arg(long)]
    json: bool,
    #[arg(long)]
    seed: Option<String>,
}

#[derive(Args)]
struct GridArgs {
    /// Dimension (1 or 2)
    #[arg(long = "n")]
    dim: Option<String>,
    /// Points per axis
    #[arg(long = "N")]
    npts: Option<String>,
    /// Period
    #[arg(long = "L")]
    period: Option<String>,
    /// Finest Littlewood-Paley block
    #[arg(long = "J")]
    j: Option<String>,
}

macro_rules! flags {
    ($($name:ident { $($(#[$m:meta])* $field:ident : $key:literal),* $(,)? })*) => {
        $(
            #[derive(Args)]
            struct $name {
                $( $(#[$m])* #[arg(long)] $field: Option<String>, )*
            }
            impl $name {
                fn pairs(&self) -> Vec<(&'static str, Option<&String>)> {
                    vec![$(($key, self.$field.as_ref())),*]
                }
            }
        )*
    };
}

flags! {
    NormFlags { input: "input", kind: "kind", t: "t", theta: "theta", tau: "tau", s: "s", q: "q", out: "report" }
    InterpFlags { input: "input", t: "t", theta: "theta", k: "k", vartheta: "vartheta", out: "report" }
    SymbolFlags { symbol: "symbol", l: "l", t: "t", out: "report" }
    ApplyFlags { symbol: "symbol", input: "input", form: "form", out: "out", report: "report" }
    OscFlags { amplitude: "amplitude", method: "method", cutoff: "cutoff", l: "l", l_prime: "l_prime", r: "r", nodes: "nodes", report: "report" }
    SmoothFlags { symbol: "symbol", gamma: "gamma", sharp: "sharp", flat: "flat", out: "report" }
    KernelFlags { symbol: "symbol", moments: "moments", zmin: "zmin", zmax: "zmax", out: "report" }
    TransformFlags { symbol: "symbol", diffeo: "diffeo", check: "check", r: "r", q: "q", k: "k", sigma: "sigma", lambda_sweep: "lambda_sweep", out: "report" }
    AcceptanceFlags { suite: "suite", out: "report" }
    OutFlag { out: "report" }
}

/// `compose` uses `--N` for the number of expansion terms, so its grid flags are separate.
#[derive(Args)]
struct ComposeFlags {
    #[arg(long)]
    p1: Option<String>,
    #[arg(long)]
    p2: Option<String>,
    /// Number of expansion terms
    #[arg(long = "N")]
    terms: Option<String>,
    #[arg(long = "lambda-sweep")]
    lambda_sweep: Option<String>,
    /// Points per axis
    #[arg(long)]
    points: Option<String>,
    #[arg(long = "L")]
    period: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Littlewood-Paley partition identities
    LpCheck {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        f: OutFlag,
        #[command(flatten)]
        common: Common,
    },
    /// Sup, Hölder, Zygmund and Bessel norms of a grid function
    Norms {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        f: NormFlags,
        #[command(flatten)]
        common: Common,
    },
    /// Hölder interpolation ratio on a function or the built-in corpus
    InterpCheck {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        f: InterpFlags,
        #[command(flatten)]
        common: Common,
    },
    /// Symbol seminorms against the declared class
    SymbolReport {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        f: SymbolFlags,
        #[command(flatten)]
        common: Common,
    },
    /// Apply a quantized symbol to a grid function
    Apply {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        f: ApplyFlags,
        #[command(flatten)]
        common: Common,
    },
    /// Oscillatory integral of a built-in amplitude
    Osc {
        #[command(flatten)]
        f: OscFlags,
        #[command(flatten)]
        common: Common,
    },
    /// Composition remainder sweep
    Compose {
        #[command(flatten)]
        f: ComposeFlags,
        #[command(flatten)]
        common: Common,
    },
    /// Split a Hölder symbol into smooth and rough parts
    Smooth {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        f: SmoothFlags,
        #[command(flatten)]
        common: Common,
    },
    /// Littlewood-Paley kernel blocks and their decay
    Kernel {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        f: KernelFlags,
        #[command(flatten)]
        common: Common,
    },
    /// Coordinate change checks
    Transform {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        f: TransformFlags,
        #[command(flatten)]
        common: Common,
    },
    /// Acceptance suites
    Acceptance {
        #[command(flatten)]
        f: AcceptanceFlags,
        #[command(flatten)]
        common: Common,
    },
}

impl GridArgs {
    fn pairs(&self) -> Vec<(&'static str, Option<&String>)> {
        vec![("n", self.dim.as_ref()), ("N", self.npts.as_ref()), ("L", self.period.as_ref()), ("J", self.j.as_ref())]
    }
}

impl ComposeFlags {
    fn pairs(&self) -> Vec<(&'static str, Option<&String>)> {
        vec![
            ("p1", self.p1.as_ref()),
            ("p2", self.p2.as_ref()),
            ("terms", self.terms.as_ref()),
            ("lambda_sweep", self.lambda_sweep.as_ref()),
            ("N", self.points.as_ref()),
            ("L", self.period.as_ref()),
            ("report", self.out.as_ref()),
        ]
    }
}

type Handler = fn(&Config) -> CliResult<Outcome>;

fn resolve(cli: &Cli) -> (&'static str, Handler, &Common, Vec<(&'static str, Option<&String>)>) {
    use Command::*;
    match &cli.command {
        LpCheck { grid, f, common } => ("lp-check", commands::lp_check, common, [grid.pairs(), f.pairs()].concat()),
        Norms { grid, f, common } => ("norms", commands::norms, common, [grid.pairs(), f.pairs()].concat()),
        InterpCheck { grid, f, common } => ("interp-check", commands::interp_check, common, [grid.pairs(), f.pairs()].concat()),
        SymbolReport { grid, f, common } => ("symbol-report", commands::symbol_report, common, [grid.pairs(), f.pairs()].concat()),
        Apply { grid, f, common } => ("apply", commands::apply, common, [grid.pairs(), f.pairs()].concat()),
        Osc { f, common } => ("osc", commands::osc, common, f.pairs()),
        Compose { f, common } => ("compose", commands::compose, common, f.pairs()),
        Smooth { grid, f, common } => ("smooth", commands::smooth, common, [grid.pairs(), f.pairs()].concat()),
        Kernel { grid, f, common } => ("kernel", commands::kernel, common, [grid.pairs(), f.pairs()].concat()),
        Transform { grid, f, common } => ("transform", commands::transform, common, [grid.pairs(), f.pairs()].concat()),
        Acceptance { f, common } => ("acceptance", commands::acceptance, common, f.pairs()),
    }
}

fn build_config(common: &Common, flags: &[(&'static str, Option<&String>)]) -> CliResult<Config> {
    let mut cfg = match &common.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    for kv in &common.set {
        cfg.apply_override(kv)?;
    }
    if let Some(s) = &common.seed {
        cfg.set("seed", s.as_str());
    }
    for (k, v) in flags {
        if let Some(v) = v {
            cfg.set(k, v.as_str());
        }
    }
    Ok(cfg)
}

fn cell_json(c: &Cell) -> Value {
    match c {
        Cell::Int(i) => json!(i),
        Cell::Num(x) if x.is_finite() => json!(x),
        Cell::Num(x) => json!(pdolab::csvio::format_num(*x)),
        Cell::Text(s) => json!(s),
        Cell::Bool(b) => json!(b),
    }
}

fn to_json(cmd: &str, r: &Report, out: &Outcome) -> Value {
    let meta: Map<String, Value> = r.meta.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    let rows: Vec<Value> = r.rows.iter().map(|row| Value::Object(r.columns.iter().cloned().zip(row.iter().map(cell_json)).collect())).collect();
    let checks: Vec<Value> = out
        .checks
        .iter()
        .map(|c| json!({"check": c.name, "measured": cell_json(&Cell::Num(c.measured)), "target": c.target.describe(), "pass": c.pass}))
        .collect();
    json!({
        "command": cmd,
        "schema": r.schema,
        "version": r.version,
        "meta": meta,
        "rows": rows,
        "checks": checks,
        "pass": out.pass(),
    })
}

fn run(cli: &Cli) -> CliResult<bool> {
    let (name, handler, common, flags) = resolve(cli);
    let cfg = build_config(common, &flags)?;
    let out = handler(&cfg)?;
    if let Some(path) = cfg.get("report") {
        std::fs::write(path, out.report.to_csv()).map_err(|e| CliError::Usage(format!("cannot write {path}: {e}")))?;
    }
    if common.json {
        println!("{}", serde_json::to_string_pretty(&to_json(name, &out.report, &out)).expect("json"));
    } else if cfg.get("report").is_none() {
        print!("{}", out.report.to_csv());
    }
    for n in &out.notes {
        eprintln!("{n}");
    }
    if name != "acceptance" {
        for c in &out.checks {
            eprintln!("{} {} = {} (target {})", if c.pass { "ok  " } else { "FAIL" }, c.name, pdolab::csvio::format_num(c.measured), c.target.describe());
        }
    }
    let pass = out.pass();
    eprintln!("pdolab {name}: {}", if pass { "PASS" } else { "FAIL" });
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("pdolab: {e}");
            ExitCode::from(1)
        }
    }
}
