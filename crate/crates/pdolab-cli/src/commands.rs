//! Subcommand handlers. Each returns a data table plus the contract checks it ran.

use crate::builtins::{load_diffeo, load_symbol};
use crate::config::{usage, CliResult, Config};
use pdolab::acceptance::{report as acceptance_report, run_suite, summary_line, Target};
use pdolab::calculus::{composition_remainder, kernel_blocks, kernel_decay_report, smooth_symbol, x_derivative_constants, xi_decay_slope};
use pdolab::coord_transform::{build_cover, equivariance_residual, modulated_gaussian, principal_defect_sweep, principal_remainder, Regularity};
use pdolab::core_grid::make_torus_grid;
use pdolab::csvio::{read_grid_function, write_grid_function, write_symbol, Cell, Report};
use pdolab::function_spaces::{bessel_norm, corpus, holder_norm, interpolation_check, sup_norm, zygmund_norm};
use pdolab::littlewood_paley::{build_partition, derivative_bound_report, minimal_cover_j, LPPartition};
use pdolab::oscillatory::{builtin_amplitude, builtin_amplitudes, os_ibp, os_regularized, Cutoff, IbpConfig, OscResult, RegConfig};
use pdolab::quantize::{apply_x_form, apply_xxiy_form, apply_xyxi_form, apply_y_form, DEFAULT_CUBIC_BUDGET};
use pdolab::stats::{random_band_limited, rng_for};
use pdolab::symbols::{embed_x_as_xxiy, embed_x_as_xyxi, symbol_seminorm, SampledSymbol, SymbolForm};
use pdolab::{Grid, GridFunction};
use std::path::Path;

const VERSION: &str = "1.0.0";

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub target: Target,
    pub pass: bool,
}

pub struct Outcome {
    pub report: Report,
    pub checks: Vec<Check>,
    /// Lines for stderr.
    pub notes: Vec<String>,
}

impl Outcome {
    fn new(report: Report) -> Self {
        Outcome { report, checks: Vec::new(), notes: Vec::new() }
    }

    fn check(&mut self, name: impl Into<String>, measured: f64, target: Target) {
        let pass = target.check(measured);
        self.checks.push(Check { name: name.into(), measured, target, pass });
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn grid(cfg: &Config, default_n: usize) -> CliResult<Grid> {
    let n = cfg.usize_or("n", 1)?;
    let npts = cfg.usize_or("N", default_n)?;
    let period = cfg.f64_or("L", 2.0 * std::f64::consts::PI)?;
    Ok(make_torus_grid(n, npts, period)?)
}

fn partition(cfg: &Config, g: &Grid) -> CliResult<LPPartition> {
    let j = cfg.opt_usize("J")?.unwrap_or_else(|| minimal_cover_j(g));
    Ok(build_partition(g, j)?)
}

fn input(cfg: &Config) -> CliResult<GridFunction> {
    let path = cfg.require("input")?;
    if !Path::new(path).exists() {
        return usage(format!("input file {path} does not exist"));
    }
    Ok(read_grid_function(Path::new(path))?)
}

fn one_d(g: &Grid, what: &str) -> CliResult<()> {
    if g.dim() != 1 {
        return usage(format!("{what} is implemented for n = 1 only"));
    }
    Ok(())
}

pub fn lp_check(cfg: &Config) -> CliResult<Outcome> {
    let g = grid(cfg, 128)?;
    let part = partition(cfg, &g)?;
    let rows = derivative_bound_report(&part, 3)?;
    let mut rep = Report::new("lp-check", VERSION, &["order", "j", "ratio"]).meta("n", g.dim()).meta("N", g.points_per_axis()).meta("J", part.j_max);
    for r in &rows {
        rep.push(vec![r.order.into(), r.j.into(), r.ratio.into()]);
    }
    let mut out = Outcome::new(rep);
    out.check("unity deviation", part.unity_deviation(), Target::AtMost(1e-14));
    out.check("neighbor identity", part.neighbor_deviation(), Target::AtMost(1e-14));
    out.check("telescoping identity", part.telescoping_deviation(), Target::AtMost(1e-12));
    out.check("support violations", part.support_violations() as f64, Target::AtMost(0.0));
    for r in &rows {
        if !r.ratio.is_finite() {
            out.check(format!("derivative ratio order {} j {}", r.order, r.j), r.ratio, Target::Finite);
        }
    }
    Ok(out)
}

pub fn norms(cfg: &Config) -> CliResult<Outcome> {
    let u = input(cfg)?;
    let kinds = cfg.str_or("kind", "sup,holder,zygmund,bessel");
    let mut rep = Report::new("norms", VERSION, &["kind", "params", "value"]).meta("n", u.grid.dim()).meta("N", u.grid.points_per_axis());
    let mut values = Vec::new();
    for kind in kinds.split(',').map(str::trim) {
        let (params, v) = match kind {
            "sup" => (String::new(), sup_norm(&u).value),
            "holder" => {
                let t = cfg.usize_or("t", 0)?;
                let theta = cfg.f64_or("theta", 0.5)?;
                (format!("t={t} theta={theta}"), holder_norm(&u, t, theta)?.value)
            }
            "zygmund" => {
                let tau = cfg.f64_or("tau", 0.5)?;
                let part = partition(cfg, &u.grid)?;
                (format!("tau={tau} J={}", part.j_max), zygmund_norm(&u, tau, &part)?.value)
            }
            "bessel" => {
                let s = cfg.f64_or("s", 1.0)?;
                let q = cfg.f64_or("q", 2.0)?;
                (format!("s={s} q={q}"), bessel_norm(&u, s, q)?.value)
            }
            other => return usage(format!("unknown norm kind '{other}'; known: sup, holder, zygmund, bessel")),
        };
        rep.push(vec![kind.into(), params.into(), v.into()]);
        values.push((kind.to_string(), v));
    }
    let mut out = Outcome::new(rep);
    for (k, v) in values {
        out.check(format!("{k} norm"), v, Target::Finite);
    }
    Ok(out)
}

pub fn interp_check(cfg: &Config) -> CliResult<Outcome> {
    let t = cfg.usize_or("t", 0)?;
    let theta = cfg.f64_or("theta", 0.5)?;
    let k = cfg.usize_or("k", 1)?;
    let vartheta = cfg.f64_or("vartheta", 0.0)?;
    let members = match cfg.get("input") {
        Some(p) => vec![(p.to_string(), input(cfg)?)],
        None => corpus(&grid(cfg, 128)?)?,
    };
    let mut rep = Report::new("interp-check", VERSION, &["name", "lambda", "lower", "sup", "upper", "ratio"]).meta("t", t).meta("theta", theta).meta("k", k).meta("vartheta", vartheta);
    let mut worst: f64 = 0.0;
    for (name, u) in &members {
        let r = interpolation_check(u, t, theta, k, vartheta)?;
        rep.push(vec![name.clone().into(), r.lambda.into(), r.lower.into(), r.sup.into(), r.upper.into(), r.ratio.into()]);
        worst = if r.ratio.is_finite() { worst.max(r.ratio) } else { f64::INFINITY };
    }
    let mut out = Outcome::new(rep);
    out.check("max interpolation ratio", worst, Target::Finite);
    Ok(out)
}

pub fn symbol_report(cfg: &Config) -> CliResult<Outcome> {
    let g = grid(cfg, 64)?;
    let p = load_symbol(cfg.require("symbol")?, &g)?;
    let l = cfg.usize_or("l", 2)?;
    let default_t = if p.class.tau.is_finite() { p.class.tau.min(4.0) } else { 1.0 };
    let t = cfg.f64_or("t", default_t)?;
    let r = symbol_seminorm(&p, l, t)?;
    let c = r.class;
    let mut rep = Report::new("symbol-report", VERSION, &["alpha", "kind", "value", "growth_slope"])
        .meta("m", c.order)
        .meta("rho", c.rho)
        .meta("delta", c.delta)
        .meta("tau", c.tau)
        .meta("l", l)
        .meta("t", t)
        .meta("total", pdolab::csvio::format_num(r.total));
    for e in &r.entries {
        let alpha = e.alpha.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(";");
        rep.push(vec![alpha.into(), e.kind.name().into(), e.value.into(), e.growth_slope.into()]);
    }
    let mut out = Outcome::new(rep);
    out.check("seminorm total", r.total, Target::Finite);
    out.check("max shell growth slope", r.max_growth_slope(), Target::AtMost(0.2));
    Ok(out)
}

pub fn apply(cfg: &Config) -> CliResult<Outcome> {
    let u = input(cfg)?;
    let p = load_symbol(cfg.require("symbol")?, &u.grid)?;
    let form = cfg.str_or("form", "x");
    let v = match (form, p.form) {
        ("x", _) => apply_x_form(&p, &u)?,
        ("y", _) => apply_y_form(&p, &u)?,
        ("xxiy", SymbolForm::X) => apply_xxiy_form(&embed_x_as_xxiy(&p)?, &u, DEFAULT_CUBIC_BUDGET)?,
        ("xxiy", _) => apply_xxiy_form(&p, &u, DEFAULT_CUBIC_BUDGET)?,
        ("xyxi", f) => {
            let q = if f == SymbolForm::X { embed_x_as_xyxi(&p)? } else { p.clone() };
            let part = partition(cfg, &u.grid)?;
            apply_xyxi_form(&q, &u, &part, part.j_max, DEFAULT_CUBIC_BUDGET)?.value
        }
        (other, _) => return usage(format!("unknown form '{other}'; known: x, y, xxiy, xyxi")),
    };
    if let Some(path) = cfg.get("out") {
        write_grid_function(Path::new(path), &v)?;
    }
    let mut rep = Report::new("apply", VERSION, &["form", "symbol_form", "max_abs_in", "max_abs_out", "l2_in", "l2_out"]);
    rep.push(vec![form.into(), p.form.name().into(), u.max_abs().into(), v.max_abs().into(), u.l2_norm().into(), v.l2_norm().into()]);
    let mut out = Outcome::new(rep);
    out.check("output finite", if v.is_finite() { v.max_abs() } else { f64::NAN }, Target::Finite);
    if cfg.get("out").is_none() {
        out.notes.push("no --out given; the output function was not written".into());
    }
    Ok(out)
}

fn trace_rows(rep: &mut Report, r: &OscResult) {
    for t in &r.trace {
        rep.push(vec![r.method.name().into(), t.param.into(), t.param2.into(), t.value.re.into(), t.value.im.into()]);
    }
}

pub fn osc(cfg: &Config) -> CliResult<Outcome> {
    let arg = cfg.str_or("amplitude", "builtin:gauss");
    let name = arg.strip_prefix("builtin:").unwrap_or(arg);
    let (a, exact) = builtin_amplitude(name).map_err(|_| {
        let known: Vec<String> = builtin_amplitudes().into_iter().map(|(a, _)| a.name).collect();
        crate::config::CliError::Usage(format!("unknown amplitude '{name}'; known: {}", known.join(", ")))
    })?;
    let method = cfg.str_or("method", "both");
    let cutoff = match cfg.str_or("cutoff", "bump") {
        "gaussian" => Cutoff::Gaussian,
        "bump" => Cutoff::ProductBump,
        other => return usage(format!("unknown cutoff '{other}'; known: gaussian, bump")),
    };
    let ibp_cfg = IbpConfig {
        l: cfg.usize_or("l", 3)?,
        l_prime: cfg.usize_or("l_prime", 3)?,
        r: cfg.f64_or("r", 32.0)?,
        nodes: cfg.usize_or("nodes", 1025)?,
    };
    let (reg, ibp) = match method {
        "reg" => (Some(os_regularized(&a, &RegConfig::with_cutoff(cutoff))?), None),
        "ibp" => (None, Some(os_ibp(&a, &ibp_cfg)?)),
        "both" => (Some(os_regularized(&a, &RegConfig::with_cutoff(cutoff))?), Some(os_ibp(&a, &ibp_cfg)?)),
        other => return usage(format!("unknown method '{other}'; known: reg, ibp, both")),
    };
    let mut rep = Report::new("osc-trace", VERSION, &["method", "param", "param2", "re", "im"]).meta("amplitude", name);
    for r in reg.iter().chain(ibp.iter()) {
        trace_rows(&mut rep, r);
        rep = rep.meta(&format!("value_{}_re", r.method.name()), pdolab::csvio::format_num(r.value.re)).meta(&format!("value_{}_im", r.method.name()), pdolab::csvio::format_num(r.value.im));
    }
    let mut out = Outcome::new(rep);
    if let Some(r) = &reg {
        out.check("regularized Cauchy increment", r.achieved_tol, Target::AtMost(1e-5 * (1.0 + r.value.norm())));
    }
    if let (Some(r), Some(i)) = (&reg, &ibp) {
        out.check("regularized vs integration by parts", (r.value - i.value).norm(), Target::AtMost(1e-4));
    }
    if let Some(e) = exact {
        for r in reg.iter().chain(ibp.iter()) {
            out.check(format!("{} vs exact", r.method.name()), (r.value - e).norm(), Target::AtMost(1e-4));
        }
    }
    for r in reg.iter().chain(ibp.iter()) {
        out.notes.push(format!("{}: {:.10} {:+.10}i", r.method.name(), r.value.re, r.value.im));
    }
    Ok(out)
}

pub fn compose(cfg: &Config) -> CliResult<Outcome> {
    let g = grid(cfg, 256)?;
    one_d(&g, "compose")?;
    let p1 = load_symbol(cfg.str_or("p1", "builtin:bracket:1"), &g)?;
    let p2 = load_symbol(cfg.str_or("p2", "builtin:modulated_bracket:-1"), &g)?;
    let n = cfg.usize_or("terms", 2)?;
    let ks = cfg.list_i64_or("lambda_sweep", &[8, 16, 32, 64])?;
    let r = composition_remainder(&p1, &p2, n, &ks)?;
    let mut rep = Report::new("compose", VERSION, &["k", "lambda", "residual"]).meta("terms", n).meta("slope", pdolab::csvio::format_num(r.slope)).meta("bound", r.bound);
    for (k, res) in r.wavenumbers.iter().zip(&r.residuals) {
        rep.push(vec![(*k).into(), (*k as f64 * g.dxi()).into(), (*res).into()]);
    }
    let mut out = Outcome::new(rep);
    let measured = if r.residuals.iter().all(|&x| x <= r.floor) { f64::NEG_INFINITY } else { r.slope };
    out.check(format!("remainder slope, bound {}", r.bound), measured, Target::AtMost(r.bound + 0.2));
    Ok(out)
}

pub fn smooth(cfg: &Config) -> CliResult<Outcome> {
    let g = grid(cfg, 256)?;
    let p = load_symbol(cfg.str_or("symbol", "builtin:cusp"), &g)?;
    let part = partition(cfg, &p.grid)?;
    let gamma = cfg.f64_or("gamma", 0.8)?;
    let s = smooth_symbol(&p, gamma, &part)?;
    if let Some(path) = cfg.get("sharp") {
        write_symbol(Path::new(path), &s.sharp)?;
    }
    if let Some(path) = cfg.get("flat") {
        write_symbol(Path::new(path), &s.flat)?;
    }
    let split = s.sharp.values.iter().zip(&s.flat.values).zip(&p.values).map(|((a, b), c)| (a + b - c).norm()).fold(0.0, f64::max);
    let slope = xi_decay_slope(&s.flat)?;
    let bound = s.flat.class.order;
    let consts = x_derivative_constants(&s.sharp, 3)?;
    let mut rep = Report::new("smooth", VERSION, &["quantity", "value"]).meta("gamma", gamma).meta("flat_order", bound);
    rep.push(vec!["split defect".into(), split.into()]);
    rep.push(vec!["flat decay slope".into(), slope.into()]);
    for (b, c) in consts.iter().enumerate() {
        rep.push(vec![format!("sharp x-derivative constant {b}").into(), (*c).into()]);
    }
    let mut out = Outcome::new(rep);
    out.check("p = p_sharp + p_flat", split, Target::AtMost(1e-14));
    out.check(format!("flat decay slope, order {bound}"), slope, Target::AtMost(bound + 0.2));
    for (b, c) in consts.iter().enumerate() {
        out.check(format!("sharp x-derivative constant {b}"), *c, Target::Finite);
    }
    Ok(out)
}

fn direct_apply(p: &SampledSymbol, u: &GridFunction) -> CliResult<Option<GridFunction>> {
    Ok(match p.form {
        SymbolForm::X => Some(apply_x_form(p, u)?),
        SymbolForm::XXiY => Some(apply_xxiy_form(p, u, DEFAULT_CUBIC_BUDGET)?),
        _ => None,
    })
}

pub fn kernel(cfg: &Config) -> CliResult<Outcome> {
    let g = grid(cfg, 1024)?;
    one_d(&g, "kernel")?;
    let p = load_symbol(cfg.str_or("symbol", "builtin:identity"), &g)?;
    let part = partition(cfg, &p.grid)?;
    let kb = kernel_blocks(&p, &part)?;
    let moments = cfg.list_u32_or("moments", &[2, 4])?;
    let window = (cfg.f64_or("zmin", 8.0 * g.dx())?, cfg.f64_or("zmax", g.period() / 4.0)?);
    let r = kernel_decay_report(&kb, &moments, window)?;
    let mut cols = vec!["j".to_string(), "sup".to_string()];
    cols.extend(moments.iter().map(|m| format!("moment_{m}")));
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut rep = Report::new("kernel", VERSION, &cols).meta("sup_slope", pdolab::csvio::format_num(r.sup_slope)).meta("summed_z_slope", pdolab::csvio::format_num(r.summed_z_slope));
    for row in &r.rows {
        let mut cells: Vec<Cell> = vec![row.j.into(), row.sup.into()];
        cells.extend(row.moments.iter().map(|&v| Cell::from(v)));
        rep.push(cells);
    }
    let mut out = Outcome::new(rep);
    for (k, m) in moments.iter().enumerate() {
        out.check(format!("moment slope M={m} minus bound {}", r.moment_bounds[k]), r.moment_slopes[k] - r.moment_bounds[k], Target::AtMost(0.3));
    }
    let mut rng = rng_for(cfg.u64_or("seed", 7)?, 0);
    let u = random_band_limited(&g, 8, &mut rng);
    if let Some(direct) = direct_apply(&p, &u)? {
        let scale = 1.0 + direct.max_abs();
        out.check("kernel reconstruction", kb.apply(&u, None)?.max_diff(&direct) / scale, Target::AtMost(1e-8));
    }
    Ok(out)
}

pub fn transform(cfg: &Config) -> CliResult<Outcome> {
    let check = cfg.str_or("check", "equivariance");
    let (symbol, diffeo, npts, sigma) = match check {
        "equivariance" => ("builtin:variable_derivative", "builtin:sine:0.1", 128, 0.15),
        "principal" => ("builtin:weighted_bracket", "builtin:sine:0.1", 128, 0.3),
        "defect" => ("builtin:order_zero", "builtin:c1theta:0.5", 1024, 0.15),
        other => return usage(format!("unknown check '{other}'; known: equivariance, principal, defect")),
    };
    let g = grid(cfg, npts)?;
    one_d(&g, "transform")?;
    let p = load_symbol(cfg.str_or("symbol", symbol), &g)?;
    let l = g.period();
    let h = load_diffeo(cfg.str_or("diffeo", diffeo), l)?;
    let sigma = cfg.f64_or("sigma", sigma)?;
    let centre = cfg.f64_or("center", l / 2.0)?;
    let margin = cfg.f64_or("margin", 0.3)?;
    let r = cfg.f64_or("r", 0.5)?;
    let q = cfg.usize_or("q", 16)?;
    let cover = build_cover(r, (margin, l - margin))?;
    let mut out;
    if check == "equivariance" {
        let ks = cfg.list_i64_or("k", &[3])?;
        let mut rep = Report::new("transform", VERSION, &["k", "residual", "residual_plain"]).meta("check", check).meta("chart", &h.name).meta("r", r).meta("q", q);
        let mut worst: f64 = 0.0;
        for &k in &ks {
            let e = equivariance_residual(&p, &h, &cover, &modulated_gaussian(&g, centre, sigma, k), q)?;
            rep.push(vec![k.into(), e.residual.into(), e.residual_plain.into()]);
            worst = worst.max(e.residual);
        }
        let tol = cfg.f64_or("tol", if h.name == "identity" { 1e-10 } else { 1e-2 })?;
        out = Outcome::new(rep);
        out.check("equivariance residual", worst, Target::AtMost(tol));
        return Ok(out);
    }
    let principal = check == "principal";
    let sweep = cfg.list_i64_or("lambda_sweep", if principal { &[4, 8, 16, 32] } else { &[16, 32, 64, 128, 256] })?;
    let s = if principal { principal_remainder(&p, &h, &cover, q, (centre, sigma), &sweep)? } else { principal_defect_sweep(&p, &h, (centre, sigma), &sweep)? };
    let target = match (principal, h.regularity) {
        (false, Regularity::C1Theta(theta)) => p.class.order - theta,
        _ => p.class.order - 1.0,
    };
    let floor = cfg.f64_or("floor", 1e-6)?;
    let mut rep = Report::new("transform", VERSION, &["k", "lambda", "residual"]).meta("check", check).meta("chart", &h.name).meta("slope", pdolab::csvio::format_num(s.slope)).meta("floor", floor);
    for (k, v) in s.wavenumbers.iter().zip(&s.residuals) {
        rep.push(vec![(*k).into(), (*k as f64 * g.dxi()).into(), (*v).into()]);
    }
    out = Outcome::new(rep);
    if s.residuals.iter().all(|&v| v <= floor) {
        out.notes.push(format!("all residuals below the floor {floor}; slope not tested"));
        out.check("max residual", s.residuals.iter().cloned().fold(0.0, f64::max), Target::AtMost(floor));
    } else {
        out.check(format!("{check} lambda slope, predicted {target}"), s.slope, Target::AtMost(target + 0.2));
    }
    Ok(out)
}

pub fn acceptance(cfg: &Config) -> CliResult<Outcome> {
    let suite = cfg.str_or("suite", "all");
    let seed = cfg.u64_or("seed", 7)?;
    let results = run_suite(suite, seed).map_err(|e| crate::config::CliError::Usage(e.to_string()))?;
    let mut out = Outcome::new(acceptance_report(&results, seed));
    for c in &results {
        out.notes.push(summary_line(c));
        out.checks.push(Check { name: format!("criterion {} {}", c.id, c.suite), measured: c.runtime_s, target: Target::AtMost(c.budget_s), pass: c.passed() });
    }
    let passed = results.iter().filter(|c| c.passed()).count();
    out.notes.push(format!("{passed} of {} criteria passed", results.len()));
    Ok(out)
}
