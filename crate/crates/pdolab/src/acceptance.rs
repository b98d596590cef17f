//! Acceptance suites: one per criterion, each a list of measured quantities against targets.
//!
//! Randomized inputs draw from `stats::rng_for(seed, stream)`, so a fixed seed reproduces
//! every row. Runtimes are kept out of the CSV so that reports are byte-identical.

use crate::calculus::{composition_remainder, compose_leibniz, disjoint_support_check, kernel_blocks, kernel_decay_report, mollifier_rate, remainder_apply, smooth_symbol, x_derivative_constants, xi_decay_slope};
use crate::coord_transform::{build_cover, cover_report, equivariance_residual, equivariance_with, modulated_gaussian, principal_defect_sweep, principal_remainder, pullback_principal, xi_h, Diffeomorphism};
use crate::core_grid::{forward_transform, inverse_transform, make_torus_grid, peetre_max_violation, spectral_derivative, Grid, GridFunction, C64};
use crate::csvio::{Cell, Report};
use crate::error::{Error, Result};
use crate::function_spaces::{bessel_norm, corpus, interpolation_check, zygmund_holder_equivalence};
use crate::littlewood_paley::{base_g, build_partition, derivative_bound_constants, derivative_bound_report, minimal_cover_j};
use crate::oscillatory::{builtin_amplitude, builtin_amplitudes, d_amplitude, inversion_check, os_ibp, os_regularized, times_eta, times_y, Cutoff, IbpConfig, RegConfig};
use crate::quantize::{adjoint_check, apply_x_form, apply_xxiy_form, apply_xyxi_form, plane_wave_gain, symbol_from_operator, DEFAULT_CUBIC_BUDGET};
use crate::stats::{random_band_limited, rng_for};
use crate::symbols::{bracket_symbol, differential_symbol, embed_x_as_xxiy, ClosedForm, SampledSymbol, SymbolClass, SymbolForm};
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

pub const REPORT_VERSION: &str = "1.0.0";

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Target {
    AtMost(f64),
    AtLeast(f64),
    Below(f64),
    Within { center: f64, tol: f64 },
    Finite,
}

impl Target {
    pub fn check(&self, v: f64) -> bool {
        match *self {
            Target::AtMost(t) => v <= t,
            Target::AtLeast(t) => v >= t,
            Target::Below(t) => v < t,
            Target::Within { center, tol } => (v - center).abs() <= tol,
            Target::Finite => v.is_finite(),
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            Target::AtMost(t) => format!("<= {t:e}"),
            Target::AtLeast(t) => format!(">= {t:e}"),
            Target::Below(t) => format!("< {t:e}"),
            Target::Within { center, tol } => format!("{center} +- {tol}"),
            Target::Finite => "finite".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub check: String,
    pub measured: f64,
    pub target: Target,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct CriterionResult {
    pub id: usize,
    pub suite: &'static str,
    pub title: &'static str,
    pub rows: Vec<Row>,
    pub runtime_s: f64,
    pub budget_s: f64,
    /// Set when the suite could not run to completion.
    pub error: Option<String>,
}

impl CriterionResult {
    pub fn contracts_pass(&self) -> bool {
        self.error.is_none() && !self.rows.is_empty() && self.rows.iter().all(|r| r.pass)
    }

    pub fn within_budget(&self) -> bool {
        self.runtime_s <= self.budget_s
    }

    pub fn passed(&self) -> bool {
        self.contracts_pass() && self.within_budget()
    }
}

pub struct SuiteInfo {
    pub id: usize,
    pub name: &'static str,
    pub title: &'static str,
    pub budget_s: f64,
}

pub const SUITES: [SuiteInfo; 12] = [
    SuiteInfo { id: 1, name: "core", title: "Fourier core", budget_s: 1.0 },
    SuiteInfo { id: 2, name: "littlewood_paley", title: "Littlewood-Paley partition", budget_s: 5.0 },
    SuiteInfo { id: 3, name: "peetre", title: "Peetre inequality", budget_s: 5.0 },
    SuiteInfo { id: 4, name: "quantization", title: "Quantization identities", budget_s: 30.0 },
    SuiteInfo { id: 5, name: "oscillatory", title: "Oscillatory integrals", budget_s: 120.0 },
    SuiteInfo { id: 6, name: "smoothing", title: "Symbol smoothing", budget_s: 60.0 },
    SuiteInfo { id: 7, name: "composition", title: "Composition", budget_s: 120.0 },
    SuiteInfo { id: 8, name: "kernels", title: "Kernels", budget_s: 120.0 },
    SuiteInfo { id: 9, name: "transform", title: "Coordinate transform", budget_s: 300.0 },
    SuiteInfo { id: 10, name: "nonsmooth", title: "Non-smooth regime", budget_s: 300.0 },
    SuiteInfo { id: 11, name: "function_spaces", title: "Function spaces", budget_s: 60.0 },
    SuiteInfo { id: 12, name: "determinism", title: "Determinism", budget_s: f64::INFINITY },
];

pub fn suite_names() -> Vec<&'static str> {
    SUITES.iter().map(|s| s.name).collect()
}

struct Rows(Vec<Row>);

impl Rows {
    fn add(&mut self, check: impl Into<String>, measured: f64, target: Target) {
        let pass = target.check(measured);
        self.0.push(Row { check: check.into(), measured, target, pass });
    }
}

fn grid1(npts: usize) -> Result<Grid> {
    make_torus_grid(1, npts, 2.0 * PI)
}

fn x_symbol(g: &Grid, class: SymbolClass, f: impl Fn(f64, f64) -> C64 + Send + Sync + 'static) -> Result<SampledSymbol> {
    SampledSymbol::sample(g, SymbolForm::X, class, ClosedForm::new(move |x, xi, _| f(x[0], xi[0])))
}

fn random_x_symbol(g: &Grid, seed: u64, stream: u64, kx: i64) -> Result<SampledSymbol> {
    let mut rng = rng_for(seed, stream);
    let n = g.len();
    let mut values = vec![C64::new(0.0, 0.0); n * n];
    for c in 0..n {
        let col = random_band_limited(g, kx, &mut rng);
        for ix in 0..n {
            values[ix * n + c] = col.values[ix];
        }
    }
    SampledSymbol::new(g, SymbolForm::X, values, SymbolClass::smooth(0.0))
}

fn cusp(x: f64) -> f64 {
    (x / 2.0).sin().abs().sqrt()
}

fn core(seed: u64, out: &mut Rows) -> Result<()> {
    let grids = [grid1(64)?, make_torus_grid(2, 32, 2.0 * PI)?];
    let (mut trip, mut planch) = (0.0f64, 0.0f64);
    for t in 0..100u64 {
        let g = &grids[(t % 2) as usize];
        let u = random_band_limited(g, g.points_per_axis() as i64, &mut rng_for(seed, 100 + t));
        let v = forward_transform(&u)?;
        let back = inverse_transform(&v)?;
        trip = trip.max(back.max_diff(&u) / u.max_abs());
        let lhs = u.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * g.cell_volume();
        let rhs = v.values.iter().map(|z| z.norm_sqr()).sum::<f64>() / g.volume();
        planch = planch.max((lhs - rhs).abs() / lhs);
    }
    out.add("round trip, 100 random inputs (relative)", trip, Target::AtMost(1e-12));
    out.add("Plancherel, 100 random inputs (relative)", planch, Target::AtMost(1e-12));
    Ok(())
}

fn littlewood_paley(out: &mut Rows) -> Result<()> {
    let mut consts = Vec::new();
    for npts in [64, 128] {
        let g = grid1(npts)?;
        let part = build_partition(&g, minimal_cover_j(&g))?;
        out.add(format!("unity deviation, N={npts}"), part.unity_deviation(), Target::AtMost(1e-14));
        out.add(format!("neighbor identity, N={npts}"), part.neighbor_deviation(), Target::AtMost(1e-14));
        consts.push(derivative_bound_constants(&derivative_bound_report(&part, 3)?));
    }
    let g2 = make_torus_grid(2, 32, 2.0 * PI)?;
    let part2 = build_partition(&g2, minimal_cover_j(&g2))?;
    out.add("unity deviation, 2-D N=32", part2.unity_deviation(), Target::AtMost(1e-14));
    out.add("neighbor identity, 2-D N=32", part2.neighbor_deviation(), Target::AtMost(1e-14));
    for a in 0..consts[0].len() {
        out.add(format!("derivative constant |alpha|={a}, N=128"), consts[1][a], Target::Finite);
        out.add(format!("derivative constant |alpha|={a}, N=128/N=64 - 1"), consts[1][a] / consts[0][a] - 1.0, Target::Within { center: 0.0, tol: 0.3 });
    }
    Ok(())
}

fn peetre(out: &mut Rows) -> Result<()> {
    let g = grid1(64)?;
    for s in [-2.0, -0.5, 0.5, 1.0, 3.0] {
        out.add(format!("max violation, s={s}"), peetre_max_violation(&g, s), Target::AtMost(1e-13));
    }
    Ok(())
}

fn quantization(seed: u64, out: &mut Rows) -> Result<()> {
    let g = grid1(64)?;
    let u = random_band_limited(&g, 31, &mut rng_for(seed, 400));
    let id = bracket_symbol(&g, 0.0)?;
    out.add("p = 1 gives the identity", apply_x_form(&id, &u)?.max_diff(&u), Target::AtMost(1e-12));
    let one = GridFunction::from_real_fn(&g, |_| 1.0);
    let d = differential_symbol(&g, &[(vec![1], one)], f64::INFINITY)?;
    let du = spectral_derivative(&u, &[1])?;
    out.add("p = i xi gives the spectral derivative (relative)", apply_x_form(&d, &u)?.max_diff(&du) / du.max_abs(), Target::AtMost(1e-12));

    let p = random_x_symbol(&g, seed, 401, 12)?;
    let mut eig: f64 = 0.0;
    for c in 0..g.len() {
        let e = GridFunction::plane_wave(&g, &[g.k_axis(c)]);
        let pe = apply_x_form(&p, &e)?;
        for ix in 0..g.len() {
            eig = eig.max((pe.values[ix] - p.x_value(ix, c) * e.values[ix]).norm());
        }
    }
    out.add("plane-wave eigen-relation", eig, Target::AtMost(1e-12));

    let ga = grid1(32)?;
    let mut adj: f64 = 0.0;
    for t in 0..50u64 {
        let p = random_x_symbol(&ga, seed, 1000 + 3 * t, 10)?;
        let u = random_band_limited(&ga, 15, &mut rng_for(seed, 1001 + 3 * t));
        let v = random_band_limited(&ga, 15, &mut rng_for(seed, 1002 + 3 * t));
        adj = adj.max(adjoint_check(&p, &u, &v)?.relative());
    }
    out.add("adjoint residual / (|u||v|), 50 triples", adj, Target::AtMost(1e-10));

    let rec = symbol_from_operator(&|w| apply_x_form(&p, w), &g, SymbolClass::smooth(0.0))?;
    out.add("symbol_from_operator round trip", rec.max_diff(&p), Target::AtMost(1e-10));
    Ok(())
}

fn oscillatory(out: &mut Rows) -> Result<()> {
    let bump = RegConfig::with_cutoff(Cutoff::ProductBump);
    let gauss = RegConfig::default();
    let (mut spread, mut ibp, mut exact_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (a, exact) in builtin_amplitudes() {
        let g = os_regularized(&a, &gauss)?;
        let b = os_regularized(&a, &bump)?;
        spread = spread.max((g.value - b.value).norm());
        if let Some(e) = exact {
            exact_err = exact_err.max((b.value - e).norm());
        }
        ibp = ibp.max((os_ibp(&a, &IbpConfig::default())?.value - b.value).norm());
    }
    out.add("cutoff spread, 2 cutoffs x 6 amplitudes", spread, Target::AtMost(1e-5));
    out.add("regularized vs exact values", exact_err, Target::AtMost(1e-5));
    out.add("regularized vs integration by parts", ibp, Target::AtMost(1e-4));
    let mut inv: f64 = 0.0;
    for x in [-0.7, 0.0, 0.4, 1.1, 2.0] {
        let a = Arc::new(|t: f64| C64::new((t + 0.3).cos(), 0.0));
        inv = inv.max(inversion_check(a, 1.0, x, &gauss)?.residual);
    }
    out.add("inversion formula, 5 probe points", inv, Target::AtMost(1e-4));
    let mut parts: f64 = 0.0;
    for name in ["gauss", "bracket_m2", "plane_bracket"] {
        let (a, _) = builtin_amplitude(name)?;
        let l = os_regularized(&times_y(&a)?, &bump)?.value;
        let r = os_regularized(&d_amplitude(&a, false)?, &bump)?.value;
        parts = parts.max((l - r).norm());
        let l = os_regularized(&times_eta(&a)?, &bump)?.value;
        let r = os_regularized(&d_amplitude(&a, true)?, &bump)?.value;
        parts = parts.max((l - r).norm());
    }
    out.add("partial-integration identities", parts, Target::AtMost(1e-4));
    Ok(())
}

fn smoothing(out: &mut Rows) -> Result<()> {
    let g = grid1(256)?;
    let part = build_partition(&g, minimal_cover_j(&g))?;
    let p = x_symbol(&g, SymbolClass::holder(0.0, 0.5), |x, _| C64::new(cusp(x), 0.0))?;
    let s = smooth_symbol(&p, 0.8, &part)?;
    let split = s.sharp.values.iter().zip(&s.flat.values).zip(&p.values).map(|((a, b), c)| (a + b - c).norm()).fold(0.0, f64::max);
    out.add("p = p_sharp + p_flat", split, Target::AtMost(1e-14));
    let u = GridFunction::from_real_fn(&g, |x| cusp(x[0]));
    let eps: Vec<f64> = (1..=4).map(|k| 2f64.powi(-k)).collect();
    out.add("J_eps rate on the 1/2-cusp", mollifier_rate(&u, &eps)?.slope, Target::Within { center: 0.5, tol: 0.15 });
    let bound = 0.0 - (0.8 - 0.0) * 0.5;
    out.add("p_flat order slope (gamma=0.8, delta=0, tau=0.5)", xi_decay_slope(&s.flat)?, Target::AtMost(bound + 0.2));
    let c = x_derivative_constants(&s.sharp, 3)?;
    for (b, v) in c.iter().enumerate() {
        out.add(format!("p_sharp x-derivative constant, order {b}"), *v, Target::Finite);
    }
    Ok(())
}

fn composition(out: &mut Rows) -> Result<()> {
    let g = grid1(64)?;
    let p1 = bracket_symbol(&g, 1.0)?;
    let p2 = x_symbol(&g, SymbolClass::smooth(-1.0), |x, xi| C64::from_polar(1.0, x) / (1.0 + xi * xi).sqrt())?;
    let c0 = compose_leibniz(&p1, &p2, 0)?;
    out.add("N=0 equals the product", c0.max_diff(&p1.product(&p2)?), Target::AtMost(0.0));

    let sin = GridFunction::from_real_fn(&g, |x| x[0].sin());
    let cos = GridFunction::from_real_fn(&g, |x| x[0].cos());
    let one = GridFunction::from_real_fn(&g, |_| 1.0);
    let d = differential_symbol(&g, &[(vec![1], one)], f64::INFINITY)?;
    let s = differential_symbol(&g, &[(vec![0], sin)], f64::INFINITY)?;
    let c = compose_leibniz(&d, &s, 0)?;
    let mut comm: f64 = 0.0;
    for k in [-20i64, -3, 0, 5, 17] {
        let u = GridFunction::plane_wave(&g, &[k]);
        comm = comm.max(remainder_apply(&d, &s, &c, &u)?.max_diff(&cos.mul(&u)));
    }
    out.add("[d, sin x] remainder equals cos x", comm, Target::AtMost(1e-10));

    let g = grid1(256)?;
    let p1 = bracket_symbol(&g, 1.0)?;
    let p2 = x_symbol(&g, SymbolClass::smooth(-1.0), |x, xi| C64::from_polar(1.0, x) / (1.0 + xi * xi).sqrt())?;
    let ks = [8, 16, 32, 64];
    let mut prev: Option<f64> = None;
    for n in 0..=2 {
        let r = composition_remainder(&p1, &p2, n, &ks)?;
        out.add(format!("remainder slope, N={n}"), r.slope, Target::AtMost(r.bound + 0.2));
        if let Some(p) = prev {
            out.add(format!("slope improvement, N={} to N={n}", n - 1), p - r.slope, Target::AtLeast(0.8));
        }
        prev = Some(r.slope);
    }
    Ok(())
}

fn kernels(out: &mut Rows) -> Result<()> {
    let g = grid1(32)?;
    let part = build_partition(&g, minimal_cover_j(&g))?;
    let cf = ClosedForm::new(|x, xi, y| C64::new((1.0 + 0.3 * x[0].cos()) * (1.0 + 0.2 * y[0].sin()), 0.0) * (1.0 + xi[0] * xi[0]).sqrt());
    let p = SampledSymbol::sample(&g, SymbolForm::XXiY, SymbolClass::smooth(1.0), cf)?;
    let u = GridFunction::from_real_fn(&g, |x| if (x[0] - PI).abs() < PI / 4.0 { (x[0] * 3.0).sin() } else { 0.0 });
    let direct = apply_xxiy_form(&p, &u, DEFAULT_CUBIC_BUDGET)?;
    out.add("kernel reconstruction, (x,xi,y)-form", kernel_blocks(&p, &part)?.apply(&u, None)?.max_diff(&direct), Target::AtMost(1e-8));

    let g = grid1(1024)?;
    let part = build_partition(&g, minimal_cover_j(&g))?;
    let kb = kernel_blocks(&bracket_symbol(&g, 0.0)?, &part)?;
    let rep = kernel_decay_report(&kb, &[2, 4], (8.0 * g.dx(), g.period() / 4.0))?;
    for (k, m) in [2usize, 4].iter().enumerate() {
        out.add(format!("moment slope M={m} minus bound {}", rep.moment_bounds[k]), rep.moment_slopes[k] - rep.moment_bounds[k], Target::Within { center: 0.0, tol: 0.3 });
    }
    let bump = |c: f64| GridFunction::from_real_fn(&g, move |x| base_g(1.0 - (x[0] - c).abs() / 1.2));
    let q = x_symbol(&g, SymbolClass::smooth(2.0), |x, xi| C64::new((1.0 + 0.3 * x.cos()) * xi * xi * xi / (1.0 + xi * xi).sqrt(), 0.0))?;
    let r = disjoint_support_check(&bump(PI / 2.0), &bump(3.0 * PI / 2.0), &q, &[16, 32, 64, 128])?;
    out.add("disjoint-support lambda slope", r.slope, Target::AtMost(-4.0));
    Ok(())
}

fn transform(out: &mut Rows) -> Result<()> {
    let l = 2.0 * PI;
    let bbox = (0.3, l - 0.3);
    let h = Diffeomorphism::sine(0.1, (0.0, l))?;
    let mut mv: f64 = 0.0;
    for (y, yp) in [(0.3, 5.9), (2.0, 2.5), (4.0, 1.0), (1.0, 1.0), (6.0, 0.1)] {
        mv = mv.max((h.h(y) - h.h(yp) - xi_h(&h, y, yp, 16)? * (y - yp)).abs());
    }
    out.add("Xi_h mean-value identity", mv, Target::AtMost(1e-9));
    let cov = build_cover(0.5, bbox)?;
    let cr = cover_report(&cov, 1000);
    out.add("cover partition of unity", cr.unity_deviation, Target::AtMost(1e-12));
    out.add("cover nesting violations", cr.nesting_violations as f64, Target::AtMost(0.0));

    let first = |g: &Grid| x_symbol(g, SymbolClass::smooth(1.0), |x, xi| C64::new(1.0 + 0.3 * x.cos(), 0.0) * C64::new(0.0, xi) + C64::new(x.sin(), 0.0));
    let g = grid1(64)?;
    let id = Diffeomorphism::identity((0.0, l))?;
    let rep = equivariance_residual(&first(&g)?, &id, &cov, &modulated_gaussian(&g, PI, 0.15, 3), 16)?;
    out.add("identity chart equivariance", rep.residual, Target::AtMost(1e-10));

    let g = grid1(128)?;
    let dsym = x_symbol(&g, SymbolClass::smooth(1.0), |_, xi| C64::new(0.0, xi))?;
    let u = modulated_gaussian(&g, PI, 0.15, 3);
    let exact = embed_x_as_xxiy(&pullback_principal(&dsym, &h)?)?;
    out.add("chain rule with the exact transformed symbol", equivariance_with(&dsym, &exact, &h, &cov, &u)?.residual_plain, Target::AtMost(1e-8));

    let run = |npts: usize, q: usize| -> Result<f64> {
        let g = grid1(npts)?;
        Ok(equivariance_residual(&first(&g)?, &h, &cov, &modulated_gaussian(&g, PI, 0.15, 3), q)?.residual)
    };
    let (a, b) = (run(128, 8)?, run(256, 16)?);
    out.add("full pipeline, y + 0.1 sin y, N=128 q=8", a, Target::AtMost(1e-2));
    out.add("full pipeline, N=256 q=16 over N=128 q=8", b / a, Target::Below(1.0));

    let p = x_symbol(&g, SymbolClass::smooth(1.0), |x, xi| C64::new((2.0 + x.cos()) * (1.0 + xi * xi).sqrt(), 0.0))?;
    let pr = principal_remainder(&p, &h, &cov, 16, (PI, 0.3), &[4, 8, 16, 32])?;
    out.add("principal remainder lambda slope, m=1", pr.slope, Target::AtMost(1.0 - 1.0 + 0.2));
    Ok(())
}

fn nonsmooth(out: &mut Rows) -> Result<()> {
    let g = grid1(128)?;
    let part = build_partition(&g, minimal_cover_j(&g))?;
    let p = SampledSymbol::sample(&g, SymbolForm::XYXi, SymbolClass::holder(0.0, 0.5), ClosedForm::new(|x, xi, y| (cusp(x[0]) - cusp(y[0])) * C64::new(0.0, -xi[0]) / (1.0 + xi[0] * xi[0]).sqrt()))?;
    let apply = |u: &GridFunction| Ok(apply_xyxi_form(&p, u, &part, part.j_max, DEFAULT_CUBIC_BUDGET)?.value);
    let s = 0.45;
    out.add(format!("vanishing-diagonal gain slope, s={s}"), plane_wave_gain(&apply, &g, &[4, 8, 16, 32])?.slope, Target::AtMost(-s + 0.1));

    let g = grid1(1024)?;
    let q = x_symbol(&g, SymbolClass::smooth(0.0), |x, xi| C64::new((1.0 + 0.3 * x.cos()) * xi / (1.0 + xi * xi).sqrt(), 0.0))?;
    let theta = 0.5;
    let h = Diffeomorphism::c1theta(0.2, theta, PI, (0.0, 2.0 * PI))?;
    let rep = principal_defect_sweep(&q, &h, (PI, 0.15), &[16, 32, 64, 128, 256])?;
    out.add(format!("C^(1,theta) defect lambda slope, theta={theta}"), rep.slope, Target::AtMost(-theta + 0.2));
    Ok(())
}

fn function_spaces(out: &mut Rows) -> Result<()> {
    let mut ratios = Vec::new();
    let mut equiv = Vec::new();
    for npts in [128, 256] {
        let g = grid1(npts)?;
        let c = corpus(&g)?;
        let mut worst: f64 = 0.0;
        for (_, u) in &c {
            worst = worst.max(interpolation_check(u, 0, 0.5, 1, 0.0)?.ratio);
        }
        ratios.push(worst);
        let part = build_partition(&g, minimal_cover_j(&g))?;
        equiv.push(zygmund_holder_equivalence(&c, 0.5, &part)?.constant);
        if npts == 128 {
            let mut bad = 0usize;
            for (_, u) in &c {
                let norms = [-1.0, 0.0, 0.5, 1.0, 2.0].iter().map(|&s| bessel_norm(u, s, 2.0).map(|n| n.value)).collect::<Result<Vec<f64>>>()?;
                bad += norms.windows(2).filter(|w| w[0] > w[1]).count();
            }
            out.add("Bessel monotonicity violations, 20 members x 5 orders", bad as f64, Target::AtMost(0.0));
        }
    }
    out.add("interpolation ratio max over corpus, N=256", ratios[1], Target::Finite);
    out.add("interpolation ratio, N=256/N=128 - 1", ratios[1] / ratios[0] - 1.0, Target::Within { center: 0.0, tol: 0.3 });
    out.add("Zygmund/Hoelder constant tau=0.5, N=256", equiv[1], Target::Finite);
    out.add("Zygmund/Hoelder constant, N=256/N=128 - 1", equiv[1] / equiv[0] - 1.0, Target::Within { center: 0.0, tol: 0.3 });
    Ok(())
}

fn run_rows(id: usize, seed: u64) -> Result<Vec<Row>> {
    let mut out = Rows(Vec::new());
    match id {
        1 => core(seed, &mut out)?,
        2 => littlewood_paley(&mut out)?,
        3 => peetre(&mut out)?,
        4 => quantization(seed, &mut out)?,
        5 => oscillatory(&mut out)?,
        6 => smoothing(&mut out)?,
        7 => composition(&mut out)?,
        8 => kernels(&mut out)?,
        9 => transform(&mut out)?,
        10 => nonsmooth(&mut out)?,
        11 => function_spaces(&mut out)?,
        _ => return Err(Error::Precondition(format!("no rows for criterion {id}"))),
    }
    Ok(out.0)
}

fn run_one(info: &SuiteInfo, seed: u64) -> CriterionResult {
    let t0 = Instant::now();
    let (rows, error) = match run_rows(info.id, seed) {
        Ok(r) => (r, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    CriterionResult { id: info.id, suite: info.name, title: info.title, rows, runtime_s: t0.elapsed().as_secs_f64(), budget_s: info.budget_s, error }
}

fn determinism_row(first: &[CriterionResult], seed: u64) -> CriterionResult {
    let t0 = Instant::now();
    let again: Vec<CriterionResult> = first.iter().map(|r| run_one(&SUITES[r.id - 1], seed)).collect();
    let a = report(first, seed).to_csv();
    let b = report(&again, seed).to_csv();
    let differing = a.lines().zip(b.lines()).filter(|(x, y)| x != y).count() + a.lines().count().abs_diff(b.lines().count());
    let check = format!("differing report lines over {} rerun criteria", first.len());
    let target = Target::AtMost(0.0);
    let measured = differing as f64;
    CriterionResult {
        id: 12,
        suite: "determinism",
        title: "Determinism",
        rows: vec![Row { check, measured, target, pass: target.check(measured) }],
        runtime_s: t0.elapsed().as_secs_f64(),
        budget_s: f64::INFINITY,
        error: None,
    }
}

/// Run a named suite: one of [`suite_names`] or `all`. `determinism` reruns criteria 1–11;
/// under `all` it reruns the criteria just computed.
pub fn run_suite(name: &str, seed: u64) -> Result<Vec<CriterionResult>> {
    if name == "all" {
        let mut res: Vec<CriterionResult> = SUITES[..11].iter().map(|s| run_one(s, seed)).collect();
        let det = determinism_row(&res, seed);
        res.push(det);
        return Ok(res);
    }
    let info = SUITES.iter().find(|s| s.name == name).ok_or_else(|| Error::Parse(format!("unknown suite {name:?}; known: all, {}", suite_names().join(", "))))?;
    if info.id == 12 {
        let first: Vec<CriterionResult> = SUITES[..11].iter().map(|s| run_one(s, seed)).collect();
        return Ok(vec![determinism_row(&first, seed)]);
    }
    Ok(vec![run_one(info, seed)])
}

/// Deterministic CSV table of all rows. Runtimes are left out.
pub fn report(results: &[CriterionResult], seed: u64) -> Report {
    let mut r = Report::new("acceptance", REPORT_VERSION, &["criterion", "suite", "check", "measured", "target", "pass"]).meta("seed", seed).meta("generator", "chacha8 stream per input");
    for c in results {
        if let Some(e) = &c.error {
            r.push(vec![c.id.into(), c.suite.into(), format!("error: {e}").into(), Cell::Num(f64::NAN), "".into(), false.into()]);
        }
        for row in &c.rows {
            r.push(vec![c.id.into(), c.suite.into(), row.check.clone().into(), row.measured.into(), row.target.describe().into(), row.pass.into()]);
        }
    }
    r
}

/// One line per criterion with pass/fail and runtime against its budget.
pub fn summary_line(c: &CriterionResult) -> String {
    let status = if c.passed() { "PASS" } else { "FAIL" };
    let budget = if c.budget_s.is_finite() { format!("{:.0} s", c.budget_s) } else { "none".into() };
    let mut s = format!("criterion {:>2} {:<18} {status}  {:>8.2} s (budget {budget})", c.id, c.suite, c.runtime_s);
    if let Some(e) = &c.error {
        s.push_str(&format!("  error: {e}"));
    }
    for r in c.rows.iter().filter(|r| !r.pass) {
        s.push_str(&format!("\n      failed: {} = {} (target {})", r.check, crate::csvio::format_num(r.measured), r.target.describe()));
    }
    if !c.within_budget() {
        s.push_str("\n      over the runtime budget");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn targets() {
        assert!(Target::AtMost(1.0).check(1.0));
        assert!(!Target::AtMost(1.0).check(f64::NAN));
        assert!(Target::Within { center: 0.5, tol: 0.15 }.check(0.6));
        assert!(!Target::Finite.check(f64::INFINITY));
        assert!(Target::AtLeast(0.8).check(0.9));
    }

    #[test]
    fn unknown_suite_is_an_error() {
        assert!(run_suite("nope", 1).is_err());
    }

    #[test]
    fn cheap_suites_pass_and_repeat() {
        let a = run_suite("core", 7).unwrap();
        let b = run_suite("core", 7).unwrap();
        assert!(a[0].contracts_pass(), "{}", summary_line(&a[0]));
        assert_eq!(report(&a, 7).to_csv(), report(&b, 7).to_csv());
        let c = run_suite("peetre", 7).unwrap();
        assert!(c[0].contracts_pass(), "{}", summary_line(&c[0]));
    }
}
