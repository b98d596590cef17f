//! Changes of coordinates `x = h(y)` for symbols on the line: the averaged Jacobian `Ξ_h`,
//! the `(φ_j, ψ_j)` cover, principal and full transformed symbols, equivariance residuals
//! and the global extension of local `C^{1,θ}` charts.

use crate::core_grid::{GridFunction, Side, TrigInterpolant, C64};
use crate::error::{Error, Result};
use crate::littlewood_paley::{base_g, phi0_radial};
use crate::quantize::{apply_x_form, apply_xxiy_form, DEFAULT_CUBIC_BUDGET};
use crate::stats::loglog_slope;
use crate::symbols::{ClosedForm, SampledSymbol, SymbolForm};
use rayon::prelude::*;
use std::sync::Arc;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Regularity {
    Smooth,
    C1Theta(f64),
}

/// Orientation-preserving chart map `x = h(y)` on an interval of the line.
#[derive(Clone)]
pub struct Diffeomorphism {
    pub name: String,
    pub forward: ScalarFn,
    pub jacobian: ScalarFn,
    pub inverse: ScalarFn,
    pub regularity: Regularity,
    /// `C^{-1} ≤ |h′| ≤ C` on the domain.
    pub bound_c: f64,
    /// Interval of `y` on which the chart is defined.
    pub domain: (f64, f64),
}

impl std::fmt::Debug for Diffeomorphism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Diffeomorphism({}, {:?}, C = {})", self.name, self.regularity, self.bound_c)
    }
}

const PROBES: usize = 1000;

/// Invert an increasing map by safeguarded Newton iteration on `[lo, hi]`.
fn monotone_inverse(f: ScalarFn, df: ScalarFn, lo: f64, hi: f64) -> ScalarFn {
    Arc::new(move |x: f64| {
        let (mut a, mut b) = (lo, hi);
        let mut y = x.clamp(a, b);
        for _ in 0..200 {
            let r = f(y) - x;
            if r.abs() <= 1e-15 * (1.0 + x.abs()) {
                break;
            }
            if r > 0.0 {
                b = y;
            } else {
                a = y;
            }
            let step = y - r / df(y);
            y = if step > a && step < b { step } else { 0.5 * (a + b) };
            if b - a < 1e-15 * (1.0 + y.abs()) {
                break;
            }
        }
        y
    })
}

impl Diffeomorphism {
    /// Validate the determinant sandwich and the inverse on a probe lattice.
    pub fn new(name: &str, forward: ScalarFn, jacobian: ScalarFn, inverse: ScalarFn, regularity: Regularity, domain: (f64, f64)) -> Result<Self> {
        let (lo, hi) = domain;
        if !(hi > lo) {
            return Err(Error::Precondition(format!("empty chart domain ({lo}, {hi})")));
        }
        if let Regularity::C1Theta(t) = regularity {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::Precondition(format!("Hölder exponent θ = {t} not in (0,1]")));
            }
        }
        let mut dmin = f64::INFINITY;
        let mut dmax: f64 = 0.0;
        for k in 0..=PROBES {
            let y = lo + (hi - lo) * k as f64 / PROBES as f64;
            let d = jacobian(y);
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Precondition(format!("h′({y}) = {d} is not positive")));
            }
            dmin = dmin.min(d);
            dmax = dmax.max(d);
            let back = inverse(forward(y));
            if (back - y).abs() > 1e-8 * (1.0 + y.abs()) {
                return Err(Error::Precondition(format!("inverse∘forward misses by {} at y = {y}", (back - y).abs())));
            }
        }
        let bound_c = dmax.max(1.0 / dmin);
        Ok(Diffeomorphism { name: name.into(), forward, jacobian, inverse, regularity, bound_c, domain })
    }

    pub fn h(&self, y: f64) -> f64 {
        (self.forward)(y)
    }

    pub fn dh(&self, y: f64) -> f64 {
        (self.jacobian)(y)
    }

    pub fn identity(domain: (f64, f64)) -> Result<Self> {
        Diffeomorphism::new("identity", Arc::new(|y| y), Arc::new(|_| 1.0), Arc::new(|x| x), Regularity::Smooth, domain)
    }

    /// `h(y) = a y + b` with `a > 0`.
    pub fn affine(a: f64, b: f64, domain: (f64, f64)) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::Precondition(format!("affine slope {a} must be positive")));
        }
        Diffeomorphism::new("affine", Arc::new(move |y| a * y + b), Arc::new(move |_| a), Arc::new(move |x| (x - b) / a), Regularity::Smooth, domain)
    }

    /// `h(y) = y + a sin y` with `|a| < 1`.
    pub fn sine(a: f64, domain: (f64, f64)) -> Result<Self> {
        if !(a.abs() < 1.0) {
            return Err(Error::Precondition(format!("|a| = {} must be below 1", a.abs())));
        }
        let f: ScalarFn = Arc::new(move |y: f64| y + a * y.sin());
        let df: ScalarFn = Arc::new(move |y: f64| 1.0 + a * y.cos());
        let pad = 2.0 * a.abs() + 1.0;
        let inv = monotone_inverse(f.clone(), df.clone(), domain.0 - pad, domain.1 + pad);
        Diffeomorphism::new("sine", f, df, inv, Regularity::Smooth, domain)
    }

    /// `h(y) = y + a·sgn(t)|t|^{1+θ}/(1+θ)` with `t = y − c`, so `h′ = 1 + a|t|^θ` is
    /// only `θ`-Hölder at `c`.
    pub fn c1theta(a: f64, theta: f64, c: f64, domain: (f64, f64)) -> Result<Self> {
        if !(a >= 0.0) {
            return Err(Error::Precondition(format!("amplitude {a} must be non-negative")));
        }
        let f: ScalarFn = Arc::new(move |y: f64| {
            let t = y - c;
            y + a * t.signum() * t.abs().powf(1.0 + theta) / (1.0 + theta)
        });
        let df: ScalarFn = Arc::new(move |y: f64| 1.0 + a * (y - c).abs().powf(theta));
        let span = domain.1 - domain.0;
        let inv = monotone_inverse(f.clone(), df.clone(), domain.0 - span, domain.1 + span);
        Diffeomorphism::new("c1theta", f, df, inv, Regularity::C1Theta(theta), domain)
    }

    /// Built-in charts by name: `identity`, `affine`, `sine`, `c1theta`.
    pub fn builtin(name: &str, param: f64, domain: (f64, f64)) -> Result<Self> {
        let mid = 0.5 * (domain.0 + domain.1);
        match name {
            "identity" => Diffeomorphism::identity(domain),
            "affine" => Diffeomorphism::affine(param, 0.0, domain),
            "sine" => Diffeomorphism::sine(param, domain),
            "c1theta" => Diffeomorphism::c1theta(0.2, param, mid, domain),
            _ => Err(Error::Parse(format!("unknown diffeomorphism '{name}'"))),
        }
    }
}

/// Gauss-Legendre nodes and weights on `[0,1]`.
pub fn gauss_legendre(q: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(q);
    for i in 0..q {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=q {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if q == 1 {
                p0 = 1.0;
                p1 = x;
            }
            dp = q as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out
}

/// `Ξ_h(y,y′) = ∫₀¹ h′(y′ + θ(y − y′)) dθ` by `q`-point Gauss-Legendre.
pub fn xi_h(h: &Diffeomorphism, y: f64, y_prime: f64, q: usize) -> Result<f64> {
    let (lo, hi) = h.domain;
    if y.min(y_prime) < lo || y.max(y_prime) > hi {
        return Err(Error::Precondition(format!("segment [{y_prime}, {y}] leaves the chart domain")));
    }
    if q == 0 {
        return Err(Error::Precondition("at least one quadrature node".into()));
    }
    Ok(gauss_legendre(q).iter().map(|(t, w)| w * h.dh(y_prime + t * (y - y_prime))).sum())
}

/// Cover of a box by `φ_j` summing to one and wider `ψ_j` equal to one on `B_{2r}(rγ_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverFamily {
    pub r: f64,
    pub bbox: (f64, f64),
    pub centers: Vec<f64>,
}

pub fn build_cover(r: f64, bbox: (f64, f64)) -> Result<CoverFamily> {
    if !(r > 0.0) || !(bbox.1 > bbox.0) {
        return Err(Error::Precondition(format!("invalid cover r = {r}, box = {bbox:?}")));
    }
    let k0 = ((bbox.0 - r) / r).floor() as i64;
    let k1 = ((bbox.1 + r) / r).ceil() as i64;
    let centers = (k0..=k1).map(|k| k as f64 * r).collect();
    Ok(CoverFamily { r, bbox, centers })
}

impl CoverFamily {
    fn chi(&self, j: usize, x: f64) -> f64 {
        base_g(1.0 - (x - self.centers[j]).abs() / self.r)
    }

    /// Indices `j` whose `ψ_j` may be non-zero at `x`.
    pub fn near(&self, x: f64) -> impl Iterator<Item = usize> + '_ {
        let r = self.r;
        (0..self.centers.len()).filter(move |&j| (x - self.centers[j]).abs() < 3.0 * r)
    }

    pub fn phi(&self, j: usize, x: f64) -> f64 {
        let c = self.chi(j, x);
        if c == 0.0 {
            return 0.0;
        }
        let s: f64 = self.near(x).map(|k| self.chi(k, x)).sum();
        c / s
    }

    pub fn psi(&self, j: usize, x: f64) -> f64 {
        base_g(3.0 - (x - self.centers[j]).abs() / self.r)
    }

    /// `Σ_j φ_j(x) ψ_j(x′)`.
    pub fn pair_weight(&self, x: f64, xp: f64) -> f64 {
        self.near(x).map(|j| self.phi(j, x) * self.psi(j, xp)).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverReport {
    /// `max |Σ_j φ_j − 1|` over probes in the box.
    pub unity_deviation: f64,
    /// Probes where `φ_j ≠ 0` outside `B_r`, `ψ_j ≠ 1` on `B_{2r}` or `ψ_j ≠ 0` outside `B_{3r}`.
    pub nesting_violations: usize,
    /// `max_j r·sup|∂φ_j|` by central differences.
    pub derivative_constant: f64,
}

pub fn cover_report(cover: &CoverFamily, probes: usize) -> CoverReport {
    let (lo, hi) = cover.bbox;
    let r = cover.r;
    let hstep = 1e-5 * r;
    let mut dev: f64 = 0.0;
    let mut bad = 0;
    let mut dc: f64 = 0.0;
    for k in 0..probes {
        let x = lo + (hi - lo) * (k as f64 + 0.5) / probes as f64;
        let s: f64 = (0..cover.centers.len()).map(|j| cover.phi(j, x)).sum();
        dev = dev.max((s - 1.0).abs());
        for j in 0..cover.centers.len() {
            let d = (x - cover.centers[j]).abs();
            if cover.phi(j, x) != 0.0 && d >= r {
                bad += 1;
            }
            let p = cover.psi(j, x);
            if (d <= 2.0 * r && p != 1.0) || (d >= 3.0 * r && p != 0.0) {
                bad += 1;
            }
            let der = (cover.phi(j, x + hstep) - cover.phi(j, x - hstep)) / (2.0 * hstep);
            dc = dc.max(r * der.abs());
        }
    }
    CoverReport { unity_deviation: dev, nesting_violations: bad, derivative_constant: dc }
}

/// Start at `r = 1` and halve until `(C+ε)^{-1} ≤ |Ξ_h(y,y′)| ≤ C+ε` with `ε = 0.1 C` for all
/// probe pairs whose images lie within `4r` of each other.
pub fn select_cover_radius(h: &Diffeomorphism, bbox: (f64, f64), q: usize) -> Result<f64> {
    let c = h.bound_c;
    let top = 1.1 * c;
    let (lo, hi) = h.domain;
    let ys: Vec<f64> = (0..=200).map(|k| lo + (hi - lo) * k as f64 / 200.0).filter(|&y| h.h(y) >= bbox.0 && h.h(y) <= bbox.1).collect();
    let mut r = 1.0;
    for _ in 0..30 {
        let mut ok = true;
        'outer: for &a in &ys {
            for &b in &ys {
                if (h.h(a) - h.h(b)).abs() <= 4.0 * r {
                    let d = xi_h(h, a, b, q)?.abs();
                    if d > top || d < 1.0 / top {
                        ok = false;
                        break 'outer;
                    }
                }
            }
        }
        if ok {
            return Ok(r);
        }
        r *= 0.5;
    }
    Err(Error::Precondition("no cover radius satisfies the determinant bound".into()))
}

fn refuse_other_classes(p: &SampledSymbol) -> Result<()> {
    if p.class.rho != 1.0 || p.class.delta != 0.0 {
        return Err(Error::Precondition(format!("coordinate changes are offered for ρ = 1, δ = 0 only (got ρ = {}, δ = {})", p.class.rho, p.class.delta)));
    }
    if p.grid.dim() != 1 {
        return Err(Error::Precondition("coordinate changes are one-dimensional".into()));
    }
    Ok(())
}

fn closed(p: &SampledSymbol) -> Result<ClosedForm> {
    p.closed_form.clone().ok_or_else(|| Error::Precondition("coordinate changes need a closed-form symbol".into()))
}

/// `p(h(y), η / h′(y))` on the y-grid × η-lattice.
pub fn pullback_principal(p: &SampledSymbol, h: &Diffeomorphism) -> Result<SampledSymbol> {
    p.expect_form(SymbolForm::X)?;
    refuse_other_classes(p)?;
    let cf = closed(p)?;
    let hh = h.clone();
    let pulled = ClosedForm::new(move |y, eta, _| {
        let x = hh.h(y[0]);
        cf.value(&[x], &[eta[0] / hh.dh(y[0])], &[x])
    });
    SampledSymbol::sample(&p.grid, SymbolForm::X, p.class, pulled)
}

/// Cap on `G³` for the transformed symbol.
pub const TRANSFORM_BUDGET: usize = 1 << 24;

/// `a(y,η,y′) = Σ_j φ_j(h(y)) p(h(y), η/Ξ_h(y,y′), h(y′)) ψ_j(h(y′)) |Ξ_h(y,y′)|^{-1} h′(y′)`
/// in (x,ξ,y)-form on the same lattice.
pub fn pullback_full(p: &SampledSymbol, h: &Diffeomorphism, cover: &CoverFamily, q: usize) -> Result<SampledSymbol> {
    if p.form != SymbolForm::X && p.form != SymbolForm::XXiY {
        return Err(Error::WrongForm { expected: "x or xxiy", got: p.form.name() });
    }
    refuse_other_classes(p)?;
    let cf = closed(p)?;
    let grid = &p.grid;
    let g = grid.len();
    if g.saturating_mul(g).saturating_mul(g) > TRANSFORM_BUDGET {
        return Err(Error::Budget(format!("{g}³ transformed-symbol entries exceed {TRANSFORM_BUDGET}")));
    }
    let top = 1.1 * h.bound_c;
    let xs: Vec<f64> = (0..g).map(|i| grid.x_axis(i)).collect();
    let hx: Vec<f64> = xs.iter().map(|&y| h.h(y)).collect();
    let etas: Vec<f64> = (0..g).map(|c| grid.xi_axis(c)).collect();
    let x_form = p.form == SymbolForm::X;
    let rows: Vec<Vec<C64>> = (0..g)
        .into_par_iter()
        .map(|iy| {
            let mut row = vec![C64::new(0.0, 0.0); g * g];
            for iyp in 0..g {
                let w = cover.pair_weight(hx[iy], hx[iyp]);
                if w == 0.0 {
                    continue;
                }
                let xi = xi_h(h, xs[iy], xs[iyp], q)?;
                if xi.abs() > top || xi.abs() < 1.0 / top {
                    return Err(Error::Precondition(format!("|Ξ_h| = {xi} breaks the determinant bound; the cover radius is too large")));
                }
                let factor = w * h.dh(xs[iyp]) / xi.abs();
                let xp = if x_form { hx[iy] } else { hx[iyp] };
                for (c, &eta) in etas.iter().enumerate() {
                    row[c * g + iyp] = factor * cf.value(&[hx[iy]], &[eta / xi], &[xp]);
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    SampledSymbol::new(grid, SymbolForm::XXiY, rows.concat(), p.class)
}

/// `u ∘ h` on the y-grid by trigonometric interpolation.
pub fn compose_with(u: &GridFunction, h: &Diffeomorphism) -> Result<GridFunction> {
    u.expect_side(Side::Physical)?;
    let t = TrigInterpolant::new(u)?;
    let g = &u.grid;
    let values = (0..g.len()).into_par_iter().map(|i| t.eval(&[h.h(g.x_axis(i))])).collect();
    Ok(GridFunction { grid: g.clone(), side: Side::Physical, values })
}

/// Relative threshold under which lattice values count as outside the support.
pub const SUPPORT_TOL: f64 = 1e-15;

#[derive(Clone, Debug, PartialEq)]
pub struct EquivarianceReport {
    /// `max |v₁ − v₂| / ‖u‖_∞` over nodes with `h(y)` in the cover box.
    pub residual: f64,
    /// Same with `(Pu)∘h` in place of `v₁`; adds the lattice defect of `P − Σ_j φ_j P ψ_j`.
    pub residual_plain: f64,
    /// `(Σ_j φ_j P ψ_j u)∘h`
    pub v1: GridFunction,
    /// `A(u∘h)`
    pub v2: GridFunction,
}

/// `Σ_j φ_j P(ψ_j u)` over the centres whose `ψ_j` meets the support of `u`.
pub fn localized_apply(p: &SampledSymbol, cover: &CoverFamily, u: &GridFunction) -> Result<GridFunction> {
    let g = &u.grid;
    let m = u.max_abs();
    let xs: Vec<f64> = (0..g.len()).map(|i| g.x_axis(i)).collect();
    let mut out = GridFunction::zeros(g, Side::Physical);
    for j in 0..cover.centers.len() {
        let psi: Vec<f64> = xs.iter().map(|&x| cover.psi(j, x)).collect();
        if !(0..g.len()).any(|i| psi[i] != 0.0 && u.values[i].norm() > SUPPORT_TOL * m) {
            continue;
        }
        let cut = GridFunction { grid: g.clone(), side: Side::Physical, values: u.values.iter().zip(&psi).map(|(v, w)| v * w).collect() };
        let pu = apply_any(p, &cut)?;
        for (i, o) in out.values.iter_mut().enumerate() {
            *o += cover.phi(j, xs[i]) * pu.values[i];
        }
    }
    Ok(out)
}

fn apply_any(p: &SampledSymbol, u: &GridFunction) -> Result<GridFunction> {
    match p.form {
        SymbolForm::X => apply_x_form(p, u),
        SymbolForm::XXiY => apply_xxiy_form(p, u, DEFAULT_CUBIC_BUDGET),
        f => Err(Error::WrongForm { expected: "x or xxiy", got: f.name() }),
    }
}

fn check_margin(u: &GridFunction, cover: &CoverFamily) -> Result<()> {
    let m = u.max_abs();
    let margin = 3.0 * cover.r;
    for i in 0..u.grid.len() {
        if u.values[i].norm() > SUPPORT_TOL * m {
            let x = u.grid.x_axis(i);
            if x < cover.bbox.0 + margin || x > cover.bbox.1 - margin {
                return Err(Error::Precondition(format!("u is not supported {margin} inside the chart box (x = {x})")));
            }
        }
    }
    Ok(())
}

/// Compare `(Pu)∘h` with `a(Y,D,Y′)(u∘h)` for a given transformed symbol `a`.
pub fn equivariance_with(p: &SampledSymbol, a: &SampledSymbol, h: &Diffeomorphism, cover: &CoverFamily, u: &GridFunction) -> Result<EquivarianceReport> {
    if !u.grid.compatible(&p.grid) || !a.grid.compatible(&p.grid) {
        return Err(Error::GridMismatch);
    }
    check_margin(u, cover)?;
    let v1 = compose_with(&localized_apply(p, cover, u)?, h)?;
    let plain = compose_with(&apply_any(p, u)?, h)?;
    let v2 = apply_any(a, &compose_with(u, h)?)?;
    let g = &u.grid;
    let scale = if u.max_abs() > 0.0 { u.max_abs() } else { 1.0 };
    let mut worst: f64 = 0.0;
    let mut worst_plain: f64 = 0.0;
    for i in 0..g.len() {
        let x = h.h(g.x_axis(i));
        if x >= cover.bbox.0 && x <= cover.bbox.1 {
            worst = worst.max((v1.values[i] - v2.values[i]).norm());
            worst_plain = worst_plain.max((plain.values[i] - v2.values[i]).norm());
        }
    }
    Ok(EquivarianceReport { residual: worst / scale, residual_plain: worst_plain / scale, v1, v2 })
}

/// Equivariance of the full transformed symbol.
pub fn equivariance_residual(p: &SampledSymbol, h: &Diffeomorphism, cover: &CoverFamily, u: &GridFunction, q: usize) -> Result<EquivarianceReport> {
    let a = pullback_full(p, h, cover, q)?;
    equivariance_with(p, &a, h, cover, u)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub wavenumbers: Vec<i64>,
    pub residuals: Vec<f64>,
    pub slope: f64,
}

/// `g(y) e^{iλy}` with a Gaussian envelope centred at `c` of width `sigma`.
pub fn modulated_gaussian(grid: &crate::core_grid::Grid, c: f64, sigma: f64, k: i64) -> GridFunction {
    let lam = k as f64 * grid.dxi();
    GridFunction::from_fn(grid, |x| C64::from_polar((-(x[0] - c).powi(2) / (2.0 * sigma * sigma)).exp(), lam * x[0]))
}

/// `‖(a(Y,D,Y′) − a_P(Y,D)) w_λ‖_∞` for `w_λ = g e^{iλy}` in chart coordinates, where `a_P`
/// is the principal pullback.
pub fn principal_remainder(p: &SampledSymbol, h: &Diffeomorphism, cover: &CoverFamily, q: usize, envelope: (f64, f64), wavenumbers: &[i64]) -> Result<SweepReport> {
    let a = pullback_full(p, h, cover, q)?;
    let ap = pullback_principal(p, h)?;
    let mut residuals = Vec::new();
    for &k in wavenumbers {
        let w = modulated_gaussian(&p.grid, envelope.0, envelope.1, k);
        residuals.push(apply_any(&a, &w)?.max_diff(&apply_any(&ap, &w)?));
    }
    let lam: Vec<f64> = wavenumbers.iter().map(|&k| (k as f64 * p.grid.dxi()).abs()).collect();
    Ok(SweepReport { wavenumbers: wavenumbers.to_vec(), slope: loglog_slope(&lam, &residuals, 1e-14), residuals })
}

/// Equivariance residuals on `u_λ = g e^{iλx}` in target coordinates, with their fitted slope.
pub fn equivariance_sweep(p: &SampledSymbol, h: &Diffeomorphism, cover: &CoverFamily, q: usize, envelope: (f64, f64), wavenumbers: &[i64]) -> Result<SweepReport> {
    let a = pullback_full(p, h, cover, q)?;
    let mut residuals = Vec::new();
    for &k in wavenumbers {
        let u = modulated_gaussian(&p.grid, envelope.0, envelope.1, k);
        residuals.push(equivariance_with(p, &a, h, cover, &u)?.residual);
    }
    let lam: Vec<f64> = wavenumbers.iter().map(|&k| (k as f64 * p.grid.dxi()).abs()).collect();
    Ok(SweepReport { wavenumbers: wavenumbers.to_vec(), slope: loglog_slope(&lam, &residuals, 1e-14), residuals })
}

/// `‖(Pu_λ)∘h − a_P(Y,D)(u_λ∘h)‖_∞ / ‖u_λ‖_∞` for `u_λ = g e^{iλx}` in target coordinates, with
/// `a_P` the principal pullback. For `C^{1,θ}` charts and order-0 `p` the slope is about `−θ`.
pub fn principal_defect_sweep(p: &SampledSymbol, h: &Diffeomorphism, envelope: (f64, f64), wavenumbers: &[i64]) -> Result<SweepReport> {
    let ap = pullback_principal(p, h)?;
    let mut residuals = Vec::new();
    for &k in wavenumbers {
        let u = modulated_gaussian(&p.grid, envelope.0, envelope.1, k);
        let v1 = compose_with(&apply_any(p, &u)?, h)?;
        let v2 = apply_any(&ap, &compose_with(&u, h)?)?;
        residuals.push(v1.max_diff(&v2) / u.max_abs());
    }
    let lam: Vec<f64> = wavenumbers.iter().map(|&k| (k as f64 * p.grid.dxi()).abs()).collect();
    Ok(SweepReport { wavenumbers: wavenumbers.to_vec(), slope: loglog_slope(&lam, &residuals, 1e-14), residuals })
}

#[derive(Clone, Debug)]
pub struct Extension {
    pub map: Diffeomorphism,
    /// Measured Hölder constant of `h′` on `B_{2r}(x₀)`.
    pub holder_constant: f64,
    /// `max |φ(x) B_h(x,x₀) h′(x₀)^{-1}|` on probes.
    pub neumann_bound: f64,
    /// `max |h_ext − h|` on `B_r(x₀)`.
    pub deviation: f64,
}

/// Global extension `h(x₀) + Ξ̃(x,x₀)(x−x₀)` with `Ξ̃ = h′(x₀) + φ(x)B_h(x,x₀)`,
/// `B_h = Ξ_h − h′(x₀)` and `φ = 1` on `B_r(x₀)`, `0` outside `B_{2r}(x₀)`.
pub fn c1theta_extend(h: &Diffeomorphism, x0: f64, r: f64) -> Result<Extension> {
    let theta = match h.regularity {
        Regularity::Smooth => 1.0,
        Regularity::C1Theta(t) => t,
    };
    if !(r > 0.0) {
        return Err(Error::Precondition(format!("radius {r} must be positive")));
    }
    let (lo, hi) = h.domain;
    if x0 - 2.0 * r < lo || x0 + 2.0 * r > hi {
        return Err(Error::Precondition(format!("B_2r({x0}) with r = {r} leaves the chart domain")));
    }
    let probes: Vec<f64> = (0..=400).map(|k| x0 - 2.0 * r + 4.0 * r * k as f64 / 400.0).collect();
    let mut c0: f64 = 0.0;
    for &a in &probes {
        for &b in &probes {
            if a != b {
                c0 = c0.max((h.dh(a) - h.dh(b)).abs() / (a - b).abs().powf(theta));
            }
        }
    }
    let d0 = h.dh(x0);
    if c0 > 0.0 && r.powf(theta) > d0.abs() / (2.0 * c0) {
        return Err(Error::Precondition(format!("smallness condition fails: r^θ = {} > |h′(x₀)|/(2c₀) = {}", r.powf(theta), d0.abs() / (2.0 * c0))));
    }
    let cut = move |x: f64| phi0_radial((x - x0).abs() / r);
    let dcut = move |x: f64| {
        let e = 1e-6 * r;
        (cut(x + e) - cut(x - e)) / (2.0 * e)
    };
    let h0 = h.h(x0);
    let (hf, hd) = (h.forward.clone(), h.jacobian.clone());
    // B_h(x,x₀)(x−x₀) = h(x) − h(x₀) − h′(x₀)(x−x₀)
    let bterm = move |x: f64| if (x - x0).abs() < 2.0 * r { hf(x) - h0 - d0 * (x - x0) } else { 0.0 };
    let bt = bterm.clone();
    let forward: ScalarFn = Arc::new(move |x| h0 + d0 * (x - x0) + cut(x) * bt(x));
    let bt = bterm.clone();
    let jacobian: ScalarFn = Arc::new(move |x| {
        let inner = if (x - x0).abs() < 2.0 * r { hd(x) - d0 } else { 0.0 };
        d0 + dcut(x) * bt(x) + cut(x) * inner
    });
    let mut neumann: f64 = 0.0;
    for &x in &probes {
        if x != x0 {
            let b = bterm(x) / (x - x0);
            neumann = neumann.max((cut(x) * b / d0).abs());
        }
    }
    if neumann > 0.5 {
        return Err(Error::Precondition(format!("Neumann bound {neumann} exceeds 1/2")));
    }
    let span = 4.0 * r + (hi - lo);
    let domain = (lo - span, hi + span);
    let inverse = monotone_inverse(forward.clone(), jacobian.clone(), domain.0 - span, domain.1 + span);
    let map = Diffeomorphism::new(&format!("{}_extended", h.name), forward, jacobian, inverse, h.regularity, domain)?;
    let deviation = probes.iter().filter(|&&x| (x - x0).abs() <= r).map(|&x| (map.h(x) - h.h(x)).abs()).fold(0.0, f64::max);
    Ok(Extension { map, holder_constant: c0, neumann_bound: neumann, deviation })
}
