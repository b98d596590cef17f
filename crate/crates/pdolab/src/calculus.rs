//! Symbol calculus: the asymptotic composition formula and its remainder, mollifiers and
//! symbol smoothing, dyadic kernel blocks and simplification of double symbols.

use crate::core_grid::{apply_multiplier, bracket, forward_transform, inverse_transform, multi_indices, multi_indices_upto, Grid, GridFunction, Side, C64};
use crate::error::{Error, Result};
use crate::jet::factorial;
use crate::littlewood_paley::{phi0, LPPartition};
use crate::oscillatory::{os_regularized, AmpClass, Amplitude, Cutoff, RegConfig, UFn};
use crate::quantize::{apply_x_form, apply_xxiy_form, PhaseTable, DEFAULT_CUBIC_BUDGET};
use crate::stats::{fit_slope, loglog_slope};
use crate::symbols::{dyadic_shell_slope, x_derivative_symbol, xi_derivative_values, ClosedForm, SampledSymbol, SymbolClass, SymbolForm};
use rayon::prelude::*;
use std::sync::Arc;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Precondition(format!("mollifier scale ε = {eps} not in (0,1]")));
    }
    Ok(())
}

fn mollifier_multiplier(grid: &Grid, eps: f64) -> Vec<f64> {
    (0..grid.len())
        .map(|c| {
            let xi: Vec<f64> = grid.xi_node(c).iter().map(|v| v * eps).collect();
            phi0(&xi)
        })
        .collect()
}

/// `J_ε u = φ₀(εD) u`.
pub fn mollify(u: &GridFunction, eps: f64) -> Result<GridFunction> {
    check_eps(eps)?;
    u.expect_side(Side::Physical)?;
    let m = mollifier_multiplier(&u.grid, eps);
    apply_multiplier(u, |c| C64::new(m[c], 0.0))
}

/// `J_ε` applied in `x` to every frequency column of an x-form symbol.
pub fn mollify_symbol(p: &SampledSymbol, eps: f64) -> Result<SampledSymbol> {
    check_eps(eps)?;
    p.expect_form(SymbolForm::X)?;
    let m = mollifier_multiplier(&p.grid, eps);
    let mults: Vec<Vec<f64>> = vec![m];
    let values = filter_columns(p, |_| vec![1.0], &mults)?;
    SampledSymbol::new(&p.grid, SymbolForm::X, values, p.class)
}

/// Multiply the x-spectrum of column `c` by `Σ_j w(c)[j] mults[j]`.
fn filter_columns(p: &SampledSymbol, weights: impl Fn(usize) -> Vec<f64> + Sync, mults: &[Vec<f64>]) -> Result<Vec<C64>> {
    let g = p.grid.len();
    let cols: Vec<Vec<C64>> = (0..g)
        .into_par_iter()
        .map(|c| {
            let w = weights(c);
            let mut f = forward_transform(&p.x_slice(c))?;
            for (k, v) in f.values.iter_mut().enumerate() {
                let s: f64 = w.iter().zip(mults).map(|(a, m)| a * m[k]).sum();
                *v *= s;
            }
            Ok(inverse_transform(&f)?.values)
        })
        .collect::<Result<_>>()?;
    let mut values = vec![zero(); g * g];
    for (c, col) in cols.iter().enumerate() {
        for ix in 0..g {
            values[ix * g + c] = col[ix];
        }
    }
    Ok(values)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MollifierRate {
    pub eps: Vec<f64>,
    /// `sup |J_ε u − u|`
    pub errors: Vec<f64>,
    pub slope: f64,
}

/// Sup-norm error of `J_ε u` over a schedule of scales and its log-log slope in `ε`.
pub fn mollifier_rate(u: &GridFunction, eps: &[f64]) -> Result<MollifierRate> {
    let errors = eps.iter().map(|&e| Ok(mollify(u, e)?.max_diff(u))).collect::<Result<Vec<f64>>>()?;
    let slope = loglog_slope(eps, &errors, 1e-14 * (1.0 + u.max_abs()));
    Ok(MollifierRate { eps: eps.to_vec(), errors, slope })
}

#[derive(Clone, Debug)]
pub struct SmoothedSymbol {
    pub gamma: f64,
    /// `p♯ = Σ_j φ_j(ξ) J_{2^{-jγ}} p(·,ξ)`, class `S^m_{1,γ}`.
    pub sharp: SampledSymbol,
    /// `p♭ = p − p♯`, class `C^τ S^{m-(γ-δ)τ}_{1,γ}`.
    pub flat: SampledSymbol,
}

/// Split `p ∈ C^τ S^m_{1,δ}` into `p♯ + p♭` with `γ ∈ (δ,1)`.
pub fn smooth_symbol(p: &SampledSymbol, gamma: f64, part: &LPPartition) -> Result<SmoothedSymbol> {
    p.expect_form(SymbolForm::X)?;
    if !p.grid.compatible(&part.grid) {
        return Err(Error::GridMismatch);
    }
    let cls = p.class;
    if !(gamma > cls.delta && gamma < 1.0) {
        return Err(Error::Precondition(format!("γ = {gamma} must lie in (δ,1) = ({},1)", cls.delta)));
    }
    if !cls.tau.is_finite() {
        return Err(Error::Precondition("symbol smoothing needs a finite Hölder exponent τ".into()));
    }
    let mults: Vec<Vec<f64>> = (0..=part.j_max).map(|j| mollifier_multiplier(&p.grid, 2f64.powf(-(j as f64) * gamma))).collect();
    let sharp_values = filter_columns(p, |c| (0..=part.j_max).map(|j| part.phi(j, c)).collect(), &mults)?;
    let flat_values: Vec<C64> = p.values.iter().zip(&sharp_values).map(|(a, b)| a - b).collect();
    let sharp = SampledSymbol::new(&p.grid, SymbolForm::X, sharp_values, SymbolClass { order: cls.order, rho: 1.0, delta: gamma, tau: f64::INFINITY })?;
    let flat = SampledSymbol::new(
        &p.grid,
        SymbolForm::X,
        flat_values,
        SymbolClass { order: cls.order - (gamma - cls.delta) * cls.tau, rho: 1.0, delta: gamma, tau: cls.tau },
    )?;
    Ok(SmoothedSymbol { gamma, sharp, flat })
}

/// For `b = 0..=b_max`, `max_{|β|=b} sup |D_x^β p| ⟨ξ⟩^{-m-δb}` against the declared class.
pub fn x_derivative_constants(p: &SampledSymbol, b_max: usize) -> Result<Vec<f64>> {
    p.expect_form(SymbolForm::X)?;
    if b_max > 3 {
        return Err(Error::OrderTooHigh(b_max, 3));
    }
    let g = p.grid.len();
    let br: Vec<f64> = (0..g).map(|c| bracket(&p.grid.xi_node(c))).collect();
    let mut out = Vec::new();
    for b in 0..=b_max {
        let mut worst: f64 = 0.0;
        for beta in multi_indices(p.grid.dim(), b) {
            let d = x_derivative_symbol(p, &beta)?;
            let w = -p.class.order - p.class.delta * b as f64;
            for (k, v) in d.values.iter().enumerate() {
                worst = worst.max(v.norm() * br[k % g].powf(w));
            }
        }
        out.push(worst);
    }
    Ok(out)
}

/// Fitted `⟨ξ⟩`-slope of `sup_x |p(x,ξ)|` over the upper dyadic shells.
pub fn xi_decay_slope(p: &SampledSymbol) -> Result<f64> {
    p.expect_form(SymbolForm::X)?;
    let g = p.grid.len();
    let per: Vec<f64> = (0..g).map(|c| (0..g).map(|ix| p.x_value(ix, c).norm()).fold(0.0, f64::max)).collect();
    Ok(dyadic_shell_slope(&p.grid, &per))
}

/// `p₁ #_N p₂ = Σ_{|α|≤N} (1/α!) ∂_ξ^α p₁ · D_x^α p₂`.
pub fn compose_leibniz(p1: &SampledSymbol, p2: &SampledSymbol, n_terms: usize) -> Result<SampledSymbol> {
    p1.expect_form(SymbolForm::X)?;
    p2.expect_form(SymbolForm::X)?;
    if !p1.grid.compatible(&p2.grid) {
        return Err(Error::GridMismatch);
    }
    if n_terms > 4 {
        return Err(Error::OrderTooHigh(n_terms, 4));
    }
    if p2.class.tau <= n_terms as f64 {
        return Err(Error::Precondition(format!("x-regularity τ₂ = {} must exceed N = {n_terms}", p2.class.tau)));
    }
    let mut acc = vec![zero(); p1.values.len()];
    for alpha in multi_indices_upto(p1.grid.dim(), n_terms) {
        let w: f64 = alpha.iter().map(|&a| factorial(a)).product();
        let d1 = xi_derivative_values(p1, &alpha)?;
        let d2 = x_derivative_symbol(p2, &alpha)?;
        for ((a, u), v) in acc.iter_mut().zip(&d1).zip(&d2.values) {
            *a += u * v / w;
        }
    }
    let class = SymbolClass {
        order: p1.class.order + p2.class.order,
        rho: p1.class.rho.min(p2.class.rho),
        delta: p1.class.delta.max(p2.class.delta),
        tau: p1.class.tau.min(p2.class.tau - n_terms as f64),
    };
    SampledSymbol::new(&p1.grid, SymbolForm::X, acc, class)
}

/// `p₁(X,D) p₂(X,D) u − (p₁ #_N p₂)(X,D) u`.
pub fn remainder_apply(p1: &SampledSymbol, p2: &SampledSymbol, composed: &SampledSymbol, u: &GridFunction) -> Result<GridFunction> {
    let lhs = apply_x_form(p1, &apply_x_form(p2, u)?)?;
    Ok(lhs.sub(&apply_x_form(composed, u)?))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RemainderReport {
    pub n_terms: usize,
    pub wavenumbers: Vec<i64>,
    pub residuals: Vec<f64>,
    pub slope: f64,
    /// Predicted order `m₁ + m₂ − (ρ−δ)(N+1)`.
    pub bound: f64,
    pub floor: f64,
}

impl RemainderReport {
    /// Slope within `tol` of the predicted order, or every residual under the floor.
    pub fn passes(&self, tol: f64) -> bool {
        self.slope <= self.bound + tol || self.residuals.iter().all(|&r| r <= self.floor)
    }
}

/// Sup-norm remainder on plane waves `e^{iλx_1}` and its fitted slope in `λ`.
pub fn composition_remainder(p1: &SampledSymbol, p2: &SampledSymbol, n_terms: usize, wavenumbers: &[i64]) -> Result<RemainderReport> {
    let composed = compose_leibniz(p1, p2, n_terms)?;
    let grid = &p1.grid;
    let half = grid.points_per_axis() / 2;
    let mut residuals = Vec::new();
    let mut scale: f64 = 1.0;
    for &k in wavenumbers {
        if k.unsigned_abs() as usize >= half {
            return Err(Error::OutOfRange(k.unsigned_abs() as usize, half - 1));
        }
        let mut kv = vec![0i64; grid.dim()];
        kv[0] = k;
        let u = GridFunction::plane_wave(grid, &kv);
        let lhs = apply_x_form(p1, &apply_x_form(p2, &u)?)?;
        scale = scale.max(lhs.max_abs());
        residuals.push(lhs.max_diff(&apply_x_form(&composed, &u)?));
    }
    let floor = 1e-13 * scale;
    let lam: Vec<f64> = wavenumbers.iter().map(|&k| (k as f64 * grid.dxi()).abs()).collect();
    let rho = p1.class.rho.min(p2.class.rho);
    let delta = p1.class.delta.max(p2.class.delta);
    Ok(RemainderReport {
        n_terms,
        wavenumbers: wavenumbers.to_vec(),
        slope: loglog_slope(&lam, &residuals, floor),
        residuals,
        bound: p1.class.order + p2.class.order - (rho - delta) * (n_terms as f64 + 1.0),
        floor,
    })
}

/// Cap on stored kernel entries over all blocks.
pub const KERNEL_ENTRY_BUDGET: usize = 1 << 23;

/// `k_j(x,y,z) = L^{-n} Σ_ξ e^{iz·ξ} p(x,ξ,y) φ_j(ξ)`, stored as `[(ix·Gy + iy)·G + iz]`
/// with `Gy = 1` for x-form symbols and a single x-row when `p` does not depend on `x`.
#[derive(Clone, Debug)]
pub struct KernelBlocks {
    pub grid: Grid,
    pub form: SymbolForm,
    pub class: SymbolClass,
    pub x_len: usize,
    pub y_len: usize,
    pub blocks: Vec<Vec<C64>>,
}

pub fn kernel_blocks(p: &SampledSymbol, part: &LPPartition) -> Result<KernelBlocks> {
    if !p.grid.compatible(&part.grid) {
        return Err(Error::GridMismatch);
    }
    let g = p.grid.len();
    let y_len = match p.form {
        SymbolForm::X => 1,
        SymbolForm::XXiY => g,
        f => return Err(Error::WrongForm { expected: "x or xxiy", got: f.name() }),
    };
    let x_len = if p.form == SymbolForm::X && (1..g).all(|ix| p.xi_slice(ix) == p.xi_slice(0)) { 1 } else { g };
    let per_block = x_len * y_len * g;
    if per_block.saturating_mul(part.j_max + 1) > KERNEL_ENTRY_BUDGET {
        return Err(Error::Budget(format!("{} kernel entries exceed {KERNEL_ENTRY_BUDGET}", per_block * (part.j_max + 1))));
    }
    let column = |ix: usize, iy: usize, c: usize| match p.form {
        SymbolForm::X => p.values[ix * g + c],
        _ => p.values[(ix * g + c) * g + iy],
    };
    let blocks = (0..=part.j_max)
        .map(|j| {
            let rows: Vec<Vec<C64>> = (0..x_len * y_len)
                .into_par_iter()
                .map(|xy| {
                    let (ix, iy) = (xy / y_len, xy % y_len);
                    let vals = (0..g).map(|c| column(ix, iy, c) * part.phi(j, c)).collect();
                    Ok(inverse_transform(&GridFunction { grid: p.grid.clone(), side: Side::Frequency, values: vals })?.values)
                })
                .collect::<Result<_>>()?;
            Ok(rows.concat())
        })
        .collect::<Result<_>>()?;
    Ok(KernelBlocks { grid: p.grid.clone(), form: p.form, class: p.class, x_len, y_len, blocks })
}

impl KernelBlocks {
    /// Flat index of `x − y` on the torus.
    fn diff_index(&self, ix: usize, iy: usize) -> usize {
        let a = self.grid.unflatten(ix);
        let b = self.grid.unflatten(iy);
        let np = self.grid.points_per_axis();
        let mut d = [0usize; 2];
        for ax in 0..self.grid.dim() {
            d[ax] = (a[ax] + np - b[ax]) % np;
        }
        self.grid.flatten(d)
    }

    /// `Σ_j k_j`.
    pub fn summed(&self) -> Vec<C64> {
        let mut s = vec![zero(); self.blocks[0].len()];
        for b in &self.blocks {
            for (a, v) in s.iter_mut().zip(b) {
                *a += v;
            }
        }
        s
    }

    /// `Δx^n Σ_y k(x,y,x−y) u(y)` with block `j`, or the full sum.
    pub fn apply(&self, u: &GridFunction, j: Option<usize>) -> Result<GridFunction> {
        if !u.grid.compatible(&self.grid) {
            return Err(Error::GridMismatch);
        }
        u.expect_side(Side::Physical)?;
        let summed;
        let k: &[C64] = match j {
            Some(j) if j < self.blocks.len() => &self.blocks[j],
            Some(j) => return Err(Error::OutOfRange(j, self.blocks.len() - 1)),
            None => {
                summed = self.summed();
                &summed
            }
        };
        let g = self.grid.len();
        let dv = self.grid.cell_volume();
        let values = (0..g)
            .into_par_iter()
            .map(|ix| {
                let mut s = zero();
                for iy in 0..g {
                    let xx = if self.x_len == 1 { 0 } else { ix };
                    let yy = if self.y_len == 1 { 0 } else { iy };
                    s += k[(xx * self.y_len + yy) * g + self.diff_index(ix, iy)] * u.values[iy];
                }
                s * dv
            })
            .collect();
        Ok(GridFunction { grid: self.grid.clone(), side: Side::Physical, values })
    }

    /// `z ↦ max_{x,y} |k(x,y,z)|`.
    fn z_profile(&self, k: &[C64]) -> Vec<f64> {
        let g = self.grid.len();
        let mut prof = vec![0.0f64; g];
        for (i, v) in k.iter().enumerate() {
            let z = i % g;
            prof[z] = prof[z].max(v.norm());
        }
        prof
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelRow {
    pub j: usize,
    pub sup: f64,
    /// `max_{0 < |z| ≤ zmax} |z|^M max_{x,y} |k_j(x,y,z)|` per requested `M`.
    pub moments: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelDecayReport {
    pub moments: Vec<u32>,
    pub window: (f64, f64),
    pub rows: Vec<KernelRow>,
    /// Fitted slope of `log₂ sup|k_j|` against `j` over the four finest fully resolved blocks.
    pub sup_slope: f64,
    pub moment_slopes: Vec<f64>,
    /// `n + m − ρM`.
    pub moment_bounds: Vec<f64>,
    pub summed_sup: f64,
    /// Log-log slope of the summed kernel profile against `|z|` on the window.
    pub summed_z_slope: f64,
}

pub fn kernel_decay_report(kb: &KernelBlocks, moments: &[u32], window: (f64, f64)) -> Result<KernelDecayReport> {
    let (zmin, zmax) = window;
    if !(zmin > 0.0 && zmax > zmin) {
        return Err(Error::Precondition(format!("invalid window [{zmin}, {zmax}]")));
    }
    let grid = &kb.grid;
    let g = grid.len();
    let zdist: Vec<f64> = (0..g).map(|z| grid.torus_distance(z, 0)).collect();
    let in_window: Vec<usize> = (0..g).filter(|&z| zdist[z] >= zmin && zdist[z] <= zmax).collect();
    let below_max: Vec<usize> = (0..g).filter(|&z| zdist[z] > 0.0 && zdist[z] <= zmax).collect();
    if in_window.len() < 2 {
        return Err(Error::Precondition("window holds fewer than two lattice points".into()));
    }
    let rows: Vec<KernelRow> = kb
        .blocks
        .iter()
        .enumerate()
        .map(|(j, b)| {
            let prof = kb.z_profile(b);
            let sup = prof.iter().cloned().fold(0.0, f64::max);
            let mom = moments.iter().map(|&m| below_max.iter().map(|&z| zdist[z].powi(m as i32) * prof[z]).fold(0.0, f64::max)).collect();
            KernelRow { j, sup, moments: mom }
        })
        .collect();
    // the four finest blocks whose support lies inside the lattice
    let mut resolved: Vec<&KernelRow> = rows.iter().filter(|r| r.j >= 1 && 2f64.powi(r.j as i32 + 1) <= grid.max_abs_xi()).collect();
    resolved = resolved.split_off(resolved.len().saturating_sub(4));
    let fit = |vals: Vec<f64>| -> f64 {
        let (js, ls): (Vec<f64>, Vec<f64>) = resolved.iter().zip(vals).filter(|(_, v)| *v > 0.0).map(|(r, v)| (r.j as f64, v.log2())).unzip();
        fit_slope(&js, &ls)
    };
    let sup_slope = fit(resolved.iter().map(|r| r.sup).collect());
    let moment_slopes = (0..moments.len()).map(|i| fit(resolved.iter().map(|r| r.moments[i]).collect())).collect();
    let n = grid.dim() as f64;
    let moment_bounds = moments.iter().map(|&m| n + kb.class.order - kb.class.rho * m as f64).collect();
    let prof = kb.z_profile(&kb.summed());
    let summed_sup = prof.iter().cloned().fold(0.0, f64::max);
    let zs: Vec<f64> = in_window.iter().map(|&z| zdist[z]).collect();
    let ks: Vec<f64> = in_window.iter().map(|&z| prof[z]).collect();
    Ok(KernelDecayReport {
        moments: moments.to_vec(),
        window,
        rows,
        sup_slope,
        moment_slopes,
        moment_bounds,
        summed_sup,
        summed_z_slope: loglog_slope(&zs, &ks, 0.0),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DisjointReport {
    /// Torus distance between the supports of the two cutoffs.
    pub distance: f64,
    pub wavenumbers: Vec<i64>,
    /// `‖φ P(ψ e^{iλx_1})‖_∞`
    pub residuals: Vec<f64>,
    pub slope: f64,
    pub floor: f64,
}

fn support(u: &GridFunction) -> Vec<usize> {
    (0..u.values.len()).filter(|&i| u.values[i].norm() > 0.0).collect()
}

/// Decay in `λ` of the operator localized between cutoffs with separated supports.
pub fn disjoint_support_check(phi: &GridFunction, psi: &GridFunction, p: &SampledSymbol, wavenumbers: &[i64]) -> Result<DisjointReport> {
    let grid = &p.grid;
    if !phi.grid.compatible(grid) || !psi.grid.compatible(grid) {
        return Err(Error::GridMismatch);
    }
    let (sa, sb) = (support(phi), support(psi));
    let mut distance = f64::INFINITY;
    for &a in &sa {
        for &b in &sb {
            distance = distance.min(grid.torus_distance(a, b));
        }
    }
    if distance < 4.0 * grid.dx() {
        return Err(Error::Precondition(format!("cutoff supports are {distance} apart, need at least 4Δx")));
    }
    let apply = |u: &GridFunction| match p.form {
        SymbolForm::X => apply_x_form(p, u),
        SymbolForm::XXiY => apply_xxiy_form(p, u, DEFAULT_CUBIC_BUDGET),
        f => Err(Error::WrongForm { expected: "x or xxiy", got: f.name() }),
    };
    let half = grid.points_per_axis() / 2;
    let mut residuals = Vec::new();
    let mut scale: f64 = 1.0;
    for &k in wavenumbers {
        if k.unsigned_abs() as usize >= half {
            return Err(Error::OutOfRange(k.unsigned_abs() as usize, half - 1));
        }
        let mut kv = vec![0i64; grid.dim()];
        kv[0] = k;
        let pu = apply(&psi.mul(&GridFunction::plane_wave(grid, &kv)))?;
        scale = scale.max(pu.max_abs());
        residuals.push(phi.mul(&pu).max_abs());
    }
    let floor = 1e-13 * scale;
    let lam: Vec<f64> = wavenumbers.iter().map(|&k| (k as f64 * grid.dxi()).abs()).collect();
    Ok(DisjointReport { distance, wavenumbers: wavenumbers.to_vec(), slope: loglog_slope(&lam, &residuals, floor), residuals, floor })
}

/// Double symbols `p(x,ξ,x′,ξ′)` in one dimension.
#[derive(Clone)]
pub enum DoubleSymbol {
    /// `p₁(x,ξ) p₂(x′,ξ′)` from x-form closed forms; `bandwidth` bounds the x-frequencies of `p₂`.
    Pair { left: ClosedForm, right: ClosedForm, bandwidth: f64 },
    /// Closed form evaluated as `f(x, ξ, [x′, ξ′])`.
    General { symbol: ClosedForm, bandwidth: f64 },
}

impl DoubleSymbol {
    pub fn value(&self, x: f64, xi: f64, xp: f64, xip: f64) -> C64 {
        match self {
            DoubleSymbol::Pair { left, right, .. } => left.value(&[x], &[xi], &[x]) * right.value(&[xp], &[xip], &[xp]),
            DoubleSymbol::General { symbol, .. } => symbol.value(&[x], &[xi], &[xp, xip]),
        }
    }

    /// Amplitude `(η,y) ↦ p(x, ξ+η, x+y, ξ)`.
    fn amplitude(&self, x: f64, xi: f64) -> Amplitude {
        let class = AmpClass { m: 0.0, delta: 0.0, tau: 0.0 };
        match self {
            DoubleSymbol::Pair { left, right, bandwidth } => {
                let (l, r) = (left.clone(), right.clone());
                let f = UFn::Custom { f: Arc::new(move |eta| l.value(&[x], &[xi + eta], &[x])), bandwidth: 0.0 };
                let g = UFn::Custom { f: Arc::new(move |y| r.value(&[x + y], &[xi], &[x + y])), bandwidth: *bandwidth };
                Amplitude::separable("double_pair", f, g, class)
            }
            DoubleSymbol::General { symbol, bandwidth } => {
                let s = symbol.clone();
                Amplitude::general("double", move |eta, y| s.value(&[x], &[xi + eta], &[x + y, xi]), *bandwidth, class)
            }
        }
    }
}

/// Default configuration for simplification: product-bump cutoff.
pub fn simplify_config() -> RegConfig {
    RegConfig::with_cutoff(Cutoff::ProductBump)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimplifyReport {
    /// `(ix, c)` lattice points.
    pub points: Vec<(usize, usize)>,
    /// `p_L(x,ξ) = Os-∬ e^{-iyη} p(x, ξ+η, x+y, ξ) dy d̄η`
    pub values: Vec<C64>,
    /// Symbol of the double-symbol operator on the lattice, by direct summation.
    pub lattice: Vec<C64>,
    pub converged: Vec<bool>,
    pub max_residual: f64,
}

/// Evenly spaced coarse points: `nx` x-nodes and the frequencies `|k| ≤ kmax` in steps of `kstep`.
pub fn coarse_points(grid: &Grid, nx: usize, kmax: i64, kstep: usize) -> Vec<(usize, usize)> {
    let g = grid.len();
    let mut out = Vec::new();
    for ix in (0..g).step_by((g / nx.max(1)).max(1)) {
        for c in (0..g).step_by(kstep.max(1)) {
            if grid.k_axis(c).abs() <= kmax {
                out.push((ix, c));
            }
        }
    }
    out
}

/// Simplify a double symbol to a single x-form symbol on selected lattice points.
pub fn simplify_double_symbol(p: &DoubleSymbol, grid: &Grid, points: &[(usize, usize)], cfg: &RegConfig) -> Result<SimplifyReport> {
    if grid.dim() != 1 {
        return Err(Error::Budget("double symbols are one-dimensional only".into()));
    }
    let g = grid.len();
    if let Some(&(ix, c)) = points.iter().find(|&&(ix, c)| ix >= g || c >= g) {
        return Err(Error::OutOfRange(ix.max(c), g - 1));
    }
    let table = PhaseTable::new(grid);
    let w = grid.dx() / grid.period();
    let mut values = Vec::new();
    let mut lattice = Vec::new();
    let mut converged = Vec::new();
    for &(ix, c) in points {
        let x = grid.x_axis(ix);
        let xi = grid.xi_axis(c);
        let r = os_regularized(&p.amplitude(x, xi), cfg)?;
        values.push(r.value);
        converged.push(r.converged);
        let lat: C64 = (0..g)
            .into_par_iter()
            .map(|cc| {
                let eta = grid.xi_axis(cc);
                let mut s = zero();
                for iy in 0..g {
                    let ph = table.phase(ix, cc) * table.phase(iy, cc).conj() * table.phase(ix, c).conj() * table.phase(iy, c);
                    s += ph * p.value(x, eta, grid.x_axis(iy), xi);
                }
                s
            })
            .sum();
        lattice.push(lat * w);
    }
    let max_residual = values.iter().zip(&lattice).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    Ok(SimplifyReport { points: points.to_vec(), values, lattice, converged, max_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_grid::make_torus_grid;
    use crate::littlewood_paley::{base_g, build_partition, minimal_cover_j};
    use crate::stats::{random_band_limited, rng_for};
    use crate::symbols::{bracket_symbol, differential_symbol};
    use std::f64::consts::PI;

    fn grid(npts: usize) -> Grid {
        make_torus_grid(1, npts, 2.0 * PI).unwrap()
    }

    fn cusp(x: &[f64]) -> f64 {
        (x[0] / 2.0).sin().abs().sqrt()
    }

    fn x_symbol(g: &Grid, class: SymbolClass, f: impl Fn(f64, f64) -> C64 + Send + Sync + 'static) -> SampledSymbol {
        let cf = ClosedForm::new(move |x, xi, _| f(x[0], xi[0]));
        SampledSymbol::sample(g, SymbolForm::X, class, cf).unwrap()
    }

    #[test]
    fn mollifier_fixes_low_modes() {
        let g = grid(64);
        let u = GridFunction::from_real_fn(&g, |x| (3.0 * x[0]).sin() + (x[0]).cos());
        assert!(mollify(&u, 0.25).unwrap().max_diff(&u) < 1e-13);
        assert!(mollify(&u, 0.0).is_err());
    }

    #[test]
    fn mollifier_rate_on_cusp() {
        let g = grid(256);
        let u = GridFunction::from_real_fn(&g, cusp);
        let eps: Vec<f64> = (1..=4).map(|k| 2f64.powi(-k)).collect();
        let r = mollifier_rate(&u, &eps).unwrap();
        assert!((r.slope - 0.5).abs() <= 0.15, "slope {}", r.slope);
    }

    #[test]
    fn smoothing_splits_exactly_and_flat_part_decays() {
        let g = grid(256);
        let part = build_partition(&g, minimal_cover_j(&g)).unwrap();
        let p = x_symbol(&g, SymbolClass::holder(0.0, 0.5), |x, _| C64::new(cusp(&[x]), 0.0));
        let s = smooth_symbol(&p, 0.8, &part).unwrap();
        let mut back = s.sharp.values.clone();
        back.iter_mut().zip(&s.flat.values).for_each(|(a, b)| *a += b);
        let err = back.iter().zip(&p.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-14);
        let slope = xi_decay_slope(&s.flat).unwrap();
        assert!((s.flat.class.order + 0.4).abs() < 1e-12);
        assert!(slope <= -0.4 + 0.2 && slope > -0.8, "slope {slope}");
        assert!(smooth_symbol(&p, 1.0, &part).is_err());
    }

    #[test]
    fn sharp_part_derivatives_stable_under_refinement() {
        let consts = |npts: usize| {
            let g = grid(npts);
            let part = build_partition(&g, minimal_cover_j(&g)).unwrap();
            let p = x_symbol(&g, SymbolClass::holder(0.0, 0.5), |x, _| C64::new(cusp(&[x]), 0.0));
            x_derivative_constants(&smooth_symbol(&p, 0.8, &part).unwrap().sharp, 3).unwrap()
        };
        let (a, b) = (consts(128), consts(256));
        for (u, v) in a.iter().zip(&b) {
            assert!(u.is_finite() && v.is_finite());
            assert!(v / u < 1.5 && u / v < 1.5, "{a:?} {b:?}");
        }
    }

    #[test]
    fn commutator_with_sine() {
        let g = grid(64);
        let sin = GridFunction::from_real_fn(&g, |x| x[0].sin());
        let one = GridFunction::from_real_fn(&g, |_| 1.0);
        let d = differential_symbol(&g, &[(vec![1], one)], f64::INFINITY).unwrap();
        let s = differential_symbol(&g, &[(vec![0], sin)], f64::INFINITY).unwrap();
        let c = compose_leibniz(&d, &s, 0).unwrap();
        let cos = GridFunction::from_real_fn(&g, |x| x[0].cos());
        for k in [-20i64, -3, 0, 5, 17] {
            let u = GridFunction::plane_wave(&g, &[k]);
            let r = remainder_apply(&d, &s, &c, &u).unwrap();
            assert!(r.max_diff(&cos.mul(&u)) < 1e-10, "k = {k}");
        }
    }

    #[test]
    fn first_order_symbol_composes_exactly() {
        let g = grid(64);
        let mut rng = rng_for(11, 0);
        let a = random_band_limited(&g, 4, &mut rng);
        let b = random_band_limited(&g, 4, &mut rng);
        let p1 = differential_symbol(&g, &[(vec![1], a), (vec![0], b)], f64::INFINITY).unwrap();
        let c2 = random_band_limited(&g, 3, &mut rng);
        let p2 = x_symbol(&g, SymbolClass::smooth(-1.0), {
            let t = crate::core_grid::TrigInterpolant::new(&c2).unwrap();
            move |x, xi| t.eval(&[x]) / (1.0 + xi * xi).sqrt()
        });
        let c = compose_leibniz(&p1, &p2, 1).unwrap();
        let u = random_band_limited(&g, 20, &mut rng);
        assert!(remainder_apply(&p1, &p2, &c, &u).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn remainder_slopes_improve_with_order() {
        let g = grid(256);
        let p1 = bracket_symbol(&g, 1.0).unwrap();
        let p2 = x_symbol(&g, SymbolClass::smooth(-1.0), |x, xi| C64::from_polar(1.0, x) / (1.0 + xi * xi).sqrt());
        let ks = [8, 16, 32, 64];
        let mut prev = f64::INFINITY;
        for n in 0..=2 {
            let r = composition_remainder(&p1, &p2, n, &ks).unwrap();
            assert!(r.passes(0.2), "N = {n}: slope {} bound {}", r.slope, r.bound);
            assert!(r.slope <= prev - 0.8, "N = {n}: slope {} previous {prev}", r.slope);
            prev = r.slope;
        }
    }

    #[test]
    fn composition_needs_regularity() {
        let g = grid(32);
        let p1 = bracket_symbol(&g, 1.0).unwrap();
        let p2 = x_symbol(&g, SymbolClass::holder(0.0, 1.5), |x, _| C64::new(x.cos(), 0.0));
        assert!(compose_leibniz(&p1, &p2, 1).is_ok());
        assert!(compose_leibniz(&p1, &p2, 2).is_err());
        assert!(compose_leibniz(&p1, &p2, 5).is_err());
    }

    #[test]
    fn kernel_blocks_reconstruct_and_scale() {
        let g = grid(1024);
        let part = build_partition(&g, minimal_cover_j(&g)).unwrap();
        let one = bracket_symbol(&g, 0.0).unwrap();
        let kb = kernel_blocks(&one, &part).unwrap();
        let rep = kernel_decay_report(&kb, &[2, 4], (8.0 * g.dx(), g.period() / 4.0)).unwrap();
        assert!((rep.sup_slope - 1.0).abs() <= 0.2, "sup slope {}", rep.sup_slope);
        for (s, b) in rep.moment_slopes.iter().zip(&rep.moment_bounds) {
            assert!(*s <= b + 0.3, "{:?} {:?}", rep.moment_slopes, rep.moment_bounds);
        }
        let u = random_band_limited(&g, 60, &mut rng_for(3, 1));
        assert!(kb.apply(&u, None).unwrap().max_diff(&u) < 1e-10);
        let g = grid(128);
        let part = build_partition(&g, minimal_cover_j(&g)).unwrap();
        let u = random_band_limited(&g, 40, &mut rng_for(3, 2));
        let q = x_symbol(&g, SymbolClass::smooth(1.0), |x, xi| C64::new((2.0 + x.sin()) * (1.0 + xi * xi).sqrt(), 0.0));
        let kq = kernel_blocks(&q, &part).unwrap();
        assert!(kq.apply(&u, None).unwrap().max_diff(&apply_x_form(&q, &u).unwrap()) < 1e-8 * (1.0 + u.max_abs() * 128.0));
    }

    #[test]
    fn negative_order_kernel_is_bounded() {
        let g = grid(256);
        let part = build_partition(&g, minimal_cover_j(&g)).unwrap();
        let p = bracket_symbol(&g, -2.0).unwrap();
        let rep = kernel_decay_report(&kernel_blocks(&p, &part).unwrap(), &[2], (8.0 * g.dx(), g.period() / 4.0)).unwrap();
        assert!(rep.summed_sup < 1.0);
        assert!(rep.summed_z_slope >= -1.0, "{}", rep.summed_z_slope);
        let kb = kernel_blocks(&p, &part).unwrap();
        let direct = inverse_transform(&GridFunction::from_xi_fn(&g, |xi| C64::new(1.0 / (1.0 + xi[0] * xi[0]), 0.0))).unwrap();
        let summed = kb.summed();
        let err = (0..g.len()).map(|z| (summed[z] - direct.values[z]).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn blocks_beyond_lattice_vanish() {
        let g = grid(32);
        let part = build_partition(&g, minimal_cover_j(&g) + 2).unwrap();
        let kb = kernel_blocks(&bracket_symbol(&g, 1.0).unwrap(), &part).unwrap();
        assert!(kb.blocks.last().unwrap().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn xxiy_kernel_matches_operator_off_diagonal() {
        let g = grid(32);
        let part = build_partition(&g, minimal_cover_j(&g)).unwrap();
        let cf = ClosedForm::new(|x, xi, y| C64::new((1.0 + 0.3 * x[0].cos()) * (1.0 + 0.2 * y[0].sin()), 0.0) * (1.0 + xi[0] * xi[0]).sqrt());
        let p = SampledSymbol::sample(&g, SymbolForm::XXiY, SymbolClass::smooth(1.0), cf).unwrap();
        let kb = kernel_blocks(&p, &part).unwrap();
        let u = GridFunction::from_real_fn(&g, |x| if (x[0] - PI).abs() < PI / 4.0 { (x[0] * 3.0).sin() } else { 0.0 });
        let direct = apply_xxiy_form(&p, &u, DEFAULT_CUBIC_BUDGET).unwrap();
        assert!(kb.apply(&u, None).unwrap().max_diff(&direct) < 1e-8);
    }

    fn bump_at(g: &Grid, c: f64, r: f64) -> GridFunction {
        GridFunction::from_real_fn(g, |x| {
            let d = (x[0] - c).abs();
            base_g(1.0 - d / r)
        })
    }

    #[test]
    fn disjoint_supports_give_rapid_decay() {
        let g = grid(1024);
        let phi = bump_at(&g, PI / 2.0, 1.2);
        let psi = bump_at(&g, 3.0 * PI / 2.0, 1.2);
        let ks = [16, 32, 64, 128];
        let id = bracket_symbol(&g, 0.0).unwrap();
        let r = disjoint_support_check(&phi, &psi, &id, &ks).unwrap();
        assert_eq!(r.slope, f64::NEG_INFINITY);
        let p = x_symbol(&g, SymbolClass::smooth(2.0), |x, xi| C64::new((1.0 + 0.3 * x.cos()) * xi * xi * xi / (1.0 + xi * xi).sqrt(), 0.0));
        let r = disjoint_support_check(&phi, &psi, &p, &ks).unwrap();
        assert!(r.slope <= -4.0, "slope {} residuals {:?}", r.slope, r.residuals);
        let near = bump_at(&g, 3.0 * PI / 2.0 - 1.9, 1.2);
        assert!(disjoint_support_check(&phi, &near, &p, &ks).is_err());
    }

    #[test]
    fn simplified_pair_matches_composition() {
        let g = grid(32);
        let left = ClosedForm::bracket_power(1.0);
        let right = ClosedForm::new(|x, xi, _| C64::from_polar(1.0, x[0]) / (1.0 + xi[0] * xi[0]).sqrt());
        let p = DoubleSymbol::Pair { left, right, bandwidth: 1.0 };
        let pts = coarse_points(&g, 4, 8, 3);
        let rep = simplify_double_symbol(&p, &g, &pts, &simplify_config()).unwrap();
        for (k, &(ix, c)) in pts.iter().enumerate() {
            let (x, xi) = (g.x_axis(ix), g.xi_axis(c));
            let exact = (1.0 + (xi + 1.0) * (xi + 1.0)).sqrt() * C64::from_polar(1.0, x) / (1.0 + xi * xi).sqrt();
            assert!((rep.values[k] - exact).norm() < 1e-6, "{:?}", (ix, c, rep.values[k], exact));
        }
        assert!(rep.max_residual < 1e-3);
    }

    #[test]
    fn simplification_collapses_one_sided_symbols() {
        let g = grid(32);
        let pts = coarse_points(&g, 4, 10, 5);
        let q = ClosedForm::new(|x, xi, _| C64::new(x[0].sin(), 0.0) * (1.0 + xi[0] * xi[0]).sqrt());
        let p = DoubleSymbol::Pair { left: q.clone(), right: ClosedForm::constant(C64::new(1.0, 0.0)), bandwidth: 0.0 };
        let rep = simplify_double_symbol(&p, &g, &pts, &simplify_config()).unwrap();
        for (k, &(ix, c)) in pts.iter().enumerate() {
            let exact = q.value(&[g.x_axis(ix)], &[g.xi_axis(c)], &[0.0]);
            assert!((rep.values[k] - exact).norm() < 1e-4);
        }
        let a = ClosedForm::x_only(|x| C64::new(2.0 + (2.0 * x[0]).cos(), 0.0));
        let p = DoubleSymbol::Pair { left: ClosedForm::constant(C64::new(1.0, 0.0)), right: a, bandwidth: 2.0 };
        let rep = simplify_double_symbol(&p, &g, &pts, &simplify_config()).unwrap();
        for (k, &(ix, _)) in pts.iter().enumerate() {
            let x = g.x_axis(ix);
            assert!((rep.values[k] - C64::new(2.0 + (2.0 * x).cos(), 0.0)).norm() < 1e-4);
        }
    }

    #[test]
    fn simplified_general_symbol_matches_lattice() {
        let g = grid(16);
        let cf = ClosedForm::new(|x, xi, y| C64::new((x[0] + 2.0 * y[0]).cos() * (-0.1 * (xi[0] - y[1]).powi(2)).exp(), 0.0));
        let p = DoubleSymbol::General { symbol: cf, bandwidth: 2.0 };
        let pts = vec![(0, 8), (5, 10)];
        let rep = simplify_double_symbol(&p, &g, &pts, &simplify_config()).unwrap();
        assert!(rep.max_residual < 1e-3, "{rep:?}");
    }
}
