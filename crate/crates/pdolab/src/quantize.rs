//! Quantization of sampled symbols: operators in x-form, y-form, (x,ξ,y)-form and
//! (x,y,ξ)-form, adjoints and recovery of symbols from operators.

use crate::core_grid::{forward_transform, inverse_transform, Grid, GridFunction, Side, C64};
use crate::error::{Error, Result};
use crate::function_spaces::bessel_norm;
use crate::littlewood_paley::LPPartition;
use crate::stats::{loglog_slope, random_band_limited, rng_for};
use crate::symbols::{SampledSymbol, SymbolClass, SymbolForm};
use rand::Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Default cap on `G^3` for the (x,ξ,y)- and (x,y,ξ)-form sums.
pub const DEFAULT_CUBIC_BUDGET: usize = 1 << 27;

/// `e^{i x_ix · ξ_c}` via a table of `N`-th roots of unity.
pub(crate) struct PhaseTable {
    grid: Grid,
    roots: Vec<C64>,
}

impl PhaseTable {
    pub(crate) fn new(grid: &Grid) -> Self {
        let npts = grid.points_per_axis();
        let roots = (0..npts).map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 / npts as f64)).collect();
        PhaseTable { grid: grid.clone(), roots }
    }

    /// `e^{i x·ξ}` for physical index `ix` and centered frequency index `c`.
    pub(crate) fn phase(&self, ix: usize, c: usize) -> C64 {
        let g = &self.grid;
        let npts = g.points_per_axis() as i64;
        let i = g.unflatten(ix);
        let k = g.unflatten(c);
        let mut r = C64::new(1.0, 0.0);
        for a in 0..g.dim() {
            let kk = k[a] as i64 - npts / 2;
            r *= self.roots[((i[a] as i64 * kk).rem_euclid(npts)) as usize];
        }
        r
    }
}

fn check_grid(p: &SampledSymbol, u: &GridFunction) -> Result<()> {
    if !p.grid.compatible(&u.grid) {
        return Err(Error::GridMismatch);
    }
    if u.side != Side::Physical {
        return Err(Error::SideMismatch { expected: "physical", got: u.side.name() });
    }
    Ok(())
}

fn check_cubic_budget(grid: &Grid, budget: usize) -> Result<()> {
    let g = grid.len();
    let cost = g.saturating_mul(g).saturating_mul(g);
    if cost > budget {
        return Err(Error::Budget(format!("{cost} terms exceed the budget {budget}")));
    }
    Ok(())
}

/// `Pu(x) = L^{-n} Σ_ξ e^{ix·ξ} p(x,ξ) û(ξ)`.
pub fn apply_x_form(p: &SampledSymbol, u: &GridFunction) -> Result<GridFunction> {
    p.expect_form(SymbolForm::X)?;
    check_grid(p, u)?;
    let grid = &p.grid;
    let g = grid.len();
    let uh = forward_transform(u)?;
    let table = PhaseTable::new(grid);
    let w = 1.0 / grid.volume();
    let values = (0..g)
        .into_par_iter()
        .map(|ix| {
            let row = p.xi_slice(ix);
            let mut s = C64::new(0.0, 0.0);
            for c in 0..g {
                s += table.phase(ix, c) * row[c] * uh.values[c];
            }
            s * w
        })
        .collect();
    Ok(GridFunction { grid: grid.clone(), side: Side::Physical, values })
}

/// `p(D,X)u = 𝓕^{-1}[ξ ↦ Δx^n Σ_y e^{-iy·ξ} p(y,ξ) u(y)]`.
pub fn apply_y_form(p: &SampledSymbol, u: &GridFunction) -> Result<GridFunction> {
    p.expect_form(SymbolForm::X)?;
    check_grid(p, u)?;
    let grid = &p.grid;
    let g = grid.len();
    let table = PhaseTable::new(grid);
    let dv = grid.cell_volume();
    let values = (0..g)
        .into_par_iter()
        .map(|c| {
            let mut s = C64::new(0.0, 0.0);
            for iy in 0..g {
                s += table.phase(iy, c).conj() * p.x_value(iy, c) * u.values[iy];
            }
            s * dv
        })
        .collect();
    inverse_transform(&GridFunction { grid: grid.clone(), side: Side::Frequency, values })
}

/// `⟨u,v⟩ = Δx^n Σ u·conj(v)`.
pub fn inner_product(u: &GridFunction, v: &GridFunction) -> C64 {
    u.values.iter().zip(&v.values).map(|(a, b)| a * b.conj()).sum::<C64>() * u.grid.cell_volume()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdjointResidual {
    pub residual: f64,
    /// `‖u‖‖v‖`
    pub scale: f64,
}

impl AdjointResidual {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual / self.scale
        } else {
            self.residual
        }
    }
}

/// `|⟨p(X,D)u, v⟩ − ⟨u, p*(D,X)v⟩|` with `p* = conj p`.
pub fn adjoint_check(p: &SampledSymbol, u: &GridFunction, v: &GridFunction) -> Result<AdjointResidual> {
    let lhs = inner_product(&apply_x_form(p, u)?, v);
    let rhs = inner_product(u, &apply_y_form(&p.conj(), v)?);
    Ok(AdjointResidual { residual: (lhs - rhs).norm(), scale: u.l2_norm() * v.l2_norm() })
}

/// `v(x) = (Δx^n/L^n) Σ_ξ Σ_y e^{i(x−y)·ξ} p(x,ξ,y) u(y)`.
pub fn apply_xxiy_form(p: &SampledSymbol, u: &GridFunction, budget: usize) -> Result<GridFunction> {
    p.expect_form(SymbolForm::XXiY)?;
    check_grid(p, u)?;
    let grid = &p.grid;
    check_cubic_budget(grid, budget)?;
    let g = grid.len();
    let table = PhaseTable::new(grid);
    let w = grid.cell_volume() / grid.volume();
    // u(y) e^{-iy·ξ}, shared by every x
    let uy: Vec<C64> = (0..g * g).into_par_iter().map(|k| table.phase(k % g, k / g).conj() * u.values[k % g]).collect();
    let values = (0..g)
        .into_par_iter()
        .map(|ix| {
            let mut acc = C64::new(0.0, 0.0);
            for c in 0..g {
                let base = (ix * g + c) * g;
                let row = &p.values[base..base + g];
                let mut inner = C64::new(0.0, 0.0);
                for iy in 0..g {
                    inner += row[iy] * uy[c * g + iy];
                }
                acc += table.phase(ix, c) * inner;
            }
            acc * w
        })
        .collect();
    Ok(GridFunction { grid: grid.clone(), side: Side::Physical, values })
}

#[derive(Clone, Debug, PartialEq)]
pub struct XYXiResult {
    /// Partial sum over blocks `j ≤ N_trunc`.
    pub value: GridFunction,
    /// `‖contribution of block j‖_∞` for `j = 0..=N_trunc`.
    pub increments: Vec<f64>,
}

/// `lim_N Σ_{j≤N} (Δx^n/L^n) Σ_ξ Σ_y e^{i(x−y)·ξ} φ_j(ξ) p(x,y,ξ) u(y)`, with the trace of
/// block contributions.
pub fn apply_xyxi_form(p: &SampledSymbol, u: &GridFunction, part: &LPPartition, n_trunc: usize, budget: usize) -> Result<XYXiResult> {
    p.expect_form(SymbolForm::XYXi)?;
    check_grid(p, u)?;
    if !part.grid.compatible(&p.grid) {
        return Err(Error::GridMismatch);
    }
    if n_trunc > part.j_max {
        return Err(Error::OutOfRange(n_trunc, part.j_max));
    }
    let grid = &p.grid;
    check_cubic_budget(grid, budget)?;
    let g = grid.len();
    let table = PhaseTable::new(grid);
    let dv = grid.cell_volume();
    // S(x,ξ) = Δx^n Σ_y e^{-iy·ξ} p(x,y,ξ) u(y), stored [ix*G + c]
    let s: Vec<C64> = (0..g)
        .into_par_iter()
        .flat_map_iter(|ix| {
            let mut row = vec![C64::new(0.0, 0.0); g];
            for iy in 0..g {
                let base = (ix * g + iy) * g;
                let uy = u.values[iy];
                for c in 0..g {
                    row[c] += table.phase(iy, c).conj() * p.values[base + c] * uy;
                }
            }
            row.into_iter().map(move |v| v * dv)
        })
        .collect();
    let w = 1.0 / grid.volume();
    let mut total = GridFunction::zeros(grid, Side::Physical);
    let mut increments = Vec::with_capacity(n_trunc + 1);
    for j in 0..=n_trunc {
        let contrib: Vec<C64> = (0..g)
            .into_par_iter()
            .map(|ix| {
                let mut acc = C64::new(0.0, 0.0);
                for c in 0..g {
                    let f = part.phi(j, c);
                    if f != 0.0 {
                        acc += table.phase(ix, c) * s[ix * g + c] * f;
                    }
                }
                acc * w
            })
            .collect();
        increments.push(contrib.iter().map(|v| v.norm()).fold(0.0, f64::max));
        for (t, c) in total.values.iter_mut().zip(&contrib) {
            *t += c;
        }
    }
    Ok(XYXiResult { value: total, increments })
}

/// Adjoint of an (x,y,ξ)-form symbol: `conj p(y,x,ξ)` in the same form, so that
/// `⟨P u, v⟩ = ⟨u, P* v⟩` for the (x,y,ξ)-quantization.
pub fn xyxi_adjoint(p: &SampledSymbol) -> Result<SampledSymbol> {
    p.expect_form(SymbolForm::XYXi)?;
    let g = p.grid.len();
    let mut values = vec![C64::new(0.0, 0.0); p.values.len()];
    for ix in 0..g {
        for iy in 0..g {
            for c in 0..g {
                values[(ix * g + iy) * g + c] = p.values[(iy * g + ix) * g + c].conj();
            }
        }
    }
    SampledSymbol::new(&p.grid, SymbolForm::XYXi, values, p.class)
}

/// Recover the x-form symbol of a linear operator by demodulating its action on plane
/// waves: `p(x,ξ) = e^{-ix·ξ} P(e^{i·ξ})(x)`.
pub fn symbol_from_operator(apply: &dyn Fn(&GridFunction) -> Result<GridFunction>, grid: &Grid, class: SymbolClass) -> Result<SampledSymbol> {
    // two linearity probes
    let mut rng = rng_for(0x5eed, 99);
    for _ in 0..2 {
        let u = random_band_limited(grid, (grid.points_per_axis() / 2 - 1) as i64, &mut rng);
        let v = random_band_limited(grid, (grid.points_per_axis() / 2 - 1) as i64, &mut rng);
        let a = C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        let b = C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        let lhs = apply(&u.scale(a).axpy(b, &v))?;
        let rhs = apply(&u)?.scale(a).axpy(b, &apply(&v)?);
        let scale = 1.0 + lhs.max_abs().max(rhs.max_abs());
        if lhs.max_diff(&rhs) > 1e-8 * scale {
            return Err(Error::Precondition("operator failed the linearity probe".into()));
        }
    }
    let g = grid.len();
    let table = PhaseTable::new(grid);
    let mut values = vec![C64::new(0.0, 0.0); g * g];
    for c in 0..g {
        let k = grid.k_node(c);
        let e = GridFunction::plane_wave(grid, &k);
        let pe = apply(&e)?;
        if !pe.grid.compatible(grid) {
            return Err(Error::GridMismatch);
        }
        for ix in 0..g {
            values[ix * g + c] = table.phase(ix, c).conj() * pe.values[ix];
        }
    }
    SampledSymbol::new(grid, SymbolForm::X, values, class)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GainReport {
    pub wavenumbers: Vec<i64>,
    pub ratios: Vec<f64>,
    pub slope: f64,
}

/// `‖P u_λ‖_{L²} / ‖u_λ‖_{L²}` on plane waves `u_λ = e^{iλx}` along the first axis and the
/// fitted log-log slope in `λ`.
pub fn plane_wave_gain(apply: &dyn Fn(&GridFunction) -> Result<GridFunction>, grid: &Grid, wavenumbers: &[i64]) -> Result<GainReport> {
    let mut ratios = Vec::new();
    for &k in wavenumbers {
        if k.unsigned_abs() as usize >= grid.points_per_axis() / 2 {
            return Err(Error::OutOfRange(k.unsigned_abs() as usize, grid.points_per_axis() / 2 - 1));
        }
        let mut kv = vec![0i64; grid.dim()];
        kv[0] = k;
        let u = GridFunction::plane_wave(grid, &kv);
        ratios.push(apply(&u)?.l2_norm() / u.l2_norm());
    }
    let lam: Vec<f64> = wavenumbers.iter().map(|&k| (k as f64 * grid.dxi()).abs()).collect();
    let slope = loglog_slope(&lam, &ratios, 1e-14);
    Ok(GainReport { wavenumbers: wavenumbers.to_vec(), ratios, slope })
}

/// `bessel_norm(Pu, s, 2) / bessel_norm(u, s+m, 2)` for each input.
pub fn boundedness_ratios(p: &SampledSymbol, inputs: &[GridFunction], s: f64) -> Result<Vec<f64>> {
    inputs
        .iter()
        .map(|u| {
            let pu = apply_x_form(p, u)?;
            let den = bessel_norm(u, s + p.class.order, 2.0)?.value;
            Ok(if den > 0.0 { bessel_norm(&pu, s, 2.0)?.value / den } else { 0.0 })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_grid::{make_torus_grid, spectral_derivative};
    use crate::littlewood_paley::{build_partition, minimal_cover_j};
    use crate::symbols::{bracket_symbol, differential_symbol, embed_x_as_xxiy, embed_x_as_xyxi, embed_y_as_xxiy, ClosedForm};
    use proptest::{prop_assert, proptest};

    fn grid(npts: usize) -> Grid {
        make_torus_grid(1, npts, 2.0 * PI).unwrap()
    }

    fn random_symbol(g: &Grid, seed: u64, kx: i64) -> SampledSymbol {
        let mut rng = rng_for(seed, 7);
        let n = g.len();
        let mut values = vec![C64::new(0.0, 0.0); n * n];
        for c in 0..n {
            let col = random_band_limited(g, kx, &mut rng);
            for ix in 0..n {
                values[ix * n + c] = col.values[ix];
            }
        }
        SampledSymbol::new(g, SymbolForm::X, values, SymbolClass::smooth(0.0)).unwrap()
    }

    fn dense_x_form(p: &SampledSymbol, u: &GridFunction) -> GridFunction {
        // direct double sum without the FFT
        let g = &p.grid;
        let n = g.len();
        GridFunction::from_fn(g, |x| {
            let ix = (x[0] / g.dx()).round() as usize;
            let mut s = C64::new(0.0, 0.0);
            for c in 0..n {
                let xi = g.xi_axis(c);
                let mut uh = C64::new(0.0, 0.0);
                for iy in 0..n {
                    uh += C64::from_polar(1.0, -g.x_axis(iy) * xi) * u.values[iy];
                }
                s += C64::from_polar(1.0, x[0] * xi) * p.x_value(ix, c) * uh * g.dx();
            }
            s / g.period()
        })
    }

    #[test]
    fn identity_derivative_multiplication() {
        let g = grid(64);
        let u = random_band_limited(&g, 31, &mut rng_for(1, 0));
        let one = GridFunction::from_real_fn(&g, |_| 1.0);
        let id = differential_symbol(&g, &[(vec![0], one.clone())], f64::INFINITY).unwrap();
        assert!(apply_x_form(&id, &u).unwrap().max_diff(&u) <= 1e-12);
        let d = differential_symbol(&g, &[(vec![1], one)], f64::INFINITY).unwrap();
        let du = spectral_derivative(&u, &[1]).unwrap();
        assert!(apply_x_form(&d, &u).unwrap().max_diff(&du) <= 1e-12 * du.max_abs().max(1.0));
        let a = GridFunction::from_real_fn(&g, |x| 1.0 + 0.5 * (2.0 * x[0]).sin());
        let ma = differential_symbol(&g, &[(vec![0], a.clone())], f64::INFINITY).unwrap();
        assert!(apply_x_form(&ma, &u).unwrap().max_diff(&a.mul(&u)) <= 1e-12);
        assert!(apply_y_form(&ma, &u).unwrap().max_diff(&a.mul(&u)) <= 1e-12);
    }

    #[test]
    fn x_form_matches_dense_sum() {
        let g = grid(16);
        let p = random_symbol(&g, 3, 7);
        let u = random_band_limited(&g, 7, &mut rng_for(3, 1));
        assert!(apply_x_form(&p, &u).unwrap().max_diff(&dense_x_form(&p, &u)) < 1e-12);
    }

    #[test]
    fn y_form_of_multiplier_equals_x_form() {
        let g = grid(32);
        let q = bracket_symbol(&g, -1.0).unwrap();
        let u = random_band_limited(&g, 15, &mut rng_for(4, 0));
        assert!(apply_x_form(&q, &u).unwrap().max_diff(&apply_y_form(&q, &u).unwrap()) < 1e-12);
    }

    #[test]
    fn plane_wave_eigen_relation() {
        let g = grid(32);
        let p = random_symbol(&g, 5, 10);
        for k in [-16i64, -3, 0, 7, 15] {
            let e = GridFunction::plane_wave(&g, &[k]);
            let c = g.xi_index_of(&[k]).unwrap();
            let pe = apply_x_form(&p, &e).unwrap();
            for ix in 0..32 {
                assert!((pe.values[ix] - p.x_value(ix, c) * e.values[ix]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn adjoint_examples() {
        let g = grid(32);
        let u = random_band_limited(&g, 15, &mut rng_for(6, 0));
        let v = random_band_limited(&g, 15, &mut rng_for(6, 1));
        let a = GridFunction::from_real_fn(&g, |x| x[0].cos());
        let ma = differential_symbol(&g, &[(vec![0], a)], f64::INFINITY).unwrap();
        assert!(adjoint_check(&ma, &u, &v).unwrap().residual <= 1e-12);
        let one = GridFunction::from_real_fn(&g, |_| 1.0);
        let d = differential_symbol(&g, &[(vec![1], one)], f64::INFINITY).unwrap();
        assert!(adjoint_check(&d, &u, &v).unwrap().relative() <= 1e-10);
        // ∂ is skew-adjoint
        let lhs = inner_product(&apply_x_form(&d, &u).unwrap(), &v);
        let rhs = inner_product(&u, &apply_x_form(&d, &v).unwrap());
        assert!((lhs + rhs).norm() < 1e-10);
    }

    #[test]
    fn xxiy_reductions() {
        let g = grid(32);
        let p = random_symbol(&g, 8, 6);
        let u = random_band_limited(&g, 15, &mut rng_for(8, 2));
        let px = apply_x_form(&p, &u).unwrap();
        let pxx = apply_xxiy_form(&embed_x_as_xxiy(&p).unwrap(), &u, DEFAULT_CUBIC_BUDGET).unwrap();
        assert!(px.max_diff(&pxx) <= 1e-12);
        let py = apply_y_form(&p, &u).unwrap();
        let pyy = apply_xxiy_form(&embed_y_as_xxiy(&p).unwrap(), &u, DEFAULT_CUBIC_BUDGET).unwrap();
        assert!(py.max_diff(&pyy) <= 1e-12);
        let one = SampledSymbol::sample(&g, SymbolForm::XXiY, SymbolClass::smooth(0.0), ClosedForm::constant(C64::new(1.0, 0.0))).unwrap();
        assert!(apply_xxiy_form(&one, &u, DEFAULT_CUBIC_BUDGET).unwrap().max_diff(&u) <= 1e-12);
        assert!(apply_xxiy_form(&one, &u, 10).is_err());
    }

    #[test]
    fn xyxi_equals_x_form_for_y_independent() {
        let g = grid(32);
        let part = build_partition(&g, minimal_cover_j(&g) + 1).unwrap();
        let p = random_symbol(&g, 9, 6);
        let u = random_band_limited(&g, 15, &mut rng_for(9, 2));
        let r = apply_xyxi_form(&embed_x_as_xyxi(&p).unwrap(), &u, &part, part.j_max, DEFAULT_CUBIC_BUDGET).unwrap();
        assert!(r.value.max_diff(&apply_x_form(&p, &u).unwrap()) <= 1e-12);
        assert_eq!(*r.increments.last().unwrap(), 0.0);
        assert!(apply_xyxi_form(&embed_x_as_xyxi(&p).unwrap(), &u, &part, part.j_max + 1, DEFAULT_CUBIC_BUDGET).is_err());
    }

    #[test]
    fn xyxi_vanishing_factor_matches_shifted_symbol() {
        // (e^{i(x−y)} − 1) g(ξ) acts as the x-form symbol g(ξ−1) − g(ξ)
        let g = grid(32);
        let part = build_partition(&g, minimal_cover_j(&g)).unwrap();
        let gf = |xi: f64| 1.0 / (1.0 + xi * xi);
        let p = SampledSymbol::sample(&g, SymbolForm::XYXi, SymbolClass::smooth(-2.0), ClosedForm::new(move |x, xi, y| (C64::from_polar(1.0, x[0] - y[0]) - 1.0) * gf(xi[0]))).unwrap();
        let q = SampledSymbol::sample(&g, SymbolForm::X, SymbolClass::smooth(-3.0), ClosedForm::new(move |_, xi, _| C64::new(gf(xi[0] - 1.0) - gf(xi[0]), 0.0))).unwrap();
        // spectrum away from the wrap-around node −N/2
        let u = random_band_limited(&g, 14, &mut rng_for(10, 0));
        let r = apply_xyxi_form(&p, &u, &part, part.j_max, DEFAULT_CUBIC_BUDGET).unwrap();
        assert!(r.value.max_diff(&apply_x_form(&q, &u).unwrap()) <= 1e-8);
    }

    #[test]
    fn xyxi_adjoint_identity() {
        let g = grid(16);
        let part = build_partition(&g, minimal_cover_j(&g)).unwrap();
        let mut rng = rng_for(11, 0);
        let vals: Vec<C64> = (0..16 * 16 * 16).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        let p = SampledSymbol::new(&g, SymbolForm::XYXi, vals, SymbolClass::smooth(0.0)).unwrap();
        let u = random_band_limited(&g, 7, &mut rng);
        let v = random_band_limited(&g, 7, &mut rng);
        let pu = apply_xyxi_form(&p, &u, &part, part.j_max, DEFAULT_CUBIC_BUDGET).unwrap().value;
        let pv = apply_xyxi_form(&xyxi_adjoint(&p).unwrap(), &v, &part, part.j_max, DEFAULT_CUBIC_BUDGET).unwrap().value;
        assert!((inner_product(&pu, &v) - inner_product(&u, &pv)).norm() < 1e-12);
    }

    #[test]
    fn symbol_recovery() {
        let g = grid(32);
        let id = symbol_from_operator(&|u| Ok(u.clone()), &g, SymbolClass::smooth(0.0)).unwrap();
        assert!(id.values.iter().all(|v| (v - C64::new(1.0, 0.0)).norm() < 1e-13));
        let d = symbol_from_operator(&|u| spectral_derivative(u, &[1]), &g, SymbolClass::smooth(1.0)).unwrap();
        let one = GridFunction::from_real_fn(&g, |_| 1.0);
        let want = differential_symbol(&g, &[(vec![1], one)], f64::INFINITY).unwrap();
        assert!(d.max_diff(&want) < 1e-12);
        let p0 = random_symbol(&g, 12, 8);
        let rec = symbol_from_operator(&|u| apply_x_form(&p0, u), &g, SymbolClass::smooth(0.0)).unwrap();
        assert!(rec.max_diff(&p0) <= 1e-10);
        let nonlinear = |u: &GridFunction| Ok(u.mul(u));
        assert!(symbol_from_operator(&nonlinear, &g, SymbolClass::smooth(0.0)).is_err());
    }

    #[test]
    fn vanishing_diagonal_gain() {
        // (c(x) − c(y))·(−iξ/⟨ξ⟩) with a ½-Hölder cusp c
        let g = grid(128);
        let part = build_partition(&g, minimal_cover_j(&g)).unwrap();
        let cusp = |t: f64| (t / 2.0).sin().abs().sqrt();
        let p = SampledSymbol::sample(&g, SymbolForm::XYXi, SymbolClass::holder(0.0, 0.5), ClosedForm::new(move |x, xi, y| (cusp(x[0]) - cusp(y[0])) * C64::new(0.0, -xi[0]) / bracket1(xi[0]))).unwrap();
        let apply = |u: &GridFunction| Ok(apply_xyxi_form(&p, u, &part, part.j_max, DEFAULT_CUBIC_BUDGET)?.value);
        let r = plane_wave_gain(&apply, &g, &[4, 8, 16, 32]).unwrap();
        assert!(r.slope <= -0.45 + 0.1, "{r:?}");
    }

    fn bracket1(x: f64) -> f64 {
        (1.0 + x * x).sqrt()
    }

    #[test]
    fn boundedness_ratio_stable() {
        let mut means = Vec::new();
        for npts in [64, 128] {
            let g = grid(npts);
            let p = SampledSymbol::sample(&g, SymbolForm::X, SymbolClass::smooth(1.0), ClosedForm::bracket_power(1.0).product(&ClosedForm::x_only(|x| C64::new(1.5 + x[0].sin(), 0.0)))).unwrap();
            let ins: Vec<GridFunction> = crate::function_spaces::corpus(&g).unwrap().into_iter().map(|(_, u)| u).collect();
            let r = boundedness_ratios(&p, &ins, 0.0).unwrap();
            means.push(r.iter().cloned().fold(0.0, f64::max));
        }
        assert!((means[1] / means[0] - 1.0).abs() < 0.3, "{means:?}");
    }

    proptest! {
        #[test]
        fn adjoint_identity_random(seed in 0u64..30) {
            let g = grid(32);
            let p = random_symbol(&g, seed, 10);
            let u = random_band_limited(&g, 15, &mut rng_for(seed, 1));
            let v = random_band_limited(&g, 15, &mut rng_for(seed, 2));
            prop_assert!(adjoint_check(&p, &u, &v).unwrap().relative() <= 1e-10);
        }

        #[test]
        fn linearity(seed in 0u64..30, a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let g = grid(16);
            let p = random_symbol(&g, seed, 5);
            let u = random_band_limited(&g, 7, &mut rng_for(seed, 1));
            let v = random_band_limited(&g, 7, &mut rng_for(seed, 2));
            let (a, b) = (C64::new(a, 0.3), C64::new(b, -0.1));
            let lhs = apply_x_form(&p, &u.scale(a).axpy(b, &v)).unwrap();
            let rhs = apply_x_form(&p, &u).unwrap().scale(a).axpy(b, &apply_x_form(&p, &v).unwrap());
            prop_assert!(lhs.max_diff(&rhs) <= 1e-12);
            let pe = embed_x_as_xxiy(&p).unwrap();
            let lhs = apply_xxiy_form(&pe, &u.scale(a).axpy(b, &v), DEFAULT_CUBIC_BUDGET).unwrap();
            let rhs = apply_xxiy_form(&pe, &u, DEFAULT_CUBIC_BUDGET).unwrap().scale(a).axpy(b, &apply_xxiy_form(&pe, &v, DEFAULT_CUBIC_BUDGET).unwrap());
            prop_assert!(lhs.max_diff(&rhs) <= 1e-12);
        }
    }
}
