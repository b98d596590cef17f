//! Lattice estimators for Hölder, Hölder-Zygmund and Bessel-potential norms.

use crate::core_grid::{apply_multiplier, bracket, multi_indices, spectral_derivative, Grid, GridFunction, C64};
use crate::error::{Error, Result};
use crate::littlewood_paley::{lp_block, phi0, LPPartition};
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormKind {
    Sup,
    Holder { t: usize, theta: f64 },
    HolderSeminorm { theta: f64 },
    Zygmund { tau: f64 },
    Bessel { s: f64, q: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Resolution {
    pub n: usize,
    pub npts: usize,
    pub period: f64,
}

impl Resolution {
    fn of(g: &Grid) -> Self {
        Resolution { n: g.dim(), npts: g.points_per_axis(), period: g.period() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormEstimate {
    pub kind: NormKind,
    pub value: f64,
    pub resolution: Resolution,
}

pub fn sup_norm(u: &GridFunction) -> NormEstimate {
    NormEstimate { kind: NormKind::Sup, value: u.max_abs(), resolution: Resolution::of(&u.grid) }
}

/// Default pair separation `4Δx` used by the Hölder estimators.
pub fn default_min_sep(g: &Grid) -> f64 {
    4.0 * g.dx()
}

/// `sup |u(x)-u(y)| / |x-y|^θ` over lattice pairs at torus distance `≥ min_sep`.
pub fn holder_seminorm(u: &GridFunction, theta: f64, min_sep: f64) -> Result<NormEstimate> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::Precondition(format!("θ = {theta} not in (0,1]")));
    }
    let g = &u.grid;
    if min_sep < 2.0 * g.dx() * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!("min_sep {min_sep} below 2Δx = {}", 2.0 * g.dx())));
    }
    let npts = g.points_per_axis();
    let dx = g.dx();
    // offsets (per axis, in 0..N) with their torus distance
    let offsets: Vec<([usize; 2], f64)> = if g.dim() == 1 {
        (1..=npts / 2).map(|d| ([d, 0], d as f64 * dx)).filter(|o| o.1 >= min_sep * (1.0 - 1e-12)).collect()
    } else {
        let mut v = Vec::new();
        for a in 0..npts {
            for b in 0..npts {
                let da = a.min(npts - a) as f64 * dx;
                let db = b.min(npts - b) as f64 * dx;
                let d = (da * da + db * db).sqrt();
                if d >= min_sep * (1.0 - 1e-12) {
                    v.push(([a, b], d));
                }
            }
        }
        v
    };
    let weights: Vec<f64> = offsets.iter().map(|o| o.1.powf(-theta)).collect();
    let value = (0..g.len())
        .into_par_iter()
        .map(|i| {
            let ij = g.unflatten(i);
            let ui = u.values[i];
            let mut worst: f64 = 0.0;
            for (o, w) in offsets.iter().zip(&weights) {
                let k = g.flatten([(ij[0] + o.0[0]) % npts, (ij[1] + o.0[1]) % npts]);
                worst = worst.max((u.values[k] - ui).norm() * w);
            }
            worst
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(0.0, f64::max);
    Ok(NormEstimate { kind: NormKind::HolderSeminorm { theta }, value, resolution: Resolution::of(g) })
}

/// `‖u‖_{C^t} + max_{|α|=t} [∂^α u]_θ` with `‖u‖_{C^t} = Σ_{|α|≤t} sup|∂^α u|`.
/// `θ = 0` drops the seminorm term.
pub fn holder_norm(u: &GridFunction, t: usize, theta: f64) -> Result<NormEstimate> {
    if t > 4 {
        return Err(Error::OrderTooHigh(t, 4));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::Precondition(format!("θ = {theta} not in [0,1]")));
    }
    let n = u.grid.dim();
    let mut total = 0.0;
    let mut semi: f64 = 0.0;
    for order in 0..=t {
        for alpha in multi_indices(n, order) {
            let d = spectral_derivative(u, &alpha)?;
            total += d.max_abs();
            if order == t && theta > 0.0 {
                semi = semi.max(holder_seminorm(&d, theta, default_min_sep(&u.grid))?.value);
            }
        }
    }
    Ok(NormEstimate { kind: NormKind::Holder { t, theta }, value: total + semi, resolution: Resolution::of(&u.grid) })
}

/// `sup_j 2^{jτ} ‖φ_j(D)u‖_∞` over the blocks of `part`.
pub fn zygmund_norm(u: &GridFunction, tau: f64, part: &LPPartition) -> Result<NormEstimate> {
    let mut best: f64 = 0.0;
    for j in 0..=part.j_max {
        let b = lp_block(u, j, part)?;
        best = best.max(2f64.powf(j as f64 * tau) * b.max_abs());
    }
    Ok(NormEstimate { kind: NormKind::Zygmund { tau }, value: best, resolution: Resolution::of(&u.grid) })
}

/// `(Δx^n Σ |⟨D⟩^s u|^q)^{1/q}`.
pub fn bessel_norm(u: &GridFunction, s: f64, q: f64) -> Result<NormEstimate> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::Precondition(format!("q = {q} not in (1,∞)")));
    }
    let g = u.grid.clone();
    let v = if s == 0.0 {
        u.clone()
    } else {
        apply_multiplier(u, |c| C64::new(bracket(&g.xi_node(c)).powf(s), 0.0))?
    };
    let sum: f64 = v.values.iter().map(|z| z.norm().powf(q)).sum();
    let value = (sum * g.cell_volume()).powf(1.0 / q);
    Ok(NormEstimate { kind: NormKind::Bessel { s, q }, value, resolution: Resolution::of(&g) })
}

#[derive(Clone, Debug, PartialEq)]
pub struct InterpolationReport {
    pub lambda: f64,
    pub lower: f64,
    pub sup: f64,
    pub upper: f64,
    pub ratio: f64,
}

/// `r(u) = ‖u‖_{C^{t,θ}} / (‖u‖_{C^0}^{1-λ} ‖u‖_{C^{k,ϑ}}^λ)` with `λ = (t+θ)/(k+ϑ)`.
pub fn interpolation_check(u: &GridFunction, t: usize, theta: f64, k: usize, vartheta: f64) -> Result<InterpolationReport> {
    if k > 3 {
        return Err(Error::OrderTooHigh(k, 3));
    }
    let a = t as f64 + theta;
    let b = k as f64 + vartheta;
    if a > b || b <= 0.0 {
        return Err(Error::Precondition(format!("need t+θ = {a} ≤ k+ϑ = {b}")));
    }
    let lambda = a / b;
    let lower = holder_norm(u, t, theta)?.value;
    let sup = u.max_abs();
    let upper = holder_norm(u, k, vartheta)?.value;
    let denom = sup.powf(1.0 - lambda) * upper.powf(lambda);
    let ratio = if denom > 0.0 { lower / denom } else { 0.0 };
    Ok(InterpolationReport { lambda, lower, sup, upper, ratio })
}

pub const CORPUS_VERSION: &str = "1.0.0";

/// The fixed 20-member test corpus on a one-dimensional grid: dyadic plane waves, periodic
/// bumps, Hölder cusps, a triangle wave and a sawtooth smoothed by `J_ε`.
pub fn corpus(grid: &Grid) -> Result<Vec<(String, GridFunction)>> {
    if grid.dim() != 1 {
        return Err(Error::Precondition("the corpus is one-dimensional".into()));
    }
    let l = grid.period();
    let ang = move |x: &[f64]| 2.0 * PI * x[0] / l;
    let mut out: Vec<(String, GridFunction)> = Vec::new();
    for k in [1, 2, 4, 8, 16] {
        out.push((format!("sin{k}"), GridFunction::from_real_fn(grid, |x| (k as f64 * ang(x)).sin())));
    }
    out.push(("cos3_sin5".into(), GridFunction::from_real_fn(grid, |x| (3.0 * ang(x)).cos() + 0.5 * (5.0 * ang(x)).sin())));
    for kappa in [1.0, 4.0, 16.0, 32.0] {
        out.push((
            format!("bump{kappa}"),
            GridFunction::from_real_fn(grid, |x| (kappa * ((ang(x) - PI).cos() - 1.0)).exp()),
        ));
    }
    for c in [0.0, 1.0, 2.5] {
        out.push((
            format!("cusp_half_{c}"),
            GridFunction::from_real_fn(grid, |x| ((ang(x) - c) / 2.0).sin().abs().sqrt()),
        ));
    }
    out.push(("cusp_3q".into(), GridFunction::from_real_fn(grid, |x| (ang(x) / 2.0).sin().abs().powf(0.75))));
    out.push(("triangle".into(), GridFunction::from_real_fn(grid, |x| (ang(x) - PI).abs() / PI)));
    let saw = GridFunction::from_real_fn(grid, |x| (ang(x) - PI) / PI);
    let scale = 2.0 * PI / l;
    for eps in [1.0, 0.5, 0.25, 0.125, 0.0625] {
        let g = grid.clone();
        let sm = apply_multiplier(&saw, |c| {
            let xi: Vec<f64> = g.xi_node(c).iter().map(|v| v * eps / scale).collect();
            C64::new(phi0(&xi), 0.0)
        })?;
        out.push((format!("saw_eps{eps}"), sm));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceReport {
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// `max(max_ratio, 1/min_ratio)`.
    pub constant: f64,
}

/// Range of `zygmund_norm(u,τ) / holder_norm(u, ⌊τ⌋, τ-⌊τ⌋)` over a family of functions.
pub fn zygmund_holder_equivalence(members: &[(String, GridFunction)], tau: f64, part: &LPPartition) -> Result<EquivalenceReport> {
    let t = tau.floor() as usize;
    let theta = tau - t as f64;
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for (_, u) in members {
        let z = zygmund_norm(u, tau, part)?.value;
        let h = holder_norm(u, t, theta)?.value;
        let r = z / h;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok(EquivalenceReport { min_ratio: lo, max_ratio: hi, constant: hi.max(1.0 / lo) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_grid::make_torus_grid;
    use crate::littlewood_paley::{build_partition, minimal_cover_j};
    use crate::stats::{loglog_slope, random_band_limited, rng_for};
    use proptest::prelude::*;

    fn grid(npts: usize) -> Grid {
        make_torus_grid(1, npts, 2.0 * PI).unwrap()
    }

    #[test]
    fn holder_seminorm_examples() {
        let g = grid(64);
        let c = GridFunction::from_real_fn(&g, |_| 3.0);
        assert_eq!(holder_seminorm(&c, 0.5, default_min_sep(&g)).unwrap().value, 0.0);
        let s = GridFunction::from_real_fn(&g, |x| x[0].sin());
        let v = holder_seminorm(&s, 1.0, default_min_sep(&g)).unwrap().value;
        assert!(v <= 1.0 + 1e-3 && v >= 0.95);
        assert!(holder_seminorm(&s, 1.0, g.dx()).is_err());
        assert!(holder_seminorm(&s, 1.5, 1.0).is_err());
    }

    #[test]
    fn cusp_seminorm_close_to_dense_sweep() {
        let cusp = |x: &[f64]| (x[0] / 2.0).sin().abs().sqrt();
        let g = grid(128);
        let coarse = holder_seminorm(&GridFunction::from_real_fn(&g, cusp), 0.5, default_min_sep(&g)).unwrap().value;
        let gf = grid(512);
        let fine = holder_seminorm(&GridFunction::from_real_fn(&gf, cusp), 0.5, 2.0 * gf.dx()).unwrap().value;
        assert!((coarse / fine - 1.0).abs() <= 0.1, "{coarse} vs {fine}");
    }

    #[test]
    fn holder_norm_examples() {
        let g = grid(64);
        let c = GridFunction::from_real_fn(&g, |_| 2.0);
        assert!((holder_norm(&c, 2, 0.5).unwrap().value - 2.0).abs() < 1e-12);
        let s = GridFunction::from_real_fn(&g, |x| x[0].sin());
        assert!((holder_norm(&s, 0, 0.0).unwrap().value - 1.0).abs() < 1e-3);
        assert!((holder_norm(&s, 1, 0.0).unwrap().value - 2.0).abs() < 1e-2);
        assert!(holder_norm(&s, 5, 0.0).is_err());
    }

    #[test]
    fn two_dim_holder_seminorm() {
        let g = make_torus_grid(2, 16, 2.0 * PI).unwrap();
        let s = GridFunction::from_real_fn(&g, |x| x[0].sin());
        let v = holder_seminorm(&s, 1.0, default_min_sep(&g)).unwrap().value;
        assert!(v <= 1.0 + 1e-12 && v > 0.9);
    }

    #[test]
    fn zygmund_examples() {
        let g = grid(64);
        let part = build_partition(&g, minimal_cover_j(&g)).unwrap();
        let one = GridFunction::from_real_fn(&g, |_| 1.0);
        assert!((zygmund_norm(&one, 0.7, &part).unwrap().value - 1.0).abs() < 1e-13);
        // k = 8 sits at φ_3(8) = 1
        let e = GridFunction::plane_wave(&g, &[8]);
        let z = zygmund_norm(&e, 0.5, &part).unwrap().value;
        assert!((z - 2f64.powf(1.5)).abs() < 1e-12);
    }

    #[test]
    fn zygmund_matches_bruteforce() {
        let g = grid(64);
        let part = build_partition(&g, minimal_cover_j(&g)).unwrap();
        let u = random_band_limited(&g, 30, &mut rng_for(1, 0));
        let mut best: f64 = 0.0;
        for j in 0..=part.j_max {
            let blk = crate::core_grid::apply_multiplier(&u, |c| {
                let xi = g.xi_node(c);
                C64::new(crate::littlewood_paley::phi_j_radial(j, xi[0].abs()), 0.0)
            })
            .unwrap();
            best = best.max(2f64.powf(0.3 * j as f64) * blk.max_abs());
        }
        let z = zygmund_norm(&u, 0.3, &part).unwrap().value;
        assert!((z - best).abs() <= 1e-13 * best);
    }

    #[test]
    fn bessel_examples() {
        let g = grid(64);
        let u = random_band_limited(&g, 20, &mut rng_for(2, 0));
        let b = bessel_norm(&u, 0.0, 2.0).unwrap().value;
        let fnorm = crate::core_grid::forward_transform(&u).unwrap().l2_norm();
        assert!((b - fnorm).abs() < 1e-12 * b);
        let k = 5;
        let e = GridFunction::plane_wave(&g, &[k]);
        let s = 1.7;
        let want = bracket(&[k as f64]).powf(s) * g.period().sqrt();
        assert!((bessel_norm(&e, s, 2.0).unwrap().value - want).abs() < 1e-11 * want);
        assert!(bessel_norm(&e, s, 1.0).is_err());
        // s = 0 equals the plain lattice L^q norm
        let q = 3.0;
        let lq = (u.values.iter().map(|z| z.norm().powf(q)).sum::<f64>() * g.dx()).powf(1.0 / q);
        assert!((bessel_norm(&u, 0.0, q).unwrap().value - lq).abs() < 1e-12 * lq);
    }

    #[test]
    fn interpolation_examples() {
        let g = grid(128);
        let c = GridFunction::from_real_fn(&g, |_| 1.5);
        let r = interpolation_check(&c, 0, 0.5, 1, 0.0).unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-12);
        let s = GridFunction::from_real_fn(&g, |x| (3.0 * x[0]).sin() + 0.2);
        let same = interpolation_check(&s, 1, 0.5, 1, 0.5).unwrap();
        assert!(same.ratio <= 1.0 + 1e-10);
        assert!(interpolation_check(&s, 1, 0.5, 0, 0.5).is_err());
        assert!(interpolation_check(&s, 0, 0.5, 4, 0.0).is_err());
    }

    #[test]
    fn interpolation_ratio_flat_for_scaled_waves() {
        let g = grid(256);
        let lams = [1.0, 2.0, 4.0, 8.0, 16.0];
        let r: Vec<f64> = lams
            .iter()
            .map(|&l| {
                let u = GridFunction::from_real_fn(&g, |x| (l * x[0]).sin());
                interpolation_check(&u, 0, 0.5, 1, 0.0).unwrap().ratio
            })
            .collect();
        let slope = loglog_slope(&lams, &r, 0.0);
        assert!(slope.abs() <= 0.1, "slope {slope}");
    }

    #[test]
    fn corpus_has_twenty_finite_members() {
        let g = grid(128);
        let c = corpus(&g).unwrap();
        assert_eq!(c.len(), 20);
        for (name, u) in &c {
            assert!(u.is_finite(), "{name}");
            let r = interpolation_check(u, 0, 0.5, 1, 0.0).unwrap();
            assert!(r.ratio.is_finite() && r.ratio >= 0.0, "{name}");
        }
        assert!(corpus(&make_torus_grid(2, 8, 1.0).unwrap()).is_err());
    }

    #[test]
    fn crude_seminorm_bound() {
        let g = grid(64);
        for (_, u) in corpus(&g).unwrap() {
            let ms = default_min_sep(&g);
            let v = holder_seminorm(&u, 0.5, ms).unwrap().value;
            assert!(v <= 2.0 * u.max_abs() / ms.powf(0.5));
        }
    }

    proptest! {
        #[test]
        fn bessel_monotone_in_s(seed in 0u64..200, s in -2.0f64..2.0, ds in 0.01f64..2.0) {
            let g = grid(64);
            let u = random_band_limited(&g, 31, &mut rng_for(seed, 0));
            let a = bessel_norm(&u, s, 2.0).unwrap().value;
            let b = bessel_norm(&u, s + ds, 2.0).unwrap().value;
            prop_assert!(a <= b * (1.0 + 1e-13));
        }

        #[test]
        fn seminorm_monotone_under_refinement(seed in 0u64..100, theta in 0.1f64..1.0) {
            let mut rng = rng_for(seed, 1);
            use rand::Rng;
            let coeffs: Vec<f64> = (0..6).map(|_| rng.gen::<f64>() - 0.5).collect();
            let f = |x: &[f64]| -> f64 { coeffs.iter().enumerate().map(|(k, c)| c * ((k + 1) as f64 * x[0]).sin()).sum() };
            let g1 = grid(32);
            let g2 = grid(64);
            let ms = default_min_sep(&g1);
            let a = holder_seminorm(&GridFunction::from_real_fn(&g1, f), theta, ms).unwrap().value;
            let b = holder_seminorm(&GridFunction::from_real_fn(&g2, f), theta, ms).unwrap().value;
            prop_assert!(b >= a * (1.0 - 1e-12));
        }
    }
}
