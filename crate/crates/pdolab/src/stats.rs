//! Least-squares slope fits and seeded random inputs.

use crate::core_grid::{inverse_transform, Grid, GridFunction, Side, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Least-squares slope of `y` against `x`. `NaN` for fewer than two points.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len());
    if n < 2 {
        return f64::NAN;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for i in 0..n {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    sxy / sxx
}

/// Slope of `log y` against `log x`, skipping points with `y ≤ floor`.
/// Returns `-∞` when fewer than two points survive and at least one was dropped
/// (the quantity fell under the floor faster than any fitted power).
pub fn loglog_slope(x: &[f64], y: &[f64], floor: f64) -> f64 {
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for (a, b) in x.iter().zip(y) {
        if *b > floor && *a > 0.0 {
            lx.push(a.ln());
            ly.push(b.ln());
        }
    }
    if lx.len() < 2 {
        if lx.len() < x.len() {
            return f64::NEG_INFINITY;
        }
        return f64::NAN;
    }
    fit_slope(&lx, &ly)
}

/// Deterministic generator for a named stream under a seed.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Random complex function whose spectrum is supported in `|k_a| ≤ kmax` on every axis.
pub fn random_band_limited(grid: &Grid, kmax: i64, rng: &mut impl Rng) -> GridFunction {
    let mut v = GridFunction::zeros(grid, Side::Frequency);
    for c in 0..grid.len() {
        let k = grid.k_node(c);
        if k.iter().all(|&ka| ka.abs() <= kmax) {
            v.values[c] = C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) * grid.volume();
        }
    }
    inverse_transform(&v).expect("frequency side")
}

/// Random real band-limited function.
pub fn random_real_band_limited(grid: &Grid, kmax: i64, rng: &mut impl Rng) -> GridFunction {
    let u = random_band_limited(grid, kmax, rng);
    let mut r = u.clone();
    r.values.iter_mut().for_each(|v| *v = C64::new(v.re, 0.0));
    r
}
