//! Periodic grids on the torus `[0,L)^n`, the discrete Fourier transform and the
//! japanese bracket.
//!
//! Forward: `û(ξ) = Δx^n Σ_x e^{-ix·ξ} u(x)`. Inverse: `u(x) = L^{-n} Σ_ξ e^{ix·ξ} v(ξ)`.
//! Frequency-side arrays are stored centered: index `c` on an axis is `k = c - N/2`.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

pub type C64 = Complex64;

pub const MAX_SPECTRAL_ORDER: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    n: usize,
    npts: usize,
    period: f64,
}

/// Construct the torus grid `[0,L)^n` with `N` points per axis.
pub fn make_torus_grid(n: usize, npts: usize, period: f64) -> Result<Grid> {
    if n != 1 && n != 2 {
        return Err(Error::InvalidGrid(format!("dimension {n} not in {{1,2}}")));
    }
    if npts < 8 || npts % 2 != 0 {
        return Err(Error::InvalidGrid(format!("N = {npts} must be even and at least 8")));
    }
    if !(period > 0.0) || !period.is_finite() {
        return Err(Error::InvalidGrid(format!("period {period} must be positive")));
    }
    Ok(Grid { n, npts, period })
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.n
    }
    pub fn points_per_axis(&self) -> usize {
        self.npts
    }
    pub fn period(&self) -> f64 {
        self.period
    }
    /// Total number of nodes `N^n`.
    pub fn len(&self) -> usize {
        self.npts.pow(self.n as u32)
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn dx(&self) -> f64 {
        self.period / self.npts as f64
    }
    pub fn dxi(&self) -> f64 {
        2.0 * PI / self.period
    }
    /// `Δx^n`, the Riemann weight of physical sums.
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.n as i32)
    }
    /// `L^n`.
    pub fn volume(&self) -> f64 {
        self.period.powi(self.n as i32)
    }

    /// Per-axis indices of a flat index.
    pub fn unflatten(&self, idx: usize) -> [usize; 2] {
        if self.n == 1 {
            [idx, 0]
        } else {
            [idx / self.npts, idx % self.npts]
        }
    }

    pub fn flatten(&self, ij: [usize; 2]) -> usize {
        if self.n == 1 {
            ij[0]
        } else {
            ij[0] * self.npts + ij[1]
        }
    }

    pub fn x_axis(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    /// Integer wavenumber on one axis for the centered index `c`.
    pub fn k_axis(&self, c: usize) -> i64 {
        c as i64 - (self.npts / 2) as i64
    }

    pub fn xi_axis(&self, c: usize) -> f64 {
        self.k_axis(c) as f64 * self.dxi()
    }

    pub fn x_node(&self, idx: usize) -> Vec<f64> {
        let ij = self.unflatten(idx);
        (0..self.n).map(|a| self.x_axis(ij[a])).collect()
    }

    pub fn xi_node(&self, idx: usize) -> Vec<f64> {
        let ij = self.unflatten(idx);
        (0..self.n).map(|a| self.xi_axis(ij[a])).collect()
    }

    pub fn k_node(&self, idx: usize) -> Vec<i64> {
        let ij = self.unflatten(idx);
        (0..self.n).map(|a| self.k_axis(ij[a])).collect()
    }

    /// Centered frequency index of an integer wavenumber vector, if it lies on the lattice.
    pub fn xi_index_of(&self, k: &[i64]) -> Option<usize> {
        let half = (self.npts / 2) as i64;
        let mut ij = [0usize; 2];
        for a in 0..self.n {
            let c = k[a] + half;
            if c < 0 || c >= self.npts as i64 {
                return None;
            }
            ij[a] = c as usize;
        }
        Some(self.flatten(ij))
    }

    /// True when some axis of the frequency node sits on the unpaired `-N/2` mode.
    pub fn is_nyquist_axis(&self, idx: usize, axis: usize) -> bool {
        self.unflatten(idx)[axis] == 0
    }

    /// Largest `|ξ|` over the lattice.
    pub fn max_abs_xi(&self) -> f64 {
        (self.npts / 2) as f64 * self.dxi() * (self.n as f64).sqrt()
    }

    /// Torus distance between two physical nodes.
    pub fn torus_distance(&self, a: usize, b: usize) -> f64 {
        let ia = self.unflatten(a);
        let ib = self.unflatten(b);
        let mut s = 0.0;
        for ax in 0..self.n {
            let d = (ia[ax] as i64 - ib[ax] as i64).unsigned_abs() as usize;
            let d = d.min(self.npts - d) as f64 * self.dx();
            s += d * d;
        }
        s.sqrt()
    }

    /// Same lattice, shape and period.
    pub fn compatible(&self, other: &Grid) -> bool {
        self.n == other.n && self.npts == other.npts && (self.period - other.period).abs() <= 1e-14 * self.period
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Physical,
    Frequency,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Physical => "physical",
            Side::Frequency => "frequency",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub side: Side,
    pub values: Vec<C64>,
}

impl GridFunction {
    pub fn new(grid: &Grid, side: Side, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Precondition(format!(
                "{} values for a grid with {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(GridFunction { grid: grid.clone(), side, values })
    }

    pub fn zeros(grid: &Grid, side: Side) -> Self {
        GridFunction { grid: grid.clone(), side, values: vec![C64::new(0.0, 0.0); grid.len()] }
    }

    /// Sample `f` at the physical nodes.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> C64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.x_node(i))).collect();
        GridFunction { grid: grid.clone(), side: Side::Physical, values }
    }

    pub fn from_real_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        Self::from_fn(grid, |x| C64::new(f(x), 0.0))
    }

    /// Sample `f` at the frequency nodes.
    pub fn from_xi_fn(grid: &Grid, f: impl Fn(&[f64]) -> C64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.xi_node(i))).collect();
        GridFunction { grid: grid.clone(), side: Side::Frequency, values }
    }

    /// `e^{i k·x (2π/L)}` for an integer wavenumber vector.
    pub fn plane_wave(grid: &Grid, k: &[i64]) -> Self {
        let dxi = grid.dxi();
        Self::from_fn(grid, |x| {
            let ph: f64 = x.iter().zip(k).map(|(a, &b)| a * b as f64 * dxi).sum();
            C64::from_polar(1.0, ph)
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut r = self.clone();
        r.values.iter_mut().for_each(|v| *v *= s);
        r
    }

    pub fn axpy(&self, a: C64, other: &GridFunction) -> Self {
        let mut r = self.clone();
        for (v, w) in r.values.iter_mut().zip(&other.values) {
            *v += a * w;
        }
        r
    }

    pub fn sub(&self, other: &GridFunction) -> Self {
        self.axpy(C64::new(-1.0, 0.0), other)
    }

    pub fn mul(&self, other: &GridFunction) -> Self {
        let mut r = self.clone();
        for (v, w) in r.values.iter_mut().zip(&other.values) {
            *v *= w;
        }
        r
    }

    pub fn max_diff(&self, other: &GridFunction) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Lattice `L²` norm `(Δx^n Σ|u|²)^{1/2}` on the physical side, `(L^{-n} Σ|v|²)^{1/2}` on the frequency side.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        match self.side {
            Side::Physical => (s * self.grid.cell_volume()).sqrt(),
            Side::Frequency => (s / self.grid.volume()).sqrt(),
        }
    }

    pub(crate) fn expect_side(&self, side: Side) -> Result<()> {
        if self.side != side {
            return Err(Error::SideMismatch { expected: side.name(), got: self.side.name() });
        }
        Ok(())
    }
}

thread_local! {
    static PLANS: RefCell<HashMap<(usize, bool), Arc<dyn Fft<f64>>>> = RefCell::new(HashMap::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|p| {
        p.borrow_mut()
            .entry((len, inverse))
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                if inverse {
                    planner.plan_fft_inverse(len)
                } else {
                    planner.plan_fft_forward(len)
                }
            })
            .clone()
    })
}

/// Unnormalized in-place DFT of a row-major `N^n` array along every axis.
pub(crate) fn fft_nd(data: &mut [C64], n: usize, npts: usize, inverse: bool) {
    let f = plan(npts, inverse);
    if n == 1 {
        f.process(data);
        return;
    }
    for row in data.chunks_mut(npts) {
        f.process(row);
    }
    let mut col = vec![C64::new(0.0, 0.0); npts];
    for j in 0..npts {
        for i in 0..npts {
            col[i] = data[i * npts + j];
        }
        f.process(&mut col);
        for i in 0..npts {
            data[i * npts + j] = col[i];
        }
    }
}

fn shift_index(grid: &Grid, idx: usize) -> usize {
    // centered index -> standard DFT order
    let half = grid.npts / 2;
    let ij = grid.unflatten(idx);
    let mut s = [0usize; 2];
    for a in 0..grid.n {
        s[a] = (ij[a] + half) % grid.npts;
    }
    grid.flatten(s)
}

/// `û(ξ) = Δx^n Σ_x e^{-ix·ξ} u(x)` on the centered frequency lattice.
pub fn forward_transform(u: &GridFunction) -> Result<GridFunction> {
    u.expect_side(Side::Physical)?;
    let g = &u.grid;
    let mut buf = u.values.clone();
    fft_nd(&mut buf, g.n, g.npts, false);
    let w = g.cell_volume();
    let values = (0..g.len()).map(|c| buf[shift_index(g, c)] * w).collect();
    Ok(GridFunction { grid: g.clone(), side: Side::Frequency, values })
}

/// `u(x) = L^{-n} Σ_ξ e^{ix·ξ} v(ξ)`.
pub fn inverse_transform(v: &GridFunction) -> Result<GridFunction> {
    v.expect_side(Side::Frequency)?;
    let g = &v.grid;
    let mut buf = vec![C64::new(0.0, 0.0); g.len()];
    for c in 0..g.len() {
        buf[shift_index(g, c)] = v.values[c];
    }
    fft_nd(&mut buf, g.n, g.npts, true);
    let w = 1.0 / g.volume();
    buf.iter_mut().for_each(|z| *z *= w);
    Ok(GridFunction { grid: g.clone(), side: Side::Physical, values: buf })
}

/// Japanese bracket `⟨ξ⟩ = (1+|ξ|²)^{1/2}`.
pub fn bracket(xi: &[f64]) -> f64 {
    (1.0 + xi.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// Apply the Fourier multiplier `m(ξ)` (given per frequency index) to a physical function.
pub fn apply_multiplier(u: &GridFunction, m: impl Fn(usize) -> C64) -> Result<GridFunction> {
    let mut v = forward_transform(u)?;
    for (c, val) in v.values.iter_mut().enumerate() {
        *val *= m(c);
    }
    inverse_transform(&v)
}

/// Lattice multiplier of `∂^α`: `(iξ)^α`, set to zero on the Nyquist node of any axis
/// carrying an odd derivative order.
pub fn derivative_multiplier(grid: &Grid, c: usize, alpha: &[usize]) -> C64 {
    let xi = grid.xi_node(c);
    let mut m = C64::new(1.0, 0.0);
    for (a, &order) in alpha.iter().enumerate().take(grid.dim()) {
        if order == 0 {
            continue;
        }
        if order % 2 == 1 && grid.is_nyquist_axis(c, a) {
            return C64::new(0.0, 0.0);
        }
        m *= C64::new(0.0, xi[a]).powu(order as u32);
    }
    m
}

/// `∂^α u` via the multiplier `(iξ)^α`.
pub fn spectral_derivative(u: &GridFunction, alpha: &[usize]) -> Result<GridFunction> {
    let order: usize = alpha.iter().sum();
    if order > MAX_SPECTRAL_ORDER {
        return Err(Error::OrderTooHigh(order, MAX_SPECTRAL_ORDER));
    }
    if alpha.len() != u.grid.dim() {
        return Err(Error::Precondition(format!(
            "multi-index of length {} on a {}-dimensional grid",
            alpha.len(),
            u.grid.dim()
        )));
    }
    if order == 0 {
        u.expect_side(Side::Physical)?;
        return Ok(u.clone());
    }
    let g = u.grid.clone();
    apply_multiplier(u, |c| derivative_multiplier(&g, c, alpha))
}

/// All multi-indices of length `n` with `|α| = order`.
pub fn multi_indices(n: usize, order: usize) -> Vec<Vec<usize>> {
    if n == 1 {
        return vec![vec![order]];
    }
    (0..=order).rev().map(|a| vec![a, order - a]).collect()
}

/// All multi-indices of length `n` with `|α| ≤ order`, sorted by order.
pub fn multi_indices_upto(n: usize, order: usize) -> Vec<Vec<usize>> {
    (0..=order).flat_map(|o| multi_indices(n, o)).collect()
}

/// Trigonometric interpolation of a physical lattice function at an arbitrary point.
/// The Nyquist mode is split symmetrically so that real data interpolate to real values.
pub struct TrigInterpolant {
    grid: Grid,
    coeffs: Vec<C64>,
}

impl TrigInterpolant {
    pub fn new(u: &GridFunction) -> Result<Self> {
        let v = forward_transform(u)?;
        Ok(TrigInterpolant { grid: u.grid.clone(), coeffs: v.values })
    }

    pub fn eval(&self, x: &[f64]) -> C64 {
        let g = &self.grid;
        let npts = g.npts;
        let dxi = g.dxi();
        // per-axis phase tables e^{i x ξ_k}, Nyquist averaged with +N/2
        let axis_table = |xa: f64| -> Vec<C64> {
            (0..npts)
                .map(|c| {
                    if c == 0 {
                        let k = (npts / 2) as f64 * dxi;
                        C64::new((k * xa).cos(), 0.0)
                    } else {
                        C64::from_polar(1.0, g.xi_axis(c) * xa)
                    }
                })
                .collect()
        };
        let t0 = axis_table(x[0]);
        let mut s = C64::new(0.0, 0.0);
        if g.n == 1 {
            for c in 0..npts {
                s += self.coeffs[c] * t0[c];
            }
        } else {
            let t1 = axis_table(x[1]);
            for i in 0..npts {
                let mut row = C64::new(0.0, 0.0);
                for j in 0..npts {
                    row += self.coeffs[i * npts + j] * t1[j];
                }
                s += row * t0[i];
            }
        }
        s / g.volume()
    }
}

/// Largest violation `⟨ξ⟩^s - 2^{|s|}⟨ξ-η⟩^{|s|}⟨η⟩^s` over all lattice pairs (negative when the
/// inequality holds with room to spare).
pub fn peetre_max_violation(grid: &Grid, s: f64) -> f64 {
    use rayon::prelude::*;
    let nodes: Vec<Vec<f64>> = (0..grid.len()).map(|i| grid.xi_node(i)).collect();
    let c = 2f64.powf(s.abs());
    nodes
        .par_iter()
        .map(|xi| {
            let bx = bracket(xi).powf(s);
            let mut worst = f64::NEG_INFINITY;
            for eta in &nodes {
                let d: Vec<f64> = xi.iter().zip(eta).map(|(a, b)| a - b).collect();
                let rhs = c * bracket(&d).powf(s.abs()) * bracket(eta).powf(s);
                worst = worst.max((bx - rhs) / rhs.max(1.0));
            }
            worst
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Fitted constant `max_ξ |D^α⟨ξ⟩^m| / ⟨ξ⟩^{m-|α|}` with `D^α` a central finite difference of
/// step `h` along the first axis (1-D lattice nodes up to `|ξ| ≤ xi_max`).
pub fn bracket_derivative_constant(m: f64, order: usize, xi_max: f64, samples: usize) -> f64 {
    let h = 1e-2;
    let f = |t: f64| (1.0 + t * t).powf(m / 2.0);
    let fd = |t: f64| -> f64 {
        match order {
            0 => f(t),
            1 => (f(t + h) - f(t - h)) / (2.0 * h),
            2 => (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h),
            _ => (f(t + 2.0 * h) - 2.0 * f(t + h) + 2.0 * f(t - h) - f(t - 2.0 * h)) / (2.0 * h * h * h),
        }
    };
    (0..=samples)
        .map(|i| {
            let t = xi_max * i as f64 / samples as f64;
            fd(t).abs() / (1.0 + t * t).powf((m - order as f64) / 2.0)
        })
        .fold(0.0, f64::max)
}

/// Riemann sums of `⟨x⟩^{-s}` over the boxes `[-R,R]^n` for each `R` in `radii`.
pub fn bracket_power_box_sums(n: usize, s: f64, h: f64, radii: &[f64]) -> Vec<f64> {
    radii
        .iter()
        .map(|&r| {
            let m = (r / h).round() as i64;
            let mut acc = 0.0;
            if n == 1 {
                for i in -m..=m {
                    let x = i as f64 * h;
                    acc += (1.0 + x * x).powf(-s / 2.0) * h;
                }
            } else {
                for i in -m..=m {
                    for j in -m..=m {
                        let (x, y) = (i as f64 * h, j as f64 * h);
                        acc += (1.0 + x * x + y * y).powf(-s / 2.0) * h * h;
                    }
                }
            }
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn dft_direct(u: &GridFunction) -> Vec<C64> {
        let g = &u.grid;
        (0..g.len())
            .map(|c| {
                let xi = g.xi_node(c);
                let mut s = C64::new(0.0, 0.0);
                for i in 0..g.len() {
                    let x = g.x_node(i);
                    let ph: f64 = x.iter().zip(&xi).map(|(a, b)| a * b).sum();
                    s += u.values[i] * C64::from_polar(1.0, -ph);
                }
                s * g.cell_volume()
            })
            .collect()
    }

    #[test]
    fn grid_lattices() {
        let g = make_torus_grid(1, 8, 2.0 * PI).unwrap();
        assert!((g.x_axis(1) - PI / 4.0).abs() < 1e-15);
        assert!((g.x_axis(7) - 7.0 * PI / 4.0).abs() < 1e-14);
        let ks: Vec<i64> = (0..8).map(|c| g.k_axis(c)).collect();
        assert_eq!(ks, vec![-4, -3, -2, -1, 0, 1, 2, 3]);
        assert!((g.dx() * g.dxi() * 8.0 - 2.0 * PI).abs() < 1e-14);

        let g2 = make_torus_grid(2, 16, 2.0 * PI).unwrap();
        assert_eq!(g2.len(), 256);
        assert!((g2.dxi() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(make_torus_grid(1, 7, 2.0 * PI).is_err());
        assert!(make_torus_grid(3, 8, 1.0).is_err());
        assert!(make_torus_grid(1, 8, 0.0).is_err());
        assert!(make_torus_grid(1, 6, 1.0).is_err());
    }

    #[test]
    fn constant_and_plane_wave_transforms() {
        let g = make_torus_grid(1, 8, 2.0 * PI).unwrap();
        let one = GridFunction::from_real_fn(&g, |_| 1.0);
        let v = forward_transform(&one).unwrap();
        let zero = g.xi_index_of(&[0]).unwrap();
        for (cidx, val) in v.values.iter().enumerate() {
            let want = if cidx == zero { 2.0 * PI } else { 0.0 };
            assert!((val - c(want, 0.0)).norm() < 1e-13);
        }
        let w = forward_transform(&GridFunction::plane_wave(&g, &[1])).unwrap();
        let one_idx = g.xi_index_of(&[1]).unwrap();
        for (cidx, val) in w.values.iter().enumerate() {
            let want = if cidx == one_idx { 2.0 * PI } else { 0.0 };
            assert!((val - c(want, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn fft_matches_direct_sum_on_bump() {
        for (n, npts) in [(1, 32), (2, 8)] {
            let g = make_torus_grid(n, npts, 2.0 * PI).unwrap();
            let u = GridFunction::from_fn(&g, |x| {
                let r2: f64 = x.iter().map(|v| (v - PI) * (v - PI)).sum();
                c((-r2).exp(), 0.3 * (-2.0 * r2).exp())
            });
            let fast = forward_transform(&u).unwrap();
            let slow = dft_direct(&u);
            let scale = slow.iter().map(|v| v.norm()).fold(0.0, f64::max);
            for (a, b) in fast.values.iter().zip(&slow) {
                assert!((a - b).norm() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn single_frequency_inverse() {
        let g = make_torus_grid(2, 8, 3.0).unwrap();
        let k = [2i64, -1];
        let mut v = GridFunction::zeros(&g, Side::Frequency);
        v.values[g.xi_index_of(&k).unwrap()] = c(1.0, 0.0);
        let u = inverse_transform(&v).unwrap();
        let want = GridFunction::plane_wave(&g, &k).scale(c(1.0 / g.volume(), 0.0));
        assert!(u.max_diff(&want) < 1e-15);
    }

    #[test]
    fn side_mismatch_is_an_error() {
        let g = make_torus_grid(1, 8, 1.0).unwrap();
        let u = GridFunction::zeros(&g, Side::Frequency);
        assert!(matches!(forward_transform(&u), Err(Error::SideMismatch { .. })));
        let v = GridFunction::zeros(&g, Side::Physical);
        assert!(inverse_transform(&v).is_err());
    }

    #[test]
    fn bracket_values() {
        assert_eq!(bracket(&[0.0]), 1.0);
        assert!((bracket(&[1.0]) - 2f64.sqrt()).abs() < 1e-15);
        assert!((bracket(&[3.0, 4.0]) - 26f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn spectral_derivative_examples() {
        let g = make_torus_grid(1, 32, 2.0 * PI).unwrap();
        let e = GridFunction::plane_wave(&g, &[1]);
        let d = spectral_derivative(&e, &[1]).unwrap();
        assert!(d.max_diff(&e.scale(c(0.0, 1.0))) < 1e-10);
        let s2 = GridFunction::from_real_fn(&g, |x| (2.0 * x[0]).sin());
        let d2 = spectral_derivative(&s2, &[2]).unwrap();
        assert!(d2.max_diff(&s2.scale(c(-4.0, 0.0))) < 1e-10);
        assert!(matches!(spectral_derivative(&e, &[9]), Err(Error::OrderTooHigh(9, 8))));
    }

    #[test]
    fn spectral_derivative_vs_fourth_order_fd() {
        let g = make_torus_grid(1, 128, 2.0 * PI).unwrap();
        let f = |x: f64| (x).sin() + 0.5 * (3.0 * x).cos();
        let u = GridFunction::from_real_fn(&g, |x| f(x[0]));
        let d = spectral_derivative(&u, &[1]).unwrap();
        let h = g.dx();
        let n = g.len();
        let mut err: f64 = 0.0;
        for i in 0..n {
            let at = |k: i64| u.values[((i as i64 + k).rem_euclid(n as i64)) as usize].re;
            let fd = (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * h);
            err = err.max((fd - d.values[i].re).abs());
        }
        // fourth-order: error ~ C h^4 with C ~ max|f^(5)|/30
        assert!(err < 81.0 * 0.5 * h.powi(4) * 4.0, "err {err}");
    }

    #[test]
    fn nyquist_zeroed_for_odd_orders() {
        let g = make_torus_grid(1, 8, 2.0 * PI).unwrap();
        let nyq = GridFunction::plane_wave(&g, &[-4]);
        assert!(spectral_derivative(&nyq, &[1]).unwrap().max_abs() < 1e-14);
        let d2 = spectral_derivative(&nyq, &[2]).unwrap();
        assert!(d2.max_diff(&nyq.scale(c(-16.0, 0.0))) < 1e-12);
        // real input stays real under odd-order differentiation
        let r = GridFunction::from_real_fn(&g, |x| (x[0] * 1.3).sin().exp());
        let dr = spectral_derivative(&r, &[1]).unwrap();
        assert!(dr.values.iter().all(|v| v.im.abs() < 1e-13));
    }

    #[test]
    fn trig_interpolant_reproduces_band_limited() {
        let g = make_torus_grid(1, 16, 2.0 * PI).unwrap();
        let f = |x: f64| (2.0 * x).cos() + (5.0 * x).sin();
        let u = GridFunction::from_real_fn(&g, |x| f(x[0]));
        let ti = TrigInterpolant::new(&u).unwrap();
        for &x in &[0.1, 1.7, 3.3, 6.0] {
            assert!((ti.eval(&[x]) - c(f(x), 0.0)).norm() < 1e-13);
        }
        let g2 = make_torus_grid(2, 8, 2.0 * PI).unwrap();
        let f2 = |x: &[f64]| (x[0] + 2.0 * x[1]).sin();
        let u2 = GridFunction::from_real_fn(&g2, f2);
        let t2 = TrigInterpolant::new(&u2).unwrap();
        assert!((t2.eval(&[0.3, 1.1]).re - f2(&[0.3, 1.1])).abs() < 1e-13);
    }

    #[test]
    fn peetre_holds_on_small_lattice() {
        let g = make_torus_grid(1, 16, 2.0 * PI).unwrap();
        for s in [-2.0, -1.0, 0.5, 1.0, 3.0] {
            assert!(peetre_max_violation(&g, s) <= 1e-13);
        }
    }

    #[test]
    fn bracket_derivative_constants_are_stable() {
        for m in [-2.0, 0.0, 1.0, 3.0] {
            for order in 0..=3 {
                let a = bracket_derivative_constant(m, order, 32.0, 64);
                let b = bracket_derivative_constant(m, order, 64.0, 256);
                assert!(a.is_finite() && b.is_finite());
                if a > 1e-8 {
                    assert!((b / a - 1.0).abs() <= 0.2, "m {m} order {order}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn bracket_power_summability() {
        let sums = bracket_power_box_sums(1, 2.0, 0.05, &[10.0, 20.0, 40.0, 80.0]);
        let d: Vec<f64> = sums.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        assert!(d[0] > d[1] && d[1] > d[2]);
        assert!((sums[3] - PI).abs() < 0.03);
    }

    proptest! {
        #[test]
        fn round_trip_and_plancherel(seed in 0u64..1000, n in 1usize..=2) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let npts = if n == 1 { 64 } else { 16 };
            let g = make_torus_grid(n, npts, 1.0 + rng.gen::<f64>() * 10.0).unwrap();
            let u = GridFunction::new(&g, Side::Physical,
                (0..g.len()).map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect()).unwrap();
            let v = forward_transform(&u).unwrap();
            let w = inverse_transform(&v).unwrap();
            prop_assert!(w.max_diff(&u) <= 1e-12 * u.max_abs());
            let lhs = u.l2_norm();
            let rhs = v.l2_norm();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs);
        }

        #[test]
        fn bracket_exceeds_norm(a in -1e3f64..1e3, b in -1e3f64..1e3) {
            let br = bracket(&[a, b]);
            prop_assert!(br >= 1.0);
            prop_assert!(br > (a * a + b * b).sqrt());
        }
    }
}
