//! Littlewood-Paley partition built from the bump recipe
//! `f(t) = e^{-1/t}`, `g(t) = f(t)/(f(t)+f(1-t))`, `h(t) = g(2+t) g(2-t)`, `φ_0(ξ) = h(|ξ|)`,
//! and `φ_j(ξ) = φ_0(2^{-j}ξ) - φ_0(2^{-j+1}ξ)`.

use crate::core_grid::{apply_multiplier, bracket, Grid, GridFunction, Side, C64};
use crate::error::{Error, Result};

/// Below this argument `e^{-1/t}` is treated as exactly zero.
pub const F_CUTOFF: f64 = 1e-3;

pub fn base_f(t: f64) -> f64 {
    if t < F_CUTOFF {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Smooth step: 0 for `t ≤ 0`, 1 for `t ≥ 1`.
pub fn base_g(t: f64) -> f64 {
    let a = base_f(t);
    let b = base_f(1.0 - t);
    a / (a + b)
}

pub fn base_h(t: f64) -> f64 {
    base_g(2.0 + t) * base_g(2.0 - t)
}

/// Radial profile of `φ_0`: 1 on `[0,1]`, 0 on `[2,∞)`.
pub fn phi0_radial(r: f64) -> f64 {
    base_h(r)
}

/// `φ_0(ξ)` evaluated from the closed form.
pub fn phi0(xi: &[f64]) -> f64 {
    phi0_radial(xi.iter().map(|v| v * v).sum::<f64>().sqrt())
}

/// Radial profile of `φ_j`.
pub fn phi_j_radial(j: usize, r: f64) -> f64 {
    if j == 0 {
        phi0_radial(r)
    } else {
        let s = 2f64.powi(-(j as i32));
        phi0_radial(s * r) - phi0_radial(2.0 * s * r)
    }
}

/// Closed-form evaluator of `φ_0`, packaged as a value.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BaseCutoff;

impl BaseCutoff {
    pub fn eval(&self, xi: &[f64]) -> f64 {
        phi0(xi)
    }
}

pub fn build_base_cutoff() -> BaseCutoff {
    BaseCutoff
}

#[derive(Clone, Debug)]
pub struct LPPartition {
    pub grid: Grid,
    pub j_max: usize,
    pub blocks: Vec<GridFunction>,
    pub base_cutoff: BaseCutoff,
}

/// Smallest `J` with `2^J ≥ max|ξ|`, so that `Σ_{j≤J} φ_j = 1` on the whole lattice.
pub fn minimal_cover_j(grid: &Grid) -> usize {
    let m = grid.max_abs_xi();
    let mut j = 0;
    while 2f64.powi(j as i32) < m {
        j += 1;
    }
    j
}

pub fn build_partition(grid: &Grid, j_max: usize) -> Result<LPPartition> {
    if 2f64.powi(j_max as i32 + 1) < grid.max_abs_xi() {
        return Err(Error::Precondition(format!(
            "J = {j_max} does not cover the lattice radius {}",
            grid.max_abs_xi()
        )));
    }
    let blocks = (0..=j_max)
        .map(|j| {
            GridFunction::from_xi_fn(grid, |xi| {
                let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
                C64::new(phi_j_radial(j, r), 0.0)
            })
        })
        .collect();
    Ok(LPPartition { grid: grid.clone(), j_max, blocks, base_cutoff: BaseCutoff })
}

impl LPPartition {
    /// Sampled `φ_j` at frequency index `c`.
    pub fn phi(&self, j: usize, c: usize) -> f64 {
        self.blocks[j].values[c].re
    }

    /// Largest deviation of `Σ_j φ_j` from 1 over lattice nodes with `|ξ| ≤ 2^J`.
    pub fn unity_deviation(&self) -> f64 {
        let lim = 2f64.powi(self.j_max as i32);
        (0..self.grid.len())
            .filter(|&c| self.grid.xi_node(c).iter().map(|v| v * v).sum::<f64>().sqrt() <= lim)
            .map(|c| {
                let s: f64 = (0..=self.j_max).map(|j| self.phi(j, c)).sum();
                (s - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Largest deviation of `(φ_{j-1}+φ_j+φ_{j+1})φ_j` from `φ_j`.
    pub fn neighbor_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for c in 0..self.grid.len() {
            for j in 0..=self.j_max {
                let prev = if j > 0 { self.phi(j - 1, c) } else { 0.0 };
                let next = if j < self.j_max { self.phi(j + 1, c) } else { 0.0 };
                let pj = self.phi(j, c);
                worst = worst.max(((prev + pj + next) * pj - pj).abs());
            }
        }
        worst
    }

    /// Largest deviation of the partial sums `Σ_{j≤k} φ_j(ξ)` from `φ_0(2^{-k}ξ)`.
    pub fn telescoping_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for c in 0..self.grid.len() {
            let xi = self.grid.xi_node(c);
            let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut acc = 0.0;
            for k in 0..=self.j_max {
                acc += self.phi(k, c);
                worst = worst.max((acc - phi0_radial(r * 2f64.powi(-(k as i32)))).abs());
            }
        }
        worst
    }

    /// Count of lattice nodes where `φ_j ≠ 0` outside the ring `D_j` (or `|ξ| ≤ 2` for `j = 0`).
    pub fn support_violations(&self) -> usize {
        let mut bad = 0;
        for c in 0..self.grid.len() {
            let xi = self.grid.xi_node(c);
            let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
            for j in 0..=self.j_max {
                let p = self.phi(j, c);
                let inside = if j == 0 {
                    r <= 2.0
                } else {
                    let s = 2f64.powi(j as i32);
                    r >= s / 2.0 && r <= 2.0 * s
                };
                if p != 0.0 && !inside {
                    bad += 1;
                }
                if !(0.0..=1.0).contains(&p) {
                    bad += 1;
                }
            }
        }
        bad
    }
}

/// `φ_j(D) u`.
pub fn lp_block(u: &GridFunction, j: usize, part: &LPPartition) -> Result<GridFunction> {
    if j > part.j_max {
        return Err(Error::OutOfRange(j, part.j_max));
    }
    if !u.grid.compatible(&part.grid) {
        return Err(Error::GridMismatch);
    }
    u.expect_side(Side::Physical)?;
    apply_multiplier(u, |c| C64::new(part.phi(j, c), 0.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeBoundRow {
    pub order: usize,
    pub j: usize,
    pub ratio: f64,
}

/// Central finite difference of order `a ≤ 3` of the radial profile of `φ_j` at `r`.
fn radial_fd(j: usize, r: f64, a: usize) -> f64 {
    let h = 2f64.powi(j as i32) * 1e-3;
    let f = |t: f64| phi_j_radial(j, t.abs());
    match a {
        0 => f(r),
        1 => (f(r + h) - f(r - h)) / (2.0 * h),
        2 => (f(r + h) - 2.0 * f(r) + f(r - h)) / (h * h),
        _ => (f(r + 2.0 * h) - 2.0 * f(r + h) + 2.0 * f(r - h) - f(r - 2.0 * h)) / (2.0 * h * h * h),
    }
}

/// For each `|α| ≤ alpha_max` and block `j`, the largest lattice value of
/// `|∂^α φ_j(ξ)| / min(2^{-j|α|}, ⟨ξ⟩^{-|α|})` using radial finite differences.
pub fn derivative_bound_report(part: &LPPartition, alpha_max: usize) -> Result<Vec<DerivativeBoundRow>> {
    if alpha_max > 3 {
        return Err(Error::OrderTooHigh(alpha_max, 3));
    }
    let g = &part.grid;
    let mut radii: Vec<f64> = (0..g.len())
        .map(|c| g.xi_node(c).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    radii.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mut rows = Vec::new();
    for a in 0..=alpha_max {
        for j in 0..=part.j_max {
            let mut worst: f64 = 0.0;
            for &r in &radii {
                let d = radial_fd(j, r, a).abs();
                let w = 2f64.powi(-((j * a) as i32)).min(bracket(&[r]).powi(-(a as i32)));
                worst = worst.max(d / w);
            }
            rows.push(DerivativeBoundRow { order: a, j, ratio: worst });
        }
    }
    Ok(rows)
}

/// Per order, the maximum over `j` of the fitted constants.
pub fn derivative_bound_constants(rows: &[DerivativeBoundRow]) -> Vec<f64> {
    let amax = rows.iter().map(|r| r.order).max().unwrap_or(0);
    (0..=amax)
        .map(|a| rows.iter().filter(|r| r.order == a).map(|r| r.ratio).fold(0.0, f64::max))
        .collect()
}
