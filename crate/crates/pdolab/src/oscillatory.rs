//! Oscillatory integrals `Os-∬ e^{-iy·η} a(η,y) dy d̄η` in one dimension, by cutoff
//! regularization and by the integration-by-parts rewrite.

use crate::core_grid::C64;
use crate::error::{Error, Result};
use crate::jet::{bracket_power_derivs_1d, factorial, gauss_derivs_1d};
use crate::littlewood_paley::phi0_radial;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

pub type RealFn = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

/// Univariate building blocks with exact derivatives.
#[derive(Clone)]
pub enum UFn {
    Const(C64),
    /// `⟨t⟩^s`
    Bracket(f64),
    /// `exp(-c (t - t0)²)`
    Gauss { c: f64, t0: f64 },
    /// `e^{ikt}`
    Plane(f64),
    /// `cos(kt + phase)`
    Cos { k: f64, phase: f64 },
    /// `t^p`
    Monomial(u32),
    Product(Box<UFn>, Box<UFn>),
    /// Opaque function; derivatives up to order 2 by central differences with step `1e-3`.
    Custom { f: RealFn, bandwidth: f64 },
}

impl std::fmt::Debug for UFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UFn::Const(c) => write!(f, "Const({c})"),
            UFn::Bracket(s) => write!(f, "Bracket({s})"),
            UFn::Gauss { c, t0 } => write!(f, "Gauss({c},{t0})"),
            UFn::Plane(k) => write!(f, "Plane({k})"),
            UFn::Cos { k, phase } => write!(f, "Cos({k},{phase})"),
            UFn::Monomial(p) => write!(f, "Monomial({p})"),
            UFn::Product(a, b) => write!(f, "({a:?})*({b:?})"),
            UFn::Custom { .. } => write!(f, "Custom"),
        }
    }
}

pub const FD_STEP: f64 = 1e-3;

impl UFn {
    pub fn value(&self, t: f64) -> C64 {
        match self {
            UFn::Const(c) => *c,
            UFn::Bracket(s) => C64::new((1.0 + t * t).powf(s / 2.0), 0.0),
            UFn::Gauss { c, t0 } => C64::new((-c * (t - t0) * (t - t0)).exp(), 0.0),
            UFn::Plane(k) => C64::from_polar(1.0, k * t),
            UFn::Cos { k, phase } => C64::new((k * t + phase).cos(), 0.0),
            UFn::Monomial(p) => C64::new(t.powi(*p as i32), 0.0),
            UFn::Product(a, b) => a.value(t) * b.value(t),
            UFn::Custom { f, .. } => f(t),
        }
    }

    /// Derivatives of orders `0..=deg`; `None` when unavailable.
    pub fn derivs(&self, t: f64, deg: usize) -> Option<Vec<C64>> {
        let re = |v: Vec<f64>| v.into_iter().map(|x| C64::new(x, 0.0)).collect::<Vec<_>>();
        Some(match self {
            UFn::Const(c) => (0..=deg).map(|j| if j == 0 { *c } else { C64::new(0.0, 0.0) }).collect(),
            UFn::Bracket(s) => re(bracket_power_derivs_1d(t, *s, deg)),
            UFn::Gauss { c, t0 } => re(gauss_derivs_1d(t, *c, *t0, deg)),
            UFn::Plane(k) => {
                let e = C64::from_polar(1.0, k * t);
                (0..=deg).map(|j| C64::new(0.0, *k).powu(j as u32) * e).collect()
            }
            UFn::Cos { k, phase } => (0..=deg).map(|j| C64::new(k.powi(j as i32) * (k * t + phase + j as f64 * PI / 2.0).cos(), 0.0)).collect(),
            UFn::Monomial(p) => (0..=deg)
                .map(|j| {
                    let p = *p as usize;
                    if j > p {
                        C64::new(0.0, 0.0)
                    } else {
                        C64::new(factorial(p) / factorial(p - j) * t.powi((p - j) as i32), 0.0)
                    }
                })
                .collect(),
            UFn::Product(a, b) => {
                let da = a.derivs(t, deg)?;
                let db = b.derivs(t, deg)?;
                (0..=deg).map(|j| (0..=j).map(|i| binom(j, i) * da[i] * db[j - i]).sum()).collect()
            }
            UFn::Custom { f, .. } => {
                if deg > 2 {
                    return None;
                }
                let h = FD_STEP;
                let (a, b, c) = (f(t - h), f(t), f(t + h));
                let all = [b, (c - a) / (2.0 * h), (c - 2.0 * b + a) / (h * h)];
                all[..=deg].to_vec()
            }
        })
    }

    /// Frequency content of the function in its conjugate variable, used to pick the
    /// quadrature spacing.
    pub fn bandwidth(&self) -> f64 {
        match self {
            UFn::Plane(k) => k.abs(),
            UFn::Cos { k, .. } => k.abs(),
            UFn::Product(a, b) => a.bandwidth() + b.bandwidth(),
            UFn::Custom { bandwidth, .. } => *bandwidth,
            _ => 0.0,
        }
    }

    pub fn times(self, o: UFn) -> UFn {
        UFn::Product(Box::new(self), Box::new(o))
    }
}

fn binom(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Class `𝒜^m_{δ,τ}`: `|∂_η^α ∂_y^β a| ≤ C ⟨η⟩^{m+δ|β|} ⟨y⟩^τ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmpClass {
    pub m: f64,
    pub delta: f64,
    pub tau: f64,
}

pub type GeneralFn = Arc<dyn Fn(f64, f64) -> C64 + Send + Sync>;
pub type GeneralDeriv = Arc<dyn Fn(usize, usize, f64, f64) -> C64 + Send + Sync>;

#[derive(Clone)]
pub enum AmplitudeKind {
    /// `Σ f_t(η) g_t(y)`
    Separable(Vec<(UFn, UFn)>),
    General { f: GeneralFn, derivative: Option<GeneralDeriv>, bandwidth: f64 },
}

#[derive(Clone)]
pub struct Amplitude {
    pub name: String,
    pub kind: AmplitudeKind,
    pub class: AmpClass,
}

impl std::fmt::Debug for Amplitude {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Amplitude({})", self.name)
    }
}

impl Amplitude {
    pub fn separable(name: &str, eta: UFn, y: UFn, class: AmpClass) -> Self {
        Amplitude { name: name.into(), kind: AmplitudeKind::Separable(vec![(eta, y)]), class }
    }

    pub fn general(name: &str, f: impl Fn(f64, f64) -> C64 + Send + Sync + 'static, bandwidth: f64, class: AmpClass) -> Self {
        Amplitude { name: name.into(), kind: AmplitudeKind::General { f: Arc::new(f), derivative: None, bandwidth }, class }
    }

    pub fn with_derivative(mut self, d: impl Fn(usize, usize, f64, f64) -> C64 + Send + Sync + 'static) -> Self {
        if let AmplitudeKind::General { derivative, .. } = &mut self.kind {
            *derivative = Some(Arc::new(d));
        }
        self
    }

    pub fn value(&self, eta: f64, y: f64) -> C64 {
        match &self.kind {
            AmplitudeKind::Separable(terms) => terms.iter().map(|(f, g)| f.value(eta) * g.value(y)).sum(),
            AmplitudeKind::General { f, .. } => f(eta, y),
        }
    }

    /// `∂_η^a ∂_y^b a(η,y)`, analytic when available, else nested central differences
    /// for orders up to 2 per variable.
    pub fn derivative(&self, a: usize, b: usize, eta: f64, y: f64) -> Option<C64> {
        match &self.kind {
            AmplitudeKind::Separable(terms) => {
                let mut s = C64::new(0.0, 0.0);
                for (f, g) in terms {
                    s += f.derivs(eta, a)?[a] * g.derivs(y, b)?[b];
                }
                Some(s)
            }
            AmplitudeKind::General { f, derivative, .. } => {
                if let Some(d) = derivative {
                    return Some(d(a, b, eta, y));
                }
                if a > 2 || b > 2 {
                    return None;
                }
                let h = FD_STEP;
                let w = |k: usize| -> Vec<(f64, f64)> {
                    match k {
                        0 => vec![(0.0, 1.0)],
                        1 => vec![(-h, -0.5 / h), (h, 0.5 / h)],
                        _ => vec![(-h, 1.0 / (h * h)), (0.0, -2.0 / (h * h)), (h, 1.0 / (h * h))],
                    }
                };
                let mut s = C64::new(0.0, 0.0);
                for (de, we) in w(a) {
                    for (dy, wy) in w(b) {
                        s += we * wy * f(eta + de, y + dy);
                    }
                }
                Some(s)
            }
        }
    }

    fn bandwidths(&self) -> (f64, f64) {
        match &self.kind {
            AmplitudeKind::Separable(terms) => terms.iter().fold((0.0f64, 0.0f64), |(a, b), (f, g)| (a.max(f.bandwidth()), b.max(g.bandwidth()))),
            AmplitudeKind::General { bandwidth, .. } => (*bandwidth, *bandwidth),
        }
    }

    /// `sup |a(η,y)| ⟨η⟩^{-m} ⟨y⟩^{-τ}` over a logarithmic probe set up to `10³`.
    pub fn growth_constant(&self) -> f64 {
        let mut probes = vec![0.0];
        for k in 0..=12 {
            let v = 10f64.powf(k as f64 / 4.0);
            probes.push(v);
            probes.push(-v);
        }
        let br = |t: f64| (1.0 + t * t).sqrt();
        let mut c: f64 = 0.0;
        for &e in &probes {
            for &y in &probes {
                c = c.max(self.value(e, y).norm() / (br(e).powf(self.class.m) * br(y).powf(self.class.tau)));
            }
        }
        c
    }
}

/// Regularizing cutoff `χ(s,t)` with `χ(0,0) = 1`.
#[derive(Clone)]
pub enum Cutoff {
    /// `e^{-s²-t²}`
    Gaussian,
    /// `φ₀(|s|)φ₀(|t|)` with the Littlewood-Paley base profile.
    ProductBump,
    /// Arbitrary cutoff, negligible outside `max(|s|,|t|) ≤ radius`.
    Custom { f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>, radius: f64 },
}

impl Cutoff {
    pub fn name(&self) -> &'static str {
        match self {
            Cutoff::Gaussian => "gaussian",
            Cutoff::ProductBump => "bump",
            Cutoff::Custom { .. } => "custom",
        }
    }

    pub fn eval(&self, s: f64, t: f64) -> f64 {
        match self {
            Cutoff::Gaussian => (-s * s - t * t).exp(),
            Cutoff::ProductBump => phi0_radial(s.abs()) * phi0_radial(t.abs()),
            Cutoff::Custom { f, .. } => f(s, t),
        }
    }

    fn factor(&self, s: f64) -> f64 {
        match self {
            Cutoff::Gaussian => (-s * s).exp(),
            Cutoff::ProductBump => phi0_radial(s.abs()),
            Cutoff::Custom { .. } => 1.0,
        }
    }

    fn radius(&self) -> f64 {
        match self {
            Cutoff::Gaussian => 6.0,
            Cutoff::ProductBump => 2.0,
            Cutoff::Custom { radius, .. } => *radius,
        }
    }

    /// Whether the regularized values are extrapolated in `ε²`.
    fn extrapolates(&self) -> bool {
        !matches!(self, Cutoff::ProductBump)
    }
}

#[derive(Clone)]
pub struct RegConfig {
    pub cutoff: Cutoff,
    /// Strictly decreasing positive scales.
    pub eps: Vec<f64>,
    /// Frequency padding added to the amplitude bandwidth when choosing the step.
    pub pad: f64,
    pub tol: f64,
    /// Cap on nodes per axis.
    pub max_nodes: usize,
}

impl Default for RegConfig {
    fn default() -> Self {
        RegConfig { cutoff: Cutoff::Gaussian, eps: (4..=8).map(|k| 2f64.powf(-k as f64 / 2.0)).collect(), pad: 8.0, tol: 1e-5, max_nodes: 16384 }
    }
}

impl RegConfig {
    pub fn with_cutoff(cutoff: Cutoff) -> Self {
        RegConfig { cutoff, ..Default::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OscMethod {
    Regularized,
    Ibp,
    Iterated,
}

impl OscMethod {
    pub fn name(self) -> &'static str {
        match self {
            OscMethod::Regularized => "reg",
            OscMethod::Ibp => "ibp",
            OscMethod::Iterated => "iterated",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    /// `ε` for regularized runs; `l` for integration by parts.
    pub param: f64,
    pub param2: f64,
    pub value: C64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OscResult {
    pub value: C64,
    pub method: OscMethod,
    pub trace: Vec<TraceRow>,
    pub converged: bool,
    /// Last Cauchy increment.
    pub achieved_tol: f64,
}

impl OscResult {
    /// Cauchy increments of the raw trace are non-increasing over the last three steps,
    /// treating increments under `1e-13` as settled.
    pub fn monotone_tail(&self) -> bool {
        let v: Vec<C64> = self.trace.iter().map(|r| r.value).collect();
        if v.len() < 3 {
            return true;
        }
        let inc: Vec<f64> = v.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
        let tail = &inc[inc.len().saturating_sub(3)..];
        tail.windows(2).all(|w| w[1] <= w[0] || w[1] < 1e-13)
    }
}

/// `h²/(2π) Σ_k Σ_j row_k[j] e^{-i y_j η_k}` on the symmetric node set `t_j = j h`, `|j| ≤ m`.
fn phase_sum(m: usize, h: f64, row: impl Fn(f64, &mut [C64]) + Sync) -> C64 {
    let len = 2 * m + 1;
    let node = |j: usize| (j as f64 - m as f64) * h;
    let total: C64 = (0..len)
        .into_par_iter()
        .map_init(
            || vec![C64::new(0.0, 0.0); len],
            |buf, k| {
                let eta = node(k);
                row(eta, buf);
                let step = C64::from_polar(1.0, -h * eta);
                let mut s = C64::new(0.0, 0.0);
                let mut ph = C64::new(0.0, 0.0);
                for (j, w) in buf.iter().enumerate() {
                    if j % 128 == 0 {
                        ph = C64::from_polar(1.0, -node(j) * eta);
                    }
                    s += w * ph;
                    ph *= step;
                }
                s
            },
        )
        .sum();
    total * h * h / (2.0 * PI)
}

fn regularized_at(a: &Amplitude, cfg: &RegConfig, eps: f64) -> Result<C64> {
    let r = cfg.cutoff.radius() / eps;
    let (be, by) = a.bandwidths();
    let h = PI / (r + be.max(by) + cfg.pad);
    let m = (r / h).ceil() as usize;
    if 2 * m + 1 > cfg.max_nodes {
        return Err(Error::Budget(format!("{} nodes per axis at ε = {eps}", 2 * m + 1)));
    }
    let node = |j: usize| (j as f64 - m as f64) * h;
    let cut = &cfg.cutoff;
    let value = match (&a.kind, cut) {
        (AmplitudeKind::Separable(terms), Cutoff::Gaussian | Cutoff::ProductBump) => {
            let ys: Vec<Vec<C64>> = terms.iter().map(|(_, g)| (0..=2 * m).map(|j| g.value(node(j)) * cut.factor(eps * node(j))).collect()).collect();
            phase_sum(m, h, |eta, buf| {
                buf.iter_mut().for_each(|b| *b = C64::new(0.0, 0.0));
                let ce = cut.factor(eps * eta);
                for ((f, _), gy) in terms.iter().zip(&ys) {
                    let fe = f.value(eta) * ce;
                    for (b, g) in buf.iter_mut().zip(gy) {
                        *b += fe * g;
                    }
                }
            })
        }
        _ => phase_sum(m, h, |eta, buf| {
            for (j, b) in buf.iter_mut().enumerate() {
                let y = node(j);
                *b = a.value(eta, y) * cut.eval(eps * eta, eps * y);
            }
        }),
    };
    Ok(value)
}

/// `lim_{ε→0} ∬ e^{-iyη} χ(εη,εy) a(η,y) dy d̄η` by tensor trapezoid quadrature on the
/// box `[-R/ε, R/ε]²`, with polynomial extrapolation in `ε²` for cutoffs that are not
/// identically one near the origin.
pub fn os_regularized(a: &Amplitude, cfg: &RegConfig) -> Result<OscResult> {
    if (cfg.cutoff.eval(0.0, 0.0) - 1.0).abs() > 1e-14 {
        return Err(Error::Precondition("cutoff is not normalized: χ(0,0) ≠ 1".into()));
    }
    if cfg.eps.is_empty() || cfg.eps.iter().any(|&e| !(e > 0.0)) || cfg.eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Precondition("ε schedule must be positive and strictly decreasing".into()));
    }
    let mut trace = Vec::new();
    for &e in &cfg.eps {
        trace.push(TraceRow { param: e, param2: 0.0, value: regularized_at(a, cfg, e)? });
    }
    let raw: Vec<C64> = trace.iter().map(|t| t.value).collect();
    let diag = if cfg.cutoff.extrapolates() {
        // Neville extrapolation to ε² = 0, one diagonal entry per added scale
        let ts: Vec<f64> = cfg.eps.iter().map(|e| e * e).collect();
        let mut diag = Vec::new();
        for k in 1..=raw.len() {
            let mut v = raw[..k].to_vec();
            for m in 1..k {
                for i in 0..k - m {
                    v[i] = (ts[i + m] * v[i] - ts[i] * v[i + 1]) / (ts[i + m] - ts[i]);
                }
            }
            diag.push(v[0]);
        }
        diag
    } else {
        raw.clone()
    };
    let value = *diag.last().unwrap();
    let achieved = if diag.len() >= 2 { (diag[diag.len() - 1] - diag[diag.len() - 2]).norm() } else { f64::INFINITY };
    Ok(OscResult { value, method: OscMethod::Regularized, trace, converged: achieved < cfg.tol * (1.0 + value.norm()), achieved_tol: achieved })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IbpConfig {
    pub l: usize,
    pub l_prime: usize,
    pub r: f64,
    pub nodes: usize,
}

impl Default for IbpConfig {
    fn default() -> Self {
        IbpConfig { l: 3, l_prime: 3, r: 32.0, nodes: 1025 }
    }
}

/// `(1-∂²)^l` coefficients on even derivative orders: `C(l,k)(-1)^k` for `∂^{2k}`.
fn one_minus_laplace(l: usize) -> Vec<f64> {
    (0..=l).map(|k| binom(l, k) * if k % 2 == 0 { 1.0 } else { -1.0 }).collect()
}

/// Absolutely convergent rewrite
/// `∬ e^{-iyη} ⟨y⟩^{-2l′} ⟨D_η⟩^{2l′} (⟨η⟩^{-2l} ⟨D_y⟩^{2l} a) dy d̄η`.
pub fn os_ibp(a: &Amplitude, cfg: &IbpConfig) -> Result<OscResult> {
    let IbpConfig { l, l_prime: lp, r, nodes } = *cfg;
    let AmpClass { m, delta, tau } = a.class;
    if !(-2.0 * l as f64 * (1.0 - delta) + m < -1.0) || !(-2.0 * lp as f64 + tau < -1.0) {
        return Err(Error::Precondition(format!("(l, l′) = ({l}, {lp}) too small for the class m={m}, δ={delta}, τ={tau}")));
    }
    if nodes < 3 {
        return Err(Error::Precondition("at least three quadrature nodes".into()));
    }
    let m_half = nodes / 2;
    let h = r / m_half as f64;
    let (be, by) = a.bandwidths();
    if 2.0 * PI / h < 2.0 * r + be.max(by) {
        return Err(Error::Budget(format!("{nodes} nodes under-resolve the box of radius {r}")));
    }
    let cy = one_minus_laplace(l);
    let ce = one_minus_laplace(lp);
    let wy = |y: f64| (1.0 + y * y).powi(-(lp as i32));
    let missing = || Error::Precondition(format!("amplitude {} lacks derivatives up to orders ({}, {})", a.name, 2 * lp, 2 * l));
    // η-weight w = ⟨η⟩^{-2l} and its derivatives
    let wjet = |eta: f64| bracket_power_derivs_1d(eta, -2.0 * l as f64, 2 * lp);
    // combination Σ_k' ce[k'] Σ_i C(2k',i) w^{(i)} F_{2k'-i}, where F_q = ∂_η^q (…)
    let eta_op = |w: &[f64], fq: &dyn Fn(usize) -> C64| -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for (kp, c) in ce.iter().enumerate() {
            for i in 0..=2 * kp {
                s += c * binom(2 * kp, i) * w[i] * fq(2 * kp - i);
            }
        }
        s
    };
    let node = |j: usize| (j as f64 - m_half as f64) * h;
    let value = match &a.kind {
        AmplitudeKind::Separable(terms) => {
            // per term: A(y) = ⟨y⟩^{-2l′}(1-∂²)^l g, B(η) = (1-∂²)^{l′}[w f]
            let mut ys = Vec::new();
            let mut es = Vec::new();
            for (f, g) in terms {
                let mut ay = Vec::with_capacity(2 * m_half + 1);
                for j in 0..=2 * m_half {
                    let y = node(j);
                    let d = g.derivs(y, 2 * l).ok_or_else(missing)?;
                    let s: C64 = cy.iter().enumerate().map(|(k, c)| c * d[2 * k]).sum();
                    ay.push(s * wy(y));
                }
                let mut be_ = Vec::with_capacity(2 * m_half + 1);
                for k in 0..=2 * m_half {
                    let eta = node(k);
                    let d = f.derivs(eta, 2 * lp).ok_or_else(missing)?;
                    let w = wjet(eta);
                    be_.push(eta_op(&w, &|q| d[q]));
                }
                ys.push(ay);
                es.push(be_);
            }
            let n = 2 * m_half + 1;
            phase_sum(m_half, h, |eta, buf| {
                let k = ((eta / h).round() as i64 + m_half as i64) as usize;
                buf.iter_mut().for_each(|b| *b = C64::new(0.0, 0.0));
                for (ay, be_) in ys.iter().zip(&es) {
                    for j in 0..n {
                        buf[j] += be_[k] * ay[j];
                    }
                }
            })
        }
        AmplitudeKind::General { .. } => {
            if a.derivative(2 * lp, 2 * l, 0.0, 0.0).is_none() {
                return Err(missing());
            }
            phase_sum(m_half, h, |eta, buf| {
                let w = wjet(eta);
                for (j, b) in buf.iter_mut().enumerate() {
                    let y = node(j);
                    let fq = |q: usize| -> C64 { cy.iter().enumerate().map(|(k, c)| c * a.derivative(q, 2 * k, eta, y).unwrap()).sum() };
                    *b = eta_op(&w, &fq) * wy(y);
                }
            })
        }
    };
    Ok(OscResult {
        value,
        method: OscMethod::Ibp,
        trace: vec![TraceRow { param: l as f64, param2: lp as f64, value }],
        converged: true,
        achieved_tol: 0.0,
    })
}

/// Plain iterated trapezoid quadrature `∫ (∫ e^{-iyη} a(η,y) dy) d̄η` on `[-r, r]²`, valid
/// when the inner integral converges absolutely and the outer one converges.
pub fn os_iterated(a: &Amplitude, r: f64, nodes: usize) -> Result<OscResult> {
    let m = nodes / 2;
    if m == 0 {
        return Err(Error::Precondition("at least three quadrature nodes".into()));
    }
    let h = r / m as f64;
    let node = |j: usize| (j as f64 - m as f64) * h;
    let value = phase_sum(m, h, |eta, buf| {
        for (j, b) in buf.iter_mut().enumerate() {
            *b = a.value(eta, node(j));
        }
    });
    Ok(OscResult { value, method: OscMethod::Iterated, trace: vec![TraceRow { param: r, param2: nodes as f64, value }], converged: true, achieved_tol: 0.0 })
}

#[derive(Clone, Debug, PartialEq)]
pub struct InversionReport {
    pub x: f64,
    pub value: C64,
    pub expected: C64,
    pub residual: f64,
}

/// `|Os-∬ e^{-iyη} a(x+y) dy d̄η − a(x)|` for a bounded smooth function `a`.
pub fn inversion_check(a: RealFn, bandwidth: f64, x: f64, cfg: &RegConfig) -> Result<InversionReport> {
    let shifted: RealFn = {
        let a = a.clone();
        Arc::new(move |y| a(x + y))
    };
    let amp = Amplitude::separable("inversion", UFn::Const(C64::new(1.0, 0.0)), UFn::Custom { f: shifted, bandwidth }, AmpClass { m: 0.0, delta: 0.0, tau: 0.0 });
    let r = os_regularized(&amp, cfg)?;
    let expected = a(x);
    Ok(InversionReport { x, value: r.value, expected, residual: (r.value - expected).norm() })
}

/// Built-in amplitudes with their exact oscillatory values where known.
pub fn builtin_amplitudes() -> Vec<(Amplitude, Option<C64>)> {
    let c = |v: f64| C64::new(v, 0.0);
    let zero = AmpClass { m: 0.0, delta: 0.0, tau: 0.0 };
    vec![
        (Amplitude::separable("gauss", UFn::Gauss { c: 1.0, t0: 0.0 }, UFn::Gauss { c: 1.0, t0: 0.0 }, AmpClass { m: -2.0, delta: 0.0, tau: 0.0 }), Some(c(1.0 / 5f64.sqrt()))),
        (Amplitude::separable("one", UFn::Const(c(1.0)), UFn::Const(c(1.0)), zero), Some(c(1.0))),
        (Amplitude::separable("cos", UFn::Const(c(1.0)), UFn::Cos { k: 1.0, phase: 0.3 }, zero), Some(c(0.3f64.cos()))),
        (Amplitude::separable("bracket_m2", UFn::Bracket(-2.0), UFn::Const(c(1.0)), AmpClass { m: -2.0, delta: 0.0, tau: 0.0 }), Some(c(1.0))),
        (Amplitude::separable("plane_bracket", UFn::Bracket(-1.0), UFn::Plane(1.0), AmpClass { m: -1.0, delta: 0.0, tau: 0.0 }), Some(c(0.5f64.sqrt()))),
        (Amplitude::separable("gauss_y_bracket", UFn::Bracket(1.0), UFn::Gauss { c: 1.0, t0: 0.0 }, AmpClass { m: 1.0, delta: 0.0, tau: 0.0 }), None),
    ]
}

pub fn builtin_amplitude(name: &str) -> Result<(Amplitude, Option<C64>)> {
    builtin_amplitudes().into_iter().find(|(a, _)| a.name == name).ok_or_else(|| Error::Parse(format!("unknown amplitude {name:?}")))
}

/// `y·a(η,y)` for a separable amplitude, raising `τ` by one.
pub fn times_y(a: &Amplitude) -> Result<Amplitude> {
    match &a.kind {
        AmplitudeKind::Separable(terms) => Ok(Amplitude {
            name: format!("y*{}", a.name),
            kind: AmplitudeKind::Separable(terms.iter().map(|(f, g)| (f.clone(), UFn::Monomial(1).times(g.clone()))).collect()),
            class: AmpClass { tau: a.class.tau + 1.0, ..a.class },
        }),
        _ => Err(Error::Precondition("times_y needs a separable amplitude".into())),
    }
}

/// `η·a(η,y)`, raising `m` by one.
pub fn times_eta(a: &Amplitude) -> Result<Amplitude> {
    match &a.kind {
        AmplitudeKind::Separable(terms) => Ok(Amplitude {
            name: format!("eta*{}", a.name),
            kind: AmplitudeKind::Separable(terms.iter().map(|(f, g)| (UFn::Monomial(1).times(f.clone()), g.clone())).collect()),
            class: AmpClass { m: a.class.m + 1.0, ..a.class },
        }),
        _ => Err(Error::Precondition("times_eta needs a separable amplitude".into())),
    }
}

/// `D_η a = -i∂_η a` (or `D_y a` when `along_y`) for a separable amplitude whose factors
/// have analytic derivatives.
pub fn d_amplitude(a: &Amplitude, along_y: bool) -> Result<Amplitude> {
    let AmplitudeKind::Separable(terms) = &a.kind else {
        return Err(Error::Precondition("derivative amplitudes need a separable amplitude".into()));
    };
    let deriv = |u: &UFn| -> UFn {
        let u = u.clone();
        let v = u.clone();
        UFn::Custom {
            f: Arc::new(move |t| C64::new(0.0, -1.0) * u.derivs(t, 1).expect("analytic factor")[1]),
            bandwidth: v.bandwidth(),
        }
    };
    let mut out = Vec::new();
    for (f, g) in terms {
        if f.derivs(0.0, 3).is_none() || g.derivs(0.0, 3).is_none() {
            return Err(Error::Precondition("factor without analytic derivatives".into()));
        }
        out.push(if along_y { (f.clone(), deriv(g)) } else { (deriv(f), g.clone()) });
    }
    Ok(Amplitude { name: format!("D{}{}", if along_y { "y" } else { "eta" }, a.name), kind: AmplitudeKind::Separable(out), class: a.class })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    #[test]
    fn ufn_derivatives_match_fd() {
        let fns = [UFn::Bracket(-1.5), UFn::Gauss { c: 1.0, t0: 0.2 }, UFn::Plane(2.0), UFn::Cos { k: 1.5, phase: 0.3 }, UFn::Monomial(3), UFn::Bracket(1.0).times(UFn::Cos { k: 1.0, phase: 0.0 })];
        for f in &fns {
            let t = 0.37;
            let d = f.derivs(t, 2).unwrap();
            let h = 1e-4;
            let fd1 = (f.value(t + h) - f.value(t - h)) / (2.0 * h);
            let fd2 = (f.value(t + h) - 2.0 * f.value(t) + f.value(t - h)) / (h * h);
            assert!((d[1] - fd1).norm() < 1e-6, "{f:?}");
            assert!((d[2] - fd2).norm() < 1e-4, "{f:?}");
        }
        let custom = UFn::Custom { f: Arc::new(|t: f64| c(t.sin())), bandwidth: 1.0 };
        assert!(custom.derivs(0.1, 3).is_none());
        assert!((custom.derivs(0.1, 2).unwrap()[2] + c(0.1f64.sin())).norm() < 1e-6);
    }

    #[test]
    fn regularized_gauss_matches_direct_quadrature() {
        let (a, exact) = builtin_amplitude("gauss").unwrap();
        let r = os_regularized(&a, &RegConfig::default()).unwrap();
        let direct = os_iterated(&a, 12.0, 513).unwrap().value;
        assert!((r.value - direct).norm() < 1e-6);
        assert!((r.value - exact.unwrap()).norm() < 1e-6);
        assert!(r.converged);
    }

    #[test]
    fn regularized_one_is_one() {
        let (a, _) = builtin_amplitude("one").unwrap();
        let r = os_regularized(&a, &RegConfig::default()).unwrap();
        for row in &r.trace {
            let e = row.param;
            let want = 1.0 / (1.0 + 4.0 * e.powi(4)).sqrt();
            assert!((row.value - c(want)).norm() < 1e-9, "ε={e}");
        }
        assert!((r.value - c(1.0)).norm() < 1e-6);
        let b = os_regularized(&a, &RegConfig::with_cutoff(Cutoff::ProductBump)).unwrap();
        assert!((b.value - c(1.0)).norm() < 1e-6);
    }

    #[test]
    fn cutoff_independence_and_exact_values() {
        for (a, exact) in builtin_amplitudes() {
            let g = os_regularized(&a, &RegConfig::default()).unwrap();
            let b = os_regularized(&a, &RegConfig::with_cutoff(Cutoff::ProductBump)).unwrap();
            assert!((g.value - b.value).norm() <= 1e-5, "{}: {} vs {}", a.name, g.value, b.value);
            if let Some(e) = exact {
                assert!((b.value - e).norm() <= 1e-5, "{}", a.name);
            }
            assert!(g.monotone_tail() && b.monotone_tail(), "{}", a.name);
        }
    }

    #[test]
    fn ibp_agrees_with_regularized() {
        for (a, _) in builtin_amplitudes() {
            let reg = os_regularized(&a, &RegConfig::with_cutoff(Cutoff::ProductBump)).unwrap();
            let ibp = os_ibp(&a, &IbpConfig::default()).unwrap();
            assert!((reg.value - ibp.value).norm() <= 1e-4, "{}: {} vs {}", a.name, reg.value, ibp.value);
        }
    }

    #[test]
    fn ibp_minimal_orders_for_constant() {
        let (a, _) = builtin_amplitude("one").unwrap();
        let r = os_ibp(&a, &IbpConfig { l: 1, l_prime: 1, r: 48.0, nodes: 2049 }).unwrap();
        assert!((r.value - c(1.0)).norm() <= 1e-5, "{}", r.value);
        let bad = builtin_amplitude("gauss_y_bracket").unwrap().0;
        assert!(os_ibp(&bad, &IbpConfig { l: 1, l_prime: 1, r: 24.0, nodes: 1025 }).is_err());
    }

    #[test]
    fn general_amplitude_paths() {
        let g = Amplitude::general("gg", |e, y| c((-e * e - y * y).exp()), 0.0, AmpClass { m: -2.0, delta: 0.0, tau: 0.0 });
        let r = os_regularized(&g, &RegConfig::default()).unwrap();
        assert!((r.value - c(1.0 / 5f64.sqrt())).norm() < 1e-6);
        // FD derivatives only reach order 2 per variable
        assert!(os_ibp(&g, &IbpConfig::default()).is_err());
        let i = os_ibp(&g, &IbpConfig { l: 1, l_prime: 1, r: 12.0, nodes: 513 }).unwrap();
        assert!((i.value - c(1.0 / 5f64.sqrt())).norm() < 1e-5, "{}", i.value);
    }

    #[test]
    fn fubini_reduction() {
        let (a, _) = builtin_amplitude("gauss_y_bracket").unwrap();
        let it = os_iterated(&a, 24.0, 1025).unwrap();
        let reg = os_regularized(&a, &RegConfig::with_cutoff(Cutoff::ProductBump)).unwrap();
        assert!((it.value - reg.value).norm() <= 1e-5, "{} vs {}", it.value, reg.value);
        // ∫⟨η⟩ e^{-η²/4} dη / (2√π)
        let h = 1e-3;
        let direct: f64 = (-20000..=20000).map(|k| {
            let e = k as f64 * h;
            (1.0 + e * e).sqrt() * (-e * e / 4.0).exp()
        }).sum::<f64>() * h / (2.0 * PI.sqrt());
        assert!((it.value - c(direct)).norm() < 1e-8);
    }

    #[test]
    fn partial_integration_identities() {
        let cfg = RegConfig::with_cutoff(Cutoff::ProductBump);
        for name in ["gauss", "bracket_m2", "plane_bracket"] {
            let (a, _) = builtin_amplitude(name).unwrap();
            let lhs = os_regularized(&times_y(&a).unwrap(), &cfg).unwrap().value;
            let rhs = os_regularized(&d_amplitude(&a, false).unwrap(), &cfg).unwrap().value;
            assert!((lhs - rhs).norm() <= 1e-4, "{name}: {lhs} vs {rhs}");
            let lhs = os_regularized(&times_eta(&a).unwrap(), &cfg).unwrap().value;
            let rhs = os_regularized(&d_amplitude(&a, true).unwrap(), &cfg).unwrap().value;
            assert!((lhs - rhs).norm() <= 1e-4, "{name}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn inversion_formula() {
        let cfg = RegConfig::default();
        let k = inversion_check(Arc::new(|_| c(2.5)), 0.0, 0.4, &cfg).unwrap();
        assert!(k.residual <= 1e-5);
        let cs = inversion_check(Arc::new(|t: f64| c(t.cos())), 1.0, 0.0, &cfg).unwrap();
        assert!(cs.residual <= 1e-4 && (cs.value - c(1.0)).norm() < 1e-4);
        let g = inversion_check(Arc::new(|t: f64| c((-t * t).exp())), 0.0, 0.7, &cfg).unwrap();
        assert!(g.residual <= 1e-4, "{}", g.residual);
    }

    #[test]
    fn preconditions() {
        let (a, _) = builtin_amplitude("one").unwrap();
        let bad = RegConfig { eps: vec![0.25, 0.5], ..Default::default() };
        assert!(os_regularized(&a, &bad).is_err());
        let unnorm = RegConfig::with_cutoff(Cutoff::Custom { f: Arc::new(|_, _| 0.5), radius: 1.0 });
        assert!(os_regularized(&a, &unnorm).is_err());
        let tiny = RegConfig { max_nodes: 100, ..Default::default() };
        assert!(matches!(os_regularized(&a, &tiny), Err(Error::Budget(_))));
        assert!(builtin_amplitude("nope").is_err());
    }

    #[test]
    fn declared_growth_is_consistent() {
        for (a, _) in builtin_amplitudes() {
            let cst = a.growth_constant();
            assert!(cst.is_finite() && cst <= 2.0, "{}: {cst}", a.name);
        }
    }
}
