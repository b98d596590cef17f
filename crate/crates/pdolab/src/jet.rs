//! Truncated Taylor polynomials in one or two variables.
//!
//! Used to get exact derivatives of closed-form symbols such as `(1+|ξ|²)^{s}`.

#[derive(Clone, Debug, PartialEq)]
pub struct Taylor {
    deg: usize,
    // c[i * (deg + 1) + j] is the coefficient of h1^i h2^j
    c: Vec<f64>,
}

impl Taylor {
    pub fn constant(deg: usize, v: f64) -> Self {
        let mut c = vec![0.0; (deg + 1) * (deg + 1)];
        c[0] = v;
        Taylor { deg, c }
    }

    /// The coordinate function `t0 + h_axis`.
    pub fn variable(deg: usize, axis: usize, t0: f64) -> Self {
        let mut t = Self::constant(deg, t0);
        if deg >= 1 {
            match axis {
                0 => t.c[deg + 1] = 1.0,
                _ => t.c[1] = 1.0,
            }
        }
        t
    }

    pub fn degree(&self) -> usize {
        self.deg
    }

    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        if i + j > self.deg {
            return 0.0;
        }
        self.c[i * (self.deg + 1) + j]
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        let d = self.deg;
        self.c[i * (d + 1) + j] = v;
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Mixed partial derivative `∂_1^i ∂_2^j` at the expansion point.
    pub fn derivative(&self, i: usize, j: usize) -> f64 {
        self.coeff(i, j) * factorial(i) * factorial(j)
    }

    pub fn add(&self, o: &Taylor) -> Taylor {
        let mut r = self.clone();
        for (a, b) in r.c.iter_mut().zip(&o.c) {
            *a += b;
        }
        r
    }

    pub fn scale(&self, s: f64) -> Taylor {
        let mut r = self.clone();
        r.c.iter_mut().for_each(|a| *a *= s);
        r
    }

    pub fn add_const(&self, s: f64) -> Taylor {
        let mut r = self.clone();
        r.c[0] += s;
        r
    }

    pub fn mul(&self, o: &Taylor) -> Taylor {
        let d = self.deg;
        let mut r = Taylor::constant(d, 0.0);
        for i1 in 0..=d {
            for j1 in 0..=(d - i1) {
                let a = self.coeff(i1, j1);
                if a == 0.0 {
                    continue;
                }
                for i2 in 0..=(d - i1 - j1) {
                    for j2 in 0..=(d - i1 - j1 - i2) {
                        let b = o.coeff(i2, j2);
                        if b != 0.0 {
                            let v = r.coeff(i1 + i2, j1 + j2) + a * b;
                            r.set(i1 + i2, j1 + j2, v);
                        }
                    }
                }
            }
        }
        r
    }

    /// `self^s` for a positive constant term, via the binomial series.
    pub fn powf(&self, s: f64) -> Taylor {
        let a = self.c[0];
        assert!(a > 0.0, "powf needs a positive constant term");
        let delta = self.add_const(-a).scale(1.0 / a);
        let mut term = Taylor::constant(self.deg, 1.0);
        let mut acc = Taylor::constant(self.deg, 1.0);
        let mut binom = 1.0;
        for k in 1..=self.deg {
            binom *= (s - (k as f64 - 1.0)) / k as f64;
            term = term.mul(&delta);
            acc = acc.add(&term.scale(binom));
        }
        acc.scale(a.powf(s))
    }

    pub fn exp(&self) -> Taylor {
        let a = self.c[0];
        let delta = self.add_const(-a);
        let mut term = Taylor::constant(self.deg, 1.0);
        let mut acc = Taylor::constant(self.deg, 1.0);
        for k in 1..=self.deg {
            term = term.mul(&delta).scale(1.0 / k as f64);
            acc = acc.add(&term);
        }
        acc.scale(a.exp())
    }
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// All derivatives `∂^α (1+|ξ|²)^{s/2}` with `|α| ≤ deg` at the point `xi` (n = 1 or 2).
pub fn bracket_power_jet(xi: &[f64], s: f64, deg: usize) -> Taylor {
    let mut r2 = Taylor::constant(deg, 1.0);
    for (axis, &v) in xi.iter().enumerate() {
        let t = Taylor::variable(deg, axis, v);
        r2 = r2.add(&t.mul(&t));
    }
    r2.powf(s / 2.0)
}

/// `∂_ξ^α ⟨ξ⟩^s` for a multi-index `alpha` of the same length as `xi`.
pub fn bracket_power_derivative(xi: &[f64], s: f64, alpha: &[usize]) -> f64 {
    let deg: usize = alpha.iter().sum();
    let jet = bracket_power_jet(xi, s, deg);
    let (i, j) = split_alpha(alpha);
    jet.derivative(i, j)
}

pub(crate) fn split_alpha(alpha: &[usize]) -> (usize, usize) {
    match alpha.len() {
        0 => (0, 0),
        1 => (alpha[0], 0),
        _ => (alpha[0], alpha[1]),
    }
}

/// Univariate derivatives `d^k/dt^k (1+t²)^{s/2}` for `k = 0..=deg`.
pub fn bracket_power_derivs_1d(t: f64, s: f64, deg: usize) -> Vec<f64> {
    let jet = bracket_power_jet(&[t], s, deg);
    (0..=deg).map(|k| jet.derivative(k, 0)).collect()
}

/// Univariate derivatives of `exp(-c (t - t0)²)`.
pub fn gauss_derivs_1d(t: f64, c: f64, t0: f64, deg: usize) -> Vec<f64> {
    let v = Taylor::variable(deg, 0, t - t0);
    let jet = v.mul(&v).scale(-c).exp();
    (0..=deg).map(|k| jet.derivative(k, 0)).collect()
}
