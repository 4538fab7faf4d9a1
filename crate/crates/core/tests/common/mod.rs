//! Test-only oracles, independent of the library's closed forms.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // P_n(x) by recurrence, derivative from the standard identity
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Rule mapped onto [a, b].
pub struct Rule {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

impl Rule {
    pub fn on(n: usize, a: f64, b: f64) -> Self {
        let (x, w) = gauss_legendre(n);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        Rule { x: x.iter().map(|t| mid + half * t).collect(), w: w.iter().map(|v| v * half).collect() }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.x.iter().zip(&self.w).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// CSL geometry factor of a homogeneous sphere of radius `x` (in units of the
/// correlation length), by brute-force quadrature of the Gaussian-smeared
/// mass-density overlap
///
///   I(d) = ∫∫ ρ(r) ρ(r') exp(−|r − r' − d|² / 4a²)
///
/// for normalized ρ, then extracting the small-separation coefficient
/// c = lim (I(0) − I(d)) / d² by Richardson extrapolation. A point mass has
/// c = 1/(4a²), so the factor is 4a²·c.
pub fn csl_factor_brute_force(x: f64, nodes: usize) -> f64 {
    let radius = x;
    let volume = 4.0 / 3.0 * PI * radius.powi(3);
    let radial = Rule::on(nodes, 0.0, radius);
    let angular = Rule::on(nodes, -1.0, 1.0);

    // Gaussian-smeared ball at distance v from its center.
    let smeared = |v: f64| -> f64 {
        radial
            .integrate(|r| 2.0 * PI * r * r * angular.integrate(|mu| (-(v * v + r * r - 2.0 * v * r * mu) / 4.0).exp()))
            / volume
    };
    let overlap = |d: f64| -> f64 {
        radial.integrate(|r| {
            2.0 * PI * r * r * angular.integrate(|mu| smeared((r * r + d * d - 2.0 * r * d * mu).max(0.0).sqrt()))
        }) / volume
    };

    let i0 = overlap(0.0);
    let h = 0.04;
    let c_h = (i0 - overlap(h)) / (h * h);
    let c_h2 = (i0 - overlap(h / 2.0)) / (h * h / 4.0);
    let c = (4.0 * c_h2 - c_h) / 3.0;
    4.0 * c
}
