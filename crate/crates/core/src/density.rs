//! Analytic densities on (0,1) with derivatives, distribution functions and samplers.
//!
//! These power the asymptotic formulas in [`crate::theory`] and the
//! Monte-Carlo harness in [`crate::harness`].

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::distributions::Open01;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, ln_beta};

use crate::error::{Error, Result};
use crate::prob::normal::{ppnd16, std_normal_cdf, std_normal_pdf};
use crate::prob::StreamRng;

/// Qualitative behaviour of a density at the ends of (0,1).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryFlags {
    pub unbounded_left: bool,
    pub unbounded_right: bool,
    pub zero_left: bool,
    pub zero_right: bool,
}

/// A density on (0,1) known in closed form.
pub trait TestDensity: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    fn pdf(&self, x: f64) -> f64;

    /// Derivative of the given order (0 is the density itself); `None` when
    /// this density does not provide it.
    fn derivative(&self, x: f64, order: usize) -> Option<f64>;

    fn cdf(&self, x: f64) -> f64;

    fn quantile(&self, p: f64) -> f64;

    /// One draw, strictly inside (0,1).
    fn draw(&self, rng: &mut StreamRng) -> f64;

    fn flags(&self) -> BoundaryFlags;
}

/// Beta(a, b) density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Beta {
    a: f64,
    b: f64,
    #[serde(skip)]
    ln_norm: f64,
}

impl Beta {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidInput(format!("invalid Beta parameters ({a}, {b})")));
        }
        Ok(Self { a, b, ln_norm: ln_beta(a, b) })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    fn integer_params(&self) -> Option<(u32, u32)> {
        let is_int = |v: f64| v.fract() == 0.0 && v <= 30.0;
        (is_int(self.a) && is_int(self.b)).then_some((self.a as u32, self.b as u32))
    }

    fn is_arcsine(&self) -> bool {
        self.a == 0.5 && self.b == 0.5
    }

    /// I_x(a, b) for integer parameters through the binomial tail sum.
    fn integer_cdf(x: f64, a: u32, b: u32) -> f64 {
        let m = a + b - 1;
        let y = 1.0 - x;
        let mut coef = 1.0; // C(m, j), built up from j = 0
        let mut total = 0.0;
        for j in 0..=m {
            if j >= a {
                total += coef * x.powi(j as i32) * y.powi((m - j) as i32);
            }
            coef = coef * (m - j) as f64 / (j + 1) as f64;
        }
        total.clamp(0.0, 1.0)
    }
}

/// Falling factorial α(α−1)…(α−k+1).
fn falling(alpha: f64, k: usize) -> f64 {
    (0..k).map(|i| alpha - i as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl TestDensity for Beta {
    fn name(&self) -> String {
        format!("beta({},{})", self.a, self.b)
    }

    fn pdf(&self, x: f64) -> f64 {
        if !(x > 0.0 && x < 1.0) {
            return 0.0;
        }
        ((self.a - 1.0) * x.ln() + (self.b - 1.0) * (1.0 - x).ln() - self.ln_norm).exp()
    }

    fn derivative(&self, x: f64, order: usize) -> Option<f64> {
        if order > 4 {
            return None;
        }
        if !(x > 0.0 && x < 1.0) {
            return Some(0.0);
        }
        // Leibniz rule on x^(a-1) · (1-x)^(b-1).
        let (alpha, beta) = (self.a - 1.0, self.b - 1.0);
        let y = 1.0 - x;
        let total: f64 = (0..=order)
            .map(|j| {
                let left = falling(alpha, j) * x.powf(alpha - j as f64);
                let k = order - j;
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let right = sign * falling(beta, k) * y.powf(beta - k as f64);
                binomial(order, j) * left * right
            })
            .sum();
        Some(total * (-self.ln_norm).exp())
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        if self.is_arcsine() {
            return 2.0 / PI * x.sqrt().asin();
        }
        match self.integer_params() {
            Some((a, b)) => Beta::integer_cdf(x, a, b),
            None => beta_reg(self.a, self.b, x),
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        if self.is_arcsine() {
            let s = (0.5 * PI * p).sin();
            return s * s;
        }
        invert_cdf(self, p)
    }

    fn draw(&self, rng: &mut StreamRng) -> f64 {
        let u: f64 = rng.sample(Open01);
        keep_interior(self.quantile(u))
    }

    fn flags(&self) -> BoundaryFlags {
        BoundaryFlags {
            unbounded_left: self.a < 1.0,
            unbounded_right: self.b < 1.0,
            zero_left: self.a > 1.0,
            zero_right: self.b > 1.0,
        }
    }
}

/// Inverts a continuous cdf on (0,1): Newton steps kept inside a shrinking
/// bisection bracket.
fn invert_cdf<D: TestDensity + ?Sized>(d: &D, p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut x = 0.5;
    for _ in 0..4 {
        if d.cdf(x) < p {
            lo = x;
        } else {
            hi = x;
        }
        x = 0.5 * (lo + hi);
    }
    for _ in 0..100 {
        let diff = d.cdf(x) - p;
        if diff.abs() <= 1e-15 {
            break;
        }
        if diff < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let slope = d.pdf(x);
        let newton = x - diff / slope;
        x = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-16 {
            break;
        }
    }
    x
}

fn keep_interior(x: f64) -> f64 {
    x.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Conditional density of a bivariate Gaussian copula: the probit image of
/// X is exactly N(μ, σ²), i.e. `f_X(x) = φ((q−μ)/σ) / (σ φ(q))` with q = Φ⁻¹(x).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianCopulaConditional {
    mu: f64,
    sigma: f64,
    label: Option<(f64, f64)>,
}

impl GaussianCopulaConditional {
    /// From the copula correlation ρ and conditioning value u₀:
    /// μ = ρ Φ⁻¹(u₀), σ = √(1−ρ²).
    pub fn new(rho: f64, u0: f64) -> Result<Self> {
        if !(rho > -1.0 && rho < 1.0) || !(u0 > 0.0 && u0 < 1.0) {
            return Err(Error::InvalidInput(format!(
                "gcc needs |rho| < 1 and u0 in (0,1), got ({rho}, {u0})"
            )));
        }
        Ok(Self {
            mu: rho * ppnd16(u0),
            sigma: (1.0 - rho * rho).sqrt(),
            label: Some((rho, u0)),
        })
    }

    pub fn from_normal(mu: f64, sigma: f64) -> Result<Self> {
        if !(mu.is_finite() && sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidInput(format!("invalid (mu, sigma) = ({mu}, {sigma})")));
        }
        Ok(Self { mu, sigma, label: None })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl TestDensity for GaussianCopulaConditional {
    fn name(&self) -> String {
        match self.label {
            Some((rho, u0)) => format!("gcc({rho},{u0})"),
            None => format!("gcc-normal({},{})", self.mu, self.sigma),
        }
    }

    fn pdf(&self, x: f64) -> f64 {
        if !(x > 0.0 && x < 1.0) {
            return 0.0;
        }
        let q = ppnd16(x);
        let z = (q - self.mu) / self.sigma;
        // exp of the log-ratio avoids 0/0 far in the tails
        (-0.5 * z * z + 0.5 * q * q).exp() / self.sigma
    }

    fn derivative(&self, x: f64, order: usize) -> Option<f64> {
        if order > 4 {
            return None;
        }
        let f = self.pdf(x);
        if order == 0 {
            return Some(f);
        }
        let q = ppnd16(x);
        let s2 = self.sigma * self.sigma;
        // log f as a function of q: H(q) with H' = A q + B, H'' = A.
        let a = 1.0 - 1.0 / s2;
        let h1 = a * q + self.mu / s2;
        let h2 = a;
        // derivatives of q(x) = Φ⁻¹(x)
        let q1 = 1.0 / std_normal_pdf(q);
        let q2 = q * q1 * q1;
        let q3 = (1.0 + 2.0 * q * q) * q1.powi(3);
        let q4 = (7.0 * q + 6.0 * q.powi(3)) * q1.powi(4);
        // G = H∘q (Faà di Bruno, H''' = 0)
        let g1 = h1 * q1;
        let g2 = h2 * q1 * q1 + h1 * q2;
        let g3 = 3.0 * h2 * q1 * q2 + h1 * q3;
        let g4 = h2 * (3.0 * q2 * q2 + 4.0 * q1 * q3) + h1 * q4;
        let factor = match order {
            1 => g1,
            2 => g2 + g1 * g1,
            3 => g3 + 3.0 * g1 * g2 + g1.powi(3),
            4 => g4 + 4.0 * g1 * g3 + 3.0 * g2 * g2 + 6.0 * g1 * g1 * g2 + g1.powi(4),
            _ => unreachable!(),
        };
        Some(factor * f)
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        std_normal_cdf((ppnd16(x) - self.mu) / self.sigma)
    }

    fn quantile(&self, p: f64) -> f64 {
        std_normal_cdf(self.mu + self.sigma * ppnd16(p))
    }

    fn draw(&self, rng: &mut StreamRng) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        keep_interior(std_normal_cdf(self.mu + self.sigma * z))
    }

    fn flags(&self) -> BoundaryFlags {
        // f_X ~ exp(q²(1 − 1/σ²)/2 + ...) as q → ±∞
        let unbounded = self.sigma > 1.0;
        let zero = self.sigma < 1.0;
        BoundaryFlags {
            unbounded_left: unbounded,
            unbounded_right: unbounded,
            zero_left: zero,
            zero_right: zero,
        }
    }
}

/// The densities used by the benchmark and the theory checks.
#[derive(Debug, Clone, PartialEq)]
pub enum CatalogDensity {
    Uniform,
    Beta(Beta),
    /// Finite mixture of Beta components with weights summing to one.
    Mixture { label: String, components: Vec<(f64, Beta)> },
    Copula(GaussianCopulaConditional),
}

impl CatalogDensity {
    pub fn beta(a: f64, b: f64) -> Result<Self> {
        Beta::new(a, b).map(CatalogDensity::Beta)
    }

    /// 0.5·Beta(3,9) + 0.5·Beta(9,3)
    pub fn bimodal() -> Self {
        CatalogDensity::Mixture {
            label: "bimodal".into(),
            components: vec![
                (0.5, Beta::new(3.0, 9.0).expect("valid")),
                (0.5, Beta::new(9.0, 3.0).expect("valid")),
            ],
        }
    }

    /// The default catalog: uniform, Beta(4,4), Beta(2,5), Beta(0.5,0.5),
    /// a bimodal Beta mixture and one Gaussian-copula conditional density.
    pub fn default_catalog() -> Vec<CatalogDensity> {
        vec![
            CatalogDensity::Uniform,
            CatalogDensity::beta(4.0, 4.0).expect("valid"),
            CatalogDensity::beta(2.0, 5.0).expect("valid"),
            CatalogDensity::beta(0.5, 0.5).expect("valid"),
            CatalogDensity::bimodal(),
            CatalogDensity::Copula(GaussianCopulaConditional::new(0.5, 0.3).expect("valid")),
        ]
    }
}

impl TestDensity for CatalogDensity {
    fn name(&self) -> String {
        match self {
            CatalogDensity::Uniform => "uniform".into(),
            CatalogDensity::Beta(b) => b.name(),
            CatalogDensity::Mixture { label, .. } => label.clone(),
            CatalogDensity::Copula(c) => c.name(),
        }
    }

    fn pdf(&self, x: f64) -> f64 {
        match self {
            CatalogDensity::Uniform => {
                if x > 0.0 && x < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            CatalogDensity::Beta(b) => b.pdf(x),
            CatalogDensity::Mixture { components, .. } => {
                components.iter().map(|(w, c)| w * c.pdf(x)).sum()
            }
            CatalogDensity::Copula(c) => c.pdf(x),
        }
    }

    fn derivative(&self, x: f64, order: usize) -> Option<f64> {
        match self {
            CatalogDensity::Uniform => match order {
                0 => Some(self.pdf(x)),
                1..=4 => Some(0.0),
                _ => None,
            },
            CatalogDensity::Beta(b) => b.derivative(x, order),
            CatalogDensity::Mixture { components, .. } => components
                .iter()
                .map(|(w, c)| c.derivative(x, order).map(|d| w * d))
                .sum(),
            CatalogDensity::Copula(c) => c.derivative(x, order),
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        match self {
            CatalogDensity::Uniform => x.clamp(0.0, 1.0),
            CatalogDensity::Beta(b) => b.cdf(x),
            CatalogDensity::Mixture { components, .. } => {
                components.iter().map(|(w, c)| w * c.cdf(x)).sum()
            }
            CatalogDensity::Copula(c) => c.cdf(x),
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        match self {
            CatalogDensity::Uniform => p,
            CatalogDensity::Beta(b) => b.quantile(p),
            CatalogDensity::Mixture { .. } => invert_cdf(self, p),
            CatalogDensity::Copula(c) => c.quantile(p),
        }
    }

    fn draw(&self, rng: &mut StreamRng) -> f64 {
        match self {
            CatalogDensity::Uniform => rng.sample(Open01),
            CatalogDensity::Beta(b) => b.draw(rng),
            CatalogDensity::Mixture { components, .. } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (w, c) in components {
                    acc += w;
                    if u < acc {
                        return c.draw(rng);
                    }
                }
                components.last().expect("non-empty mixture").1.draw(rng)
            }
            CatalogDensity::Copula(c) => c.draw(rng),
        }
    }

    fn flags(&self) -> BoundaryFlags {
        match self {
            CatalogDensity::Uniform => BoundaryFlags::default(),
            CatalogDensity::Beta(b) => b.flags(),
            CatalogDensity::Mixture { components, .. } => {
                components.iter().fold(
                    BoundaryFlags {
                        zero_left: true,
                        zero_right: true,
                        ..Default::default()
                    },
                    |acc, (_, c)| {
                        let f = c.flags();
                        BoundaryFlags {
                            unbounded_left: acc.unbounded_left || f.unbounded_left,
                            unbounded_right: acc.unbounded_right || f.unbounded_right,
                            zero_left: acc.zero_left && f.zero_left,
                            zero_right: acc.zero_right && f.zero_right,
                        }
                    },
                )
            }
            CatalogDensity::Copula(c) => c.flags(),
        }
    }
}

impl fmt::Display for CatalogDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Parses `uniform`, `bimodal`, `beta(a,b)`, `gcc(rho,u0)`.
impl FromStr for CatalogDensity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "uniform" => return Ok(CatalogDensity::Uniform),
            "bimodal" => return Ok(CatalogDensity::bimodal()),
            _ => {}
        }
        let args = |prefix: &str| -> Option<Result<(f64, f64)>> {
            let inner = s.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')?;
            let mut parts = inner.split(',').map(|p| p.trim().parse::<f64>());
            Some(match (parts.next(), parts.next(), parts.next()) {
                (Some(Ok(a)), Some(Ok(b)), None) => Ok((a, b)),
                _ => Err(Error::InvalidInput(format!("cannot parse density '{s}'"))),
            })
        };
        if let Some(p) = args("beta") {
            let (a, b) = p?;
            return CatalogDensity::beta(a, b);
        }
        if let Some(p) = args("gcc") {
            let (rho, u0) = p?;
            return GaussianCopulaConditional::new(rho, u0).map(CatalogDensity::Copula);
        }
        Err(Error::InvalidInput(format!("unknown density '{s}'")))
    }
}
