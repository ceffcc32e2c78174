//! Leading-order asymptotic bias and variance of the probit-scale estimators,
//! evaluated for a known density.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::density::{BoundaryFlags, TestDensity};
use crate::error::{Error, Result};
use crate::loclik::BandwidthSpec;
use crate::prob::normal::{std_normal_cdf, std_normal_pdf, std_normal_pdf_derivative, std_normal_quantile};
use crate::prob::StreamRng;

fn derivative(d: &dyn TestDensity, x: f64, order: usize) -> Result<f64> {
    d.derivative(x, order).ok_or_else(|| {
        Error::Capability(format!("{} does not provide a derivative of order {order}", d.name()))
    })
}

/// f_X and its first `upto` derivatives at x.
fn x_jet(d: &dyn TestDensity, x: f64, upto: usize) -> Result<[f64; 5]> {
    let mut jet = [0.0; 5];
    jet[0] = d.pdf(x);
    for (k, slot) in jet.iter_mut().enumerate().take(upto + 1).skip(1) {
        *slot = derivative(d, x, k)?;
    }
    Ok(jet)
}

/// f_S(s) = f_X(Φ(s))φ(s) and its derivatives up to `upto` ≤ 4.
fn s_jet(d: &dyn TestDensity, s: f64, upto: usize) -> Result<[f64; 5]> {
    let x = std_normal_cdf(s);
    let f = x_jet(d, x, upto)?;
    let p = std_normal_pdf(s);
    // Derivatives of x(s) = Φ(s).
    let x1 = p;
    let x2 = -s * p;
    let x3 = (s * s - 1.0) * p;
    let x4 = s * (3.0 - s * s) * p;
    // Faà di Bruno for g(s) = f_X(Φ(s)).
    let g = [
        f[0],
        f[1] * x1,
        f[2] * x1 * x1 + f[1] * x2,
        f[3] * x1.powi(3) + 3.0 * f[2] * x1 * x2 + f[1] * x3,
        f[4] * x1.powi(4)
            + 6.0 * f[3] * x1 * x1 * x2
            + f[2] * (3.0 * x2 * x2 + 4.0 * x1 * x3)
            + f[1] * x4,
    ];
    const BINOM: [[f64; 5]; 5] = [
        [1.0, 0.0, 0.0, 0.0, 0.0],
        [1.0, 1.0, 0.0, 0.0, 0.0],
        [1.0, 2.0, 1.0, 0.0, 0.0],
        [1.0, 3.0, 3.0, 1.0, 0.0],
        [1.0, 4.0, 6.0, 4.0, 1.0],
    ];
    let mut out = [0.0; 5];
    for m in 0..=upto {
        out[m] = (0..=m)
            .map(|j| BINOM[m][j] * g[j] * std_normal_pdf_derivative(s, m - j))
            .fold(0.0, |a, b| a + b);
    }
    Ok(out)
}

/// Derivative of order 1..=4 of the probit-scale density f_S at s.
pub fn fs_derivatives(d: &dyn TestDensity, s: f64, order: usize) -> Result<f64> {
    if !(1..=4).contains(&order) {
        return Err(Error::InvalidInput(format!("order must be 1..=4, got {order}")));
    }
    if !s.is_finite() {
        return Err(Error::Domain(format!("s must be finite, got {s}")));
    }
    Ok(s_jet(d, s, order)?[order])
}

/// Estimators with a printed leading-order expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TheoryTag {
    Naive,
    Amended,
    /// Gaussian-copula kernel estimator; formula only.
    GaussianCopula,
    T1,
    T2,
}

impl TheoryTag {
    pub const ALL: [TheoryTag; 5] = [
        TheoryTag::Naive,
        TheoryTag::Amended,
        TheoryTag::GaussianCopula,
        TheoryTag::T1,
        TheoryTag::T2,
    ];

    fn derivative_order(self) -> usize {
        match self {
            TheoryTag::T2 => 4,
            _ => 2,
        }
    }
}

impl fmt::Display for TheoryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TheoryTag::Naive => "naive",
            TheoryTag::Amended => "amended",
            TheoryTag::GaussianCopula => "gc",
            TheoryTag::T1 => "t1",
            TheoryTag::T2 => "t2",
        })
    }
}

impl std::str::FromStr for TheoryTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "naive" => Ok(TheoryTag::Naive),
            "amended" => Ok(TheoryTag::Amended),
            "gc" => Ok(TheoryTag::GaussianCopula),
            "t1" => Ok(TheoryTag::T1),
            "t2" => Ok(TheoryTag::T2),
            other => Err(Error::InvalidInput(format!("unknown estimator tag {other:?}"))),
        }
    }
}

/// Leading bias and variance terms of one estimator under one density.
#[derive(Debug, Clone, Copy)]
pub struct AsymptoticProfile<'a> {
    tag: TheoryTag,
    density: &'a dyn TestDensity,
}

/// Checks that the density supplies every derivative the tag's formulas use.
pub fn asymptotic_profile(tag: TheoryTag, d: &dyn TestDensity) -> Result<AsymptoticProfile<'_>> {
    x_jet(d, 0.5, tag.derivative_order())?;
    Ok(AsymptoticProfile { tag, density: d })
}

fn interior(x: f64) -> Result<f64> {
    if x > 0.0 && x < 1.0 {
        std_normal_quantile(x)
    } else {
        Err(Error::Domain(format!("x must lie in (0,1), got {x}")))
    }
}

impl AsymptoticProfile<'_> {
    pub fn tag(&self) -> TheoryTag {
        self.tag
    }

    /// Leading term of E f̂(x) − f_X(x) at fixed bandwidth h.
    pub fn leading_bias(&self, x: f64, h: f64) -> Result<f64> {
        let q = interior(x)?;
        let p = std_normal_pdf(q);
        let f = x_jet(self.density, x, self.tag.derivative_order())?;
        let h2 = 0.5 * h * h;
        Ok(match self.tag {
            TheoryTag::Naive => h2 * (f[2] * p * p - 3.0 * f[1] * q * p + (q * q - 1.0) * f[0]),
            TheoryTag::Amended => h2 * (f[2] * p * p - 3.0 * f[1] * q * p),
            TheoryTag::GaussianCopula => h2 * (2.0 * f[2] * p * p - 4.0 * f[1] * q * p),
            TheoryTag::T1 => h2 * ((f[2] - f[1] * f[1] / f[0]) * p * p - f[1] * q * p - f[0]),
            TheoryTag::T2 => {
                let (f0, f1, f2, f3, f4) = (f[0], f[1], f[2], f[3], f[4]);
                let q2 = q * q;
                let bracket = (f4 - 3.0 * f2 * f2 / f0 + 2.0 * f1.powi(4) / f0.powi(3)) * p.powi(4)
                    + 2.0 * (9.0 * f1 * f2 / f0 - 4.0 * f1.powi(3) / (f0 * f0) - 5.0 * f3) * q * p.powi(3)
                    + ((19.0 * q2 - 4.0) * f2 - 15.0 * q2 * f1 * f1 / f0) * p * p
                    + (7.0 * q - 5.0 * q * q2) * f1 * p;
                -h.powi(4) / 8.0 * bracket
            }
        })
    }

    /// Leading variance term with fixed bandwidth h or nearest-neighbour fraction α.
    pub fn leading_variance(&self, x: f64, n: usize, bandwidth: &BandwidthSpec) -> Result<f64> {
        let q = interior(x)?;
        if n == 0 {
            return Err(Error::InvalidInput("n must be positive".into()));
        }
        let f = self.density.pdf(x);
        let inflation = match self.tag {
            TheoryTag::T2 => 27.0 / 16.0,
            _ => 1.0,
        };
        match bandwidth {
            BandwidthSpec::Fixed(h) => {
                Ok(inflation * f / (2.0 * n as f64 * h.h() * std_normal_pdf(q) * PI.sqrt()))
            }
            BandwidthSpec::Knn(a) => match self.tag {
                TheoryTag::T1 | TheoryTag::T2 => Ok(inflation * f * f / (n as f64 * a.alpha() * PI.sqrt())),
                tag => Err(Error::Capability(format!(
                    "no nearest-neighbour variance expansion for the {tag} estimator"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Side {
    Left,
    Right,
}

/// Points x_n = η h^m from the left end, or 1 − η h^m from the right.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySequenceSpec {
    side: Side,
    m: f64,
    eta: f64,
}

impl BoundarySequenceSpec {
    pub fn new(side: Side, m: f64, eta: f64) -> Result<Self> {
        if !(m > 0.0 && eta > 0.0 && m.is_finite() && eta.is_finite()) {
            return Err(Error::InvalidInput(format!("m and eta must be positive, got m = {m}, eta = {eta}")));
        }
        Ok(Self { side, m, eta })
    }

    pub fn point(&self, h: f64) -> f64 {
        let off = self.eta * h.powf(self.m);
        match self.side {
            Side::Left => off,
            Side::Right => 1.0 - off,
        }
    }
}

/// Magnitudes of the naive estimator's bias and variance along a boundary
/// sequence. The bias constant is unknown, so the bias is m h² log(1/h) f_X(x_n)
/// without it.
pub fn boundary_orders(
    tag: TheoryTag,
    d: &dyn TestDensity,
    spec: &BoundarySequenceSpec,
    h: f64,
    n: usize,
) -> Result<(f64, f64)> {
    if tag != TheoryTag::Naive {
        return Err(Error::Capability(format!(
            "boundary orders are only defined for the naive estimator; {tag} keeps its interior expansion"
        )));
    }
    if !(h > 0.0 && h < 1.0) || n == 0 {
        return Err(Error::InvalidInput(format!("need 0 < h < 1 and n > 0, got h = {h}, n = {n}")));
    }
    let x = spec.point(h);
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("boundary point {x} falls outside (0,1)")));
    }
    let f = d.pdf(x);
    let bias = spec.m * h * h * (1.0 / h).ln() * f;
    let var = f / (n as f64 * h.powf(1.0 + 2.0 * spec.m) * 2f64.sqrt() * spec.eta * spec.eta);
    Ok((bias, var))
}

/// Constants of the amended estimator's bias/variance tradeoff at x = 1/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MidpointMultipliers {
    /// (b̃² ṽ⁴)^(1/5), the density-free factor of the optimal MSE.
    pub mse_multiplier: f64,
    /// min_h b̃²h⁴ + ṽ/h with b̃, ṽ the density-free coefficients.
    pub optimal_mse_constant: f64,
    /// argmin_h of the same, (ṽ / 4b̃²)^(1/5).
    pub bandwidth_constant: f64,
    /// Bandwidth multiplier quoted for the amended estimator.
    pub h0_reference: f64,
}

/// Fixed values of f_X and its derivatives at every point.
#[derive(Debug)]
struct Jet([f64; 5]);

impl TestDensity for Jet {
    fn name(&self) -> String {
        "jet".into()
    }
    fn pdf(&self, _: f64) -> f64 {
        self.0[0]
    }
    fn derivative(&self, _: f64, order: usize) -> Option<f64> {
        self.0.get(order).copied()
    }
    fn cdf(&self, x: f64) -> f64 {
        x
    }
    fn quantile(&self, p: f64) -> f64 {
        p
    }
    fn draw(&self, _: &mut StreamRng) -> f64 {
        0.5
    }
    fn flags(&self) -> BoundaryFlags {
        BoundaryFlags::default()
    }
}

pub fn midpoint_multipliers() -> MidpointMultipliers {
    // b̃: bias per unit h² and unit f''; ṽ: variance per unit f, n and h.
    let curvature = Jet([0.0, 0.0, 1.0, 0.0, 0.0]);
    let level = Jet([1.0, 0.0, 0.0, 0.0, 0.0]);
    let b = AsymptoticProfile { tag: TheoryTag::Amended, density: &curvature }
        .leading_bias(0.5, 1.0)
        .expect("x = 0.5 is interior");
    let unit = BandwidthSpec::Fixed(crate::classic::FixedBandwidth::new(1.0).expect("positive"));
    let v = AsymptoticProfile { tag: TheoryTag::Amended, density: &level }
        .leading_variance(0.5, 1, &unit)
        .expect("x = 0.5 is interior");
    let h = (v / (4.0 * b * b)).powf(0.2);
    MidpointMultipliers {
        mse_multiplier: (b * b * v.powi(4)).powf(0.2),
        optimal_mse_constant: b * b * h.powi(4) + v / h,
        bandwidth_constant: h,
        h0_reference: 2.5679,
    }
}

/// Bandwidth h φ(Φ⁻¹(x)) of the conventional estimator the naive probit
/// estimator locally resembles.
pub fn local_bandwidth_equivalent(x: f64, h: f64) -> Result<f64> {
    Ok(h * std_normal_pdf(interior(x)?))
}
