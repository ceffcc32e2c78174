//! Conventional kernel density estimation, plug-in bandwidths, the naive and
//! amended probit estimators, the locally shrinking-bandwidth boundary correction and
//! renormalization.

use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::normal::{ppnd16, std_normal_pdf, std_normal_pdf_derivative};
use crate::prob::{simpson_tabulated, GaussianKernel};
use crate::transform::{back_transform_at, BoundaryPolicy, PseudoSample, UnitSample};

/// A global bandwidth h > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedBandwidth {
    h: f64,
}

impl FixedBandwidth {
    pub fn new(h: f64) -> Result<Self> {
        if h > 0.0 && h.is_finite() {
            Ok(Self { h })
        } else {
            Err(Error::InvalidInput(format!("bandwidth must be positive and finite, got {h}")))
        }
    }

    pub fn h(&self) -> f64 {
        self.h
    }
}

/// Scale on which a density estimate lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum DomainTag {
    UnitInterval,
    RealLine,
}

/// How the smoothing parameter of an estimate was set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum BandwidthRecord {
    Fixed { h: f64 },
    Knn { alpha: f64, k: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EstimateMetadata {
    pub estimator: String,
    pub bandwidth: BandwidthRecord,
    /// Grid mass before renormalization, when renormalization was applied.
    pub mass_before_renormalization: Option<f64>,
    pub clamp_epsilon: Option<f64>,
}

/// Density values on an evaluation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DensityEstimate {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub domain: DomainTag,
    pub normalized: bool,
    pub metadata: EstimateMetadata,
}

impl DensityEstimate {
    pub fn new(
        grid: Vec<f64>,
        values: Vec<f64>,
        domain: DomainTag,
        metadata: EstimateMetadata,
    ) -> Result<Self> {
        check_increasing(&grid)?;
        if grid.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "grid has {} points but {} values were given",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Numerical(format!(
                "density value {} at grid point {} is negative or not finite",
                values[i], grid[i]
            )));
        }
        Ok(Self {
            grid,
            values,
            domain,
            normalized: false,
            metadata,
        })
    }

    /// Integral of the estimate over [grid min, grid max]: composite Simpson
    /// on equally spaced odd-sized grids, trapezoid otherwise.
    pub fn mass(&self) -> Result<f64> {
        grid_mass(&self.grid, &self.values)
    }
}

fn check_increasing(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("evaluation grid is empty".into()));
    }
    if let Some(w) = grid.windows(2).find(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput(format!(
            "grid must be strictly increasing, found {} then {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// Checks a grid lies strictly inside (0,1) and is strictly increasing.
pub fn check_unit_grid(grid: &[f64]) -> Result<()> {
    check_increasing(grid)?;
    if let Some(x) = grid.iter().find(|x| !(**x > 0.0 && **x < 1.0)) {
        return Err(Error::Domain(format!("grid point {x} is not inside (0,1)")));
    }
    Ok(())
}

/// The points i/(m+1), i = 1..m.
pub fn unit_grid(m: usize) -> Vec<f64> {
    (1..=m).map(|i| i as f64 / (m + 1) as f64).collect()
}

fn grid_mass(grid: &[f64], values: &[f64]) -> Result<f64> {
    let n = grid.len();
    if n < 2 {
        return Err(Error::InvalidInput("mass needs at least two grid points".into()));
    }
    let step = (grid[n - 1] - grid[0]) / (n - 1) as f64;
    let uniform = grid
        .windows(2)
        .all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * step);
    if uniform && n % 2 == 1 {
        simpson_tabulated(values, step)
    } else {
        Ok(grid
            .windows(2)
            .zip(values.windows(2))
            .map(|(g, v)| 0.5 * (g[1] - g[0]) * (v[0] + v[1]))
            .sum())
    }
}

/// `(1/(nh)) Σ K((s − S_i)/h)`.
pub fn kde_eval(sample: &[f64], h: FixedBandwidth, s: f64) -> f64 {
    let h = h.h();
    let total = sample.iter().fold(0.0, |acc, &v| acc + GaussianKernel.eval((s - v) / h));
    total / (sample.len() as f64 * h)
}

/// Same sum as [`kde_eval`] restricted to the observations whose kernel
/// weight is not exactly zero. Bit-identical to `kde_eval` on sorted input.
pub(crate) fn kde_eval_sorted(sorted: &[f64], h: f64, s: f64) -> f64 {
    let (lo, hi) = kernel_window(sorted, s, h);
    let total = sorted[lo..hi]
        .iter()
        .fold(0.0, |acc, &v| acc + GaussianKernel.eval((s - v) / h));
    total / (sorted.len() as f64 * h)
}

/// Index range of sorted observations within `ZERO_BEYOND` bandwidths of `s`.
#[inline]
pub(crate) fn kernel_window(sorted: &[f64], s: f64, h: f64) -> (usize, usize) {
    let reach = GaussianKernel::ZERO_BEYOND * h;
    let lo = sorted.partition_point(|&v| v < s - reach);
    let hi = sorted.partition_point(|&v| v <= s + reach);
    (lo, hi.max(lo))
}

fn sample_sd(sample: &[f64]) -> f64 {
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let ss: f64 = sample.iter().map(|v| (v - mean).powi(2)).sum();
    (ss / (n - 1.0)).sqrt()
}

/// Sample quantile with linear interpolation between order statistics
/// (the usual "type 7" definition).
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Robust spread min(sd, IQR/1.349); falls back to sd when the IQR is zero.
pub fn robust_scale(sample: &[f64]) -> Result<f64> {
    if sample.len() < 2 {
        return Err(Error::InvalidInput("spread needs at least two observations".into()));
    }
    let sd = sample_sd(sample);
    let constant = sample.iter().all(|&v| v == sample[0]);
    if constant || !(sd > 0.0 && sd.is_finite()) {
        return Err(Error::InvalidInput("sample has zero spread".into()));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    Ok(if iqr > 0.0 { sd.min(iqr / 1.349) } else { sd })
}

/// Normal reference rule h = 1.06 σ̂ n^(−1/5).
pub fn bandwidth_normal_reference(sample: &[f64]) -> Result<FixedBandwidth> {
    let scale = robust_scale(sample)?;
    FixedBandwidth::new(1.06 * scale * (sample.len() as f64).powf(-0.2))
}

/// ψ̂_r(g) = n⁻² g^(−r−1) Σ_i Σ_j φ⁽ʳ⁾((X_i − X_j)/g) on sorted data.
fn psi_functional(sorted: &[f64], r: usize, g: f64) -> f64 {
    let n = sorted.len();
    let mut off_diagonal = 0.0;
    for i in 0..n {
        let reach = sorted[i] + GaussianKernel::ZERO_BEYOND * g;
        for &xj in sorted[i + 1..].iter().take_while(|&&x| x <= reach) {
            off_diagonal += std_normal_pdf_derivative((sorted[i] - xj) / g, r);
        }
    }
    let total = n as f64 * std_normal_pdf_derivative(0.0, r) + 2.0 * off_diagonal;
    total / ((n * n) as f64 * g.powi(r as i32 + 1))
}

/// Two-stage solve-free direct plug-in bandwidth with the Gaussian kernel.
///
/// ψ₈ from the normal scale rule gives the pilot for ψ̂₆, whose estimate
/// sets the pilot for ψ̂₄, which enters the AMISE-optimal bandwidth.
pub fn bandwidth_sj_dpi(sample: &[f64]) -> Result<FixedBandwidth> {
    let n = sample.len();
    if n < 10 {
        return Err(Error::InvalidInput(format!(
            "direct plug-in needs at least 10 observations, got {n}"
        )));
    }
    let scale = robust_scale(sample)?;
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let nf = n as f64;
    let phi0 = std_normal_pdf(0.0);

    let psi8 = 105.0 / (32.0 * PI.sqrt() * scale.powi(9));
    let g1 = (2.0 * 15.0 * phi0 / (psi8 * nf)).powf(1.0 / 9.0);
    let psi6 = psi_functional(&sorted, 6, g1);
    if !(psi6 < 0.0) {
        return Err(Error::Numerical(format!("estimated psi6 = {psi6} is not negative")));
    }
    let g2 = (-2.0 * 3.0 * phi0 / (psi6 * nf)).powf(1.0 / 7.0);
    let psi4 = psi_functional(&sorted, 4, g2);
    if !(psi4 > 0.0) {
        return Err(Error::Numerical(format!("estimated psi4 = {psi4} is not positive")));
    }
    FixedBandwidth::new((1.0 / (2.0 * PI.sqrt() * psi4 * nf)).powf(0.2))
}

fn fixed_metadata(name: &str, h: FixedBandwidth, policy: Option<BoundaryPolicy>) -> EstimateMetadata {
    EstimateMetadata {
        estimator: name.into(),
        bandwidth: BandwidthRecord::Fixed { h: h.h() },
        mass_before_renormalization: None,
        clamp_epsilon: policy.and_then(|p| p.epsilon()),
    }
}

/// Conventional kernel estimator applied to the raw observations.
pub fn conventional_kde(xs: &UnitSample, h: FixedBandwidth, grid: &[f64]) -> Result<DensityEstimate> {
    check_unit_grid(grid)?;
    let mut sorted = xs.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let values = grid.par_iter().map(|&x| kde_eval_sorted(&sorted, h.h(), x)).collect();
    DensityEstimate::new(
        grid.to_vec(),
        values,
        DomainTag::UnitInterval,
        fixed_metadata("conventional", h, None),
    )
}

/// Local bandwidth min(h, x, 1 − x).
pub fn dai_bandwidth(x: f64, h: f64) -> f64 {
    h.min(x).min(1.0 - x)
}

/// Conventional estimator with the local bandwidth min(h, x, 1−x), then
/// renormalized to unit mass on the grid.
pub fn dai_kde(xs: &UnitSample, h: FixedBandwidth, grid: &[f64]) -> Result<DensityEstimate> {
    check_unit_grid(grid)?;
    let mut sorted = xs.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let values = grid
        .par_iter()
        .map(|&x| kde_eval_sorted(&sorted, dai_bandwidth(x, h.h()), x))
        .collect();
    let est = DensityEstimate::new(
        grid.to_vec(),
        values,
        DomainTag::UnitInterval,
        fixed_metadata("dai", h, None),
    )?;
    renormalize(est)
}

/// Naive probit estimator from a pseudo-sample: the S-domain kernel estimate
/// carried back through `f_S(Φ⁻¹(x)) / φ(Φ⁻¹(x))`.
pub fn naive_from_pseudo(pseudo: &PseudoSample, h: FixedBandwidth, grid: &[f64]) -> Result<DensityEstimate> {
    check_unit_grid(grid)?;
    let values = grid
        .par_iter()
        .map(|&x| {
            let q = ppnd16(x);
            back_transform_at(kde_eval_sorted(pseudo.values(), h.h(), q), q)
        })
        .collect();
    DensityEstimate::new(
        grid.to_vec(),
        values,
        DomainTag::UnitInterval,
        fixed_metadata("naive", h, None),
    )
}

/// Naive probit estimator; observations at 0 or 1 are rejected.
pub fn naive_probit_estimate(xs: &UnitSample, h: FixedBandwidth, grid: &[f64]) -> Result<DensityEstimate> {
    let pseudo = crate::transform::to_pseudo_sample(xs, BoundaryPolicy::Reject)?;
    naive_from_pseudo(&pseudo, h, grid)
}

/// 1 + ½h²(q² − 1)
pub fn amendment_factor(q: f64, h: f64) -> f64 {
    1.0 + 0.5 * h * h * (q * q - 1.0)
}

/// Naive estimate divided pointwise by the amendment factor, optionally renormalized.
pub fn amended_from_pseudo(
    pseudo: &PseudoSample,
    h: FixedBandwidth,
    grid: &[f64],
    renorm: bool,
) -> Result<DensityEstimate> {
    if h.h() >= SQRT_2 {
        return Err(Error::Domain(format!(
            "amended estimator requires h < sqrt(2), got {}",
            h.h()
        )));
    }
    let mut est = naive_from_pseudo(pseudo, h, grid)?;
    for (v, &x) in est.values.iter_mut().zip(&est.grid) {
        let factor = amendment_factor(ppnd16(x), h.h());
        if !(factor > 0.0) {
            return Err(Error::Domain(format!("amendment factor {factor} is not positive at x = {x}")));
        }
        *v /= factor;
    }
    est.metadata.estimator = "amended".into();
    if renorm {
        renormalize(est)
    } else {
        Ok(est)
    }
}

/// Amended probit estimator; observations at 0 or 1 are rejected.
pub fn amended_probit_estimate(
    xs: &UnitSample,
    h: FixedBandwidth,
    grid: &[f64],
    renorm: bool,
) -> Result<DensityEstimate> {
    let pseudo = crate::transform::to_pseudo_sample(xs, BoundaryPolicy::Reject)?;
    amended_from_pseudo(&pseudo, h, grid, renorm)
}

/// Divides by the grid mass so the estimate integrates to one over the grid.
pub fn renormalize(mut est: DensityEstimate) -> Result<DensityEstimate> {
    let mass = est.mass()?;
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::Numerical(format!("cannot renormalize an estimate with mass {mass}")));
    }
    for v in &mut est.values {
        *v /= mass;
    }
    est.normalized = true;
    est.metadata.mass_before_renormalization = Some(mass);
    Ok(est)
}
