//! Local log-polynomial likelihood density estimation (degree 1 or 2), with
//! fixed or nearest-neighbour bandwidths, on the probit scale or directly on
//! the raw data.
//!
//! Fits are solved in scaled coordinates c = (a₀, a₁h, a₂h²), where the
//! kernel-weighted integral term has the closed form of a tilted normal
//! moment and all data enter through M_r = Σ K(u_i) u_iʳ, u_i = (S_i − s)/h.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classic::{
    check_unit_grid, kernel_window, renormalize, BandwidthRecord, DensityEstimate, DomainTag,
    EstimateMetadata, FixedBandwidth,
};
use crate::error::{Error, Result};
use crate::prob::normal::ppnd16;
use crate::prob::GaussianKernel;
use crate::transform::{back_transform_at, BoundaryPolicy, PseudoSample, UnitSample};

/// Iteration budget of the Newton solver.
pub const MAX_ITERATIONS: usize = 100;
/// Convergence threshold on max_j |∂L/∂c_j| / M₀.
pub const SCORE_TOLERANCE: f64 = 1e-8;
/// Neighbourhoods with Σ K(u_i) below this carry no information.
pub const EMPTY_NEIGHBORHOOD: f64 = 1e-12;
/// Largest admissible a₂h².
pub const QUADRATIC_WALL: f64 = 0.5 - 1e-6;

/// Nearest-neighbour smoothing fraction α = k/n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnBandwidth {
    alpha: f64,
}

impl KnnBandwidth {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha <= 1.0 {
            Ok(Self { alpha })
        } else {
            Err(Error::InvalidInput(format!("alpha must lie in (0, 1], got {alpha}")))
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// k = max(p + 2, round(αn)), capped at n.
    pub fn k_of(&self, n: usize, degree: usize) -> usize {
        let k = (self.alpha * n as f64).round() as usize;
        k.max(degree + 2).min(n)
    }
}

/// The two smoothing regimes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum BandwidthSpec {
    Fixed(FixedBandwidth),
    Knn(KnnBandwidth),
}

/// Whether fits run on probit images or on the raw observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Family {
    ProbitLocLik,
    RawLocLik,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EstimatorSpec {
    pub family: Family,
    pub degree: usize,
    pub bandwidth: BandwidthSpec,
}

impl EstimatorSpec {
    pub fn new(family: Family, degree: usize, bandwidth: BandwidthSpec) -> Result<Self> {
        if degree != 1 && degree != 2 {
            return Err(Error::InvalidInput(format!("degree must be 1 or 2, got {degree}")));
        }
        Ok(Self { family, degree, bandwidth })
    }

    pub fn with_bandwidth(self, bandwidth: BandwidthSpec) -> Self {
        Self { bandwidth, ..self }
    }

    pub fn name(&self) -> String {
        match self.family {
            Family::ProbitLocLik => format!("t{}", self.degree),
            Family::RawLocLik => format!("raw{}", self.degree),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum FitStatus {
    Converged,
    EmptyNeighborhood,
    MaxIterations,
    BoundaryOfDomain,
}

/// A local log-polynomial fit at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LocalFit {
    pub s: f64,
    pub degree: usize,
    pub h: f64,
    /// (a₀, …, a_p); a₀ is −∞ for an empty neighbourhood.
    pub coefficients: Vec<f64>,
    pub status: FitStatus,
    pub iterations: usize,
    pub score_norm: f64,
}

impl LocalFit {
    /// exp(a₀), or 0 for an empty neighbourhood.
    pub fn density(&self) -> f64 {
        match self.status {
            FitStatus::EmptyNeighborhood => 0.0,
            _ => self.coefficients[0].exp(),
        }
    }

    pub fn is_usable(&self) -> bool {
        matches!(self.status, FitStatus::Converged | FitStatus::EmptyNeighborhood)
    }
}

/// Moments ∫ uʳ φ(u) exp(b₁u + b₂u²) du for r = 0, 1, 2.
pub fn gauss_poly_integrals(b1: f64, b2: f64) -> Result<[f64; 3]> {
    if !(b2 < 0.5) {
        return Err(Error::Domain(format!("integral diverges for b2 = {b2} >= 1/2")));
    }
    let (log_i0, r) = tilted_moments(b1, b2);
    let i0 = log_i0.exp();
    Ok([i0, r[1] * i0, r[2] * i0])
}

/// log I₀ and the ratios I_r / I₀, r ≤ 4, of the tilted normal moments.
fn tilted_moments(c1: f64, c2: f64) -> (f64, [f64; 5]) {
    let v = 1.0 / (1.0 - 2.0 * c2);
    let m = c1 * v;
    let log_i0 = 0.5 * v.ln() + 0.5 * c1 * m;
    let m2 = m * m;
    (
        log_i0,
        [1.0, m, m2 + v, m * (m2 + 3.0 * v), m2 * m2 + 6.0 * m2 * v + 3.0 * v * v],
    )
}

/// Kernel-weighted data moments at one point, with the total weight n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalMoments {
    pub m: [f64; 3],
    pub n: f64,
}

impl LocalMoments {
    /// Σ_i w_i K(u_i) u_iʳ over arbitrary points, n = Σ w_i.
    pub fn weighted(s: f64, points: &[f64], weights: &[f64], h: f64) -> Self {
        let mut m = [0.0; 3];
        for (&t, &w) in points.iter().zip(weights) {
            accumulate(&mut m, (t - s) / h, w);
        }
        Self { m, n: weights.iter().sum() }
    }

    /// Unit weights over a sample, summed in the given order.
    pub fn from_sample(s: f64, sample: &[f64], h: f64) -> Self {
        let mut m = [0.0; 3];
        for &t in sample {
            accumulate(&mut m, (t - s) / h, 1.0);
        }
        Self { m, n: sample.len() as f64 }
    }

    /// Same as [`LocalMoments::from_sample`] on sorted data, skipping the
    /// observations whose kernel weight is exactly zero and, optionally, one index.
    fn from_sorted(s: f64, sorted: &[f64], h: f64, skip: Option<usize>) -> Self {
        let (lo, hi) = kernel_window(sorted, s, h);
        let mut m = [0.0; 3];
        for (i, &t) in sorted.iter().enumerate().take(hi).skip(lo) {
            if Some(i) != skip {
                accumulate(&mut m, (t - s) / h, 1.0);
            }
        }
        let n = sorted.len() - usize::from(skip.is_some());
        Self { m, n: n as f64 }
    }
}

#[inline]
fn accumulate(m: &mut [f64; 3], u: f64, w: f64) {
    let k = w * GaussianKernel.eval(u);
    m[0] += k;
    m[1] += k * u;
    m[2] += k * u * u;
}

/// Objective, gradient and Hessian in scaled coordinates.
struct ScaledScore {
    objective: f64,
    /// n h exp(c₀) I₀
    e: f64,
    gradient: [f64; 3],
    hessian: [[f64; 3]; 3],
}

fn scaled_score(c: &[f64; 3], p: usize, mom: &LocalMoments, h: f64) -> ScaledScore {
    let (log_i0, r) = tilted_moments(c[1], if p == 2 { c[2] } else { 0.0 });
    let e = (c[0] + log_i0 + (mom.n * h).ln()).exp();
    let mut objective = -e;
    let mut gradient = [0.0; 3];
    let mut hessian = [[0.0; 3]; 3];
    for j in 0..=p {
        objective += c[j] * mom.m[j];
        gradient[j] = mom.m[j] - e * r[j];
        for k in 0..=p {
            hessian[j][k] = -e * r[j + k];
        }
    }
    ScaledScore {
        objective,
        e,
        gradient,
        hessian,
    }
}

/// Objective, gradient and Hessian of the local likelihood with respect to
/// the unscaled coefficients (a₀, …, a_p).
#[derive(Debug, Clone, PartialEq)]
pub struct LocalScore {
    pub objective: f64,
    pub gradient: Vec<f64>,
    pub hessian: Vec<Vec<f64>>,
}

/// Σ K((S_i − s)/h) P(S_i − s) − n h exp(a₀) I₀ and its exact derivatives.
pub fn local_score(coeffs: &[f64], s: f64, sample: &[f64], h: f64) -> Result<LocalScore> {
    let p = coeffs.len().saturating_sub(1);
    if p != 1 && p != 2 {
        return Err(Error::InvalidInput(format!("expected 2 or 3 coefficients, got {}", coeffs.len())));
    }
    let mut c = [0.0; 3];
    for j in 0..=p {
        c[j] = coeffs[j] * h.powi(j as i32);
    }
    if p == 2 && !(c[2] < 0.5) {
        return Err(Error::Domain(format!("a2 h^2 = {} is outside the convergence region", c[2])));
    }
    let sc = scaled_score(&c, p, &LocalMoments::from_sample(s, sample, h), h);
    let scale = |j: usize| h.powi(j as i32);
    Ok(LocalScore {
        objective: sc.objective,
        gradient: (0..=p).map(|j| sc.gradient[j] * scale(j)).collect(),
        hessian: (0..=p)
            .map(|j| (0..=p).map(|k| sc.hessian[j][k] * scale(j + k)).collect())
            .collect(),
    })
}

/// Solves A x = b for a small symmetric positive definite A (Cholesky).
fn solve_spd(a: &[[f64; 3]; 3], b: &[f64; 3], dim: usize) -> Option<[f64; 3]> {
    let mut l = [[0.0; 3]; 3];
    for i in 0..dim {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if !(sum > 0.0) {
                    return None;
                }
                l[i][i] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    let mut y = [0.0; 3];
    for i in 0..dim {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i][k] * y[k];
        }
        y[i] = sum / l[i][i];
    }
    let mut x = [0.0; 3];
    for i in (0..dim).rev() {
        let mut sum = y[i];
        for k in i + 1..dim {
            sum -= l[k][i] * x[k];
        }
        x[i] = sum / l[i][i];
    }
    Some(x)
}

/// log I₀(cand) − log I₀(c), written in terms of the coordinate differences
/// so that it keeps full relative accuracy for small steps.
fn log_i0_increment(c: &[f64; 3], cand: &[f64; 3], p: usize) -> f64 {
    let d1 = cand[1] - c[1];
    if p == 1 {
        return 0.5 * d1 * (cand[1] + c[1]);
    }
    let d2 = cand[2] - c[2];
    let v = 1.0 / (1.0 - 2.0 * c[2]);
    let v_new = 1.0 / (1.0 - 2.0 * cand[2]);
    let log_v = -0.5 * (-2.0 * d2 * v).ln_1p();
    // c₁'²v' − c₁²v = d₁(c₁' + c₁)v' + 2 c₁² d₂ v v'
    let quad = d1 * (cand[1] + c[1]) * v_new + 2.0 * c[1] * c[1] * d2 * v * v_new;
    log_v + 0.5 * quad
}

/// L(cand) − L(c) without the cancellation of the large terms c_j M_j.
fn objective_increment(c: &[f64; 3], at_c: &ScaledScore, cand: &[f64; 3], mom: &LocalMoments, p: usize) -> f64 {
    let data: f64 = (0..=p).map(|j| (cand[j] - c[j]) * mom.m[j]).sum();
    let log_ratio = (cand[0] - c[0]) + log_i0_increment(c, cand, p);
    data - at_c.e * log_ratio.exp_m1()
}

/// Damped Newton ascent from the degree-0 solution. Returns the fit and the
/// objective value at every accepted iterate, accumulated from the accepted
/// increments.
pub fn fit_from_moments(s: f64, mom: &LocalMoments, h: f64, p: usize, trace: bool) -> (LocalFit, Vec<f64>) {
    assert!(p == 1 || p == 2, "degree must be 1 or 2");
    let mut history = Vec::new();
    let finish = |c: [f64; 3], status, iterations, score_norm| LocalFit {
        s,
        degree: p,
        h,
        coefficients: (0..=p).map(|j| c[j] / h.powi(j as i32)).collect(),
        status,
        iterations,
        score_norm,
    };
    if !(mom.m[0] >= EMPTY_NEIGHBORHOOD) {
        let mut c = [0.0; 3];
        c[0] = f64::NEG_INFINITY;
        return (finish(c, FitStatus::EmptyNeighborhood, 0, 0.0), history);
    }
    let mut c = [(mom.m[0] / (mom.n * h)).ln(), 0.0, 0.0];
    let mut current = scaled_score(&c, p, mom, h);
    let score_norm = |g: &[f64; 3]| g[..=p].iter().fold(0.0_f64, |a, v| a.max(v.abs())) / mom.m[0];
    let mut on_wall = false;
    let mut iterations = 0;
    let mut objective = current.objective;
    for iteration in 0..MAX_ITERATIONS {
        iterations = iteration;
        if trace {
            history.push(objective);
        }
        let norm = score_norm(&current.gradient);
        if norm <= SCORE_TOLERANCE {
            return (finish(c, FitStatus::Converged, iteration, norm), history);
        }
        let mut neg_h = [[0.0; 3]; 3];
        for j in 0..=p {
            for k in 0..=p {
                neg_h[j][k] = -current.hessian[j][k];
            }
        }
        let Some(step) = solve_spd(&neg_h, &current.gradient, p + 1) else {
            break;
        };
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let mut cand = c;
            for j in 0..=p {
                cand[j] += t * step[j];
            }
            let hit_wall = p == 2 && cand[2] > QUADRATIC_WALL;
            if hit_wall {
                cand[2] = QUADRATIC_WALL;
            }
            let sc = scaled_score(&cand, p, mom, h);
            let gain = objective_increment(&c, &current, &cand, mom, p);
            if sc.objective.is_finite() && gain >= 0.0 {
                accepted = Some((cand, sc, hit_wall, gain));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((cand, sc, hit_wall, gain)) => {
                c = cand;
                current = sc;
                objective += gain;
                on_wall = hit_wall;
                iterations = iteration + 1;
            }
            None => break,
        }
    }
    let norm = score_norm(&current.gradient);
    let status = if norm <= SCORE_TOLERANCE {
        FitStatus::Converged
    } else if on_wall {
        FitStatus::BoundaryOfDomain
    } else {
        FitStatus::MaxIterations
    };
    if trace && history.last() != Some(&objective) {
        history.push(objective);
    }
    (finish(c, status, iterations, norm), history)
}

/// Maximizes the local likelihood at `s` with bandwidth `h` and degree `p`.
pub fn fit_local(s: f64, sample: &[f64], h: f64, p: usize) -> Result<LocalFit> {
    check_fit_args(sample, h, p)?;
    Ok(fit_from_moments(s, &LocalMoments::from_sample(s, sample, h), h, p, false).0)
}

/// [`fit_local`] that also returns the objective at every accepted Newton iterate.
pub fn fit_local_traced(s: f64, sample: &[f64], h: f64, p: usize) -> Result<(LocalFit, Vec<f64>)> {
    check_fit_args(sample, h, p)?;
    Ok(fit_from_moments(s, &LocalMoments::from_sample(s, sample, h), h, p, true))
}

fn check_fit_args(sample: &[f64], h: f64, p: usize) -> Result<()> {
    if sample.is_empty() {
        return Err(Error::InvalidInput("sample is empty".into()));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidInput(format!("bandwidth must be positive, got {h}")));
    }
    if p != 1 && p != 2 {
        return Err(Error::InvalidInput(format!("degree must be 1 or 2, got {p}")));
    }
    Ok(())
}

/// Fit on sorted data, optionally leaving one observation out.
pub(crate) fn fit_sorted(s: f64, sorted: &[f64], h: f64, p: usize, skip: Option<usize>) -> LocalFit {
    fit_from_moments(s, &LocalMoments::from_sorted(s, sorted, h, skip), h, p, false).0
}

/// k-th smallest |s − S_i| in a pseudo-sample.
pub fn knn_distance(s: f64, pseudo: &PseudoSample, k: usize) -> Result<f64> {
    let n = pseudo.len();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("k must lie in 1..={n}, got {k}")));
    }
    Ok(knn_sorted(pseudo.values(), s, k))
}

/// k-th nearest distance on sorted data: the k nearest points form a
/// contiguous run, located by bisection on its left end.
pub(crate) fn knn_sorted(sorted: &[f64], s: f64, k: usize) -> f64 {
    let n = sorted.len();
    let (mut lo, mut hi) = (0, n - k);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if s - sorted[mid] > sorted[mid + k] - s {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    (s - sorted[lo]).abs().max((sorted[lo + k - 1] - s).abs())
}

/// Bandwidth at `s` for a given smoothing specification on sorted data.
pub(crate) fn bandwidth_at(spec: &BandwidthSpec, sorted: &[f64], s: f64, degree: usize) -> f64 {
    match spec {
        BandwidthSpec::Fixed(h) => h.h(),
        BandwidthSpec::Knn(knn) => knn_sorted(sorted, s, knn.k_of(sorted.len(), degree)),
    }
}

pub(crate) fn bandwidth_record(spec: &BandwidthSpec, n: usize, degree: usize) -> BandwidthRecord {
    match spec {
        BandwidthSpec::Fixed(h) => BandwidthRecord::Fixed { h: h.h() },
        BandwidthSpec::Knn(knn) => BandwidthRecord::Knn {
            alpha: knn.alpha(),
            k: knn.k_of(n, degree),
        },
    }
}

/// Local fits at the given points of the fitting scale (S for the probit
/// family, X for the raw family) on sorted data.
pub fn fit_grid(sorted: &[f64], spec: &EstimatorSpec, points: &[f64]) -> Vec<LocalFit> {
    points
        .par_iter()
        .map(|&s| {
            let h = bandwidth_at(&spec.bandwidth, sorted, s, spec.degree);
            fit_sorted(s, sorted, h, spec.degree, None)
        })
        .collect()
}

/// Estimate on a (0,1) grid with the fits that produced it.
pub fn estimate_with_fits(
    xs: &UnitSample,
    spec: &EstimatorSpec,
    grid: &[f64],
    policy: BoundaryPolicy,
    renorm: bool,
) -> Result<(DensityEstimate, Vec<LocalFit>)> {
    check_unit_grid(grid)?;
    let sorted = match spec.family {
        Family::ProbitLocLik => crate::transform::to_pseudo_sample(xs, policy)?.values().to_vec(),
        Family::RawLocLik => {
            let mut v = xs.interior_values(policy)?;
            v.sort_by(f64::total_cmp);
            v
        }
    };
    estimate_sorted(&sorted, spec, grid, renorm, policy.epsilon())
}

/// Estimate from sorted data on the fitting scale.
pub fn estimate_sorted(
    sorted: &[f64],
    spec: &EstimatorSpec,
    grid: &[f64],
    renorm: bool,
    clamp_epsilon: Option<f64>,
) -> Result<(DensityEstimate, Vec<LocalFit>)> {
    check_unit_grid(grid)?;
    let points: Vec<f64> = match spec.family {
        Family::ProbitLocLik => grid.iter().map(|&x| ppnd16(x)).collect(),
        Family::RawLocLik => grid.to_vec(),
    };
    let fits = fit_grid(sorted, spec, &points);
    if let Some(bad) = fits.iter().find(|f| !f.is_usable()) {
        return Err(Error::Numerical(format!(
            "local fit at s = {} ended with status {:?} (score norm {:e})",
            bad.s, bad.status, bad.score_norm
        )));
    }
    let values = fits
        .iter()
        .map(|f| match spec.family {
            Family::ProbitLocLik => back_transform_at(f.density(), f.s),
            Family::RawLocLik => f.density(),
        })
        .collect();
    let metadata = EstimateMetadata {
        estimator: spec.name(),
        bandwidth: bandwidth_record(&spec.bandwidth, sorted.len(), spec.degree),
        mass_before_renormalization: None,
        clamp_epsilon,
    };
    let est = DensityEstimate::new(grid.to_vec(), values, DomainTag::UnitInterval, metadata)?;
    let est = if renorm { renormalize(est)? } else { est };
    Ok((est, fits))
}

/// Local-likelihood density estimate on a (0,1) grid.
pub fn estimate_density(
    xs: &UnitSample,
    spec: &EstimatorSpec,
    grid: &[f64],
    policy: BoundaryPolicy,
    renorm: bool,
) -> Result<DensityEstimate> {
    estimate_with_fits(xs, spec, grid, policy, renorm).map(|(est, _)| est)
}
