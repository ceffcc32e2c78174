//! Weighted least-squares cross-validation for h or α.
//!
//! The criterion is ∫ f̃² ω̂ ds − (2/n) Σ f̃₍₋ᵢ₎(S_i) ω̂(S_i), with exact
//! leave-one-out refits and a pilot-based weight ω̂.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classic::{bandwidth_sj_dpi, kde_eval_sorted, FixedBandwidth};
use crate::error::{Error, Result};
use crate::loclik::{bandwidth_at, fit_sorted, knn_sorted, BandwidthSpec, EstimatorSpec, Family, KnnBandwidth, LocalFit};
use crate::prob::normal::std_normal_pdf;
use crate::prob::{simpson_tabulated, QuadratureRule};
use crate::transform::PseudoSample;

/// Smallest value the pilot density is allowed to take.
pub const PILOT_FLOOR: f64 = 1e-300;
/// Number of points on the candidate ladder.
pub const LADDER_POINTS: usize = 25;
/// Relative width at which golden-section refinement stops.
pub const REFINE_TOLERANCE: f64 = 1e-3;
/// Maximum number of quadrature nodes for the integral term.
pub const MAX_NODES: usize = 4001;
/// Nodes per bandwidth within each integration panel.
pub const PANEL_RESOLUTION: f64 = 16.0;
/// Integrand values below this fraction of the peak are dropped.
pub const TRIM: f64 = 1e-14;
/// Extent, in log-distance units, of each tail integral.
pub const TAIL_SPAN: f64 = 36.0;
/// Nodes per tail integral.
pub const TAIL_NODES: usize = 721;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightScheme {
    Lscv,
    Wlscv1,
    Wlscv2,
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightScheme::Lscv => "lscv",
            WeightScheme::Wlscv1 => "wlscv1",
            WeightScheme::Wlscv2 => "wlscv2",
        })
    }
}

impl FromStr for WeightScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lscv" => Ok(WeightScheme::Lscv),
            "wlscv1" => Ok(WeightScheme::Wlscv1),
            "wlscv2" => Ok(WeightScheme::Wlscv2),
            _ => Err(Error::InvalidInput(format!("unknown weight scheme '{s}'"))),
        }
    }
}

/// Direction of the weight ratio.
///
/// `Sec4` uses ω₁ = √(φ/f̂_S) and ω₂ = φ/f̂_S (more weight in the tails);
/// `Sec5` uses the reciprocal ratios √(f̂_S/φ) and f̂_S/φ.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightConvention {
    #[default]
    Sec4,
    Sec5,
}

impl FromStr for WeightConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sec4" => Ok(WeightConvention::Sec4),
            "sec5" => Ok(WeightConvention::Sec5),
            _ => Err(Error::InvalidInput(format!("unknown weight convention '{s}'"))),
        }
    }
}

/// Conventional kernel estimate of f_S with the direct plug-in bandwidth,
/// floored at [`PILOT_FLOOR`].
#[derive(Debug, Clone)]
pub struct Pilot {
    sorted: Vec<f64>,
    h: FixedBandwidth,
}

impl Pilot {
    pub fn eval(&self, s: f64) -> f64 {
        kde_eval_sorted(&self.sorted, self.h.h(), s).max(PILOT_FLOOR)
    }

    pub fn bandwidth(&self) -> FixedBandwidth {
        self.h
    }
}

pub fn pilot_fs(pseudo: &PseudoSample) -> Result<Pilot> {
    let h = bandwidth_sj_dpi(pseudo.values())?;
    Ok(Pilot {
        sorted: pseudo.values().to_vec(),
        h,
    })
}

/// The weight ω̂ used by the criterion. Outside the range of the data the
/// weight is held at its value at the nearest extreme observation.
#[derive(Debug, Clone)]
pub struct CvWeight {
    scheme: WeightScheme,
    convention: WeightConvention,
    pilot: Option<Pilot>,
    hull: (f64, f64),
}

impl CvWeight {
    /// Builds the weight for sorted S-domain data; the pilot is only
    /// computed for the weighted schemes.
    pub fn new(scheme: WeightScheme, convention: WeightConvention, sorted: &[f64]) -> Result<Self> {
        let pilot = match scheme {
            WeightScheme::Lscv => None,
            _ => Some(pilot_fs(&PseudoSample::from_values(sorted.to_vec())?)?),
        };
        Ok(Self {
            scheme,
            convention,
            pilot,
            hull: (sorted[0], sorted[sorted.len() - 1]),
        })
    }

    pub fn unit() -> Self {
        Self {
            scheme: WeightScheme::Lscv,
            convention: WeightConvention::Sec4,
            pilot: None,
            hull: (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn scheme(&self) -> WeightScheme {
        self.scheme
    }

    pub fn eval(&self, s: f64) -> f64 {
        let Some(pilot) = &self.pilot else {
            return 1.0;
        };
        let s = s.clamp(self.hull.0, self.hull.1);
        let ratio = match self.convention {
            WeightConvention::Sec4 => std_normal_pdf(s) / pilot.eval(s),
            WeightConvention::Sec5 => pilot.eval(s) / std_normal_pdf(s).max(PILOT_FLOOR),
        };
        match self.scheme {
            WeightScheme::Lscv => 1.0,
            WeightScheme::Wlscv1 => ratio.sqrt(),
            WeightScheme::Wlscv2 => ratio,
        }
    }
}

/// Quadrature rule for the core of the integral term: the data range widened
/// by four bandwidths (the whole unit interval for raw fits), with node
/// spacing at most a third of the smallest bandwidth in use.
pub fn criterion_rule(spec: &EstimatorSpec, sorted: &[f64]) -> Result<QuadratureRule> {
    let (lo_s, hi_s) = (sorted[0], sorted[sorted.len() - 1]);
    let (reach, finest) = match spec.bandwidth {
        BandwidthSpec::Fixed(h) => (h.h(), h.h()),
        BandwidthSpec::Knn(knn) => {
            let k = knn.k_of(sorted.len(), spec.degree);
            let reach = knn_sorted(sorted, lo_s, k).max(knn_sorted(sorted, hi_s, k));
            let finest = sorted
                .iter()
                .map(|&s| knn_sorted(sorted, s, k))
                .fold(f64::INFINITY, f64::min);
            (reach, finest)
        }
    };
    let (lower, upper) = match spec.family {
        Family::ProbitLocLik => (lo_s - 4.0 * reach, hi_s + 4.0 * reach),
        Family::RawLocLik => (0.0, 1.0),
    };
    let wanted = ((upper - lower) / (finest / 3.0)).ceil();
    let mut points = if wanted.is_finite() { (wanted as usize).clamp(201, MAX_NODES) } else { MAX_NODES };
    if points % 2 == 0 {
        points += 1;
    }
    QuadratureRule::new(lower, upper, points.min(MAX_NODES))
}

fn usable(fit: LocalFit) -> Result<f64> {
    if fit.is_usable() {
        Ok(fit.density())
    } else {
        Err(Error::Numerical(format!(
            "local fit at s = {} ended with status {:?}",
            fit.s, fit.status
        )))
    }
}

/// Sorted panel ends in [lower, upper]: the data hull, where the weight is
/// clamped, and for nearest-neighbour bandwidths the points where d_k(s)
/// changes slope.
fn panel_cuts(spec: &EstimatorSpec, sorted: &[f64], lower: f64, upper: f64) -> Vec<f64> {
    let n = sorted.len();
    let mut cuts = vec![lower, upper, sorted[0], sorted[n - 1]];
    if let BandwidthSpec::Knn(knn) = spec.bandwidth {
        let k = knn.k_of(n, spec.degree);
        for j in 0..n {
            if j + k - 1 < n {
                cuts.push(0.5 * (sorted[j] + sorted[j + k - 1]));
            }
            if j + k < n {
                cuts.push(0.5 * (sorted[j] + sorted[j + k]));
            }
        }
    }
    cuts.retain(|c| (lower..=upper).contains(c));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| *a - *b <= 1e-12 * (upper - lower));
    cuts
}

/// Leave-one-out fit at the i-th sorted observation.
fn loo_density(spec: &EstimatorSpec, sorted: &[f64], i: usize) -> Result<f64> {
    let s = sorted[i];
    let h = match spec.bandwidth {
        BandwidthSpec::Fixed(h) => h.h(),
        BandwidthSpec::Knn(knn) => {
            // d_k over the other n − 1 points is the (k+1)-th distance in the full sample.
            let k = knn.k_of(sorted.len() - 1, spec.degree);
            knn_sorted(sorted, s, k + 1)
        }
    };
    usable(fit_sorted(s, sorted, h, spec.degree, Some(i)))
}

/// The cross-validation criterion for a fully specified estimator on sorted
/// data (S-domain for the probit family, raw for the raw family).
pub fn wlscv_criterion(spec: &EstimatorSpec, sorted: &[f64], weight: &CvWeight, rule: &QuadratureRule) -> Result<f64> {
    if sorted.len() < 2 {
        return Err(Error::InvalidInput("cross-validation needs at least two observations".into()));
    }
    if spec.family == Family::RawLocLik && weight.scheme() != WeightScheme::Lscv {
        return Err(Error::Capability("raw local-likelihood fits support LSCV only".into()));
    }
    let value = |s: f64| -> Result<f64> {
        let h = bandwidth_at(&spec.bandwidth, sorted, s, spec.degree);
        let f = usable(fit_sorted(s, sorted, h, spec.degree, None))?;
        Ok(f * f * weight.eval(s))
    };
    // Simpson on each panel between kinks of the integrand, with nodes no
    // further apart than the rule's spacing or 1/PANEL_RESOLUTION of the
    // bandwidth at the panel centre.
    let cuts = panel_cuts(spec, sorted, rule.lower(), rule.upper());
    let core = cuts
        .windows(2)
        .map(|w| {
            let local = bandwidth_at(&spec.bandwidth, sorted, 0.5 * (w[0] + w[1]), spec.degree);
            let spacing = rule.step().min(local / PANEL_RESOLUTION);
            let m = ((w[1] - w[0]) / spacing).ceil().max(2.0) as usize;
            let m = m + m % 2;
            let step = (w[1] - w[0]) / m as f64;
            let values = (0..=m)
                .map(|i| value(if i == m { w[1] } else { w[0] + i as f64 * step }))
                .collect::<Result<Vec<f64>>>()?;
            Ok((values, step))
        })
        .collect::<Result<Vec<_>>>()?;
    let core_peak = core.iter().flat_map(|(v, _)| v.iter()).cloned().fold(0.0, f64::max);
    // Beyond the rule the probit-family integrand is carried outwards on
    // s = edge ± r (eᵛ − 1), with r the bandwidth at the edge, until it falls
    // below the trimming level.
    let tails = match spec.family {
        Family::RawLocLik => Vec::new(),
        Family::ProbitLocLik => [(rule.lower(), -1.0), (rule.upper(), 1.0)]
            .iter()
            .map(|&(edge, dir)| {
                let r = bandwidth_at(&spec.bandwidth, sorted, edge, spec.degree);
                let dv = TAIL_SPAN / (TAIL_NODES - 1) as f64;
                let mut values = vec![0.0; TAIL_NODES];
                for (i, slot) in values.iter_mut().enumerate() {
                    let e = (i as f64 * dv).exp();
                    *slot = value(edge + dir * r * (e - 1.0))? * r * e;
                    if *slot <= TRIM * core_peak {
                        break;
                    }
                }
                Ok((values, dv))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let peak = tails.iter().flat_map(|(v, _)| v.iter()).cloned().fold(core_peak, f64::max);
    let mut first = 0.0;
    for (values, step) in core.iter().chain(&tails) {
        let trimmed: Vec<f64> = values.iter().map(|&x| if x > TRIM * peak { x } else { 0.0 }).collect();
        first += simpson_tabulated(&trimmed, *step)?;
    }
    let mut second = 0.0;
    for i in 0..sorted.len() {
        second += loo_density(spec, sorted, i)? * weight.eval(sorted[i]);
    }
    Ok(first - 2.0 * second / sorted.len() as f64)
}

/// Outcome of a bandwidth search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SelectionResult {
    /// Selected h (fixed bandwidth) or α (nearest neighbour).
    pub parameter: f64,
    pub criterion_value: f64,
    /// Every evaluated (candidate, criterion) pair, sorted by candidate.
    pub trace: Vec<(f64, f64)>,
    pub scheme: WeightScheme,
    pub convention: WeightConvention,
}

fn log_ladder(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    if m == 1 || !(hi > lo) {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..m)
        .map(|i| {
            if i + 1 == m {
                hi
            } else {
                (a + (b - a) * i as f64 / (m - 1) as f64).exp()
            }
        })
        .collect()
}

/// The default candidate ladder: h in [h_DPI/8, 8 h_DPI] or α in
/// [max((p+2)/n, 0.02), 1], log-spaced.
pub fn default_ladder(spec: &EstimatorSpec, sorted: &[f64]) -> Result<Vec<f64>> {
    match spec.bandwidth {
        BandwidthSpec::Fixed(_) => {
            let h = bandwidth_sj_dpi(sorted)?.h();
            Ok(log_ladder(h / 8.0, 8.0 * h, LADDER_POINTS))
        }
        BandwidthSpec::Knn(_) => {
            let lo = ((spec.degree + 2) as f64 / sorted.len() as f64).max(0.02).min(1.0);
            Ok(log_ladder(lo, 1.0, LADDER_POINTS))
        }
    }
}

fn with_param(spec: &EstimatorSpec, param: f64) -> Result<EstimatorSpec> {
    let bw = match spec.bandwidth {
        BandwidthSpec::Fixed(_) => BandwidthSpec::Fixed(FixedBandwidth::new(param)?),
        BandwidthSpec::Knn(_) => BandwidthSpec::Knn(KnnBandwidth::new(param)?),
    };
    Ok(spec.with_bandwidth(bw))
}

/// Selects h or α for `spec` by minimizing the criterion over the default ladder.
pub fn select(
    spec: &EstimatorSpec,
    sorted: &[f64],
    scheme: WeightScheme,
    convention: WeightConvention,
) -> Result<SelectionResult> {
    if sorted.len() < 10 {
        return Err(Error::InvalidInput(format!(
            "bandwidth selection needs at least 10 observations, got {}",
            sorted.len()
        )));
    }
    let ladder = default_ladder(spec, sorted)?;
    select_with_ladder(spec, sorted, scheme, convention, &ladder)
}

/// Grid search over `ladder` followed by golden-section refinement between
/// the neighbours of the best ladder point.
pub fn select_with_ladder(
    spec: &EstimatorSpec,
    sorted: &[f64],
    scheme: WeightScheme,
    convention: WeightConvention,
    ladder: &[f64],
) -> Result<SelectionResult> {
    if ladder.is_empty() {
        return Err(Error::InvalidInput("candidate ladder is empty".into()));
    }
    let weight = CvWeight::new(scheme, convention, sorted)?;
    let evaluate = |param: f64| -> Result<f64> {
        let candidate = with_param(spec, param)?;
        let rule = criterion_rule(&candidate, sorted)?;
        wlscv_criterion(&candidate, sorted, &weight, &rule)
    };
    let results: Vec<(f64, Result<f64>)> = ladder.par_iter().map(|&p| (p, evaluate(p))).collect();
    let mut trace: Vec<(f64, f64)> = Vec::new();
    let mut failures = Vec::new();
    for (p, r) in results {
        match r {
            Ok(v) if v.is_finite() => trace.push((p, v)),
            Ok(v) => failures.push(format!("{p}: criterion {v}")),
            Err(e) => failures.push(format!("{p}: {e}")),
        }
    }
    if trace.is_empty() {
        return Err(Error::Numerical(format!(
            "every candidate failed: {}",
            failures.join("; ")
        )));
    }
    let best = trace
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
        .expect("non-empty trace");
    if ladder.len() > 1 {
        let pos = ladder.iter().position(|&p| p == trace[best].0).expect("ladder point");
        let lo = ladder[pos.saturating_sub(1)];
        let hi = ladder[(pos + 1).min(ladder.len() - 1)];
        golden_section(lo, hi, &evaluate, &mut trace);
    }
    trace.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (parameter, criterion_value) = trace
        .iter()
        .cloned()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty trace");
    Ok(SelectionResult {
        parameter,
        criterion_value,
        trace,
        scheme,
        convention,
    })
}

/// Golden-section search in log-parameter space; failed evaluations count as +∞.
fn golden_section<F>(lo: f64, hi: f64, evaluate: &F, trace: &mut Vec<(f64, f64)>)
where
    F: Fn(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let probe = |x: f64, trace: &mut Vec<(f64, f64)>| -> f64 {
        let p = x.exp();
        match evaluate(p) {
            Ok(v) if v.is_finite() => {
                trace.push((p, v));
                v
            }
            _ => f64::INFINITY,
        }
    };
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = probe(x1, trace);
    let mut f2 = probe(x2, trace);
    while b - a > REFINE_TOLERANCE {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = probe(x1, trace);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = probe(x2, trace);
        }
    }
}
