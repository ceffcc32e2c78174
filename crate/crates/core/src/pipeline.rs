//! Named estimator configurations and the code that runs them end to end.
//!
//! A label reads `method[:bandwidth[:selector]]`, for example `t2:knn:wlscv1`,
//! `naive`, `conventional:fixed:dpi` or `t1:fixed:h=0.3`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classic::{
    amended_from_pseudo, bandwidth_normal_reference, bandwidth_sj_dpi, conventional_kde, dai_kde,
    naive_from_pseudo, DensityEstimate, FixedBandwidth,
};
use crate::error::{Error, Result};
use crate::loclik::{estimate_sorted, BandwidthSpec, EstimatorSpec, Family, KnnBandwidth};
use crate::select::{select, SelectionResult, WeightConvention, WeightScheme};
use crate::transform::{to_pseudo_sample, BoundaryPolicy, UnitSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Conventional,
    Dai,
    Naive,
    Amended,
    T1,
    T2,
    Raw1,
    Raw2,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Conventional,
        Method::Dai,
        Method::Naive,
        Method::Amended,
        Method::T1,
        Method::T2,
        Method::Raw1,
        Method::Raw2,
    ];

    pub fn is_local_likelihood(self) -> bool {
        matches!(self, Method::T1 | Method::T2 | Method::Raw1 | Method::Raw2)
    }

    /// Family and degree of a local-likelihood method.
    fn local(self) -> Option<(Family, usize)> {
        match self {
            Method::T1 => Some((Family::ProbitLocLik, 1)),
            Method::T2 => Some((Family::ProbitLocLik, 2)),
            Method::Raw1 => Some((Family::RawLocLik, 1)),
            Method::Raw2 => Some((Family::RawLocLik, 2)),
            _ => None,
        }
    }

    /// Whether estimates of this method are rescaled to unit grid mass.
    pub fn renormalizes(self) -> bool {
        matches!(self, Method::Dai | Method::Amended | Method::T1 | Method::T2)
    }

    pub fn default_bandwidth(self) -> BandwidthKind {
        if self.is_local_likelihood() {
            BandwidthKind::Knn
        } else {
            BandwidthKind::Fixed
        }
    }

    pub fn default_selector(self) -> Selector {
        match self {
            Method::T1 | Method::T2 => Selector::Cv(WeightScheme::Wlscv1),
            Method::Raw1 | Method::Raw2 => Selector::Cv(WeightScheme::Lscv),
            _ => Selector::Dpi,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Conventional => "conventional",
            Method::Dai => "dai",
            Method::Naive => "naive",
            Method::Amended => "amended",
            Method::T1 => "t1",
            Method::T2 => "t2",
            Method::Raw1 => "raw1",
            Method::Raw2 => "raw2",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.to_string() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandwidthKind {
    Fixed,
    Knn,
}

impl fmt::Display for BandwidthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BandwidthKind::Fixed => "fixed",
            BandwidthKind::Knn => "knn",
        })
    }
}

impl FromStr for BandwidthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(BandwidthKind::Fixed),
            "knn" => Ok(BandwidthKind::Knn),
            _ => Err(Error::InvalidInput(format!("unknown bandwidth kind '{s}'"))),
        }
    }
}

/// How the smoothing parameter is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Selector {
    /// Cross-validation with the given weight.
    Cv(WeightScheme),
    /// Two-stage direct plug-in on the estimator's working scale.
    Dpi,
    /// Normal reference rule on the working scale.
    Nrr,
    /// A given h.
    H(f64),
    /// A given α.
    Alpha(f64),
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selector::Cv(s) => write!(f, "{s}"),
            Selector::Dpi => f.write_str("dpi"),
            Selector::Nrr => f.write_str("nrr"),
            Selector::H(h) => write!(f, "h={h}"),
            Selector::Alpha(a) => write!(f, "alpha={a}"),
        }
    }
}

impl FromStr for Selector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let value = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("cannot parse '{v}' in selector '{s}'")))
        };
        if let Some(v) = s.strip_prefix("h=") {
            return Ok(Selector::H(value(v)?));
        }
        if let Some(v) = s.strip_prefix("alpha=") {
            return Ok(Selector::Alpha(value(v)?));
        }
        match s {
            "dpi" => Ok(Selector::Dpi),
            "nrr" => Ok(Selector::Nrr),
            _ => s.parse().map(Selector::Cv),
        }
    }
}

/// A fully resolved estimator configuration; serialized as its label string.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorLabel {
    pub method: Method,
    pub bandwidth: BandwidthKind,
    pub selector: Selector,
}

impl EstimatorLabel {
    /// Validates the combination.
    pub fn new(method: Method, bandwidth: BandwidthKind, selector: Selector) -> Result<Self> {
        let label = Self { method, bandwidth, selector };
        label.check()?;
        Ok(label)
    }

    /// The method with its default bandwidth kind and selector.
    pub fn default_for(method: Method) -> Self {
        Self {
            method,
            bandwidth: method.default_bandwidth(),
            selector: method.default_selector(),
        }
    }

    fn check(&self) -> Result<()> {
        let cap = |msg: String| Err(Error::Capability(msg));
        if !self.method.is_local_likelihood() {
            if self.bandwidth == BandwidthKind::Knn {
                return cap(format!("{} supports only a fixed bandwidth", self.method));
            }
            if let Selector::Cv(_) | Selector::Alpha(_) = self.selector {
                return cap(format!("{} supports the dpi, nrr and h=V selectors only", self.method));
            }
        }
        match (self.bandwidth, self.selector) {
            (BandwidthKind::Knn, Selector::H(_) | Selector::Dpi | Selector::Nrr) => {
                return Err(Error::InvalidInput(format!(
                    "selector {} needs a fixed bandwidth",
                    self.selector
                )))
            }
            (BandwidthKind::Fixed, Selector::Alpha(_)) => {
                return Err(Error::InvalidInput("alpha=V needs the knn bandwidth".into()))
            }
            _ => {}
        }
        if let (Some((Family::RawLocLik, _)), Selector::Cv(s)) = (self.method.local(), self.selector) {
            if s != WeightScheme::Lscv {
                return cap(format!("{} supports unweighted cross-validation only", self.method));
            }
        }
        match self.selector {
            Selector::H(h) => FixedBandwidth::new(h).map(|_| ()),
            Selector::Alpha(a) => KnnBandwidth::new(a).map(|_| ()),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for EstimatorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.method, self.bandwidth, self.selector)
    }
}

impl FromStr for EstimatorLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split(':');
        let method: Method = parts.next().unwrap_or("").parse()?;
        let bandwidth = match parts.next() {
            Some(b) => b.parse()?,
            None => method.default_bandwidth(),
        };
        let selector = match parts.next() {
            Some(sel) => sel.parse()?,
            None if bandwidth == method.default_bandwidth() => method.default_selector(),
            None => match bandwidth {
                BandwidthKind::Fixed => Selector::Dpi,
                BandwidthKind::Knn => Selector::Cv(WeightScheme::Wlscv1),
            },
        };
        if parts.next().is_some() {
            return Err(Error::InvalidInput(format!("label '{s}' has too many fields")));
        }
        EstimatorLabel::new(method, bandwidth, selector)
    }
}

impl Serialize for EstimatorLabel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EstimatorLabel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An estimate together with how its smoothing parameter was chosen.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PipelineOutput {
    pub label: EstimatorLabel,
    pub estimate: DensityEstimate,
    /// The h or α actually used.
    pub parameter: f64,
    pub selection: Option<SelectionResult>,
}

/// Selects the smoothing parameter for `label` and evaluates the estimate on `grid`.
pub fn run_estimator(
    label: &EstimatorLabel,
    xs: &UnitSample,
    grid: &[f64],
    policy: BoundaryPolicy,
    convention: WeightConvention,
) -> Result<PipelineOutput> {
    label.check()?;
    let method = label.method;
    let fixed_rule = |data: &[f64]| -> Result<FixedBandwidth> {
        match label.selector {
            Selector::Dpi => bandwidth_sj_dpi(data),
            Selector::Nrr => bandwidth_normal_reference(data),
            Selector::H(h) => FixedBandwidth::new(h),
            _ => unreachable!("checked by the label"),
        }
    };
    let (estimate, parameter, selection) = match method {
        Method::Conventional | Method::Dai => {
            let h = fixed_rule(xs.values())?;
            let est = if method == Method::Dai {
                dai_kde(xs, h, grid)?
            } else {
                conventional_kde(xs, h, grid)?
            };
            (est, h.h(), None)
        }
        Method::Naive | Method::Amended => {
            let pseudo = to_pseudo_sample(xs, policy)?;
            let h = fixed_rule(pseudo.values())?;
            let mut est = if method == Method::Amended {
                amended_from_pseudo(&pseudo, h, grid, true)?
            } else {
                naive_from_pseudo(&pseudo, h, grid)?
            };
            est.metadata.clamp_epsilon = policy.epsilon();
            (est, h.h(), None)
        }
        _ => {
            let (family, degree) = method.local().expect("local-likelihood method");
            let sorted = match family {
                Family::ProbitLocLik => to_pseudo_sample(xs, policy)?.values().to_vec(),
                Family::RawLocLik => {
                    let mut v = xs.interior_values(policy)?;
                    v.sort_by(f64::total_cmp);
                    v
                }
            };
            let placeholder = match label.bandwidth {
                BandwidthKind::Fixed => BandwidthSpec::Fixed(FixedBandwidth::new(1.0)?),
                BandwidthKind::Knn => BandwidthSpec::Knn(KnnBandwidth::new(1.0)?),
            };
            let spec = EstimatorSpec::new(family, degree, placeholder)?;
            let (bandwidth, selection) = match (label.bandwidth, label.selector) {
                (_, Selector::Cv(scheme)) => {
                    let sel = select(&spec, &sorted, scheme, convention)?;
                    let bw = match label.bandwidth {
                        BandwidthKind::Fixed => BandwidthSpec::Fixed(FixedBandwidth::new(sel.parameter)?),
                        BandwidthKind::Knn => BandwidthSpec::Knn(KnnBandwidth::new(sel.parameter)?),
                    };
                    (bw, Some(sel))
                }
                (BandwidthKind::Knn, Selector::Alpha(a)) => (BandwidthSpec::Knn(KnnBandwidth::new(a)?), None),
                _ => (BandwidthSpec::Fixed(fixed_rule(&sorted)?), None),
            };
            let spec = spec.with_bandwidth(bandwidth);
            let (est, _) = estimate_sorted(&sorted, &spec, grid, method.renormalizes(), policy.epsilon())?;
            let parameter = match bandwidth {
                BandwidthSpec::Fixed(h) => h.h(),
                BandwidthSpec::Knn(a) => a.alpha(),
            };
            (est, parameter, selection)
        }
    };
    let mut estimate = estimate;
    estimate.metadata.estimator = method.to_string();
    Ok(PipelineOutput {
        label: *label,
        estimate,
        parameter,
        selection,
    })
}
