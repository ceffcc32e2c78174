//! The probit map between the unit interval and the real line.
//!
//! Observations `X_i` in (0,1) are sent to `S_i = Φ⁻¹(X_i)`, any density
//! estimate on the real line is mapped back through
//! `f_X(x) = f_S(Φ⁻¹(x)) / φ(Φ⁻¹(x))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::normal::{ppnd16, std_normal_pdf};

/// Observations on the unit interval, as ingested (possibly touching 0 or 1).
#[derive(Debug, Clone, PartialEq)]
pub struct UnitSample {
    values: Vec<f64>,
}

impl UnitSample {
    /// Accepts any non-empty set of finite values in [0,1]; the boundary
    /// policy decides later what happens to values at exactly 0 or 1.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("sample is empty".into()));
        }
        let bad: Vec<usize> = values
            .iter()
            .enumerate()
            .filter(|(_, v)| !(v.is_finite() && (0.0..=1.0).contains(*v)))
            .map(|(i, _)| i)
            .collect();
        if !bad.is_empty() {
            return Err(Error::OutOfUnitInterval {
                count: bad.len(),
                indices: bad,
            });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values after applying `policy`, in input order.
    pub fn interior_values(&self, policy: BoundaryPolicy) -> Result<Vec<f64>> {
        match policy {
            BoundaryPolicy::Reject => {
                let bad: Vec<usize> = self
                    .values
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v <= 0.0 || v >= 1.0)
                    .map(|(i, _)| i)
                    .collect();
                if bad.is_empty() {
                    Ok(self.values.clone())
                } else {
                    Err(Error::OutOfUnitInterval {
                        count: bad.len(),
                        indices: bad,
                    })
                }
            }
            BoundaryPolicy::Clamp { epsilon } => {
                policy.validate()?;
                Ok(self
                    .values
                    .iter()
                    .map(|&v| v.clamp(epsilon, 1.0 - epsilon))
                    .collect())
            }
        }
    }

    /// Sorted interior values.
    pub fn sorted_interior(&self, policy: BoundaryPolicy) -> Result<Vec<f64>> {
        let mut v = self.interior_values(policy)?;
        v.sort_by(f64::total_cmp);
        Ok(v)
    }
}

/// What to do with observations at exactly 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum BoundaryPolicy {
    #[default]
    Reject,
    Clamp { epsilon: f64 },
}

impl BoundaryPolicy {
    pub const DEFAULT_EPSILON: f64 = 1e-10;

    pub fn clamp() -> Self {
        BoundaryPolicy::Clamp {
            epsilon: Self::DEFAULT_EPSILON,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BoundaryPolicy::Clamp { epsilon } if !(epsilon > 0.0 && epsilon < 0.5) => Err(
                Error::InvalidInput(format!("clamp epsilon must lie in (0, 0.5), got {epsilon}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn epsilon(&self) -> Option<f64> {
        match *self {
            BoundaryPolicy::Reject => None,
            BoundaryPolicy::Clamp { epsilon } => Some(epsilon),
        }
    }
}

/// Probit images `S_i = Φ⁻¹(X_i)`, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoSample {
    values: Vec<f64>,
}

impl PseudoSample {
    /// Wraps values already on the real line (sorted on construction).
    pub fn from_values(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("pseudo-sample is empty".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("value at index {i} is not finite")));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Maps a unit-interval sample to the real line.
pub fn to_pseudo_sample(xs: &UnitSample, policy: BoundaryPolicy) -> Result<PseudoSample> {
    let interior = xs.interior_values(policy)?;
    PseudoSample::from_values(interior.into_iter().map(ppnd16).collect())
}

/// Probit of a single interior point.
pub fn probit(x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("probit requires x in (0,1), got {x}")));
    }
    Ok(ppnd16(x))
}

/// `f_S(Φ⁻¹(x)) / φ(Φ⁻¹(x))`: a real-line density value carried back to (0,1).
pub fn back_transform_density(fs_value: f64, x: f64) -> Result<f64> {
    if !(fs_value >= 0.0) {
        return Err(Error::Domain(format!("density value must be >= 0, got {fs_value}")));
    }
    let q = probit(x)?;
    Ok(back_transform_at(fs_value, q))
}

/// Same as [`back_transform_density`] with the probit already computed.
#[inline]
pub(crate) fn back_transform_at(fs_value: f64, q: f64) -> f64 {
    if fs_value == 0.0 {
        0.0
    } else {
        fs_value / std_normal_pdf(q)
    }
}

/// `f_X(Φ(s))·φ(s)`: the density of S implied by a density value of X.
pub fn forward_transform_density(fx_value: f64, s: f64) -> Result<f64> {
    if !(fx_value >= 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!(
            "forward transform needs fx >= 0 and finite s, got ({fx_value}, {s})"
        )));
    }
    Ok(fx_value * std_normal_pdf(s))
}
