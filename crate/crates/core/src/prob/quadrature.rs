//! Composite Simpson quadrature on fixed, odd node counts.

use crate::error::{Error, Result};

/// Composite Simpson rule over `[lower, upper]` with an odd number of nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureRule {
    lower: f64,
    upper: f64,
    points: usize,
}

impl QuadratureRule {
    pub fn new(lower: f64, upper: f64, points: usize) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::InvalidInput(format!(
                "quadrature interval [{lower}, {upper}] is empty or not finite"
            )));
        }
        if points < 3 || points % 2 == 0 {
            return Err(Error::InvalidInput(format!(
                "Simpson rule needs an odd node count >= 3, got {points}"
            )));
        }
        Ok(Self { lower, upper, points })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn step(&self) -> f64 {
        (self.upper - self.lower) / (self.points - 1) as f64
    }

    /// The i-th node, placed symmetrically about the midpoint. The end nodes
    /// are exactly `lower` and `upper`.
    pub fn node(&self, i: usize) -> f64 {
        if i == 0 {
            self.lower
        } else if i + 1 == self.points {
            self.upper
        } else {
            let mid = (self.points - 1) / 2;
            let center = 0.5 * (self.lower + self.upper);
            center + (i as f64 - mid as f64) * self.step()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(move |i| self.node(i))
    }

    /// Simpson weight of node i (1, 4, 2, 4, ..., 4, 1) times step/3.
    pub fn weight(&self, i: usize) -> f64 {
        let w = if i == 0 || i + 1 == self.points {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        w * self.step() / 3.0
    }
}

/// Integrates `f` with the composite Simpson rule.
///
/// Fails with the offending node when `f` is not finite there.
pub fn integrate<F>(f: F, rule: &QuadratureRule) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut values = Vec::with_capacity(rule.points);
    for x in rule.nodes() {
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::Numerical(format!(
                "integrand is {v} at node {x}"
            )));
        }
        values.push(v);
    }
    simpson_tabulated(&values, rule.step())
}

/// Simpson sum of values tabulated on an equally spaced grid.
pub fn simpson_tabulated(values: &[f64], step: f64) -> Result<f64> {
    let n = values.len();
    if n < 3 || n % 2 == 0 {
        return Err(Error::InvalidInput(format!(
            "Simpson rule needs an odd node count >= 3, got {n}"
        )));
    }
    // Mirror-image nodes are added first, so odd integrands on symmetric
    // intervals cancel exactly.
    let mid = (n - 1) / 2;
    let weight = |i: usize| match i {
        0 => 1.0,
        i if i % 2 == 1 => 4.0,
        _ => 2.0,
    };
    let mut total = weight(mid) * values[mid];
    for i in 0..mid {
        total += weight(i) * (values[i] + values[n - 1 - i]);
    }
    Ok(step / 3.0 * total)
}
