use clap::Args;
use probit_kde::classic::{amended_probit_estimate, naive_probit_estimate};
use probit_kde::harness::sample_density;
use probit_kde::loclik::estimate_density;
use probit_kde::theory::{asymptotic_profile, midpoint_multipliers};
use probit_kde::{
    BandwidthSpec, BoundaryPolicy, CatalogDensity, EstimatorSpec, Family, FixedBandwidth, KnnBandwidth, SeedSpec,
    TestDensity, TheoryTag, UnitSample,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::Failure;

#[derive(Debug, Args)]
pub struct TheoryArgs {
    /// Catalog density, e.g. uniform, "beta(4,4)", bimodal, "gcc(0.5,0.3)"; repeat for several
    #[arg(long, value_name = "NAME", required = true)]
    density: Vec<String>,

    /// Estimator tags: naive, amended, gc, t1, t2
    #[arg(long, value_name = "TAG", default_value = "naive", value_delimiter = ',')]
    tag: Vec<String>,

    /// Evaluation points in (0,1)
    #[arg(long, value_name = "X", default_value = "0.5", value_delimiter = ',')]
    x: Vec<f64>,

    /// Fixed bandwidth on the probit scale
    #[arg(long, value_name = "H", required_unless_present = "alpha", conflicts_with = "alpha")]
    h: Option<f64>,

    /// Nearest-neighbour fraction (t1 and t2 only); no bias expansion is printed
    #[arg(long, value_name = "ALPHA")]
    alpha: Option<f64>,

    /// Sample size
    #[arg(long, default_value_t = 1000)]
    n: usize,

    /// Monte-Carlo replications of the unrenormalized estimator (0 skips the simulation)
    #[arg(long, value_name = "R", default_value_t = 0)]
    reps: usize,

    /// Master seed for the simulation
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Print JSON instead of a table
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct Row {
    tag: String,
    density: String,
    x: f64,
    bandwidth: String,
    n: usize,
    truth: f64,
    leading_bias: Option<f64>,
    leading_variance: f64,
    mc: Option<MonteCarlo>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct MonteCarlo {
    replications: usize,
    bias: f64,
    bias_se: f64,
    variance: f64,
}

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

/// The unrenormalized estimator for `tag` at a single point.
fn point_estimate(tag: TheoryTag, xs: &UnitSample, x: f64, bw: BandwidthSpec) -> probit_kde::Result<f64> {
    let grid = [x];
    let est = match (tag, bw) {
        (TheoryTag::Naive, BandwidthSpec::Fixed(h)) => naive_probit_estimate(xs, h, &grid)?,
        (TheoryTag::Amended, BandwidthSpec::Fixed(h)) => amended_probit_estimate(xs, h, &grid, false)?,
        (TheoryTag::T1 | TheoryTag::T2, _) => {
            let degree = if tag == TheoryTag::T1 { 1 } else { 2 };
            let spec = EstimatorSpec::new(Family::ProbitLocLik, degree, bw)?;
            estimate_density(xs, &spec, &grid, BoundaryPolicy::Reject, false)?
        }
        _ => unreachable!("filtered by simulate"),
    };
    Ok(est.values[0])
}

fn simulate(
    tag: TheoryTag,
    d: &CatalogDensity,
    x: f64,
    n: usize,
    bw: BandwidthSpec,
    reps: usize,
    seed: u64,
) -> Result<Option<MonteCarlo>, Failure> {
    let supported = match (tag, bw) {
        (TheoryTag::T1 | TheoryTag::T2, _) => true,
        (TheoryTag::Naive | TheoryTag::Amended, BandwidthSpec::Fixed(_)) => true,
        _ => false,
    };
    if reps == 0 || !supported {
        return Ok(None);
    }
    let values = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let xs = sample_density(d, n, SeedSpec::new(seed, r))?;
            point_estimate(tag, &xs, x, bw)
        })
        .collect::<probit_kde::Result<Vec<f64>>>()?;
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let variance = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    Ok(Some(MonteCarlo {
        replications: reps,
        bias: mean - d.pdf(x),
        bias_se: (variance / m).sqrt(),
        variance,
    }))
}

pub fn run(a: &TheoryArgs) -> Result<(), Failure> {
    let tags = a
        .tag
        .iter()
        .map(|t| t.parse::<TheoryTag>())
        .collect::<probit_kde::Result<Vec<_>>>()?;
    let densities = a
        .density
        .iter()
        .map(|d| d.parse::<CatalogDensity>())
        .collect::<probit_kde::Result<Vec<_>>>()?;
    if a.n == 0 {
        return Err(usage("--n must be positive"));
    }
    if let Some(&x) = a.x.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
        return Err(usage(format!("--x values must lie in (0,1), got {x}")));
    }
    let bw = match (a.h, a.alpha) {
        (Some(h), _) => BandwidthSpec::Fixed(FixedBandwidth::new(h)?),
        (None, Some(alpha)) => BandwidthSpec::Knn(KnnBandwidth::new(alpha)?),
        (None, None) => return Err(usage("one of --h or --alpha is required")),
    };
    let bandwidth = match bw {
        BandwidthSpec::Fixed(h) => format!("h={}", h.h()),
        BandwidthSpec::Knn(k) => format!("alpha={}", k.alpha()),
    };

    let mut rows = Vec::new();
    for d in &densities {
        for &tag in &tags {
            let profile = asymptotic_profile(tag, d)?;
            for &x in &a.x {
                let leading_bias = match bw {
                    BandwidthSpec::Fixed(h) => Some(profile.leading_bias(x, h.h())?),
                    BandwidthSpec::Knn(_) => None,
                };
                rows.push(Row {
                    tag: tag.to_string(),
                    density: d.name(),
                    x,
                    bandwidth: bandwidth.clone(),
                    n: a.n,
                    truth: d.pdf(x),
                    leading_bias,
                    leading_variance: profile.leading_variance(x, a.n, &bw)?,
                    mc: simulate(tag, d, x, a.n, bw, a.reps, a.seed)?,
                });
            }
        }
    }
    let midpoint = midpoint_multipliers();

    if a.json {
        let doc = serde_json::json!({ "rows": rows, "midpoint": midpoint });
        println!("{}", serde_json::to_string_pretty(&doc).map_err(usage)?);
        return Ok(());
    }
    let opt = |v: Option<f64>| v.map(|v| format!("{:.6e}", v + 0.0)).unwrap_or_else(|| "-".into());
    println!(
        "{:<8} {:<16} {:>8} {:>12} {:>7} {:>13} {:>13} {:>13} {:>13} {:>13}",
        "tag", "density", "x", "bandwidth", "n", "bias", "variance", "mc_bias", "mc_bias_se", "mc_variance"
    );
    for r in &rows {
        println!(
            "{:<8} {:<16} {:>8} {:>12} {:>7} {:>13} {:>13.6e} {:>13} {:>13} {:>13}",
            r.tag,
            r.density,
            r.x,
            r.bandwidth,
            r.n,
            opt(r.leading_bias),
            r.leading_variance,
            opt(r.mc.as_ref().map(|m| m.bias)),
            opt(r.mc.as_ref().map(|m| m.bias_se)),
            opt(r.mc.as_ref().map(|m| m.variance)),
        );
    }
    println!();
    println!("midpoint MSE multiplier        {:.10}", midpoint.mse_multiplier);
    println!("midpoint optimal MSE constant  {:.10}", midpoint.optimal_mse_constant);
    println!("midpoint bandwidth constant    {:.10}", midpoint.bandwidth_constant);
    println!("quoted h0 reference            {}", midpoint.h0_reference);
    Ok(())
}
