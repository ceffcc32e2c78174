//! Seeded Monte-Carlo comparison of estimators: sampling, grid ISE, MISE
//! with standard errors, rank scores and report files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classic::{unit_grid, DensityEstimate};
use crate::density::{CatalogDensity, TestDensity};
use crate::error::{Error, Result};
use crate::pipeline::{run_estimator, EstimatorLabel};
use crate::prob::SeedSpec;
use crate::select::WeightConvention;
use crate::transform::{BoundaryPolicy, UnitSample};

/// Interior points of the ISE grid, i/1000 for i = 1..999.
pub const ISE_GRID_POINTS: usize = 999;
pub const SCHEMA_VERSION: u32 = 1;

/// n independent draws from `d` on the stream given by `seed`.
pub fn sample_density(d: &dyn TestDensity, n: usize, seed: SeedSpec) -> Result<UnitSample> {
    if n == 0 {
        return Err(Error::InvalidInput("sample size must be at least 1".into()));
    }
    let mut rng = seed.rng();
    UnitSample::new((0..n).map(|_| d.draw(&mut rng)).collect())
}

/// (1/1000) Σ_{i=1}^{999} (f̂(i/1000) − f(i/1000))².
pub fn ise_on_grid(est: &DensityEstimate, truth: &dyn TestDensity) -> Result<f64> {
    ise_on_grid_with(est, truth, ISE_GRID_POINTS)
}

/// The same Riemann sum on the grid i/(m+1), i = 1..m.
pub fn ise_on_grid_with(est: &DensityEstimate, truth: &dyn TestDensity, m: usize) -> Result<f64> {
    let expected = unit_grid(m);
    if est.grid != expected {
        return Err(Error::InvalidInput(format!(
            "ISE needs the grid i/{} for i = 1..{m}, got {} points starting at {:?}",
            m + 1,
            est.grid.len(),
            est.grid.first()
        )));
    }
    let sum = est
        .grid
        .iter()
        .zip(&est.values)
        .map(|(&x, &v)| (v - truth.pdf(x)).powi(2))
        .fold(0.0, |a, b| a + b);
    Ok(sum / (m + 1) as f64)
}

fn default_grid_points() -> usize {
    ISE_GRID_POINTS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct BenchConfig {
    /// Catalog names such as `uniform`, `beta(4,4)`, `bimodal`, `gcc(0.5,0.3)`.
    pub densities: Vec<String>,
    pub estimators: Vec<EstimatorLabel>,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub convention: WeightConvention,
}

impl BenchConfig {
    pub fn validate(&self) -> Result<Vec<CatalogDensity>> {
        let bad = |m: &str| Err(Error::InvalidInput(m.into()));
        if self.replications == 0 {
            return bad("replications must be at least 1");
        }
        if self.densities.is_empty() || self.estimators.is_empty() || self.sample_sizes.is_empty() {
            return bad("densities, estimators and sampleSizes must be non-empty");
        }
        if self.sample_sizes.contains(&0) {
            return bad("sample sizes must be positive");
        }
        if self.grid_points != ISE_GRID_POINTS {
            return bad("gridPoints must be 999 so that ISE uses the i/1000 grid");
        }
        self.densities.iter().map(|s| s.parse()).collect()
    }
}

/// Outcome of one estimator on one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BenchCell {
    pub density: String,
    pub estimator: String,
    pub n: usize,
    pub replication: usize,
    pub ise: Option<f64>,
    pub selected_param: Option<f64>,
    /// `ok`, or the error message of a failed fit.
    pub status: String,
}

impl BenchCell {
    pub fn is_ok(&self) -> bool {
        self.ise.is_some()
    }
}

/// MISE of one estimator for one (density, n).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MiseEntry {
    pub density: String,
    pub n: usize,
    pub estimator: String,
    pub mise: Option<f64>,
    /// Sample standard deviation of the ISE over √R.
    pub standard_error: Option<f64>,
    pub successes: usize,
    pub failures: usize,
    /// Competition rank with the two-standard-error tie rule; `None` when
    /// the estimator failed on any replication.
    pub rank: Option<usize>,
}

/// Truth and estimates on the first replication of one (density, n).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Overlay {
    pub density: String,
    pub n: usize,
    pub grid: Vec<f64>,
    pub truth: Vec<f64>,
    pub curves: Vec<(String, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub config: BenchConfig,
    pub cells: Vec<BenchCell>,
    pub summary: Vec<MiseEntry>,
    pub overlays: Vec<Overlay>,
    pub warnings: Vec<String>,
}

impl BenchResult {
    pub fn entry(&self, density: &str, n: usize, estimator: &str) -> Option<&MiseEntry> {
        self.summary
            .iter()
            .find(|e| e.density == density && e.n == n && e.estimator == estimator)
    }

    /// Sum of ranks per (n, estimator) over the densities where it was ranked.
    pub fn rank_totals(&self) -> BTreeMap<(usize, String), usize> {
        let mut out = BTreeMap::new();
        for e in &self.summary {
            if let Some(r) = e.rank {
                *out.entry((e.n, e.estimator.clone())).or_insert(0) += r;
            }
        }
        out
    }

    pub fn failure_count(&self) -> usize {
        self.cells.iter().filter(|c| !c.is_ok()).count()
    }
}

struct Task<'a> {
    density: &'a CatalogDensity,
    truth: &'a [f64],
    n: usize,
    replication: usize,
}

fn run_task(task: &Task<'_>, cfg: &BenchConfig, grid: &[f64]) -> (Vec<BenchCell>, Option<Vec<Vec<f64>>>) {
    let name = task.density.name();
    let seed = SeedSpec::new(cfg.master_seed, task.replication as u64);
    let sample = sample_density(task.density, task.n, seed);
    let keep = task.replication == 0;
    let mut curves = Vec::new();
    let mut cells = Vec::with_capacity(cfg.estimators.len());
    for label in &cfg.estimators {
        let result = sample.as_ref().map_err(clone_error).and_then(|xs| {
            let out = run_estimator(label, xs, grid, BoundaryPolicy::Reject, cfg.convention)?;
            let ise = out
                .estimate
                .values
                .iter()
                .zip(task.truth)
                .map(|(v, t)| (v - t).powi(2))
                .fold(0.0, |a, b| a + b)
                / (ISE_GRID_POINTS + 1) as f64;
            Ok((ise, out.parameter, out.estimate.values))
        });
        let cell = |ise, param, status| BenchCell {
            density: name.clone(),
            estimator: label.to_string(),
            n: task.n,
            replication: task.replication,
            ise,
            selected_param: param,
            status,
        };
        match result {
            Ok((ise, param, values)) => {
                cells.push(cell(Some(ise), Some(param), "ok".into()));
                if keep {
                    curves.push(values);
                }
            }
            Err(e) => {
                cells.push(cell(None, None, format!("failed: {e}")));
                if keep {
                    curves.push(Vec::new());
                }
            }
        }
    }
    (cells, keep.then_some(curves))
}

fn clone_error(e: &Error) -> Error {
    Error::InvalidInput(e.to_string())
}

/// Runs every (density, n, replication) task in parallel; replication r of
/// every density and size draws from stream (master seed, r).
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchResult> {
    let densities = cfg.validate()?;
    let grid = unit_grid(cfg.grid_points);
    let truths: Vec<Vec<f64>> = densities
        .iter()
        .map(|d| grid.iter().map(|&x| d.pdf(x)).collect())
        .collect();
    let mut tasks = Vec::new();
    for (d, truth) in densities.iter().zip(&truths) {
        for &n in &cfg.sample_sizes {
            for replication in 0..cfg.replications {
                tasks.push(Task { density: d, truth, n, replication });
            }
        }
    }
    let outputs: Vec<_> = tasks.par_iter().map(|t| run_task(t, cfg, &grid)).collect();

    let mut cells = Vec::new();
    let mut overlays = Vec::new();
    for (task, (task_cells, curves)) in tasks.iter().zip(outputs) {
        cells.extend(task_cells);
        if let Some(curves) = curves {
            overlays.push(Overlay {
                density: task.density.name(),
                n: task.n,
                grid: grid.clone(),
                truth: task.truth.to_vec(),
                curves: cfg
                    .estimators
                    .iter()
                    .map(|l| l.to_string())
                    .zip(curves)
                    .filter(|(_, v)| !v.is_empty())
                    .collect(),
            });
        }
    }
    let (summary, warnings) = summarize(cfg, &densities, &cells);
    Ok(BenchResult {
        config: cfg.clone(),
        cells,
        summary,
        overlays,
        warnings,
    })
}

fn summarize(cfg: &BenchConfig, densities: &[CatalogDensity], cells: &[BenchCell]) -> (Vec<MiseEntry>, Vec<String>) {
    let mut summary = Vec::new();
    let mut warnings = Vec::new();
    for d in densities {
        let density = d.name();
        for &n in &cfg.sample_sizes {
            let mut group: Vec<MiseEntry> = cfg
                .estimators
                .iter()
                .map(|label| {
                    let estimator = label.to_string();
                    let ises: Vec<f64> = cells
                        .iter()
                        .filter(|c| c.density == density && c.n == n && c.estimator == estimator)
                        .filter_map(|c| c.ise)
                        .collect();
                    let failures = cfg.replications - ises.len();
                    let (mise, se) = mean_and_se(&ises);
                    MiseEntry {
                        density: density.clone(),
                        n,
                        estimator,
                        mise,
                        standard_error: se,
                        successes: ises.len(),
                        failures,
                        rank: None,
                    }
                })
                .collect();
            for e in group.iter().filter(|e| e.failures > 0) {
                warnings.push(format!(
                    "{} failed on {} of {} replications for {density}, n = {n}; excluded from ranking",
                    e.estimator, e.failures, cfg.replications
                ));
            }
            let ranked: Vec<(usize, f64, f64)> = group
                .iter()
                .enumerate()
                .filter(|(_, e)| e.failures == 0)
                .map(|(i, e)| (i, e.mise.expect("all replications succeeded"), e.standard_error.unwrap_or(0.0)))
                .collect();
            for (i, r) in two_se_ranks(&ranked) {
                group[i].rank = Some(r);
            }
            summary.extend(group);
        }
    }
    (summary, warnings)
}

fn mean_and_se(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let r = xs.len() as f64;
    let mean = xs.iter().fold(0.0, |a, b| a + b) / r;
    let se = if xs.len() > 1 {
        let var = xs.iter().map(|x| (x - mean).powi(2)).fold(0.0, |a, b| a + b) / (r - 1.0);
        (var / r).sqrt()
    } else {
        0.0
    };
    (Some(mean), Some(se))
}

/// Competition ranks of (index, MISE, SE) triples. Walking up from the
/// smallest MISE, an estimator shares the rank of the current leader while
/// its MISE is within two of the leader's standard errors.
pub fn two_se_ranks(entries: &[(usize, f64, f64)]) -> Vec<(usize, usize)> {
    let mut order: Vec<&(usize, f64, f64)> = entries.iter().collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let mut out = Vec::with_capacity(order.len());
    let mut leader: Option<(f64, f64, usize)> = None;
    for (pos, &&(i, mise, se)) in order.iter().enumerate() {
        let rank = match leader {
            Some((lm, ls, lr)) if mise - lm <= 2.0 * ls => lr,
            _ => {
                leader = Some((mise, se, pos + 1));
                pos + 1
            }
        };
        out.push((i, rank));
    }
    out.sort_unstable();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Svg,
}

/// JSON summary written next to the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BenchSummary {
    pub schema_version: u32,
    pub master_seed: u64,
    pub config: BenchConfig,
    pub mise: Vec<MiseEntry>,
    pub rank_totals: Vec<RankTotal>,
    pub failures: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RankTotal {
    pub n: usize,
    pub estimator: String,
    pub score: usize,
}

impl BenchSummary {
    pub fn from_result(res: &BenchResult) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            master_seed: res.config.master_seed,
            config: res.config.clone(),
            mise: res.summary.clone(),
            rank_totals: res
                .rank_totals()
                .into_iter()
                .map(|((n, estimator), score)| RankTotal { n, estimator, score })
                .collect(),
            failures: res.failure_count(),
            warnings: res.warnings.clone(),
        }
    }
}

/// The per-replication table as CSV text.
pub fn cells_csv(cells: &[BenchCell]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["density", "estimator", "n", "replication", "ise", "selected_param", "status"])
        .map_err(csv_error)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for c in cells {
        w.write_record([
            c.density.clone(),
            c.estimator.clone(),
            c.n.to_string(),
            c.replication.to_string(),
            opt(c.ise),
            opt(c.selected_param),
            c.status.clone(),
        ])
        .map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn file_stem(density: &str, n: usize) -> String {
    let clean: String = density
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' })
        .collect();
    format!("overlay_{}_n{n}", clean.trim_matches('_'))
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// An 800×500 SVG with the truth drawn in thick black and one polyline per
/// estimate. An empty `truth` is left out.
pub fn overlay_svg(o: &Overlay) -> String {
    let (w, h) = (800.0, 500.0);
    let (left, right, top, bottom) = (60.0, 180.0, 30.0, 50.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let truth_max = o.truth.iter().cloned().fold(0.0, f64::max);
    let est_max = o.curves.iter().flat_map(|(_, v)| v.iter().cloned()).fold(0.0, f64::max);
    let cap = if o.truth.is_empty() { f64::INFINITY } else { 3.0 * truth_max.max(1.0) };
    let ymax = est_max.max(truth_max).min(cap).max(1e-12) * 1.05;
    let px = |x: f64| left + x * pw;
    let py = |y: f64| top + ph - (y.min(ymax) / ymax) * ph;
    let path = |vals: &[f64]| {
        let mut s = String::new();
        for (x, y) in o.grid.iter().zip(vals) {
            let _ = write!(s, "{:.2},{:.2} ", px(*x), py(*y));
        }
        s.trim_end().to_string()
    };
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="800" height="500" viewBox="0 0 800 500">"#
    );
    let _ = writeln!(svg, r#"<rect width="800" height="500" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" font-size="14" font-family="sans-serif">{} (n = {})</text>"#,
        left,
        escape(&o.density),
        o.n
    );
    let _ = writeln!(
        svg,
        r#"<g stroke="black" stroke-width="1"><line x1="{left}" y1="{}" x2="{}" y2="{}"/><line x1="{left}" y1="{top}" x2="{left}" y2="{}"/></g>"#,
        top + ph,
        left + pw,
        top + ph,
        top + ph
    );
    for i in 0..=5 {
        let fx = i as f64 / 5.0;
        let fy = ymax * i as f64 / 5.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" font-family="sans-serif" text-anchor="middle">{fx:.1}</text>"#,
            px(fx),
            top + ph + 18.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" font-family="sans-serif" text-anchor="end">{fy:.2}</text>"#,
            left - 6.0,
            py(fy) + 4.0
        );
    }
    if !o.truth.is_empty() {
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="black" stroke-width="3" stroke-dasharray="8,4" points="{}"/>"#,
            path(&o.truth)
        );
    }
    for (i, (_, vals)) in o.curves.iter().enumerate() {
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            PALETTE[i % PALETTE.len()],
            path(vals)
        );
    }
    let lx = left + pw + 15.0;
    let truth = (!o.truth.is_empty()).then(|| ("truth".to_string(), "black"));
    let legend = truth.into_iter().chain(
        o.curves
            .iter()
            .enumerate()
            .map(|(i, (n, _))| (n.clone(), PALETTE[i % PALETTE.len()])),
    );
    for (i, (name, color)) in legend.enumerate() {
        let y = top + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}" font-size="11" font-family="sans-serif">{}</text>"#,
            lx + 20.0,
            lx + 25.0,
            y + 4.0,
            escape(&name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes `bench.csv`, `bench.json` and one SVG per (density, n) into `dir`.
pub fn emit_report(res: &BenchResult, formats: &[ReportFormat], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for f in formats {
        match f {
            ReportFormat::Csv => {
                let p = dir.join("bench.csv");
                fs::write(&p, cells_csv(&res.cells)?)?;
                written.push(p);
            }
            ReportFormat::Json => {
                let p = dir.join("bench.json");
                let mut text = serde_json::to_string_pretty(&BenchSummary::from_result(res))?;
                text.push('\n');
                fs::write(&p, text)?;
                written.push(p);
            }
            ReportFormat::Svg => {
                for o in &res.overlays {
                    let p = dir.join(format!("{}.svg", file_stem(&o.density, o.n)));
                    fs::write(&p, overlay_svg(o))?;
                    written.push(p);
                }
            }
        }
    }
    Ok(written)
}
