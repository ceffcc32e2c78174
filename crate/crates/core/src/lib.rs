//! Probit-transformation kernel density estimation for data on the unit interval.
//!
//! Observations in (0,1) are mapped to the real line with the standard normal
//! quantile function, a density is estimated there (by a kernel estimator or
//! by local log-polynomial likelihood) and carried back.
//!
//! ```
//! use probit_kde::{run_estimator, unit_grid, BoundaryPolicy, EstimatorLabel, UnitSample, WeightConvention};
//!
//! let xs = UnitSample::new((1..=200).map(|i| (i as f64 / 201.0).powi(2)).collect()).unwrap();
//! let label: EstimatorLabel = "t2:knn:alpha=0.3".parse().unwrap();
//! let out = run_estimator(&label, &xs, &unit_grid(99), BoundaryPolicy::Reject, WeightConvention::Sec4).unwrap();
//! assert_eq!(out.estimate.values.len(), 99);
//! ```

pub mod classic;
pub mod density;
pub mod error;
pub mod harness;
pub mod loclik;
pub mod pipeline;
pub mod prob;
pub mod select;
pub mod theory;
pub mod transform;

pub use classic::{unit_grid, BandwidthRecord, DensityEstimate, DomainTag, EstimateMetadata, FixedBandwidth};
pub use density::{Beta, BoundaryFlags, CatalogDensity, GaussianCopulaConditional, TestDensity};
pub use error::{Error, Result};
pub use harness::{BenchConfig, BenchResult, ReportFormat};
pub use loclik::{BandwidthSpec, EstimatorSpec, Family, KnnBandwidth, LocalFit};
pub use pipeline::{run_estimator, BandwidthKind, EstimatorLabel, Method, PipelineOutput, Selector};
pub use prob::{GaussianKernel, QuadratureRule, SeedSpec};
pub use select::{SelectionResult, WeightConvention, WeightScheme};
pub use theory::{AsymptoticProfile, BoundarySequenceSpec, TheoryTag};
pub use transform::{BoundaryPolicy, PseudoSample, UnitSample};
