//! Criterion benchmarks for the probit-kde estimators; see `benches/`.

use probit_kde::harness::sample_density;
use probit_kde::{CatalogDensity, SeedSpec, UnitSample};

/// A reproducible Beta(2,5) sample of size `n`.
pub fn fixture(n: usize) -> UnitSample {
    let d = CatalogDensity::beta(2.0, 5.0).expect("valid parameters");
    sample_density(&d, n, SeedSpec::new(20, n as u64)).expect("n is positive")
}
