//! Special functions, the Gaussian kernel, quadrature and seeded random streams.

pub mod kernel;
pub mod normal;
pub mod quadrature;
pub mod rng;

pub use kernel::GaussianKernel;
pub use normal::{std_normal_cdf, std_normal_pdf, std_normal_quantile, std_normal_sf};
pub use quadrature::{integrate, simpson_tabulated, QuadratureRule};
pub use rng::{SeedSpec, StreamRng};
