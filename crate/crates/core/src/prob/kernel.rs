use super::normal::{gaussian_roughness, std_normal_pdf};

/// The Gaussian kernel K = φ, the only kernel used by the estimators.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GaussianKernel;

impl GaussianKernel {
    /// ∫u²K(u)du
    pub const SECOND_MOMENT: f64 = 1.0;

    #[inline]
    pub fn eval(self, u: f64) -> f64 {
        std_normal_pdf(u)
    }

    /// ∫K²(u)du = 1/(2√π)
    pub fn roughness(self) -> f64 {
        gaussian_roughness()
    }

    /// Beyond this many bandwidths the kernel underflows to exactly 0.0,
    /// so sums restricted to the window are bit-identical to full sums.
    pub const ZERO_BEYOND: f64 = 40.0;
}
