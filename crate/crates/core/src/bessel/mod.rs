//! Bessel kernels, FFT convolution, dual Bessel-potential norms of measures
//! and the Wolff functional.

mod conv;
mod dual;
mod fft;
mod kernel;
mod wolff;

pub use conv::{convolve_field, convolve_measure, full_convolution, splat_nearest};
pub use dual::{dual_norm, energy_dual_norm_p2, DualNormOperator, EnergyEvaluator};
pub use fft::fast_len;
pub use kernel::{
    bessel_kernel, kernel_half_nodes, sampled_peak_estimate, symbol, tail_bound, SampledKernel,
    TAIL_RELATIVE_LIMIT,
};
pub use wolff::{wolff_equivalence_report, wolff_functional, RadiusRule, WolffReport};

use crate::error::{Error, Result};

const REL_TOL: f64 = 1e-12;

/// Smoothness/integrability pair `(alpha, p)` in dimension `dim`, with the
/// conjugate exponent and the hypothesis flags used across the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselSpec {
    pub alpha: f64,
    pub p: f64,
    pub p_conj: f64,
    pub dim: usize,
    /// `p <= d / alpha`.
    pub wolff_valid: bool,
    /// `p >= 2d / (d - 1 + 2 alpha)`, `alpha > 1/p` and `p <= d / alpha`.
    pub growth_valid: bool,
    pub alpha_le_one: bool,
}

impl BesselSpec {
    pub fn new(alpha: f64, p: f64, dim: usize) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::BadAlpha(alpha));
        }
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::BadIntegrability(p));
        }
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let d = dim as f64;
        let p_conj = p / (p - 1.0);
        let le = |a: f64, b: f64| a <= b * (1.0 + REL_TOL);
        let wolff_valid = le(p, d / alpha);
        let growth_valid =
            wolff_valid && le(2.0 * d / (d - 1.0 + 2.0 * alpha), p) && alpha * p > 1.0 * (1.0 + REL_TOL);
        Ok(Self { alpha, p, p_conj, dim, wolff_valid, growth_valid, alpha_le_one: alpha <= 1.0 })
    }

    /// `alpha * p == d` up to rounding: the endpoint where point masses have
    /// a logarithmically divergent Wolff integral.
    pub fn is_critical(&self) -> bool {
        (self.alpha * self.p - self.dim as f64).abs() <= REL_TOL * self.dim as f64
    }

    pub fn require_wolff_valid(&self) -> Result<()> {
        if self.wolff_valid {
            Ok(())
        } else {
            Err(Error::SpecNotWolffValid { alpha: self.alpha, p: self.p, dim: self.dim })
        }
    }

    pub fn require_growth_valid(&self) -> Result<()> {
        if self.growth_valid {
            Ok(())
        } else {
            Err(Error::SpecNotGrowthValid { alpha: self.alpha, p: self.p, dim: self.dim })
        }
    }
}
