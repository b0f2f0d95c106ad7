//! Univariate Gaussian density helpers.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{MotError, Result};

/// `0.5 * ln(2π)`
pub const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

pub(crate) fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(MotError::Domain(format!("sigma must be positive and finite, got {sigma}")))
    }
}

/// Log density of `N(mu, sigma²)` at `y`.
pub fn gaussian_logpdf(y: f64, mu: f64, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    if !(y.is_finite() && mu.is_finite()) {
        return Err(MotError::Domain(format!("non-finite argument y={y} mu={mu}")));
    }
    let z = (y - mu) / sigma;
    Ok(-sigma.ln() - HALF_LN_2PI - 0.5 * z * z)
}

/// Standard normal density.
pub fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}
