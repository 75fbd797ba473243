//! Zero-mean normal density and the standard normal tail.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

/// Density of N(0, sigma^2) at `x`.
pub fn gaussian_pdf(x: f64, sigma: f64) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Domain {
            what: "sigma",
            value: sigma,
            expected: "sigma > 0",
        });
    }
    Ok(pdf(x, sigma))
}

#[inline]
pub(crate) fn pdf(x: f64, sigma: f64) -> f64 {
    let z = x / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
}

/// Q(x) = P(Z > x) for a standard normal Z.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}
