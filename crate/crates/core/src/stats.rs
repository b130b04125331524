//! Log-density kernels.
//!
//! Conventions: the Gamma law is shape-rate, `G(γ; a, b) ∝ γ^(a-1) e^(-bγ)`.
//! The Inverse-Wishart law uses the extended-target tracking parameterization
//! in which `v > 2d`, `E[X] = V / (v - 2d - 2)` and the normalizer carries
//! `|V|^((v-d-1)/2)`; it equals the textbook `IW(ν = v-d-1, Ψ = V)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::ln_gamma as statrs_ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, log_det};

pub fn ln_gamma(x: f64) -> f64 {
    statrs_ln_gamma(x)
}

/// `ln Σ exp(v)`, tolerant of `-∞` entries. Empty input gives `-∞`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `ln(e^a + e^b)`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln N(x; mean, cov)`.
pub fn log_gaussian(x: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<f64> {
    let n = x.len();
    if mean.len() != n || cov.nrows() != n || cov.ncols() != n {
        return Err(Error::Dimension(format!(
            "log_gaussian: x has {n} entries, mean {}, cov {}x{}",
            mean.len(),
            cov.nrows(),
            cov.ncols()
        )));
    }
    let chol = cov
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("Gaussian covariance".into()))?;
    let diff = x - mean;
    let maha = diff.dot(&chol.solve(&diff));
    Ok(-0.5 * (n as f64 * (2.0 * PI).ln() + log_det(&chol) + maha))
}

/// `ln G(γ; a, b)` (shape-rate).
pub fn log_gamma_pdf(gamma: f64, shape: f64, rate: f64) -> Result<f64> {
    if !(gamma > 0.0 && shape > 0.0 && rate > 0.0) {
        return Err(Error::Domain(format!(
            "Gamma density needs γ, a, b > 0 (got {gamma}, {shape}, {rate})"
        )));
    }
    Ok(shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * gamma.ln() - rate * gamma)
}

/// `ln Γ_d(x)`, defined for `x > (d-1)/2`.
pub fn log_multivariate_gamma(d: usize, x: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::Domain("multivariate Gamma needs d >= 1".into()));
    }
    if x <= (d as f64 - 1.0) / 2.0 {
        return Err(Error::Domain(format!(
            "multivariate Gamma Γ_{d}({x}) needs x > {}",
            (d as f64 - 1.0) / 2.0
        )));
    }
    let df = d as f64;
    Ok(df * (df - 1.0) / 4.0 * PI.ln()
        + (1..=d)
            .map(|j| ln_gamma(x + (1.0 - j as f64) / 2.0))
            .sum::<f64>())
}

/// `ln IW(X; v, V)` with `E[X] = V / (v - 2d - 2)`.
pub fn log_inverse_wishart_pdf(x: &DMatrix<f64>, dof: f64, scale: &DMatrix<f64>) -> Result<f64> {
    let d = x.nrows();
    if !x.is_square() || scale.nrows() != d || scale.ncols() != d {
        return Err(Error::Dimension(
            "Inverse-Wishart argument and scale differ".into(),
        ));
    }
    let df = d as f64;
    if dof <= 2.0 * df {
        return Err(Error::Domain(format!(
            "Inverse-Wishart degrees of freedom {dof} must exceed 2d = {}",
            2 * d
        )));
    }
    let x_chol = cholesky(x, "Inverse-Wishart argument")?;
    let v_chol = cholesky(scale, "Inverse-Wishart scale")?;
    let nu = dof - df - 1.0;
    let trace = (x_chol.inverse() * scale).trace();
    Ok(0.5 * nu * log_det(&v_chol)
        - 0.5 * nu * df * 2f64.ln()
        - log_multivariate_gamma(d, 0.5 * nu)?
        - 0.5 * dof * log_det(&x_chol)
        - 0.5 * trace)
}
