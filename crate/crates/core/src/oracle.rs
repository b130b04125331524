//! Exhaustive reference computations for small scans.
//!
//! These follow the Poisson-projection derivation directly: the measurement
//! set density is a sum over every partition of the scan, and the posterior
//! PHD mass is `τ_∅ + Σ_{w≠∅} τ_w l(z∖w) / l(z)`. They never touch the
//! partition-weight machinery of [`crate::update`], so agreement between the
//! two is a genuine check.

use nalgebra::DVector;

use crate::combinatorics::{full_mask, mask_elements, partitions_of_mask, subsets};
use crate::error::{Error, Result};
use crate::model::{MeasurementModel, PhdMixture};
use crate::partitioner::Cell;
use crate::update::{log_q_extended, log_q_point};

/// Largest scan the oracles accept.
pub const MAX_ORACLE_SCAN: usize = 6;

/// `τ_w` and `κ_w` for every subset of the scan, indexed by bit mask.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetTerms {
    pub m: usize,
    /// `tau[0]` is `τ_∅`, the expected number of targets producing no measurement.
    pub tau: Vec<f64>,
    pub kappa: Vec<f64>,
    pub clutter_mean: f64,
    pub target_mean: f64,
}

pub fn subset_terms(
    z: &[DVector<f64>],
    mix: &PhdMixture,
    model: &MeasurementModel,
) -> Result<SubsetTerms> {
    let m = z.len();
    if m > MAX_ORACLE_SCAN {
        return Err(Error::TooLarge {
            n: m,
            limit: MAX_ORACLE_SCAN,
        });
    }
    let pd = model.p_detection;
    let mut tau = vec![0.0; 1 << m];
    let mut kappa = vec![0.0; 1 << m];
    tau[0] = mix.point.iter().map(|c| c.weight * (1.0 - pd)).sum::<f64>()
        + mix
            .extended
            .iter()
            .map(|c| c.kin.weight * ((1.0 - pd) + pd * (c.rate / (c.rate + 1.0)).powf(c.shape)))
            .sum::<f64>();
    for mask in 1..(1u32 << m) {
        let elems = mask_elements(mask);
        let cell = Cell::new(elems.clone())?;
        let mut t = 0.0;
        for c in &mix.extended {
            t += c.kin.weight * pd * log_q_extended(z, &cell, c, model)?.exp();
        }
        if elems.len() == 1 {
            let zi = &z[elems[0]];
            for c in &mix.point {
                t += c.weight * pd * log_q_point(zi, c, model)?.exp();
            }
            kappa[mask as usize] = model.clutter.intensity(zi);
        }
        tau[mask as usize] = t;
    }
    Ok(SubsetTerms {
        m,
        tau,
        kappa,
        clutter_mean: model.clutter.mean(),
        target_mean: mix.total_mass(),
    })
}

impl SubsetTerms {
    /// `l(z_mask) = e^{-λ̄C} e^{-λ̄} e^{τ_∅} Σ_{Q∠z_mask} Π_{w∈Q} (κ_w + τ_w)`.
    pub fn density(&self, mask: u32) -> f64 {
        let sum: f64 = partitions_of_mask(mask)
            .iter()
            .map(|q| {
                q.iter()
                    .map(|&w| self.kappa[w as usize] + self.tau[w as usize])
                    .product::<f64>()
            })
            .sum();
        (-self.clutter_mean - self.target_mean + self.tau[0]).exp() * sum
    }

    /// Posterior PHD mass from the KLD-projection formula.
    pub fn posterior_mass(&self) -> f64 {
        let all = full_mask(self.m);
        let lz = self.density(all);
        let detected: f64 = subsets(all)
            .filter(|&w| w != 0)
            .map(|w| self.tau[w as usize] * self.density(all & !w) / lz)
            .sum();
        self.tau[0] + detected
    }
}

/// Density of the measurement set under the predicted Poisson trajectory
/// density plus Poisson clutter.
pub fn measurement_set_density_oracle(
    z: &[DVector<f64>],
    mix: &PhdMixture,
    model: &MeasurementModel,
) -> Result<f64> {
    let terms = subset_terms(z, mix, model)?;
    Ok(terms.density(full_mask(z.len())))
}

/// Expected number of trajectories after the update, computed exhaustively.
pub fn posterior_mass_oracle(
    z: &[DVector<f64>],
    mix: &PhdMixture,
    model: &MeasurementModel,
) -> Result<f64> {
    Ok(subset_terms(z, mix, model)?.posterior_mass())
}
