//! Pruning, absorption and the L-scan window.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::cholesky;
use crate::model::{block, PhdMixture, TrajectoryGaussian};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionParams {
    /// `Γ_p`: components with weight `<= prune` are dropped.
    pub prune: f64,
    /// `Γ_a`: squared Mahalanobis radius for absorption.
    pub absorb: f64,
    /// `J_max` per class.
    pub max_components: usize,
}

impl Default for ReductionParams {
    fn default() -> Self {
        Self {
            prune: 1e-5,
            absorb: 4.0,
            max_components: 100,
        }
    }
}

impl ReductionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.prune >= 0.0) {
            return Err(Error::Config(format!(
                "pruning threshold {} < 0",
                self.prune
            )));
        }
        if !(self.absorb > 0.0) {
            return Err(Error::Config(format!(
                "absorption threshold {} <= 0",
                self.absorb
            )));
        }
        if self.max_components == 0 {
            return Err(Error::Config("maximum component count must be >= 1".into()));
        }
        Ok(())
    }
}

fn reduce_class<C>(comps: &[C], params: &ReductionParams) -> Result<Vec<C>>
where
    C: Clone + AsRef<TrajectoryGaussian> + AsMut<TrajectoryGaussian>,
{
    let mut theta: Vec<usize> = (0..comps.len())
        .filter(|&i| comps[i].as_ref().weight > params.prune)
        .collect();
    // stable: equal weights keep index order, so the argmax tie-break is the lowest index
    theta.sort_by(|&a, &b| {
        comps[b]
            .as_ref()
            .weight
            .total_cmp(&comps[a].as_ref().weight)
    });
    let currents: Vec<_> = comps.iter().map(|c| c.as_ref().current_mean()).collect();

    let mut out: Vec<C> = Vec::new();
    while let Some(&j) = theta.first() {
        let leader = comps[j].as_ref();
        let chol = cholesky(&leader.current_cov(), "absorption covariance")?;
        let mut total = 0.0;
        theta.retain(|&i| {
            let other = comps[i].as_ref();
            let absorbed = i == j
                || (other.birth_time == leader.birth_time && {
                    let d = &currents[i] - &currents[j];
                    d.dot(&chol.solve(&d)) <= params.absorb
                });
            if absorbed {
                total += other.weight;
            }
            !absorbed
        });
        let mut c = comps[j].clone();
        c.as_mut().weight = total;
        out.push(c);
    }
    if out.len() > params.max_components {
        out.sort_by(|a, b| b.as_ref().weight.total_cmp(&a.as_ref().weight));
        out.truncate(params.max_components);
    }
    Ok(out)
}

/// Table-style pruning and absorption, applied to each class separately.
/// Absorption only merges components sharing a birth time; the survivor keeps
/// its own parameters and takes the summed weight.
pub fn prune_absorb(mix: &PhdMixture, params: &ReductionParams) -> Result<PhdMixture> {
    params.validate()?;
    let mut out = PhdMixture::empty(mix.time, mix.state_dim, mix.extent_dim);
    out.point = reduce_class(&mix.point, params)?;
    out.extended = reduce_class(&mix.extended, params)?;
    Ok(out)
}

/// Keeps only the last `l` steps of each trajectory Gaussian; earlier means are
/// frozen as point estimates and their covariances dropped.
pub fn lscan_trajectory(c: &mut TrajectoryGaussian, l: usize) {
    let a = c.active_len();
    if a <= l {
        return;
    }
    let n = c.state_dim;
    let cut = (a - l) * n;
    c.frozen.extend_from_slice(&c.mean.as_slice()[..cut]);
    c.mean = c.mean.rows(cut, l * n).into_owned();
    c.cov = block(&c.cov, a - l..a, a - l..a, n);
}

pub fn lscan_apply(mut mix: PhdMixture, l: usize) -> Result<PhdMixture> {
    if l == 0 {
        return Err(Error::Config("L-scan window must be >= 1".into()));
    }
    for c in &mut mix.point {
        lscan_trajectory(c, l);
    }
    for c in &mut mix.extended {
        lscan_trajectory(&mut c.kin, l);
    }
    Ok(mix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GgiwComponent;
    use nalgebra::{DMatrix, DVector};

    fn comp(w: f64, x: f64) -> TrajectoryGaussian {
        TrajectoryGaussian::new(
            w,
            1,
            DVector::from_vec(vec![x, 0.0]),
            DMatrix::identity(2, 2),
        )
        .unwrap()
    }

    fn mix(point: Vec<TrajectoryGaussian>) -> PhdMixture {
        let mut m = PhdMixture::empty(1, 2, 1);
        m.point = point;
        m
    }

    #[test]
    fn prunes_below_threshold() {
        let out = prune_absorb(
            &mix(vec![comp(1e-6, 0.0), comp(0.5, 50.0)]),
            &ReductionParams::default(),
        )
        .unwrap();
        assert_eq!(out.point.len(), 1);
        assert_eq!(out.point[0].weight, 0.5);
    }

    #[test]
    fn identical_components_merge_into_heavier() {
        let mut a = comp(0.3, 1.0);
        a.label = 1;
        let mut b = comp(0.4, 1.0);
        b.label = 2;
        let out = prune_absorb(&mix(vec![a, b]), &ReductionParams::default()).unwrap();
        assert_eq!(out.point.len(), 1);
        assert!((out.point[0].weight - 0.7).abs() < 1e-15);
        assert_eq!(out.point[0].label, 2);
    }

    #[test]
    fn different_birth_times_never_merge() {
        let a = comp(0.3, 1.0);
        let mut b = comp(0.4, 1.0);
        b.birth_time = 2;
        let out = prune_absorb(&mix(vec![a, b]), &ReductionParams::default()).unwrap();
        assert_eq!(out.point.len(), 2);
    }

    #[test]
    fn cap_keeps_largest() {
        let comps: Vec<_> = (0..150)
            .map(|i| comp(0.001 * (i + 1) as f64, 10.0 * i as f64))
            .collect();
        let out = prune_absorb(&mix(comps), &ReductionParams::default()).unwrap();
        assert_eq!(out.point.len(), 100);
        let min = out
            .point
            .iter()
            .map(|c| c.weight)
            .fold(f64::INFINITY, f64::min);
        assert!((min - 0.051).abs() < 1e-12);
    }

    #[test]
    fn extended_survivor_keeps_its_parameters() {
        let mut m = PhdMixture::empty(1, 2, 1);
        let a = GgiwComponent::new(comp(0.2, 0.0), 3.0, 1.0, 8.0, DMatrix::identity(1, 1)).unwrap();
        let b = GgiwComponent::new(
            comp(0.6, 0.5),
            9.0,
            2.0,
            20.0,
            DMatrix::identity(1, 1) * 3.0,
        )
        .unwrap();
        m.extended = vec![a, b.clone()];
        let out = prune_absorb(&m, &ReductionParams::default()).unwrap();
        assert_eq!(out.extended.len(), 1);
        assert_eq!(out.extended[0].shape, 9.0);
        assert_eq!(out.extended[0].scale, b.scale);
        assert!((out.extended[0].kin.weight - 0.8).abs() < 1e-15);
    }

    #[test]
    fn lscan_freezes_prefix() {
        let mut c = comp(1.0, 0.0);
        c.mean = DVector::from_vec((0..6).map(f64::from).collect());
        c.cov = DMatrix::from_fn(6, 6, |i, j| if i == j { 2.0 } else { 0.1 });
        let full = c.full_mean();
        let out = lscan_apply(mix(vec![c.clone()]), 1).unwrap();
        let t = &out.point[0];
        assert_eq!(t.active_len(), 1);
        assert_eq!(t.len(), 3);
        assert_eq!(t.full_mean(), full);
        assert_eq!(t.cov, c.current_cov());
        let same = lscan_apply(mix(vec![c.clone()]), 3).unwrap();
        assert_eq!(same.point[0], c);
        assert!(lscan_apply(mix(vec![]), 0).is_err());
    }
}
