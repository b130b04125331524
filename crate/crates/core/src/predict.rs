//! Prediction: survival, trajectory append, Gamma/Inverse-Wishart forgetting
//! and birth injection.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::symmetrize;
use crate::model::{embed_block, GgiwComponent, MotionModel, PhdMixture, TrajectoryGaussian};

/// Birth intensity templates. Each template is a single-step component; its
/// birth time is overwritten with the injection time.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BirthModel {
    pub point: Vec<TrajectoryGaussian>,
    pub extended: Vec<GgiwComponent>,
}

impl BirthModel {
    pub fn mass(&self) -> f64 {
        self.point.iter().map(|c| c.weight).sum::<f64>()
            + self.extended.iter().map(|c| c.kin.weight).sum::<f64>()
    }

    pub fn validate(&self, state_dim: usize, extent_dim: usize) -> Result<()> {
        let kins = self
            .point
            .iter()
            .chain(self.extended.iter().map(|c| &c.kin));
        for c in kins {
            if c.len() != 1 || c.state_dim != state_dim {
                return Err(Error::Dimension(
                    "birth templates must be single-step components of the state dimension".into(),
                ));
            }
        }
        if self.extended.iter().any(|c| c.extent_dim() != extent_dim) {
            return Err(Error::Dimension("birth extent dimension".into()));
        }
        Ok(())
    }

    fn inject(&self, k: usize, out: &mut PhdMixture) {
        let tag = |idx: usize| ((k as u64) << 24) | idx as u64;
        for (idx, c) in self.point.iter().enumerate() {
            let mut c = c.clone();
            c.birth_time = k;
            c.label = tag(idx);
            out.point.push(c);
        }
        let offset = self.point.len();
        for (idx, c) in self.extended.iter().enumerate() {
            let mut c = c.clone();
            c.kin.birth_time = k;
            c.kin.label = tag(offset + idx);
            out.extended.push(c);
        }
    }
}

/// Appends `F x_{k-1}` to the trajectory and extends the stacked covariance
/// with `P₁ = P[·, k-1] Fᵀ` and `P₂ = F P[k-1, k-1] Fᵀ + Q`.
pub fn predict_trajectory(c: &TrajectoryGaussian, motion: &MotionModel) -> TrajectoryGaussian {
    let n = c.state_dim;
    let a = c.active_len();
    let dim = a * n;

    let last = c.mean.rows(dim - n, n);
    let mut mean = DVector::zeros(dim + n);
    mean.rows_mut(0, dim).copy_from(&c.mean);
    mean.rows_mut(dim, n).copy_from(&(&motion.f * last));

    let p1 = c.cov.columns(dim - n, n) * motion.f.transpose();
    let p_last = c.cov.view((dim - n, dim - n), (n, n));
    let p2 = &motion.f * p_last * motion.f.transpose() + &motion.q;

    let mut cov = DMatrix::zeros(dim + n, dim + n);
    cov.view_mut((0, 0), (dim, dim)).copy_from(&c.cov);
    cov.view_mut((0, dim), (dim, n)).copy_from(&p1);
    cov.view_mut((dim, 0), (n, dim)).copy_from(&p1.transpose());
    embed_block(&mut cov, a, a, n, &p2);
    symmetrize(&mut cov);

    TrajectoryGaussian {
        weight: c.weight * motion.p_survival,
        birth_time: c.birth_time,
        label: c.label,
        state_dim: n,
        frozen: c.frozen.clone(),
        mean,
        cov,
    }
}

/// Gamma forgetting `a/μ, b/μ` and Inverse-Wishart forgetting
/// `v ← 2d+2 + e^{-δt/τ}(v-2d-2)`, `V ← e^{-δt/τ} M V Mᵀ`.
pub fn predict_ggiw(c: &GgiwComponent, motion: &MotionModel) -> GgiwComponent {
    let d = c.extent_dim() as f64;
    let decay = motion.extent_decay();
    let m = &motion.extent_transform;
    let mut scale = (m * &c.scale * m.transpose()) * decay;
    symmetrize(&mut scale);
    GgiwComponent {
        kin: predict_trajectory(&c.kin, motion),
        shape: c.shape / motion.rate_forgetting,
        rate: c.rate / motion.rate_forgetting,
        dof: 2.0 * d + 2.0 + decay * (c.dof - 2.0 * d - 2.0),
        scale,
    }
}

/// Prior PHD at time `k` from the posterior at `k - 1`: survivors first (in
/// posterior order), then birth components.
pub fn predict(
    post: &PhdMixture,
    motion: &MotionModel,
    birth: &BirthModel,
    k: usize,
) -> Result<PhdMixture> {
    if post.time + 1 != k {
        return Err(Error::Domain(format!(
            "posterior at time {} cannot be predicted to {k}",
            post.time
        )));
    }
    motion.validate(post.state_dim, post.extent_dim)?;
    birth.validate(post.state_dim, post.extent_dim)?;

    let mut out = PhdMixture::empty(k, post.state_dim, post.extent_dim);
    out.point = post
        .point
        .iter()
        .map(|c| predict_trajectory(c, motion))
        .collect();
    out.extended = post
        .extended
        .iter()
        .map(|c| predict_ggiw(c, motion))
        .collect();
    birth.inject(k, &mut out);
    Ok(out)
}
