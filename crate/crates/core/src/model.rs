//! Trajectory components, the coexisting point/extended PHD mixture, and the
//! linear-Gaussian motion and measurement models.
//!
//! A trajectory component stores its state sequence as a stacked Gaussian over
//! the *active* window (the last `mean.len() / state_dim` steps) plus an
//! optional frozen prefix of point estimates left behind by the L-scan window.
//! All block indices below are step offsets inside the active window.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetClass {
    Point,
    Extended,
}

impl TargetClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            TargetClass::Point => "point",
            TargetClass::Extended => "extended",
        }
    }
}

/// Rows `rows` and columns `cols` (step offsets) of a stacked covariance.
pub fn block(m: &DMatrix<f64>, rows: Range<usize>, cols: Range<usize>, n_x: usize) -> DMatrix<f64> {
    m.view(
        (rows.start * n_x, cols.start * n_x),
        ((rows.end - rows.start) * n_x, (cols.end - cols.start) * n_x),
    )
    .into_owned()
}

/// Writes `b` into `m` starting at step offsets `(row, col)`.
pub fn embed_block(m: &mut DMatrix<f64>, row: usize, col: usize, n_x: usize, b: &DMatrix<f64>) {
    m.view_mut((row * n_x, col * n_x), (b.nrows(), b.ncols()))
        .copy_from(b);
}

/// Weighted Gaussian density over a trajectory `(t, x^{1:i})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryGaussian {
    pub weight: f64,
    pub birth_time: usize,
    /// Identity inherited from the birth component; shared by all descendants.
    pub label: u64,
    pub state_dim: usize,
    /// Frozen leading states, flattened, `len() = state_dim * frozen steps`.
    pub frozen: Vec<f64>,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl TrajectoryGaussian {
    /// A single-step trajectory born at `birth_time`.
    pub fn new(
        weight: f64,
        birth_time: usize,
        mean: DVector<f64>,
        cov: DMatrix<f64>,
    ) -> Result<Self> {
        let n = mean.len();
        if n == 0 || cov.nrows() != n || cov.ncols() != n {
            return Err(Error::Dimension(format!(
                "trajectory mean has {n} entries but covariance is {}x{}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if weight < 0.0 || !weight.is_finite() {
            return Err(Error::Domain(format!("component weight {weight}")));
        }
        if birth_time < 1 {
            return Err(Error::Domain("birth time must be >= 1".into()));
        }
        Ok(Self {
            weight,
            birth_time,
            label: 0,
            state_dim: n,
            frozen: Vec::new(),
            mean,
            cov,
        })
    }

    /// Number of time steps in the trajectory.
    pub fn len(&self) -> usize {
        (self.frozen.len() + self.mean.len()) / self.state_dim
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Steps held in the Gaussian window.
    pub fn active_len(&self) -> usize {
        self.mean.len() / self.state_dim
    }

    /// Last time step of the trajectory, `t + i - 1`.
    pub fn end_time(&self) -> usize {
        self.birth_time + self.len() - 1
    }

    pub fn current_mean(&self) -> DVector<f64> {
        let n = self.state_dim;
        self.mean.rows(self.mean.len() - n, n).into_owned()
    }

    pub fn current_cov(&self) -> DMatrix<f64> {
        let a = self.active_len();
        block(&self.cov, a - 1..a, a - 1..a, self.state_dim)
    }

    /// Mean and covariance of the state at the last time step.
    pub fn current_state_marginal(&self) -> (DVector<f64>, DMatrix<f64>) {
        (self.current_mean(), self.current_cov())
    }

    /// Whole mean sequence (frozen prefix followed by the active window).
    pub fn full_mean(&self) -> DVector<f64> {
        let mut v = Vec::with_capacity(self.frozen.len() + self.mean.len());
        v.extend_from_slice(&self.frozen);
        v.extend_from_slice(self.mean.as_slice());
        DVector::from_vec(v)
    }

    /// Mean state at each time step from `birth_time` to `end_time`.
    pub fn states(&self) -> Vec<DVector<f64>> {
        let full = self.full_mean();
        full.as_slice()
            .chunks(self.state_dim)
            .map(DVector::from_column_slice)
            .collect()
    }
}

impl AsRef<TrajectoryGaussian> for TrajectoryGaussian {
    fn as_ref(&self) -> &TrajectoryGaussian {
        self
    }
}

impl AsMut<TrajectoryGaussian> for TrajectoryGaussian {
    fn as_mut(&mut self) -> &mut TrajectoryGaussian {
        self
    }
}

/// Gamma (measurement rate) × trajectory Gaussian × Inverse-Wishart (extent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GgiwComponent {
    pub kin: TrajectoryGaussian,
    /// Gamma shape `a`.
    pub shape: f64,
    /// Gamma rate `b`.
    pub rate: f64,
    /// Inverse-Wishart degrees of freedom `v > 2d`.
    pub dof: f64,
    /// Inverse-Wishart scale `V` (d×d, m²).
    pub scale: DMatrix<f64>,
}

impl GgiwComponent {
    pub fn new(
        kin: TrajectoryGaussian,
        shape: f64,
        rate: f64,
        dof: f64,
        scale: DMatrix<f64>,
    ) -> Result<Self> {
        let d = scale.nrows();
        if !scale.is_square() || d == 0 {
            return Err(Error::Dimension("extent scale must be square".into()));
        }
        if !(shape > 0.0 && rate > 0.0) {
            return Err(Error::Domain(format!(
                "Gamma parameters a={shape}, b={rate}"
            )));
        }
        if dof <= 2.0 * d as f64 {
            return Err(Error::Domain(format!("Inverse-Wishart dof {dof} <= 2d")));
        }
        Ok(Self {
            kin,
            shape,
            rate,
            dof,
            scale,
        })
    }

    pub fn extent_dim(&self) -> usize {
        self.scale.nrows()
    }

    /// `E[X̃] = V / (v - 2d - 2)`.
    pub fn extent_mean(&self) -> Result<DMatrix<f64>> {
        let d = self.extent_dim() as f64;
        let denom = self.dof - 2.0 * d - 2.0;
        if denom <= 0.0 {
            return Err(Error::Domain(format!(
                "extent mean undefined for dof {} (needs > 2d + 2)",
                self.dof
            )));
        }
        Ok(&self.scale / denom)
    }

    /// `E[γ] = a / b`.
    pub fn rate_mean(&self) -> f64 {
        self.shape / self.rate
    }
}

impl AsRef<TrajectoryGaussian> for GgiwComponent {
    fn as_ref(&self) -> &TrajectoryGaussian {
        &self.kin
    }
}

impl AsMut<TrajectoryGaussian> for GgiwComponent {
    fn as_mut(&mut self) -> &mut TrajectoryGaussian {
        &mut self.kin
    }
}

/// PHD over alive trajectories in the coexisting point/extended space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhdMixture {
    pub time: usize,
    pub state_dim: usize,
    pub extent_dim: usize,
    pub point: Vec<TrajectoryGaussian>,
    pub extended: Vec<GgiwComponent>,
}

const SNAPSHOT_SCHEMA: &str = "gtphd.mixture";
const SNAPSHOT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Snapshot {
    schema: String,
    version: u32,
    mixture: PhdMixture,
}

impl PhdMixture {
    pub fn empty(time: usize, state_dim: usize, extent_dim: usize) -> Self {
        Self {
            time,
            state_dim,
            extent_dim,
            point: Vec::new(),
            extended: Vec::new(),
        }
    }

    /// Expected number of alive trajectories.
    pub fn total_mass(&self) -> f64 {
        self.point_mass() + self.extended_mass()
    }

    pub fn point_mass(&self) -> f64 {
        self.point.iter().map(|c| c.weight).sum()
    }

    pub fn extended_mass(&self) -> f64 {
        self.extended.iter().map(|c| c.kin.weight).sum()
    }

    pub fn len(&self) -> usize {
        self.point.len() + self.extended.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks weights and that every component ends at `time`.
    pub fn validate(&self) -> Result<()> {
        let kins = self
            .point
            .iter()
            .chain(self.extended.iter().map(|c| &c.kin));
        for c in kins {
            if !(c.weight >= 0.0) {
                return Err(Error::Domain(format!("negative weight {}", c.weight)));
            }
            if c.state_dim != self.state_dim {
                return Err(Error::Dimension("component state dimension".into()));
            }
            if c.end_time() != self.time {
                return Err(Error::Domain(format!(
                    "component born at {} with length {} is not alive at {}",
                    c.birth_time,
                    c.len(),
                    self.time
                )));
            }
        }
        if self
            .extended
            .iter()
            .any(|c| c.extent_dim() != self.extent_dim)
        {
            return Err(Error::Dimension("component extent dimension".into()));
        }
        Ok(())
    }

    /// Versioned JSON snapshot for debugging.
    pub fn to_snapshot(&self) -> String {
        serde_json::to_string(&Snapshot {
            schema: SNAPSHOT_SCHEMA.into(),
            version: SNAPSHOT_VERSION,
            mixture: self.clone(),
        })
        .expect("mixture serializes")
    }

    pub fn from_snapshot(s: &str) -> Result<Self> {
        let snap: Snapshot = serde_json::from_str(s).map_err(|e| Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        })?;
        if snap.schema != SNAPSHOT_SCHEMA || snap.version != SNAPSHOT_VERSION {
            return Err(Error::Parse {
                line: 1,
                msg: format!("unsupported snapshot {} v{}", snap.schema, snap.version),
            });
        }
        Ok(snap.mixture)
    }
}

/// Poisson clutter intensity `λ^C(z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ClutterIntensity {
    /// `rate` clutter points per scan spread uniformly over `area` m²; the
    /// density `rate / area` is used for every measurement, including
    /// target-originated ones that fall outside the surveillance region.
    Uniform { rate: f64, area: f64 },
}

impl ClutterIntensity {
    pub fn intensity(&self, _z: &DVector<f64>) -> f64 {
        match *self {
            ClutterIntensity::Uniform { rate, area } => rate / area,
        }
    }

    /// Expected number of clutter measurements `λ̄^C`.
    pub fn mean(&self) -> f64 {
        match *self {
            ClutterIntensity::Uniform { rate, .. } => rate,
        }
    }
}

/// `l(z|x) = N(z; Hx, R)` for point targets, `N(z; Hx, X̃)` for extended ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementModel {
    pub h: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub p_detection: f64,
    pub clutter: ClutterIntensity,
}

impl MeasurementModel {
    pub fn measurement_dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn validate(&self, state_dim: usize) -> Result<()> {
        if self.h.ncols() != state_dim {
            return Err(Error::Dimension(format!(
                "H has {} columns, state dimension is {state_dim}",
                self.h.ncols()
            )));
        }
        let nz = self.h.nrows();
        if self.r.nrows() != nz || self.r.ncols() != nz {
            return Err(Error::Dimension("R does not match H".into()));
        }
        if !(0.0..=1.0).contains(&self.p_detection) {
            return Err(Error::Domain(format!(
                "detection probability {}",
                self.p_detection
            )));
        }
        let ClutterIntensity::Uniform { rate, area } = self.clutter;
        if rate < 0.0 || area <= 0.0 {
            return Err(Error::Domain(format!(
                "clutter rate {rate} over area {area}"
            )));
        }
        Ok(())
    }
}

/// Linear-Gaussian kinematics plus Gamma/Inverse-Wishart forgetting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionModel {
    pub f: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub p_survival: f64,
    /// Divisor `μ` applied to both Gamma parameters.
    pub rate_forgetting: f64,
    /// Extent correlation time `τ` (s).
    pub extent_correlation: f64,
    /// Sampling period `δt` (s).
    pub dt: f64,
    /// Extent transformation `M` (d×d).
    pub extent_transform: DMatrix<f64>,
}

impl MotionModel {
    /// Nearly-constant-velocity model in `dims` spatial dimensions with
    /// state `[p, v]`.
    pub fn constant_velocity(dims: usize, dt: f64, sigma_v2: f64) -> Self {
        let n = 2 * dims;
        let mut f = DMatrix::identity(n, n);
        let mut q = DMatrix::zeros(n, n);
        for i in 0..dims {
            f[(i, dims + i)] = dt;
            q[(i, i)] = dt.powi(4) / 4.0 * sigma_v2;
            q[(i, dims + i)] = dt.powi(3) / 2.0 * sigma_v2;
            q[(dims + i, i)] = dt.powi(3) / 2.0 * sigma_v2;
            q[(dims + i, dims + i)] = dt.powi(2) * sigma_v2;
        }
        Self {
            f,
            q,
            p_survival: 0.99,
            rate_forgetting: 1.05,
            extent_correlation: 5.48,
            dt,
            extent_transform: DMatrix::identity(dims, dims),
        }
    }

    /// `e^{-δt/τ}`.
    pub fn extent_decay(&self) -> f64 {
        (-self.dt / self.extent_correlation).exp()
    }

    pub fn validate(&self, state_dim: usize, extent_dim: usize) -> Result<()> {
        if self.f.shape() != (state_dim, state_dim) || self.q.shape() != (state_dim, state_dim) {
            return Err(Error::Dimension(
                "F or Q does not match the state dimension".into(),
            ));
        }
        if self.extent_transform.shape() != (extent_dim, extent_dim) {
            return Err(Error::Dimension(
                "M does not match the extent dimension".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.p_survival) {
            return Err(Error::Domain(format!(
                "survival probability {}",
                self.p_survival
            )));
        }
        if !(self.rate_forgetting > 0.0 && self.extent_correlation > 0.0 && self.dt > 0.0) {
            return Err(Error::Domain("μ, τ and δt must be positive".into()));
        }
        Ok(())
    }
}
