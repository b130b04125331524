//! Declarative scenario: ground truth, sensor, filter and metric settings.
//!
//! The defaults reproduce the five-target traffic scene (two extended, three
//! point targets in a 50 m × 300 m region over 100 s). Birth intensity
//! parameters that the scene leaves open (means and covariances) are chosen
//! here to cover the whole region.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::ExtractionRule;
use crate::filter::{FilterParams, FilterVariant};
use crate::metrics::MetricConfig;
use crate::model::{
    ClutterIntensity, GgiwComponent, MeasurementModel, MotionModel, TargetClass, TrajectoryGaussian,
};
use crate::partitioner::DbscanSweep;
use crate::predict::BirthModel;
use crate::reduce::ReductionParams;
use crate::update::{MissedGamma, UpdateOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl Region {
    pub fn area(&self) -> f64 {
        (self.x[1] - self.x[0]) * (self.y[1] - self.y[0])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub class: TargetClass,
    /// `[p_x, p_y, v_x, v_y]` at the birth step.
    pub state: Vec<f64>,
    pub birth: usize,
    pub death: usize,
    /// Extent covariance; when absent, built from `truth.extent_sd` along the heading.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extent: Option<Vec<Vec<f64>>>,
    /// Poisson measurement rate; defaults to `truth.extended_rate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthSpec {
    /// Add process noise to the true kinematics.
    pub process_noise: bool,
    pub extended_rate: f64,
    /// Along-track and across-track standard deviations of the extent (m).
    /// The default stays small enough for the birth Inverse-Wishart prior
    /// (mean extent 0.027 m²) to explain a first detection as one object.
    pub extent_sd: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionSpec {
    pub dt: f64,
    pub sigma_v2: f64,
    pub p_survival: f64,
    pub rate_forgetting: f64,
    pub extent_correlation: f64,
    /// Rows of `M`; identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extent_transform: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSpec {
    pub sigma_r2: f64,
    pub p_detection: f64,
    /// Mean clutter count per scan.
    pub clutter_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointBirthSpec {
    pub weight: f64,
    pub mean: Vec<f64>,
    /// Per-entry standard deviations of a diagonal covariance.
    pub sd: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtendedBirthSpec {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub shape: f64,
    pub rate: f64,
    pub dof: f64,
    /// `V = scale · I_d`.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BirthSpec {
    #[serde(default)]
    pub point: Vec<PointBirthSpec>,
    #[serde(default)]
    pub extended: Vec<ExtendedBirthSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSpec {
    pub prune: f64,
    pub absorb: f64,
    pub max_components: usize,
    pub lscan: usize,
    pub extent_dim: usize,
    pub missed_gamma: MissedGamma,
    pub extraction: ExtractionRule,
    pub dbscan: DbscanSweep,
    pub birth: BirthSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub duration: usize,
    pub region: Region,
    pub truth: TruthSpec,
    pub targets: Vec<TargetSpec>,
    pub motion: MotionSpec,
    pub measurement: MeasurementSpec,
    pub filter: FilterSpec,
    pub metric: MetricConfig,
}

fn target(class: TargetClass, state: [f64; 4], birth: usize, death: usize) -> TargetSpec {
    TargetSpec {
        class,
        state: state.to_vec(),
        birth,
        death,
        extent: None,
        rate: None,
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        use TargetClass::{Extended, Point};
        let birth_mean = vec![0.0, 150.0, 0.0, 0.0];
        let birth_sd = vec![20.0, 120.0, 4.0, 4.0];
        Self {
            seed: 1,
            duration: 100,
            region: Region {
                x: [-25.0, 25.0],
                y: [0.0, 300.0],
            },
            truth: TruthSpec {
                process_noise: false,
                extended_rate: 10.0,
                extent_sd: [0.5, 0.25],
            },
            targets: vec![
                target(Extended, [6.0, 50.0, 0.0, 2.0], 1, 100),
                target(Point, [13.0, 48.0, 0.0, 2.2], 7, 100),
                target(Point, [9.5, 30.0, 0.0, 2.5], 10, 80),
                target(Extended, [-7.0, 300.0, 0.0, -5.4], 20, 70),
                target(Point, [-12.0, 220.0, 0.0, -1.0], 25, 100),
            ],
            motion: MotionSpec {
                dt: 1.0,
                sigma_v2: 0.1,
                p_survival: 0.99,
                rate_forgetting: 1.05,
                extent_correlation: 5.48,
                extent_transform: None,
            },
            measurement: MeasurementSpec {
                sigma_r2: 1.0,
                p_detection: 0.98,
                clutter_rate: 5.0,
            },
            filter: FilterSpec {
                prune: 1e-5,
                absorb: 4.0,
                max_components: 100,
                lscan: 5,
                extent_dim: 2,
                missed_gamma: MissedGamma::MomentMatch,
                extraction: ExtractionRule::RoundMass,
                dbscan: DbscanSweep::default(),
                birth: BirthSpec {
                    point: vec![PointBirthSpec {
                        weight: 0.05,
                        mean: birth_mean.clone(),
                        sd: birth_sd.clone(),
                    }],
                    extended: vec![ExtendedBirthSpec {
                        weight: 0.05,
                        mean: birth_mean,
                        sd: birth_sd,
                        shape: 8.0,
                        rate: 1.0,
                        dof: 100.0,
                        scale: 2.5,
                    }],
                },
            },
            metric: MetricConfig::default(),
        }
    }
}

fn bad(path: impl Into<String>, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{}: {msg}", path.into()))
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(path, format!("must be positive, got {v}")))
    }
}

fn probability(path: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(bad(path, format!("must lie in [0, 1], got {v}")))
    }
}

fn square(path: &str, rows: &[Vec<f64>], d: usize) -> Result<DMatrix<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(bad(path, format!("must be a {d}x{d} matrix")));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

fn diag_cov(sd: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_iterator(sd.len(), sd.iter().map(|s| s * s)))
}

impl ScenarioConfig {
    pub fn state_dim(&self) -> usize {
        2 * self.filter.extent_dim
    }

    pub fn measurement_dim(&self) -> usize {
        self.filter.extent_dim
    }

    /// Checks every field; errors name the offending field path.
    pub fn validate(&self) -> Result<()> {
        let d = self.filter.extent_dim;
        if d == 0 {
            return Err(bad("filter.extent_dim", "must be >= 1"));
        }
        if d != 2 {
            return Err(bad("filter.extent_dim", "the planar scenario needs 2"));
        }
        let n = self.state_dim();
        if self.duration == 0 {
            return Err(bad("duration", "must be >= 1"));
        }
        if !(self.region.x[1] > self.region.x[0]) {
            return Err(bad("region.x", "upper bound must exceed lower bound"));
        }
        if !(self.region.y[1] > self.region.y[0]) {
            return Err(bad("region.y", "upper bound must exceed lower bound"));
        }
        positive("truth.extended_rate", self.truth.extended_rate)?;
        for (i, s) in self.truth.extent_sd.iter().enumerate() {
            positive(&format!("truth.extent_sd[{i}]"), *s)?;
        }
        for (i, t) in self.targets.iter().enumerate() {
            let p = format!("targets[{i}]");
            if t.state.len() != n {
                return Err(bad(format!("{p}.state"), format!("needs {n} entries")));
            }
            if t.birth < 1 || t.birth > t.death {
                return Err(bad(format!("{p}.birth"), "needs 1 <= birth <= death"));
            }
            if let Some(r) = t.rate {
                if !(r >= 0.0) {
                    return Err(bad(format!("{p}.rate"), "must be >= 0"));
                }
            }
            if let Some(e) = &t.extent {
                let m = square(&format!("{p}.extent"), e, d)?;
                crate::linalg::SymPosDef::new(m).map_err(|e| bad(format!("{p}.extent"), e))?;
            }
        }
        positive("motion.dt", self.motion.dt)?;
        if !(self.motion.sigma_v2 >= 0.0) {
            return Err(bad("motion.sigma_v2", "must be >= 0"));
        }
        probability("motion.p_survival", self.motion.p_survival)?;
        positive("motion.rate_forgetting", self.motion.rate_forgetting)?;
        positive("motion.extent_correlation", self.motion.extent_correlation)?;
        if let Some(m) = &self.motion.extent_transform {
            square("motion.extent_transform", m, d)?;
        }
        positive("measurement.sigma_r2", self.measurement.sigma_r2)?;
        probability("measurement.p_detection", self.measurement.p_detection)?;
        if !(self.measurement.clutter_rate >= 0.0) {
            return Err(bad("measurement.clutter_rate", "must be >= 0"));
        }
        let f = &self.filter;
        if !(f.prune >= 0.0) {
            return Err(bad("filter.prune", "must be >= 0"));
        }
        positive("filter.absorb", f.absorb)?;
        if f.max_components == 0 {
            return Err(bad("filter.max_components", "must be >= 1"));
        }
        if f.lscan == 0 {
            return Err(bad("filter.lscan", "must be >= 1"));
        }
        positive("filter.dbscan.step", f.dbscan.step)?;
        positive("filter.dbscan.min", f.dbscan.min)?;
        if f.dbscan.max < f.dbscan.min {
            return Err(bad("filter.dbscan.max", "must be >= filter.dbscan.min"));
        }
        if let ExtractionRule::WeightThreshold(t) = f.extraction {
            if !(t >= 0.0) {
                return Err(bad("filter.extraction.threshold", "must be >= 0"));
            }
        }
        for (i, b) in f.birth.point.iter().enumerate() {
            let p = format!("filter.birth.point[{i}]");
            check_birth_kin(&p, b.weight, &b.mean, &b.sd, n)?;
        }
        for (i, b) in f.birth.extended.iter().enumerate() {
            let p = format!("filter.birth.extended[{i}]");
            check_birth_kin(&p, b.weight, &b.mean, &b.sd, n)?;
            positive(&format!("{p}.shape"), b.shape)?;
            positive(&format!("{p}.rate"), b.rate)?;
            positive(&format!("{p}.scale"), b.scale)?;
            if !(b.dof > 2.0 * d as f64 + 2.0) {
                return Err(bad(
                    format!("{p}.dof"),
                    format!("must exceed 2d + 2 = {}", 2 * d + 2),
                ));
            }
        }
        let m = &self.metric;
        if !(m.p >= 1.0) {
            return Err(bad("metric.p", "must be >= 1"));
        }
        positive("metric.cutoff", m.cutoff)?;
        if !(m.switch_penalty >= 0.0) {
            return Err(bad("metric.switch_penalty", "must be >= 0"));
        }
        if m.position_dims == 0 || m.position_dims > n {
            return Err(bad("metric.position_dims", format!("must lie in 1..={n}")));
        }
        Ok(())
    }

    pub fn motion_model(&self) -> Result<MotionModel> {
        let d = self.filter.extent_dim;
        let mut m = MotionModel::constant_velocity(d, self.motion.dt, self.motion.sigma_v2);
        m.p_survival = self.motion.p_survival;
        m.rate_forgetting = self.motion.rate_forgetting;
        m.extent_correlation = self.motion.extent_correlation;
        if let Some(rows) = &self.motion.extent_transform {
            m.extent_transform = square("motion.extent_transform", rows, d)?;
        }
        Ok(m)
    }

    pub fn clutter(&self) -> ClutterIntensity {
        ClutterIntensity::Uniform {
            rate: self.measurement.clutter_rate,
            area: self.region.area(),
        }
    }

    pub fn measurement_model(&self) -> MeasurementModel {
        let d = self.measurement_dim();
        let mut h = DMatrix::zeros(d, 2 * d);
        h.view_mut((0, 0), (d, d)).fill_with_identity();
        MeasurementModel {
            h,
            r: DMatrix::identity(d, d) * self.measurement.sigma_r2,
            p_detection: self.measurement.p_detection,
            clutter: self.clutter(),
        }
    }

    pub fn birth_model(&self) -> Result<BirthModel> {
        let d = self.filter.extent_dim;
        let kin = |w: f64, mean: &[f64], sd: &[f64]| {
            TrajectoryGaussian::new(w, 1, DVector::from_column_slice(mean), diag_cov(sd))
        };
        let point = self
            .filter
            .birth
            .point
            .iter()
            .map(|b| kin(b.weight, &b.mean, &b.sd))
            .collect::<Result<Vec<_>>>()?;
        let extended = self
            .filter
            .birth
            .extended
            .iter()
            .map(|b| {
                GgiwComponent::new(
                    kin(b.weight, &b.mean, &b.sd)?,
                    b.shape,
                    b.rate,
                    b.dof,
                    DMatrix::identity(d, d) * b.scale,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BirthModel { point, extended })
    }

    pub fn reduction(&self) -> ReductionParams {
        ReductionParams {
            prune: self.filter.prune,
            absorb: self.filter.absorb,
            max_components: self.filter.max_components,
        }
    }

    /// Filter parameters for `variant`; the L-scan window comes from the config
    /// unless the variant fixes it.
    pub fn filter_params(&self, variant: FilterVariant) -> Result<FilterParams> {
        self.validate()?;
        let params = FilterParams {
            motion: self.motion_model()?,
            measurement: self.measurement_model(),
            birth: self.birth_model()?,
            reduction: self.reduction(),
            lscan: Some(self.filter.lscan),
            sweep: self.filter.dbscan,
            update: UpdateOptions {
                missed_gamma: self.filter.missed_gamma,
                min_weight: 0.0,
            },
            extraction: self.filter.extraction,
            keep_diagnostics: false,
        };
        Ok(params.for_variant(variant))
    }
}

fn check_birth_kin(p: &str, w: f64, mean: &[f64], sd: &[f64], n: usize) -> Result<()> {
    if !(w >= 0.0) {
        return Err(bad(format!("{p}.weight"), "must be >= 0"));
    }
    if mean.len() != n {
        return Err(bad(format!("{p}.mean"), format!("needs {n} entries")));
    }
    if sd.len() != n {
        return Err(bad(format!("{p}.sd"), format!("needs {n} entries")));
    }
    for (i, s) in sd.iter().enumerate() {
        positive(&format!("{p}.sd[{i}]"), *s)?;
    }
    Ok(())
}
