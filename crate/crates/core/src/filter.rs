//! One predict / partition / update / reduce / extract cycle per scan.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{extract, ExtractionRule, TrajectoryEstimate};
use crate::model::{MeasurementModel, MotionModel, PhdMixture};
use crate::partitioner::{dbscan_sweep, Cell, DbscanSweep, PartitionProposal};
use crate::predict::{predict, BirthModel};
use crate::reduce::{lscan_apply, prune_absorb, ReductionParams};
use crate::update::{update, UpdateDiagnostics, UpdateOptions};

/// The general filter and its three comparison baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FilterVariant {
    /// Coexisting point and extended births, L-scan window from the config.
    #[serde(rename = "g-tphd")]
    GTphd,
    /// As `GTphd` with a one-step window: a PHD filter on current states.
    #[serde(rename = "g-phd")]
    GPhd,
    /// Point births only.
    #[serde(rename = "p-tphd")]
    PTphd,
    /// Extended births only.
    #[serde(rename = "e-tphd")]
    ETphd,
}

impl FilterVariant {
    pub const ALL: [FilterVariant; 4] = [
        FilterVariant::GTphd,
        FilterVariant::GPhd,
        FilterVariant::PTphd,
        FilterVariant::ETphd,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FilterVariant::GTphd => "g-tphd",
            FilterVariant::GPhd => "g-phd",
            FilterVariant::PTphd => "p-tphd",
            FilterVariant::ETphd => "e-tphd",
        }
    }

    /// Row label used in summary tables.
    pub fn label(&self) -> &'static str {
        match self {
            FilterVariant::GTphd => "G-TPHD",
            FilterVariant::GPhd => "G-PHD",
            FilterVariant::PTphd => "P-TPHD",
            FilterVariant::ETphd => "E-TPHD",
        }
    }
}

impl fmt::Display for FilterVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FilterVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown filter variant {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterParams {
    pub motion: MotionModel,
    pub measurement: MeasurementModel,
    pub birth: BirthModel,
    pub reduction: ReductionParams,
    /// L-scan window; `None` keeps whole trajectories Gaussian.
    pub lscan: Option<usize>,
    pub sweep: DbscanSweep,
    pub update: UpdateOptions,
    pub extraction: ExtractionRule,
    pub keep_diagnostics: bool,
}

impl FilterParams {
    pub fn for_variant(mut self, variant: FilterVariant) -> Self {
        match variant {
            FilterVariant::GTphd => {}
            FilterVariant::GPhd => self.lscan = Some(1),
            FilterVariant::PTphd => self.birth.extended.clear(),
            FilterVariant::ETphd => self.birth.point.clear(),
        }
        self
    }
}

/// What happened in one cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub time: usize,
    /// Mass of the posterior fed into the prediction.
    pub prior_mass: f64,
    pub birth_mass: f64,
    pub predicted_mass: f64,
    /// Mass right after the update, before reduction.
    pub updated_mass: f64,
    pub posterior_mass: f64,
    pub n_point: usize,
    pub n_extended: usize,
    pub n_proposals: usize,
    pub estimates: Vec<TrajectoryEstimate>,
    pub diagnostics: Option<UpdateDiagnostics>,
}

#[derive(Debug, Clone)]
pub struct TphdFilter {
    params: FilterParams,
    posterior: PhdMixture,
}

impl TphdFilter {
    pub fn new(params: FilterParams) -> Result<Self> {
        let n = params.motion.f.nrows();
        let d = params.motion.extent_transform.nrows();
        params.motion.validate(n, d)?;
        params.measurement.validate(n)?;
        params.birth.validate(n, d)?;
        params.reduction.validate()?;
        if params.lscan == Some(0) {
            return Err(Error::Config("L-scan window must be >= 1".into()));
        }
        Ok(Self {
            posterior: PhdMixture::empty(0, n, d),
            params,
        })
    }

    pub fn params(&self) -> &FilterParams {
        &self.params
    }

    pub fn posterior(&self) -> &PhdMixture {
        &self.posterior
    }

    pub fn time(&self) -> usize {
        self.posterior.time
    }

    /// Processes the scan of step `time() + 1`.
    pub fn step(&mut self, z: &[DVector<f64>]) -> Result<StepReport> {
        let p = &self.params;
        let k = self.posterior.time + 1;
        let prior_mass = self.posterior.total_mass();
        let mut predicted = predict(&self.posterior, &p.motion, &p.birth, k)?;
        // truncate before the update so that it reaches back at most L steps
        if let Some(l) = p.lscan {
            predicted = lscan_apply(predicted, l)?;
        }
        let mut proposals = dbscan_sweep(z, &p.sweep);
        // the ε → 0 end of the sweep; without it a point-only prior can find
        // no admissible partition when two returns nearly coincide
        let singletons = PartitionProposal::new((0..z.len()).map(Cell::singleton).collect());
        if !z.is_empty() && !proposals.contains(&singletons) {
            proposals.push(singletons);
        }
        let opts = UpdateOptions {
            min_weight: p.update.min_weight.max(p.reduction.prune),
            ..p.update
        };
        let (updated, diagnostics) = update(&predicted, z, &proposals, &p.measurement, &opts)?;
        let updated_mass = diagnostics.missed_point_mass
            + diagnostics.missed_extended_mass
            + diagnostics.detected_mass;
        let reduced = prune_absorb(&updated, &p.reduction)?;
        let estimates = extract(&reduced, p.extraction);
        let report = StepReport {
            time: k,
            prior_mass,
            birth_mass: p.birth.mass(),
            predicted_mass: predicted.total_mass(),
            updated_mass,
            posterior_mass: reduced.total_mass(),
            n_point: reduced.point.len(),
            n_extended: reduced.extended.len(),
            n_proposals: proposals.len(),
            estimates,
            diagnostics: p.keep_diagnostics.then_some(diagnostics),
        };
        self.posterior = reduced;
        Ok(report)
    }

    /// Runs every scan in order (element 0 is step 1).
    pub fn run(&mut self, scans: &[Vec<DVector<f64>>]) -> Result<Vec<StepReport>> {
        scans.iter().map(|z| self.step(z)).collect()
    }
}
