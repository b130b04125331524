//! Trajectory estimates read off the posterior mixture.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PhdMixture, TargetClass, TrajectoryGaussian};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule", content = "threshold")]
pub enum ExtractionRule {
    /// The `round(Σω)` heaviest components.
    #[default]
    RoundMass,
    /// Every component with weight above the threshold.
    WeightThreshold(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEstimate {
    pub label: u64,
    pub class: TargetClass,
    pub weight: f64,
    pub birth_time: usize,
    /// Mean state from `birth_time` to the current step.
    pub states: Vec<DVector<f64>>,
    pub extent: Option<DMatrix<f64>>,
    pub rate: Option<f64>,
}

impl TrajectoryEstimate {
    pub fn end_time(&self) -> usize {
        self.birth_time + self.states.len() - 1
    }

    pub fn current_state(&self) -> &DVector<f64> {
        self.states.last().expect("estimates are non-empty")
    }

    fn from_kin(c: &TrajectoryGaussian, class: TargetClass) -> Self {
        Self {
            label: c.label,
            class,
            weight: c.weight,
            birth_time: c.birth_time,
            states: c.states(),
            extent: None,
            rate: None,
        }
    }
}

pub fn extract(mix: &PhdMixture, rule: ExtractionRule) -> Vec<TrajectoryEstimate> {
    let mut ranked: Vec<(f64, TargetClass, usize)> = mix
        .point
        .iter()
        .enumerate()
        .map(|(i, c)| (c.weight, TargetClass::Point, i))
        .chain(
            mix.extended
                .iter()
                .enumerate()
                .map(|(i, c)| (c.kin.weight, TargetClass::Extended, i)),
        )
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    let n = match rule {
        ExtractionRule::RoundMass => (mix.total_mass().round() as usize).min(ranked.len()),
        ExtractionRule::WeightThreshold(t) => ranked.iter().filter(|r| r.0 > t).count(),
    };
    ranked[..n]
        .iter()
        .map(|&(_, class, i)| match class {
            TargetClass::Point => TrajectoryEstimate::from_kin(&mix.point[i], class),
            TargetClass::Extended => {
                let c = &mix.extended[i];
                TrajectoryEstimate {
                    extent: c.extent_mean().ok(),
                    rate: Some(c.rate_mean()),
                    ..TrajectoryEstimate::from_kin(&c.kin, class)
                }
            }
        })
        .collect()
}

/// Full axis widths `2√λ_i` of an extent matrix, largest first.
pub fn extent_width(x: &DMatrix<f64>) -> Result<Vec<f64>> {
    if !x.is_square() || x.nrows() == 0 {
        return Err(Error::Dimension(
            "extent must be a non-empty square matrix".into(),
        ));
    }
    let eig = SymmetricEigen::new(x.clone()).eigenvalues;
    if eig.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::Singular("extent is not positive definite".into()));
    }
    let mut w: Vec<f64> = eig.iter().map(|l| 2.0 * l.sqrt()).collect();
    w.sort_by(|a, b| b.total_cmp(a));
    Ok(w)
}
