//! Trajectory error with localization / missed / false / switch decomposition.
//!
//! At every step of the window the alive true and estimated positions are
//! matched by an optimal assignment with pair cost `min(d, c)^p`; anything
//! left over, or matched at distance `>= c`, costs `c^p / 2` as a miss or a
//! false estimate. Between consecutive steps each truth/estimate pair that
//! appears in or disappears from the matching adds `γ^p / 2`, unless neither
//! trajectory of the pair exists at both steps (births and deaths are not
//! switches). The total is the
//! `p`-th root of the summed costs, and each component is the `p`-th root of
//! its own bucket, so `total^p` is the sum of the component powers.

use std::collections::HashSet;
use std::ops::RangeInclusive;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::assignment::solve;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub p: f64,
    /// Cutoff `c` (m).
    pub cutoff: f64,
    /// Switch penalty `γ`.
    pub switch_penalty: f64,
    /// Leading state entries compared (the position).
    pub position_dims: usize,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            p: 2.0,
            cutoff: 100.0,
            switch_penalty: 1.0,
            position_dims: 2,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0) {
            return Err(Error::Config(format!("metric order p = {} < 1", self.p)));
        }
        if !(self.cutoff > 0.0) {
            return Err(Error::Config(format!(
                "metric cutoff c = {} <= 0",
                self.cutoff
            )));
        }
        if !(self.switch_penalty >= 0.0) {
            return Err(Error::Config("switch penalty must be >= 0".into()));
        }
        if self.position_dims == 0 {
            return Err(Error::Config("position_dims must be >= 1".into()));
        }
        Ok(())
    }
}

/// A time-stamped state sequence starting at `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub start: usize,
    pub states: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn end(&self) -> usize {
        self.start + self.states.len() - 1
    }

    fn at(&self, k: usize) -> Option<&DVector<f64>> {
        k.checked_sub(self.start).and_then(|i| self.states.get(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricResult {
    pub total: f64,
    pub localization: f64,
    pub miss: f64,
    #[serde(rename = "false")]
    pub false_: f64,
    pub switch: f64,
}

impl MetricResult {
    fn from_sums(sums: [f64; 4], p: f64) -> Self {
        let root = |x: f64| x.powf(1.0 / p);
        Self {
            total: root(sums.iter().sum()),
            localization: root(sums[0]),
            miss: root(sums[1]),
            false_: root(sums[2]),
            switch: root(sums[3]),
        }
    }

    fn components(&self) -> [f64; 5] {
        [
            self.total,
            self.localization,
            self.miss,
            self.false_,
            self.switch,
        ]
    }

    fn from_components(c: [f64; 5]) -> Self {
        Self {
            total: c[0],
            localization: c[1],
            miss: c[2],
            false_: c[3],
            switch: c[4],
        }
    }

    /// Divides the summed cost by the window length: each component is scaled
    /// by `len^{-1/p}`.
    pub fn normalize(&self, len: usize, p: f64) -> Self {
        let s = (len as f64).powf(-1.0 / p);
        Self::from_components(self.components().map(|x| x * s))
    }
}

pub fn trajectory_metric(
    truth: &[Trajectory],
    estimates: &[Trajectory],
    window: RangeInclusive<usize>,
    cfg: &MetricConfig,
) -> Result<MetricResult> {
    cfg.validate()?;
    for t in truth.iter().chain(estimates) {
        if t.states.is_empty() {
            return Err(Error::Dimension("empty trajectory".into()));
        }
        if t.start < *window.start() || t.end() > *window.end() {
            return Err(Error::Dimension(format!(
                "trajectory on [{}, {}] outside the window [{}, {}]",
                t.start,
                t.end(),
                window.start(),
                window.end()
            )));
        }
        if t.states.iter().any(|s| s.len() < cfg.position_dims) {
            return Err(Error::Dimension("state shorter than position_dims".into()));
        }
    }
    let (p, c) = (cfg.p, cfg.cutoff);
    let cp = c.powf(p);
    let half_switch = 0.5 * cfg.switch_penalty.powf(p);
    let mut sums = [0.0; 4];
    let mut prev: HashSet<(usize, usize)> = HashSet::new();
    let pos = |s: &DVector<f64>| s.rows(0, cfg.position_dims).into_owned();
    for k in window {
        let xs: Vec<(usize, DVector<f64>)> = truth
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.at(k).map(|s| (i, pos(s))))
            .collect();
        let ys: Vec<(usize, DVector<f64>)> = estimates
            .iter()
            .enumerate()
            .filter_map(|(j, t)| t.at(k).map(|s| (j, pos(s))))
            .collect();
        let dist = DMatrix::from_fn(xs.len(), ys.len(), |a, b| (&xs[a].1 - &ys[b].1).norm());
        let assignment = solve(&dist.map(|d| d.min(c).powf(p)))?;
        let mut pairs = HashSet::new();
        let mut matched_y = vec![false; ys.len()];
        for (a, b) in assignment.row_to_col.iter().enumerate() {
            match b {
                Some(b) if dist[(a, *b)] < c => {
                    sums[0] += dist[(a, *b)].powf(p);
                    matched_y[*b] = true;
                    pairs.insert((xs[a].0, ys[*b].0));
                }
                _ => sums[1] += 0.5 * cp,
            }
        }
        sums[2] += 0.5 * cp * matched_y.iter().filter(|m| !**m).count() as f64;
        let persists = |&&(i, j): &&(usize, usize)| {
            let both = |t: &Trajectory| k > t.start && t.at(k).is_some();
            both(&truth[i]) || both(&estimates[j])
        };
        sums[3] += half_switch * prev.symmetric_difference(&pairs).filter(persists).count() as f64;
        prev = pairs;
    }
    Ok(MetricResult::from_sums(sums, p))
}

/// Component-wise root mean square over runs.
pub fn rms_over_runs(results: &[MetricResult]) -> Result<MetricResult> {
    if results.is_empty() {
        return Err(Error::Domain("no runs to aggregate".into()));
    }
    let n = results.len() as f64;
    let mut acc = [0.0; 5];
    for r in results {
        for (a, x) in acc.iter_mut().zip(r.components()) {
            *a += x * x;
        }
    }
    Ok(MetricResult::from_components(acc.map(|a| (a / n).sqrt())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(start: usize, len: usize, dx: f64) -> Trajectory {
        Trajectory {
            start,
            states: (0..len)
                .map(|i| DVector::from_vec(vec![dx, i as f64, 0.0, 1.0]))
                .collect(),
        }
    }

    #[test]
    fn identical_sets_cost_nothing() {
        let t = vec![line(1, 10, 0.0), line(3, 5, 20.0)];
        let r = trajectory_metric(&t, &t, 1..=10, &MetricConfig::default()).unwrap();
        assert_eq!(r, MetricResult::default());
    }

    #[test]
    fn all_missed() {
        let r =
            trajectory_metric(&[line(1, 10, 0.0)], &[], 1..=10, &MetricConfig::default()).unwrap();
        assert!((r.miss - (10.0 * 1e4 / 2.0f64).sqrt()).abs() < 1e-9);
        assert!((r.total - r.miss).abs() < 1e-12);
        assert_eq!(r.false_ + r.localization + r.switch, 0.0);
    }

    #[test]
    fn displaced_estimate() {
        let r = trajectory_metric(
            &[line(1, 10, 0.0)],
            &[line(1, 10, 1.0)],
            1..=10,
            &MetricConfig::default(),
        )
        .unwrap();
        assert!((r.localization - 10f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.miss + r.false_ + r.switch, 0.0);
    }

    #[test]
    fn beyond_cutoff_counts_as_miss_and_false() {
        let r = trajectory_metric(
            &[line(1, 1, 0.0)],
            &[line(1, 1, 150.0)],
            1..=1,
            &MetricConfig::default(),
        )
        .unwrap();
        assert!((r.miss * r.miss - 5000.0).abs() < 1e-6);
        assert!((r.false_ * r.false_ - 5000.0).abs() < 1e-6);
        assert_eq!(r.localization, 0.0);
    }

    #[test]
    fn swap_costs_switch() {
        let a = line(1, 2, 0.0);
        let b = line(1, 2, 10.0);
        let mut e1 = a.clone();
        e1.states[1] = b.states[1].clone();
        let mut e2 = b.clone();
        e2.states[1] = a.states[1].clone();
        let r = trajectory_metric(&[a, b], &[e1, e2], 1..=2, &MetricConfig::default()).unwrap();
        // two pairs leave and two enter
        assert!((r.switch * r.switch - 2.0).abs() < 1e-12);
        assert_eq!(r.localization, 0.0);
    }

    #[test]
    fn window_violation() {
        assert!(
            trajectory_metric(&[line(1, 10, 0.0)], &[], 1..=5, &MetricConfig::default()).is_err()
        );
    }

    #[test]
    fn rms() {
        let a = MetricResult {
            total: 3.0,
            ..Default::default()
        };
        let b = MetricResult {
            total: 4.0,
            ..Default::default()
        };
        assert!((rms_over_runs(&[a, b]).unwrap().total - 12.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(rms_over_runs(&[a]).unwrap(), a);
        assert!(rms_over_runs(&[]).is_err());
    }
}
