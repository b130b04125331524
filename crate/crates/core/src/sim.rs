//! Ground truth, target-generated measurements and clutter, plus a
//! line-oriented measurement record format.
//!
//! Record format: one line per scan, `step x1 y1 x2 y2 …`; blank lines and
//! anything after `#` are ignored; steps not listed are empty scans.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::cholesky;
use crate::metrics::Trajectory;
use crate::model::TargetClass;
use crate::scenario::{Region, ScenarioConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthTarget {
    pub class: TargetClass,
    pub birth: usize,
    pub death: usize,
    /// State at each step from `birth` to `death`.
    pub states: Vec<DVector<f64>>,
    pub extent: Option<DMatrix<f64>>,
    /// Poisson measurement rate (extended targets).
    pub rate: f64,
}

impl GroundTruthTarget {
    pub fn is_alive(&self, k: usize) -> bool {
        (self.birth..=self.death).contains(&k)
    }

    pub fn state_at(&self, k: usize) -> Option<&DVector<f64>> {
        if self.is_alive(k) {
            self.states.get(k - self.birth)
        } else {
            None
        }
    }

    /// The trajectory up to and including step `k`, if the target is born by then.
    pub fn trajectory_until(&self, k: usize) -> Option<Trajectory> {
        if k < self.birth {
            return None;
        }
        let end = k.min(self.death);
        Some(Trajectory {
            start: self.birth,
            states: self.states[..=end - self.birth].to_vec(),
        })
    }
}

/// Extent with standard deviations `sd = [along, across]` rotated to the heading.
pub fn heading_extent(velocity: &[f64], sd: [f64; 2]) -> DMatrix<f64> {
    let theta = velocity[1].atan2(velocity[0]);
    let (s, c) = theta.sin_cos();
    let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
    let diag = DMatrix::from_row_slice(2, 2, &[sd[0] * sd[0], 0.0, 0.0, sd[1] * sd[1]]);
    let mut x = &rot * diag * rot.transpose();
    crate::linalg::symmetrize(&mut x);
    x
}

fn standard_normal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// True trajectories. Without process noise `rng` is not consumed.
pub fn generate_truth<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<Vec<GroundTruthTarget>> {
    cfg.validate()?;
    let motion = cfg.motion_model()?;
    let noise = if cfg.truth.process_noise {
        Some(cholesky(&motion.q, "process noise")?)
    } else {
        None
    };
    let n = cfg.state_dim();
    cfg.targets
        .iter()
        .map(|t| {
            let mut states = Vec::with_capacity(t.death - t.birth + 1);
            let mut x = DVector::from_column_slice(&t.state);
            states.push(x.clone());
            for _ in t.birth..t.death {
                x = &motion.f * &x;
                if let Some(chol) = &noise {
                    x += chol.l() * standard_normal(rng, n);
                }
                states.push(x.clone());
            }
            let extent = match t.class {
                TargetClass::Point => None,
                TargetClass::Extended => Some(match &t.extent {
                    Some(rows) => DMatrix::from_fn(2, 2, |i, j| rows[i][j]),
                    None => heading_extent(&t.state[2..4], cfg.truth.extent_sd),
                }),
            };
            Ok(GroundTruthTarget {
                class: t.class,
                birth: t.birth,
                death: t.death,
                states,
                extent,
                rate: t.rate.unwrap_or(cfg.truth.extended_rate),
            })
        })
        .collect()
}

fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean)
        .expect("positive Poisson mean")
        .sample(rng) as usize
}

/// Uniform clutter over `region`; count ~ Poisson(`rate`).
pub fn clutter<R: Rng + ?Sized>(rng: &mut R, region: &Region, rate: f64) -> Vec<DVector<f64>> {
    (0..poisson(rng, rate))
        .map(|_| {
            DVector::from_vec(vec![
                rng.random_range(region.x[0]..region.x[1]),
                rng.random_range(region.y[0]..region.y[1]),
            ])
        })
        .collect()
}

/// One scan per step `1..=duration` (element 0 is step 1).
pub fn generate_measurements<R: Rng + ?Sized>(
    truth: &[GroundTruthTarget],
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<Vec<Vec<DVector<f64>>>> {
    let model = cfg.measurement_model();
    let pd = Bernoulli::new(model.p_detection)
        .map_err(|e| Error::Config(format!("measurement.p_detection: {e}")))?;
    let r_chol = cholesky(&model.r, "measurement noise")?;
    let extent_chols = truth
        .iter()
        .map(|t| {
            t.extent
                .as_ref()
                .map(|x| cholesky(x, "true extent"))
                .transpose()
        })
        .collect::<Result<Vec<_>>>()?;
    let nz = model.measurement_dim();
    let mut scans = Vec::with_capacity(cfg.duration);
    for k in 1..=cfg.duration {
        let mut z = Vec::new();
        for (t, ext) in truth.iter().zip(&extent_chols) {
            let Some(x) = t.state_at(k) else { continue };
            if !pd.sample(rng) {
                continue;
            }
            let centre = &model.h * x;
            match (t.class, ext) {
                (TargetClass::Point, _) => z.push(&centre + r_chol.l() * standard_normal(rng, nz)),
                (TargetClass::Extended, Some(chol)) => {
                    for _ in 0..poisson(rng, t.rate) {
                        z.push(&centre + chol.l() * standard_normal(rng, nz));
                    }
                }
                (TargetClass::Extended, None) => {
                    return Err(Error::Config("extended target without an extent".into()))
                }
            }
        }
        z.extend(clutter(rng, &cfg.region, cfg.measurement.clutter_rate));
        scans.push(z);
    }
    Ok(scans)
}

/// Writes scans (element 0 is step 1) with full round-trip precision.
pub fn write_records<W: Write>(scans: &[Vec<DVector<f64>>], mut out: W) -> std::io::Result<()> {
    writeln!(out, "# step x1 y1 x2 y2 ...")?;
    for (i, z) in scans.iter().enumerate() {
        write!(out, "{}", i + 1)?;
        for m in z {
            for v in m.iter() {
                write!(out, " {v:?}")?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads scans of `dim`-dimensional measurements; the result covers steps
/// `1..=max step seen`.
pub fn read_records<R: BufRead>(input: R, dim: usize) -> Result<Vec<Vec<DVector<f64>>>> {
    let mut scans: Vec<Option<Vec<DVector<f64>>>> = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut fields = body.split_whitespace();
        let step: usize = fields
            .next()
            .and_then(|s| s.parse().ok())
            .filter(|&s| s >= 1)
            .ok_or_else(|| Error::Parse {
                line: lineno,
                msg: "expected a step index >= 1".into(),
            })?;
        let values = fields
            .map(|f| {
                f.parse::<f64>().map_err(|e| Error::Parse {
                    line: lineno,
                    msg: format!("{f:?}: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() % dim != 0 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("{} coordinates do not form {dim}-vectors", values.len()),
            });
        }
        if scans.len() < step {
            scans.resize(step, None);
        }
        if scans[step - 1].is_some() {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("step {step} listed twice"),
            });
        }
        scans[step - 1] = Some(values.chunks(dim).map(DVector::from_column_slice).collect());
    }
    Ok(scans.into_iter().map(Option::unwrap_or_default).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn default_truth_matches_table() {
        let cfg = ScenarioConfig::default();
        let truth = generate_truth(&cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(truth.len(), 5);
        assert_eq!(truth[0].class, TargetClass::Extended);
        assert_eq!(truth[0].states[0].as_slice(), &[6.0, 50.0, 0.0, 2.0]);
        assert_eq!((truth[0].birth, truth[0].death), (1, 100));
        assert_eq!(truth[3].states[0].as_slice(), &[-7.0, 300.0, 0.0, -5.4]);
        assert_eq!((truth[3].birth, truth[3].death), (20, 70));
        assert_eq!(truth[3].states.len(), 51);
        // constant velocity, noise free
        assert!((truth[0].states[99][1] - (50.0 + 99.0 * 2.0)).abs() < 1e-9);
    }

    #[test]
    fn northbound_extent() {
        let x = heading_extent(&[0.0, 2.0], [2.0, 0.5]);
        assert!((x[(0, 0)] - 0.25).abs() < 1e-12);
        assert!((x[(1, 1)] - 4.0).abs() < 1e-12);
        assert!(x[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn silent_sensor() {
        let mut cfg = ScenarioConfig::default();
        cfg.measurement.p_detection = 0.0;
        cfg.measurement.clutter_rate = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let truth = generate_truth(&cfg, &mut rng).unwrap();
        let z = generate_measurements(&truth, &cfg, &mut rng).unwrap();
        assert_eq!(z.len(), 100);
        assert!(z.iter().all(Vec::is_empty));
    }

    #[test]
    fn point_targets_emit_at_most_one() {
        let mut cfg = ScenarioConfig::default();
        cfg.measurement.clutter_rate = 0.0;
        cfg.targets.retain(|t| t.class == TargetClass::Point);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let truth = generate_truth(&cfg, &mut rng).unwrap();
        let z = generate_measurements(&truth, &cfg, &mut rng).unwrap();
        for (k, scan) in z.iter().enumerate() {
            let alive = truth.iter().filter(|t| t.is_alive(k + 1)).count();
            assert!(scan.len() <= alive);
        }
    }

    #[test]
    fn records_round_trip() {
        let cfg = ScenarioConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let truth = generate_truth(&cfg, &mut rng).unwrap();
        let z = generate_measurements(&truth, &cfg, &mut rng).unwrap();
        let mut buf = Vec::new();
        write_records(&z, &mut buf).unwrap();
        let back = read_records(buf.as_slice(), 2).unwrap();
        assert_eq!(back, z);
    }

    #[test]
    fn record_parse_errors_carry_lines() {
        let text = "# header\n1 0.0 1.0\n\n2 0.5\n";
        match read_records(text.as_bytes(), 2) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        let gaps = read_records("3 1 2 # late\n".as_bytes(), 2).unwrap();
        assert_eq!(gaps.len(), 3);
        assert!(gaps[0].is_empty() && gaps[2].len() == 1);
        assert!(read_records("1 0 0\n1 1 1\n".as_bytes(), 2).is_err());
    }
}
