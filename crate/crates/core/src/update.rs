//! Measurement update with the general pseudolikelihood over partitions of the
//! scan, in its Gaussian (point) / GGIW (extended) mixture form.
//!
//! For every cell `w` of every proposed partition the cell evidence is
//! `κ_w + τ_w` with `κ_w = δ₁[|w|] λ^C(z)` and
//! `τ_w = Σ_e ω_e p_D q_e(w) + δ₁[|w|] Σ_p ω_p p_D q_p(w)`. Partition weights
//! are normalized products of cell evidences; a detected component for cell
//! `w` receives `(Σ_{P∋w} ω_P) ω_j p_D q_j(w) / (κ_w + τ_w)`. Dividing both
//! numerator and evidence by `[λ^C]^w` gives the familiar `d_w` form, which is
//! what the diagnostics report. Everything is accumulated in log space.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, log_det, symmetrize};
use crate::model::{GgiwComponent, MeasurementModel, PhdMixture, TrajectoryGaussian};
use crate::partitioner::{unique_cells, Cell, PartitionProposal};
use crate::stats::{ln_gamma, log_add_exp, log_multivariate_gamma, log_sum_exp};

/// How the two-branch Gamma mixture of a missed extended component is kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissedGamma {
    /// One Gamma matching the mixture's mean and variance.
    #[default]
    MomentMatch,
    /// Two components, `(1-p_D) G(a, b)` and `p_D (b/(b+1))^a G(a, b+1)`.
    Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateOptions {
    pub missed_gamma: MissedGamma,
    /// Posterior components with weight `<= min_weight` are not built.
    pub min_weight: f64,
}

impl Default for UpdateOptions {
    fn default() -> Self {
        Self {
            missed_gamma: MissedGamma::MomentMatch,
            min_weight: 0.0,
        }
    }
}

/// Mean and scatter of the measurements in a cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMoments {
    pub size: usize,
    pub mean: DVector<f64>,
    pub scatter: DMatrix<f64>,
}

impl CellMoments {
    pub fn new(z: &[DVector<f64>], cell: &Cell) -> Self {
        let nz = z[cell.indices()[0]].len();
        let size = cell.len();
        let mut mean = DVector::zeros(nz);
        for &i in cell.indices() {
            mean += &z[i];
        }
        mean /= size as f64;
        let mut scatter = DMatrix::zeros(nz, nz);
        for &i in cell.indices() {
            let d = &z[i] - &mean;
            scatter += &d * d.transpose();
        }
        Self {
            size,
            mean,
            scatter,
        }
    }
}

/// Per-component quantities of an extended component that do not depend on the cell.
struct ExtendedPrior {
    hm: DVector<f64>,
    hph: DMatrix<f64>,
    extent: DMatrix<f64>,
    extent_chol: Cholesky<f64, Dyn>,
    log_det_extent: f64,
    log_det_scale: f64,
    log_mgamma: f64,
    ln_gamma_shape: f64,
}

impl ExtendedPrior {
    fn new(c: &GgiwComponent, h: &DMatrix<f64>) -> Result<Self> {
        let (m, p) = c.kin.current_state_marginal();
        let d = c.extent_dim();
        let extent = c.extent_mean()?;
        let extent_chol = cholesky(&extent, "extent mean")?;
        let log_det_extent = log_det(&extent_chol);
        let log_det_scale = log_det(&cholesky(&c.scale, "Inverse-Wishart scale")?);
        Ok(Self {
            hm: h * m,
            hph: h * p * h.transpose(),
            extent,
            extent_chol,
            log_det_extent,
            log_det_scale,
            log_mgamma: log_multivariate_gamma(d, 0.5 * (c.dof - d as f64 - 1.0))?,
            ln_gamma_shape: ln_gamma(c.shape),
        })
    }
}

/// Per-(cell, component) innovation quantities for an extended component.
#[derive(Debug, Clone)]
pub struct ExtendedInnovation {
    /// `X̃ = V / (v - 2d - 2)`.
    pub extent: DMatrix<f64>,
    /// `ε = z̄ - H m̂_[k]`.
    pub innovation: DVector<f64>,
    /// `S = H P̂_[k,k] Hᵀ + X̃ / |w|`.
    pub innovation_cov: DMatrix<f64>,
    /// `N = X̃^{1/2} S^{-1/2} ε εᵀ S^{-ᵀ/2} X̃^{ᵀ/2}`.
    pub whitened: DMatrix<f64>,
    pub shape: f64,
    pub rate: f64,
    pub dof: f64,
    pub scale: DMatrix<f64>,
    /// `ln q_e(w)`.
    pub log_likelihood: f64,
    s_chol: Cholesky<f64, Dyn>,
}

fn extended_innovation(
    moments: &CellMoments,
    c: &GgiwComponent,
    prior: &ExtendedPrior,
) -> Result<ExtendedInnovation> {
    let n = moments.size as f64;
    let d = c.extent_dim() as f64;
    let innovation = &moments.mean - &prior.hm;
    let mut s = &prior.hph + &prior.extent / n;
    symmetrize(&mut s);
    let s_chol = cholesky(&s, "extended innovation covariance")?;
    let white = s_chol
        .l_dirty()
        .solve_lower_triangular(&innovation)
        .ok_or_else(|| Error::Singular("innovation whitening".into()))?;
    let root = prior.extent_chol.l() * white;
    let whitened = &root * root.transpose();

    let shape = c.shape + n;
    let rate = c.rate + 1.0;
    let dof = c.dof + n;
    let mut scale = &c.scale + &whitened + &moments.scatter;
    symmetrize(&mut scale);
    let log_det_post = log_det(&cholesky(&scale, "posterior Inverse-Wishart scale")?);

    let log_likelihood = -0.5 * d * (n * PI.ln() + n.ln())
        + 0.5 * (c.dof - d - 1.0) * prior.log_det_scale
        - 0.5 * (dof - d - 1.0) * log_det_post
        + log_multivariate_gamma(c.extent_dim(), 0.5 * (dof - d - 1.0))?
        - prior.log_mgamma
        + 0.5 * prior.log_det_extent
        - 0.5 * log_det(&s_chol)
        + ln_gamma(shape)
        - prior.ln_gamma_shape
        + c.shape * c.rate.ln()
        - shape * rate.ln();

    Ok(ExtendedInnovation {
        extent: prior.extent.clone(),
        innovation,
        innovation_cov: s,
        whitened,
        shape,
        rate,
        dof,
        scale,
        log_likelihood,
        s_chol,
    })
}

/// Per-component quantities of a point component.
struct PointPrior {
    hm: DVector<f64>,
    s: DMatrix<f64>,
    s_chol: Cholesky<f64, Dyn>,
    log_norm: f64,
}

impl PointPrior {
    fn new(c: &TrajectoryGaussian, model: &MeasurementModel) -> Result<Self> {
        let (m, p) = c.current_state_marginal();
        let mut s = &model.h * p * model.h.transpose() + &model.r;
        symmetrize(&mut s);
        let s_chol = cholesky(&s, "point innovation covariance")?;
        let log_norm = -0.5 * (s.nrows() as f64 * (2.0 * PI).ln() + log_det(&s_chol));
        Ok(Self {
            hm: &model.h * m,
            s,
            s_chol,
            log_norm,
        })
    }

    fn log_q(&self, z: &DVector<f64>) -> f64 {
        let e = z - &self.hm;
        self.log_norm - 0.5 * e.dot(&self.s_chol.solve(&e))
    }
}

/// Kalman update of the whole active window with `K = P̂_[·,k] Hᵀ S⁻¹`.
fn kalman_trajectory_update(
    kin: &TrajectoryGaussian,
    h: &DMatrix<f64>,
    innovation: &DVector<f64>,
    s_chol: &Cholesky<f64, Dyn>,
) -> (DVector<f64>, DMatrix<f64>) {
    let n = kin.state_dim;
    let dim = kin.mean.len();
    let pht = kin.cov.columns(dim - n, n) * h.transpose();
    let gain = s_chol.solve(&pht.transpose()).transpose();
    let mean = &kin.mean + &gain * innovation;
    let mut cov = &kin.cov - &gain * pht.transpose();
    symmetrize(&mut cov);
    (mean, cov)
}

/// `ln q_p(z) = ln N(z; H m̂_[k], H P̂_[k,k] Hᵀ + R)`.
pub fn log_q_point(
    z: &DVector<f64>,
    c: &TrajectoryGaussian,
    model: &MeasurementModel,
) -> Result<f64> {
    Ok(PointPrior::new(c, model)?.log_q(z))
}

/// `ln q_e(w)` for the cell `w` of the scan `z`.
pub fn log_q_extended(
    z: &[DVector<f64>],
    cell: &Cell,
    c: &GgiwComponent,
    model: &MeasurementModel,
) -> Result<f64> {
    let prior = ExtendedPrior::new(c, &model.h)?;
    Ok(extended_innovation(&CellMoments::new(z, cell), c, &prior)?.log_likelihood)
}

/// All cell statistics of an extended component, including the trajectory gain.
#[derive(Debug, Clone)]
pub struct CellStatistics {
    pub moments: CellMoments,
    pub innovation: ExtendedInnovation,
    /// `K = P̂_[t:k,k] Hᵀ S⁻¹` over the active window.
    pub gain: DMatrix<f64>,
}

pub fn cell_statistics(
    z: &[DVector<f64>],
    cell: &Cell,
    c: &GgiwComponent,
    model: &MeasurementModel,
) -> Result<CellStatistics> {
    let moments = CellMoments::new(z, cell);
    let prior = ExtendedPrior::new(c, &model.h)?;
    let innovation = extended_innovation(&moments, c, &prior)?;
    let n = c.kin.state_dim;
    let dim = c.kin.mean.len();
    let pht = c.kin.cov.columns(dim - n, n) * model.h.transpose();
    let gain = innovation.s_chol.solve(&pht.transpose()).transpose();
    Ok(CellStatistics {
        moments,
        innovation,
        gain,
    })
}

/// Per-step record of the partition and cell weights.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct UpdateDiagnostics {
    pub time: usize,
    /// `ω_P` per proposal, in proposal order.
    pub partition_weights: Vec<f64>,
    pub cells: Vec<Vec<usize>>,
    /// `ln d_w` per cell.
    pub cell_log_evidence: Vec<f64>,
    /// `Σ_{P∋w} ω_P` per cell.
    pub cell_weights: Vec<f64>,
    pub missed_point_mass: f64,
    pub missed_extended_mass: f64,
    pub detected_mass: f64,
}

impl UpdateDiagnostics {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("diagnostics serialize")
    }
}

/// Two-branch Gamma of a missed extended component: total factor
/// `(1-p_D) + p_D (b/(b+1))^a` and the branch weights.
fn missed_gamma_branches(c: &GgiwComponent, pd: f64) -> (f64, f64) {
    let stay = 1.0 - pd;
    let zero_count = pd * (c.rate / (c.rate + 1.0)).powf(c.shape);
    (stay, zero_count)
}

/// Moment-matched `(a, b)` of `w1 G(a,b) + w2 G(a,b+1)` (weights normalized).
pub fn moment_match_gamma(shape: f64, rate: f64, w1: f64, w2: f64) -> (f64, f64) {
    let tot = w1 + w2;
    let (w1, w2) = (w1 / tot, w2 / tot);
    let (m1, m2) = (shape / rate, shape / (rate + 1.0));
    let mean = w1 * m1 + w2 * m2;
    let var = w1 * shape / (rate * rate)
        + w2 * shape / ((rate + 1.0) * (rate + 1.0))
        + w1 * w2 * (m1 - m2) * (m1 - m2);
    (mean * mean / var, mean / var)
}

struct PointTerm {
    comp: usize,
    log_term: f64,
}

struct ExtendedTerm {
    comp: usize,
    log_term: f64,
    innovation: ExtendedInnovation,
}

/// Posterior PHD at `pred.time` given the scan `z` and candidate partitions.
pub fn update(
    pred: &PhdMixture,
    z: &[DVector<f64>],
    proposals: &[PartitionProposal],
    model: &MeasurementModel,
    opts: &UpdateOptions,
) -> Result<(PhdMixture, UpdateDiagnostics)> {
    model.validate(pred.state_dim)?;
    let nz = model.measurement_dim();
    if let Some(bad) = z.iter().find(|m| m.len() != nz) {
        return Err(Error::Dimension(format!(
            "measurement of dimension {} with a {nz}-dimensional model",
            bad.len()
        )));
    }
    if !pred.extended.is_empty() && pred.extent_dim != nz {
        return Err(Error::Dimension(format!(
            "extent dimension {} differs from measurement dimension {nz}",
            pred.extent_dim
        )));
    }
    if !z.is_empty() && proposals.is_empty() {
        return Err(Error::Config(
            "no partition proposals for a non-empty scan".into(),
        ));
    }
    if let Some(p) = proposals.iter().find(|p| !p.is_partition_of(z.len())) {
        return Err(Error::Config(format!(
            "proposal {p:?} is not a partition of the scan"
        )));
    }

    let pd = model.p_detection;
    let ln_pd = pd.ln();
    let point_priors = pred
        .point
        .iter()
        .map(|c| PointPrior::new(c, model))
        .collect::<Result<Vec<_>>>()?;
    let ext_priors = pred
        .extended
        .iter()
        .map(|c| ExtendedPrior::new(c, &model.h))
        .collect::<Result<Vec<_>>>()?;
    let ln_clutter: Vec<f64> = z.iter().map(|m| model.clutter.intensity(m).ln()).collect();

    let proposals: Vec<&PartitionProposal> = if z.is_empty() {
        Vec::new()
    } else {
        proposals.iter().collect()
    };
    let cells = if z.is_empty() {
        Vec::new()
    } else {
        unique_cells(&proposals.iter().map(|p| (*p).clone()).collect::<Vec<_>>())
    };
    let cell_index: HashMap<&Cell, usize> = cells.iter().enumerate().map(|(i, c)| (c, i)).collect();

    // cell evidences ln(κ_w + τ_w)
    let mut point_terms: Vec<Vec<PointTerm>> = Vec::with_capacity(cells.len());
    let mut ext_terms: Vec<Vec<ExtendedTerm>> = Vec::with_capacity(cells.len());
    let mut log_evidence = Vec::with_capacity(cells.len());
    let mut log_clutter_of_cell = Vec::with_capacity(cells.len());
    for cell in &cells {
        let moments = CellMoments::new(z, cell);
        let mut logs = Vec::new();
        let mut ext = Vec::with_capacity(pred.extended.len());
        for (j, (c, prior)) in pred.extended.iter().zip(&ext_priors).enumerate() {
            let innovation = extended_innovation(&moments, c, prior)?;
            let log_term = c.kin.weight.ln() + ln_pd + innovation.log_likelihood;
            logs.push(log_term);
            ext.push(ExtendedTerm {
                comp: j,
                log_term,
                innovation,
            });
        }
        let mut pts = Vec::new();
        let log_kappa = if cell.len() == 1 {
            let i = cell.indices()[0];
            for (j, (c, prior)) in pred.point.iter().zip(&point_priors).enumerate() {
                let log_term = c.weight.ln() + ln_pd + prior.log_q(&z[i]);
                logs.push(log_term);
                pts.push(PointTerm { comp: j, log_term });
            }
            ln_clutter[i]
        } else {
            f64::NEG_INFINITY
        };
        log_evidence.push(log_add_exp(log_kappa, log_sum_exp(&logs)));
        log_clutter_of_cell.push(cell.indices().iter().map(|&i| ln_clutter[i]).sum::<f64>());
        point_terms.push(pts);
        ext_terms.push(ext);
    }

    // partition weights
    let partition_cells: Vec<Vec<usize>> = proposals
        .iter()
        .map(|p| p.cells().iter().map(|c| cell_index[c]).collect())
        .collect();
    let log_scores: Vec<f64> = partition_cells
        .iter()
        .map(|ids| ids.iter().map(|&i| log_evidence[i]).sum())
        .collect();
    let norm = log_sum_exp(&log_scores);
    if !z.is_empty() && !norm.is_finite() {
        return Err(Error::Degenerate(
            "every proposed partition has zero likelihood".into(),
        ));
    }
    let partition_weights: Vec<f64> = log_scores.iter().map(|s| (s - norm).exp()).collect();
    let mut cell_weights = vec![0.0; cells.len()];
    for (ids, w) in partition_cells.iter().zip(&partition_weights) {
        for &i in ids {
            cell_weights[i] += w;
        }
    }

    let mut post = PhdMixture::empty(pred.time, pred.state_dim, pred.extent_dim);
    let keep = |w: f64| w > opts.min_weight;

    // missed detections
    let mut missed_point_mass = 0.0;
    for c in &pred.point {
        let w = c.weight * (1.0 - pd);
        missed_point_mass += w;
        if keep(w) {
            post.point.push(TrajectoryGaussian {
                weight: w,
                ..c.clone()
            });
        }
    }
    let mut missed_extended_mass = 0.0;
    for c in &pred.extended {
        let (stay, zero_count) = missed_gamma_branches(c, pd);
        let w = c.kin.weight * (stay + zero_count);
        missed_extended_mass += w;
        match opts.missed_gamma {
            MissedGamma::MomentMatch => {
                if keep(w) {
                    let (shape, rate) = moment_match_gamma(c.shape, c.rate, stay, zero_count);
                    let mut out = c.clone();
                    out.kin.weight = w;
                    out.shape = shape;
                    out.rate = rate;
                    post.extended.push(out);
                }
            }
            MissedGamma::Split => {
                let w1 = c.kin.weight * stay;
                if keep(w1) {
                    let mut out = c.clone();
                    out.kin.weight = w1;
                    post.extended.push(out);
                }
                let w2 = c.kin.weight * zero_count;
                if keep(w2) {
                    let mut out = c.clone();
                    out.kin.weight = w2;
                    out.rate = c.rate + 1.0;
                    post.extended.push(out);
                }
            }
        }
    }

    // detections
    let mut detected_mass = 0.0;
    for (ci, cell) in cells.iter().enumerate() {
        let cw = cell_weights[ci];
        if cw <= 0.0 {
            continue;
        }
        let ln_cw = cw.ln() - log_evidence[ci];
        for term in &ext_terms[ci] {
            let w = (ln_cw + term.log_term).exp();
            detected_mass += w;
            if !keep(w) {
                continue;
            }
            let c = &pred.extended[term.comp];
            let inn = &term.innovation;
            let (mean, cov) =
                kalman_trajectory_update(&c.kin, &model.h, &inn.innovation, &inn.s_chol);
            post.extended.push(GgiwComponent {
                kin: TrajectoryGaussian {
                    weight: w,
                    mean,
                    cov,
                    ..c.kin.clone()
                },
                shape: inn.shape,
                rate: inn.rate,
                dof: inn.dof,
                scale: inn.scale.clone(),
            });
        }
        if cell.len() == 1 {
            let zi = &z[cell.indices()[0]];
            for term in &point_terms[ci] {
                let w = (ln_cw + term.log_term).exp();
                detected_mass += w;
                if !keep(w) {
                    continue;
                }
                let c = &pred.point[term.comp];
                let prior = &point_priors[term.comp];
                let innovation = zi - &prior.hm;
                let (mean, cov) = kalman_trajectory_update(c, &model.h, &innovation, &prior.s_chol);
                debug_assert_eq!(prior.s.nrows(), zi.len());
                post.point.push(TrajectoryGaussian {
                    weight: w,
                    mean,
                    cov,
                    ..c.clone()
                });
            }
        }
    }

    let diagnostics = UpdateDiagnostics {
        time: pred.time,
        partition_weights,
        cells: cells.iter().map(|c| c.indices().to_vec()).collect(),
        cell_log_evidence: log_evidence
            .iter()
            .zip(&log_clutter_of_cell)
            .map(|(e, c)| e - c)
            .collect(),
        cell_weights,
        missed_point_mass,
        missed_extended_mass,
        detected_mass,
    };
    Ok((post, diagnostics))
}

/// Standard point-target pseudolikelihood terms: for a point-only prior the
/// general update collapses to
/// `L(x) = 1 - p_D + Σ_z p_D l(z|x) / (λ^C(z) + Σ_j ω_j p_D q_j(z))`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointReduction {
    pub missed_factor: f64,
    /// `λ^C(z) + Σ_j ω_j p_D q_j(z)` per measurement.
    pub denominators: Vec<f64>,
    /// `ω_j p_D q_j(z) / denominator` indexed `[measurement][component]`.
    pub weights: Vec<Vec<f64>>,
}

pub fn pseudolikelihood_point_reduction(
    pred: &PhdMixture,
    z: &[DVector<f64>],
    model: &MeasurementModel,
) -> Result<PointReduction> {
    if !pred.extended.is_empty() {
        return Err(Error::Domain(
            "point reduction needs a point-only prior".into(),
        ));
    }
    let pd = model.p_detection;
    let mut denominators = Vec::with_capacity(z.len());
    let mut weights = Vec::with_capacity(z.len());
    for zi in z {
        let num = pred
            .point
            .iter()
            .map(|c| Ok(c.weight * pd * log_q_point(zi, c, model)?.exp()))
            .collect::<Result<Vec<f64>>>()?;
        let den = model.clutter.intensity(zi) + num.iter().sum::<f64>();
        weights.push(num.iter().map(|n| n / den).collect());
        denominators.push(den);
    }
    Ok(PointReduction {
        missed_factor: 1.0 - pd,
        denominators,
        weights,
    })
}
