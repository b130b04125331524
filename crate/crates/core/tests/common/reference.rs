//! Straight-from-the-formula reimplementations used as oracles. Nothing here
//! calls into the crate's likelihood or update code; matrices are inverted
//! explicitly and determinants come from LU.

use std::f64::consts::PI;

use gtphd::model::{GgiwComponent, MeasurementModel, PhdMixture, TrajectoryGaussian};
use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::ln_gamma;

pub fn ln_mgamma(d: usize, x: f64) -> f64 {
    let df = d as f64;
    df * (df - 1.0) / 4.0 * PI.ln()
        + (1..=d)
            .map(|i| ln_gamma(x + (1.0 - i as f64) / 2.0))
            .sum::<f64>()
}

fn last_block(c: &TrajectoryGaussian) -> (DVector<f64>, DMatrix<f64>) {
    let n = c.state_dim;
    let dim = c.mean.len();
    (
        c.mean.rows(dim - n, n).into_owned(),
        c.cov.view((dim - n, dim - n), (n, n)).into_owned(),
    )
}

fn inv(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().try_inverse().expect("invertible")
}

/// `N(z; H m, H P Hᵀ + R)`.
pub fn q_point(z: &DVector<f64>, c: &TrajectoryGaussian, model: &MeasurementModel) -> f64 {
    let (m, p) = last_block(c);
    let s = &model.h * p * model.h.transpose() + &model.r;
    let e = z - &model.h * m;
    let k = z.len() as f64;
    let quad = (e.transpose() * inv(&s) * &e)[(0, 0)];
    (2.0 * PI).powf(-k / 2.0) * s.determinant().powf(-0.5) * (-0.5 * quad).exp()
}

pub struct ExtendedPosterior {
    pub log_q: f64,
    pub innovation: DVector<f64>,
    pub s: DMatrix<f64>,
    pub shape: f64,
    pub rate: f64,
    pub dof: f64,
    pub scale: DMatrix<f64>,
}

/// GGIW predicted likelihood of the measurements `w` and the conjugate posterior parameters.
pub fn q_extended(
    w: &[DVector<f64>],
    c: &GgiwComponent,
    model: &MeasurementModel,
) -> ExtendedPosterior {
    let (m, p) = last_block(&c.kin);
    let d = c.scale.nrows();
    let df = d as f64;
    let n = w.len() as f64;
    let zbar = w.iter().fold(DVector::zeros(d), |acc, z| acc + z) / n;
    let scatter = w.iter().fold(DMatrix::zeros(d, d), |acc, z| {
        acc + (z - &zbar) * (z - &zbar).transpose()
    });
    let x = &c.scale / (c.dof - 2.0 * df - 2.0);
    let s = &model.h * p * model.h.transpose() + &x / n;
    let eps = &zbar - &model.h * m;
    let lx = x.clone().cholesky().unwrap().l();
    let ls = s.clone().cholesky().unwrap().l();
    let t = &lx * inv(&ls) * &eps;
    let nmat = &t * t.transpose();
    let shape = c.shape + n;
    let rate = c.rate + 1.0;
    let dof = c.dof + n;
    let scale = &c.scale + nmat + scatter;
    let log_q = -0.5 * df * (n * PI.ln() + n.ln())
        + 0.5 * (c.dof - df - 1.0) * c.scale.determinant().ln()
        - 0.5 * (dof - df - 1.0) * scale.determinant().ln()
        + ln_mgamma(d, 0.5 * (dof - df - 1.0))
        - ln_mgamma(d, 0.5 * (c.dof - df - 1.0))
        + 0.5 * x.determinant().ln()
        - 0.5 * s.determinant().ln()
        + ln_gamma(shape)
        - ln_gamma(c.shape)
        + c.shape * c.rate.ln()
        - shape * rate.ln();
    ExtendedPosterior {
        log_q,
        innovation: eps,
        s,
        shape,
        rate,
        dof,
        scale,
    }
}

/// Trajectory Kalman update with gain `P[:, k] Hᵀ S⁻¹`.
pub fn kalman(
    c: &TrajectoryGaussian,
    h: &DMatrix<f64>,
    e: &DVector<f64>,
    s: &DMatrix<f64>,
) -> (DVector<f64>, DMatrix<f64>) {
    let n = c.state_dim;
    let dim = c.mean.len();
    let cross = c.cov.columns(dim - n, n).into_owned();
    let gain = &cross * h.transpose() * inv(s);
    let mean = &c.mean + &gain * e;
    let cov = &c.cov - &gain * s * gain.transpose();
    (mean, cov)
}

#[derive(Debug, Clone)]
pub struct RefComponent {
    pub weight: f64,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub gamma: Option<(f64, f64)>,
    pub iw: Option<(f64, DMatrix<f64>)>,
}

/// Standard point-target trajectory PHD update.
pub fn standard_point_update(
    pred: &PhdMixture,
    z: &[DVector<f64>],
    model: &MeasurementModel,
) -> Vec<RefComponent> {
    let pd = model.p_detection;
    let mut out: Vec<RefComponent> = pred
        .point
        .iter()
        .map(|c| RefComponent {
            weight: (1.0 - pd) * c.weight,
            mean: c.mean.clone(),
            cov: c.cov.clone(),
            gamma: None,
            iw: None,
        })
        .collect();
    for zi in z {
        let terms: Vec<f64> = pred
            .point
            .iter()
            .map(|c| c.weight * pd * q_point(zi, c, model))
            .collect();
        let den = model.clutter.intensity(zi) + terms.iter().sum::<f64>();
        for (c, t) in pred.point.iter().zip(&terms) {
            let (m, p) = last_block(c);
            let s = &model.h * p * model.h.transpose() + &model.r;
            let e = zi - &model.h * m;
            let (mean, cov) = kalman(c, &model.h, &e, &s);
            out.push(RefComponent {
                weight: t / den,
                mean,
                cov,
                gamma: None,
                iw: None,
            });
        }
    }
    out
}

/// Standard extended-target (GGIW) PHD update over the given partitions, in
/// the `d_w` form. Missed components keep both Gamma branches.
pub fn standard_extended_update(
    pred: &PhdMixture,
    z: &[DVector<f64>],
    partitions: &[Vec<Vec<usize>>],
    model: &MeasurementModel,
) -> Vec<RefComponent> {
    let pd = model.p_detection;
    let mut out = Vec::new();
    for c in &pred.extended {
        let base = RefComponent {
            weight: c.kin.weight * (1.0 - pd),
            mean: c.kin.mean.clone(),
            cov: c.kin.cov.clone(),
            gamma: Some((c.shape, c.rate)),
            iw: Some((c.dof, c.scale.clone())),
        };
        let zero = RefComponent {
            weight: c.kin.weight * pd * (c.rate / (c.rate + 1.0)).powf(c.shape),
            gamma: Some((c.shape, c.rate + 1.0)),
            ..base.clone()
        };
        out.push(base);
        out.push(zero);
    }
    if z.is_empty() {
        return out;
    }
    let lc = |w: &[usize]| {
        w.iter()
            .map(|&i| model.clutter.intensity(&z[i]))
            .product::<f64>()
    };
    let d_w = |w: &[usize]| -> f64 {
        let cells: Vec<DVector<f64>> = w.iter().map(|&i| z[i].clone()).collect();
        let delta = if w.len() == 1 { 1.0 } else { 0.0 };
        delta
            + pred
                .extended
                .iter()
                .map(|c| c.kin.weight * pd * q_extended(&cells, c, model).log_q.exp() / lc(w))
                .sum::<f64>()
    };
    let scores: Vec<f64> = partitions
        .iter()
        .map(|p| p.iter().map(|w| d_w(w)).product())
        .collect();
    let total: f64 = scores.iter().sum();
    let mut cell_weight: Vec<(Vec<usize>, f64)> = Vec::new();
    for (p, s) in partitions.iter().zip(&scores) {
        for w in p {
            match cell_weight.iter_mut().find(|(c, _)| c == w) {
                Some(entry) => entry.1 += s / total,
                None => cell_weight.push((w.clone(), s / total)),
            }
        }
    }
    for (w, cw) in &cell_weight {
        let cells: Vec<DVector<f64>> = w.iter().map(|&i| z[i].clone()).collect();
        let dw = d_w(w);
        for c in &pred.extended {
            let post = q_extended(&cells, c, model);
            let weight = cw * c.kin.weight * pd * post.log_q.exp() / lc(w) / dw;
            let (mean, cov) = kalman(&c.kin, &model.h, &post.innovation, &post.s);
            out.push(RefComponent {
                weight,
                mean,
                cov,
                gamma: Some((post.shape, post.rate)),
                iw: Some((post.dof, post.scale)),
            });
        }
    }
    out
}
