#![allow(dead_code)]

pub mod criteria;
pub mod reference;

use gtphd::model::{
    ClutterIntensity, GgiwComponent, MeasurementModel, PhdMixture, TrajectoryGaussian,
};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn planar_model(pd: f64, clutter_rate: f64) -> MeasurementModel {
    let mut h = DMatrix::zeros(2, 4);
    h[(0, 0)] = 1.0;
    h[(1, 1)] = 1.0;
    MeasurementModel {
        h,
        r: DMatrix::identity(2, 2),
        p_detection: pd,
        clutter: ClutterIntensity::Uniform {
            rate: clutter_rate,
            area: 400.0,
        },
    }
}

/// Random symmetric positive definite matrix with eigenvalues roughly in `[lo, lo + spread]`.
pub fn random_spd(r: &mut impl Rng, n: usize, lo: f64, spread: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    let m = &a * a.transpose() * (spread / n as f64) + DMatrix::identity(n, n) * lo;
    (&m + m.transpose()) * 0.5
}

/// A trajectory component with `len` steps around `(x, y)`, random joint covariance.
pub fn random_trajectory(
    r: &mut impl Rng,
    weight: f64,
    len: usize,
    x: f64,
    y: f64,
) -> TrajectoryGaussian {
    let n = 4 * len;
    let mut mean = DVector::zeros(n);
    for i in 0..len {
        mean[4 * i] = x + r.random_range(-0.5..0.5);
        mean[4 * i + 1] = y + r.random_range(-0.5..0.5);
        mean[4 * i + 2] = r.random_range(-1.0..1.0);
        mean[4 * i + 3] = r.random_range(-1.0..1.0);
    }
    let cov = random_spd(r, n, 0.3, 2.0);
    let mut c = TrajectoryGaussian::new(
        weight,
        1,
        DVector::from_element(4, 0.0),
        DMatrix::identity(4, 4),
    )
    .unwrap();
    c.mean = mean;
    c.cov = cov;
    c
}

pub fn random_ggiw(r: &mut impl Rng, weight: f64, len: usize, x: f64, y: f64) -> GgiwComponent {
    let kin = random_trajectory(r, weight, len, x, y);
    let dof = r.random_range(8.0..30.0);
    let scale = random_spd(r, 2, 0.5, 1.0) * (dof - 6.0) * 0.3;
    GgiwComponent::new(
        kin,
        r.random_range(2.0..12.0),
        r.random_range(0.5..2.0),
        dof,
        scale,
    )
    .unwrap()
}

pub fn random_scan(r: &mut impl Rng, m: usize, spread: f64) -> Vec<DVector<f64>> {
    (0..m)
        .map(|_| {
            DVector::from_vec(vec![
                r.random_range(-spread..spread),
                r.random_range(-spread..spread),
            ])
        })
        .collect()
}

pub fn mixture(point: Vec<TrajectoryGaussian>, extended: Vec<GgiwComponent>) -> PhdMixture {
    let mut m = PhdMixture::empty(1, 4, 2);
    m.point = point;
    m.extended = extended;
    m
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

pub fn assert_rel(a: f64, b: f64, tol: f64, what: &str) {
    assert!(
        rel_close(a, b, tol),
        "{what}: {a} vs {b} (rel {:.3e})",
        (a - b).abs() / a.abs().max(b.abs())
    );
}

pub fn assert_vec_close(a: &DVector<f64>, b: &DVector<f64>, tol: f64, what: &str) {
    assert_eq!(a.len(), b.len(), "{what}: length");
    let scale = a.amax().max(b.amax()).max(1.0);
    assert!((a - b).amax() <= tol * scale, "{what}: {a} vs {b}");
}

pub fn assert_mat_close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64, what: &str) {
    assert_eq!(a.shape(), b.shape(), "{what}: shape");
    let scale = a.amax().max(b.amax()).max(1.0);
    assert!((a - b).amax() <= tol * scale, "{what}: {a} vs {b}");
}
