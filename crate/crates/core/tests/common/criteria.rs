//! Randomized checks shared by the unit-level integration tests and the
//! acceptance target. Each returns the worst discrepancy it saw.

use gtphd::combinatorics::{check_lemma1, check_lemma2};
use gtphd::model::PhdMixture;
use gtphd::oracle::posterior_mass_oracle;
use gtphd::partitioner::{
    dbscan_sweep, exhaustive_proposals, single_linkage, DbscanSweep, PartitionProposal,
};
use gtphd::update::{update, MissedGamma, UpdateOptions};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::reference::{standard_extended_update, standard_point_update, RefComponent};
use super::{mixture, planar_model, random_ggiw, random_scan, random_trajectory, rng};

fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

fn vec_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax() / a.amax().max(b.amax()).max(1.0)
}

fn mat_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / a.amax().max(b.amax()).max(1.0)
}

/// Worst relative error over 200 trials of each identity at every set size 0..=6.
pub fn lemma_error(seed: u64) -> (f64, f64) {
    let mut r = rng(seed);
    let (mut e1, mut e2) = (0.0f64, 0.0f64);
    for n in 0..=6usize {
        for _ in 0..200 {
            let lambda: Vec<f64> = (0..n).map(|_| r.random_range(0.01..3.0)).collect();
            let tau: Vec<f64> = (0..1usize << n).map(|_| r.random_range(0.0..2.0)).collect();
            let (lhs, rhs) = check_lemma1(&lambda, &tau).unwrap();
            e1 = e1.max(rel(lhs, rhs));
            let f: Vec<f64> = (0..1usize << n)
                .map(|_| r.random_range(-1.0..2.0))
                .collect();
            let g: Vec<f64> = (0..1usize << n)
                .map(|_| r.random_range(0.05..2.0))
                .collect();
            let (lhs, rhs) = check_lemma2(&f, &g).unwrap();
            e2 = e2.max(if n == 0 {
                lhs.abs().max(rhs.abs())
            } else {
                rel(lhs, rhs)
            });
        }
    }
    (e1, e2)
}

struct Flat {
    weight: f64,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    gamma: Option<(f64, f64)>,
    iw: Option<(f64, DMatrix<f64>)>,
}

fn flatten(post: &PhdMixture) -> Vec<Flat> {
    let mut out: Vec<Flat> = post
        .point
        .iter()
        .map(|c| Flat {
            weight: c.weight,
            mean: c.mean.clone(),
            cov: c.cov.clone(),
            gamma: None,
            iw: None,
        })
        .chain(post.extended.iter().map(|c| Flat {
            weight: c.kin.weight,
            mean: c.kin.mean.clone(),
            cov: c.kin.cov.clone(),
            gamma: Some((c.shape, c.rate)),
            iw: Some((c.dof, c.scale.clone())),
        }))
        .collect();
    out.sort_by(|a, b| a.weight.total_cmp(&b.weight));
    out
}

fn compare(post: &PhdMixture, mut reference: Vec<RefComponent>) -> f64 {
    reference.retain(|c| c.weight > 0.0);
    reference.sort_by(|a, b| a.weight.total_cmp(&b.weight));
    let got = flatten(post);
    if got.len() != reference.len() {
        return f64::INFINITY;
    }
    let mut err = 0.0f64;
    for (g, r) in got.iter().zip(&reference) {
        err = err.max(rel(g.weight, r.weight));
        err = err.max(vec_err(&g.mean, &r.mean));
        err = err.max(mat_err(&g.cov, &r.cov));
        match (&g.gamma, &r.gamma) {
            (Some((a1, b1)), Some((a2, b2))) => err = err.max(rel(*a1, *a2)).max(rel(*b1, *b2)),
            (None, None) => {}
            _ => return f64::INFINITY,
        }
        match (&g.iw, &r.iw) {
            (Some((v1, s1)), Some((v2, s2))) => err = err.max(rel(*v1, *v2)).max(mat_err(s1, s2)),
            (None, None) => {}
            _ => return f64::INFINITY,
        }
    }
    err
}

fn as_indices(p: &[PartitionProposal]) -> Vec<Vec<Vec<usize>>> {
    p.iter()
        .map(|q| q.cells().iter().map(|c| c.indices().to_vec()).collect())
        .collect()
}

/// Point-only scenes (m <= 4, <= 3 components) against the standard point update.
pub fn point_reduction_error(scenes: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut err = 0.0f64;
    for _ in 0..scenes {
        let model = planar_model(r.random_range(0.5..0.99), r.random_range(0.5..5.0));
        let m = r.random_range(0..=4);
        let n = r.random_range(1..=3);
        let comps = (0..n)
            .map(|_| {
                let len = r.random_range(1..=3);
                let (x, y) = (r.random_range(-3.0..3.0), r.random_range(-3.0..3.0));
                {
                    let (w, l) = (r.random_range(0.1..1.0), len);
                    random_trajectory(&mut r, w, l, x, y)
                }
            })
            .collect();
        let pred = mixture(comps, Vec::new());
        let z = random_scan(&mut r, m, 3.0);
        let proposals = exhaustive_proposals(m).unwrap();
        let (post, _) = update(&pred, &z, &proposals, &model, &UpdateOptions::default()).unwrap();
        err = err.max(compare(&post, standard_point_update(&pred, &z, &model)));
    }
    err
}

/// Extended-only scenes (m <= 4, <= 3 components) against the standard GGIW update.
pub fn extended_reduction_error(scenes: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut err = 0.0f64;
    let opts = UpdateOptions {
        missed_gamma: MissedGamma::Split,
        min_weight: 0.0,
    };
    for _ in 0..scenes {
        let model = planar_model(r.random_range(0.5..0.99), r.random_range(0.5..5.0));
        let m = r.random_range(0..=4);
        let n = r.random_range(1..=3);
        let comps = (0..n)
            .map(|_| {
                let len = r.random_range(1..=3);
                let (x, y) = (r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
                {
                    let (w, l) = (r.random_range(0.1..1.0), len);
                    random_ggiw(&mut r, w, l, x, y)
                }
            })
            .collect();
        let pred = mixture(Vec::new(), comps);
        let z = random_scan(&mut r, m, 2.0);
        let proposals = exhaustive_proposals(m).unwrap();
        let (post, _) = update(&pred, &z, &proposals, &model, &opts).unwrap();
        let reference = standard_extended_update(&pred, &z, &as_indices(&proposals), &model);
        err = err.max(compare(&post, reference));
    }
    err
}

/// Mixed scenes (|z| <= 5): update mass with exhaustive partitions against the
/// subset-sum oracle.
pub fn posterior_mass_error(trials: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut err = 0.0f64;
    for _ in 0..trials {
        let model = planar_model(r.random_range(0.5..0.99), r.random_range(0.5..5.0));
        let m = r.random_range(0..=5);
        let np = r.random_range(0..=2);
        let ne = r.random_range(0..=2);
        let point = (0..np)
            .map(|_| {
                let (x, y) = (r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
                {
                    let (w, l) = (r.random_range(0.1..1.0), r.random_range(1..=2));
                    random_trajectory(&mut r, w, l, x, y)
                }
            })
            .collect();
        let extended = (0..ne)
            .map(|_| {
                let (x, y) = (r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
                {
                    let (w, l) = (r.random_range(0.1..1.0), r.random_range(1..=2));
                    random_ggiw(&mut r, w, l, x, y)
                }
            })
            .collect();
        let pred = mixture(point, extended);
        let z = random_scan(&mut r, m, 2.0);
        let (post, _) = update(
            &pred,
            &z,
            &exhaustive_proposals(m).unwrap(),
            &model,
            &UpdateOptions::default(),
        )
        .unwrap();
        let oracle = posterior_mass_oracle(&z, &pred, &model).unwrap();
        err = err.max(rel(post.total_mass(), oracle));
    }
    err
}

/// Connected components of the `<= eps` graph by breadth-first search.
fn bfs_components(z: &[DVector<f64>], eps: f64) -> PartitionProposal {
    let n = z.len();
    let mut label = vec![usize::MAX; n];
    let mut cells = Vec::new();
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        let id = cells.len();
        let mut members = vec![s];
        label[s] = id;
        let mut head = 0;
        while head < members.len() {
            let i = members[head];
            head += 1;
            for j in 0..n {
                if label[j] == usize::MAX && (&z[i] - &z[j]).norm() <= eps {
                    label[j] = id;
                    members.push(j);
                }
            }
        }
        cells.push(gtphd::partitioner::Cell::new(members).unwrap());
    }
    PartitionProposal::new(cells)
}

/// Validity and monotonicity of the sweep on random clouds (m <= 30).
/// Returns a description of the first violation.
pub fn partitioner_check(clouds: usize, seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let sweep = DbscanSweep::default();
    for trial in 0..clouds {
        let m = r.random_range(0..=30);
        let spread = r.random_range(1.0..20.0);
        let z = random_scan(&mut r, m, spread);
        let proposals = dbscan_sweep(&z, &sweep);
        if proposals.is_empty() {
            return Err(format!("cloud {trial}: no proposals"));
        }
        for (i, p) in proposals.iter().enumerate() {
            if !p.is_partition_of(m) {
                return Err(format!("cloud {trial}: proposal {i} is not a partition"));
            }
            if proposals[..i].contains(p) {
                return Err(format!("cloud {trial}: duplicate proposal {i}"));
            }
            if i > 0 && !proposals[i - 1].refines(p) {
                return Err(format!(
                    "cloud {trial}: proposal {i} does not coarsen its predecessor"
                ));
            }
        }
        // every sweep threshold reproduces one of the proposals
        for eps in sweep.thresholds() {
            let expected = bfs_components(&z, eps);
            if single_linkage(&z, eps) != expected {
                return Err(format!(
                    "cloud {trial}: single linkage differs from BFS at eps {eps}"
                ));
            }
            if m > 0 && !proposals.contains(&expected) {
                return Err(format!(
                    "cloud {trial}: eps {eps} partition missing from the sweep"
                ));
            }
        }
    }
    Ok(())
}
