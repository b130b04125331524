//! Exhaustive set-partition enumeration and the two partition-sum identities
//! used to rewrite the measurement-set likelihood. Sets are the indices
//! `0..n`; subsets are bit masks.

use crate::error::{Error, Result};
use crate::partitioner::{Cell, PartitionProposal};

/// Largest set the enumerator accepts (Bell(10) = 115975).
pub const MAX_ENUMERATION: usize = 10;
/// Largest set the lemma checks accept.
pub const MAX_LEMMA_SET: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSet {
    pub base: Vec<usize>,
    pub partitions: Vec<PartitionProposal>,
}

/// Bell numbers via the Bell triangle.
pub fn bell_number(n: usize) -> u64 {
    let mut row = vec![1u64];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for v in &row {
            let last = *next.last().unwrap();
            next.push(last + v);
        }
        row = next;
    }
    row[0]
}

/// Every partition of `0..n`, via restricted growth strings.
pub fn enumerate_partitions(n: usize) -> Result<PartitionSet> {
    if n > MAX_ENUMERATION {
        return Err(Error::TooLarge {
            n,
            limit: MAX_ENUMERATION,
        });
    }
    let base: Vec<usize> = (0..n).collect();
    let partitions = partitions_of_mask(full_mask(n))
        .into_iter()
        .map(|blocks| {
            PartitionProposal::new(
                blocks
                    .into_iter()
                    .map(|m| Cell::new(mask_elements(m)).expect("non-empty block"))
                    .collect(),
            )
        })
        .collect();
    Ok(PartitionSet { base, partitions })
}

pub(crate) fn full_mask(n: usize) -> u32 {
    if n == 0 {
        0
    } else {
        u32::MAX >> (32 - n)
    }
}

pub(crate) fn mask_elements(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

/// All partitions of the set encoded by `mask`, each as a list of block masks.
/// The empty set has exactly one (empty) partition.
pub fn partitions_of_mask(mask: u32) -> Vec<Vec<u32>> {
    let elems = mask_elements(mask);
    let mut out = Vec::new();
    let mut labels = vec![0usize; elems.len()];
    // labels[i] <= number of blocks opened by elements before i
    fn rec(i: usize, used: usize, labels: &mut [usize], elems: &[usize], out: &mut Vec<Vec<u32>>) {
        if i == elems.len() {
            let mut blocks = vec![0u32; used];
            for (e, &l) in elems.iter().zip(labels.iter()) {
                blocks[l] |= 1 << e;
            }
            out.push(blocks);
            return;
        }
        for l in 0..=used {
            labels[i] = l;
            rec(i + 1, used.max(l + 1), labels, elems, out);
        }
    }
    rec(0, 0, &mut labels, &elems, &mut out);
    out
}

/// All subsets of `mask` (including the empty set and `mask` itself).
pub(crate) fn subsets(mask: u32) -> impl Iterator<Item = u32> {
    let mut sub = mask;
    let mut done = false;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let cur = sub;
        if sub == 0 {
            done = true;
        } else {
            sub = (sub - 1) & mask;
        }
        Some(cur)
    })
}

fn check_lemma_size(n: usize, table_len: usize) -> Result<()> {
    if n > MAX_LEMMA_SET {
        return Err(Error::TooLarge {
            n,
            limit: MAX_LEMMA_SET,
        });
    }
    if table_len != 1 << n {
        return Err(Error::Dimension(format!(
            "subset table has {table_len} entries, expected 2^{n}"
        )));
    }
    Ok(())
}

/// Both sides of
/// `Σ_{y⊆z} λ^{z∖y} Σ_{Q∠y} τ^Q = Σ_{Q∠z} (κ+τ)^Q`, `κ(w) = δ₁[|w|] λ(w)`,
/// by exhaustive enumeration. `lambda[i]` is λ at element `i`; `tau[mask]` is
/// τ on the subset `mask` (entry 0 unused).
pub fn check_lemma1(lambda: &[f64], tau: &[f64]) -> Result<(f64, f64)> {
    let n = lambda.len();
    check_lemma_size(n, tau.len())?;
    let z = full_mask(n);
    let lambda_pow =
        |mask: u32| -> f64 { mask_elements(mask).iter().map(|&i| lambda[i]).product() };
    let tau_pow = |q: &[u32]| -> f64 { q.iter().map(|&w| tau[w as usize]).product() };

    let mut lhs = 0.0;
    for y in subsets(z) {
        let inner: f64 = partitions_of_mask(y).iter().map(|q| tau_pow(q)).sum();
        lhs += lambda_pow(z & !y) * inner;
    }

    let kappa = |w: u32| -> f64 {
        if w.count_ones() == 1 {
            lambda_pow(w)
        } else {
            0.0
        }
    };
    let rhs = partitions_of_mask(z)
        .iter()
        .map(|q| {
            q.iter()
                .map(|&w| kappa(w) + tau[w as usize])
                .product::<f64>()
        })
        .sum();
    Ok((lhs, rhs))
}

/// Both sides of
/// `Σ_{w⊆z,|w|>0} f(w) Σ_{Q∠z∖w} g^Q = Σ_{P∠z} g^P Σ_{v∈P} f(v)/g(v)`
/// by exhaustive enumeration. Tables are indexed by subset mask.
pub fn check_lemma2(f: &[f64], g: &[f64]) -> Result<(f64, f64)> {
    if f.len() != g.len() || !f.len().is_power_of_two() {
        return Err(Error::Dimension(
            "f and g must be subset tables of equal size".into(),
        ));
    }
    let n = f.len().trailing_zeros() as usize;
    check_lemma_size(n, g.len())?;
    let z = full_mask(n);
    if let Some(w) = (1..g.len()).find(|&w| g[w] == 0.0) {
        return Err(Error::Domain(format!(
            "g vanishes on cell {:?}",
            mask_elements(w as u32)
        )));
    }
    let g_pow = |q: &[u32]| -> f64 { q.iter().map(|&w| g[w as usize]).product() };

    let mut lhs = 0.0;
    for w in subsets(z).filter(|&w| w != 0) {
        let inner: f64 = partitions_of_mask(z & !w).iter().map(|q| g_pow(q)).sum();
        lhs += f[w as usize] * inner;
    }
    let rhs = partitions_of_mask(z)
        .iter()
        .map(|p| {
            g_pow(p)
                * p.iter()
                    .map(|&v| f[v as usize] / g[v as usize])
                    .sum::<f64>()
        })
        .sum();
    Ok((lhs, rhs))
}
