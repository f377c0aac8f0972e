#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use resilimat::lqg::{riccati_backward, LinearSystem, LqgWeights, SensorModel};
use resilimat::setfn::{make_coverage, make_logdet, make_modular, make_power_coverage, make_power_modular};
use resilimat::{Matroid, SetFunction};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Coverage function whose elements each cover 1..=3 items of a universe of `universe` items.
pub fn random_coverage_sets(rng: &mut ChaCha8Rng, n: usize, universe: usize) -> Vec<Vec<usize>> {
    (0..n)
        .map(|_| {
            let k = rng.random_range(1..=3);
            (0..k).map(|_| rng.random_range(0..universe)).collect()
        })
        .collect()
}

pub fn random_coverage(rng: &mut ChaCha8Rng, n: usize) -> SetFunction {
    let universe = rng.random_range(n..=2 * n);
    make_coverage(random_coverage_sets(rng, n, universe)).unwrap()
}

pub fn random_modular(rng: &mut ChaCha8Rng, n: usize) -> SetFunction {
    make_modular((0..n).map(|_| rng.random_range(1..=20) as f64).collect()).unwrap()
}

/// `log det(I + Σ v_i v_iᵀ)` with random non-zero `v_i` in dimension 3.
pub fn random_logdet(rng: &mut ChaCha8Rng, n: usize) -> SetFunction {
    let d = 3;
    let mats = (0..n)
        .map(|_| {
            let v = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            &v * v.transpose()
        })
        .collect();
    make_logdet(DMatrix::identity(d, d), mats).unwrap()
}

pub fn random_submodular(rng: &mut ChaCha8Rng, n: usize, k: usize) -> SetFunction {
    if k.is_multiple_of(2) {
        random_coverage(rng, n)
    } else {
        random_logdet(rng, n)
    }
}

/// Monotone objectives that are generally not submodular.
pub fn random_supermodular(rng: &mut ChaCha8Rng, n: usize, k: usize) -> SetFunction {
    if k.is_multiple_of(2) {
        let universe = rng.random_range(n..=2 * n);
        make_power_coverage(random_coverage_sets(rng, n, universe), 1.5).unwrap()
    } else {
        let w = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        make_power_modular(w, rng.random_range(1.1..1.6)).unwrap()
    }
}

/// Random partition of `0..n` into `blocks` non-empty blocks.
pub fn random_blocks(rng: &mut ChaCha8Rng, n: usize, blocks: usize) -> Vec<Vec<usize>> {
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(rng);
    let mut out: Vec<Vec<usize>> = ids[..blocks].iter().map(|&i| vec![i]).collect();
    for &i in &ids[blocks..] {
        let b = rng.random_range(0..blocks);
        out[b].push(i);
    }
    for b in &mut out {
        b.sort_unstable();
    }
    out
}

/// Caps summing to `total`, each at most its block size.
pub fn random_caps(rng: &mut ChaCha8Rng, blocks: &[Vec<usize>], total: usize) -> Vec<usize> {
    let mut caps = vec![0; blocks.len()];
    let capacity: usize = blocks.iter().map(Vec::len).sum();
    assert!(total <= capacity);
    for _ in 0..total {
        let open: Vec<usize> = (0..blocks.len()).filter(|&b| caps[b] < blocks[b].len()).collect();
        caps[*open.choose(rng).unwrap()] += 1;
    }
    caps
}

/// Selection and removal partition matroids on a shared random partition.
pub fn random_partition_pair(
    rng: &mut ChaCha8Rng,
    n: usize,
    alpha: usize,
    beta: usize,
) -> (Matroid, Matroid) {
    loop {
        let k = rng.random_range(2..=3);
        let blocks = random_blocks(rng, n, k);
        let caps = random_caps(rng, &blocks, alpha);
        let capped: Vec<Vec<usize>> = blocks
            .iter()
            .zip(&caps)
            .map(|(b, &c)| b[..c].to_vec())
            .collect();
        if capped.iter().map(Vec::len).sum::<usize>() < beta {
            continue;
        }
        let removal_caps = random_caps(rng, &capped, beta);
        return (
            Matroid::partition(blocks.clone(), caps).unwrap(),
            Matroid::partition(blocks, removal_caps).unwrap(),
        );
    }
}

pub fn random_transversal(rng: &mut ChaCha8Rng, n: usize) -> Matroid {
    let k = rng.random_range(1..=n.max(1));
    let subsets = (0..k)
        .map(|_| (0..n).filter(|_| rng.random_bool(0.35)).collect())
        .collect();
    Matroid::transversal(n, subsets).unwrap()
}

fn random_spd(rng: &mut ChaCha8Rng, k: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(k, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    &g * g.transpose() * 0.5 + DMatrix::identity(k, k) * 0.5
}

/// Random `d`-state, 2-input system with identity noise and costs.
pub fn random_lqg(rng: &mut ChaCha8Rng, d: usize, horizon: usize) -> (LinearSystem, LqgWeights) {
    let a = DMatrix::from_fn(d, d, |i, j| {
        let noise: f64 = rng.sample(StandardNormal);
        let diag = if i == j { 1.0 } else { 0.0 };
        diag + 0.3 * noise
    });
    let b = DMatrix::from_fn(d, 2, |_, _| rng.sample::<f64, _>(StandardNormal));
    let x0_mean = DVector::from_fn(d, |_, _| rng.random_range(-5.0..5.0));
    let sys = LinearSystem::new(a, b, DMatrix::identity(d, d), x0_mean, DMatrix::identity(d, d), horizon).unwrap();
    let weights = riccati_backward(&sys, &DMatrix::identity(d, d), &DMatrix::identity(2, 2)).unwrap();
    (sys, weights)
}

/// Sensors with 1 or 2 random measurement rows and random SPD noise.
pub fn random_sensors(rng: &mut ChaCha8Rng, d: usize, count: usize) -> Vec<SensorModel> {
    (0..count)
        .map(|id| {
            let k = rng.random_range(1..=2);
            let c = DMatrix::from_fn(k, d, |_, _| rng.sample::<f64, _>(StandardNormal));
            let v = random_spd(rng, k);
            SensorModel::new(id, format!("s{id}"), c, v).unwrap()
        })
        .collect()
}
