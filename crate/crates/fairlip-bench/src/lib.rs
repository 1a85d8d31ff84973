//! Seeded fixture builders shared by the benchmarks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fairlip::{FairnessInstance, GroupDistribution, MetricSpace};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Euclidean metric over random planar points; verified true metric.
pub fn metric_space(seed: u64, n: usize, diameter: f64) -> MetricSpace {
    let mut rng = rng(seed);
    let points: Vec<Vec<f64>> = (0..n)
        .map(|_| vec![rng.gen_range(0.0..diameter), rng.gen_range(0.0..diameter)])
        .collect();
    let ids = (0..n).map(|i| format!("p{i}")).collect();
    let mut space = MetricSpace::from_points(ids, &points).unwrap();
    assert!(space.verify_metric());
    space
}

pub fn instance(seed: u64, n: usize, k: usize, diameter: f64) -> FairnessInstance {
    let mut rng = rng(seed ^ 0x5EED);
    let space = metric_space(seed, n, diameter);
    let loss = (0..n)
        .map(|_| (0..k).map(|_| rng.gen_range(0.0..1.0)).collect())
        .collect();
    let outcomes = (0..k).map(|a| format!("a{a}")).collect();
    FairnessInstance::new(space, outcomes, loss).unwrap()
}

pub fn group_pair(seed: u64, n: usize) -> (GroupDistribution, GroupDistribution) {
    let mut rng = rng(seed ^ 0x9A1);
    let mut draw = |_: ()| {
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
        let sum: f64 = raw.iter().sum();
        GroupDistribution::new(raw.into_iter().map(|w| w / sum).collect()).unwrap()
    };
    (draw(()), draw(()))
}
