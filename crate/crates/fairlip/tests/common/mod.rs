//! Shared generators for randomized integration tests. Everything is seeded,
//! so failures reproduce exactly.

#![allow(dead_code)]

use fairlip::{FairnessInstance, GroupDistribution, MetricSpace, OutcomeDistribution};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("p{i}")).collect()
}

/// Symmetric nonnegative distances with zero diagonal; triangle inequality
/// is NOT enforced.
pub fn random_symmetric_space(rng: &mut ChaCha8Rng, n: usize, max_d: f64) -> MetricSpace {
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = rng.gen_range(0.0..max_d);
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    MetricSpace::new(ids(n), dist).unwrap()
}

/// Euclidean distances between random planar points; a verified true metric.
pub fn random_true_metric(rng: &mut ChaCha8Rng, n: usize, diameter: f64) -> MetricSpace {
    let points: Vec<Vec<f64>> = (0..n)
        .map(|_| vec![rng.gen_range(0.0..diameter), rng.gen_range(0.0..diameter)])
        .collect();
    let mut space = MetricSpace::from_points(ids(n), &points).unwrap();
    assert!(space.verify_metric());
    space
}

/// True metric rescaled so the largest distance is exactly 1 (left as-is if
/// all points coincide).
pub fn random_true_metric_leq_one(rng: &mut ChaCha8Rng, n: usize) -> MetricSpace {
    let space = random_true_metric(rng, n, 1.0);
    let mut max_d: f64 = 0.0;
    for x in 0..n {
        for y in (x + 1)..n {
            max_d = max_d.max(space.dist(x, y));
        }
    }
    if max_d == 0.0 {
        return space;
    }
    let mut scaled = space.scaled(1.0 / max_d).unwrap();
    assert!(scaled.verify_metric());
    scaled
}

/// Random probability vector over n entries (normalized exponentials).
pub fn random_distribution(rng: &mut ChaCha8Rng, n: usize) -> GroupDistribution {
    let raw: Vec<f64> = (0..n).map(|_| -rng.gen_range(1e-12..1.0_f64).ln()).collect();
    let sum: f64 = raw.iter().sum();
    GroupDistribution::new(raw.into_iter().map(|w| w / sum).collect()).unwrap()
}

pub fn random_outcome_distribution(rng: &mut ChaCha8Rng, k: usize) -> OutcomeDistribution {
    let raw: Vec<f64> = (0..k).map(|_| -rng.gen_range(1e-12..1.0_f64).ln()).collect();
    let sum: f64 = raw.iter().sum();
    OutcomeDistribution::new(raw.into_iter().map(|p| p / sum).collect()).unwrap()
}

pub fn random_loss(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..k).map(|_| rng.gen_range(0.0..1.0)).collect())
        .collect()
}

/// Instance over a random symmetric (not necessarily true-metric) space with
/// losses in [0, 1] and uniform base.
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize, k: usize, max_d: f64) -> FairnessInstance {
    let space = random_symmetric_space(rng, n, max_d);
    let loss = random_loss(rng, n, k);
    let outcomes = (0..k).map(|a| format!("a{a}")).collect();
    FairnessInstance::new(space, outcomes, loss).unwrap()
}

/// Instance over a random true metric.
pub fn random_metric_instance(
    rng: &mut ChaCha8Rng,
    n: usize,
    k: usize,
    diameter: f64,
) -> FairnessInstance {
    let space = random_true_metric(rng, n, diameter);
    let loss = random_loss(rng, n, k);
    let outcomes = (0..k).map(|a| format!("a{a}")).collect();
    FairnessInstance::new(space, outcomes, loss).unwrap()
}

/// Splits 0..n into two disjoint nonempty member sets.
pub fn random_partition(rng: &mut ChaCha8Rng, n: usize) -> (Vec<usize>, Vec<usize>) {
    assert!(n >= 2);
    loop {
        let mut s = Vec::new();
        let mut t = Vec::new();
        for x in 0..n {
            if rng.gen_bool(0.5) {
                s.push(x);
            } else {
                t.push(x);
            }
        }
        if !s.is_empty() && !t.is_empty() {
            return (s, t);
        }
    }
}

/// Unit-spacing grid in `dim` dimensions with `side` points per side.
pub fn grid_space(dim: usize, side: usize) -> MetricSpace {
    let mut points = Vec::new();
    let mut coords = vec![0usize; dim];
    loop {
        points.push(coords.iter().map(|&c| c as f64).collect::<Vec<f64>>());
        let mut d = 0;
        loop {
            coords[d] += 1;
            if coords[d] < side {
                break;
            }
            coords[d] = 0;
            d += 1;
            if d == dim {
                let ids = (0..points.len()).map(|i| format!("g{i}")).collect();
                let mut space = MetricSpace::from_points(ids, &points).unwrap();
                // Euclidean by construction; skip the O(n^3) scan on big grids.
                assert!(space.is_true_metric() || space.verify_metric());
                return space;
            }
        }
    }
}

/// Brute-force fairness oracle for n <= 3, |A| = 2: exhaustive grid over the
/// outcome-0 probabilities, independent of the LP path.
pub fn grid_search_opt(inst: &FairnessInstance, kind: fairlip::ProbMetricKind, step: f64) -> f64 {
    let n = inst.space().len();
    assert!(n <= 3 && inst.num_outcomes() == 2);
    let levels: Vec<f64> = {
        let mut v = Vec::new();
        let mut p = 0.0_f64;
        while p < 1.0 + 1e-12 {
            v.push(p.min(1.0));
            p += step;
        }
        v
    };
    let feasible = |ps: &[f64]| -> bool {
        for x in 0..n {
            for y in (x + 1)..n {
                let d = inst.space().dist(x, y);
                let ok = match kind {
                    fairlip::ProbMetricKind::TotalVariation => (ps[x] - ps[y]).abs() <= d + 1e-12,
                    fairlip::ProbMetricKind::RelativeLinf => {
                        let p = OutcomeDistribution::new(vec![ps[x], 1.0 - ps[x]]).unwrap();
                        let q = OutcomeDistribution::new(vec![ps[y], 1.0 - ps[y]]).unwrap();
                        fairlip::dinf_distance(&p, &q).unwrap() <= d + 1e-12
                    }
                };
                if !ok {
                    return false;
                }
            }
        }
        true
    };
    let objective = |ps: &[f64]| -> f64 {
        (0..n)
            .map(|x| {
                inst.base().weight(x)
                    * (ps[x] * inst.loss(x, 0) + (1.0 - ps[x]) * inst.loss(x, 1))
            })
            .sum()
    };
    let mut best = f64::INFINITY;
    let mut ps = vec![0.0; n];
    fn recurse(
        levels: &[f64],
        ps: &mut Vec<f64>,
        x: usize,
        n: usize,
        feasible: &dyn Fn(&[f64]) -> bool,
        objective: &dyn Fn(&[f64]) -> f64,
        best: &mut f64,
    ) {
        if x == n {
            if feasible(ps) {
                let v = objective(ps);
                if v < *best {
                    *best = v;
                }
            }
            return;
        }
        for &p in levels {
            ps[x] = p;
            recurse(levels, ps, x + 1, n, feasible, objective, best);
        }
    }
    recurse(&levels, &mut ps, 0, n, &feasible, &objective, &mut best);
    best
}
