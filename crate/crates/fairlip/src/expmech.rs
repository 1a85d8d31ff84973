//! The exponential mechanism over a metric space, ball-counting profiles,
//! and nearest-neighbor extension from a well-separated subset.

use crate::error::{Error, Result};
use crate::prob::{dinf_slice, OutcomeDistribution, StochasticMap};
use crate::space::MetricSpace;

/// Compensated summation; keeps row normalization exact to machine precision
/// even for spaces with thousands of points.
fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for v in values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}

/// The mechanism's map: individuals to distributions over the individuals
/// themselves, with row entries proportional to e^{-scale * d(x,y)}.
#[derive(Debug, Clone)]
pub struct ExpMechMap {
    pub map: StochasticMap,
    /// Exponent multiplier beta.
    pub scale: f64,
    /// Z_x = sum_y e^{-scale * d(x,y)} per row.
    pub normalizers: Vec<f64>,
}

/// Builds the mechanism. Rows are computed by shifting exponents by the row
/// minimum before exponentiation, so large-diameter spaces cannot underflow.
pub fn exp_mechanism(space: &MetricSpace, scale: f64) -> Result<ExpMechMap> {
    if space.is_empty() {
        return Err(Error::invalid("space", "no individuals"));
    }
    if scale.is_nan() || scale <= 0.0 {
        return Err(Error::invalid("scale", format!("{scale}")));
    }
    let n = space.len();
    let mut rows = Vec::with_capacity(n);
    let mut normalizers = Vec::with_capacity(n);
    for x in 0..n {
        let dmin = (0..n).map(|y| space.dist(x, y)).fold(f64::INFINITY, f64::min);
        let weights: Vec<f64> = (0..n)
            .map(|y| (-scale * (space.dist(x, y) - dmin)).exp())
            .collect();
        let shifted_z = kahan_sum(weights.iter().copied());
        normalizers.push(shifted_z * (-scale * dmin).exp());
        let row: Vec<f64> = weights.iter().map(|w| w / shifted_z).collect();
        rows.push(OutcomeDistribution::new(row)?);
    }
    Ok(ExpMechMap {
        map: StochasticMap::new(rows)?,
        scale,
        normalizers,
    })
}

/// Largest ratio D_inf(row_x, row_y) / d(x, y) over all pairs.
///
/// Pairs at distance zero contribute nothing when their rows coincide and
/// infinity otherwise. On a true metric the result is at most 2*scale.
pub fn lipschitz_constant(m: &ExpMechMap, space: &MetricSpace) -> Result<f64> {
    let n = space.len();
    if m.map.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: m.map.len(),
        });
    }
    let mut worst = 0.0_f64;
    for x in 0..n {
        for y in (x + 1)..n {
            let dinf = dinf_slice(m.map.row(x).probs(), m.map.row(y).probs());
            let d = space.dist(x, y);
            if d == 0.0 {
                if dinf > 1e-12 {
                    return Ok(f64::INFINITY);
                }
                continue;
            }
            worst = worst.max(dinf / d);
        }
    }
    Ok(worst)
}

/// E_{x in V} E_{y ~ row_x} d(x,y), the mechanism's expected loss when the
/// metric itself is the loss.
pub fn expected_loss(m: &ExpMechMap, space: &MetricSpace) -> Result<f64> {
    let n = space.len();
    if m.map.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: m.map.len(),
        });
    }
    let total = kahan_sum((0..n).map(|x| {
        kahan_sum(
            m.map
                .row(x)
                .probs()
                .iter()
                .enumerate()
                .map(|(y, &p)| p * space.dist(x, y)),
        )
    }));
    Ok(total / n as f64)
}

/// Average ball sizes at the requested radii, the empirical doubling
/// exponents, and the separation radius.
#[derive(Debug, Clone)]
pub struct BallProfile {
    pub radii: Vec<f64>,
    /// E_{x in V} |B(x, R)| per requested radius.
    pub avg_counts: Vec<f64>,
    /// log2(avg |B(x, 2R)| / avg |B(x, R)|) per requested radius.
    pub doubling_exponents: Vec<f64>,
    /// Supremum of eps with |B(x, eps)| = 1 for all x: the smallest pairwise
    /// distance (0 with duplicate points, +inf for a single point).
    pub separation_eps: f64,
}

/// Exact ball counting by enumeration (O(n^2) per radius).
pub fn ball_profile(space: &MetricSpace, radii: &[f64]) -> Result<BallProfile> {
    if space.is_empty() {
        return Err(Error::invalid("space", "no individuals"));
    }
    if radii.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("radii", "must be sorted ascending"));
    }
    if radii.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::invalid("radii", "must be finite and nonnegative"));
    }
    let n = space.len();
    let avg_count = |r: f64| -> f64 {
        let total: usize = (0..n)
            .map(|x| (0..n).filter(|&y| space.dist(x, y) <= r).count())
            .sum();
        total as f64 / n as f64
    };
    let avg_counts: Vec<f64> = radii.iter().map(|&r| avg_count(r)).collect();
    let doubling_exponents: Vec<f64> = radii
        .iter()
        .zip(&avg_counts)
        .map(|(&r, &c)| (avg_count(2.0 * r) / c).log2())
        .collect();
    let separation_eps = if n <= 1 {
        f64::INFINITY
    } else {
        let mut min_dist = f64::INFINITY;
        for x in 0..n {
            for y in (x + 1)..n {
                min_dist = min_dist.min(space.dist(x, y));
            }
        }
        min_dist
    };
    Ok(BallProfile {
        radii: radii.to_vec(),
        avg_counts,
        doubling_exponents,
        separation_eps,
    })
}

/// Extends a map defined on a subset to the whole space by giving every
/// point the row of its nearest subset member (own row for members; ties by
/// lowest individual index).
///
/// If the inner map is (D_inf, d)-Lipschitz on the subset and every point
/// lies within eps of the subset, the extension satisfies
/// D_inf(M(x), M(y)) <= d(x,y) + 2 eps on a true metric.
pub fn extend_from_subset(
    space: &MetricSpace,
    subset: &[usize],
    inner: &StochasticMap,
) -> Result<StochasticMap> {
    if subset.is_empty() {
        return Err(Error::invalid("subset", "empty subset"));
    }
    if inner.len() != subset.len() {
        return Err(Error::DimensionMismatch {
            expected: subset.len(),
            actual: inner.len(),
        });
    }
    let n = space.len();
    let mut position = vec![usize::MAX; n];
    for (k, &v) in subset.iter().enumerate() {
        if v >= n {
            return Err(Error::invalid("subset", format!("index {v} out of range")));
        }
        if position[v] != usize::MAX {
            return Err(Error::invalid("subset", format!("duplicate index {v}")));
        }
        position[v] = k;
    }
    let rows = (0..n)
        .map(|x| {
            if position[x] != usize::MAX {
                return inner.row(position[x]).clone();
            }
            let mut best_member = usize::MAX;
            let mut best_dist = f64::INFINITY;
            for &v in subset {
                let d = space.dist(x, v);
                if d < best_dist || (d == best_dist && v < best_member) {
                    best_dist = d;
                    best_member = v;
                }
            }
            inner.row(position[best_member]).clone()
        })
        .collect();
    StochasticMap::new(rows)
}
