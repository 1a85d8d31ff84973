//! Outcome distributions, stochastic maps, and the two probability metrics
//! (total variation and relative l-infinity) with Lipschitz checking.

use crate::error::{Error, Result};
use crate::space::{GroupDistribution, MetricSpace};

/// Normalization tolerance for probability vectors.
pub const PROB_TOL: f64 = 1e-9;

/// Default tolerance for Lipschitz checks, one order looser than the LP
/// feasibility tolerance to absorb accumulated rounding.
pub const LIPSCHITZ_TOL: f64 = 1e-6;

/// Which probability metric a Lipschitz constraint is stated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbMetricKind {
    /// D_tv(P,Q) = 1/2 * sum_a |P(a) - Q(a)|, bounded by 1.
    TotalVariation,
    /// D_inf(P,Q) = sup_a |ln(P(a)/Q(a))|, possibly infinite.
    RelativeLinf,
}

impl ProbMetricKind {
    pub fn distance(&self, p: &OutcomeDistribution, q: &OutcomeDistribution) -> Result<f64> {
        match self {
            ProbMetricKind::TotalVariation => tv_distance(p, q),
            ProbMetricKind::RelativeLinf => dinf_distance(p, q),
        }
    }
}

/// A probability vector over the outcome set.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    probs: Vec<f64>,
}

impl OutcomeDistribution {
    /// Validates nonnegativity and normalization (within 1e-9).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("distribution", "no outcomes"));
        }
        let mut sum = 0.0;
        for (a, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::invalid("distribution", format!("probs[{a}] = {p}")));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::invalid(
                "distribution",
                format!("probabilities sum to {sum}, expected 1"),
            ));
        }
        Ok(OutcomeDistribution { probs })
    }

    pub fn point_mass(num_outcomes: usize, a: usize) -> Result<Self> {
        if a >= num_outcomes {
            return Err(Error::invalid("distribution", format!("outcome {a} out of range")));
        }
        let mut probs = vec![0.0; num_outcomes];
        probs[a] = 1.0;
        Ok(OutcomeDistribution { probs })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, a: usize) -> f64 {
        self.probs[a]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Total mass on a set of outcome indices.
    pub fn mass(&self, outcomes: &[usize]) -> f64 {
        outcomes.iter().map(|&a| self.probs[a]).sum()
    }
}

/// One outcome distribution per individual, aligned with a `MetricSpace`.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMap {
    rows: Vec<OutcomeDistribution>,
}

impl StochasticMap {
    /// All rows must share the same outcome arity.
    pub fn new(rows: Vec<OutcomeDistribution>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("stochastic map", "no rows"));
        }
        let arity = rows[0].len();
        if let Some(bad) = rows.iter().position(|r| r.len() != arity) {
            return Err(Error::DimensionMismatch {
                expected: arity,
                actual: rows[bad].len(),
            });
        }
        Ok(StochasticMap { rows })
    }

    /// Builds from a dense row matrix, validating each row.
    pub fn from_rows(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let rows = matrix
            .into_iter()
            .map(OutcomeDistribution::new)
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }

    /// Every individual gets the same distribution.
    pub fn constant(n: usize, row: OutcomeDistribution) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("stochastic map", "no rows"));
        }
        Ok(StochasticMap {
            rows: vec![row; n],
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn num_outcomes(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, x: usize) -> &OutcomeDistribution {
        &self.rows[x]
    }

    pub fn rows(&self) -> &[OutcomeDistribution] {
        &self.rows
    }
}

fn check_same_arity(p: &OutcomeDistribution, q: &OutcomeDistribution) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            actual: q.len(),
        });
    }
    Ok(())
}

/// Total variation distance, 1/2 * sum_a |p(a) - q(a)|.
pub fn tv_distance(p: &OutcomeDistribution, q: &OutcomeDistribution) -> Result<f64> {
    check_same_arity(p, q)?;
    Ok(tv_slice(p.probs(), q.probs()))
}

pub(crate) fn tv_slice(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Relative l-infinity metric, sup_a |ln(p(a)/q(a))|.
///
/// Outcomes where both probabilities are zero contribute nothing; if exactly
/// one is zero the distance is infinite.
pub fn dinf_distance(p: &OutcomeDistribution, q: &OutcomeDistribution) -> Result<f64> {
    check_same_arity(p, q)?;
    Ok(dinf_slice(p.probs(), q.probs()))
}

pub(crate) fn dinf_slice(p: &[f64], q: &[f64]) -> f64 {
    let mut sup = 0.0_f64;
    for (&a, &b) in p.iter().zip(q) {
        if a == 0.0 && b == 0.0 {
            continue;
        }
        if a == 0.0 || b == 0.0 {
            return f64::INFINITY;
        }
        sup = sup.max((a / b).ln().abs());
    }
    sup
}

/// Result of scanning every pair for the largest Lipschitz violation.
#[derive(Debug, Clone)]
pub struct LipschitzReport {
    /// max over pairs of D(mu_x, mu_y) - d(x,y); -inf when there are no pairs.
    pub max_violation: f64,
    /// Pair achieving the maximum.
    pub witness: Option<(usize, usize)>,
    /// Tolerance the verdict was taken at.
    pub tol: f64,
}

impl LipschitzReport {
    pub fn is_lipschitz(&self) -> bool {
        self.max_violation <= self.tol
    }
}

/// Scans all pairs and reports the maximum violation of
/// `D(mu_x, mu_y) <= d(x,y)` together with the argmax pair.
pub fn check_lipschitz(
    m: &StochasticMap,
    space: &MetricSpace,
    kind: ProbMetricKind,
    tol: f64,
) -> Result<LipschitzReport> {
    if m.len() != space.len() {
        return Err(Error::DimensionMismatch {
            expected: space.len(),
            actual: m.len(),
        });
    }
    let mut max_violation = f64::NEG_INFINITY;
    let mut witness = None;
    for x in 0..m.len() {
        for y in (x + 1)..m.len() {
            let d = kind.distance(m.row(x), m.row(y))?;
            let v = d - space.dist(x, y);
            if v > max_violation {
                max_violation = v;
                witness = Some((x, y));
            }
        }
    }
    Ok(LipschitzReport {
        max_violation,
        witness,
        tol,
    })
}

/// Weighted mixture of rows: mu_S(a) = E_{x~S} mu_x(a).
pub fn group_mixture(m: &StochasticMap, g: &GroupDistribution) -> Result<OutcomeDistribution> {
    if m.len() != g.len() {
        return Err(Error::DimensionMismatch {
            expected: g.len(),
            actual: m.len(),
        });
    }
    let mut probs = vec![0.0; m.num_outcomes()];
    for (x, row) in m.rows().iter().enumerate() {
        let w = g.weight(x);
        if w == 0.0 {
            continue;
        }
        for (a, &p) in row.probs().iter().enumerate() {
            probs[a] += w * p;
        }
    }
    OutcomeDistribution::new(probs)
}

/// Pushes every row through a row-stochastic channel from outcome set A to B.
///
/// Both probability metrics are non-expansive under this composition, so a
/// Lipschitz map stays Lipschitz.
pub fn postprocess(m: &StochasticMap, channel: &[Vec<f64>]) -> Result<StochasticMap> {
    if channel.len() != m.num_outcomes() {
        return Err(Error::DimensionMismatch {
            expected: m.num_outcomes(),
            actual: channel.len(),
        });
    }
    let out_arity = channel.first().map_or(0, Vec::len);
    if out_arity == 0 {
        return Err(Error::invalid("channel", "empty output outcome set"));
    }
    for (a, row) in channel.iter().enumerate() {
        if row.len() != out_arity {
            return Err(Error::DimensionMismatch {
                expected: out_arity,
                actual: row.len(),
            });
        }
        let mut sum = 0.0;
        for (b, &v) in row.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid("channel", format!("channel[{a}][{b}] = {v}")));
            }
            sum += v;
        }
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::invalid(
                "channel",
                format!("row {a} sums to {sum}, expected 1"),
            ));
        }
    }
    let rows = m
        .rows()
        .iter()
        .map(|row| {
            let mut out = vec![0.0; out_arity];
            for (a, &p) in row.probs().iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for (b, &c) in channel[a].iter().enumerate() {
                    out[b] += p * c;
                }
            }
            OutcomeDistribution::new(out)
        })
        .collect::<Result<Vec<_>>>()?;
    StochasticMap::new(rows)
}

/// Cleans a raw LP row into a probability vector: clamps small negatives,
/// snaps entries below 1e-9 to zero, renormalizes.
pub(crate) fn clean_probability_row(raw: &[f64]) -> Result<Vec<f64>> {
    let mut row: Vec<f64> = raw
        .iter()
        .map(|&v| if v < PROB_TOL { 0.0 } else { v })
        .collect();
    let sum: f64 = row.iter().sum();
    if sum <= 0.5 {
        return Err(Error::Internal(format!(
            "LP produced a degenerate probability row (mass {sum})"
        )));
    }
    for v in &mut row {
        *v /= sum;
    }
    Ok(row)
}
