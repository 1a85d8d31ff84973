//! Metric spaces over individuals, group distributions, and problem instances.

use crate::error::{Error, Result};
use crate::prob::PROB_TOL;

/// Tolerance used when validating symmetry / zero diagonal of a distance
/// matrix and when checking triangle inequalities.
const METRIC_TOL: f64 = 1e-9;

/// A finite set of individuals together with a symmetric nonnegative
/// distance function with zero diagonal.
///
/// The triangle inequality is not required for storage; [`MetricSpace::verify_metric`]
/// checks it explicitly (O(n^3)) and records the result in `is_true_metric`.
/// Some operations (metric-form earthmover, nearest-neighbor extension bounds)
/// are only valid on true metrics and consult the flag.
#[derive(Debug, Clone)]
pub struct MetricSpace {
    ids: Vec<String>,
    dist: Vec<Vec<f64>>,
    is_true_metric: bool,
}

impl MetricSpace {
    /// Builds a space from identifiers and a dense distance matrix.
    ///
    /// The matrix must be square with shape `n x n`, have a zero diagonal and
    /// be symmetric with nonnegative entries (all up to a small tolerance;
    /// the stored matrix is exactly symmetrized with an exact zero diagonal).
    pub fn new(ids: Vec<String>, dist: Vec<Vec<f64>>) -> Result<Self> {
        let n = ids.len();
        if dist.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: dist.len(),
            });
        }
        for (i, row) in dist.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::invalid("metric", format!("dist[{i}][{j}] is not finite")));
                }
                if v < -METRIC_TOL {
                    return Err(Error::invalid("metric", format!("dist[{i}][{j}] = {v} is negative")));
                }
            }
            if row[i].abs() > METRIC_TOL {
                return Err(Error::invalid("metric", format!("dist[{i}][{i}] = {} is nonzero", row[i])));
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if (dist[i][j] - dist[j][i]).abs() > METRIC_TOL {
                    return Err(Error::invalid(
                        "metric",
                        format!("asymmetric at ({i},{j}): {} vs {}", dist[i][j], dist[j][i]),
                    ));
                }
            }
        }
        // Store an exactly symmetric matrix with a hard zero diagonal.
        let mut sym = dist;
        for i in 0..n {
            sym[i][i] = 0.0;
            for j in (i + 1)..n {
                let v = (0.5 * (sym[i][j] + sym[j][i])).max(0.0);
                sym[i][j] = v;
                sym[j][i] = v;
            }
        }
        Ok(MetricSpace {
            ids,
            dist: sym,
            is_true_metric: false,
        })
    }

    /// Euclidean distances between points; the result is a true metric.
    pub fn from_points(ids: Vec<String>, points: &[Vec<f64>]) -> Result<Self> {
        if points.len() != ids.len() {
            return Err(Error::DimensionMismatch {
                expected: ids.len(),
                actual: points.len(),
            });
        }
        let n = points.len();
        let mut dist = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                if points[i].len() != points[j].len() {
                    return Err(Error::invalid("points", "inconsistent dimensions"));
                }
                let d = points[i]
                    .iter()
                    .zip(&points[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                dist[i][j] = d;
                dist[j][i] = d;
            }
        }
        let mut space = MetricSpace::new(ids, dist)?;
        space.is_true_metric = true;
        Ok(space)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn dist(&self, x: usize, y: usize) -> f64 {
        self.dist[x][y]
    }

    pub fn matrix(&self) -> &Vec<Vec<f64>> {
        &self.dist
    }

    pub fn is_true_metric(&self) -> bool {
        self.is_true_metric
    }

    /// Checks every triangle inequality (O(n^3)), records and returns the verdict.
    pub fn verify_metric(&mut self) -> bool {
        let n = self.len();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if self.dist[i][j] > self.dist[i][k] + self.dist[k][j] + METRIC_TOL {
                        self.is_true_metric = false;
                        return false;
                    }
                }
            }
        }
        self.is_true_metric = true;
        true
    }

    /// Restriction to a subset of individuals, in the order given.
    /// A restriction of a true metric is a true metric, so the flag carries over.
    pub fn restrict(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::invalid("restriction", "empty index set"));
        }
        for &x in indices {
            if x >= self.len() {
                return Err(Error::invalid("restriction", format!("index {x} out of range")));
            }
        }
        let ids = indices.iter().map(|&x| self.ids[x].clone()).collect();
        let dist = indices
            .iter()
            .map(|&x| indices.iter().map(|&y| self.dist[x][y]).collect())
            .collect();
        Ok(MetricSpace {
            ids,
            dist,
            is_true_metric: self.is_true_metric,
        })
    }

    /// Returns a copy with every distance multiplied by `factor >= 0`.
    /// Scaling preserves the verified-metric flag.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if factor.is_nan() || factor < 0.0 {
            return Err(Error::invalid("scale factor", format!("{factor}")));
        }
        let dist = self
            .dist
            .iter()
            .map(|row| row.iter().map(|d| d * factor).collect())
            .collect();
        Ok(MetricSpace {
            ids: self.ids.clone(),
            dist,
            is_true_metric: self.is_true_metric,
        })
    }
}

/// A probability distribution over individuals; groups are represented this
/// way, with uniform-over-subset as the common special case.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupDistribution {
    weights: Vec<f64>,
}

impl GroupDistribution {
    /// Validates nonnegativity and normalization (within 1e-9).
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("group distribution", "empty weight vector"));
        }
        let mut sum = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::invalid("group distribution", format!("weight[{i}] = {w}")));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::invalid(
                "group distribution",
                format!("weights sum to {sum}, expected 1"),
            ));
        }
        Ok(GroupDistribution { weights })
    }

    pub fn uniform(n: usize) -> Self {
        GroupDistribution {
            weights: vec![1.0 / n as f64; n],
        }
    }

    /// Uniform distribution over a subset of individuals.
    pub fn uniform_over(n: usize, members: &[usize]) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::invalid("group", "empty member set"));
        }
        let mut weights = vec![0.0; n];
        for &x in members {
            if x >= n {
                return Err(Error::invalid("group", format!("member index {x} out of range")));
            }
            if weights[x] != 0.0 {
                return Err(Error::invalid("group", format!("duplicate member index {x}")));
            }
            weights[x] = 1.0 / members.len() as f64;
        }
        Ok(GroupDistribution { weights })
    }

    pub fn point_mass(n: usize, x: usize) -> Result<Self> {
        Self::uniform_over(n, &[x])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, x: usize) -> f64 {
        self.weights[x]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Indices with strictly positive weight.
    pub fn support(&self) -> Vec<usize> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

/// A fairness problem instance: metric space, outcome set, vendor loss, and
/// the population distribution the expected loss is taken over.
#[derive(Debug, Clone)]
pub struct FairnessInstance {
    space: MetricSpace,
    outcomes: Vec<String>,
    loss: Vec<Vec<f64>>,
    base: GroupDistribution,
}

impl FairnessInstance {
    /// Instance with the default uniform base distribution.
    pub fn new(space: MetricSpace, outcomes: Vec<String>, loss: Vec<Vec<f64>>) -> Result<Self> {
        let base = GroupDistribution::uniform(space.len());
        Self::with_base(space, outcomes, loss, base)
    }

    pub fn with_base(
        space: MetricSpace,
        outcomes: Vec<String>,
        loss: Vec<Vec<f64>>,
        base: GroupDistribution,
    ) -> Result<Self> {
        if space.is_empty() {
            return Err(Error::invalid("instance", "no individuals"));
        }
        if outcomes.is_empty() {
            return Err(Error::invalid("instance", "no outcomes"));
        }
        if loss.len() != space.len() {
            return Err(Error::DimensionMismatch {
                expected: space.len(),
                actual: loss.len(),
            });
        }
        for (x, row) in loss.iter().enumerate() {
            if row.len() != outcomes.len() {
                return Err(Error::DimensionMismatch {
                    expected: outcomes.len(),
                    actual: row.len(),
                });
            }
            if let Some(a) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::invalid("loss", format!("L[{x}][{a}] is not finite")));
            }
        }
        if base.len() != space.len() {
            return Err(Error::DimensionMismatch {
                expected: space.len(),
                actual: base.len(),
            });
        }
        Ok(FairnessInstance {
            space,
            outcomes,
            loss,
            base,
        })
    }

    pub fn space(&self) -> &MetricSpace {
        &self.space
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn num_outcomes(&self) -> usize {
        self.outcomes.len()
    }

    pub fn loss(&self, x: usize, a: usize) -> f64 {
        self.loss[x][a]
    }

    pub fn loss_matrix(&self) -> &Vec<Vec<f64>> {
        &self.loss
    }

    pub fn base(&self) -> &GroupDistribution {
        &self.base
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_asymmetric_matrix() {
        let err = MetricSpace::new(
            vec!["a".into(), "b".into()],
            vec![vec![0.0, 0.5], vec![0.4, 0.0]],
        );
        assert!(err.is_err());
    }

    #[test]
    fn rejects_nonzero_diagonal() {
        let err = MetricSpace::new(vec!["a".into()], vec![vec![0.1]]);
        assert!(err.is_err());
    }

    #[test]
    fn symmetrizes_within_tolerance() {
        let s = MetricSpace::new(
            vec!["a".into(), "b".into()],
            vec![vec![0.0, 0.5], vec![0.5 + 1e-12, 0.0]],
        )
        .unwrap();
        assert_eq!(s.dist(0, 1), s.dist(1, 0));
    }

    #[test]
    fn verify_metric_detects_triangle_violation() {
        // d(a,c) = 1 > d(a,b) + d(b,c) = 0.2
        let mut s = MetricSpace::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                vec![0.0, 0.1, 1.0],
                vec![0.1, 0.0, 0.1],
                vec![1.0, 0.1, 0.0],
            ],
        )
        .unwrap();
        assert!(!s.verify_metric());
        assert!(!s.is_true_metric());
    }

    #[test]
    fn euclidean_points_verify() {
        let mut s = MetricSpace::from_points(
            vec!["a".into(), "b".into(), "c".into()],
            &[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
        )
        .unwrap();
        assert!(s.is_true_metric());
        assert!(s.verify_metric());
        assert!((s.dist(1, 2) - 2.0_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn uniform_over_subset() {
        let g = GroupDistribution::uniform_over(4, &[1, 3]).unwrap();
        assert_eq!(g.weights(), &[0.0, 0.5, 0.0, 0.5]);
        assert_eq!(g.support(), vec![1, 3]);
    }

    #[test]
    fn group_rejects_bad_sum() {
        assert!(GroupDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(GroupDistribution::new(vec![-0.5, 1.5]).is_err());
    }

    #[test]
    fn instance_shape_checks() {
        let space = MetricSpace::new(
            vec!["a".into(), "b".into()],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        )
        .unwrap();
        let bad = FairnessInstance::new(
            space.clone(),
            vec!["0".into(), "1".into()],
            vec![vec![0.0, 1.0]],
        );
        assert!(bad.is_err());
        let ok = FairnessInstance::new(
            space,
            vec!["0".into(), "1".into()],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        );
        assert!(ok.is_ok());
    }
}
