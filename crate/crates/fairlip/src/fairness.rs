//! Loss minimization subject to the Lipschitz fairness constraint.
//!
//! Variables are the per-individual outcome probabilities mu_x(a). The
//! total-variation constraint on a pair is linearized with auxiliary
//! variables t >= |mu_x(a) - mu_y(a)| and a budget row sum_a t <= 2 d(x,y);
//! the relative l-infinity constraint becomes ratio rows
//! mu_x(a) <= e^{d(x,y)} mu_y(a) for both orderings.

use crate::error::{Error, Result};
use crate::lp::{solve, LinearProgram, LpStatus, Relation};
use crate::prob::{clean_probability_row, ProbMetricKind, StochasticMap};
use crate::space::FairnessInstance;

/// Ratio coefficients e^d are capped at e^30. For larger distances the
/// constraint only tightens (the true bound is looser), so feasibility and
/// the Lipschitz property of solutions are preserved while the tableau stays
/// conditioned.
const MAX_RATIO_EXPONENT: f64 = 30.0;

/// An optimal Lipschitz map together with opt(instance), its expected loss.
#[derive(Debug, Clone)]
pub struct FairSolution {
    pub map: StochasticMap,
    pub opt_value: f64,
}

/// Expected loss of a map under the instance's base distribution,
/// E_{x~base} E_{a~mu_x} L(x,a).
pub fn expected_loss(inst: &FairnessInstance, map: &StochasticMap) -> Result<f64> {
    let n = inst.space().len();
    if map.len() != n || map.num_outcomes() != inst.num_outcomes() {
        return Err(Error::DimensionMismatch {
            expected: n * inst.num_outcomes(),
            actual: map.len() * map.num_outcomes(),
        });
    }
    let mut total = 0.0;
    for x in 0..n {
        let w = inst.base().weight(x);
        if w == 0.0 {
            continue;
        }
        let row = map.row(x);
        for a in 0..inst.num_outcomes() {
            total += w * row.prob(a) * inst.loss(x, a);
        }
    }
    Ok(total)
}

/// Assembles the fairness LP for an instance under the given probability metric.
///
/// Layout: mu_x(a) at index `x * |A| + a`; for total variation, auxiliary
/// absolute-value variables follow, one block per constrained pair. Pairs at
/// distance zero are encoded as exact equalities; total-variation pairs at
/// distance >= 1 are omitted (the constraint is vacuous).
pub fn build_fairness_lp(inst: &FairnessInstance, kind: ProbMetricKind) -> LinearProgram {
    let n = inst.space().len();
    let k = inst.num_outcomes();
    let num_mu = n * k;
    let mu = |x: usize, a: usize| x * k + a;

    // Pairs that need auxiliary variables (TV, 0 < d < 1).
    let mut aux_pairs = Vec::new();
    if kind == ProbMetricKind::TotalVariation {
        for x in 0..n {
            for y in (x + 1)..n {
                let d = inst.space().dist(x, y);
                if d > 0.0 && d < 1.0 {
                    aux_pairs.push((x, y, d));
                }
            }
        }
    }

    let num_vars = num_mu + aux_pairs.len() * k;
    let mut objective = vec![0.0; num_vars];
    for x in 0..n {
        let w = inst.base().weight(x);
        for a in 0..k {
            objective[mu(x, a)] = w * inst.loss(x, a);
        }
    }
    let mut lp = LinearProgram::minimize(objective);

    // Simplex rows.
    for x in 0..n {
        let entries: Vec<(usize, f64)> = (0..k).map(|a| (mu(x, a), 1.0)).collect();
        lp.add_sparse_constraint(&entries, Relation::Eq, 1.0);
    }

    // Identical individuals are forced to identical rows, for either metric.
    for x in 0..n {
        for y in (x + 1)..n {
            if inst.space().dist(x, y) == 0.0 {
                for a in 0..k {
                    lp.add_sparse_constraint(
                        &[(mu(x, a), 1.0), (mu(y, a), -1.0)],
                        Relation::Eq,
                        0.0,
                    );
                }
            }
        }
    }

    match kind {
        ProbMetricKind::TotalVariation => {
            for (p, &(x, y, d)) in aux_pairs.iter().enumerate() {
                let t = |a: usize| num_mu + p * k + a;
                for a in 0..k {
                    lp.add_sparse_constraint(
                        &[(mu(x, a), 1.0), (mu(y, a), -1.0), (t(a), -1.0)],
                        Relation::Le,
                        0.0,
                    );
                    lp.add_sparse_constraint(
                        &[(mu(y, a), 1.0), (mu(x, a), -1.0), (t(a), -1.0)],
                        Relation::Le,
                        0.0,
                    );
                }
                let budget: Vec<(usize, f64)> = (0..k).map(|a| (t(a), 1.0)).collect();
                lp.add_sparse_constraint(&budget, Relation::Le, 2.0 * d);
            }
        }
        ProbMetricKind::RelativeLinf => {
            // mu_x(a) <= e^d mu_y(a), emitted pre-scaled as
            // e^{-d} mu_x(a) - mu_y(a) <= 0 so coefficients never exceed 1.
            for x in 0..n {
                for y in (x + 1)..n {
                    let d = inst.space().dist(x, y);
                    if d == 0.0 {
                        continue;
                    }
                    let decay = (-d.min(MAX_RATIO_EXPONENT)).exp();
                    for a in 0..k {
                        lp.add_sparse_constraint(
                            &[(mu(x, a), decay), (mu(y, a), -1.0)],
                            Relation::Le,
                            0.0,
                        );
                        lp.add_sparse_constraint(
                            &[(mu(y, a), decay), (mu(x, a), -1.0)],
                            Relation::Le,
                            0.0,
                        );
                    }
                }
            }
        }
    }
    lp
}

/// Solves the fairness LP and extracts the optimal stochastic map.
///
/// Constant maps are always feasible, so an infeasible (or unbounded) verdict
/// from the solver is escalated as an internal error.
pub fn solve_fairness(inst: &FairnessInstance, kind: ProbMetricKind) -> Result<FairSolution> {
    let lp = build_fairness_lp(inst, kind);
    let sol = solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Internal(format!(
            "fairness LP reported {:?}, yet constant maps are always feasible",
            sol.status
        )));
    }
    let n = inst.space().len();
    let k = inst.num_outcomes();
    let rows = (0..n)
        .map(|x| clean_probability_row(&sol.values[x * k..(x + 1) * k]))
        .collect::<Result<Vec<_>>>()?;
    Ok(FairSolution {
        map: StochasticMap::from_rows(rows)?,
        opt_value: sol.objective_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{check_lipschitz, LIPSCHITZ_TOL};
    use crate::space::MetricSpace;

    fn two_point_instance(d: f64, loss: Vec<Vec<f64>>) -> FairnessInstance {
        let space = MetricSpace::new(
            vec!["x".into(), "y".into()],
            vec![vec![0.0, d], vec![d, 0.0]],
        )
        .unwrap();
        FairnessInstance::new(space, vec!["0".into(), "1".into()], loss).unwrap()
    }

    #[test]
    fn zero_distance_forces_common_row() {
        // Opposed losses with d = 0: any common distribution costs 1/2.
        let inst = two_point_instance(0.0, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let s = solve_fairness(&inst, ProbMetricKind::TotalVariation).unwrap();
        assert!((s.opt_value - 0.5).abs() < 1e-9);
        assert_eq!(s.map.row(0), s.map.row(1));
    }

    #[test]
    fn unit_distance_frees_both_rows() {
        let inst = two_point_instance(1.0, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let s = solve_fairness(&inst, ProbMetricKind::TotalVariation).unwrap();
        assert!(s.opt_value.abs() < 1e-9);
        assert!((s.map.row(0).prob(0) - 1.0).abs() < 1e-9);
        assert!((s.map.row(1).prob(1) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_individual_takes_argmin() {
        let space = MetricSpace::new(vec!["x".into()], vec![vec![0.0]]).unwrap();
        let inst = FairnessInstance::new(
            space,
            vec!["0".into(), "1".into()],
            vec![vec![0.2, 0.7]],
        )
        .unwrap();
        for kind in [ProbMetricKind::TotalVariation, ProbMetricKind::RelativeLinf] {
            let s = solve_fairness(&inst, kind).unwrap();
            assert!((s.opt_value - 0.2).abs() < 1e-9);
            assert_eq!(s.map.row(0).prob(0), 1.0);
        }
    }

    #[test]
    fn lp_shape_single_individual() {
        let space = MetricSpace::new(vec!["x".into()], vec![vec![0.0]]).unwrap();
        let inst = FairnessInstance::new(
            space,
            vec!["0".into(), "1".into(), "2".into()],
            vec![vec![0.0, 0.5, 1.0]],
        )
        .unwrap();
        let lp = build_fairness_lp(&inst, ProbMetricKind::TotalVariation);
        assert_eq!(lp.num_vars(), 3);
        assert_eq!(lp.num_constraints(), 1);
    }

    #[test]
    fn lp_shape_tv_pair() {
        let inst = two_point_instance(0.4, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let lp = build_fairness_lp(&inst, ProbMetricKind::TotalVariation);
        // 4 mu + one auxiliary block of |A| = 2
        assert_eq!(lp.num_vars(), 6);
        // 2 simplex + 4 absolute-value rows + 1 budget row
        assert_eq!(lp.num_constraints(), 7);
        let budgets = lp
            .constraints()
            .iter()
            .filter(|c| c.relation == Relation::Le && c.rhs > 0.0)
            .count();
        assert_eq!(budgets, 1);
    }

    #[test]
    fn lp_shape_tv_distant_pair_omitted() {
        let inst = two_point_instance(1.0, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let lp = build_fairness_lp(&inst, ProbMetricKind::TotalVariation);
        assert_eq!(lp.num_vars(), 4);
        assert_eq!(lp.num_constraints(), 2);
    }

    #[test]
    fn lp_shape_ratio_rows() {
        let inst = two_point_instance(0.4, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let lp = build_fairness_lp(&inst, ProbMetricKind::RelativeLinf);
        assert_eq!(lp.num_vars(), 4);
        // 2 simplex + 2 ordered pairs x 2 outcomes
        assert_eq!(lp.num_constraints(), 6);
    }

    #[test]
    fn solutions_pass_their_own_lipschitz_check() {
        let inst = two_point_instance(0.25, vec![vec![0.1, 0.9], vec![0.8, 0.3]]);
        for kind in [ProbMetricKind::TotalVariation, ProbMetricKind::RelativeLinf] {
            let s = solve_fairness(&inst, kind).unwrap();
            let rep = check_lipschitz(&s.map, inst.space(), kind, LIPSCHITZ_TOL).unwrap();
            assert!(rep.is_lipschitz(), "kind {kind:?}: {rep:?}");
        }
    }

    #[test]
    fn opt_no_worse_than_best_constant() {
        let inst = two_point_instance(0.25, vec![vec![0.1, 0.9], vec![0.8, 0.3]]);
        // Best constant map puts all mass on argmin_a of the base-averaged loss.
        let avg0: f64 = 0.5 * (0.1 + 0.8);
        let avg1: f64 = 0.5 * (0.9 + 0.3);
        let best_constant = avg0.min(avg1);
        for kind in [ProbMetricKind::TotalVariation, ProbMetricKind::RelativeLinf] {
            let s = solve_fairness(&inst, kind).unwrap();
            assert!(s.opt_value <= best_constant + 1e-9);
        }
    }

    #[test]
    fn linf_opt_dominates_tv_opt() {
        let inst = two_point_instance(0.3, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let tv = solve_fairness(&inst, ProbMetricKind::TotalVariation).unwrap();
        let inf = solve_fairness(&inst, ProbMetricKind::RelativeLinf).unwrap();
        assert!(inf.opt_value >= tv.opt_value - 1e-9);
    }

    #[test]
    fn opt_value_matches_recomputation() {
        let inst = two_point_instance(0.25, vec![vec![0.1, 0.9], vec![0.8, 0.3]]);
        let s = solve_fairness(&inst, ProbMetricKind::TotalVariation).unwrap();
        let recomputed = expected_loss(&inst, &s.map).unwrap();
        assert!((s.opt_value - recomputed).abs() < 1e-7);
    }

    #[test]
    fn nonuniform_base_weights_the_objective() {
        // All mass on the first individual: its argmin should win when d = 1.
        let space = MetricSpace::new(
            vec!["x".into(), "y".into()],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        )
        .unwrap();
        let base = crate::space::GroupDistribution::new(vec![1.0, 0.0]).unwrap();
        let inst = FairnessInstance::with_base(
            space,
            vec!["0".into(), "1".into()],
            vec![vec![0.3, 0.6], vec![0.9, 0.1]],
            base,
        )
        .unwrap();
        let s = solve_fairness(&inst, ProbMetricKind::TotalVariation).unwrap();
        assert!((s.opt_value - 0.3).abs() < 1e-9);
    }
}
