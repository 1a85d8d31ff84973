//! Fair affirmative action: statistical parity enforced outright, with the
//! Lipschitz condition kept inside each group and relaxed across them.
//!
//! The pipeline follows three steps: a restricted earthmover program maps
//! protected individuals onto distributions over the other group, the vendor
//! loss is reweighted through that assignment, and the fairness LP runs on
//! the non-protected group alone. Composing the stages yields a map on the
//! whole population.

use crate::error::{Error, Result};
use crate::fairness::solve_fairness;
use crate::lp::{solve, LinearProgram, LpStatus, Relation};
use crate::prob::{
    clean_probability_row, group_mixture, tv_distance, OutcomeDistribution, ProbMetricKind,
    StochasticMap,
};
use crate::space::{FairnessInstance, GroupDistribution, MetricSpace};

const MAX_RATIO_EXPONENT: f64 = 30.0;

/// Stage-1 output: one distribution over the T-members per S-member, the
/// transport cost paid, and the parity slack the program was run at.
#[derive(Debug, Clone)]
pub struct AaPlan {
    /// Rows over T (by position in `t_members`), one per S-member.
    pub assignment: Vec<OutcomeDistribution>,
    /// Optimal value of the restricted earthmover objective.
    pub em_cost: f64,
    /// Parity slack used for the mixture-vs-uniform constraint.
    pub eps: f64,
    /// Probability metric used for the within-S constraints.
    pub kind: ProbMetricKind,
}

/// The composed population-wide map together with the pieces it was built from.
#[derive(Debug, Clone)]
pub struct ComposedMap {
    /// Rows over the outcome set for every individual.
    pub map: StochasticMap,
    /// The T-only fairness solution (rows by position in `t_members`).
    pub inner: StochasticMap,
    /// The stage-1 plan.
    pub plan: AaPlan,
    pub s_members: Vec<usize>,
    pub t_members: Vec<usize>,
}

/// Measured guarantees of a composed map.
#[derive(Debug, Clone)]
pub struct ComposedReport {
    /// D_tv between the uniform-S and uniform-T mixtures.
    pub parity_gap: f64,
    /// Largest Lipschitz violation over S x S pairs (-inf if fewer than two).
    pub within_s_violation: f64,
    /// Largest Lipschitz violation over T x T pairs (-inf if fewer than two).
    pub within_t_violation: f64,
    /// E_{x in S} max(0, max_{y in T} [D_tv(M(x), M(y)) - d(x,y)]).
    pub cross_violation_avg: f64,
    pub em_cost: f64,
    pub eps: f64,
    pub parity_ok: bool,
    pub within_ok: bool,
    pub cross_ok: bool,
}

fn validate_groups(space: &MetricSpace, s_members: &[usize], t_members: &[usize]) -> Result<()> {
    if t_members.is_empty() {
        return Err(Error::invalid("groups", "T must be nonempty"));
    }
    let mut seen = vec![false; space.len()];
    for &x in s_members.iter().chain(t_members) {
        if x >= space.len() {
            return Err(Error::invalid("groups", format!("index {x} out of range")));
        }
        if seen[x] {
            return Err(Error::invalid("groups", format!("index {x} appears twice; S and T must be disjoint")));
        }
        seen[x] = true;
    }
    Ok(())
}

/// Solves the restricted earthmover program: transport the uniform
/// distribution on S onto distributions over T, minimizing expected distance,
/// subject to the within-S Lipschitz constraints and statistical parity of
/// the S-mixture against the uniform distribution on T.
///
/// Total variation is the supported default for the within-S constraints;
/// the relative l-infinity encoding is available but experimental (the
/// cross-group average-violation bound is only guaranteed for total
/// variation).
pub fn solve_em_plus_l(
    space: &MetricSpace,
    s_members: &[usize],
    t_members: &[usize],
    eps: f64,
    kind: ProbMetricKind,
) -> Result<AaPlan> {
    validate_groups(space, s_members, t_members)?;
    if eps.is_nan() || eps < 0.0 {
        return Err(Error::invalid("eps", format!("{eps}")));
    }
    let ns = s_members.len();
    let nt = t_members.len();
    if ns == 0 {
        return Ok(AaPlan {
            assignment: Vec::new(),
            em_cost: 0.0,
            eps,
            kind,
        });
    }

    // mu_i(j) for i over S, j over T.
    let num_mu = ns * nt;
    let mu = |i: usize, j: usize| i * nt + j;

    let mut aux_pairs = Vec::new();
    if kind == ProbMetricKind::TotalVariation {
        for i in 0..ns {
            for i2 in (i + 1)..ns {
                let d = space.dist(s_members[i], s_members[i2]);
                if d > 0.0 && d < 1.0 {
                    aux_pairs.push((i, i2, d));
                }
            }
        }
    }
    // Absolute-value block for the pair constraints, then one for parity.
    let parity_base = num_mu + aux_pairs.len() * nt;
    let num_vars = parity_base + nt;

    let build = |parity_rhs: Option<f64>| -> LinearProgram {
        let mut objective = vec![0.0; num_vars];
        match parity_rhs {
            Some(_) => {
                for i in 0..ns {
                    for j in 0..nt {
                        objective[mu(i, j)] =
                            space.dist(s_members[i], t_members[j]) / ns as f64;
                    }
                }
            }
            None => {
                // Diagnosis program: minimize the parity slack itself.
                for j in 0..nt {
                    objective[parity_base + j] = 0.5;
                }
            }
        }
        let mut lp = LinearProgram::minimize(objective);
        for i in 0..ns {
            let row: Vec<(usize, f64)> = (0..nt).map(|j| (mu(i, j), 1.0)).collect();
            lp.add_sparse_constraint(&row, Relation::Eq, 1.0);
        }
        // Within-S Lipschitz.
        for i in 0..ns {
            for i2 in (i + 1)..ns {
                if space.dist(s_members[i], s_members[i2]) == 0.0 {
                    for j in 0..nt {
                        lp.add_sparse_constraint(
                            &[(mu(i, j), 1.0), (mu(i2, j), -1.0)],
                            Relation::Eq,
                            0.0,
                        );
                    }
                }
            }
        }
        match kind {
            ProbMetricKind::TotalVariation => {
                for (p, &(i, i2, d)) in aux_pairs.iter().enumerate() {
                    let t = |j: usize| num_mu + p * nt + j;
                    for j in 0..nt {
                        lp.add_sparse_constraint(
                            &[(mu(i, j), 1.0), (mu(i2, j), -1.0), (t(j), -1.0)],
                            Relation::Le,
                            0.0,
                        );
                        lp.add_sparse_constraint(
                            &[(mu(i2, j), 1.0), (mu(i, j), -1.0), (t(j), -1.0)],
                            Relation::Le,
                            0.0,
                        );
                    }
                    let budget: Vec<(usize, f64)> = (0..nt).map(|j| (t(j), 1.0)).collect();
                    lp.add_sparse_constraint(&budget, Relation::Le, 2.0 * d);
                }
            }
            ProbMetricKind::RelativeLinf => {
                for i in 0..ns {
                    for i2 in (i + 1)..ns {
                        let d = space.dist(s_members[i], s_members[i2]);
                        if d == 0.0 {
                            continue;
                        }
                        let decay = (-d.min(MAX_RATIO_EXPONENT)).exp();
                        for j in 0..nt {
                            lp.add_sparse_constraint(
                                &[(mu(i, j), decay), (mu(i2, j), -1.0)],
                                Relation::Le,
                                0.0,
                            );
                            lp.add_sparse_constraint(
                                &[(mu(i2, j), decay), (mu(i, j), -1.0)],
                                Relation::Le,
                                0.0,
                            );
                        }
                    }
                }
            }
        }
        // Parity: u_j >= |mean_i mu_i(j) - 1/|T||, and sum u_j <= 2 eps.
        let inv_ns = 1.0 / ns as f64;
        let inv_nt = 1.0 / nt as f64;
        for j in 0..nt {
            let u = parity_base + j;
            let mut pos: Vec<(usize, f64)> = (0..ns).map(|i| (mu(i, j), inv_ns)).collect();
            pos.push((u, -1.0));
            lp.add_sparse_constraint(&pos, Relation::Le, inv_nt);
            let mut neg: Vec<(usize, f64)> = (0..ns).map(|i| (mu(i, j), -inv_ns)).collect();
            neg.push((u, -1.0));
            lp.add_sparse_constraint(&neg, Relation::Le, -inv_nt);
        }
        if let Some(rhs) = parity_rhs {
            let budget: Vec<(usize, f64)> = (0..nt).map(|j| (parity_base + j, 1.0)).collect();
            lp.add_sparse_constraint(&budget, Relation::Le, 2.0 * rhs);
        }
        lp
    };

    let sol = solve(&build(Some(eps)))?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            // Should not happen for eps >= 0 (the constant U_T plan is always
            // feasible); diagnose the smallest achievable slack anyway.
            let diag = solve(&build(None))?;
            let min_eps = if diag.status == LpStatus::Optimal {
                diag.objective_value.max(0.0)
            } else {
                f64::INFINITY
            };
            return Err(Error::InfeasibleParity { min_eps });
        }
        LpStatus::Unbounded => {
            return Err(Error::Internal("restricted earthmover LP reported unbounded".into()));
        }
    }
    let assignment = (0..ns)
        .map(|i| {
            clean_probability_row(&sol.values[mu(i, 0)..mu(i, 0) + nt])
                .and_then(OutcomeDistribution::new)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AaPlan {
        assignment,
        em_cost: sol.objective_value.max(0.0),
        eps,
        kind,
    })
}

/// Reweights the vendor loss through a stage-1 assignment:
/// L'(y,a) = sum_{x in S} mu_x(y) L(x,a) + L(y,a) for each y in T.
pub fn reweight_loss(
    plan: &AaPlan,
    inst: &FairnessInstance,
    s_members: &[usize],
    t_members: &[usize],
) -> Result<Vec<Vec<f64>>> {
    if plan.assignment.len() != s_members.len() {
        return Err(Error::DimensionMismatch {
            expected: s_members.len(),
            actual: plan.assignment.len(),
        });
    }
    validate_groups(inst.space(), s_members, t_members)?;
    let k = inst.num_outcomes();
    let mut reweighted = Vec::with_capacity(t_members.len());
    for (j, &y) in t_members.iter().enumerate() {
        let mut row = Vec::with_capacity(k);
        for a in 0..k {
            let transferred: f64 = s_members
                .iter()
                .enumerate()
                .map(|(i, &x)| plan.assignment[i].prob(j) * inst.loss(x, a))
                .sum();
            row.push(transferred + inst.loss(y, a));
        }
        reweighted.push(row);
    }
    Ok(reweighted)
}

/// Runs the full pipeline with loss reweighting enabled.
pub fn run_affirmative_action(
    inst: &FairnessInstance,
    s_members: &[usize],
    t_members: &[usize],
    eps: f64,
    kind: ProbMetricKind,
) -> Result<ComposedMap> {
    run_affirmative_action_with(inst, s_members, t_members, eps, kind, true)
}

/// Pipeline variant: `reweight = false` keeps the vendor loss on T untouched
/// (the vendor expresses no opinion about the protected group).
pub fn run_affirmative_action_with(
    inst: &FairnessInstance,
    s_members: &[usize],
    t_members: &[usize],
    eps: f64,
    kind: ProbMetricKind,
    reweight: bool,
) -> Result<ComposedMap> {
    validate_groups(inst.space(), s_members, t_members)?;
    if s_members.len() + t_members.len() != inst.space().len() {
        return Err(Error::invalid(
            "groups",
            "S and T must partition the population",
        ));
    }
    let plan = solve_em_plus_l(inst.space(), s_members, t_members, eps, kind)?;
    let t_loss = if reweight {
        reweight_loss(&plan, inst, s_members, t_members)?
    } else {
        t_members.iter().map(|&y| inst.loss_matrix()[y].clone()).collect()
    };
    let t_space = inst.space().restrict(t_members)?;
    let t_inst = FairnessInstance::new(t_space, inst.outcomes().to_vec(), t_loss)?;
    let inner = solve_fairness(&t_inst, kind)?.map;

    let k = inst.num_outcomes();
    let n = inst.space().len();
    let mut rows: Vec<Vec<f64>> = vec![Vec::new(); n];
    for (j, &y) in t_members.iter().enumerate() {
        rows[y] = inner.row(j).probs().to_vec();
    }
    for (i, &x) in s_members.iter().enumerate() {
        let mut row = vec![0.0; k];
        for j in 0..t_members.len() {
            let w = plan.assignment[i].prob(j);
            if w == 0.0 {
                continue;
            }
            for a in 0..k {
                row[a] += w * inner.row(j).prob(a);
            }
        }
        rows[x] = clean_probability_row(&row)?;
    }
    Ok(ComposedMap {
        map: StochasticMap::from_rows(rows)?,
        inner,
        plan,
        s_members: s_members.to_vec(),
        t_members: t_members.to_vec(),
    })
}

/// Measures the composed map's guarantees: parity between the groups,
/// within-group Lipschitz violations, and the average cross-group violation
/// that the stage-1 cost bounds.
pub fn evaluate_composed(
    composed: &ComposedMap,
    space: &MetricSpace,
    eps: f64,
) -> Result<ComposedReport> {
    let m = &composed.map;
    let n = space.len();
    if m.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: m.len(),
        });
    }
    let kind = composed.plan.kind;
    let s = &composed.s_members;
    let t = &composed.t_members;

    let parity_gap = if s.is_empty() {
        0.0
    } else {
        let us = GroupDistribution::uniform_over(n, s)?;
        let ut = GroupDistribution::uniform_over(n, t)?;
        tv_distance(&group_mixture(m, &us)?, &group_mixture(m, &ut)?)?
    };

    let within = |members: &[usize]| -> Result<f64> {
        let mut worst = f64::NEG_INFINITY;
        for (i, &x) in members.iter().enumerate() {
            for &y in &members[i + 1..] {
                let d = kind.distance(m.row(x), m.row(y))?;
                worst = worst.max(d - space.dist(x, y));
            }
        }
        Ok(worst)
    };
    let within_s_violation = within(s)?;
    let within_t_violation = within(t)?;

    let mut cross_violation_avg = 0.0;
    if !s.is_empty() {
        for &x in s {
            let mut worst = f64::NEG_INFINITY;
            for &y in t {
                let d = tv_distance(m.row(x), m.row(y))?;
                worst = worst.max(d - space.dist(x, y));
            }
            cross_violation_avg += worst.max(0.0);
        }
        cross_violation_avg /= s.len() as f64;
    }

    let tol = 1e-6;
    Ok(ComposedReport {
        parity_gap,
        within_s_violation,
        within_t_violation,
        cross_violation_avg,
        em_cost: composed.plan.em_cost,
        eps,
        parity_ok: parity_gap <= eps + tol,
        within_ok: within_s_violation <= tol && within_t_violation <= tol,
        cross_ok: cross_violation_avg <= composed.plan.em_cost + tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::solve_fairness;

    fn space_from(dist: Vec<Vec<f64>>) -> MetricSpace {
        let ids = (0..dist.len()).map(|i| format!("p{i}")).collect();
        let mut s = MetricSpace::new(ids, dist).unwrap();
        s.verify_metric();
        s
    }

    #[test]
    fn singleton_groups_pay_the_distance() {
        let space = space_from(vec![vec![0.0, 0.8], vec![0.8, 0.0]]);
        let plan =
            solve_em_plus_l(&space, &[0], &[1], 0.5, ProbMetricKind::TotalVariation).unwrap();
        assert_eq!(plan.assignment.len(), 1);
        assert!((plan.assignment[0].prob(0) - 1.0).abs() < 1e-9);
        assert!((plan.em_cost - 0.8).abs() < 1e-9);
    }

    #[test]
    fn zero_internal_distance_and_zero_eps_forces_uniform_rows() {
        // S = {0, 1} at distance 0; T = {2, 3}.
        let space = space_from(vec![
            vec![0.0, 0.0, 1.0, 2.0],
            vec![0.0, 0.0, 1.5, 1.2],
            vec![1.0, 1.5, 0.0, 1.0],
            vec![2.0, 1.2, 1.0, 0.0],
        ]);
        let plan =
            solve_em_plus_l(&space, &[0, 1], &[2, 3], 0.0, ProbMetricKind::TotalVariation)
                .unwrap();
        for row in &plan.assignment {
            assert!((row.prob(0) - 0.5).abs() < 1e-7);
            assert!((row.prob(1) - 0.5).abs() < 1e-7);
        }
        let expected = 0.5 * (0.5 * (1.0 + 2.0) + 0.5 * (1.5 + 1.2));
        assert!((plan.em_cost - expected).abs() < 1e-7);

        // Under the uniform plan each T-member picks up half of every
        // S-member's loss.
        let inst = FairnessInstance::new(
            space,
            vec!["0".into(), "1".into()],
            vec![
                vec![0.9, 0.2],
                vec![0.5, 0.6],
                vec![0.1, 0.4],
                vec![0.3, 0.8],
            ],
        )
        .unwrap();
        let lprime = reweight_loss(&plan, &inst, &[0, 1], &[2, 3]).unwrap();
        for (j, &y) in [2usize, 3].iter().enumerate() {
            for a in 0..2 {
                let expected = 0.5 * (inst.loss(0, a) + inst.loss(1, a)) + inst.loss(y, a);
                assert!((lprime[j][a] - expected).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn em_plus_l_matches_grid_oracle_on_2x2() {
        let d_s = 0.3;
        let space = space_from(vec![
            vec![0.0, d_s, 0.7, 1.1],
            vec![d_s, 0.0, 0.9, 0.8],
            vec![0.7, 0.9, 0.0, 0.6],
            vec![1.1, 0.8, 0.6, 0.0],
        ]);
        let eps = 0.1;
        let plan =
            solve_em_plus_l(&space, &[0, 1], &[2, 3], eps, ProbMetricKind::TotalVariation)
                .unwrap();
        // Oracle: rows are (p, 1-p) and (q, 1-q); D_tv = |p-q|; the
        // S-mixture is ((p+q)/2, 1-(p+q)/2) and U_T = (1/2, 1/2).
        let steps = 1000;
        let mut best = f64::INFINITY;
        for i in 0..=steps {
            let p = i as f64 / steps as f64;
            for j in 0..=steps {
                let q = j as f64 / steps as f64;
                if (p - q).abs() > d_s {
                    continue;
                }
                if ((p + q) / 2.0 - 0.5).abs() > eps {
                    continue;
                }
                let cost = 0.5 * (p * 0.7 + (1.0 - p) * 1.1 + q * 0.9 + (1.0 - q) * 0.8);
                best = best.min(cost);
            }
        }
        assert!((plan.em_cost - best).abs() < 2e-3, "lp {} vs oracle {best}", plan.em_cost);
    }

    #[test]
    fn plan_invariants_hold() {
        let space = space_from(vec![
            vec![0.0, 0.2, 0.9, 1.4],
            vec![0.2, 0.0, 0.8, 1.3],
            vec![0.9, 0.8, 0.0, 0.7],
            vec![1.4, 1.3, 0.7, 0.0],
        ]);
        let eps = 0.2;
        let plan =
            solve_em_plus_l(&space, &[0, 1], &[2, 3], eps, ProbMetricKind::TotalVariation)
                .unwrap();
        // within-S Lipschitz
        let d01 = space.dist(0, 1);
        let dtv = tv_distance(&plan.assignment[0], &plan.assignment[1]).unwrap();
        assert!(dtv <= d01 + 1e-6);
        // parity against U_T
        let mix: Vec<f64> = (0..2)
            .map(|j| (plan.assignment[0].prob(j) + plan.assignment[1].prob(j)) / 2.0)
            .collect();
        let gap = 0.5 * ((mix[0] - 0.5).abs() + (mix[1] - 0.5).abs());
        assert!(gap <= eps + 1e-6);
    }

    #[test]
    fn reweight_single_pair_adds_losses() {
        let space = space_from(vec![vec![0.0, 0.8], vec![0.8, 0.0]]);
        let inst = FairnessInstance::new(
            space.clone(),
            vec!["0".into(), "1".into()],
            vec![vec![0.9, 0.2], vec![0.1, 0.4]],
        )
        .unwrap();
        let plan =
            solve_em_plus_l(&space, &[0], &[1], 1.0, ProbMetricKind::TotalVariation).unwrap();
        let lprime = reweight_loss(&plan, &inst, &[0], &[1]).unwrap();
        assert!((lprime[0][0] - (0.9 + 0.1)).abs() < 1e-12);
        assert!((lprime[0][1] - (0.2 + 0.4)).abs() < 1e-12);
    }

    #[test]
    fn reweight_zero_mass_leaves_loss_unchanged() {
        let space = space_from(vec![
            vec![0.0, 0.1, 2.0],
            vec![0.1, 0.0, 2.0],
            vec![2.0, 2.0, 0.0],
        ]);
        let inst = FairnessInstance::new(
            space.clone(),
            vec!["0".into(), "1".into()],
            vec![vec![0.9, 0.2], vec![0.5, 0.5], vec![0.1, 0.4]],
        )
        .unwrap();
        // S = {0}; T = {1, 2}: transporting to the near member only.
        let plan =
            solve_em_plus_l(&space, &[0], &[1, 2], 0.5, ProbMetricKind::TotalVariation).unwrap();
        let lprime = reweight_loss(&plan, &inst, &[0], &[1, 2]).unwrap();
        // y = 2 receives what mu_0 puts on it; with eps = 0.5 the cheap plan
        // keeps everything on the near member 1.
        assert!(plan.assignment[0].prob(1) < 1e-9);
        assert!((lprime[1][0] - 0.1).abs() < 1e-9);
        assert!((lprime[1][1] - 0.4).abs() < 1e-9);
    }

    #[test]
    fn composed_singletons_share_the_argmin_row() {
        let space = space_from(vec![vec![0.0, 0.8], vec![0.8, 0.0]]);
        let inst = FairnessInstance::new(
            space.clone(),
            vec!["0".into(), "1".into()],
            vec![vec![0.9, 0.2], vec![0.1, 0.4]],
        )
        .unwrap();
        let composed =
            run_affirmative_action(&inst, &[0], &[1], 0.5, ProbMetricKind::TotalVariation)
                .unwrap();
        // L'(y, .) = (1.0, 0.6): argmin is outcome 1.
        for x in 0..2 {
            assert!((composed.map.row(x).prob(1) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_s_reduces_to_plain_fairness() {
        let space = space_from(vec![
            vec![0.0, 0.4, 0.9],
            vec![0.4, 0.0, 0.6],
            vec![0.9, 0.6, 0.0],
        ]);
        let inst = FairnessInstance::new(
            space.clone(),
            vec!["0".into(), "1".into()],
            vec![vec![0.9, 0.2], vec![0.1, 0.4], vec![0.3, 0.3]],
        )
        .unwrap();
        let composed =
            run_affirmative_action(&inst, &[], &[0, 1, 2], 1.0, ProbMetricKind::TotalVariation)
                .unwrap();
        let plain = solve_fairness(&inst, ProbMetricKind::TotalVariation).unwrap();
        for x in 0..3 {
            for a in 0..2 {
                assert!(
                    (composed.map.row(x).prob(a) - plain.map.row(x).prob(a)).abs() < 1e-8,
                    "row {x} outcome {a}"
                );
            }
        }
    }

    #[test]
    fn evaluate_reports_guarantees_on_a_random_fixture() {
        let space = space_from(vec![
            vec![0.0, 0.3, 1.1, 1.4, 0.9, 1.2],
            vec![0.3, 0.0, 1.0, 1.2, 0.8, 1.0],
            vec![1.1, 1.0, 0.0, 0.4, 0.5, 0.6],
            vec![1.4, 1.2, 0.4, 0.0, 0.6, 0.5],
            vec![0.9, 0.8, 0.5, 0.6, 0.0, 0.3],
            vec![1.2, 1.0, 0.6, 0.5, 0.3, 0.0],
        ]);
        let inst = FairnessInstance::new(
            space.clone(),
            vec!["0".into(), "1".into()],
            vec![
                vec![0.9, 0.1],
                vec![0.8, 0.3],
                vec![0.2, 0.7],
                vec![0.1, 0.9],
                vec![0.5, 0.5],
                vec![0.4, 0.6],
            ],
        )
        .unwrap();
        let eps = 0.15;
        let composed = run_affirmative_action(
            &inst,
            &[0, 1],
            &[2, 3, 4, 5],
            eps,
            ProbMetricKind::TotalVariation,
        )
        .unwrap();
        let report = evaluate_composed(&composed, &space, eps).unwrap();
        assert!(report.parity_ok, "{report:?}");
        assert!(report.within_ok, "{report:?}");
        assert!(report.cross_ok, "{report:?}");
    }

    #[test]
    fn two_cluster_scenario_satisfies_parity() {
        // Two tight clusters far apart; the protected group sits almost
        // entirely in the disadvantaged cluster. 20 individuals: S has 2
        // members (both in cluster 0), T has 2 members in cluster 0 and 16
        // in cluster 1.
        let n = 20;
        let cluster = |i: usize| if i < 4 { 0 } else { 1 };
        let mut dist = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    dist[i][j] = if cluster(i) == cluster(j) { 0.05 } else { 2.0 };
                }
            }
        }
        let space = space_from(dist);
        // Vendor prefers showing each cluster its own ad.
        let loss: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                if cluster(i) == 0 {
                    vec![0.0, 1.0]
                } else {
                    vec![1.0, 0.0]
                }
            })
            .collect();
        let inst =
            FairnessInstance::new(space.clone(), vec!["ad0".into(), "ad1".into()], loss).unwrap();
        let s_members = [0, 1];
        let t_members: Vec<usize> = (2..n).collect();
        let eps = 0.1;
        let composed = run_affirmative_action(
            &inst,
            &s_members,
            &t_members,
            eps,
            ProbMetricKind::TotalVariation,
        )
        .unwrap();
        let report = evaluate_composed(&composed, &space, eps).unwrap();
        assert!(report.parity_ok, "{report:?}");
        assert!(report.within_ok, "{report:?}");
        assert!(report.cross_ok, "{report:?}");
    }

    #[test]
    fn infeasible_parity_error_carries_diagnosis() {
        // eps < 0 is rejected up front.
        let space = space_from(vec![vec![0.0, 0.8], vec![0.8, 0.0]]);
        assert!(
            solve_em_plus_l(&space, &[0], &[1], -0.1, ProbMetricKind::TotalVariation).is_err()
        );
    }

    #[test]
    fn disabling_reweighting_changes_the_vendor_view() {
        // With reweighting, the protected member's strong preference for
        // outcome 1 dominates L'; without it, the T-member's own argmin wins.
        let space = space_from(vec![vec![0.0, 0.8], vec![0.8, 0.0]]);
        let inst = FairnessInstance::new(
            space,
            vec!["0".into(), "1".into()],
            vec![vec![1.0, 0.0], vec![0.4, 0.6]],
        )
        .unwrap();
        let with = run_affirmative_action_with(
            &inst, &[0], &[1], 0.5, ProbMetricKind::TotalVariation, true,
        )
        .unwrap();
        let without = run_affirmative_action_with(
            &inst, &[0], &[1], 0.5, ProbMetricKind::TotalVariation, false,
        )
        .unwrap();
        assert!((with.map.row(1).prob(1) - 1.0).abs() < 1e-9);
        assert!((without.map.row(1).prob(0) - 1.0).abs() < 1e-9);
    }
}
