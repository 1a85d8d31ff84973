//! Statistical parity, worst-case bias LPs, and earthmover distances.
//!
//! `parity_gap` measures how a given map treats two groups. The bias LPs
//! answer the worst-case question: how large can that gap get over all
//! Lipschitz maps into two outcomes? The earthmover LPs provide the
//! transport-theoretic counterpart the bias is compared against.

use crate::error::{Error, Result};
use crate::lp::{solve, LinearProgram, LpStatus, Relation};
use crate::prob::{
    clean_probability_row, group_mixture, tv_distance, OutcomeDistribution, StochasticMap,
};
use crate::space::{GroupDistribution, MetricSpace};

/// See `fairness`: same cap, same argument.
const MAX_RATIO_EXPONENT: f64 = 30.0;

/// Which earthmover formulation to solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmForm {
    /// Marginal equalities on both sides; valid for any distance function.
    General,
    /// Net-flow balance form; valid only when the space is a verified metric.
    MetricSimplified,
}

/// Optimal transport plan between two group distributions.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    pub flow: Vec<Vec<f64>>,
    pub cost: f64,
    pub form: EmForm,
}

/// Worst-case parity gap over Lipschitz maps, with a binary witness map
/// achieving it.
#[derive(Debug, Clone)]
pub struct BiasReport {
    pub value: f64,
    pub witness: StochasticMap,
}

/// Both sides of the bias-vs-earthmover comparison.
#[derive(Debug, Clone)]
pub struct EmTvReport {
    pub bias: f64,
    pub em_cost: f64,
    pub max_distance: f64,
    /// bias <= em_cost + 1e-6 (holds for any true metric).
    pub upper_bound_holds: bool,
    /// |bias - em_cost| <= 1e-6 (expected when additionally all distances <= 1).
    pub equality_holds: bool,
}

fn check_alignment(space: &MetricSpace, g: &GroupDistribution) -> Result<()> {
    if g.len() != space.len() {
        return Err(Error::DimensionMismatch {
            expected: space.len(),
            actual: g.len(),
        });
    }
    Ok(())
}

/// Total variation distance between the two group mixtures of a map.
pub fn parity_gap(
    m: &StochasticMap,
    s: &GroupDistribution,
    t: &GroupDistribution,
) -> Result<f64> {
    tv_distance(&group_mixture(m, s)?, &group_mixture(m, t)?)
}

/// Observation and inference consequences of (approximate) parity for an
/// outcome set O: the gap in Pr[M(x) in O | x in group] across the groups,
/// and the gap in the posterior Pr[x in group | M(x) in O].
///
/// Group-conditional probabilities draw x from `base` restricted to the
/// group and renormalized; the posterior draws x from `base` outright. The
/// posterior is undefined (None) when Pr[M(x) in O] = 0.
pub fn parity_consequences(
    m: &StochasticMap,
    base: &GroupDistribution,
    s_members: &[usize],
    t_members: &[usize],
    outcomes: &[usize],
) -> Result<(f64, Option<f64>)> {
    if base.len() != m.len() {
        return Err(Error::DimensionMismatch {
            expected: m.len(),
            actual: base.len(),
        });
    }
    for &x in s_members.iter().chain(t_members) {
        if x >= m.len() {
            return Err(Error::invalid("group", format!("member index {x} out of range")));
        }
    }
    if let Some(&a) = outcomes.iter().find(|&&a| a >= m.num_outcomes()) {
        return Err(Error::invalid("outcome set", format!("outcome index {a} out of range")));
    }
    let mass = |members: &[usize]| -> f64 { members.iter().map(|&x| base.weight(x)).sum() };
    let joint = |members: &[usize]| -> f64 {
        members
            .iter()
            .map(|&x| base.weight(x) * m.row(x).mass(outcomes))
            .sum()
    };
    let (ps, pt) = (mass(s_members), mass(t_members));
    if ps <= 0.0 || pt <= 0.0 {
        return Err(Error::invalid("group", "group has zero base mass"));
    }
    let (js, jt) = (joint(s_members), joint(t_members));
    let observation_gap = (js / ps - jt / pt).abs();

    let total: f64 = (0..m.len())
        .map(|x| base.weight(x) * m.row(x).mass(outcomes))
        .sum();
    let posterior_gap = if total > 0.0 {
        Some(((js - jt) / total).abs())
    } else {
        None
    };
    Ok((observation_gap, posterior_gap))
}

/// Collapses a map to two outcomes while preserving the Lipschitz property
/// and the parity gap between `s` and `t`. Outcome 0 collects the outcomes
/// where the s-mixture strictly exceeds the t-mixture.
pub fn binarize(
    m: &StochasticMap,
    s: &GroupDistribution,
    t: &GroupDistribution,
) -> Result<StochasticMap> {
    let mu_s = group_mixture(m, s)?;
    let mu_t = group_mixture(m, t)?;
    let favored: Vec<usize> = (0..m.num_outcomes())
        .filter(|&a| mu_s.prob(a) > mu_t.prob(a))
        .collect();
    let rows = m
        .rows()
        .iter()
        .map(|row| {
            let p = row.mass(&favored).clamp(0.0, 1.0);
            OutcomeDistribution::new(vec![p, (1.0 - p).max(0.0)])
        })
        .collect::<Result<Vec<_>>>()?;
    StochasticMap::new(rows)
}

/// Worst-case parity gap over (D_tv, d)-Lipschitz maps into two outcomes.
///
/// One variable per individual (the probability of outcome 0); the Lipschitz
/// constraint is the pair of difference rows |p_x - p_y| <= d(x,y). Pairs at
/// distance zero become equalities, pairs at distance >= 1 are vacuous.
pub fn bias_tv(
    space: &MetricSpace,
    s: &GroupDistribution,
    t: &GroupDistribution,
) -> Result<BiasReport> {
    check_alignment(space, s)?;
    check_alignment(space, t)?;
    let n = space.len();
    let objective: Vec<f64> = (0..n).map(|x| t.weight(x) - s.weight(x)).collect();
    let mut lp = LinearProgram::minimize(objective);
    for x in 0..n {
        lp.set_bounds(x, 0.0, 1.0);
    }
    for x in 0..n {
        for y in (x + 1)..n {
            let d = space.dist(x, y);
            if d == 0.0 {
                lp.add_sparse_constraint(&[(x, 1.0), (y, -1.0)], Relation::Eq, 0.0);
            } else if d < 1.0 {
                lp.add_sparse_constraint(&[(x, 1.0), (y, -1.0)], Relation::Le, d);
                lp.add_sparse_constraint(&[(y, 1.0), (x, -1.0)], Relation::Le, d);
            }
        }
    }
    let sol = solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Internal(format!(
            "bias LP reported {:?}, yet constant maps are always feasible",
            sol.status
        )));
    }
    let rows = sol
        .values
        .iter()
        .map(|&p| {
            let p = p.clamp(0.0, 1.0);
            OutcomeDistribution::new(vec![p, (1.0 - p).max(0.0)])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BiasReport {
        value: (-sol.objective_value).clamp(0.0, 1.0),
        witness: StochasticMap::new(rows)?,
    })
}

/// Worst-case parity gap over (D_inf, d)-Lipschitz maps into two outcomes,
/// computed from the primal LP with ratio rows mu_x(a) <= e^{d(x,y)} mu_y(a).
pub fn bias_inf(
    space: &MetricSpace,
    s: &GroupDistribution,
    t: &GroupDistribution,
) -> Result<BiasReport> {
    check_alignment(space, s)?;
    check_alignment(space, t)?;
    let n = space.len();
    let mu = |x: usize, a: usize| 2 * x + a;
    let mut objective = vec![0.0; 2 * n];
    for x in 0..n {
        objective[mu(x, 0)] = t.weight(x) - s.weight(x);
    }
    let mut lp = LinearProgram::minimize(objective);
    for x in 0..n {
        lp.add_sparse_constraint(&[(mu(x, 0), 1.0), (mu(x, 1), 1.0)], Relation::Eq, 1.0);
    }
    for x in 0..n {
        for y in (x + 1)..n {
            let d = space.dist(x, y);
            if d == 0.0 {
                for a in 0..2 {
                    lp.add_sparse_constraint(
                        &[(mu(x, a), 1.0), (mu(y, a), -1.0)],
                        Relation::Eq,
                        0.0,
                    );
                }
                continue;
            }
            // pre-scaled ratio rows, as in the fairness LP
            let decay = (-d.min(MAX_RATIO_EXPONENT)).exp();
            for a in 0..2 {
                lp.add_sparse_constraint(&[(mu(x, a), decay), (mu(y, a), -1.0)], Relation::Le, 0.0);
                lp.add_sparse_constraint(&[(mu(y, a), decay), (mu(x, a), -1.0)], Relation::Le, 0.0);
            }
        }
    }
    let sol = solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Internal(format!(
            "bias LP reported {:?}, yet constant maps are always feasible",
            sol.status
        )));
    }
    let rows = (0..n)
        .map(|x| clean_probability_row(&sol.values[2 * x..2 * x + 2]))
        .collect::<Result<Vec<_>>>()?;
    Ok(BiasReport {
        value: (-sol.objective_value).clamp(0.0, 1.0),
        witness: StochasticMap::from_rows(rows)?,
    })
}

/// Optimal transport between `s` and `t` with per-unit cost given by the
/// space's distances.
///
/// The metric-simplified form replaces the marginal equalities with net-flow
/// balance rows; its value agrees with the general form on true metrics, so
/// it refuses to run on spaces whose triangle inequality was never verified.
pub fn earthmover(
    space: &MetricSpace,
    s: &GroupDistribution,
    t: &GroupDistribution,
    form: EmForm,
) -> Result<TransportPlan> {
    check_alignment(space, s)?;
    check_alignment(space, t)?;
    if form == EmForm::MetricSimplified && !space.is_true_metric() {
        return Err(Error::MetricNotVerified(
            "the net-flow earthmover form is only valid on a true metric",
        ));
    }
    let n = space.len();
    let h = |x: usize, y: usize| x * n + y;
    let mut objective = vec![0.0; n * n];
    for x in 0..n {
        for y in 0..n {
            objective[h(x, y)] = space.dist(x, y);
        }
    }
    let mut lp = LinearProgram::minimize(objective);
    match form {
        EmForm::General => {
            for x in 0..n {
                let row: Vec<(usize, f64)> = (0..n).map(|y| (h(x, y), 1.0)).collect();
                lp.add_sparse_constraint(&row, Relation::Eq, s.weight(x));
            }
            for y in 0..n {
                let col: Vec<(usize, f64)> = (0..n).map(|x| (h(x, y), 1.0)).collect();
                lp.add_sparse_constraint(&col, Relation::Eq, t.weight(y));
            }
        }
        EmForm::MetricSimplified => {
            // sum_y h(x,y) - sum_y h(y,x) = S(x) - T(x); the self-loop cancels.
            for x in 0..n {
                let mut entries = Vec::with_capacity(2 * n);
                for y in 0..n {
                    if y == x {
                        continue;
                    }
                    entries.push((h(x, y), 1.0));
                    entries.push((h(y, x), -1.0));
                }
                lp.add_sparse_constraint(&entries, Relation::Eq, s.weight(x) - t.weight(x));
            }
        }
    }
    let sol = solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Internal(format!(
            "earthmover LP reported {:?}, yet a product plan is always feasible",
            sol.status
        )));
    }
    let flow: Vec<Vec<f64>> = (0..n)
        .map(|x| (0..n).map(|y| sol.values[h(x, y)].max(0.0)).collect())
        .collect();
    Ok(TransportPlan {
        flow,
        cost: sol.objective_value.max(0.0),
        form,
    })
}

/// Solves both sides of the bias/earthmover comparison and records which of
/// the two relations (upper bound, equality) hold at tolerance 1e-6.
pub fn verify_em_tv(
    space: &MetricSpace,
    s: &GroupDistribution,
    t: &GroupDistribution,
) -> Result<EmTvReport> {
    let bias = bias_tv(space, s, t)?.value;
    let em_cost = earthmover(space, s, t, EmForm::General)?.cost;
    let mut max_distance = 0.0_f64;
    for x in 0..space.len() {
        for y in (x + 1)..space.len() {
            max_distance = max_distance.max(space.dist(x, y));
        }
    }
    Ok(EmTvReport {
        bias,
        em_cost,
        max_distance,
        upper_bound_holds: bias <= em_cost + 1e-6,
        equality_holds: (bias - em_cost).abs() <= 1e-6,
    })
}
