//! Self-contained dense linear-program solver.
//!
//! Two-phase primal simplex on a dense tableau. Pricing starts with Dantzig's
//! rule (lowest-index tie-breaking) and switches to Bland's rule when the
//! objective stalls, which rules out cycling while keeping pivots fast on
//! non-degenerate instances. Equalities get artificial variables in phase 1.
//! Everything is deterministic: the same program always yields the same vertex.

use crate::error::{Error, Result};

/// Relation of a single linear constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// One row `coeffs . v <relation> rhs`.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// Minimization program `min c.v` subject to constraint rows and per-variable
/// bounds (default `[0, +inf)`).
#[derive(Debug, Clone)]
pub struct LinearProgram {
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
    bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    pub fn minimize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            objective,
            constraints: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); n],
        }
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    /// Adds a row given as sparse (index, coefficient) entries.
    pub fn add_sparse_constraint(&mut self, entries: &[(usize, f64)], relation: Relation, rhs: f64) {
        let mut coeffs = vec![0.0; self.objective.len()];
        for &(j, c) in entries {
            coeffs[j] += c;
        }
        self.add_constraint(coeffs, relation, rhs);
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.bounds[var] = (lower, upper);
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        if n == 0 {
            return Err(Error::MalformedProgram("no variables".into()));
        }
        if let Some(j) = self.objective.iter().position(|c| !c.is_finite()) {
            return Err(Error::MalformedProgram(format!("objective[{j}] is not finite")));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(Error::MalformedProgram(format!(
                    "constraint {i} has {} coefficients, expected {n}",
                    c.coeffs.len()
                )));
            }
            if c.coeffs.iter().any(|v| !v.is_finite()) || !c.rhs.is_finite() {
                return Err(Error::MalformedProgram(format!("constraint {i} has non-finite data")));
            }
        }
        for (j, &(l, u)) in self.bounds.iter().enumerate() {
            if l.is_nan() || u.is_nan() || l == f64::INFINITY || u == f64::NEG_INFINITY || l > u {
                return Err(Error::MalformedProgram(format!("bounds[{j}] = ({l}, {u})")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Solver verdict. `values` and `objective_value` are meaningful only when
/// `status == Optimal` (otherwise empty / NaN).
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub values: Vec<f64>,
    pub objective_value: f64,
}

impl LpSolution {
    fn non_optimal(status: LpStatus) -> Self {
        LpSolution {
            status,
            values: Vec::new(),
            objective_value: f64::NAN,
        }
    }
}

const EPS_COST: f64 = 1e-9;
const EPS_PIVOT: f64 = 1e-9;
const EPS_ZERO: f64 = 1e-12;
const EPS_PHASE1: f64 = 1e-8;

/// How an original variable maps onto nonnegative standard-form columns.
enum VarMap {
    Shifted { col: usize, lower: f64 },
    Split { pos: usize, neg: usize },
}

struct Tableau {
    m: usize,
    /// structural + slack + artificial columns; rhs lives at index `cols`
    cols: usize,
    stride: usize,
    a: Vec<f64>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    banned: Vec<bool>,
    scratch: Vec<f64>,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.stride + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.a[i * self.stride + self.cols]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let stride = self.stride;
        let start = row * stride;
        let inv = 1.0 / self.a[start + col];
        for j in 0..=self.cols {
            self.a[start + j] *= inv;
        }
        self.a[start + col] = 1.0;
        self.scratch.clear();
        self.scratch.extend_from_slice(&self.a[start..start + stride]);
        for i in 0..self.m {
            if i == row {
                continue;
            }
            let base = i * stride;
            let factor = self.a[base + col];
            if factor.abs() <= EPS_ZERO {
                self.a[base + col] = 0.0;
                continue;
            }
            let dst = &mut self.a[base..base + stride];
            for (d, s) in dst.iter_mut().zip(&self.scratch) {
                *d -= factor * s;
            }
            dst[col] = 0.0;
        }
        let factor = self.cost[col];
        if factor.abs() > EPS_ZERO {
            for (c, s) in self.cost.iter_mut().zip(&self.scratch) {
                *c -= factor * s;
            }
        }
        self.cost[col] = 0.0;
        self.basis[row] = col;
    }

    fn entering_dantzig(&self) -> Option<usize> {
        let mut best = None;
        let mut best_cost = -EPS_COST;
        for j in 0..self.cols {
            if self.banned[j] {
                continue;
            }
            let c = self.cost[j];
            if c < best_cost {
                best_cost = c;
                best = Some(j);
            }
        }
        best
    }

    fn entering_bland(&self) -> Option<usize> {
        (0..self.cols).find(|&j| !self.banned[j] && self.cost[j] < -EPS_COST)
    }

    /// Min-ratio row; ties broken by the smallest basic-variable index.
    fn leaving(&self, col: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.m {
            let a = self.at(i, col);
            if a <= EPS_PIVOT {
                continue;
            }
            let ratio = self.rhs(i).max(0.0) / a;
            match best {
                None => best = Some((i, ratio)),
                Some((bi, br)) => {
                    if ratio < br - EPS_ZERO
                        || (ratio <= br + EPS_ZERO && self.basis[i] < self.basis[bi])
                    {
                        best = Some((i, ratio));
                    }
                }
            }
        }
        best.map(|(i, _)| i)
    }

    fn objective(&self) -> f64 {
        -self.cost[self.cols]
    }

    fn run_phase(&mut self) -> Result<PhaseOutcome> {
        // Generous cap; Bland's rule guarantees finite termination well below it.
        let cap = 20_000 + 200 * (self.m + self.cols);
        let stall_limit = 100 + 2 * self.m;
        let mut bland = false;
        let mut stall = 0usize;
        let mut last = self.objective();
        for _ in 0..cap {
            let entering = if bland {
                self.entering_bland()
            } else {
                self.entering_dantzig()
            };
            let Some(col) = entering else {
                return Ok(PhaseOutcome::Optimal);
            };
            let Some(row) = self.leaving(col) else {
                return Ok(PhaseOutcome::Unbounded);
            };
            self.pivot(row, col);
            let z = self.objective();
            if last - z > 1e-12 {
                stall = 0;
                last = z;
            } else {
                stall += 1;
                if stall > stall_limit {
                    bland = true;
                }
            }
        }
        Err(Error::Internal("simplex iteration cap exceeded".into()))
    }
}

/// Solves a linear program. `Infeasible` and `Unbounded` come back as statuses;
/// only structurally malformed programs are errors.
pub fn solve(p: &LinearProgram) -> Result<LpSolution> {
    p.validate()?;

    // Map variables onto nonnegative columns.
    let n0 = p.num_vars();
    let mut var_map = Vec::with_capacity(n0);
    let mut n_structural = 0usize;
    for &(l, _) in p.bounds() {
        if l.is_finite() {
            var_map.push(VarMap::Shifted {
                col: n_structural,
                lower: l,
            });
            n_structural += 1;
        } else {
            var_map.push(VarMap::Split {
                pos: n_structural,
                neg: n_structural + 1,
            });
            n_structural += 2;
        }
    }

    // Constraint rows in structural columns, then upper-bound rows.
    struct Row {
        coeffs: Vec<f64>,
        relation: Relation,
        rhs: f64,
    }
    let mut rows = Vec::with_capacity(p.num_constraints());
    for c in p.constraints() {
        let mut coeffs = vec![0.0; n_structural];
        let mut rhs = c.rhs;
        for (j, &v) in c.coeffs.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            match var_map[j] {
                VarMap::Shifted { col, lower } => {
                    coeffs[col] += v;
                    rhs -= v * lower;
                }
                VarMap::Split { pos, neg } => {
                    coeffs[pos] += v;
                    coeffs[neg] -= v;
                }
            }
        }
        rows.push(Row {
            coeffs,
            relation: c.relation,
            rhs,
        });
    }
    for (j, &(_, u)) in p.bounds().iter().enumerate() {
        if !u.is_finite() {
            continue;
        }
        let mut coeffs = vec![0.0; n_structural];
        let rhs = match var_map[j] {
            VarMap::Shifted { col, lower } => {
                coeffs[col] = 1.0;
                u - lower
            }
            VarMap::Split { pos, neg } => {
                coeffs[pos] = 1.0;
                coeffs[neg] = -1.0;
                u
            }
        };
        rows.push(Row {
            coeffs,
            relation: Relation::Le,
            rhs,
        });
    }

    // Equilibrate: divide each row by a power of two near its largest
    // coefficient. Lossless in floating point, and keeps tableaux with mixed
    // coefficient scales well conditioned.
    for row in &mut rows {
        let max = row.coeffs.iter().fold(0.0_f64, |a, &c| a.max(c.abs()));
        if max > 0.0 {
            let factor = max.log2().round().exp2();
            if factor != 1.0 {
                for c in &mut row.coeffs {
                    *c /= factor;
                }
                row.rhs /= factor;
            }
        }
    }

    // Normalize to nonnegative rhs, then attach slack/artificial columns.
    for row in &mut rows {
        if row.rhs < 0.0 {
            for v in &mut row.coeffs {
                *v = -*v;
            }
            row.rhs = -row.rhs;
            row.relation = match row.relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }
    let m = rows.len();
    let n_slack = rows
        .iter()
        .filter(|r| r.relation != Relation::Eq)
        .count();
    let n_artificial = rows
        .iter()
        .filter(|r| r.relation != Relation::Le)
        .count();
    let cols = n_structural + n_slack + n_artificial;
    let stride = cols + 1;
    let first_artificial = n_structural + n_slack;

    let mut t = Tableau {
        m,
        cols,
        stride,
        a: vec![0.0; m * stride],
        cost: vec![0.0; stride],
        basis: vec![0; m],
        banned: vec![false; cols],
        scratch: Vec::with_capacity(stride),
    };
    let mut slack_idx = n_structural;
    let mut art_idx = first_artificial;
    for (i, row) in rows.iter().enumerate() {
        let base = i * stride;
        t.a[base..base + n_structural].copy_from_slice(&row.coeffs);
        t.a[base + cols] = row.rhs;
        match row.relation {
            Relation::Le => {
                t.a[base + slack_idx] = 1.0;
                t.basis[i] = slack_idx;
                slack_idx += 1;
            }
            Relation::Ge => {
                t.a[base + slack_idx] = -1.0;
                slack_idx += 1;
                t.a[base + art_idx] = 1.0;
                t.basis[i] = art_idx;
                art_idx += 1;
            }
            Relation::Eq => {
                t.a[base + art_idx] = 1.0;
                t.basis[i] = art_idx;
                art_idx += 1;
            }
        }
    }

    // Phase 1: minimize the sum of artificial variables.
    if n_artificial > 0 {
        for j in first_artificial..cols {
            t.cost[j] = 1.0;
        }
        for i in 0..m {
            if t.basis[i] >= first_artificial {
                let base = i * stride;
                for j in 0..=cols {
                    t.cost[j] -= t.a[base + j];
                }
            }
        }
        match t.run_phase()? {
            PhaseOutcome::Optimal => {}
            PhaseOutcome::Unbounded => {
                return Err(Error::Internal("phase 1 reported unbounded".into()));
            }
        }
        if t.objective() > EPS_PHASE1 {
            return Ok(LpSolution::non_optimal(LpStatus::Infeasible));
        }
        // Drive zero-level artificials out of the basis. Rows that are zero
        // across all real columns are redundant and stay inert.
        for i in 0..m {
            if t.basis[i] < first_artificial {
                continue;
            }
            let base = i * stride;
            if let Some(j) = (0..first_artificial).find(|&j| t.a[base + j].abs() > EPS_PIVOT) {
                t.pivot(i, j);
            }
        }
        for j in first_artificial..cols {
            t.banned[j] = true;
        }
    }

    // Phase 2: original objective expressed over structural columns.
    let mut cost = vec![0.0; stride];
    for (j, &c) in p.objective().iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        match var_map[j] {
            VarMap::Shifted { col, .. } => cost[col] += c,
            VarMap::Split { pos, neg } => {
                cost[pos] += c;
                cost[neg] -= c;
            }
        }
    }
    t.cost = cost;
    for i in 0..m {
        let cb = t.cost[t.basis[i]];
        if cb.abs() > EPS_ZERO {
            let base = i * stride;
            for j in 0..=cols {
                t.cost[j] -= cb * t.a[base + j];
            }
            t.cost[t.basis[i]] = 0.0;
        }
    }
    match t.run_phase()? {
        PhaseOutcome::Optimal => {}
        PhaseOutcome::Unbounded => {
            return Ok(LpSolution::non_optimal(LpStatus::Unbounded));
        }
    }

    // Read the vertex back in original coordinates.
    let mut structural = vec![0.0; n_structural];
    for i in 0..m {
        if t.basis[i] < n_structural {
            structural[t.basis[i]] = t.rhs(i);
        }
    }
    let values: Vec<f64> = var_map
        .iter()
        .map(|vm| match *vm {
            VarMap::Shifted { col, lower } => lower + structural[col],
            VarMap::Split { pos, neg } => structural[pos] - structural[neg],
        })
        .collect();
    let objective_value = p
        .objective()
        .iter()
        .zip(&values)
        .map(|(c, v)| c * v)
        .sum();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        values,
        objective_value,
    })
}
