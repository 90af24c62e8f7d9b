//! Dense bounded-variable simplex for the small LPs this solver needs:
//! knapsack relaxations, the z-cut bound LPs, and hyperplane-constrained
//! initialization LPs. Variables live in [0,1], rows are <= / >= plus at
//! most one equality, and row duals (shadow prices) are extracted.

use crate::instance::MkpInstance;
use thiserror::Error;

pub const FEAS_TOL: f64 = 1e-9;
pub const DUAL_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub sense: RowSense,
    pub rhs: f64,
}

/// An LP over variables bounded to [0,1]: inequality rows plus at most one
/// equality row.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    pub equality: Option<(Vec<f64>, f64)>,
}

impl LinearProgram {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    fn check(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        for row in &self.rows {
            if row.coeffs.len() != n {
                return Err(LpError::DimensionMismatch);
            }
            if !row.rhs.is_finite() || row.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(LpError::NonFinite);
            }
        }
        if let Some((coeffs, rhs)) = &self.equality {
            if coeffs.len() != n {
                return Err(LpError::DimensionMismatch);
            }
            if !rhs.is_finite() || coeffs.iter().any(|c| !c.is_finite()) {
                return Err(LpError::NonFinite);
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite);
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

/// Solver output. `row_duals[i]` is the value of relaxing row i's rhs by
/// +1 under the user-facing sense; `equality_dual` likewise for the
/// equality row when present. Both are meaningful only at `Optimal`.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub row_duals: Vec<f64>,
    pub equality_dual: Option<f64>,
}

impl LpSolution {
    fn non_optimal(status: LpStatus, n: usize) -> Self {
        LpSolution {
            status,
            x: vec![0.0; n],
            objective: f64::NAN,
            row_duals: Vec::new(),
            equality_dual: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("row length does not match variable count")]
    DimensionMismatch,
    #[error("non-finite coefficient or rhs")]
    NonFinite,
    #[error("the linear program already has an equality row")]
    SecondEqualityRow,
    #[error("simplex did not converge within the iteration limit")]
    NumericalFailure,
}

/// LP relaxation of an MKP: max p·x, knapsack rows as <=, x in [0,1].
pub fn relax_mkp(inst: &MkpInstance) -> LinearProgram {
    LinearProgram {
        sense: Sense::Max,
        objective: inst.profits.clone(),
        rows: inst
            .consumption
            .iter()
            .zip(&inst.capacities)
            .map(|(coeffs, &cap)| Row {
                coeffs: coeffs.clone(),
                sense: RowSense::Le,
                rhs: cap,
            })
            .collect(),
        equality: None,
    }
}

/// Add the cardinality hyperplane `sum_j x_j = k`.
pub fn with_hyperplane(lp: &LinearProgram, k: f64) -> Result<LinearProgram, LpError> {
    if lp.equality.is_some() {
        return Err(LpError::SecondEqualityRow);
    }
    let mut out = lp.clone();
    out.equality = Some((vec![1.0; lp.num_vars()], k));
    Ok(out)
}

/// The bound LP for a binary lower bound `z`: optimize `sum_j x_j` over
/// the knapsack rows plus the improvement cut `p·x >= z + 1`.
pub fn bounds_lp(inst: &MkpInstance, z: f64, sense: Sense) -> LinearProgram {
    let mut rows: Vec<Row> = inst
        .consumption
        .iter()
        .zip(&inst.capacities)
        .map(|(coeffs, &cap)| Row {
            coeffs: coeffs.clone(),
            sense: RowSense::Le,
            rhs: cap,
        })
        .collect();
    rows.push(Row {
        coeffs: inst.profits.clone(),
        sense: RowSense::Ge,
        rhs: z + 1.0,
    });
    LinearProgram {
        sense,
        objective: vec![1.0; inst.n],
        rows,
        equality: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
}

struct Tableau {
    nrows: usize,
    ncols: usize,
    n_structural: usize,
    tab: Vec<f64>,   // nrows x ncols, row-major: B^-1 A
    rhs: Vec<f64>,   // original (sign-normalized) rhs
    beta: Vec<f64>,  // current values of basic variables
    basis: Vec<usize>,
    status: Vec<VarStatus>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    reduced: Vec<f64>, // reduced costs for the current phase
    art_start: usize,
    degenerate_pivots: usize,
    bland: bool,
}

impl Tableau {
    #[inline]
    fn t(&self, i: usize, j: usize) -> f64 {
        self.tab[i * self.ncols + j]
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.status[j] {
            VarStatus::AtLower => self.lo[j],
            VarStatus::AtUpper => self.hi[j],
            VarStatus::Basic => unreachable!(),
        }
    }

    fn compute_reduced_costs(&mut self, costs: &[f64]) {
        // d_j = c_j - c_B . T[:,j]
        let mut cb = vec![0.0; self.nrows];
        for i in 0..self.nrows {
            cb[i] = costs[self.basis[i]];
        }
        for j in 0..self.ncols {
            let mut acc = 0.0;
            for i in 0..self.nrows {
                let c = cb[i];
                if c != 0.0 {
                    acc += c * self.t(i, j);
                }
            }
            self.reduced[j] = costs[j] - acc;
        }
    }

    fn choose_entering(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.ncols {
            if self.status[j] == VarStatus::Basic || self.hi[j] - self.lo[j] < FEAS_TOL {
                continue;
            }
            let d = self.reduced[j];
            let improving = match self.status[j] {
                VarStatus::AtLower => d > DUAL_TOL * 0.01,
                VarStatus::AtUpper => d < -DUAL_TOL * 0.01,
                VarStatus::Basic => false,
            };
            if !improving {
                continue;
            }
            if self.bland {
                return Some(j);
            }
            let score = d.abs();
            match best {
                Some((_, s)) if s >= score => {}
                _ => best = Some((j, score)),
            }
        }
        best.map(|(j, _)| j)
    }

    /// One simplex iteration. Returns false when no entering variable
    /// remains (current phase optimal).
    fn iterate(&mut self) -> Result<bool, LpStatus> {
        let Some(q) = self.choose_entering() else {
            return Ok(false);
        };
        let delta = if self.status[q] == VarStatus::AtLower { 1.0 } else { -1.0 };

        // Ratio test against basic bounds and the entering variable's own
        // opposite bound.
        let mut t_limit = self.hi[q] - self.lo[q]; // may be inf
        let mut leave: Option<(usize, bool, f64)> = None; // (row, hits lower, |pivot|)
        for i in 0..self.nrows {
            let alpha = self.t(i, q);
            let rate = delta * alpha;
            let b = self.basis[i];
            let (ratio, hits_lower) = if rate > 1e-11 {
                ((self.beta[i] - self.lo[b]).max(0.0) / rate, true)
            } else if rate < -1e-11 {
                if !self.hi[b].is_finite() {
                    continue;
                }
                ((self.hi[b] - self.beta[i]).max(0.0) / -rate, false)
            } else {
                continue;
            };
            if ratio < t_limit - 1e-12 {
                t_limit = ratio;
                leave = Some((i, hits_lower, alpha.abs()));
            } else if ratio < t_limit + 1e-12 {
                // Tie. Against the entering variable's own bound limit keep
                // the cheaper bound flip; between rows prefer the larger
                // pivot (Bland: lowest basis variable index).
                if let Some((r, _, amag)) = leave {
                    let better = if self.bland {
                        self.basis[i] < self.basis[r]
                    } else {
                        alpha.abs() > amag
                    };
                    if better {
                        t_limit = t_limit.min(ratio);
                        leave = Some((i, hits_lower, alpha.abs()));
                    }
                }
            }
        }

        if !t_limit.is_finite() {
            return Err(LpStatus::Unbounded);
        }
        if t_limit < 1e-10 {
            self.degenerate_pivots += 1;
            if self.degenerate_pivots > 5 * (self.nrows + self.n_structural) {
                self.bland = true;
            }
        }

        let step = delta * t_limit;
        match leave {
            None => {
                // Bound flip: entering travels to its opposite bound.
                for i in 0..self.nrows {
                    let a = self.t(i, q);
                    if a != 0.0 {
                        self.beta[i] -= step * a;
                    }
                }
                self.status[q] = match self.status[q] {
                    VarStatus::AtLower => VarStatus::AtUpper,
                    VarStatus::AtUpper => VarStatus::AtLower,
                    VarStatus::Basic => unreachable!(),
                };
            }
            Some((r, hits_lower, _)) => {
                let entering_value = self.nonbasic_value(q) + step;
                for i in 0..self.nrows {
                    if i != r {
                        let a = self.t(i, q);
                        if a != 0.0 {
                            self.beta[i] -= step * a;
                        }
                    }
                }
                let leaving = self.basis[r];
                self.status[leaving] =
                    if hits_lower { VarStatus::AtLower } else { VarStatus::AtUpper };
                self.basis[r] = q;
                self.status[q] = VarStatus::Basic;
                self.beta[r] = entering_value;
                self.pivot(r, q);
            }
        }
        Ok(true)
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let ncols = self.ncols;
        let piv = self.tab[r * ncols + q];
        debug_assert!(piv.abs() > 1e-12);
        let inv = 1.0 / piv;
        for j in 0..ncols {
            self.tab[r * ncols + j] *= inv;
        }
        self.tab[r * ncols + q] = 1.0;
        for i in 0..self.nrows {
            if i == r {
                continue;
            }
            let factor = self.tab[i * ncols + q];
            if factor != 0.0 {
                for j in 0..ncols {
                    self.tab[i * ncols + j] -= factor * self.tab[r * ncols + j];
                }
                self.tab[i * ncols + q] = 0.0;
            }
        }
        let dq = self.reduced[q];
        if dq != 0.0 {
            for j in 0..ncols {
                self.reduced[j] -= dq * self.tab[r * ncols + j];
            }
            self.reduced[q] = 0.0;
        }
    }

    /// Recompute basic values from scratch to shed accumulated drift:
    /// beta = B^-1 b - sum_{j nonbasic at upper} hi_j T[:,j].
    fn refresh_beta(&mut self) {
        let mut beta = vec![0.0; self.nrows];
        for k in 0..self.nrows {
            let bk = self.rhs[k];
            if bk != 0.0 {
                let col = self.art_start + k;
                for i in 0..self.nrows {
                    beta[i] += bk * self.t(i, col);
                }
            }
        }
        for j in 0..self.ncols {
            if self.status[j] == VarStatus::AtUpper && self.hi[j] != 0.0 {
                let hj = self.hi[j];
                for i in 0..self.nrows {
                    beta[i] -= hj * self.t(i, j);
                }
            }
        }
        self.beta = beta;
    }

    fn run_phase(&mut self) -> Result<(), LpError> {
        let max_iters = 200 * (self.nrows + self.ncols) + 1000;
        for _ in 0..max_iters {
            match self.iterate() {
                Ok(true) => {}
                Ok(false) => return Ok(()),
                Err(LpStatus::Unbounded) => return Err(LpError::NumericalFailure), // mapped by caller
                Err(_) => unreachable!(),
            }
        }
        Err(LpError::NumericalFailure)
    }
}

/// Solve the LP with a two-phase bounded-variable simplex. Deterministic:
/// Dantzig pricing with lowest-index ties, Bland fallback after
/// 5*(rows+n) degenerate pivots.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.check()?;
    let n = lp.num_vars();
    let n_ineq = lp.rows.len();
    let nrows = n_ineq + lp.equality.iter().count();
    if nrows == 0 {
        // Pure box problem: each variable goes to whichever bound helps.
        let max = lp.sense == Sense::Max;
        let x: Vec<f64> = lp
            .objective
            .iter()
            .map(|&c| if (c > 0.0) == max && c != 0.0 { 1.0 } else { 0.0 })
            .collect();
        let objective = dot(&lp.objective, &x);
        return Ok(LpSolution {
            status: LpStatus::Optimal,
            x,
            objective,
            row_duals: Vec::new(),
            equality_dual: None,
        });
    }

    let n_slack = n_ineq;
    let art_start = n + n_slack;
    let ncols = art_start + nrows;

    let mut tab = vec![0.0; nrows * ncols];
    let mut rhs = vec![0.0; nrows];
    // +1 maps internal duals back to the user row sense; flips on Ge
    // negation and again on rhs sign normalization.
    let mut row_sign = vec![1.0; nrows];

    for (i, row) in lp.rows.iter().enumerate() {
        let (mut coeffs, mut b, mut slack_coeff) = match row.sense {
            RowSense::Le => (row.coeffs.clone(), row.rhs, 1.0),
            RowSense::Ge => {
                row_sign[i] = -1.0;
                (row.coeffs.iter().map(|c| -c).collect::<Vec<_>>(), -row.rhs, 1.0)
            }
        };
        if b < 0.0 {
            row_sign[i] = -row_sign[i];
            for c in coeffs.iter_mut() {
                *c = -*c;
            }
            b = -b;
            slack_coeff = -slack_coeff;
        }
        for (j, &c) in coeffs.iter().enumerate() {
            tab[i * ncols + j] = c;
        }
        tab[i * ncols + n + i] = slack_coeff;
        tab[i * ncols + art_start + i] = 1.0;
        rhs[i] = b;
    }
    if let Some((coeffs, eq_rhs)) = &lp.equality {
        let i = n_ineq;
        let (coeffs, b) = if *eq_rhs < 0.0 {
            row_sign[i] = -1.0;
            (coeffs.iter().map(|c| -c).collect::<Vec<_>>(), -eq_rhs)
        } else {
            (coeffs.clone(), *eq_rhs)
        };
        for (j, &c) in coeffs.iter().enumerate() {
            tab[i * ncols + j] = c;
        }
        tab[i * ncols + art_start + i] = 1.0;
        rhs[i] = b;
    }

    let lo = vec![0.0; ncols];
    let mut hi = vec![1.0; ncols];
    for j in n..art_start {
        hi[j] = f64::INFINITY; // slacks
    }
    for j in art_start..ncols {
        hi[j] = f64::INFINITY; // artificials, phase 1
    }

    let mut status = vec![VarStatus::AtLower; ncols];
    let mut basis = Vec::with_capacity(nrows);
    for i in 0..nrows {
        basis.push(art_start + i);
        status[art_start + i] = VarStatus::Basic;
    }

    let mut t = Tableau {
        nrows,
        ncols,
        n_structural: n,
        tab,
        rhs: rhs.clone(),
        beta: rhs,
        basis,
        status,
        lo: lo.clone(),
        hi: hi.clone(),
        reduced: vec![0.0; ncols],
        art_start,
        degenerate_pivots: 0,
        bland: false,
    };

    // Phase 1: drive the artificials to zero.
    let mut phase1_costs = vec![0.0; ncols];
    for c in phase1_costs.iter_mut().skip(art_start) {
        *c = -1.0;
    }
    t.compute_reduced_costs(&phase1_costs);
    t.run_phase()?;
    t.refresh_beta();
    let art_sum: f64 = (0..nrows)
        .filter(|&i| t.basis[i] >= art_start)
        .map(|i| t.beta[i].max(0.0))
        .sum();
    let scale = 1.0 + t.rhs.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if art_sum > 1e-7 * scale {
        return Ok(LpSolution::non_optimal(LpStatus::Infeasible, n));
    }

    // Phase 2: fix artificials at zero, optimize the real objective.
    for j in art_start..ncols {
        t.hi[j] = 0.0;
        if t.status[j] == VarStatus::AtUpper {
            t.status[j] = VarStatus::AtLower;
        }
    }
    let obj_sign = if lp.sense == Sense::Max { 1.0 } else { -1.0 };
    let mut phase2_costs = vec![0.0; ncols];
    for (j, &c) in lp.objective.iter().enumerate() {
        phase2_costs[j] = obj_sign * c;
    }
    t.degenerate_pivots = 0;
    t.bland = false;
    t.compute_reduced_costs(&phase2_costs);
    let max_iters = 200 * (t.nrows + t.ncols) + 1000;
    let mut iters = 0usize;
    loop {
        match t.iterate() {
            Ok(true) => {
                iters += 1;
                if iters > max_iters {
                    return Err(LpError::NumericalFailure);
                }
            }
            Ok(false) => break,
            Err(LpStatus::Unbounded) => {
                return Ok(LpSolution::non_optimal(LpStatus::Unbounded, n));
            }
            Err(_) => unreachable!(),
        }
    }
    t.refresh_beta();

    let mut x = vec![0.0; n];
    for j in 0..n {
        x[j] = match t.status[j] {
            VarStatus::AtLower => 0.0,
            VarStatus::AtUpper => 1.0,
            VarStatus::Basic => 0.0,
        };
    }
    for i in 0..nrows {
        let b = t.basis[i];
        if b < n {
            x[b] = t.beta[i].clamp(0.0, 1.0);
        }
    }
    let objective = dot(&lp.objective, &x);

    // Duals from the artificial columns: T[:,art_i] = B^-1 e_i, so the
    // internal dual of row i is -(reduced cost of art_i).
    let mut internal_duals = Vec::with_capacity(nrows);
    for i in 0..nrows {
        internal_duals.push(-t.reduced[art_start + i]);
    }
    let mut row_duals = Vec::with_capacity(n_ineq);
    for i in 0..n_ineq {
        row_duals.push(obj_sign * row_sign[i] * internal_duals[i]);
    }
    let equality_dual = lp
        .equality
        .as_ref()
        .map(|_| obj_sign * row_sign[n_ineq] * internal_duals[n_ineq]);

    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
        row_duals,
        equality_dual,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Check primal feasibility and complementary slackness of a reported
/// optimum. Used by tests and the CLI debug path.
pub fn verify_optimal(lp: &LinearProgram, sol: &LpSolution) -> Result<(), String> {
    if sol.status != LpStatus::Optimal {
        return Err("not optimal".into());
    }
    let scale = 1.0
        + lp.rows
            .iter()
            .map(|r| r.rhs.abs())
            .fold(0.0f64, f64::max);
    for (j, &xj) in sol.x.iter().enumerate() {
        if !(-FEAS_TOL..=1.0 + FEAS_TOL).contains(&xj) {
            return Err(format!("x[{j}] = {xj} outside [0,1]"));
        }
    }
    for (i, row) in lp.rows.iter().enumerate() {
        let lhs = dot(&row.coeffs, &sol.x);
        let ok = match row.sense {
            RowSense::Le => lhs <= row.rhs + FEAS_TOL * scale,
            RowSense::Ge => lhs >= row.rhs - FEAS_TOL * scale,
        };
        if !ok {
            return Err(format!("row {i} violated: lhs {lhs}, rhs {}", row.rhs));
        }
        // complementary slackness: positive slack forces a zero dual
        let slack = (row.rhs - lhs).abs();
        if slack > DUAL_TOL * scale && sol.row_duals[i].abs() > DUAL_TOL * scale {
            return Err(format!(
                "complementary slackness broken on row {i}: slack {slack}, dual {}",
                sol.row_duals[i]
            ));
        }
    }
    if let Some((coeffs, rhs)) = &lp.equality {
        let lhs = dot(coeffs, &sol.x);
        if (lhs - rhs).abs() > FEAS_TOL * scale * 10.0 {
            return Err(format!("equality row violated: lhs {lhs}, rhs {rhs}"));
        }
    }
    if lp.sense == Sense::Max {
        for (i, row) in lp.rows.iter().enumerate() {
            if row.sense == RowSense::Le && sol.row_duals[i] < -DUAL_TOL * scale {
                return Err(format!("negative dual {} on <= row {i}", sol.row_duals[i]));
            }
        }
    }
    Ok(())
}
