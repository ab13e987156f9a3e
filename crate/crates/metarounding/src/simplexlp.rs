//! A dense two-phase primal simplex solver.
//!
//! The toolkit needs linear programming in three places: the covering
//! relaxation that produces fractional points, the weight-refinement step
//! of the rounding engine, and the benchmark values of the online harness.
//! All of these programs are small and dense, so a tableau implementation
//! is both sufficient and easy to make deterministic: identical inputs
//! walk through identical pivots, bit for bit.
//!
//! ```txt
//! minimize    c . x
//! subject to  A_k . x  (<= | >= | =)  b_k      for every row k
//!             lo_j <= x_j <= hi_j              for every variable j
//! ```
//!
//! Variables may have infinite bounds on either side.  Internally every
//! variable is shifted, mirrored, or split so that the standard form has
//! only non-negative variables; finite upper bounds become explicit rows.
//! Phase 1 minimizes the sum of artificial variables (rows that can host a
//! slack directly skip the artificial), phase 2 minimizes the objective,
//! and both phases pivot by Bland's anti-cycling rule: the entering column
//! is the lowest-index column with a negative reduced cost, and ratio-test
//! ties leave the row whose basic variable has the lowest index.
//!
//! [`enumerate_vertices`] exhaustively enumerates basic feasible solutions
//! for programs with at most eight variables.  It is intentionally naive —
//! an independent cross-check for the pivoting code, not a solver.

use thiserror::Error;

/// Row comparison sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    /// `A_k . x <= b_k`
    Le,
    /// `A_k . x >= b_k`
    Ge,
    /// `A_k . x = b_k`
    Eq,
}

/// Absolute feasibility tolerance for constraint residuals.
pub const FEASIBILITY_TOL: f64 = 1e-7;

/// Entries smaller than this never serve as pivots.
pub const PIVOT_TOL: f64 = 1e-10;

/// Default cap on total simplex pivots across both phases.
pub const DEFAULT_MAX_PIVOTS: usize = 1_000_000;

/// Largest variable count accepted by [`enumerate_vertices`].
const ENUMERATION_VAR_LIMIT: usize = 8;

/// Largest number of candidate bases [`enumerate_vertices`] will visit.
const ENUMERATION_BASIS_LIMIT: u128 = 3_000_000;

/// A dense linear program in row form.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    /// Objective coefficients (always minimized).
    pub minimize: Vec<f64>,
    /// Constraint rows, one coefficient per variable.
    pub rows: Vec<Vec<f64>>,
    /// Sense of each row.
    pub senses: Vec<Sense>,
    /// Right-hand side of each row.
    pub rhs: Vec<f64>,
    /// Per-variable bounds `(lo, hi)`; `lo` may be `-inf`, `hi` may be `+inf`.
    pub bounds: Vec<(f64, f64)>,
    /// Cap on total pivots before the solver gives up.
    pub max_pivots: usize,
}

impl LinearProgram {
    /// A program over `minimize.len()` variables with default bounds
    /// `[0, +inf)` and no rows.
    pub fn new(minimize: Vec<f64>) -> Self {
        let n = minimize.len();
        Self {
            minimize,
            rows: Vec::new(),
            senses: Vec::new(),
            rhs: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); n],
            max_pivots: DEFAULT_MAX_PIVOTS,
        }
    }

    /// Appends a constraint row.
    pub fn add_row(&mut self, coeffs: &[f64], sense: Sense, rhs: f64) {
        self.rows.push(coeffs.to_vec());
        self.senses.push(sense);
        self.rhs.push(rhs);
    }

    /// Number of variables.
    pub fn num_vars(&self) -> usize {
        self.minimize.len()
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.rows.len() != self.senses.len() || self.rows.len() != self.rhs.len() {
            return Err(LpError::DimensionMismatch {
                detail: format!(
                    "{} rows, {} senses, {} right-hand sides",
                    self.rows.len(),
                    self.senses.len(),
                    self.rhs.len()
                ),
            });
        }
        if self.bounds.len() != n {
            return Err(LpError::DimensionMismatch {
                detail: format!("{} bounds for {} variables", self.bounds.len(), n),
            });
        }
        for (k, row) in self.rows.iter().enumerate() {
            if row.len() != n {
                return Err(LpError::DimensionMismatch {
                    detail: format!("row {k} has {} coefficients for {n} variables", row.len()),
                });
            }
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(LpError::Numerical(format!(
                    "variable {j} has unusable bounds ({lo}, {hi})"
                )));
            }
        }
        Ok(())
    }
}

/// Terminal status of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    /// An optimal basic solution was found; `x` and `objective` are valid.
    Optimal,
    /// No point satisfies all constraints.
    Infeasible,
    /// The objective decreases without bound over the feasible region.
    Unbounded,
}

/// Result of a solve.  For non-optimal statuses `x` is empty and the
/// objective is NaN.
#[derive(Debug, Clone)]
pub struct LpSolution {
    /// How the solve terminated.
    pub status: LpStatus,
    /// Primal values, one per variable (empty unless optimal).
    pub x: Vec<f64>,
    /// Objective value at `x` (NaN unless optimal).
    pub objective: f64,
    /// Total pivots performed across both phases.
    pub iterations: usize,
}

/// Errors from the solver and the vertex enumerator.
#[derive(Debug, Error)]
pub enum LpError {
    /// Input arrays disagree in length.
    #[error("inconsistent program dimensions: {detail}")]
    DimensionMismatch { detail: String },

    /// The pivot cap was hit; usually a sign of numerical trouble.
    #[error("pivot limit of {limit} reached")]
    IterationLimit { limit: usize },

    /// The program exceeds what exhaustive enumeration will attempt.
    #[error("program too large for enumeration: {detail}")]
    TooLarge { detail: String },

    /// The arithmetic produced an unusable tableau or solution.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// How a structural column maps back to an original variable.
#[derive(Debug, Clone, Copy)]
enum VarBack {
    /// `x_var = lo + v`
    Shift { var: usize, lo: f64 },
    /// `x_var = hi - v`
    Mirror { var: usize, hi: f64 },
    /// `x_var += v` (positive part of a free variable)
    Pos { var: usize },
    /// `x_var -= v` (negative part of a free variable)
    Neg { var: usize },
}

/// Normalized row sense: all right-hand sides are non-negative and `Ge`
/// rows have strictly positive right-hand sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StdSense {
    Le,
    Ge,
    Eq,
}

/// The program rewritten over non-negative variables.
struct Standard {
    var_back: Vec<VarBack>,
    obj: Vec<f64>,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    senses: Vec<StdSense>,
    /// True when some bound pair is empty (`lo > hi`).
    empty_bounds: bool,
}

fn standardize(lp: &LinearProgram) -> Result<Standard, LpError> {
    lp.validate()?;
    let n = lp.num_vars();
    let mut var_back = Vec::new();
    let mut obj = Vec::new();
    // Column coefficients per original variable: (column index, sign, constant).
    let mut col_of_var: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut consts = vec![0.0; n];
    let mut ub_rows: Vec<(usize, f64)> = Vec::new();
    let mut empty_bounds = false;

    for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
        if lo > hi {
            empty_bounds = true;
        }
        if lo.is_finite() {
            let col = var_back.len();
            var_back.push(VarBack::Shift { var: j, lo });
            obj.push(lp.minimize[j]);
            col_of_var[j].push((col, 1.0));
            consts[j] = lo;
            if hi.is_finite() {
                ub_rows.push((col, hi - lo));
            }
        } else if hi.is_finite() {
            let col = var_back.len();
            var_back.push(VarBack::Mirror { var: j, hi });
            obj.push(-lp.minimize[j]);
            col_of_var[j].push((col, -1.0));
            consts[j] = hi;
        } else {
            let pos = var_back.len();
            var_back.push(VarBack::Pos { var: j });
            obj.push(lp.minimize[j]);
            col_of_var[j].push((pos, 1.0));
            let neg = var_back.len();
            var_back.push(VarBack::Neg { var: j });
            obj.push(-lp.minimize[j]);
            col_of_var[j].push((neg, -1.0));
        }
    }

    let ncols = var_back.len();
    let mut rows = Vec::with_capacity(lp.rows.len() + ub_rows.len());
    let mut rhs = Vec::with_capacity(lp.rows.len() + ub_rows.len());
    let mut senses = Vec::with_capacity(lp.rows.len() + ub_rows.len());

    for (k, row) in lp.rows.iter().enumerate() {
        let mut coeffs = vec![0.0; ncols];
        let mut shift = 0.0;
        for (j, &a) in row.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            shift += a * consts[j];
            for &(col, sign) in &col_of_var[j] {
                coeffs[col] += a * sign;
            }
        }
        let mut b = lp.rhs[k] - shift;
        let mut sense = match lp.senses[k] {
            Sense::Le => StdSense::Le,
            Sense::Ge => StdSense::Ge,
            Sense::Eq => StdSense::Eq,
        };
        if b < 0.0 {
            for c in coeffs.iter_mut() {
                *c = -*c;
            }
            b = -b;
            sense = match sense {
                StdSense::Le => StdSense::Ge,
                StdSense::Ge => StdSense::Le,
                StdSense::Eq => StdSense::Eq,
            };
        }
        if sense == StdSense::Ge && b == 0.0 {
            // A `>= 0` row is the same as `<= 0` after negation, which
            // admits a slack basis and spares an artificial variable.
            for c in coeffs.iter_mut() {
                *c = -*c;
            }
            sense = StdSense::Le;
        }
        rows.push(coeffs);
        rhs.push(b);
        senses.push(sense);
    }

    for &(col, width) in &ub_rows {
        let mut coeffs = vec![0.0; ncols];
        coeffs[col] = 1.0;
        rows.push(coeffs);
        rhs.push(width.max(0.0));
        senses.push(StdSense::Le);
        if width < 0.0 {
            empty_bounds = true;
        }
    }

    Ok(Standard {
        var_back,
        obj,
        rows,
        rhs,
        senses,
        empty_bounds,
    })
}

fn recover_x(std: &Standard, nvars: usize, values: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; nvars];
    for (col, back) in std.var_back.iter().enumerate() {
        let v = values[col];
        match *back {
            VarBack::Shift { var, lo } => x[var] = lo + v,
            VarBack::Mirror { var, hi } => x[var] = hi - v,
            VarBack::Pos { var } => x[var] += v,
            VarBack::Neg { var } => x[var] -= v,
        }
    }
    x
}

fn residual_ok(lp: &LinearProgram, x: &[f64]) -> bool {
    for (k, row) in lp.rows.iter().enumerate() {
        let lhs: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
        let tol = FEASIBILITY_TOL * (1.0 + lp.rhs[k].abs());
        let ok = match lp.senses[k] {
            Sense::Le => lhs <= lp.rhs[k] + tol,
            Sense::Ge => lhs >= lp.rhs[k] - tol,
            Sense::Eq => (lhs - lp.rhs[k]).abs() <= tol,
        };
        if !ok {
            return false;
        }
    }
    for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
        if x[j] < lo - FEASIBILITY_TOL || x[j] > hi + FEASIBILITY_TOL {
            return false;
        }
    }
    true
}

/// Dense tableau state shared by the two phases.
struct Tableau {
    ncols: usize,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    pivots: usize,
    max_pivots: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize, z1: &mut [f64], z2: &mut [f64]) {
        let piv = self.rows[row][col];
        let inv = 1.0 / piv;
        for v in self.rows[row].iter_mut() {
            *v *= inv;
        }
        self.rhs[row] *= inv;
        // Snap the pivot entry exactly.
        self.rows[row][col] = 1.0;
        for r in 0..self.rows.len() {
            if r == row {
                continue;
            }
            let factor = self.rows[r][col];
            if factor == 0.0 {
                continue;
            }
            for c in 0..self.ncols {
                self.rows[r][c] -= factor * self.rows[row][c];
            }
            self.rows[r][col] = 0.0;
            self.rhs[r] -= factor * self.rhs[row];
        }
        for z in [z1, z2] {
            let factor = z[col];
            if factor != 0.0 {
                for c in 0..self.ncols {
                    z[c] -= factor * self.rows[row][c];
                }
                z[col] = 0.0;
            }
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Bland ratio test: smallest ratio, ties broken by the lowest basic
    /// variable index.  Returns the leaving row.
    fn leaving_row(&self, col: usize) -> Option<usize> {
        let mut best: Option<(f64, usize, usize)> = None;
        for r in 0..self.rows.len() {
            let a = self.rows[r][col];
            if a > PIVOT_TOL {
                let ratio = self.rhs[r] / a;
                match best {
                    None => best = Some((ratio, self.basis[r], r)),
                    Some((br, bi, _)) => {
                        let window = 1e-12 * (1.0 + br.abs());
                        if ratio < br - window || ((ratio - br).abs() <= window && self.basis[r] < bi)
                        {
                            best = Some((ratio, self.basis[r], r));
                        }
                    }
                }
            }
        }
        best.map(|(_, _, r)| r)
    }

    /// Runs Bland's rule to optimality of the given reduced-cost row.
    /// `limit_cols` restricts the entering scan (used to bar artificials in
    /// phase 2).  Returns `Ok(true)` on optimality, `Ok(false)` when some
    /// column is unbounded below.
    fn bland_loop(
        &mut self,
        active: usize,
        z1: &mut Vec<f64>,
        z2: &mut Vec<f64>,
        limit_cols: usize,
    ) -> Result<bool, LpError> {
        loop {
            let mut entering = None;
            {
                let z = if active == 1 { &*z1 } else { &*z2 };
                for j in 0..limit_cols {
                    if z[j] < -PIVOT_TOL {
                        entering = Some(j);
                        break;
                    }
                }
            }
            let Some(col) = entering else {
                return Ok(true);
            };
            let Some(row) = self.leaving_row(col) else {
                return Ok(false);
            };
            if self.pivots >= self.max_pivots {
                return Err(LpError::IterationLimit {
                    limit: self.max_pivots,
                });
            }
            self.pivot(row, col, z1, z2);
        }
    }
}

/// Solves the program with the two-phase dense simplex method.
///
/// Identical inputs produce identical pivot sequences and therefore
/// bit-identical solutions.  An optimal result is re-verified against the
/// original rows and bounds within [`FEASIBILITY_TOL`].
pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    let std_form = standardize(lp)?;
    if std_form.empty_bounds {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            x: Vec::new(),
            objective: f64::NAN,
            iterations: 0,
        });
    }
    let m = std_form.rows.len();
    let n_struct = std_form.var_back.len();

    // Column layout: structural | slack or surplus per row | artificials.
    let n_art = std_form
        .senses
        .iter()
        .filter(|s| !matches!(s, StdSense::Le))
        .count();
    let n_slack = m - std_form.senses.iter().filter(|s| matches!(s, StdSense::Eq)).count();
    let art_start = n_struct + n_slack;
    let ncols = art_start + n_art;

    let mut tab = Tableau {
        ncols,
        rows: vec![vec![0.0; ncols]; m],
        rhs: std_form.rhs.clone(),
        basis: vec![0; m],
        pivots: 0,
        max_pivots: lp.max_pivots,
    };

    let mut next_slack = n_struct;
    let mut next_art = art_start;
    for r in 0..m {
        tab.rows[r][..n_struct].copy_from_slice(&std_form.rows[r]);
        match std_form.senses[r] {
            StdSense::Le => {
                tab.rows[r][next_slack] = 1.0;
                tab.basis[r] = next_slack;
                next_slack += 1;
            }
            StdSense::Ge => {
                tab.rows[r][next_slack] = -1.0;
                next_slack += 1;
                tab.rows[r][next_art] = 1.0;
                tab.basis[r] = next_art;
                next_art += 1;
            }
            StdSense::Eq => {
                tab.rows[r][next_art] = 1.0;
                tab.basis[r] = next_art;
                next_art += 1;
            }
        }
    }

    // Reduced-cost rows for both phases, priced for the initial basis.
    let mut z1 = vec![0.0; ncols];
    let mut z2 = vec![0.0; ncols];
    z2[..n_struct].copy_from_slice(&std_form.obj);
    if n_art > 0 {
        for r in 0..m {
            if tab.basis[r] >= art_start {
                for c in 0..ncols {
                    z1[c] -= tab.rows[r][c];
                }
            }
        }
        for c in art_start..ncols {
            z1[c] += 1.0;
        }

        if !tab.bland_loop(1, &mut z1, &mut z2, ncols)? {
            return Err(LpError::Numerical(
                "phase 1 reported an unbounded direction".to_string(),
            ));
        }
        let art_sum: f64 = (0..m)
            .filter(|&r| tab.basis[r] >= art_start)
            .map(|r| tab.rhs[r].max(0.0))
            .sum();
        if art_sum > FEASIBILITY_TOL {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: Vec::new(),
                objective: f64::NAN,
                iterations: tab.pivots,
            });
        }
        // Drive leftover artificials out of the basis; a row that offers no
        // real pivot is redundant and is cleared outright.
        for r in 0..m {
            if tab.basis[r] >= art_start {
                let col = (0..art_start).find(|&c| tab.rows[r][c].abs() > PIVOT_TOL);
                match col {
                    Some(c) => {
                        if tab.pivots >= tab.max_pivots {
                            return Err(LpError::IterationLimit {
                                limit: tab.max_pivots,
                            });
                        }
                        tab.pivot(r, c, &mut z1, &mut z2)
                    }
                    None => {
                        for c in 0..ncols {
                            tab.rows[r][c] = 0.0;
                        }
                        tab.rhs[r] = 0.0;
                    }
                }
            }
        }
    }

    let optimal = tab.bland_loop(2, &mut z1, &mut z2, art_start)?;
    if !optimal {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: Vec::new(),
            objective: f64::NAN,
            iterations: tab.pivots,
        });
    }

    let mut values = vec![0.0; n_struct];
    for r in 0..m {
        if tab.basis[r] < n_struct {
            values[tab.basis[r]] = tab.rhs[r].max(0.0);
        }
    }
    let x = recover_x(&std_form, lp.num_vars(), &values);
    if !residual_ok(lp, &x) {
        return Err(LpError::Numerical(
            "optimal basis fails residual verification".to_string(),
        ));
    }
    let objective = lp.minimize.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
        iterations: tab.pivots,
    })
}

/// Solves a square linear system by Gaussian elimination with partial
/// pivoting.  Returns `None` for (near-)singular matrices.
fn solve_square(matrix: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    let mut a: Vec<Vec<f64>> = matrix.iter().cloned().collect();
    let mut b = rhs.to_vec();
    for col in 0..n {
        let mut best = col;
        for r in col + 1..n {
            if a[r][col].abs() > a[best][col].abs() {
                best = r;
            }
        }
        if a[best][col].abs() < 1e-11 {
            return None;
        }
        a.swap(col, best);
        b.swap(col, best);
        let inv = 1.0 / a[col][col];
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = a[r][col] * inv;
            if factor == 0.0 {
                continue;
            }
            for c in col..n {
                a[r][c] -= factor * a[col][c];
            }
            b[r] -= factor * b[col];
        }
    }
    Some((0..n).map(|r| b[r] / a[r][r]).collect())
}

/// Exhaustively enumerates the vertices (basic feasible solutions) of a
/// program with at most eight variables.
///
/// Every subset of standard-form columns of basis size is tried; singular
/// bases are skipped, infeasible ones discarded, and duplicate vertices
/// (within `1e-7` in the infinity norm) reported once.  An empty feasible
/// region yields an empty list.
pub fn enumerate_vertices(lp: &LinearProgram) -> Result<Vec<Vec<f64>>, LpError> {
    if lp.num_vars() > ENUMERATION_VAR_LIMIT {
        return Err(LpError::TooLarge {
            detail: format!(
                "{} variables exceed the enumeration limit of {ENUMERATION_VAR_LIMIT}",
                lp.num_vars()
            ),
        });
    }
    let std_form = standardize(lp)?;
    if std_form.empty_bounds {
        return Ok(Vec::new());
    }
    let m = std_form.rows.len();
    let n_struct = std_form.var_back.len();

    // Equality form: structural columns plus one slack (+1) or surplus (-1)
    // column per inequality row.
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for c in 0..n_struct {
        cols.push((0..m).map(|r| std_form.rows[r][c]).collect());
    }
    for r in 0..m {
        let sign = match std_form.senses[r] {
            StdSense::Le => 1.0,
            StdSense::Ge => -1.0,
            StdSense::Eq => continue,
        };
        let mut col = vec![0.0; m];
        col[r] = sign;
        cols.push(col);
    }
    let ncols = cols.len();

    if m == 0 {
        // No rows at all: the only basic solution is the all-zero one.
        return Ok(vec![recover_x(&std_form, lp.num_vars(), &vec![0.0; n_struct])]);
    }
    if ncols < m {
        return Ok(Vec::new());
    }
    let mut bases: u128 = 1;
    for i in 0..m.min(ncols - m) {
        bases = bases.saturating_mul((ncols - i) as u128) / (i as u128 + 1);
        if bases > ENUMERATION_BASIS_LIMIT {
            return Err(LpError::TooLarge {
                detail: format!("more than {ENUMERATION_BASIS_LIMIT} candidate bases"),
            });
        }
    }

    let mut vertices: Vec<Vec<f64>> = Vec::new();
    let mut selection: Vec<usize> = (0..m).collect();
    loop {
        let matrix: Vec<Vec<f64>> = (0..m)
            .map(|r| selection.iter().map(|&c| cols[c][r]).collect())
            .collect();
        if let Some(values) = solve_square(&matrix, &std_form.rhs) {
            if values.iter().all(|&v| v >= -FEASIBILITY_TOL) {
                let mut full = vec![0.0; ncols];
                for (slot, &c) in selection.iter().enumerate() {
                    full[c] = values[slot].max(0.0);
                }
                let x = recover_x(&std_form, lp.num_vars(), &full[..n_struct]);
                let duplicate = vertices.iter().any(|v| {
                    v.iter()
                        .zip(&x)
                        .all(|(a, b)| (a - b).abs() <= 1e-7)
                });
                if !duplicate {
                    vertices.push(x);
                }
            }
        }
        // Advance to the next combination in lexicographic order.
        let mut i = m;
        loop {
            if i == 0 {
                return Ok(vertices);
            }
            i -= 1;
            if selection[i] != i + ncols - m {
                selection[i] += 1;
                for k in i + 1..m {
                    selection[k] = selection[k - 1] + 1;
                }
                break;
            }
        }
    }
}
