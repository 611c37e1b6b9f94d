//! Clarabel bridge: cone assembly, status mapping, report extraction.

use super::builder::{Field, ProblemBuilder, Sense};
use super::expr::{ExprMatrix, LinExpr};
use crate::error::{Error, Result};
use crate::mat::ComplexMatrix;
use crate::scalar::Real;
use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, ExponentialConeT, IPSolver, NonnegativeConeT,
    PSDTriangleConeT, SolverStatus, SupportedConeT, ZeroConeT,
};
use num_traits::Float;
use std::collections::HashMap;

/// Scalars accepted by the solver bridge.
pub trait SolverReal: Real + clarabel::algebra::FloatT {}
impl<T: Real + clarabel::algebra::FloatT> SolverReal for T {}

#[derive(Debug, Clone, Copy)]
pub struct SolveOpts {
    pub tol: f64,
    pub max_iter: u32,
    pub verbose: bool,
}

impl Default for SolveOpts {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 200, verbose: false }
    }
}

impl SolveOpts {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    Inaccurate,
    Failed(String),
}

impl SolveStatus {
    pub fn is_usable(&self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::Inaccurate)
    }

    pub fn as_str(&self) -> &str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::Inaccurate => "inaccurate",
            SolveStatus::Failed(_) => "failed",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolveStatus::Failed(reason) => write!(f, "failed({reason})"),
            other => f.write_str(other.as_str()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport<R> {
    pub status: SolveStatus,
    /// Objective in the caller's sense; present for optimal/inaccurate only.
    pub objective: Option<R>,
    pub x: Vec<R>,
    pub duals: HashMap<String, Vec<R>>,
    pub iterations: u32,
    pub solve_time: f64,
    pub primal_dual_gap: f64,
}

impl<R: Real> SolveReport<R> {
    pub fn eval(&self, e: &LinExpr<R>) -> R {
        e.eval(&self.x)
    }

    pub fn eval_matrix(&self, m: &ExprMatrix<R>) -> ComplexMatrix<R> {
        m.eval(&self.x)
    }

    /// Objective value or an error carrying the status.
    pub fn value(&self) -> Result<R> {
        self.objective
            .ok_or_else(|| Error::Solver(format!("no objective (status {})", self.status)))
    }
}

struct Assembly<R> {
    rows: Vec<(usize, LinExpr<R>, R)>, // (row index, expr, scale)
    cones: Vec<SupportedConeT<R>>,
    n_rows: usize,
    tag_rows: HashMap<String, Vec<usize>>,
}

impl<R: SolverReal> ProblemBuilder<R> {
    fn assemble(&self) -> Assembly<R> {
        let mut rows = Vec::new();
        let mut cones = Vec::new();
        let mut tag_rows: HashMap<String, Vec<usize>> = HashMap::new();
        let mut row = 0usize;

        if !self.eq_rows.is_empty() {
            for (e, tag) in self.eq_rows.iter().zip(&self.eq_tags) {
                rows.push((row, e.clone(), R::one()));
                if let Some(tag) = tag {
                    tag_rows.entry(tag.clone()).or_default().push(row);
                }
                row += 1;
            }
            cones.push(ZeroConeT(self.eq_rows.len()));
        }
        if !self.nonneg_rows.is_empty() {
            for e in &self.nonneg_rows {
                rows.push((row, e.clone(), R::one()));
                row += 1;
            }
            cones.push(NonnegativeConeT(self.nonneg_rows.len()));
        }
        let sqrt2 = Float::sqrt(R::of(2.0));
        for (m, field) in &self.psd_cones {
            let side = m.rows();
            match field {
                Field::Real => {
                    // svec: upper triangle, column-major, off-diagonals * sqrt(2)
                    for c in 0..side {
                        for r in 0..=c {
                            let scale = if r < c { sqrt2 } else { R::one() };
                            rows.push((row, m.get(r, c).re.clone(), scale));
                            row += 1;
                        }
                    }
                    cones.push(PSDTriangleConeT(side));
                }
                Field::Complex => {
                    // doubled real embedding [[Re, -Im], [Im, Re]]
                    let n = 2 * side;
                    let entry = |r: usize, c: usize| -> LinExpr<R> {
                        let (br, ir) = (r / side, r % side);
                        let (bc, ic) = (c / side, c % side);
                        let e = m.get(ir, ic);
                        match (br, bc) {
                            (0, 0) | (1, 1) => e.re.clone(),
                            (0, 1) => e.im.scaled(-R::one()),
                            _ => e.im.clone(),
                        }
                    };
                    for c in 0..n {
                        for r in 0..=c {
                            let scale = if r < c { sqrt2 } else { R::one() };
                            rows.push((row, entry(r, c), scale));
                            row += 1;
                        }
                    }
                    cones.push(PSDTriangleConeT(n));
                }
            }
        }
        for t in &self.exp_cones {
            for e in t.iter() {
                rows.push((row, e.clone(), R::one()));
                row += 1;
            }
            cones.push(ExponentialConeT());
        }

        Assembly { n_rows: row, rows, cones, tag_rows }
    }

    /// Solve with Clarabel. Solver trouble is surfaced in the report status;
    /// `Err` is reserved for malformed problems.
    pub fn solve(&self, opts: &SolveOpts) -> Result<SolveReport<R>> {
        let asm = self.assemble();
        let n = self.n_vars;

        // triplets of A (s = b - Ax) and the offset vector b
        let mut b = vec![R::zero(); asm.n_rows];
        let mut triplets: Vec<(usize, usize, R)> = Vec::new();
        let n_eq = self.eq_rows.len();
        for (row, expr, scale) in &asm.rows {
            let (terms, cst) = expr.canonical();
            if *row < n_eq {
                // equality: expr == 0 -> Ax = -c, s = 0
                b[*row] = -cst * *scale;
                for (v, coef) in terms {
                    triplets.push((*row, v, coef * *scale));
                }
            } else {
                // cone membership: s = expr -> b = c, A = -coeffs
                b[*row] = cst * *scale;
                for (v, coef) in terms {
                    triplets.push((*row, v, -coef * *scale));
                }
            }
        }
        triplets.sort_unstable_by_key(|&(r, c, _)| (c, r));
        let mut colptr = vec![0usize; n + 1];
        let mut rowval = Vec::with_capacity(triplets.len());
        let mut nzval = Vec::with_capacity(triplets.len());
        {
            let mut k = 0usize;
            for col in 0..n {
                colptr[col] = k;
                while k < triplets.len() && triplets[k].1 == col {
                    rowval.push(triplets[k].0);
                    nzval.push(triplets[k].2);
                    k += 1;
                }
            }
            colptr[n] = k;
            // merge duplicates within a column is not needed: rows are unique
            // per (row, var) because each expr is canonicalized first
        }
        let a = CscMatrix::new(asm.n_rows, n, colptr, rowval, nzval);

        let mut q = vec![R::zero(); n];
        let (obj_terms, obj_const) = self.objective.canonical();
        let sign = match self.sense {
            Sense::Minimize => R::one(),
            Sense::Maximize => -R::one(),
        };
        for (v, c) in obj_terms {
            q[v] += c * sign;
        }
        let p = CscMatrix::<R>::zeros((n, n));

        let settings = DefaultSettingsBuilder::<R>::default()
            .verbose(opts.verbose)
            .max_iter(opts.max_iter)
            .tol_gap_abs(R::of(opts.tol))
            .tol_gap_rel(R::of(opts.tol))
            .tol_feas(R::of(opts.tol))
            .build()
            .map_err(|e| Error::Solver(format!("settings: {e}")))?;

        let mut solver = DefaultSolver::new(&p, &q, &a, &b, &asm.cones, settings)
            .map_err(|e| Error::Solver(format!("setup: {e:?}")))?;
        solver.solve();

        let status = match solver.solution.status {
            SolverStatus::Solved => SolveStatus::Optimal,
            SolverStatus::AlmostSolved => SolveStatus::Inaccurate,
            SolverStatus::PrimalInfeasible => SolveStatus::Infeasible,
            SolverStatus::DualInfeasible => SolveStatus::Unbounded,
            SolverStatus::AlmostPrimalInfeasible => SolveStatus::Inaccurate,
            SolverStatus::AlmostDualInfeasible => SolveStatus::Inaccurate,
            other => SolveStatus::Failed(format!("{other:?}")),
        };

        let x: Vec<R> = solver.solution.x.clone();
        let objective = if status.is_usable() {
            let val = self.objective.eval(&x);
            let _ = obj_const;
            Some(val)
        } else {
            None
        };
        let mut duals = HashMap::new();
        for (tag, rows) in &asm.tag_rows {
            duals.insert(tag.clone(), rows.iter().map(|&r| solver.solution.z[r]).collect());
        }
        Ok(SolveReport {
            status,
            objective,
            x,
            duals,
            iterations: solver.info.iterations,
            solve_time: solver.info.solve_time,
            primal_dual_gap: Float::abs(solver.info.cost_primal - solver.info.cost_dual).to64(),
        })
    }
}
