//! Problem assembly: variable blocks, cones, constraints, objective.

use super::expr::{CLinExpr, ExprMatrix, LinExpr, VarIdx};
use crate::mat::ComplexMatrix;
use crate::scalar::Real;
use serde_json::json;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Real,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

pub struct ProblemBuilder<R> {
    pub(super) n_vars: usize,
    pub(super) eq_rows: Vec<LinExpr<R>>,
    pub(super) eq_tags: Vec<Option<String>>,
    pub(super) nonneg_rows: Vec<LinExpr<R>>,
    pub(super) psd_cones: Vec<(ExprMatrix<R>, Field)>,
    pub(super) exp_cones: Vec<[LinExpr<R>; 3]>,
    pub(super) objective: LinExpr<R>,
    pub(super) sense: Sense,
}

impl<R: Real> Default for ProblemBuilder<R> {
    fn default() -> Self {
        Self::new()
    }
}

impl<R: Real> ProblemBuilder<R> {
    pub fn new() -> Self {
        Self {
            n_vars: 0,
            eq_rows: Vec::new(),
            eq_tags: Vec::new(),
            nonneg_rows: Vec::new(),
            psd_cones: Vec::new(),
            exp_cones: Vec::new(),
            objective: LinExpr::zero(),
            sense: Sense::Minimize,
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn free_var(&mut self) -> VarIdx {
        let v = self.n_vars;
        self.n_vars += 1;
        v
    }

    pub fn free_vars(&mut self, n: usize) -> Vec<VarIdx> {
        (0..n).map(|_| self.free_var()).collect()
    }

    pub fn nonneg_var(&mut self) -> VarIdx {
        let v = self.free_var();
        self.nonneg_rows.push(LinExpr::var(v));
        v
    }

    pub fn nonneg_vars(&mut self, n: usize) -> Vec<VarIdx> {
        (0..n).map(|_| self.nonneg_var()).collect()
    }

    /// Fresh Hermitian PSD matrix variable.
    pub fn hermitian_block(&mut self, side: usize, field: Field) -> ExprMatrix<R> {
        self.symmetric_hermitian_block(side, field, &[])
    }

    /// Hermitian PSD matrix variable invariant under the given index
    /// permutations, `M[p(r), p(c)] = M[r, c]`. Entry orbits share scalar
    /// variables, so the invariance holds identically rather than through
    /// extra equality rows.
    pub fn symmetric_hermitian_block(
        &mut self,
        side: usize,
        field: Field,
        perms: &[Vec<usize>],
    ) -> ExprMatrix<R> {
        // Orbit structure over ordered index pairs. Each position may be
        // reached plainly or through the Hermitian flip (conjugated); if a
        // position is reachable both ways its imaginary part vanishes.
        const UNSEEN: usize = usize::MAX;
        let n = side * side;
        let mut orbit_of = vec![UNSEEN; n];
        let mut conj_of = vec![false; n];
        let mut real_forced: Vec<bool> = Vec::new();
        let mut reps: Vec<(usize, usize)> = Vec::new();

        for start in 0..n {
            if orbit_of[start] != UNSEEN {
                continue;
            }
            let orbit_id = reps.len();
            reps.push((start / side, start % side));
            real_forced.push(false);
            let mut stack = vec![start];
            orbit_of[start] = orbit_id;
            conj_of[start] = false;
            while let Some(pos) = stack.pop() {
                let (r, c) = (pos / side, pos % side);
                let flag = conj_of[pos];
                let mut neighbors: Vec<(usize, bool)> = vec![(c * side + r, !flag)];
                for p in perms {
                    neighbors.push((p[r] * side + p[c], flag));
                }
                for (npos, nflag) in neighbors {
                    if orbit_of[npos] == UNSEEN {
                        orbit_of[npos] = orbit_id;
                        conj_of[npos] = nflag;
                        stack.push(npos);
                    } else if orbit_of[npos] == orbit_id && conj_of[npos] != nflag {
                        real_forced[orbit_id] = true;
                    }
                }
            }
        }

        let mut re_vars = vec![0usize; reps.len()];
        let mut im_vars: Vec<Option<usize>> = vec![None; reps.len()];
        for k in 0..reps.len() {
            re_vars[k] = self.free_var();
            if field == Field::Complex && !real_forced[k] {
                im_vars[k] = Some(self.free_var());
            }
        }

        let m = ExprMatrix::from_fn(side, side, |r, c| {
            let pos = r * side + c;
            let k = orbit_of[pos];
            let sign = if conj_of[pos] { -R::one() } else { R::one() };
            let re = LinExpr::var(re_vars[k]);
            let im = match im_vars[k] {
                Some(v) => LinExpr::term(v, sign),
                None => LinExpr::zero(),
            };
            CLinExpr { re, im }
        });
        self.psd(m.clone(), field);
        m
    }

    /// Constrain a Hermitian-structured expression matrix to be PSD.
    pub fn psd(&mut self, m: ExprMatrix<R>, field: Field) {
        assert_eq!(m.rows(), m.cols());
        self.psd_cones.push((m, field));
    }

    pub fn eq_zero_tagged(&mut self, e: LinExpr<R>, tag: Option<String>) {
        self.eq_rows.push(e);
        self.eq_tags.push(tag);
    }

    pub fn eq_zero(&mut self, e: LinExpr<R>) {
        self.eq_zero_tagged(e, None);
    }

    pub fn eq(&mut self, lhs: &LinExpr<R>, rhs: &LinExpr<R>) {
        self.eq_zero(lhs.minus(rhs));
    }

    /// Expression must be nonnegative.
    pub fn ge_zero(&mut self, e: LinExpr<R>) {
        self.nonneg_rows.push(e);
    }

    /// `(x, y, z)` constrained to `y exp(x/y) <= z, y > 0`.
    pub fn exp_cone(&mut self, x: LinExpr<R>, y: LinExpr<R>, z: LinExpr<R>) {
        self.exp_cones.push([x, y, z]);
    }

    /// Equate two Hermitian-structured expression matrices entrywise.
    /// Only the upper triangle is emitted; the lower follows by Hermiticity.
    pub fn eq_matrices(&mut self, lhs: &ExprMatrix<R>, rhs: &ExprMatrix<R>) {
        self.eq_matrices_tagged(lhs, rhs, None)
    }

    pub fn eq_matrices_tagged(&mut self, lhs: &ExprMatrix<R>, rhs: &ExprMatrix<R>, tag: Option<&str>) {
        assert_eq!((lhs.rows(), lhs.cols()), (rhs.rows(), rhs.cols()));
        for r in 0..lhs.rows() {
            for c in r..lhs.cols() {
                let d = lhs.get(r, c).minus(rhs.get(r, c));
                let (terms, cst) = d.re.canonical();
                if !(terms.is_empty() && cst == R::zero()) {
                    self.eq_zero_tagged(d.re, tag.map(|t| t.to_string()));
                }
                if c > r {
                    let (terms, cst) = d.im.canonical();
                    if !(terms.is_empty() && cst == R::zero()) {
                        self.eq_zero_tagged(d.im, tag.map(|t| t.to_string()));
                    }
                }
            }
        }
    }

    pub fn eq_matrix_const(&mut self, lhs: &ExprMatrix<R>, rhs: &ComplexMatrix<R>) {
        self.eq_matrices(lhs, &ExprMatrix::from_const(rhs));
    }

    /// Epigraph of the trace norm of a Hermitian expression: returns `t`
    /// such that minimizing `t` yields `||M||_1`, via `M = P - Q` with
    /// `P, Q >= 0` and `t = Tr P + Tr Q`.
    pub fn trace_norm_epigraph(&mut self, m: &ExprMatrix<R>, field: Field) -> LinExpr<R> {
        let p = self.hermitian_block(m.rows(), field);
        let q = self.hermitian_block(m.rows(), field);
        let diff = p.minus(&q);
        self.eq_matrices(&diff, m);
        p.trace().re.plus(&q.trace().re)
    }

    pub fn minimize(&mut self, e: LinExpr<R>) {
        self.objective = e;
        self.sense = Sense::Minimize;
    }

    pub fn maximize(&mut self, e: LinExpr<R>) {
        self.objective = e;
        self.sense = Sense::Maximize;
    }

    /// Self-contained JSON dump of the assembled problem.
    pub fn dump_json(&self) -> serde_json::Value {
        let lin = |e: &LinExpr<R>| {
            let (terms, cst) = e.canonical();
            json!({
                "terms": terms.iter().map(|&(v, c)| json!([v, c.to64()])).collect::<Vec<_>>(),
                "constant": cst.to64(),
            })
        };
        json!({
            "n_vars": self.n_vars,
            "sense": match self.sense { Sense::Minimize => "min", Sense::Maximize => "max" },
            "objective": lin(&self.objective),
            "eq_rows": self.eq_rows.iter().map(&lin).collect::<Vec<_>>(),
            "nonneg_rows": self.nonneg_rows.iter().map(&lin).collect::<Vec<_>>(),
            "psd_cones": self.psd_cones.iter().map(|(m, field)| json!({
                "side": m.rows(),
                "field": match field { Field::Real => "real", Field::Complex => "complex" },
                "entries_re": (0..m.rows()).map(|r| (0..m.cols()).map(|c| lin(&m.get(r, c).re)).collect::<Vec<_>>()).collect::<Vec<_>>(),
                "entries_im": (0..m.rows()).map(|r| (0..m.cols()).map(|c| lin(&m.get(r, c).im)).collect::<Vec<_>>()).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "exp_cones": self.exp_cones.iter().map(|t| t.iter().map(&lin).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }
}
