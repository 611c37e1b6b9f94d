//! Bipartite conditional distributions, the local and nonsignaling
//! polytopes, Bell functionals, and the decoherent-nonlocality measures
//! nu_1, nu_diamond and nu_H (distance from the local polytope in the
//! entrywise l1 norm, the l1->l1 operator norm, and relative entropy).

use crate::conic::{LinExpr, ProblemBuilder, SolveOpts, SolveStatus, SolverReal};
use crate::error::{Error, Result};
use crate::scalar::Real;
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scenario {
    pub nx: usize,
    pub ny: usize,
    pub na: usize,
    pub nb: usize,
}

impl Scenario {
    pub fn new(nx: usize, ny: usize, na: usize, nb: usize) -> Self {
        Self { nx, ny, na, nb }
    }

    pub fn chsh() -> Self {
        Self::new(2, 2, 2, 2)
    }

    pub fn n_cols(&self) -> usize {
        self.nx * self.ny
    }

    pub fn n_rows(&self) -> usize {
        self.na * self.nb
    }

    pub fn n_entries(&self) -> usize {
        self.n_cols() * self.n_rows()
    }

    /// Number of deterministic product strategies.
    pub fn vertex_count(&self) -> usize {
        self.na.pow(self.nx as u32) * self.nb.pow(self.ny as u32)
    }

    pub fn col(&self, x: usize, y: usize) -> usize {
        x * self.ny + y
    }

    pub fn row(&self, a: usize, b: usize) -> usize {
        a * self.nb + b
    }
}

/// Column-stochastic matrix `S_{ab,xy} = p(a,b|x,y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CondDist<R> {
    scenario: Scenario,
    probs: Vec<R>, // row-major, rows ab, cols xy
}

impl<R: Real> CondDist<R> {
    pub fn zeros(scenario: Scenario) -> Self {
        Self { scenario, probs: vec![R::zero(); scenario.n_entries()] }
    }

    pub fn uniform(scenario: Scenario) -> Self {
        let p = R::one() / R::of(scenario.n_rows() as f64);
        Self { scenario, probs: vec![p; scenario.n_entries()] }
    }

    pub fn from_fn(scenario: Scenario, mut f: impl FnMut(usize, usize, usize, usize) -> R) -> Self {
        let mut s = Self::zeros(scenario);
        for x in 0..scenario.nx {
            for y in 0..scenario.ny {
                for a in 0..scenario.na {
                    for b in 0..scenario.nb {
                        s.set(a, b, x, y, f(a, b, x, y));
                    }
                }
            }
        }
        s
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn get(&self, a: usize, b: usize, x: usize, y: usize) -> R {
        self.probs[self.scenario.row(a, b) * self.scenario.n_cols() + self.scenario.col(x, y)]
    }

    pub fn set(&mut self, a: usize, b: usize, x: usize, y: usize, v: R) {
        let idx = self.scenario.row(a, b) * self.scenario.n_cols() + self.scenario.col(x, y);
        self.probs[idx] = v;
    }

    /// Entries in row-major `(ab, xy)` order.
    pub fn entries(&self) -> &[R] {
        &self.probs
    }

    /// Column-stochasticity and range check.
    pub fn validate(&self, tol: R) -> Result<()> {
        for &p in &self.probs {
            if p < -tol || p > R::one() + tol {
                return Err(Error::Invalid(format!("probability {} out of range", p.to64())));
            }
        }
        for x in 0..self.scenario.nx {
            for y in 0..self.scenario.ny {
                let mut sum = R::zero();
                for a in 0..self.scenario.na {
                    for b in 0..self.scenario.nb {
                        sum += self.get(a, b, x, y);
                    }
                }
                if Float::abs(sum - R::one()) > tol {
                    return Err(Error::Invalid(format!(
                        "column (x={x},y={y}) sums to {}",
                        sum.to64()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &Self) -> R {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(&a, &b)| Float::abs(a - b))
            .fold(R::zero(), |m, d| if d > m { d } else { m })
    }

    /// Entrywise l1 distance.
    pub fn l1_distance(&self, other: &Self) -> R {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(&a, &b)| Float::abs(a - b))
            .fold(R::zero(), |m, d| m + d)
    }

    pub fn mix(&self, other: &Self, lambda: R) -> Self {
        assert_eq!(self.scenario, other.scenario);
        Self {
            scenario: self.scenario,
            probs: self
                .probs
                .iter()
                .zip(&other.probs)
                .map(|(&a, &b)| lambda * a + (R::one() - lambda) * b)
                .collect(),
        }
    }

    /// Classical relative entropy `h(S|T) = sum_ij S_ij (ln S_ij - ln T_ij)`.
    ///
    /// Uses `0 ln 0 = 0`; returns `+inf` when the support condition fails.
    pub fn relative_entropy_to(&self, other: &Self) -> Result<R> {
        assert_eq!(self.scenario, other.scenario);
        let mut acc = R::zero();
        for (&s, &t) in self.probs.iter().zip(&other.probs) {
            if s <= R::zero() {
                continue;
            }
            if t <= R::zero() {
                return Ok(R::infinity());
            }
            acc += s * (Float::ln(s) - Float::ln(t));
        }
        Ok(acc)
    }

    /// Marginal-independence check; returns the largest violation of the
    /// nonsignaling equalities.
    pub fn nonsignaling_violation(&self) -> R {
        let sc = self.scenario;
        let mut worst = R::zero();
        // Alice's marginal must not depend on y
        for x in 0..sc.nx {
            for a in 0..sc.na {
                let marg = |y: usize| -> R {
                    (0..sc.nb).map(|b| self.get(a, b, x, y)).fold(R::zero(), |s, v| s + v)
                };
                let m0 = marg(0);
                for y in 1..sc.ny {
                    let d = Float::abs(marg(y) - m0);
                    if d > worst {
                        worst = d;
                    }
                }
            }
        }
        // Bob's marginal must not depend on x
        for y in 0..sc.ny {
            for b in 0..sc.nb {
                let marg = |x: usize| -> R {
                    (0..sc.na).map(|a| self.get(a, b, x, y)).fold(R::zero(), |s, v| s + v)
                };
                let m0 = marg(0);
                for x in 1..sc.nx {
                    let d = Float::abs(marg(x) - m0);
                    if d > worst {
                        worst = d;
                    }
                }
            }
        }
        worst
    }

    pub fn is_nonsignaling(&self, tol: R) -> (bool, R) {
        let v = self.nonsignaling_violation();
        (v <= tol, v)
    }
}

/// The Popescu-Rohrlich box: `a (+) b = x.y`, uniform marginals.
pub fn pr_box<R: Real>() -> CondDist<R> {
    let half = R::of(0.5);
    CondDist::from_fn(Scenario::chsh(), |a, b, x, y| {
        if (a + b) % 2 == (x * y) % 2 {
            half
        } else {
            R::zero()
        }
    })
}

/// Deterministic product strategies spanning the local polytope.
#[derive(Debug, Clone)]
pub struct LocalVertexSet<R> {
    scenario: Scenario,
    vertices: Vec<CondDist<R>>,
    assignments: Vec<(Vec<usize>, Vec<usize>)>,
}

pub const DEFAULT_VERTEX_CAP: usize = 1_000_000;

impl<R: Real> LocalVertexSet<R> {
    pub fn enumerate(scenario: Scenario, cap: usize) -> Result<Self> {
        let count = scenario.vertex_count();
        if count > cap {
            return Err(Error::CapExceeded(format!(
                "{count} local vertices exceed cap {cap}"
            )));
        }
        let mut vertices = Vec::with_capacity(count);
        let mut assignments = Vec::with_capacity(count);
        let n_fa = scenario.na.pow(scenario.nx as u32);
        let n_fb = scenario.nb.pow(scenario.ny as u32);
        for ia in 0..n_fa {
            let mut fa = vec![0usize; scenario.nx];
            let mut rem = ia;
            for x in 0..scenario.nx {
                fa[x] = rem % scenario.na;
                rem /= scenario.na;
            }
            for ib in 0..n_fb {
                let mut fb = vec![0usize; scenario.ny];
                let mut rem = ib;
                for y in 0..scenario.ny {
                    fb[y] = rem % scenario.nb;
                    rem /= scenario.nb;
                }
                let v = CondDist::from_fn(scenario, |a, b, x, y| {
                    if fa[x] == a && fb[y] == b {
                        R::one()
                    } else {
                        R::zero()
                    }
                });
                vertices.push(v);
                assignments.push((fa.clone(), fb.clone()));
            }
        }
        Ok(Self { scenario, vertices, assignments })
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[CondDist<R>] {
        &self.vertices
    }

    pub fn assignments(&self) -> &[(Vec<usize>, Vec<usize>)] {
        &self.assignments
    }

    pub fn mixture(&self, weights: &[R]) -> CondDist<R> {
        assert_eq!(weights.len(), self.vertices.len());
        let mut out = CondDist::zeros(self.scenario);
        for (w, v) in weights.iter().zip(&self.vertices) {
            for (o, &e) in out.probs.iter_mut().zip(&v.probs) {
                *o += *w * e;
            }
        }
        out
    }
}

/// Linear functional `sum c_{ab,xy} S_{ab,xy}` on distributions.
#[derive(Debug, Clone)]
pub struct BellFunctional<R> {
    scenario: Scenario,
    coeffs: Vec<R>,
}

impl<R: Real> BellFunctional<R> {
    pub fn new(scenario: Scenario, coeffs: Vec<R>) -> Self {
        assert_eq!(coeffs.len(), scenario.n_entries());
        Self { scenario, coeffs }
    }

    pub fn from_fn(scenario: Scenario, mut f: impl FnMut(usize, usize, usize, usize) -> R) -> Self {
        let mut coeffs = vec![R::zero(); scenario.n_entries()];
        for x in 0..scenario.nx {
            for y in 0..scenario.ny {
                for a in 0..scenario.na {
                    for b in 0..scenario.nb {
                        coeffs[scenario.row(a, b) * scenario.n_cols() + scenario.col(x, y)] =
                            f(a, b, x, y);
                    }
                }
            }
        }
        Self { scenario, coeffs }
    }

    /// CHSH coefficients `(-1)^(a+b) (-1)^(xy)`.
    pub fn chsh() -> Self {
        Self::from_fn(Scenario::chsh(), |a, b, x, y| {
            let sign = (a + b) % 2 + x * y;
            if sign % 2 == 0 {
                R::one()
            } else {
                -R::one()
            }
        })
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn coeffs(&self) -> &[R] {
        &self.coeffs
    }

    pub fn value(&self, s: &CondDist<R>) -> Result<R> {
        if s.scenario() != self.scenario {
            return Err(Error::ShapeMismatch("Bell functional vs distribution scenario".into()));
        }
        Ok(self
            .coeffs
            .iter()
            .zip(s.entries())
            .map(|(&c, &p)| c * p)
            .fold(R::zero(), |a, b| a + b))
    }

    /// Maximum over a finite vertex list.
    pub fn max_over(&self, vertices: &LocalVertexSet<R>) -> R {
        vertices
            .vertices()
            .iter()
            .map(|v| self.value(v).unwrap())
            .fold(R::neg_infinity(), |m, v| if v > m { v } else { m })
    }
}

pub fn bell_value<R: Real>(s: &CondDist<R>, f: &BellFunctional<R>) -> Result<R> {
    f.value(s)
}

/// Outcome of an LP-backed quantity, with the solver status attached.
#[derive(Debug, Clone)]
pub struct MeasureValue<R> {
    pub value: R,
    pub status: SolveStatus,
}

#[derive(Debug, Clone)]
pub struct LocalityReport<R> {
    pub local: bool,
    pub weights: Option<Vec<R>>,
    pub witness: Option<(BellFunctional<R>, R)>,
    pub status: SolveStatus,
}

const LOCALITY_TOL: f64 = 1e-7;

fn vertex_mixture_exprs<R: SolverReal>(
    pb: &mut ProblemBuilder<R>,
    vertices: &LocalVertexSet<R>,
) -> (Vec<usize>, Vec<LinExpr<R>>) {
    let q = pb.nonneg_vars(vertices.len());
    let mut norm = LinExpr::zero();
    for &v in &q {
        norm.add_term(v, R::one());
    }
    pb.eq_zero(norm.minus(&LinExpr::constant(R::one())));
    let n = vertices.scenario().n_entries();
    let mut t = vec![LinExpr::zero(); n];
    for (k, v) in vertices.vertices().iter().enumerate() {
        for (i, &e) in v.entries().iter().enumerate() {
            if e != R::zero() {
                t[i].add_term(q[k], e);
            }
        }
    }
    (q, t)
}

/// LP membership test for the local polytope. Returns recovered weights on
/// success and a separating Bell functional otherwise.
pub fn is_local<R: SolverReal>(s: &CondDist<R>, opts: &SolveOpts) -> Result<LocalityReport<R>> {
    s.validate(R::of(1e-6))?;
    let vertices = LocalVertexSet::enumerate(s.scenario(), DEFAULT_VERTEX_CAP)?;
    let mut pb = ProblemBuilder::<R>::new();
    let (q, t) = vertex_mixture_exprs(&mut pb, &vertices);
    for (expr, &target) in t.iter().zip(s.entries()) {
        pb.eq_zero(expr.minus(&LinExpr::constant(target)));
    }
    pb.minimize(LinExpr::zero());
    let rep = pb.solve(opts)?;
    match rep.status {
        SolveStatus::Optimal | SolveStatus::Inaccurate => Ok(LocalityReport {
            local: true,
            weights: Some(q.iter().map(|&v| rep.x[v]).collect()),
            witness: None,
            status: rep.status,
        }),
        SolveStatus::Infeasible => {
            let (w, violation, status) = bell_witness(s, &vertices, opts)?;
            Ok(LocalityReport { local: false, weights: None, witness: Some((w, violation)), status })
        }
        other => Err(Error::Solver(format!("locality LP ended with status {other}"))),
    }
}

/// Separating functional: maximize `c.S - max_vertex c.D` over `|c| <= 1`.
/// The optimum equals `nu_1(S)` by l1/linf duality.
pub fn bell_witness<R: SolverReal>(
    s: &CondDist<R>,
    vertices: &LocalVertexSet<R>,
    opts: &SolveOpts,
) -> Result<(BellFunctional<R>, R, SolveStatus)> {
    let n = s.scenario().n_entries();
    let mut pb = ProblemBuilder::<R>::new();
    let c = pb.free_vars(n);
    let m = pb.free_var();
    for &ci in &c {
        pb.ge_zero(LinExpr::constant(R::one()).minus(&LinExpr::var(ci)));
        pb.ge_zero(LinExpr::var(ci).plus(&LinExpr::constant(R::one())));
    }
    for v in vertices.vertices() {
        let mut dot = LinExpr::zero();
        for (i, &e) in v.entries().iter().enumerate() {
            if e != R::zero() {
                dot.add_term(c[i], e);
            }
        }
        pb.ge_zero(LinExpr::var(m).minus(&dot));
    }
    let mut obj = LinExpr::term(m, -R::one());
    for (i, &e) in s.entries().iter().enumerate() {
        obj.add_term(c[i], e);
    }
    pb.maximize(obj);
    let rep = pb.solve(opts)?;
    let value = rep.value()?;
    let coeffs: Vec<R> = c.iter().map(|&v| rep.x[v]).collect();
    Ok((BellFunctional::new(s.scenario(), coeffs), value, rep.status))
}

/// `nu_1(S) = min_{T in L} sum_ij |S_ij - T_ij|`.
pub fn nu_1<R: SolverReal>(s: &CondDist<R>, opts: &SolveOpts) -> Result<MeasureValue<R>> {
    let vertices = LocalVertexSet::enumerate(s.scenario(), DEFAULT_VERTEX_CAP)?;
    let mut pb = ProblemBuilder::<R>::new();
    let (_, t) = vertex_mixture_exprs(&mut pb, &vertices);
    let mut total = LinExpr::zero();
    for (expr, &target) in t.iter().zip(s.entries()) {
        let e = pb.free_var();
        let diff = LinExpr::constant(target).minus(expr);
        pb.ge_zero(LinExpr::var(e).minus(&diff));
        pb.ge_zero(LinExpr::var(e).plus(&diff));
        total.add_term(e, R::one());
    }
    pb.minimize(total);
    let rep = pb.solve(opts)?;
    Ok(MeasureValue { value: rep.value()?, status: rep.status })
}

/// `nu_diamond(S) = min_{T in L} max_col sum_row |S - T|` (the l1->l1
/// induced operator norm of the difference).
pub fn nu_diamond<R: SolverReal>(s: &CondDist<R>, opts: &SolveOpts) -> Result<MeasureValue<R>> {
    let sc = s.scenario();
    let vertices = LocalVertexSet::enumerate(sc, DEFAULT_VERTEX_CAP)?;
    let mut pb = ProblemBuilder::<R>::new();
    let (_, t) = vertex_mixture_exprs(&mut pb, &vertices);
    let tmax = pb.free_var();
    for x in 0..sc.nx {
        for y in 0..sc.ny {
            let mut col_sum = LinExpr::zero();
            for a in 0..sc.na {
                for b in 0..sc.nb {
                    let i = sc.row(a, b) * sc.n_cols() + sc.col(x, y);
                    let e = pb.free_var();
                    let diff = LinExpr::constant(s.entries()[i]).minus(&t[i]);
                    pb.ge_zero(LinExpr::var(e).minus(&diff));
                    pb.ge_zero(LinExpr::var(e).plus(&diff));
                    col_sum.add_term(e, R::one());
                }
            }
            pb.ge_zero(LinExpr::var(tmax).minus(&col_sum));
        }
    }
    pb.minimize(LinExpr::var(tmax));
    let rep = pb.solve(opts)?;
    Ok(MeasureValue { value: rep.value()?, status: rep.status })
}

/// `nu_H(S) = min_{T in L} h(S|T)` via exponential-cone programming.
pub fn nu_relent<R: SolverReal>(s: &CondDist<R>, opts: &SolveOpts) -> Result<MeasureValue<R>> {
    let vertices = LocalVertexSet::enumerate(s.scenario(), DEFAULT_VERTEX_CAP)?;
    let mut pb = ProblemBuilder::<R>::new();
    let (_, t) = vertex_mixture_exprs(&mut pb, &vertices);
    let mut total = LinExpr::zero();
    for (expr, &sij) in t.iter().zip(s.entries()) {
        if sij <= R::zero() {
            continue; // 0 ln 0 = 0
        }
        // w >= s ln(s/T): (c - w, s, s*T) in Kexp with c = s ln s
        let w = pb.free_var();
        let c = sij * Float::ln(sij);
        pb.exp_cone(
            LinExpr::constant(c).minus(&LinExpr::var(w)),
            LinExpr::constant(sij),
            expr.scaled(sij),
        );
        total.add_term(w, R::one());
    }
    pb.minimize(total);
    let rep = pb.solve(opts)?;
    // clamp tiny negative round-off
    let mut value = rep.value()?;
    if value < R::zero() && value > -R::of(1e-7) {
        value = R::zero();
    }
    Ok(MeasureValue { value, status: rep.status })
}

pub fn locality_tol<R: Real>() -> R {
    R::of(LOCALITY_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn opts() -> SolveOpts {
        SolveOpts::default()
    }

    #[test]
    fn vertex_enumeration_counts() {
        let v = LocalVertexSet::<f64>::enumerate(Scenario::chsh(), DEFAULT_VERTEX_CAP).unwrap();
        assert_eq!(v.len(), 16);
        let v = LocalVertexSet::<f64>::enumerate(Scenario::new(1, 1, 2, 2), DEFAULT_VERTEX_CAP).unwrap();
        assert_eq!(v.len(), 4);
        assert!(LocalVertexSet::<f64>::enumerate(Scenario::new(8, 8, 8, 8), 1000).is_err());
    }

    #[test]
    fn vertices_are_valid_and_nonsignaling() {
        let v = LocalVertexSet::<f64>::enumerate(Scenario::chsh(), DEFAULT_VERTEX_CAP).unwrap();
        for d in v.vertices() {
            d.validate(0.0).unwrap();
            let (ns, viol) = d.is_nonsignaling(1e-12);
            assert!(ns, "violation {viol}");
        }
    }

    #[test]
    fn pr_box_structure() {
        let pr = pr_box::<f64>();
        pr.validate(0.0).unwrap();
        let (ns, _) = pr.is_nonsignaling(1e-12);
        assert!(ns);
        let chsh = BellFunctional::chsh();
        assert!((chsh.value(&pr).unwrap() - 4.0).abs() < 1e-12);
        // entry-by-entry against the defining matrix
        let expect = [
            [0.5, 0.5, 0.5, 0.0],
            [0.0, 0.0, 0.0, 0.5],
            [0.0, 0.0, 0.0, 0.5],
            [0.5, 0.5, 0.5, 0.0],
        ];
        let sc = Scenario::chsh();
        for a in 0..2 {
            for b in 0..2 {
                for x in 0..2 {
                    for y in 0..2 {
                        assert_eq!(pr.get(a, b, x, y), expect[sc.row(a, b)][sc.col(x, y)]);
                    }
                }
            }
        }
    }

    #[test]
    fn chsh_local_bound_by_enumeration() {
        let v = LocalVertexSet::<f64>::enumerate(Scenario::chsh(), DEFAULT_VERTEX_CAP).unwrap();
        let chsh = BellFunctional::chsh();
        assert!((chsh.max_over(&v) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn chsh_on_uniform_is_zero() {
        let u = CondDist::<f64>::uniform(Scenario::chsh());
        assert!(BellFunctional::chsh().value(&u).unwrap().abs() < 1e-12);
    }

    #[test]
    fn cnot_action_signals() {
        // S(a,b|x,y) = [a=x][b=x+y]: Bob's marginal depends on x
        let s = CondDist::<f64>::from_fn(Scenario::chsh(), |a, b, x, y| {
            if a == x && b == (x + y) % 2 {
                1.0
            } else {
                0.0
            }
        });
        let (ns, viol) = s.is_nonsignaling(1e-8);
        assert!(!ns);
        assert!((viol - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_is_local_with_weights() {
        let u = CondDist::<f64>::uniform(Scenario::chsh());
        let rep = is_local(&u, &opts()).unwrap();
        assert!(rep.local);
        let w = rep.weights.unwrap();
        let v = LocalVertexSet::<f64>::enumerate(Scenario::chsh(), DEFAULT_VERTEX_CAP).unwrap();
        assert!(u.max_abs_diff(&v.mixture(&w)) < 1e-6);
    }

    #[test]
    fn vertex_mixture_recovered() {
        let v = LocalVertexSet::<f64>::enumerate(Scenario::chsh(), DEFAULT_VERTEX_CAP).unwrap();
        let mix = v.vertices()[3].mix(&v.vertices()[11], 0.3);
        let rep = is_local(&mix, &opts()).unwrap();
        assert!(rep.local);
        let w = rep.weights.unwrap();
        assert!(mix.max_abs_diff(&v.mixture(&w)) < 1e-6);
    }

    #[test]
    fn pr_box_not_local_with_witness() {
        let pr = pr_box::<f64>();
        let rep = is_local(&pr, &opts()).unwrap();
        assert!(!rep.local);
        let (w, violation) = rep.witness.unwrap();
        assert!(violation > 1.0);
        // the witness separates: value on PR exceeds the local bound
        let v = LocalVertexSet::<f64>::enumerate(Scenario::chsh(), DEFAULT_VERTEX_CAP).unwrap();
        let local_bound = w.max_over(&v);
        let on_pr = w.value(&pr).unwrap();
        assert!(on_pr > local_bound + 1.0);
    }

    #[test]
    fn nu1_zero_on_local_vertex() {
        let v = LocalVertexSet::<f64>::enumerate(Scenario::chsh(), DEFAULT_VERTEX_CAP).unwrap();
        let m = nu_1(&v.vertices()[5], &opts()).unwrap();
        assert!(m.value.abs() < 1e-7);
    }

    #[test]
    fn nu1_pr_box_regression() {
        // l1 distance of the PR box from the local polytope
        let m = nu_1(&pr_box::<f64>(), &opts()).unwrap();
        assert_eq!(m.status, SolveStatus::Optimal);
        assert!((m.value - 2.0).abs() < 1e-6, "nu1(PR) = {}", m.value);
    }

    #[test]
    fn nu1_cnot_action_at_least_pr() {
        let s = CondDist::<f64>::from_fn(Scenario::chsh(), |a, b, x, y| {
            if a == x && b == (x + y) % 2 {
                1.0
            } else {
                0.0
            }
        });
        let m = nu_1(&s, &opts()).unwrap();
        assert!(m.value > 0.0);
        let pr = nu_1(&pr_box::<f64>(), &opts()).unwrap();
        assert!(m.value >= pr.value - 1e-6, "nu1(CNOT) = {}, nu1(PR) = {}", m.value, pr.value);
    }

    #[test]
    fn nu_diamond_bounded_by_nu1() {
        let pr = pr_box::<f64>();
        let d = nu_diamond(&pr, &opts()).unwrap();
        let o = nu_1(&pr, &opts()).unwrap();
        assert!(d.value > 0.0);
        assert!(d.value <= o.value + 1e-7);

        let v = LocalVertexSet::<f64>::enumerate(Scenario::chsh(), DEFAULT_VERTEX_CAP).unwrap();
        let local = nu_diamond(&v.vertices()[2], &opts()).unwrap();
        assert!(local.value.abs() < 1e-7);
    }

    // Projected-gradient descent on the vertex-weight simplex: an
    // implementation-independent oracle for the relative-entropy measure.
    fn nu_relent_projected_gradient(s: &CondDist<f64>) -> f64 {
        let v = LocalVertexSet::<f64>::enumerate(s.scenario(), DEFAULT_VERTEX_CAP).unwrap();
        let n = v.len();
        let mut q = vec![1.0 / n as f64; n];
        let obj = |q: &[f64]| -> f64 {
            let t = v.mixture(q);
            s.relative_entropy_to(&t).unwrap()
        };
        let mut step = 0.5;
        let mut best = obj(&q);
        for _ in 0..20000 {
            let t = v.mixture(&q);
            // gradient of h(S|T) wrt q_k: -sum_ij S_ij D^k_ij / T_ij
            let mut grad = vec![0.0; n];
            for (k, vert) in v.vertices().iter().enumerate() {
                let mut g = 0.0;
                for (i, (&sij, &dij)) in s.entries().iter().zip(vert.entries()).enumerate() {
                    if sij > 0.0 && dij > 0.0 {
                        g -= sij * dij / t.entries()[i].max(1e-300);
                    }
                }
                grad[k] = g;
            }
            // project q - step*grad onto the simplex
            let mut z: Vec<f64> = q.iter().zip(&grad).map(|(&qi, &gi)| qi - step * gi).collect();
            let mut sorted = z.clone();
            sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let mut acc = 0.0;
            let mut theta = 0.0;
            for (i, &zi) in sorted.iter().enumerate() {
                acc += zi;
                let t = (acc - 1.0) / (i + 1) as f64;
                if zi - t > 0.0 {
                    theta = t;
                }
            }
            for zi in z.iter_mut() {
                *zi = (*zi - theta).max(0.0);
            }
            let val = obj(&z);
            if val <= best {
                best = val;
                q = z;
                step *= 1.05;
            } else {
                step *= 0.5;
                if step < 1e-12 {
                    break;
                }
            }
        }
        best
    }

    #[test]
    fn nu_relent_pr_box_vs_projected_gradient() {
        let pr = pr_box::<f64>();
        let m = nu_relent(&pr, &opts()).unwrap();
        assert!(m.value > 0.0);
        let oracle = nu_relent_projected_gradient(&pr);
        assert!(
            (m.value - oracle).abs() < 1e-5,
            "exp-cone {} vs projected gradient {}",
            m.value,
            oracle
        );
    }

    #[test]
    fn nu_relent_zero_on_local_and_finite_on_zero_entries() {
        let v = LocalVertexSet::<f64>::enumerate(Scenario::chsh(), DEFAULT_VERTEX_CAP).unwrap();
        let m = nu_relent(&v.vertices()[7], &opts()).unwrap();
        assert!(m.value.abs() < 1e-6);

        // a distribution with zero entries is still fine (0 ln 0 = 0)
        let mix = v.vertices()[0].mix(&v.vertices()[15], 0.5);
        let m = nu_relent(&mix, &opts()).unwrap();
        assert!(m.value.abs() < 1e-6);
    }

    #[test]
    fn measures_vanish_on_random_mixtures() {
        let v = LocalVertexSet::<f64>::enumerate(Scenario::chsh(), DEFAULT_VERTEX_CAP).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for _ in 0..5 {
            let mut w: Vec<f64> = (0..16).map(|_| rng.gen::<f64>()).collect();
            let sum: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= sum);
            let s = v.mixture(&w);
            assert!(nu_1(&s, &opts()).unwrap().value < 1e-7);
            assert!(nu_diamond(&s, &opts()).unwrap().value < 1e-7);
            assert!(nu_relent(&s, &opts()).unwrap().value < 1e-6);
        }
    }

    #[test]
    fn measures_convex_on_random_pairs() {
        let v = LocalVertexSet::<f64>::enumerate(Scenario::chsh(), DEFAULT_VERTEX_CAP).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let pr = pr_box::<f64>();
        for _ in 0..4 {
            let mut w: Vec<f64> = (0..16).map(|_| rng.gen::<f64>()).collect();
            let sum: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= sum);
            let s1 = v.mixture(&w).mix(&pr, 0.4);
            let mut w2: Vec<f64> = (0..16).map(|_| rng.gen::<f64>()).collect();
            let sum: f64 = w2.iter().sum();
            w2.iter_mut().for_each(|x| *x /= sum);
            let s2 = v.mixture(&w2).mix(&pr, 0.8);
            let lambda = rng.gen::<f64>();
            let mixed = s1.mix(&s2, lambda);
            for f in [nu_1, nu_diamond] {
                let m = f(&mixed, &opts()).unwrap().value;
                let m1 = f(&s1, &opts()).unwrap().value;
                let m2 = f(&s2, &opts()).unwrap().value;
                assert!(m <= lambda * m1 + (1.0 - lambda) * m2 + 1e-6);
            }
        }
    }

    #[test]
    fn is_local_agrees_with_nu1() {
        let v = LocalVertexSet::<f64>::enumerate(Scenario::chsh(), DEFAULT_VERTEX_CAP).unwrap();
        let pr = pr_box::<f64>();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for k in 0..8 {
            let mut w: Vec<f64> = (0..16).map(|_| rng.gen::<f64>()).collect();
            let sum: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= sum);
            let base = v.mixture(&w);
            let s = if k % 2 == 0 { base } else { base.mix(&pr, 0.5) };
            let rep = is_local(&s, &opts()).unwrap();
            let m = nu_1(&s, &opts()).unwrap();
            assert_eq!(rep.local, m.value <= locality_tol::<f64>(), "nu1 = {}", m.value);
        }
    }

    #[test]
    fn chsh_max_over_ns_polytope_is_four() {
        // LP over the nonsignaling polytope
        use crate::conic::{LinExpr, ProblemBuilder};
        let sc = Scenario::chsh();
        let mut pb = ProblemBuilder::<f64>::new();
        let p = pb.nonneg_vars(sc.n_entries());
        let idx = |a: usize, b: usize, x: usize, y: usize| sc.row(a, b) * sc.n_cols() + sc.col(x, y);
        for x in 0..2 {
            for y in 0..2 {
                let mut norm = LinExpr::zero();
                for a in 0..2 {
                    for b in 0..2 {
                        norm.add_term(p[idx(a, b, x, y)], 1.0);
                    }
                }
                pb.eq_zero(norm.minus(&LinExpr::constant(1.0)));
            }
        }
        // nonsignaling equalities
        for x in 0..2 {
            for a in 0..2 {
                let mut d = LinExpr::zero();
                for b in 0..2 {
                    d.add_term(p[idx(a, b, x, 0)], 1.0);
                    d.add_term(p[idx(a, b, x, 1)], -1.0);
                }
                pb.eq_zero(d);
            }
        }
        for y in 0..2 {
            for b in 0..2 {
                let mut d = LinExpr::zero();
                for a in 0..2 {
                    d.add_term(p[idx(a, b, 0, y)], 1.0);
                    d.add_term(p[idx(a, b, 1, y)], -1.0);
                }
                pb.eq_zero(d);
            }
        }
        let chsh = BellFunctional::<f64>::chsh();
        let mut obj = LinExpr::zero();
        for (i, &c) in chsh.coeffs().iter().enumerate() {
            obj.add_term(p[i], c);
        }
        pb.maximize(obj);
        let rep = pb.solve(&opts()).unwrap();
        assert!((rep.objective.unwrap() - 4.0).abs() < 1e-6);
    }
}
