//! Sparse affine expressions and matrices of them, with the same tensor
//! operations as concrete matrices so constraint compilers can be written
//! once against symbolic Choi blocks.

use crate::mat::ComplexMatrix;
use crate::scalar::{Real, C};
use crate::shape::SubsystemShape;

pub type VarIdx = usize;

/// Sparse real affine expression `constant + sum_k coef_k * x_k`.
#[derive(Clone, Debug)]
pub struct LinExpr<R> {
    pub terms: Vec<(VarIdx, R)>,
    pub constant: R,
}

impl<R: Real> Default for LinExpr<R> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<R: Real> LinExpr<R> {
    pub fn zero() -> Self {
        Self { terms: Vec::new(), constant: R::zero() }
    }

    pub fn constant(c: R) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn var(v: VarIdx) -> Self {
        Self { terms: vec![(v, R::one())], constant: R::zero() }
    }

    pub fn term(v: VarIdx, coef: R) -> Self {
        Self { terms: vec![(v, coef)], constant: R::zero() }
    }

    pub fn is_structural_zero(&self) -> bool {
        self.terms.is_empty() && self.constant == R::zero()
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self { terms, constant: self.constant + other.constant }
    }

    pub fn minus(&self, other: &Self) -> Self {
        self.plus(&other.scaled(-R::one()))
    }

    pub fn scaled(&self, s: R) -> Self {
        if s == R::zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|&(v, c)| (v, c * s)).collect(),
            constant: self.constant * s,
        }
    }

    pub fn add_term(&mut self, v: VarIdx, coef: R) {
        self.terms.push((v, coef));
    }

    pub fn add_constant(&mut self, c: R) {
        self.constant += c;
    }

    /// Merge duplicate variables and drop zero coefficients.
    pub fn canonical(&self) -> (Vec<(VarIdx, R)>, R) {
        let mut terms = self.terms.clone();
        terms.sort_unstable_by_key(|&(v, _)| v);
        let mut merged: Vec<(VarIdx, R)> = Vec::with_capacity(terms.len());
        for (v, c) in terms {
            match merged.last_mut() {
                Some((lv, lc)) if *lv == v => *lc += c,
                _ => merged.push((v, c)),
            }
        }
        merged.retain(|&(_, c)| c != R::zero());
        (merged, self.constant)
    }

    pub fn eval(&self, x: &[R]) -> R {
        self.terms.iter().map(|&(v, c)| c * x[v]).fold(self.constant, |a, b| a + b)
    }
}

/// Complex affine expression as a pair of real ones.
#[derive(Clone, Debug)]
pub struct CLinExpr<R> {
    pub re: LinExpr<R>,
    pub im: LinExpr<R>,
}

impl<R: Real> Default for CLinExpr<R> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<R: Real> CLinExpr<R> {
    pub fn zero() -> Self {
        Self { re: LinExpr::zero(), im: LinExpr::zero() }
    }

    pub fn from_re(re: LinExpr<R>) -> Self {
        Self { re, im: LinExpr::zero() }
    }

    pub fn constant(z: C<R>) -> Self {
        Self { re: LinExpr::constant(z.re), im: LinExpr::constant(z.im) }
    }

    pub fn conj(&self) -> Self {
        Self { re: self.re.clone(), im: self.im.scaled(-R::one()) }
    }

    pub fn plus(&self, other: &Self) -> Self {
        Self { re: self.re.plus(&other.re), im: self.im.plus(&other.im) }
    }

    pub fn minus(&self, other: &Self) -> Self {
        Self { re: self.re.minus(&other.re), im: self.im.minus(&other.im) }
    }

    pub fn scaled(&self, z: C<R>) -> Self {
        Self {
            re: self.re.scaled(z.re).plus(&self.im.scaled(-z.im)),
            im: self.re.scaled(z.im).plus(&self.im.scaled(z.re)),
        }
    }

    pub fn eval(&self, x: &[R]) -> C<R> {
        C::new(self.re.eval(x), self.im.eval(x))
    }
}

/// Matrix of complex affine expressions, row-major like `ComplexMatrix`.
#[derive(Clone, Debug)]
pub struct ExprMatrix<R> {
    rows: usize,
    cols: usize,
    entries: Vec<CLinExpr<R>>,
}

impl<R: Real> ExprMatrix<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: vec![CLinExpr::zero(); rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> CLinExpr<R>) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                entries.push(f(r, c));
            }
        }
        Self { rows, cols, entries }
    }

    pub fn from_const(m: &ComplexMatrix<R>) -> Self {
        Self::from_fn(m.rows(), m.cols(), |r, c| CLinExpr::constant(m[(r, c)]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &CLinExpr<R> {
        &self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, e: CLinExpr<R>) {
        self.entries[r * self.cols + c] = e;
    }

    pub fn plus(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |r, c| self.get(r, c).plus(other.get(r, c)))
    }

    pub fn minus(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |r, c| self.get(r, c).minus(other.get(r, c)))
    }

    pub fn scaled_re(&self, s: R) -> Self {
        Self::from_fn(self.rows, self.cols, |r, c| self.get(r, c).scaled(C::new(s, R::zero())))
    }

    pub fn trace(&self) -> CLinExpr<R> {
        assert_eq!(self.rows, self.cols);
        let mut acc = CLinExpr::zero();
        for i in 0..self.rows {
            acc = acc.plus(self.get(i, i));
        }
        acc
    }

    /// `Tr(self * m)` as a complex expression.
    pub fn trace_product(&self, m: &ComplexMatrix<R>) -> CLinExpr<R> {
        assert_eq!(self.cols, m.rows());
        assert_eq!(self.rows, m.cols());
        let mut acc = CLinExpr::zero();
        for r in 0..self.rows {
            for k in 0..self.cols {
                let z = m[(k, r)];
                if z.norm_sqr() == R::zero() {
                    continue;
                }
                acc = acc.plus(&self.get(r, k).scaled(z));
            }
        }
        acc
    }

    pub fn partial_trace(&self, shape: &SubsystemShape, keep: &[&str]) -> crate::error::Result<(Self, SubsystemShape)> {
        assert_eq!(self.rows, shape.dim());
        let mut keep_pos = shape.indices_of(keep)?;
        keep_pos.sort_unstable();
        let trace_pos: Vec<usize> = (0..shape.len()).filter(|p| !keep_pos.contains(p)).collect();
        let kept_shape = shape.select(&keep_pos);
        let traced_shape = shape.select(&trace_pos);
        let strides = shape.strides();
        let kd = kept_shape.dim();
        let td = traced_shape.dim();
        let kofs: Vec<usize> = (0..kd)
            .map(|k| {
                kept_shape
                    .unravel(k)
                    .iter()
                    .zip(&keep_pos)
                    .map(|(&d, &p)| d * strides[p])
                    .sum()
            })
            .collect();
        let tofs: Vec<usize> = (0..td)
            .map(|t| {
                traced_shape
                    .unravel(t)
                    .iter()
                    .zip(&trace_pos)
                    .map(|(&d, &p)| d * strides[p])
                    .sum()
            })
            .collect();
        let mut out = Self::zeros(kd, kd);
        for (kr, &ro) in kofs.iter().enumerate() {
            for (kc, &co) in kofs.iter().enumerate() {
                let mut acc = CLinExpr::zero();
                for &to in &tofs {
                    acc = acc.plus(self.get(ro + to, co + to));
                }
                out.set(kr, kc, acc);
            }
        }
        Ok((out, kept_shape))
    }

    pub fn partial_transpose(&self, shape: &SubsystemShape, subsystems: &[&str]) -> crate::error::Result<Self> {
        assert_eq!(self.rows, shape.dim());
        let pos = shape.indices_of(subsystems)?;
        let dim = shape.dim();
        let mut out = Self::zeros(dim, dim);
        for r in 0..dim {
            let rd = shape.unravel(r);
            for c in 0..dim {
                let cd = shape.unravel(c);
                let mut rd2 = rd.clone();
                let mut cd2 = cd.clone();
                for &p in &pos {
                    rd2[p] = cd[p];
                    cd2[p] = rd[p];
                }
                out.set(r, c, self.get(shape.ravel(&rd2), shape.ravel(&cd2)).clone());
            }
        }
        Ok(out)
    }

    pub fn permute_subsystems(
        &self,
        shape: &SubsystemShape,
        order: &[&str],
    ) -> crate::error::Result<(Self, SubsystemShape)> {
        let positions = shape.indices_of(order)?;
        let map = shape.permutation_map(&positions);
        let new_shape = shape.select(&positions);
        let dim = shape.dim();
        let mut out = Self::zeros(dim, dim);
        for r in 0..dim {
            for c in 0..dim {
                out.set(r, c, self.get(map[r], map[c]).clone());
            }
        }
        Ok((out, new_shape))
    }

    /// `m (x) self` for a constant left factor.
    pub fn kron_const_left(&self, m: &ComplexMatrix<R>) -> Self {
        let rows = m.rows() * self.rows;
        let cols = m.cols() * self.cols;
        let mut out = Self::zeros(rows, cols);
        for r1 in 0..m.rows() {
            for c1 in 0..m.cols() {
                let z = m[(r1, c1)];
                if z.norm_sqr() == R::zero() {
                    continue;
                }
                for r2 in 0..self.rows {
                    for c2 in 0..self.cols {
                        out.set(
                            r1 * self.rows + r2,
                            c1 * self.cols + c2,
                            self.get(r2, c2).scaled(z),
                        );
                    }
                }
            }
        }
        out
    }

    /// `self (x) m` for a constant right factor.
    pub fn kron_const_right(&self, m: &ComplexMatrix<R>) -> Self {
        let rows = self.rows * m.rows();
        let cols = self.cols * m.cols();
        let mut out = Self::zeros(rows, cols);
        for r1 in 0..self.rows {
            for c1 in 0..self.cols {
                let e = self.get(r1, c1);
                for r2 in 0..m.rows() {
                    for c2 in 0..m.cols() {
                        let z = m[(r2, c2)];
                        if z.norm_sqr() == R::zero() {
                            continue;
                        }
                        out.set(r1 * m.rows() + r2, c1 * m.cols() + c2, e.scaled(z));
                    }
                }
            }
        }
        out
    }

    pub fn eval(&self, x: &[R]) -> ComplexMatrix<R> {
        ComplexMatrix::from_fn(self.rows, self.cols, |r, c| self.get(r, c).eval(x))
    }
}
