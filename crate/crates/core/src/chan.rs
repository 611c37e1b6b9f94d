//! Choi representations of channels, standard gates and states, dephasing,
//! decoherent actions, and link-product composition.
//!
//! Choi matrices are unnormalized, `J = sum_ij |i><j| (x) E(|i><j|)`, with
//! subsystems ordered inputs first. The canonical bipartite-channel order is
//! `A0,B0,A1,B1`; a CPTP Choi satisfies `J >= 0` and `Tr_out J = 1_in`.

use crate::error::{Error, Result};
use crate::mat::ComplexMatrix;
use crate::polytope::{CondDist, Scenario};
use crate::scalar::{c_re, Real, C};
use crate::shape::SubsystemShape;
use num_traits::Float;

/// Default absolute tolerance for PSD / Hermiticity / CPTP checks.
pub fn check_tol<R: Real>() -> R {
    R::of(1e-9)
}

#[derive(Debug, Clone)]
pub struct DensityMatrix<R> {
    mat: ComplexMatrix<R>,
    shape: SubsystemShape,
}

impl<R: Real> DensityMatrix<R> {
    pub fn new_unchecked(mat: ComplexMatrix<R>, shape: SubsystemShape) -> Self {
        assert_eq!(mat.rows(), shape.dim());
        Self { mat, shape }
    }

    pub fn new(mat: ComplexMatrix<R>, shape: SubsystemShape) -> Result<Self> {
        let tol = check_tol::<R>();
        if mat.rows() != shape.dim() || !mat.is_square() {
            return Err(Error::ShapeMismatch("density matrix vs shape".into()));
        }
        if !mat.is_psd(tol) {
            return Err(Error::Invalid("density matrix is not PSD".into()));
        }
        let tr = mat.trace();
        if Float::abs(tr.re - R::one()) > tol || Float::abs(tr.im) > tol {
            return Err(Error::Invalid("density matrix trace is not 1".into()));
        }
        Ok(Self { mat, shape })
    }

    pub fn mat(&self) -> &ComplexMatrix<R> {
        &self.mat
    }

    pub fn shape(&self) -> &SubsystemShape {
        &self.shape
    }
}

#[derive(Debug, Clone)]
pub struct ChoiMatrix<R> {
    mat: ComplexMatrix<R>,
    shape: SubsystemShape,
    n_inputs: usize,
}

impl<R: Real> ChoiMatrix<R> {
    pub fn new_unchecked(mat: ComplexMatrix<R>, shape: SubsystemShape, n_inputs: usize) -> Self {
        assert_eq!(mat.rows(), shape.dim());
        assert!(n_inputs <= shape.len());
        Self { mat, shape, n_inputs }
    }

    /// Validate PSD and the identity input marginal, then wrap.
    pub fn new_channel(mat: ComplexMatrix<R>, shape: SubsystemShape, n_inputs: usize) -> Result<Self> {
        let j = Self::new_unchecked(mat, shape, n_inputs);
        let dev = j.cptp_deviation()?;
        if dev > check_tol::<R>() {
            return Err(Error::NotCptp(dev.to64()));
        }
        Ok(j)
    }

    pub fn mat(&self) -> &ComplexMatrix<R> {
        &self.mat
    }

    pub fn shape(&self) -> &SubsystemShape {
        &self.shape
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn input_positions(&self) -> Vec<usize> {
        (0..self.n_inputs).collect()
    }

    pub fn output_positions(&self) -> Vec<usize> {
        (self.n_inputs..self.shape.len()).collect()
    }

    pub fn input_shape(&self) -> SubsystemShape {
        self.shape.select(&self.input_positions())
    }

    pub fn output_shape(&self) -> SubsystemShape {
        self.shape.select(&self.output_positions())
    }

    pub fn input_dim(&self) -> usize {
        self.input_shape().dim()
    }

    pub fn output_dim(&self) -> usize {
        self.output_shape().dim()
    }

    /// Largest violation among Hermiticity, positivity and `Tr_out J = 1_in`.
    pub fn cptp_deviation(&self) -> Result<R> {
        let mut dev = self.mat.hermitian_deviation();
        let min_eig = self.mat.min_eigenvalue();
        if -min_eig > dev {
            dev = -min_eig;
        }
        let in_shape = self.input_shape();
        let names = in_shape.names();
        let (marg, _) = self.mat.partial_trace(&self.shape, &names)?;
        let d = (&marg - &ComplexMatrix::identity(self.input_dim())).max_abs();
        if d > dev {
            dev = d;
        }
        Ok(dev)
    }

    pub fn is_cptp(&self, tol: R) -> bool {
        self.cptp_deviation().map(|d| d <= tol).unwrap_or(false)
    }

    pub fn relabeled<S: Into<String>>(&self, names: Vec<S>) -> Result<Self> {
        let parts: Vec<(String, usize)> = names
            .into_iter()
            .map(Into::into)
            .zip(self.shape.dims().iter().copied())
            .collect();
        if parts.len() != self.shape.len() {
            return Err(Error::ShapeMismatch("relabel count".into()));
        }
        Ok(Self {
            mat: self.mat.clone(),
            shape: SubsystemShape::new(parts)?,
            n_inputs: self.n_inputs,
        })
    }

    /// Choi of `D o E o D`: off-diagonal entries in the product basis vanish.
    pub fn dephase(&self) -> Self {
        let n = self.mat.rows();
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = c_re(self.mat[(i, i)].re);
        }
        Self::new_unchecked(m, self.shape.clone(), self.n_inputs)
    }

    /// Stochastic matrix `S_ab,xy = <ab| E(|xy><xy|) |ab>` of a bipartite channel.
    pub fn decoherent_action(&self) -> Result<CondDist<R>> {
        if self.shape.len() != 4 || self.n_inputs != 2 {
            return Err(Error::ShapeMismatch(
                "decoherent action requires a bipartite channel on A0,B0,A1,B1".into(),
            ));
        }
        let dev = self.cptp_deviation()?;
        if dev > check_tol::<R>() {
            return Err(Error::NotCptp(dev.to64()));
        }
        let d = self.shape.dims();
        let scenario = Scenario::new(d[0], d[1], d[2], d[3]);
        let mut s = CondDist::zeros(scenario);
        for x in 0..d[0] {
            for y in 0..d[1] {
                for a in 0..d[2] {
                    for b in 0..d[3] {
                        let idx = self.shape.ravel(&[x, y, a, b]);
                        s.set(a, b, x, y, self.mat[(idx, idx)].re);
                    }
                }
            }
        }
        Ok(s)
    }

    /// Apply the channel: `E(rho) = Tr_in( J (rho^T (x) 1_out) )`.
    pub fn apply(&self, rho: &DensityMatrix<R>) -> Result<DensityMatrix<R>> {
        if rho.mat().rows() != self.input_dim() {
            return Err(Error::ShapeMismatch("state dimension vs channel input".into()));
        }
        let lifted = rho.mat().transpose().kron(&ComplexMatrix::identity(self.output_dim()));
        let prod = &self.mat * &lifted;
        let out_names: Vec<String> = self
            .output_shape()
            .names()
            .iter()
            .map(|s| s.to_string())
            .collect();
        let refs: Vec<&str> = out_names.iter().map(|s| s.as_str()).collect();
        let (out, out_shape) = prod.partial_trace(&self.shape, &refs)?;
        Ok(DensityMatrix::new_unchecked(out, out_shape))
    }
}

/// Choi matrix of a unitary channel. The shape lists inputs in its first
/// half; `u` acts on the composite input space.
pub fn choi_from_unitary<R: Real>(u: &ComplexMatrix<R>, shape: SubsystemShape) -> Result<ChoiMatrix<R>> {
    if shape.len() % 2 != 0 {
        return Err(Error::ShapeMismatch("unitary channel shape must split evenly".into()));
    }
    let n_inputs = shape.len() / 2;
    let din: usize = shape.dims()[..n_inputs].iter().product();
    let dout: usize = shape.dims()[n_inputs..].iter().product();
    if din != dout || u.rows() != din || !u.is_square() {
        return Err(Error::ShapeMismatch("unitary vs shape dimensions".into()));
    }
    let dev = u.unitary_deviation();
    if dev > check_tol::<R>() {
        return Err(Error::NotUnitary(dev.to64()));
    }
    // J = |v><v| with v_(i,a) = U_(a,i)
    let dim = din * dout;
    let mut v = ComplexMatrix::zeros(dim, 1);
    for i in 0..din {
        for a in 0..dout {
            v[(i * dout + a, 0)] = u[(a, i)];
        }
    }
    let j = &v * &v.adjoint();
    Ok(ChoiMatrix::new_unchecked(j, shape, n_inputs))
}

/// Choi matrix from a Kraus decomposition (inputs-first shape).
pub fn choi_from_kraus<R: Real>(
    kraus: &[ComplexMatrix<R>],
    shape: SubsystemShape,
    n_inputs: usize,
) -> Result<ChoiMatrix<R>> {
    let din: usize = shape.dims()[..n_inputs].iter().product();
    let dout: usize = shape.dims()[n_inputs..].iter().product();
    let dim = din * dout;
    let mut j = ComplexMatrix::zeros(dim, dim);
    for k in kraus {
        if k.rows() != dout || k.cols() != din {
            return Err(Error::ShapeMismatch("Kraus operator dimensions".into()));
        }
        let mut v = ComplexMatrix::zeros(dim, 1);
        for i in 0..din {
            for a in 0..dout {
                v[(i * dout + a, 0)] = k[(a, i)];
            }
        }
        j = &j + &(&v * &v.adjoint());
    }
    Ok(ChoiMatrix::new_unchecked(j, shape, n_inputs))
}

/// Identity channel on a `d`-dimensional system.
pub fn choi_identity<R: Real>(d: usize) -> ChoiMatrix<R> {
    let shape = SubsystemShape::new(vec![("in", d), ("out", d)]).unwrap();
    choi_from_unitary(&ComplexMatrix::identity(d), shape).unwrap()
}

/// Depolarizing channel `L_mu(rho) = (1-mu) rho + mu Tr(rho) 1/d`.
pub fn depolarizing_choi<R: Real>(mu: R, d: usize) -> Result<ChoiMatrix<R>> {
    if mu < R::zero() || mu > R::one() {
        return Err(Error::OutOfRange(format!("mu = {} not in [0,1]", mu.to64())));
    }
    let id = choi_identity::<R>(d);
    let mixed = ComplexMatrix::identity(d * d).scale_re(mu / R::of(d as f64));
    let m = &id.mat().scale_re(R::one() - mu) + &mixed;
    Ok(ChoiMatrix::new_unchecked(m, id.shape().clone(), 1))
}

/// Product of two one-party channels as a bipartite channel on `A0,B0,A1,B1`.
pub fn choi_product<R: Real>(ja: &ChoiMatrix<R>, jb: &ChoiMatrix<R>) -> Result<ChoiMatrix<R>> {
    if ja.shape().len() != 2 || jb.shape().len() != 2 {
        return Err(Error::ShapeMismatch("choi_product expects one-party factors".into()));
    }
    let grouped = ja.mat().kron(jb.mat());
    let shape = SubsystemShape::new(vec![
        ("A0", ja.input_dim()),
        ("A1", ja.output_dim()),
        ("B0", jb.input_dim()),
        ("B1", jb.output_dim()),
    ])?;
    let (canon, canon_shape) = grouped.permute_subsystems(&shape, &["A0", "B0", "A1", "B1"])?;
    Ok(ChoiMatrix::new_unchecked(canon, canon_shape, 2))
}

/// Action of a superchannel (bipartite channel `A0 B0 -> A1 B1`) on a channel
/// `E : A1 -> B0`, producing the corrected channel `A0 -> B1`.
///
/// Wire roles: the superchannel's output `A1` feeds the channel input, the
/// channel output returns on the superchannel input `B0`.
pub fn link_apply<R: Real>(xi: &ChoiMatrix<R>, e: &ChoiMatrix<R>) -> Result<ChoiMatrix<R>> {
    if xi.shape().len() != 4 || xi.n_inputs() != 2 {
        return Err(Error::ShapeMismatch("superchannel must be bipartite on A0,B0,A1,B1".into()));
    }
    if e.shape().len() != 2 || e.n_inputs() != 1 {
        return Err(Error::ShapeMismatch("plugged channel must be one-party".into()));
    }
    let d = xi.shape().dims();
    let (d_a0, d_b0, d_a1, d_b1) = (d[0], d[1], d[2], d[3]);
    if e.input_dim() != d_a1 || e.output_dim() != d_b0 {
        return Err(Error::ShapeMismatch(format!(
            "channel is {}->{}, superchannel slot is {}->{}",
            e.input_dim(),
            e.output_dim(),
            d_a1,
            d_b0
        )));
    }
    let xs = xi.shape();
    let es = e.shape();
    let mut out = ComplexMatrix::zeros(d_a0 * d_b1, d_a0 * d_b1);
    for x in 0..d_a0 {
        for beta in 0..d_b1 {
            for xp in 0..d_a0 {
                for betap in 0..d_b1 {
                    let mut acc = C::new(R::zero(), R::zero());
                    for a1 in 0..d_a1 {
                        for b0 in 0..d_b0 {
                            for a1p in 0..d_a1 {
                                for b0p in 0..d_b0 {
                                    let xr = xs.ravel(&[x, b0, a1, beta]);
                                    let xc = xs.ravel(&[xp, b0p, a1p, betap]);
                                    let er = es.ravel(&[a1, b0]);
                                    let ec = es.ravel(&[a1p, b0p]);
                                    acc += xi.mat()[(xr, xc)] * e.mat()[(er, ec)];
                                }
                            }
                        }
                    }
                    out[(x * d_b1 + beta, xp * d_b1 + betap)] = acc;
                }
            }
        }
    }
    let shape = SubsystemShape::new(vec![("A0", d_a0), ("B1", d_b1)])?;
    Ok(ChoiMatrix::new_unchecked(out, shape, 1))
}

/// Superchannel Choi from explicit pre/post processing with memory:
/// pre `A0 -> A1 (x) M` (Kraus `v`), post `M (x) B0 -> B1` (Kraus `w`).
pub fn superchannel_from_pre_post<R: Real>(
    pre: &[ComplexMatrix<R>],
    post: &[ComplexMatrix<R>],
    dims: (usize, usize, usize, usize),
    d_mem: usize,
) -> Result<ChoiMatrix<R>> {
    let (d_a0, d_b0, d_a1, d_b1) = dims;
    let shape = SubsystemShape::channel(d_a0, d_b0, d_a1, d_b1);
    let mut kraus = Vec::new();
    for v in pre {
        if v.rows() != d_a1 * d_mem || v.cols() != d_a0 {
            return Err(Error::ShapeMismatch("pre-processing Kraus dimensions".into()));
        }
        for w in post {
            if w.rows() != d_b1 || w.cols() != d_mem * d_b0 {
                return Err(Error::ShapeMismatch("post-processing Kraus dimensions".into()));
            }
            // K = (1_{A1} (x) w) (v (x) 1_{B0}) : A0 B0 -> A1 B1
            let lift_v = v.kron(&ComplexMatrix::identity(d_b0)); // (a1,m,b0) x (x,y)
            let lift_w = ComplexMatrix::identity(d_a1).kron(w); // (a1,b1) x (a1,m,b0)
            kraus.push(&lift_w * &lift_v);
        }
    }
    choi_from_kraus(&kraus, shape, 2)
}

/// `H(a|b) = Tr a (log a - log b)` for positive definite Hermitian matrices.
pub fn quantum_relative_entropy<R: Real>(a: &ComplexMatrix<R>, b: &ComplexMatrix<R>) -> Result<R> {
    let tol = R::of(1e-13);
    let la = a.log_pd(tol)?;
    let lb = b.log_pd(tol)?;
    let diff = &la - &lb;
    Ok(a.trace_product_re(&diff))
}

pub mod gates {
    use super::*;

    pub fn sigma_x<R: Real>() -> ComplexMatrix<R> {
        ComplexMatrix::from_fn(2, 2, |r, c| {
            if r + c == 1 {
                c_re(R::one())
            } else {
                C::new(R::zero(), R::zero())
            }
        })
    }

    pub fn sigma_y<R: Real>() -> ComplexMatrix<R> {
        ComplexMatrix::from_fn(2, 2, |r, c| match (r, c) {
            (0, 1) => C::new(R::zero(), -R::one()),
            (1, 0) => C::new(R::zero(), R::one()),
            _ => C::new(R::zero(), R::zero()),
        })
    }

    pub fn sigma_z<R: Real>() -> ComplexMatrix<R> {
        ComplexMatrix::from_fn(2, 2, |r, c| match (r, c) {
            (0, 0) => c_re(R::one()),
            (1, 1) => c_re(-R::one()),
            _ => C::new(R::zero(), R::zero()),
        })
    }

    /// Controlled-NOT on two qubits, first qubit controls.
    pub fn cnot<R: Real>() -> ComplexMatrix<R> {
        let mut m = ComplexMatrix::zeros(4, 4);
        let map = [0usize, 1, 3, 2];
        for (col, &row) in map.iter().enumerate() {
            m[(row, col)] = c_re(R::one());
        }
        m
    }

    /// Swap of two `d`-dimensional systems.
    pub fn swap<R: Real>(d: usize) -> ComplexMatrix<R> {
        let mut m = ComplexMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                m[(j * d + i, i * d + j)] = c_re(R::one());
            }
        }
        m
    }

    /// The interpolating two-qubit basis change: columns are
    /// `phi+_mu, psi+_mu, psi-_mu, phi-_mu`, reaching the computational basis
    /// at `mu = 1` and the Bell basis at `mu = 1/2`.
    pub fn u_mu<R: Real>(mu: R) -> Result<ComplexMatrix<R>> {
        if mu < R::zero() || mu > R::one() {
            return Err(Error::OutOfRange(format!("mu = {} not in [0,1]", mu.to64())));
        }
        let s = Float::sqrt(mu);
        let t = Float::sqrt(R::one() - mu);
        let z = R::zero();
        ComplexMatrix::from_parts(
            &[
                vec![s, z, z, t],
                vec![z, s, -t, z],
                vec![z, t, s, z],
                vec![t, z, z, -s],
            ],
            None,
        )
    }
}

pub mod states {
    use super::*;

    /// `sum_i |ii> / sqrt(d)` on a `d (x) d` space.
    pub fn max_entangled_ket<R: Real>(d: usize) -> ComplexMatrix<R> {
        let mut v = ComplexMatrix::zeros(d * d, 1);
        let amp = R::one() / Float::sqrt(R::of(d as f64));
        for i in 0..d {
            v[(i * d + i, 0)] = c_re(amp);
        }
        v
    }

    pub fn projector<R: Real>(ket: &ComplexMatrix<R>) -> ComplexMatrix<R> {
        ket * &ket.adjoint()
    }

    pub fn bell_phi_plus_ket<R: Real>() -> ComplexMatrix<R> {
        max_entangled_ket(2)
    }

    pub fn bell_phi_minus_ket<R: Real>() -> ComplexMatrix<R> {
        let mut v = ComplexMatrix::zeros(4, 1);
        let amp = R::one() / Float::sqrt(R::of(2.0));
        v[(0, 0)] = c_re(amp);
        v[(3, 0)] = c_re(-amp);
        v
    }

    pub fn bell_psi_plus_ket<R: Real>() -> ComplexMatrix<R> {
        let mut v = ComplexMatrix::zeros(4, 1);
        let amp = R::one() / Float::sqrt(R::of(2.0));
        v[(1, 0)] = c_re(amp);
        v[(2, 0)] = c_re(amp);
        v
    }

    pub fn bell_psi_minus_ket<R: Real>() -> ComplexMatrix<R> {
        let mut v = ComplexMatrix::zeros(4, 1);
        let amp = R::one() / Float::sqrt(R::of(2.0));
        v[(1, 0)] = c_re(amp);
        v[(2, 0)] = c_re(-amp);
        v
    }

    /// Two-qubit density matrix of `|phi+><phi+|` as a plain matrix.
    pub fn bell_phi_plus<R: Real>() -> DensityMatrix<R> {
        DensityMatrix::new_unchecked(
            projector(&bell_phi_plus_ket()),
            SubsystemShape::new(vec![("A", 2), ("B", 2)]).unwrap(),
        )
    }

    /// `sqrt(mu)|00> + sqrt(1-mu)|11>`.
    pub fn psi_mu_ket<R: Real>(mu: R) -> Result<ComplexMatrix<R>> {
        if mu < R::zero() || mu > R::one() {
            return Err(Error::OutOfRange(format!("mu = {} not in [0,1]", mu.to64())));
        }
        let mut v = ComplexMatrix::zeros(4, 1);
        v[(0, 0)] = c_re(Float::sqrt(mu));
        v[(3, 0)] = c_re(Float::sqrt(R::one() - mu));
        Ok(v)
    }
}

pub mod sample {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    /// Complex Ginibre matrix with standard normal entries.
    pub fn ginibre<R: Real>(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix<R> {
        ComplexMatrix::from_fn(rows, cols, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C::new(R::of(re), R::of(im))
        })
    }

    /// Haar-random unitary via QR of a Ginibre matrix with phase fixing.
    pub fn random_unitary<R: Real>(rng: &mut impl Rng, d: usize) -> ComplexMatrix<R> {
        let g = ginibre::<f64>(rng, d, d);
        let na = nalgebra::DMatrix::from_fn(d, d, |r, c| {
            num_complex::Complex64::new(g[(r, c)].re, g[(r, c)].im)
        });
        let qr = na.qr();
        let q = qr.q();
        let rmat = qr.r();
        let mut u = ComplexMatrix::<R>::zeros(d, d);
        for c in 0..d {
            let rd = rmat[(c, c)];
            let phase = if rd.norm() > 0.0 {
                rd / rd.norm()
            } else {
                num_complex::Complex64::new(1.0, 0.0)
            };
            for r in 0..d {
                let z = q[(r, c)] * phase;
                u[(r, c)] = C::new(R::of(z.re), R::of(z.im));
            }
        }
        u
    }

    /// Random full-rank density matrix `G G^dag / Tr`.
    pub fn random_density<R: Real>(rng: &mut impl Rng, shape: SubsystemShape) -> DensityMatrix<R> {
        let d = shape.dim();
        let g = ginibre::<R>(rng, d, d);
        let w = &g * &g.adjoint();
        let tr = w.trace().re;
        DensityMatrix::new_unchecked(w.scale_re(R::one() / tr), shape)
    }

    /// Random CPTP Choi on an inputs-first shape.
    pub fn random_cptp_choi<R: Real>(
        rng: &mut impl Rng,
        shape: SubsystemShape,
        n_inputs: usize,
    ) -> ChoiMatrix<R> {
        let din: usize = shape.dims()[..n_inputs].iter().product();
        let dout: usize = shape.dims()[n_inputs..].iter().product();
        let dim = din * dout;
        let g = ginibre::<R>(rng, dim, dim);
        let w = &g * &g.adjoint();
        let in_names: Vec<String> = shape.names()[..n_inputs].iter().map(|s| s.to_string()).collect();
        let refs: Vec<&str> = in_names.iter().map(|s| s.as_str()).collect();
        let (marg, _) = w.partial_trace(&shape, &refs).unwrap();
        let n = marg.inv_sqrt_pd(R::of(1e-12)).unwrap();
        let lift = n.kron(&ComplexMatrix::identity(dout));
        let j = &(&lift * &w) * &lift;
        ChoiMatrix::new_unchecked(j, shape, n_inputs)
    }

    /// Random channel `din -> dout` as a Kraus family from a Haar isometry.
    pub fn random_channel_kraus<R: Real>(
        rng: &mut impl Rng,
        din: usize,
        dout: usize,
        denv: usize,
    ) -> Vec<ComplexMatrix<R>> {
        assert!(dout * denv >= din);
        let u = random_unitary::<R>(rng, dout * denv);
        (0..denv)
            .map(|e| {
                ComplexMatrix::from_fn(dout, din, |a, i| u[(a * denv + e, i)])
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    type M = ComplexMatrix<f64>;

    fn two_qubit_shape() -> SubsystemShape {
        SubsystemShape::channel(2, 2, 2, 2)
    }

    #[test]
    fn identity_choi_is_projector_times_dim() {
        let j = choi_from_unitary(&M::identity(4), two_qubit_shape()).unwrap();
        // J = 4 |Omega><Omega|
        let omega = states::max_entangled_ket::<f64>(4);
        let expect = states::projector(&omega).scale_re(4.0);
        assert!((j.mat() - &expect).max_abs() < 1e-12);
        // rank-1 scaling identity J^2 = d_in J
        let sq = j.mat() * j.mat();
        assert!((&sq - &j.mat().scale_re(4.0)).max_abs() < 1e-10);
        assert!(j.is_cptp(1e-9));
    }

    #[test]
    fn cnot_choi_rank_one_and_diag() {
        let j = choi_from_unitary(&gates::cnot::<f64>(), two_qubit_shape()).unwrap();
        let eigs = j.mat().hermitian_eigen().0;
        assert!((eigs[15] - 4.0).abs() < 1e-9);
        assert!(eigs[14].abs() < 1e-9);
        // diagonal vectorizes the CNOT permutation
        let s = j.decoherent_action().unwrap();
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        let expect = if a == x && b == (x + y) % 2 { 1.0 } else { 0.0 };
                        assert!((s.get(a, b, x, y) - expect).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn bit_flip_decoherent_action_is_permutation() {
        let u = gates::sigma_x::<f64>().kron(&M::identity(2));
        let j = choi_from_unitary(&u, two_qubit_shape()).unwrap();
        let s = j.decoherent_action().unwrap();
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        let expect = if a == 1 - x && b == y { 1.0 } else { 0.0 };
                        assert!((s.get(a, b, x, y) - expect).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn non_unitary_rejected() {
        let m = M::from_parts(&[vec![1.0, 0.0], vec![0.0, 2.0]], None).unwrap();
        let shape = SubsystemShape::new(vec![("in", 2), ("out", 2)]).unwrap();
        assert!(matches!(choi_from_unitary(&m, shape), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn depolarizing_endpoints_and_fidelity() {
        let j0 = depolarizing_choi::<f64>(0.0, 2).unwrap();
        assert!((j0.mat() - choi_identity::<f64>(2).mat()).max_abs() < 1e-12);

        let j1 = depolarizing_choi::<f64>(1.0, 2).unwrap();
        let expect = M::identity(4).scale_re(0.5);
        assert!((j1.mat() - &expect).max_abs() < 1e-12);

        // entanglement fidelity <phi+| (id (x) L_mu)(phi+) |phi+> = 1 - 3 mu / 4
        let mu = 0.5;
        let j = depolarizing_choi::<f64>(mu, 2).unwrap();
        let phi = states::bell_phi_plus_ket::<f64>();
        let f = states::projector(&phi).trace_product_re(&j.mat().scale_re(0.5));
        assert!((f - (1.0 - 3.0 * mu / 4.0)).abs() < 1e-12);
        assert!((f - 0.625).abs() < 1e-12);

        assert!(depolarizing_choi::<f64>(1.5, 2).is_err());
    }

    #[test]
    fn dephase_is_idempotent_and_fixes_diagonals() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let j = sample::random_cptp_choi::<f64>(&mut rng, two_qubit_shape(), 2);
        let d1 = j.dephase();
        let d2 = d1.dephase();
        assert!((d1.mat() - d2.mat()).max_abs() < 1e-15);
        // dephasing preserves the decoherent action
        let s1 = j.decoherent_action().unwrap();
        let s2 = d1.decoherent_action().unwrap();
        assert!(s1.max_abs_diff(&s2) < 1e-12);
    }

    #[test]
    fn dephased_cnot_diagonal_matches_action() {
        let j = choi_from_unitary(&gates::cnot::<f64>(), two_qubit_shape()).unwrap();
        let d = j.dephase();
        let s = j.decoherent_action().unwrap();
        // diag(dephase(J)) equals the column-stacked stochastic matrix
        let shape = two_qubit_shape();
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        let idx = shape.ravel(&[x, y, a, b]);
                        assert!((d.mat()[(idx, idx)].re - s.get(a, b, x, y)).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn apply_channel_basics() {
        let id = choi_identity::<f64>(4);
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let rho = sample::random_density::<f64>(&mut rng, SubsystemShape::new(vec![("in", 4)]).unwrap());
        let out = id.apply(&rho).unwrap();
        assert!((out.mat() - rho.mat()).max_abs() < 1e-12);

        let dep = depolarizing_choi::<f64>(1.0, 4).unwrap();
        let out = dep.apply(&rho).unwrap();
        assert!((out.mat() - &M::identity(4).scale_re(0.25)).max_abs() < 1e-12);

        // CNOT on |10><10| gives |11><11|
        let j = choi_from_unitary(&gates::cnot::<f64>(), two_qubit_shape()).unwrap();
        let ket10 = M::ket(4, 2);
        let rho10 = DensityMatrix::new_unchecked(
            states::projector(&ket10),
            SubsystemShape::new(vec![("A0", 2), ("B0", 2)]).unwrap(),
        );
        let out = j.apply(&rho10).unwrap();
        assert!((out.mat() - &states::projector(&M::ket(4, 3))).max_abs() < 1e-12);
    }

    #[test]
    fn apply_channel_trace_preserving_on_random_states() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..5 {
            let j = sample::random_cptp_choi::<f64>(&mut rng, two_qubit_shape(), 2);
            let rho = sample::random_density::<f64>(
                &mut rng,
                SubsystemShape::new(vec![("A0", 2), ("B0", 2)]).unwrap(),
            );
            let out = j.apply(&rho).unwrap();
            assert!((out.mat().trace().re - 1.0).abs() < 1e-9);
            assert!(out.mat().trace().im.abs() < 1e-12);
        }
    }

    #[test]
    fn u_mu_unitary_and_special_points() {
        for &mu in &[0.0, 0.17, 0.5, 0.73, 1.0] {
            let u = gates::u_mu::<f64>(mu).unwrap();
            assert!(u.unitary_deviation() < 1e-12);
        }
        // mu = 1/2 columns form the Bell basis (up to column phases)
        let u = gates::u_mu::<f64>(0.5).unwrap();
        let cols = [
            states::bell_phi_plus_ket::<f64>(),
            states::bell_psi_plus_ket::<f64>(),
            states::bell_psi_minus_ket::<f64>(),
            {
                let mut v = M::zeros(4, 1);
                v[(0, 0)] = c_re(1.0 / 2f64.sqrt());
                v[(3, 0)] = c_re(-1.0 / 2f64.sqrt());
                v
            },
        ];
        for (c, expect) in cols.iter().enumerate() {
            let overlap: C<f64> = (0..4)
                .map(|r| expect[(r, 0)].conj() * u[(r, c)])
                .fold(C::new(0.0, 0.0), |a, b| a + b);
            assert!((overlap.norm() - 1.0).abs() < 1e-12, "column {c} is not a Bell vector");
        }
    }

    #[test]
    fn link_identity_superchannel_preserves_channels() {
        let xi = choi_from_unitary(&M::identity(4), two_qubit_shape()).unwrap();

        let id1 = choi_identity::<f64>(2)
            .relabeled(vec!["A1", "B0"])
            .unwrap();
        let out = link_apply(&xi, &id1).unwrap();
        assert!((out.mat() - choi_identity::<f64>(2).mat()).max_abs() < 1e-10);

        for &mu in &[0.0, 0.3, 0.8] {
            let lam = depolarizing_choi::<f64>(mu, 2).unwrap().relabeled(vec!["A1", "B0"]).unwrap();
            let out = link_apply(&xi, &lam).unwrap();
            assert!((out.mat() - depolarizing_choi::<f64>(mu, 2).unwrap().mat()).max_abs() < 1e-10);
            // fidelity through the identity superchannel stays 1 - 3mu/4
            let phi = states::bell_phi_plus_ket::<f64>();
            let f = states::projector(&phi).trace_product_re(&out.mat().scale_re(0.5));
            assert!((f - (1.0 - 3.0 * mu / 4.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn link_discard_and_reprepare_gives_constant_channel() {
        // pre: discard A0, prepare |0> on A1 (memory trivial);
        // post: discard B0, prepare |1> on B1.
        let pre = vec![
            M::from_parts(&[vec![1.0, 0.0]], None).unwrap(), // <0|
            M::from_parts(&[vec![0.0, 1.0]], None).unwrap(),
        ]
        .into_iter()
        .map(|bra| {
            // |0>_{A1} (x) bra, memory dimension 1
            let ket0 = M::ket(2, 0);
            &ket0 * &bra
        })
        .collect::<Vec<_>>();
        let post = vec![
            {
                let ket1 = M::ket(2, 1);
                let bra0 = M::from_parts(&[vec![1.0, 0.0]], None).unwrap();
                &ket1 * &bra0
            },
            {
                let ket1 = M::ket(2, 1);
                let bra1 = M::from_parts(&[vec![0.0, 1.0]], None).unwrap();
                &ket1 * &bra1
            },
        ];
        let xi = superchannel_from_pre_post(&pre, &post, (2, 2, 2, 2), 1).unwrap();
        assert!(xi.is_cptp(1e-9));
        let lam = depolarizing_choi::<f64>(0.25, 2).unwrap().relabeled(vec!["A1", "B0"]).unwrap();
        let out = link_apply(&xi, &lam).unwrap();
        // constant channel: J = 1_{A0} (x) |1><1|
        let expect = M::identity(2).kron(&states::projector(&M::ket(2, 1)));
        assert!((out.mat() - &expect).max_abs() < 1e-10);
    }

    #[test]
    fn link_maps_cptp_to_cptp_for_random_combs() {
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        for _ in 0..5 {
            let d_mem = 2;
            // isometric pre-processing, channel post-processing
            let u = sample::random_unitary::<f64>(&mut rng, 4);
            let pre = vec![M::from_fn(4, 2, |r, c| u[(r, c)])];
            let post = sample::random_channel_kraus::<f64>(&mut rng, d_mem * 2, 2, 4);
            let xi = superchannel_from_pre_post(&pre, &post, (2, 2, 2, 2), d_mem).unwrap();
            assert!(xi.is_cptp(1e-9));
            let e = sample::random_cptp_choi::<f64>(
                &mut rng,
                SubsystemShape::new(vec![("A1", 2), ("B0", 2)]).unwrap(),
                1,
            );
            let out = link_apply(&xi, &e).unwrap();
            assert!(out.is_cptp(1e-7));
        }
    }

    #[test]
    fn random_cptp_choi_is_cptp() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..5 {
            let j = sample::random_cptp_choi::<f64>(&mut rng, two_qubit_shape(), 2);
            assert!(j.is_cptp(1e-9));
        }
    }

    #[test]
    fn relative_entropy_of_dephased_chois_matches_classical() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let j1 = sample::random_cptp_choi::<f64>(&mut rng, two_qubit_shape(), 2);
        let j2 = sample::random_cptp_choi::<f64>(&mut rng, two_qubit_shape(), 2);
        let d1 = j1.dephase();
        let d2 = j2.dephase();
        let h = quantum_relative_entropy(d1.mat(), d2.mat()).unwrap();
        let s1 = j1.decoherent_action().unwrap();
        let s2 = j2.decoherent_action().unwrap();
        let classical = s1.relative_entropy_to(&s2).unwrap();
        assert!((h - classical).abs() < 1e-9);
    }
}
