//! Constraint compilers for subsets of bipartite channels: CPTP, quantum
//! nonsignaling, the symmetric-extension outer hierarchy for local
//! operations with shared randomness (with optional strengthening by local
//! or nonsignaling decoherent actions), separability relaxations, and
//! one-way nonsignaling superchannels.
//!
//! Each compiler adds variables and constraints to a [`ProblemBuilder`] and
//! returns the symbolic Choi block of the physical channel in the canonical
//! `A0,B0,A1,B1` order, ready for a linear objective.

use crate::conic::{ExprMatrix, Field, LinExpr, ProblemBuilder, SolverReal};
use crate::error::{Error, Result};
use crate::mat::ComplexMatrix;
use crate::npa::{self, NpaLevel};
use crate::polytope::{LocalVertexSet, Scenario};
use crate::shape::SubsystemShape;
use std::fmt;
use std::str::FromStr;

/// Local dimensions of a bipartite channel `A0 B0 -> A1 B1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BipartiteShape {
    pub a0: usize,
    pub b0: usize,
    pub a1: usize,
    pub b1: usize,
}

impl BipartiteShape {
    pub fn two_qubit() -> Self {
        Self { a0: 2, b0: 2, a1: 2, b1: 2 }
    }

    pub fn canonical(&self) -> SubsystemShape {
        SubsystemShape::channel(self.a0, self.b0, self.a1, self.b1)
    }

    pub fn scenario(&self) -> Scenario {
        Scenario::new(self.a0, self.b0, self.a1, self.b1)
    }

    pub fn dim(&self) -> usize {
        self.a0 * self.b0 * self.a1 * self.b1
    }
}

/// Level and strengthening flags of the outer hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HierarchyLevel {
    pub n: u32,
    pub ppt_last: bool,
    pub swap_invariance: bool,
    pub qns_extension: bool,
    pub lda: bool,
    pub nsda: bool,
}

impl HierarchyLevel {
    pub fn new(n: u32) -> Self {
        assert!(n >= 1);
        Self { n, ppt_last: true, swap_invariance: true, qns_extension: true, lda: false, nsda: false }
    }

    pub fn with_lda(mut self) -> Self {
        self.lda = true;
        self
    }

    pub fn with_nsda(mut self) -> Self {
        self.nsda = true;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetTag {
    Cptp,
    /// General superchannels: positivity and trace preservation only.
    Cptpp,
    Qns,
    Ppt,
    LosrOuter(u32),
    Sep { k: u32, cptp_factors: bool },
    Lda,
    Nsda,
    Npa(NpaLevel),
    Super1Way,
}

/// A channel set as an intersection of tagged constraint families.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetSpec {
    tags: Vec<SetTag>,
}

impl SetSpec {
    pub fn new(tags: Vec<SetTag>) -> Self {
        Self { tags }
    }

    pub fn cptp() -> Self {
        Self::new(vec![SetTag::Cptp])
    }

    pub fn tags(&self) -> &[SetTag] {
        &self.tags
    }

    pub fn has(&self, f: impl Fn(&SetTag) -> bool) -> bool {
        self.tags.iter().any(f)
    }

    pub fn losr_level(&self) -> Option<u32> {
        self.tags.iter().find_map(|t| match t {
            SetTag::LosrOuter(n) => Some(*n),
            _ => None,
        })
    }

    pub fn sep_level(&self) -> Option<(u32, bool)> {
        self.tags.iter().find_map(|t| match t {
            SetTag::Sep { k, cptp_factors } => Some((*k, *cptp_factors)),
            _ => None,
        })
    }

    pub fn npa_level(&self) -> Option<NpaLevel> {
        self.tags.iter().find_map(|t| match t {
            SetTag::Npa(l) => Some(*l),
            _ => None,
        })
    }
}

impl FromStr for SetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut tags = Vec::new();
        for token in s.split('+') {
            let token = token.trim().to_ascii_lowercase();
            let tag = match token.as_str() {
                "cptp" => SetTag::Cptp,
                "cptpp" => SetTag::Cptpp,
                "qns" => SetTag::Qns,
                "ppt" => SetTag::Ppt,
                "lda" => SetTag::Lda,
                "nsda" => SetTag::Nsda,
                "super1way" => SetTag::Super1Way,
                "npa1" => SetTag::Npa(NpaLevel::L1),
                "npa1ab" => SetTag::Npa(NpaLevel::L1AB),
                "npa2" => SetTag::Npa(NpaLevel::L2),
                "npa3" => SetTag::Npa(NpaLevel::L3),
                t if t.starts_with("losr") => {
                    let n: u32 = t[4..]
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad hierarchy level in `{t}`")))?;
                    if n == 0 {
                        return Err(Error::Parse("hierarchy level must be >= 1".into()));
                    }
                    SetTag::LosrOuter(n)
                }
                t if t.starts_with("sepf") => {
                    let k: u32 = t[4..]
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad separability level in `{t}`")))?;
                    SetTag::Sep { k, cptp_factors: true }
                }
                t if t.starts_with("sep") => {
                    let k: u32 = t[3..]
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad separability level in `{t}`")))?;
                    if k == 0 {
                        return Err(Error::Parse("separability level must be >= 1".into()));
                    }
                    SetTag::Sep { k, cptp_factors: false }
                }
                other => return Err(Error::Parse(format!("unknown set tag `{other}`"))),
            };
            tags.push(tag);
        }
        if tags.is_empty() {
            return Err(Error::Parse("empty set specification".into()));
        }
        Ok(Self::new(tags))
    }
}

impl fmt::Display for SetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let token = |t: &SetTag| -> String {
            match t {
                SetTag::Cptp => "cptp".into(),
                SetTag::Cptpp => "cptpp".into(),
                SetTag::Qns => "qns".into(),
                SetTag::Ppt => "ppt".into(),
                SetTag::LosrOuter(n) => format!("losr{n}"),
                SetTag::Sep { k, cptp_factors: false } => format!("sep{k}"),
                SetTag::Sep { k, cptp_factors: true } => format!("sepf{k}"),
                SetTag::Lda => "lda".into(),
                SetTag::Nsda => "nsda".into(),
                SetTag::Npa(NpaLevel::L1) => "npa1".into(),
                SetTag::Npa(NpaLevel::L1AB) => "npa1ab".into(),
                SetTag::Npa(NpaLevel::L2) => "npa2".into(),
                SetTag::Npa(NpaLevel::L3) => "npa3".into(),
                SetTag::Super1Way => "super1way".into(),
            }
        };
        let joined: Vec<String> = self.tags.iter().map(token).collect();
        f.write_str(&joined.join("+"))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CompileOpts {
    pub field: Field,
    /// Largest allowed side of the extended PSD block.
    pub dim_cap: usize,
    pub vertex_cap: usize,
}

impl Default for CompileOpts {
    fn default() -> Self {
        Self { field: Field::Complex, dim_cap: 256, vertex_cap: crate::polytope::DEFAULT_VERTEX_CAP }
    }
}

impl CompileOpts {
    pub fn real() -> Self {
        Self { field: Field::Real, ..Self::default() }
    }
}

/// Fresh PSD block with the CPTP marginal constraint; returns the Choi
/// handle on the given inputs-first shape.
pub fn compile_cptp<R: SolverReal>(
    pb: &mut ProblemBuilder<R>,
    shape: &SubsystemShape,
    n_inputs: usize,
    field: Field,
) -> Result<ExprMatrix<R>> {
    let j = pb.hermitian_block(shape.dim(), field);
    add_tp_rows(pb, &j, shape, n_inputs)?;
    Ok(j)
}

fn add_tp_rows<R: SolverReal>(
    pb: &mut ProblemBuilder<R>,
    j: &ExprMatrix<R>,
    shape: &SubsystemShape,
    n_inputs: usize,
) -> Result<()> {
    let in_names: Vec<String> = shape.names()[..n_inputs].iter().map(|s| s.to_string()).collect();
    let refs: Vec<&str> = in_names.iter().map(|s| s.as_str()).collect();
    let (marg, marg_shape) = j.partial_trace(shape, &refs)?;
    pb.eq_matrix_const(&marg, &ComplexMatrix::identity(marg_shape.dim()));
    Ok(())
}

/// `J_{A0 B0 B1} = 1_{A0} (x) J_{B0 B1} / d_{A0}` (no signaling A -> B).
pub fn add_qns_a_side<R: SolverReal>(
    pb: &mut ProblemBuilder<R>,
    j: &ExprMatrix<R>,
    shape: &SubsystemShape,
) -> Result<()> {
    let d_a0 = shape.dim_of("A0")?;
    let keep: Vec<&str> = shape.names().into_iter().filter(|n| *n != "A1").collect();
    let (lhs, _) = j.partial_trace(shape, &keep)?;
    let keep_b: Vec<&str> = shape
        .names()
        .into_iter()
        .filter(|n| *n != "A0" && *n != "A1")
        .collect();
    let (b_marg, _) = j.partial_trace(shape, &keep_b)?;
    let scaled_id = ComplexMatrix::identity(d_a0).scale_re(R::one() / R::of(d_a0 as f64));
    let rhs = b_marg.kron_const_left(&scaled_id);
    pb.eq_matrices(&lhs, &rhs);
    Ok(())
}

/// `J_{A0 A1 B0} = J_{A0 A1} (x) 1_{B0} / d_{B0}` (no signaling B -> A).
pub fn add_qns_b_side<R: SolverReal>(
    pb: &mut ProblemBuilder<R>,
    j: &ExprMatrix<R>,
    shape: &SubsystemShape,
) -> Result<()> {
    let d_b0 = shape.dim_of("B0")?;
    let keep: Vec<&str> = shape.names().into_iter().filter(|n| *n != "B1").collect();
    let (lhs, lhs_shape) = j.partial_trace(shape, &keep)?;
    let keep_a: Vec<&str> = shape
        .names()
        .into_iter()
        .filter(|n| *n != "B0" && *n != "B1")
        .collect();
    let (a_marg, a_shape) = j.partial_trace(shape, &keep_a)?;
    let scaled_id = ComplexMatrix::identity(d_b0).scale_re(R::one() / R::of(d_b0 as f64));
    let rhs_raw = a_marg.kron_const_right(&scaled_id);
    let rhs_shape = a_shape.concat(&SubsystemShape::new(vec![("B0", d_b0)])?)?;
    let lhs_names = lhs_shape.names();
    let (rhs, _) = rhs_raw.permute_subsystems(&rhs_shape, &lhs_names)?;
    pb.eq_matrices(&lhs, &rhs);
    Ok(())
}

/// Both quantum nonsignaling marginal conditions.
pub fn compile_qns<R: SolverReal>(
    pb: &mut ProblemBuilder<R>,
    j: &ExprMatrix<R>,
    shape: &SubsystemShape,
) -> Result<()> {
    add_qns_a_side(pb, j, shape)?;
    add_qns_b_side(pb, j, shape)
}

/// Local-decoherent-action strengthening: `diag(J)` must be a convex
/// mixture of deterministic product strategies.
pub fn compile_lda<R: SolverReal>(
    pb: &mut ProblemBuilder<R>,
    j: &ExprMatrix<R>,
    shape: &SubsystemShape,
    scenario: Scenario,
    vertex_cap: usize,
) -> Result<Vec<usize>> {
    let vertices = LocalVertexSet::<R>::enumerate(scenario, vertex_cap)?;
    let q = pb.nonneg_vars(vertices.len());
    let mut norm = LinExpr::zero();
    for &v in &q {
        norm.add_term(v, R::one());
    }
    pb.eq_zero(norm.minus(&LinExpr::constant(R::one())));
    for x in 0..scenario.nx {
        for y in 0..scenario.ny {
            for a in 0..scenario.na {
                for b in 0..scenario.nb {
                    let idx = shape.ravel(&[x, y, a, b]);
                    let mut mix = LinExpr::zero();
                    for (k, vert) in vertices.vertices().iter().enumerate() {
                        let d = vert.get(a, b, x, y);
                        if d != R::zero() {
                            mix.add_term(q[k], d);
                        }
                    }
                    pb.eq_zero(j.get(idx, idx).re.minus(&mix));
                }
            }
        }
    }
    Ok(q)
}

/// Nonsignaling constraints on the decoherent action `diag(J)`.
pub fn compile_nsda<R: SolverReal>(
    pb: &mut ProblemBuilder<R>,
    j: &ExprMatrix<R>,
    shape: &SubsystemShape,
    scenario: Scenario,
) -> Result<()> {
    let p = |x: usize, y: usize, a: usize, b: usize| -> LinExpr<R> {
        j.get(shape.ravel(&[x, y, a, b]), shape.ravel(&[x, y, a, b])).re.clone()
    };
    for x in 0..scenario.nx {
        for a in 0..scenario.na {
            for y in 1..scenario.ny {
                let mut d = LinExpr::zero();
                for b in 0..scenario.nb {
                    d = d.plus(&p(x, y, a, b)).minus(&p(x, 0, a, b));
                }
                pb.eq_zero(d);
            }
        }
    }
    for y in 0..scenario.ny {
        for b in 0..scenario.nb {
            for x in 1..scenario.nx {
                let mut d = LinExpr::zero();
                for a in 0..scenario.na {
                    d = d.plus(&p(x, y, a, b)).minus(&p(0, y, a, b));
                }
                pb.eq_zero(d);
            }
        }
    }
    Ok(())
}

fn extended_shape(bshape: &BipartiteShape, n: u32) -> Result<SubsystemShape> {
    let mut parts: Vec<(String, usize)> = vec![
        ("A0".into(), bshape.a0),
        ("A1".into(), bshape.a1),
        ("B0".into(), bshape.b0),
        ("B1".into(), bshape.b1),
    ];
    for k in 2..=n {
        parts.push((format!("B0.{k}"), bshape.b0));
        parts.push((format!("B1.{k}"), bshape.b1));
    }
    SubsystemShape::new(parts)
}

fn copy_labels(k: u32) -> (String, String) {
    if k == 1 {
        ("B0".into(), "B1".into())
    } else {
        (format!("B0.{k}"), format!("B1.{k}"))
    }
}

/// Outer approximation of LOSR at level `n`: symmetric extension of the
/// B side, partial transpose on the last copy, and nonsignaling marginal
/// conditions on the extension. Returns the physical Choi block in
/// canonical order.
pub fn compile_losr_outer<R: SolverReal>(
    pb: &mut ProblemBuilder<R>,
    level: &HierarchyLevel,
    bshape: &BipartiteShape,
    opts: &CompileOpts,
) -> Result<ExprMatrix<R>> {
    let n = level.n;
    let shape = extended_shape(bshape, n)?;
    if shape.dim() > opts.dim_cap {
        return Err(Error::CapExceeded(format!(
            "extended dimension {} exceeds cap {}",
            shape.dim(),
            opts.dim_cap
        )));
    }

    // swap invariance by variable sharing across entry orbits
    let mut perms: Vec<Vec<usize>> = Vec::new();
    if level.swap_invariance {
        for i in 1..n {
            let (bi0, bi1) = copy_labels(i);
            let (bn0, bn1) = copy_labels(n);
            let order: Vec<String> = shape
                .names()
                .into_iter()
                .map(|name| {
                    if name == bi0 {
                        bn0.clone()
                    } else if name == bi1 {
                        bn1.clone()
                    } else if name == bn0 {
                        bi0.clone()
                    } else if name == bn1 {
                        bi1.clone()
                    } else {
                        name.to_string()
                    }
                })
                .collect();
            let refs: Vec<&str> = order.iter().map(|s| s.as_str()).collect();
            let positions = shape.indices_of(&refs)?;
            perms.push(shape.permutation_map(&positions));
        }
    }
    let x = pb.symmetric_hermitian_block(shape.dim(), opts.field, &perms);

    // trace preservation: marginal on the physical inputs A0, B0
    add_tp_rows_named(pb, &x, &shape)?;

    // A-side nonsignaling on the extension
    if level.qns_extension {
        add_qns_a_side(pb, &x, &shape)?;
        // B-side on the last copy
        let (b0n, b1n) = copy_labels(n);
        let keep: Vec<&str> = shape.names().into_iter().filter(|m| *m != b1n).collect();
        let (lhs, lhs_shape) = x.partial_trace(&shape, &keep)?;
        let keep_rest: Vec<&str> = shape
            .names()
            .into_iter()
            .filter(|m| *m != b0n && *m != b1n)
            .collect();
        let (rest, rest_shape) = x.partial_trace(&shape, &keep_rest)?;
        let scaled_id =
            ComplexMatrix::identity(bshape.b0).scale_re(R::one() / R::of(bshape.b0 as f64));
        let rhs_raw = rest.kron_const_right(&scaled_id);
        let rhs_shape = rest_shape.concat(&SubsystemShape::new(vec![(b0n.clone(), bshape.b0)])?)?;
        let lhs_names = lhs_shape.names();
        let (rhs, _) = rhs_raw.permute_subsystems(&rhs_shape, &lhs_names)?;
        pb.eq_matrices(&lhs, &rhs);
    }

    // partial transpose on the last copy
    if level.ppt_last {
        let (b0n, b1n) = copy_labels(n);
        let pt = x.partial_transpose(&shape, &[b0n.as_str(), b1n.as_str()])?;
        pb.psd(pt, opts.field);
    }

    // physical marginal in canonical order
    let (phys, phys_shape) = x.partial_trace(&shape, &["A0", "A1", "B0", "B1"])?;
    let (j, _) = phys.permute_subsystems(&phys_shape, &["A0", "B0", "A1", "B1"])?;

    let canon = bshape.canonical();
    if level.lda {
        compile_lda(pb, &j, &canon, bshape.scenario(), opts.vertex_cap)?;
    }
    if level.nsda {
        compile_nsda(pb, &j, &canon, bshape.scenario())?;
    }
    Ok(j)
}

fn multiset_classes(d: usize, k: u32) -> (Vec<usize>, Vec<usize>) {
    // class index per word, and word count per class
    let n_words = d.pow(k);
    let mut class_of = vec![0usize; n_words];
    let mut class_ids: std::collections::HashMap<Vec<usize>, usize> = Default::default();
    let mut counts: Vec<usize> = Vec::new();
    for w in 0..n_words {
        let mut digits = Vec::with_capacity(k as usize);
        let mut rem = w;
        for _ in 0..k {
            digits.push(rem % d);
            rem /= d;
        }
        digits.sort_unstable();
        let id = *class_ids.entry(digits).or_insert_with(|| {
            counts.push(0);
            counts.len() - 1
        });
        class_of[w] = id;
        counts[id] += 1;
    }
    (class_of, counts)
}

/// Level-`k` outer approximation of separable channels across the
/// `(A0 A1)|(B0 B1)` cut: Bose-symmetric extension of the B side with a
/// partial transpose on the last copy, plus the CPTP marginal. With
/// `cptp_factors` the extension nonsignaling constraints are added as well,
/// which matches the LOSR hierarchy at the same level.
pub fn compile_sep_dps<R: SolverReal>(
    pb: &mut ProblemBuilder<R>,
    k: u32,
    bshape: &BipartiteShape,
    cptp_factors: bool,
    opts: &CompileOpts,
) -> Result<ExprMatrix<R>> {
    if cptp_factors {
        return compile_losr_outer(pb, &HierarchyLevel::new(k), bshape, opts);
    }
    if k == 0 {
        return Err(Error::OutOfRange("separability level must be >= 1".into()));
    }
    let da = bshape.a0 * bshape.a1; // grouped A = (A0, A1)
    let db = bshape.b0 * bshape.b1; // grouped B = (B0, B1)
    let full_dim = da * db.pow(k);
    if full_dim > opts.dim_cap {
        return Err(Error::CapExceeded(format!(
            "extended dimension {full_dim} exceeds cap {}",
            opts.dim_cap
        )));
    }

    let (class_of, counts) = multiset_classes(db, k);
    let sym_dim = counts.len();
    let xt = pb.hermitian_block(da * sym_dim, opts.field);

    // X = (1 (x) V) Xt (1 (x) V)^dag with V the symmetric-subspace isometry:
    // X[(alpha,u),(beta,w)] = Xt[(alpha,cls u),(beta,cls w)] / sqrt(m_u m_w)
    let n_words = db.pow(k);
    let scale: Vec<R> = (0..n_words)
        .map(|w| R::one() / num_traits::Float::sqrt(R::of(counts[class_of[w]] as f64)))
        .collect();
    let x = ExprMatrix::from_fn(full_dim, full_dim, |r, c| {
        let (alpha, u) = (r / n_words, r % n_words);
        let (beta, w) = (c / n_words, c % n_words);
        let tr = alpha * sym_dim + class_of[u];
        let tc = beta * sym_dim + class_of[w];
        xt.get(tr, tc).scaled(crate::scalar::c_re(scale[u] * scale[w]))
    });

    let shape = extended_shape_grouped(bshape, k)?;
    add_tp_rows_named(pb, &x, &shape)?;

    // partial transpose on the last copy
    let (b0n, b1n) = copy_labels(k);
    let pt = x.partial_transpose(&shape, &[b0n.as_str(), b1n.as_str()])?;
    pb.psd(pt, opts.field);

    let (phys, phys_shape) = x.partial_trace(&shape, &["A0", "A1", "B0", "B1"])?;
    let (j, _) = phys.permute_subsystems(&phys_shape, &["A0", "B0", "A1", "B1"])?;
    Ok(j)
}

fn extended_shape_grouped(bshape: &BipartiteShape, k: u32) -> Result<SubsystemShape> {
    // A = (A0, A1) first, then k copies of B = (B0, B1)
    let mut parts: Vec<(String, usize)> = vec![
        ("A0".into(), bshape.a0),
        ("A1".into(), bshape.a1),
        ("B0".into(), bshape.b0),
        ("B1".into(), bshape.b1),
    ];
    for c in 2..=k {
        parts.push((format!("B0.{c}"), bshape.b0));
        parts.push((format!("B1.{c}"), bshape.b1));
    }
    SubsystemShape::new(parts)
}

fn add_tp_rows_named<R: SolverReal>(
    pb: &mut ProblemBuilder<R>,
    x: &ExprMatrix<R>,
    shape: &SubsystemShape,
) -> Result<()> {
    let (marg, marg_shape) = x.partial_trace(shape, &["A0", "B0"])?;
    pb.eq_matrix_const(&marg, &ComplexMatrix::identity(marg_shape.dim()));
    Ok(())
}

/// One-way nonsignaling superchannel: `J >= 0`, `Tr_{A1 B1} J = 1`, and
/// `J_{A0 A1 B0} = J_{A0 A1} (x) 1_{B0} / d_{B0}`.
pub fn compile_superchannel<R: SolverReal>(
    pb: &mut ProblemBuilder<R>,
    bshape: &BipartiteShape,
    field: Field,
) -> Result<ExprMatrix<R>> {
    let shape = bshape.canonical();
    let j = pb.hermitian_block(shape.dim(), field);
    add_tp_rows_named(pb, &j, &shape)?;
    add_qns_b_side(pb, &j, &shape)?;
    Ok(j)
}

/// Compiled channel set: the physical Choi handle in canonical order.
pub struct CompiledSet<R> {
    pub j: ExprMatrix<R>,
    pub shape: SubsystemShape,
}

/// Compile an intersection of set tags over a bipartite-channel shape.
pub fn compile_set<R: SolverReal>(
    pb: &mut ProblemBuilder<R>,
    spec: &SetSpec,
    bshape: &BipartiteShape,
    opts: &CompileOpts,
) -> Result<CompiledSet<R>> {
    let shape = bshape.canonical();
    let losr = spec.losr_level();
    let sep = spec.sep_level();
    if losr.is_some() && sep.is_some() {
        return Err(Error::Invalid("losrN and sepK cannot be combined".into()));
    }

    let j = if let Some(n) = losr {
        compile_losr_outer(pb, &HierarchyLevel::new(n), bshape, opts)?
    } else if let Some((k, factors)) = sep {
        compile_sep_dps(pb, k, bshape, factors, opts)?
    } else {
        compile_cptp(pb, &shape, 2, opts.field)?
    };

    let base_is_hierarchy = losr.is_some() || matches!(sep, Some((_, true)));

    if spec.has(|t| matches!(t, SetTag::Qns)) && !base_is_hierarchy {
        compile_qns(pb, &j, &shape)?;
    }
    if spec.has(|t| matches!(t, SetTag::Super1Way)) && !base_is_hierarchy {
        add_qns_b_side(pb, &j, &shape)?;
    }
    if spec.has(|t| matches!(t, SetTag::Ppt)) && losr.is_none() && sep.is_none() {
        let pt = j.partial_transpose(&shape, &["B0", "B1"])?;
        pb.psd(pt, opts.field);
    }
    if spec.has(|t| matches!(t, SetTag::Lda)) {
        compile_lda(pb, &j, &shape, bshape.scenario(), opts.vertex_cap)?;
    }
    if spec.has(|t| matches!(t, SetTag::Nsda)) {
        compile_nsda(pb, &j, &shape, bshape.scenario())?;
    }
    if let Some(level) = spec.npa_level() {
        npa::compile_npada(pb, &j, &shape, bshape.scenario(), level)?;
    }
    Ok(CompiledSet { j, shape })
}
