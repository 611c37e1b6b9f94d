//! Moment-matrix outer approximations of the quantum set of bipartite
//! distributions, with the Collins-Gisin reduction (one omitted outcome per
//! input). The moment matrix is real symmetric; entries indexed by words
//! that agree up to adjoints are identified.

use crate::conic::{CLinExpr, ExprMatrix, Field, LinExpr, ProblemBuilder, SolverReal};
use crate::error::{Error, Result};
use crate::polytope::Scenario;
use crate::scalar::Real;
use crate::shape::SubsystemShape;
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NpaLevel {
    L1,
    L1AB,
    L2,
    L3,
}

impl NpaLevel {
    /// Maximum word lengths (per party total) admitted at this level.
    fn admits(&self, la: usize, lb: usize) -> bool {
        match self {
            NpaLevel::L1 => la + lb <= 1,
            NpaLevel::L1AB => la + lb <= 1 || (la == 1 && lb == 1),
            NpaLevel::L2 => la + lb <= 2,
            NpaLevel::L3 => la + lb <= 3,
        }
    }

    fn max_len(&self) -> usize {
        match self {
            NpaLevel::L1 => 1,
            NpaLevel::L1AB => 2,
            NpaLevel::L2 => 2,
            NpaLevel::L3 => 3,
        }
    }
}

/// Projector generator in the Collins-Gisin set: outcome index is always
/// below the last outcome of its input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Gen {
    A { x: u8, a: u8 },
    B { y: u8, b: u8 },
}

impl Gen {
    fn same_input(&self, other: &Gen) -> bool {
        match (self, other) {
            (Gen::A { x: x1, .. }, Gen::A { x: x2, .. }) => x1 == x2,
            (Gen::B { y: y1, .. }, Gen::B { y: y2, .. }) => y1 == y2,
            _ => false,
        }
    }
}

/// Product of projectors in normal form: the A factors then the B factors
/// (the parties commute), each party's factors in application order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Word {
    a: Vec<Gen>,
    b: Vec<Gen>,
}

impl Word {
    fn identity() -> Self {
        Self { a: Vec::new(), b: Vec::new() }
    }

    fn len(&self) -> (usize, usize) {
        (self.a.len(), self.b.len())
    }

    fn adjoint(&self) -> Self {
        Self {
            a: self.a.iter().rev().copied().collect(),
            b: self.b.iter().rev().copied().collect(),
        }
    }
}

/// Reduce a projector sequence: adjacent equal projectors collapse,
/// adjacent orthogonal projectors (same input, different outcome) vanish.
fn reduce_party(gens: &[Gen]) -> Option<Vec<Gen>> {
    let mut out: Vec<Gen> = Vec::with_capacity(gens.len());
    for &g in gens {
        match out.last() {
            Some(&top) if top == g => {}
            Some(&top) if top.same_input(&g) => return None,
            _ => out.push(g),
        }
    }
    Some(out)
}

fn word_product(u: &Word, v: &Word) -> Option<Word> {
    let mut a = u.a.clone();
    a.extend_from_slice(&v.a);
    let mut b = u.b.clone();
    b.extend_from_slice(&v.b);
    Some(Word { a: reduce_party(&a)?, b: reduce_party(&b)? })
}

fn canonical(w: &Word) -> Word {
    let adj = w.adjoint();
    if adj < *w {
        adj
    } else {
        w.clone()
    }
}

/// Reduced words of exact length `len` over one party's generators, with no
/// two adjacent factors sharing an input.
fn party_words(gens: &[Gen], len: usize) -> Vec<Vec<Gen>> {
    if len == 0 {
        return vec![Vec::new()];
    }
    let mut words: Vec<Vec<Gen>> = gens.iter().map(|&g| vec![g]).collect();
    for _ in 1..len {
        let mut next = Vec::new();
        for w in &words {
            let last = *w.last().unwrap();
            for &g in gens {
                if !last.same_input(&g) {
                    let mut w2 = w.clone();
                    w2.push(g);
                    next.push(w2);
                }
            }
        }
        words = next;
    }
    words
}

/// Distribution entries `p(a,b|x,y)` as affine expressions over the moment
/// matrix variables, plus the underlying symbolic moment matrix.
pub struct NpaHandles<R> {
    scenario: Scenario,
    p: Vec<LinExpr<R>>,
    pub moment_side: usize,
}

impl<R: Real> NpaHandles<R> {
    pub fn p(&self, a: usize, b: usize, x: usize, y: usize) -> &LinExpr<R> {
        let sc = self.scenario;
        &self.p[((x * sc.ny + y) * sc.na + a) * sc.nb + b]
    }
}

/// Compile the moment-matrix relaxation for a two-party scenario; the
/// returned handles expose all `p(a,b|x,y)` as affine expressions with
/// normalization built in.
pub fn npa_compile<R: SolverReal>(
    pb: &mut ProblemBuilder<R>,
    scenario: Scenario,
    level: NpaLevel,
) -> Result<NpaHandles<R>> {
    if scenario.na < 2 || scenario.nb < 2 {
        return Err(Error::Invalid("each party needs at least two outcomes".into()));
    }
    let a_gens: Vec<Gen> = (0..scenario.nx)
        .flat_map(|x| (0..scenario.na - 1).map(move |a| Gen::A { x: x as u8, a: a as u8 }))
        .collect();
    let b_gens: Vec<Gen> = (0..scenario.ny)
        .flat_map(|y| (0..scenario.nb - 1).map(move |b| Gen::B { y: y as u8, b: b as u8 }))
        .collect();

    let mut words: Vec<Word> = Vec::new();
    let max_len = level.max_len();
    for la in 0..=max_len {
        for lb in 0..=max_len {
            if !level.admits(la, lb) {
                continue;
            }
            for wa in party_words(&a_gens, la) {
                for wb in party_words(&b_gens, lb) {
                    words.push(Word { a: wa.clone(), b: wb });
                }
            }
        }
    }
    let side = words.len();

    let mut var_of: HashMap<Word, usize> = HashMap::new();
    let mut gamma = ExprMatrix::zeros(side, side);
    for i in 0..side {
        for j in i..side {
            let prod = word_product(&words[i].adjoint(), &words[j]);
            let entry = match prod {
                None => CLinExpr::zero(),
                Some(w) => {
                    let key = canonical(&w);
                    let v = *var_of.entry(key).or_insert_with(|| pb.free_var());
                    CLinExpr::from_re(LinExpr::var(v))
                }
            };
            gamma.set(i, j, entry.clone());
            if j > i {
                gamma.set(j, i, entry);
            }
        }
    }
    // normalization: <1> = 1
    let id_var = var_of[&Word::identity()];
    pb.eq_zero(LinExpr::var(id_var).minus(&LinExpr::constant(R::one())));
    pb.psd(gamma, Field::Real);

    // Collins-Gisin table entries
    let single = |g: Gen| -> Word {
        match g {
            Gen::A { .. } => Word { a: vec![g], b: Vec::new() },
            Gen::B { .. } => Word { a: Vec::new(), b: vec![g] },
        }
    };
    let lookup = |var_of: &HashMap<Word, usize>, w: &Word| -> LinExpr<R> {
        LinExpr::var(var_of[&canonical(w)])
    };
    let mut p = Vec::with_capacity(scenario.n_entries());
    for x in 0..scenario.nx {
        for y in 0..scenario.ny {
            // joint table for reduced outcomes
            let joint = |a: usize, b: usize| -> LinExpr<R> {
                let w = Word {
                    a: vec![Gen::A { x: x as u8, a: a as u8 }],
                    b: vec![Gen::B { y: y as u8, b: b as u8 }],
                };
                lookup(&var_of, &w)
            };
            let marg_a =
                |a: usize| -> LinExpr<R> { lookup(&var_of, &single(Gen::A { x: x as u8, a: a as u8 })) };
            let marg_b =
                |b: usize| -> LinExpr<R> { lookup(&var_of, &single(Gen::B { y: y as u8, b: b as u8 })) };
            for a in 0..scenario.na {
                for b in 0..scenario.nb {
                    let last_a = a == scenario.na - 1;
                    let last_b = b == scenario.nb - 1;
                    let expr = match (last_a, last_b) {
                        (false, false) => joint(a, b),
                        (true, false) => {
                            let mut e = marg_b(b);
                            for a2 in 0..scenario.na - 1 {
                                e = e.minus(&joint(a2, b));
                            }
                            e
                        }
                        (false, true) => {
                            let mut e = marg_a(a);
                            for b2 in 0..scenario.nb - 1 {
                                e = e.minus(&joint(a, b2));
                            }
                            e
                        }
                        (true, true) => {
                            let mut e = LinExpr::constant(R::one());
                            for a2 in 0..scenario.na - 1 {
                                e = e.minus(&marg_a(a2));
                            }
                            for b2 in 0..scenario.nb - 1 {
                                e = e.minus(&marg_b(b2));
                            }
                            for a2 in 0..scenario.na - 1 {
                                for b2 in 0..scenario.nb - 1 {
                                    e = e.plus(&joint(a2, b2));
                                }
                            }
                            e
                        }
                    };
                    p.push(expr);
                }
            }
        }
    }
    Ok(NpaHandles { scenario, p, moment_side: side })
}

/// Couple a channel's decoherent action to the quantum set: equate
/// `diag(J)` with the distribution entries of a compiled moment matrix.
pub fn compile_npada<R: SolverReal>(
    pb: &mut ProblemBuilder<R>,
    j: &ExprMatrix<R>,
    shape: &SubsystemShape,
    scenario: Scenario,
    level: NpaLevel,
) -> Result<NpaHandles<R>> {
    let handles = npa_compile(pb, scenario, level)?;
    for x in 0..scenario.nx {
        for y in 0..scenario.ny {
            for a in 0..scenario.na {
                for b in 0..scenario.nb {
                    let idx = shape.ravel(&[x, y, a, b]);
                    pb.eq_zero(j.get(idx, idx).re.minus(handles.p(a, b, x, y)));
                }
            }
        }
    }
    Ok(handles)
}
