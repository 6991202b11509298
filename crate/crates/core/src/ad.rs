//! Generic tensor algebra with truncated polynomial jets, forward duals and
//! a recording tape for tangent and adjoint sweeps.
//!
//! Coupled-cluster residuals are written once against [`Algebra`]. Photon
//! creation operators commute with every electronic operator, so the
//! photon-dressed amplitudes are carried as coefficients of monomials in
//! `b†` ([`Jet`]). Directional derivatives use [`Dual`]; the EOM Jacobian and
//! the Λ gradient come from a [`Tape`].

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use crate::sym::BlockedTensor;

/// Operations the residual code needs from its numeric type.
pub trait Algebra: Clone {
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn scale(&self, s: f64) -> Self;
    fn contract(&self, o: &Self, spec: &str) -> Self;
    fn permute(&self, perm: &[usize]) -> Self;
}

impl Algebra for BlockedTensor {
    fn add(&self, o: &Self) -> Self {
        BlockedTensor::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        BlockedTensor::sub(self, o)
    }
    fn scale(&self, s: f64) -> Self {
        BlockedTensor::scale(self, s)
    }
    fn contract(&self, o: &Self, spec: &str) -> Self {
        BlockedTensor::contract(self, o, spec)
    }
    fn permute(&self, perm: &[usize]) -> Self {
        BlockedTensor::permute(self, perm)
    }
}

/// `x - P(01) x` on a rank-4 tensor.
pub fn anti_01<A: Algebra>(x: &A) -> A {
    x.sub(&x.permute(&[1, 0, 2, 3]))
}

/// `x - P(23) x` on a rank-4 tensor.
pub fn anti_23<A: Algebra>(x: &A) -> A {
    x.sub(&x.permute(&[0, 1, 3, 2]))
}

/// `(1 - P(01))(1 - P(23)) x` on a rank-4 tensor.
pub fn anti_both<A: Algebra>(x: &A) -> A {
    anti_23(&anti_01(x))
}

fn sum_opt<A: Algebra>(acc: Option<A>, x: A) -> Option<A> {
    Some(match acc {
        Some(a) => a.add(&x),
        None => x,
    })
}

// ---------------------------------------------------------------------------
// Jets

/// Monomial in the commuting photon creators, at most quadratic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mono {
    One,
    Lin(usize),
    /// `b†_m b†_n` with `m <= n`.
    Quad(usize, usize),
}

impl Mono {
    pub fn degree(self) -> u8 {
        match self {
            Mono::One => 0,
            Mono::Lin(_) => 1,
            Mono::Quad(..) => 2,
        }
    }

    pub fn quad(m: usize, n: usize) -> Mono {
        Mono::Quad(m.min(n), m.max(n))
    }

    fn modes(self) -> Vec<usize> {
        match self {
            Mono::One => vec![],
            Mono::Lin(m) => vec![m],
            Mono::Quad(m, n) => vec![m, n],
        }
    }

    fn from_modes(v: &[usize]) -> Option<Mono> {
        match v {
            [] => Some(Mono::One),
            [m] => Some(Mono::Lin(*m)),
            [m, n] => Some(Mono::quad(*m, *n)),
            _ => None,
        }
    }

    /// Product of two monomials, `None` above degree two.
    pub fn mul(self, o: Mono) -> Option<Mono> {
        let mut v = self.modes();
        v.extend(o.modes());
        Mono::from_modes(&v)
    }
}

/// Polynomial in `b†` with tensor coefficients, truncated at `deg`.
#[derive(Clone, Debug)]
pub struct Jet<A> {
    pub terms: BTreeMap<Mono, A>,
    pub deg: u8,
}

impl<A: Algebra> Jet<A> {
    /// A photon-free constant; never limits the truncation of a product.
    pub fn constant(a: A) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Mono::One, a);
        Jet { terms, deg: 2 }
    }

    pub fn empty(deg: u8) -> Self {
        Jet { terms: BTreeMap::new(), deg }
    }

    pub fn with(mut self, m: Mono, a: A) -> Self {
        if m.degree() <= self.deg {
            self.terms.insert(m, a);
        }
        self
    }

    pub fn get(&self, m: Mono) -> Option<&A> {
        self.terms.get(&m)
    }

    pub fn truncate(&self, deg: u8) -> Self {
        Jet {
            terms: self.terms.iter().filter(|(m, _)| m.degree() <= deg).map(|(m, a)| (*m, a.clone())).collect(),
            deg: deg.min(self.deg),
        }
    }

    /// Multiplies by `b†_m`.
    pub fn shift(&self, m: usize) -> Self {
        let mut out = Jet::empty(self.deg);
        for (k, a) in &self.terms {
            if let Some(p) = k.mul(Mono::Lin(m)) {
                if p.degree() <= self.deg {
                    out.terms.insert(p, a.clone());
                }
            }
        }
        out
    }

    fn merge(&self, o: &Self, neg: bool) -> Self {
        let deg = self.deg.min(o.deg);
        let mut terms: BTreeMap<Mono, A> = BTreeMap::new();
        for (m, a) in &self.terms {
            if m.degree() <= deg {
                terms.insert(*m, a.clone());
            }
        }
        for (m, b) in &o.terms {
            if m.degree() > deg {
                continue;
            }
            let v = match terms.remove(m) {
                Some(a) => {
                    if neg {
                        a.sub(b)
                    } else {
                        a.add(b)
                    }
                }
                None => {
                    if neg {
                        b.scale(-1.0)
                    } else {
                        b.clone()
                    }
                }
            };
            terms.insert(*m, v);
        }
        Jet { terms, deg }
    }
}

impl<A: Algebra> Algebra for Jet<A> {
    fn add(&self, o: &Self) -> Self {
        self.merge(o, false)
    }
    fn sub(&self, o: &Self) -> Self {
        self.merge(o, true)
    }
    fn scale(&self, s: f64) -> Self {
        Jet { terms: self.terms.iter().map(|(m, a)| (*m, a.scale(s))).collect(), deg: self.deg }
    }
    fn contract(&self, o: &Self, spec: &str) -> Self {
        let deg = self.deg.min(o.deg);
        let mut acc: BTreeMap<Mono, Option<A>> = BTreeMap::new();
        for (ma, a) in &self.terms {
            for (mb, b) in &o.terms {
                if let Some(p) = ma.mul(*mb) {
                    if p.degree() <= deg {
                        let slot = acc.entry(p).or_insert(None);
                        *slot = sum_opt(slot.take(), a.contract(b, spec));
                    }
                }
            }
        }
        Jet { terms: acc.into_iter().filter_map(|(m, a)| a.map(|a| (m, a))).collect(), deg }
    }
    fn permute(&self, perm: &[usize]) -> Self {
        Jet { terms: self.terms.iter().map(|(m, a)| (*m, a.permute(perm))).collect(), deg: self.deg }
    }
}

// ---------------------------------------------------------------------------
// Duals

/// Value with an optional forward tangent.
#[derive(Clone, Debug)]
pub struct Dual<A> {
    pub p: A,
    pub t: Option<A>,
}

impl<A: Algebra> Dual<A> {
    pub fn new(p: A, t: Option<A>) -> Self {
        Dual { p, t }
    }
    pub fn constant(p: A) -> Self {
        Dual { p, t: None }
    }
}

impl<A: Algebra> Algebra for Dual<A> {
    fn add(&self, o: &Self) -> Self {
        let t = match (&self.t, &o.t) {
            (Some(a), Some(b)) => Some(a.add(b)),
            (Some(a), None) => Some(a.clone()),
            (None, Some(b)) => Some(b.clone()),
            (None, None) => None,
        };
        Dual { p: self.p.add(&o.p), t }
    }
    fn sub(&self, o: &Self) -> Self {
        let t = match (&self.t, &o.t) {
            (Some(a), Some(b)) => Some(a.sub(b)),
            (Some(a), None) => Some(a.clone()),
            (None, Some(b)) => Some(b.scale(-1.0)),
            (None, None) => None,
        };
        Dual { p: self.p.sub(&o.p), t }
    }
    fn scale(&self, s: f64) -> Self {
        Dual { p: self.p.scale(s), t: self.t.as_ref().map(|t| t.scale(s)) }
    }
    fn contract(&self, o: &Self, spec: &str) -> Self {
        let mut t = None;
        if let Some(ta) = &self.t {
            t = sum_opt(t, ta.contract(&o.p, spec));
        }
        if let Some(tb) = &o.t {
            t = sum_opt(t, self.p.contract(tb, spec));
        }
        Dual { p: self.p.contract(&o.p, spec), t }
    }
    fn permute(&self, perm: &[usize]) -> Self {
        Dual { p: self.p.permute(perm), t: self.t.as_ref().map(|t| t.permute(perm)) }
    }
}

// ---------------------------------------------------------------------------
// Tape

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Scale(usize, f64),
    Contract(usize, usize, Arc<str>),
    Permute(usize, Vec<usize>),
}

#[derive(Debug)]
struct Node {
    op: Op,
    val: Arc<BlockedTensor>,
}

/// Append-only record of tensor operations.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Mutex<Vec<Node>>,
}

/// Handle to a recorded value.
#[derive(Clone, Debug)]
pub struct Var {
    tape: Arc<Tape>,
    id: usize,
    val: Arc<BlockedTensor>,
}

impl Var {
    pub fn id(&self) -> usize {
        self.id
    }
    pub fn value(&self) -> &BlockedTensor {
        &self.val
    }
    pub fn value_arc(&self) -> Arc<BlockedTensor> {
        self.val.clone()
    }

    fn record(&self, op: Op, val: BlockedTensor) -> Var {
        self.tape.push(op, Arc::new(val))
    }
}

impl Tape {
    pub fn new() -> Arc<Tape> {
        Arc::new(Tape::default())
    }

    fn push(self: &Arc<Self>, op: Op, val: Arc<BlockedTensor>) -> Var {
        let mut nodes = self.nodes.lock().unwrap();
        let id = nodes.len();
        nodes.push(Node { op, val: val.clone() });
        Var { tape: self.clone(), id, val }
    }

    pub fn leaf(self: &Arc<Self>, val: Arc<BlockedTensor>) -> Var {
        self.push(Op::Leaf, val)
    }

    pub fn len(&self) -> usize {
        self.nodes.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Recorded values of the given nodes.
    pub fn values(&self, ids: &[usize]) -> Vec<Arc<BlockedTensor>> {
        let nodes = self.nodes.lock().unwrap();
        ids.iter().map(|&i| nodes[i].val.clone()).collect()
    }

    /// Forward sweep: tangents of `outputs` given tangents seeded on leaves.
    pub fn jvp(&self, seeds: &HashMap<usize, BlockedTensor>, outputs: &[usize]) -> Vec<Option<BlockedTensor>> {
        let nodes = self.nodes.lock().unwrap();
        let last = outputs.iter().copied().max().map(|x| x + 1).unwrap_or(0);
        let mut tan: Vec<Option<BlockedTensor>> = vec![None; last];
        for id in 0..last {
            let n = &nodes[id];
            let t = match &n.op {
                Op::Leaf => seeds.get(&id).cloned(),
                Op::Add(a, b) => match (&tan[*a], &tan[*b]) {
                    (Some(x), Some(y)) => Some(x.add(y)),
                    (Some(x), None) => Some(x.clone()),
                    (None, Some(y)) => Some(y.clone()),
                    (None, None) => None,
                },
                Op::Sub(a, b) => match (&tan[*a], &tan[*b]) {
                    (Some(x), Some(y)) => Some(x.sub(y)),
                    (Some(x), None) => Some(x.clone()),
                    (None, Some(y)) => Some(y.scale(-1.0)),
                    (None, None) => None,
                },
                Op::Scale(a, s) => tan[*a].as_ref().map(|x| x.scale(*s)),
                Op::Contract(a, b, spec) => {
                    let mut t: Option<BlockedTensor> = None;
                    if let Some(ta) = &tan[*a] {
                        t = sum_opt(t, ta.contract(&nodes[*b].val, spec));
                    }
                    if let Some(tb) = &tan[*b] {
                        t = sum_opt(t, nodes[*a].val.contract(tb, spec));
                    }
                    t
                }
                Op::Permute(a, perm) => tan[*a].as_ref().map(|x| x.permute(perm)),
            };
            tan[id] = t;
        }
        outputs.iter().map(|&o| tan[o].clone()).collect()
    }

    /// Reverse sweep: gradients on `wrt` of `Σ <seed, output>`.
    pub fn vjp(&self, seeds: &[(usize, BlockedTensor)], wrt: &[usize]) -> Vec<Option<BlockedTensor>> {
        let nodes = self.nodes.lock().unwrap();
        let last = seeds.iter().map(|s| s.0 + 1).max().unwrap_or(0);
        let mut need = vec![false; last];
        for &w in wrt {
            if w < last {
                need[w] = true;
            }
        }
        for id in 0..last {
            need[id] = need[id]
                || match &nodes[id].op {
                    Op::Leaf => false,
                    Op::Add(a, b) | Op::Sub(a, b) | Op::Contract(a, b, _) => need[*a] || need[*b],
                    Op::Scale(a, _) | Op::Permute(a, _) => need[*a],
                };
        }
        let mut grad: Vec<Option<BlockedTensor>> = vec![None; last];
        for (id, g) in seeds {
            if need[*id] {
                grad[*id] = sum_opt(grad[*id].take(), g.clone());
            }
        }
        let acc = |grad: &mut Vec<Option<BlockedTensor>>, i: usize, g: BlockedTensor| {
            grad[i] = sum_opt(grad[i].take(), g);
        };
        for id in (0..last).rev() {
            let Some(g) = grad[id].take() else { continue };
            match &nodes[id].op {
                Op::Leaf => {
                    grad[id] = Some(g);
                }
                Op::Add(a, b) => {
                    if need[*a] {
                        acc(&mut grad, *a, g.clone());
                    }
                    if need[*b] {
                        acc(&mut grad, *b, g);
                    }
                }
                Op::Sub(a, b) => {
                    if need[*a] {
                        acc(&mut grad, *a, g.clone());
                    }
                    if need[*b] {
                        acc(&mut grad, *b, g.scale(-1.0));
                    }
                }
                Op::Scale(a, s) => {
                    if need[*a] {
                        acc(&mut grad, *a, g.scale(*s));
                    }
                }
                Op::Contract(a, b, spec) => {
                    let (lhs, c) = spec.split_once("->").unwrap();
                    let (sa, sb) = lhs.split_once(',').unwrap();
                    if need[*a] {
                        let s = format!("{c},{sb}->{sa}");
                        acc(&mut grad, *a, g.contract(&nodes[*b].val, &s));
                    }
                    if need[*b] {
                        let s = format!("{sa},{c}->{sb}");
                        acc(&mut grad, *b, nodes[*a].val.contract(&g, &s));
                    }
                }
                Op::Permute(a, perm) => {
                    if need[*a] {
                        let mut inv = vec![0; perm.len()];
                        for (k, &p) in perm.iter().enumerate() {
                            inv[p] = k;
                        }
                        acc(&mut grad, *a, g.permute(&inv));
                    }
                }
            }
        }
        wrt.iter().map(|&w| if w < last { grad[w].clone() } else { None }).collect()
    }
}

impl Algebra for Var {
    fn add(&self, o: &Self) -> Self {
        self.record(Op::Add(self.id, o.id), self.val.add(&o.val))
    }
    fn sub(&self, o: &Self) -> Self {
        self.record(Op::Sub(self.id, o.id), self.val.sub(&o.val))
    }
    fn scale(&self, s: f64) -> Self {
        self.record(Op::Scale(self.id, s), self.val.scale(s))
    }
    fn contract(&self, o: &Self, spec: &str) -> Self {
        let v = self.val.contract(&o.val, spec);
        self.record(Op::Contract(self.id, o.id, Arc::from(spec)), v)
    }
    fn permute(&self, perm: &[usize]) -> Self {
        self.record(Op::Permute(self.id, perm.to_vec()), self.val.permute(perm))
    }
}
