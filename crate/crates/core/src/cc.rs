//! QED-CCSD-12-SD ground state.
//!
//! The cluster operator is `T1 + T2 + Σ_m b†_m (γ_m + S1_m + S2_m) + ½ Σ_mn G_mn b†_m b†_n`.
//! Photon creators commute with everything else in `e^{-Q} H e^{Q}`, so they are
//! carried as formal variables (see [`Jet`]) and the projections onto photon
//! sectors are read off as polynomial coefficients.

use std::io::{Read, Write};

use crate::ad::{anti_01, anti_23, anti_both, Algebra, Dual, Jet, Mono};
use crate::error::{Error, Result};
use crate::mo::{ElecHam, MoSystem, QedHam};
use crate::sym::BlockedTensor;

/// Storage slot of the photon pair `(m, n)` with `m <= n` among `nm` modes.
pub fn g2_index(m: usize, n: usize, nm: usize) -> usize {
    let (m, n) = if m <= n { (m, n) } else { (n, m) };
    m * nm - m * m.saturating_sub(1) / 2 + (n - m)
}

/// Pairs `(m, n)` with `m <= n` in storage order.
pub fn g2_pairs(nm: usize) -> Vec<(usize, usize)> {
    (0..nm).flat_map(|m| (m..nm).map(move |n| (m, n))).collect()
}

/// Operator coefficient `G_mn` in `½ Σ G_mn b†_m b†_n` for a stored value.
///
/// The stored value is the coefficient of the monomial `b†_m b†_n`, so the
/// diagonal picks up a factor of two and mixed pairs do not.
pub fn g2_unpack(stored: f64, m: usize, n: usize) -> f64 {
    if m == n {
        2.0 * stored
    } else {
        stored
    }
}

/// Inverse of [`g2_unpack`].
pub fn g2_pack(operator: f64, m: usize, n: usize) -> f64 {
    if m == n {
        0.5 * operator
    } else {
        operator
    }
}

/// Amplitude-shaped collection; also used for residuals, Λ and EOM vectors.
#[derive(Clone, Debug)]
pub struct Amps<A> {
    pub t1: A,
    pub t2: A,
    pub s1: Vec<A>,
    pub s2: Vec<A>,
    /// Rank-0 per mode.
    pub g1: Vec<A>,
    /// Rank-0 per pair `m <= n` (see [`g2_index`]).
    pub g2: Vec<A>,
}

impl<A> Amps<A> {
    pub fn n_modes(&self) -> usize {
        self.s1.len()
    }

    pub fn fields(&self) -> Vec<&A> {
        let mut v = vec![&self.t1, &self.t2];
        v.extend(self.s1.iter());
        v.extend(self.s2.iter());
        v.extend(self.g1.iter());
        v.extend(self.g2.iter());
        v
    }

    pub fn from_fields(v: Vec<A>, nm: usize) -> Amps<A> {
        let mut it = v.into_iter();
        let t1 = it.next().unwrap();
        let t2 = it.next().unwrap();
        let s1 = (0..nm).map(|_| it.next().unwrap()).collect();
        let s2 = (0..nm).map(|_| it.next().unwrap()).collect();
        let g1 = (0..nm).map(|_| it.next().unwrap()).collect();
        let g2 = (0..nm * (nm + 1) / 2).map(|_| it.next().unwrap()).collect();
        assert!(it.next().is_none());
        Amps { t1, t2, s1, s2, g1, g2 }
    }

    pub fn map<B>(&self, f: impl FnMut(&A) -> B) -> Amps<B> {
        Amps::from_fields(self.fields().into_iter().map(f).collect(), self.n_modes())
    }

    pub fn zip_map<B, C>(&self, o: &Amps<B>, mut f: impl FnMut(&A, &B) -> C) -> Amps<C> {
        let v = self.fields().into_iter().zip(o.fields()).map(|(a, b)| f(a, b)).collect();
        Amps::from_fields(v, self.n_modes())
    }

    /// Operator-equivalent `G_mn`, i.e. the stored diagonal counted twice.
    pub fn g_operator(&self, m: usize, n: usize) -> (&A, f64) {
        let nm = self.n_modes();
        (&self.g2[g2_index(m, n, nm)], if m == n { 2.0 } else { 1.0 })
    }
}

/// Elementwise helpers on amplitude vectors of plain tensors.
impl Amps<BlockedTensor> {
    /// All-zero amplitudes whose blocks transform as `target`.
    pub fn zeros(mo: &MoSystem, target: u8) -> Amps<BlockedTensor> {
        let h = mo.h;
        let t1 = |g: u8| BlockedTensor::filled(h, vec![mo.vir.clone(), mo.occ.clone()], g);
        let t2 = |g: u8| {
            BlockedTensor::filled(h, vec![mo.vir.clone(), mo.vir.clone(), mo.occ.clone(), mo.occ.clone()], g)
        };
        let sc = |g: u8| BlockedTensor::filled(h, vec![], g);
        let irr: Vec<u8> = mo.modes.iter().map(|m| m.irrep).collect();
        let nm = irr.len();
        Amps {
            t1: t1(target),
            t2: t2(target),
            s1: irr.iter().map(|&g| t1(target ^ g)).collect(),
            s2: irr.iter().map(|&g| t2(target ^ g)).collect(),
            g1: irr.iter().map(|&g| sc(target ^ g)).collect(),
            g2: g2_pairs(nm).iter().map(|&(m, n)| sc(target ^ irr[m] ^ irr[n])).collect(),
        }
    }

    /// Jacobi denominators: orbital-energy differences plus `ω` per photon.
    pub fn denominators(mo: &MoSystem, target: u8) -> Amps<BlockedTensor> {
        let z = Amps::zeros(mo, target);
        let w: Vec<f64> = mo.modes.iter().map(|m| m.omega).collect();
        let nm = w.len();
        let pairs = g2_pairs(nm);
        Amps {
            t1: mo.denominator(&z.t1, 0.0),
            t2: mo.denominator(&z.t2, 0.0),
            s1: z.s1.iter().zip(&w).map(|(t, &w)| mo.denominator(t, w)).collect(),
            s2: z.s2.iter().zip(&w).map(|(t, &w)| mo.denominator(t, w)).collect(),
            g1: z.g1.iter().zip(&w).map(|(t, &w)| mo.denominator(t, w)).collect(),
            g2: z.g2.iter().zip(&pairs).map(|(t, &(m, n))| mo.denominator(t, w[m] + w[n])).collect(),
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.fields().into_iter().flat_map(|t| t.to_flat()).collect()
    }

    pub fn len(&self) -> usize {
        self.fields().into_iter().map(|t| t.allowed_len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn from_flat_like(&self, v: &[f64]) -> Amps<BlockedTensor> {
        let mut p = 0;
        self.map(|t| {
            let n = t.allowed_len();
            let r = t.from_flat_like(&v[p..p + n]);
            p += n;
            r
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.fields().into_iter().fold(0.0, |m, t| m.max(t.max_abs()))
    }

    /// Elementwise `self / d` over stored blocks.
    pub fn div(&self, d: &Amps<BlockedTensor>) -> Amps<BlockedTensor> {
        self.zip_map(d, elementwise_div)
    }

    pub fn axpy(&mut self, a: f64, o: &Amps<BlockedTensor>) {
        let v: Vec<f64> = self.to_flat().iter().zip(o.to_flat()).map(|(x, y)| x + a * y).collect();
        *self = self.from_flat_like(&v);
    }
}

/// Elementwise quotient over the allowed blocks of `a` (absent blocks read as zero).
pub fn elementwise_div(a: &BlockedTensor, d: &BlockedTensor) -> BlockedTensor {
    let mut r = a.zeros_like();
    for (k, v) in a.blocks() {
        let dv = d.block(k).expect("denominator layout");
        r.insert_block(k.clone(), v.iter().zip(dv).map(|(x, y)| x / y).collect());
    }
    r
}

// ---------------------------------------------------------------------------
// Electronic CCSD projections (spin orbitals), generic over the algebra.

fn acc<A: Algebra>(s: &mut Option<A>, x: A) {
    *s = Some(match s.take() {
        Some(a) => a.add(&x),
        None => x,
    });
}

/// `⟨0|e^{-T} H e^{T}|0⟩ − ⟨0|H|0⟩` for `T = T1 + T2`.
pub fn cc_energy<A: Algebra>(h: &ElecHam<A>, t1: &A, t2: &A) -> A {
    let mut e = h.f.ov.contract(t1, "me,em->");
    if let Some(w) = &h.w {
        e = e.add(&w.oovv.contract(t2, "mnef,efmn->").scale(0.25));
        let x = w.oovv.contract(t1, "mnef,em->nf");
        e = e.add(&x.contract(t1, "nf,fn->").scale(0.5));
    }
    e
}

/// Singles and doubles projections `⟨μ|e^{-T} H e^{T}|0⟩`.
pub fn cc_residual<A: Algebra>(h: &ElecHam<A>, t1: &A, t2: &A) -> (A, A) {
    let f = &h.f;
    let att = anti_01(&t1.contract(t1, "ai,bj->abij"));
    let tau = t2.add(&att);
    let taut = t2.add(&att.scale(0.5));

    let mut fae = f.vv.sub(&f.ov.contract(t1, "me,am->ae").scale(0.5));
    let mut fmi = f.oo.add(&t1.contract(&f.ov, "ei,me->mi").scale(0.5));
    let mut fme = f.ov.clone();
    if let Some(w) = &h.w {
        fae = fae.add(&t1.contract(&w.ovvv, "fm,mafe->ae"));
        fae = fae.sub(&taut.contract(&w.oovv, "afmn,mnef->ae").scale(0.5));
        fmi = fmi.add(&t1.contract(&w.ooov, "en,mnie->mi"));
        fmi = fmi.add(&taut.contract(&w.oovv, "efin,mnef->mi").scale(0.5));
        fme = fme.add(&t1.contract(&w.oovv, "fn,mnef->me"));
    }

    let mut r1 = f.vo.add(&t1.contract(&fae, "ei,ae->ai"));
    r1 = r1.sub(&t1.contract(&fmi, "am,mi->ai"));
    r1 = r1.add(&t2.contract(&fme, "aeim,me->ai"));
    if let Some(w) = &h.w {
        r1 = r1.add(&t1.contract(&w.ovvo, "fn,nafi->ai"));
        r1 = r1.sub(&t2.contract(&w.ovvv, "efim,maef->ai").scale(0.5));
        r1 = r1.add(&t2.contract(&w.ooov, "aemn,nmie->ai").scale(0.5));
    }

    let mut r2: Option<A> = h.w.as_ref().map(|w| w.vvoo.clone());
    let fbe = fae.sub(&t1.contract(&fme, "bm,me->be").scale(0.5));
    acc(&mut r2, anti_01(&t2.contract(&fbe, "aeij,be->abij")));
    let fmj = fmi.add(&t1.contract(&fme, "ej,me->mj").scale(0.5));
    acc(&mut r2, anti_23(&t2.contract(&fmj, "abim,mj->abij")).scale(-1.0));
    if let Some(w) = &h.w {
        let wmnij = w
            .oooo
            .add(&anti_23(&t1.contract(&w.ooov, "ej,mnie->mnij")))
            .add(&tau.contract(&w.oovv, "efij,mnef->mnij").scale(0.25));
        acc(&mut r2, tau.contract(&wmnij, "abmn,mnij->abij").scale(0.5));
        acc(&mut r2, tau.contract(&w.vvvv, "efij,abef->abij").scale(0.5));
        let z = w.ovvv.contract(&tau, "maef,efij->maij");
        acc(&mut r2, anti_01(&t1.contract(&z, "bm,maij->abij")).scale(0.5));
        let zz = w.oovv.contract(&tau, "mnef,efij->mnij");
        acc(&mut r2, tau.contract(&zz, "abmn,mnij->abij").scale(0.125));

        let x = t1.contract(&w.oovv, "fj,mnef->mnej");
        let wmbej = w
            .ovvo
            .add(&t1.contract(&w.ovvv, "fj,mbef->mbej"))
            .add(&t1.contract(&w.ooov, "bn,mnje->mbej"))
            .sub(&t2.contract(&w.oovv, "fbjn,mnef->mbej").scale(0.5))
            .sub(&t1.contract(&x, "bn,mnej->mbej"));
        let m1 = t1.contract(&w.ovvo, "ei,mbej->mbij");
        let ring = t2.contract(&wmbej, "aeim,mbej->abij").sub(&t1.contract(&m1, "am,mbij->abij"));
        acc(&mut r2, anti_both(&ring));
        acc(&mut r2, anti_23(&t1.contract(&w.vvvo, "ei,abej->abij")));
        acc(&mut r2, anti_01(&t1.contract(&w.ovoo, "am,mbij->abij")).scale(-1.0));
    }
    (r1, r2.unwrap())
}

// ---------------------------------------------------------------------------
// Photon-dressed projections.

/// Projections of `e^{-Q} H e^{Q}|0⟩` as polynomials in the photon creators.
///
/// `r0` is the reference row up to second order in `b†`; `r1`, `r2` are the
/// singles and doubles rows up to first order.
#[derive(Clone, Debug)]
pub struct Projections<A> {
    pub r0: Jet<A>,
    pub r1: Jet<A>,
    pub r2: Jet<A>,
}

impl<A: Algebra> Projections<A> {
    /// Correlation energy `⟨0|H̄|0⟩ − E_ref`.
    pub fn energy(&self) -> Option<&A> {
        self.r0.get(Mono::One)
    }

    /// Residual rows in amplitude order; `None` marks an identically zero row.
    pub fn residual(&self, nm: usize) -> Amps<Option<A>> {
        let g = |j: &Jet<A>, m: Mono| j.get(m).cloned();
        Amps {
            t1: g(&self.r1, Mono::One),
            t2: g(&self.r2, Mono::One),
            s1: (0..nm).map(|m| g(&self.r1, Mono::Lin(m))).collect(),
            s2: (0..nm).map(|m| g(&self.r2, Mono::Lin(m))).collect(),
            g1: (0..nm).map(|m| g(&self.r0, Mono::Lin(m))).collect(),
            g2: g2_pairs(nm).into_iter().map(|(m, n)| g(&self.r0, Mono::quad(m, n))).collect(),
        }
    }
}

fn add_to<A: Algebra>(j: &mut Jet<A>, x: &Jet<A>) {
    *j = j.add(x);
}

fn cluster_jets<A: Algebra>(a: &Amps<A>, deg: u8) -> (Jet<A>, Jet<A>) {
    let mut t1 = Jet::empty(deg).with(Mono::One, a.t1.clone());
    let mut t2 = Jet::empty(deg).with(Mono::One, a.t2.clone());
    for m in 0..a.n_modes() {
        t1 = t1.with(Mono::Lin(m), a.s1[m].clone());
        t2 = t2.with(Mono::Lin(m), a.s2[m].clone());
    }
    (t1, t2)
}

/// Photon-free part of `∂Q/∂b†_m`: `γ_m + Σ_n G_mn b†_n`.
fn photon_derivative<A: Algebra>(a: &Amps<A>, m: usize, deg: u8) -> Jet<A> {
    let mut y = Jet::empty(deg).with(Mono::One, a.g1[m].clone());
    for n in 0..a.n_modes() {
        let (g, s) = a.g_operator(m, n);
        y = y.with(Mono::Lin(n), if s == 1.0 { g.clone() } else { g.scale(s) });
    }
    y
}

/// Evaluates all projections of the transformed Hamiltonian on the vacuum.
pub fn projections<A: Algebra>(h: &QedHam<A>, a: &Amps<A>) -> Projections<A> {
    let nm = a.n_modes();
    assert_eq!(nm, h.modes.len(), "mode count mismatch");
    let lift = |x: &A| Jet::constant(x.clone());
    let elec = h.elec.map(lift);

    // reference row through second order in b†
    let (t1, t2) = cluster_jets(a, 2);
    let mut r0 = cc_energy(&elec, &t1, &t2);
    for (m, mh) in h.modes.iter().enumerate() {
        let v: ElecHam<Dual<Jet<A>>> =
            ElecHam { f: mh.v.map(|x| Dual::constant(Jet::constant(x.clone()))), w: None };
        let t1d = Dual::new(t1.clone(), Some(Jet::constant(a.s1[m].clone())));
        let t2d = Dual::constant(t2.clone());
        let p0 = cc_energy(&v, &t1d, &t2d);
        let y0 = photon_derivative(a, m, 2);
        let w = lift(&mh.omega);
        add_to(&mut r0, &p0.p.shift(m));
        if let Some(t) = &p0.t {
            add_to(&mut r0, t);
        }
        add_to(&mut r0, &y0.contract(&p0.p, ",->"));
        add_to(&mut r0, &w.contract(&y0.shift(m), ",->"));
        if let Some(x) = &mh.probe {
            let xj = lift(x);
            add_to(&mut r0, &xj.contract(&y0, ",->"));
            add_to(&mut r0, &Jet::empty(2).with(Mono::Lin(m), x.clone()));
        }
    }

    // excitation rows through first order
    let (t1, t2) = cluster_jets(a, 1);
    let (mut r1, mut r2) = cc_residual(&elec, &t1, &t2);
    for (m, mh) in h.modes.iter().enumerate() {
        let v: ElecHam<Dual<Jet<A>>> =
            ElecHam { f: mh.v.map(|x| Dual::constant(Jet::constant(x.clone()))), w: None };
        let t1d = Dual::new(t1.clone(), Some(Jet::constant(a.s1[m].clone())));
        let t2d = Dual::new(t2.clone(), Some(Jet::constant(a.s2[m].clone())));
        let p0 = cc_energy(&v, &t1d, &t2d).p;
        let (p1, p2) = cc_residual(&v, &t1d, &t2d);
        let y0 = photon_derivative(a, m, 1);
        let y1 = lift(&a.s1[m]);
        let y2 = lift(&a.s2[m]);
        let w = lift(&mh.omega);

        add_to(&mut r1, &p1.p.shift(m));
        if let Some(t) = &p1.t {
            add_to(&mut r1, t);
        }
        add_to(&mut r1, &y0.contract(&p1.p, ",ai->ai"));
        add_to(&mut r1, &y1.contract(&p0, "ai,->ai"));
        add_to(&mut r1, &w.contract(&y1.shift(m), ",ai->ai"));

        add_to(&mut r2, &p2.p.shift(m));
        if let Some(t) = &p2.t {
            add_to(&mut r2, t);
        }
        add_to(&mut r2, &y0.contract(&p2.p, ",abij->abij"));
        add_to(&mut r2, &y2.contract(&p0, "abij,->abij"));
        add_to(&mut r2, &anti_both(&y1.contract(&p1.p, "ai,bj->abij")));
        add_to(&mut r2, &w.contract(&y2.shift(m), ",abij->abij"));

        if let Some(x) = &mh.probe {
            let xj = lift(x);
            add_to(&mut r1, &xj.contract(&y1, ",ai->ai"));
            add_to(&mut r2, &xj.contract(&y2, ",abij->abij"));
        }
    }
    Projections { r0, r1, r2 }
}

/// Residual with absent rows replaced by zeros of the given layout.
pub fn residual(h: &QedHam<BlockedTensor>, a: &Amps<BlockedTensor>) -> (f64, Amps<BlockedTensor>) {
    let p = projections(h, a);
    let e = p.energy().map(|t| t.scalar_value()).unwrap_or(0.0);
    let r = p.residual(a.n_modes());
    let out = r.zip_map(a, |x, like| x.clone().unwrap_or_else(|| like.zeros_like()));
    (e, out)
}

// ---------------------------------------------------------------------------
// Solver

/// Direct inversion in the iterative subspace over flat vectors.
#[derive(Clone, Debug)]
pub struct Diis {
    size: usize,
    vecs: Vec<Vec<f64>>,
    errs: Vec<Vec<f64>>,
}

impl Diis {
    pub fn new(size: usize) -> Diis {
        Diis { size, vecs: Vec::new(), errs: Vec::new() }
    }

    /// Records `(x, err)` and returns the extrapolated vector.
    pub fn push(&mut self, x: Vec<f64>, err: Vec<f64>) -> Vec<f64> {
        if self.size < 2 {
            return x;
        }
        if self.vecs.len() == self.size {
            self.vecs.remove(0);
            self.errs.remove(0);
        }
        self.vecs.push(x);
        self.errs.push(err);
        let n = self.vecs.len();
        if n < 2 {
            return self.vecs[0].clone();
        }
        let mut b = nalgebra::DMatrix::zeros(n + 1, n + 1);
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = self.errs[i].iter().zip(&self.errs[j]).map(|(a, b)| a * b).sum();
                b[(i, j)] = v;
                b[(j, i)] = v;
            }
            b[(i, n)] = -1.0;
            b[(n, i)] = -1.0;
        }
        let mut rhs = nalgebra::DVector::zeros(n + 1);
        rhs[n] = -1.0;
        let scale = (0..n).map(|i| b[(i, i)]).fold(0.0, f64::max).max(1e-300);
        for i in 0..n {
            for j in 0..n {
                b[(i, j)] /= scale;
            }
        }
        let Some(c) = b.clone().lu().solve(&rhs) else {
            return self.vecs[n - 1].clone();
        };
        if c.iter().any(|v| !v.is_finite()) {
            return self.vecs[n - 1].clone();
        }
        let mut out = vec![0.0; self.vecs[0].len()];
        for (k, v) in self.vecs.iter().enumerate() {
            for (o, x) in out.iter_mut().zip(v) {
                *o += c[k] * x;
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct CcOptions {
    pub max_iter: usize,
    /// Convergence threshold on the largest residual element.
    pub tol: f64,
    pub diis_size: usize,
}

impl Default for CcOptions {
    fn default() -> Self {
        CcOptions { max_iter: 200, tol: 1e-10, diis_size: 8 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CcIteration {
    pub iter: usize,
    pub energy: f64,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct CcResult {
    pub amps: Amps<BlockedTensor>,
    pub e_ref: f64,
    pub e_corr: f64,
    pub e_total: f64,
    pub max_residual: f64,
    pub trace: Vec<CcIteration>,
}

/// MP2-like start: `t2 = <ab||ij> / D`, everything else zero.
pub fn mp2_guess(mo: &MoSystem, h: &QedHam<BlockedTensor>) -> Amps<BlockedTensor> {
    let mut a = Amps::zeros(mo, 0);
    let d = Amps::denominators(mo, 0);
    a.t1 = elementwise_div(&h.elec.f.vo, &d.t1).scale(-1.0);
    if let Some(w) = &h.elec.w {
        a.t2 = elementwise_div(&w.vvoo, &d.t2).scale(-1.0);
    }
    a
}

/// Solves the amplitude equations by preconditioned Jacobi steps with DIIS.
pub fn solve(
    mo: &MoSystem,
    h: &QedHam<BlockedTensor>,
    start: Option<Amps<BlockedTensor>>,
    opts: &CcOptions,
) -> Result<CcResult> {
    let d = Amps::denominators(mo, 0);
    let mut a = start.unwrap_or_else(|| mp2_guess(mo, h));
    let mut diis = Diis::new(opts.diis_size);
    let mut trace = Vec::new();
    let mut e_old = f64::NAN;
    for iter in 1..=opts.max_iter {
        let (e, r) = residual(h, &a);
        let rmax = r.max_abs();
        trace.push(CcIteration { iter, energy: mo.e_ref + e, residual: rmax });
        log::info!("cc {iter:3} E = {:.12} max|R| = {rmax:.3e}", mo.e_ref + e);
        if !e.is_finite() || !rmax.is_finite() {
            break;
        }
        if rmax < opts.tol && (e - e_old).abs() < opts.tol {
            return Ok(CcResult { amps: a, e_ref: mo.e_ref, e_corr: e, e_total: mo.e_ref + e, max_residual: rmax, trace });
        }
        e_old = e;
        let step = r.div(&d);
        let mut next = a.clone();
        next.axpy(-1.0, &step);
        let x = diis.push(next.to_flat(), step.to_flat());
        a = a.from_flat_like(&x);
    }
    Err(Error::Convergence(format!(
        "QED-CC not converged in {} iterations (last {:?})",
        opts.max_iter,
        trace.last()
    )))
}

// ---------------------------------------------------------------------------
// Checkpoint

const MAGIC: &[u8; 8] = b"PLRTNAMP";
const VERSION: u32 = 1;

/// Writes amplitudes as flat little-endian blocks behind a versioned header.
pub fn write_amps(w: &mut impl Write, a: &Amps<BlockedTensor>) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(a.n_modes() as u32).to_le_bytes())?;
    let flat = a.to_flat();
    w.write_all(&(flat.len() as u64).to_le_bytes())?;
    for v in flat {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads amplitudes written by [`write_amps`] into the layout of `like`.
pub fn read_amps(r: &mut impl Read, like: &Amps<BlockedTensor>) -> Result<Amps<BlockedTensor>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Input("not an amplitude checkpoint".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(Error::Input(format!("unsupported checkpoint version {version}")));
    }
    r.read_exact(&mut b4)?;
    let nm = u32::from_le_bytes(b4) as usize;
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    if nm != like.n_modes() || n != like.len() {
        return Err(Error::Shape(format!("checkpoint holds {n} values for {nm} modes, expected {}", like.len())));
    }
    let mut v = Vec::with_capacity(n);
    for _ in 0..n {
        r.read_exact(&mut b8)?;
        v.push(f64::from_le_bytes(b8));
    }
    Ok(like.from_flat_like(&v))
}
