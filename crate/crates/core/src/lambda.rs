//! Left-hand Λ equations and response expectation values.
//!
//! The CC Lagrangian `L = E(t) + Σ_μ λ_μ Ω_μ(t)` is recorded once on a
//! [`Tape`] at the converged amplitudes. Because `L` is linear in `λ`, each Λ
//! iteration is one reverse sweep of the same tape with the current `λ` as
//! seeds. Densities are gradients of `L` with respect to Hamiltonian leaves:
//! the Fock blocks give `⟨{p†q}⟩`, `ω_m` gives `⟨b†_m b_m⟩` and a zero probe
//! source `x_m (b_m + b†_m)` gives `⟨b_m + b†_m⟩`.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::ad::{anti_both, Tape, Var};
use crate::cc::{projections, Amps, CcOptions, Diis};
use crate::error::{Error, Result};
use crate::mo::{MoSystem, OneBody, QedHam};
use crate::sym::BlockedTensor;

/// Lagrangian recorded at fixed amplitudes.
pub struct Recorded {
    tape: Arc<Tape>,
    amps: Amps<usize>,
    fock: OneBody<usize>,
    omega: Vec<usize>,
    probe: Vec<usize>,
    energy: Option<(usize, f64)>,
    rows: Amps<Option<usize>>,
    like: Amps<BlockedTensor>,
}

/// Seed for each residual row; unique doubles carry a factor `¼` over the full tensor.
fn seed_weights(nm: usize) -> Amps<f64> {
    let mut w = Amps::from_fields(vec![1.0; 2 + 3 * nm + nm * (nm + 1) / 2], nm);
    w.t2 = 0.25;
    w.s2.iter_mut().for_each(|x| *x = 0.25);
    w
}

impl Recorded {
    /// Records the projections of `h` at amplitudes `a`.
    pub fn new(mo: &MoSystem, h: &QedHam<BlockedTensor>, a: &Amps<BlockedTensor>) -> Recorded {
        let tape = Tape::new();
        let leaf = |t: &BlockedTensor| tape.leaf(Arc::new(t.clone()));
        let mut hv: QedHam<Var> = h.map(leaf);
        for (mh, m) in hv.modes.iter_mut().zip(&mo.modes) {
            if mh.probe.is_none() {
                mh.probe = Some(leaf(&BlockedTensor::filled(mo.h, vec![], m.irrep)));
            }
        }
        let av: Amps<Var> = a.map(leaf);
        let p = projections(&hv, &av);
        let energy = p.energy().map(|v| (v.id(), v.value().scalar_value()));
        let rows = p.residual(a.n_modes()).map(|r| r.as_ref().map(|v| v.id()));
        Recorded {
            tape: tape.clone(),
            amps: av.map(|v| v.id()),
            fock: hv.elec.f.map(|v| v.id()),
            omega: hv.modes.iter().map(|m| m.omega.id()).collect(),
            probe: hv.modes.iter().map(|m| m.probe.as_ref().unwrap().id()).collect(),
            energy,
            rows,
            like: a.clone(),
        }
    }

    /// Correlation energy at the recorded amplitudes.
    pub fn energy(&self) -> f64 {
        self.energy.map(|e| e.1).unwrap_or(0.0)
    }

    fn seeds(&self, lam: &Amps<BlockedTensor>) -> Vec<(usize, BlockedTensor)> {
        let h = lam.t1.h();
        let mut s: Vec<(usize, BlockedTensor)> = Vec::new();
        if let Some((id, _)) = self.energy {
            s.push((id, BlockedTensor::scalar(h, 1.0)));
        }
        let w = seed_weights(lam.n_modes());
        for ((row, l), w) in self.rows.fields().into_iter().zip(lam.fields()).zip(w.fields()) {
            if let Some(id) = row {
                s.push((*id, if *w == 1.0 { l.clone() } else { l.scale(*w) }));
            }
        }
        s
    }

    /// `∂L/∂t` in unique-amplitude form for the given `λ`.
    pub fn gradient(&self, lam: &Amps<BlockedTensor>) -> Amps<BlockedTensor> {
        let wrt: Vec<usize> = self.amps.fields().into_iter().copied().collect();
        let g = self.tape.vjp(&self.seeds(lam), &wrt);
        let mut out = Amps::from_fields(g, lam.n_modes())
            .zip_map(&self.like, |g, like| g.clone().unwrap_or_else(|| like.zeros_like()));
        out.t2 = anti_both(&out.t2);
        out.s2 = out.s2.iter().map(anti_both).collect();
        out
    }

    /// Tangents of the energy and of every residual row along `r`, i.e.
    /// `⟨0|H̄|r⟩` and `⟨μ|[H̄, R]|0⟩`. `r` may transform as any irrep.
    pub fn jvp(&self, r: &Amps<BlockedTensor>) -> (f64, Amps<BlockedTensor>) {
        let seeds: HashMap<usize, BlockedTensor> =
            self.amps.fields().into_iter().copied().zip(r.fields().into_iter().cloned()).collect();
        let mut outs: Vec<usize> = self.rows.fields().into_iter().filter_map(|x| *x).collect();
        if let Some((id, _)) = self.energy {
            outs.push(id);
        }
        let mut tan = self.tape.jvp(&seeds, &outs).into_iter();
        let rows = self.rows.zip_map(r, |row, like| match row {
            Some(_) => tan.next().unwrap().unwrap_or_else(|| like.zeros_like()),
            None => like.zeros_like(),
        });
        let e = match self.energy {
            Some(_) => tan.next().unwrap().map_or(0.0, |t| if t.target() == 0 { t.scalar_value() } else { 0.0 }),
            None => 0.0,
        };
        (e, rows)
    }

    /// `L(t, λ)` evaluated from the recorded values.
    pub fn functional(&self, lam: &Amps<BlockedTensor>) -> f64 {
        let seeds = self.seeds(lam);
        let ids: Vec<usize> = seeds.iter().map(|s| s.0).collect();
        let values = self.tape.values(&ids);
        seeds.iter().zip(values).map(|((_, seed), v)| seed.dot(&v)).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LambdaIteration {
    pub iter: usize,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct LambdaResult {
    pub lam: Amps<BlockedTensor>,
    pub max_residual: f64,
    /// `⟨0|(1+Λ) e^{-Q} H e^{Q}|0⟩` including the reference energy.
    pub functional: f64,
    pub trace: Vec<LambdaIteration>,
}

/// Solves `∂L/∂t = 0` for `λ` by preconditioned Jacobi steps with DIIS.
pub fn solve_lambda(mo: &MoSystem, rec: &Recorded, opts: &CcOptions) -> Result<LambdaResult> {
    let d = Amps::denominators(mo, 0);
    let mut lam = rec.like.clone();
    let mut diis = Diis::new(opts.diis_size);
    let mut trace = Vec::new();
    for iter in 1..=opts.max_iter {
        let g = rec.gradient(&lam);
        let gmax = g.max_abs();
        trace.push(LambdaIteration { iter, residual: gmax });
        log::info!("lambda {iter:3} max|R| = {gmax:.3e}");
        if !gmax.is_finite() {
            break;
        }
        if gmax < opts.tol {
            let functional = mo.e_ref + rec.functional(&lam);
            return Ok(LambdaResult { lam, max_residual: gmax, functional, trace });
        }
        let step = g.div(&d);
        let mut next = lam.clone();
        next.axpy(-1.0, &step);
        let x = diis.push(next.to_flat(), step.to_flat());
        lam = lam.from_flat_like(&x);
    }
    Err(Error::Convergence(format!("Λ equations not converged in {} iterations (last {:?})", opts.max_iter, trace.last())))
}

/// Response expectation values from a converged Λ.
#[derive(Clone, Debug)]
pub struct Densities {
    /// Spin-summed `γ_pq = ⟨p†q⟩` over spatial MOs; not symmetric in general.
    pub gamma: DMatrix<f64>,
    /// `⟨b†_m b_m⟩` in the coherent-state frame.
    pub photon_number: Vec<f64>,
    /// `⟨b_m + b†_m⟩` in the coherent-state frame.
    pub displacement: Vec<f64>,
}

impl Densities {
    pub fn symmetrized(&self) -> DMatrix<f64> {
        (&self.gamma + self.gamma.transpose()) * 0.5
    }

    pub fn trace(&self) -> f64 {
        self.gamma.trace()
    }
}

/// One-particle density and photon observables as derivatives of `L`.
pub fn densities(mo: &MoSystem, rec: &Recorded, lam: &Amps<BlockedTensor>) -> Densities {
    let nm = mo.n_modes();
    let mut wrt: Vec<usize> = rec.fock.iter().copied().collect();
    wrt.extend(&rec.omega);
    wrt.extend(&rec.probe);
    let g = rec.tape.vjp(&rec.seeds(lam), &wrt);
    let n = mo.n_spatial;
    let mut gamma = DMatrix::zeros(n, n);
    for p in 0..n {
        if mo.occupied[p] {
            gamma[(p, p)] = 2.0;
        }
    }
    for (k, kind) in ["oo", "ov", "vo", "vv"].iter().enumerate() {
        if let Some(t) = &g[k] {
            mo.spatial_from_block(t, kind, &mut gamma);
        }
    }
    let scalar = |x: &Option<BlockedTensor>| x.as_ref().map(|t| t.scalar_value()).unwrap_or(0.0);
    Densities {
        gamma,
        photon_number: (0..nm).map(|m| scalar(&g[4 + m])).collect(),
        displacement: (0..nm).map(|m| scalar(&g[4 + nm + m])).collect(),
    }
}
