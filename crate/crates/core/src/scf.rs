//! Restricted QED-Hartree–Fock in the coherent-state basis.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::cavity::{build_dse, CavityModeSet};
use crate::error::{Error, Result};
use crate::integrals::{IntegralSet, PackedEri};
use crate::molecule::Molecule;
use crate::sym::PointGroup;

#[derive(Clone, Debug)]
pub struct ScfOptions {
    pub max_iter: usize,
    /// Energy change threshold, hartree.
    pub e_tol: f64,
    /// RMS density change threshold.
    pub d_tol: f64,
    pub diis_size: usize,
    /// Overlap eigenvalues below this are dropped as linear dependencies.
    pub lindep: f64,
}

impl Default for ScfOptions {
    fn default() -> Self {
        ScfOptions { max_iter: 200, e_tol: 1e-10, d_tol: 1e-8, diis_size: 8, lindep: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScfIteration {
    pub iter: usize,
    pub energy: f64,
    pub delta_e: f64,
    pub error: f64,
}

#[derive(Clone, Debug)]
pub struct ScfResult {
    pub group: PointGroup,
    /// Total QED-HF energy including nuclear repulsion.
    pub energy: f64,
    pub e_nuc: f64,
    /// Mean-field dipole self-energy.
    pub e_dse: f64,
    /// AO × MO coefficients; MOs are irrep-major with ascending energy inside each irrep.
    pub c: DMatrix<f64>,
    pub eps: Vec<f64>,
    pub mo_irrep: Vec<u8>,
    pub occupied: Vec<bool>,
    pub n_mo: Vec<usize>,
    pub n_occ: Vec<usize>,
    /// Total (both-spin) AO density.
    pub density: DMatrix<f64>,
    pub fock: DMatrix<f64>,
    /// Electronic `⟨Σ_i r_i⟩` about the integral origin.
    pub r_expect: [f64; 3],
    /// `⟨ε_m·r⟩` for every cavity mode.
    pub mode_shifts: Vec<f64>,
    /// Largest occupied–virtual Fock element in the MO basis.
    pub max_ov_fock: f64,
    pub trace: Vec<ScfIteration>,
}

impl ScfResult {
    pub fn n_electrons(&self) -> usize {
        2 * self.n_occ.iter().sum::<usize>()
    }

    /// MO indices of irrep `g` with the requested occupation, in energy order.
    pub fn orbitals(&self, g: usize, occupied: bool) -> Vec<usize> {
        (0..self.eps.len())
            .filter(|&p| self.mo_irrep[p] as usize == g && self.occupied[p] == occupied)
            .collect()
    }

    /// Total molecular dipole `Σ Z_A R_A − ⟨Σ r_i⟩` about the integral origin.
    pub fn dipole(&self, mol: &Molecule, origin: [f64; 3]) -> [f64; 3] {
        let n = mol.nuclear_dipole(origin);
        [n[0] - self.r_expect[0], n[1] - self.r_expect[1], n[2] - self.r_expect[2]]
    }
}

/// Coulomb and exchange matrices `J_pq = Σ (pq|rs) P_rs`, `K_pq = Σ (pr|qs) P_rs`.
pub fn coulomb_exchange(eri: &PackedEri, p: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = eri.n();
    let data = eri.data();
    let partial: Vec<(DMatrix<f64>, DMatrix<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut j = DMatrix::zeros(n, n);
            let mut k = DMatrix::zeros(n, n);
            for q in 0..=i {
                let pq = i * (i + 1) / 2 + q;
                for r in 0..=i {
                    let smax = if r == i { q } else { r };
                    for s in 0..=smax {
                        let rs = r * (r + 1) / 2 + s;
                        let mut v = data[pq * (pq + 1) / 2 + rs];
                        if v == 0.0 {
                            continue;
                        }
                        if i == q {
                            v *= 0.5;
                        }
                        if r == s {
                            v *= 0.5;
                        }
                        if pq == rs {
                            v *= 0.5;
                        }
                        for (a, b, c, d) in [
                            (i, q, r, s),
                            (q, i, r, s),
                            (i, q, s, r),
                            (q, i, s, r),
                            (r, s, i, q),
                            (s, r, i, q),
                            (r, s, q, i),
                            (s, r, q, i),
                        ] {
                            j[(a, b)] += v * p[(c, d)];
                            k[(a, c)] += v * p[(b, d)];
                        }
                    }
                }
            }
            (j, k)
        })
        .collect();
    let mut j = DMatrix::zeros(n, n);
    let mut k = DMatrix::zeros(n, n);
    for (pj, pk) in partial {
        j += pj;
        k += pk;
    }
    (j, k)
}

struct Mean {
    fock: DMatrix<f64>,
    energy: f64,
    e_dse: f64,
    shifts: Vec<f64>,
}

fn mean_field(h: &DMatrix<f64>, ints: &IntegralSet, cav: &CavityModeSet, p: &DMatrix<f64>, e_nuc: f64) -> Mean {
    let (j, k) = coulomb_exchange(&ints.eri, p);
    let g = &j - &k * 0.5;
    let dse = build_dse(cav, &ints.one, p);
    let fock = h + &g + &dse.one_body + &dse.coulomb + &dse.exchange;
    let energy = p.dot(h) + 0.5 * p.dot(&g) + dse.energy + e_nuc;
    Mean { fock, energy, e_dse: dse.energy, shifts: dse.shifts }
}

/// Orthogonalizer `X` with `Xᵀ S X = 1`, dropping near-null overlap directions.
fn orthogonalizer(s: &DMatrix<f64>, lindep: f64) -> DMatrix<f64> {
    let e = SymmetricEigen::new(s.clone());
    let keep: Vec<usize> = (0..s.nrows()).filter(|&i| e.eigenvalues[i] > lindep).collect();
    DMatrix::from_fn(s.nrows(), keep.len(), |r, c| e.eigenvectors[(r, keep[c])] / e.eigenvalues[keep[c]].sqrt())
}

struct Orbitals {
    c: DMatrix<f64>,
    eps: Vec<f64>,
    irrep: Vec<u8>,
}

/// Diagonalizes `f` inside each irrep block; `xs[g]` maps orthonormal block functions to AOs.
fn diagonalize(f: &DMatrix<f64>, xs: &[DMatrix<f64>]) -> Orbitals {
    let n = f.nrows();
    let nmo: usize = xs.iter().map(|x| x.ncols()).sum();
    let mut c = DMatrix::zeros(n, nmo);
    let mut eps = Vec::with_capacity(nmo);
    let mut irrep = Vec::with_capacity(nmo);
    let mut col = 0;
    for (g, x) in xs.iter().enumerate() {
        if x.ncols() == 0 {
            continue;
        }
        let fg = x.transpose() * f * x;
        let fg = (&fg + fg.transpose()) * 0.5;
        let e = SymmetricEigen::new(fg);
        let mut order: Vec<usize> = (0..x.ncols()).collect();
        order.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
        for &k in &order {
            let mut v: DVector<f64> = x * e.eigenvectors.column(k);
            // deterministic phase: largest coefficient positive
            let imax = v.iamax();
            if v[imax] < 0.0 {
                v = -v;
            }
            c.set_column(col, &v);
            eps.push(e.eigenvalues[k]);
            irrep.push(g as u8);
            col += 1;
        }
    }
    Orbitals { c, eps, irrep }
}

/// Aufbau over all irreps; near-degenerate levels are filled in irrep order.
fn aufbau(orb: &Orbitals, n_occ: usize) -> Vec<bool> {
    let mut idx: Vec<usize> = (0..orb.eps.len()).collect();
    let key = |p: usize| ((orb.eps[p] * 1e9).round() as i64, orb.irrep[p], p);
    idx.sort_by_key(|&p| key(p));
    let mut occ = vec![false; orb.eps.len()];
    for &p in idx.iter().take(n_occ) {
        occ[p] = true;
    }
    occ
}

fn density(c: &DMatrix<f64>, occ: &[bool]) -> DMatrix<f64> {
    let n = c.nrows();
    let mut p = DMatrix::zeros(n, n);
    for (k, &o) in occ.iter().enumerate() {
        if o {
            let v = c.column(k);
            p += (&v * v.transpose()) * 2.0;
        }
    }
    p
}

struct Diis {
    size: usize,
    focks: Vec<DMatrix<f64>>,
    errors: Vec<DMatrix<f64>>,
}

impl Diis {
    fn push(&mut self, f: DMatrix<f64>, e: DMatrix<f64>) {
        if self.focks.len() == self.size {
            self.focks.remove(0);
            self.errors.remove(0);
        }
        self.focks.push(f);
        self.errors.push(e);
    }

    fn extrapolate(&self) -> Option<DMatrix<f64>> {
        let m = self.focks.len();
        if m < 2 {
            return None;
        }
        let mut b = DMatrix::zeros(m + 1, m + 1);
        let mut rhs = DVector::zeros(m + 1);
        for i in 0..m {
            for j in 0..m {
                b[(i, j)] = self.errors[i].dot(&self.errors[j]);
            }
            b[(i, m)] = -1.0;
            b[(m, i)] = -1.0;
        }
        rhs[m] = -1.0;
        let scale = (0..m).map(|i| b[(i, i)]).fold(0.0, f64::max);
        if scale > 0.0 {
            for i in 0..m {
                for j in 0..m {
                    b[(i, j)] /= scale;
                }
            }
        }
        let w = b.lu().solve(&rhs)?;
        let mut f = &self.focks[0] * w[0];
        for i in 1..m {
            f += &self.focks[i] * w[i];
        }
        Some(f)
    }
}

/// Runs QED-HF. `salcs[g]` holds orthonormal AO combinations spanning irrep `g` of `group`.
pub fn run_scf(
    mol: &Molecule,
    ints: &IntegralSet,
    cav: &CavityModeSet,
    group: PointGroup,
    salcs: &[DMatrix<f64>],
    opts: &ScfOptions,
) -> Result<ScfResult> {
    mol.require_closed_shell()?;
    let n = ints.n();
    let n_occ = mol.n_electrons() / 2;
    if salcs.len() != group.order() {
        return Err(Error::Symmetry(format!("{} SALC blocks for group {group}", salcs.len())));
    }
    let one = &ints.one;
    let h = &one.t + &one.v;
    let e_nuc = mol.nuclear_repulsion();
    let xs: Vec<DMatrix<f64>> = salcs
        .iter()
        .map(|u| {
            if u.ncols() == 0 {
                return DMatrix::zeros(n, 0);
            }
            let sg = u.transpose() * &one.s * u;
            u * orthogonalizer(&sg, opts.lindep)
        })
        .collect();
    let nmo: usize = xs.iter().map(|x| x.ncols()).sum();
    if nmo < n_occ {
        return Err(Error::Input(format!("{nmo} orbitals cannot hold {} electrons", 2 * n_occ)));
    }
    let x_all = orthogonalizer(&one.s, opts.lindep);

    // core guess including the DSE one-body term
    let zero = DMatrix::zeros(n, n);
    let guess = mean_field(&h, ints, cav, &zero, e_nuc);
    let mut orb = diagonalize(&guess.fock, &xs);
    let mut occ = aufbau(&orb, n_occ);
    let mut p = density(&orb.c, &occ);
    let mut diis = Diis { size: opts.diis_size, focks: Vec::new(), errors: Vec::new() };
    let mut trace = Vec::new();
    let mut e_old = 0.0;
    let mut converged = false;
    for iter in 1..=opts.max_iter {
        let mf = mean_field(&h, ints, cav, &p, e_nuc);
        let fps = &mf.fock * &p * &one.s;
        let err = x_all.transpose() * (&fps - fps.transpose()) * &x_all;
        let err_max = err.amax();
        let de = mf.energy - e_old;
        e_old = mf.energy;
        trace.push(ScfIteration { iter, energy: mf.energy, delta_e: de, error: err_max });
        log::info!("scf {iter:3} E = {:.12} dE = {de:.3e} |FPS-SPF| = {err_max:.3e}", mf.energy);
        diis.push(mf.fock.clone(), err);
        let f = diis.extrapolate().unwrap_or(mf.fock);
        orb = diagonalize(&f, &xs);
        occ = aufbau(&orb, n_occ);
        let p_new = density(&orb.c, &occ);
        let dp = (&p_new - &p).norm() / (n as f64);
        p = p_new;
        if iter > 1 && de.abs() < opts.e_tol && dp < opts.d_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        let last = trace.last().cloned();
        return Err(Error::Convergence(format!(
            "QED-HF not converged in {} iterations (last: {:?})",
            opts.max_iter, last
        )));
    }
    // canonical orbitals of the final Fock operator
    let mf = mean_field(&h, ints, cav, &p, e_nuc);
    orb = diagonalize(&mf.fock, &xs);
    occ = aufbau(&orb, n_occ);
    p = density(&orb.c, &occ);
    let mf = mean_field(&h, ints, cav, &p, e_nuc);
    let fmo = orb.c.transpose() * &mf.fock * &orb.c;
    let mut max_ov: f64 = 0.0;
    for i in 0..nmo {
        for a in 0..nmo {
            if occ[i] && !occ[a] {
                max_ov = max_ov.max(fmo[(i, a)].abs());
            }
        }
    }
    let h_ = group.order();
    let n_mo: Vec<usize> = (0..h_).map(|g| orb.irrep.iter().filter(|&&x| x as usize == g).count()).collect();
    let n_occ_g: Vec<usize> = (0..h_)
        .map(|g| (0..nmo).filter(|&k| occ[k] && orb.irrep[k] as usize == g).count())
        .collect();
    let r_expect = [p.dot(&one.d[0]), p.dot(&one.d[1]), p.dot(&one.d[2])];
    log::info!("QED-HF converged: E = {:.12} (DSE {:.3e}) in {} iterations", mf.energy, mf.e_dse, trace.len());
    Ok(ScfResult {
        group,
        energy: mf.energy,
        e_nuc,
        e_dse: mf.e_dse,
        eps: fmo.diagonal().iter().copied().collect(),
        c: orb.c,
        mo_irrep: orb.irrep,
        occupied: occ,
        n_mo,
        n_occ: n_occ_g,
        density: p,
        fock: mf.fock,
        r_expect,
        mode_shifts: mf.shifts,
        max_ov_fock: max_ov,
        trace,
    })
}
