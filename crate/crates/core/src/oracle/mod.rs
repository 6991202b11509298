//! Brute-force QED-FCI over determinants × photon occupations.
//!
//! The Hamiltonian is assembled from raw MO integrals by Slater–Condon rules.
//! The dipole self-energy is formed by squaring the dipole-fluctuation matrix
//! inside the determinant space, which is exact because a one-body operator
//! never leaves the space of all determinants with fixed electron count.

pub mod analysis;
pub mod symmetry;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mo::transform_eri;
use crate::cavity::mode_position;
use crate::scf::ScfResult;
use crate::system::System;

/// Largest basis the oracle will build.
pub const MAX_STATES: usize = 40_000;

#[derive(Clone, Debug)]
pub struct OracleMode {
    pub omega: f64,
    pub lambda: f64,
    /// `ε·r` in the MO basis.
    pub d: DMatrix<f64>,
    /// Coherent-state reference value `⟨ε·r⟩`.
    pub shift: f64,
    pub irrep: u8,
}

/// Raw MO-basis ingredients of the polaritonic Hamiltonian.
#[derive(Clone, Debug)]
pub struct OracleModel {
    pub n_orb: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    pub h: DMatrix<f64>,
    /// Undressed `(pq|rs)`, row-major over four MO indices.
    pub eri: Vec<f64>,
    pub e_nuc: f64,
    pub modes: Vec<OracleMode>,
    pub orb_irrep: Vec<u8>,
}

impl OracleModel {
    /// Model in the QED-HF orbitals of `scf`, built from the AO integrals of `sys`.
    pub fn new(sys: &System, scf: &ScfResult) -> Result<OracleModel> {
        let c = &scf.c;
        let one = &sys.ints.one;
        let h = c.transpose() * (&one.t + &one.v) * c;
        let eri = transform_eri(&sys.ints.eri.to_dense(), c);
        let irreps: Vec<u8> = match &sys.cav.irreps {
            Some(v) => v.iter().map(|i| i.id).collect(),
            None => vec![0; sys.cav.n_modes()],
        };
        let mut modes = Vec::new();
        for (k, m) in sys.cav.modes().iter().enumerate() {
            let ao = mode_position(one, m.eps);
            let shift = scf.density.dot(&ao);
            modes.push(OracleMode { omega: m.omega, lambda: m.lambda, d: c.transpose() * ao * c, shift, irrep: irreps[k] });
        }
        let ne = scf.n_electrons();
        Ok(OracleModel {
            n_orb: c.ncols(),
            n_alpha: ne / 2,
            n_beta: ne / 2,
            h,
            eri,
            e_nuc: sys.mol.nuclear_repulsion(),
            modes,
            orb_irrep: scf.mo_irrep.clone(),
        })
    }

    fn eri(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let n = self.n_orb;
        self.eri[((p * n + q) * n + r) * n + s]
    }

    fn orb(&self, so: usize) -> (usize, usize) {
        (so % self.n_orb, so / self.n_orb)
    }

    fn h_so(&self, p: usize, q: usize) -> f64 {
        let (p, sp) = self.orb(p);
        let (q, sq) = self.orb(q);
        if sp == sq {
            self.h[(p, q)]
        } else {
            0.0
        }
    }

    /// `<pq||rs>` over spin orbitals `spin * n_orb + spatial`.
    fn anti(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let (pp, sp) = self.orb(p);
        let (qq, sq) = self.orb(q);
        let (rr, sr) = self.orb(r);
        let (ss, ss_) = self.orb(s);
        let mut v = 0.0;
        if sp == sr && sq == ss_ {
            v += self.eri(pp, rr, qq, ss);
        }
        if sp == ss_ && sq == sr {
            v -= self.eri(pp, ss, qq, rr);
        }
        v
    }
}

pub type Det = u128;

fn occ_list(d: Det) -> Vec<usize> {
    (0..128).filter(|&k| d >> k & 1 == 1).collect()
}

/// Sign and result of `a†_p` / `a_p` acting on a determinant.
pub(crate) fn annihilate(d: Det, p: usize) -> Option<(Det, f64)> {
    if d >> p & 1 == 0 {
        return None;
    }
    let below = (d & ((1u128 << p) - 1)).count_ones();
    Some((d & !(1u128 << p), if below % 2 == 0 { 1.0 } else { -1.0 }))
}

pub(crate) fn create(d: Det, p: usize) -> Option<(Det, f64)> {
    if d >> p & 1 == 1 {
        return None;
    }
    let below = (d & ((1u128 << p) - 1)).count_ones();
    Some((d | (1u128 << p), if below % 2 == 0 { 1.0 } else { -1.0 }))
}

/// `a†_{c0} a†_{c1} .. a_{a1} a_{a0} |d⟩` applied right to left.
pub(crate) fn excite(d: Det, ann: &[usize], cre: &[usize]) -> Option<(Det, f64)> {
    let mut cur = d;
    let mut sign = 1.0;
    for &p in ann {
        let (n, s) = annihilate(cur, p)?;
        cur = n;
        sign *= s;
    }
    for &p in cre.iter().rev() {
        let (n, s) = create(cur, p)?;
        cur = n;
        sign *= s;
    }
    Some((cur, sign))
}

fn combinations(n: usize, k: usize) -> Vec<u64> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    if k == 0 {
        return vec![0];
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().fold(0u64, |a, &i| a | (1 << i)));
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
    out
}

/// Product states `|determinant⟩ ⊗ |n_1 n_2 ..⟩`, determinant-major.
#[derive(Clone, Debug)]
pub struct PolaritonBasis {
    pub dets: Vec<Det>,
    pub photons: Vec<Vec<u8>>,
    /// `(det index, photon index)` per basis state.
    pub states: Vec<(usize, usize)>,
    pub irreps: Vec<u8>,
}

/// Photon truncation: per-mode cap and optional cap on the total count.
#[derive(Clone, Debug)]
pub struct PhotonCap {
    pub per_mode: u8,
    pub total: Option<u8>,
}

impl PhotonCap {
    pub fn per_mode(n: u8) -> PhotonCap {
        PhotonCap { per_mode: n, total: None }
    }
}

impl PolaritonBasis {
    /// All `S_z`-conserving determinants times capped photon tuples; with
    /// `irrep = Some(g)` only states of composite symmetry `g` are kept.
    pub fn new(model: &OracleModel, cap: &PhotonCap, irrep: Option<u8>) -> Result<PolaritonBasis> {
        let n = model.n_orb;
        if 2 * n > 128 {
            return Err(Error::TooLarge(format!("{n} orbitals exceed the determinant word")));
        }
        let alpha = combinations(n, model.n_alpha);
        let beta = combinations(n, model.n_beta);
        let mut dets = Vec::with_capacity(alpha.len() * beta.len());
        for &a in &alpha {
            for &b in &beta {
                dets.push(a as u128 | ((b as u128) << n));
            }
        }
        let det_irrep: Vec<u8> = dets
            .iter()
            .map(|&d| occ_list(d).iter().fold(0u8, |g, &so| g ^ model.orb_irrep[so % n]))
            .collect();
        let nm = model.modes.len();
        let mut photons: Vec<Vec<u8>> = vec![vec![]];
        for _ in 0..nm {
            photons = photons
                .into_iter()
                .flat_map(|p| {
                    (0..=cap.per_mode).map(move |k| {
                        let mut q = p.clone();
                        q.push(k);
                        q
                    })
                })
                .collect();
        }
        if let Some(t) = cap.total {
            photons.retain(|p| p.iter().map(|&x| x as u32).sum::<u32>() <= t as u32);
        }
        photons.sort_by_key(|p| (p.iter().map(|&x| x as u32).sum::<u32>(), p.clone()));
        let ph_irrep: Vec<u8> = photons
            .iter()
            .map(|p| p.iter().zip(&model.modes).fold(0u8, |g, (&k, m)| if k % 2 == 1 { g ^ m.irrep } else { g }))
            .collect();
        let mut states = Vec::new();
        let mut irreps = Vec::new();
        for (i, gd) in det_irrep.iter().enumerate() {
            for (j, gp) in ph_irrep.iter().enumerate() {
                let g = gd ^ gp;
                if irrep.map_or(true, |x| x == g) {
                    states.push((i, j));
                    irreps.push(g);
                }
            }
        }
        if states.len() > MAX_STATES {
            return Err(Error::TooLarge(format!(
                "{} polaritonic states ({} determinants × {} photon tuples) exceed the limit of {MAX_STATES}",
                states.len(),
                dets.len(),
                photons.len()
            )));
        }
        Ok(PolaritonBasis { dets, photons, states, irreps })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Electronic Hamiltonian (without nuclear repulsion) over determinants.
pub fn electronic_matrix(model: &OracleModel, dets: &[Det]) -> DMatrix<f64> {
    let nd = dets.len();
    let rows: Vec<Vec<f64>> = dets
        .par_iter()
        .map(|&bra| {
            let occ_b = occ_list(bra);
            dets.iter()
                .map(|&ket| {
                    let diff = bra ^ ket;
                    match diff.count_ones() {
                        0 => {
                            let mut e = 0.0;
                            for (k, &i) in occ_b.iter().enumerate() {
                                e += model.h_so(i, i);
                                for &j in &occ_b[..k] {
                                    e += model.anti(i, j, i, j);
                                }
                            }
                            e
                        }
                        2 => {
                            let i = (ket & diff).trailing_zeros() as usize;
                            let a = (bra & diff).trailing_zeros() as usize;
                            let (_, sign) = excite(ket, &[i], &[a]).unwrap();
                            let mut v = model.h_so(a, i);
                            for j in occ_list(ket & bra) {
                                v += model.anti(a, j, i, j);
                            }
                            sign * v
                        }
                        4 => {
                            let ii = occ_list(ket & diff);
                            let aa = occ_list(bra & diff);
                            let (_, sign) = excite(ket, &[ii[0], ii[1]], &[aa[0], aa[1]]).unwrap();
                            sign * model.anti(aa[0], aa[1], ii[0], ii[1])
                        }
                        _ => 0.0,
                    }
                })
                .collect()
        })
        .collect();
    DMatrix::from_fn(nd, nd, |i, j| rows[i][j])
}

/// One-body operator `Σ o_pq p†q − shift` over determinants (spin-free `o`).
pub fn one_body_matrix(model: &OracleModel, dets: &[Det], o: &DMatrix<f64>, shift: f64) -> DMatrix<f64> {
    let n = model.n_orb;
    let nd = dets.len();
    let index: std::collections::HashMap<Det, usize> = dets.iter().enumerate().map(|(i, &d)| (d, i)).collect();
    let mut m = DMatrix::zeros(nd, nd);
    for (j, &ket) in dets.iter().enumerate() {
        m[(j, j)] -= shift;
        for spin in 0..2 {
            for q in 0..n {
                for p in 0..n {
                    let v = o[(p, q)];
                    if v == 0.0 {
                        continue;
                    }
                    if let Some((bra, s)) = excite(ket, &[spin * n + q], &[spin * n + p]) {
                        if let Some(&i) = index.get(&bra) {
                            m[(i, j)] += s * v;
                        }
                    }
                }
            }
        }
    }
    m
}

/// Dense QED Hamiltonian over a polaritonic basis.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    pub m: DMatrix<f64>,
    pub hermitian: bool,
}

pub fn build_hamiltonian(model: &OracleModel, basis: &PolaritonBasis) -> DenseOperator {
    let hel = electronic_matrix(model, &basis.dets);
    let mut elec = hel;
    let mut dip = Vec::new();
    for m in &model.modes {
        let d = one_body_matrix(model, &basis.dets, &m.d, m.shift);
        elec += (&d * &d) * (0.5 * m.lambda * m.lambda);
        dip.push(d);
    }
    let ns = basis.len();
    let mut h = DMatrix::zeros(ns, ns);
    for (a, &(di, pi)) in basis.states.iter().enumerate() {
        for (b, &(dj, pj)) in basis.states.iter().enumerate() {
            let ph_i = &basis.photons[pi];
            let ph_j = &basis.photons[pj];
            let mut v = 0.0;
            if pi == pj {
                v += elec[(di, dj)];
                if di == dj {
                    v += model.e_nuc;
                    v += ph_i.iter().zip(&model.modes).map(|(&k, m)| k as f64 * m.omega).sum::<f64>();
                }
            } else {
                // photon tuples differing by one quantum in a single mode
                let diff: Vec<usize> = (0..ph_i.len()).filter(|&k| ph_i[k] != ph_j[k]).collect();
                if diff.len() == 1 {
                    let k = diff[0];
                    let (ni, nj) = (ph_i[k] as i32, ph_j[k] as i32);
                    if (ni - nj).abs() == 1 {
                        let md = &model.modes[k];
                        let c = md.lambda * (0.5 * md.omega).sqrt();
                        v += c * dip[k][(di, dj)] * (ni.max(nj) as f64).sqrt();
                    }
                }
            }
            h[(a, b)] = v;
        }
    }
    DenseOperator { m: h, hermitian: true }
}

/// Lowest `nroots` eigenpairs of a real symmetric matrix, ascending.
pub fn diagonalize(op: &DenseOperator, nroots: usize) -> (Vec<f64>, DMatrix<f64>) {
    let n = op.m.nrows();
    let k = nroots.min(n);
    let se = SymmetricEigen::new(op.m.clone());
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let vals = idx[..k].iter().map(|&i| se.eigenvalues[i]).collect();
    let vecs = DMatrix::from_columns(&idx[..k].iter().map(|&i| se.eigenvectors.column(i).into_owned()).collect::<Vec<DVector<f64>>>());
    (vals, vecs)
}
