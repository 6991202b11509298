//! Expectation values and cluster analysis of oracle eigenvectors.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVectorView};

use super::{excite, Det, OracleModel, PolaritonBasis};
use crate::cc::{g2_index, Amps};
use crate::error::{Error, Result};
use crate::mo::{MoSystem, SpinOrb};
use crate::sym::BlockedTensor;

/// Lookup from `(determinant, photon tuple)` to basis position.
pub struct StateIndex<'a> {
    basis: &'a PolaritonBasis,
    map: HashMap<(Det, &'a [u8]), usize>,
}

impl<'a> StateIndex<'a> {
    pub fn new(basis: &'a PolaritonBasis) -> StateIndex<'a> {
        let map = basis
            .states
            .iter()
            .enumerate()
            .map(|(k, &(d, p))| ((basis.dets[d], basis.photons[p].as_slice()), k))
            .collect();
        StateIndex { basis, map }
    }

    pub fn get(&self, det: Det, photons: &[u8]) -> Option<usize> {
        self.map.get(&(det, photons)).copied()
    }

    /// Coefficient of a product state in `v`, zero when the state is absent.
    pub fn coef(&self, v: DVectorView<f64>, det: Det, photons: &[u8]) -> f64 {
        self.get(det, photons).map_or(0.0, |k| v[k])
    }

    pub fn basis(&self) -> &PolaritonBasis {
        self.basis
    }
}

/// Spin-summed `γ_pq = ⟨p†q⟩` over spatial MOs.
pub fn one_rdm(model: &OracleModel, basis: &PolaritonBasis, v: DVectorView<f64>) -> DMatrix<f64> {
    let n = model.n_orb;
    let idx = StateIndex::new(basis);
    let mut g = DMatrix::zeros(n, n);
    for (k, &(d, ph)) in basis.states.iter().enumerate() {
        let c = v[k];
        if c == 0.0 {
            continue;
        }
        let det = basis.dets[d];
        for spin in 0..2 {
            for q in 0..n {
                for p in 0..n {
                    if let Some((bra, s)) = excite(det, &[spin * n + q], &[spin * n + p]) {
                        g[(p, q)] += s * c * idx.coef(v, bra, &basis.photons[ph]);
                    }
                }
            }
        }
    }
    g
}

/// `⟨b†_m b_m⟩` of a normalized state.
pub fn photon_number(basis: &PolaritonBasis, v: DVectorView<f64>, m: usize) -> f64 {
    basis.states.iter().enumerate().map(|(k, &(_, p))| v[k] * v[k] * basis.photons[p][m] as f64).sum()
}

/// `⟨b_m + b†_m⟩` of a normalized state.
pub fn displacement(basis: &PolaritonBasis, v: DVectorView<f64>, m: usize) -> f64 {
    let idx = StateIndex::new(basis);
    let mut x = 0.0;
    for (k, &(d, p)) in basis.states.iter().enumerate() {
        let mut up = basis.photons[p].clone();
        up[m] += 1;
        let c = idx.coef(v, basis.dets[d], &up);
        x += 2.0 * v[k] * c * (up[m] as f64).sqrt();
    }
    x
}

fn bit(n: usize, so: SpinOrb) -> usize {
    so.1 as usize * n + so.0
}

/// Amplitudes whose exponential reproduces `v` in every sector of the
/// cluster manifold (singles and doubles with up to one photon, bare
/// one- and two-photon states).
pub fn cluster_analysis(mo: &MoSystem, basis: &PolaritonBasis, v: DVectorView<f64>) -> Result<Amps<BlockedTensor>> {
    let n = mo.n_spatial;
    let nm = mo.n_modes();
    let idx = StateIndex::new(basis);
    let mut reference: Det = 0;
    for &(p, s) in &mo.occ_map {
        reference |= 1u128 << bit(n, (p, s));
    }
    let vac = vec![0u8; nm];
    let c0 = idx.coef(v, reference, &vac);
    if c0.abs() < 1e-8 {
        return Err(Error::Input("reference weight vanishes; cluster analysis undefined".into()));
    }
    let one = |m: usize| {
        let mut p = vac.clone();
        p[m] = 1;
        p
    };
    // normalized coefficient of τ_μ |ref⟩ ⊗ |photons⟩
    let amp = |ann: &[usize], cre: &[usize], ph: &[u8]| -> f64 {
        let ann: Vec<usize> = ann.iter().map(|&i| bit(n, mo.occ_map[i])).collect();
        let cre: Vec<usize> = cre.iter().map(|&a| bit(n, mo.vir_map[a])).collect();
        match excite(reference, &ann, &cre) {
            Some((d, s)) => s * idx.coef(v, d, ph) / c0,
            None => 0.0,
        }
    };
    let mut a = Amps::zeros(mo, 0);
    a.t1 = a.t1.map_indexed(|x, _| amp(&[x[1]], &[x[0]], &vac));
    let t1 = a.t1.clone();
    let t1v = |a_: usize, i: usize| t1.get(&[a_, i]);
    let tt = |a_: usize, b: usize, i: usize, j: usize| t1v(a_, i) * t1v(b, j) - t1v(b, i) * t1v(a_, j);
    a.t2 = a.t2.map_indexed(|x, _| amp(&[x[2], x[3]], &[x[0], x[1]], &vac) - tt(x[0], x[1], x[2], x[3]));
    let t2 = a.t2.clone();
    for m in 0..nm {
        let ph = one(m);
        let g = idx.coef(v, reference, &ph) / c0;
        a.g1[m] = a.g1[m].map_indexed(|_, _| g);
        a.s1[m] = a.s1[m].map_indexed(|x, _| amp(&[x[1]], &[x[0]], &ph) - g * t1v(x[0], x[1]));
        let s1 = a.s1[m].clone();
        let s1v = |a_: usize, i: usize| s1.get(&[a_, i]);
        a.s2[m] = a.s2[m].map_indexed(|x, _| {
            let (p, q, i, j) = (x[0], x[1], x[2], x[3]);
            let st = s1v(p, i) * t1v(q, j) - s1v(q, i) * t1v(p, j) - s1v(p, j) * t1v(q, i) + s1v(q, j) * t1v(p, i);
            amp(&[i, j], &[p, q], &ph) - g * (t2.get(x) + tt(p, q, i, j)) - st
        });
    }
    let gam: Vec<f64> = (0..nm).map(|m| idx.coef(v, reference, &one(m)) / c0).collect();
    for m in 0..nm {
        for k in m..nm {
            let mut ph = vac.clone();
            ph[m] += 1;
            ph[k] += 1;
            let c = idx.coef(v, reference, &ph) / c0;
            let val = if m == k { c / 2f64.sqrt() - 0.5 * gam[m] * gam[m] } else { c - gam[m] * gam[k] };
            let slot = g2_index(m, k, nm);
            a.g2[slot] = a.g2[slot].map_indexed(|_, _| val);
        }
    }
    Ok(a)
}
