//! Spin-orbital Hamiltonian in the canonical QED-HF orbital basis.
//!
//! Occupied and virtual spin orbitals are grouped by irrep; inside each irrep
//! the α orbitals precede the β orbitals. All operators are normal ordered
//! with respect to the QED-HF determinant in the coherent-state frame.

use nalgebra::DMatrix;

use crate::ad::Algebra;
use crate::cavity::{build_dse, mode_position};
use crate::error::{Error, Result};
use crate::scf::ScfResult;
use crate::sym::{axis, AxisDims, BlockedTensor, PointGroup};
use crate::system::System;

/// One-body operator split into occupied/virtual blocks, e.g. `vo[a,i]`.
#[derive(Clone, Debug)]
pub struct OneBody<A> {
    pub oo: A,
    pub ov: A,
    pub vo: A,
    pub vv: A,
}

/// Antisymmetrized integrals `<pq||rs>` in the blocks the CC equations use.
#[derive(Clone, Debug)]
pub struct TwoBody<A> {
    pub oooo: A,
    pub ooov: A,
    pub oovv: A,
    pub ovvo: A,
    pub ovvv: A,
    pub vvvv: A,
    pub vvoo: A,
    pub vvvo: A,
    pub ovoo: A,
}

/// Electronic Hamiltonian; `w = None` gives a pure one-body operator.
#[derive(Clone, Debug)]
pub struct ElecHam<A> {
    pub f: OneBody<A>,
    pub w: Option<TwoBody<A>>,
}

/// Bilinear coupling `v = c_m Σ r_pq {p†q}` and frequency of one mode.
#[derive(Clone, Debug)]
pub struct ModeHam<A> {
    pub v: OneBody<A>,
    /// Rank-0 tensor holding `ω_m`.
    pub omega: A,
    /// Optional source `x_m (b_m + b_m†)` used to differentiate for `⟨b + b†⟩`.
    pub probe: Option<A>,
}

#[derive(Clone, Debug)]
pub struct QedHam<A> {
    pub elec: ElecHam<A>,
    pub modes: Vec<ModeHam<A>>,
}

impl<A> OneBody<A> {
    pub fn map<B>(&self, mut f: impl FnMut(&A) -> B) -> OneBody<B> {
        OneBody { oo: f(&self.oo), ov: f(&self.ov), vo: f(&self.vo), vv: f(&self.vv) }
    }
    pub fn iter(&self) -> impl Iterator<Item = &A> {
        [&self.oo, &self.ov, &self.vo, &self.vv].into_iter()
    }
}

impl<A> TwoBody<A> {
    pub fn map<B>(&self, mut f: impl FnMut(&A) -> B) -> TwoBody<B> {
        TwoBody {
            oooo: f(&self.oooo),
            ooov: f(&self.ooov),
            oovv: f(&self.oovv),
            ovvo: f(&self.ovvo),
            ovvv: f(&self.ovvv),
            vvvv: f(&self.vvvv),
            vvoo: f(&self.vvoo),
            vvvo: f(&self.vvvo),
            ovoo: f(&self.ovoo),
        }
    }
}

impl<A> ElecHam<A> {
    pub fn map<B>(&self, mut f: impl FnMut(&A) -> B) -> ElecHam<B> {
        ElecHam { f: self.f.map(&mut f), w: self.w.as_ref().map(|w| w.map(&mut f)) }
    }
}

impl<A> ModeHam<A> {
    pub fn map<B>(&self, mut f: impl FnMut(&A) -> B) -> ModeHam<B> {
        ModeHam { v: self.v.map(&mut f), omega: f(&self.omega), probe: self.probe.as_ref().map(&mut f) }
    }
}

impl<A> QedHam<A> {
    pub fn map<B>(&self, mut f: impl FnMut(&A) -> B) -> QedHam<B> {
        QedHam { elec: self.elec.map(&mut f), modes: self.modes.iter().map(|m| m.map(&mut f)).collect() }
    }
}

impl<A: Algebra> OneBody<A> {
    pub fn add(&self, o: &Self) -> Self {
        OneBody { oo: self.oo.add(&o.oo), ov: self.ov.add(&o.ov), vo: self.vo.add(&o.vo), vv: self.vv.add(&o.vv) }
    }
}

/// Spatial-orbital data of one cavity mode.
#[derive(Clone, Debug)]
pub struct MoMode {
    pub omega: f64,
    pub lambda: f64,
    /// `λ √(ω/2)`.
    pub coupling: f64,
    pub irrep: u8,
    /// `ε·r` in the MO basis.
    pub r: DMatrix<f64>,
    /// Reference `⟨ε·r⟩`.
    pub shift: f64,
}

/// Spin orbital: spatial MO index and spin (0 = α, 1 = β).
pub type SpinOrb = (usize, u8);

#[derive(Clone, Debug)]
pub struct MoSystem {
    pub group: PointGroup,
    pub h: usize,
    pub occ: AxisDims,
    pub vir: AxisDims,
    pub occ_map: Vec<SpinOrb>,
    pub vir_map: Vec<SpinOrb>,
    pub e_occ: Vec<f64>,
    pub e_vir: Vec<f64>,
    /// QED-HF total energy recomputed from the MO integrals.
    pub e_ref: f64,
    pub n_spatial: usize,
    pub mo_irrep: Vec<u8>,
    pub occupied: Vec<bool>,
    /// Dressed one-electron operator `h + Σ ½λ²(Q − 2⟨r⟩r)` in the MO basis (see [`crate::cavity::DseOneBody`]).
    pub h_mo: DMatrix<f64>,
    /// Fock matrix in the MO basis.
    pub fock_mo: DMatrix<f64>,
    /// Dressed `(pq|rs) + Σ λ² r_pq r_rs`, row-major over four MO indices.
    pub eri_mo: Vec<f64>,
    pub modes: Vec<MoMode>,
    /// Scalar part: nuclear repulsion plus `Σ ½λ²⟨r⟩²`.
    pub constant: f64,
}

/// Four-index transformation of a dense AO array with `c` (AO × MO).
pub fn transform_eri(ao: &[f64], c: &DMatrix<f64>) -> Vec<f64> {
    let n = c.nrows();
    let m = c.ncols();
    // (pq|rs) -> (ij|rs): two one-index steps on a matrix of shape (n², n²)
    let half = |src: &[f64], nin: usize, nother: usize| -> Vec<f64> {
        // src[(p q), X] with p,q < nin; output[X, (i j)] with i,j < m
        let mut out = vec![0.0; nother * m * m];
        let mut tmp = DMatrix::zeros(nin, nin);
        for x in 0..nother {
            for p in 0..nin {
                for q in 0..nin {
                    tmp[(p, q)] = src[(p * nin + q) * nother + x];
                }
            }
            let t = c.transpose() * &tmp * c;
            for i in 0..m {
                for j in 0..m {
                    out[x * m * m + i * m + j] = t[(i, j)];
                }
            }
        }
        out
    };
    let step1 = half(ao, n, n * n); // [(rs), (ij)]
    half(&step1, n, m * m) // [(ij), (kl)]
}

impl MoSystem {
    pub fn new(sys: &System, scf: &ScfResult) -> Result<MoSystem> {
        let group = scf.group;
        let h = group.order();
        let c = &scf.c;
        let nmo = c.ncols();
        let one = &sys.ints.one;
        let dse = build_dse(&sys.cav, one, &scf.density);
        let h_ao = &one.t + &one.v + &dse.one_body;
        let h_mo = c.transpose() * &h_ao * c;
        let mut eri = transform_eri(&sys.ints.eri.to_dense(), c);
        let irreps = match (&sys.cav.irreps, sys.cav.n_modes()) {
            (_, 0) => Vec::new(),
            (Some(v), _) => v.iter().map(|i| i.id).collect(),
            (None, _) => return Err(Error::Symmetry("cavity irreps not assigned".into())),
        };
        let mut modes = Vec::new();
        for (k, m) in sys.cav.modes().iter().enumerate() {
            let r = c.transpose() * mode_position(one, m.eps) * c;
            let l2 = m.lambda * m.lambda;
            if l2 != 0.0 {
                for p in 0..nmo {
                    for q in 0..nmo {
                        let rpq = r[(p, q)];
                        if rpq == 0.0 {
                            continue;
                        }
                        for s in 0..nmo {
                            for t in 0..nmo {
                                eri[((p * nmo + q) * nmo + s) * nmo + t] += l2 * rpq * r[(s, t)];
                            }
                        }
                    }
                }
            }
            modes.push(MoMode {
                omega: m.omega,
                lambda: m.lambda,
                coupling: m.lambda * (0.5 * m.omega).sqrt(),
                irrep: irreps[k],
                r,
                shift: dse.shifts[k],
            });
        }
        let g = |p: usize, q: usize, r: usize, s: usize| eri[((p * nmo + q) * nmo + r) * nmo + s];
        let occ_idx: Vec<usize> = (0..nmo).filter(|&p| scf.occupied[p]).collect();
        let mut fock_mo = h_mo.clone();
        for p in 0..nmo {
            for q in 0..nmo {
                let mut v = 0.0;
                for &j in &occ_idx {
                    v += 2.0 * g(p, q, j, j) - g(p, j, j, q);
                }
                fock_mo[(p, q)] += v;
            }
        }
        let constant = sys.mol.nuclear_repulsion() + dse.constant;
        let mut e_ref = constant;
        for &i in &occ_idx {
            e_ref += h_mo[(i, i)] + fock_mo[(i, i)];
        }

        let mut occ_dims = vec![0; h];
        let mut vir_dims = vec![0; h];
        let mut occ_map = Vec::new();
        let mut vir_map = Vec::new();
        for gi in 0..h {
            for (occupied, dims, map) in [(true, &mut occ_dims, &mut occ_map), (false, &mut vir_dims, &mut vir_map)] {
                let list = scf.orbitals(gi, occupied);
                dims[gi] = 2 * list.len();
                for spin in 0..2u8 {
                    map.extend(list.iter().map(|&p| (p, spin)));
                }
            }
        }
        let e_occ = occ_map.iter().map(|&(p, _)| fock_mo[(p, p)]).collect();
        let e_vir = vir_map.iter().map(|&(p, _)| fock_mo[(p, p)]).collect();
        Ok(MoSystem {
            group,
            h,
            occ: axis(&occ_dims),
            vir: axis(&vir_dims),
            occ_map,
            vir_map,
            e_occ,
            e_vir,
            e_ref,
            n_spatial: nmo,
            mo_irrep: scf.mo_irrep.clone(),
            occupied: scf.occupied.clone(),
            h_mo,
            fock_mo,
            eri_mo: eri,
            modes,
            constant,
        })
    }

    pub fn n_occ(&self) -> usize {
        self.occ_map.len()
    }
    pub fn n_vir(&self) -> usize {
        self.vir_map.len()
    }
    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// Dressed `(pq|rs)` over spatial MOs.
    pub fn eri(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let n = self.n_spatial;
        self.eri_mo[((p * n + q) * n + r) * n + s]
    }

    /// `<pq||rs>` over spin orbitals.
    pub fn anti(&self, p: SpinOrb, q: SpinOrb, r: SpinOrb, s: SpinOrb) -> f64 {
        let mut v = 0.0;
        if p.1 == r.1 && q.1 == s.1 {
            v += self.eri(p.0, r.0, q.0, s.0);
        }
        if p.1 == s.1 && q.1 == r.1 {
            v -= self.eri(p.0, s.0, q.0, r.0);
        }
        v
    }

    fn space(&self, c: char) -> (&AxisDims, &[SpinOrb]) {
        match c {
            'o' => (&self.occ, &self.occ_map),
            'v' => (&self.vir, &self.vir_map),
            _ => unreachable!(),
        }
    }

    fn one_body_block(&self, m: &DMatrix<f64>, target: u8, kind: &str) -> BlockedTensor {
        let k: Vec<char> = kind.chars().collect();
        let (a0, m0) = self.space(k[0]);
        let (a1, m1) = self.space(k[1]);
        BlockedTensor::from_fn(self.h, vec![a0.clone(), a1.clone()], target, |ix| {
            let (p, q) = (m0[ix[0]], m1[ix[1]]);
            if p.1 == q.1 {
                m[(p.0, q.0)]
            } else {
                0.0
            }
        })
    }

    /// Spin-orbital blocks of a spatial one-body operator with irrep `target`.
    pub fn one_body(&self, m: &DMatrix<f64>, target: u8) -> OneBody<BlockedTensor> {
        OneBody {
            oo: self.one_body_block(m, target, "oo"),
            ov: self.one_body_block(m, target, "ov"),
            vo: self.one_body_block(m, target, "vo"),
            vv: self.one_body_block(m, target, "vv"),
        }
    }

    fn two_body_block(&self, kind: &str) -> BlockedTensor {
        let k: Vec<char> = kind.chars().collect();
        let sp: Vec<(&AxisDims, &[SpinOrb])> = k.iter().map(|&c| self.space(c)).collect();
        let axes = sp.iter().map(|s| s.0.clone()).collect();
        BlockedTensor::from_fn(self.h, axes, 0, |ix| {
            self.anti(sp[0].1[ix[0]], sp[1].1[ix[1]], sp[2].1[ix[2]], sp[3].1[ix[3]])
        })
    }

    pub fn two_body(&self) -> TwoBody<BlockedTensor> {
        TwoBody {
            oooo: self.two_body_block("oooo"),
            ooov: self.two_body_block("ooov"),
            oovv: self.two_body_block("oovv"),
            ovvo: self.two_body_block("ovvo"),
            ovvv: self.two_body_block("ovvv"),
            vvvv: self.two_body_block("vvvv"),
            vvoo: self.two_body_block("vvoo"),
            vvvo: self.two_body_block("vvvo"),
            ovoo: self.two_body_block("ovoo"),
        }
    }

    pub fn elec_ham(&self) -> ElecHam<BlockedTensor> {
        ElecHam { f: self.one_body(&self.fock_mo, 0), w: Some(self.two_body()) }
    }

    pub fn qed_ham(&self) -> QedHam<BlockedTensor> {
        let elec = self.elec_ham();
        let modes = self
            .modes
            .iter()
            .map(|m| ModeHam {
                v: self.one_body(&(&m.r * m.coupling), m.irrep),
                omega: BlockedTensor::scalar(self.h, m.omega),
                probe: None,
            })
            .collect();
        QedHam { elec, modes }
    }

    /// `ε_a − ε_i` style denominators over `vir` and `occ` axes of the given layout.
    pub fn denominator(&self, like: &BlockedTensor, photons: f64) -> BlockedTensor {
        let r = like.rank();
        like.map_indexed(|ix, _| {
            let mut d = photons;
            match r {
                2 => d += self.e_vir[ix[0]] - self.e_occ[ix[1]],
                4 => d += self.e_vir[ix[0]] + self.e_vir[ix[1]] - self.e_occ[ix[2]] - self.e_occ[ix[3]],
                0 => {}
                _ => unreachable!(),
            }
            d
        })
    }

    /// Spin-summed spatial matrix from a spin-orbital block `[p, q]` over the given spaces.
    pub fn spatial_from_block(&self, t: &BlockedTensor, kind: &str, out: &mut DMatrix<f64>) {
        let k: Vec<char> = kind.chars().collect();
        let (_, m0) = self.space(k[0]);
        let (_, m1) = self.space(k[1]);
        t.for_each_allowed(|ix, key, lin| {
            let p = m0[ix[0]];
            let q = m1[ix[1]];
            if p.1 == q.1 {
                if let Some(b) = t.block(key) {
                    out[(p.0, q.0)] += b[lin];
                }
            }
        });
    }
}
