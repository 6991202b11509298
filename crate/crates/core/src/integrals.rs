//! One- and two-electron integrals over contracted Gaussians (McMurchie–Davidson).

use std::io::{Read, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::basis::{cart_components, Basis, Shell};
use crate::error::{Error, Result};
use crate::molecule::Molecule;

/// Shell quartets whose Schwarz bound falls below this are skipped.
pub const SCHWARZ_THRESHOLD: f64 = 1e-12;

/// Cartesian second-moment components in storage order.
pub const Q_COMPONENTS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

/// Index into [`Q_COMPONENTS`] for the pair `(a, b)`.
pub fn q_index(a: usize, b: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    Q_COMPONENTS.iter().position(|&p| p == (a, b)).unwrap()
}

/// Boys function `F_n(T)` for `n = 0..=nmax`.
pub fn boys(nmax: usize, t: f64) -> Vec<f64> {
    let mut f = vec![0.0; nmax + 1];
    if t < 1e-14 {
        for (n, v) in f.iter_mut().enumerate() {
            *v = 1.0 / (2 * n + 1) as f64;
        }
        return f;
    }
    let et = (-t).exp();
    if t > 40.0 + nmax as f64 {
        // asymptotic form, exponentially small correction neglected
        f[0] = 0.5 * (std::f64::consts::PI / t).sqrt();
        for n in 0..nmax {
            f[n + 1] = ((2 * n + 1) as f64 * f[n] - et) / (2.0 * t);
        }
        return f;
    }
    // series for the highest order, then downward recursion
    let n = nmax as f64;
    let mut term = 1.0 / (2.0 * n + 1.0);
    let mut sum = term;
    let mut k = 1.0;
    while term > 1e-17 * sum {
        term *= 2.0 * t / (2.0 * n + 2.0 * k + 1.0);
        sum += term;
        k += 1.0;
    }
    f[nmax] = et * sum;
    for m in (0..nmax).rev() {
        f[m] = (2.0 * t * f[m + 1] + et) / (2 * m + 1) as f64;
    }
    f
}

/// Hermite expansion coefficients `E[i][j][t]` for one Cartesian direction.
fn hermite_e(la: usize, lb: usize, a: f64, b: f64, ax: f64, bx: f64) -> Vec<Vec<Vec<f64>>> {
    let p = a + b;
    let mu = a * b / p;
    let xab = ax - bx;
    let px = (a * ax + b * bx) / p;
    let xpa = px - ax;
    let xpb = px - bx;
    let o2p = 0.5 / p;
    let mut e = vec![vec![vec![0.0; la + lb + 2]; lb + 1]; la + 1];
    e[0][0][0] = (-mu * xab * xab).exp();
    for i in 0..=la {
        for j in 0..=lb {
            if i == 0 && j == 0 {
                continue;
            }
            for t in 0..=i + j {
                let v = if i > 0 {
                    let prev = &e[i - 1][j];
                    let mut v = xpa * prev[t];
                    if t > 0 {
                        v += o2p * prev[t - 1];
                    }
                    v + (t + 1) as f64 * prev[t + 1]
                } else {
                    let prev = &e[i][j - 1];
                    let mut v = xpb * prev[t];
                    if t > 0 {
                        v += o2p * prev[t - 1];
                    }
                    v + (t + 1) as f64 * prev[t + 1]
                };
                e[i][j][t] = v;
            }
        }
    }
    e
}

/// Hermite Coulomb integrals `R_{tuv}` for `t + u + v <= l`, indexed `[t][u][v]`.
fn hermite_r(l: usize, alpha: f64, pc: [f64; 3]) -> Vec<Vec<Vec<f64>>> {
    let r2 = pc[0] * pc[0] + pc[1] * pc[1] + pc[2] * pc[2];
    let f = boys(l, alpha * r2);
    // aux[n][t][u][v]
    let mut aux = vec![vec![vec![vec![0.0; l + 1]; l + 1]; l + 1]; l + 1];
    let mut pw = 1.0;
    for n in 0..=l {
        aux[n][0][0][0] = pw * f[n];
        pw *= -2.0 * alpha;
    }
    for total in 1..=l {
        for n in 0..=l - total {
            for t in 0..=total {
                for u in 0..=total - t {
                    let v = total - t - u;
                    let val = if t > 0 {
                        let mut x = pc[0] * aux[n + 1][t - 1][u][v];
                        if t > 1 {
                            x += (t - 1) as f64 * aux[n + 1][t - 2][u][v];
                        }
                        x
                    } else if u > 0 {
                        let mut x = pc[1] * aux[n + 1][t][u - 1][v];
                        if u > 1 {
                            x += (u - 1) as f64 * aux[n + 1][t][u - 2][v];
                        }
                        x
                    } else {
                        let mut x = pc[2] * aux[n + 1][t][u][v - 1];
                        if v > 1 {
                            x += (v - 1) as f64 * aux[n + 1][t][u][v - 2];
                        }
                        x
                    };
                    aux[n][t][u][v] = val;
                }
            }
        }
    }
    aux.swap_remove(0)
}

/// Spherical (or normalized Cartesian) block from a Cartesian block: `Ta · C · Tbᵀ`.
fn to_functions(a: &Shell, b: &Shell, cart: &[f64]) -> Vec<f64> {
    let (na, nb) = (a.n_functions(), b.n_functions());
    let (ca, cb) = (a.n_cart(), b.n_cart());
    let mut tmp = vec![0.0; na * cb];
    for f in 0..na {
        for i in 0..ca {
            let t = a.transform[f][i];
            if t != 0.0 {
                for j in 0..cb {
                    tmp[f * cb + j] += t * cart[i * cb + j];
                }
            }
        }
    }
    let mut out = vec![0.0; na * nb];
    for f in 0..na {
        for g in 0..nb {
            out[f * nb + g] = (0..cb).map(|j| tmp[f * cb + j] * b.transform[g][j]).sum();
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct OneElectron {
    pub s: DMatrix<f64>,
    pub t: DMatrix<f64>,
    pub v: DMatrix<f64>,
    /// Electronic position integrals `⟨μ|r_a − O_a|ν⟩`.
    pub d: [DMatrix<f64>; 3],
    /// Second moments `⟨μ|(r_a − O_a)(r_b − O_b)|ν⟩` in [`Q_COMPONENTS`] order.
    pub q: [DMatrix<f64>; 6],
    pub origin: [f64; 3],
}

/// S, T, V, dipole and second-moment matrices about `origin`.
pub fn compute_one_electron(mol: &Molecule, basis: &Basis, origin: [f64; 3]) -> OneElectron {
    let n = basis.n_functions();
    let nsh = basis.shells.len();
    let pairs: Vec<(usize, usize)> = (0..nsh).flat_map(|i| (0..=i).map(move |j| (i, j))).collect();
    let blocks: Vec<[Vec<f64>; 12]> = pairs
        .par_iter()
        .map(|&(i, j)| one_electron_pair(mol, &basis.shells[i], &basis.shells[j], origin))
        .collect();
    let mut mats: Vec<DMatrix<f64>> = (0..12).map(|_| DMatrix::zeros(n, n)).collect();
    for (&(i, j), blk) in pairs.iter().zip(&blocks) {
        let (oi, oj) = (basis.offsets[i], basis.offsets[j]);
        let (ni, nj) = (basis.shells[i].n_functions(), basis.shells[j].n_functions());
        for (m, b) in mats.iter_mut().zip(blk.iter()) {
            for f in 0..ni {
                for g in 0..nj {
                    m[(oi + f, oj + g)] = b[f * nj + g];
                    m[(oj + g, oi + f)] = b[f * nj + g];
                }
            }
        }
    }
    let mut it = mats.into_iter();
    let mut next = || it.next().unwrap();
    OneElectron {
        s: next(),
        t: next(),
        v: next(),
        d: [next(), next(), next()],
        q: [next(), next(), next(), next(), next(), next()],
        origin,
    }
}

fn one_electron_pair(mol: &Molecule, a: &Shell, b: &Shell, origin: [f64; 3]) -> [Vec<f64>; 12] {
    let ca = cart_components(a.l);
    let cb = cart_components(b.l);
    let (na, nb) = (ca.len(), cb.len());
    let mut acc: [Vec<f64>; 12] = std::array::from_fn(|_| vec![0.0; na * nb]);
    let pi = std::f64::consts::PI;
    for (&ea, &da) in a.exps.iter().zip(&a.coefs) {
        for (&eb, &db) in b.exps.iter().zip(&b.coefs) {
            let p = ea + eb;
            let c = da * db;
            let pc: [f64; 3] = std::array::from_fn(|k| (ea * a.center[k] + eb * b.center[k]) / p);
            let e: Vec<_> = (0..3).map(|k| hermite_e(a.l, b.l + 2, ea, eb, a.center[k], b.center[k])).collect();
            let sq = (pi / p).sqrt();
            // 1D overlaps for j up to lb + 2
            let s1 = |k: usize, i: usize, j: usize| e[k][i][j][0] * sq;
            let l = a.l + b.l;
            let rn: Vec<(f64, Vec<Vec<Vec<f64>>>)> = mol
                .atoms
                .iter()
                .map(|at| {
                    let d = [pc[0] - at.pos[0], pc[1] - at.pos[1], pc[2] - at.pos[2]];
                    (at.z as f64, hermite_r(l, p, d))
                })
                .collect();
            for (x, ia) in ca.iter().enumerate() {
                for (y, jb) in cb.iter().enumerate() {
                    let idx = x * nb + y;
                    let s: [f64; 3] = std::array::from_fn(|k| s1(k, ia[k], jb[k]));
                    // kinetic per direction
                    let t: [f64; 3] = std::array::from_fn(|k| {
                        let j = jb[k];
                        let mut v = -2.0 * eb * eb * s1(k, ia[k], j + 2) + eb * (2 * j + 1) as f64 * s1(k, ia[k], j);
                        if j >= 2 {
                            v -= 0.5 * (j * (j - 1)) as f64 * s1(k, ia[k], j - 2);
                        }
                        v
                    });
                    // moments about the origin: x_O = x_B + (B − O)
                    let m1: [f64; 3] = std::array::from_fn(|k| {
                        let bo = b.center[k] - origin[k];
                        s1(k, ia[k], jb[k] + 1) + bo * s[k]
                    });
                    let m2: [f64; 3] = std::array::from_fn(|k| {
                        let bo = b.center[k] - origin[k];
                        s1(k, ia[k], jb[k] + 2) + 2.0 * bo * s1(k, ia[k], jb[k] + 1) + bo * bo * s[k]
                    });
                    let sxyz = s[0] * s[1] * s[2];
                    acc[0][idx] += c * sxyz;
                    acc[1][idx] += c * (t[0] * s[1] * s[2] + s[0] * t[1] * s[2] + s[0] * s[1] * t[2]);
                    let mut v = 0.0;
                    for (zc, r) in &rn {
                        let mut sum = 0.0;
                        for tt in 0..=ia[0] + jb[0] {
                            let ex = e[0][ia[0]][jb[0]][tt];
                            for u in 0..=ia[1] + jb[1] {
                                let ey = e[1][ia[1]][jb[1]][u];
                                for w in 0..=ia[2] + jb[2] {
                                    sum += ex * ey * e[2][ia[2]][jb[2]][w] * r[tt][u][w];
                                }
                            }
                        }
                        v -= zc * sum;
                    }
                    acc[2][idx] += c * 2.0 * pi / p * v;
                    for k in 0..3 {
                        let others: f64 = (0..3).filter(|&o| o != k).map(|o| s[o]).product();
                        acc[3 + k][idx] += c * m1[k] * others;
                    }
                    for (qi, &(u, w)) in Q_COMPONENTS.iter().enumerate() {
                        let val = if u == w {
                            let others: f64 = (0..3).filter(|&o| o != u).map(|o| s[o]).product();
                            m2[u] * others
                        } else {
                            let o = 3 - u - w;
                            m1[u] * m1[w] * s[o]
                        };
                        acc[6 + qi][idx] += c * val;
                    }
                }
            }
        }
    }
    acc.map(|m| to_functions(a, b, &m))
}

/// Two-electron integrals with 8-fold permutational packing.
#[derive(Clone, Debug, PartialEq)]
pub struct PackedEri {
    n: usize,
    data: Vec<f64>,
}

#[inline]
fn pair_index(i: usize, j: usize) -> usize {
    if i >= j {
        i * (i + 1) / 2 + j
    } else {
        j * (j + 1) / 2 + i
    }
}

impl PackedEri {
    pub fn zeros(n: usize) -> PackedEri {
        let np = n * (n + 1) / 2;
        PackedEri { n, data: vec![0.0; np * (np + 1) / 2] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn index(p: usize, q: usize, r: usize, s: usize) -> usize {
        pair_index(pair_index(p, q), pair_index(r, s))
    }

    /// `(pq|rs)` in chemists' notation.
    #[inline]
    pub fn get(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.data[Self::index(p, q, r, s)]
    }

    pub fn set(&mut self, p: usize, q: usize, r: usize, s: usize, v: f64) {
        self.data[Self::index(p, q, r, s)] = v;
    }

    /// Dense `n⁴` copy, row-major over `(p, q, r, s)`.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n * n * n];
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        out[((p * n + q) * n + r) * n + s] = self.get(p, q, r, s);
                    }
                }
            }
        }
        out
    }
}

struct PrimPair {
    p: f64,
    center: [f64; 3],
    coef: f64,
    e: [Vec<Vec<Vec<f64>>>; 3],
}

fn prim_pairs(a: &Shell, b: &Shell) -> Vec<PrimPair> {
    let mut v = Vec::with_capacity(a.exps.len() * b.exps.len());
    for (&ea, &da) in a.exps.iter().zip(&a.coefs) {
        for (&eb, &db) in b.exps.iter().zip(&b.coefs) {
            let p = ea + eb;
            v.push(PrimPair {
                p,
                center: std::array::from_fn(|k| (ea * a.center[k] + eb * b.center[k]) / p),
                coef: da * db,
                e: std::array::from_fn(|k| hermite_e(a.l, b.l, ea, eb, a.center[k], b.center[k])),
            });
        }
    }
    v
}

/// Non-zero Hermite coefficients `E^{ab}_{tuv}` for each Cartesian pair.
fn pair_hermite(pp: &PrimPair, ca: &[[usize; 3]], cb: &[[usize; 3]]) -> Vec<Vec<(usize, usize, usize, f64)>> {
    let mut out = Vec::with_capacity(ca.len() * cb.len());
    for ia in ca {
        for jb in cb {
            let mut terms = Vec::new();
            for t in 0..=ia[0] + jb[0] {
                let ex = pp.e[0][ia[0]][jb[0]][t];
                if ex == 0.0 {
                    continue;
                }
                for u in 0..=ia[1] + jb[1] {
                    let ey = pp.e[1][ia[1]][jb[1]][u];
                    if ey == 0.0 {
                        continue;
                    }
                    for w in 0..=ia[2] + jb[2] {
                        let ez = pp.e[2][ia[2]][jb[2]][w];
                        if ez != 0.0 {
                            terms.push((t, u, w, ex * ey * ez));
                        }
                    }
                }
            }
            out.push(terms);
        }
    }
    out
}

/// Cartesian quartet `(ab|cd)`, row-major over `(a, b, c, d)` components.
fn eri_quartet_cart(a: &Shell, b: &Shell, c: &Shell, d: &Shell, ab: &[PrimPair], cd: &[PrimPair]) -> Vec<f64> {
    let (ca, cb, cc, cdc) = (cart_components(a.l), cart_components(b.l), cart_components(c.l), cart_components(d.l));
    let nab = ca.len() * cb.len();
    let ncd = cc.len() * cdc.len();
    let lab = a.l + b.l;
    let lcd = c.l + d.l;
    let ltot = lab + lcd;
    let mut out = vec![0.0; nab * ncd];
    let pi = std::f64::consts::PI;
    let habs: Vec<_> = ab.iter().map(|pp| pair_hermite(pp, &ca, &cb)).collect();
    let hcds: Vec<_> = cd.iter().map(|qq| pair_hermite(qq, &cc, &cdc)).collect();
    let dim = lab + 1;
    for (pp, hab) in ab.iter().zip(&habs) {
        for (qq, hcd) in cd.iter().zip(&hcds) {
            let alpha = pp.p * qq.p / (pp.p + qq.p);
            let pq: [f64; 3] = std::array::from_fn(|k| pp.center[k] - qq.center[k]);
            let r = hermite_r(ltot, alpha, pq);
            let pref = 2.0 * pi.powf(2.5) / (pp.p * qq.p * (pp.p + qq.p).sqrt()) * pp.coef * qq.coef;
            for (y, terms_cd) in hcd.iter().enumerate() {
                // G_{tuv} = Σ E^{cd}_{τνφ} (−1)^{τ+ν+φ} R_{t+τ,u+ν,v+φ}
                let mut g = vec![0.0; dim * dim * dim];
                for t in 0..=lab {
                    for u in 0..=lab - t {
                        for v in 0..=lab - t - u {
                            let mut s = 0.0;
                            for &(tau, nu, phi, e) in terms_cd {
                                let sign = if (tau + nu + phi) % 2 == 0 { 1.0 } else { -1.0 };
                                s += sign * e * r[t + tau][u + nu][v + phi];
                            }
                            g[(t * dim + u) * dim + v] = s;
                        }
                    }
                }
                for (x, terms_ab) in hab.iter().enumerate() {
                    let mut s = 0.0;
                    for &(t, u, v, e) in terms_ab {
                        s += e * g[(t * dim + u) * dim + v];
                    }
                    out[x * ncd + y] += pref * s;
                }
            }
        }
    }
    out
}

/// Transforms a Cartesian quartet to basis functions.
fn quartet_to_functions(sh: [&Shell; 4], cart: Vec<f64>) -> Vec<f64> {
    let mut cur = cart;
    let mut dims: Vec<usize> = sh.iter().map(|s| s.n_cart()).collect();
    for k in 0..4 {
        let nf = sh[k].n_functions();
        let nc = dims[k];
        let outer: usize = dims[..k].iter().product();
        let inner: usize = dims[k + 1..].iter().product();
        let mut next = vec![0.0; outer * nf * inner];
        for o in 0..outer {
            for f in 0..nf {
                let row = &sh[k].transform[f];
                for (ci, &t) in row.iter().enumerate().take(nc) {
                    if t == 0.0 {
                        continue;
                    }
                    let src = &cur[(o * nc + ci) * inner..(o * nc + ci + 1) * inner];
                    let dst = &mut next[(o * nf + f) * inner..(o * nf + f + 1) * inner];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += t * s;
                    }
                }
            }
        }
        dims[k] = nf;
        cur = next;
    }
    cur
}

/// All `(pq|rs)` over the basis with Schwarz screening.
pub fn compute_eri(basis: &Basis) -> PackedEri {
    let sh = &basis.shells;
    let nsh = sh.len();
    let n = basis.n_functions();
    let pairs: Vec<(usize, usize)> = (0..nsh).flat_map(|i| (0..=i).map(move |j| (i, j))).collect();
    let prims: Vec<Vec<PrimPair>> = pairs.par_iter().map(|&(i, j)| prim_pairs(&sh[i], &sh[j])).collect();
    // Schwarz bounds sqrt(max |(ab|ab)|)
    let bounds: Vec<f64> = pairs
        .par_iter()
        .zip(&prims)
        .map(|(&(i, j), pp)| {
            let cart = eri_quartet_cart(&sh[i], &sh[j], &sh[i], &sh[j], pp, pp);
            let f = quartet_to_functions([&sh[i], &sh[j], &sh[i], &sh[j]], cart);
            let (ni, nj) = (sh[i].n_functions(), sh[j].n_functions());
            let mut m: f64 = 0.0;
            for a in 0..ni {
                for b in 0..nj {
                    let idx = ((a * nj + b) * ni + a) * nj + b;
                    m = m.max(f[idx].abs());
                }
            }
            m.sqrt()
        })
        .collect();
    let results: Vec<Vec<(usize, f64)>> = (0..pairs.len())
        .into_par_iter()
        .map(|pi| {
            let (i, j) = pairs[pi];
            let mut vals = Vec::new();
            for qi in 0..=pi {
                if bounds[pi] * bounds[qi] < SCHWARZ_THRESHOLD {
                    continue;
                }
                let (k, l) = pairs[qi];
                let cart = eri_quartet_cart(&sh[i], &sh[j], &sh[k], &sh[l], &prims[pi], &prims[qi]);
                let f = quartet_to_functions([&sh[i], &sh[j], &sh[k], &sh[l]], cart);
                let (ni, nj, nk, nl) = (sh[i].n_functions(), sh[j].n_functions(), sh[k].n_functions(), sh[l].n_functions());
                let (oi, oj, ok, ol) = (basis.offsets[i], basis.offsets[j], basis.offsets[k], basis.offsets[l]);
                for a in 0..ni {
                    for b in 0..nj {
                        if oj + b > oi + a {
                            continue;
                        }
                        for c in 0..nk {
                            for d in 0..nl {
                                if ol + d > ok + c {
                                    continue;
                                }
                                let idx = PackedEri::index(oi + a, oj + b, ok + c, ol + d);
                                vals.push((idx, f[((a * nj + b) * nk + c) * nl + d]));
                            }
                        }
                    }
                }
            }
            vals
        })
        .collect();
    let mut eri = PackedEri::zeros(n);
    for vals in results {
        for (idx, v) in vals {
            eri.data[idx] = v;
        }
    }
    eri
}

/// All integrals needed downstream.
#[derive(Clone, Debug)]
pub struct IntegralSet {
    pub one: OneElectron,
    pub eri: PackedEri,
}

impl IntegralSet {
    /// Integrals with the dipole origin at the center of nuclear charge.
    pub fn compute(mol: &Molecule, basis: &Basis) -> IntegralSet {
        let one = compute_one_electron(mol, basis, mol.center_of_charge());
        let eri = compute_eri(basis);
        IntegralSet { one, eri }
    }

    pub fn n(&self) -> usize {
        self.eri.n
    }
}

const MAGIC: &[u8; 8] = b"PLRTNINT";
const DUMP_VERSION: u32 = 1;

impl IntegralSet {
    /// Little-endian dump: magic, version, `n`, origin, then S, T, V, D, Q and packed ERIs.
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&DUMP_VERSION.to_le_bytes())?;
        w.write_all(&(self.n() as u64).to_le_bytes())?;
        let mut put = |xs: &[f64]| -> Result<()> {
            for x in xs {
                w.write_all(&x.to_le_bytes())?;
            }
            Ok(())
        };
        put(&self.one.origin)?;
        for m in self.matrices() {
            put(m.as_slice())?;
        }
        put(&self.eri.data)?;
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<IntegralSet> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Input("not an integral dump".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != DUMP_VERSION {
            return Err(Error::Input(format!("integral dump version {version}, expected {DUMP_VERSION}")));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        let mut take = |len: usize| -> Result<Vec<f64>> {
            let mut v = Vec::with_capacity(len);
            for _ in 0..len {
                r.read_exact(&mut b8)?;
                v.push(f64::from_le_bytes(b8));
            }
            Ok(v)
        };
        let o = take(3)?;
        let mut mats = Vec::with_capacity(12);
        for _ in 0..12 {
            mats.push(DMatrix::from_vec(n, n, take(n * n)?));
        }
        let mut eri = PackedEri::zeros(n);
        eri.data = take(eri.data.len())?;
        let mut it = mats.into_iter();
        let mut next = || it.next().unwrap();
        let one = OneElectron {
            s: next(),
            t: next(),
            v: next(),
            d: [next(), next(), next()],
            q: [next(), next(), next(), next(), next(), next()],
            origin: [o[0], o[1], o[2]],
        };
        Ok(IntegralSet { one, eri })
    }

    fn matrices(&self) -> Vec<&DMatrix<f64>> {
        let o = &self.one;
        let mut v = vec![&o.s, &o.t, &o.v];
        v.extend(o.d.iter());
        v.extend(o.q.iter());
        v
    }
}
