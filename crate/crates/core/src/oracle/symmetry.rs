//! Symmetry operators on the polaritonic product space and commutator checks.
//!
//! A spatial operation `R` acts on electrons through the orbital overlap
//! `⟨φ_p|R̂φ_q⟩` and on photons as the linear map `b†_m → Σ_k O_km b†_k`
//! with `O_km = ε_k·R ε_m`. Photon matrices are exponentials of the quadratic
//! generators `Σ K_ij b†_i b_j` restricted to the capped space; reflections
//! add a parity factor `(-1)^{n}`. Generators conserve the photon count, so
//! with a total-photon cap they are exact and the reported leakage is zero.

use nalgebra::{ComplexField, DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::{Det, OracleModel, PolaritonBasis};
use crate::integrals::compute_one_electron;
use crate::scf::ScfResult;
use crate::system::System;

/// Rotation by `theta` about the unit axis `k`.
pub fn rotation(k: [f64; 3], theta: f64) -> [[f64; 3]; 3] {
    let (s, c) = theta.sin_cos();
    let t = 1.0 - c;
    let [x, y, z] = k;
    [
        [c + x * x * t, x * y * t - z * s, x * z * t + y * s],
        [y * x * t + z * s, c + y * y * t, y * z * t - x * s],
        [z * x * t - y * s, z * y * t + x * s, c + z * z * t],
    ]
}

/// Reflection through the plane with unit normal `n`.
pub fn reflection(n: [f64; 3]) -> [[f64; 3]; 3] {
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            r[i][j] = if i == j { 1.0 } else { 0.0 } - 2.0 * n[i] * n[j];
        }
    }
    r
}

/// `⟨φ_p|R̂φ_q⟩` over the MOs of `scf`, with `R̂φ(r) = φ(R⁻¹r)`.
pub fn orbital_overlap(sys: &System, scf: &ScfResult, rot: &[[f64; 3]; 3]) -> DMatrix<f64> {
    let n = sys.basis.n_functions();
    let moved = sys.basis.transformed(rot);
    let mut shells = sys.basis.shells.clone();
    shells.extend(moved.shells);
    let both = crate::basis::Basis::from_shells(&sys.basis.name, shells);
    let s = compute_one_electron(&sys.mol, &both, [0.0; 3]).s;
    let cross = s.view((0, n), (n, n)).into_owned();
    scf.c.transpose() * cross * &scf.c
}

/// Photon map `O_km = ε_k·R ε_m` over the cavity modes of `sys`.
pub fn photon_map(sys: &System, rot: &[[f64; 3]; 3]) -> DMatrix<f64> {
    let modes = sys.cav.modes();
    let nm = modes.len();
    DMatrix::from_fn(nm, nm, |k, m| {
        let re = crate::molecule::mat_vec(rot, modes[m].eps);
        crate::molecule::dot(modes[k].eps, re)
    })
}

/// Electronic operator over the determinants of `basis` for an orbital map `u`.
pub fn determinant_operator(model: &OracleModel, dets: &[Det], u: &DMatrix<f64>) -> DMatrix<f64> {
    let n = model.n_orb;
    let strings = |d: Det, spin: usize| -> Vec<usize> { (0..n).filter(|&p| d >> (spin * n + p) & 1 == 1).collect() };
    let nd = dets.len();
    DMatrix::from_fn(nd, nd, |i, j| {
        let mut v = 1.0;
        for spin in 0..2 {
            let a = strings(dets[i], spin);
            let b = strings(dets[j], spin);
            if a.is_empty() {
                continue;
            }
            let m = DMatrix::from_fn(a.len(), b.len(), |x, y| u[(a[x], b[y])]);
            v *= m.determinant();
            if v == 0.0 {
                break;
            }
        }
        v
    })
}

/// Quadratic generator `Σ K_ij b†_i b_j` on the photon tuples; also returns
/// the squared norm of the part that leaves the tuple list.
pub fn photon_generator(photons: &[Vec<u8>], k: &DMatrix<Complex64>) -> (DMatrix<Complex64>, f64) {
    let np = photons.len();
    let pos: std::collections::HashMap<&[u8], usize> =
        photons.iter().enumerate().map(|(i, p)| (p.as_slice(), i)).collect();
    let mut g = DMatrix::zeros(np, np);
    let mut leak = 0.0;
    for (col, p) in photons.iter().enumerate() {
        for i in 0..k.nrows() {
            for j in 0..k.ncols() {
                let kij = k[(i, j)];
                if kij == Complex64::new(0.0, 0.0) || p[j] == 0 {
                    continue;
                }
                let mut q = p.clone();
                let mut amp = (q[j] as f64).sqrt();
                q[j] -= 1;
                amp *= (q[i] as f64 + 1.0).sqrt();
                q[i] += 1;
                match pos.get(q.as_slice()) {
                    Some(&row) => g[(row, col)] += kij * amp,
                    None => leak += (kij * amp).norm_sqr(),
                }
            }
        }
    }
    (g, leak)
}

/// Photon-space unitary implementing `b†_m → Σ_k O_km b†_k` for `O` made of
/// orthogonal blocks over the mode `groups` (one or two modes each).
pub fn photon_operator(photons: &[Vec<u8>], o: &DMatrix<f64>, groups: &[Vec<usize>]) -> (DMatrix<f64>, f64) {
    let nm = o.nrows();
    let mut k = DMatrix::<Complex64>::zeros(nm, nm);
    let mut parity = vec![false; nm];
    for g in groups {
        match g.as_slice() {
            [m] => parity[*m] = o[(*m, *m)] < 0.0,
            [m, n] => {
                let (m, n) = (*m, *n);
                let mut b = DMatrix::from_fn(2, 2, |x, y| o[([m, n][x], [m, n][y])]);
                if b.determinant() < 0.0 {
                    parity[n] = true;
                    b.column_mut(1).neg_mut();
                }
                let alpha = b[(1, 0)].atan2(b[(0, 0)]);
                k[(n, m)] = Complex64::new(alpha, 0.0);
                k[(m, n)] = Complex64::new(-alpha, 0.0);
            }
            _ => unreachable!("mode groups hold one or two modes"),
        }
    }
    let (g, leak) = photon_generator(photons, &k);
    let rot = g.exp().map(|z| z.re);
    let sign = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        photons.len(),
        photons.iter().map(|p| {
            let odd = p.iter().zip(&parity).filter(|(&n, &f)| f && n % 2 == 1).count();
            if odd % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        }),
    ));
    (rot * sign, leak)
}

/// Modes of `sys` grouped by cavity pair.
pub fn mode_groups(sys: &System) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); sys.cav.pairs.len()];
    for (k, m) in sys.cav.modes().iter().enumerate() {
        groups[m.pair].push(k);
    }
    groups
}

/// Product operator `U_el ⊗ V_ph` over the states of `basis`.
pub fn product_operator(basis: &PolaritonBasis, el: &DMatrix<f64>, ph: &DMatrix<f64>) -> DMatrix<f64> {
    let ns = basis.len();
    DMatrix::from_fn(ns, ns, |a, b| {
        let (da, pa) = basis.states[a];
        let (db, pb) = basis.states[b];
        el[(da, db)] * ph[(pa, pb)]
    })
}

/// Symmetry operation of the coupled system with its cap-edge leakage.
pub struct SymmetryOperator {
    pub matrix: DMatrix<f64>,
    pub leakage: f64,
}

/// Operator of the spatial map `rot` acting on electrons and photons together.
pub fn spatial_operator(
    sys: &System,
    scf: &ScfResult,
    model: &OracleModel,
    basis: &PolaritonBasis,
    rot: &[[f64; 3]; 3],
) -> SymmetryOperator {
    let u = orbital_overlap(sys, scf, rot);
    let el = determinant_operator(model, &basis.dets, &u);
    let (ph, leak) = photon_operator(&basis.photons, &photon_map(sys, rot), &mode_groups(sys));
    SymmetryOperator { matrix: product_operator(basis, &el, &ph), leakage: leak.sqrt() }
}

/// Photon-only operator acting as the identity on electrons.
pub fn photon_only(basis: &PolaritonBasis, ph: &DMatrix<f64>) -> DMatrix<f64> {
    let nd = basis.dets.len();
    product_operator(basis, &DMatrix::identity(nd, nd), ph)
}

/// Frobenius norm of `[A, B]`.
pub fn commutator_norm(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a * b - b * a).norm()
}

/// Bare cavity Hamiltonian `Σ ω_m b†_m b_m` on the product space.
pub fn cavity_hamiltonian(model: &OracleModel, basis: &PolaritonBasis) -> DMatrix<f64> {
    let ns = basis.len();
    DMatrix::from_fn(ns, ns, |a, b| {
        if a != b {
            return 0.0;
        }
        let p = &basis.photons[basis.states[a].1];
        p.iter().zip(&model.modes).map(|(&n, m)| n as f64 * m.omega).sum()
    })
}

/// Unitary change to an elliptical polarization basis for the pair `(m, m+1)`:
/// a rotation by `π/4` with relative phase `φ`.
pub fn elliptical_operator(basis: &PolaritonBasis, nm: usize, m: usize, phi: f64) -> (DMatrix<Complex64>, f64) {
    let a = std::f64::consts::FRAC_PI_4;
    let mut k = DMatrix::<Complex64>::zeros(nm, nm);
    k[(m + 1, m)] = Complex64::from_polar(a, phi);
    k[(m, m + 1)] = -Complex64::from_polar(a, -phi);
    let (g, leak) = photon_generator(&basis.photons, &k);
    let u = g.exp();
    let ns = basis.len();
    let full = DMatrix::from_fn(ns, ns, |x, y| {
        let (dx, px) = basis.states[x];
        let (dy, py) = basis.states[y];
        if dx == dy {
            u[(px, py)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    (full, leak.sqrt())
}

/// Largest deviation between the lowest `nroots` eigenvalues of `h` and of `U†HU`.
pub fn elliptical_equivalence(h: &DMatrix<f64>, u: &DMatrix<Complex64>, nroots: usize) -> f64 {
    let hc = h.map(|x| Complex64::new(x, 0.0));
    let ht = u.adjoint() * hc * u;
    let herm = (&ht + ht.adjoint()) * Complex64::new(0.5, 0.0);
    let mut e1: Vec<f64> = SymmetricEigen::new(h.clone()).eigenvalues.iter().copied().collect();
    let mut e2: Vec<f64> = SymmetricEigen::new(herm).eigenvalues.iter().map(|z| z.real()).collect();
    e1.sort_by(f64::total_cmp);
    e2.sort_by(f64::total_cmp);
    e1.iter().zip(&e2).take(nroots).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}
