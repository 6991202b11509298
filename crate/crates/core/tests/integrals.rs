mod common;

use common::composite;
use nalgebra::DMatrix;
use polariton::basis::{Basis, BasisLibrary, Shell, ShellDef};
use polariton::integrals::{compute_eri, compute_one_electron, q_index, IntegralSet};
use polariton::molecule::Molecule;
use proptest::prelude::*;
use std::f64::consts::PI;

/// Contracted s function as (exponent, coefficient) list, normalized analytically.
fn s_function(exps: &[f64], coefs: &[f64]) -> Vec<(f64, f64)> {
    let prim: Vec<(f64, f64)> = exps.iter().zip(coefs).map(|(&a, &c)| (a, c * (2.0 * a / PI).powf(0.75))).collect();
    let mut norm = 0.0;
    for &(a, ca) in &prim {
        for &(b, cb) in &prim {
            norm += ca * cb * (PI / (a + b)).powf(1.5);
        }
    }
    prim.into_iter().map(|(a, c)| (a, c / norm.sqrt())).collect()
}

fn eval(f: &[(f64, f64)], r2: f64) -> f64 {
    f.iter().map(|(a, c)| c * (-a * r2).exp()).sum()
}

/// `-(1/r) d/dr`-free gradient factor: ∇φ = g(r2) (r − A) with g = Σ −2 a c e^{−a r2}.
fn grad_factor(f: &[(f64, f64)], r2: f64) -> f64 {
    f.iter().map(|(a, c)| -2.0 * a * c * (-a * r2).exp()).sum()
}

const STO3G_H: ([f64; 3], [f64; 3]) = ([3.42525091, 0.62391373, 0.16885540], [0.15432897, 0.53532814, 0.44463454]);

fn h2(r: f64, basis: &str) -> (Molecule, Basis) {
    let mol = Molecule::from_symbols(&[("H", [0.0, 0.0, -r / 2.0]), ("H", [0.0, 0.0, r / 2.0])], 0).unwrap();
    let b = Basis::load(basis, &mol).unwrap();
    (mol, b)
}

#[test]
fn h2_sto3g_one_electron_against_quadrature() {
    let r = 1.4;
    let (mol, basis) = h2(r, "sto-3g");
    let one = compute_one_electron(&mol, &basis, [0.0; 3]);
    let phi = s_function(&STO3G_H.0, &STO3G_H.1);
    let (za, zb) = (-r / 2.0, r / 2.0);
    // cylindrical grid for overlap and kinetic energy
    let rho = composite(0.0, 14.0, 28, 16);
    let zs = composite(-15.0, 15.0, 60, 16);
    let (mut s12, mut t11, mut t12) = (0.0, 0.0, 0.0);
    for &(p, wp) in &rho {
        for &(z, wz) in &zs {
            let w = 2.0 * PI * p * wp * wz;
            let ra = p * p + (z - za).powi(2);
            let rb = p * p + (z - zb).powi(2);
            let (fa, fb) = (eval(&phi, ra), eval(&phi, rb));
            let (ga, gb) = (grad_factor(&phi, ra), grad_factor(&phi, rb));
            s12 += w * fa * fb;
            t11 += w * 0.5 * ga * ga * ra;
            // ∇φa·∇φb = ga gb [(ρ)² + (z − za)(z − zb)]
            t12 += w * 0.5 * ga * gb * (p * p + (z - za) * (z - zb));
        }
    }
    // spherical grid about each nucleus for the attraction integrals
    let rr = composite(0.0, 16.0, 32, 16);
    let th = composite(0.0, PI, 16, 16);
    let (mut v11, mut v12) = (0.0, 0.0);
    for zc in [za, zb] {
        for &(rad, wr) in &rr {
            for &(t, wt) in &th {
                let w = 2.0 * PI * rad * t.sin() * wr * wt;
                let z = zc + rad * t.cos();
                let p2 = (rad * t.sin()).powi(2);
                let fa = eval(&phi, p2 + (z - za).powi(2));
                let fb = eval(&phi, p2 + (z - zb).powi(2));
                v11 -= w * fa * fa;
                v12 -= w * fa * fb;
            }
        }
    }
    assert!((one.s[(0, 0)] - 1.0).abs() < 1e-12);
    assert!((one.s[(0, 1)] - s12).abs() < 1e-10, "S12 {} vs {}", one.s[(0, 1)], s12);
    assert!((one.t[(0, 0)] - t11).abs() < 1e-9, "T11 {} vs {}", one.t[(0, 0)], t11);
    assert!((one.t[(0, 1)] - t12).abs() < 1e-9, "T12 {} vs {}", one.t[(0, 1)], t12);
    assert!((one.v[(0, 0)] - v11).abs() < 1e-9, "V11 {} vs {}", one.v[(0, 0)], v11);
    assert!((one.v[(0, 1)] - v12).abs() < 1e-9, "V12 {} vs {}", one.v[(0, 1)], v12);
    // frozen values at R = 1.4 bohr
    assert!((s12 - 0.659318).abs() < 1e-5);
    assert!((t11 - 0.760032).abs() < 1e-5);
}

fn single_shell_basis(centers: &[([f64; 3], usize, f64)]) -> Basis {
    let shells = centers
        .iter()
        .enumerate()
        .map(|(i, &(c, l, a))| Shell::new(i, c, &ShellDef { l, exps: vec![a], coefs: vec![1.0] }, true).unwrap())
        .collect();
    Basis::from_shells("test", shells)
}

/// `(aa|bb)` for normalized s Gaussians by quadrature of the Gaussian-charge potential.
fn ss_coulomb_quadrature(a: f64, b: f64, r: f64) -> f64 {
    // (aa|bb) = ∫ρ_a Φ_b with Φ_b(x) = erf(√(2b) x)/x = (2/√π) ∫_0^{√(2b)} e^{−x² s²} ds
    let rho = composite(0.0, 9.0, 18, 16);
    let zs = composite(-9.0, 9.0 + r, 36, 16);
    let ss = composite(0.0, (2.0 * b).sqrt(), 8, 16);
    let na = (2.0 * a / PI).powf(1.5);
    let mut j = 0.0;
    for &(p, wp) in &rho {
        for &(z, wz) in &zs {
            let x2b = p * p + (z - r).powi(2);
            let dens = na * (-2.0 * a * (p * p + z * z)).exp();
            if dens < 1e-300 {
                continue;
            }
            let phi: f64 = ss.iter().map(|&(s, ws)| ws * (-x2b * s * s).exp()).sum::<f64>() * 2.0 / PI.sqrt();
            j += 2.0 * PI * p * wp * wz * dens * phi;
        }
    }
    j
}

#[test]
fn s_coulomb_integrals_against_quadrature() {
    let basis = single_shell_basis(&[([0.0; 3], 0, 1.0)]);
    let eri = compute_eri(&basis);
    let closed = 2.0 / PI.sqrt();
    assert!((eri.get(0, 0, 0, 0) - closed).abs() < 1e-13);
    assert!((ss_coulomb_quadrature(1.0, 1.0, 0.0) - closed).abs() < 1e-9);
    let basis = single_shell_basis(&[([0.0; 3], 0, 0.8), ([0.3, -0.4, 1.2], 0, 1.7)]);
    let eri = compute_eri(&basis);
    let r = (0.09f64 + 0.16 + 1.44).sqrt();
    let q = {
        // rotate to the z axis: the integral only depends on the distance
        ss_coulomb_quadrature(0.8, 1.7, r)
    };
    assert!((eri.get(0, 0, 1, 1) - q).abs() < 1e-9, "{} vs {}", eri.get(0, 0, 1, 1), q);
}

#[test]
fn p_integrals_are_center_derivatives_of_s() {
    // φ_px = N_p x_A e^{-α r_A²} = N_p/(2α) ∂/∂A_x e^{-α r_A²}
    let alpha = 0.9;
    let a = [0.1, -0.2, 0.3];
    let others = [([0.5, 0.4, -0.6], 0usize, 1.3), ([-0.7, 0.2, 0.1], 0, 0.6), ([0.0, 0.9, 0.8], 0, 2.1)];
    let pshell = Shell::new(0, a, &ShellDef { l: 1, exps: vec![alpha], coefs: vec![1.0] }, true).unwrap();
    let np = pshell.transform[2][0] * pshell.coefs[0];
    let sshell = |c: [f64; 3]| Shell::new(0, c, &ShellDef { l: 0, exps: vec![alpha], coefs: vec![1.0] }, true).unwrap();
    let ns = sshell(a).transform[0][0] * sshell(a).coefs[0];
    let build = |first: Shell| {
        let mut v = vec![first];
        for (i, &(c, l, e)) in others.iter().enumerate() {
            v.push(Shell::new(i + 1, c, &ShellDef { l, exps: vec![e], coefs: vec![1.0] }, true).unwrap());
        }
        Basis::from_shells("t", v)
    };
    let pb = build(pshell);
    let pe = compute_eri(&pb);
    let h = 1e-4;
    let eri_at = |c: [f64; 3]| compute_eri(&build(sshell(c)));
    let mut ap = a;
    ap[0] += h;
    let mut am = a;
    am[0] -= h;
    let (ep, em) = (eri_at(ap), eri_at(am));
    // pure p order is (y, z, x): x is the third function
    let px = 2;
    // others sit at 3..6 in the p basis and 1..4 in the s basis
    for (q, r, s) in [(3, 4, 5), (4, 5, 3), (5, 5, 4), (3, 3, 3)] {
        let fd = (ep.get(0, q - 2, r - 2, s - 2) - em.get(0, q - 2, r - 2, s - 2)) / (2.0 * h);
        let want = np / (2.0 * alpha * ns) * fd;
        let got = pe.get(px, q, r, s);
        assert!((got - want).abs() < 1e-7, "({q}{r}{s}) {got} vs {want}");
    }
    // overlap and attraction follow the same identity
    let mol = Molecule::from_symbols(&[("He", [0.2, 0.3, -0.1])], 0).unwrap();
    let one_p = compute_one_electron(&mol, &pb, [0.0; 3]);
    let op = compute_one_electron(&mol, &build(sshell(ap)), [0.0; 3]);
    let om = compute_one_electron(&mol, &build(sshell(am)), [0.0; 3]);
    for k in 3..6 {
        let fd_s = (op.s[(0, k - 2)] - om.s[(0, k - 2)]) / (2.0 * h);
        let fd_v = (op.v[(0, k - 2)] - om.v[(0, k - 2)]) / (2.0 * h);
        let f = np / (2.0 * alpha * ns);
        assert!((one_p.s[(px, k)] - f * fd_s).abs() < 1e-7);
        assert!((one_p.v[(px, k)] - f * fd_v).abs() < 1e-7);
    }
}

#[test]
fn normalization_and_simple_overlaps() {
    let basis = single_shell_basis(&[([0.0; 3], 0, 1.0), ([0.0; 3], 0, 1.0)]);
    let mol = Molecule::new(vec![], 0).unwrap();
    let one = compute_one_electron(&mol, &basis, [0.0; 3]);
    assert!((one.s[(0, 0)] - 1.0).abs() < 1e-14);
    assert!((one.s[(0, 1)] - 1.0).abs() < 1e-14);
    let (mol, basis) = h2(1.4, "cc-pvtz");
    let one = compute_one_electron(&mol, &basis, [0.0; 3]);
    for i in 0..basis.n_functions() {
        assert!((one.s[(i, i)] - 1.0).abs() < 1e-12);
    }
    assert!(one.s.clone().symmetric_eigenvalues().min() > 0.0);
    let e = (&one.t - one.t.transpose()).amax() + (&one.v - one.v.transpose()).amax();
    assert!(e < 1e-14);
}

#[test]
fn far_apart_shells_decouple() {
    let basis = single_shell_basis(&[([0.0; 3], 1, 1.0), ([0.0, 0.0, 60.0], 2, 1.0)]);
    let eri = compute_eri(&basis);
    for p in 0..3 {
        for q in 3..8 {
            assert!(eri.get(p, q, p, q).abs() < 1e-14);
            assert!(eri.get(p, q, 0, 0).abs() < 1e-14);
        }
    }
}

#[test]
fn dump_round_trip() {
    let (mol, basis) = h2(1.4, "cc-pvdz");
    let ints = IntegralSet::compute(&mol, &basis);
    let mut buf = Vec::new();
    ints.write_to(&mut buf).unwrap();
    let back = IntegralSet::read_from(&mut buf.as_slice()).unwrap();
    assert_eq!(back.one.s, ints.one.s);
    assert_eq!(back.one.q[5], ints.one.q[5]);
    assert_eq!(back.eri, ints.eri);
    buf[0] = b'X';
    assert!(IntegralSet::read_from(&mut buf.as_slice()).is_err());
}

fn test_molecule(rot: &[[f64; 3]; 3], shift: [f64; 3]) -> Molecule {
    let m = Molecule::from_symbols(
        &[("O", [0.0, 0.0, 0.1]), ("H", [1.43, 1.1, 0.0]), ("H", [-1.2, 0.9, 0.3]), ("He", [0.2, -1.5, 0.7])],
        0,
    )
    .unwrap();
    m.transformed(rot, [0.0; 3]).translated(shift)
}

fn mixed_basis(mol: &Molecule) -> Basis {
    let mut lib = BasisLibrary::load("sto-3g").unwrap();
    // d shell on He to exercise l = 2
    let he = lib.elements.get_mut(&2).unwrap();
    he.push(ShellDef { l: 2, exps: vec![0.9], coefs: vec![1.0] });
    let h = lib.elements.get_mut(&1).unwrap();
    h.push(ShellDef { l: 1, exps: vec![0.7], coefs: vec![1.0] });
    Basis::build(mol, &lib, true).unwrap()
}

fn rotation(a: f64, b: f64, c: f64) -> [[f64; 3]; 3] {
    let rz = |t: f64| [[t.cos(), -t.sin(), 0.0], [t.sin(), t.cos(), 0.0], [0.0, 0.0, 1.0]];
    let ry = |t: f64| [[t.cos(), 0.0, t.sin()], [0.0, 1.0, 0.0], [-t.sin(), 0.0, t.cos()]];
    let mul = |x: [[f64; 3]; 3], y: [[f64; 3]; 3]| {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = (0..3).map(|k| x[i][k] * y[k][j]).sum();
            }
        }
        m
    };
    mul(rz(a), mul(ry(b), rz(c)))
}

/// Basis-independent invariants: tr(S⁻¹X) for T, V, D, Q and the Coulomb-like ERI contraction.
struct Invariants {
    t: f64,
    v: f64,
    d: [f64; 3],
    q: [[f64; 3]; 3],
    j: f64,
}

fn invariants(mol: &Molecule, origin: [f64; 3]) -> Invariants {
    let basis = mixed_basis(mol);
    let one = compute_one_electron(mol, &basis, origin);
    let sinv = one.s.clone().try_inverse().unwrap();
    let tr = |m: &DMatrix<f64>| (&sinv * m).trace();
    let eri = compute_eri(&basis);
    let n = basis.n_functions();
    let mut j = 0.0;
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    j += eri.get(p, q, r, s) * sinv[(p, q)] * sinv[(r, s)];
                }
            }
        }
    }
    let mut q = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            q[a][b] = tr(&one.q[q_index(a, b)]);
        }
    }
    Invariants { t: tr(&one.t), v: tr(&one.v), d: [tr(&one.d[0]), tr(&one.d[1]), tr(&one.d[2])], q, j }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn rotation_and_translation_covariance(a in 0.0..6.28f64, b in 0.0..3.14f64, c in 0.0..6.28f64,
                                           sx in -3.0..3.0f64, sy in -3.0..3.0f64, sz in -3.0..3.0f64) {
        let id = rotation(0.0, 0.0, 0.0);
        let base = invariants(&test_molecule(&id, [0.0; 3]), [0.0; 3]);
        let r = rotation(a, b, c);
        let rot = invariants(&test_molecule(&r, [0.0; 3]), [0.0; 3]);
        prop_assert!((rot.t - base.t).abs() < 1e-10);
        prop_assert!((rot.v - base.v).abs() < 1e-10);
        prop_assert!((rot.j - base.j).abs() < 1e-10);
        for i in 0..3 {
            let want: f64 = (0..3).map(|k| r[i][k] * base.d[k]).sum();
            prop_assert!((rot.d[i] - want).abs() < 1e-10);
            for j in 0..3 {
                let mut w = 0.0;
                for k in 0..3 {
                    for l in 0..3 {
                        w += r[i][k] * r[j][l] * base.q[k][l];
                    }
                }
                prop_assert!((rot.q[i][j] - w).abs() < 1e-10);
            }
        }
        // translation with the origin held fixed: D shifts by t·n, Q consistently
        let t = [sx, sy, sz];
        let tr = invariants(&test_molecule(&id, t), [0.0; 3]);
        let nbf = mixed_basis(&test_molecule(&id, t)).n_functions() as f64;
        prop_assert!((tr.t - base.t).abs() < 1e-10);
        prop_assert!((tr.j - base.j).abs() < 1e-10);
        for i in 0..3 {
            prop_assert!((tr.d[i] - (base.d[i] + t[i] * nbf)).abs() < 1e-9);
            for j in 0..3 {
                let want = base.q[i][j] + t[i] * base.d[j] + t[j] * base.d[i] + t[i] * t[j] * nbf;
                prop_assert!((tr.q[i][j] - want).abs() < 1e-8);
            }
        }
        // moving the origin along with the molecule leaves everything unchanged
        let moved = invariants(&test_molecule(&id, t), t);
        for i in 0..3 {
            prop_assert!((moved.d[i] - base.d[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn eri_permutational_symmetry(seed in 0u64..1000) {
        // random shells: symmetry is enforced by packing, so compare against an unpacked recompute
        let x = (seed as f64 * 0.37).sin();
        let basis = single_shell_basis(&[([0.0, 0.1 * x, 0.0], 1, 0.8 + 0.1 * x), ([0.4, 0.2, -0.3], 2, 1.1), ([x, -0.5, 0.2], 0, 0.5)]);
        let eri = compute_eri(&basis);
        let n = basis.n_functions();
        for p in 0..n { for q in 0..n { for r in 0..n { for s in 0..n {
            let v = eri.get(p, q, r, s);
            prop_assert_eq!(v, eri.get(q, p, r, s));
            prop_assert_eq!(v, eri.get(p, q, s, r));
            prop_assert_eq!(v, eri.get(r, s, p, q));
        }}}}
    }
}
