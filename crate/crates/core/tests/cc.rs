mod common;

use std::f64::consts::PI;

use common::{cavity, ground, ground_with, h2, Ground, OMEGA, R_EQ};
use polariton::cavity::{CavityModeSet, ModePair};
use polariton::cc::{g2_index, g2_pack, g2_pairs, g2_unpack, read_amps, residual, write_amps, Amps};
use polariton::eom::{solve_roots, EomOptions};
use polariton::molecule::Molecule;
use polariton::sym::{flop_count, BlockedTensor, PointGroup};
use polariton::system::{SymmetryMode, SystemOptions};
use proptest::prelude::*;

/// Reference ground-state totals, one row per bond length: `(R, ε⊥, ε∥)`.
const LINEAR_ROWS: [(f64, f64, f64); 5] = [
    (0.7, -0.91518109, -0.91510052),
    (1.01898734, -1.12647593, -1.12635222),
    (1.25822785, -1.16672099, -1.16655767),
    (1.49746835, -1.16983771, -1.16963396),
    (1.73670886, -1.15681563, -1.15657423),
];

/// Keeps rotated polarizations as given; off-axis pairs need the C2h subgroup.
fn unaligned(theta: f64) -> SystemOptions {
    let symmetry = if (theta - PI / 2.0).abs() < 1e-12 { SymmetryMode::Auto } else { SymmetryMode::Force(PointGroup::C2h) };
    SystemOptions { symmetry, align_polarizations: false, ..Default::default() }
}

// ---------------------------------------------------------------------------
// Reference energies

#[test]
fn reference_ground_state_unpolarized_k_along_bond() {
    let g = ground(R_EQ, "cc-pvtz", cavity(0.05, "unpolarized_par_k"));
    assert!(g.cc.max_residual <= 1e-8);
    assert!((g.cc.e_total - -1.17028886).abs() < 2e-5, "{:.8}", g.cc.e_total);
}

#[test]
fn reference_ground_state_linear_polarization() {
    let par = ground(R_EQ, "cc-pvtz", cavity(0.05, "eps_par"));
    assert!((par.cc.e_total - -1.17110315).abs() < 2e-5, "{:.8}", par.cc.e_total);
    let perp = ground(R_EQ, "cc-pvtz", cavity(0.05, "eps_perp"));
    assert!((perp.cc.e_total - -1.17129358).abs() < 2e-5, "{:.8}", perp.cc.e_total);
}

#[test]
fn reference_ground_state_rows_along_the_bond_scan() {
    for (r, perp, par) in LINEAR_ROWS {
        let e = ground(r, "cc-pvtz", cavity(0.05, "eps_perp")).cc.e_total;
        assert!((e - perp).abs() < 2e-5, "R={r} ε⊥: {e:.8} vs {perp}");
        let e = ground(r, "cc-pvtz", cavity(0.05, "eps_par")).cc.e_total;
        assert!((e - par).abs() < 2e-5, "R={r} ε∥: {e:.8} vs {par}");
    }
}

// ---------------------------------------------------------------------------
// Residual structure

#[test]
fn zero_amplitudes_without_coupling_give_the_integral_residual() {
    let g = ground(R_EQ, "cc-pvdz", cavity(0.0, "unpolarized_par_k"));
    let zero = Amps::zeros(&g.mo, 0);
    let (e, r) = residual(&g.h, &zero);
    assert_eq!(e, 0.0);
    let w = g.h.elec.w.as_ref().unwrap();
    assert!(r.t2.sub(&w.vvoo).max_abs() < 1e-14);
    assert!(r.t1.max_abs() < 1e-10, "Brillouin: {}", r.t1.max_abs());
    for x in r.s1.iter().chain(&r.s2).chain(&r.g1).chain(&r.g2) {
        assert_eq!(x.max_abs(), 0.0);
    }
}

#[test]
fn amplitudes_keep_their_permutational_symmetry() {
    let g = ground(R_EQ, "cc-pvdz", cavity(0.05, "unpolarized_par_k"));
    let a = &g.cc.amps;
    for t in std::iter::once(&a.t2).chain(&a.s2) {
        assert!(t.add(&t.permute(&[1, 0, 2, 3])).max_abs() < 1e-12);
        assert!(t.add(&t.permute(&[0, 1, 3, 2])).max_abs() < 1e-12);
    }
}

#[test]
fn two_electron_exactness_without_coupling() {
    let g = ground(1.1, "cc-pvdz", cavity(0.0, "unpolarized_par_k"));
    let model = polariton::oracle::OracleModel::new(&g.sys, &g.scf).unwrap();
    let b = polariton::oracle::PolaritonBasis::new(&model, &polariton::oracle::PhotonCap::per_mode(0), Some(0))
        .unwrap();
    let (e, _) = polariton::oracle::diagonalize(&polariton::oracle::build_hamiltonian(&model, &b), 1);
    assert!((g.cc.e_total - e[0]).abs() < 1e-9, "{}", g.cc.e_total - e[0]);
}

// ---------------------------------------------------------------------------
// Symmetry

#[test]
fn c1_run_equals_d2h_run() {
    let cav = cavity(0.05, "unpolarized_par_k");
    let d2h = ground(R_EQ, "cc-pvdz", cav.clone());
    let opts = SystemOptions { symmetry: SymmetryMode::Force(PointGroup::C1), ..Default::default() };
    let c1 = ground_with(&h2(R_EQ), "cc-pvdz", cav, &opts);
    assert_eq!(d2h.mo.group, PointGroup::D2h);
    assert_eq!(c1.mo.group, PointGroup::C1);
    assert!((d2h.cc.e_total - c1.cc.e_total).abs() < 1e-9, "{}", d2h.cc.e_total - c1.cc.e_total);
    let ladder = |g: &Ground| flop_count("abef,efij->abij", &g.h.elec.w.as_ref().unwrap().vvvv, &g.cc.amps.t2).unwrap();
    let ratio = ladder(&c1) as f64 / ladder(&d2h) as f64;
    assert!(ratio >= 4.0, "ladder flop ratio {ratio}");
}

#[test]
fn energy_is_invariant_under_polarization_rotation() {
    let cav = cavity(0.05, "unpolarized_par_k");
    let reference = ground(R_EQ, "cc-pvdz", cav.clone()).cc.e_total;
    for theta in [0.3, PI / 5.0, PI / 2.0] {
        let g = ground_with(&h2(R_EQ), "cc-pvdz", cav.rotate_polarizations(theta), &unaligned(theta));
        assert!((g.cc.e_total - reference).abs() < 1e-9, "θ={theta}: {}", g.cc.e_total - reference);
    }
}

/// Lowest excitation energies collected over the given irreps.
fn spectrum(g: &Ground, irreps: &[(&str, usize)]) -> Vec<f64> {
    let rec = g.record();
    let mut out = Vec::new();
    for &(name, n) in irreps {
        let id = g.mo.group.irrep_by_name(name).unwrap().id;
        let opts = EomOptions { nroots: n, ..Default::default() };
        let st = solve_roots(&g.mo, &rec, &[id], g.cc.e_total, &opts).unwrap();
        assert!(st.iter().all(|s| s.converged));
        out.extend(st.iter().map(|s| s.total_energy));
    }
    out.sort_by(f64::total_cmp);
    out
}

#[test]
fn excited_states_are_invariant_under_polarization_rotation() {
    let cav = cavity(0.05, "unpolarized_par_k");
    let reference = spectrum(&ground(R_EQ, "cc-pvdz", cav.clone()), &[("B1u", 2), ("B2u", 2), ("B3u", 2)]);
    for theta in [0.3, PI / 5.0] {
        let g = ground_with(&h2(R_EQ), "cc-pvdz", cav.rotate_polarizations(theta), &unaligned(theta));
        assert_eq!(g.mo.group, PointGroup::C2h);
        let e = spectrum(&g, &[("Au", 2), ("Bu", 4)]);
        for (a, b) in reference.iter().zip(&e) {
            assert!((a - b).abs() < 1e-9, "θ={theta}: {a} vs {b}");
        }
    }
    let g = ground_with(&h2(R_EQ), "cc-pvdz", cav.rotate_polarizations(PI / 2.0), &unaligned(PI / 2.0));
    assert_eq!(g.mo.group, PointGroup::D2h);
    let e = spectrum(&g, &[("B1u", 2), ("B2u", 2), ("B3u", 2)]);
    for (a, b) in reference.iter().zip(&e) {
        assert!((a - b).abs() < 1e-9, "θ=π/2: {a} vs {b}");
    }
}

fn sorted_abs(t: &BlockedTensor) -> Vec<f64> {
    let mut v: Vec<f64> = t.to_flat().iter().map(|x| x.abs()).filter(|&x| x > 1e-14).collect();
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn swapping_polarizations_maps_amplitudes_onto_each_other() {
    let g = ground(R_EQ, "cc-pvdz", cavity(0.05, "unpolarized_par_k"));
    let a = &g.cc.amps;
    let close = |x: &[f64], y: &[f64]| x.len() == y.len() && x.iter().zip(y).all(|(p, q)| (p - q).abs() < 1e-9);
    assert!(close(&sorted_abs(&a.s1[0]), &sorted_abs(&a.s1[1])));
    assert!(close(&sorted_abs(&a.s2[0]), &sorted_abs(&a.s2[1])));
    assert!(a.s1[0].norm2() > 1e-8);
    let (g00, g11) = (&a.g2[g2_index(0, 0, 2)], &a.g2[g2_index(1, 1, 2)]);
    assert!((g00.scalar_value() - g11.scalar_value()).abs() < 1e-12);
    assert!(g00.scalar_value().abs() > 1e-8);

    // the explicitly swapped pair gives the same state with modes exchanged
    let p = &cavity(0.05, "unpolarized_par_k").pairs[0];
    let swapped = ModePair::unpolarized(OMEGA, 0.05, p.k, p.eps_bar).unwrap();
    let s = ground(R_EQ, "cc-pvdz", CavityModeSet::new(vec![swapped]).unwrap());
    assert!((s.cc.e_total - g.cc.e_total).abs() < 1e-10);
}

#[test]
fn photon_amplitudes_scale_linearly_at_weak_coupling() {
    let heh = Molecule::from_symbols(&[("He", [0.0, 0.0, 0.0]), ("H", [0.0, 0.0, 1.46])], 1).unwrap();
    let norms = |lambda: f64| {
        let cav = CavityModeSet::new(vec![ModePair::linear(OMEGA, lambda, [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]).unwrap()])
            .unwrap();
        let g = ground_with(&heh, "sto-3g", cav, &SystemOptions::default());
        (g.cc.amps.g1[0].scalar_value().abs(), g.cc.amps.s1[0].norm2().sqrt())
    };
    let (g_small, s_small) = norms(1e-4);
    let (g_large, s_large) = norms(1e-3);
    assert!(g_small > 0.0 && s_small > 0.0);
    let ratio = g_small / g_large;
    assert!((ratio / 0.1 - 1.0).abs() < 0.1, "g1 ratio {ratio}");
    let ratio = s_small / s_large;
    assert!((ratio / 0.1 - 1.0).abs() < 0.1, "s1 ratio {ratio}");
}

// ---------------------------------------------------------------------------
// Storage

#[test]
fn checkpoint_round_trip() {
    let g = ground(R_EQ, "sto-3g", cavity(0.05, "eps_par"));
    let mut buf = Vec::new();
    write_amps(&mut buf, &g.cc.amps).unwrap();
    let back = read_amps(&mut buf.as_slice(), &g.cc.amps).unwrap();
    assert_eq!(back.to_flat(), g.cc.amps.to_flat());

    let mut bad = buf.clone();
    bad[0] ^= 1;
    assert!(read_amps(&mut bad.as_slice(), &g.cc.amps).is_err());
    assert!(read_amps(&mut &buf[..buf.len() - 3], &g.cc.amps).is_err());
    let other = ground(R_EQ, "sto-3g", cavity(0.05, "unpolarized_par_k"));
    assert!(read_amps(&mut buf.as_slice(), &other.cc.amps).is_err());
}

#[test]
fn zero_photon_pair_amplitudes_give_a_zero_operator() {
    for &(m, n) in &g2_pairs(3) {
        assert_eq!(g2_unpack(0.0, m, n), 0.0);
    }
}

proptest! {
    #[test]
    fn photon_pair_storage_round_trips(x in -10.0f64..10.0, m in 0usize..4, n in 0usize..4) {
        let op = g2_unpack(x, m, n);
        prop_assert_eq!(g2_pack(op, m, n), x);
        prop_assert_eq!(op, if m == n { 2.0 * x } else { x });
        prop_assert_eq!(g2_unpack(x, n, m), op);
        prop_assert_eq!(g2_index(m, n, 4), g2_index(n, m, 4));
    }

    #[test]
    fn photon_pair_slots_enumerate_storage(nm in 1usize..6) {
        for (slot, &(m, n)) in g2_pairs(nm).iter().enumerate() {
            prop_assert!(m <= n);
            prop_assert_eq!(g2_index(m, n, nm), slot);
        }
    }
}
