mod common;

use common::{cavity, ground, ground_with, h2, Ground, R_EQ};
use nalgebra::DMatrix;
use polariton::cavity::CavityModeSet;
use polariton::cc::{solve, Amps, CcOptions};
use polariton::density::{
    ao_density, delta_rho, density_on_grid, read_cube, write_cube, DensityGrid, GridSpec,
};
use polariton::lambda::{densities, solve_lambda, Densities, LambdaResult, Recorded};
use polariton::molecule::Molecule;
use polariton::oracle::analysis::one_rdm;
use polariton::oracle::{build_hamiltonian, diagonalize, OracleModel, PhotonCap, PolaritonBasis};
use polariton::system::SystemOptions;
use proptest::prelude::*;

fn lambda(g: &Ground) -> (Recorded, LambdaResult, Densities) {
    let rec = g.record();
    let l = solve_lambda(&g.mo, &rec, &CcOptions::default()).unwrap();
    let d = densities(&g.mo, &rec, &l.lam);
    (rec, l, d)
}

fn rho(g: &Ground, gamma: &DMatrix<f64>, spec: &GridSpec) -> DensityGrid {
    density_on_grid(&g.sys, &ao_density(&g.scf.c, gamma).unwrap(), spec).unwrap()
}

fn box_grid(points: usize) -> GridSpec {
    GridSpec::bounding_box(&h2(R_EQ), 6.0, points).unwrap()
}

// ---------------------------------------------------------------------------
// Λ functional and one-particle density

#[test]
fn lagrangian_reproduces_the_cc_energy() {
    for kind in ["eps_par", "eps_perp", "unpolarized_par_k"] {
        let g = ground(R_EQ, "cc-pvdz", cavity(0.05, kind));
        let (_, l, d) = lambda(&g);
        assert!(l.max_residual <= 1e-8);
        assert!((l.functional - g.cc.e_total).abs() < 1e-9, "{kind}: {}", l.functional - g.cc.e_total);
        assert!((d.trace() - 2.0).abs() < 1e-8, "{kind}: trace {}", d.trace());
    }
}

#[test]
fn reference_only_density_is_the_occupation() {
    let g = ground(R_EQ, "cc-pvdz", cavity(0.05, "eps_par"));
    let zero = Amps::zeros(&g.mo, 0);
    let rec = Recorded::new(&g.mo, &g.h, &zero);
    let d = densities(&g.mo, &rec, &zero);
    let n = g.mo.n_spatial;
    let occ = DMatrix::from_fn(n, n, |p, q| if p == q && g.mo.occupied[p] { 2.0 } else { 0.0 });
    assert!((d.gamma - occ).amax() < 1e-14);
}

#[test]
fn lambda_is_zero_for_a_hamiltonian_without_correlation() {
    // bare Fock operator: the reference is exact and Λ vanishes with T
    let g = ground(R_EQ, "sto-3g", cavity(0.0, "eps_par"));
    let mut h = g.h.clone();
    h.elec.w = None;
    let cc = solve(&g.mo, &h, None, &CcOptions::default()).unwrap();
    assert!(cc.amps.max_abs() < 1e-12);
    let rec = Recorded::new(&g.mo, &h, &cc.amps);
    let l = solve_lambda(&g.mo, &rec, &CcOptions::default()).unwrap();
    assert!(l.lam.max_abs() < 1e-12);
}

// ---------------------------------------------------------------------------
// Grids

#[test]
fn density_integrates_to_the_electron_count() {
    let g = ground(R_EQ, "cc-pvdz", cavity(0.05, "eps_par"));
    let (_, _, d) = lambda(&g);
    let spec = box_grid(100);
    let grid = rho(&g, &d.symmetrized(), &spec);
    let n = grid.integrate();
    assert!((n - 2.0).abs() < 0.02, "{n}");
    assert!(grid.values.iter().all(|v| v.is_finite()));

    let (plane, dims) = grid.integrate_axis(1).unwrap();
    assert_eq!(dims, [100, 100]);
    let (hx, hz) = (spec.axes[0][0], spec.axes[2][2]);
    let mut total = 0.0;
    for i in 0..100 {
        for k in 0..100 {
            let w = |n: usize| if n == 0 || n == 99 { 0.5 } else { 1.0 };
            total += w(i) * w(k) * hx * hz * plane[i * 100 + k];
        }
    }
    assert!((total - n).abs() < 1e-10);
}

#[test]
fn single_s_orbital_density_at_the_nucleus() {
    let he = Molecule::from_symbols(&[("He", [0.0, 0.0, 0.0])], 0).unwrap();
    let g = ground_with(&he, "sto-3g", CavityModeSet::empty(), &SystemOptions::default());
    let occupied = DMatrix::from_fn(1, 1, |_, _| 2.0);
    let spec = GridSpec { origin: [0.0; 3], axes: [[0.1, 0.0, 0.0], [0.0, 0.1, 0.0], [0.0, 0.0, 0.1]], counts: [1, 1, 1] };
    let grid = rho(&g, &occupied, &spec);
    let mut phi = vec![0.0; 1];
    g.sys.basis.shells[0].values_at([0.0; 3], &mut phi);
    let orbital = g.scf.c[(0, 0)] * phi[0];
    assert!((grid.values[0] - 2.0 * orbital * orbital).abs() < 1e-12);
}

#[test]
fn zero_coupling_leaves_the_density_unchanged() {
    let spec = box_grid(100);
    let bare = ground(R_EQ, "cc-pvdz", CavityModeSet::empty());
    let (_, _, d0) = lambda(&bare);
    let reference = rho(&bare, &d0.symmetrized(), &spec);
    for kind in ["eps_par", "unpolarized_perp_k"] {
        let g = ground(R_EQ, "cc-pvdz", cavity(0.0, kind));
        let (_, _, d) = lambda(&g);
        let cav = rho(&g, &d.symmetrized(), &spec);
        let dr = delta_rho(&cav, &reference).unwrap();
        assert!(dr <= 1e-10, "{kind}: {dr}");
    }
    let coupled = ground(R_EQ, "cc-pvdz", cavity(0.05, "eps_par"));
    let (_, _, d) = lambda(&coupled);
    let dr = delta_rho(&rho(&coupled, &d.symmetrized(), &spec), &reference).unwrap();
    assert!(dr > 1e-5 && dr < 0.1, "{dr}");
}

#[test]
fn midpoint_density_shift_agrees_with_fci() {
    let mid = GridSpec { origin: [0.0; 3], axes: [[0.1, 0.0, 0.0], [0.0, 0.1, 0.0], [0.0, 0.0, 0.1]], counts: [1, 1, 1] };
    let mut cc = Vec::new();
    let mut fci = Vec::new();
    for lam in [0.0, 0.05] {
        let g = ground(R_EQ, "sto-3g", cavity(lam, "eps_par"));
        let (_, _, d) = lambda(&g);
        cc.push(rho(&g, &d.symmetrized(), &mid).values[0]);
        let model = OracleModel::new(&g.sys, &g.scf).unwrap();
        let b = PolaritonBasis::new(&model, &PhotonCap::per_mode(4), Some(0)).unwrap();
        let (_, v) = diagonalize(&build_hamiltonian(&model, &b), 1);
        let gamma = one_rdm(&model, &b, v.column(0));
        fci.push(rho(&g, &gamma, &mid).values[0]);
    }
    let (dc, df) = (cc[1] - cc[0], fci[1] - fci[0]);
    assert!(df.abs() > 1e-6, "{df}");
    assert_eq!(dc.signum(), df.signum());
    assert!((dc - df).abs() < 0.1 * df.abs(), "cc {dc} vs fci {df}");
}

// ---------------------------------------------------------------------------
// Cube files

#[test]
fn cube_round_trip_and_difference() {
    let spec = box_grid(100);
    let bare = ground(R_EQ, "cc-pvdz", CavityModeSet::empty());
    let (_, _, d0) = lambda(&bare);
    let reference = rho(&bare, &d0.symmetrized(), &spec);
    let g = ground(R_EQ, "cc-pvdz", cavity(0.05, "eps_par"));
    let (_, _, d) = lambda(&g);
    let cav = rho(&g, &d.symmetrized(), &spec);
    let mol = g.sys.input_molecule();
    assert!((mol.atoms[1].pos[2] - R_EQ / 2.0).abs() < 1e-12);

    let mut buf = Vec::new();
    write_cube(&mut buf, &cav, &mol, "density").unwrap();
    let mut again = Vec::new();
    write_cube(&mut again, &cav, &mol, "density").unwrap();
    assert_eq!(buf, again);
    let text = String::from_utf8(buf.clone()).unwrap();
    let first_value_line = text.lines().nth(8).unwrap();
    assert_eq!(first_value_line.split_whitespace().count(), 6);
    assert!(first_value_line.contains("E-"));

    let (back, atoms) = read_cube(buf.as_slice()).unwrap();
    assert_eq!(back.spec.counts, cav.spec.counts);
    assert_eq!(atoms.atoms.len(), 2);
    assert!((back.integrate() - 2.0).abs() < 0.02);

    let diff = cav.difference(&reference).unwrap();
    let mut dbuf = Vec::new();
    write_cube(&mut dbuf, &diff, &mol, "difference").unwrap();
    let (dback, _) = read_cube(dbuf.as_slice()).unwrap();
    let zero = DensityGrid { spec: dback.spec.clone(), values: vec![0.0; dback.values.len()] };
    let from_file = delta_rho(&dback, &zero).unwrap();
    let reported = delta_rho(&cav, &reference).unwrap();
    assert!((from_file - reported).abs() < 1e-4 * reported, "{from_file} vs {reported}");
}

#[test]
fn empty_molecule_is_rejected() {
    let empty = Molecule { atoms: vec![], charge: 0, multiplicity: 1 };
    assert!(GridSpec::bounding_box(&empty, 6.0, 100).is_err());
    let grid = DensityGrid { spec: box_grid(2), values: vec![0.0; 8] };
    assert!(write_cube(&mut Vec::new(), &grid, &empty, "").is_err());
}

#[test]
fn truncated_cube_is_rejected() {
    let grid = DensityGrid { spec: box_grid(3), values: (0..27).map(|x| x as f64).collect() };
    let mut buf = Vec::new();
    write_cube(&mut buf, &grid, &h2(R_EQ), "x").unwrap();
    let text = String::from_utf8(buf).unwrap();
    let cut: String = text.lines().take(text.lines().count() - 1).map(|l| format!("{l}\n")).collect();
    assert!(read_cube(cut.as_bytes()).is_err());
}

#[test]
fn mismatched_grids_are_rejected() {
    let a = DensityGrid { spec: box_grid(4), values: vec![1.0; 64] };
    let b = DensityGrid { spec: box_grid(5), values: vec![1.0; 125] };
    assert!(delta_rho(&a, &b).is_err());
    assert!(a.difference(&b).is_err());
    let mut shifted = a.clone();
    shifted.spec.origin[0] += 0.1;
    assert!(delta_rho(&a, &shifted).is_err());
    assert_eq!(delta_rho(&a, &a).unwrap(), 0.0);
}

fn field(values: Vec<f64>) -> DensityGrid {
    let spec = GridSpec { origin: [-1.0; 3], axes: [[0.5, 0.0, 0.0], [0.0, 0.4, 0.0], [0.0, 0.0, 0.3]], counts: [3, 4, 5] };
    DensityGrid { spec, values }
}

proptest! {
    #[test]
    fn delta_rho_is_a_metric(
        a in proptest::collection::vec(-1.0f64..1.0, 60),
        b in proptest::collection::vec(-1.0f64..1.0, 60),
        c in proptest::collection::vec(-1.0f64..1.0, 60),
    ) {
        let (a, b, c) = (field(a), field(b), field(c));
        let ab = delta_rho(&a, &b).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - delta_rho(&b, &a).unwrap()).abs() < 1e-15);
        prop_assert!(delta_rho(&a, &c).unwrap() <= ab + delta_rho(&b, &c).unwrap() + 1e-12);
    }

    #[test]
    fn cube_values_survive_the_text_format(v in proptest::collection::vec(-1e3f64..1e3, 60)) {
        let grid = field(v);
        let mut buf = Vec::new();
        write_cube(&mut buf, &grid, &h2(R_EQ), "p").unwrap();
        let (back, _) = read_cube(buf.as_slice()).unwrap();
        for (x, y) in grid.values.iter().zip(&back.values) {
            prop_assert!((x - y).abs() <= 5e-6 * x.abs() + 1e-300);
        }
    }
}
