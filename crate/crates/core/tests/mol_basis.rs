use polariton::basis::{Basis, BasisLibrary, ShellDef, Shell};
use polariton::cavity::{CavityModeSet, ModePair};
use polariton::molecule::{mat_vec, Molecule};
use polariton::symmetry::detect_group;
use polariton::sym::PointGroup;
use proptest::prelude::*;

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

fn systems() -> Vec<(Molecule, CavityModeSet)> {
    let h2 = Molecule::from_symbols(&[("H", [0.0, 0.0, -0.7]), ("H", [0.0, 0.0, 0.7])], 0).unwrap();
    let water = Molecule::from_symbols(
        &[("O", [0.0, 0.0, 0.0]), ("H", [1.43, 1.1, 0.0]), ("H", [-1.43, 1.1, 0.0])],
        0,
    )
    .unwrap();
    let h4 = Molecule::from_symbols(
        &[("H", [0.0, 0.0, 0.0]), ("H", [1.6, 0.0, 0.0]), ("H", [0.0, 2.1, 0.0]), ("H", [1.6, 2.1, 0.0])],
        0,
    )
    .unwrap();
    let par = CavityModeSet::new(vec![ModePair::unpolarized(0.466, 0.05, [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]).unwrap()])
        .unwrap();
    let perp = CavityModeSet::new(vec![ModePair::unpolarized(0.466, 0.05, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]).unwrap()])
        .unwrap();
    let lin = CavityModeSet::new(vec![ModePair::linear(0.466, 0.05, [0.0, 1.0, 0.0], [1.0, 0.0, 1.0]).unwrap()])
        .unwrap();
    vec![
        (h2.clone(), par.clone()),
        (h2.clone(), perp.clone()),
        (h2, lin.clone()),
        (water.clone(), par.clone()),
        (water, CavityModeSet::empty()),
        (h4.clone(), perp),
        (h4, lin),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn detection_is_rotation_invariant(a in 0.0..6.28f64, b in 0.0..3.14f64, c in 0.0..6.28f64, shift in -2.0..2.0f64) {
        let r = rotation(a, b, c);
        for (mol, cav) in systems() {
            let g0 = detect_group(&mol, &cav).group;
            let mut rm = mol.transformed(&r, [0.0; 3]);
            rm = rm.translated([shift, -shift, 0.5 * shift]);
            let rc = cav.transformed(&r);
            let g1 = detect_group(&rm, &rc).group;
            prop_assert_eq!(g0, g1);
        }
    }

    #[test]
    fn cavity_never_raises_symmetry(theta in 0.0..6.28f64) {
        let water = Molecule::from_symbols(
            &[("O", [0.0, 0.0, 0.0]), ("H", [1.43, 1.1, 0.0]), ("H", [-1.43, 1.1, 0.0])],
            0,
        ).unwrap();
        let bare = detect_group(&water, &CavityModeSet::empty()).group;
        // ε along the C2 axis (y in the input frame), k rotated about it
        let k = [theta.cos(), 0.0, theta.sin()];
        for cav in [
            CavityModeSet::new(vec![ModePair::linear(0.5, 0.05, k, [0.0, 1.0, 0.0]).unwrap()]).unwrap(),
            CavityModeSet::new(vec![ModePair::unpolarized(0.5, 0.05, k, [0.0, 1.0, 0.0]).unwrap()]).unwrap(),
        ] {
            let g = detect_group(&water, &cav).group;
            prop_assert!(g.order() <= bare.order());
        }
    }

    #[test]
    fn frame_is_orthonormal(a in 0.0..6.28f64, b in 0.0..3.14f64) {
        let r = rotation(a, b, 0.3);
        for (mol, cav) in systems() {
            let ga = detect_group(&mol.transformed(&r, [0.0; 3]), &cav.transformed(&r));
            let f = ga.frame;
            for i in 0..3 {
                for j in 0..3 {
                    let d: f64 = (0..3).map(|k| f[i][k] * f[j][k]).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((d - want).abs() < 1e-12);
                }
            }
            let det = f[0][0] * (f[1][1] * f[2][2] - f[1][2] * f[2][1])
                - f[0][1] * (f[1][0] * f[2][2] - f[1][2] * f[2][0])
                + f[0][2] * (f[1][0] * f[2][1] - f[1][1] * f[2][0]);
            prop_assert!((det - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn group_examples() {
    let s = systems();
    assert_eq!(detect_group(&s[0].0, &s[0].1).group, PointGroup::D2h);
    assert_eq!(detect_group(&s[1].0, &s[1].1).group, PointGroup::D2h);
    assert_eq!(detect_group(&s[2].0, &s[2].1).group, PointGroup::C2h);
    assert_eq!(detect_group(&s[4].0, &s[4].1).group, PointGroup::C2v);
    assert_eq!(detect_group(&s[5].0, &s[5].1).group, PointGroup::D2h);
    // perpendicular cavity on H2 keeps the molecular axis on z
    let ga = detect_group(&s[1].0, &s[1].1);
    let m = ga.molecule(&s[1].0);
    assert!(m.atoms.iter().all(|a| a.pos[0].abs() < 1e-12 && a.pos[1].abs() < 1e-12));
    let k = mat_vec(&ga.frame, s[1].1.pairs[0].k);
    assert!(k[2].abs() < 1e-12);
}

#[test]
fn single_primitive_s_shell_is_normalized() {
    let def = ShellDef { l: 0, exps: vec![1.0], coefs: vec![1.0] };
    let sh = Shell::new(0, [0.0; 3], &def, true).unwrap();
    assert_eq!(sh.n_functions(), 1);
    // the radial factor of a normalized s Gaussian with exponent 1 is (2/π)^{3/4}
    let expected = (2.0 / std::f64::consts::PI).powf(0.75);
    assert!((sh.transform[0][0] * sh.coefs[0] - expected).abs() < 1e-14);
    let bad = ShellDef { l: 0, exps: vec![], coefs: vec![] };
    assert!(Shell::new(0, [0.0; 3], &bad, true).is_err());
}

#[test]
fn library_from_file() {
    let dir = std::env::temp_dir().join(format!("polariton-basis-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("mini.g94");
    std::fs::write(&path, "****\nH 0\nS 1 1.00\n 1.0 1.0\n****\n").unwrap();
    let lib = BasisLibrary::load(path.to_str().unwrap()).unwrap();
    let mol = Molecule::from_symbols(&[("H", [0.0; 3]), ("H", [0.0, 0.0, 1.4])], 0).unwrap();
    assert_eq!(Basis::build(&mol, &lib, true).unwrap().n_functions(), 2);
    assert!(BasisLibrary::load("no-such-basis").is_err());
    std::fs::remove_dir_all(&dir).ok();
}
