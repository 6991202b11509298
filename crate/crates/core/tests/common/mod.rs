#![allow(dead_code)]

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            let dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                break;
            }
        }
    }
    (x, w)
}

/// Composite Gauss–Legendre rule on [a, b] with `panels` panels of `n` points.
pub fn composite(a: f64, b: f64, panels: usize, n: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * n);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for k in 0..n {
            out.push((lo + 0.5 * h * (x[k] + 1.0), 0.5 * h * w[k]));
        }
    }
    out
}

use polariton::basis::BasisLibrary;
use polariton::cavity::{CavityModeSet, ModePair};
use polariton::cc::{solve, CcOptions, CcResult};
use polariton::lambda::Recorded;
use polariton::mo::{MoSystem, QedHam};
use polariton::molecule::Molecule;
use polariton::scf::{ScfOptions, ScfResult};
use polariton::sym::BlockedTensor;
use polariton::system::{System, SystemOptions};

/// Bond length of the reference tables (bohr).
pub const R_EQ: f64 = 1.41772152;
pub const OMEGA: f64 = 0.466;

pub fn h2(r: f64) -> Molecule {
    Molecule::from_symbols(&[("H", [0.0, 0.0, -r / 2.0]), ("H", [0.0, 0.0, r / 2.0])], 0).unwrap()
}

/// H₂ along z. `unpolarized_par_k`: both polarizations with `k` along the bond;
/// `eps_par` / `eps_perp`: one polarization along / across the bond.
pub fn cavity(lambda: f64, kind: &str) -> CavityModeSet {
    let pair = match kind {
        "unpolarized_par_k" => ModePair::unpolarized(OMEGA, lambda, [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]),
        "unpolarized_perp_k" => ModePair::unpolarized(OMEGA, lambda, [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]),
        "eps_par" => ModePair::linear(OMEGA, lambda, [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]),
        "eps_perp" => ModePair::linear(OMEGA, lambda, [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]),
        _ => unreachable!("unknown cavity kind {kind}"),
    };
    CavityModeSet::new(vec![pair.unwrap()]).unwrap()
}

/// Converged ground state with everything downstream steps need.
pub struct Ground {
    pub sys: System,
    pub scf: ScfResult,
    pub mo: MoSystem,
    pub h: QedHam<BlockedTensor>,
    pub cc: CcResult,
}

impl Ground {
    pub fn record(&self) -> Recorded {
        Recorded::new(&self.mo, &self.h, &self.cc.amps)
    }
}

pub fn ground_with(mol: &Molecule, basis: &str, cav: CavityModeSet, opts: &SystemOptions) -> Ground {
    let lib = BasisLibrary::load(basis).unwrap();
    let sys = System::new(mol, &cav, &lib, opts).unwrap();
    let scf = sys.scf(&ScfOptions::default()).unwrap();
    let mo = MoSystem::new(&sys, &scf).unwrap();
    let h = mo.qed_ham();
    let cc = solve(&mo, &h, None, &CcOptions::default()).unwrap();
    Ground { sys, scf, mo, h, cc }
}

pub fn ground(r: f64, basis: &str, cav: CavityModeSet) -> Ground {
    ground_with(&h2(r), basis, cav, &SystemOptions::default())
}
