//! Molecule plus cavity prepared for a calculation: canonical frame, aligned
//! polarizations, basis, integrals and symmetry-adapted AOs.

use nalgebra::DMatrix;

use crate::basis::{Basis, BasisLibrary};
use crate::cavity::CavityModeSet;
use crate::error::Result;
use crate::integrals::IntegralSet;
use crate::molecule::Molecule;
use crate::scf::{run_scf, ScfOptions, ScfResult};
use crate::sym::PointGroup;
use crate::symmetry::{detect_group, salcs, GroupAssignment};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymmetryMode {
    Auto,
    /// A subgroup of the detected group, in the same canonical frame.
    Force(PointGroup),
}

#[derive(Clone, Debug)]
pub struct SystemOptions {
    pub symmetry: SymmetryMode,
    /// Rotate unpolarized pairs about `k` onto symmetry axes.
    pub align_polarizations: bool,
    pub pure: bool,
}

impl Default for SystemOptions {
    fn default() -> Self {
        SystemOptions { symmetry: SymmetryMode::Auto, align_polarizations: true, pure: true }
    }
}

#[derive(Clone, Debug)]
pub struct System {
    pub assignment: GroupAssignment,
    /// Molecule in the canonical frame, origin at the center of nuclear charge.
    pub mol: Molecule,
    /// Cavity in the canonical frame with irreps assigned.
    pub cav: CavityModeSet,
    /// Rotation applied to each pair by polarization alignment.
    pub align_angles: Vec<f64>,
    pub basis: Basis,
    pub ints: IntegralSet,
    pub salcs: Vec<DMatrix<f64>>,
}

impl System {
    pub fn new(mol: &Molecule, cav: &CavityModeSet, lib: &BasisLibrary, opts: &SystemOptions) -> Result<System> {
        cav.validate()?;
        mol.require_closed_shell()?;
        let detected = detect_group(mol, cav);
        let canon_mol = detected.molecule(mol);
        let assignment = match opts.symmetry {
            SymmetryMode::Auto => detected.clone(),
            SymmetryMode::Force(g) => detected.descend(g, mol)?,
        };
        let canon_cav = detected.cavity(cav);
        let (mut cav, align_angles) = if opts.align_polarizations && assignment.group != PointGroup::C1 {
            canon_cav.align_to_axes()
        } else {
            let n = canon_cav.pairs.len();
            (canon_cav, vec![0.0; n])
        };
        cav.assign_irreps(assignment.group)?;
        let basis = Basis::build(&canon_mol, lib, opts.pure)?;
        let ints = IntegralSet::compute(&canon_mol, &basis);
        let salcs = salcs(&assignment, &basis)?;
        log::info!(
            "{} atoms, {} basis functions, group {}, {} photon modes",
            canon_mol.atoms.len(),
            basis.n_functions(),
            assignment.group,
            cav.n_modes()
        );
        Ok(System { assignment, mol: canon_mol, cav, align_angles, basis, ints, salcs })
    }

    /// The molecule back in its input frame.
    pub fn input_molecule(&self) -> Molecule {
        let f = self.assignment.frame;
        let inverse = [[f[0][0], f[1][0], f[2][0]], [f[0][1], f[1][1], f[2][1]], [f[0][2], f[1][2], f[2][2]]];
        self.mol.transformed(&inverse, [0.0; 3]).translated(self.assignment.origin)
    }

    pub fn group(&self) -> PointGroup {
        self.assignment.group
    }

    pub fn scf(&self, opts: &ScfOptions) -> Result<ScfResult> {
        run_scf(&self.mol, &self.ints, &self.cav, self.group(), &self.salcs, opts)
    }

    /// Same system with a different cavity in the canonical frame (no re-detection).
    pub fn with_cavity(&self, cav: CavityModeSet) -> Result<System> {
        let mut s = self.clone();
        s.cav = cav;
        s.cav.assign_irreps(s.group())?;
        Ok(s)
    }
}
