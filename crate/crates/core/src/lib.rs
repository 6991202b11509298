//! Polaritonic electronic structure: QED-HF, QED-CCSD-12-SD, Λ densities and
//! EOM-CC for molecules coupled to optical cavity modes, with point-group
//! blocked tensors and a brute-force QED-FCI oracle.

pub mod ad;
pub mod basis;
pub mod cavity;
pub mod cc;
pub mod density;
pub mod eom;
pub mod molecule;
pub mod scf;
pub mod error;
pub mod integrals;
pub mod lambda;
pub mod mo;
pub mod oracle;
pub mod sym;
pub mod symmetry;
pub mod system;

pub use error::{Error, Result};
