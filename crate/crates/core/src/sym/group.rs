//! Real abelian point groups up to D2h.
//!
//! Every group is realized in a canonical Cartesian frame where each
//! operation is a diagonal sign matrix `diag(sx, sy, sz)`. Irreps are
//! listed in Cotton order, and in that order the direct product of two
//! irreps is the bitwise XOR of their indices.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PointGroup {
    C1,
    Cs,
    Ci,
    C2,
    C2v,
    C2h,
    D2,
    D2h,
}

const OPS_C1: &[[i8; 3]] = &[[1, 1, 1]];
const OPS_CS: &[[i8; 3]] = &[[1, 1, 1], [1, 1, -1]];
const OPS_CI: &[[i8; 3]] = &[[1, 1, 1], [-1, -1, -1]];
const OPS_C2: &[[i8; 3]] = &[[1, 1, 1], [-1, -1, 1]];
const OPS_C2V: &[[i8; 3]] = &[[1, 1, 1], [-1, -1, 1], [1, -1, 1], [-1, 1, 1]];
const OPS_C2H: &[[i8; 3]] = &[[1, 1, 1], [-1, -1, 1], [-1, -1, -1], [1, 1, -1]];
const OPS_D2: &[[i8; 3]] = &[[1, 1, 1], [-1, -1, 1], [-1, 1, -1], [1, -1, -1]];
const OPS_D2H: &[[i8; 3]] = &[
    [1, 1, 1],
    [-1, -1, 1],
    [-1, 1, -1],
    [1, -1, -1],
    [-1, -1, -1],
    [1, 1, -1],
    [1, -1, 1],
    [-1, 1, 1],
];

// Parity (x, y, z) of a representative monomial for each irrep, Cotton order.
const PAR_C1: &[[u8; 3]] = &[[0, 0, 0]];
const PAR_CS: &[[u8; 3]] = &[[0, 0, 0], [0, 0, 1]];
const PAR_CI: &[[u8; 3]] = &[[0, 0, 0], [1, 1, 1]];
const PAR_C2: &[[u8; 3]] = &[[0, 0, 0], [1, 0, 0]];
const PAR_C2V: &[[u8; 3]] = &[[0, 0, 0], [1, 1, 0], [1, 0, 0], [0, 1, 0]];
const PAR_C2H: &[[u8; 3]] = &[[0, 0, 0], [1, 0, 1], [0, 0, 1], [1, 0, 0]];
const PAR_D2: &[[u8; 3]] = &[[0, 0, 0], [0, 0, 1], [0, 1, 0], [1, 0, 0]];
const PAR_D2H: &[[u8; 3]] = &[
    [0, 0, 0],
    [1, 1, 0],
    [1, 0, 1],
    [0, 1, 1],
    [1, 1, 1],
    [0, 0, 1],
    [0, 1, 0],
    [1, 0, 0],
];

impl PointGroup {
    pub const ALL: [PointGroup; 8] = [
        PointGroup::C1,
        PointGroup::Cs,
        PointGroup::Ci,
        PointGroup::C2,
        PointGroup::C2v,
        PointGroup::C2h,
        PointGroup::D2,
        PointGroup::D2h,
    ];

    pub fn order(self) -> usize {
        self.operations().len()
    }

    /// Sign triples of the group operations in the canonical frame.
    pub fn operations(self) -> &'static [[i8; 3]] {
        match self {
            PointGroup::C1 => OPS_C1,
            PointGroup::Cs => OPS_CS,
            PointGroup::Ci => OPS_CI,
            PointGroup::C2 => OPS_C2,
            PointGroup::C2v => OPS_C2V,
            PointGroup::C2h => OPS_C2H,
            PointGroup::D2 => OPS_D2,
            PointGroup::D2h => OPS_D2H,
        }
    }

    fn parities(self) -> &'static [[u8; 3]] {
        match self {
            PointGroup::C1 => PAR_C1,
            PointGroup::Cs => PAR_CS,
            PointGroup::Ci => PAR_CI,
            PointGroup::C2 => PAR_C2,
            PointGroup::C2v => PAR_C2V,
            PointGroup::C2h => PAR_C2H,
            PointGroup::D2 => PAR_D2,
            PointGroup::D2h => PAR_D2H,
        }
    }

    pub fn irrep_names(self) -> &'static [&'static str] {
        match self {
            PointGroup::C1 => &["A"],
            PointGroup::Cs => &["A'", "A''"],
            PointGroup::Ci => &["Ag", "Au"],
            PointGroup::C2 => &["A", "B"],
            PointGroup::C2v => &["A1", "A2", "B1", "B2"],
            PointGroup::C2h => &["Ag", "Bg", "Au", "Bu"],
            PointGroup::D2 => &["A", "B1", "B2", "B3"],
            PointGroup::D2h => &["Ag", "B1g", "B2g", "B3g", "Au", "B1u", "B2u", "B3u"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PointGroup::C1 => "C1",
            PointGroup::Cs => "Cs",
            PointGroup::Ci => "Ci",
            PointGroup::C2 => "C2",
            PointGroup::C2v => "C2v",
            PointGroup::C2h => "C2h",
            PointGroup::D2 => "D2",
            PointGroup::D2h => "D2h",
        }
    }

    pub fn from_name(s: &str) -> Result<PointGroup> {
        PointGroup::ALL
            .iter()
            .copied()
            .find(|g| g.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Input(format!("unknown point group '{s}'")))
    }

    /// Character of `irrep` under operation index `op`.
    pub fn character(self, irrep: usize, op: usize) -> i8 {
        character_of_parity(self.parities()[irrep], self.operations()[op])
    }

    /// Irrep of a function whose Cartesian parity is `p`.
    pub fn irrep_of_parity(self, p: [u8; 3]) -> usize {
        let ops = self.operations();
        for (k, rep) in self.parities().iter().enumerate() {
            if ops
                .iter()
                .all(|op| character_of_parity(*rep, *op) == character_of_parity(p, *op))
            {
                return k;
            }
        }
        unreachable!("character table is complete")
    }

    pub fn irrep(self, id: usize) -> Irrep {
        assert!(id < self.order());
        Irrep { group: self, id: id as u8 }
    }

    pub fn irrep_by_name(self, name: &str) -> Result<Irrep> {
        self.irrep_names()
            .iter()
            .position(|n| n.eq_ignore_ascii_case(name))
            .map(|k| self.irrep(k))
            .ok_or_else(|| Error::Input(format!("irrep '{name}' not in {}", self.name())))
    }
}

impl fmt::Display for PointGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn character_of_parity(p: [u8; 3], op: [i8; 3]) -> i8 {
    let mut c = 1i8;
    for k in 0..3 {
        if p[k] == 1 {
            c *= op[k];
        }
    }
    c
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Irrep {
    pub group: PointGroup,
    pub id: u8,
}

impl Irrep {
    pub fn name(&self) -> &'static str {
        self.group.irrep_names()[self.id as usize]
    }

    pub fn is_totally_symmetric(&self) -> bool {
        self.id == 0
    }
}

impl fmt::Display for Irrep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn irrep_product(a: Irrep, b: Irrep) -> Result<Irrep> {
    if a.group != b.group {
        return Err(Error::Symmetry(format!(
            "irreps from different groups: {} and {}",
            a.group, b.group
        )));
    }
    Ok(Irrep { group: a.group, id: a.id ^ b.id })
}
