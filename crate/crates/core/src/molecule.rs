//! Nuclear framework: atoms, charge, geometry input.

use crate::error::{Error, Result};

/// Bohr per ångström (CODATA 2018).
pub const ANGSTROM_TO_BOHR: f64 = 1.0 / 0.529_177_210_903;

const SYMBOLS: [&str; 36] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl", "Ar", "K", "Ca",
    "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr",
];

pub fn atomic_number(symbol: &str) -> Option<u32> {
    SYMBOLS.iter().position(|s| s.eq_ignore_ascii_case(symbol)).map(|p| p as u32 + 1)
}

pub fn element_symbol(z: u32) -> Option<&'static str> {
    SYMBOLS.get((z as usize).wrapping_sub(1)).copied()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Units {
    Bohr,
    Angstrom,
}

impl Units {
    pub fn parse(s: &str) -> Result<Units> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bohr" | "au" | "a.u." => Ok(Units::Bohr),
            "angstrom" | "ang" | "a" => Ok(Units::Angstrom),
            _ => Err(Error::Input(format!("unknown units '{s}'"))),
        }
    }

    pub fn to_bohr(self) -> f64 {
        match self {
            Units::Bohr => 1.0,
            Units::Angstrom => ANGSTROM_TO_BOHR,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub symbol: String,
    pub z: u32,
    /// Position in bohr.
    pub pos: [f64; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub struct Molecule {
    pub atoms: Vec<Atom>,
    pub charge: i32,
    pub multiplicity: u32,
}

impl Molecule {
    pub fn new(atoms: Vec<Atom>, charge: i32) -> Result<Molecule> {
        let m = Molecule { atoms, charge, multiplicity: 1 };
        m.validate()?;
        Ok(m)
    }

    /// Builds from `(symbol, position in bohr)` pairs.
    pub fn from_symbols(atoms: &[(&str, [f64; 3])], charge: i32) -> Result<Molecule> {
        let atoms = atoms
            .iter()
            .map(|(s, p)| {
                let z = atomic_number(s).ok_or_else(|| Error::Input(format!("unknown element '{s}'")))?;
                Ok(Atom { symbol: element_symbol(z).unwrap().to_string(), z, pos: *p })
            })
            .collect::<Result<Vec<_>>>()?;
        Molecule::new(atoms, charge)
    }

    /// Parses lines of `Symbol x y z`; blank lines and `#` comments are skipped.
    pub fn from_xyz_block(text: &str, units: Units, charge: i32) -> Result<Molecule> {
        let mut atoms = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(Error::Input(format!("geometry line {}: expected 'symbol x y z'", ln + 1)));
            }
            let z = atomic_number(f[0])
                .ok_or_else(|| Error::Input(format!("geometry line {}: unknown element '{}'", ln + 1, f[0])))?;
            let mut pos = [0.0; 3];
            for k in 0..3 {
                pos[k] = f[k + 1]
                    .parse::<f64>()
                    .map_err(|_| Error::Input(format!("geometry line {}: bad coordinate '{}'", ln + 1, f[k + 1])))?
                    * units.to_bohr();
            }
            atoms.push(Atom { symbol: element_symbol(z).unwrap().to_string(), z, pos });
        }
        Molecule::new(atoms, charge)
    }

    fn validate(&self) -> Result<()> {
        for a in &self.atoms {
            if a.pos.iter().any(|x| !x.is_finite()) {
                return Err(Error::Input(format!("non-finite coordinate on {}", a.symbol)));
            }
        }
        if self.n_electrons_signed() < 0 {
            return Err(Error::Input("negative electron count".into()));
        }
        Ok(())
    }

    fn n_electrons_signed(&self) -> i64 {
        self.atoms.iter().map(|a| a.z as i64).sum::<i64>() - self.charge as i64
    }

    pub fn n_electrons(&self) -> usize {
        self.n_electrons_signed().max(0) as usize
    }

    /// Closed-shell check required by the restricted reference.
    pub fn require_closed_shell(&self) -> Result<()> {
        if self.n_electrons() % 2 != 0 || self.multiplicity != 1 {
            return Err(Error::Input(format!("{} electrons: only closed-shell singlets are supported", self.n_electrons())));
        }
        Ok(())
    }

    pub fn nuclear_repulsion(&self) -> f64 {
        let mut e = 0.0;
        for (i, a) in self.atoms.iter().enumerate() {
            for b in &self.atoms[..i] {
                e += (a.z * b.z) as f64 / dist(a.pos, b.pos);
            }
        }
        e
    }

    pub fn center_of_charge(&self) -> [f64; 3] {
        let q: f64 = self.atoms.iter().map(|a| a.z as f64).sum();
        let mut c = [0.0; 3];
        if q == 0.0 {
            return c;
        }
        for a in &self.atoms {
            for k in 0..3 {
                c[k] += a.z as f64 * a.pos[k] / q;
            }
        }
        c
    }

    /// Nuclear dipole about `origin`.
    pub fn nuclear_dipole(&self, origin: [f64; 3]) -> [f64; 3] {
        let mut d = [0.0; 3];
        for a in &self.atoms {
            for k in 0..3 {
                d[k] += a.z as f64 * (a.pos[k] - origin[k]);
            }
        }
        d
    }

    /// Applies `r -> R (r - origin)` to every atom.
    pub fn transformed(&self, rot: &[[f64; 3]; 3], origin: [f64; 3]) -> Molecule {
        let mut m = self.clone();
        for a in &mut m.atoms {
            let d = [a.pos[0] - origin[0], a.pos[1] - origin[1], a.pos[2] - origin[2]];
            a.pos = mat_vec(rot, d);
        }
        m
    }

    pub fn translated(&self, t: [f64; 3]) -> Molecule {
        let mut m = self.clone();
        for a in &mut m.atoms {
            for k in 0..3 {
                a.pos[k] += t[k];
            }
        }
        m
    }
}

pub fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

pub fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalized(a: [f64; 3]) -> [f64; 3] {
    let n = norm(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

pub fn mat_vec(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_xyz_in_angstrom() {
        let m = Molecule::from_xyz_block("H 0 0 0\nH 0 0 0.74 # bond\n", Units::Angstrom, 0).unwrap();
        assert_eq!(m.n_electrons(), 2);
        assert!((m.atoms[1].pos[2] - 0.74 * ANGSTROM_TO_BOHR).abs() < 1e-12);
        assert!(m.nuclear_repulsion() > 0.0);
        assert!(Molecule::from_xyz_block("Xx 0 0 0", Units::Bohr, 0).is_err());
        assert!(Molecule::from_xyz_block("H 0 0", Units::Bohr, 0).is_err());
    }

    #[test]
    fn closed_shell_check() {
        let m = Molecule::from_symbols(&[("H", [0.0; 3])], 0).unwrap();
        assert!(m.require_closed_shell().is_err());
        let m = Molecule::from_symbols(&[("H", [0.0; 3])], -1).unwrap();
        assert!(m.require_closed_shell().is_ok());
    }
}
