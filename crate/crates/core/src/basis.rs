//! Contracted Gaussian shells and a Gaussian-94 format reader.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::molecule::{atomic_number, Molecule};

const STO_3G: &str = "
****
H     0
S   3   1.00
      3.42525091             0.15432897
      0.62391373             0.53532814
      0.16885540             0.44463454
****
He     0
S   3   1.00
      6.36242139             0.15432897
      1.15892300             0.53532814
      0.31364979             0.44463454
****
C     0
S   3   1.00
     71.6168370              0.15432897
     13.0450960              0.53532814
      3.5305122              0.44463454
SP   3   1.00
      2.9412494             -0.09996723             0.15591627
      0.6834831              0.39951283             0.60768372
      0.2222899              0.70011547             0.39195739
****
N     0
S   3   1.00
     99.1061690              0.15432897
     18.0523120              0.53532814
      4.8856602              0.44463454
SP   3   1.00
      3.7804559             -0.09996723             0.15591627
      0.8784966              0.39951283             0.60768372
      0.2857144              0.70011547             0.39195739
****
O     0
S   3   1.00
    130.7093200              0.15432897
     23.8088610              0.53532814
      6.4436083              0.44463454
SP   3   1.00
      5.0331513             -0.09996723             0.15591627
      1.1695961              0.39951283             0.60768372
      0.3803890              0.70011547             0.39195739
****
";

const CC_PVDZ: &str = "
****
H     0
S   3   1.00
     13.0100000              0.0196850
      1.9620000              0.1379770
      0.4446000              0.4781480
S   1   1.00
      0.1220000              1.0000000
P   1   1.00
      0.7270000              1.0000000
****
";

const CC_PVTZ: &str = "
****
H     0
S   3   1.00
     33.8700000              0.0060680
      5.0950000              0.0453080
      1.1590000              0.2028220
S   1   1.00
      0.3258000              1.0000000
S   1   1.00
      0.1027000              1.0000000
P   1   1.00
      1.4070000              1.0000000
P   1   1.00
      0.3880000              1.0000000
D   1   1.00
      1.0570000              1.0000000
****
";

/// Shell as read from a basis file, before placement on an atom.
#[derive(Clone, Debug, PartialEq)]
pub struct ShellDef {
    pub l: usize,
    pub exps: Vec<f64>,
    pub coefs: Vec<f64>,
}

/// Element-keyed shell definitions.
#[derive(Clone, Debug, Default)]
pub struct BasisLibrary {
    pub name: String,
    pub elements: BTreeMap<u32, Vec<ShellDef>>,
}

fn parse_float(s: &str) -> Result<f64> {
    s.replace(['D', 'd'], "E")
        .parse::<f64>()
        .map_err(|_| Error::Basis(format!("bad number '{s}'")))
}

fn shell_l(c: char) -> Result<usize> {
    match c.to_ascii_uppercase() {
        'S' => Ok(0),
        'P' => Ok(1),
        'D' => Ok(2),
        'F' => Ok(3),
        _ => Err(Error::Basis(format!("unsupported shell type '{c}'"))),
    }
}

impl BasisLibrary {
    /// Parses Gaussian-94 text (`****`-separated element blocks, `SP` shells allowed).
    pub fn parse_g94(name: &str, text: &str) -> Result<BasisLibrary> {
        let mut lib = BasisLibrary { name: name.to_string(), elements: BTreeMap::new() };
        let mut lines = text
            .lines()
            .map(|l| l.split('!').next().unwrap().trim())
            .filter(|l| !l.is_empty())
            .peekable();
        while let Some(line) = lines.next() {
            if line.starts_with("****") {
                continue;
            }
            let sym = line.split_whitespace().next().unwrap();
            let z = atomic_number(sym).ok_or_else(|| Error::Basis(format!("unknown element '{sym}' in basis")))?;
            let mut shells = Vec::new();
            loop {
                let head = lines.next().ok_or_else(|| Error::Basis(format!("unterminated block for {sym}")))?;
                if head.starts_with("****") {
                    break;
                }
                let f: Vec<&str> = head.split_whitespace().collect();
                if f.len() < 2 {
                    return Err(Error::Basis(format!("bad shell header '{head}'")));
                }
                let kind = f[0].to_ascii_uppercase();
                let n: usize = f[1].parse().map_err(|_| Error::Basis(format!("bad primitive count in '{head}'")))?;
                let scale = if f.len() > 2 { parse_float(f[2])? } else { 1.0 };
                if n == 0 {
                    return Err(Error::Basis(format!("shell with no primitives: '{head}'")));
                }
                let ls: Vec<usize> = if kind == "SP" {
                    vec![0, 1]
                } else if kind.len() == 1 {
                    vec![shell_l(kind.chars().next().unwrap())?]
                } else {
                    return Err(Error::Basis(format!("unsupported shell type '{kind}'")));
                };
                let mut exps = Vec::with_capacity(n);
                let mut cols = vec![Vec::with_capacity(n); ls.len()];
                for _ in 0..n {
                    let row = lines.next().ok_or_else(|| Error::Basis("truncated primitive list".into()))?;
                    let v = row.split_whitespace().map(parse_float).collect::<Result<Vec<_>>>()?;
                    if v.len() != 1 + ls.len() {
                        return Err(Error::Basis(format!("expected {} columns in '{row}'", 1 + ls.len())));
                    }
                    if v[0] <= 0.0 {
                        return Err(Error::Basis(format!("non-positive exponent in '{row}'")));
                    }
                    exps.push(v[0] * scale * scale);
                    for (c, x) in cols.iter_mut().zip(&v[1..]) {
                        c.push(*x);
                    }
                }
                for (l, coefs) in ls.into_iter().zip(cols) {
                    shells.push(ShellDef { l, exps: exps.clone(), coefs });
                }
            }
            lib.elements.entry(z).or_default().extend(shells);
        }
        Ok(lib)
    }

    /// Built-in set by name, or a Gaussian-94 file on disk.
    pub fn load(name_or_path: &str) -> Result<BasisLibrary> {
        let key = name_or_path.to_ascii_lowercase();
        let builtin = match key.as_str() {
            "sto-3g" => Some(STO_3G),
            "cc-pvdz" => Some(CC_PVDZ),
            "cc-pvtz" => Some(CC_PVTZ),
            _ => None,
        };
        if let Some(text) = builtin {
            return BasisLibrary::parse_g94(&key, text);
        }
        let path = Path::new(name_or_path);
        if path.exists() {
            let text = std::fs::read_to_string(path)?;
            let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            return BasisLibrary::parse_g94(&name, &text);
        }
        Err(Error::Basis(format!("unknown basis '{name_or_path}' (built-ins: sto-3g, cc-pvdz, cc-pvtz)")))
    }
}

/// Cartesian exponent triples of a shell, `x` fastest-descending.
pub fn cart_components(l: usize) -> Vec<[usize; 3]> {
    let mut v = Vec::with_capacity((l + 1) * (l + 2) / 2);
    for lx in (0..=l).rev() {
        for ly in (0..=l - lx).rev() {
            v.push([lx, ly, l - lx - ly]);
        }
    }
    v
}

fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

fn double_factorial(n: i64) -> f64 {
    let mut r = 1.0;
    let mut k = n;
    while k > 1 {
        r *= k as f64;
        k -= 2;
    }
    r
}

/// Unnormalized real solid harmonic `S_lm` as Cartesian coefficients.
pub fn solid_harmonic(l: usize, m: i64) -> Vec<f64> {
    let comps = cart_components(l);
    let mut out = vec![0.0; comps.len()];
    let am = m.unsigned_abs() as usize;
    let wm = usize::from(m < 0);
    for t in 0..=(l - am) / 2 {
        for u in 0..=t {
            let mut w = wm;
            while w <= am {
                let sign = if (t + (w - wm) / 2) % 2 == 0 { 1.0 } else { -1.0 };
                let c = sign
                    * 0.25f64.powi(t as i32)
                    * binom(l, t)
                    * binom(l - t, am + t)
                    * binom(t, u)
                    * binom(am, w);
                let e = [2 * t + am - 2 * u - w, 2 * u + w, l - 2 * t - am];
                let k = comps.iter().position(|c| *c == e).unwrap();
                out[k] += c;
                w += 2;
            }
        }
    }
    out
}

/// Cartesian parity of `S_lm`.
pub fn solid_harmonic_parity(l: usize, m: i64) -> [u8; 3] {
    let am = m.unsigned_abs() as usize;
    let wm = usize::from(m < 0);
    [((am - wm) % 2) as u8, wm as u8, ((l - am) % 2) as u8]
}

/// `∫ x^n exp(-p x²) dx` over the real line.
fn gauss_moment(n: usize, p: f64) -> f64 {
    if n % 2 == 1 {
        return 0.0;
    }
    double_factorial(n as i64 - 1) / (2.0 * p).powi(n as i32 / 2) * (std::f64::consts::PI / p).sqrt()
}

/// A contracted shell placed on an atom.
#[derive(Clone, Debug)]
pub struct Shell {
    pub atom: usize,
    pub center: [f64; 3],
    pub l: usize,
    pub exps: Vec<f64>,
    /// Contraction coefficients with the primitive factor `α^{(2l+3)/4}` folded in.
    pub coefs: Vec<f64>,
    pub pure: bool,
    /// Rows map Cartesian components to normalized basis functions.
    pub transform: Vec<Vec<f64>>,
    /// Cartesian parity of each basis function of the shell.
    pub parity: Vec<[u8; 3]>,
}

impl Shell {
    pub fn new(atom: usize, center: [f64; 3], def: &ShellDef, pure: bool) -> Result<Shell> {
        if def.exps.is_empty() || def.exps.len() != def.coefs.len() {
            return Err(Error::Basis("shell needs matching, non-empty exponent and coefficient lists".into()));
        }
        if def.exps.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::Basis("exponents must be positive".into()));
        }
        let l = def.l;
        let coefs: Vec<f64> = def
            .exps
            .iter()
            .zip(&def.coefs)
            .map(|(a, c)| c * a.powf((2 * l + 3) as f64 / 4.0))
            .collect();
        let comps = cart_components(l);
        let nc = comps.len();
        // self-overlap of the Cartesian components
        let mut s = vec![vec![0.0; nc]; nc];
        for (i, ci) in comps.iter().enumerate() {
            for (j, cj) in comps.iter().enumerate() {
                let mut v = 0.0;
                for (a, da) in def.exps.iter().zip(&coefs) {
                    for (b, db) in def.exps.iter().zip(&coefs) {
                        let p = a + b;
                        v += da * db * (0..3).map(|k| gauss_moment(ci[k] + cj[k], p)).product::<f64>();
                    }
                }
                s[i][j] = v;
            }
        }
        // for l = 1 the pure order m = -1, 0, 1 is y, z, x
        let (mut transform, parity): (Vec<Vec<f64>>, Vec<[u8; 3]>) = if pure {
            (-(l as i64)..=l as i64).map(|m| (solid_harmonic(l, m), solid_harmonic_parity(l, m))).unzip()
        } else {
            (0..nc)
                .map(|k| {
                    let mut row = vec![0.0; nc];
                    row[k] = 1.0;
                    let c = comps[k];
                    (row, [(c[0] % 2) as u8, (c[1] % 2) as u8, (c[2] % 2) as u8])
                })
                .unzip()
        };
        for row in &mut transform {
            let mut n = 0.0;
            for i in 0..nc {
                for j in 0..nc {
                    n += row[i] * s[i][j] * row[j];
                }
            }
            let f = 1.0 / n.sqrt();
            row.iter_mut().for_each(|x| *x *= f);
        }
        Ok(Shell { atom, center, l, exps: def.exps.clone(), coefs, pure, transform, parity })
    }

    pub fn n_cart(&self) -> usize {
        (self.l + 1) * (self.l + 2) / 2
    }

    /// The shell carried by the orthogonal map `rot`: functions `f(rot⁻¹ r)`.
    pub fn transformed(&self, rot: &[[f64; 3]; 3]) -> Shell {
        let comps = cart_components(self.l);
        // monomial k evaluated at rot^T u, expanded over monomials of u
        let mut m = vec![vec![0.0; comps.len()]; comps.len()];
        for (k, e) in comps.iter().enumerate() {
            let mut poly: Vec<([usize; 3], f64)> = vec![([0; 3], 1.0)];
            for d in 0..3 {
                for _ in 0..e[d] {
                    let mut next = Vec::with_capacity(poly.len() * 3);
                    for (mono, c) in &poly {
                        for x in 0..3 {
                            let w = rot[x][d];
                            if w != 0.0 {
                                let mut q = *mono;
                                q[x] += 1;
                                next.push((q, c * w));
                            }
                        }
                    }
                    poly = next;
                }
            }
            for (mono, c) in poly {
                let j = comps.iter().position(|x| *x == mono).unwrap();
                m[k][j] += c;
            }
        }
        let transform = self
            .transform
            .iter()
            .map(|row| (0..comps.len()).map(|j| (0..comps.len()).map(|k| row[k] * m[k][j]).sum()).collect())
            .collect();
        let center = crate::molecule::mat_vec(rot, self.center);
        Shell { center, transform, ..self.clone() }
    }

    /// Values of the shell's basis functions at `r`.
    pub fn values_at(&self, r: [f64; 3], out: &mut [f64]) {
        let d = [r[0] - self.center[0], r[1] - self.center[1], r[2] - self.center[2]];
        let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        let radial: f64 = self.exps.iter().zip(&self.coefs).map(|(a, c)| c * (-a * r2).exp()).sum();
        if radial == 0.0 {
            out.iter_mut().for_each(|x| *x = 0.0);
            return;
        }
        let cart: Vec<f64> = cart_components(self.l)
            .iter()
            .map(|e| d[0].powi(e[0] as i32) * d[1].powi(e[1] as i32) * d[2].powi(e[2] as i32) * radial)
            .collect();
        for (o, row) in out.iter_mut().zip(&self.transform) {
            *o = row.iter().zip(&cart).map(|(a, b)| a * b).sum();
        }
    }

    pub fn n_functions(&self) -> usize {
        self.transform.len()
    }
}

/// Basis functions of a molecule.
#[derive(Clone, Debug)]
pub struct Basis {
    pub name: String,
    pub shells: Vec<Shell>,
    /// First basis-function index of each shell.
    pub offsets: Vec<usize>,
    n: usize,
}

impl Basis {
    /// Places library shells on each atom: atom-major, then `l`, then file order.
    pub fn build(mol: &Molecule, lib: &BasisLibrary, pure: bool) -> Result<Basis> {
        let mut shells = Vec::new();
        for (ia, atom) in mol.atoms.iter().enumerate() {
            let defs = lib
                .elements
                .get(&atom.z)
                .ok_or_else(|| Error::Basis(format!("basis '{}' has no entry for {}", lib.name, atom.symbol)))?;
            let mut defs: Vec<&ShellDef> = defs.iter().collect();
            defs.sort_by_key(|d| d.l);
            for d in defs {
                shells.push(Shell::new(ia, atom.pos, d, pure)?);
            }
        }
        Ok(Basis::from_shells(&lib.name, shells))
    }

    pub fn load(name_or_path: &str, mol: &Molecule) -> Result<Basis> {
        Basis::build(mol, &BasisLibrary::load(name_or_path)?, true)
    }

    pub fn from_shells(name: &str, shells: Vec<Shell>) -> Basis {
        let mut offsets = Vec::with_capacity(shells.len());
        let mut n = 0;
        for s in &shells {
            offsets.push(n);
            n += s.n_functions();
        }
        Basis { name: name.to_string(), shells, offsets, n }
    }

    pub fn n_functions(&self) -> usize {
        self.n
    }

    /// `(shell, component)` of each basis function.
    pub fn function_map(&self) -> Vec<(usize, usize)> {
        let mut v = Vec::with_capacity(self.n);
        for (s, sh) in self.shells.iter().enumerate() {
            for c in 0..sh.n_functions() {
                v.push((s, c));
            }
        }
        v
    }

    /// Every shell carried by the orthogonal map `rot`.
    pub fn transformed(&self, rot: &[[f64; 3]; 3]) -> Basis {
        Basis::from_shells(&self.name, self.shells.iter().map(|s| s.transformed(rot)).collect())
    }

    /// Values of all basis functions at `r`.
    pub fn values_at(&self, r: [f64; 3]) -> Vec<f64> {
        let mut v = vec![0.0; self.n];
        for (s, &o) in self.shells.iter().zip(&self.offsets) {
            s.values_at(r, &mut v[o..o + s.n_functions()]);
        }
        v
    }

    pub fn function_parity(&self) -> Vec<[u8; 3]> {
        self.shells.iter().flat_map(|s| s.parity.iter().copied()).collect()
    }

    pub fn function_atom(&self) -> Vec<usize> {
        self.shells.iter().flat_map(|s| std::iter::repeat(s.atom).take(s.n_functions())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sp_and_exponent_notation() {
        let text = "****\nC 0\nSP 2 1.00\n 1.0D+00 0.5 0.25\n 2.0 0.5 0.75\n****\n";
        let lib = BasisLibrary::parse_g94("t", text).unwrap();
        let c = &lib.elements[&6];
        assert_eq!(c.len(), 2);
        assert_eq!(c[1].l, 1);
        assert_eq!(c[1].coefs, vec![0.25, 0.75]);
        assert!(BasisLibrary::parse_g94("t", "****\nC 0\nG 1 1.0\n1.0 1.0\n****\n").is_err());
        assert!(BasisLibrary::parse_g94("t", "****\nC 0\nS 1 1.0\n1.0\n****\n").is_err());
        assert!(BasisLibrary::parse_g94("t", "****\nC 0\nS 1 1.0\n-1.0 1.0\n****\n").is_err());
    }

    #[test]
    fn cc_pvtz_hydrogen_has_fourteen_functions() {
        let mol = Molecule::from_symbols(&[("H", [0.0; 3]), ("H", [0.0, 0.0, 1.4])], 0).unwrap();
        let b = Basis::load("cc-pVTZ", &mol).unwrap();
        assert_eq!(b.n_functions(), 28);
        let ls: Vec<usize> = b.shells.iter().filter(|s| s.atom == 0).map(|s| s.l).collect();
        assert_eq!(ls, vec![0, 0, 0, 1, 1, 2]);
        assert_eq!(Basis::load("cc-pvdz", &mol).unwrap().n_functions(), 10);
        let he = Molecule::from_symbols(&[("He", [0.0; 3])], 0).unwrap();
        assert!(Basis::load("cc-pvdz", &he).is_err());
    }

    #[test]
    fn empty_molecule_has_no_shells() {
        let mol = Molecule::new(vec![], 0).unwrap();
        assert_eq!(Basis::load("sto-3g", &mol).unwrap().n_functions(), 0);
    }

    #[test]
    fn solid_harmonics_are_harmonic() {
        // Laplacian of each S_lm vanishes: check coefficient identity on monomials
        for l in 0..=3usize {
            let comps = cart_components(l);
            for m in -(l as i64)..=l as i64 {
                let c = solid_harmonic(l, m);
                if l < 2 {
                    continue;
                }
                let lower = cart_components(l - 2);
                let mut lap = vec![0.0; lower.len()];
                for (k, e) in comps.iter().enumerate() {
                    for d in 0..3 {
                        if e[d] >= 2 {
                            let mut f = *e;
                            f[d] -= 2;
                            let j = lower.iter().position(|x| *x == f).unwrap();
                            lap[j] += c[k] * (e[d] * (e[d] - 1)) as f64;
                        }
                    }
                }
                assert!(lap.iter().all(|x| x.abs() < 1e-12), "l={l} m={m}");
            }
        }
    }
}
