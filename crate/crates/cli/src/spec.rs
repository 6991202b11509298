//! Run specification: a line-oriented `key = value` format with bracketed
//! sections. See `INPUT.md` for the grammar.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use anyhow::{anyhow, bail, Result};
use polariton::cavity::DseOneBody;
use polariton::eom::SpinSector;
use polariton::molecule::{atomic_number, Units};
use polariton::sym::PointGroup;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Task {
    Scf,
    Cc,
    Lambda,
    Density,
    Eom,
}

impl Task {
    fn parse(s: &str) -> Option<Task> {
        Some(match s {
            "scf" => Task::Scf,
            "cc" => Task::Cc,
            "lambda" => Task::Lambda,
            "density" => Task::Density,
            "eom" => Task::Eom,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Scf => "scf",
            Task::Cc => "cc",
            Task::Lambda => "lambda",
            Task::Density => "density",
            Task::Eom => "eom",
        }
    }

    fn requires(self) -> Option<Task> {
        match self {
            Task::Scf => None,
            Task::Cc => Some(Task::Scf),
            Task::Lambda | Task::Eom => Some(Task::Cc),
            Task::Density => Some(Task::Lambda),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Direction {
    Auto,
    Vector([f64; 3]),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CavitySpec {
    pub polarized: bool,
    pub k: [f64; 3],
    pub eps: Direction,
    pub eps_bar: Direction,
    pub omega: f64,
    pub lambda: f64,
    pub dse: DseOneBody,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Irreps {
    All,
    Names(Vec<String>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EomSpec {
    pub irreps: Irreps,
    pub nroots: usize,
    pub spin: SpinSector,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanVariable {
    Bond,
    Omega,
    LambdaCoupling,
    Theta,
}

impl ScanVariable {
    pub fn name(self) -> &'static str {
        match self {
            ScanVariable::Bond => "bond",
            ScanVariable::Omega => "omega",
            ScanVariable::LambdaCoupling => "lambda_coupling",
            ScanVariable::Theta => "theta",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanSpec {
    pub variable: ScanVariable,
    pub values: Vec<f64>,
    /// Zero-based atoms whose distance is scanned.
    pub atoms: (usize, usize),
    pub parallel: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpecIn {
    pub points: usize,
    pub margin: f64,
    /// Also compute the cavity-free density, the difference cube and Δρ.
    pub reference: bool,
    /// Write the density integrated along this axis (0, 1, 2) as a TSV.
    pub integrate_axis: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub title: String,
    pub basis: String,
    pub charge: i32,
    pub units: Units,
    /// Symbols and positions in `units`.
    pub geometry: Vec<(String, [f64; 3])>,
    /// `None` picks the largest group the molecule and cavity allow.
    pub symmetry: Option<PointGroup>,
    pub cavities: Vec<CavitySpec>,
    pub tasks: BTreeSet<Task>,
    /// Tasks added to satisfy dependencies.
    pub added_tasks: Vec<Task>,
    pub eom: EomSpec,
    pub scan: Option<ScanSpec>,
    pub grid: GridSpecIn,
    pub validate: bool,
    pub output: Option<PathBuf>,
    pub cc_tol: f64,
    pub max_iter: usize,
}

fn err(line: usize, msg: impl std::fmt::Display) -> anyhow::Error {
    anyhow!("line {line}: {msg}")
}

/// Key-value pairs of one section with the line each came from.
#[derive(Default)]
struct Section {
    name: String,
    line: usize,
    keys: BTreeMap<String, (usize, String)>,
    rows: Vec<(usize, String)>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.keys.remove(key)
    }

    fn finish(self) -> Result<()> {
        if let Some((k, (line, _))) = self.keys.into_iter().next() {
            return Err(err(line, format!("unknown key '{k}' in {}", section_title(&self.name))));
        }
        Ok(())
    }
}

fn section_title(name: &str) -> String {
    if name.is_empty() {
        "the top level".into()
    } else {
        format!("[{name}]")
    }
}

fn number(line: usize, key: &str, v: &str) -> Result<f64> {
    let x: f64 = v.trim().parse().map_err(|_| err(line, format!("{key}: '{v}' is not a number")))?;
    if !x.is_finite() {
        return Err(err(line, format!("{key}: value must be finite")));
    }
    Ok(x)
}

fn numbers(line: usize, key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| number(line, key, t))
        .collect()
}

fn vector(line: usize, key: &str, v: &str) -> Result<[f64; 3]> {
    let x = numbers(line, key, v)?;
    if x.len() != 3 {
        return Err(err(line, format!("{key}: expected three components")));
    }
    if x.iter().all(|c| *c == 0.0) {
        return Err(err(line, format!("{key}: zero vector")));
    }
    Ok([x[0], x[1], x[2]])
}

fn direction(line: usize, key: &str, v: &str) -> Result<Direction> {
    if v.trim().eq_ignore_ascii_case("auto") {
        Ok(Direction::Auto)
    } else {
        Ok(Direction::Vector(vector(line, key, v)?))
    }
}

fn boolean(line: usize, key: &str, v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(err(line, format!("{key}: expected true or false, got '{v}'"))),
    }
}

fn count(line: usize, key: &str, v: &str) -> Result<usize> {
    v.trim().parse().map_err(|_| err(line, format!("{key}: '{v}' is not a non-negative integer")))
}

/// Splits the text into sections; rows are kept for `[geometry]`.
fn sections(text: &str) -> Result<Vec<Section>> {
    let mut out = vec![Section::default()];
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let body = raw.split('#').next().unwrap().trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(line, "section header must end with ']'"))?
                .trim()
                .to_ascii_lowercase();
            if !["geometry", "cavity", "eom", "scan", "grid"].contains(&name.as_str()) {
                return Err(err(line, format!("unknown section [{name}]")));
            }
            if name != "cavity" && out.iter().any(|s| s.name == name) {
                return Err(err(line, format!("section [{name}] given twice")));
            }
            out.push(Section { name, line, ..Default::default() });
            continue;
        }
        let cur = out.last_mut().unwrap();
        match body.split_once('=') {
            Some((k, v)) => {
                let k = k.trim().to_ascii_lowercase();
                if k.is_empty() {
                    return Err(err(line, "missing key before '='"));
                }
                if let Some((first, _)) = cur.keys.get(&k) {
                    return Err(err(line, format!("key '{k}' already set on line {first}")));
                }
                cur.keys.insert(k, (line, v.trim().to_string()));
            }
            None if cur.name == "geometry" => cur.rows.push((line, body.to_string())),
            None => return Err(err(line, format!("expected 'key = value', found '{body}'"))),
        }
    }
    Ok(out)
}

fn linspace(line: usize, v: &str) -> Result<Vec<f64>> {
    let x = numbers(line, "range", v)?;
    if x.len() != 3 || x[2] < 1.0 || x[2].fract() != 0.0 {
        return Err(err(line, "range: expected 'start, stop, count' with an integer count ≥ 1"));
    }
    let n = x[2] as usize;
    if n == 1 {
        return Ok(vec![x[0]]);
    }
    Ok((0..n).map(|i| x[0] + (x[1] - x[0]) * i as f64 / (n - 1) as f64).collect())
}

impl RunSpec {
    pub fn parse(text: &str) -> Result<RunSpec> {
        let mut secs = sections(text)?;
        let mut top = secs.remove(0);
        let mut spec = RunSpec {
            title: String::new(),
            basis: String::new(),
            charge: 0,
            units: Units::Bohr,
            geometry: Vec::new(),
            symmetry: None,
            cavities: Vec::new(),
            tasks: BTreeSet::new(),
            added_tasks: Vec::new(),
            eom: EomSpec { irreps: Irreps::All, nroots: 3, spin: SpinSector::Singlet },
            scan: None,
            grid: GridSpecIn { points: 100, margin: 6.0, reference: true, integrate_axis: None },
            validate: false,
            output: None,
            cc_tol: 1e-10,
            max_iter: 200,
        };

        if let Some((_, v)) = top.take("title") {
            spec.title = v;
        }
        let (bline, basis) = top.take("basis").ok_or_else(|| anyhow!("line 1: missing 'basis = ...'"))?;
        if basis.is_empty() {
            return Err(err(bline, "basis: empty name"));
        }
        spec.basis = basis;
        if let Some((l, v)) = top.take("charge") {
            spec.charge = v.trim().parse().map_err(|_| err(l, format!("charge: '{v}' is not an integer")))?;
        }
        if let Some((l, v)) = top.take("symmetry") {
            spec.symmetry = match v.to_ascii_lowercase().as_str() {
                "auto" => None,
                _ => Some(PointGroup::from_name(&v).map_err(|e| err(l, e))?),
            };
        }
        let (tline, tasks) = top.take("tasks").unwrap_or((1, "scf, cc".into()));
        for t in tasks.split(',').map(|t| t.trim().to_ascii_lowercase()).filter(|t| !t.is_empty()) {
            let task = Task::parse(&t).ok_or_else(|| err(tline, format!("unknown task '{t}'")))?;
            spec.tasks.insert(task);
        }
        if spec.tasks.is_empty() {
            return Err(err(tline, "no tasks requested"));
        }
        let requested = spec.tasks.clone();
        for t in requested {
            let mut need = t.requires();
            while let Some(n) = need {
                if spec.tasks.insert(n) {
                    spec.added_tasks.push(n);
                }
                need = n.requires();
            }
        }
        spec.added_tasks.sort();
        if let Some((l, v)) = top.take("validate") {
            spec.validate = boolean(l, "validate", &v)?;
        }
        if let Some((_, v)) = top.take("output") {
            spec.output = Some(PathBuf::from(v));
        }
        if let Some((l, v)) = top.take("cc_tol") {
            spec.cc_tol = number(l, "cc_tol", &v)?;
            if spec.cc_tol <= 0.0 {
                return Err(err(l, "cc_tol must be positive"));
            }
        }
        if let Some((l, v)) = top.take("max_iter") {
            spec.max_iter = count(l, "max_iter", &v)?;
        }
        top.finish()?;

        let mut have_geometry = false;
        for mut s in secs {
            match s.name.as_str() {
                "geometry" => {
                    have_geometry = true;
                    if let Some((l, v)) = s.take("units") {
                        spec.units = Units::parse(&v).map_err(|e| err(l, e))?;
                    }
                    for (l, row) in std::mem::take(&mut s.rows) {
                        let f: Vec<&str> = row.split_whitespace().collect();
                        if f.len() != 4 {
                            return Err(err(l, "expected 'symbol x y z'"));
                        }
                        if atomic_number(f[0]).is_none() {
                            return Err(err(l, format!("unknown element '{}'", f[0])));
                        }
                        let mut p = [0.0; 3];
                        for k in 0..3 {
                            p[k] = number(l, "coordinate", f[k + 1])?;
                        }
                        spec.geometry.push((f[0].to_string(), p));
                    }
                    if spec.geometry.is_empty() {
                        return Err(err(s.line, "empty molecule: [geometry] lists no atoms"));
                    }
                    s.finish()?;
                }
                "cavity" => spec.cavities.push(parse_cavity(&mut s)?),
                "eom" => {
                    if let Some((l, v)) = s.take("irreps") {
                        spec.eom.irreps = if v.eq_ignore_ascii_case("all") {
                            Irreps::All
                        } else {
                            let names: Vec<String> =
                                v.split(',').map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect();
                            if names.is_empty() {
                                return Err(err(l, "irreps: empty list"));
                            }
                            Irreps::Names(names)
                        };
                    }
                    if let Some((l, v)) = s.take("nroots") {
                        spec.eom.nroots = count(l, "nroots", &v)?;
                        if spec.eom.nroots == 0 {
                            return Err(err(l, "nroots must be at least 1"));
                        }
                    }
                    if let Some((l, v)) = s.take("spin") {
                        spec.eom.spin = match v.to_ascii_lowercase().as_str() {
                            "singlet" => SpinSector::Singlet,
                            "triplet" => SpinSector::Triplet,
                            "any" => SpinSector::Any,
                            _ => return Err(err(l, format!("spin: expected singlet, triplet or any, got '{v}'"))),
                        };
                    }
                    s.finish()?;
                }
                "scan" => spec.scan = Some(parse_scan(&mut s)?),
                "grid" => {
                    if let Some((l, v)) = s.take("points") {
                        spec.grid.points = count(l, "points", &v)?;
                        if spec.grid.points < 2 {
                            return Err(err(l, "points must be at least 2"));
                        }
                    }
                    if let Some((l, v)) = s.take("margin") {
                        spec.grid.margin = number(l, "margin", &v)?;
                        if spec.grid.margin < 0.0 {
                            return Err(err(l, "margin must be non-negative"));
                        }
                    }
                    if let Some((l, v)) = s.take("reference") {
                        spec.grid.reference = boolean(l, "reference", &v)?;
                    }
                    if let Some((l, v)) = s.take("integrate_axis") {
                        spec.grid.integrate_axis = Some(match v.to_ascii_lowercase().as_str() {
                            "x" => 0,
                            "y" => 1,
                            "z" => 2,
                            _ => return Err(err(l, "integrate_axis: expected x, y or z")),
                        });
                    }
                    s.finish()?;
                }
                _ => unreachable!("sections are filtered while reading"),
            }
        }
        if !have_geometry {
            bail!("line 1: missing [geometry] section");
        }
        let dse: BTreeSet<String> = spec.cavities.iter().map(|c| format!("{:?}", c.dse)).collect();
        if dse.len() > 1 {
            return Err(err(spec.cavities[1].line, "all [cavity] sections must use the same dse form"));
        }
        if let Some(scan) = &spec.scan {
            let n = spec.geometry.len();
            if scan.variable == ScanVariable::Bond && (scan.atoms.0 >= n || scan.atoms.1 >= n) {
                bail!("line 1: scan atoms {} and {} not in a molecule of {n} atoms", scan.atoms.0 + 1, scan.atoms.1 + 1);
            }
            if scan.variable != ScanVariable::Bond && spec.cavities.is_empty() {
                bail!("line 1: a {} scan needs a [cavity] section", scan.variable.name());
            }
        }
        Ok(spec)
    }
}

fn parse_cavity(s: &mut Section) -> Result<CavitySpec> {
    let line = s.line;
    let need = |s: &mut Section, k: &str| s.take(k).ok_or_else(|| err(line, format!("[cavity] needs '{k} = ...'")));
    let polarized = match s.take("mode") {
        None => false,
        Some((l, v)) => match v.to_ascii_lowercase().as_str() {
            "unpolarized" => false,
            "polarized" | "linear" => true,
            _ => return Err(err(l, format!("mode: expected polarized or unpolarized, got '{v}'"))),
        },
    };
    let (kl, kv) = need(s, "k")?;
    let k = vector(kl, "k", &kv)?;
    let eps = match s.take("eps") {
        Some((l, v)) => direction(l, "eps", &v)?,
        None => Direction::Auto,
    };
    let eps_bar = match s.take("eps_bar") {
        Some((l, v)) => direction(l, "eps_bar", &v)?,
        None => Direction::Auto,
    };
    let (ol, ov) = need(s, "omega")?;
    let omega = number(ol, "omega", &ov)?;
    if omega <= 0.0 {
        return Err(err(ol, "omega must be positive"));
    }
    let (ll, lv) = need(s, "lambda")?;
    let lambda = number(ll, "lambda", &lv)?;
    if lambda < 0.0 {
        return Err(err(ll, "lambda must be non-negative"));
    }
    let dse = match s.take("dse") {
        None => DseOneBody::DipoleSquared,
        Some((l, v)) => match v.to_ascii_lowercase().as_str() {
            "dipole_squared" => DseOneBody::DipoleSquared,
            "second_moment" => DseOneBody::SecondMoment,
            _ => return Err(err(l, format!("dse: expected dipole_squared or second_moment, got '{v}'"))),
        },
    };
    let c = CavitySpec { polarized, k, eps, eps_bar, omega, lambda, dse, line };
    std::mem::take(s).finish()?;
    Ok(c)
}

fn parse_scan(s: &mut Section) -> Result<ScanSpec> {
    let line = s.line;
    let (vl, v) = s.take("variable").ok_or_else(|| err(line, "[scan] needs 'variable = ...'"))?;
    let variable = match v.to_ascii_lowercase().as_str() {
        "bond" => ScanVariable::Bond,
        "omega" => ScanVariable::Omega,
        "lambda_coupling" => ScanVariable::LambdaCoupling,
        "theta" => ScanVariable::Theta,
        _ => return Err(err(vl, format!("variable: expected bond, omega, lambda_coupling or theta, got '{v}'"))),
    };
    let values = match (s.take("values"), s.take("range")) {
        (Some((l, v)), None) => numbers(l, "values", &v)?,
        (None, Some((l, v))) => linspace(l, &v)?,
        (Some((l, _)), Some(_)) => return Err(err(l, "give either 'values' or 'range', not both")),
        (None, None) => return Err(err(line, "[scan] needs 'values = ...' or 'range = start, stop, count'")),
    };
    if values.is_empty() {
        return Err(err(line, "scan grid is empty"));
    }
    let bad = match variable {
        ScanVariable::Bond => values.iter().find(|&&x| x <= 0.0).map(|_| "bond lengths must be positive"),
        ScanVariable::Omega => values.iter().find(|&&x| x <= 0.0).map(|_| "omega values must be positive"),
        ScanVariable::LambdaCoupling => values.iter().find(|&&x| x < 0.0).map(|_| "lambda values must be non-negative"),
        ScanVariable::Theta => None,
    };
    if let Some(msg) = bad {
        return Err(err(line, msg));
    }
    let atoms = match s.take("atoms") {
        None => (0, 1),
        Some((l, v)) => {
            let a: Vec<usize> = v
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<usize>().map_err(|_| err(l, format!("atoms: '{t}' is not an atom number"))))
                .collect::<Result<_>>()?;
            if a.len() != 2 || a[0] == 0 || a[1] == 0 || a[0] == a[1] {
                return Err(err(l, "atoms: expected two different 1-based atom numbers"));
            }
            (a[0] - 1, a[1] - 1)
        }
    };
    let parallel = match s.take("parallel") {
        None => false,
        Some((l, v)) => boolean(l, "parallel", &v)?,
    };
    std::mem::take(s).finish()?;
    Ok(ScanSpec { variable, values, atoms, parallel })
}

#[cfg(test)]
mod tests {
    use super::*;

    const H2: &str = "basis = sto-3g\n[geometry]\nH 0 0 -0.7\nH 0 0 0.7\n";

    #[test]
    fn minimal_spec_defaults() {
        let s = RunSpec::parse(H2).unwrap();
        assert_eq!(s.basis, "sto-3g");
        assert_eq!(s.geometry.len(), 2);
        assert_eq!(s.tasks, [Task::Scf, Task::Cc].into_iter().collect());
        assert!(s.cavities.is_empty());
        assert!(s.scan.is_none());
        assert_eq!(s.grid.points, 100);
    }

    #[test]
    fn prerequisites_are_added() {
        let s = RunSpec::parse(&format!("tasks = eom, density\n{H2}")).unwrap();
        assert_eq!(s.tasks.len(), 5);
        assert_eq!(s.added_tasks, vec![Task::Scf, Task::Cc, Task::Lambda]);
    }

    #[test]
    fn full_spec() {
        let text = "\
title = dissociation # comment
basis = cc-pvtz
tasks = scf, cc, eom
symmetry = D2h
[geometry]
units = angstrom
H 0 0 0
H 0 0 0.74
[cavity]
mode = unpolarized
k = 0 0 1
eps = 1, 0, 0
omega = 0.466
lambda = 0.05
[eom]
irreps = B1u, B2u
nroots = 2
spin = triplet
[scan]
variable = bond
range = 0.7, 7.0, 80
[grid]
points = 120
integrate_axis = y
";
        let s = RunSpec::parse(text).unwrap();
        assert_eq!(s.title, "dissociation");
        assert_eq!(s.units, Units::Angstrom);
        assert_eq!(s.symmetry, Some(PointGroup::D2h));
        let c = &s.cavities[0];
        assert!(!c.polarized);
        assert_eq!(c.eps, Direction::Vector([1.0, 0.0, 0.0]));
        assert_eq!(c.eps_bar, Direction::Auto);
        assert_eq!(s.eom.irreps, Irreps::Names(vec!["B1u".into(), "B2u".into()]));
        assert_eq!(s.eom.spin, SpinSector::Triplet);
        let scan = s.scan.unwrap();
        assert_eq!(scan.values.len(), 80);
        assert!((scan.values[9] - 1.41772152).abs() < 1e-8);
        assert!((scan.values[79] - 7.0).abs() < 1e-12);
        assert_eq!(s.grid.integrate_axis, Some(1));
    }

    fn line_of(text: &str) -> String {
        RunSpec::parse(text).unwrap_err().to_string()
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert!(line_of("basis = sto-3g\n[geometry]\nH 0 0\n").starts_with("line 3:"));
        assert!(line_of("basis = sto-3g\nfoo = 1\n[geometry]\nH 0 0 0\n").starts_with("line 2:"));
        assert!(line_of("basis = sto-3g\nbasis = x\n").starts_with("line 2:"));
        assert!(line_of("basis = sto-3g\n[bogus]\n").starts_with("line 2:"));
        assert!(line_of(&format!("{H2}[cavity]\nk = 0 0 1\nomega = -1\nlambda = 0\n")).starts_with("line 7:"));
        assert!(line_of(&format!("{H2}[cavity]\nk = 0 0 1\nomega = 0.5\nlambda = -0.1\n")).starts_with("line 8:"));
        assert!(line_of(&format!("{H2}[scan]\nvariable = bond\nvariable = omega\n")).starts_with("line 7:"));
        assert!(line_of(&format!("{H2}[scan]\nvariable = speed\nvalues = 1\n")).starts_with("line 6:"));
        assert!(line_of(&format!("tasks = scf, fly\n{H2}")).starts_with("line 1:"));
    }

    #[test]
    fn empty_molecule_is_rejected() {
        assert!(line_of("basis = sto-3g\n[geometry]\nunits = bohr\n").contains("empty molecule"));
        assert!(line_of("basis = sto-3g\n").contains("[geometry]"));
    }

    #[test]
    fn scans_need_what_they_vary() {
        assert!(RunSpec::parse(&format!("{H2}[scan]\nvariable = omega\nvalues = 0.4\n")).is_err());
        assert!(RunSpec::parse(&format!("{H2}[scan]\nvariable = bond\nvalues = 1, 2\natoms = 1, 3\n")).is_err());
        assert!(RunSpec::parse(&format!("{H2}[scan]\nvariable = bond\nvalues = 1, -2\n")).is_err());
        assert!(RunSpec::parse(&format!("{H2}[scan]\nvariable = bond\nvalues = 1\nrange = 1, 2, 3\n")).is_err());
    }
}
