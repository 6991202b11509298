//! Pipeline for one run specification: per-point SCF → CC → Λ → density → EOM,
//! scans with root tracking, and the output tables.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;

use polariton::basis::BasisLibrary;
use polariton::cavity::{CavityModeSet, ModePair};
use polariton::cc::{solve, CcOptions, CcResult};
use polariton::density::{ao_density, delta_rho, density_on_grid, write_cube, DensityGrid, GridSpec};
use polariton::eom::{solve_roots, track, EomOptions, EomState};
use polariton::lambda::{densities, solve_lambda, Densities, Recorded};
use polariton::mo::MoSystem;
use polariton::molecule::{cross, dist, dot, norm, normalized, Molecule};
use polariton::oracle::{build_hamiltonian, diagonalize, OracleModel, PhotonCap, PolaritonBasis};
use polariton::scf::{ScfOptions, ScfResult};
use polariton::sym::PointGroup;
use polariton::symmetry::detect_group;
use polariton::system::{SymmetryMode, System, SystemOptions};

use crate::spec::{CavitySpec, Direction, Irreps, RunSpec, ScanVariable, Task};

pub const HARTREE_TO_EV: f64 = 27.211386245988;

/// Atoms closer than this (bohr) are treated as coincident.
const MIN_DISTANCE: f64 = 0.1;

/// Photon cap of the oracle cross-check.
const VALIDATE_CAP: u8 = 4;

pub struct RunOptions {
    pub out: PathBuf,
    pub validate: bool,
}

/// Ground-state and response results of one scan point.
struct PointData {
    group: PointGroup,
    scf: f64,
    cc: Option<f64>,
    lambda: Option<(f64, Densities)>,
    delta_rho: Option<(f64, f64)>,
    states: Vec<EomState>,
    checks: Vec<(String, String, f64, f64)>,
}

struct Point {
    value: Option<f64>,
    data: std::result::Result<PointData, String>,
    log: Vec<String>,
}

pub struct Summary {
    pub points: usize,
    pub failed: usize,
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
}

fn molecule_at(spec: &RunSpec, value: Option<f64>) -> Result<Molecule> {
    let s = spec.units.to_bohr();
    let mut pos: Vec<[f64; 3]> = spec.geometry.iter().map(|(_, p)| [p[0] * s, p[1] * s, p[2] * s]).collect();
    if let (Some(scan), Some(v)) = (&spec.scan, value) {
        if scan.variable == ScanVariable::Bond {
            let (i, j) = scan.atoms;
            let mid: Vec<f64> = (0..3).map(|k| 0.5 * (pos[i][k] + pos[j][k])).collect();
            let d = [pos[j][0] - pos[i][0], pos[j][1] - pos[i][1], pos[j][2] - pos[i][2]];
            if norm(d) < 1e-12 {
                bail!("atoms {} and {} coincide; the bond direction is undefined", i + 1, j + 1);
            }
            let u = normalized(d);
            for k in 0..3 {
                pos[i][k] = mid[k] - 0.5 * v * s * u[k];
                pos[j][k] = mid[k] + 0.5 * v * s * u[k];
            }
        }
    }
    for a in 0..pos.len() {
        for b in 0..a {
            if dist(pos[a], pos[b]) < MIN_DISTANCE {
                bail!("atoms {} and {} are closer than {MIN_DISTANCE} bohr", b + 1, a + 1);
            }
        }
    }
    let atoms: Vec<(&str, [f64; 3])> = spec.geometry.iter().zip(&pos).map(|((sym, _), p)| (sym.as_str(), *p)).collect();
    Ok(Molecule::from_symbols(&atoms, spec.charge)?)
}

/// Highest-symmetry axis of the bare molecule, or its SCF dipole when it has none.
fn auto_axis(mol: &Molecule, lib: &BasisLibrary, log: &mut Vec<String>) -> Result<[f64; 3]> {
    let ga = detect_group(mol, &CavityModeSet::empty());
    if matches!(ga.group, PointGroup::C2 | PointGroup::C2v | PointGroup::C2h | PointGroup::D2 | PointGroup::D2h) {
        log.push(format!("auto_polarization source=principal_axis group={}", ga.group));
        return Ok(ga.frame[2]);
    }
    let sys = System::new(mol, &CavityModeSet::empty(), lib, &SystemOptions::default())?;
    let scf = sys.scf(&ScfOptions::default())?;
    let nuc = sys.mol.nuclear_dipole([0.0; 3]);
    let mu = [nuc[0] - scf.r_expect[0], nuc[1] - scf.r_expect[1], nuc[2] - scf.r_expect[2]];
    if norm(mu) < 1e-6 {
        bail!("auto polarization: {} molecule without a unique axis or dipole; give eps explicitly", ga.group);
    }
    let f = sys.assignment.frame;
    let lab = [0, 1, 2].map(|k| f[0][k] * mu[0] + f[1][k] * mu[1] + f[2][k] * mu[2]);
    log.push("auto_polarization source=dipole".to_string());
    Ok(normalized(lab))
}

fn resolve_pair(c: &CavitySpec, omega: f64, lambda: f64, axis: &mut dyn FnMut() -> Result<[f64; 3]>) -> Result<ModePair> {
    let k = normalized(c.k);
    let eps = match c.eps {
        Direction::Vector(v) => v,
        Direction::Auto => {
            let a = axis()?;
            let p = [a[0] - dot(a, k) * k[0], a[1] - dot(a, k) * k[1], a[2] - dot(a, k) * k[2]];
            if norm(p) > 1e-6 {
                p
            } else {
                // axis along k: any transverse direction is equivalent
                let t = if k[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
                cross(k, cross(t, k))
            }
        }
    };
    let pair = if c.polarized {
        ModePair::linear(omega, lambda, k, eps)?
    } else {
        ModePair::unpolarized(omega, lambda, k, eps)?
    };
    if let Direction::Vector(b) = c.eps_bar {
        let b = normalized(b);
        if (dot(b, pair.eps_bar) - 1.0).abs() > 1e-8 {
            bail!("line {}: eps_bar must equal k × eps = {:?}", c.line, pair.eps_bar);
        }
    }
    Ok(pair)
}

fn cavity_at(spec: &RunSpec, mol: &Molecule, lib: &BasisLibrary, value: Option<f64>, log: &mut Vec<String>) -> Result<CavityModeSet> {
    let var = spec.scan.as_ref().map(|s| s.variable);
    let mut cached: Option<[f64; 3]> = None;
    let mut pairs = Vec::new();
    for c in &spec.cavities {
        let omega = if var == Some(ScanVariable::Omega) { value.unwrap() } else { c.omega };
        let lambda = if var == Some(ScanVariable::LambdaCoupling) { value.unwrap() } else { c.lambda };
        let mut axis = || -> Result<[f64; 3]> {
            if cached.is_none() {
                cached = Some(auto_axis(mol, lib, log)?);
            }
            Ok(cached.unwrap())
        };
        let mut pair = resolve_pair(c, omega, lambda, &mut axis)?;
        if c.eps == Direction::Auto {
            log.push(format!("auto_polarization eps={:.6},{:.6},{:.6}", pair.eps[0], pair.eps[1], pair.eps[2]));
        }
        if var == Some(ScanVariable::Theta) {
            pair = pair.rotated(value.unwrap());
        }
        pairs.push(pair);
    }
    if pairs.is_empty() {
        return Ok(CavityModeSet::empty());
    }
    let dse = spec.cavities[0].dse;
    Ok(CavityModeSet::new(pairs)?.with_dse(dse))
}

/// Builds the system, lowering the point group when rotated polarizations leave the axes.
fn build_system(spec: &RunSpec, mol: &Molecule, cav: &CavityModeSet, lib: &BasisLibrary, log: &mut Vec<String>) -> Result<System> {
    let align = spec.scan.as_ref().map(|s| s.variable) != Some(ScanVariable::Theta);
    let opts = |symmetry| SystemOptions { symmetry, align_polarizations: align, ..Default::default() };
    if let Some(g) = spec.symmetry {
        return Ok(System::new(mol, cav, lib, &opts(SymmetryMode::Force(g)))?);
    }
    match System::new(mol, cav, lib, &opts(SymmetryMode::Auto)) {
        Ok(s) => Ok(s),
        Err(polariton::Error::Symmetry(first)) => {
            for g in [PointGroup::D2, PointGroup::C2v, PointGroup::C2h, PointGroup::C2, PointGroup::Cs, PointGroup::Ci, PointGroup::C1] {
                if let Ok(s) = System::new(mol, cav, lib, &opts(SymmetryMode::Force(g))) {
                    log.push(format!("symmetry lowered_to={g} reason=\"{first}\""));
                    return Ok(s);
                }
            }
            Err(anyhow!(first))
        }
        Err(e) => Err(e.into()),
    }
}

struct Correlated {
    scf: ScfResult,
    mo: MoSystem,
    cc: Option<CcResult>,
    rec: Option<Recorded>,
    dens: Option<(f64, Densities)>,
}

fn correlated(sys: &System, spec: &RunSpec, upto: Task, log: &mut Vec<String>, tag: &str) -> Result<Correlated> {
    let scf = sys.scf(&ScfOptions::default())?;
    log.push(format!("{tag}scf energy={:.12} group={}", scf.energy, sys.group()));
    let mo = MoSystem::new(sys, &scf)?;
    let mut out = Correlated { scf, mo, cc: None, rec: None, dens: None };
    if upto < Task::Cc {
        return Ok(out);
    }
    let opts = CcOptions { tol: spec.cc_tol, max_iter: spec.max_iter, ..Default::default() };
    let h = out.mo.qed_ham();
    let cc = solve(&out.mo, &h, None, &opts)?;
    log.push(format!("{tag}cc energy={:.12} iterations={} residual={:.3e}", cc.e_total, cc.trace.len(), cc.max_residual));
    let rec = Recorded::new(&out.mo, &h, &cc.amps);
    if upto >= Task::Lambda {
        let l = solve_lambda(&out.mo, &rec, &opts)?;
        let d = densities(&out.mo, &rec, &l.lam);
        log.push(format!(
            "{tag}lambda functional={:.12} iterations={} trace={:.10}",
            l.functional,
            l.trace.len(),
            d.trace()
        ));
        out.dens = Some((l.functional, d));
    }
    out.cc = Some(cc);
    out.rec = Some(rec);
    Ok(out)
}

fn suffix(spec: &RunSpec, index: usize) -> String {
    if spec.scan.is_some() {
        format!("_{index:03}")
    } else {
        String::new()
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn cube(path: &Path, grid: &DensityGrid, mol: &Molecule, comment: &str) -> Result<()> {
    let mut buf = Vec::new();
    write_cube(&mut buf, grid, mol, comment)?;
    write_file(path, &buf)
}

fn density_outputs(
    spec: &RunSpec,
    opts: &RunOptions,
    index: usize,
    sys: &System,
    lib: &BasisLibrary,
    main: &Correlated,
    log: &mut Vec<String>,
) -> Result<Option<(f64, f64)>> {
    let mol = sys.input_molecule();
    let grid = GridSpec::bounding_box(&mol, spec.grid.margin, spec.grid.points)?;
    let rho_of = |c: &Correlated, s: &System| -> Result<DensityGrid> {
        let gamma = &c.dens.as_ref().unwrap().1.symmetrized();
        Ok(density_on_grid(s, &ao_density(&c.scf.c, gamma)?, &grid)?)
    };
    let rho = rho_of(main, sys)?;
    let sfx = suffix(spec, index);
    let n = rho.integrate();
    log.push(format!("density integral={n:.8} points={}", spec.grid.points));
    cube(&opts.out.join(format!("density{sfx}.cube")), &rho, &mol, &format!("{} density", spec.title))?;
    if let Some(axis) = spec.grid.integrate_axis {
        let (plane, [na, nb]) = rho.integrate_axis(axis)?;
        let keep: Vec<usize> = (0..3).filter(|&a| a != axis).collect();
        let mut t = String::from("u\tv\trho\n");
        for p in 0..na {
            for q in 0..nb {
                let r = grid.point(
                    if keep[0] == 0 { p } else { 0 },
                    if keep[0] == 1 { p } else if keep[1] == 1 { q } else { 0 },
                    if keep[1] == 2 { q } else { 0 },
                );
                writeln!(t, "{:.6}\t{:.6}\t{:.9e}", r[keep[0]], r[keep[1]], plane[p * nb + q]).unwrap();
            }
        }
        write_file(&opts.out.join(format!("density_2d{sfx}.tsv")), t.as_bytes())?;
    }
    if !spec.grid.reference {
        return Ok(None);
    }
    let mut rlog = Vec::new();
    let bare = build_system(spec, &sys.input_molecule(), &CavityModeSet::empty(), lib, &mut rlog)?;
    let reference = correlated(&bare, spec, Task::Lambda, &mut rlog, "reference_")?;
    log.extend(rlog);
    let rho_ref = rho_of(&reference, &bare)?;
    cube(&opts.out.join(format!("reference{sfx}.cube")), &rho_ref, &mol, &format!("{} cavity-free density", spec.title))?;
    let diff = rho.difference(&rho_ref)?;
    cube(&opts.out.join(format!("difference{sfx}.cube")), &diff, &mol, &format!("{} cavity minus cavity-free", spec.title))?;
    let dr = delta_rho(&rho, &rho_ref)?;
    log.push(format!("delta_rho value={dr:.9e}"));
    Ok(Some((dr, n)))
}

fn validate(sys: &System, c: &Correlated, states: &[EomState], log: &mut Vec<String>) -> Vec<(String, String, f64, f64)> {
    let mut out = Vec::new();
    let model = match OracleModel::new(sys, &c.scf) {
        Ok(m) => m,
        Err(e) => {
            log.push(format!("validate skipped reason=\"{e}\""));
            return out;
        }
    };
    let group = sys.group();
    let mut irreps: Vec<u8> = vec![0];
    for s in states {
        if !irreps.contains(&s.irrep.id) {
            irreps.push(s.irrep.id);
        }
    }
    for g in irreps {
        let basis = match PolaritonBasis::new(&model, &PhotonCap::per_mode(VALIDATE_CAP), Some(g)) {
            Ok(b) => b,
            Err(e) => {
                log.push(format!("validate skipped irrep={} reason=\"{e}\"", group.irrep(g as usize).name()));
                continue;
            }
        };
        let levels = diagonalize(&build_hamiltonian(&model, &basis), basis.len()).0;
        let nearest = |e: f64| levels.iter().copied().min_by(|a, b| (a - e).abs().total_cmp(&(b - e).abs())).unwrap_or(f64::NAN);
        let name = group.irrep(g as usize).name().to_string();
        if g == 0 {
            if let Some(cc) = &c.cc {
                out.push(("CC".into(), name.clone(), cc.e_total, levels[0]));
            }
        }
        for (k, s) in states.iter().enumerate().filter(|(_, s)| s.irrep.id == g) {
            out.push((format!("root{}", k + 1), name.clone(), s.total_energy, nearest(s.total_energy)));
        }
    }
    for (state, irrep, e, f) in &out {
        log.push(format!("validate state={state} irrep={irrep} method={e:.12} oracle={f:.12} diff={:.3e}", e - f));
    }
    out
}

fn run_point(spec: &RunSpec, opts: &RunOptions, lib: &BasisLibrary, index: usize, value: Option<f64>) -> Point {
    let mut log = Vec::new();
    let data = point_data(spec, opts, lib, index, value, &mut log).map_err(|e| format!("{e:#}"));
    if let Err(e) = &data {
        log.push(format!("failed reason=\"{e}\""));
    }
    Point { value, data, log }
}

fn point_data(spec: &RunSpec, opts: &RunOptions, lib: &BasisLibrary, index: usize, value: Option<f64>, log: &mut Vec<String>) -> Result<PointData> {
    let mol = molecule_at(spec, value)?;
    let cav = cavity_at(spec, &mol, lib, value, log)?;
    let sys = build_system(spec, &mol, &cav, lib, log)?;
    let upto = *spec.tasks.iter().filter(|t| **t != Task::Eom).max().unwrap_or(&Task::Scf);
    let upto = if spec.tasks.contains(&Task::Eom) { upto.max(Task::Cc) } else { upto };
    let c = correlated(&sys, spec, upto, log, "")?;
    let group = sys.group();
    let mut data = PointData {
        group,
        scf: c.scf.energy,
        cc: c.cc.as_ref().map(|r| r.e_total),
        lambda: None,
        delta_rho: None,
        states: Vec::new(),
        checks: Vec::new(),
    };
    if spec.tasks.contains(&Task::Density) {
        data.delta_rho = density_outputs(spec, opts, index, &sys, lib, &c, log)?;
    }
    if spec.tasks.contains(&Task::Eom) {
        let ids: Vec<u8> = match &spec.eom.irreps {
            Irreps::All => (0..group.order() as u8).collect(),
            Irreps::Names(names) => names
                .iter()
                .map(|n| group.irrep_by_name(n).map(|i| i.id).map_err(|_| anyhow!("irrep '{n}' not in {group}")))
                .collect::<Result<_>>()?,
        };
        let eo = EomOptions { nroots: spec.eom.nroots, spin: spec.eom.spin, ..Default::default() };
        let e0 = c.cc.as_ref().unwrap().e_total;
        data.states = solve_roots(&c.mo, c.rec.as_ref().unwrap(), &ids, e0, &eo)?;
        for s in &data.states {
            log.push(format!(
                "eom irrep={} energy={:.12} excitation={:.12} label=\"{}\" converged={}",
                s.irrep.name(),
                s.total_energy,
                s.excitation_energy,
                s.label,
                s.converged
            ));
        }
    }
    if opts.validate {
        data.checks = validate(&sys, &c, &data.states, log);
    }
    data.lambda = c.dens;
    Ok(data)
}

/// Stable track ids for EOM states across scan points.
fn assign_tracks(points: &[Point]) -> Vec<Vec<usize>> {
    let mut ids: Vec<Vec<usize>> = Vec::with_capacity(points.len());
    let mut last: Vec<(usize, EomState)> = Vec::new();
    let mut next_id = 1;
    for p in points {
        let states = match &p.data {
            Ok(d) => &d.states,
            Err(_) => {
                ids.push(Vec::new());
                continue;
            }
        };
        let prev: Vec<EomState> = last.iter().map(|(_, s)| s.clone()).collect();
        let map = track(&prev, states);
        let mut here = vec![0; states.len()];
        for (t, j) in map.iter().enumerate() {
            if let Some(j) = j {
                here[*j] = last[t].0;
                last[t].1 = states[*j].clone();
            }
        }
        for (j, id) in here.iter_mut().enumerate() {
            if *id == 0 {
                *id = next_id;
                next_id += 1;
                last.push((*id, states[j].clone()));
            }
        }
        ids.push(here);
    }
    ids
}

fn fmt_value(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.8}"))
}

fn clean(s: &str) -> String {
    s.replace(['\t', '\n'], " ")
}

fn results_table(points: &[Point], ids: &[Vec<usize>]) -> String {
    let mut t = String::from(
        "point\tvalue\tgroup\tstate\tirrep\tlabel\tenergy_eh\tenergy_ev\texcitation_eh\texcitation_ev\telectronic\tphotonic\tpolaritonic\tstatus\n",
    );
    for (i, p) in points.iter().enumerate() {
        let v = fmt_value(p.value);
        let d = match &p.data {
            Ok(d) => d,
            Err(e) => {
                writeln!(t, "{i}\t{v}\t-\t-\t-\t-\t-\t-\t-\t-\t-\t-\t-\tfailed: {}", clean(e)).unwrap();
                continue;
            }
        };
        let g0 = d.group.irrep(0).name();
        writeln!(t, "{i}\t{v}\t{}\tSCF\t{g0}\t-\t{:.9}\t{:.6}\t-\t-\t-\t-\t-\tok", d.group, d.scf, d.scf * HARTREE_TO_EV).unwrap();
        if let Some(e) = d.cc {
            writeln!(t, "{i}\t{v}\t{}\tCC\t{g0}\t|{g0}, 0⟩\t{e:.9}\t{:.6}\t0.000000000\t0.000000\t-\t-\t-\tok", d.group, e * HARTREE_TO_EV)
                .unwrap();
        }
        let mut order: Vec<usize> = (0..d.states.len()).collect();
        order.sort_by_key(|&j| ids[i][j]);
        for j in order {
            let s = &d.states[j];
            writeln!(
                t,
                "{i}\t{v}\t{}\tS{}\t{}\t{}\t{:.9}\t{:.6}\t{:.9}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}",
                d.group,
                ids[i][j],
                s.irrep.name(),
                s.label,
                s.total_energy,
                s.total_energy * HARTREE_TO_EV,
                s.excitation_energy,
                s.excitation_energy * HARTREE_TO_EV,
                s.weights.electronic,
                s.weights.photonic(),
                if s.polaritonic { "yes" } else { "no" },
                if s.converged { "ok" } else { "unconverged" }
            )
            .unwrap();
        }
    }
    t
}

fn properties_table(points: &[Point], n_modes: usize) -> String {
    let mut t = String::from("point\tvalue\tfunctional_eh\ttrace");
    for m in 1..=n_modes {
        write!(t, "\tphotons_{m}").unwrap();
    }
    for m in 1..=n_modes {
        write!(t, "\tdisplacement_{m}").unwrap();
    }
    t.push_str("\tdelta_rho\tdensity_integral\n");
    let dash = |n: usize| vec!["-"; n].join("\t");
    for (i, p) in points.iter().enumerate() {
        write!(t, "{i}\t{}", fmt_value(p.value)).unwrap();
        match p.data.as_ref().ok().and_then(|d| d.lambda.as_ref().map(|l| (l, d.delta_rho))) {
            Some(((f, d), dr)) => {
                write!(t, "\t{f:.9}\t{:.9}", d.trace()).unwrap();
                for x in d.photon_number.iter().chain(&d.displacement) {
                    write!(t, "\t{x:.9e}").unwrap();
                }
                match dr {
                    Some((dr, n)) => writeln!(t, "\t{dr:.9e}\t{n:.9}").unwrap(),
                    None => writeln!(t, "\t-\t-").unwrap(),
                }
            }
            None => writeln!(t, "\t{}", dash(4 + 2 * n_modes)).unwrap(),
        }
    }
    t
}

/// Minimum gap between every pair of tracked states of one irrep, and how often they swap order.
fn crossings_table(points: &[Point], ids: &[Vec<usize>]) -> String {
    let mut t = String::from("irrep\tstate_a\tstate_b\tmin_gap_eh\tmin_gap_ev\tat_value\tcrossings\n");
    let mut series: std::collections::BTreeMap<usize, (String, Vec<Option<f64>>)> = Default::default();
    for (i, p) in points.iter().enumerate() {
        if let Ok(d) = &p.data {
            for (j, s) in d.states.iter().enumerate() {
                let e = series.entry(ids[i][j]).or_insert_with(|| (s.irrep.name().to_string(), vec![None; points.len()]));
                e.1[i] = Some(s.total_energy);
            }
        }
    }
    let keys: Vec<usize> = series.keys().copied().collect();
    for (x, &a) in keys.iter().enumerate() {
        for &b in &keys[x + 1..] {
            let (ia, ea) = &series[&a];
            let (ib, eb) = &series[&b];
            if ia != ib {
                continue;
            }
            let mut min: Option<(f64, usize)> = None;
            let mut last_sign = 0.0;
            let mut swaps = 0;
            for i in 0..points.len() {
                if let (Some(p), Some(q)) = (ea[i], eb[i]) {
                    let d = p - q;
                    if min.is_none_or(|(m, _)| d.abs() < m) {
                        min = Some((d.abs(), i));
                    }
                    if last_sign != 0.0 && d.signum() != last_sign {
                        swaps += 1;
                    }
                    last_sign = d.signum();
                }
            }
            if let Some((gap, at)) = min {
                writeln!(
                    t,
                    "{ia}\tS{a}\tS{b}\t{gap:.9}\t{:.6}\t{}\t{swaps}",
                    gap * HARTREE_TO_EV,
                    fmt_value(points[at].value)
                )
                .unwrap();
            }
        }
    }
    t
}

fn validation_table(points: &[Point]) -> String {
    let mut t = String::from("point\tvalue\tstate\tirrep\tmethod_eh\toracle_eh\tdifference_eh\n");
    for (i, p) in points.iter().enumerate() {
        if let Ok(d) = &p.data {
            for (state, irrep, e, f) in &d.checks {
                writeln!(t, "{i}\t{}\t{state}\t{irrep}\t{e:.9}\t{f:.9}\t{:.3e}", fmt_value(p.value), e - f).unwrap();
            }
        }
    }
    t
}

pub fn run(spec: &RunSpec, opts: &RunOptions) -> Result<Summary> {
    fs::create_dir_all(&opts.out).with_context(|| format!("creating {}", opts.out.display()))?;
    let lib = BasisLibrary::load(&spec.basis)?;
    let values: Vec<Option<f64>> = match &spec.scan {
        Some(s) => s.values.iter().map(|&v| Some(v)).collect(),
        None => vec![None],
    };
    let parallel = spec.scan.as_ref().is_some_and(|s| s.parallel);
    let job = |(i, v): (usize, &Option<f64>)| {
        log::info!("point {i}{}", v.map_or(String::new(), |x| format!(" value {x}")));
        run_point(spec, opts, &lib, i, *v)
    };
    let points: Vec<Point> = if parallel {
        values.par_iter().enumerate().map(job).collect()
    } else {
        values.iter().enumerate().map(job).collect()
    };
    let ids = assign_tracks(&points);

    let mut files = Vec::new();
    let mut put = |name: &str, text: String| -> Result<()> {
        let path = opts.out.join(name);
        write_file(&path, text.as_bytes())?;
        files.push(path);
        Ok(())
    };
    put("results.tsv", results_table(&points, &ids))?;
    if spec.tasks.contains(&Task::Lambda) {
        let nm = spec.cavities.len() * 2;
        let nm = points
            .iter()
            .find_map(|p| p.data.as_ref().ok().and_then(|d| d.lambda.as_ref().map(|l| l.1.photon_number.len())))
            .unwrap_or(nm);
        put("properties.tsv", properties_table(&points, nm))?;
    }
    if spec.tasks.contains(&Task::Eom) && points.len() > 1 {
        put("crossings.tsv", crossings_table(&points, &ids))?;
    }
    if opts.validate {
        put("validation.tsv", validation_table(&points))?;
    }

    let mut log = String::new();
    writeln!(log, "title=\"{}\" basis={} tasks={}", spec.title, spec.basis, spec.tasks.iter().map(|t| t.name()).collect::<Vec<_>>().join(",")).unwrap();
    if !spec.added_tasks.is_empty() {
        let added: Vec<&str> = spec.added_tasks.iter().map(|t| t.name()).collect();
        writeln!(log, "prerequisites added={}", added.join(",")).unwrap();
    }
    if let Some(s) = &spec.scan {
        writeln!(log, "scan variable={} points={} parallel={}", s.variable.name(), s.values.len(), s.parallel).unwrap();
    }
    for (i, p) in points.iter().enumerate() {
        for line in &p.log {
            writeln!(log, "point={i} value={} {line}", fmt_value(p.value)).unwrap();
        }
    }
    put("run.log", log)?;

    let failed = points.iter().filter(|p| p.data.is_err()).count();
    let mut lines = Vec::new();
    if spec.scan.is_none() {
        if let Ok(d) = &points[0].data {
            lines.push(format!("SCF  {:.9} Eh  {:.6} eV", d.scf, d.scf * HARTREE_TO_EV));
            if let Some(e) = d.cc {
                lines.push(format!("CC   {e:.9} Eh  {:.6} eV", e * HARTREE_TO_EV));
            }
            for s in &d.states {
                lines.push(format!("{:<5}{:.9} Eh  ΔE {:.6} eV  {}", s.irrep.name(), s.total_energy, s.excitation_energy * HARTREE_TO_EV, s.label));
            }
            if let Some((dr, _)) = d.delta_rho {
                lines.push(format!("Δρ   {dr:.6e} e"));
            }
        }
    }
    for (i, p) in points.iter().enumerate() {
        if let Err(e) = &p.data {
            lines.push(format!("point {i} failed: {e}"));
        }
    }
    Ok(Summary { points: points.len(), failed, files, lines })
}
