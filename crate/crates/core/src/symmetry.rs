//! Point-group detection for a molecule inside a cavity, the canonical frame,
//! and symmetry-adapted AO combinations.

use nalgebra::{DMatrix, Matrix3, SymmetricEigen};

use crate::basis::Basis;
use crate::cavity::CavityModeSet;
use crate::error::{Error, Result};
use crate::molecule::{cross, dot, mat_vec, norm, normalized, Molecule};
use crate::sym::group::character_of_parity;
use crate::sym::PointGroup;

/// Tolerance on atom images, bohr.
pub const ATOM_TOL: f64 = 1e-6;
const VEC_TOL: f64 = 1e-6;

/// Sign operations other than the identity, in a fixed order.
const SIGN_OPS: [[i8; 3]; 7] = [
    [-1, -1, 1],
    [-1, 1, -1],
    [1, -1, -1],
    [-1, -1, -1],
    [1, 1, -1],
    [1, -1, 1],
    [-1, 1, 1],
];

#[derive(Clone, Debug, PartialEq)]
pub struct GroupAssignment {
    pub group: PointGroup,
    /// Rows are the canonical axes expressed in input coordinates.
    pub frame: [[f64; 3]; 3],
    /// Center of nuclear charge in input coordinates.
    pub origin: [f64; 3],
    /// Orbit class of each atom.
    pub orbits: Vec<usize>,
    /// For each group operation (in [`PointGroup::operations`] order), the image of each atom.
    pub atom_maps: Vec<Vec<usize>>,
}

fn apply(op: [i8; 3], c: [f64; 3]) -> [f64; 3] {
    [op[0] as f64 * c[0], op[1] as f64 * c[1], op[2] as f64 * c[2]]
}

fn close(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
    (0..3).all(|k| (a[k] - b[k]).abs() < tol)
}

/// Image atom of each atom under `op` (coordinates already in the frame), if the op is a symmetry.
fn atom_map(z: &[u32], coords: &[[f64; 3]], op: [i8; 3]) -> Option<Vec<usize>> {
    let mut map = Vec::with_capacity(coords.len());
    for (i, c) in coords.iter().enumerate() {
        let img = apply(op, *c);
        let j = (0..coords.len()).find(|&j| z[j] == z[i] && close(coords[j], img, ATOM_TOL))?;
        map.push(j);
    }
    Some(map)
}

fn cavity_ok(cav: &CavityModeSet, frame: &[[f64; 3]; 3], op: [i8; 3]) -> bool {
    let fixed = |v: [f64; 3]| {
        let c = mat_vec(frame, v);
        let img = apply(op, c);
        close(img, c, VEC_TOL) || close(img, [-c[0], -c[1], -c[2]], VEC_TOL)
    };
    cav.pairs.iter().all(|p| fixed(p.k) && (!p.linear || fixed(p.eps)))
}

fn candidate_directions(coords: &[[f64; 3]], z: &[u32], cav: &CavityModeSet) -> Vec<[f64; 3]> {
    let mut base: Vec<[f64; 3]> = vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut inertia = Matrix3::zeros();
    for (c, &q) in coords.iter().zip(z) {
        let r2 = dot(*c, *c);
        for a in 0..3 {
            for b in 0..3 {
                inertia[(a, b)] += q as f64 * (if a == b { r2 } else { 0.0 } - c[a] * c[b]);
            }
        }
    }
    let eig = SymmetricEigen::new(inertia);
    for k in 0..3 {
        let v = eig.eigenvectors.column(k);
        base.push([v[0], v[1], v[2]]);
    }
    for p in &cav.pairs {
        base.extend([p.k, p.eps, p.eps_bar]);
    }
    let n_fixed = base.len();
    for c in coords {
        base.push(*c);
    }
    for i in 0..coords.len() {
        for j in 0..i {
            if z[i] == z[j] {
                let d = coords[i];
                let e = coords[j];
                base.push([d[0] - e[0], d[1] - e[1], d[2] - e[2]]);
                base.push([d[0] + e[0], d[1] + e[1], d[2] + e[2]]);
            }
        }
    }
    let mut dirs: Vec<[f64; 3]> = Vec::new();
    let push = |v: [f64; 3], dirs: &mut Vec<[f64; 3]>| {
        if norm(v) < 1e-6 {
            return;
        }
        let u = normalized(v);
        if !dirs.iter().any(|d| (dot(*d, u).abs() - 1.0).abs() < 1e-10) {
            dirs.push(u);
        }
    };
    for v in &base {
        push(*v, &mut dirs);
    }
    // normals to planes spanned by the fixed directions and molecule directions
    let snapshot = dirs.clone();
    for (i, a) in base[..n_fixed].iter().enumerate() {
        for b in base[..n_fixed].iter().skip(i + 1).chain(&snapshot) {
            push(cross(*a, *b), &mut dirs);
        }
    }
    dirs
}

fn classify(ops: &[[i8; 3]]) -> PointGroup {
    let has = |o: [i8; 3]| ops.contains(&o);
    let n_neg = |o: &[i8; 3]| o.iter().filter(|&&s| s < 0).count();
    match ops.len() {
        8 => PointGroup::D2h,
        4 => {
            if has([-1, -1, -1]) {
                PointGroup::C2h
            } else if ops.iter().all(|o| n_neg(o) % 2 == 0) {
                PointGroup::D2
            } else {
                PointGroup::C2v
            }
        }
        2 => {
            let o = ops.iter().find(|o| **o != [1, 1, 1]).unwrap();
            match n_neg(o) {
                3 => PointGroup::Ci,
                2 => PointGroup::C2,
                _ => PointGroup::Cs,
            }
        }
        _ => PointGroup::C1,
    }
}

/// Finds the largest abelian group of the molecule plus cavity and a canonical frame for it.
pub fn detect_group(mol: &Molecule, cav: &CavityModeSet) -> GroupAssignment {
    let origin = mol.center_of_charge();
    let z: Vec<u32> = mol.atoms.iter().map(|a| a.z).collect();
    let coords: Vec<[f64; 3]> = mol
        .atoms
        .iter()
        .map(|a| [a.pos[0] - origin[0], a.pos[1] - origin[1], a.pos[2] - origin[2]])
        .collect();
    let dirs = candidate_directions(&coords, &z, cav);

    let identity = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut best: ([[f64; 3]; 3], Vec<[i8; 3]>) = (identity, vec![[1, 1, 1]]);
    'outer: for (i, a) in dirs.iter().enumerate() {
        for b in &dirs[i + 1..] {
            let ab = dot(*a, *b);
            if ab.abs() > 1e-8 {
                continue;
            }
            let b = normalized([b[0] - ab * a[0], b[1] - ab * a[1], b[2] - ab * a[2]]);
            let frame = [*a, b, cross(*a, b)];
            let fc: Vec<[f64; 3]> = coords.iter().map(|c| mat_vec(&frame, *c)).collect();
            let mut ops = vec![[1, 1, 1]];
            for op in SIGN_OPS {
                if cavity_ok(cav, &frame, op) && atom_map(&z, &fc, op).is_some() {
                    ops.push(op);
                }
            }
            if ops.len() > best.1.len() {
                best = (frame, ops);
                if best.1.len() == 8 {
                    break 'outer;
                }
            }
        }
    }
    let (frame, ops) = best;
    let group = classify(&ops);
    let frame = canonical_frame(group, &ops, frame, &coords, cav);
    assignment(group, frame, origin, mol)
}

fn assignment(group: PointGroup, frame: [[f64; 3]; 3], origin: [f64; 3], mol: &Molecule) -> GroupAssignment {
    let z: Vec<u32> = mol.atoms.iter().map(|a| a.z).collect();
    let fc: Vec<[f64; 3]> = mol
        .atoms
        .iter()
        .map(|a| mat_vec(&frame, [a.pos[0] - origin[0], a.pos[1] - origin[1], a.pos[2] - origin[2]]))
        .collect();
    let atom_maps: Vec<Vec<usize>> = group
        .operations()
        .iter()
        .map(|op| atom_map(&z, &fc, *op).expect("operation verified during detection"))
        .collect();
    let n = mol.atoms.len();
    let mut orbits: Vec<usize> = (0..n).collect();
    for i in 0..n {
        let o = atom_maps.iter().map(|m| m[i]).min().unwrap_or(i);
        orbits[i] = orbits[o].min(o);
    }
    GroupAssignment { group, frame, origin, orbits, atom_maps }
}

/// Orders the frame axes by the usual conventions: principal C2 or mirror
/// normal on z, molecular axis on z for D2/D2h, planar molecules in yz.
fn canonical_frame(
    group: PointGroup,
    ops: &[[i8; 3]],
    frame: [[f64; 3]; 3],
    coords: &[[f64; 3]],
    cav: &CavityModeSet,
) -> [[f64; 3]; 3] {
    if matches!(group, PointGroup::C1 | PointGroup::Ci) {
        return [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    }
    let fc: Vec<[f64; 3]> = coords.iter().map(|c| mat_vec(&frame, *c)).collect();
    let flat = |a: usize| fc.iter().all(|c| c[a].abs() < ATOM_TOL);
    let on_axis = |a: usize| {
        fc.iter()
            .filter(|c| (0..3).filter(|&b| b != a).all(|b| c[b].abs() < ATOM_TOL))
            .count()
    };
    let axis_of = |pred: &dyn Fn(&[i8; 3]) -> bool| -> usize {
        let op = ops.iter().find(|o| pred(o)).unwrap();
        let want = if op.iter().filter(|&&s| s < 0).count() == 2 { 1 } else { -1 };
        (0..3).find(|&a| op[a] == want).unwrap()
    };
    let two_fold = |o: &[i8; 3]| o.iter().filter(|&&s| s < 0).count() == 2;
    let zax = match group {
        PointGroup::Cs => axis_of(&|o: &[i8; 3]| o.iter().filter(|&&s| s < 0).count() == 1),
        PointGroup::C2 | PointGroup::C2v | PointGroup::C2h => axis_of(&two_fold),
        _ => {
            let k0 = cav.pairs.first().map(|p| mat_vec(&frame, p.k));
            let score = |a: usize| {
                let along_k = k0.map(|k| (k[a].abs() > 1.0 - 1e-8) as usize).unwrap_or(0);
                (on_axis(a), along_k)
            };
            let mut best = 2;
            for a in [1, 0] {
                if score(a) > score(best) {
                    best = a;
                }
            }
            best
        }
    };
    let rest: Vec<usize> = (0..3).filter(|&a| a != zax).collect();
    let xax = if matches!(group, PointGroup::C2v | PointGroup::D2 | PointGroup::D2h)
        && flat(rest[1])
        && !flat(rest[0])
    {
        rest[1]
    } else {
        rest[0]
    };
    let yax = 3 - zax - xax;
    let mut f = [frame[xax], frame[yax], frame[zax]];
    if dot(cross(f[0], f[1]), f[2]) < 0.0 {
        f[0] = [-f[0][0], -f[0][1], -f[0][2]];
    }
    for row in &mut f {
        for x in row.iter_mut() {
            if x.abs() < 1e-15 {
                *x = 0.0;
            }
        }
    }
    f
}

impl GroupAssignment {
    pub fn molecule(&self, mol: &Molecule) -> Molecule {
        mol.transformed(&self.frame, self.origin)
    }

    pub fn cavity(&self, cav: &CavityModeSet) -> CavityModeSet {
        cav.transformed(&self.frame)
    }

    /// The same frame and origin with a subgroup whose operations are a subset of the current ones.
    pub fn descend(&self, target: PointGroup, mol: &Molecule) -> Result<GroupAssignment> {
        let ops = self.group.operations();
        if !target.operations().iter().all(|o| ops.contains(o)) {
            return Err(Error::Symmetry(format!("{target} is not a subgroup of {} in this frame", self.group)));
        }
        Ok(assignment(target, self.frame, self.origin, mol))
    }
}

/// Symmetry-adapted combinations of AOs, one orthonormal column block per irrep.
///
/// `basis` must be built on the canonical-frame molecule described by `ga`.
pub fn salcs(ga: &GroupAssignment, basis: &Basis) -> Result<Vec<DMatrix<f64>>> {
    let n = basis.n_functions();
    let group = ga.group;
    let h = group.order();
    // first shell of each atom
    let mut atom_first: Vec<Option<usize>> = vec![None; ga.orbits.len()];
    for (s, sh) in basis.shells.iter().enumerate() {
        if atom_first[sh.atom].is_none() {
            atom_first[sh.atom] = Some(s);
        }
    }
    let par = basis.function_parity();
    // image function and sign of each function under each operation
    let mut images = vec![vec![(0usize, 0.0f64); n]; h];
    for (g, op) in group.operations().iter().enumerate() {
        let mut mu = 0;
        for (s, sh) in basis.shells.iter().enumerate() {
            let a = sh.atom;
            let b = ga.atom_maps[g][a];
            let local = s - atom_first[a].unwrap();
            let t = atom_first[b].ok_or_else(|| Error::Symmetry("atom image carries no basis".into()))? + local;
            let tsh = basis.shells.get(t).filter(|x| x.atom == b && x.l == sh.l).ok_or_else(|| {
                Error::Symmetry("symmetry-equivalent atoms carry different basis sets".into())
            })?;
            for c in 0..sh.n_functions() {
                let sign = character_of_parity(par[mu], *op) as f64;
                images[g][mu] = (basis.offsets[t] + c, sign);
                debug_assert_eq!(tsh.parity[c], par[mu]);
                mu += 1;
            }
        }
    }
    let mut out = Vec::with_capacity(h);
    let mut total = 0;
    for irrep in 0..h {
        let mut cols: Vec<Vec<f64>> = Vec::new();
        for mu in 0..n {
            let mut v = vec![0.0; n];
            for g in 0..h {
                let (img, sign) = images[g][mu];
                v[img] += group.character(irrep, g) as f64 * sign;
            }
            for c in &cols {
                let p: f64 = c.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(c).for_each(|(x, y)| *x -= p * y);
            }
            let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if nv > 1e-8 {
                v.iter_mut().for_each(|x| *x /= nv);
                cols.push(v);
            }
        }
        total += cols.len();
        out.push(DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]));
    }
    if total != n {
        return Err(Error::Symmetry(format!("symmetry adaptation produced {total} functions for {n} AOs")));
    }
    Ok(out)
}
