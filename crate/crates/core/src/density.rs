//! Real-space densities on uniform grids, the Δρ metric and cube files.
//!
//! Grids are laid out in the input frame of the molecule. Points are mapped
//! into the canonical frame of the [`System`] before the basis is evaluated,
//! so runs whose symmetry detection picked different frames share one grid.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::molecule::{mat_vec, Atom, Molecule};
use crate::system::System;

/// Uniform grid: point `(i, j, k)` sits at `origin + i·axes[0] + j·axes[1] + k·axes[2]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub origin: [f64; 3],
    /// Step vectors (bohr).
    pub axes: [[f64; 3]; 3],
    pub counts: [usize; 3],
}

impl GridSpec {
    /// Axis-aligned box around the atoms of `mol`, widened by `margin` on
    /// every side, with `points` points along each axis.
    pub fn bounding_box(mol: &Molecule, margin: f64, points: usize) -> Result<GridSpec> {
        if mol.atoms.is_empty() {
            return Err(Error::Input("grid requested for an empty molecule".into()));
        }
        if points < 2 {
            return Err(Error::Input(format!("grid needs at least 2 points per axis, got {points}")));
        }
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for a in &mol.atoms {
            for k in 0..3 {
                lo[k] = lo[k].min(a.pos[k] - margin);
                hi[k] = hi[k].max(a.pos[k] + margin);
            }
        }
        let mut axes = [[0.0; 3]; 3];
        for k in 0..3 {
            axes[k][k] = (hi[k] - lo[k]) / (points - 1) as f64;
        }
        Ok(GridSpec { origin: lo, axes, counts: [points; 3] })
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        let mut p = self.origin;
        for (n, ax) in [i, j, k].iter().zip(&self.axes) {
            for c in 0..3 {
                p[c] += *n as f64 * ax[c];
            }
        }
        p
    }

    /// Volume of one grid cell.
    pub fn cell_volume(&self) -> f64 {
        let [a, b, c] = self.axes;
        crate::molecule::dot(a, crate::molecule::cross(b, c)).abs()
    }

    /// Trapezoid weight of point `(i, j, k)`.
    pub fn weight(&self, i: usize, j: usize, k: usize) -> f64 {
        let end = |n: usize, count: usize| if n == 0 || n + 1 == count { 0.5 } else { 1.0 };
        self.cell_volume() * end(i, self.counts[0]) * end(j, self.counts[1]) * end(k, self.counts[2])
    }

    fn same(&self, o: &GridSpec) -> bool {
        let close = |a: &[f64; 3], b: &[f64; 3]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-10);
        self.counts == o.counts && close(&self.origin, &o.origin) && (0..3).all(|k| close(&self.axes[k], &o.axes[k]))
    }
}

/// Scalar field on a [`GridSpec`], stored with the last index fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityGrid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl DensityGrid {
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        let [_, n1, n2] = self.spec.counts;
        (i * n1 + j) * n2 + k
    }

    pub fn value(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    /// Trapezoid integral over the box.
    pub fn integrate(&self) -> f64 {
        self.weighted_sum(|v| v)
    }

    fn weighted_sum(&self, f: impl Fn(f64) -> f64 + Sync) -> f64 {
        let [n0, n1, n2] = self.spec.counts;
        (0..n0)
            .into_par_iter()
            .map(|i| {
                let mut s = 0.0;
                for j in 0..n1 {
                    for k in 0..n2 {
                        s += self.spec.weight(i, j, k) * f(self.value(i, j, k));
                    }
                }
                s
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum()
    }

    /// Pointwise `self - o` on an identical grid.
    pub fn difference(&self, o: &DensityGrid) -> Result<DensityGrid> {
        self.check_same(o)?;
        let values = self.values.iter().zip(&o.values).map(|(a, b)| a - b).collect();
        Ok(DensityGrid { spec: self.spec.clone(), values })
    }

    fn check_same(&self, o: &DensityGrid) -> Result<()> {
        if !self.spec.same(&o.spec) {
            return Err(Error::Shape("density grids differ in origin, spacing or point counts".into()));
        }
        Ok(())
    }

    /// Trapezoid integral along `axis`; the remaining two axes keep their order.
    pub fn integrate_axis(&self, axis: usize) -> Result<(Vec<f64>, [usize; 2])> {
        if axis > 2 {
            return Err(Error::Input(format!("axis {axis} out of range")));
        }
        let c = self.spec.counts;
        let keep: Vec<usize> = (0..3).filter(|&a| a != axis).collect();
        let (na, nb) = (c[keep[0]], c[keep[1]]);
        let [a, b, d] = self.spec.axes;
        let step = [a, b, d][axis];
        let h = crate::molecule::norm(step);
        let mut out = vec![0.0; na * nb];
        for (x, o) in out.iter_mut().enumerate() {
            let (p, q) = (x / nb, x % nb);
            for n in 0..c[axis] {
                let mut idx = [0; 3];
                idx[axis] = n;
                idx[keep[0]] = p;
                idx[keep[1]] = q;
                let w = if n == 0 || n + 1 == c[axis] { 0.5 } else { 1.0 };
                *o += w * h * self.value(idx[0], idx[1], idx[2]);
            }
        }
        Ok((out, [na, nb]))
    }
}

/// `Δρ = Σ_i w_i |a_i − b_i|`, the amount of electron density moved between the two fields.
pub fn delta_rho(a: &DensityGrid, b: &DensityGrid) -> Result<f64> {
    a.check_same(b)?;
    let [n0, n1, n2] = a.spec.counts;
    let parts: Vec<f64> = (0..n0)
        .into_par_iter()
        .map(|i| {
            let mut s = 0.0;
            for j in 0..n1 {
                for k in 0..n2 {
                    let x = a.index(i, j, k);
                    s += a.spec.weight(i, j, k) * (a.values[x] - b.values[x]).abs();
                }
            }
            s
        })
        .collect();
    Ok(parts.iter().sum())
}

/// AO density `C γ Cᵀ` from a spatial-MO one-particle density.
pub fn ao_density(c: &DMatrix<f64>, gamma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if gamma.nrows() != c.ncols() || gamma.ncols() != c.ncols() {
        return Err(Error::Shape(format!(
            "density is {}×{} but there are {} orbitals",
            gamma.nrows(),
            gamma.ncols(),
            c.ncols()
        )));
    }
    Ok(c * gamma * c.transpose())
}

/// `ρ(r) = Σ_μν φ_μ(r) P_μν φ_ν(r)` on `spec`, with `P` the AO density of
/// `sys` and the grid in the input frame of the molecule.
pub fn density_on_grid(sys: &System, p: &DMatrix<f64>, spec: &GridSpec) -> Result<DensityGrid> {
    let basis = &sys.basis;
    let n = basis.n_functions();
    if p.nrows() != n || p.ncols() != n {
        return Err(Error::Shape(format!("AO density is {}×{}, basis has {n} functions", p.nrows(), p.ncols())));
    }
    let frame = sys.assignment.frame;
    let origin = sys.assignment.origin;
    let [n0, n1, n2] = spec.counts;
    let slabs: Vec<Vec<f64>> = (0..n0)
        .into_par_iter()
        .map(|i| {
            let mut phi = vec![0.0; n];
            let mut out = Vec::with_capacity(n1 * n2);
            for j in 0..n1 {
                for k in 0..n2 {
                    let r = spec.point(i, j, k);
                    let rc = mat_vec(&frame, [r[0] - origin[0], r[1] - origin[1], r[2] - origin[2]]);
                    for (s, sh) in basis.shells.iter().enumerate() {
                        let o = basis.offsets[s];
                        sh.values_at(rc, &mut phi[o..o + sh.n_functions()]);
                    }
                    let mut rho = 0.0;
                    for mu in 0..n {
                        if phi[mu] == 0.0 {
                            continue;
                        }
                        let row: f64 = (0..n).map(|nu| p[(mu, nu)] * phi[nu]).sum();
                        rho += phi[mu] * row;
                    }
                    out.push(rho);
                }
            }
            out
        })
        .collect();
    let grid = DensityGrid { spec: spec.clone(), values: slabs.concat() };
    let electrons = p.component_mul(&sys.ints.one.s).sum();
    let integral = grid.integrate();
    if (integral - electrons).abs() > 0.01 * electrons.abs().max(1.0) {
        log::warn!("grid integrates to {integral:.6} electrons, expected {electrons:.6}; grid too coarse or box too small");
    }
    Ok(grid)
}

/// Formats like C's `%13.5E`.
fn sci(x: f64) -> String {
    if x == 0.0 {
        return format!("{:>13}", "0.00000E+00");
    }
    let s = format!("{x:.5E}");
    let (mant, exp) = s.split_once('E').unwrap();
    let e: i32 = exp.parse().unwrap();
    let sign = if e < 0 { '-' } else { '+' };
    format!("{:>13}", format!("{mant}E{sign}{:02}", e.abs()))
}

/// Writes a Gaussian cube file: two comment lines, the grid header, atom
/// records, then values with the last index fastest, six per line.
pub fn write_cube(w: &mut impl Write, grid: &DensityGrid, mol: &Molecule, comment: &str) -> Result<()> {
    if mol.atoms.is_empty() {
        return Err(Error::Input("cube file needs at least one atom".into()));
    }
    let s = &grid.spec;
    writeln!(w, "{}", comment.lines().next().unwrap_or(""))?;
    writeln!(w, "Total density, last index fastest")?;
    writeln!(w, "{:5}{:12.6}{:12.6}{:12.6}", mol.atoms.len(), s.origin[0], s.origin[1], s.origin[2])?;
    for k in 0..3 {
        let a = s.axes[k];
        writeln!(w, "{:5}{:12.6}{:12.6}{:12.6}", s.counts[k], a[0], a[1], a[2])?;
    }
    for a in &mol.atoms {
        writeln!(w, "{:5}{:12.6}{:12.6}{:12.6}{:12.6}", a.z, a.z as f64, a.pos[0], a.pos[1], a.pos[2])?;
    }
    let [n0, n1, n2] = s.counts;
    let mut line = String::new();
    for i in 0..n0 {
        for j in 0..n1 {
            for k in 0..n2 {
                line.push_str(&sci(grid.value(i, j, k)));
                if k % 6 == 5 || k + 1 == n2 {
                    writeln!(w, "{line}")?;
                    line.clear();
                }
            }
        }
    }
    Ok(())
}

/// Reads a cube file written by [`write_cube`] or another standard writer.
pub fn read_cube(r: impl BufRead) -> Result<(DensityGrid, Molecule)> {
    let mut lines = r.lines();
    let mut next = |what: &str| -> Result<String> {
        lines.next().ok_or_else(|| Error::Input(format!("cube file ends before {what}")))?.map_err(Error::from)
    };
    next("comments")?;
    next("comments")?;
    let nums = |line: &str, what: &str| -> Result<Vec<f64>> {
        line.split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| Error::Input(format!("bad number '{t}' in cube {what}"))))
            .collect()
    };
    let head = nums(&next("header")?, "header")?;
    if head.len() < 4 {
        return Err(Error::Input("cube header needs atom count and origin".into()));
    }
    let natoms = head[0].abs() as usize;
    let origin = [head[1], head[2], head[3]];
    let mut counts = [0usize; 3];
    let mut axes = [[0.0; 3]; 3];
    for k in 0..3 {
        let v = nums(&next("axes")?, "axis line")?;
        if v.len() < 4 || v[0] <= 0.0 {
            return Err(Error::Input("cube axis line needs a positive count and a vector in bohr".into()));
        }
        counts[k] = v[0] as usize;
        axes[k] = [v[1], v[2], v[3]];
    }
    let mut atoms = Vec::with_capacity(natoms);
    for _ in 0..natoms {
        let v = nums(&next("atoms")?, "atom record")?;
        if v.len() < 5 {
            return Err(Error::Input("cube atom record needs Z, charge and position".into()));
        }
        let z = v[0] as u32;
        let symbol = crate::molecule::element_symbol(z)
            .ok_or_else(|| Error::Input(format!("unknown atomic number {z} in cube")))?;
        atoms.push(Atom { symbol: symbol.to_string(), z, pos: [v[2], v[3], v[4]] });
    }
    let spec = GridSpec { origin, axes, counts };
    let mut values = Vec::with_capacity(spec.len());
    for line in lines {
        values.extend(nums(&line?, "values")?);
    }
    if values.len() != spec.len() {
        return Err(Error::Input(format!("cube holds {} values, header promises {}", values.len(), spec.len())));
    }
    let mol = Molecule { atoms, charge: 0, multiplicity: 1 };
    Ok((DensityGrid { spec, values }, mol))
}
