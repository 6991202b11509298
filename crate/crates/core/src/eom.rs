//! EOM-CC excited states of the similarity-transformed Hamiltonian.
//!
//! The excitation manifold of the ground-state cluster operator is closed
//! under de-excitation, so `⟨μ|H̄ − E|ν⟩` equals the Jacobian `∂Ω_μ/∂t_ν` of
//! the amplitude equations. The sigma product is therefore one tangent sweep
//! over the tape recorded by [`Recorded`], seeded with `R` in the target
//! irrep. Roots come from a non-Hermitian Davidson solver with an Olsen
//! correction.

use nalgebra::{DMatrix, DVector};

use crate::ad::anti_both;
use crate::cc::{g2_index, g2_pairs, Amps};
use crate::error::{Error, Result};
use crate::lambda::Recorded;
use crate::mo::MoSystem;
use crate::sym::{irrep_product, BlockedTensor, Irrep, PointGroup};

/// Spin sector of the EOM solve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SpinSector {
    /// States even under `α ↔ β` (singlets for a closed-shell reference).
    #[default]
    Singlet,
    /// States odd under `α ↔ β` (`M_s = 0` triplets).
    Triplet,
    /// No spin restriction.
    Any,
}

#[derive(Clone, Debug)]
pub struct EomOptions {
    pub nroots: usize,
    /// Threshold on the residual norm of each root.
    pub tol: f64,
    /// Threshold on the change of each eigenvalue between iterations.
    pub energy_tol: f64,
    pub max_iter: usize,
    pub max_subspace: usize,
    /// Number of guess vectors; zero picks `max(2 nroots, nroots + 4)`.
    pub nguess: usize,
    pub spin: SpinSector,
}

impl Default for EomOptions {
    fn default() -> Self {
        EomOptions {
            nroots: 3,
            tol: 1e-7,
            energy_tol: 1e-10,
            max_iter: 100,
            max_subspace: 120,
            nguess: 0,
            spin: SpinSector::Singlet,
        }
    }
}

/// Fraction of `|R|²` per sector (the reference coefficient is excluded).
#[derive(Clone, Debug, PartialEq)]
pub struct SectorWeights {
    /// `t1`, `t2`: electronic excitation, no photon.
    pub electronic: f64,
    /// `γ_m`: ground electronic state with one photon in mode `m`.
    pub photon: Vec<f64>,
    /// `s1_m`, `s2_m`: electronic excitation with one photon in mode `m`.
    pub dressed: Vec<f64>,
    /// Bare two-photon states per pair `m <= n` (see [`g2_index`]).
    pub two_photon: Vec<f64>,
}

impl SectorWeights {
    /// Weight of all sectors holding at least one photon.
    pub fn photonic(&self) -> f64 {
        1.0 - self.electronic
    }

    pub fn total(&self) -> f64 {
        self.electronic
            + self.photon.iter().sum::<f64>()
            + self.dressed.iter().sum::<f64>()
            + self.two_photon.iter().sum::<f64>()
    }

    /// Weight of one photon in mode `m`, with or without electronic excitation.
    pub fn one_photon(&self, m: usize) -> f64 {
        self.photon[m] + self.dressed[m]
    }
}

/// Converged (or best available) right eigenvector of one root.
#[derive(Clone, Debug)]
pub struct EomState {
    pub irrep: Irrep,
    pub total_energy: f64,
    pub excitation_energy: f64,
    pub r0: f64,
    pub r: Amps<BlockedTensor>,
    pub weights: SectorWeights,
    /// Dominant ket `|Γ_E, Γ_photons⟩`.
    pub label: String,
    /// No sector above 0.8 weight.
    pub polaritonic: bool,
    pub residual: f64,
    pub converged: bool,
}

/// EOM problem for one target irrep around a recorded ground state.
pub struct EomProblem<'a> {
    mo: &'a MoSystem,
    rec: &'a Recorded,
    target: u8,
    like: Amps<BlockedTensor>,
    diag: Vec<f64>,
    flip: Option<(Vec<usize>, Vec<usize>)>,
    spin: SpinSector,
}

/// Index of the spin partner of every spin orbital in `map`.
fn partners(map: &[(usize, u8)]) -> Vec<usize> {
    map.iter().map(|&(p, s)| map.iter().position(|&(q, t)| q == p && t != s).expect("closed-shell spin pairs")).collect()
}

impl<'a> EomProblem<'a> {
    pub fn new(mo: &'a MoSystem, rec: &'a Recorded, target: u8, spin: SpinSector) -> EomProblem<'a> {
        let like = Amps::zeros(mo, target);
        let diag = Amps::denominators(mo, target).to_flat();
        let flip = (spin != SpinSector::Any).then(|| (partners(&mo.occ_map), partners(&mo.vir_map)));
        EomProblem { mo, rec, target, like, diag, flip, spin }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn like(&self) -> &Amps<BlockedTensor> {
        &self.like
    }

    /// `(H̄ − E) R` in the excitation manifold, with `⟨0|H̄|R⟩`.
    pub fn sigma_amps(&self, r: &Amps<BlockedTensor>) -> Result<(f64, Amps<BlockedTensor>)> {
        for (a, b) in r.fields().into_iter().zip(self.like.fields()) {
            if !a.same_layout(b) {
                return Err(Error::Symmetry(format!(
                    "R block transforms as irrep {} where {} is required",
                    a.target(),
                    b.target()
                )));
            }
        }
        Ok(self.rec.jvp(r))
    }

    /// Flat sigma product.
    pub fn sigma(&self, x: &[f64]) -> Vec<f64> {
        self.rec.jvp(&self.like.from_flat_like(x)).1.to_flat()
    }

    /// `α ↔ β` image of an amplitude vector.
    pub fn spin_flip(&self, a: &Amps<BlockedTensor>) -> Amps<BlockedTensor> {
        let (fo, fv) = match &self.flip {
            Some(f) => (f.0.clone(), f.1.clone()),
            None => (partners(&self.mo.occ_map), partners(&self.mo.vir_map)),
        };
        a.map(|t| {
            let src = t.clone();
            match t.rank() {
                2 => t.map_indexed(|x, _| src.get(&[fv[x[0]], fo[x[1]]])),
                4 => t.map_indexed(|x, _| src.get(&[fv[x[0]], fv[x[1]], fo[x[2]], fo[x[3]]])),
                _ => t.clone(),
            }
        })
    }

    /// Zeroes every amplitude that changes `M_s`.
    fn conserve_ms(&self, a: &Amps<BlockedTensor>) -> Amps<BlockedTensor> {
        let (o, v) = (&self.mo.occ_map, &self.mo.vir_map);
        a.map(|t| match t.rank() {
            2 => t.map_indexed(|x, y| if v[x[0]].1 == o[x[1]].1 { y } else { 0.0 }),
            4 => t.map_indexed(|x, y| {
                let up = v[x[0]].1 + v[x[1]].1;
                if up == o[x[2]].1 + o[x[3]].1 {
                    y
                } else {
                    0.0
                }
            }),
            _ => t.clone(),
        })
    }

    /// Projection onto antisymmetric, `M_s = 0` vectors in the requested spin sector.
    pub fn project(&self, x: &mut [f64]) {
        let mut a = self.conserve_ms(&self.like.from_flat_like(x));
        a.t2 = anti_both(&a.t2).scale(0.25);
        a.s2 = a.s2.iter().map(|t| anti_both(t).scale(0.25)).collect();
        let sign = match self.spin {
            SpinSector::Any => 0.0,
            SpinSector::Singlet => 1.0,
            SpinSector::Triplet => -1.0,
        };
        if sign != 0.0 {
            let f = self.spin_flip(&a);
            a = a.zip_map(&f, |u, v| u.add(&v.scale(sign)).scale(0.5));
        }
        x.copy_from_slice(&a.to_flat());
    }

    /// Guess vectors on the lowest diagonal entries of single excitations and
    /// bare photon states, projected onto the spin sector.
    pub fn guesses(&self, n: usize) -> Vec<Vec<f64>> {
        let nm = self.mo.n_modes();
        let mut offsets = Vec::new();
        let mut p = 0;
        for t in self.like.fields() {
            offsets.push(p);
            p += t.allowed_len();
        }
        let t1 = (offsets[0], self.like.t1.allowed_len());
        let mut cand: Vec<usize> = (t1.0..t1.0 + t1.1).collect();
        for m in 0..nm {
            let k = 2 + 2 * nm + m;
            cand.extend(offsets[k]..offsets[k] + self.like.g1[m].allowed_len());
        }
        for (s, _) in g2_pairs(nm).iter().enumerate() {
            let k = 2 + 3 * nm + s;
            cand.extend(offsets[k]..offsets[k] + self.like.g2[s].allowed_len());
        }
        let by_diag = |v: &mut Vec<usize>| v.sort_by(|&a, &b| self.diag[a].total_cmp(&self.diag[b]).then(a.cmp(&b)));
        by_diag(&mut cand);
        // remaining sectors only serve irreps without enough singles or photon states
        let primary: std::collections::HashSet<usize> = cand.iter().copied().collect();
        let mut rest: Vec<usize> = (0..self.dim()).filter(|i| !primary.contains(i)).collect();
        by_diag(&mut rest);
        let mut out: Vec<Vec<f64>> = Vec::new();
        for c in cand.into_iter().chain(rest) {
            if out.len() == n {
                break;
            }
            let mut v = vec![0.0; self.dim()];
            v[c] = 1.0;
            self.project(&mut v);
            if orthonormalize(&mut v, &out) {
                out.push(v);
            }
        }
        out
    }

    /// Sector weights with `t2`, `s2` counted once per unique amplitude and
    /// diagonal two-photon states with their `√2` normalization.
    pub fn weights(&self, r: &Amps<BlockedTensor>) -> SectorWeights {
        let nm = self.mo.n_modes();
        let n2 = |t: &BlockedTensor| t.norm2().powi(2);
        let electronic = n2(&r.t1) + 0.25 * n2(&r.t2);
        let photon: Vec<f64> = r.g1.iter().map(n2).collect();
        let dressed: Vec<f64> = (0..nm).map(|m| n2(&r.s1[m]) + 0.25 * n2(&r.s2[m])).collect();
        let two_photon: Vec<f64> =
            g2_pairs(nm).iter().map(|&(m, n)| n2(&r.g2[g2_index(m, n, nm)]) * if m == n { 2.0 } else { 1.0 }).collect();
        let tot = electronic + photon.iter().sum::<f64>() + dressed.iter().sum::<f64>() + two_photon.iter().sum::<f64>();
        let s = if tot > 0.0 { 1.0 / tot } else { 0.0 };
        let scale = |v: Vec<f64>| v.into_iter().map(|x| x * s).collect();
        SectorWeights { electronic: electronic * s, photon: scale(photon), dressed: scale(dressed), two_photon: scale(two_photon) }
    }

    /// Dominant ket label and polaritonic flag.
    pub fn characterize(&self, w: &SectorWeights) -> (String, bool) {
        let names = self.mo.group.irrep_names();
        let name = |id: u8| names[id as usize];
        let modes: Vec<u8> = self.mo.modes.iter().map(|m| m.irrep).collect();
        let mut kets: Vec<(f64, String)> = vec![(w.electronic, format!("|{}, 0⟩", name(self.target)))];
        for (m, &g) in modes.iter().enumerate() {
            kets.push((w.photon[m], format!("|{}, {}⟩", name(0), name(g))));
            kets.push((w.dressed[m], format!("|{}, {}⟩", name(self.target ^ g), name(g))));
        }
        for (k, (m, n)) in g2_pairs(modes.len()).into_iter().enumerate() {
            let ph = if m == n { format!("2{}", name(modes[m])) } else { format!("{}{}", name(modes[m]), name(modes[n])) };
            kets.push((w.two_photon[k], format!("|{}, {}⟩", name(0), ph)));
        }
        let best = kets.iter().max_by(|a, b| a.0.total_cmp(&b.0)).map(|k| k.1.clone()).unwrap_or_default();
        let mut coarse = vec![w.electronic, w.two_photon.iter().sum()];
        coarse.extend((0..modes.len()).map(|m| w.one_photon(m)));
        (best, coarse.iter().all(|&x| x <= 0.8))
    }

    /// Solves for the lowest roots of this irrep.
    pub fn solve(&self, opts: &EomOptions, e_ground: f64) -> Result<Vec<EomState>> {
        let nguess = if opts.nguess > 0 { opts.nguess } else { (2 * opts.nroots).max(opts.nroots + 4) };
        let guesses = self.guesses(nguess.min(self.dim()));
        if guesses.is_empty() {
            return Ok(Vec::new());
        }
        let nroots = opts.nroots.min(guesses.len());
        let sigma = |x: &[f64]| {
            let mut y = self.sigma(x);
            self.project(&mut y);
            y
        };
        let roots = davidson(&sigma, &self.diag, guesses, nroots, opts, |x| self.project(x))?;
        let irrep = self.mo.group.irrep(self.target as usize);
        Ok(roots
            .into_iter()
            .map(|root| {
                let r = self.like.from_flat_like(&root.vector);
                let r0 = if self.target == 0 && root.value.abs() > 1e-12 { self.rec.jvp(&r).0 / root.value } else { 0.0 };
                let weights = self.weights(&r);
                let (label, polaritonic) = self.characterize(&weights);
                EomState {
                    irrep,
                    total_energy: e_ground + root.value,
                    excitation_energy: root.value,
                    r0,
                    r,
                    weights,
                    label,
                    polaritonic,
                    residual: root.residual,
                    converged: root.converged,
                }
            })
            .collect())
    }
}

/// Solves the lowest `opts.nroots` roots in every irrep in `irreps`.
pub fn solve_roots(
    mo: &MoSystem,
    rec: &Recorded,
    irreps: &[u8],
    e_ground: f64,
    opts: &EomOptions,
) -> Result<Vec<EomState>> {
    let mut out = Vec::new();
    for &g in irreps {
        if (g as usize) >= mo.h {
            return Err(Error::Symmetry(format!("irrep {g} outside {}", mo.group)));
        }
        let p = EomProblem::new(mo, rec, g, opts.spin);
        out.extend(p.solve(opts, e_ground)?);
    }
    Ok(out)
}

/// Whether an electronic state of irrep `e` couples to the ground state of
/// irrep `ground` through one photon of irrep `mode`.
pub fn selection_rule(ground: Irrep, mode: Irrep, e: Irrep) -> Result<bool> {
    Ok(irrep_product(irrep_product(ground, mode)?, e)?.is_totally_symmetric())
}

/// Selection rule against the totally symmetric ground state of `group`.
pub fn couples(group: PointGroup, mode: Irrep, e: Irrep) -> Result<bool> {
    selection_rule(group.irrep(0), mode, e)
}

/// Maps each new state onto the previous state of largest overlap, same irrep only.
/// Returns, for every previous state, the index of its successor.
pub fn track(prev: &[EomState], next: &[EomState]) -> Vec<Option<usize>> {
    let mut cand: Vec<(f64, usize, usize)> = Vec::new();
    for (i, a) in prev.iter().enumerate() {
        let na = a.r.to_flat();
        let norm_a = na.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (j, b) in next.iter().enumerate() {
            if a.irrep != b.irrep || !a.r.t1.same_layout(&b.r.t1) {
                continue;
            }
            let nb = b.r.to_flat();
            let norm_b = nb.iter().map(|x| x * x).sum::<f64>().sqrt();
            let s: f64 = na.iter().zip(&nb).map(|(x, y)| x * y).sum();
            cand.push(((s / (norm_a * norm_b)).abs(), i, j));
        }
    }
    cand.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut out = vec![None; prev.len()];
    let mut used = vec![false; next.len()];
    for (_, i, j) in cand {
        if out[i].is_none() && !used[j] {
            out[i] = Some(j);
            used[j] = true;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Davidson

/// One root of the non-Hermitian Davidson solver.
#[derive(Clone, Debug)]
pub struct Root {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gram-Schmidt (twice) against an orthonormal set; normalizes and reports
/// whether a significant component survived.
fn orthonormalize(v: &mut [f64], basis: &[Vec<f64>]) -> bool {
    let n0 = dot(v, v).sqrt();
    if n0 == 0.0 {
        return false;
    }
    for _ in 0..2 {
        for b in basis {
            let c = dot(v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
    }
    let n = dot(v, v).sqrt();
    if n < 1e-6 * n0 || n < 1e-12 {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= n);
    true
}

/// Right eigenpairs of a small real matrix with the `k` lowest real parts.
/// Eigenvalues come from the Schur form; vectors by inverse iteration, with
/// clusters of nearly equal eigenvalues handled as a block.
pub fn small_eigen(g: &DMatrix<f64>, k: usize) -> Vec<(f64, DVector<f64>)> {
    let n = g.nrows();
    let mut ev: Vec<f64> = g.complex_eigenvalues().iter().map(|z| z.re).collect();
    ev.sort_by(f64::total_cmp);
    let scale = g.amax().max(1e-300);
    let mut out: Vec<(f64, DVector<f64>)> = Vec::new();
    let mut i = 0;
    while i < ev.len() && out.len() < k {
        let mut j = i + 1;
        while j < ev.len() && (ev[j] - ev[i]).abs() < 1e-9 * scale.max(1.0) {
            j += 1;
        }
        let theta = ev[i..j].iter().sum::<f64>() / (j - i) as f64;
        let shift = theta + 1e-10 * scale.max(1.0);
        let mut a = g.clone();
        for d in 0..n {
            a[(d, d)] -= shift;
        }
        let lu = a.lu();
        // block inverse iteration from deterministic starts
        let mut block: Vec<DVector<f64>> = (0..j - i)
            .map(|c| DVector::from_fn(n, |r, _| 1.0 / (1.0 + ((r * 7 + c * 13) % 17) as f64)))
            .collect();
        for _ in 0..4 {
            let mut next: Vec<DVector<f64>> = Vec::new();
            for v in &block {
                let mut y = lu.solve(v).unwrap_or_else(|| v.clone());
                for _ in 0..2 {
                    for u in next.iter().chain(out.iter().filter(|o| (o.0 - theta).abs() < 1e-9 * scale.max(1.0)).map(|o| &o.1)) {
                        let c = y.dot(u);
                        y.axpy(-c, u, 1.0);
                    }
                }
                let nrm = y.norm();
                if nrm > 0.0 {
                    y /= nrm;
                }
                next.push(y);
            }
            block = next;
        }
        for v in block {
            if out.len() < k {
                let value = (&v.transpose() * g * &v)[(0, 0)];
                out.push((if j - i == 1 { value } else { theta }, v));
            }
        }
        i = j;
    }
    out
}

/// Lowest `nroots` eigenpairs of a non-symmetric operator given by `sigma`,
/// preconditioned by its diagonal estimate `diag`. `project` is applied to
/// every new correction vector.
pub fn davidson(
    sigma: &dyn Fn(&[f64]) -> Vec<f64>,
    diag: &[f64],
    guesses: Vec<Vec<f64>>,
    nroots: usize,
    opts: &EomOptions,
    project: impl Fn(&mut [f64]),
) -> Result<Vec<Root>> {
    let n = diag.len();
    let mut v: Vec<Vec<f64>> = Vec::new();
    for mut g in guesses {
        if orthonormalize(&mut g, &v) {
            v.push(g);
        }
    }
    if v.len() < nroots {
        return Err(Error::Input(format!("only {} independent guess vectors for {nroots} roots", v.len())));
    }
    let mut w: Vec<Vec<f64>> = v.iter().map(|x| sigma(x)).collect();
    let mut prev: Vec<f64> = vec![f64::NAN; nroots];
    let mut roots: Vec<Root> = Vec::new();
    for iter in 1..=opts.max_iter {
        let k = v.len();
        let g = DMatrix::from_fn(k, k, |i, j| dot(&v[i], &w[j]));
        let pairs = small_eigen(&g, nroots);
        roots.clear();
        let mut corrections = Vec::new();
        for (r, (theta, y)) in pairs.iter().enumerate() {
            let mut x = vec![0.0; n];
            let mut ax = vec![0.0; n];
            for c in 0..k {
                x.iter_mut().zip(&v[c]).for_each(|(a, b)| *a += y[c] * b);
                ax.iter_mut().zip(&w[c]).for_each(|(a, b)| *a += y[c] * b);
            }
            let res: Vec<f64> = ax.iter().zip(&x).map(|(a, b)| a - theta * b).collect();
            let rnorm = dot(&res, &res).sqrt();
            let de = (theta - prev[r]).abs();
            let converged = rnorm < opts.tol && (de < opts.energy_tol || rnorm < 1e-3 * opts.tol);
            if !converged {
                // Olsen correction
                let pre = |i: usize| {
                    let d = diag[i] - theta;
                    if d.abs() < 1e-4 {
                        1e-4f64.copysign(d)
                    } else {
                        d
                    }
                };
                let dr: Vec<f64> = (0..n).map(|i| res[i] / pre(i)).collect();
                let dx: Vec<f64> = (0..n).map(|i| x[i] / pre(i)).collect();
                let den = dot(&x, &dx);
                let eps = if den.abs() > 1e-14 { dot(&x, &dr) / den } else { 0.0 };
                let mut t: Vec<f64> = (0..n).map(|i| eps * dx[i] - dr[i]).collect();
                project(&mut t);
                corrections.push((t, res));
            }
            roots.push(Root { value: *theta, vector: x, residual: rnorm, converged });
        }
        prev = roots.iter().map(|r| r.value).collect();
        log::info!(
            "davidson {iter:3} dim {k:4} max|r| = {:.3e} values {:?}",
            roots.iter().map(|r| r.residual).fold(0.0, f64::max),
            roots.iter().map(|r| r.value).collect::<Vec<_>>()
        );
        if roots.iter().all(|r| r.converged) {
            return Ok(roots);
        }
        if k + corrections.len() > opts.max_subspace {
            // collapse onto the current Ritz vectors
            let mut nv: Vec<Vec<f64>> = Vec::new();
            let mut nw: Vec<Vec<f64>> = Vec::new();
            for (_, y) in &pairs {
                let mut x = vec![0.0; n];
                let mut ax = vec![0.0; n];
                for c in 0..k {
                    x.iter_mut().zip(&v[c]).for_each(|(a, b)| *a += y[c] * b);
                    ax.iter_mut().zip(&w[c]).for_each(|(a, b)| *a += y[c] * b);
                }
                // orthonormalize x and apply the same combination to ax
                let mut xo = x.clone();
                let mut axo = ax.clone();
                for _ in 0..2 {
                    for (b, wb) in nv.iter().zip(&nw) {
                        let c = dot(&xo, b);
                        xo.iter_mut().zip(b).for_each(|(p, q)| *p -= c * q);
                        axo.iter_mut().zip(wb).for_each(|(p, q)| *p -= c * q);
                    }
                }
                let nrm = dot(&xo, &xo).sqrt();
                if nrm > 1e-8 {
                    xo.iter_mut().for_each(|p| *p /= nrm);
                    axo.iter_mut().for_each(|p| *p /= nrm);
                    nv.push(xo);
                    nw.push(axo);
                }
            }
            v = nv;
            w = nw;
        }
        let mut added = 0;
        for (mut t, _) in corrections.clone() {
            if orthonormalize(&mut t, &v) {
                w.push(sigma(&t));
                v.push(t);
                added += 1;
            }
        }
        if added == 0 {
            // subspace collapse: fall back to raw residuals
            for (_, mut res) in corrections {
                project(&mut res);
                if orthonormalize(&mut res, &v) {
                    w.push(sigma(&res));
                    v.push(res);
                    added += 1;
                }
            }
        }
        if added == 0 {
            log::warn!("davidson stalled at iteration {iter}");
            return Ok(roots);
        }
    }
    log::warn!("davidson reached {} iterations", opts.max_iter);
    Ok(roots)
}
