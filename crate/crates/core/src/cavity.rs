//! Cavity photon modes: polarization pairs, rotations and symmetry typing.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::integrals::{q_index, OneElectron};
use crate::molecule::{cross, dot, norm, normalized};
use crate::sym::{Irrep, PointGroup};

const ORTHO_TOL: f64 = 1e-12;

/// One cavity frequency with its two transverse polarizations.
///
/// A linearly polarized cavity keeps only the `ε` mode (`λ̄ = 0`).
#[derive(Clone, Debug, PartialEq)]
pub struct ModePair {
    pub omega: f64,
    pub lambda: f64,
    pub k: [f64; 3],
    pub eps: [f64; 3],
    pub eps_bar: [f64; 3],
    pub linear: bool,
}

impl ModePair {
    fn build(omega: f64, lambda: f64, k: [f64; 3], eps: [f64; 3], linear: bool) -> Result<ModePair> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::Input(format!("cavity frequency must be positive, got {omega}")));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::Input(format!("coupling strength must be non-negative, got {lambda}")));
        }
        if norm(k) < 1e-12 || norm(eps) < 1e-12 {
            return Err(Error::Input("cavity vectors must be non-zero".into()));
        }
        let k = normalized(k);
        let e = normalized(eps);
        let ke = dot(k, e);
        if ke.abs() > 1e-8 {
            return Err(Error::Input(format!("polarization not perpendicular to k (k·ε = {ke:.3e})")));
        }
        let eps = normalized([e[0] - ke * k[0], e[1] - ke * k[1], e[2] - ke * k[2]]);
        let eps_bar = cross(k, eps);
        Ok(ModePair { omega, lambda, k, eps, eps_bar, linear })
    }

    /// Unpolarized pair: modes along `ε` and `ε̄ = k × ε` with equal coupling.
    pub fn unpolarized(omega: f64, lambda: f64, k: [f64; 3], eps: [f64; 3]) -> Result<ModePair> {
        ModePair::build(omega, lambda, k, eps, false)
    }

    /// Linearly polarized along `ε`.
    pub fn linear(omega: f64, lambda: f64, k: [f64; 3], eps: [f64; 3]) -> Result<ModePair> {
        ModePair::build(omega, lambda, k, eps, true)
    }

    pub fn lambda_bar(&self) -> f64 {
        if self.linear {
            0.0
        } else {
            self.lambda
        }
    }

    fn check(&self) -> Result<()> {
        let v = [self.k, self.eps, self.eps_bar];
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot(v[i], v[j]) - want).abs() > ORTHO_TOL {
                    return Err(Error::Input("cavity vectors {k, ε, ε̄} are not orthonormal".into()));
                }
            }
        }
        Ok(())
    }

    /// `ε' = cosθ ε − sinθ ε̄`, `ε̄' = cosθ ε̄ + sinθ ε`.
    pub fn rotated(&self, theta: f64) -> ModePair {
        let (s, c) = theta.sin_cos();
        let mut p = self.clone();
        for k in 0..3 {
            p.eps[k] = c * self.eps[k] - s * self.eps_bar[k];
            p.eps_bar[k] = c * self.eps_bar[k] + s * self.eps[k];
        }
        p
    }
}

/// A single photon mode as seen by the correlated methods.
#[derive(Clone, Debug, PartialEq)]
pub struct Mode {
    pub pair: usize,
    pub omega: f64,
    pub lambda: f64,
    pub eps: [f64; 3],
    /// True for the `ε̄` member of a pair.
    pub bar: bool,
}

/// How the one-electron part of the dipole self-energy is formed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DseOneBody {
    /// `(ε·r) S⁻¹ (ε·r)`: the dipole operator squared inside the orbital space.
    #[default]
    DipoleSquared,
    /// Exact second-moment integrals `Σ ε_a ε_b Q_ab`.
    SecondMoment,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CavityModeSet {
    pub pairs: Vec<ModePair>,
    /// Per-mode irreps, filled by [`CavityModeSet::assign_irreps`].
    pub irreps: Option<Vec<Irrep>>,
    pub dse: DseOneBody,
}

impl CavityModeSet {
    pub fn new(pairs: Vec<ModePair>) -> Result<CavityModeSet> {
        let c = CavityModeSet { pairs, irreps: None, dse: DseOneBody::default() };
        c.validate()?;
        Ok(c)
    }

    pub fn empty() -> CavityModeSet {
        CavityModeSet::default()
    }

    pub fn validate(&self) -> Result<()> {
        self.pairs.iter().try_for_each(|p| p.check())
    }

    pub fn modes(&self) -> Vec<Mode> {
        let mut out = Vec::new();
        for (i, p) in self.pairs.iter().enumerate() {
            out.push(Mode { pair: i, omega: p.omega, lambda: p.lambda, eps: p.eps, bar: false });
            if !p.linear {
                out.push(Mode { pair: i, omega: p.omega, lambda: p.lambda, eps: p.eps_bar, bar: true });
            }
        }
        out
    }

    pub fn with_dse(mut self, dse: DseOneBody) -> CavityModeSet {
        self.dse = dse;
        self
    }

    pub fn n_modes(&self) -> usize {
        self.pairs.iter().map(|p| if p.linear { 1 } else { 2 }).sum()
    }

    pub fn rotate_polarizations(&self, theta: f64) -> CavityModeSet {
        CavityModeSet { pairs: self.pairs.iter().map(|p| p.rotated(theta)).collect(), irreps: None, dse: self.dse }
    }

    /// Applies `v -> R v` to every cavity vector.
    pub fn transformed(&self, rot: &[[f64; 3]; 3]) -> CavityModeSet {
        let mv = |v: [f64; 3]| [dot(rot[0], v), dot(rot[1], v), dot(rot[2], v)];
        let pairs = self
            .pairs
            .iter()
            .map(|p| ModePair { k: mv(p.k), eps: mv(p.eps), eps_bar: mv(p.eps_bar), ..p.clone() })
            .collect();
        CavityModeSet { pairs, irreps: None, dse: self.dse }
    }

    /// Rotates each unpolarized pair about `k` so that `ε` lies on the first
    /// Cartesian axis perpendicular to `k`. Returns the angles used.
    pub fn align_to_axes(&self) -> (CavityModeSet, Vec<f64>) {
        let mut thetas = Vec::with_capacity(self.pairs.len());
        let mut pairs = Vec::with_capacity(self.pairs.len());
        for p in &self.pairs {
            let mut theta = 0.0;
            if !p.linear {
                if let Some(a) = (0..3).find(|&a| p.k[a].abs() < 1e-8) {
                    theta = (-p.eps_bar[a]).atan2(p.eps[a]);
                }
            }
            let mut q = p.rotated(theta);
            for v in [&mut q.eps, &mut q.eps_bar] {
                for x in v.iter_mut() {
                    if x.abs() < 1e-14 {
                        *x = 0.0;
                    }
                }
            }
            pairs.push(q);
            thetas.push(theta);
        }
        (CavityModeSet { pairs, irreps: None, dse: self.dse }, thetas)
    }

    /// Irrep of `ε·r` for every mode, in a frame where the group operations
    /// are sign flips of the Cartesian axes.
    pub fn mode_irreps(&self, group: PointGroup) -> Result<Vec<Irrep>> {
        self.modes().iter().map(|m| vector_irrep(group, m.eps)).collect()
    }

    pub fn assign_irreps(&mut self, group: PointGroup) -> Result<()> {
        self.irreps = Some(self.mode_irreps(group)?);
        Ok(())
    }
}

/// Irrep spanned by the linear function `v·r`.
pub fn vector_irrep(group: PointGroup, v: [f64; 3]) -> Result<Irrep> {
    let ops = group.operations();
    let mut chars = Vec::with_capacity(ops.len());
    for op in ops {
        let img = [op[0] as f64 * v[0], op[1] as f64 * v[1], op[2] as f64 * v[2]];
        let plus = (0..3).all(|k| (img[k] - v[k]).abs() < 1e-8);
        let minus = (0..3).all(|k| (img[k] + v[k]).abs() < 1e-8);
        chars.push(match (plus, minus) {
            (true, _) => 1i8,
            (false, true) => -1,
            _ => {
                return Err(Error::Symmetry(format!(
                    "polarization {v:?} is not along a symmetry axis of {group}; canonicalize the frame or use C1"
                )))
            }
        });
    }
    (0..group.order())
        .find(|&g| (0..ops.len()).all(|o| group.character(g, o) == chars[o]))
        .map(|g| group.irrep(g))
        .ok_or_else(|| Error::Symmetry("no irrep matches polarization characters".into()))
}

/// AO matrix of `ε·(r − O)`.
pub fn mode_position(one: &OneElectron, eps: [f64; 3]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(one.s.nrows(), one.s.ncols());
    for a in 0..3 {
        if eps[a] != 0.0 {
            m += &one.d[a] * eps[a];
        }
    }
    m
}

/// AO matrix of `(ε·(r − O))²`.
pub fn mode_second_moment(one: &OneElectron, eps: [f64; 3]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(one.s.nrows(), one.s.ncols());
    for a in 0..3 {
        for b in 0..3 {
            let f = eps[a] * eps[b];
            if f != 0.0 {
                m += &one.q[q_index(a, b)] * f;
            }
        }
    }
    m
}

/// Pseudo-inverse of the overlap, dropping eigenvalues below `1e-9`.
pub fn overlap_pinv(s: &DMatrix<f64>) -> DMatrix<f64> {
    let se = nalgebra::SymmetricEigen::new(s.clone());
    let inv = se.eigenvalues.map(|v| if v > 1e-9 { 1.0 / v } else { 0.0 });
    &se.eigenvectors * DMatrix::from_diagonal(&inv) * se.eigenvectors.transpose()
}

/// Dipole self-energy pieces for a closed-shell density `p` (both spins).
#[derive(Clone, Debug)]
pub struct DseTerms {
    /// One-electron operator `Σ ½λ²(Q_m − 2⟨r_m⟩ r_m)`, with `Q_m` per [`DseOneBody`].
    pub one_body: DMatrix<f64>,
    /// Coulomb-like mean field `Σ λ² ⟨r_m⟩ r_m`.
    pub coulomb: DMatrix<f64>,
    /// Exchange-like mean field `−Σ ½λ² r_m P r_m`.
    pub exchange: DMatrix<f64>,
    /// Scalar `Σ ½λ²⟨r_m⟩²`.
    pub constant: f64,
    /// Mean-field DSE energy `Σ ½λ²[tr(P Q_m) − ½ tr(P r_m P r_m)]`.
    pub energy: f64,
    /// `⟨r_m⟩ = tr(P r_m)` per mode.
    pub shifts: Vec<f64>,
}

/// DSE contributions of every mode for density `p`, with `⟨r_m⟩` taken from `p`.
pub fn build_dse(cav: &CavityModeSet, one: &OneElectron, p: &DMatrix<f64>) -> DseTerms {
    let n = one.s.nrows();
    let mut t = DseTerms {
        one_body: DMatrix::zeros(n, n),
        coulomb: DMatrix::zeros(n, n),
        exchange: DMatrix::zeros(n, n),
        constant: 0.0,
        energy: 0.0,
        shifts: Vec::new(),
    };
    let sinv = match cav.dse {
        DseOneBody::DipoleSquared if cav.n_modes() > 0 => Some(overlap_pinv(&one.s)),
        _ => None,
    };
    for m in cav.modes() {
        let r = mode_position(one, m.eps);
        let shift = p.dot(&r);
        t.shifts.push(shift);
        if m.lambda == 0.0 {
            continue;
        }
        let l2 = m.lambda * m.lambda;
        let q = match &sinv {
            Some(si) => &r * si * &r,
            None => mode_second_moment(one, m.eps),
        };
        let rpr = &r * p * &r;
        t.one_body += (&q - &r * (2.0 * shift)) * (0.5 * l2);
        t.coulomb += &r * (l2 * shift);
        t.exchange -= &rpr * (0.5 * l2);
        t.constant += 0.5 * l2 * shift * shift;
        t.energy += 0.5 * l2 * (p.dot(&q) - 0.5 * p.dot(&rpr));
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair() -> ModePair {
        ModePair::unpolarized(0.466, 0.05, [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]).unwrap()
    }

    #[test]
    fn rotation_special_angles() {
        let p = pair();
        let r0 = p.rotated(0.0);
        assert_eq!(r0, p);
        let r = p.rotated(std::f64::consts::PI);
        for k in 0..3 {
            assert!((r.eps[k] + p.eps[k]).abs() < 1e-15);
            assert!((r.eps_bar[k] + p.eps_bar[k]).abs() < 1e-15);
        }
        let r = p.rotated(std::f64::consts::FRAC_PI_2);
        for k in 0..3 {
            assert!((r.eps[k] + p.eps_bar[k]).abs() < 1e-15);
            assert!((r.eps_bar[k] - p.eps[k]).abs() < 1e-15);
        }
        assert_eq!(r.k, p.k);
    }

    #[test]
    fn irreps_of_parallel_cavity() {
        let c = CavityModeSet::new(vec![pair()]).unwrap();
        let names: Vec<&str> = c.mode_irreps(PointGroup::D2h).unwrap().iter().map(|i| i.name()).collect();
        assert_eq!(names, vec!["B3u", "B2u"]);
        let z = vector_irrep(PointGroup::D2h, [0.0, 0.0, 1.0]).unwrap();
        assert_eq!(z.name(), "B1u");
        assert!(c.mode_irreps(PointGroup::C1).unwrap().iter().all(|i| i.is_totally_symmetric()));
        let tilted = c.rotate_polarizations(0.3);
        assert!(tilted.mode_irreps(PointGroup::D2h).is_err());
        let (back, th) = tilted.align_to_axes();
        assert!((th[0] + 0.3).abs() < 1e-12);
        assert_eq!(back.mode_irreps(PointGroup::D2h).unwrap()[0].name(), "B3u");
    }

    #[test]
    fn rejects_bad_vectors() {
        assert!(ModePair::unpolarized(0.5, 0.05, [0.0, 0.0, 1.0], [0.0, 0.0, 1.0]).is_err());
        assert!(ModePair::unpolarized(-0.5, 0.05, [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]).is_err());
        assert!(ModePair::linear(0.5, -0.1, [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]).is_err());
        let lin = ModePair::linear(0.5, 0.1, [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]).unwrap();
        assert_eq!(CavityModeSet::new(vec![lin]).unwrap().n_modes(), 1);
    }
}
