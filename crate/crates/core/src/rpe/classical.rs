use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Operator, Pauli};
use crate::sim::StateVector;

/// Tolerance on `‖σ_j‖ = 1`.
pub const NORM_TOL: f64 = 1e-12;

/// A classical product-state configuration: one unit Bloch vector per site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 3]>", into = "Vec<[f64; 3]>")]
pub struct SpinConfiguration {
    spins: Vec<[f64; 3]>,
}

impl TryFrom<Vec<[f64; 3]>> for SpinConfiguration {
    type Error = Error;

    fn try_from(spins: Vec<[f64; 3]>) -> Result<Self> {
        Self::new(spins)
    }
}

impl From<SpinConfiguration> for Vec<[f64; 3]> {
    fn from(c: SpinConfiguration) -> Self {
        c.spins
    }
}

pub(crate) fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Uniform point on the unit sphere.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
    let phi = std::f64::consts::TAU * rng.random::<f64>();
    let r = (1.0 - z * z).max(0.0).sqrt();
    [r * phi.cos(), r * phi.sin(), z]
}

impl SpinConfiguration {
    pub fn new(spins: Vec<[f64; 3]>) -> Result<Self> {
        if spins.is_empty() {
            return Err(Error::InvalidArgument("empty spin configuration".into()));
        }
        for (j, s) in spins.iter().enumerate() {
            if !s.iter().all(|c| c.is_finite()) || (norm(s) - 1.0).abs() > NORM_TOL {
                return Err(Error::InvalidArgument(format!("spin {j} is not a unit vector: {s:?}")));
            }
        }
        Ok(Self { spins })
    }

    /// Every spin along `dir` (normalized).
    pub fn uniform(n: usize, dir: [f64; 3]) -> Result<Self> {
        let l = norm(&dir);
        if l == 0.0 {
            return Err(Error::InvalidArgument("zero direction".into()));
        }
        Self::new(vec![dir.map(|c| c / l); n])
    }

    /// From polar and azimuthal angles `(θ_j, φ_j)`.
    pub fn from_angles(angles: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            angles
                .iter()
                .map(|&(t, p)| [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()])
                .collect(),
        )
    }

    /// Independent uniform spins.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        Self::new((0..n).map(|_| random_unit_vector(rng)).collect())
    }

    pub fn num_sites(&self) -> usize {
        self.spins.len()
    }

    pub fn spins(&self) -> &[[f64; 3]] {
        &self.spins
    }

    pub fn spin(&self, j: usize) -> [f64; 3] {
        self.spins[j]
    }

    /// Replaces spin `j`, renormalizing away rounding.
    pub(crate) fn set_spin(&mut self, j: usize, s: [f64; 3]) {
        let l = norm(&s);
        self.spins[j] = s.map(|c| c / l);
    }

    /// Largest deviation of `‖σ_j‖` from 1.
    pub fn max_norm_error(&self) -> f64 {
        self.spins.iter().map(|s| (norm(s) - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// The product state whose single-site Bloch vectors are `σ`.
pub fn prepare_product_state(config: &SpinConfiguration) -> Result<StateVector> {
    StateVector::product(config.spins())
}

fn axis(p: Pauli) -> usize {
    match p {
        Pauli::X => 0,
        Pauli::Y => 1,
        Pauli::Z => 2,
        Pauli::I => unreachable!("identity has no axis"),
    }
}

/// `⟨O⟩` in the product state `σ`: each term contributes its weight times the
/// product of the matching Bloch components. Works for any term weight.
pub fn product_expectation(config: &SpinConfiguration, op: &Operator) -> Result<f64> {
    if op.num_sites() != config.num_sites() {
        return Err(Error::SiteMismatch { expected: config.num_sites(), got: op.num_sites() });
    }
    let mut acc = 0.0;
    for (p, w) in op.terms() {
        let v: f64 = p.support().iter().map(|&j| config.spins[j][axis(p.get(j))]).product();
        acc += w.re * v;
    }
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq)]
struct Bond {
    a: usize,
    b: usize,
    /// Term `σ_a · J σ_b`.
    j: [[f64; 3]; 3],
}

/// A Hamiltonian of one- and two-site Pauli terms viewed as a classical
/// energy function of unit spins: `E(σ) = c + Σ_j f_j·σ_j + Σ_(ab) σ_a·J_ab σ_b`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalHamiltonian {
    n: usize,
    constant: f64,
    fields: Vec<[f64; 3]>,
    bonds: Vec<Bond>,
    /// Bond indices touching each site.
    incident: Vec<Vec<usize>>,
    neighbors: Vec<Vec<usize>>,
}

impl ClassicalHamiltonian {
    pub fn new(op: &Operator) -> Result<Self> {
        let n = op.num_sites();
        let mut constant = 0.0;
        let mut fields = vec![[0.0; 3]; n];
        let mut bonds: Vec<Bond> = Vec::new();
        for (p, w) in op.terms() {
            if w.im.abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!("term {p} has a complex weight")));
            }
            let support = p.support();
            match support.as_slice() {
                [] => constant += w.re,
                &[j] => fields[j][axis(p.get(j))] += w.re,
                &[a, b] => {
                    let idx = match bonds.iter().position(|bd| bd.a == a && bd.b == b) {
                        Some(i) => i,
                        None => {
                            bonds.push(Bond { a, b, j: [[0.0; 3]; 3] });
                            bonds.len() - 1
                        }
                    };
                    bonds[idx].j[axis(p.get(a))][axis(p.get(b))] += w.re;
                }
                _ => {
                    return Err(Error::Unsupported(format!(
                        "classical energy needs one- and two-site terms, found {p}"
                    )))
                }
            }
        }
        let mut incident = vec![Vec::new(); n];
        let mut neighbors = vec![Vec::new(); n];
        for (i, bd) in bonds.iter().enumerate() {
            incident[bd.a].push(i);
            incident[bd.b].push(i);
            neighbors[bd.a].push(bd.b);
            neighbors[bd.b].push(bd.a);
        }
        Ok(Self { n, constant, fields, bonds, incident, neighbors })
    }

    pub fn num_sites(&self) -> usize {
        self.n
    }

    pub fn neighbors(&self, j: usize) -> &[usize] {
        &self.neighbors[j]
    }

    pub fn are_neighbors(&self, a: usize, b: usize) -> bool {
        self.neighbors[a].contains(&b)
    }

    fn check(&self, config: &SpinConfiguration) -> Result<()> {
        if config.num_sites() != self.n {
            return Err(Error::SiteMismatch { expected: self.n, got: config.num_sites() });
        }
        Ok(())
    }

    pub fn energy(&self, config: &SpinConfiguration) -> Result<f64> {
        self.check(config)?;
        Ok(self.energy_unchecked(config.spins()))
    }

    pub(crate) fn energy_unchecked(&self, s: &[[f64; 3]]) -> f64 {
        let mut e = self.constant;
        for (f, sj) in self.fields.iter().zip(s) {
            e += dot(f, sj);
        }
        for bd in &self.bonds {
            e += bond_energy(&bd.j, &s[bd.a], &s[bd.b]);
        }
        e
    }

    /// Energy gradient `∂E/∂σ_j`; changing only spin `j` shifts the energy by
    /// exactly `h_j·(σ'_j − σ_j)`.
    pub fn effective_field(&self, config: &SpinConfiguration, j: usize) -> Result<[f64; 3]> {
        self.check(config)?;
        if j >= self.n {
            return Err(Error::InvalidArgument(format!("site {j} out of range")));
        }
        Ok(self.field_unchecked(config.spins(), j))
    }

    pub(crate) fn field_unchecked(&self, s: &[[f64; 3]], j: usize) -> [f64; 3] {
        let mut h = self.fields[j];
        for &i in &self.incident[j] {
            let bd = &self.bonds[i];
            if bd.a == j {
                let o = &s[bd.b];
                for (alpha, hv) in h.iter_mut().enumerate() {
                    *hv += dot(&bd.j[alpha], o);
                }
            } else {
                let o = &s[bd.a];
                for (beta, hv) in h.iter_mut().enumerate() {
                    *hv += (0..3).map(|alpha| o[alpha] * bd.j[alpha][beta]).sum::<f64>();
                }
            }
        }
        h
    }

    /// Norm bound used by early rejection: `(‖f_j‖ per site, (max site, ‖J‖_F) per bond)`.
    pub(crate) fn term_bounds(&self) -> (Vec<f64>, Vec<(usize, f64)>) {
        let f = self.fields.iter().map(norm).collect();
        let b = self
            .bonds
            .iter()
            .map(|bd| (bd.a.max(bd.b), bd.j.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()))
            .collect();
        (f, b)
    }

    /// Energy of the terms fully inside sites `0..=k`, minus that inside
    /// `0..k`: the increment when site `k` is fixed in sequence.
    pub(crate) fn sequential_increment(&self, s: &[[f64; 3]], k: usize) -> f64 {
        let mut e = dot(&self.fields[k], &s[k]);
        for &i in &self.incident[k] {
            let bd = &self.bonds[i];
            if bd.a.max(bd.b) == k {
                e += bond_energy(&bd.j, &s[bd.a], &s[bd.b]);
            }
        }
        e
    }

    pub(crate) fn constant(&self) -> f64 {
        self.constant
    }

    /// Lowest (`sign = -1`) or highest (`+1`) product-state energy found by
    /// aligning every spin with `sign·h_j` until convergence, best of several
    /// starts.
    pub fn extremal_configuration<R: Rng + ?Sized>(
        &self,
        sign: f64,
        rng: &mut R,
    ) -> (SpinConfiguration, f64) {
        let mut best: Option<(Vec<[f64; 3]>, f64)> = None;
        for start in 0..8 {
            let mut s: Vec<[f64; 3]> = match start {
                0 => vec![[0.0, 0.0, 1.0]; self.n],
                1 => vec![[0.0, 0.0, -1.0]; self.n],
                _ => (0..self.n).map(|_| random_unit_vector(rng)).collect(),
            };
            let mut e = self.energy_unchecked(&s);
            for _ in 0..10_000 {
                for j in 0..self.n {
                    let h = self.field_unchecked(&s, j);
                    let l = norm(&h);
                    if l > 1e-14 {
                        s[j] = h.map(|c| sign * c / l);
                    }
                }
                let e_new = self.energy_unchecked(&s);
                let done = (e_new - e).abs() < 1e-15 * (1.0 + e.abs());
                e = e_new;
                if done {
                    break;
                }
            }
            if best.as_ref().is_none_or(|(_, b)| sign * (e - b) > 0.0) {
                best = Some((s, e));
            }
        }
        let (s, e) = best.expect("at least one start");
        (SpinConfiguration { spins: s }, e)
    }
}

fn bond_energy(j: &[[f64; 3]; 3], a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (0..3).map(|alpha| a[alpha] * dot(&j[alpha], b)).sum()
}

/// Classical energy `E(σ)` of a Hamiltonian with one- and two-site terms.
pub fn config_energy(config: &SpinConfiguration, op: &Operator) -> Result<f64> {
    ClassicalHamiltonian::new(op)?.energy(config)
}

/// Energy gradient at site `j`.
pub fn effective_field(config: &SpinConfiguration, op: &Operator, j: usize) -> Result<[f64; 3]> {
    ClassicalHamiltonian::new(op)?.effective_field(config, j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{build_hamiltonian, ModelParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mfi(n: usize) -> Operator {
        build_hamiltonian(&ModelParams::mixed_field_ising(n)).unwrap()
    }

    #[test]
    fn aligned_energies() {
        let up = SpinConfiguration::uniform(20, [0.0, 0.0, 1.0]).unwrap();
        assert!((config_energy(&up, &mfi(20)).unwrap() + 28.0).abs() < 1e-12);
        let x = SpinConfiguration::uniform(3, [1.0, 0.0, 0.0]).unwrap();
        assert!((config_energy(&x, &mfi(3)).unwrap() + 4.7135).abs() < 1e-12);
    }

    #[test]
    fn bulk_field_of_all_up() {
        let up = SpinConfiguration::uniform(5, [0.0, 0.0, 1.0]).unwrap();
        let h = effective_field(&up, &mfi(5), 2).unwrap();
        assert!((h[0] + 0.9045).abs() < 1e-15 && h[1] == 0.0 && (h[2] + 1.4).abs() < 1e-15);
        assert!((norm(&h) - 1.6668).abs() < 1e-4);
    }

    #[test]
    fn isolated_spin_without_fields_feels_nothing() {
        let op = Operator::from_real_terms(3, [("XXI".parse().unwrap(), 1.0)]).unwrap();
        let c = SpinConfiguration::random(3, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(effective_field(&c, &op, 2).unwrap(), [0.0; 3]);
    }

    #[test]
    fn rejects_three_site_terms_and_bad_spins() {
        let op = Operator::from_real_terms(3, [("XYZ".parse().unwrap(), 1.0)]).unwrap();
        assert!(ClassicalHamiltonian::new(&op).is_err());
        assert!(SpinConfiguration::new(vec![[1.0, 1.0, 0.0]]).is_err());
    }

    #[test]
    fn classical_energy_matches_product_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let op = mfi(6);
        for _ in 0..5 {
            let c = SpinConfiguration::random(6, &mut rng).unwrap();
            let psi = prepare_product_state(&c).unwrap();
            let e = config_energy(&c, &op).unwrap();
            assert!((e - psi.expectation(&op).unwrap()).abs() < 1e-12);
            assert!((e - product_expectation(&c, &op).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_field_extremes_bracket_aligned_states() {
        let ch = ClassicalHamiltonian::new(&mfi(8)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (_, lo) = ch.extremal_configuration(-1.0, &mut rng);
        let (_, hi) = ch.extremal_configuration(1.0, &mut rng);
        let up = SpinConfiguration::uniform(8, [0.0, 0.0, 1.0]).unwrap();
        let e = ch.energy(&up).unwrap();
        assert!(lo < e && e < hi);
    }
}
