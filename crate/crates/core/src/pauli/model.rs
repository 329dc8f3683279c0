//! Spin-model Hamiltonians and the operators derived from them: local energy
//! densities, error-induced energy shifts, and the leading-order Floquet
//! Hamiltonian of the symmetric Trotter step.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::operator::Operator;
use super::string::{Pauli, PauliString, MAX_SITES};
use crate::error::{Error, Result};

pub const DEFAULT_G: f64 = 1.4;
pub const DEFAULT_H: f64 = 0.9045;
/// Half-width of the uniform coupling disorder in the quantum-East model.
pub const EAST_DISORDER: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    MixedFieldIsing,
    Xy,
    QuantumEast,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

/// Geometry used by the XY model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum Lattice {
    Chain,
    Square { lx: usize, ly: usize },
    Edges { edges: Vec<[usize; 2]> },
}

fn default_g() -> f64 {
    DEFAULT_G
}
fn default_h() -> f64 {
    DEFAULT_H
}
fn default_j() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub kind: ModelKind,
    pub n: usize,
    /// Transverse (Z) field.
    #[serde(default = "default_g")]
    pub g: f64,
    /// Longitudinal (X) field.
    #[serde(default = "default_h")]
    pub h: f64,
    /// Coupling strength.
    #[serde(default = "default_j")]
    pub j: f64,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<Lattice>,
    /// Per-bond coupling disorder for the quantum-East model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disorder: Option<Vec<f64>>,
}

impl ModelParams {
    /// Mixed-field Ising chain with open boundaries and the default fields.
    pub fn mixed_field_ising(n: usize) -> Self {
        Self {
            kind: ModelKind::MixedFieldIsing,
            n,
            g: DEFAULT_G,
            h: DEFAULT_H,
            j: 1.0,
            boundary: Boundary::Open,
            lattice: None,
            disorder: None,
        }
    }

    /// XY model on an `lx × ly` periodic square lattice.
    pub fn xy_square(lx: usize, ly: usize) -> Self {
        Self {
            kind: ModelKind::Xy,
            n: lx * ly,
            g: 0.0,
            h: 0.0,
            j: 1.0,
            boundary: Boundary::Periodic,
            lattice: Some(Lattice::Square { lx, ly }),
            disorder: None,
        }
    }

    /// Periodic quantum-East variant. With a seed, each bond coupling is
    /// scaled by `1 + η` with `η` uniform in `[-0.1, 0.1]`, drawn once here.
    pub fn quantum_east(n: usize, j: f64, disorder_seed: Option<u64>) -> Self {
        let disorder = disorder_seed.map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n).map(|_| rng.random_range(-EAST_DISORDER..=EAST_DISORDER)).collect()
        });
        Self {
            kind: ModelKind::QuantumEast,
            n,
            g: 0.0,
            h: 0.0,
            j,
            boundary: Boundary::Periodic,
            lattice: None,
            disorder,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidModel(format!("need at least 2 sites, got {}", self.n)));
        }
        if self.n > MAX_SITES {
            return Err(Error::InvalidModel(format!("at most {MAX_SITES} sites supported")));
        }
        if let Some(d) = &self.disorder {
            if d.len() != self.n {
                return Err(Error::InvalidModel(format!(
                    "disorder has {} entries for {} sites",
                    d.len(),
                    self.n
                )));
            }
        }
        if self.kind == ModelKind::Xy {
            self.edges()?;
        }
        Ok(())
    }

    /// Nearest-neighbour bonds of the model geometry, each listed once.
    pub fn edges(&self) -> Result<Vec<(usize, usize)>> {
        let chain = || {
            let mut e: Vec<_> = (0..self.n - 1).map(|j| (j, j + 1)).collect();
            if self.boundary == Boundary::Periodic && self.n > 2 {
                e.push((self.n - 1, 0));
            }
            e
        };
        let edges = match (&self.kind, &self.lattice) {
            (ModelKind::Xy, Some(Lattice::Square { lx, ly })) => {
                if lx * ly != self.n {
                    return Err(Error::InvalidModel(format!(
                        "square lattice {lx}x{ly} does not match n = {}",
                        self.n
                    )));
                }
                square_edges(*lx, *ly, self.boundary == Boundary::Periodic)
            }
            (ModelKind::Xy, Some(Lattice::Edges { edges })) => {
                edges.iter().map(|e| (e[0], e[1])).collect()
            }
            (ModelKind::Xy, None) => {
                return Err(Error::InvalidModel("XY model needs a lattice".into()));
            }
            // Directed bonds j -> j+1; for two periodic sites both directions appear.
            (ModelKind::QuantumEast, _) => {
                let bonds = if self.boundary == Boundary::Periodic { self.n } else { self.n - 1 };
                return Ok((0..bonds).map(|j| (j, (j + 1) % self.n)).collect());
            }
            _ => chain(),
        };
        validate_edges(self.n, &edges)?;
        Ok(edges)
    }

    fn east_coupling(&self, j: usize) -> f64 {
        self.j * (1.0 + self.disorder.as_ref().map_or(0.0, |d| d[j]))
    }
}

fn square_edges(lx: usize, ly: usize, periodic: bool) -> Vec<(usize, usize)> {
    let idx = |x: usize, y: usize| y * lx + x;
    let mut edges = Vec::new();
    for y in 0..ly {
        for x in 0..lx {
            if x + 1 < lx || (periodic && lx > 2) {
                edges.push((idx(x, y), idx((x + 1) % lx, y)));
            }
            if y + 1 < ly || (periodic && ly > 2) {
                edges.push((idx(x, y), idx(x, (y + 1) % ly)));
            }
        }
    }
    edges
}

fn validate_edges(n: usize, edges: &[(usize, usize)]) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for &(a, b) in edges {
        if a >= n || b >= n || a == b {
            return Err(Error::InvalidModel(format!("malformed edge ({a}, {b}) for {n} sites")));
        }
        if !seen.insert((a.min(b), a.max(b))) {
            return Err(Error::InvalidModel(format!("duplicate edge ({a}, {b})")));
        }
    }
    Ok(())
}

fn two_site(n: usize, a: usize, pa: Pauli, b: usize, pb: Pauli) -> PauliString {
    PauliString::from_sites(n, &[(a, pa), (b, pb)]).expect("sites validated")
}

/// A set of mutually commuting local gate generators. Every generator acts on
/// one or two sites and generators in one group commute with each other, so
/// `exp(-i θ Σ G)` factorizes into one gate per generator.
pub type TrotterGroup = Vec<Operator>;

/// The Hamiltonian split into Trotter groups; the symmetric Trotter step is
/// built from the groups in order and the groups sum to `H`.
pub fn trotter_groups(params: &ModelParams) -> Result<Vec<TrotterGroup>> {
    params.validate()?;
    let n = params.n;
    let real = |terms: &[(PauliString, f64)]| {
        Operator::from_real_terms(n, terms.iter().copied()).expect("sites validated")
    };
    match params.kind {
        ModelKind::MixedFieldIsing => {
            let fields = (0..n)
                .map(|j| {
                    real(&[
                        (PauliString::single(n, j, Pauli::Z), -params.g),
                        (PauliString::single(n, j, Pauli::X), -params.h),
                    ])
                })
                .collect();
            let bonds = params
                .edges()?
                .into_iter()
                .map(|(a, b)| real(&[(two_site(n, a, Pauli::X, b, Pauli::X), -params.j)]))
                .collect();
            Ok(vec![fields, bonds])
        }
        ModelKind::Xy => {
            let edges = params.edges()?;
            let bond = |p: Pauli| {
                edges
                    .iter()
                    .map(|&(a, b)| real(&[(two_site(n, a, p, b, p), params.j)]))
                    .collect::<Vec<_>>()
            };
            Ok(vec![bond(Pauli::X), bond(Pauli::Y)])
        }
        ModelKind::QuantumEast => {
            // (J_j / 2)(1 - Z_j) X_{j+1}, kept whole so that |0...0> is
            // annihilated by every generator.
            let gens: Vec<Operator> = params
                .edges()?
                .into_iter()
                .map(|(a, b)| {
                    let w = 0.5 * params.east_coupling(a);
                    real(&[
                        (PauliString::single(n, b, Pauli::X), w),
                        (two_site(n, a, Pauli::Z, b, Pauli::X), -w),
                    ])
                })
                .collect();
            Ok(color_commuting(gens))
        }
    }
}

fn operators_commute(a: &Operator, b: &Operator) -> bool {
    a.terms().all(|(p, _)| b.terms().all(|(q, _)| p.commutes(q)))
}

/// Greedy partition of generators into mutually commuting groups.
fn color_commuting(gens: Vec<Operator>) -> Vec<TrotterGroup> {
    let mut groups: Vec<TrotterGroup> = Vec::new();
    for g in gens {
        match groups.iter().position(|grp| grp.iter().all(|o| operators_commute(o, &g))) {
            Some(i) => groups[i].push(g),
            None => groups.push(vec![g]),
        }
    }
    groups
}

/// Sum of the generators of one group.
pub fn group_sum(n: usize, group: &[Operator]) -> Operator {
    group.iter().fold(Operator::zero(n), |acc, g| &acc + g)
}

pub fn build_hamiltonian(params: &ModelParams) -> Result<Operator> {
    let groups = trotter_groups(params)?;
    let mut total = Operator::zero(params.n);
    for g in &groups {
        total = &total + &group_sum(params.n, g);
    }
    Ok(total)
}

/// `(H1, H2)` for the mixed-field Ising model: the field sum and the XX bond sum.
pub fn ising_split(params: &ModelParams) -> Result<(Operator, Operator)> {
    if params.kind != ModelKind::MixedFieldIsing {
        return Err(Error::Unsupported("ising_split needs the mixed-field Ising model".into()));
    }
    let g = trotter_groups(params)?;
    Ok((group_sum(params.n, &g[0]), group_sum(params.n, &g[1])))
}

/// Site-centred energy density `h_r` (0-based `r`) of the mixed-field Ising
/// model: full on-site fields plus half of every bond touching `r`, so that
/// the densities sum to `H`.
pub fn local_energy_density(params: &ModelParams, r: usize) -> Result<Operator> {
    if params.kind != ModelKind::MixedFieldIsing {
        return Err(Error::Unsupported(
            "local energy density is defined for the mixed-field Ising model".into(),
        ));
    }
    params.validate()?;
    let n = params.n;
    if r >= n {
        return Err(Error::InvalidArgument(format!("site {r} out of range for {n} sites")));
    }
    let mut op = Operator::zero(n);
    for (a, b) in params.edges()? {
        if a == r || b == r {
            op.add_real(two_site(n, a, Pauli::X, b, Pauli::X), -0.5 * params.j);
        }
    }
    op.add_real(PauliString::single(n, r, Pauli::Z), -params.g);
    op.add_real(PauliString::single(n, r, Pauli::X), -params.h);
    Ok(op)
}

/// `Δ_P H = P H P − H`, which equals minus twice the part of `H` that
/// anticommutes with `P`.
pub fn error_shift_operator(p: &PauliString, h: &Operator) -> Result<Operator> {
    if p.num_sites() != h.num_sites() {
        return Err(Error::SiteMismatch { expected: h.num_sites(), got: p.num_sites() });
    }
    Ok(h.anticommuting_part(p).scale_real(-2.0))
}

/// Leading-order Floquet Hamiltonian of `U1(τ/2) U2(τ) U1(τ/2)`.
#[derive(Clone, Debug)]
pub struct FloquetHamiltonian {
    pub tau: f64,
    /// `H + τ² V`.
    pub h_f: Operator,
    /// `[H1 + 2 H2, [H1, H2]] / 24`, so that `H_F − H = τ² V`.
    pub v: Operator,
}

pub fn floquet_hamiltonian(h1: &Operator, h2: &Operator, tau: f64) -> Result<FloquetHamiltonian> {
    if h1.num_sites() != h2.num_sites() {
        return Err(Error::SiteMismatch { expected: h1.num_sites(), got: h2.num_sites() });
    }
    let inner = h1.commutator(h2);
    let outer = h1 + &h2.scale_real(2.0);
    let v = outer.commutator(&inner).scale(Complex64::new(1.0 / 24.0, 0.0));
    let h = h1 + h2;
    let h_f = &h + &v.scale_real(tau * tau);
    Ok(FloquetHamiltonian { tau, h_f, v })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn ising_n3_terms() {
        let h = build_hamiltonian(&ModelParams::mixed_field_ising(3)).unwrap();
        assert_eq!(h.len(), 8);
        let count = |w: f64| h.terms().filter(|(_, x)| (x.re - w).abs() < 1e-15).count();
        assert_eq!(count(-1.0), 2);
        assert_eq!(count(-1.4), 3);
        assert_eq!(count(-0.9045), 3);
        assert_eq!(h.weight_of(&ps("XXI")).re, -1.0);
        assert_eq!(h.weight_of(&ps("IZI")).re, -1.4);
    }

    #[test]
    fn xy_torus_4x4_has_32_bonds() {
        let params = ModelParams::xy_square(4, 4);
        let edges = params.edges().unwrap();
        assert_eq!(edges.len(), 32);
        let h = build_hamiltonian(&params).unwrap();
        assert_eq!(h.len(), 64);
        assert!(h.terms().all(|(_, w)| (w.re - 1.0).abs() < 1e-15));
        // every site has coordination 4
        for s in 0..16 {
            assert_eq!(edges.iter().filter(|(a, b)| *a == s || *b == s).count(), 4);
        }
    }

    #[test]
    fn quantum_east_two_sites_expansion() {
        let h = build_hamiltonian(&ModelParams::quantum_east(2, 1.0, None)).unwrap();
        let expected = Operator::from_real_terms(
            2,
            [(ps("IX"), 0.5), (ps("ZX"), -0.5), (ps("XI"), 0.5), (ps("XZ"), -0.5)],
        )
        .unwrap();
        assert!(h.max_weight_diff(&expected) < 1e-15);
    }

    #[test]
    fn quantum_east_disorder_is_seeded_and_bounded() {
        let a = ModelParams::quantum_east(10, 1.0, Some(7));
        let b = ModelParams::quantum_east(10, 1.0, Some(7));
        assert_eq!(a.disorder, b.disorder);
        assert!(a.disorder.unwrap().iter().all(|e| e.abs() <= EAST_DISORDER));
    }

    #[test]
    fn quantum_east_groups_commute_internally() {
        for n in [6, 7] {
            let groups = trotter_groups(&ModelParams::quantum_east(n, 1.0, Some(1))).unwrap();
            assert_eq!(groups.len(), if n % 2 == 0 { 2 } else { 3 });
            for g in &groups {
                let sum = group_sum(n, g);
                for (p, _) in sum.terms() {
                    assert!(sum.terms().all(|(q, _)| q.commutes(p)));
                }
            }
        }
    }

    #[test]
    fn local_energy_density_edge_and_bulk() {
        let params = ModelParams::mixed_field_ising(3);
        let h0 = local_energy_density(&params, 0).unwrap();
        let expected = Operator::from_real_terms(
            3,
            [(ps("XXI"), -0.5), (ps("ZII"), -1.4), (ps("XII"), -0.9045)],
        )
        .unwrap();
        assert!(h0.max_weight_diff(&expected) < 1e-15);
        let h1 = local_energy_density(&params, 1).unwrap();
        assert_eq!(h1.weight_of(&ps("XXI")).re, -0.5);
        assert_eq!(h1.weight_of(&ps("IXX")).re, -0.5);
        assert!(local_energy_density(&params, 3).is_err());
        assert!(local_energy_density(&ModelParams::xy_square(2, 2), 0).is_err());
    }

    #[test]
    fn energy_densities_sum_to_hamiltonian() {
        for n in [2, 3, 7] {
            let params = ModelParams::mixed_field_ising(n);
            let h = build_hamiltonian(&params).unwrap();
            let mut sum = Operator::zero(n);
            for r in 0..n {
                sum = &sum + &local_energy_density(&params, r).unwrap();
            }
            assert!(sum.max_weight_diff(&h) < 1e-15);
        }
    }

    #[test]
    fn error_shift_examples() {
        let params = ModelParams::mixed_field_ising(5);
        let h = build_hamiltonian(&params).unwrap();
        let dx = error_shift_operator(&PauliString::single(5, 2, Pauli::X), &h).unwrap();
        let expected = Operator::from_real_terms(5, [(ps("IIZII"), 2.0 * 1.4)]).unwrap();
        assert!(dx.max_weight_diff(&expected) < 1e-15);

        let dy = error_shift_operator(&PauliString::single(5, 2, Pauli::Y), &h).unwrap();
        let expected = Operator::from_real_terms(
            5,
            [
                (ps("IXXII"), 2.0),
                (ps("IIXXI"), 2.0),
                (ps("IIXII"), 2.0 * 0.9045),
                (ps("IIZII"), 2.0 * 1.4),
            ],
        )
        .unwrap();
        assert!(dy.max_weight_diff(&expected) < 1e-15);

        let d0 = error_shift_operator(&PauliString::identity(5), &h).unwrap();
        assert!(d0.is_empty());
        assert!(error_shift_operator(&PauliString::identity(4), &h).is_err());
    }

    #[test]
    fn floquet_at_zero_step_is_h() {
        let (h1, h2) = ising_split(&ModelParams::mixed_field_ising(4)).unwrap();
        let f = floquet_hamiltonian(&h1, &h2, 0.0).unwrap();
        assert!(f.h_f.max_weight_diff(&(&h1 + &h2)) < 1e-15);
        assert!(f.v.is_hermitian());
        assert!(!f.v.is_empty());
    }

    #[test]
    fn malformed_models_are_rejected() {
        let mut p = ModelParams::xy_square(4, 4);
        p.lattice = Some(Lattice::Edges { edges: vec![[0, 0]] });
        assert!(build_hamiltonian(&p).is_err());
        p.lattice = Some(Lattice::Edges { edges: vec![[0, 20]] });
        assert!(build_hamiltonian(&p).is_err());
        p.lattice = None;
        assert!(build_hamiltonian(&p).is_err());
        assert!(build_hamiltonian(&ModelParams::mixed_field_ising(1)).is_err());
        let unknown: std::result::Result<ModelKind, _> =
            serde_json::from_str("\"heisenberg\"");
        assert!(unknown.is_err());
    }
}
