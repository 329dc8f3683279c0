//! Circuit execution: stochastic Pauli trajectories on statevectors and exact
//! channel evolution in the Pauli basis.

use rand::Rng;

use super::gates::{self, M2};
use super::pauli_density::PauliDensity;
use super::state::StateVector;
use crate::error::{Error, Result};
use crate::pauli::PauliString;
use crate::trotter::{GateKind, NoiseModel, PauliChannel, TrotterCircuit};

/// Channels keyed by gate angle; Trotter circuits use a handful of angles.
#[derive(Default)]
struct ChannelCache {
    entries: Vec<(f64, PauliChannel)>,
}

impl ChannelCache {
    fn get(&mut self, noise: &NoiseModel, angle: f64) -> Result<&PauliChannel> {
        let pos = match self.entries.iter().position(|(a, _)| *a == angle) {
            Some(p) => p,
            None => {
                self.entries.push((angle, noise.channel_for(angle)?));
                self.entries.len() - 1
            }
        };
        Ok(&self.entries[pos].1)
    }
}

fn check_circuit(n: usize, circuit: &TrotterCircuit) -> Result<()> {
    if circuit.n != n {
        return Err(Error::SiteMismatch { expected: n, got: circuit.n });
    }
    Ok(())
}

/// Runs one noisy trajectory in place.
///
/// RNG contract: for a noisy model exactly one uniform `f64` is drawn after
/// every two-qubit gate, in gate order, and it selects the Pauli branch by
/// cumulative probability (identity first). A noiseless model draws nothing.
pub fn apply_circuit_trajectory<R: Rng + ?Sized>(
    psi: &mut StateVector,
    circuit: &TrotterCircuit,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<()> {
    run_trajectory(psi, circuit, noise, rng, |_, _| Ok(()))
}

/// As [`apply_circuit_trajectory`], calling `observe(s, ψ)` with `s = 0`
/// before the first gate and after each completed step `s`.
pub fn run_trajectory<R: Rng + ?Sized>(
    psi: &mut StateVector,
    circuit: &TrotterCircuit,
    noise: &NoiseModel,
    rng: &mut R,
    mut observe: impl FnMut(usize, &StateVector) -> Result<()>,
) -> Result<()> {
    let n = psi.num_sites();
    check_circuit(n, circuit)?;
    let noisy = !noise.is_noiseless();
    let mut cache = ChannelCache::default();
    observe(0, psi)?;
    for s in 0..circuit.steps {
        for g in &circuit.gates[circuit.step_range(s)] {
            psi.apply_gate(g)?;
            if noisy && g.is_two_qubit() {
                let u: f64 = rng.random();
                let branch = cache.get(noise, g.angle)?.select(u);
                if !branch.is_identity() {
                    let p = PauliString::from_sites(n, &[(g.sites[0], branch.paulis[0]), (g.sites[1], branch.paulis[1])])?;
                    psi.apply_pauli(&p)?;
                }
            }
        }
        observe(s + 1, psi)?;
    }
    Ok(())
}

/// Exact evolution of a mixed state under a noisy circuit. `observe(s, ρ)` is
/// called for every `s` in `at_steps` (after `s` complete steps, `0` meaning
/// the initial state).
///
/// Single-qubit gates are buffered per site and folded into the next
/// two-qubit gate on that site, or flushed before an observation.
pub fn evolve_pauli_density(
    rho: &mut PauliDensity,
    circuit: &TrotterCircuit,
    noise: &NoiseModel,
    at_steps: &[usize],
    mut observe: impl FnMut(usize, &PauliDensity) -> Result<()>,
) -> Result<()> {
    let n = rho.num_sites();
    check_circuit(n, circuit)?;
    if let Some(&s) = at_steps.iter().find(|&&s| s > circuit.steps) {
        return Err(Error::InvalidArgument(format!("observation after step {s} beyond circuit")));
    }
    let mut pending: Vec<Option<M2>> = vec![None; n];
    let mut cache = ChannelCache::default();
    let flush = |rho: &mut PauliDensity, pending: &mut Vec<Option<M2>>| {
        for (site, u) in pending.iter_mut().enumerate() {
            if let Some(u) = u.take() {
                rho.apply_1q(site, &u);
            }
        }
    };
    if at_steps.contains(&0) {
        observe(0, rho)?;
    }
    for s in 0..circuit.steps {
        for g in &circuit.gates[circuit.step_range(s)] {
            match &g.kind {
                GateKind::Rotation1q { .. } => {
                    let u = gates::one_qubit_unitary(g).expect("rotation gate");
                    let site = g.sites[0];
                    pending[site] = Some(match pending[site] {
                        Some(prev) => gates::mul2(&u, &prev),
                        None => u,
                    });
                }
                GateKind::PauliInsertion { paulis } => {
                    for (&site, &p) in g.sites.iter().zip(paulis) {
                        let u = gates::pauli_matrix(p);
                        pending[site] = Some(gates::mul2(&u, &pending[site].unwrap_or_else(gates::identity2)));
                    }
                }
                _ => {
                    let ([lo, hi], u) = gates::two_qubit_unitary(g, n)?;
                    let before = gates::kron(
                        &pending[lo].take().unwrap_or_else(gates::identity2),
                        &pending[hi].take().unwrap_or_else(gates::identity2),
                    );
                    let total = gates::mul4(&u, &before);
                    let channel = if noise.is_noiseless() { None } else { Some(cache.get(noise, g.angle)?) };
                    rho.apply_2q([lo, hi], &total, channel);
                }
            }
        }
        if at_steps.contains(&(s + 1)) {
            flush(rho, &mut pending);
            observe(s + 1, rho)?;
        }
    }
    flush(rho, &mut pending);
    Ok(())
}
