use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{ModelParams, Pauli};
use crate::rpe::EnsembleTables;
use crate::trotter::{build_trotter_circuit, NoiseModel};

/// Mean energy shift per error event, for one two-qubit gate.
struct GateRates {
    /// `(table Pauli index, probability)` of every error branch.
    events: Vec<(usize, f64)>,
}

/// Deterministic mean-field heating: the state is an RPE whose energy moves
/// by the expected error-induced shift after every two-qubit gate.
pub struct HeatingState<'a> {
    tables: &'a EnsembleTables,
    gates: Vec<GateRates>,
    tau: f64,
    energy: f64,
    steps: usize,
    clamped: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatingPoint {
    pub t: f64,
    /// Energy per site.
    pub energy_density: f64,
    /// Site-averaged Bloch vector read off the table.
    pub bloch: [f64; 3],
    /// One-site trace distance from the initial table state.
    pub trace_distance: f64,
    /// True once the energy has left the table range and been clamped.
    pub clamped: bool,
}

fn letter_index(p: Pauli) -> usize {
    Pauli::ALL.iter().position(|&q| q == p).expect("Pauli letter")
}

impl<'a> HeatingState<'a> {
    /// `energy` is the total initial energy, which must lie on the table grid.
    pub fn new(tables: &'a EnsembleTables, noise: &NoiseModel, params: &ModelParams, tau: f64, energy: f64) -> Result<Self> {
        if params.n != tables.num_sites {
            return Err(Error::SiteMismatch { expected: tables.num_sites, got: params.n });
        }
        if tables.paulis.len() != 15 || tables.rows.iter().any(|r| r.shifts.len() != 15) {
            return Err(Error::InvalidArgument("tables must carry the 15 two-site Pauli shifts".into()));
        }
        let grid = tables.grid();
        let e = energy / params.n as f64;
        if grid.is_empty() || e < grid[0] || e > grid[grid.len() - 1] {
            return Err(Error::InvalidArgument(format!("initial energy density {e} outside the table grid")));
        }
        let circuit = build_trotter_circuit(params, tau, 1)?;
        let mut gates = Vec::new();
        for g in circuit.gates.iter().filter(|g| g.is_two_qubit()) {
            let channel = noise.channel_for(g.angle)?;
            // the table bond is oriented low site first
            let flip = g.sites[0] > g.sites[1];
            let events = channel
                .branches
                .iter()
                .filter(|k| !k.is_identity() && k.prob > 0.0)
                .map(|k| {
                    let [a, b] = if flip { [k.paulis[1], k.paulis[0]] } else { k.paulis };
                    (letter_index(a) * 4 + letter_index(b) - 1, k.prob)
                })
                .collect();
            gates.push(GateRates { events });
        }
        Ok(Self { tables, gates, tau, energy, steps: 0, clamped: false })
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.tau
    }

    /// Advances one Trotter step.
    pub fn step(&mut self) -> Result<()> {
        let n = self.tables.num_sites as f64;
        for g in &self.gates {
            if g.events.is_empty() {
                continue;
            }
            let look = self.tables.lookup(self.energy / n)?;
            self.clamped |= look.clamped;
            self.energy += g.events.iter().map(|&(k, p)| p * look.row.shifts[k]).sum::<f64>();
        }
        self.steps += 1;
        Ok(())
    }

    fn point(&self, reference: &[f64; 3]) -> Result<HeatingPoint> {
        let e = self.energy / self.tables.num_sites as f64;
        let look = self.tables.lookup(e)?;
        let b = look.row.mean_bloch;
        let d = (0..3).map(|k| (b[k] - reference[k]).powi(2)).sum::<f64>().sqrt();
        Ok(HeatingPoint {
            t: self.time(),
            energy_density: e,
            bloch: b,
            trace_distance: 0.5 * d,
            clamped: self.clamped || look.clamped,
        })
    }
}

/// Heating trajectory sampled at `times`, each a non-negative multiple of `tau`.
pub fn heating_trajectory(
    tables: &EnsembleTables,
    noise: &NoiseModel,
    params: &ModelParams,
    tau: f64,
    times: &[f64],
    initial_energy: f64,
) -> Result<Vec<HeatingPoint>> {
    let mut state = HeatingState::new(tables, noise, params, tau, initial_energy)?;
    let mut targets = Vec::with_capacity(times.len());
    for &t in times {
        let s = (t / tau).round();
        if !(s >= 0.0) || (s * tau - t).abs() > 1e-9 * t.abs().max(1.0) {
            return Err(Error::InvalidArgument(format!("time {t} is not a multiple of the step {tau}")));
        }
        targets.push(s as usize);
    }
    let reference = tables.lookup(initial_energy / params.n as f64)?.row.mean_bloch;
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by_key(|&i| targets[i]);
    let mut points = vec![None; times.len()];
    for i in order {
        while state.steps < targets[i] {
            state.step()?;
        }
        points[i] = Some(state.point(&reference)?);
    }
    Ok(points.into_iter().map(|p| p.expect("every time visited")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::build_hamiltonian;
    use crate::rpe::{bond_paulis, ensemble_tables, SamplerConfig, TableConfig, TableRow};
    use crate::trotter::ChannelKind;

    /// Every Pauli lowers the energy density by `rate × e`: exponential decay
    /// toward zero with a known per-step factor.
    fn linear_tables(n: usize, rate: f64) -> EnsembleTables {
        let rows = (-20..=20)
            .map(|i| {
                let e = i as f64 * 0.1;
                TableRow {
                    energy_density: e,
                    mean_bloch: [0.0, 0.0, -e / 2.0],
                    center_bloch: [0.0, 0.0, -e / 2.0],
                    shifts: vec![-rate * e * n as f64; 15],
                    energy_variance: 1.0,
                    mean_purity: 0.5,
                    samples: 1,
                }
            })
            .collect();
        let paulis = bond_paulis(n, [n / 2, n / 2 + 1]).unwrap().iter().map(|p| p.to_string()).collect();
        EnsembleTables { num_sites: n, center: n / 2, bond: [n / 2, n / 2 + 1], paulis, rows }
    }

    #[test]
    fn noiseless_is_static() {
        let n = 6;
        let t = linear_tables(n, 0.3);
        let pts = heating_trajectory(&t, &NoiseModel::noiseless(), &ModelParams::mixed_field_ising(n), 0.25, &[0.0, 1.0, 4.0], -1.2 * n as f64)
            .unwrap();
        for p in pts {
            assert_eq!(p.energy_density, -1.2);
            assert_eq!(p.trace_distance, 0.0);
        }
    }

    #[test]
    fn linear_shift_table_gives_exponential_decay() {
        let n = 6;
        let rate = 0.3;
        let t = linear_tables(n, rate);
        let params = ModelParams::mixed_field_ising(n);
        let noise = NoiseModel::depolarizing_lambda(1e-3);
        let q = noise.channel_for(0.0).unwrap().error_probability();
        let gates = build_trotter_circuit(&params, 0.25, 1).unwrap().num_two_qubit_gates();
        let pts = heating_trajectory(&t, &noise, &params, 0.25, &[0.0, 2.5, 5.0], -1.2 * n as f64).unwrap();
        let per_step = (1.0 - rate * q).powi(gates as i32);
        for (p, steps) in pts.iter().zip([0, 10, 20]) {
            let want = -1.2 * per_step.powi(steps);
            assert!((p.energy_density - want).abs() < 1e-12, "{} vs {want}", p.energy_density);
            assert!((p.trace_distance - 0.5 * 0.5 * (want + 1.2).abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let n = 6;
        let t = linear_tables(n, 0.1);
        let params = ModelParams::mixed_field_ising(n);
        let noise = NoiseModel::default();
        assert!(heating_trajectory(&t, &noise, &params, 0.25, &[0.1], -6.0).is_err());
        assert!(heating_trajectory(&t, &noise, &params, 0.25, &[0.0], -100.0).is_err());
        assert!(heating_trajectory(&t, &noise, &ModelParams::mixed_field_ising(8), 0.25, &[0.0], -6.0).is_err());
    }

    #[test]
    fn sampled_tables_heat_toward_infinite_temperature() {
        let n = 8;
        let params = ModelParams::mixed_field_ising(n);
        let h = build_hamiltonian(&params).unwrap();
        let mut sampler = SamplerConfig::new(0.0, 60, 5);
        sampler.burn_in = 20;
        let cfg = TableConfig { sampler, chains: 2, center: None, bond: None };
        let grid: Vec<f64> = (0..7).map(|i| -1.5 + 0.25 * i as f64).collect();
        let tables = ensemble_tables(&h, &grid, &cfg).unwrap();
        for kind in [ChannelKind::Depolarizing, ChannelKind::PhaseFlip, ChannelKind::BitFlip] {
            let noise = NoiseModel { p0: 5e-3, p1: 0.0, channel: kind };
            let pts = heating_trajectory(&tables, &noise, &params, 0.25, &[0.0, 5.0, 10.0], -1.4 * n as f64).unwrap();
            assert!(pts[1].energy_density > pts[0].energy_density, "{kind:?}");
            assert!(pts[2].energy_density > pts[1].energy_density, "{kind:?}");
            assert!(pts[2].energy_density < 0.0);
            assert!(pts[2].trace_distance > pts[1].trace_distance);
        }
    }
}
