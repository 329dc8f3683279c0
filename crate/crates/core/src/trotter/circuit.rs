use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{trotter_groups, ModelParams, Operator, Pauli, PauliString};

/// Gate family. Angles live on [`Gate`]; every unitary is `exp(-i θ G)` for
/// the generator `G` named here.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GateKind {
    /// `G = n·σ` on one site, `n` a unit vector.
    Rotation1q { axis: [f64; 3] },
    /// `G = P_a Q_b`, e.g. XX or YY.
    Rotation2q { paulis: [Pauli; 2] },
    /// `G = (1 - Z_a) X_b`, the facilitated flip of the quantum-East model.
    East,
    /// A Pauli error on the listed sites; the angle is unused.
    PauliInsertion { paulis: Vec<Pauli> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    #[serde(flatten)]
    pub kind: GateKind,
    pub sites: Vec<usize>,
    pub angle: f64,
    pub layer: usize,
    /// Trotter step the gate belongs to.
    pub step: usize,
}

impl Gate {
    pub fn is_two_qubit(&self) -> bool {
        matches!(self.kind, GateKind::Rotation2q { .. } | GateKind::East)
    }

    /// The gate as commuting Pauli rotations `exp(-i θ_k P_k)`, applied in any
    /// order. Single-qubit rotations are not Pauli rotations and return `None`.
    pub fn pauli_rotations(&self, n: usize) -> Option<Vec<(PauliString, f64)>> {
        match &self.kind {
            GateKind::Rotation2q { paulis } => {
                let p = PauliString::from_sites(n, &[(self.sites[0], paulis[0]), (self.sites[1], paulis[1])])
                    .ok()?;
                Some(vec![(p, self.angle)])
            }
            GateKind::East => {
                let (a, b) = (self.sites[0], self.sites[1]);
                let x = PauliString::single(n, b, Pauli::X);
                let zx = PauliString::from_sites(n, &[(a, Pauli::Z), (b, Pauli::X)]).ok()?;
                Some(vec![(x, self.angle), (zx, -self.angle)])
            }
            _ => None,
        }
    }

    /// Pauli string of an insertion gate.
    pub fn insertion_string(&self, n: usize) -> Option<PauliString> {
        match &self.kind {
            GateKind::PauliInsertion { paulis } => {
                let letters: Vec<_> = self.sites.iter().copied().zip(paulis.iter().copied()).collect();
                PauliString::from_sites(n, &letters).ok()
            }
            _ => None,
        }
    }

    /// The inverse gate.
    pub fn inverse(&self) -> Gate {
        let mut g = self.clone();
        if !matches!(g.kind, GateKind::PauliInsertion { .. }) {
            g.angle = -g.angle;
        }
        g
    }
}

/// Converts a local generator `G` into the gate `exp(-i dt G)`.
/// Returns `None` when the generator is zero.
pub fn gate_from_generator(gen: &Operator, dt: f64) -> Result<Option<Gate>> {
    let mut support: Vec<usize> = Vec::new();
    for (p, _) in gen.terms() {
        for s in p.support() {
            if !support.contains(&s) {
                support.push(s);
            }
        }
    }
    support.sort_unstable();
    let unsupported = || Error::Unsupported(format!("no gate for generator with {} terms", gen.len()));
    let gate = |kind, sites, angle| Gate { kind, sites, angle, layer: 0, step: 0 };
    match support.len() {
        0 => Ok(None),
        1 => {
            let site = support[0];
            let mut v = [0.0; 3];
            for (p, w) in gen.real_terms() {
                match p.get(site) {
                    Pauli::X => v[0] += w,
                    Pauli::Y => v[1] += w,
                    Pauli::Z => v[2] += w,
                    Pauli::I => {}
                }
            }
            let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if r == 0.0 {
                return Ok(None);
            }
            let axis = [v[0] / r, v[1] / r, v[2] / r];
            Ok(Some(gate(GateKind::Rotation1q { axis }, vec![site], dt * r)))
        }
        2 => {
            let (a, b) = (support[0], support[1]);
            let terms: Vec<(PauliString, f64)> = gen.real_terms().collect();
            if terms.len() == 1 && terms[0].0.weight() == 2 {
                let (p, w) = terms[0];
                let kind = GateKind::Rotation2q { paulis: [p.get(a), p.get(b)] };
                return Ok(Some(gate(kind, vec![a, b], dt * w)));
            }
            if terms.len() == 2 {
                // w X_t - w Z_c X_t with control c and target t, either order
                for (c, t) in [(a, b), (b, a)] {
                    let n = gen.num_sites();
                    let x = PauliString::single(n, t, Pauli::X);
                    let zx = PauliString::from_sites(n, &[(c, Pauli::Z), (t, Pauli::X)])?;
                    let wx = gen.weight_of(&x).re;
                    if wx != 0.0 && (gen.weight_of(&zx).re + wx).abs() < 1e-15 {
                        return Ok(Some(gate(GateKind::East, vec![c, t], dt * wx)));
                    }
                }
            }
            Err(unsupported())
        }
        _ => Err(unsupported()),
    }
}

/// A second-order Trotter circuit: `steps` repetitions of the symmetric step
/// `G1(τ/2) … G_{K-1}(τ/2) G_K(τ) G_{K-1}(τ/2) … G1(τ/2)`.
/// Half-layers of adjacent steps are not merged, so gate counts match the
/// textbook circuit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrotterCircuit {
    pub n: usize,
    pub tau: f64,
    pub steps: usize,
    pub gates: Vec<Gate>,
}

pub fn build_trotter_circuit(params: &ModelParams, tau: f64, steps: usize) -> Result<TrotterCircuit> {
    if steps > 0 && !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidArgument(format!("Trotter step must be positive, got {tau}")));
    }
    let groups = trotter_groups(params)?;
    let k = groups.len();
    let mut schedule: Vec<(usize, f64)> = (0..k - 1).map(|g| (g, 0.5)).collect();
    schedule.push((k - 1, 1.0));
    schedule.extend((0..k - 1).rev().map(|g| (g, 0.5)));

    let mut step_layers: Vec<Vec<Gate>> = Vec::with_capacity(schedule.len());
    for &(g, frac) in &schedule {
        let mut layer = Vec::new();
        for gen in &groups[g] {
            if let Some(gate) = gate_from_generator(gen, frac * tau)? {
                layer.push(gate);
            }
        }
        step_layers.extend(disjoint_sublayers(layer));
    }

    let mut gates = Vec::with_capacity(steps * step_layers.iter().map(Vec::len).sum::<usize>());
    let mut layer_index = 0;
    for step in 0..steps {
        for layer in &step_layers {
            for g in layer {
                gates.push(Gate { layer: layer_index, step, ..g.clone() });
            }
            layer_index += 1;
        }
    }
    Ok(TrotterCircuit { n: params.n, tau, steps, gates })
}

/// Greedy split of commuting gates into sublayers whose gates act on
/// disjoint sites (brickwork order for chains).
fn disjoint_sublayers(gates: Vec<Gate>) -> Vec<Vec<Gate>> {
    let mut layers: Vec<(Vec<Gate>, u64)> = Vec::new();
    for g in gates {
        let mask = g.sites.iter().fold(0u64, |m, &s| m | 1 << s);
        match layers.iter_mut().find(|(_, used)| used & mask == 0) {
            Some((l, used)) => {
                l.push(g);
                *used |= mask;
            }
            None => layers.push((vec![g], mask)),
        }
    }
    layers.into_iter().map(|(l, _)| l).collect()
}

impl TrotterCircuit {
    pub fn num_two_qubit_gates(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    /// Index range of the gates of step `s`.
    pub fn step_range(&self, s: usize) -> std::ops::Range<usize> {
        let start = self.gates.partition_point(|g| g.step < s);
        let end = self.gates.partition_point(|g| g.step <= s);
        start..end
    }

    /// Inserts a Pauli error at the end of step `after_step` (0-based, so the
    /// error acts at time `(after_step + 1) τ`).
    pub fn with_insertion(&self, after_step: usize, p: &PauliString) -> Result<TrotterCircuit> {
        if after_step >= self.steps {
            return Err(Error::InvalidArgument(format!(
                "insertion after step {after_step} outside circuit of {} steps",
                self.steps
            )));
        }
        if p.num_sites() != self.n {
            return Err(Error::SiteMismatch { expected: self.n, got: p.num_sites() });
        }
        let at = self.step_range(after_step).end;
        let layer = self.gates[at - 1].layer;
        let sites = p.support();
        let paulis = sites.iter().map(|&s| p.get(s)).collect();
        let mut out = self.clone();
        out.gates.insert(
            at,
            Gate { kind: GateKind::PauliInsertion { paulis }, sites, angle: 0.0, layer, step: after_step },
        );
        Ok(out)
    }

    /// The time-reversed circuit: gates in reverse order with negated angles.
    pub fn reversed(&self) -> TrotterCircuit {
        let last_layer = self.gates.last().map_or(0, |g| g.layer);
        let last_step = self.steps.saturating_sub(1);
        let gates = self
            .gates
            .iter()
            .rev()
            .map(|g| Gate { layer: last_layer - g.layer, step: last_step - g.step, ..g.inverse() })
            .collect();
        TrotterCircuit { gates, ..self.clone() }
    }

    /// One JSON object per gate, in application order.
    pub fn to_json_lines(&self) -> Result<String> {
        let mut out = String::new();
        for g in &self.gates {
            out.push_str(&serde_json::to_string(g)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_json_lines(n: usize, tau: f64, text: &str) -> Result<TrotterCircuit> {
        let gates = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<Vec<Gate>, _>>()?;
        let steps = gates.last().map_or(0, |g| g.step + 1);
        Ok(TrotterCircuit { n, tau, steps, gates })
    }
}
