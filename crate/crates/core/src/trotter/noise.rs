use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::Pauli;

/// Default zero-angle infidelity used in the simulations.
pub const DEFAULT_P0: f64 = 3.5e-4;
/// Default infidelity slope per radian.
pub const DEFAULT_P1: f64 = 9.5e-4;
/// Alternative slope quoted alongside the fitted error model.
pub const ALT_P1: f64 = 9.6e-4;
/// Benchmarked hardware fit.
pub const HARDWARE_P0: f64 = 2.7e-4;
pub const HARDWARE_P1: f64 = 9.4e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelKind {
    #[default]
    Depolarizing,
    PhaseFlip,
    BitFlip,
}

/// Angle-dependent two-qubit gate noise, applied after every two-qubit gate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Average gate infidelity at zero angle.
    pub p0: f64,
    /// Infidelity slope per radian.
    pub p1: f64,
    #[serde(default)]
    pub channel: ChannelKind,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { p0: DEFAULT_P0, p1: DEFAULT_P1, channel: ChannelKind::Depolarizing }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self { p0: 0.0, p1: 0.0, channel: ChannelKind::Depolarizing }
    }

    /// Angle-independent depolarizing noise with parameter `λ`.
    pub fn depolarizing_lambda(lambda: f64) -> Self {
        Self { p0: 0.75 * lambda, p1: 0.0, channel: ChannelKind::Depolarizing }
    }

    pub fn is_noiseless(&self) -> bool {
        self.p0 == 0.0 && self.p1 == 0.0
    }

    /// Average gate infidelity of a gate with rotation angle `angle`.
    pub fn gate_error(&self, angle: f64) -> Result<f64> {
        gate_error(angle, self)
    }

    /// The Pauli channel following a two-qubit gate with rotation angle `angle`.
    pub fn channel_for(&self, angle: f64) -> Result<PauliChannel> {
        let p = self.gate_error(angle)?;
        let (_, process) = infidelity_conversions(p)?;
        variant_channels(self.channel, process)
    }
}

/// `p0 + p1 |angle|`.
pub fn gate_error(angle: f64, noise: &NoiseModel) -> Result<f64> {
    let p = noise.p0 + noise.p1 * angle.abs();
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("gate error {p} outside [0, 1)")));
    }
    Ok(p)
}

/// `(λ, process infidelity)` for an average two-qubit gate infidelity `p`:
/// `λ = 4p/3` and the process infidelity is `15λ/16 = 5p/4`.
pub fn infidelity_conversions(p: f64) -> Result<(f64, f64)> {
    let lambda = 4.0 * p / 3.0;
    if !(0.0..=16.0 / 15.0 + 1e-15).contains(&lambda) {
        return Err(Error::InvalidArgument(format!("depolarizing parameter {lambda} outside [0, 16/15]")));
    }
    Ok((lambda, 15.0 * lambda / 16.0))
}

/// A two-qubit Kraus operator `sqrt(prob) · (P ⊗ Q)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PauliKraus {
    pub paulis: [Pauli; 2],
    pub prob: f64,
}

impl PauliKraus {
    pub fn is_identity(&self) -> bool {
        self.paulis == [Pauli::I, Pauli::I]
    }
}

/// A two-qubit Pauli channel as its Kraus branches. The identity branch comes
/// first; branch probabilities are state independent.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliChannel {
    pub branches: Vec<PauliKraus>,
}

impl PauliChannel {
    pub fn identity() -> Self {
        Self { branches: vec![PauliKraus { paulis: [Pauli::I, Pauli::I], prob: 1.0 }] }
    }

    /// Total probability of a non-identity branch.
    pub fn error_probability(&self) -> f64 {
        self.branches.iter().filter(|k| !k.is_identity()).map(|k| k.prob).sum()
    }

    pub fn is_identity(&self) -> bool {
        self.error_probability() == 0.0
    }

    /// Branch selected by a uniform draw `u ∈ [0, 1)`; cumulative in branch order.
    pub fn select(&self, u: f64) -> &PauliKraus {
        let mut acc = 0.0;
        for k in &self.branches {
            acc += k.prob;
            if u < acc {
                return k;
            }
        }
        self.branches.last().expect("non-empty channel")
    }

    /// Depolarizing parameter if the channel is uniform over the 15 Paulis.
    pub fn as_depolarizing(&self) -> Option<f64> {
        let errs: Vec<_> = self.branches.iter().filter(|k| !k.is_identity()).collect();
        if errs.is_empty() {
            return Some(0.0);
        }
        let w = errs[0].prob;
        (errs.len() == 15 && errs.iter().all(|k| k.prob == w)).then_some(16.0 * w)
    }

    fn check(self) -> Result<Self> {
        let total: f64 = self.branches.iter().map(|k| k.prob).sum();
        if (total - 1.0).abs() > 1e-12 || self.branches.iter().any(|k| k.prob < 0.0) {
            return Err(Error::Numerical(format!("channel probabilities sum to {total}")));
        }
        Ok(self)
    }
}

fn two_qubit_paulis() -> impl Iterator<Item = [Pauli; 2]> {
    Pauli::ALL.into_iter().flat_map(|a| Pauli::ALL.into_iter().map(move |b| [a, b]))
}

/// The two-qubit depolarizing channel `(1-λ)ρ + λ I/4 ⊗ tr_ij ρ` as 16 Pauli
/// Kraus operators: identity with `1 - 15λ/16`, each other Pauli with `λ/16`.
pub fn depolarizing_kraus(lambda: f64) -> Result<PauliChannel> {
    if !(0.0..=16.0 / 15.0 + 1e-15).contains(&lambda) {
        return Err(Error::InvalidArgument(format!("λ = {lambda} outside [0, 16/15]")));
    }
    let branches = two_qubit_paulis()
        .map(|paulis| {
            let prob = if paulis == [Pauli::I, Pauli::I] { 1.0 - 15.0 * lambda / 16.0 } else { lambda / 16.0 };
            PauliKraus { paulis, prob }
        })
        .collect();
    PauliChannel { branches }.check()
}

/// Pauli channel of the given kind with total error probability `p`:
/// depolarizing spreads `p` over the 15 non-identity Paulis, phase-flip over
/// ZI, IZ, ZZ and bit-flip over XI, IX, XX.
pub fn variant_channels(kind: ChannelKind, p: f64) -> Result<PauliChannel> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("error probability {p} outside [0, 1]")));
    }
    if kind == ChannelKind::Depolarizing {
        return depolarizing_kraus(16.0 * p / 15.0);
    }
    let letter = if kind == ChannelKind::PhaseFlip { Pauli::Z } else { Pauli::X };
    let mut branches = vec![PauliKraus { paulis: [Pauli::I, Pauli::I], prob: 1.0 - p }];
    for paulis in [[letter, Pauli::I], [Pauli::I, letter], [letter, letter]] {
        branches.push(PauliKraus { paulis, prob: p / 3.0 });
    }
    PauliChannel { branches }.check()
}

/// Geometry constants of the causal-cone gate counts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeConstants {
    pub a_d: f64,
    pub b_d: f64,
    pub c_d: f64,
    pub alpha: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum ConeVelocity {
    /// Errors spread at one site per circuit layer.
    Circuit,
    /// Errors spread at the butterfly velocity `v_b`.
    Butterfly { v_b: f64 },
}

/// Effective number of two-qubit gates inside the causal cone of a local
/// observable in `d` dimensions, before and after the cone reaches the
/// system boundary.
pub fn effective_gate_counts(
    d: u32,
    n: f64,
    t: f64,
    tau: f64,
    k: &ConeConstants,
    velocity: ConeVelocity,
) -> Result<f64> {
    if d == 0 || tau <= 0.0 || t < 0.0 || n <= 0.0 {
        return Err(Error::InvalidArgument("need d ≥ 1, τ > 0, t ≥ 0, N > 0".into()));
    }
    let df = f64::from(d);
    let boundary = k.c_d * n.powf(1.0 + 1.0 / df);
    let late = k.alpha * n * t / tau;
    Ok(match velocity {
        ConeVelocity::Circuit => {
            let t1 = k.b_d * n.powf(1.0 / df) * tau;
            if t <= t1 {
                k.a_d * (t / tau).powf(df + 1.0)
            } else {
                boundary + late
            }
        }
        ConeVelocity::Butterfly { v_b } => {
            let t2 = k.b_d * n.powf(1.0 / df) / v_b;
            if t <= t2 {
                k.a_d * v_b.powf(df) * t.powf(df + 1.0) / tau
            } else {
                boundary / (v_b * tau) + late
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gate_error_examples() {
        let hw = NoiseModel { p0: HARDWARE_P0, p1: HARDWARE_P1, channel: ChannelKind::Depolarizing };
        assert_eq!(gate_error(0.0, &hw).unwrap(), 2.7e-4);
        let quarter = gate_error(std::f64::consts::FRAC_PI_4, &hw).unwrap();
        assert!((quarter - 1.0e-3).abs() < 0.05e-3);
        let flat = NoiseModel { p1: 0.0, ..hw };
        assert_eq!(gate_error(-0.7, &flat).unwrap(), 2.7e-4);
        let bad = NoiseModel { p0: 0.9, p1: 1.0, ..hw };
        assert!(gate_error(0.2, &bad).is_err());
    }

    #[test]
    fn conversions() {
        let (lambda, process) = infidelity_conversions(1.1e-3).unwrap();
        assert!((lambda - 1.1e-3 * 4.0 / 3.0).abs() < 1e-18);
        assert!((process - 1.375e-3).abs() < 1e-15);
        assert!(infidelity_conversions(0.9).is_err());
    }

    #[test]
    fn channel_shapes() {
        let dep = variant_channels(ChannelKind::Depolarizing, 0.015).unwrap();
        assert_eq!(dep.branches.len(), 16);
        assert!(dep.branches[1..].iter().all(|k| (k.prob - 0.001).abs() < 1e-15));
        assert!((dep.branches[0].prob - 0.985).abs() < 1e-15);
        assert!(variant_channels(ChannelKind::PhaseFlip, 0.0).unwrap().is_identity());
        let bit = variant_channels(ChannelKind::BitFlip, 0.03).unwrap();
        assert!((bit.error_probability() - 0.03).abs() < 1e-15);
        assert!(depolarizing_kraus(1.2).is_err());
        assert_eq!(depolarizing_kraus(0.0).unwrap().error_probability(), 0.0);
    }

    #[test]
    fn branch_selection_is_cumulative() {
        let ch = variant_channels(ChannelKind::BitFlip, 0.3).unwrap();
        assert!(ch.select(0.0).is_identity());
        assert_eq!(ch.select(0.75).paulis, [Pauli::X, Pauli::I]);
        assert_eq!(ch.select(0.99).paulis, [Pauli::X, Pauli::X]);
        let none = depolarizing_kraus(0.0).unwrap();
        assert!(none.select(0.999_999_999).is_identity());
    }

    #[test]
    fn cone_counts() {
        let k = ConeConstants { a_d: 1.0, b_d: 1.0, c_d: 0.5, alpha: 1.0 };
        let c = |t, v| effective_gate_counts(1, 20.0, t, 0.2, &k, v).unwrap();
        assert_eq!(c(0.0, ConeVelocity::Circuit), 0.0);
        assert_eq!(c(0.0, ConeVelocity::Butterfly { v_b: 2.0 }), 0.0);
        // early butterfly: A v^d t^{d+1} / τ
        assert!((c(3.0, ConeVelocity::Butterfly { v_b: 2.0 }) - 2.0 * 9.0 / 0.2).abs() < 1e-12);
        // late circuit: C N^2 + α N t / τ
        assert!((c(60.0, ConeVelocity::Circuit) - (0.5 * 400.0 + 20.0 * 60.0 / 0.2)).abs() < 1e-9);
    }
}
