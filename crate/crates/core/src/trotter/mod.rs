//! Second-order Trotter circuits, gate noise models and gate-count estimates.

mod circuit;
mod noise;

pub use circuit::{build_trotter_circuit, gate_from_generator, Gate, GateKind, TrotterCircuit};
pub use noise::{
    depolarizing_kraus, effective_gate_counts, gate_error, infidelity_conversions,
    variant_channels, ChannelKind, ConeConstants, ConeVelocity, NoiseModel, PauliChannel,
    PauliKraus, ALT_P1, DEFAULT_P0, DEFAULT_P1, HARDWARE_P0, HARDWARE_P1,
};
