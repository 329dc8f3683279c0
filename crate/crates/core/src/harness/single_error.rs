use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use super::{derive_seed, initial_ensemble, steps_for};
use crate::error::{Error, Result};
use crate::pauli::{
    build_hamiltonian, error_shift_operator, local_energy_density, Boundary, ModelKind, ModelParams, Operator, Pauli,
    PauliString,
};
use crate::rpe::{prepare_product_state, SpinConfiguration};
use crate::sim::StateVector;
use crate::stats::{linear_fit, LineFit};
use crate::trotter::build_trotter_circuit;

/// One cell of a space-time map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapCell {
    pub r: usize,
    pub t: f64,
    pub value: f64,
}

/// Response of noiseless Trotter dynamics to one Pauli inserted after the
/// step ending at `t0`, averaged over an ensemble of product states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InsertionResponse {
    pub n: usize,
    pub tau: f64,
    pub t0: f64,
    pub site: usize,
    pub pauli: Pauli,
    pub times: Vec<f64>,
    /// `Δu(r, t)`: change of the local energy density (mixed-field Ising only).
    pub delta_u: Vec<MapCell>,
    /// `D_tr(r, t)` between the ensemble-mean one-site states with and without the insertion.
    pub trace_distance: Vec<MapCell>,
    /// Root-mean-square distance from the insertion site, weighted by `|Δu|`
    /// when available and by `D_tr` otherwise; zero when all weights vanish.
    pub r_rms: Vec<f64>,
    /// Root-mean-square distance weighted by `D_tr`.
    pub r_rms_trace: Vec<f64>,
    pub summed_trace_distance: Vec<f64>,
    /// Mean total energy change `⟨H⟩_with − ⟨H⟩_without`.
    pub energy_change: Vec<f64>,
    /// Mean energy jump across the insertion.
    pub jump: f64,
    /// Mean `⟨Δ_P H⟩` just before the insertion.
    pub expected_jump: f64,
    /// Largest per-sample `|jump − ⟨Δ_P H⟩|`.
    pub max_jump_error: f64,
    /// Largest `|ΔE(t) − jump| / |jump|` over grid times at or after `t0`.
    pub drift: f64,
    pub samples: usize,
}

struct Observation {
    bloch: Vec<[f64; 3]>,
    u: Vec<f64>,
    energy: f64,
}

fn observe(psi: &StateVector, h: &Operator, densities: &[Operator]) -> Result<Observation> {
    let bloch = psi.one_rdms().iter().map(|r| r.bloch).collect();
    let u = densities.iter().map(|d| psi.expectation(d)).collect::<Result<Vec<_>>>()?;
    let energy = if densities.is_empty() { psi.expectation(h)? } else { u.iter().sum() };
    Ok(Observation { bloch, u, energy })
}

/// Per-sample differences: `[time]` of (Bloch differences, Δu, ΔE), plus
/// the jump and its expected value.
struct SampleResponse {
    d_bloch: Vec<Vec<[f64; 3]>>,
    d_u: Vec<Vec<f64>>,
    d_e: Vec<f64>,
    jump: f64,
    expected: f64,
}

struct Plan<'a> {
    params: &'a ModelParams,
    h: &'a Operator,
    shift: Operator,
    densities: Vec<Operator>,
    p: PauliString,
    tau: f64,
    s0: usize,
    steps: Vec<usize>,
}

impl Plan<'_> {
    fn record(&self, s: usize, base: &Observation, with: &Observation, out: &mut SampleResponse) {
        for (i, _) in self.steps.iter().enumerate().filter(|(_, &want)| want == s) {
            out.d_bloch[i] = base.bloch.iter().zip(&with.bloch).map(|(a, b)| [b[0] - a[0], b[1] - a[1], b[2] - a[2]]).collect();
            out.d_u[i] = base.u.iter().zip(&with.u).map(|(a, b)| b - a).collect();
            out.d_e[i] = with.energy - base.energy;
        }
    }

    fn run(&self, config: &SpinConfiguration) -> Result<SampleResponse> {
        let n = self.params.n;
        let max = self.steps.iter().copied().max().unwrap_or(0).max(self.s0);
        let circuit = build_trotter_circuit(self.params, self.tau, max)?;
        let mut out = SampleResponse {
            d_bloch: vec![vec![[0.0; 3]; n]; self.steps.len()],
            d_u: vec![vec![0.0; self.densities.len()]; self.steps.len()],
            d_e: vec![0.0; self.steps.len()],
            jump: 0.0,
            expected: 0.0,
        };
        let mut psi = prepare_product_state(config)?;
        for s in 0..self.s0 {
            for g in &circuit.gates[circuit.step_range(s)] {
                psi.apply_gate(g)?;
            }
        }
        let before = observe(&psi, self.h, &self.densities)?;
        out.expected = psi.expectation(&self.shift)?;
        let mut phi = psi.clone();
        phi.apply_pauli(&self.p)?;
        let after = observe(&phi, self.h, &self.densities)?;
        out.jump = after.energy - before.energy;
        self.record(self.s0, &before, &after, &mut out);
        for s in self.s0..max {
            for g in &circuit.gates[circuit.step_range(s)] {
                psi.apply_gate(g)?;
                phi.apply_gate(g)?;
            }
            if self.steps.contains(&(s + 1)) {
                let base = observe(&psi, self.h, &self.densities)?;
                let with = observe(&phi, self.h, &self.densities)?;
                self.record(s + 1, &base, &with, &mut out);
            }
        }
        Ok(out)
    }
}

fn distance(params: &ModelParams, r: usize, c: usize) -> f64 {
    let d = r.abs_diff(c);
    if params.boundary == Boundary::Periodic {
        d.min(params.n - d) as f64
    } else {
        d as f64
    }
}

/// Inserts `pauli` on `site` after the step ending at `t0` and records the
/// with-minus-without response at `times` (all multiples of `tau`; times
/// before `t0` give zero). Mixed-field Ising chains also get `Δu(r, t)`.
pub fn insertion_response(
    params: &ModelParams,
    configs: &[SpinConfiguration],
    tau: f64,
    t0: f64,
    site: usize,
    pauli: Pauli,
    times: &[f64],
) -> Result<InsertionResponse> {
    let n = params.n;
    if configs.is_empty() || times.is_empty() {
        return Err(Error::InvalidArgument("need at least one initial state and one time".into()));
    }
    if site >= n {
        return Err(Error::InvalidArgument(format!("insertion site {site} out of range for {n} sites")));
    }
    let s0 = steps_for(t0, tau)?;
    let steps = times.iter().map(|&t| steps_for(t, tau)).collect::<Result<Vec<_>>>()?;
    if s0 > steps.iter().copied().max().expect("non-empty") {
        return Err(Error::InvalidArgument(format!("insertion time {t0} is after the last time")));
    }
    let h = build_hamiltonian(params)?;
    let p = PauliString::single(n, site, pauli);
    let densities = if params.kind == ModelKind::MixedFieldIsing {
        (0..n).map(|r| local_energy_density(params, r)).collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let plan = Plan { params, h: &h, shift: error_shift_operator(&p, &h)?, densities, p, tau, s0, steps };
    let runs = configs.par_iter().map(|c| plan.run(c)).collect::<Result<Vec<_>>>()?;

    let m = runs.len() as f64;
    let mut delta_u = Vec::new();
    let mut trace_distance = Vec::new();
    let mut r_rms = Vec::new();
    let mut r_rms_trace = Vec::new();
    let mut summed = Vec::new();
    let mut energy_change = Vec::new();
    for (i, &t) in times.iter().enumerate() {
        let u: Vec<f64> = (0..plan.densities.len()).map(|r| runs.iter().map(|s| s.d_u[i][r]).sum::<f64>() / m).collect();
        let d: Vec<f64> = (0..n)
            .map(|r| {
                let b = (0..3).map(|k| runs.iter().map(|s| s.d_bloch[i][r][k]).sum::<f64>() / m);
                0.5 * b.map(|x| x * x).sum::<f64>().sqrt()
            })
            .collect();
        let rms = |weights: &[f64]| {
            let total: f64 = weights.iter().sum();
            let second: f64 = weights.iter().enumerate().map(|(r, w)| w * distance(params, r, site).powi(2)).sum();
            if total > 0.0 {
                (second / total).sqrt()
            } else {
                0.0
            }
        };
        let abs_u: Vec<f64> = u.iter().map(|x| x.abs()).collect();
        r_rms.push(rms(if u.is_empty() { &d } else { &abs_u }));
        r_rms_trace.push(rms(&d));
        summed.push(d.iter().sum());
        energy_change.push(runs.iter().map(|s| s.d_e[i]).sum::<f64>() / m);
        delta_u.extend(u.iter().enumerate().map(|(r, &value)| MapCell { r, t, value }));
        trace_distance.extend(d.iter().enumerate().map(|(r, &value)| MapCell { r, t, value }));
    }
    let jump = runs.iter().map(|s| s.jump).sum::<f64>() / m;
    let expected_jump = runs.iter().map(|s| s.expected).sum::<f64>() / m;
    let max_jump_error = runs.iter().map(|s| (s.jump - s.expected).abs()).fold(0.0, f64::max);
    let drift = plan
        .steps
        .iter()
        .zip(&energy_change)
        .filter(|(&s, _)| s >= s0)
        .map(|(_, &e)| (e - jump).abs() / jump.abs())
        .fold(0.0, f64::max);
    Ok(InsertionResponse {
        n,
        tau,
        t0,
        site,
        pauli,
        times: times.to_vec(),
        delta_u,
        trace_distance,
        r_rms,
        r_rms_trace,
        summed_trace_distance: summed,
        energy_change,
        jump,
        expected_jump,
        max_jump_error,
        drift,
        samples: configs.len(),
    })
}

/// Log-log fit of an `r_rms` series against `t − t0` over
/// `t_min ≤ t ≤ t_max`, `t > t0`. The slope is the spreading exponent.
pub fn rms_exponent(resp: &InsertionResponse, series: &[f64], t_min: f64, t_max: f64) -> Result<LineFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = resp
        .times
        .iter()
        .zip(series)
        .filter(|(&t, &r)| t > resp.t0 && t >= t_min && t <= t_max && r > 0.0)
        .map(|(&t, &r)| ((t - resp.t0).ln(), r.ln()))
        .unzip();
    linear_fit(&x, &y)
}

fn insertion_site(cfg: &ExperimentConfig, n: usize) -> usize {
    cfg.insertion.site.unwrap_or(n / 2)
}

/// The single-error experiment for the configured model and initial ensemble
/// at the first configured step.
pub fn single_error_experiment(cfg: &ExperimentConfig) -> Result<InsertionResponse> {
    cfg.validate()?;
    let params = cfg.model.params(None)?;
    let h = build_hamiltonian(&params)?;
    let seed = derive_seed(cfg.seed()?, &[1, params.n as u64]);
    let ensemble = initial_ensemble(&cfg.initial, &params, &h, seed)?;
    insertion_response(
        &params,
        &ensemble.configs,
        cfg.grid.tau[0],
        cfg.insertion.t0,
        insertion_site(cfg, params.n),
        cfg.insertion.pauli,
        &cfg.grid.t,
    )
}

/// Linear fit of a post-insertion series with its growth ratio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesFit {
    pub fit: LineFit,
    /// Value at the first grid time after the insertion.
    pub initial: f64,
    pub final_value: f64,
    pub ratio: f64,
}

impl SeriesFit {
    fn new(resp: &InsertionResponse) -> Result<Self> {
        let (t, y): (Vec<f64>, Vec<f64>) =
            resp.times.iter().zip(&resp.summed_trace_distance).filter(|(&t, _)| t > resp.t0).map(|(&t, &y)| (t, y)).unzip();
        if t.len() < 2 {
            return Err(Error::Config("need at least two grid times after the insertion".into()));
        }
        let fit = linear_fit(&t, &y)?;
        let (initial, final_value) = (y[0], y[y.len() - 1]);
        Ok(Self { fit, initial, final_value, ratio: final_value / initial })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScarVsThermal {
    pub theta: f64,
    pub scar: InsertionResponse,
    pub thermal: InsertionResponse,
    pub scar_fit: SeriesFit,
    pub thermal_fit: SeriesFit,
}

/// Single-error response of the quantum-East scar state `|0…0⟩` and of the
/// product state `⊗(cos θ/2 |0⟩ + sin θ/2 |1⟩)`.
pub fn scar_vs_thermal(cfg: &ExperimentConfig) -> Result<ScarVsThermal> {
    cfg.validate()?;
    if cfg.kind()? != ExperimentKind::ScarVsThermal || cfg.model.kind != ModelKind::QuantumEast {
        return Err(Error::Config("scar-vs-thermal needs the quantum-East model".into()));
    }
    let params = cfg.model.params(None)?;
    let n = params.n;
    let theta = cfg.scar.theta;
    let site = insertion_site(cfg, n);
    let run = |c: SpinConfiguration| {
        insertion_response(&params, &[c], cfg.grid.tau[0], cfg.insertion.t0, site, cfg.insertion.pauli, &cfg.grid.t)
    };
    let scar = run(super::zero_configuration(n))?;
    let thermal = run(SpinConfiguration::uniform(n, [theta.sin(), 0.0, theta.cos()])?)?;
    Ok(ScarVsThermal { theta, scar_fit: SeriesFit::new(&scar)?, thermal_fit: SeriesFit::new(&thermal)?, scar, thermal })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rpe::SpinConfiguration;

    fn grid(tau: f64, t_max: f64) -> Vec<f64> {
        (0..=(t_max / tau).round() as usize).map(|s| s as f64 * tau).collect()
    }

    #[test]
    fn identity_insertion_changes_nothing() {
        let params = ModelParams::mixed_field_ising(6);
        let c = SpinConfiguration::uniform(6, [0.3, 0.4, 0.5]).unwrap();
        let r = insertion_response(&params, &[c], 0.1, 0.5, 3, Pauli::I, &grid(0.1, 2.0)).unwrap();
        assert!(r.delta_u.iter().chain(&r.trace_distance).all(|c| c.value == 0.0));
        assert!(r.r_rms.iter().chain(&r.energy_change).all(|&x| x == 0.0));
    }

    #[test]
    fn jump_matches_the_shift_operator_and_energy_is_kept() {
        let params = ModelParams::mixed_field_ising(8);
        let configs: Vec<_> = [[0.0, 0.0, 1.0], [0.6, 0.0, 0.8]].iter().map(|&d| SpinConfiguration::uniform(8, d).unwrap()).collect();
        let r = insertion_response(&params, &configs, 0.02, 0.4, 3, Pauli::Y, &grid(0.2, 2.0)).unwrap();
        assert!(r.max_jump_error < 1e-12);
        assert!((r.jump - r.expected_jump).abs() < 1e-12);
        assert!(r.jump.abs() > 0.5);
        assert!(r.drift < 0.05, "drift {}", r.drift);
        for (t, e) in r.times.iter().zip(&r.energy_change) {
            if *t < 0.4 - 1e-12 {
                assert_eq!(*e, 0.0);
            }
        }
        let u_sum: f64 = r.delta_u.iter().filter(|c| (c.t - 0.4).abs() < 1e-12).map(|c| c.value).sum();
        assert!((u_sum - r.jump).abs() < 1e-12);
    }

    #[test]
    fn insertion_must_lie_inside_the_window() {
        let params = ModelParams::mixed_field_ising(6);
        let c = vec![SpinConfiguration::uniform(6, [0.0, 0.0, 1.0]).unwrap()];
        assert!(insertion_response(&params, &c, 0.1, 3.0, 2, Pauli::Y, &[0.0, 1.0]).is_err());
        assert!(insertion_response(&params, &c, 0.1, 0.5, 9, Pauli::Y, &[0.0, 1.0]).is_err());
    }
}
