use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Backend, Baseline, ExperimentConfig};
use super::report::SeedRecord;
use super::{derive_seed, initial_ensemble, steps_for, InitialEnsemble};
use crate::error::Result;
use crate::pauli::{build_hamiltonian, ModelParams};
use crate::rng::stream_rng;
use crate::rpe::{prepare_product_state, SpinConfiguration};
use crate::sim::{evolve_pauli_density, run_trajectory, EigenSystem, PauliDensity};
use crate::stats::bootstrap_ci_with;
use crate::trotter::{build_trotter_circuit, NoiseModel};

/// Per-site Bloch vectors, indexed `[time][site]`.
pub(crate) type BlochSeries = Vec<Vec<[f64; 3]>>;

/// One dynamics CSV row: the noisy-minus-baseline error at one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicsRow {
    pub experiment: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub tau: f64,
    pub t: f64,
    pub site_set: String,
    /// Site-averaged signed error of `⟨X⟩`.
    pub obs_x: f64,
    pub obs_y: f64,
    pub obs_z: f64,
    /// Site-averaged one-site trace distance.
    pub trace_distance: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n_samples: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DynamicsResult {
    pub rows: Vec<DynamicsRow>,
    pub seeds: Vec<SeedRecord>,
}

fn record_at(steps: &[usize], s: usize, value: &[[f64; 3]], out: &mut [Option<Vec<[f64; 3]>>]) {
    for (i, &want) in steps.iter().enumerate() {
        if want == s {
            out[i] = Some(value.to_vec());
        }
    }
}

fn blochs_of(rdms: &[crate::sim::OneRdm]) -> Vec<[f64; 3]> {
    rdms.iter().map(|r| r.bloch).collect()
}

fn average(series: &[BlochSeries]) -> BlochSeries {
    let m = series.len() as f64;
    let mut acc = series[0].clone();
    for s in &series[1..] {
        for (a, b) in acc.iter_mut().zip(s) {
            for (x, y) in a.iter_mut().zip(b) {
                for k in 0..3 {
                    x[k] += y[k];
                }
            }
        }
    }
    for a in &mut acc {
        for x in a.iter_mut() {
            *x = x.map(|c| c / m);
        }
    }
    acc
}

/// One statevector run through a Trotter circuit, recording Bloch vectors
/// after each of `steps`.
fn statevector_run(
    params: &ModelParams,
    config: &SpinConfiguration,
    tau: f64,
    steps: &[usize],
    noise: &NoiseModel,
    rng: &mut ChaCha8Rng,
) -> Result<BlochSeries> {
    let max = steps.iter().copied().max().unwrap_or(0);
    let circuit = build_trotter_circuit(params, tau, max)?;
    let mut psi = prepare_product_state(config)?;
    let mut out = vec![None; steps.len()];
    run_trajectory(&mut psi, &circuit, noise, rng, |s, psi| {
        if steps.contains(&s) {
            record_at(steps, s, &blochs_of(&psi.one_rdms()), &mut out);
        }
        Ok(())
    })?;
    Ok(out.into_iter().map(|b| b.expect("every step visited")).collect())
}

/// Noiseless Trotter evolution of the ensemble mixture.
pub(crate) fn noiseless_blochs(params: &ModelParams, configs: &[SpinConfiguration], tau: f64, steps: &[usize]) -> Result<BlochSeries> {
    let runs = configs
        .par_iter()
        .map(|c| statevector_run(params, c, tau, steps, &NoiseModel::noiseless(), &mut ChaCha8Rng::seed_from_u64(0)))
        .collect::<Result<Vec<_>>>()?;
    Ok(average(&runs))
}

/// Exact evolution under `H` by diagonalization.
pub(crate) fn exact_blochs(params: &ModelParams, configs: &[SpinConfiguration], times: &[f64]) -> Result<BlochSeries> {
    let eig = EigenSystem::hamiltonian(&build_hamiltonian(params)?)?;
    let runs = configs
        .par_iter()
        .map(|c| {
            let psi = prepare_product_state(c)?;
            times.iter().map(|&t| Ok(blochs_of(&eig.evolve(&psi, t)?.one_rdms()))).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(average(&runs))
}

/// Exact noisy channel evolution of the ensemble mixture.
pub(crate) fn density_blochs(
    params: &ModelParams,
    noise: &NoiseModel,
    configs: &[SpinConfiguration],
    tau: f64,
    steps: &[usize],
) -> Result<BlochSeries> {
    let blochs: Vec<Vec<[f64; 3]>> = configs.iter().map(|c| c.spins().to_vec()).collect();
    let mut rho = PauliDensity::mixture(&blochs)?;
    let max = steps.iter().copied().max().unwrap_or(0);
    let circuit = build_trotter_circuit(params, tau, max)?;
    let mut at = steps.to_vec();
    at.sort_unstable();
    at.dedup();
    let mut out = vec![None; steps.len()];
    evolve_pauli_density(&mut rho, &circuit, noise, &at, |s, rho| {
        record_at(steps, s, &blochs_of(&rho.one_rdms()), &mut out);
        Ok(())
    })?;
    Ok(out.into_iter().map(|b| b.expect("every step visited")).collect())
}

/// Noisy trajectories; trajectory `i` starts from `configs[i mod len]` and
/// draws from stream `i` of `seed`. Indexed `[trajectory][time][site]`.
pub(crate) fn trajectory_blochs(
    params: &ModelParams,
    noise: &NoiseModel,
    configs: &[SpinConfiguration],
    tau: f64,
    steps: &[usize],
    trajectories: usize,
    seed: u64,
) -> Result<Vec<BlochSeries>> {
    (0..trajectories)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            statevector_run(params, &configs[i % configs.len()], tau, steps, noise, &mut rng)
        })
        .collect()
}

/// Site-averaged signed Bloch error and trace distance over `sites`.
pub(crate) fn site_errors(state: &[[f64; 3]], base: &[[f64; 3]], sites: &[usize]) -> ([f64; 3], f64) {
    let mut obs = [0.0; 3];
    let mut td = 0.0;
    for &j in sites {
        let d = [state[j][0] - base[j][0], state[j][1] - base[j][1], state[j][2] - base[j][2]];
        for k in 0..3 {
            obs[k] += d[k];
        }
        td += 0.5 * d.iter().map(|x| x * x).sum::<f64>().sqrt();
    }
    let m = sites.len() as f64;
    (obs.map(|o| o / m), td / m)
}

fn mean_over(runs: &[BlochSeries], idx: &[usize], time: usize, sites: &[usize]) -> Vec<[f64; 3]> {
    let n = runs[0][time].len();
    let mut acc = vec![[0.0; 3]; n];
    for &i in idx {
        for &j in sites {
            for k in 0..3 {
                acc[j][k] += runs[i][time][j][k];
            }
        }
    }
    let m = idx.len() as f64;
    acc.iter().map(|a| a.map(|c| c / m)).collect()
}

struct GridPoint<'a> {
    experiment: &'a str,
    n: usize,
    tau: f64,
    site_set: String,
}

impl GridPoint<'_> {
    fn row(&self, t: f64, obs: [f64; 3], td: f64, ci: (f64, f64), n_samples: usize) -> DynamicsRow {
        DynamicsRow {
            experiment: self.experiment.to_string(),
            n: self.n,
            tau: self.tau,
            t,
            site_set: self.site_set.clone(),
            obs_x: obs[0],
            obs_y: obs[1],
            obs_z: obs[2],
            trace_distance: td,
            ci_lo: ci.0,
            ci_hi: ci.1,
            n_samples,
        }
    }
}

/// Error-vs-t, error-vs-N and error-vs-τ sweeps: one row per `(N, τ, t)`.
///
/// The exact backend evolves the ensemble mixture as a Pauli-basis density
/// (statevectors when noiseless) and reports zero-width intervals. The
/// trajectory backend reports a percentile bootstrap over trajectories of the
/// site-averaged trace distance of the trajectory mean.
pub fn run_dynamics(cfg: &ExperimentConfig) -> Result<DynamicsResult> {
    cfg.validate()?;
    let kind = cfg.kind()?;
    let master = cfg.seed()?;
    let noise = cfg.noise.model()?;
    let dyn_cfg = &cfg.dynamics;
    let times = &cfg.grid.t;
    let mut result = DynamicsResult::default();
    for n in cfg.sizes()? {
        let params = cfg.model.params(Some(n))?;
        let h = build_hamiltonian(&params)?;
        let sites = dyn_cfg.sites.resolve(n)?;
        let rpe_seed = derive_seed(master, &[1, n as u64]);
        let ensemble: InitialEnsemble = initial_ensemble(&cfg.initial, &params, &h, rpe_seed)?;
        if let Some(seed) = ensemble.seed {
            result.seeds.push(SeedRecord::new(kind.name(), n, None, "rpe-chains", seed, 0, ensemble.len()));
        }
        let fixed_baseline = match dyn_cfg.baseline_for(kind) {
            Baseline::SameTau => None,
            Baseline::ReferenceTau => {
                let steps = times.iter().map(|&t| steps_for(t, dyn_cfg.reference_tau)).collect::<Result<Vec<_>>>()?;
                Some(noiseless_blochs(&params, &ensemble.configs, dyn_cfg.reference_tau, &steps)?)
            }
            Baseline::Exact => Some(exact_blochs(&params, &ensemble.configs, times)?),
        };
        for (k, &tau) in cfg.grid.tau.iter().enumerate() {
            let steps = times.iter().map(|&t| steps_for(t, tau)).collect::<Result<Vec<_>>>()?;
            let point = GridPoint { experiment: kind.name(), n, tau, site_set: dyn_cfg.sites.label() };
            let same_tau;
            let base = match &fixed_baseline {
                Some(b) => b,
                None => {
                    same_tau = noiseless_blochs(&params, &ensemble.configs, tau, &steps)?;
                    &same_tau
                }
            };
            let trajectories = dyn_cfg.backend == Backend::Trajectories && !noise.is_noiseless();
            if !trajectories {
                let state = if noise.is_noiseless() {
                    noiseless_blochs(&params, &ensemble.configs, tau, &steps)?
                } else {
                    density_blochs(&params, &noise, &ensemble.configs, tau, &steps)?
                };
                for (i, &t) in times.iter().enumerate() {
                    let (obs, td) = site_errors(&state[i], &base[i], &sites);
                    result.rows.push(point.row(t, obs, td, (td, td), ensemble.len()));
                }
                continue;
            }
            let m = dyn_cfg.trajectories;
            let traj_seed = derive_seed(master, &[2, n as u64, k as u64]);
            let boot_seed = derive_seed(master, &[3, n as u64, k as u64]);
            result.seeds.push(SeedRecord::new(kind.name(), n, Some(tau), "trajectories", traj_seed, 0, m));
            result.seeds.push(SeedRecord::new(kind.name(), n, Some(tau), "bootstrap", boot_seed, 0, times.len()));
            let runs = trajectory_blochs(&params, &noise, &ensemble.configs, tau, &steps, m, traj_seed)?;
            let all: Vec<usize> = (0..m).collect();
            for (i, &t) in times.iter().enumerate() {
                let mean = mean_over(&runs, &all, i, &sites);
                let (obs, td) = site_errors(&mean, &base[i], &sites);
                let mut rng = stream_rng(boot_seed, i as u64);
                let ci = bootstrap_ci_with(m, cfg.bootstrap.resamples, cfg.bootstrap.level, &mut rng, |idx| {
                    site_errors(&mean_over(&runs, idx, i, &sites), &base[i], &sites).1
                })?;
                result.rows.push(point.row(t, obs, td, ci, m));
            }
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{ExperimentKind, ModelConfig, SiteSet};

    fn config(backend: Backend) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(ExperimentKind::ErrorVsT, ModelConfig::mixed_field_ising(6), 9);
        c.grid.tau = vec![0.25];
        c.grid.t = vec![0.0, 0.5, 1.0];
        c.noise.p0 = Some(2e-3);
        c.noise.p1 = Some(4e-3);
        c.dynamics.backend = backend;
        c.dynamics.trajectories = 400;
        c.bootstrap.resamples = 200;
        c
    }

    #[test]
    fn trajectories_agree_with_the_exact_channel() {
        let exact = run_dynamics(&config(Backend::Exact)).unwrap();
        let traj = run_dynamics(&config(Backend::Trajectories)).unwrap();
        assert_eq!(exact.rows.len(), 3);
        assert_eq!(exact.rows[0].trace_distance, 0.0);
        for (e, r) in exact.rows.iter().zip(&traj.rows).skip(1) {
            assert_eq!(e.ci_lo, e.trace_distance);
            assert!(r.ci_lo <= r.trace_distance && r.trace_distance <= r.ci_hi);
            assert!(e.trace_distance > 0.0);
            // the trajectory mean carries sampling noise of order 1/sqrt(400)
            assert!((e.obs_z - r.obs_z).abs() < 0.02, "{} vs {}", e.obs_z, r.obs_z);
        }
        assert_eq!(traj.seeds.len(), 2);
    }

    #[test]
    fn noiseless_runs_match_their_baseline_and_repeat_exactly() {
        let mut c = config(Backend::Trajectories);
        c.noise.noiseless = true;
        c.dynamics.sites = SiteSet::Named("bulk".into());
        let r = run_dynamics(&c).unwrap();
        assert!(r.rows.iter().all(|row| row.trace_distance == 0.0 && row.site_set == "bulk"));
        let a = run_dynamics(&config(Backend::Trajectories)).unwrap();
        let b = run_dynamics(&config(Backend::Trajectories)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exact_baseline_measures_the_trotter_error() {
        let mut c = config(Backend::Exact);
        c.noise.noiseless = true;
        c.dynamics.baseline = Some(Baseline::Exact);
        c.grid.tau = vec![0.1, 0.05];
        c.grid.t = vec![1.0];
        let r = run_dynamics(&c).unwrap();
        let ratio = r.rows[0].trace_distance / r.rows[1].trace_distance;
        assert!((ratio - 4.0).abs() < 0.3, "ratio {ratio}");
    }
}
