use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use super::dynamics::{run_dynamics, DynamicsRow};
use super::report::SeedRecord;
use super::{derive_seed, initial_ensemble, rpe_samples, steps_for, zero_configuration};
use crate::error::{Error, Result};
use crate::pauli::{
    build_hamiltonian, floquet_hamiltonian, ising_split, ModelKind, ModelParams, Operator, Pauli, PauliString,
};
use crate::predictor::{
    error_model, fit_error_model, heating_trajectory, optimal_tau, xy_decay_rate, xy_energy, ErrorFit, HeatingPoint,
    TdptPlan,
};
use crate::rng::stream_rng;
use crate::rpe::{
    default_grid, ensemble_tables, mcmc_run_chains, prepare_product_state, product_expectation, ClassicalHamiltonian,
    EnsembleTables, RejectionSampler, Sample, SamplerConfig, SpinConfiguration, TableConfig,
};
use crate::sim::{
    circuit_unitary, diagonal_ensemble, run_trajectory, DensityMatrix, EigenObservable, EigenSystem, StateVector,
};
use crate::stats::{bootstrap_ci, linear_fit, mean, mean_stderr, LineFit};
use crate::trotter::build_trotter_circuit;

fn require(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    cfg.validate()?;
    if cfg.kind()? != kind {
        return Err(Error::Config(format!("expected a {} configuration", kind.name())));
    }
    Ok(())
}

fn zero_energy(h: &Operator) -> Result<f64> {
    product_expectation(&zero_configuration(h.num_sites()), h)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XyDecayRow {
    pub tau: f64,
    pub t: f64,
    pub energy: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n_samples: usize,
    /// `E0 e^{−γt}` with the predicted rate.
    pub predicted: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XyDecayFit {
    pub tau: f64,
    pub gamma_fit: f64,
    pub gamma_predicted: f64,
    /// `|γ_fit − γ_predicted| / γ_predicted`.
    pub relative_error: f64,
    pub fit: LineFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XyDecay {
    pub coordination: f64,
    pub lambda: f64,
    pub initial_energy: f64,
    pub rows: Vec<XyDecayRow>,
    pub fits: Vec<XyDecayFit>,
    pub seeds: Vec<SeedRecord>,
}

/// Mean energy of noisy XY trajectories under angle-independent
/// depolarizing noise, with an exponential fit per Trotter step.
pub fn xy_decay(cfg: &ExperimentConfig) -> Result<XyDecay> {
    require(cfg, ExperimentKind::XyDecay)?;
    let lambda = cfg.noise.lambda.ok_or_else(|| Error::Config("xy-decay needs noise.lambda".into()))?;
    let noise = cfg.noise.model()?;
    let master = cfg.seed()?;
    let params = cfg.model.params(None)?;
    if params.kind != ModelKind::Xy {
        return Err(Error::Config("xy-decay needs the XY model".into()));
    }
    let n = params.n;
    let h = build_hamiltonian(&params)?;
    let coordination = 2.0 * params.edges()?.len() as f64 / n as f64;
    let ensemble = initial_ensemble(&cfg.initial, &params, &h, derive_seed(master, &[1, n as u64]))?;
    let initial_energy =
        ensemble.configs.iter().map(|c| product_expectation(c, &h)).sum::<Result<f64>>()? / ensemble.len() as f64;
    let m = cfg.dynamics.trajectories;
    let times = &cfg.grid.t;
    let mut out = XyDecay { coordination, lambda, initial_energy, rows: Vec::new(), fits: Vec::new(), seeds: Vec::new() };
    for (k, &tau) in cfg.grid.tau.iter().enumerate() {
        let steps = times.iter().map(|&t| steps_for(t, tau)).collect::<Result<Vec<_>>>()?;
        let max = steps.iter().copied().max().unwrap_or(0);
        let circuit = build_trotter_circuit(&params, tau, max)?;
        let seed = derive_seed(master, &[4, k as u64]);
        let boot = derive_seed(master, &[5, k as u64]);
        out.seeds.push(SeedRecord::new(cfg.kind()?.name(), n, Some(tau), "trajectories", seed, 0, m));
        out.seeds.push(SeedRecord::new(cfg.kind()?.name(), n, Some(tau), "bootstrap", boot, 0, times.len()));
        let energies: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|i| {
                let mut psi = prepare_product_state(&ensemble.configs[i % ensemble.len()])?;
                let mut rng = stream_rng(seed, i as u64);
                let mut e = vec![0.0; steps.len()];
                run_trajectory(&mut psi, &circuit, &noise, &mut rng, |s, psi| {
                    if steps.contains(&s) {
                        let value = psi.expectation(&h)?;
                        steps.iter().zip(e.iter_mut()).filter(|(&w, _)| w == s).for_each(|(_, x)| *x = value);
                    }
                    Ok(())
                })?;
                Ok(e)
            })
            .collect::<Result<_>>()?;
        let gamma = xy_decay_rate(coordination, lambda, tau)?;
        let mut fit_t = Vec::new();
        let mut fit_y = Vec::new();
        for (i, &t) in times.iter().enumerate() {
            let samples: Vec<f64> = energies.iter().map(|e| e[i]).collect();
            let energy = mean(&samples);
            let (ci_lo, ci_hi) = bootstrap_ci(&samples, cfg.bootstrap.resamples, cfg.bootstrap.level, &mut stream_rng(boot, i as u64))?;
            if energy > 0.0 {
                fit_t.push(t);
                fit_y.push(energy.ln());
            }
            out.rows.push(XyDecayRow { tau, t, energy, ci_lo, ci_hi, n_samples: m, predicted: xy_energy(t, initial_energy, gamma) });
        }
        let fit = linear_fit(&fit_t, &fit_y)?;
        out.fits.push(XyDecayFit {
            tau,
            gamma_fit: -fit.slope,
            gamma_predicted: gamma,
            relative_error: (-fit.slope - gamma).abs() / gamma,
            fit,
        });
    }
    Ok(out)
}

/// Site-averaged `⟨Z⟩` estimate from one sampler.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZEstimate {
    /// `rejection`, `mcmc-window` or `mcmc-fixed`.
    pub method: String,
    pub epsilon: f64,
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RpeValidation {
    pub energy: f64,
    pub estimates: Vec<ZEstimate>,
    /// Per window: `|MCMC − rejection|` in combined standard errors.
    pub z_scores: Vec<(f64, f64)>,
    /// Weighted linear fit of the rejection means against `ε²`, evaluated at `ε = 0`.
    pub trend_intercept: f64,
    pub trend_stderr: f64,
    /// `|fixed-energy MCMC − trend_intercept|` in combined standard errors.
    pub fixed_z_score: f64,
    /// Fixed-energy chain samples.
    #[serde(skip)]
    pub fixed_samples: Vec<Sample>,
    pub seeds: Vec<SeedRecord>,
}

fn z_of(c: &SpinConfiguration) -> f64 {
    c.spins().iter().map(|s| s[2]).sum::<f64>() / c.num_sites() as f64
}

/// Batch-means estimate over independent chains: the mean of all samples
/// and the standard error of the per-chain means.
fn chain_estimate(method: &str, epsilon: f64, chains: &[Vec<Sample>]) -> ZEstimate {
    let means: Vec<f64> = chains.iter().map(|c| c.iter().map(|s| z_of(&s.config)).sum::<f64>() / c.len() as f64).collect();
    let (mean, stderr) = mean_stderr(&means);
    ZEstimate { method: method.into(), epsilon, mean, stderr, samples: chains.iter().map(Vec::len).sum() }
}

/// Weighted least squares `y = a + b x`; returns `(a, stderr of a)`.
fn weighted_intercept(x: &[f64], y: &[f64], se: &[f64]) -> (f64, f64) {
    let (mut s, mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((&x, &y), &e) in x.iter().zip(y).zip(se) {
        let w = 1.0 / (e * e);
        s += w;
        sx += w * x;
        sxx += w * x * x;
        sy += w * y;
        sxy += w * x * y;
    }
    let det = s * sxx - sx * sx;
    ((sxx * sy - sx * sxy) / det, (sxx / det).sqrt())
}

/// Compares windowed MCMC against rejection sampling at each window and the
/// fixed-energy chain against the `ε → 0` trend of the rejection estimates.
pub fn rpe_validate(cfg: &ExperimentConfig) -> Result<RpeValidation> {
    require(cfg, ExperimentKind::RpeValidate)?;
    let master = cfg.seed()?;
    let params = cfg.model.params(None)?;
    let n = params.n;
    let h = build_hamiltonian(&params)?;
    let ham = ClassicalHamiltonian::new(&h)?;
    let rpe = &cfg.rpe;
    let energy = match rpe.energy_density {
        Some(e) => e * n as f64,
        None => zero_energy(&h)?,
    };
    if rpe.windows.len() < 2 || rpe.windows.iter().any(|&w| !(w > 0.0)) || rpe.chains < 2 || rpe.rejection_samples < 2 {
        return Err(Error::Config("rpe-validate needs two or more positive windows, chains and rejection samples".into()));
    }
    let name = cfg.kind()?.name();
    let mut estimates = Vec::new();
    let mut seeds = Vec::new();
    let mut z_scores = Vec::new();
    let mut rejection_means = Vec::new();
    let sampler = |window: f64, seed: u64| SamplerConfig {
        energy,
        window,
        move_size: rpe.move_size,
        sweeps: rpe.sweeps,
        thinning: 1,
        burn_in: rpe.burn_in,
        seed,
    };
    for (k, &eps) in rpe.windows.iter().enumerate() {
        let rej_seed = derive_seed(master, &[6, k as u64]);
        let sampler_rej = RejectionSampler::new(ham.clone(), energy, eps)?;
        let zs: Vec<f64> = (0..rpe.rejection_samples)
            .into_par_iter()
            .map(|i| Ok(z_of(&sampler_rej.sample(&mut stream_rng(rej_seed, i as u64))?.0)))
            .collect::<Result<_>>()?;
        let (m_rej, se_rej) = mean_stderr(&zs);
        let rej = ZEstimate { method: "rejection".into(), epsilon: eps, mean: m_rej, stderr: se_rej, samples: zs.len() };
        let mc_seed = derive_seed(master, &[7, k as u64]);
        let mc = chain_estimate("mcmc-window", eps, &mcmc_run_chains(&ham, &sampler(eps, mc_seed), rpe.chains)?);
        z_scores.push((eps, (mc.mean - rej.mean).abs() / (mc.stderr.powi(2) + rej.stderr.powi(2)).sqrt()));
        seeds.push(SeedRecord::new(name, n, None, &format!("rejection eps={eps}"), rej_seed, 0, rpe.rejection_samples));
        seeds.push(SeedRecord::new(name, n, None, &format!("mcmc eps={eps}"), mc_seed, 0, rpe.chains));
        rejection_means.push((eps * eps, rej.mean, rej.stderr));
        estimates.push(rej);
        estimates.push(mc);
    }
    let fixed_seed = derive_seed(master, &[8]);
    let fixed_samples = mcmc_run_chains(&ham, &sampler(0.0, fixed_seed), rpe.chains)?;
    let fixed = chain_estimate("mcmc-fixed", 0.0, &fixed_samples);
    seeds.push(SeedRecord::new(name, n, None, "mcmc eps=0", fixed_seed, 0, rpe.chains));
    let x: Vec<f64> = rejection_means.iter().map(|r| r.0).collect();
    let y: Vec<f64> = rejection_means.iter().map(|r| r.1).collect();
    let se: Vec<f64> = rejection_means.iter().map(|r| r.2.max(1e-12)).collect();
    let (trend_intercept, trend_stderr) = weighted_intercept(&x, &y, &se);
    let fixed_z_score = (fixed.mean - trend_intercept).abs() / (fixed.stderr.powi(2) + trend_stderr.powi(2)).sqrt();
    estimates.push(fixed);
    Ok(RpeValidation {
        energy,
        estimates,
        z_scores,
        trend_intercept,
        trend_stderr,
        fixed_z_score,
        fixed_samples: fixed_samples.into_iter().flatten().collect(),
        seeds,
    })
}

/// RPE ensemble tables on the default grid of interior energy densities.
pub fn rpe_tables(cfg: &ExperimentConfig) -> Result<(EnsembleTables, Vec<SeedRecord>)> {
    require(cfg, ExperimentKind::RpeTables)?;
    let master = cfg.seed()?;
    let params = cfg.model.params(None)?;
    let h = build_hamiltonian(&params)?;
    let ham = ClassicalHamiltonian::new(&h)?;
    let grid = default_grid(&ham, cfg.rpe.grid_points, derive_seed(master, &[9]));
    let seed = derive_seed(master, &[10]);
    let table_cfg = TableConfig {
        sampler: SamplerConfig {
            energy: 0.0,
            window: 0.0,
            move_size: cfg.rpe.move_size,
            sweeps: cfg.rpe.sweeps,
            thinning: 1,
            burn_in: cfg.rpe.burn_in,
            seed,
        },
        chains: cfg.rpe.chains,
        center: None,
        bond: None,
    };
    let tables = ensemble_tables(&h, &grid, &table_cfg)?;
    // grid point i uses seed + i with chains as streams
    let name = cfg.kind()?.name();
    let seeds = (0..grid.len())
        .map(|i| SeedRecord::new(name, params.n, None, &format!("grid point {i}"), seed.wrapping_add(i as u64), 0, cfg.rpe.chains))
        .collect();
    Ok((tables, seeds))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TdptRow {
    pub t: f64,
    /// Exact summed trace distance between Trotter and exact evolution.
    pub exact: f64,
    /// Summed trace distance predicted by first-order perturbation theory.
    pub predicted: f64,
    /// Site sums of the secular and bounded terms over `⟨Z_j⟩`.
    pub t1_z: f64,
    pub t2_z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TdptCheck {
    pub n: usize,
    pub tau: f64,
    pub rows: Vec<TdptRow>,
    /// `‖predicted − exact‖₂ / ‖exact‖₂` over the grid times.
    pub relative_rms: f64,
    /// Diagonal-ensemble evolution of the RPE mixture: `(t, exact summed trace distance)`.
    pub diagonal: Vec<(f64, f64)>,
    /// Largest `|T1|` over every Bloch observable and diagonal time.
    pub diagonal_t1_max: f64,
    pub seeds: Vec<SeedRecord>,
}

fn bloch_observables(n: usize) -> Vec<Operator> {
    (0..n)
        .flat_map(|j| {
            [Pauli::X, Pauli::Y, Pauli::Z]
                .map(|p| Operator::from_real_terms(n, [(PauliString::single(n, j, p), 1.0)]).expect("single-site term"))
        })
        .collect()
}

/// `Σ_j ½‖Δb_j‖` from Bloch-component differences ordered `(j, x/y/z)`.
fn summed_distance(diff: impl Fn(usize) -> f64, n: usize) -> f64 {
    (0..n).map(|j| 0.5 * (0..3).map(|k| diff(3 * j + k).powi(2)).sum::<f64>().sqrt()).sum()
}

/// First-order perturbation theory for the Trotter error of the one-site
/// Bloch vectors, against exact diagonalization of the Trotter step.
pub fn tdpt_check(cfg: &ExperimentConfig) -> Result<TdptCheck> {
    require(cfg, ExperimentKind::TdptCheck)?;
    let master = cfg.seed()?;
    let params = cfg.model.params(None)?;
    let n = params.n;
    let tau = cfg.grid.tau[0];
    let (h1, h2) = ising_split(&params)?;
    let h = build_hamiltonian(&params)?;
    let v = floquet_hamiltonian(&h1, &h2, tau)?.v;
    let eig_h = EigenSystem::hamiltonian(&h)?;
    let eig_f = EigenSystem::trotter_unitary(circuit_unitary(&build_trotter_circuit(&params, tau, 1)?)?.as_ref(), tau)?;
    let ops = bloch_observables(n);
    let obs_h: Vec<EigenObservable> = ops.iter().map(|o| EigenObservable::new(&eig_h, o)).collect::<Result<_>>()?;
    let obs_f: Vec<EigenObservable> = ops.iter().map(|o| EigenObservable::new(&eig_f, o)).collect::<Result<_>>()?;
    let plan = TdptPlan::new(&eig_h, &v)?;

    let seed = derive_seed(master, &[1, n as u64]);
    let ensemble = initial_ensemble(&cfg.initial, &params, &h, seed)?;
    let states: Vec<StateVector> = ensemble.configs.iter().map(prepare_product_state).collect::<Result<_>>()?;
    let rho0 = DensityMatrix::from_mixture(&states)?;
    let times = &cfg.grid.t;
    let predicted = plan.mixed(eig_h.to_eigenbasis(&rho0)?.as_ref(), &obs_h, times, tau)?;
    let rho_h = eig_h.to_eigenbasis(&rho0)?;
    let rho_f = eig_f.to_eigenbasis(&rho0)?;
    let rows: Vec<TdptRow> = times
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let diff: Vec<f64> = obs_f
                .iter()
                .zip(&obs_h)
                .map(|(f, e)| f.mixed(rho_f.as_ref(), &eig_f.values, t) - e.mixed(rho_h.as_ref(), &eig_h.values, t))
                .collect();
            let z = |f: fn(&crate::predictor::TdptPoint) -> f64| (0..n).map(|j| f(&predicted[3 * j + 2][i])).sum();
            TdptRow {
                t,
                exact: summed_distance(|k| diff[k], n),
                predicted: summed_distance(|k| predicted[k][i].total(), n),
                t1_z: z(|p| p.t1),
                t2_z: z(|p| p.t2),
            }
        })
        .collect();
    let num: f64 = rows.iter().map(|r| (r.predicted - r.exact).powi(2)).sum();
    let den: f64 = rows.iter().map(|r| r.exact.powi(2)).sum();

    let rpe_seed = derive_seed(master, &[11, n as u64]);
    let configs = rpe_samples(&h, zero_energy(&h)?, cfg.tdpt.samples, cfg.tdpt.burn_in, 0.0, if n >= 6 { 2 } else { 1 }, rpe_seed)?;
    let mixture: Vec<StateVector> = configs.iter().map(prepare_product_state).collect::<Result<_>>()?;
    let rho_d = diagonal_ensemble(&DensityMatrix::from_mixture(&mixture)?, &eig_h)?;
    let d_times = &cfg.tdpt.diagonal_times;
    let d_pred = plan.mixed(eig_h.to_eigenbasis(&rho_d)?.as_ref(), &obs_h, d_times, tau)?;
    let diagonal_t1_max = d_pred.iter().flatten().map(|p| p.t1.abs()).fold(0.0, f64::max);
    let d_h = eig_h.to_eigenbasis(&rho_d)?;
    let d_f = eig_f.to_eigenbasis(&rho_d)?;
    let diagonal = d_times
        .iter()
        .map(|&t| {
            let diff: Vec<f64> = obs_f
                .iter()
                .zip(&obs_h)
                .map(|(f, e)| f.mixed(d_f.as_ref(), &eig_f.values, t) - e.mixed(d_h.as_ref(), &eig_h.values, t))
                .collect();
            (t, summed_distance(|k| diff[k], n))
        })
        .collect();
    let name = cfg.kind()?.name();
    let mut seeds = vec![SeedRecord::new(name, n, None, "diagonal-ensemble chains", rpe_seed, 0, cfg.tdpt.samples)];
    if let Some(s) = ensemble.seed {
        seeds.push(SeedRecord::new(name, n, None, "rpe-chains", s, 0, ensemble.len()));
    }
    Ok(TdptCheck { n, tau, rows, relative_rms: (num / den).sqrt(), diagonal, diagonal_t1_max, seeds })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub t: f64,
    pub tau: f64,
    pub error: f64,
    pub gate_term: f64,
    pub trotter_term: f64,
    pub valid: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOutcome {
    pub fit: ErrorFit,
    /// `(t, τ*, predicted error at τ*)` for each grid time, when defined.
    pub optimal: Vec<(f64, f64, f64)>,
    pub curve: Vec<PredictionRow>,
    /// The simulated sweep when no input data was given.
    pub measured: Vec<DynamicsRow>,
    pub heating: Vec<HeatingPoint>,
    pub seeds: Vec<SeedRecord>,
}

fn read_dynamics_csv(path: &std::path::Path) -> Result<Vec<DynamicsRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    r.deserialize().map(|row| row.map_err(|e| Error::Config(format!("{}: {e}", path.display())))).collect()
}

/// Fits `S p0 t/τ + S p1 t + C τ²` to measured errors (an input CSV or a
/// simulated error-vs-τ sweep) or takes given constants, then predicts the
/// error on the configured grids, the optimal step and, with tables, the
/// heating trajectory.
pub fn fit_and_predict(cfg: &ExperimentConfig) -> Result<FitOutcome> {
    require(cfg, ExperimentKind::FitAndPredict)?;
    let noise = cfg.noise.model()?;
    let f = &cfg.fit;
    let mut measured = Vec::new();
    let mut seeds = Vec::new();
    let fit = if let Some(path) = &f.fit_file {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str::<ErrorFit>(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
    } else if let (Some(s), Some(c)) = (f.s, f.c) {
        ErrorFit::new(s, c, noise.p0, noise.p1)
    } else {
        let rows = match &f.input {
            Some(path) => read_dynamics_csv(path)?,
            None => {
                let mut sweep = cfg.clone();
                sweep.kind = Some(ExperimentKind::ErrorVsTau);
                let r = run_dynamics(&sweep)?;
                seeds = r.seeds;
                measured = r.rows.clone();
                r.rows
            }
        };
        let tau_max = f.tau_max.unwrap_or(f64::INFINITY);
        let samples: Vec<(f64, f64, f64)> =
            rows.iter().filter(|r| r.tau <= tau_max && r.t > 0.0).map(|r| (r.t, r.tau, r.trace_distance)).collect();
        fit_error_model(&samples, noise.p0, noise.p1)?
    };
    let mut curve = Vec::new();
    let mut optimal = Vec::new();
    for &t in &cfg.grid.t {
        for &tau in &cfg.grid.tau {
            let p = error_model(t, tau, &fit)?;
            curve.push(PredictionRow { t, tau, error: p.error, gate_term: p.gate_term, trotter_term: p.trotter_term, valid: p.valid });
        }
        if let Ok((tau, err)) = optimal_tau(&fit, t) {
            optimal.push((t, tau, err));
        }
    }
    let heating = match &f.tables {
        Some(path) => {
            let tables = EnsembleTables::load(path)?;
            let params = cfg.model.params(Some(tables.num_sites))?;
            let h = build_hamiltonian(&params)?;
            let e0 = match cfg.initial.energy_density {
                Some(e) => e * params.n as f64,
                None => zero_energy(&h)?,
            };
            heating_trajectory(&tables, &noise, &params, cfg.grid.tau[0], &cfg.grid.t, e0)?
        }
        None => Vec::new(),
    };
    Ok(FitOutcome { fit, optimal, curve, measured, heating, seeds })
}

/// Product-state energy of `params` in `|0…0⟩`.
pub fn zero_state_energy(params: &ModelParams) -> Result<f64> {
    zero_energy(&build_hamiltonian(params)?)
}
