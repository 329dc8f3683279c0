//! End-to-end acceptance checks at full problem sizes. Runs as a plain
//! binary: one PASS/FAIL line per criterion, non-zero exit on any failure.
//! Arguments that parse as integers select criteria, e.g.
//! `cargo test --test acceptance -- 3 10`.

use std::f64::consts::PI;
use std::time::Instant;

use faer::Mat;
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use thermalsim::harness::*;
use thermalsim::pauli::{build_hamiltonian, ModelKind, ModelParams, Operator, Pauli, PauliString};
use thermalsim::predictor::{fit_error_model, naive_estimate, optimal_tau, error_model, ErrorFit};
use thermalsim::rpe::{seed_configuration, ClassicalHamiltonian, McmcChain, SamplerConfig};
use thermalsim::sim::{circuit_unitary, dense_matrix, EigenSystem, OneRdm, StateVector};
use thermalsim::stats::linear_fit;
use thermalsim::trotter::{build_trotter_circuit, variant_channels, ChannelKind};

type Outcome = Result<(bool, String), String>;

const P0: f64 = 3.5e-4;
const P1: f64 = 9.5e-4;

fn grid(step: f64, max: f64) -> Vec<f64> {
    (0..=(max / step).round() as usize).map(|i| i as f64 * step).collect()
}

fn err(e: thermalsim::Error) -> String {
    e.to_string()
}

fn mfi(kind: ExperimentKind, n: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig::new(kind, ModelConfig::mixed_field_ising(n), seed)
}

/// Noisy mixed-field Ising sweep from the RPE mixture at the `|0…0⟩` energy.
fn noisy_rpe(kind: ExperimentKind, seed: u64) -> ExperimentConfig {
    let mut c = mfi(kind, 12, seed);
    c.noise.p0 = Some(P0);
    c.noise.p1 = Some(P1);
    c.initial = InitialConfig { kind: InitialKind::Rpe, samples: Some(100), ..Default::default() };
    c
}

fn xy_decay_check() -> Outcome {
    let model = ModelConfig { kind: ModelKind::Xy, n: None, lx: Some(4), ly: Some(4), g: None, h: None, j: None, boundary: None, disorder_seed: None };
    let mut c = ExperimentConfig::new(ExperimentKind::XyDecay, model, 1);
    c.grid.tau = vec![0.1, 0.05];
    c.grid.t = grid(0.5, 10.0);
    c.noise.lambda = Some(1e-3);
    c.initial.kind = InitialKind::Explicit;
    c.initial.direction = Some([1.0, 0.0, 0.0]);
    c.dynamics.backend = Backend::Trajectories;
    c.dynamics.trajectories = 200;
    c.bootstrap.resamples = 200;
    let r = xy_decay(&c).map_err(err)?;
    let (coarse, fine) = (&r.fits[0], &r.fits[1]);
    let within = coarse.relative_error < 0.1 && fine.relative_error < 0.1;
    let improves = fine.relative_error < coarse.relative_error;
    Ok((
        within && improves,
        format!(
            "gamma tau=0.1: {:.4} vs {:.4} ({:.1}%); tau=0.05: {:.4} vs {:.4} ({:.1}%); improves: {improves}",
            coarse.gamma_fit,
            coarse.gamma_predicted,
            100.0 * coarse.relative_error,
            fine.gamma_fit,
            fine.gamma_predicted,
            100.0 * fine.relative_error
        ),
    ))
}

fn rpe_sampler_check() -> Outcome {
    let c = mfi(ExperimentKind::RpeValidate, 12, 2);
    let r = rpe_validate(&c).map_err(err)?;
    let worst = r.z_scores.iter().map(|z| z.1).fold(0.0, f64::max);
    Ok((
        worst < 3.0 && r.fixed_z_score < 3.0,
        format!("max window z = {worst:.2}, fixed-energy z vs eps->0 trend = {:.2}", r.fixed_z_score),
    ))
}

fn move_invariant_check() -> Outcome {
    let params = ModelParams::mixed_field_ising(12);
    let h = build_hamiltonian(&params).map_err(err)?;
    let ham = ClassicalHamiltonian::new(&h).map_err(err)?;
    let target = -1.4 * 12.0;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let steps_per_size = 250_000;
    let mut worst_drift = 0.0f64;
    let mut worst_norm = 0.0f64;
    for m in 1..=4 {
        let start = seed_configuration(&ham, target, &mut rng).map_err(err)?;
        let cfg = SamplerConfig { move_size: m, ..SamplerConfig::new(target, 1, 0) };
        let mut chain = McmcChain::new(&ham, cfg, start, ChaCha8Rng::seed_from_u64(m as u64)).map_err(err)?;
        for k in 1..=steps_per_size {
            let rec = chain.step().map_err(err)?;
            if !rec.accepted {
                return Ok((false, format!("rejected proposal at m={m}, step {k}")));
            }
            let config = chain.config();
            let drift = (ham.energy(config).map_err(err)? - target).abs();
            if drift > 1e-9 * k as f64 {
                return Ok((false, format!("energy drift {drift:e} at m={m}, step {k}")));
            }
            worst_drift = worst_drift.max(drift);
            let norm = config.max_norm_error();
            if norm > 1e-12 {
                return Ok((false, format!("spin norm error {norm:e} at m={m}, step {k}")));
            }
            worst_norm = worst_norm.max(norm);
            for &j in &rec.sites {
                let f = ham.effective_field(config, j).map_err(err)?;
                let s = config.spin(j);
                let local = f[0] * s[0] + f[1] * s[1] + f[2] * s[2];
                let bound = (f[0] * f[0] + f[1] * f[1] + f[2] * f[2]).sqrt();
                if local.abs() > bound * (1.0 + 1e-12) {
                    return Ok((false, format!("local energy {local} exceeds {bound} at m={m}, step {k}")));
                }
            }
        }
    }
    Ok((true, format!("{} steps, max drift {worst_drift:.1e}, max norm error {worst_norm:.1e}, no rejections", 4 * steps_per_size)))
}

fn trotter_scaling_check() -> Outcome {
    let mut detail = Vec::new();
    let mut pass = true;
    for rpe in [false, true] {
        let mut c = mfi(ExperimentKind::ErrorVsTau, 12, 4);
        c.grid.tau = vec![0.02, 0.04, 0.08, 0.16];
        // t = 2 is not a whole number of 0.16 steps; 1.92 is for every tau
        c.grid.t = vec![1.92];
        c.noise.noiseless = true;
        c.dynamics.baseline = Some(Baseline::Exact);
        if rpe {
            c.initial.kind = InitialKind::Rpe;
            c.initial.samples = Some(100);
        }
        let r = run_dynamics(&c).map_err(err)?;
        let x: Vec<f64> = r.rows.iter().map(|r| r.tau.ln()).collect();
        let y: Vec<f64> = r.rows.iter().map(|r| (r.trace_distance * 12.0).ln()).collect();
        let slope = linear_fit(&x, &y).map_err(err)?.slope;
        pass &= (slope - 2.0).abs() <= 0.15;
        detail.push(format!("{} slope {slope:.3}", if rpe { "RPE mixture" } else { "|0..0>" }));
    }
    Ok((pass, detail.join(", ")))
}

fn tdpt_check_criterion() -> Outcome {
    let mut c = mfi(ExperimentKind::TdptCheck, 10, 5);
    c.grid.tau = vec![0.01];
    c.grid.t = (1..=100).map(f64::from).collect();
    let r = tdpt_check(&c).map_err(err)?;
    let at = |t: f64| r.diagonal.iter().find(|d| d.0 == t).map(|d| d.1).ok_or(format!("no diagonal point at t={t}"));
    let (early, late) = (at(1.0)?, at(1000.0)?);
    let pass = r.relative_rms < 0.1 && r.diagonal_t1_max < 1e-12 && late <= 3.0 * early;
    Ok((
        pass,
        format!(
            "relative RMS {:.2e}; diagonal ensemble: max |T1| {:.1e}, error t=1 {early:.3e}, t=1000 {late:.3e}",
            r.relative_rms, r.diagonal_t1_max
        ),
    ))
}

fn single_error_check() -> Outcome {
    let mut c = mfi(ExperimentKind::SingleError, 14, 21);
    c.grid.tau = vec![0.02];
    c.grid.t = grid(0.1, 6.0);
    c.initial.kind = InitialKind::Rpe;
    c.initial.samples = Some(24);
    c.insertion = InsertionConfig { pauli: Pauli::Y, site: None, t0: 1.5 };
    let r = single_error_experiment(&c).map_err(err)?;
    let fit = rms_exponent(&r, &r.r_rms, r.t0, 6.0).map_err(err)?;
    let trace_fit = rms_exponent(&r, &r.r_rms_trace, r.t0, 6.0).map_err(err)?;
    let pass = r.max_jump_error <= 1e-12 && r.drift < 0.05 && (fit.slope - 0.5).abs() <= 0.15;
    Ok((
        pass,
        format!(
            "jump {:.6} (max error {:.1e}), drift {:.1e}, r_rms exponent {:.3} (D_tr-weighted {:.3})",
            r.jump, r.max_jump_error, r.drift, fit.slope, trace_fit.slope
        ),
    ))
}

fn noise_linearity_check() -> Outcome {
    let mut c = noisy_rpe(ExperimentKind::ErrorVsT, 7);
    c.grid.tau = vec![0.25];
    c.grid.t = (2..=16).map(|i| i as f64 * 0.25).collect();
    let r = run_dynamics(&c).map_err(err)?;
    let t: Vec<f64> = r.rows.iter().map(|r| r.t).collect();
    let d: Vec<f64> = r.rows.iter().map(|r| r.trace_distance).collect();
    let fit = linear_fit(&t, &d).map_err(err)?;
    let residual = t.iter().zip(&d).map(|(t, d)| ((fit.intercept + fit.slope * t - d) / d).abs()).fold(0.0, f64::max);

    let mut c = noisy_rpe(ExperimentKind::ErrorVsN, 7);
    c.grid.tau = vec![0.2];
    c.grid.t = vec![4.0, 6.0];
    c.grid.n = vec![8, 10, 12];
    let r = run_dynamics(&c).map_err(err)?;
    let mut spread = 0.0f64;
    for t in [4.0, 6.0] {
        let v: Vec<f64> = r.rows.iter().filter(|r| r.t == t).map(|r| r.trace_distance).collect();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let (lo, hi) = v.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        spread = spread.max((hi - lo) / mean);
    }
    Ok((
        residual < 0.15 && spread < 0.15,
        format!("linear fit slope {:.2e}, max relative residual {:.1}%; max spread across N {:.1}%", fit.slope, 100.0 * residual, 100.0 * spread),
    ))
}

fn error_vs_tau_check() -> Outcome {
    let mut c = noisy_rpe(ExperimentKind::ErrorVsTau, 8);
    // steps dividing t = 4 between 0.05 and 0.4
    c.grid.tau = [80, 40, 32, 25, 20, 16, 12, 10].iter().map(|&d| 4.0 / d as f64).collect();
    c.grid.t = vec![4.0];
    let r = run_dynamics(&c).map_err(err)?;
    let (i_min, best) = r.rows.iter().enumerate().min_by(|a, b| a.1.trace_distance.total_cmp(&b.1.trace_distance)).expect("rows");
    let interior = i_min > 0 && i_min + 1 < r.rows.len();
    let samples: Vec<(f64, f64, f64)> = r.rows.iter().filter(|r| r.tau <= 0.25).map(|r| (r.t, r.tau, r.trace_distance)).collect();
    let fit = fit_error_model(&samples, P0, P1).map_err(err)?;
    let (tau_star, _) = optimal_tau(&fit, 4.0).map_err(err)?;
    let offset = (tau_star - best.tau).abs() / best.tau;
    let pass = interior && fit.s > 0.0 && fit.c > 0.0 && fit.max_relative_residual() < 0.2 && offset < 0.25;
    Ok((
        pass,
        format!(
            "empirical argmin tau {:.3}; fit S {:.3}, C {:.3}, max residual {:.1}%; fitted optimum {tau_star:.3} ({:.1}% off)",
            best.tau,
            fit.s,
            fit.c,
            100.0 * fit.max_relative_residual(),
            100.0 * offset
        ),
    ))
}

fn scar_check() -> Outcome {
    let mut model = ModelConfig::mixed_field_ising(14);
    model.kind = ModelKind::QuantumEast;
    let mut c = ExperimentConfig::new(ExperimentKind::ScarVsThermal, model, 3);
    c.grid.tau = vec![0.1];
    c.grid.t = grid(0.5, 10.0);
    c.insertion = InsertionConfig { pauli: Pauli::Y, site: None, t0: 1.5 };
    c.scar.theta = 3.0 * PI / 8.0;
    let r = scar_vs_thermal(&c).map_err(err)?;
    let s = &r.scar_fit;
    let significant = s.fit.slope > 3.0 * s.fit.slope_stderr;
    let pass = significant && s.fit.r_squared > 0.8 && r.thermal_fit.ratio < 2.0 && s.ratio >= 2.0 * r.thermal_fit.ratio;
    Ok((
        pass,
        format!(
            "scar slope {:.3} ± {:.3}, R² {:.3}, ratio {:.2}; thermal ratio {:.2}",
            s.fit.slope, s.fit.slope_stderr, s.fit.r_squared, s.ratio, r.thermal_fit.ratio
        ),
    ))
}

fn max_abs(m: &Mat<C>) -> f64 {
    let mut worst = 0.0f64;
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            worst = worst.max(m[(r, c)].norm());
        }
    }
    worst
}

fn structural_check() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;

    let mut kraus = 0.0f64;
    let identity = Mat::<C>::identity(4, 4);
    for kind in [ChannelKind::Depolarizing, ChannelKind::PhaseFlip, ChannelKind::BitFlip] {
        for p in [0.0, 1e-3, 0.1, 0.5, 1.0] {
            let channel = variant_channels(kind, p).map_err(err)?;
            let mut sum = Mat::<C>::zeros(4, 4);
            for b in &channel.branches {
                let op = Operator::from_terms(2, [(PauliString::from_letters(&b.paulis), C::new(b.prob.sqrt(), 0.0))]).map_err(err)?;
                let k = dense_matrix(&op).map_err(err)?;
                sum += k.adjoint() * &k;
            }
            kraus = kraus.max(max_abs(&(sum - &identity)));
        }
    }
    pass &= kraus <= 1e-14;
    notes.push(format!("Kraus {kraus:.0e}"));

    let mut unitarity = 0.0f64;
    let east = ModelParams::quantum_east(8, 1.0, None);
    for params in [ModelParams::mixed_field_ising(8), ModelParams::xy_square(2, 4), east] {
        let circuit = build_trotter_circuit(&params, 0.13, 2).map_err(err)?;
        let u = circuit_unitary(&circuit).map_err(err)?;
        let d = u.nrows();
        unitarity = unitarity.max(max_abs(&(u.adjoint() * &u - Mat::<C>::identity(d, d))));
    }
    pass &= unitarity <= 1e-10;
    notes.push(format!("unitarity {unitarity:.0e}"));

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut identity_gap = 0.0f64;
    for _ in 0..1000 {
        let mut bloch = || {
            let v: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let l = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt().max(1.0);
            v.map(|x| x / l)
        };
        let (a, b) = (OneRdm::new(bloch()), OneRdm::new(bloch()));
        let (ma, mb) = (a.matrix(), b.matrix());
        // ½‖ρ−σ‖₁ from the eigenvalues ±√(x² + |y|²) of the traceless difference
        let x = (ma[0][0] - mb[0][0]).re;
        let y = ma[0][1] - mb[0][1];
        let trace_norm = 0.5 * 2.0 * (x * x + y.norm_sqr()).sqrt();
        identity_gap = identity_gap.max((trace_norm - a.trace_distance(&b)).abs());
    }
    pass &= identity_gap <= 4.0 * f64::EPSILON;
    notes.push(format!("trace distance identity {identity_gap:.0e}"));

    let fit = ErrorFit::new(0.7661, 0.0979, P0, P1);
    let (tau_star, _) = optimal_tau(&fit, 4.0).map_err(err)?;
    let scan = (1..=100_000)
        .map(|i| i as f64 * 1e-5)
        .min_by(|a, b| error_model(4.0, *a, &fit).unwrap().error.total_cmp(&error_model(4.0, *b, &fit).unwrap().error))
        .expect("scan");
    pass &= (tau_star - scan).abs() <= 1e-5;
    notes.push(format!("optimal tau {tau_star:.5} vs scan {scan:.5}"));

    let trivial = naive_estimate(0.0, 500.0).map_err(err)? == (1.0, 0.0) && naive_estimate(0.01, 0.0).map_err(err)? == (1.0, 0.0);
    pass &= trivial;
    notes.push(format!("naive trivial cases {}", if trivial { "ok" } else { "wrong" }));

    let gates = build_trotter_circuit(&ModelParams::mixed_field_ising(20), 0.1, 300).map_err(err)?.num_two_qubit_gates();
    let small = build_trotter_circuit(&ModelParams::mixed_field_ising(7), 0.1, 9).map_err(err)?.num_two_qubit_gates();
    pass &= gates == 5700 && small == 6 * 9;
    notes.push(format!("gate count {gates}"));

    let mut y_max = 0.0f64;
    for n in [6, 10] {
        let h = build_hamiltonian(&ModelParams::mixed_field_ising(n)).map_err(err)?;
        let eig = EigenSystem::hamiltonian(&h).map_err(err)?;
        let d = 1usize << n;
        for k in 0..d {
            let amps: Vec<C> = (0..d).map(|r| eig.vectors[(r, k)]).collect();
            let psi = StateVector::from_amplitudes(n, amps).map_err(err)?;
            for j in 0..n {
                y_max = y_max.max(psi.pauli_expectation(&PauliString::single(n, j, Pauli::Y)).map_err(err)?.abs());
            }
        }
    }
    pass &= y_max <= 1e-8;
    notes.push(format!("eigenstate <Y> max {y_max:.0e}"));

    Ok((pass, notes.join(", ")))
}

fn main() {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(usize, &str, fn() -> Outcome); 10] = [
        (1, "XY energy decay rate", xy_decay_check),
        (2, "RPE sampler agreement", rpe_sampler_check),
        (3, "MCMC move invariants", move_invariant_check),
        (4, "Trotter error tau^2 scaling", trotter_scaling_check),
        (5, "perturbative Trotter error", tdpt_check_criterion),
        (6, "single-error physics", single_error_check),
        (7, "noise error linear in t and flat in N", noise_linearity_check),
        (8, "error-vs-tau minimum and fit", error_vs_tau_check),
        (9, "scar vs thermal single error", scar_check),
        (10, "structural properties", structural_check),
    ];
    let mut failures = 0;
    for (id, name, check) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "{} criterion {id:>2} {name}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
