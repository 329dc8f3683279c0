use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classical::{dot, norm, random_unit_vector, ClassicalHamiltonian, SpinConfiguration};
use crate::error::{Error, Result};
use crate::pauli::Operator;
use crate::rng::stream_rng;

/// Fields weaker than this leave a spin free; it is redrawn uniformly.
pub const DEGENERATE_FIELD: f64 = 1e-12;
/// Direction components below this are ignored when intersecting constraints.
const COMPONENT_TOL: f64 = 1e-12;
const MAX_SELECT_TRIES: usize = 10_000;

fn default_move_size() -> usize {
    2
}
fn default_thinning() -> usize {
    1
}
fn default_burn_in() -> usize {
    100
}

/// Settings of the fixed-energy (or energy-window) Metropolis sampler. One
/// sweep is `N` moves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Target total energy.
    pub energy: f64,
    /// Window half-width `ε`; zero samples the fixed-energy shell.
    #[serde(default)]
    pub window: f64,
    /// Spins updated per move.
    #[serde(default = "default_move_size")]
    pub move_size: usize,
    /// Recorded sweeps after burn-in.
    pub sweeps: usize,
    #[serde(default = "default_thinning")]
    pub thinning: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn new(energy: f64, sweeps: usize, seed: u64) -> Self {
        Self {
            energy,
            window: 0.0,
            move_size: default_move_size(),
            sweeps,
            thinning: default_thinning(),
            burn_in: default_burn_in(),
            seed,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !self.energy.is_finite() || !(self.window >= 0.0) {
            return Err(Error::InvalidArgument("energy must be finite and window non-negative".into()));
        }
        if self.move_size == 0 || self.move_size > n {
            return Err(Error::InvalidArgument(format!("move size {} invalid for {n} sites", self.move_size)));
        }
        if self.move_size >= 2 && self.move_size > n / 3 {
            return Err(Error::InvalidArgument(format!(
                "move size {} needs at least {} sites",
                self.move_size,
                3 * self.move_size
            )));
        }
        if self.thinning == 0 {
            return Err(Error::InvalidArgument("thinning must be at least 1".into()));
        }
        Ok(())
    }
}

/// Interval `[s_min, s_max]` of steps `s` along `direction` that keep every
/// local energy `E_a + s r_a` inside `[-‖h_a‖, ‖h_a‖]` and, if given, the total
/// change `s Σ_a r_a` inside `window`.
pub fn feasible_interval(
    local: &[f64],
    norms: &[f64],
    direction: &[f64],
    window: Option<[f64; 2]>,
) -> (f64, f64) {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let mut clip = |r: f64, below: f64, above: f64| {
        // below <= s r <= above
        if r.abs() < COMPONENT_TOL {
            return;
        }
        let (a, b) = if r > 0.0 { (below / r, above / r) } else { (above / r, below / r) };
        lo = lo.max(a);
        hi = hi.min(b);
    };
    for ((&e, &h), &r) in local.iter().zip(norms).zip(direction) {
        clip(r, -h - e, h - e);
    }
    if let Some([wlo, whi]) = window {
        clip(direction.iter().sum(), wlo, whi);
    }
    (lo, hi)
}

/// What one move did, for diagnostics and invariant checks.
#[derive(Clone, Debug, PartialEq)]
pub struct MoveRecord {
    /// Sites whose energy was redistributed.
    pub sites: Vec<usize>,
    /// Unit direction in local-energy space over `sites`.
    pub direction: Vec<f64>,
    pub interval: (f64, f64),
    /// Chosen step along `direction`.
    pub step: f64,
    pub delta_energy: f64,
    /// Every move is accepted; kept so callers can assert it.
    pub accepted: bool,
}

fn select_sites<R: Rng + ?Sized>(ham: &ClassicalHamiltonian, m: usize, rng: &mut R) -> Result<Vec<usize>> {
    let n = ham.num_sites();
    for _ in 0..MAX_SELECT_TRIES {
        let sites = rand::seq::index::sample(rng, n, m).into_vec();
        let ok = sites
            .iter()
            .enumerate()
            .all(|(i, &a)| sites[i + 1..].iter().all(|&b| !ham.are_neighbors(a, b)));
        if ok {
            return Ok(sites);
        }
    }
    Err(Error::Numerical(format!("no {m} mutually non-neighbouring sites found")))
}

/// Unit vector on the cone `ĥ·σ = c` with a uniform azimuth.
fn cone_point<R: Rng + ?Sized>(h_hat: &[f64; 3], c: f64, rng: &mut R) -> [f64; 3] {
    let e1 = loop {
        let v = random_unit_vector(rng);
        let p = dot(&v, h_hat);
        let w = [v[0] - p * h_hat[0], v[1] - p * h_hat[1], v[2] - p * h_hat[2]];
        let l = norm(&w);
        if l > 1e-6 {
            break w.map(|x| x / l);
        }
    };
    let e2 = [
        h_hat[1] * e1[2] - h_hat[2] * e1[1],
        h_hat[2] * e1[0] - h_hat[0] * e1[2],
        h_hat[0] * e1[1] - h_hat[1] * e1[0],
    ];
    let phi = std::f64::consts::TAU * rng.random::<f64>();
    let c = c.clamp(-1.0, 1.0);
    let s = (1.0 - c * c).sqrt();
    let (sp, cp) = phi.sin_cos();
    [0, 1, 2].map(|k| c * h_hat[k] + s * (cp * e1[k] + sp * e2[k]))
}

fn apply_move<R: Rng + ?Sized>(
    ham: &ClassicalHamiltonian,
    cfg: &SamplerConfig,
    config: &mut SpinConfiguration,
    energy: f64,
    rng: &mut R,
) -> Result<MoveRecord> {
    let sites = select_sites(ham, cfg.move_size, rng)?;
    let mut delta = 0.0;
    let mut active = Vec::with_capacity(sites.len());
    let mut fields = Vec::with_capacity(sites.len());
    for &j in &sites {
        let h = ham.field_unchecked(config.spins(), j);
        if norm(&h) < DEGENERATE_FIELD {
            let old = config.spin(j);
            config.set_spin(j, random_unit_vector(rng));
            let new = config.spin(j);
            delta += dot(&h, &[new[0] - old[0], new[1] - old[1], new[2] - old[2]]);
        } else {
            active.push(j);
            fields.push(h);
        }
    }
    let norms: Vec<f64> = fields.iter().map(norm).collect();
    let local: Vec<f64> = active.iter().zip(&fields).map(|(&j, h)| dot(h, &config.spin(j))).collect();
    let k = active.len();

    let mut direction: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let mean = direction.iter().sum::<f64>() / k.max(1) as f64;
    direction.iter_mut().for_each(|r| *r -= mean);
    if cfg.window > 0.0 && k > 0 {
        let xi: f64 = rng.sample(StandardNormal);
        let along = cfg.window * xi / (k as f64).sqrt();
        direction.iter_mut().for_each(|r| *r += along);
    }
    let len = direction.iter().map(|r| r * r).sum::<f64>().sqrt();
    let (interval, step) = if len > 1e-300 {
        direction.iter_mut().for_each(|r| *r /= len);
        let window = (cfg.window > 0.0).then(|| [cfg.energy - cfg.window - energy, cfg.energy + cfg.window - energy]);
        let (lo, hi) = feasible_interval(&local, &norms, &direction, window);
        // the current point is feasible; guard against rounding at the edges
        let (lo, hi) = (lo.min(0.0), hi.max(0.0));
        ((lo, hi), lo + (hi - lo) * rng.random::<f64>())
    } else {
        direction.iter_mut().for_each(|r| *r = 0.0);
        ((0.0, 0.0), 0.0)
    };

    for (i, &j) in active.iter().enumerate() {
        let h = fields[i];
        let h_hat = h.map(|x| x / norms[i]);
        let target = local[i] + step * direction[i];
        let old = config.spin(j);
        config.set_spin(j, cone_point(&h_hat, target / norms[i], rng));
        let new = config.spin(j);
        delta += dot(&h, &[new[0] - old[0], new[1] - old[1], new[2] - old[2]]);
    }
    Ok(MoveRecord { sites: active, direction, interval, step, delta_energy: delta, accepted: true })
}

/// One move from `config`. The move changes the total energy only within the
/// configured window (not at all when `window = 0`) and is always accepted.
pub fn mcmc_step<R: Rng + ?Sized>(
    config: &SpinConfiguration,
    ham: &ClassicalHamiltonian,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<SpinConfiguration> {
    cfg.validate(ham.num_sites())?;
    let energy = ham.energy(config)?;
    let mut next = config.clone();
    apply_move(ham, cfg, &mut next, energy, rng)?;
    Ok(next)
}

/// A Markov chain with its running energy.
pub struct McmcChain<'a, R> {
    ham: &'a ClassicalHamiltonian,
    cfg: SamplerConfig,
    config: SpinConfiguration,
    energy: f64,
    rng: R,
}

impl<'a, R: Rng> McmcChain<'a, R> {
    pub fn new(ham: &'a ClassicalHamiltonian, cfg: SamplerConfig, start: SpinConfiguration, rng: R) -> Result<Self> {
        cfg.validate(ham.num_sites())?;
        let energy = ham.energy(&start)?;
        let tol = cfg.window.max(1e-9);
        if (energy - cfg.energy).abs() > tol {
            return Err(Error::InvalidArgument(format!(
                "start energy {energy} is not within {tol} of {}",
                cfg.energy
            )));
        }
        Ok(Self { ham, cfg, config: start, energy, rng })
    }

    pub fn config(&self) -> &SpinConfiguration {
        &self.config
    }

    /// Running energy, updated by the exact per-move change.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn step(&mut self) -> Result<MoveRecord> {
        let rec = apply_move(self.ham, &self.cfg, &mut self.config, self.energy, &mut self.rng)?;
        self.energy += rec.delta_energy;
        Ok(rec)
    }

    pub fn sweep(&mut self) -> Result<()> {
        for _ in 0..self.ham.num_sites() {
            self.step()?;
        }
        // drop accumulated rounding
        self.energy = self.ham.energy_unchecked(self.config.spins());
        Ok(())
    }
}

fn slerp(a: &[f64; 3], b: &[f64; 3], s: f64) -> [f64; 3] {
    let c = dot(a, b).clamp(-1.0, 1.0);
    let omega = c.acos();
    if omega < 1e-12 {
        return *a;
    }
    // direction from a toward b, perpendicular to a
    let mut perp = [b[0] - c * a[0], b[1] - c * a[1], b[2] - c * a[2]];
    if norm(&perp) < 1e-9 {
        let trial = if a[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let p = dot(&trial, a);
        perp = [trial[0] - p * a[0], trial[1] - p * a[1], trial[2] - p * a[2]];
    }
    let l = norm(&perp);
    let (sn, cs) = (s * omega).sin_cos();
    [0, 1, 2].map(|k| cs * a[k] + sn * perp[k] / l)
}

/// A configuration with energy `energy`, found by bisection along a per-site
/// great-circle path from the lowest to the highest mean-field configuration.
pub fn seed_configuration<R: Rng + ?Sized>(
    ham: &ClassicalHamiltonian,
    energy: f64,
    rng: &mut R,
) -> Result<SpinConfiguration> {
    let (lo_cfg, e_lo) = ham.extremal_configuration(-1.0, rng);
    let (hi_cfg, e_hi) = ham.extremal_configuration(1.0, rng);
    if !(e_lo - 1e-9..=e_hi + 1e-9).contains(&energy) {
        return Err(Error::Infeasible(format!(
            "energy {energy} outside the product-state range [{e_lo}, {e_hi}]"
        )));
    }
    let path = |s: f64| -> Vec<[f64; 3]> {
        lo_cfg.spins().iter().zip(hi_cfg.spins()).map(|(a, b)| slerp(a, b, s)).collect()
    };
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut best = (f64::INFINITY, path(0.0));
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let spins = path(mid);
        let e = ham.energy_unchecked(&spins);
        if (e - energy).abs() < best.0 {
            best = ((e - energy).abs(), spins);
        }
        if best.0 < 1e-12 || b - a < 1e-16 {
            break;
        }
        if e < energy {
            a = mid;
        } else {
            b = mid;
        }
    }
    for (s, e) in [(lo_cfg, e_lo), (hi_cfg, e_hi)] {
        if (e - energy).abs() < best.0 {
            best = ((e - energy).abs(), s.spins().to_vec());
        }
    }
    if best.0 > 1e-10 {
        return Err(Error::Numerical(format!("seed bisection stalled {} from target", best.0)));
    }
    SpinConfiguration::new(best.1.iter().map(|s| s.map(|x| x / norm(s))).collect())
}

/// A recorded chain state.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub chain: usize,
    /// Sweep index after burn-in, starting at 0.
    pub sweep: usize,
    pub config: SpinConfiguration,
}

fn run_chain(ham: &ClassicalHamiltonian, cfg: &SamplerConfig, chain: usize) -> Result<Vec<Sample>> {
    cfg.validate(ham.num_sites())?;
    let mut rng = stream_rng(cfg.seed, chain as u64);
    let start = seed_configuration(ham, cfg.energy, &mut rng)?;
    let mut mc = McmcChain::new(ham, cfg.clone(), start, rng)?;
    for _ in 0..cfg.burn_in {
        mc.sweep()?;
    }
    let mut out = Vec::with_capacity(cfg.sweeps / cfg.thinning + 1);
    for sweep in 0..cfg.sweeps {
        mc.sweep()?;
        if sweep % cfg.thinning == 0 {
            out.push(Sample { chain, sweep, config: mc.config().clone() });
        }
    }
    Ok(out)
}

/// Thinned post-burn-in samples of a single chain (stream 0 of `cfg.seed`).
pub fn mcmc_run(h: &Operator, cfg: &SamplerConfig) -> Result<Vec<SpinConfiguration>> {
    let ham = ClassicalHamiltonian::new(h)?;
    Ok(run_chain(&ham, cfg, 0)?.into_iter().map(|s| s.config).collect())
}

/// `chains` independent chains run in parallel; chain `c` uses stream `c`.
pub fn mcmc_run_chains(ham: &ClassicalHamiltonian, cfg: &SamplerConfig, chains: usize) -> Result<Vec<Vec<Sample>>> {
    (0..chains).into_par_iter().map(|c| run_chain(ham, cfg, c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{build_hamiltonian, ModelParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mfi(n: usize) -> ClassicalHamiltonian {
        ClassicalHamiltonian::new(&build_hamiltonian(&ModelParams::mixed_field_ising(n)).unwrap()).unwrap()
    }

    #[test]
    fn two_site_interval_is_the_intersection() {
        let (e, h) = ([0.3, -1.0], [1.2, 1.5]);
        let r = [std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2];
        let (lo, hi) = feasible_interval(&e, &h, &r, None);
        let d_lo = (-h[0] - e[0]).max(e[1] - h[1]);
        let d_hi = (h[0] - e[0]).min(e[1] + h[1]);
        assert!((lo * r[0] - d_lo).abs() < 1e-14);
        assert!((hi * r[0] - d_hi).abs() < 1e-14);
        assert!(lo <= 0.0 && hi >= 0.0);
    }

    #[test]
    fn seed_hits_target_energy() {
        let ham = mfi(12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for target in [-16.8, 0.0, 3.0] {
            let c = seed_configuration(&ham, target, &mut rng).unwrap();
            assert!((ham.energy(&c).unwrap() - target).abs() < 1e-10);
        }
        assert!(matches!(seed_configuration(&ham, -40.0, &mut rng), Err(Error::Infeasible(_))));
    }

    #[test]
    fn single_spin_move_keeps_local_energy() {
        let ham = mfi(6);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let start = seed_configuration(&ham, -7.0, &mut rng).unwrap();
        let cfg = SamplerConfig { move_size: 1, ..SamplerConfig::new(-7.0, 1, 0) };
        let mut c = start.clone();
        for _ in 0..200 {
            let e0 = ham.energy(&c).unwrap();
            let next = mcmc_step(&c, &ham, &cfg, &mut rng).unwrap();
            let changed: Vec<usize> = (0..6).filter(|&j| next.spin(j) != c.spin(j)).collect();
            for &j in &changed {
                let h = ham.effective_field(&c, j).unwrap();
                assert!((dot(&h, &c.spin(j)) - dot(&h, &next.spin(j))).abs() < 1e-12);
            }
            assert!((ham.energy(&next).unwrap() - e0).abs() < 1e-12);
            c = next;
        }
    }

    #[test]
    fn move_round_trip_has_the_same_chord() {
        let ham = mfi(12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let start = seed_configuration(&ham, -10.0, &mut rng).unwrap();
        let cfg = SamplerConfig { move_size: 3, window: 0.5, ..SamplerConfig::new(-10.0, 1, 0) };
        let mut chain = McmcChain::new(&ham, cfg.clone(), start, rng).unwrap();
        for _ in 0..50 {
            let e_before = chain.energy();
            let rec = chain.step().unwrap();
            let s = chain.config();
            let norms: Vec<f64> = rec.sites.iter().map(|&j| norm(&ham.effective_field(s, j).unwrap())).collect();
            let local: Vec<f64> =
                rec.sites.iter().map(|&j| dot(&ham.effective_field(s, j).unwrap(), &s.spin(j))).collect();
            let e = chain.energy();
            let window = [cfg.energy - cfg.window - e, cfg.energy + cfg.window - e];
            let (lo, hi) = feasible_interval(&local, &norms, &rec.direction, Some(window));
            assert!((lo - (rec.interval.0 - rec.step)).abs() < 1e-9);
            assert!((hi - (rec.interval.1 - rec.step)).abs() < 1e-9);
            assert!((e - e_before - rec.delta_energy).abs() < 1e-15);
            assert!((e - cfg.energy).abs() <= cfg.window + 1e-12);
        }
    }

    #[test]
    fn run_is_reproducible_and_on_shell() {
        let h = build_hamiltonian(&ModelParams::mixed_field_ising(12)).unwrap();
        let cfg = SamplerConfig { burn_in: 5, ..SamplerConfig::new(-16.8, 20, 11) };
        let a = mcmc_run(&h, &cfg).unwrap();
        assert_eq!(a, mcmc_run(&h, &cfg).unwrap());
        assert_eq!(a.len(), 20);
        let ham = ClassicalHamiltonian::new(&h).unwrap();
        for c in &a {
            assert!((ham.energy(c).unwrap() + 16.8).abs() < 1e-9);
        }
    }

    #[test]
    fn oversized_moves_are_rejected() {
        let ham = mfi(8);
        let cfg = SamplerConfig { move_size: 3, ..SamplerConfig::new(0.0, 1, 0) };
        assert!(cfg.validate(ham.num_sites()).is_err());
    }
}
