use rand::Rng;

use super::classical::{random_unit_vector, ClassicalHamiltonian, SpinConfiguration};
use crate::error::{Error, Result};

/// Default cap on proposals per accepted sample.
pub const DEFAULT_MAX_TRIES: u64 = 2_000_000_000;

/// Exact sampler of uniform product states conditioned on
/// `|E(σ) − E| < ε`. Spins are drawn site by site and a proposal is abandoned
/// as soon as the terms still undetermined cannot bring the energy back into
/// the window, which leaves the accepted distribution unchanged.
#[derive(Clone, Debug)]
pub struct RejectionSampler {
    ham: ClassicalHamiltonian,
    energy: f64,
    window: f64,
    /// Bound on `|energy of terms not yet fixed|` after site `k` is drawn.
    remainder: Vec<f64>,
    max_tries: u64,
}

impl RejectionSampler {
    pub fn new(ham: ClassicalHamiltonian, energy: f64, window: f64) -> Result<Self> {
        if !(window > 0.0) || !energy.is_finite() {
            return Err(Error::InvalidArgument("rejection sampling needs a finite energy and window > 0".into()));
        }
        let n = ham.num_sites();
        let (fields, bonds) = ham.term_bounds();
        let remainder = (0..n)
            .map(|k| {
                fields[k + 1..].iter().sum::<f64>()
                    + bonds.iter().filter(|(last, _)| *last > k).map(|(_, b)| b).sum::<f64>()
            })
            .collect();
        Ok(Self { ham, energy, window, remainder, max_tries: DEFAULT_MAX_TRIES })
    }

    pub fn with_max_tries(mut self, max_tries: u64) -> Self {
        self.max_tries = max_tries;
        self
    }

    /// One accepted sample and the number of proposals it took.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(SpinConfiguration, u64)> {
        let n = self.ham.num_sites();
        let mut spins = vec![[0.0; 3]; n];
        for tries in 1..=self.max_tries {
            let mut partial = self.ham.constant();
            let mut alive = true;
            for k in 0..n {
                spins[k] = random_unit_vector(rng);
                partial += self.ham.sequential_increment(&spins, k);
                if (partial - self.energy).abs() >= self.window + self.remainder[k] {
                    alive = false;
                    break;
                }
            }
            if alive && (partial - self.energy).abs() < self.window {
                return Ok((SpinConfiguration::new(spins)?, tries));
            }
        }
        Err(Error::Numerical(format!(
            "rejection sampler found no state within {} of {} in {} tries",
            self.window, self.energy, self.max_tries
        )))
    }
}

/// One uniform product state with energy within `window` of `energy`.
pub fn rejection_sample<R: Rng + ?Sized>(
    ham: &ClassicalHamiltonian,
    energy: f64,
    window: f64,
    rng: &mut R,
) -> Result<SpinConfiguration> {
    Ok(RejectionSampler::new(ham.clone(), energy, window)?.sample(rng)?.0)
}
