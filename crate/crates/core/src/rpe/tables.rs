use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classical::{product_expectation, ClassicalHamiltonian, SpinConfiguration};
use super::mcmc::{mcmc_run_chains, Sample, SamplerConfig};
use crate::error::{Error, Result};
use crate::pauli::{error_shift_operator, Operator, Pauli, PauliString};

/// Default number of energy-density grid points.
pub const DEFAULT_GRID_POINTS: usize = 41;

/// Averages over the RPE at one energy density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub energy_density: f64,
    /// Site-averaged `⟨X⟩, ⟨Y⟩, ⟨Z⟩`.
    pub mean_bloch: [f64; 3],
    /// `⟨X⟩, ⟨Y⟩, ⟨Z⟩` on the table's center site.
    pub center_bloch: [f64; 3],
    /// `⟨Δ_P H⟩` for each Pauli of [`EnsembleTables::paulis`].
    pub shifts: Vec<f64>,
    /// Mean quantum energy variance of the sampled product states, per site.
    pub energy_variance: f64,
    /// Site-averaged purity of the mixed-state one-site reduced density matrix.
    pub mean_purity: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleTables {
    pub num_sites: usize,
    pub center: usize,
    pub bond: [usize; 2],
    /// The 15 non-identity Paulis on `bond`, as strings over the full register.
    pub paulis: Vec<String>,
    /// Rows in strictly increasing energy density.
    pub rows: Vec<TableRow>,
}

/// Sampling plan for [`ensemble_tables`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableConfig {
    /// Sampler settings; the target energy is overwritten per grid point.
    pub sampler: SamplerConfig,
    pub chains: usize,
    /// Defaults to the middle site.
    pub center: Option<usize>,
    /// Defaults to `(center, center + 1)`.
    pub bond: Option<[usize; 2]>,
}

/// The non-identity Paulis supported on `bond`, `P_a` major.
pub fn bond_paulis(n: usize, bond: [usize; 2]) -> Result<Vec<PauliString>> {
    let mut out = Vec::with_capacity(15);
    for a in Pauli::ALL {
        for b in Pauli::ALL {
            if (a, b) != (Pauli::I, Pauli::I) {
                out.push(PauliString::from_sites(n, &[(bond[0], a), (bond[1], b)])?);
            }
        }
    }
    Ok(out)
}

/// `points` energy densities strictly inside the product-state range, evenly
/// spaced with the end points excluded.
pub fn default_grid(ham: &ClassicalHamiltonian, points: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = ham.num_sites() as f64;
    let (_, lo) = ham.extremal_configuration(-1.0, &mut rng);
    let (_, hi) = ham.extremal_configuration(1.0, &mut rng);
    (1..=points).map(|i| (lo + (hi - lo) * i as f64 / (points + 1) as f64) / n).collect()
}

struct RowPlan<'a> {
    h: &'a Operator,
    h_sq: Operator,
    shift_ops: Vec<Operator>,
    center: usize,
}

fn summarize(plan: &RowPlan<'_>, energy_density: f64, samples: &[SpinConfiguration]) -> Result<TableRow> {
    let n = plan.h.num_sites();
    let m = samples.len();
    if m == 0 {
        return Err(Error::InvalidArgument("no samples to summarize".into()));
    }
    let mut site_sum = vec![[0.0; 3]; n];
    let mut variance = 0.0;
    let mut shifts = vec![0.0; plan.shift_ops.len()];
    for c in samples {
        for (acc, s) in site_sum.iter_mut().zip(c.spins()) {
            for k in 0..3 {
                acc[k] += s[k];
            }
        }
        let e = product_expectation(c, plan.h)?;
        variance += product_expectation(c, &plan.h_sq)? - e * e;
        for (acc, op) in shifts.iter_mut().zip(&plan.shift_ops) {
            *acc += product_expectation(c, op)?;
        }
    }
    let site_mean: Vec<[f64; 3]> = site_sum.iter().map(|s| s.map(|x| x / m as f64)).collect();
    let mut mean_bloch = [0.0; 3];
    for s in &site_mean {
        for k in 0..3 {
            mean_bloch[k] += s[k] / n as f64;
        }
    }
    let mean_purity =
        site_mean.iter().map(|b| 0.5 * (1.0 + b.iter().map(|x| x * x).sum::<f64>())).sum::<f64>() / n as f64;
    Ok(TableRow {
        energy_density,
        mean_bloch,
        center_bloch: site_mean[plan.center],
        shifts: shifts.into_iter().map(|x| x / m as f64).collect(),
        energy_variance: variance / m as f64 / n as f64,
        mean_purity,
        samples: m,
    })
}

/// RPE averages on each energy density of `grid` (energy per site).
pub fn ensemble_tables(h: &Operator, grid: &[f64], cfg: &TableConfig) -> Result<EnsembleTables> {
    let n = h.num_sites();
    if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("energy grid must be non-empty and strictly increasing".into()));
    }
    if cfg.chains == 0 {
        return Err(Error::InvalidArgument("at least one chain is required".into()));
    }
    let center = cfg.center.unwrap_or(n / 2);
    let bond = cfg.bond.unwrap_or([center, center + 1]);
    if center >= n || bond[0] >= n || bond[1] >= n || bond[0] == bond[1] {
        return Err(Error::InvalidArgument(format!("center {center} or bond {bond:?} out of range")));
    }
    let ham = ClassicalHamiltonian::new(h)?;
    let paulis = bond_paulis(n, bond)?;
    let plan = RowPlan {
        h,
        h_sq: h.product(h),
        shift_ops: paulis.iter().map(|p| error_shift_operator(p, h)).collect::<Result<_>>()?,
        center,
    };
    let rows = grid
        .par_iter()
        .enumerate()
        .map(|(i, &e)| {
            let sampler = SamplerConfig {
                energy: e * n as f64,
                seed: cfg.sampler.seed.wrapping_add(i as u64),
                ..cfg.sampler.clone()
            };
            let chains = mcmc_run_chains(&ham, &sampler, cfg.chains)?;
            let samples: Vec<SpinConfiguration> = chains.into_iter().flatten().map(|s: Sample| s.config).collect();
            summarize(&plan, e, &samples)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleTables { num_sites: n, center, bond, paulis: paulis.iter().map(|p| p.to_string()).collect(), rows })
}

/// A table row interpolated at an energy density, with a flag set when the
/// density was clamped to the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Lookup {
    pub row: TableRow,
    pub clamped: bool,
}

fn lerp(a: f64, b: f64, s: f64) -> f64 {
    a + (b - a) * s
}

impl EnsembleTables {
    pub fn grid(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.energy_density).collect()
    }

    pub fn pauli_index(&self, p: &str) -> Option<usize> {
        self.paulis.iter().position(|q| q == p)
    }

    /// Piecewise-linear interpolation in energy density.
    pub fn lookup(&self, energy_density: f64) -> Result<Lookup> {
        let first = self.rows.first().ok_or_else(|| Error::InvalidArgument("empty table".into()))?;
        let last = self.rows.last().expect("non-empty");
        if !energy_density.is_finite() {
            return Err(Error::InvalidArgument("non-finite energy density".into()));
        }
        if energy_density <= first.energy_density || self.rows.len() == 1 {
            return Ok(Lookup { row: first.clone(), clamped: energy_density < first.energy_density });
        }
        if energy_density >= last.energy_density {
            return Ok(Lookup { row: last.clone(), clamped: energy_density > last.energy_density });
        }
        let i = self.rows.partition_point(|r| r.energy_density <= energy_density) - 1;
        let (a, b) = (&self.rows[i], &self.rows[i + 1]);
        let s = (energy_density - a.energy_density) / (b.energy_density - a.energy_density);
        let mix3 = |x: &[f64; 3], y: &[f64; 3]| [0, 1, 2].map(|k| lerp(x[k], y[k], s));
        Ok(Lookup {
            row: TableRow {
                energy_density,
                mean_bloch: mix3(&a.mean_bloch, &b.mean_bloch),
                center_bloch: mix3(&a.center_bloch, &b.center_bloch),
                shifts: a.shifts.iter().zip(&b.shifts).map(|(x, y)| lerp(*x, *y, s)).collect(),
                energy_variance: lerp(a.energy_variance, b.energy_variance, s),
                mean_purity: lerp(a.mean_purity, b.mean_purity, s),
                samples: a.samples.min(b.samples),
            },
            clamped: false,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let t: Self = serde_json::from_str(s)?;
        if t.rows.windows(2).any(|w| !(w[1].energy_density > w[0].energy_density)) {
            return Err(Error::InvalidArgument("table grid is not strictly increasing".into()));
        }
        Ok(t)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct SampleRow {
    site: usize,
    sx: f64,
    sy: f64,
    sz: f64,
    chain: usize,
    sweep: usize,
}

fn csv_error(e: csv::Error) -> Error {
    Error::Config(format!("sample csv: {e}"))
}

/// Writes samples as CSV rows `site, sx, sy, sz, chain, sweep`.
pub fn write_samples_csv<W: Write>(writer: W, samples: &[Sample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for s in samples {
        for (site, v) in s.config.spins().iter().enumerate() {
            w.serialize(SampleRow { site, sx: v[0], sy: v[1], sz: v[2], chain: s.chain, sweep: s.sweep })
                .map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads samples written by [`write_samples_csv`].
pub fn read_samples_csv<R: Read>(reader: R) -> Result<Vec<Sample>> {
    let mut out: Vec<Sample> = Vec::new();
    let mut spins: Vec<[f64; 3]> = Vec::new();
    let mut key: Option<(usize, usize)> = None;
    let mut finish = |key: Option<(usize, usize)>, spins: &mut Vec<[f64; 3]>| -> Result<()> {
        if let Some((chain, sweep)) = key {
            out.push(Sample { chain, sweep, config: SpinConfiguration::new(std::mem::take(spins))? });
        }
        Ok(())
    };
    for row in csv::Reader::from_reader(reader).deserialize::<SampleRow>() {
        let row = row.map_err(csv_error)?;
        if key != Some((row.chain, row.sweep)) {
            finish(key, &mut spins)?;
            key = Some((row.chain, row.sweep));
        }
        if row.site != spins.len() {
            return Err(Error::Config(format!("sample rows out of site order at site {}", row.site)));
        }
        spins.push([row.sx, row.sy, row.sz]);
    }
    finish(key, &mut spins)?;
    Ok(out)
}
