use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Boundary, ModelKind, ModelParams, Pauli, DEFAULT_G, DEFAULT_H};
use crate::rpe::DEFAULT_GRID_POINTS;
use crate::sim::{MAX_DENSITY_SITES, MAX_PAULI_DENSITY_SITES};
use crate::trotter::{ChannelKind, NoiseModel};

/// Largest register simulated as a statevector by the harness.
pub const MAX_STATEVECTOR_SITES: usize = 16;
/// Largest register diagonalized by the harness.
pub const MAX_ED_SITES: usize = MAX_DENSITY_SITES;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    #[serde(rename = "error-vs-t")]
    ErrorVsT,
    #[serde(rename = "error-vs-N")]
    ErrorVsN,
    #[serde(rename = "error-vs-tau")]
    ErrorVsTau,
    SingleError,
    ScarVsThermal,
    XyDecay,
    RpeValidate,
    RpeTables,
    TdptCheck,
    FitAndPredict,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::ErrorVsT => "error-vs-t",
            Self::ErrorVsN => "error-vs-N",
            Self::ErrorVsTau => "error-vs-tau",
            Self::SingleError => "single-error",
            Self::ScarVsThermal => "scar-vs-thermal",
            Self::XyDecay => "xy-decay",
            Self::RpeValidate => "rpe-validate",
            Self::RpeTables => "rpe-tables",
            Self::TdptCheck => "tdpt-check",
            Self::FitAndPredict => "fit-and-predict",
        }
    }

    pub fn is_dynamics(self) -> bool {
        matches!(self, Self::ErrorVsT | Self::ErrorVsN | Self::ErrorVsTau)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    /// Chain length; square lattices use `lx × ly` instead.
    pub n: Option<usize>,
    pub lx: Option<usize>,
    pub ly: Option<usize>,
    pub g: Option<f64>,
    pub h: Option<f64>,
    pub j: Option<f64>,
    pub boundary: Option<Boundary>,
    /// Seed of the quantum-East coupling disorder; absent means clean couplings.
    pub disorder_seed: Option<u64>,
}

impl ModelConfig {
    pub fn mixed_field_ising(n: usize) -> Self {
        Self { kind: ModelKind::MixedFieldIsing, n: Some(n), lx: None, ly: None, g: None, h: None, j: None, boundary: None, disorder_seed: None }
    }

    /// Model parameters, with the chain length replaced by `n` when given.
    pub fn params(&self, n: Option<usize>) -> Result<ModelParams> {
        let mut p = match self.kind {
            ModelKind::MixedFieldIsing => {
                let n = n.or(self.n).ok_or_else(|| Error::Config("model.n is required".into()))?;
                let mut p = ModelParams::mixed_field_ising(n);
                p.g = self.g.unwrap_or(DEFAULT_G);
                p.h = self.h.unwrap_or(DEFAULT_H);
                p
            }
            ModelKind::Xy => match (self.lx, self.ly) {
                (Some(lx), Some(ly)) => ModelParams::xy_square(lx, ly),
                _ => return Err(Error::Config("the XY model needs model.lx and model.ly".into())),
            },
            ModelKind::QuantumEast => {
                let n = n.or(self.n).ok_or_else(|| Error::Config("model.n is required".into()))?;
                ModelParams::quantum_east(n, self.j.unwrap_or(1.0), self.disorder_seed)
            }
        };
        if let Some(j) = self.j {
            p.j = j;
        }
        if let Some(b) = self.boundary {
            p.boundary = b;
        }
        p.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(p)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub tau: Vec<f64>,
    #[serde(default)]
    pub t: Vec<f64>,
    /// System sizes; overrides `model.n`.
    #[serde(default)]
    pub n: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub p0: Option<f64>,
    pub p1: Option<f64>,
    /// Angle-independent depolarizing parameter; excludes `p0` and `p1`.
    pub lambda: Option<f64>,
    #[serde(default)]
    pub channel: ChannelKind,
    /// Run without gate noise.
    #[serde(default)]
    pub noiseless: bool,
}

impl NoiseConfig {
    pub fn model(&self) -> Result<NoiseModel> {
        if self.noiseless {
            return Ok(NoiseModel::noiseless());
        }
        let mut m = match (self.lambda, self.p0, self.p1) {
            (Some(l), None, None) => NoiseModel::depolarizing_lambda(l),
            (Some(_), _, _) => return Err(Error::Config("noise.lambda excludes noise.p0 and noise.p1".into())),
            (None, p0, p1) => {
                let d = NoiseModel::default();
                NoiseModel { p0: p0.unwrap_or(d.p0), p1: p1.unwrap_or(d.p1), channel: d.channel }
            }
        };
        m.channel = self.channel;
        if !(m.p0 >= 0.0 && m.p1 >= 0.0 && m.p0 < 1.0) {
            return Err(Error::Config(format!("noise parameters out of range: p0={}, p1={}", m.p0, m.p1)));
        }
        Ok(m)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    #[default]
    Zero,
    Rpe,
    Explicit,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default)]
    pub kind: InitialKind,
    /// RPE energy per site; defaults to that of `|0…0⟩`.
    pub energy_density: Option<f64>,
    /// Number of RPE samples.
    pub samples: Option<usize>,
    /// Burn-in sweeps per RPE sample (one independent chain per sample).
    pub burn_in: Option<usize>,
    pub window: Option<f64>,
    pub move_size: Option<usize>,
    /// Explicit per-site Bloch vectors.
    pub spins: Option<Vec<[f64; 3]>>,
    /// Explicit uniform Bloch vector.
    pub direction: Option<[f64; 3]>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    /// Exact channel evolution (Pauli-basis density, or statevectors when noiseless).
    #[default]
    Exact,
    /// Sampled noisy statevector trajectories.
    Trajectories,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Baseline {
    /// Noiseless circuit at the same step.
    SameTau,
    /// Noiseless circuit at `reference_tau`.
    ReferenceTau,
    /// Exact evolution under `H`.
    Exact,
}

/// Measured sites: all, the bulk (every site but the two ends) or a list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SiteSet {
    Named(String),
    List(Vec<usize>),
}

impl Default for SiteSet {
    fn default() -> Self {
        SiteSet::Named("all".into())
    }
}

impl SiteSet {
    pub fn resolve(&self, n: usize) -> Result<Vec<usize>> {
        let sites: Vec<usize> = match self {
            SiteSet::Named(s) if s == "all" => (0..n).collect(),
            SiteSet::Named(s) if s == "bulk" => (1..n.saturating_sub(1)).collect(),
            SiteSet::Named(s) => return Err(Error::Config(format!("unknown site set {s:?}"))),
            SiteSet::List(l) => l.clone(),
        };
        if sites.is_empty() || sites.iter().any(|&s| s >= n) {
            return Err(Error::Config(format!("site set {} invalid for {n} sites", self.label())));
        }
        Ok(sites)
    }

    pub fn label(&self) -> String {
        match self {
            SiteSet::Named(s) => s.clone(),
            SiteSet::List(l) => l.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(";"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    #[serde(default)]
    pub backend: Backend,
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    #[serde(default)]
    pub sites: SiteSet,
    /// Defaults to `reference-tau` for error-vs-tau and `same-tau` otherwise.
    pub baseline: Option<Baseline>,
    #[serde(default = "default_reference_tau")]
    pub reference_tau: f64,
}

impl DynamicsConfig {
    pub fn baseline_for(&self, kind: ExperimentKind) -> Baseline {
        self.baseline.unwrap_or(match kind {
            ExperimentKind::ErrorVsTau | ExperimentKind::FitAndPredict => Baseline::ReferenceTau,
            _ => Baseline::SameTau,
        })
    }
}

fn default_trajectories() -> usize {
    200
}
fn default_reference_tau() -> f64 {
    0.04
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Exact,
            trajectories: default_trajectories(),
            sites: SiteSet::default(),
            baseline: None,
            reference_tau: default_reference_tau(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InsertionConfig {
    #[serde(default = "default_pauli")]
    pub pauli: Pauli,
    /// Defaults to the middle site.
    pub site: Option<usize>,
    #[serde(default = "default_t0")]
    pub t0: f64,
}

fn default_pauli() -> Pauli {
    Pauli::Y
}
fn default_t0() -> f64 {
    1.5
}

impl Default for InsertionConfig {
    fn default() -> Self {
        Self { pauli: Pauli::Y, site: None, t0: default_t0() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScarConfig {
    /// Polar angle of the thermal comparison state `⊗(cos θ/2 |0⟩ + sin θ/2 |1⟩)`.
    #[serde(default = "default_theta")]
    pub theta: f64,
}

fn default_theta() -> f64 {
    3.0 * std::f64::consts::PI / 8.0
}

impl Default for ScarConfig {
    fn default() -> Self {
        Self { theta: default_theta() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RpeConfig {
    /// Target energy per site; defaults to that of `|0…0⟩`.
    pub energy_density: Option<f64>,
    #[serde(default = "default_windows")]
    pub windows: Vec<f64>,
    #[serde(default = "default_rejection_samples")]
    pub rejection_samples: usize,
    #[serde(default = "default_chains")]
    pub chains: usize,
    #[serde(default = "default_sweeps")]
    pub sweeps: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_move_size")]
    pub move_size: usize,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

fn default_windows() -> Vec<f64> {
    vec![0.25, 0.5, 1.0]
}
fn default_rejection_samples() -> usize {
    200
}
fn default_chains() -> usize {
    8
}
fn default_sweeps() -> usize {
    2000
}
fn default_burn_in() -> usize {
    100
}
fn default_move_size() -> usize {
    2
}
fn default_grid_points() -> usize {
    DEFAULT_GRID_POINTS
}

impl Default for RpeConfig {
    fn default() -> Self {
        Self {
            energy_density: None,
            windows: default_windows(),
            rejection_samples: default_rejection_samples(),
            chains: default_chains(),
            sweeps: default_sweeps(),
            burn_in: default_burn_in(),
            move_size: default_move_size(),
            grid_points: default_grid_points(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// A dynamics CSV to fit; without it an error-vs-τ sweep is simulated.
    pub input: Option<PathBuf>,
    /// Largest step used in the fit.
    pub tau_max: Option<f64>,
    /// Fit constants to predict from instead of fitting (`predict` verb).
    pub s: Option<f64>,
    pub c: Option<f64>,
    /// Existing fit JSON to predict from.
    pub fit_file: Option<PathBuf>,
    /// RPE tables JSON for a heating prediction.
    pub tables: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TdptConfig {
    /// Times at which the diagonal-ensemble error is evaluated.
    #[serde(default = "default_diagonal_times")]
    pub diagonal_times: Vec<f64>,
    /// RPE samples whose mixture sets the diagonal-ensemble populations.
    #[serde(default = "default_tdpt_samples")]
    pub samples: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
}

fn default_diagonal_times() -> Vec<f64> {
    vec![1.0, 10.0, 100.0, 1000.0]
}
fn default_tdpt_samples() -> usize {
    64
}

impl Default for TdptConfig {
    fn default() -> Self {
        Self { diagonal_times: default_diagonal_times(), samples: default_tdpt_samples(), burn_in: default_burn_in() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapConfig {
    #[serde(default = "default_resamples")]
    pub resamples: usize,
    #[serde(default = "default_level")]
    pub level: f64,
}

fn default_resamples() -> usize {
    1000
}
fn default_level() -> f64 {
    0.68
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { resamples: default_resamples(), level: default_level() }
    }
}

/// A complete experiment description, read from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Option<ExperimentKind>,
    /// Master seed; may instead be given on the command line.
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub model: ModelConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub dynamics: DynamicsConfig,
    #[serde(default)]
    pub insertion: InsertionConfig,
    #[serde(default)]
    pub scar: ScarConfig,
    #[serde(default)]
    pub rpe: RpeConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub tdpt: TdptConfig,
    #[serde(default)]
    pub bootstrap: BootstrapConfig,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, model: ModelConfig, seed: u64) -> Self {
        Self {
            kind: Some(kind),
            seed: Some(seed),
            output: None,
            model,
            grid: GridConfig::default(),
            noise: NoiseConfig::default(),
            initial: InitialConfig::default(),
            dynamics: DynamicsConfig::default(),
            insertion: InsertionConfig::default(),
            scar: ScarConfig::default(),
            rpe: RpeConfig::default(),
            fit: FitConfig::default(),
            tdpt: TdptConfig::default(),
            bootstrap: BootstrapConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn kind(&self) -> Result<ExperimentKind> {
        self.kind.ok_or_else(|| Error::Config("experiment kind is required".into()))
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::Config("a master seed is required".into()))
    }

    /// System sizes of the run: the `grid.n` list or the single model size.
    pub fn sizes(&self) -> Result<Vec<usize>> {
        if !self.grid.n.is_empty() {
            return Ok(self.grid.n.clone());
        }
        Ok(vec![self.model.params(None)?.n])
    }

    /// Checks grids and sizes for the experiment kind. Size limits raise
    /// [`Error::Infeasible`], everything else [`Error::Config`].
    pub fn validate(&self) -> Result<()> {
        let kind = self.kind()?;
        self.seed()?;
        let cfg = |m: &str| Err(Error::Config(m.into()));
        if self.grid.tau.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return cfg("grid.tau entries must be positive");
        }
        if self.grid.t.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
            return cfg("grid.t entries must be non-negative");
        }
        let needs_time_grid = kind.is_dynamics()
            || matches!(kind, ExperimentKind::SingleError | ExperimentKind::ScarVsThermal | ExperimentKind::XyDecay | ExperimentKind::TdptCheck);
        if needs_time_grid && (self.grid.tau.is_empty() || self.grid.t.is_empty()) {
            return cfg("grid.tau and grid.t must be non-empty");
        }
        if kind == ExperimentKind::ErrorVsN && self.grid.n.is_empty() {
            return cfg("error-vs-N needs grid.n");
        }
        if !(self.bootstrap.resamples > 0 && self.bootstrap.level > 0.0 && self.bootstrap.level < 1.0) {
            return cfg("bootstrap needs resamples > 0 and 0 < level < 1");
        }
        self.noise.model()?;
        let sizes = self.sizes()?;
        for &n in &sizes {
            self.model.params(Some(n))?;
        }
        let n_max = *sizes.iter().max().expect("non-empty");
        let simulates = match kind {
            ExperimentKind::RpeValidate | ExperimentKind::RpeTables => false,
            ExperimentKind::FitAndPredict => {
                self.fit.fit_file.is_none() && self.fit.input.is_none() && (self.fit.s.is_none() || self.fit.c.is_none())
            }
            _ => true,
        };
        if !simulates {
            return Ok(());
        }
        let kind = if kind == ExperimentKind::FitAndPredict { ExperimentKind::ErrorVsTau } else { kind };
        let needs_density = kind.is_dynamics()
            && self.dynamics.backend == Backend::Exact
            && !self.noise.model()?.is_noiseless();
        let needs_ed = matches!(kind, ExperimentKind::TdptCheck)
            || (kind.is_dynamics() && self.dynamics.baseline_for(kind) == Baseline::Exact);
        if n_max > MAX_STATEVECTOR_SITES {
            return Err(Error::Infeasible(format!("{n_max} sites exceed the statevector limit of {MAX_STATEVECTOR_SITES}")));
        }
        if needs_density && n_max > MAX_PAULI_DENSITY_SITES {
            return Err(Error::Infeasible(format!(
                "{n_max} sites exceed the exact noisy limit of {MAX_PAULI_DENSITY_SITES}; use the trajectories backend"
            )));
        }
        if needs_ed && n_max > MAX_ED_SITES {
            return Err(Error::Infeasible(format!("{n_max} sites exceed the diagonalization limit of {MAX_ED_SITES}")));
        }
        if self.dynamics.backend == Backend::Trajectories && self.dynamics.trajectories < 2 {
            return cfg("at least two trajectories are needed");
        }
        Ok(())
    }
}
