use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thermalsim::error::Error;
use thermalsim::harness::{run, ExperimentConfig, ExperimentKind};

#[derive(Parser)]
#[command(name = "thermalsim", version, about = "Trotterized dynamics error experiments")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "THERMALSIM_THREADS")]
    threads: Option<usize>,
}

#[derive(Clone, Copy, Subcommand)]
enum Verb {
    /// Validate the RPE samplers against rejection sampling.
    SampleRpe,
    /// Build RPE ensemble tables.
    Tables,
    /// Noisy dynamics error versus t, N or tau.
    Dynamics,
    /// Response to a single inserted Pauli error.
    SingleError,
    /// Single-error response of a scar and a thermal state.
    Scar,
    /// Energy decay of the noisy XY model.
    XyDecay,
    /// Perturbative Trotter error against exact dynamics.
    Tdpt,
    /// Fit the error model and predict.
    Fit,
    /// Alias of `fit`.
    Predict,
}

impl Verb {
    fn accepts(self, kind: ExperimentKind) -> bool {
        use ExperimentKind as K;
        match self {
            Verb::SampleRpe => kind == K::RpeValidate,
            Verb::Tables => kind == K::RpeTables,
            Verb::Dynamics => matches!(kind, K::ErrorVsT | K::ErrorVsN | K::ErrorVsTau),
            Verb::SingleError => kind == K::SingleError,
            Verb::Scar => kind == K::ScarVsThermal,
            Verb::XyDecay => kind == K::XyDecay,
            Verb::Tdpt => kind == K::TdptCheck,
            Verb::Fit | Verb::Predict => kind == K::FitAndPredict,
        }
    }

    fn default_kind(self) -> ExperimentKind {
        use ExperimentKind as K;
        match self {
            Verb::SampleRpe => K::RpeValidate,
            Verb::Tables => K::RpeTables,
            Verb::Dynamics => K::ErrorVsT,
            Verb::SingleError => K::SingleError,
            Verb::Scar => K::ScarVsThermal,
            Verb::XyDecay => K::XyDecay,
            Verb::Tdpt => K::TdptCheck,
            Verb::Fit | Verb::Predict => K::FitAndPredict,
        }
    }
}

fn execute(cli: &Cli) -> Result<(), Error> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let path = cli.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut config = ExperimentConfig::load(path)?;
    let kind = *config.kind.get_or_insert(cli.verb.default_kind());
    if !cli.verb.accepts(kind) {
        return Err(Error::Config(format!("experiment {} does not match this command", kind.name())));
    }
    if cli.seed.is_some() {
        config.seed = cli.seed;
    }
    let report = run(&config, cli.out.as_deref())?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => 2,
                Error::Infeasible(_) => 3,
                _ => 1,
            })
        }
    }
}
