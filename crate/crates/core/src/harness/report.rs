use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{ExperimentConfig, ExperimentKind};
use super::dynamics::run_dynamics;
use super::experiments::{fit_and_predict, rpe_tables, rpe_validate, tdpt_check, xy_decay};
use super::single_error::{scar_vs_thermal, single_error_experiment, InsertionResponse};
use crate::error::{Error, Result};
use crate::rpe::write_samples_csv;

/// Which random streams fed a group of report rows. Rows sharing
/// `(experiment, N, tau)` with a record drew from streams
/// `stream_start..stream_end` of `seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub experiment: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub tau: Option<f64>,
    pub role: String,
    pub seed: u64,
    pub stream_start: usize,
    pub stream_end: usize,
}

impl SeedRecord {
    pub fn new(experiment: &str, n: usize, tau: Option<f64>, role: &str, seed: u64, start: usize, end: usize) -> Self {
        Self { experiment: experiment.into(), n, tau, role: role.into(), seed, stream_start: start, stream_end: end }
    }
}

/// Metadata and summary of one run; `files` lists what was written.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub kind: String,
    pub seed: u64,
    pub version: String,
    pub wall_time_s: f64,
    pub files: Vec<PathBuf>,
    pub summary: serde_json::Value,
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let err = |e: csv::Error| Error::Config(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    for r in rows {
        w.serialize(r).map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

struct Output {
    dir: Option<PathBuf>,
    files: Vec<PathBuf>,
}

impl Output {
    fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        if let Some(dir) = &self.dir {
            let path = dir.join(name);
            write_csv(&path, rows)?;
            self.files.push(path);
        }
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        if let Some(dir) = &self.dir {
            let path = dir.join(name);
            std::fs::write(&path, serde_json::to_string_pretty(value)?)?;
            self.files.push(path);
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct SeriesRow {
    t: f64,
    r_rms: f64,
    r_rms_trace: f64,
    summed_trace_distance: f64,
    energy_change: f64,
}

#[derive(Serialize)]
struct LabelledSeriesRow<'a> {
    state: &'a str,
    t: f64,
    summed_trace_distance: f64,
}

fn series_rows(r: &InsertionResponse) -> Vec<SeriesRow> {
    (0..r.times.len())
        .map(|i| SeriesRow {
            t: r.times[i],
            r_rms: r.r_rms[i],
            r_rms_trace: r.r_rms_trace[i],
            summed_trace_distance: r.summed_trace_distance[i],
            energy_change: r.energy_change[i],
        })
        .collect()
}

fn insertion_summary(r: &InsertionResponse) -> serde_json::Value {
    json!({
        "samples": r.samples,
        "jump": r.jump,
        "expected_jump": r.expected_jump,
        "max_jump_error": r.max_jump_error,
        "drift": r.drift,
    })
}

/// Runs the configured experiment. With `out` (or `config.output`) set, the
/// CSV/JSON results, `seeds.csv` and `report.json` are written there. CSV
/// files depend only on the configuration and seed.
pub fn run(config: &ExperimentConfig, out: Option<&Path>) -> Result<RunReport> {
    let start = Instant::now();
    config.validate()?;
    let kind = config.kind()?;
    let seed = config.seed()?;
    let dir = out.map(Path::to_path_buf).or_else(|| config.output.clone());
    if let Some(d) = &dir {
        std::fs::create_dir_all(d)?;
    }
    let mut o = Output { dir, files: Vec::new() };
    let summary = match kind {
        ExperimentKind::ErrorVsT | ExperimentKind::ErrorVsN | ExperimentKind::ErrorVsTau => {
            let r = run_dynamics(config)?;
            o.csv("dynamics.csv", &r.rows)?;
            o.csv("seeds.csv", &r.seeds)?;
            json!({ "rows": r.rows.len(), "max_trace_distance": r.rows.iter().map(|r| r.trace_distance).fold(0.0, f64::max) })
        }
        ExperimentKind::SingleError => {
            let r = single_error_experiment(config)?;
            o.csv("delta_u.csv", &r.delta_u)?;
            o.csv("trace_distance_map.csv", &r.trace_distance)?;
            o.csv("series.csv", &series_rows(&r))?;
            insertion_summary(&r)
        }
        ExperimentKind::ScarVsThermal => {
            let r = scar_vs_thermal(config)?;
            let mut rows = Vec::new();
            for (label, resp) in [("scar", &r.scar), ("thermal", &r.thermal)] {
                rows.extend(resp.times.iter().zip(&resp.summed_trace_distance).map(|(&t, &v)| LabelledSeriesRow {
                    state: label,
                    t,
                    summed_trace_distance: v,
                }));
            }
            o.csv("series.csv", &rows)?;
            o.csv("scar_map.csv", &r.scar.trace_distance)?;
            o.csv("thermal_map.csv", &r.thermal.trace_distance)?;
            json!({ "theta": r.theta, "scar": r.scar_fit, "thermal": r.thermal_fit })
        }
        ExperimentKind::XyDecay => {
            let r = xy_decay(config)?;
            o.csv("xy_decay.csv", &r.rows)?;
            o.csv("seeds.csv", &r.seeds)?;
            json!({ "coordination": r.coordination, "lambda": r.lambda, "initial_energy": r.initial_energy, "fits": r.fits })
        }
        ExperimentKind::RpeValidate => {
            let r = rpe_validate(config)?;
            o.csv("rpe_validate.csv", &r.estimates)?;
            o.csv("seeds.csv", &r.seeds)?;
            if let Some(d) = &o.dir {
                let path = d.join("samples.csv");
                write_samples_csv(std::fs::File::create(&path)?, &r.fixed_samples)?;
                o.files.push(path);
            }
            json!({
                "energy": r.energy,
                "z_scores": r.z_scores,
                "trend_intercept": r.trend_intercept,
                "trend_stderr": r.trend_stderr,
                "fixed_z_score": r.fixed_z_score,
            })
        }
        ExperimentKind::RpeTables => {
            let (tables, seeds) = rpe_tables(config)?;
            o.json("tables.json", &tables)?;
            o.csv("seeds.csv", &seeds)?;
            json!({ "grid_points": tables.rows.len(), "num_sites": tables.num_sites })
        }
        ExperimentKind::TdptCheck => {
            let r = tdpt_check(config)?;
            o.csv("tdpt.csv", &r.rows)?;
            o.csv("seeds.csv", &r.seeds)?;
            json!({ "relative_rms": r.relative_rms, "diagonal": r.diagonal, "diagonal_t1_max": r.diagonal_t1_max })
        }
        ExperimentKind::FitAndPredict => {
            let r = fit_and_predict(config)?;
            o.json("fit.json", &r.fit)?;
            o.csv("prediction.csv", &r.curve)?;
            if !r.measured.is_empty() {
                o.csv("dynamics.csv", &r.measured)?;
                o.csv("seeds.csv", &r.seeds)?;
            }
            if !r.heating.is_empty() {
                o.csv("heating.csv", &r.heating.iter().map(|p| HeatingRow::from(*p)).collect::<Vec<_>>())?;
            }
            json!({ "fit": r.fit, "optimal": r.optimal })
        }
    };
    let mut report = RunReport {
        kind: kind.name().into(),
        seed,
        version: env!("CARGO_PKG_VERSION").into(),
        wall_time_s: 0.0,
        files: o.files.clone(),
        summary,
    };
    report.wall_time_s = start.elapsed().as_secs_f64();
    if let Some(d) = &o.dir {
        let path = d.join("report.json");
        report.files.push(path.clone());
        std::fs::write(&path, serde_json::to_string_pretty(&report)?)?;
    }
    Ok(report)
}

#[derive(Serialize)]
struct HeatingRow {
    t: f64,
    energy_density: f64,
    x: f64,
    y: f64,
    z: f64,
    trace_distance: f64,
    clamped: bool,
}

impl From<crate::predictor::HeatingPoint> for HeatingRow {
    fn from(p: crate::predictor::HeatingPoint) -> Self {
        Self {
            t: p.t,
            energy_density: p.energy_density,
            x: p.bloch[0],
            y: p.bloch[1],
            z: p.bloch[2],
            trace_distance: p.trace_distance,
            clamped: p.clamped,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ModelConfig;

    #[test]
    fn csv_output_is_reproducible() {
        let mut c = ExperimentConfig::new(ExperimentKind::ErrorVsT, ModelConfig::mixed_field_ising(6), 4);
        c.grid.tau = vec![0.25];
        c.grid.t = vec![0.5, 1.0];
        c.dynamics.backend = crate::harness::Backend::Trajectories;
        c.dynamics.trajectories = 20;
        c.bootstrap.resamples = 50;
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ra = run(&c, Some(a.path())).unwrap();
        run(&c, Some(b.path())).unwrap();
        for name in ["dynamics.csv", "seeds.csv"] {
            let x = std::fs::read(a.path().join(name)).unwrap();
            assert_eq!(x, std::fs::read(b.path().join(name)).unwrap());
        }
        let text = std::fs::read_to_string(a.path().join("dynamics.csv")).unwrap();
        assert!(text.starts_with("experiment,N,tau,t,site_set,obs_x,obs_y,obs_z,trace_distance,ci_lo,ci_hi,n_samples\n"));
        assert_eq!(ra.files.len(), 3);
    }
}
