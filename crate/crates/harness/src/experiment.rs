//! Monte-Carlo orchestration.
//!
//! Each run draws one truth/measurement realization (stream `run` of a ChaCha
//! generator seeded with the master seed) and feeds the same scans to every
//! requested variant. At each step `k` the alive true trajectories on `[1, k]`
//! are compared with the trajectory estimates of step `k`, and the cost is
//! normalized by the window length `k`. Per step, the metric is aggregated as
//! an RMS over runs; the summary row averages that curve over all steps.
//!
//! Output layout under `out/`:
//!
//! ```text
//! runs/<variant>/run-0001-estimates.csv     current estimates per step
//! runs/<variant>/run-0001-trajectories.csv  full trajectories at the last step
//! runs/<variant>/run-0001-metrics.csv       windowed metric per step
//! runs/<variant>/run-0001-cardinality.csv   n̂, PHD mass and true count per step
//! runs/<variant>/run-0001-diagnostics.jsonl (with --emit-diagnostics)
//! tm_over_time.csv, summary.csv, summary.md, manifest.json, timing.json
//! ```
//!
//! Everything except `timing.json` is byte-identical for a given manifest.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use gtphd::estimate::TrajectoryEstimate;
use gtphd::filter::{FilterVariant, StepReport, TphdFilter};
use gtphd::metrics::{rms_over_runs, trajectory_metric, MetricConfig, MetricResult, Trajectory};
use gtphd::scenario::ScenarioConfig;
use gtphd::sim::{generate_measurements, generate_truth, GroundTruthTarget};
use gtphd::TargetClass;
use nalgebra::DVector;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::{HarnessError, Result};

pub type Scans = Vec<Vec<DVector<f64>>>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub config_path: Option<PathBuf>,
    pub variants: Vec<FilterVariant>,
    /// Overrides the configured L-scan window (G-PHD always uses 1).
    pub lscan: Option<usize>,
    pub runs: usize,
    pub seed: u64,
    /// No files are written when absent.
    pub out_dir: Option<PathBuf>,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    pub emit_diagnostics: bool,
}

impl Default for RunManifest {
    fn default() -> Self {
        Self {
            config_path: None,
            variants: FilterVariant::ALL.to_vec(),
            lscan: None,
            runs: 1,
            seed: 1,
            out_dir: None,
            threads: 0,
            emit_diagnostics: false,
        }
    }
}

impl RunManifest {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(HarnessError::Config("runs must be >= 1".into()));
        }
        if self.variants.is_empty() {
            return Err(HarnessError::Config("no filter variant selected".into()));
        }
        if self.lscan == Some(0) {
            return Err(HarnessError::Config("lscan must be >= 1".into()));
        }
        Ok(())
    }
}

/// Truth and scans of Monte-Carlo run `run`.
pub fn simulate_run(
    cfg: &ScenarioConfig,
    seed: u64,
    run: usize,
) -> Result<(Vec<GroundTruthTarget>, Scans)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    let truth = generate_truth(cfg, &mut rng)?;
    let scans = generate_measurements(&truth, cfg, &mut rng)?;
    Ok((truth, scans))
}

/// Runs one variant over the scans.
pub fn run_filter(
    cfg: &ScenarioConfig,
    variant: FilterVariant,
    lscan: Option<usize>,
    scans: &[Vec<DVector<f64>>],
    keep_diagnostics: bool,
) -> Result<Vec<StepReport>> {
    let mut cfg = cfg.clone();
    if let Some(l) = lscan {
        cfg.filter.lscan = l;
    }
    let mut params = cfg.filter_params(variant)?;
    params.keep_diagnostics = keep_diagnostics;
    Ok(TphdFilter::new(params)?.run(scans)?)
}

fn estimate_trajectory(e: &TrajectoryEstimate) -> Trajectory {
    Trajectory {
        start: e.birth_time,
        states: e.states.clone(),
    }
}

/// Windowed, window-normalized metric for every step.
pub fn evaluate_windows(
    truth: &[GroundTruthTarget],
    reports: &[StepReport],
    metric: &MetricConfig,
) -> Result<Vec<MetricResult>> {
    reports
        .iter()
        .map(|r| {
            let k = r.time;
            let xs: Vec<Trajectory> = truth
                .iter()
                .filter(|t| t.is_alive(k))
                .filter_map(|t| t.trajectory_until(k))
                .collect();
            let ys: Vec<Trajectory> = r.estimates.iter().map(estimate_trajectory).collect();
            Ok(trajectory_metric(&xs, &ys, 1..=k, metric)?.normalize(k, metric.p))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantRun {
    pub variant: FilterVariant,
    pub run: usize,
    pub metrics: Vec<MetricResult>,
    pub cardinality: Vec<usize>,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub variant: String,
    pub mean: f64,
    pub localization: f64,
    pub miss: f64,
    #[serde(rename = "false")]
    pub false_: f64,
    pub switch: f64,
    /// Mean estimated count over steps 30-60 and all runs.
    pub steady_cardinality: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSummary {
    pub rows: Vec<SummaryRow>,
    /// RMS over runs of the windowed metric at each step.
    pub tm_over_time: BTreeMap<FilterVariant, Vec<MetricResult>>,
    /// Mean estimated count at each step.
    pub mean_cardinality: BTreeMap<FilterVariant, Vec<f64>>,
    pub runs: Vec<VariantRun>,
    pub wall_clock: Duration,
}

impl ExperimentSummary {
    pub fn row(&self, variant: FilterVariant) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.variant == variant.label())
    }

    /// Table in the layout `| | Mean | Localization | Miss | False | Switch |`.
    pub fn table(&self) -> String {
        let mut s = String::from(
            "| | Mean | Localization | Miss | False | Switch |\n|---|---|---|---|---|---|\n",
        );
        for r in &self.rows {
            s += &format!(
                "| {} | {:.2} | {:.2} | {:.2} | {:.2} | {:.3} |\n",
                r.variant, r.mean, r.localization, r.miss, r.false_, r.switch
            );
        }
        s
    }
}

const STEADY: std::ops::RangeInclusive<usize> = 30..=60;

#[derive(Serialize)]
struct EstimateRow {
    step: usize,
    track_id: u64,
    class: &'static str,
    weight: f64,
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
    extent_xx: Option<f64>,
    extent_xy: Option<f64>,
    extent_yy: Option<f64>,
    rate: Option<f64>,
}

#[derive(Serialize)]
struct TrajectoryRow {
    track_id: u64,
    class: &'static str,
    step: usize,
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
}

#[derive(Serialize)]
struct MetricRow {
    step: usize,
    total: f64,
    localization: f64,
    miss: f64,
    #[serde(rename = "false")]
    false_: f64,
    switch: f64,
}

impl MetricRow {
    fn new(step: usize, m: &MetricResult) -> Self {
        Self {
            step,
            total: m.total,
            localization: m.localization,
            miss: m.miss,
            false_: m.false_,
            switch: m.switch,
        }
    }
}

#[derive(Serialize)]
struct CardinalityRow {
    step: usize,
    n_hat: usize,
    mass: f64,
    n_true: usize,
    n_point_components: usize,
    n_extended_components: usize,
}

#[derive(Serialize)]
struct OverTimeRow {
    variant: &'static str,
    step: usize,
    total: f64,
    localization: f64,
    miss: f64,
    #[serde(rename = "false")]
    false_: f64,
    switch: f64,
    mean_cardinality: f64,
}

/// Writes a CSV whose first line is `# gtphd <kind> v1`.
fn write_csv<T: Serialize>(
    path: &Path,
    kind: &str,
    rows: impl IntoIterator<Item = T>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut buf = BufWriter::new(file);
    writeln!(buf, "# gtphd {kind} v1").map_err(|e| HarnessError::io(path, e))?;
    let mut w = csv::Writer::from_writer(buf);
    let csv_err = |e: csv::Error| HarnessError::Csv {
        path: path.to_path_buf(),
        msg: e.to_string(),
    };
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

fn class_str(c: TargetClass) -> &'static str {
    c.as_str()
}

fn write_run_files(
    dir: &Path,
    run: usize,
    truth: &[GroundTruthTarget],
    reports: &[StepReport],
    metrics: &[MetricResult],
    diagnostics: bool,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let stem = format!("run-{:04}", run + 1);
    let estimates = reports.iter().flat_map(|r| {
        r.estimates.iter().map(move |e| {
            let s = e.current_state();
            EstimateRow {
                step: r.time,
                track_id: e.label,
                class: class_str(e.class),
                weight: e.weight,
                x: s[0],
                y: s[1],
                vx: s[2],
                vy: s[3],
                extent_xx: e.extent.as_ref().map(|x| x[(0, 0)]),
                extent_xy: e.extent.as_ref().map(|x| x[(0, 1)]),
                extent_yy: e.extent.as_ref().map(|x| x[(1, 1)]),
                rate: e.rate,
            }
        })
    });
    write_csv(
        &dir.join(format!("{stem}-estimates.csv")),
        "estimates",
        estimates,
    )?;
    if let Some(last) = reports.last() {
        let rows = last.estimates.iter().flat_map(|e| {
            e.states
                .iter()
                .enumerate()
                .map(move |(i, s)| TrajectoryRow {
                    track_id: e.label,
                    class: class_str(e.class),
                    step: e.birth_time + i,
                    x: s[0],
                    y: s[1],
                    vx: s[2],
                    vy: s[3],
                })
        });
        write_csv(
            &dir.join(format!("{stem}-trajectories.csv")),
            "trajectories",
            rows,
        )?;
    }
    write_csv(
        &dir.join(format!("{stem}-metrics.csv")),
        "metrics",
        reports
            .iter()
            .zip(metrics)
            .map(|(r, m)| MetricRow::new(r.time, m)),
    )?;
    write_csv(
        &dir.join(format!("{stem}-cardinality.csv")),
        "cardinality",
        reports.iter().map(|r| CardinalityRow {
            step: r.time,
            n_hat: r.estimates.len(),
            mass: r.posterior_mass,
            n_true: truth.iter().filter(|t| t.is_alive(r.time)).count(),
            n_point_components: r.n_point,
            n_extended_components: r.n_extended,
        }),
    )?;
    if diagnostics {
        let path = dir.join(format!("{stem}-diagnostics.jsonl"));
        let mut f = BufWriter::new(File::create(&path).map_err(|e| HarnessError::io(&path, e))?);
        for d in reports.iter().filter_map(|r| r.diagnostics.as_ref()) {
            writeln!(f, "{}", d.to_json()).map_err(|e| HarnessError::io(&path, e))?;
        }
        f.flush().map_err(|e| HarnessError::io(&path, e))?;
    }
    Ok(())
}

fn one_run(
    cfg: &ScenarioConfig,
    manifest: &RunManifest,
    scans_override: Option<&Scans>,
    run: usize,
) -> Result<Vec<VariantRun>> {
    let (truth, simulated) = simulate_run(cfg, manifest.seed, run)?;
    let scans = scans_override.unwrap_or(&simulated);
    manifest
        .variants
        .iter()
        .map(|&variant| {
            let start = Instant::now();
            let reports = run_filter(
                cfg,
                variant,
                manifest.lscan,
                scans,
                manifest.emit_diagnostics,
            )?;
            let elapsed = start.elapsed();
            let metrics = evaluate_windows(&truth, &reports, &cfg.metric)?;
            if let Some(out) = &manifest.out_dir {
                let dir = out.join("runs").join(variant.as_str());
                write_run_files(
                    &dir,
                    run,
                    &truth,
                    &reports,
                    &metrics,
                    manifest.emit_diagnostics,
                )?;
            }
            Ok(VariantRun {
                variant,
                run,
                metrics,
                cardinality: reports.iter().map(|r| r.estimates.len()).collect(),
                elapsed,
            })
        })
        .collect()
}

/// Runs the manifest. `scans_override` replaces the simulated measurements of
/// every run (truth still comes from the configuration).
pub fn run_experiment(
    cfg: &ScenarioConfig,
    manifest: &RunManifest,
    scans_override: Option<&Scans>,
) -> Result<ExperimentSummary> {
    manifest.validate()?;
    cfg.validate()?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(manifest.threads)
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    let per_run: Vec<Vec<VariantRun>> = pool.install(|| {
        (0..manifest.runs)
            .into_par_iter()
            .map(|run| one_run(cfg, manifest, scans_override, run))
            .collect::<Result<Vec<_>>>()
    })?;
    let runs: Vec<VariantRun> = per_run.into_iter().flatten().collect();

    let mut tm_over_time = BTreeMap::new();
    let mut mean_cardinality = BTreeMap::new();
    let mut rows = Vec::new();
    for &variant in &manifest.variants {
        let mine: Vec<&VariantRun> = runs.iter().filter(|r| r.variant == variant).collect();
        let steps = mine[0].metrics.len();
        let curve = (0..steps)
            .map(|k| rms_over_runs(&mine.iter().map(|r| r.metrics[k]).collect::<Vec<_>>()))
            .collect::<gtphd::Result<Vec<_>>>()?;
        let card: Vec<f64> = (0..steps)
            .map(|k| mine.iter().map(|r| r.cardinality[k] as f64).sum::<f64>() / mine.len() as f64)
            .collect();
        let n = steps as f64;
        let avg = |f: fn(&MetricResult) -> f64| curve.iter().map(f).sum::<f64>() / n;
        let steady: Vec<f64> = card
            .iter()
            .enumerate()
            .filter(|(i, _)| STEADY.contains(&(i + 1)))
            .map(|(_, c)| *c)
            .collect();
        rows.push(SummaryRow {
            variant: variant.label().into(),
            mean: avg(|m| m.total),
            localization: avg(|m| m.localization),
            miss: avg(|m| m.miss),
            false_: avg(|m| m.false_),
            switch: avg(|m| m.switch),
            steady_cardinality: if steady.is_empty() {
                f64::NAN
            } else {
                steady.iter().sum::<f64>() / steady.len() as f64
            },
        });
        tm_over_time.insert(variant, curve);
        mean_cardinality.insert(variant, card);
    }
    let summary = ExperimentSummary {
        rows,
        tm_over_time,
        mean_cardinality,
        runs,
        wall_clock: start.elapsed(),
    };
    if let Some(out) = &manifest.out_dir {
        write_summary(out, cfg, manifest, &summary)?;
    }
    Ok(summary)
}

#[derive(Serialize)]
struct ManifestFile<'a> {
    schema: &'static str,
    version: u32,
    manifest: &'a RunManifest,
    config: &'a ScenarioConfig,
}

#[derive(Serialize)]
struct TimingFile {
    wall_clock_s: f64,
    runs: Vec<TimingRow>,
}

#[derive(Serialize)]
struct TimingRow {
    variant: &'static str,
    run: usize,
    filter_s: f64,
}

fn write_summary(
    out: &Path,
    cfg: &ScenarioConfig,
    manifest: &RunManifest,
    s: &ExperimentSummary,
) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    let over_time = s.tm_over_time.iter().flat_map(|(v, curve)| {
        let card = &s.mean_cardinality[v];
        curve.iter().enumerate().map(move |(i, m)| OverTimeRow {
            variant: v.as_str(),
            step: i + 1,
            total: m.total,
            localization: m.localization,
            miss: m.miss,
            false_: m.false_,
            switch: m.switch,
            mean_cardinality: card[i],
        })
    });
    write_csv(&out.join("tm_over_time.csv"), "tm_over_time", over_time)?;
    write_csv(&out.join("summary.csv"), "summary", s.rows.iter())?;
    let md = out.join("summary.md");
    fs::write(
        &md,
        format!(
            "RMS trajectory metric and its decomposition, normalized by time window ({} runs)\n\n{}",
            manifest.runs,
            s.table()
        ),
    )
    .map_err(|e| HarnessError::io(&md, e))?;
    let mf = out.join("manifest.json");
    let body = serde_json::to_string_pretty(&ManifestFile {
        schema: "gtphd.manifest",
        version: 1,
        manifest,
        config: cfg,
    })
    .expect("manifest serializes");
    fs::write(&mf, body).map_err(|e| HarnessError::io(&mf, e))?;
    let timing = TimingFile {
        wall_clock_s: s.wall_clock.as_secs_f64(),
        runs: s
            .runs
            .iter()
            .map(|r| TimingRow {
                variant: r.variant.as_str(),
                run: r.run + 1,
                filter_s: r.elapsed.as_secs_f64(),
            })
            .collect(),
    };
    let tf = out.join("timing.json");
    fs::write(
        &tf,
        serde_json::to_string_pretty(&timing).expect("timing serializes"),
    )
    .map_err(|e| HarnessError::io(&tf, e))?;
    Ok(())
}
