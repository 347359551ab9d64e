//! Experiment runner: loads run configurations, drives runs to completion
//! and persists their artifacts.
//!
//! A run directory holds `run.json` (resolved configuration and outcome),
//! `metrics.jsonl`, `archive.jsonl`, `lineage.jsonl`, `report.json`,
//! `report.csv` and one `heatmap_{a}_{b}.csv` per pair of descriptor axes.
//! With a nonzero `report_every`, `reports.jsonl` holds intermediate reports.

use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use illuminate::analysis::{heatmap_export, ExpressivityReport};
use illuminate::engines::{ArchiveRecord, EngineError, GridRequirement, StopReason};
use illuminate::partition::GridKind;
use illuminate::{Algorithm, RunConfig, SteerableRun};

#[derive(Debug)]
pub enum CliError {
    /// The configuration could not be loaded or is inconsistent.
    Config(Vec<String>),
    Io(PathBuf, io::Error),
    /// The run failed after it started; partial artifacts were written.
    Run(EngineError),
    /// Stored individuals no longer evaluate to their recorded values.
    Integrity(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(lines) => {
                writeln!(f, "invalid configuration:")?;
                for l in lines {
                    writeln!(f, "  {l}")?;
                }
                Ok(())
            }
            CliError::Io(path, e) => write!(f, "{}: {e}", path.display()),
            CliError::Run(e) => write!(f, "run failed: {e}"),
            CliError::Integrity(msg) => write!(f, "integrity check failed: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |e| CliError::Io(path.to_path_buf(), e)
}

/// Reads a configuration, reporting the path of any offending field.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de)
        .map_err(|e| CliError::Config(vec![format!("{}: {}", e.path(), e.inner())]))
}

pub fn validate(config: &RunConfig) -> Result<(), CliError> {
    config
        .validate()
        .map_err(|issues| CliError::Config(issues.iter().map(ToString::to_string).collect()))
}

/// Adapts a configuration to another algorithm: the grid is dropped,
/// switched to sliding boundaries, or switched back to a uniform grid as the
/// algorithm requires.
pub fn retarget(config: &RunConfig, algorithm: Algorithm) -> RunConfig {
    let mut c = config.clone();
    c.engine.algorithm = algorithm;
    match algorithm.grid_requirement() {
        GridRequirement::None => c.engine.grid = None,
        GridRequirement::Sliding => {
            if let Some(g) = c.engine.grid.as_mut() {
                g.kind = GridKind::Sliding;
            }
        }
        GridRequirement::Fixed => {
            if let Some(g) = c.engine.grid.as_mut() {
                if g.kind == GridKind::Sliding {
                    g.kind = GridKind::Uniform;
                }
            }
        }
    }
    c
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: RunConfig,
    pub partial: bool,
    pub error: Option<String>,
    pub stop_reason: Option<StopReason>,
    pub iterations: u64,
    pub evaluations: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    /// Position of the configuration in a comparison.
    pub config: usize,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub iterations: u64,
    pub evaluations: u64,
    pub coverage: f64,
    pub qd_score: f64,
    pub best_fitness: Option<f64>,
    pub reference_coverage: f64,
    pub reference_qd_score: f64,
}

fn summarize(config: &RunConfig, run: &dyn SteerableRun) -> RunSummary {
    let report = run.report();
    let reference = run.projected_report(config.engine.reference_resolution);
    RunSummary {
        config: 0,
        algorithm: run.algorithm(),
        seed: config.seed,
        iterations: run.iteration(),
        evaluations: run.evaluations(),
        coverage: report.coverage,
        qd_score: report.qd_score,
        best_fitness: report.best_fitness,
        reference_coverage: reference.coverage,
        reference_qd_score: reference.qd_score,
    }
}

/// Runs a configuration to completion. With `out`, artifacts are written
/// there (partial ones if the run fails midway).
pub fn run_experiment(config: &RunConfig, out: Option<&Path>) -> Result<RunSummary, CliError> {
    validate(config)?;
    let mut run = config.build().map_err(CliError::Run)?;
    let mut metrics = match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
            let path = dir.join("metrics.jsonl");
            Some((BufWriter::new(File::create(&path).map_err(io_err(&path))?), path))
        }
        None => None,
    };
    let mut snapshots = match (out, config.report_every) {
        (Some(dir), k) if k > 0 => {
            let path = dir.join("reports.jsonl");
            Some((BufWriter::new(File::create(&path).map_err(io_err(&path))?), path))
        }
        _ => None,
    };
    let mut written = 0;
    let outcome = loop {
        match run.step() {
            Ok(true) => {
                if let Some((w, path)) = metrics.as_mut() {
                    for m in &run.metrics()[written..] {
                        write_json_line(w, m).map_err(io_err(path))?;
                    }
                    written = run.metrics().len();
                }
                if let Some((w, path)) = snapshots.as_mut() {
                    if run.iteration() % config.report_every == 0 {
                        write_json_line(w, &run.report()).map_err(io_err(path))?;
                    }
                }
            }
            Ok(false) => break Ok(()),
            Err(e) => break Err(e),
        }
    };
    for (mut w, path) in metrics.into_iter().chain(snapshots) {
        w.flush().map_err(io_err(&path))?;
    }
    if let Some(dir) = out {
        write_artifacts(dir, config, run.as_ref(), outcome.as_ref().err())?;
    }
    outcome.map_err(CliError::Run)?;
    Ok(summarize(config, run.as_ref()))
}

fn write_json_line<T: Serialize>(w: &mut impl Write, value: &T) -> io::Result<()> {
    serde_json::to_writer(&mut *w, value)?;
    w.write_all(b"\n")
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(io_err(path))
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    for item in items {
        write_json_line(&mut w, item).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_artifacts(
    dir: &Path,
    config: &RunConfig,
    run: &dyn SteerableRun,
    error: Option<&EngineError>,
) -> Result<(), CliError> {
    let manifest = RunManifest {
        config: config.clone(),
        partial: error.is_some(),
        error: error.map(ToString::to_string),
        stop_reason: run.stop_reason(),
        iterations: run.iteration(),
        evaluations: run.evaluations(),
    };
    write_text(&dir.join("run.json"), &pretty(&manifest))?;
    write_jsonl(&dir.join("archive.jsonl"), &run.archive_records())?;
    write_jsonl(&dir.join("lineage.jsonl"), &run.lineage_records())?;
    let report = run.report();
    write_text(&dir.join("report.json"), &pretty(&report))?;
    write_text(&dir.join("report.csv"), &report.cells_csv())?;
    write_heatmaps(dir, &report)
}

fn write_heatmaps(dir: &Path, report: &ExpressivityReport) -> Result<(), CliError> {
    let dims = report.resolutions.len();
    for a in 0..dims {
        for b in (a + 1)..dims {
            let h = heatmap_export(report, a, b).expect("axes are in range and distinct");
            write_text(&dir.join(format!("heatmap_{a}_{b}.csv")), &h.to_csv())?;
        }
    }
    Ok(())
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Runs every configuration for every seed. Configurations must share a
/// domain and a budget.
pub fn compare(configs: &[RunConfig], seeds: &[u64]) -> Result<Vec<RunSummary>, CliError> {
    let Some(first) = configs.first() else {
        return Err(CliError::Config(vec!["config: at least one configuration is needed".into()]));
    };
    let mut problems = Vec::new();
    for (i, c) in configs.iter().enumerate().skip(1) {
        if c.domain != first.domain {
            problems.push(format!("config[{i}].domain: differs from config[0].domain"));
        }
        if c.engine.budget != first.engine.budget {
            problems.push(format!(
                "config[{i}].engine.budget: {} differs from config[0] ({})",
                c.engine.budget, first.engine.budget
            ));
        }
    }
    if !problems.is_empty() {
        return Err(CliError::Config(problems));
    }
    let mut out = Vec::new();
    for (i, base) in configs.iter().enumerate() {
        for &seed in seeds {
            let mut cfg = base.clone();
            cfg.seed = seed;
            let mut row = run_experiment(&cfg, None)?;
            row.config = i;
            out.push(row);
        }
    }
    Ok(out)
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// One row per run, then one `median` row per configuration.
pub fn summaries_csv(rows: &[RunSummary]) -> String {
    let na = illuminate::analysis::MISSING_MARKER;
    let mut s = String::from(
        "config,algorithm,seed,iterations,evaluations,coverage,qd_score,best_fitness,reference_coverage,reference_qd_score\n",
    );
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{:?},{:?},{},{:?},{:?}\n",
            r.config,
            r.algorithm,
            r.seed,
            r.iterations,
            r.evaluations,
            r.coverage,
            r.qd_score,
            r.best_fitness.map_or(na.to_string(), |f| format!("{f:?}")),
            r.reference_coverage,
            r.reference_qd_score,
        ));
    }
    let mut groups: Vec<usize> = rows.iter().map(|r| r.config).collect();
    groups.dedup();
    for g in groups {
        let group: Vec<&RunSummary> = rows.iter().filter(|r| r.config == g).collect();
        let col = |f: fn(&RunSummary) -> f64| median(group.iter().map(|r| f(r)).collect());
        let best: Vec<f64> = group.iter().filter_map(|r| r.best_fitness).collect();
        s.push_str(&format!(
            "{},{},median,{:?},{:?},{:?},{:?},{},{:?},{:?}\n",
            g,
            group[0].algorithm,
            col(|r| r.iterations as f64),
            col(|r| r.evaluations as f64),
            col(|r| r.coverage),
            col(|r| r.qd_score),
            if best.is_empty() { na.to_string() } else { format!("{:?}", median(best)) },
            col(|r| r.reference_coverage),
            col(|r| r.reference_qd_score),
        ));
    }
    s
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verification {
    pub records: usize,
    pub mismatches: Vec<u64>,
    pub coverage: f64,
    pub qd_score: f64,
    pub partial: bool,
}

/// Re-evaluates every stored genome of a run directory and checks it still
/// yields the recorded evaluation.
pub fn verify_run(dir: &Path) -> Result<Verification, CliError> {
    let manifest_path = dir.join("run.json");
    let manifest: RunManifest = serde_json::from_str(
        &fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?,
    )
    .map_err(|e| CliError::Integrity(format!("{}: {e}", manifest_path.display())))?;
    let archive_path = dir.join("archive.jsonl");
    let reader = BufReader::new(File::open(&archive_path).map_err(io_err(&archive_path))?);
    let mut records = 0;
    let mut mismatches = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err(&archive_path))?;
        let rec: ArchiveRecord = serde_json::from_str(&line)
            .map_err(|e| CliError::Integrity(format!("archive.jsonl line {}: {e}", n + 1)))?;
        records += 1;
        match manifest.config.domain.reevaluate(&rec.genome) {
            Ok(eval) if eval == rec.evaluation => {}
            _ => mismatches.push(rec.id),
        }
    }
    let report_path = dir.join("report.json");
    let report: ExpressivityReport = serde_json::from_str(
        &fs::read_to_string(&report_path).map_err(io_err(&report_path))?,
    )
    .map_err(|e| CliError::Integrity(format!("{}: {e}", report_path.display())))?;
    Ok(Verification {
        records,
        mismatches,
        coverage: report.coverage,
        qd_score: report.qd_score,
        partial: manifest.partial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_errors_name_the_field() {
        let err = parse_config(r#"{"engine": {"budget": "lots"}}"#).unwrap_err();
        let CliError::Config(lines) = err else { panic!() };
        assert!(lines[0].starts_with("engine.budget"), "{lines:?}");
        assert_eq!(CliError::Config(lines).exit_code(), 2);
    }

    #[test]
    fn retarget_adjusts_grid() {
        let mut base = RunConfig::default();
        base.engine.grid = Some(illuminate::GridSpec::uniform(vec![
            illuminate::partition::Axis::new(0.0, 1.0, 5);
            2
        ]));
        for alg in Algorithm::ALL {
            retarget(&base, alg).validate().unwrap();
        }
    }

    fn small(alg: Algorithm) -> RunConfig {
        let mut base = RunConfig::default();
        base.engine.budget = 200;
        base.engine.grid = Some(illuminate::GridSpec::uniform(vec![
            illuminate::partition::Axis::new(0.0, 1.0, 5);
            2
        ]));
        retarget(&base, alg)
    }

    #[test]
    fn one_config_one_seed_one_row() {
        let rows = compare(&[small(Algorithm::MapElites)], &[1]).unwrap();
        assert_eq!(rows.len(), 1);
        let csv = summaries_csv(&rows);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(1).unwrap().starts_with("0,ME,1,"));
        assert!(csv.lines().nth(2).unwrap().starts_with("0,ME,median,"));
    }

    #[test]
    fn duplicate_configs_give_identical_rows() {
        let c = small(Algorithm::ObjectiveGa);
        let rows = compare(&[c.clone(), c], &[4]).unwrap();
        let csv = summaries_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1][1..], lines[2][1..]);
    }

    #[test]
    fn mismatched_domains_rejected() {
        let a = small(Algorithm::MapElites);
        let mut b = small(Algorithm::ObjectiveGa);
        b.domain = illuminate::DomainConfig::Level(Default::default());
        b.engine.budget = 300;
        let Err(CliError::Config(p)) = compare(&[a, b], &[1]) else {
            panic!()
        };
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn medians_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
