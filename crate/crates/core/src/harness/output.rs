//! Result files: `frequencies.csv`, `summary.json`, `audit.jsonl` and SVG plots.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::experiment::{Aggregate, HarnessError, MetricsRecord, RunReport, RunStats, TableRecord, FUZZYCHAIN};
use super::svg;
use crate::metrics::{FrequencyTable, Granularity};

pub const FREQUENCIES: &str = "frequencies.csv";
pub const SUMMARY: &str = "summary.json";
pub const AUDIT: &str = "audit.jsonl";

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: ExperimentConfig,
    pub labels: Vec<String>,
    pub trusted_sets_required: usize,
    /// Granularity of the fuzzy consensus tables; baselines are always per participant.
    pub fuzzychain_granularity: Granularity,
    pub baseline_granularity: Granularity,
    pub aggregates: Vec<Aggregate>,
    pub metrics: Vec<MetricsRecord>,
    pub runs: Vec<RunStats>,
}

impl Summary {
    pub fn of(report: &RunReport) -> Self {
        Self {
            config: report.config.clone(),
            labels: report.labels.clone(),
            trusted_sets_required: report.trusted_sets_required,
            fuzzychain_granularity: report.config.granularity,
            baseline_granularity: Granularity::PerParticipant,
            aggregates: report.aggregates.clone(),
            metrics: report.metrics.clone(),
            runs: report.runs.clone(),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.display().to_string(), source }
}

fn format_err(path: &Path, message: impl ToString) -> HarnessError {
    HarnessError::Format { path: path.display().to_string(), message: message.to_string() }
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    algorithm: String,
    rounds: u64,
    repetition: u32,
    granularity: Granularity,
    key: String,
    count: u64,
}

pub fn write_frequencies(tables: &[TableRecord], path: &Path) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| format_err(path, e))?;
    for t in tables {
        for (key, count) in &t.table.entries {
            w.serialize(CsvRow {
                algorithm: t.algorithm.clone(),
                rounds: t.rounds,
                repetition: t.repetition,
                granularity: t.table.granularity,
                key: key.clone(),
                count: *count,
            })
            .map_err(|e| format_err(path, e))?;
        }
    }
    w.flush().map_err(io_err(path))
}

/// Rebuilds tables from consecutive rows sharing (algorithm, rounds, repetition).
pub fn read_frequencies(path: &Path) -> Result<Vec<TableRecord>, HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| format_err(path, e))?;
    let mut tables: Vec<TableRecord> = Vec::new();
    for row in r.deserialize::<CsvRow>() {
        let row = row.map_err(|e| format_err(path, e))?;
        match tables.last_mut() {
            Some(t) if t.algorithm == row.algorithm && t.rounds == row.rounds && t.repetition == row.repetition => {
                t.table.entries.push((row.key, row.count));
            }
            _ => tables.push(TableRecord {
                algorithm: row.algorithm,
                rounds: row.rounds,
                repetition: row.repetition,
                table: FrequencyTable::new(row.granularity, vec![(row.key, row.count)]),
            }),
        }
    }
    Ok(tables)
}

pub fn read_summary(path: &Path) -> Result<Summary, HarnessError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| format_err(path, e))
}

fn distinct<T: PartialEq + Clone>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out = Vec::new();
    for i in items {
        if !out.contains(&i) {
            out.push(i);
        }
    }
    out
}

/// Plot files derivable from the tables alone.
pub fn plots(tables: &[TableRecord]) -> Vec<(&'static str, String)> {
    let mut out = Vec::new();
    let fuzzy: Vec<&TableRecord> = tables.iter().filter(|t| t.algorithm == FUZZYCHAIN).collect();
    if let Some(first) = fuzzy.first() {
        let keys: Vec<String> = first.table.entries.iter().map(|(k, _)| k.clone()).collect();
        let counts = |t: &TableRecord| t.table.counts();
        let sweep = distinct(fuzzy.iter().map(|t| t.rounds));

        out.push((
            "frequency_bars.svg",
            svg::bar_chart(
                &format!("Selected validators per label, {} rounds", first.rounds),
                "frequency count",
                &keys,
                &[(first.rounds.to_string(), counts(first))],
            ),
        ));

        let series: Vec<(String, Vec<f64>)> = sweep
            .iter()
            .filter_map(|&r| fuzzy.iter().find(|t| t.rounds == r && t.repetition == first.repetition))
            .map(|t| (format!("{} rounds", t.rounds), counts(t)))
            .collect();
        out.push(("rounds_overlay.svg", svg::line_overlay("Selections across round counts", "frequency count", &keys, &series)));

        let longest = *sweep.iter().max().expect("non-empty");
        let reps: Vec<&&TableRecord> = fuzzy.iter().filter(|t| t.rounds == longest).collect();
        let samples: Vec<Vec<f64>> =
            (0..keys.len()).map(|k| reps.iter().map(|t| t.table.entries[k].1 as f64).collect()).collect();
        out.push((
            "label_boxplot.svg",
            svg::box_plot(&format!("{} repetitions of {longest} rounds", reps.len()), "frequency count", &keys, &samples),
        ));
    }

    let algorithms = distinct(tables.iter().map(|t| t.algorithm.clone()));
    if algorithms.len() > 1 {
        let ginis: Vec<f64> = algorithms
            .iter()
            .map(|a| {
                let g: Vec<f64> = tables
                    .iter()
                    .filter(|t| &t.algorithm == a)
                    .filter_map(|t| t.table.metrics().ok().map(|m| m.gini))
                    .collect();
                crate::metrics::mean(&g)
            })
            .collect();
        out.push((
            "gini_comparison.svg",
            svg::bar_chart("Mean Gini coefficient of selections", "Gini", &algorithms, &[("gini".into(), ginis)]),
        ));
    }
    out
}

/// Writes every result file into `out_dir` (created if missing) and returns their paths.
pub fn emit_outputs(report: &RunReport, out_dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    if report.tables.is_empty() {
        return Err(HarnessError::NothingToEmit);
    }
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut written = Vec::new();

    let path = out_dir.join(FREQUENCIES);
    write_frequencies(&report.tables, &path)?;
    written.push(path);

    let path = out_dir.join(SUMMARY);
    let json = serde_json::to_string_pretty(&Summary::of(report)).map_err(|e| format_err(&path, e))?;
    fs::write(&path, json + "\n").map_err(io_err(&path))?;
    written.push(path);

    let path = out_dir.join(AUDIT);
    let file = fs::File::create(&path).map_err(io_err(&path))?;
    let mut w = BufWriter::new(file);
    for record in &report.audit {
        serde_json::to_writer(&mut w, record).map_err(|e| format_err(&path, e))?;
        w.write_all(b"\n").map_err(io_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;
    written.push(path);

    for (name, body) in plots(&report.tables) {
        let path = out_dir.join(name);
        fs::write(&path, body).map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}

/// Plain-text metrics table, one line per (algorithm, rounds).
pub fn metrics_table(tables: &[TableRecord]) -> String {
    let mut out = format!("{:<12} {:>7} {:>5} {:>8} {:>9} {:>9}\n", "algorithm", "rounds", "reps", "gini", "skewness", "kurtosis");
    let groups = distinct(tables.iter().map(|t| (t.algorithm.clone(), t.rounds)));
    for (algorithm, rounds) in groups {
        let ms: Vec<_> = tables
            .iter()
            .filter(|t| t.algorithm == algorithm && t.rounds == rounds)
            .filter_map(|t| t.table.metrics().ok())
            .collect();
        let avg = |f: &dyn Fn(&crate::metrics::MetricsReport) -> Option<f64>| {
            let v: Vec<f64> = ms.iter().filter_map(f).collect();
            if v.is_empty() {
                "-".to_string()
            } else {
                format!("{:.4}", crate::metrics::mean(&v))
            }
        };
        out.push_str(&format!(
            "{:<12} {:>7} {:>5} {:>8} {:>9} {:>9}\n",
            algorithm,
            rounds,
            ms.len(),
            avg(&|m| Some(m.gini)),
            avg(&|m| m.skewness),
            avg(&|m| m.kurtosis_excess)
        ));
    }
    out
}

/// Re-reads a result directory, regenerates its plots and returns a text summary.
pub fn report_dir(dir: &Path) -> Result<String, HarnessError> {
    let tables = read_frequencies(&dir.join(FREQUENCIES))?;
    if tables.is_empty() {
        return Err(HarnessError::NothingToEmit);
    }
    let summary = read_summary(&dir.join(SUMMARY))?;
    for (name, body) in plots(&tables) {
        let path = dir.join(name);
        fs::write(&path, body).map_err(io_err(&path))?;
    }
    let mut text = format!(
        "experiment: {:?}  seed: {}  labels: {}  trusted sets required: {}\n",
        summary.config.experiment,
        summary.config.seed,
        summary.labels.join(","),
        summary.trusted_sets_required
    );
    text.push_str(&metrics_table(&tables));
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(rep: u32, counts: [u64; 3]) -> TableRecord {
        TableRecord {
            algorithm: FUZZYCHAIN.into(),
            rounds: 10,
            repetition: rep,
            table: FrequencyTable::new(
                Granularity::PerLabel,
                ["a", "b,c", "d\"e"].iter().zip(counts).map(|(k, c)| (k.to_string(), c)).collect(),
            ),
        }
    }

    #[test]
    fn csv_round_trip_with_awkward_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(FREQUENCIES);
        let tables = vec![record(0, [1, 2, 7]), record(1, [4, 4, 2])];
        write_frequencies(&tables, &path).unwrap();
        assert_eq!(read_frequencies(&path).unwrap(), tables);
    }

    #[test]
    fn metrics_table_lists_groups() {
        let text = metrics_table(&[record(0, [1, 2, 7]), record(1, [4, 4, 2])]);
        assert_eq!(text.lines().count(), 2);
        assert!(text.contains("fuzzychain"));
    }
}
