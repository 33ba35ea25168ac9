//! Scaling benchmarks over the builtin circuit families, CSV emission and
//! the linear-vs-exponential fit used to classify each timing series.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::time::Instant;

use thiserror::Error;

use crate::circuit::{emit_builtin, execute, Family};
use crate::engine::{AnyEngine, EngineKind};
use crate::state::Capacity;

/// Column header of the benchmark CSV.
pub const CSV_HEADER: [&str; 6] = ["scenario", "engine", "n", "repeat", "wall_seconds", "map_size"];

/// Suffix of the derived measurement-only series of `superpos_measure`.
pub const MEASURE_ONLY_SUFFIX: &str = "/measure_only";

/// Minimum number of distinct sizes a series needs before it is fitted.
pub const MIN_FIT_POINTS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub scenario: String,
    pub engine: EngineKind,
    pub n: usize,
    pub repeat: usize,
    /// `None` when the cell could not run (capacity or size bounds).
    pub wall_seconds: Option<f64>,
    /// Final key count, bitwise engine only.
    pub map_size: Option<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub family: Family,
    pub sizes: Vec<usize>,
    pub engines: Vec<EngineKind>,
    pub repeats: usize,
    pub seed: u64,
    pub cap: Capacity,
}

impl BenchConfig {
    pub fn new(family: Family, sizes: Vec<usize>) -> Self {
        Self {
            family,
            sizes,
            engines: vec![EngineKind::Bitwise],
            repeats: 5,
            seed: 1,
            cap: Capacity::from_env(),
        }
    }
}

fn repeat_seed(base: u64, repeat: usize) -> u64 {
    if base == 0 {
        0
    } else {
        base.wrapping_add(repeat as u64)
    }
}

fn seconds(start: Instant, end: Instant) -> f64 {
    // a zero reading would break the log fit
    (end - start).as_secs_f64().max(1e-9)
}

/// Runs every `(n, engine, repeat)` cell, handing each record to `sink` as
/// soon as it is produced. Cells that cannot run yield `NA` records.
pub fn run_bench_with(cfg: &BenchConfig, mut sink: impl FnMut(BenchRecord)) {
    let measure_only = format!("{}{MEASURE_ONLY_SUFFIX}", cfg.family);
    for &n in &cfg.sizes {
        for &kind in &cfg.engines {
            let na = |repeat, scenario: &str| BenchRecord {
                scenario: scenario.to_string(),
                engine: kind,
                n,
                repeat,
                wall_seconds: None,
                map_size: None,
                seed: repeat_seed(cfg.seed, repeat),
            };
            let circuit = emit_builtin(cfg.family, n).ok();
            let fits = circuit
                .as_ref()
                .is_some_and(|c| AnyEngine::new(kind, c.n(), cfg.seed, &cfg.cap).is_ok());
            let Some(circuit) = circuit.filter(|_| fits) else {
                for repeat in 0..cfg.repeats {
                    sink(na(repeat, cfg.family.as_str()));
                    if cfg.family == Family::SuperposMeasure {
                        sink(na(repeat, &measure_only));
                    }
                }
                continue;
            };

            let all = circuit.instructions();
            let split = if cfg.family == Family::SuperposMeasure { all.len() - 1 } else { all.len() };
            let (prep, tail) = all.split_at(split);

            // untimed warm-up
            let mut warm = AnyEngine::new(kind, circuit.n(), cfg.seed, &cfg.cap).expect("capacity checked");
            let _ = execute(&mut warm, &circuit, all, false);

            for repeat in 0..cfg.repeats {
                let seed = repeat_seed(cfg.seed, repeat);
                let mut engine = AnyEngine::new(kind, circuit.n(), seed, &cfg.cap).expect("capacity checked");
                let start = Instant::now();
                let ok = execute(&mut engine, &circuit, prep, false).is_ok();
                let prepared = Instant::now();
                let ok = ok && execute(&mut engine, &circuit, tail, false).is_ok();
                let done = Instant::now();
                if !ok {
                    sink(na(repeat, cfg.family.as_str()));
                    continue;
                }
                let record = BenchRecord {
                    scenario: cfg.family.to_string(),
                    engine: kind,
                    n,
                    repeat,
                    wall_seconds: Some(seconds(start, done)),
                    map_size: engine.map_size(),
                    seed,
                };
                if cfg.family == Family::SuperposMeasure {
                    let total = record.wall_seconds.unwrap_or_default();
                    let measure_seconds = (total - seconds(start, prepared)).max(1e-9);
                    sink(record.clone());
                    sink(BenchRecord {
                        scenario: measure_only.clone(),
                        wall_seconds: Some(measure_seconds),
                        ..record
                    });
                } else {
                    sink(record);
                }
            }
        }
    }
}

pub fn run_bench(cfg: &BenchConfig) -> Vec<BenchRecord> {
    let mut out = Vec::new();
    run_bench_with(cfg, |r| out.push(r));
    out
}

fn optional<T: ToString>(value: Option<T>) -> String {
    value.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

impl BenchRecord {
    fn csv_fields(&self) -> [String; 6] {
        [
            self.scenario.clone(),
            self.engine.to_string(),
            self.n.to_string(),
            self.repeat.to_string(),
            optional(self.wall_seconds),
            match (self.engine, self.wall_seconds) {
                (EngineKind::Bitwise, _) | (_, None) => optional(self.map_size),
                _ => String::new(),
            },
        ]
    }
}

#[derive(Debug, Error)]
pub enum CsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("bad header: expected `{}`", CSV_HEADER.join(","))]
    Header,
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
}

/// Streams records as CSV, header first.
pub struct CsvSink<W: Write> {
    writer: csv::Writer<W>,
}

impl<W: Write> CsvSink<W> {
    pub fn new(out: W) -> Result<Self, CsvError> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(CSV_HEADER)?;
        writer.flush().map_err(csv::Error::from)?;
        Ok(Self { writer })
    }

    pub fn write(&mut self, record: &BenchRecord) -> Result<(), CsvError> {
        self.writer.write_record(record.csv_fields())?;
        self.writer.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

pub fn write_csv<W: Write>(out: W, records: &[BenchRecord]) -> Result<(), CsvError> {
    let mut sink = CsvSink::new(out)?;
    for r in records {
        sink.write(r)?;
    }
    Ok(())
}

/// Reads benchmark CSV. `NA` or empty cells become `None`; the seed is not
/// part of the file and reads back as 0.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<BenchRecord>, CsvError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    if reader.headers()?.iter().ne(CSV_HEADER) {
        return Err(CsvError::Header);
    }
    let mut out = Vec::new();
    for (idx, row) in reader.records().enumerate() {
        let row = row?;
        let bad = |message: String| CsvError::Row { row: idx + 1, message };
        let field = |i: usize| row.get(i).unwrap_or("").trim();
        let maybe = |s: &str| -> Option<String> { (!s.is_empty() && s != "NA").then(|| s.to_string()) };
        out.push(BenchRecord {
            scenario: field(0).to_string(),
            engine: field(1).parse().map_err(bad)?,
            n: field(2).parse().map_err(|e| bad(format!("n: {e}")))?,
            repeat: field(3).parse().map_err(|e| bad(format!("repeat: {e}")))?,
            wall_seconds: maybe(field(4))
                .map(|s| s.parse::<f64>())
                .transpose()
                .map_err(|e| bad(format!("wall_seconds: {e}")))?,
            map_size: maybe(field(5))
                .map(|s| s.parse::<usize>())
                .transpose()
                .map_err(|e| bad(format!("map_size: {e}")))?,
            seed: 0,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    LinearLike,
    ExponentialLike,
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Shape::LinearLike => "linear-like",
            Shape::ExponentialLike => "exponential-like",
        })
    }
}

/// Ordinary least squares `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// `1 − R²`; 0 when the responses are constant.
    pub residual: f64,
}

pub fn least_squares(xs: &[f64], ys: &[f64]) -> LineFit {
    let len = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / len;
    let my = ys.iter().sum::<f64>() / len;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let residual = if ss_tot > 0.0 { (ss_res / ss_tot).clamp(0.0, 1.0) } else { 0.0 };
    LineFit { slope, intercept, residual }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub scenario: String,
    pub engine: EngineKind,
    pub points: usize,
    /// `time` against `n`.
    pub linear: LineFit,
    /// `log₂(time)` against `n`.
    pub exponential: LineFit,
    pub shape: Shape,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("{scenario}/{engine}: {points} distinct sizes, need at least {MIN_FIT_POINTS}")]
    InsufficientPoints {
        scenario: String,
        engine: EngineKind,
        points: usize,
    },
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// Fits one series of `(n, seconds)` samples. Repeats at the same `n` are
/// reduced to their median first.
pub fn fit_series(
    scenario: &str,
    engine: EngineKind,
    samples: &[(usize, f64)],
) -> Result<ScalingFit, FitError> {
    let mut by_n: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for &(n, t) in samples {
        if t.is_finite() && t > 0.0 {
            by_n.entry(n).or_default().push(t);
        }
    }
    if by_n.len() < MIN_FIT_POINTS {
        return Err(FitError::InsufficientPoints {
            scenario: scenario.to_string(),
            engine,
            points: by_n.len(),
        });
    }
    let xs: Vec<f64> = by_n.keys().map(|&n| n as f64).collect();
    let ts: Vec<f64> = by_n.values_mut().map(|v| median(v)).collect();
    let logs: Vec<f64> = ts.iter().map(|t| t.log2()).collect();
    let linear = least_squares(&xs, &ts);
    let exponential = least_squares(&xs, &logs);
    let shape = if exponential.residual < linear.residual {
        Shape::ExponentialLike
    } else {
        Shape::LinearLike
    };
    Ok(ScalingFit {
        scenario: scenario.to_string(),
        engine,
        points: xs.len(),
        linear,
        exponential,
        shape,
    })
}

type SeriesKey = (String, &'static str);

/// Groups records by `(scenario, engine)` and fits each series. `NA` rows
/// are ignored.
pub fn fit_scaling(records: &[BenchRecord]) -> Vec<Result<ScalingFit, FitError>> {
    let mut series: BTreeMap<SeriesKey, (EngineKind, Vec<(usize, f64)>)> = BTreeMap::new();
    for r in records {
        let entry = series
            .entry((r.scenario.clone(), r.engine.as_str()))
            .or_insert_with(|| (r.engine, Vec::new()));
        if let Some(t) = r.wall_seconds {
            entry.1.push((r.n, t));
        }
    }
    series
        .into_iter()
        .map(|((scenario, _), (engine, samples))| fit_series(&scenario, engine, &samples))
        .collect()
}
