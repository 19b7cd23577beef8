//! Replays workloads and measures preprocessing, update, counting, answering
//! and enumeration costs, in wall-clock time and in engine steps.
//!
//! The leading run of inserts in a stream is the preprocessing phase. Step
//! counts are deterministic for a given query and stream; wall-clock
//! figures are advisory.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::database::{Database, DatabaseError, UpdateKind};
use crate::engine::{DynamicEngine, EngineError};
use crate::oracle::eval_naive;
use crate::query::Query;
use crate::workload::{Probe, Stream, StreamCommand};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchMode {
    Engine,
    /// Plain fact set, re-evaluated from scratch at every probe.
    OracleRecompute,
}

impl BenchMode {
    pub fn label(self) -> &'static str {
        match self {
            BenchMode::Engine => "engine",
            BenchMode::OracleRecompute => "oracle",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Database(#[from] DatabaseError),
}

/// Order statistics of a sample.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Summary {
    pub samples: usize,
    pub median: f64,
    pub p99: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Summary::default();
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let at = |q: f64| sorted[((sorted.len() - 1) as f64 * q).round() as usize];
        Summary {
            samples: sorted.len(),
            median: at(0.5),
            p99: at(0.99),
            max: sorted[sorted.len() - 1],
        }
    }
}

/// Measurements for one workload.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SizeReport {
    pub size: usize,
    /// Active domain and fact count after preprocessing.
    pub adom: usize,
    pub facts: usize,
    pub preprocess: Duration,
    /// Per-update wall time in nanoseconds, warm-up excluded.
    pub update_ns: Summary,
    /// Largest step count of a single update (engine only).
    pub update_steps_max: u64,
    pub count_ns: Summary,
    pub answer_ns: Summary,
    /// Time per oracle evaluation (oracle only).
    pub probe_ns: Summary,
    /// Steps between consecutive results, including before the first and
    /// after the last (engine only).
    pub delay_steps: Summary,
    pub delay_ns: Summary,
    pub tuples: usize,
}

pub const CSV_HEADER: &str = "phase,size,metric,value";

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub mode: BenchMode,
    pub sizes: Vec<SizeReport>,
}

impl BenchReport {
    /// CSV with header `phase,size,metric,value`.
    pub fn to_csv(&self) -> String {
        format!("{CSV_HEADER}\n{}", self.csv_rows())
    }

    /// The CSV rows without the header.
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        let mode = self.mode.label();
        for r in &self.sizes {
            let mut row = |phase: &str, metric: &str, value: String| {
                let _ = writeln!(out, "{mode}_{phase},{},{metric},{value}", r.size);
            };
            row("preprocess", "adom", r.adom.to_string());
            row("preprocess", "facts", r.facts.to_string());
            row("preprocess", "ns", r.preprocess.as_nanos().to_string());
            let mut summary = |phase: &str, unit: &str, s: &Summary| {
                row(phase, "samples", s.samples.to_string());
                row(phase, &format!("median_{unit}"), format!("{:.0}", s.median));
                row(phase, &format!("p99_{unit}"), format!("{:.0}", s.p99));
                row(phase, &format!("max_{unit}"), format!("{:.0}", s.max));
            };
            summary("update", "ns", &r.update_ns);
            match self.mode {
                BenchMode::Engine => {
                    summary("count", "ns", &r.count_ns);
                    summary("answer", "ns", &r.answer_ns);
                    summary("enum_delay", "ns", &r.delay_ns);
                    summary("enum_delay", "steps", &r.delay_steps);
                    row("update", "max_steps", r.update_steps_max.to_string());
                }
                BenchMode::OracleRecompute => summary("probe", "ns", &r.probe_ns),
            }
            row("enum", "tuples", r.tuples.to_string());
        }
        out
    }
}

fn ns(d: Duration) -> f64 {
    d.as_nanos() as f64
}

/// Number of leading insert commands.
fn preprocessing_len(stream: &Stream) -> usize {
    stream
        .commands
        .iter()
        .take_while(|c| matches!(c, StreamCommand::Update(u) if u.kind == UpdateKind::Insert))
        .count()
}

fn warm(samples: Vec<f64>) -> Vec<f64> {
    let skip = samples.len() / 10;
    samples[skip..].to_vec()
}

pub fn run_bench(
    q: &Query,
    workloads: &[(usize, Stream)],
    mode: BenchMode,
) -> Result<BenchReport, BenchError> {
    if mode == BenchMode::Engine {
        DynamicEngine::<u128>::create(q)?;
    }
    let sizes = workloads
        .iter()
        .map(|(size, stream)| match mode {
            BenchMode::Engine => bench_engine(q, *size, stream),
            BenchMode::OracleRecompute => bench_oracle(q, *size, stream),
        })
        .collect::<Result<_, _>>()?;
    Ok(BenchReport { mode, sizes })
}

fn bench_engine(q: &Query, size: usize, stream: &Stream) -> Result<SizeReport, BenchError> {
    let mut engine = DynamicEngine::<u128>::create(q)?;
    let pre = preprocessing_len(stream);
    let start = Instant::now();
    for cmd in &stream.commands[..pre] {
        if let StreamCommand::Update(u) = cmd {
            engine.apply(u)?;
        }
    }
    let mut report = SizeReport {
        size,
        preprocess: start.elapsed(),
        adom: engine.interner().len(),
        facts: engine.fact_count(),
        ..SizeReport::default()
    };

    let (mut updates, mut counts, mut answers) = (Vec::new(), Vec::new(), Vec::new());
    let (mut delay_steps, mut delay_ns) = (Vec::new(), Vec::new());
    for cmd in &stream.commands[pre..] {
        match cmd {
            StreamCommand::Update(u) => {
                let steps = engine.steps();
                let t = Instant::now();
                engine.apply(u)?;
                updates.push(ns(t.elapsed()));
                report.update_steps_max = report.update_steps_max.max(engine.steps() - steps);
            }
            StreamCommand::Probe(Probe::Count) => {
                let t = Instant::now();
                std::hint::black_box(engine.count());
                counts.push(ns(t.elapsed()));
            }
            StreamCommand::Probe(Probe::Answer) => {
                let t = Instant::now();
                std::hint::black_box(engine.answer());
                answers.push(ns(t.elapsed()));
            }
            StreamCommand::Probe(Probe::Enum) => {
                let mut cursor = engine.open_cursor();
                loop {
                    let steps = engine.steps();
                    let t = Instant::now();
                    let item = engine
                        .next(&mut cursor)
                        .expect("no updates during enumeration");
                    delay_ns.push(ns(t.elapsed()));
                    delay_steps.push((engine.steps() - steps) as f64);
                    match item {
                        Some(t) => {
                            std::hint::black_box(t);
                            report.tuples += 1;
                        }
                        None => break,
                    }
                }
            }
        }
    }
    report.update_ns = Summary::of(&warm(updates));
    report.count_ns = Summary::of(&counts);
    report.answer_ns = Summary::of(&answers);
    report.delay_steps = Summary::of(&delay_steps);
    report.delay_ns = Summary::of(&delay_ns);
    Ok(report)
}

fn bench_oracle(q: &Query, size: usize, stream: &Stream) -> Result<SizeReport, BenchError> {
    let mut db = Database::new();
    let pre = preprocessing_len(stream);
    let start = Instant::now();
    for cmd in &stream.commands[..pre] {
        if let StreamCommand::Update(u) = cmd {
            db.apply(u)?;
        }
    }
    let mut report = SizeReport {
        size,
        preprocess: start.elapsed(),
        adom: db.active_domain().len(),
        facts: db.len(),
        ..SizeReport::default()
    };
    let (mut updates, mut probes) = (Vec::new(), Vec::new());
    for cmd in &stream.commands[pre..] {
        match cmd {
            StreamCommand::Update(u) => {
                let t = Instant::now();
                db.apply(u)?;
                updates.push(ns(t.elapsed()));
            }
            StreamCommand::Probe(p) => {
                let t = Instant::now();
                let result = eval_naive(q, &db)?;
                probes.push(ns(t.elapsed()));
                if *p == Probe::Enum {
                    report.tuples += result.len();
                }
            }
        }
    }
    report.update_ns = Summary::of(&warm(updates));
    report.probe_ns = Summary::of(&probes);
    Ok(report)
}
