//! The `dyncq` command line: classify queries, replay update streams through
//! the engine or the oracle, benchmark, fuzz, and run a small demo.

use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use dyncq::bench::{run_bench, BenchMode, CSV_HEADER};
use dyncq::workload::{
    engine_probe, gen_random_qh, gen_scaled, oracle_probe, parse_stream, serialize_stream,
    ProbeAnswer, RandomParams, Stream, StreamCommand,
};
use dyncq::{classify, parse_query, parse_snapshot, Database, EngineError, Query, WideEngine};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_TRACTABLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "dyncq",
    version,
    about = "Dynamic conjunctive query evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Report which of answering, counting and enumeration are tractable.
    Classify {
        /// File holding one query, e.g. `Q(x) :- E(x, y), T(y).`
        query: PathBuf,
    },
    /// Replay an update stream and print the answer to every probe.
    Run {
        query: PathBuf,
        stream: PathBuf,
        /// Facts to load before the stream.
        #[arg(long)]
        snapshot: Option<PathBuf>,
        /// Answer probes by re-evaluating from scratch instead of the engine.
        #[arg(long, conflicts_with_all = ["verify", "engine"])]
        oracle: bool,
        /// Answer probes with the engine (the default).
        #[arg(long)]
        engine: bool,
        /// Cross-check every probe of the engine against the oracle.
        #[arg(long)]
        verify: bool,
    },
    /// Benchmark the engine on generated workloads and print CSV.
    Bench {
        query: PathBuf,
        /// Target active-domain sizes.
        #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Updates after preprocessing, per size.
        #[arg(long, default_value_t = 2000)]
        updates: usize,
        /// Also measure the recompute-from-scratch baseline.
        #[arg(long)]
        baseline: bool,
    },
    /// Compare engine and oracle on random q-hierarchical queries and streams.
    Fuzz {
        #[arg(long, default_value_t = 100)]
        runs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        max_vars: usize,
        /// Directory to write a counterexample's query and stream to.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Maintain a small example query through one insertion.
    Demo,
}

struct Failure {
    code: i32,
    message: String,
}

fn usage(e: impl Display) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: e.to_string(),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn read_query(path: &Path) -> Result<Query, Failure> {
    parse_query(&read(path)?, None).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn create_engine(q: &Query) -> Result<WideEngine, Failure> {
    WideEngine::create(q).map_err(|e| match e {
        EngineError::CoreNotQHierarchical(c) => Failure {
            code: EXIT_NOT_TRACTABLE,
            message: format!(
                "the engine cannot maintain this query: {}\n{}",
                c.core,
                c.verdict_line()
            ),
        },
        other => usage(other),
    })
}

/// Runs the command line `args` (including the program name), writing
/// regular output to `out` and diagnostics to `err`. Returns the exit code.
pub fn execute<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let result = match cli.command {
        Command::Classify { query } => cmd_classify(&query, out),
        Command::Run {
            query,
            stream,
            snapshot,
            oracle,
            verify,
            ..
        } => cmd_run(&query, &stream, snapshot.as_deref(), oracle, verify, out),
        Command::Bench {
            query,
            sizes,
            seed,
            updates,
            baseline,
        } => cmd_bench(&query, &sizes, seed, updates, baseline, out),
        Command::Fuzz {
            runs,
            seed,
            max_vars,
            out: dir,
        } => cmd_fuzz(runs, seed, max_vars, dir.as_deref(), out),
        Command::Demo => cmd_demo(out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn io(e: std::io::Error) -> Failure {
    usage(format!("write failed: {e}"))
}

fn cmd_classify(path: &Path, out: &mut dyn Write) -> Result<(), Failure> {
    let q = read_query(path)?;
    writeln!(out, "{}", classify(&q)).map_err(io)
}

fn load_inputs(
    query: &Path,
    stream: &Path,
    snapshot: Option<&Path>,
) -> Result<(Query, Stream, Database), Failure> {
    let q = read_query(query)?;
    let schema = q.schema();
    let s =
        parse_stream(&read(stream)?).map_err(|e| usage(format!("{}: {e}", stream.display())))?;
    s.check_schema(&schema)
        .map_err(|e| usage(format!("{}: {e}", stream.display())))?;
    let db = match snapshot {
        Some(p) => parse_snapshot(&read(p)?, Some(&schema))
            .map_err(|e| usage(format!("{}: {e}", p.display())))?,
        None => Database::with_schema(schema),
    };
    Ok((q, s, db))
}

fn cmd_run(
    query: &Path,
    stream: &Path,
    snapshot: Option<&Path>,
    oracle: bool,
    verify: bool,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let (q, s, mut db) = load_inputs(query, stream, snapshot)?;
    let mut engine = if oracle {
        None
    } else {
        let mut e = create_engine(&q)?;
        e.load(&db).map_err(usage)?;
        Some(e)
    };
    for (line, cmd) in s.commands.iter().enumerate() {
        match cmd {
            StreamCommand::Update(u) => {
                if let Some(e) = engine.as_mut() {
                    e.apply(u).map_err(usage)?;
                }
                if oracle || verify {
                    db.apply(u).map_err(usage)?;
                }
            }
            StreamCommand::Probe(p) => {
                let answer = match engine.as_ref() {
                    Some(e) => engine_probe(e, *p),
                    None => oracle_probe(&q, &db, *p).map_err(usage)?,
                };
                if verify {
                    let expected = oracle_probe(&q, &db, *p).map_err(usage)?;
                    if expected != answer {
                        return Err(Failure {
                            code: EXIT_MISMATCH,
                            message: format!(
                                "probe `? {p}` (command {}) disagrees with the oracle\nengine:\n{answer}oracle:\n{expected}",
                                line + 1
                            ),
                        });
                    }
                }
                write!(out, "{answer}").map_err(io)?;
            }
        }
    }
    Ok(())
}

fn cmd_bench(
    query: &Path,
    sizes: &[usize],
    seed: u64,
    updates: usize,
    baseline: bool,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let q = read_query(query)?;
    create_engine(&q)?;
    let workloads: Vec<(usize, Stream)> = sizes
        .iter()
        .map(|&n| (n, gen_scaled(&q, n, updates, seed)))
        .collect();
    writeln!(out, "{CSV_HEADER}").map_err(io)?;
    let mut modes = vec![BenchMode::Engine];
    if baseline {
        modes.push(BenchMode::OracleRecompute);
    }
    for mode in modes {
        let report = run_bench(&q, &workloads, mode).map_err(usage)?;
        write!(out, "{}", report.csv_rows()).map_err(io)?;
    }
    Ok(())
}

/// Replays a stream through both the engine and the oracle and returns the
/// first disagreement.
fn first_disagreement(
    q: &Query,
    stream: &Stream,
) -> Result<Option<(usize, ProbeAnswer, ProbeAnswer)>, Failure> {
    let mut engine = create_engine(q)?;
    let mut db = Database::new();
    for (i, cmd) in stream.commands.iter().enumerate() {
        match cmd {
            StreamCommand::Update(u) => {
                engine.apply(u).map_err(usage)?;
                db.apply(u).map_err(usage)?;
            }
            StreamCommand::Probe(p) => {
                let got = engine_probe(&engine, *p);
                let expected = oracle_probe(q, &db, *p).map_err(usage)?;
                if got != expected {
                    return Ok(Some((i, got, expected)));
                }
            }
        }
    }
    Ok(None)
}

fn cmd_fuzz(
    runs: u64,
    seed: u64,
    max_vars: usize,
    dir: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let params = RandomParams {
        max_vars: max_vars.max(1),
        ..RandomParams::default()
    };
    let mut probes = 0;
    for run in 0..runs {
        let run_seed = seed.wrapping_add(run);
        let (q, stream) = gen_random_qh(run_seed, &params);
        probes += stream.probe_count();
        if let Some((i, got, expected)) = first_disagreement(&q, &stream)? {
            let stream_text = serialize_stream(&stream);
            if let Some(dir) = dir {
                fs::create_dir_all(dir).map_err(io)?;
                fs::write(dir.join("query.cq"), format!("{q}\n")).map_err(io)?;
                fs::write(dir.join("stream.up"), &stream_text).map_err(io)?;
            }
            return Err(Failure {
                code: EXIT_MISMATCH,
                message: format!(
                    "counterexample at seed {run_seed}, command {}\nquery: {q}\nengine:\n{got}oracle:\n{expected}stream:\n{stream_text}",
                    i + 1
                ),
            });
        }
    }
    writeln!(out, "fuzz: {runs} runs, {probes} probes, all agree").map_err(io)
}

const DEMO_QUERY: &str =
    "Q(x, y, z, y2, z2) :- R(x, y, z), R(x, y, z2), E(x, y), E(x, y2), S(x, y, z).";

const DEMO_SNAPSHOT: &str = "\
E a e
E a f
E b d
E b g
E b h
S a e a
S a e b
S a f c
S b g b
S b p a
R a e a
R a e b
R a f c
R b g b
R b p a
R a e c
R b g a
R b g c
R b p b
R b p c
";

fn cmd_demo(out: &mut dyn Write) -> Result<(), Failure> {
    let q = parse_query(DEMO_QUERY, None).map_err(usage)?;
    let mut engine = create_engine(&q)?;
    engine
        .load(&parse_snapshot(DEMO_SNAPSHOT, None).map_err(usage)?)
        .map_err(usage)?;
    writeln!(out, "query {q}").map_err(io)?;
    writeln!(out, "facts {}", engine.fact_count()).map_err(io)?;
    writeln!(out, "count {}", engine.count()).map_err(io)?;
    writeln!(out, "+ E b p").map_err(io)?;
    engine.insert("E", &["b", "p"]).map_err(usage)?;
    writeln!(out, "count {}", engine.count()).map_err(io)?;
    Ok(())
}
