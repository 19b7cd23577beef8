//! Update streams with interleaved probes, their expected answers, and
//! generators for fuzzing, benchmarking and the lower-bound constructions.
//!
//! Stream format, one command per line:
//!
//! ```text
//! + E a b      insert E(a, b)
//! - E a b      delete E(a, b)
//! ? count      |q(D)|
//! ? answer     whether q(D) is nonempty
//! ? enum       all of q(D)
//! ```

mod lower_bounds;
mod random;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::database::{is_constant_token, is_name_token, Database, DatabaseError, UpdateCommand};
use crate::engine::{DynamicEngine, EngineError};
use crate::oracle::eval_naive_tokens;
use crate::query::{Query, Schema};
use crate::weight::Weight;

pub use lower_bounds::{
    gen_oumv, gen_ov, oumv_query, ov_query, OuMvInstance, OvInstance, WorkloadError,
};
pub use random::{gen_random_qh, gen_scaled, RandomParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Probe {
    Count,
    Answer,
    Enum,
}

impl fmt::Display for Probe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Probe::Count => "count",
            Probe::Answer => "answer",
            Probe::Enum => "enum",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum StreamCommand {
    Update(UpdateCommand),
    Probe(Probe),
}

impl fmt::Display for StreamCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StreamCommand::Update(u) => write!(f, "{u}"),
            StreamCommand::Probe(p) => write!(f, "? {p}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stream {
    pub commands: Vec<StreamCommand>,
}

impl Stream {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, cmd: UpdateCommand) {
        self.commands.push(StreamCommand::Update(cmd));
    }

    pub fn probe(&mut self, p: Probe) {
        self.commands.push(StreamCommand::Probe(p));
    }

    pub fn len(&self) -> usize {
        self.commands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.commands.is_empty()
    }

    pub fn updates(&self) -> impl Iterator<Item = &UpdateCommand> {
        self.commands.iter().filter_map(|c| match c {
            StreamCommand::Update(u) => Some(u),
            StreamCommand::Probe(_) => None,
        })
    }

    pub fn probe_count(&self) -> usize {
        self.commands
            .iter()
            .filter(|c| matches!(c, StreamCommand::Probe(_)))
            .count()
    }

    /// Checks every update against `schema`.
    pub fn check_schema(&self, schema: &Schema) -> Result<(), DatabaseError> {
        for u in self.updates() {
            match schema.arity(&u.relation) {
                None => return Err(DatabaseError::UnknownRelation(u.relation.clone())),
                Some(a) if a != u.tuple.len() => {
                    return Err(DatabaseError::Arity {
                        relation: u.relation.clone(),
                        expected: a,
                        found: u.tuple.len(),
                    })
                }
                Some(_) => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StreamError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

pub fn parse_stream(text: &str) -> Result<Stream, StreamError> {
    let mut stream = Stream::new();
    for (i, line) in text.lines().enumerate() {
        let content = line.split('%').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| StreamError::Syntax {
            line: i + 1,
            message,
        };
        let mut tokens = content.split_whitespace();
        let op = tokens.next().expect("line is non-empty");
        let rest: Vec<&str> = tokens.collect();
        let cmd = match op {
            "?" => match rest.as_slice() {
                ["count"] => StreamCommand::Probe(Probe::Count),
                ["answer"] => StreamCommand::Probe(Probe::Answer),
                ["enum"] => StreamCommand::Probe(Probe::Enum),
                _ => return Err(err(format!("unknown probe `{}`", rest.join(" ")))),
            },
            "+" | "-" => {
                let Some((relation, tuple)) = rest.split_first() else {
                    return Err(err("missing relation name".into()));
                };
                if !is_name_token(relation) {
                    return Err(err(format!("invalid relation name `{relation}`")));
                }
                if tuple.is_empty() {
                    return Err(err(format!("update of `{relation}` has no constants")));
                }
                if let Some(bad) = tuple.iter().find(|t| !is_constant_token(t)) {
                    return Err(err(format!("invalid constant `{bad}`")));
                }
                StreamCommand::Update(if op == "+" {
                    UpdateCommand::insert(relation, tuple)
                } else {
                    UpdateCommand::delete(relation, tuple)
                })
            }
            other => return Err(err(format!("expected `+`, `-` or `?`, found `{other}`"))),
        };
        stream.commands.push(cmd);
    }
    Ok(stream)
}

pub fn serialize_stream(stream: &Stream) -> String {
    stream.commands.iter().map(|c| format!("{c}\n")).collect()
}

/// Result of one probe, comparable across engine and oracle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProbeAnswer {
    Count(u128),
    Answer(bool),
    /// Result tuples as tokens, sorted.
    Enum(BTreeSet<Vec<String>>),
}

impl fmt::Display for ProbeAnswer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbeAnswer::Count(n) => writeln!(f, "{n}"),
            ProbeAnswer::Answer(b) => writeln!(f, "{}", if *b { "yes" } else { "no" }),
            ProbeAnswer::Enum(tuples) => {
                for t in tuples {
                    if t.is_empty() {
                        writeln!(f, "()")?;
                    } else {
                        writeln!(f, "{}", t.join(" "))?;
                    }
                }
                writeln!(f, "#")
            }
        }
    }
}

/// The expected-answer file: probe answers in stream order.
pub fn render_answers(answers: &[ProbeAnswer]) -> String {
    answers.iter().map(|a| a.to_string()).collect()
}

/// Reads an expected-answer file, using the probes of `stream` to know how
/// each entry is shaped.
pub fn parse_answers(text: &str, stream: &Stream) -> Result<Vec<ProbeAnswer>, StreamError> {
    let mut lines = text.lines().enumerate().peekable();
    let mut out = Vec::new();
    let probes = stream.commands.iter().filter_map(|c| match c {
        StreamCommand::Probe(p) => Some(*p),
        StreamCommand::Update(_) => None,
    });
    for probe in probes {
        let mut take = || {
            lines.next().ok_or(StreamError::Syntax {
                line: text.lines().count() + 1,
                message: format!("missing answer for `? {probe}`"),
            })
        };
        let err = |line: usize, message: String| StreamError::Syntax {
            line: line + 1,
            message,
        };
        match probe {
            Probe::Count => {
                let (i, l) = take()?;
                out.push(ProbeAnswer::Count(
                    l.trim()
                        .parse()
                        .map_err(|_| err(i, format!("expected a count, found `{l}`")))?,
                ));
            }
            Probe::Answer => {
                let (i, l) = take()?;
                out.push(ProbeAnswer::Answer(match l.trim() {
                    "yes" => true,
                    "no" => false,
                    other => return Err(err(i, format!("expected yes or no, found `{other}`"))),
                }));
            }
            Probe::Enum => {
                let mut tuples = BTreeSet::new();
                loop {
                    let (_, l) = take()?;
                    match l.trim() {
                        "#" => break,
                        "()" => tuples.insert(Vec::new()),
                        t => tuples.insert(t.split_whitespace().map(String::from).collect()),
                    };
                }
                out.push(ProbeAnswer::Enum(tuples));
            }
        }
    }
    Ok(out)
}

/// Answers one probe from the engine.
pub fn engine_probe<W: Weight>(engine: &DynamicEngine<W>, probe: Probe) -> ProbeAnswer {
    match probe {
        Probe::Count => ProbeAnswer::Count(
            engine
                .count()
                .to_u128()
                .expect("result count fits in 128 bits"),
        ),
        Probe::Answer => ProbeAnswer::Answer(engine.answer()),
        Probe::Enum => ProbeAnswer::Enum(engine.tuples().map(|t| engine.tokens(&t)).collect()),
    }
}

/// Answers one probe by evaluating `q` on `db` from scratch.
pub fn oracle_probe(q: &Query, db: &Database, probe: Probe) -> Result<ProbeAnswer, DatabaseError> {
    let result = eval_naive_tokens(q, db)?;
    Ok(match probe {
        Probe::Count => ProbeAnswer::Count(result.len() as u128),
        Probe::Answer => ProbeAnswer::Answer(!result.is_empty()),
        Probe::Enum => ProbeAnswer::Enum(result),
    })
}

/// Runs a stream through the engine, collecting the probe answers.
pub fn replay_engine<W: Weight>(
    engine: &mut DynamicEngine<W>,
    stream: &Stream,
) -> Result<Vec<ProbeAnswer>, EngineError> {
    let mut out = Vec::new();
    for cmd in &stream.commands {
        match cmd {
            StreamCommand::Update(u) => {
                engine.apply(u)?;
            }
            StreamCommand::Probe(p) => out.push(engine_probe(engine, *p)),
        }
    }
    Ok(out)
}

/// Runs a stream against a plain database, answering probes with the
/// oracle.
pub fn replay_oracle(
    q: &Query,
    db: &mut Database,
    stream: &Stream,
) -> Result<Vec<ProbeAnswer>, DatabaseError> {
    let mut out = Vec::new();
    for cmd in &stream.commands {
        match cmd {
            StreamCommand::Update(u) => {
                db.apply(u)?;
            }
            StreamCommand::Probe(p) => out.push(oracle_probe(q, db, *p)?),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_each_command_kind() {
        let s = parse_stream("% demo\n+ E b p\n- E b p\n\n? count\n? answer\n? enum\n").unwrap();
        assert_eq!(
            s.commands,
            vec![
                StreamCommand::Update(UpdateCommand::insert("E", &["b", "p"])),
                StreamCommand::Update(UpdateCommand::delete("E", &["b", "p"])),
                StreamCommand::Probe(Probe::Count),
                StreamCommand::Probe(Probe::Answer),
                StreamCommand::Probe(Probe::Enum),
            ]
        );
        assert_eq!(parse_stream(&serialize_stream(&s)).unwrap(), s);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_stream("+ E a b\n? size\n").unwrap_err();
        assert_eq!(
            e,
            StreamError::Syntax {
                line: 2,
                message: "unknown probe `size`".into()
            }
        );
        assert!(matches!(
            parse_stream("* E a\n"),
            Err(StreamError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            parse_stream("+ E\n"),
            Err(StreamError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            parse_stream("+ E a,b\n"),
            Err(StreamError::Syntax { line: 1, .. })
        ));
    }

    #[test]
    fn answers_round_trip() {
        let s = parse_stream("? count\n? enum\n? answer\n? enum\n").unwrap();
        let answers = vec![
            ProbeAnswer::Count(3),
            ProbeAnswer::Enum(BTreeSet::from([vec!["a".to_string(), "1".to_string()]])),
            ProbeAnswer::Answer(true),
            ProbeAnswer::Enum(BTreeSet::from([vec![]])),
        ];
        let text = render_answers(&answers);
        assert_eq!(text, "3\na 1\n#\nyes\n()\n#\n");
        assert_eq!(parse_answers(&text, &s).unwrap(), answers);
    }
}
