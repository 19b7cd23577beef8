//! Databases over interned constants, update commands and the snapshot
//! file format (`R a b c`, one fact per line).

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use indexmap::IndexSet;
use thiserror::Error;

use crate::query::{QueryError, Schema};

/// Dense identifier of an interned constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Const(pub(crate) u32);

impl Const {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Maps constant tokens to dense identifiers, assigned at first sight.
#[derive(Clone, Debug, Default)]
pub struct Interner {
    ids: HashMap<String, Const>,
    names: Vec<String>,
}

impl Interner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, token: &str) -> Const {
        if let Some(&c) = self.ids.get(token) {
            return c;
        }
        let c = Const(self.names.len() as u32);
        self.names.push(token.to_string());
        self.ids.insert(token.to_string(), c);
        c
    }

    pub fn get(&self, token: &str) -> Option<Const> {
        self.ids.get(token).copied()
    }

    pub fn resolve(&self, c: Const) -> &str {
        &self.names[c.index()]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DatabaseError {
    #[error("relation `{relation}` has arity {expected}, got a tuple of length {found}")]
    Arity {
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("relation `{0}` is not part of the schema")]
    UnknownRelation(String),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

impl From<QueryError> for DatabaseError {
    fn from(e: QueryError) -> Self {
        match e {
            QueryError::ArityConflict {
                relation,
                expected,
                found,
            } => DatabaseError::Arity {
                relation,
                expected,
                found,
            },
            QueryError::UnknownRelation(r) => DatabaseError::UnknownRelation(r),
            other => DatabaseError::Syntax {
                line: 0,
                message: other.to_string(),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UpdateKind {
    Insert,
    Delete,
}

/// `insert R(t)` or `delete R(t)` with constants given as tokens.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UpdateCommand {
    pub kind: UpdateKind,
    pub relation: String,
    pub tuple: Vec<String>,
}

impl UpdateCommand {
    pub fn insert<S: AsRef<str>>(relation: &str, tuple: &[S]) -> Self {
        Self::new(UpdateKind::Insert, relation, tuple)
    }

    pub fn delete<S: AsRef<str>>(relation: &str, tuple: &[S]) -> Self {
        Self::new(UpdateKind::Delete, relation, tuple)
    }

    fn new<S: AsRef<str>>(kind: UpdateKind, relation: &str, tuple: &[S]) -> Self {
        UpdateCommand {
            kind,
            relation: relation.to_string(),
            tuple: tuple.iter().map(|s| s.as_ref().to_string()).collect(),
        }
    }

    /// The command that undoes this one on a database where it took effect.
    pub fn inverse(&self) -> Self {
        UpdateCommand {
            kind: match self.kind {
                UpdateKind::Insert => UpdateKind::Delete,
                UpdateKind::Delete => UpdateKind::Insert,
            },
            ..self.clone()
        }
    }
}

impl fmt::Display for UpdateCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.kind {
            UpdateKind::Insert => '+',
            UpdateKind::Delete => '-',
        };
        write!(f, "{sign} {}", self.relation)?;
        for t in &self.tuple {
            write!(f, " {t}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Fact {
    pub relation: String,
    pub tuple: Vec<Const>,
}

/// A finite set of facts. Insertion order is remembered so that snapshots
/// replay in file order.
#[derive(Clone, Debug, Default)]
pub struct Database {
    schema: Schema,
    fixed_schema: bool,
    interner: Interner,
    facts: IndexSet<Fact>,
}

/// `NAME` or an optionally signed integer.
pub fn is_constant_token(token: &str) -> bool {
    let mut chars = token.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => chars.all(|c| c.is_ascii_alphanumeric() || c == '_'),
        Some(c) if c.is_ascii_digit() => chars.all(|c| c.is_ascii_digit()),
        Some('-') => {
            let rest = &token[1..];
            !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit())
        }
        _ => false,
    }
}

pub(crate) fn is_name_token(token: &str) -> bool {
    token.starts_with(|c: char| c.is_ascii_alphabetic()) && is_constant_token(token)
}

impl Database {
    /// An empty database whose schema grows with the inserted facts.
    pub fn new() -> Self {
        Self::default()
    }

    /// An empty database that only accepts facts over `schema`.
    pub fn with_schema(schema: Schema) -> Self {
        Database {
            schema,
            fixed_schema: true,
            ..Self::default()
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn interner(&self) -> &Interner {
        &self.interner
    }

    fn check(&mut self, relation: &str, arity: usize) -> Result<(), DatabaseError> {
        match self.schema.arity(relation) {
            Some(expected) if expected != arity => Err(DatabaseError::Arity {
                relation: relation.to_string(),
                expected,
                found: arity,
            }),
            Some(_) => Ok(()),
            None if self.fixed_schema => Err(DatabaseError::UnknownRelation(relation.to_string())),
            None => Ok(self.schema.declare(relation, arity)?),
        }
    }

    /// Adds a fact; returns whether it was new.
    pub fn insert<S: AsRef<str>>(
        &mut self,
        relation: &str,
        tuple: &[S],
    ) -> Result<bool, DatabaseError> {
        self.check(relation, tuple.len())?;
        let tuple = tuple
            .iter()
            .map(|t| self.interner.intern(t.as_ref()))
            .collect();
        Ok(self.facts.insert(Fact {
            relation: relation.to_string(),
            tuple,
        }))
    }

    /// Removes a fact; returns whether it was present.
    pub fn delete<S: AsRef<str>>(
        &mut self,
        relation: &str,
        tuple: &[S],
    ) -> Result<bool, DatabaseError> {
        self.check(relation, tuple.len())?;
        let Some(tuple) = tuple
            .iter()
            .map(|t| self.interner.get(t.as_ref()))
            .collect::<Option<Vec<_>>>()
        else {
            return Ok(false);
        };
        Ok(self.facts.shift_remove(&Fact {
            relation: relation.to_string(),
            tuple,
        }))
    }

    pub fn apply(&mut self, cmd: &UpdateCommand) -> Result<bool, DatabaseError> {
        match cmd.kind {
            UpdateKind::Insert => self.insert(&cmd.relation, &cmd.tuple),
            UpdateKind::Delete => self.delete(&cmd.relation, &cmd.tuple),
        }
    }

    pub fn contains<S: AsRef<str>>(&self, relation: &str, tuple: &[S]) -> bool {
        let Some(tuple) = tuple
            .iter()
            .map(|t| self.interner.get(t.as_ref()))
            .collect::<Option<Vec<_>>>()
        else {
            return false;
        };
        self.facts.contains(&Fact {
            relation: relation.to_string(),
            tuple,
        })
    }

    /// Facts in insertion order.
    pub fn facts(&self) -> impl Iterator<Item = &Fact> {
        self.facts.iter()
    }

    /// Facts as insert commands, in insertion order.
    pub fn insert_commands(&self) -> impl Iterator<Item = UpdateCommand> + '_ {
        self.facts.iter().map(|f| UpdateCommand {
            kind: UpdateKind::Insert,
            relation: f.relation.clone(),
            tuple: self.tokens(&f.tuple),
        })
    }

    pub fn resolve(&self, c: Const) -> &str {
        self.interner.resolve(c)
    }

    pub fn tokens(&self, tuple: &[Const]) -> Vec<String> {
        tuple.iter().map(|&c| self.resolve(c).to_string()).collect()
    }

    /// Number of facts.
    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    /// The constants occurring in some fact.
    pub fn active_domain(&self) -> BTreeSet<Const> {
        self.facts
            .iter()
            .flat_map(|f| f.tuple.iter().copied())
            .collect()
    }

    /// Renders the database in snapshot format.
    pub fn to_snapshot(&self) -> String {
        let mut out = String::new();
        for f in &self.facts {
            out.push_str(&f.relation);
            for &c in &f.tuple {
                out.push(' ');
                out.push_str(self.resolve(c));
            }
            out.push('\n');
        }
        out
    }
}

/// Parses a snapshot: one fact `R a b c` per line, `%` comments, blank lines
/// ignored.
pub fn parse_snapshot(text: &str, schema: Option<&Schema>) -> Result<Database, DatabaseError> {
    let mut db = match schema {
        Some(s) => Database::with_schema(s.clone()),
        None => Database::new(),
    };
    for (i, line) in text.lines().enumerate() {
        let content = line.split('%').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let syntax = |message: String| DatabaseError::Syntax {
            line: i + 1,
            message,
        };
        let mut tokens = content.split_whitespace();
        let relation = tokens.next().expect("line is non-empty");
        if !is_name_token(relation) {
            return Err(syntax(format!("invalid relation name `{relation}`")));
        }
        let tuple: Vec<&str> = tokens.collect();
        if let Some(bad) = tuple.iter().find(|t| !is_constant_token(t)) {
            return Err(syntax(format!("invalid constant `{bad}`")));
        }
        if tuple.is_empty() {
            return Err(syntax(format!("fact over `{relation}` has no constants")));
        }
        db.insert(relation, &tuple).map_err(|e| match e {
            DatabaseError::Syntax { message, .. } => syntax(message),
            other => other,
        })?;
    }
    Ok(db)
}
