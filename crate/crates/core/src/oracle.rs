//! Reference evaluation by backtracking over the atoms in query order.
//!
//! This is the ground truth for differential tests and the recompute
//! baseline for benchmarks. It shares no code with the dynamic engine.

use std::collections::{BTreeSet, HashMap};

use crate::database::{Const, Database, DatabaseError};
use crate::query::Query;

fn check_arities(q: &Query, d: &Database) -> Result<(), DatabaseError> {
    for atom in q.atoms() {
        if let Some(expected) = d.schema().arity(&atom.relation) {
            if expected != atom.arity() {
                return Err(DatabaseError::Arity {
                    relation: atom.relation.clone(),
                    expected,
                    found: atom.arity(),
                });
            }
        }
    }
    Ok(())
}

/// `q(d)`: all head tuples of satisfying valuations.
pub fn eval_naive(q: &Query, d: &Database) -> Result<BTreeSet<Vec<Const>>, DatabaseError> {
    check_arities(q, d)?;
    let mut by_relation: HashMap<&str, Vec<&[Const]>> = HashMap::new();
    for f in d.facts() {
        by_relation
            .entry(f.relation.as_str())
            .or_default()
            .push(&f.tuple);
    }
    let tables: Vec<&[&[Const]]> = q
        .atoms()
        .iter()
        .map(|a| {
            by_relation
                .get(a.relation.as_str())
                .map_or(&[][..], |v| v.as_slice())
        })
        .collect();

    let mut search = Search {
        q,
        tables,
        valuation: vec![None; q.var_count()],
        results: BTreeSet::new(),
    };
    search.run(0);
    Ok(search.results)
}

struct Search<'a> {
    q: &'a Query,
    tables: Vec<&'a [&'a [Const]]>,
    valuation: Vec<Option<Const>>,
    results: BTreeSet<Vec<Const>>,
}

impl Search<'_> {
    fn head_tuple(&self) -> Option<Vec<Const>> {
        self.q
            .head()
            .iter()
            .map(|v| self.valuation[v.index()])
            .collect()
    }

    /// Returns true once the current head tuple is known to be in the result,
    /// so that callers can stop exploring further extensions of it.
    fn run(&mut self, depth: usize) -> bool {
        if depth == self.q.atoms().len() {
            let tuple = self
                .head_tuple()
                .expect("all head variables occur in atoms");
            self.results.insert(tuple);
            return true;
        }
        if let Some(tuple) = self.head_tuple() {
            if self.results.contains(&tuple) {
                return true;
            }
        }
        let args = self.q.atoms()[depth].args.clone();
        let head_bound = self.head_tuple().is_some();
        for &fact in self.tables[depth] {
            let mut bound = Vec::new();
            let mut ok = true;
            for (&v, &c) in args.iter().zip(fact) {
                match self.valuation[v.index()] {
                    Some(existing) if existing != c => {
                        ok = false;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        self.valuation[v.index()] = Some(c);
                        bound.push(v);
                    }
                }
            }
            let done = ok && self.run(depth + 1);
            for v in bound {
                self.valuation[v.index()] = None;
            }
            if done && head_bound {
                return true;
            }
        }
        false
    }
}

pub fn count_naive(q: &Query, d: &Database) -> Result<usize, DatabaseError> {
    Ok(eval_naive(q, d)?.len())
}

pub fn answer_naive(q: &Query, d: &Database) -> Result<bool, DatabaseError> {
    Ok(!eval_naive(q, d)?.is_empty())
}

/// The result with constants rendered as tokens, sorted lexicographically.
pub fn eval_naive_tokens(q: &Query, d: &Database) -> Result<BTreeSet<Vec<String>>, DatabaseError> {
    Ok(eval_naive(q, d)?.iter().map(|t| d.tokens(t)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::database::parse_snapshot;
    use crate::parse::parse_query;

    fn rows(items: &[&[&str]]) -> BTreeSet<Vec<String>> {
        items
            .iter()
            .map(|r| r.iter().map(|s| s.to_string()).collect())
            .collect()
    }

    #[test]
    fn projection_over_join() {
        let q = parse_query("Q(x) :- E(x, y), T(y).", None).unwrap();
        let d = parse_snapshot("E 1 2\nE 3 4\nT 2\n", None).unwrap();
        assert_eq!(eval_naive_tokens(&q, &d).unwrap(), rows(&[&["1"]]));
    }

    #[test]
    fn empty_database_gives_empty_result() {
        let q = parse_query("Q(x, y) :- E(x, y), T(y).", None).unwrap();
        assert!(eval_naive(&q, &Database::new()).unwrap().is_empty());
        let b = parse_query("Q() :- E(x, y).", None).unwrap();
        assert!(!answer_naive(&b, &Database::new()).unwrap());
    }

    #[test]
    fn repeated_variables_filter_facts() {
        let q = parse_query("Q() :- E(x, x).", None).unwrap();
        let mut d = parse_snapshot("E 1 2\n", None).unwrap();
        assert!(!answer_naive(&q, &d).unwrap());
        d.insert("E", &["2", "2"]).unwrap();
        assert!(answer_naive(&q, &d).unwrap());
        assert_eq!(eval_naive_tokens(&q, &d).unwrap(), rows(&[&[]]));
    }

    #[test]
    fn counts_projection() {
        let q = parse_query("Q(x) :- E(x, y).", None).unwrap();
        let d = parse_snapshot("E 1 2\nE 1 3\nE 2 2\n", None).unwrap();
        assert_eq!(count_naive(&q, &d).unwrap(), 2);
    }

    #[test]
    fn arity_mismatch_is_reported() {
        let q = parse_query("Q(x) :- E(x).", None).unwrap();
        let d = parse_snapshot("E 1 2\n", None).unwrap();
        assert!(matches!(
            eval_naive(&q, &d),
            Err(DatabaseError::Arity { .. })
        ));
    }
}
