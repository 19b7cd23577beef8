//! Conjunctive queries: variables, atoms, schemas and structural helpers.
//!
//! A [`Query`] is a conjunction of relational atoms over variables only, with
//! an ordered list of distinct head (free) variables. Every body variable that
//! is not in the head is implicitly existentially quantified.
//!
//! Variables are numbered in order of first textual occurrence (head first,
//! then the body left to right). Several deterministic tie-breaks in the
//! analysis module rely on that numbering.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Index of an atom within its query's body.
pub type AtomId = usize;

/// A query variable, local to the [`Query`] that created it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub(crate) u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub(crate) fn from_index(index: usize) -> Self {
        Var(index as u32)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("constant `{0}` in atom position (only variables are allowed)")]
    ConstantInAtom(String),
    #[error("duplicate head variable `{0}`")]
    DuplicateHeadVariable(String),
    #[error("head variable `{0}` does not occur in the body")]
    HeadVariableNotInBody(String),
    #[error("relation `{relation}` used with arity {found}, expected {expected}")]
    ArityConflict {
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("relation `{0}` is not part of the schema")]
    UnknownRelation(String),
    #[error("atom over `{0}` has no arguments")]
    NullaryAtom(String),
    #[error("query body is empty")]
    EmptyBody,
}

/// Relation symbols with their arities.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Schema {
    relations: BTreeMap<String, usize>,
}

impl Schema {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `relation` with `arity`, or checks it against an earlier
    /// registration.
    pub fn declare(&mut self, relation: &str, arity: usize) -> Result<(), QueryError> {
        if arity == 0 {
            return Err(QueryError::NullaryAtom(relation.to_string()));
        }
        match self.relations.get(relation) {
            Some(&expected) if expected != arity => Err(QueryError::ArityConflict {
                relation: relation.to_string(),
                expected,
                found: arity,
            }),
            Some(_) => Ok(()),
            None => {
                self.relations.insert(relation.to_string(), arity);
                Ok(())
            }
        }
    }

    pub fn arity(&self, relation: &str) -> Option<usize> {
        self.relations.get(relation).copied()
    }

    pub fn contains(&self, relation: &str) -> bool {
        self.relations.contains_key(relation)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, usize)> {
        self.relations.iter().map(|(r, &a)| (r.as_str(), a))
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Atom {
    pub relation: String,
    pub args: Vec<Var>,
}

impl Atom {
    pub fn arity(&self) -> usize {
        self.args.len()
    }

    /// The set of distinct variables of the atom.
    pub fn vars(&self) -> BTreeSet<Var> {
        self.args.iter().copied().collect()
    }

    pub fn contains(&self, v: Var) -> bool {
        self.args.contains(&v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    name: String,
    var_names: Vec<String>,
    head: Vec<Var>,
    atoms: Vec<Atom>,
}

impl Query {
    /// Builds a query from variable and relation names.
    ///
    /// Variables are numbered by first occurrence: head first, then the body.
    pub fn build<H, A, R, V>(name: &str, head: H, atoms: A) -> Result<Self, QueryError>
    where
        H: IntoIterator,
        H::Item: AsRef<str>,
        A: IntoIterator<Item = (R, V)>,
        R: AsRef<str>,
        V: IntoIterator,
        V::Item: AsRef<str>,
    {
        let mut var_names: Vec<String> = Vec::new();
        let mut lookup: BTreeMap<String, Var> = BTreeMap::new();
        let mut intern = |name: &str, var_names: &mut Vec<String>| -> Var {
            *lookup.entry(name.to_string()).or_insert_with(|| {
                var_names.push(name.to_string());
                Var::from_index(var_names.len() - 1)
            })
        };

        let mut head_vars = Vec::new();
        for h in head {
            let v = intern(h.as_ref(), &mut var_names);
            if head_vars.contains(&v) {
                return Err(QueryError::DuplicateHeadVariable(h.as_ref().to_string()));
            }
            head_vars.push(v);
        }

        let mut schema = Schema::new();
        let mut body = Vec::new();
        for (relation, args) in atoms {
            let args: Vec<Var> = args
                .into_iter()
                .map(|a| intern(a.as_ref(), &mut var_names))
                .collect();
            schema.declare(relation.as_ref(), args.len())?;
            body.push(Atom {
                relation: relation.as_ref().to_string(),
                args,
            });
        }
        if body.is_empty() {
            return Err(QueryError::EmptyBody);
        }
        for &h in &head_vars {
            if !body.iter().any(|a| a.contains(h)) {
                return Err(QueryError::HeadVariableNotInBody(
                    var_names[h.index()].clone(),
                ));
            }
        }
        Ok(Query {
            name: name.to_string(),
            var_names,
            head: head_vars,
            atoms: body,
        })
    }

    /// Rebuilds a query over a subset of this query's atoms, keeping the
    /// head. Variables are renumbered densely in text order.
    pub fn subquery(&self, atom_ids: &[AtomId]) -> Result<Self, QueryError> {
        let head: Vec<&str> = self.head.iter().map(|&v| self.var_name(v)).collect();
        self.rebuild(&head, atom_ids)
    }

    fn rebuild(&self, head: &[&str], atom_ids: &[AtomId]) -> Result<Self, QueryError> {
        let atoms = atom_ids.iter().map(|&id| {
            let atom = &self.atoms[id];
            (
                atom.relation.as_str(),
                atom.args
                    .iter()
                    .map(|&v| self.var_name(v))
                    .collect::<Vec<_>>(),
            )
        });
        Query::build(&self.name, head, atoms)
    }

    /// The same body with every variable quantified.
    pub fn existential_closure(&self) -> Self {
        let all: Vec<AtomId> = (0..self.atoms.len()).collect();
        self.rebuild(&[], &all)
            .expect("closing a well-formed query keeps it well-formed")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn head(&self) -> &[Var] {
        &self.head
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn arity(&self) -> usize {
        self.head.len()
    }

    pub fn is_boolean(&self) -> bool {
        self.head.is_empty()
    }

    pub fn var_count(&self) -> usize {
        self.var_names.len()
    }

    /// All variables, in text order. Every one of them occurs in some atom.
    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        (0..self.var_names.len()).map(Var::from_index)
    }

    pub fn var_name(&self, v: Var) -> &str {
        &self.var_names[v.index()]
    }

    pub fn var_by_name(&self, name: &str) -> Option<Var> {
        self.var_names
            .iter()
            .position(|n| n == name)
            .map(Var::from_index)
    }

    pub fn is_free(&self, v: Var) -> bool {
        self.head.contains(&v)
    }

    pub fn schema(&self) -> Schema {
        let mut schema = Schema::new();
        for atom in &self.atoms {
            schema
                .declare(&atom.relation, atom.arity())
                .expect("arities are checked on construction");
        }
        schema
    }

    /// No relation symbol occurs in two atoms.
    pub fn is_self_join_free(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.atoms.iter().all(|a| seen.insert(a.relation.as_str()))
    }

    /// Checks the query against an externally supplied schema.
    pub fn check_schema(&self, schema: &Schema) -> Result<(), QueryError> {
        for atom in &self.atoms {
            match schema.arity(&atom.relation) {
                None => return Err(QueryError::UnknownRelation(atom.relation.clone())),
                Some(expected) if expected != atom.arity() => {
                    return Err(QueryError::ArityConflict {
                        relation: atom.relation.clone(),
                        expected,
                        found: atom.arity(),
                    })
                }
                Some(_) => {}
            }
        }
        Ok(())
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = |vars: &[Var]| {
            vars.iter()
                .map(|&v| self.var_name(v))
                .collect::<Vec<_>>()
                .join(", ")
        };
        write!(f, "{}({}) :- ", self.name, names(&self.head))?;
        for (i, atom) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}({})", atom.relation, names(&atom.args))?;
        }
        f.write_str(".")
    }
}

/// For every variable, the identifiers of the atoms that contain it.
pub fn atoms_index(q: &Query) -> BTreeMap<Var, BTreeSet<AtomId>> {
    let mut index: BTreeMap<Var, BTreeSet<AtomId>> =
        q.vars().map(|v| (v, BTreeSet::new())).collect();
    for (id, atom) in q.atoms().iter().enumerate() {
        for &v in &atom.args {
            index.entry(v).or_default().insert(id);
        }
    }
    index
}

/// Partitions the atoms of `q` by variable connectivity. Groups are ordered by
/// their first atom, atoms within a group keep query order.
pub fn component_atom_groups(q: &Query) -> Vec<Vec<AtomId>> {
    let mut parent: Vec<usize> = (0..q.var_count()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for atom in q.atoms() {
        let first = atom.args[0].index();
        for v in &atom.args[1..] {
            let (a, b) = (find(&mut parent, first), find(&mut parent, v.index()));
            if a != b {
                parent[b] = a;
            }
        }
    }

    let mut groups: Vec<(usize, Vec<AtomId>)> = Vec::new();
    for (id, atom) in q.atoms().iter().enumerate() {
        let rep = find(&mut parent, atom.args[0].index());
        match groups.iter_mut().find(|(r, _)| *r == rep) {
            Some((_, ids)) => ids.push(id),
            None => groups.push((rep, vec![id])),
        }
    }
    groups.into_iter().map(|(_, ids)| ids).collect()
}

/// Splits `q` into connected components, each carrying its own head
/// variables in original head order.
pub fn connected_components(q: &Query) -> Vec<Query> {
    component_atom_groups(q)
        .into_iter()
        .map(|ids| {
            let vars: BTreeSet<Var> = ids.iter().flat_map(|&id| q.atoms()[id].vars()).collect();
            let head: Vec<&str> = q
                .head()
                .iter()
                .filter(|v| vars.contains(v))
                .map(|&v| q.var_name(v))
                .collect();
            q.rebuild(&head, &ids)
                .expect("components of a well-formed query are well-formed")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_query;

    #[test]
    fn variables_are_numbered_head_first() {
        let q = parse_query("Q(z) :- E(x, y), T(z).", None).unwrap();
        let names: Vec<&str> = q.vars().map(|v| q.var_name(v)).collect();
        assert_eq!(names, ["z", "x", "y"]);
    }

    #[test]
    fn components_split_disjoint_variables() {
        let q = parse_query("Q(x, z) :- E(x, y), T(z).", None).unwrap();
        let comps = connected_components(&q);
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].to_string(), "Q(x) :- E(x, y).");
        assert_eq!(comps[1].to_string(), "Q(z) :- T(z).");
    }

    #[test]
    fn path_query_is_one_component() {
        let q = parse_query("Q() :- S(x), E(x, y), T(y).", None).unwrap();
        assert_eq!(connected_components(&q).len(), 1);
        let single = parse_query("Q(a) :- R(a, b, a).", None).unwrap();
        assert_eq!(connected_components(&single), vec![single.clone()]);
    }

    #[test]
    fn atoms_index_of_path_query() {
        let q = parse_query("Q() :- S(x), E(x, y), T(y).", None).unwrap();
        let idx = atoms_index(&q);
        let x = q.var_by_name("x").unwrap();
        let y = q.var_by_name("y").unwrap();
        assert_eq!(idx[&x], BTreeSet::from([0, 1]));
        assert_eq!(idx[&y], BTreeSet::from([1, 2]));
    }

    #[test]
    fn atoms_index_with_repeated_variables() {
        let q = parse_query(
            "Q(x1, x2, x3) :- E(x1, x2), R(x4, x1, x2, x1), R(x5, x3, x2, x1).",
            None,
        )
        .unwrap();
        let idx = atoms_index(&q);
        assert_eq!(
            idx[&q.var_by_name("x2").unwrap()],
            BTreeSet::from([0, 1, 2])
        );
        assert_eq!(idx[&q.var_by_name("x5").unwrap()], BTreeSet::from([2]));
    }

    #[test]
    fn closure_and_subquery() {
        let q = parse_query("Q(x) :- E(x, y), T(y).", None).unwrap();
        assert_eq!(q.existential_closure().to_string(), "Q() :- E(x, y), T(y).");
        assert_eq!(q.subquery(&[0]).unwrap().to_string(), "Q(x) :- E(x, y).");
        assert!(matches!(
            q.subquery(&[1]),
            Err(QueryError::HeadVariableNotInBody(_))
        ));
    }

    #[test]
    fn self_join_detection() {
        assert!(parse_query("Q() :- E(x, y), T(y).", None)
            .unwrap()
            .is_self_join_free());
        assert!(!parse_query("Q() :- E(x, x), E(x, y).", None)
            .unwrap()
            .is_self_join_free());
    }
}
