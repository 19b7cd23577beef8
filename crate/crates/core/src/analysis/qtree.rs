//! q-trees of connected q-hierarchical queries.
//!
//! The tree is grown top-down: the root is a variable that occurs in every
//! atom (a free one whenever the component has free variables), it is
//! stripped from all atoms, and the remaining atoms split into connected
//! groups that become the child subtrees. Roots are chosen by smallest
//! variable number among the eligible ones, which is head order for free
//! variables and first occurrence for quantified ones. Children are ordered
//! by the same numbering.

use std::collections::BTreeSet;

use thiserror::Error;

use super::hierarchy::{hierarchy_violation, Violation};
use crate::query::{component_atom_groups, AtomId, Query, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QTreeError {
    #[error("query is not q-hierarchical")]
    NotQHierarchical(Violation),
    #[error("query is not connected")]
    NotConnected,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QTree {
    component: Query,
    root: Var,
    parent: Vec<Option<Var>>,
    children: Vec<Vec<Var>>,
    atm: Vec<Vec<AtomId>>,
    represented_by: Vec<Var>,
    doc_order: Vec<Var>,
}

impl QTree {
    pub fn component(&self) -> &Query {
        &self.component
    }

    pub fn root(&self) -> Var {
        self.root
    }

    pub fn parent(&self, v: Var) -> Option<Var> {
        self.parent[v.index()]
    }

    pub fn children(&self, v: Var) -> &[Var] {
        &self.children[v.index()]
    }

    /// Children of `v` that are free variables, in child order.
    pub fn free_children(&self, v: Var) -> impl Iterator<Item = Var> + '_ {
        self.children(v)
            .iter()
            .copied()
            .filter(|&c| self.component.is_free(c))
    }

    /// Atoms whose variable set is exactly `path(v)`.
    pub fn atm(&self, v: Var) -> &[AtomId] {
        &self.atm[v.index()]
    }

    /// The node whose root path equals the atom's variable set.
    pub fn representing_node(&self, atom: AtomId) -> Var {
        self.represented_by[atom]
    }

    /// Nodes from the root down to `v`, inclusive.
    pub fn path(&self, v: Var) -> Vec<Var> {
        let mut path = vec![v];
        let mut cur = v;
        while let Some(p) = self.parent(cur) {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    pub fn depth(&self, v: Var) -> usize {
        self.path(v).len()
    }

    /// Whether `d` lies in the subtree rooted at `a` (including `a` itself).
    pub fn is_descendant(&self, d: Var, a: Var) -> bool {
        self.path(d).contains(&a)
    }

    /// Atoms containing `v`: those represented in the subtree below `v`.
    pub fn atoms_of(&self, v: Var) -> Vec<AtomId> {
        let mut ids: Vec<AtomId> = (0..self.represented_by.len())
            .filter(|&a| self.is_descendant(self.represented_by[a], v))
            .collect();
        ids.sort_unstable();
        ids
    }

    pub fn nodes(&self) -> impl Iterator<Item = Var> + '_ {
        self.component.vars()
    }

    /// Pre-order, left-to-right traversal of the free-variable subtree.
    pub fn doc_order(&self) -> &[Var] {
        &self.doc_order
    }

    pub fn edges(&self) -> Vec<(Var, Var)> {
        let mut edges = Vec::new();
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            for &c in self.children(v).iter().rev() {
                stack.push(c);
            }
            for &c in self.children(v) {
                edges.push((v, c));
            }
        }
        edges
    }

    /// Indented outline of the tree with each node's represented atoms.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_node(self.root, 0, &mut out);
        out
    }

    fn render_node(&self, v: Var, depth: usize, out: &mut String) {
        let q = &self.component;
        let atm: Vec<String> = self.atm(v).iter().map(|&a| atom_text(q, a)).collect();
        out.push_str(&format!(
            "{}{}{} atm={{{}}}\n",
            "  ".repeat(depth),
            q.var_name(v),
            if q.is_free(v) { "" } else { " (quantified)" },
            atm.join(", ")
        ));
        for &c in self.children(v) {
            self.render_node(c, depth + 1, out);
        }
    }
}

pub(crate) fn atom_text(q: &Query, a: AtomId) -> String {
    let atom = &q.atoms()[a];
    let args: Vec<&str> = atom.args.iter().map(|&v| q.var_name(v)).collect();
    format!("{}({})", atom.relation, args.join(","))
}

struct Builder<'q> {
    q: &'q Query,
    parent: Vec<Option<Var>>,
    children: Vec<Vec<Var>>,
    atm: Vec<Vec<AtomId>>,
    represented_by: Vec<Option<Var>>,
}

impl Builder<'_> {
    /// Builds the subtree for a connected group of atoms with their
    /// remaining variables; returns its root.
    fn grow(&mut self, group: Vec<(AtomId, BTreeSet<Var>)>, parent: Option<Var>) -> Option<Var> {
        let mut common = group[0].1.clone();
        for (_, vars) in &group[1..] {
            common = common.intersection(vars).copied().collect();
        }
        let has_free = group
            .iter()
            .any(|(_, vs)| vs.iter().any(|&v| self.q.is_free(v)));
        let root = if has_free {
            common.iter().copied().find(|&v| self.q.is_free(v))?
        } else {
            common.iter().copied().next()?
        };
        self.parent[root.index()] = parent;

        let mut rest = Vec::new();
        for (id, mut vars) in group {
            vars.remove(&root);
            if vars.is_empty() {
                self.atm[root.index()].push(id);
                self.represented_by[id] = Some(root);
            } else {
                rest.push((id, vars));
            }
        }

        let mut kids = Vec::new();
        for sub in split_connected(rest) {
            kids.push(self.grow(sub, Some(root))?);
        }
        kids.sort_unstable();
        self.children[root.index()] = kids;
        Some(root)
    }
}

/// Groups atoms (with their remaining variables) into connected pieces,
/// ordered by first atom.
fn split_connected(atoms: Vec<(AtomId, BTreeSet<Var>)>) -> Vec<Vec<(AtomId, BTreeSet<Var>)>> {
    type Group = (BTreeSet<Var>, Vec<(AtomId, BTreeSet<Var>)>);
    let mut groups: Vec<Group> = Vec::new();
    for (id, vars) in atoms {
        let (touching, mut rest): (Vec<Group>, Vec<Group>) =
            groups.into_iter().partition(|(g, _)| !g.is_disjoint(&vars));
        let mut merged_vars = vars.clone();
        let mut merged = vec![(id, vars)];
        for (g, a) in touching {
            merged_vars.extend(g);
            merged.extend(a);
        }
        rest.push((merged_vars, merged));
        groups = rest;
    }
    let mut groups: Vec<_> = groups
        .into_iter()
        .map(|(_, mut atoms)| {
            atoms.sort_by_key(|(id, _)| *id);
            atoms
        })
        .collect();
    groups.sort_by_key(|atoms| atoms[0].0);
    groups
}

/// Builds the q-tree of a connected query.
pub fn build_qtree(component: &Query) -> Result<QTree, QTreeError> {
    if component_atom_groups(component).len() != 1 {
        return Err(QTreeError::NotConnected);
    }
    let n = component.var_count();
    let mut builder = Builder {
        q: component,
        parent: vec![None; n],
        children: vec![Vec::new(); n],
        atm: vec![Vec::new(); n],
        represented_by: vec![None; component.atoms().len()],
    };
    let group = component
        .atoms()
        .iter()
        .enumerate()
        .map(|(id, a)| (id, a.vars()))
        .collect();
    let Some(root) = builder.grow(group, None) else {
        let violation = hierarchy_violation(component)
            .expect("a connected query without a q-tree is not q-hierarchical");
        return Err(QTreeError::NotQHierarchical(violation));
    };

    let mut doc_order = Vec::new();
    if component.is_free(root) {
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            doc_order.push(v);
            for &c in builder.children[v.index()].iter().rev() {
                if component.is_free(c) {
                    stack.push(c);
                }
            }
        }
    }

    Ok(QTree {
        component: component.clone(),
        root,
        parent: builder.parent,
        children: builder.children,
        atm: builder.atm,
        represented_by: builder
            .represented_by
            .into_iter()
            .map(|v| v.expect("every atom ends up at some node"))
            .collect(),
        doc_order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_query;

    fn names(t: &QTree, vs: &[Var]) -> Vec<String> {
        vs.iter()
            .map(|&v| t.component().var_name(v).to_string())
            .collect()
    }

    fn edge_names(t: &QTree) -> Vec<(String, String)> {
        let q = t.component();
        t.edges()
            .into_iter()
            .map(|(a, b)| (q.var_name(a).to_string(), q.var_name(b).to_string()))
            .collect()
    }

    #[test]
    fn two_branch_query() {
        let q = parse_query(
            "Q(x1, x2, x3) :- E(x1, x2), R(x4, x1, x2, x1), R(x5, x3, x2, x1).",
            None,
        )
        .unwrap();
        let t = build_qtree(&q).unwrap();
        assert_eq!(q.var_name(t.root()), "x1");
        let expected = [("x1", "x2"), ("x2", "x3"), ("x3", "x5"), ("x2", "x4")];
        let mut got = edge_names(&t);
        got.sort();
        let mut want: Vec<(String, String)> = expected
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        want.sort();
        assert_eq!(got, want);
        assert_eq!(names(&t, t.doc_order()), ["x1", "x2", "x3"]);
        assert_eq!(t.atm(q.var_by_name("x2").unwrap()), &[0]);
    }

    #[test]
    fn example_query_tree() {
        let q = parse_query(
            "Q(x, y, z, y2, z2) :- R(x, y, z), R(x, y, z2), E(x, y), E(x, y2), S(x, y, z).",
            None,
        )
        .unwrap();
        let t = build_qtree(&q).unwrap();
        let v = |n: &str| q.var_by_name(n).unwrap();
        assert_eq!(t.root(), v("x"));
        assert_eq!(names(&t, t.children(v("x"))), ["y", "y2"]);
        assert_eq!(names(&t, t.children(v("y"))), ["z", "z2"]);
        assert!(t.atm(v("x")).is_empty());
        assert_eq!(t.atm(v("y")), &[2]);
        assert_eq!(t.atm(v("y2")), &[3]);
        assert_eq!(t.atm(v("z")), &[0, 4]);
        assert_eq!(t.atm(v("z2")), &[1]);
        assert_eq!(names(&t, t.doc_order()), ["x", "y", "z", "z2", "y2"]);
        assert_eq!(t.atoms_of(v("y")), vec![0, 1, 2, 4]);
    }

    #[test]
    fn non_hierarchical_path_is_rejected() {
        let q = parse_query("Q() :- S(x), E(x, y), T(y).", None).unwrap();
        assert!(matches!(
            build_qtree(&q),
            Err(QTreeError::NotQHierarchical(_))
        ));
        let q = parse_query("Q(x) :- E(x, y), T(y).", None).unwrap();
        assert!(matches!(
            build_qtree(&q),
            Err(QTreeError::NotQHierarchical(_))
        ));
    }

    #[test]
    fn quantified_root_for_boolean_component() {
        let q = parse_query("Q() :- E(x, y), T(y).", None).unwrap();
        let t = build_qtree(&q).unwrap();
        assert_eq!(q.var_name(t.root()), "y");
        assert!(t.doc_order().is_empty());
    }

    #[test]
    fn disconnected_input_is_rejected() {
        let q = parse_query("Q() :- E(x), T(y).", None).unwrap();
        assert_eq!(build_qtree(&q), Err(QTreeError::NotConnected));
    }
}
