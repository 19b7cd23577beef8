//! Homomorphic cores by repeated retraction.
//!
//! An endomorphism here fixes every head variable and maps each atom onto an
//! atom of the same query. When some endomorphism misses an atom, the query
//! shrinks to the image of that endomorphism; the process stops at a query
//! with no such endomorphism, which is its core.

use std::collections::{BTreeMap, HashSet};

use crate::query::{AtomId, Query, Var};

type AtomKey = (String, Vec<Var>);

fn atom_keys(q: &Query) -> Vec<AtomKey> {
    q.atoms()
        .iter()
        .map(|a| (a.relation.clone(), a.args.clone()))
        .collect()
}

/// Backtracking search for homomorphisms `from -> to` that send
/// `from.head()[i]` to `to.head()[i]`. Calls `visit` on each complete
/// mapping in lexicographic order of the non-head assignments; stops as soon
/// as `visit` returns `true`.
fn search_homomorphisms(from: &Query, to: &Query, mut visit: impl FnMut(&[Var]) -> bool) -> bool {
    if from.arity() != to.arity() {
        return false;
    }
    let targets: HashSet<AtomKey> = atom_keys(to).into_iter().collect();
    let n = from.var_count();
    let mut mapping: Vec<Option<Var>> = vec![None; n];
    for (&h, &t) in from.head().iter().zip(to.head()) {
        mapping[h.index()] = Some(t);
    }
    let free_vars: Vec<Var> = from.vars().filter(|v| !from.is_free(*v)).collect();

    // atoms become checkable once their last non-head variable is assigned
    let mut ready: Vec<Vec<AtomId>> = vec![Vec::new(); free_vars.len() + 1];
    for (id, atom) in from.atoms().iter().enumerate() {
        let last = atom
            .args
            .iter()
            .filter_map(|v| free_vars.iter().position(|f| f == v))
            .max()
            .map_or(0, |p| p + 1);
        ready[last].push(id);
    }

    let candidates: Vec<Var> = to.vars().collect();

    fn holds(
        from: &Query,
        id: AtomId,
        mapping: &[Option<Var>],
        targets: &HashSet<AtomKey>,
    ) -> bool {
        let atom = &from.atoms()[id];
        let image: Vec<Var> = atom
            .args
            .iter()
            .map(|v| mapping[v.index()].expect("assigned"))
            .collect();
        targets.contains(&(atom.relation.clone(), image))
    }

    #[allow(clippy::too_many_arguments)]
    fn go(
        depth: usize,
        from: &Query,
        free_vars: &[Var],
        ready: &[Vec<AtomId>],
        candidates: &[Var],
        mapping: &mut Vec<Option<Var>>,
        targets: &HashSet<AtomKey>,
        visit: &mut dyn FnMut(&[Var]) -> bool,
    ) -> bool {
        if depth == free_vars.len() {
            let full: Vec<Var> = mapping.iter().map(|m| m.expect("assigned")).collect();
            return visit(&full);
        }
        let v = free_vars[depth];
        for &c in candidates {
            mapping[v.index()] = Some(c);
            if ready[depth + 1]
                .iter()
                .all(|&id| holds(from, id, mapping, targets))
                && go(
                    depth + 1,
                    from,
                    free_vars,
                    ready,
                    candidates,
                    mapping,
                    targets,
                    visit,
                )
            {
                return true;
            }
        }
        mapping[v.index()] = None;
        false
    }

    if !ready[0]
        .iter()
        .all(|&id| holds(from, id, &mapping, &targets))
    {
        return false;
    }
    go(
        0,
        from,
        &free_vars,
        &ready,
        &candidates,
        &mut mapping,
        &targets,
        &mut visit,
    )
}

/// Whether a head-preserving homomorphism `from -> to` exists.
pub fn homomorphism_exists(from: &Query, to: &Query) -> bool {
    search_homomorphisms(from, to, |_| true)
}

/// The first endomorphism (in lexicographic order) whose image misses an
/// atom, as the list of atoms in its image.
fn find_retraction(q: &Query) -> Option<Vec<AtomId>> {
    let keys = atom_keys(q);
    let mut image_ids = None;
    search_homomorphisms(q, q, |h| {
        let image: HashSet<AtomKey> = q
            .atoms()
            .iter()
            .map(|a| {
                (
                    a.relation.clone(),
                    a.args.iter().map(|v| h[v.index()]).collect(),
                )
            })
            .collect();
        if image.len() < keys.len() {
            let mut seen = HashSet::new();
            let ids = keys
                .iter()
                .enumerate()
                .filter(|(_, k)| image.contains(*k) && seen.insert((*k).clone()))
                .map(|(id, _)| id)
                .collect();
            image_ids = Some(ids);
            true
        } else {
            false
        }
    });
    image_ids
}

/// The homomorphic core of `q`, as a subquery with the same head.
pub fn homomorphic_core(q: &Query) -> Query {
    // verbatim duplicate atoms are redundant; keep first occurrences
    let mut seen = HashSet::new();
    let distinct: Vec<AtomId> = atom_keys(q)
        .into_iter()
        .enumerate()
        .filter(|(_, k)| seen.insert(k.clone()))
        .map(|(id, _)| id)
        .collect();
    let mut current = if distinct.len() < q.atoms().len() {
        q.subquery(&distinct)
            .expect("dropping duplicates keeps the head")
    } else {
        q.clone()
    };
    while let Some(image) = find_retraction(&current) {
        current = current
            .subquery(&image)
            .expect("retractions fix the head variables");
    }
    current
}

/// Whether `a` and `b` are equal up to renaming of variables (with head
/// positions matched) and reordering of atoms.
pub fn is_isomorphic(a: &Query, b: &Query) -> bool {
    if a.var_count() != b.var_count() || a.atoms().len() != b.atoms().len() {
        return false;
    }
    let mut multiset_b: BTreeMap<AtomKey, usize> = BTreeMap::new();
    for k in atom_keys(b) {
        *multiset_b.entry(k).or_default() += 1;
    }
    search_homomorphisms(a, b, |h| {
        let distinct: HashSet<&Var> = h.iter().collect();
        if distinct.len() != h.len() {
            return false;
        }
        let mut multiset_a: BTreeMap<AtomKey, usize> = BTreeMap::new();
        for atom in a.atoms() {
            let key = (
                atom.relation.clone(),
                atom.args.iter().map(|v| h[v.index()]).collect(),
            );
            *multiset_a.entry(key).or_default() += 1;
        }
        multiset_a == multiset_b
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_query;

    fn q(text: &str) -> Query {
        parse_query(text, None).unwrap()
    }

    #[test]
    fn loop_absorbs_edge_and_second_loop() {
        let core = homomorphic_core(&q("Q() :- E(x, x), E(x, y), E(y, y)."));
        assert_eq!(core.to_string(), "Q() :- E(x, x).");
        assert!(is_isomorphic(&core, &q("P() :- E(u, u).")));
    }

    #[test]
    fn head_variables_block_retraction() {
        let query = q("Q(x, y) :- E(x, x), E(x, y), E(y, y).");
        assert_eq!(homomorphic_core(&query), query);
    }

    #[test]
    fn self_join_free_queries_are_cores() {
        for text in [
            "Q() :- S(x), E(x, y), T(y).",
            "Q(x) :- E(x, y), T(y).",
            "Q(x, y, z, y2, z2) :- R(x, y, z), Rp(x, y, z2), E(x, y), Ep(x, y2), S(x, y, z).",
        ] {
            let query = q(text);
            assert_eq!(homomorphic_core(&query), query, "{text}");
        }
    }

    #[test]
    fn redundant_branch_is_folded() {
        // the y2 branch maps onto the y branch
        let core = homomorphic_core(&q("Q(x) :- E(x, y), E(x, y2), T(y)."));
        assert_eq!(core.to_string(), "Q(x) :- E(x, y), T(y).");
        let dup = homomorphic_core(&q("Q(x) :- E(x, y), E(x, y)."));
        assert_eq!(dup.to_string(), "Q(x) :- E(x, y).");
    }

    #[test]
    fn isomorphism_respects_head_positions() {
        assert!(is_isomorphic(
            &q("A(x) :- E(x, y)."),
            &q("B(u) :- E(u, v).")
        ));
        assert!(!is_isomorphic(
            &q("A(x) :- E(x, y)."),
            &q("B(v) :- E(u, v).")
        ));
        assert!(!is_isomorphic(&q("A() :- E(x, y)."), &q("B() :- E(x, x).")));
    }

    #[test]
    fn homomorphism_existence() {
        assert!(homomorphism_exists(
            &q("A() :- E(x, y), E(y, z)."),
            &q("B() :- E(u, u).")
        ));
        assert!(!homomorphism_exists(
            &q("A() :- E(u, u)."),
            &q("B() :- E(x, y), E(y, z).")
        ));
    }
}
