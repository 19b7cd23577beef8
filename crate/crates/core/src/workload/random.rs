//! Random q-hierarchical queries with random update streams, and scaled
//! workloads for benchmarks.

use indexmap::IndexSet;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Probe, Stream};
use crate::database::UpdateCommand;
use crate::query::Query;

#[derive(Clone, Debug, PartialEq)]
pub struct RandomParams {
    pub max_vars: usize,
    pub max_atoms: usize,
    /// Also bounds the depth of the generated trees.
    pub max_arity: usize,
    pub domain_size: usize,
    /// Upper bound on the number of updates; the actual number is drawn
    /// from `1..=stream_len`.
    pub stream_len: usize,
    /// Chance of a probe after each update.
    pub probe_rate: f64,
    /// Chance that an update is an insert while facts are present.
    pub insert_bias: f64,
    /// A probe is forced once this many updates passed without one.
    pub max_probe_gap: usize,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            max_vars: 6,
            max_atoms: 5,
            max_arity: 4,
            domain_size: 20,
            stream_len: 500,
            probe_rate: 0.1,
            insert_bias: 0.65,
            max_probe_gap: 10,
        }
    }
}

/// A random forest over `n` variables: parents point to earlier variables.
struct Forest {
    parent: Vec<Option<usize>>,
    free: Vec<bool>,
}

impl Forest {
    fn depth(&self, mut v: usize) -> usize {
        let mut d = 1;
        while let Some(p) = self.parent[v] {
            d += 1;
            v = p;
        }
        d
    }

    fn path(&self, v: usize) -> Vec<usize> {
        let mut path = vec![v];
        let mut cur = v;
        while let Some(p) = self.parent[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    fn is_leaf(&self, v: usize) -> bool {
        !self.parent.contains(&Some(v))
    }

    fn leaves(&self) -> Vec<usize> {
        (0..self.parent.len())
            .filter(|&v| self.is_leaf(v))
            .collect()
    }
}

fn random_forest(rng: &mut ChaCha8Rng, params: &RandomParams) -> Forest {
    let n = rng.gen_range(1..=params.max_vars.max(1));
    let trees = if n >= 2 && params.max_atoms >= 2 && rng.gen_bool(0.25) {
        2
    } else {
        1
    };
    let mut forest = Forest {
        parent: Vec::new(),
        free: Vec::new(),
    };
    for v in 0..n {
        if v < trees {
            forest.parent.push(None);
            continue;
        }
        let leaves = forest.leaves().len();
        let eligible: Vec<usize> = (0..v)
            .filter(|&p| forest.depth(p) < params.max_arity)
            // a non-leaf parent adds a leaf, and every leaf needs an atom
            .filter(|&p| forest.is_leaf(p) || leaves < params.max_atoms)
            .collect();
        match eligible.choose(rng) {
            Some(&p) => forest.parent.push(Some(p)),
            None => break,
        }
    }
    // free variables form a connected set containing the root, per tree
    for v in 0..forest.parent.len() {
        let free = match forest.parent[v] {
            None => rng.gen_bool(0.7),
            Some(p) => forest.free[p] && rng.gen_bool(0.6),
        };
        forest.free.push(free);
    }
    forest
}

/// A random q-hierarchical query and a random stream over its relations.
///
/// The query is read off a random forest: every atom's variables form a
/// root path, and the free variables are closed upwards, so the result is
/// q-hierarchical by construction. Relations are sometimes shared between
/// atoms of equal arity, and atoms may repeat a variable. Deletes only
/// target facts that are present at that point of the stream.
pub fn gen_random_qh(seed: u64, params: &RandomParams) -> (Query, Stream) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let forest = random_forest(&mut rng, params);
    let names: Vec<String> = (0..forest.parent.len()).map(|v| format!("v{v}")).collect();

    let mut nodes = forest.leaves();
    let target = rng.gen_range(nodes.len()..=params.max_atoms.max(nodes.len()));
    while nodes.len() < target {
        nodes.push(rng.gen_range(0..forest.parent.len()));
    }
    nodes.shuffle(&mut rng);

    let mut relations: Vec<(String, usize)> = Vec::new();
    let mut atoms: Vec<(String, Vec<usize>)> = Vec::new();
    for node in nodes {
        let mut args = forest.path(node);
        args.shuffle(&mut rng);
        if args.len() < params.max_arity && rng.gen_bool(0.2) {
            let repeat = *args.choose(&mut rng).expect("paths are nonempty");
            let at = rng.gen_range(0..=args.len());
            args.insert(at, repeat);
        }
        let reusable: Vec<&String> = relations
            .iter()
            .filter(|(_, a)| *a == args.len())
            .map(|(r, _)| r)
            .collect();
        let relation = match reusable.choose(&mut rng) {
            Some(r) if rng.gen_bool(0.3) => (*r).clone(),
            _ => {
                let r = format!("R{}", relations.len());
                relations.push((r.clone(), args.len()));
                r
            }
        };
        atoms.push((relation, args));
    }

    let mut head: Vec<usize> = (0..forest.parent.len())
        .filter(|&v| forest.free[v])
        .collect();
    head.shuffle(&mut rng);
    let q = Query::build(
        "Q",
        head.iter().map(|&v| names[v].as_str()),
        atoms
            .iter()
            .map(|(r, args)| (r.as_str(), args.iter().map(|&v| names[v].as_str()))),
    )
    .expect("generated queries are well-formed");

    let stream = random_stream(&mut rng, &q, params);
    (q, stream)
}

fn random_constant(rng: &mut ChaCha8Rng, domain: usize) -> String {
    // skewed: half the draws come from a small hot set
    let hot = (domain as f64).sqrt().ceil() as usize;
    let c = if rng.gen_bool(0.5) {
        rng.gen_range(0..hot.max(1))
    } else {
        rng.gen_range(0..domain.max(1))
    };
    format!("c{c}")
}

fn random_stream(rng: &mut ChaCha8Rng, q: &Query, params: &RandomParams) -> Stream {
    let mut stream = Stream::new();
    let mut present: IndexSet<UpdateCommand> = IndexSet::new();
    let updates = rng.gen_range(1..=params.stream_len.max(1));
    let probes = [Probe::Count, Probe::Answer, Probe::Enum];
    let mut since_probe = 0;
    for _ in 0..updates {
        let insert = present.is_empty() || rng.gen_bool(params.insert_bias);
        if insert {
            let atom = q.atoms().choose(rng).expect("queries have atoms");
            let tuple: Vec<String> = if rng.gen_bool(0.5) {
                // consistent with the atom's repeated variables
                let values: Vec<String> = (0..q.var_count())
                    .map(|_| random_constant(rng, params.domain_size))
                    .collect();
                atom.args
                    .iter()
                    .map(|v| values[v.index()].clone())
                    .collect()
            } else {
                (0..atom.arity())
                    .map(|_| random_constant(rng, params.domain_size))
                    .collect()
            };
            let cmd = UpdateCommand::insert(&atom.relation, &tuple);
            present.insert(cmd.clone());
            stream.update(cmd);
        } else {
            let i = rng.gen_range(0..present.len());
            let fact = present.swap_remove_index(i).expect("index in range");
            stream.update(fact.inverse());
        }
        since_probe += 1;
        if since_probe >= params.max_probe_gap || rng.gen_bool(params.probe_rate) {
            stream.probe(*probes.choose(rng).expect("nonempty"));
            since_probe = 0;
        }
    }
    if since_probe > 0 {
        stream.probe(*probes.choose(rng).expect("nonempty"));
    }
    stream
}

/// A workload with active domain of about `n` constants for `q`: `n / g`
/// groups of facts, each group a copy of the same small template over `g`
/// fresh constants, then `updates` updates that
/// delete and restore random facts of random groups, then one probe of each
/// kind. Local structure does not depend on `n`, only the number of groups.
pub fn gen_scaled(q: &Query, n: usize, updates: usize, seed: u64) -> Stream {
    // template: a few valuations over a per-group domain of size `width`
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = 3;
    let valuations: Vec<Vec<usize>> = (0..4)
        .map(|_| {
            (0..q.var_count())
                .map(|v| v * width + rng.gen_range(0..width))
                .collect()
        })
        .collect();
    let mut template: IndexSet<(String, Vec<usize>)> = IndexSet::new();
    for val in &valuations {
        for atom in q.atoms() {
            template.insert((
                atom.relation.clone(),
                atom.args.iter().map(|v| val[v.index()]).collect(),
            ));
        }
    }

    let per_group = template
        .iter()
        .flat_map(|(_, slots)| slots.iter().copied())
        .collect::<std::collections::HashSet<usize>>()
        .len();
    let groups = (n / per_group).max(1);
    let fact = |g: usize, f: usize| {
        let (relation, slots) = &template[f];
        let tuple: Vec<String> = slots.iter().map(|s| format!("g{g}_{s}")).collect();
        UpdateCommand::insert(relation, &tuple)
    };
    let mut stream = Stream::new();
    for g in 0..groups {
        for f in 0..template.len() {
            stream.update(fact(g, f));
        }
    }
    // the seed is shared across sizes, so the update pattern only differs
    // in which group it lands on
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut done = 0;
    while done + 1 < updates {
        let g = rng.gen_range(0..groups);
        let f = rng.gen_range(0..template.len());
        let cmd = fact(g, f);
        stream.update(cmd.inverse());
        stream.update(cmd);
        done += 2;
    }
    stream.probe(Probe::Count);
    stream.probe(Probe::Answer);
    stream.probe(Probe::Enum);
    stream
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::is_q_hierarchical;
    use crate::workload::StreamCommand;

    #[test]
    fn generated_queries_are_q_hierarchical() {
        let params = RandomParams::default();
        for seed in 0..300 {
            let (q, _) = gen_random_qh(seed, &params);
            assert!(is_q_hierarchical(&q), "seed {seed}: {q}");
            assert!(q.var_count() <= params.max_vars);
            assert!(q.atoms().len() <= params.max_atoms);
            assert!(q.atoms().iter().all(|a| a.arity() <= params.max_arity));
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let params = RandomParams::default();
        assert_eq!(gen_random_qh(7, &params), gen_random_qh(7, &params));
        assert_ne!(gen_random_qh(7, &params).1, gen_random_qh(8, &params).1);
    }

    #[test]
    fn deletes_target_present_facts_and_probes_are_frequent() {
        let params = RandomParams::default();
        for seed in 0..50 {
            let (_, stream) = gen_random_qh(seed, &params);
            let mut present = std::collections::HashSet::new();
            let mut gap = 0;
            for cmd in &stream.commands {
                match cmd {
                    StreamCommand::Update(u) if u.kind == crate::UpdateKind::Insert => {
                        present.insert((u.relation.clone(), u.tuple.clone()));
                        gap += 1;
                    }
                    StreamCommand::Update(u) => {
                        assert!(present.remove(&(u.relation.clone(), u.tuple.clone())));
                        gap += 1;
                    }
                    StreamCommand::Probe(_) => gap = 0,
                }
                assert!(gap <= params.max_probe_gap);
            }
            assert_eq!(gap, 0);
        }
    }

    #[test]
    fn scaled_workloads_grow_with_n() {
        let q = crate::parse_query("Q(x, y) :- E(x, y), T(y).", None).unwrap();
        let small = gen_scaled(&q, 100, 50, 1);
        let large = gen_scaled(&q, 1000, 50, 1);
        assert!(large.len() > small.len());
        let adom = |s: &Stream| {
            s.updates()
                .flat_map(|u| u.tuple.iter().cloned())
                .collect::<std::collections::HashSet<_>>()
                .len()
        };
        assert!(adom(&small) <= 100);
        assert!(adom(&large) > 500);
    }
}
