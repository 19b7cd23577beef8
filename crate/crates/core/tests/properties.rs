use std::collections::BTreeSet;

use dyncq::analysis::{
    build_qtree, homomorphic_core, homomorphism_exists, is_isomorphic, is_q_hierarchical,
};
use dyncq::oracle::eval_naive_tokens;
use dyncq::query::{atoms_index, component_atom_groups, connected_components};
use dyncq::workload::{
    engine_probe, gen_random_qh, oracle_probe, parse_stream, serialize_stream, RandomParams,
    StreamCommand,
};
use dyncq::{parse_query, parse_snapshot, Database, Engine, Query, UpdateCommand};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// An arbitrary small query, usually not q-hierarchical.
fn any_query(seed: u64) -> Query {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let relations = [("E", 2), ("F", 2), ("R", 3), ("U", 1)];
    let vars = ["x", "y", "z", "u", "v"];
    let atoms: Vec<(&str, Vec<&str>)> = (0..rng.gen_range(1..=5))
        .map(|_| {
            let (r, arity) = *relations.choose(&mut rng).unwrap();
            (
                r,
                (0..arity)
                    .map(|_| *vars.choose(&mut rng).unwrap())
                    .collect(),
            )
        })
        .collect();
    let used: BTreeSet<&str> = atoms.iter().flat_map(|(_, a)| a.iter().copied()).collect();
    let mut head: Vec<&str> = used.into_iter().filter(|_| rng.gen_bool(0.5)).collect();
    head.shuffle(&mut rng);
    Query::build(
        "Q",
        head,
        atoms.iter().map(|(r, a)| (*r, a.iter().copied())),
    )
    .unwrap()
}

fn any_database(seed: u64, adom: usize) -> Database {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let consts: Vec<String> = (0..adom).map(|i| format!("k{i}")).collect();
    let mut db = Database::new();
    for _ in 0..rng.gen_range(0..25) {
        let c = |rng: &mut ChaCha8Rng| consts.choose(rng).unwrap().clone();
        match rng.gen_range(0..4) {
            0 => db.insert("E", &[c(&mut rng), c(&mut rng)]),
            1 => db.insert("F", &[c(&mut rng), c(&mut rng)]),
            2 => db.insert("R", &[c(&mut rng), c(&mut rng), c(&mut rng)]),
            _ => db.insert("U", &[c(&mut rng)]),
        }
        .unwrap();
    }
    db
}

fn small_params() -> RandomParams {
    RandomParams {
        domain_size: 8,
        stream_len: 60,
        ..RandomParams::default()
    }
}

fn names(q: &Query, vars: impl IntoIterator<Item = dyncq::query::Var>) -> BTreeSet<String> {
    vars.into_iter()
        .map(|v| q.var_name(v).to_string())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn query_text_round_trips(seed in any::<u64>()) {
        for q in [any_query(seed), gen_random_qh(seed, &small_params()).0] {
            prop_assert_eq!(parse_query(&q.to_string(), None).unwrap(), q);
        }
    }

    #[test]
    fn components_partition_the_atoms(seed in any::<u64>()) {
        let q = any_query(seed);
        let groups = component_atom_groups(&q);
        let mut all: Vec<usize> = groups.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..q.atoms().len()).collect::<Vec<_>>());
        let vars_of = |g: &[usize]| -> BTreeSet<_> { g.iter().flat_map(|&a| q.atoms()[a].vars()).collect() };
        for (i, a) in groups.iter().enumerate() {
            for b in &groups[i + 1..] {
                prop_assert!(vars_of(a).is_disjoint(&vars_of(b)));
            }
        }
        let comps = connected_components(&q);
        prop_assert_eq!(comps.len(), groups.len());
        let head: usize = comps.iter().map(|c| c.arity()).sum();
        prop_assert_eq!(head, q.arity());
    }

    #[test]
    fn atoms_index_lists_containing_atoms(seed in any::<u64>()) {
        let q = any_query(seed);
        let index = atoms_index(&q);
        for v in q.vars() {
            let expected: BTreeSet<usize> = (0..q.atoms().len()).filter(|&a| q.atoms()[a].args.contains(&v)).collect();
            prop_assert_eq!(&index[&v], &expected);
        }
    }

    #[test]
    fn q_trees_exist_exactly_for_q_hierarchical_queries(seed in any::<u64>()) {
        let q = any_query(seed);
        let trees_exist = connected_components(&q).iter().all(|c| build_qtree(c).is_ok());
        prop_assert_eq!(is_q_hierarchical(&q), trees_exist);
    }

    #[test]
    fn q_trees_follow_atom_containment(seed in any::<u64>()) {
        let (q, _) = gen_random_qh(seed, &small_params());
        for c in connected_components(&q) {
            let tree = build_qtree(&c).unwrap();
            prop_assert_eq!(build_qtree(&c).unwrap().render(), tree.render());
            for (a, atom) in c.atoms().iter().enumerate() {
                let path = tree.path(tree.representing_node(a));
                prop_assert_eq!(names(&c, path), names(&c, atom.vars()));
            }
            for u in c.vars() {
                let atoms_u: BTreeSet<usize> = tree.atoms_of(u).into_iter().collect();
                for v in tree.path(u) {
                    let atoms_v: BTreeSet<usize> = tree.atoms_of(v).into_iter().collect();
                    prop_assert!(atoms_u.is_subset(&atoms_v));
                }
                if let Some(p) = tree.parent(u) {
                    prop_assert!(!c.is_free(u) || c.is_free(p));
                }
            }
        }
    }

    #[test]
    fn cores_are_idempotent_and_equivalent(seed in any::<u64>()) {
        let q = any_query(seed);
        let core = homomorphic_core(&q);
        prop_assert!(core.atoms().len() <= q.atoms().len());
        prop_assert!(homomorphism_exists(&q, &core) && homomorphism_exists(&core, &q));
        let again = homomorphic_core(&core);
        prop_assert!(is_isomorphic(&again, &core));
        prop_assert_eq!(again.atoms().len(), core.atoms().len());
        let db = any_database(seed, 3);
        prop_assert_eq!(eval_naive_tokens(&q, &db).unwrap(), eval_naive_tokens(&core, &db).unwrap());
    }

    #[test]
    fn oracle_is_monotone(seed in any::<u64>(), extra in any::<u64>()) {
        let q = any_query(seed);
        let small = any_database(seed ^ 1, 3);
        let mut large = small.clone();
        for cmd in any_database(extra, 3).insert_commands() {
            large.apply(&cmd).unwrap();
        }
        let before = eval_naive_tokens(&q, &small).unwrap();
        let after = eval_naive_tokens(&q, &large).unwrap();
        prop_assert!(before.is_subset(&after));
    }

    #[test]
    fn streams_and_snapshots_round_trip(seed in any::<u64>()) {
        let (_, stream) = gen_random_qh(seed, &small_params());
        prop_assert_eq!(parse_stream(&serialize_stream(&stream)).unwrap(), stream);
        let db = any_database(seed, 4);
        let back = parse_snapshot(&db.to_snapshot(), None).unwrap();
        prop_assert_eq!(back.to_snapshot(), db.to_snapshot());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn engine_matches_oracle(seed in any::<u64>()) {
        let (q, stream) = gen_random_qh(seed, &small_params());
        let mut engine = Engine::create(&q).unwrap();
        let mut db = Database::new();
        for cmd in &stream.commands {
            match cmd {
                StreamCommand::Update(u) => {
                    engine.apply(u).unwrap();
                    db.apply(u).unwrap();
                    prop_assert_eq!(engine.check_invariants(), Ok(()));
                }
                StreamCommand::Probe(p) => {
                    prop_assert_eq!(engine_probe(&engine, *p), oracle_probe(&q, &db, *p).unwrap());
                }
            }
        }
    }

    #[test]
    fn undoing_a_stream_restores_the_empty_state(seed in any::<u64>()) {
        let (q, stream) = gen_random_qh(seed, &small_params());
        let mut engine = Engine::create(&q).unwrap();
        let empty = engine.state();
        let mut db = Database::new();
        let updates: Vec<&UpdateCommand> = stream.updates().collect();
        for u in &updates {
            engine.apply(u).unwrap();
            db.apply(u).unwrap();
        }
        let mut fresh = Engine::create(&q).unwrap();
        fresh.load(&db).unwrap();
        prop_assert_eq!(fresh.state(), engine.state());
        for u in updates.iter().rev() {
            engine.apply(&u.inverse()).unwrap();
        }
        prop_assert_eq!(engine.state(), empty);
        prop_assert_eq!(engine.count(), 0);
    }

    #[test]
    fn insertion_order_does_not_matter(seed in any::<u64>(), order in any::<u64>()) {
        let (q, stream) = gen_random_qh(seed, &small_params());
        let mut db = Database::new();
        for u in stream.updates() {
            db.apply(u).unwrap();
        }
        let mut facts: Vec<UpdateCommand> = db.insert_commands().collect();
        let build = |facts: &[UpdateCommand]| {
            let mut e = Engine::create(&q).unwrap();
            for f in facts {
                e.apply(f).unwrap();
            }
            e
        };
        let a = build(&facts);
        facts.shuffle(&mut ChaCha8Rng::seed_from_u64(order));
        let b = build(&facts);
        prop_assert_eq!(a.state(), b.state());
        let results = |e: &Engine| -> BTreeSet<Vec<String>> { e.tuples().map(|t| e.tokens(&t)).collect() };
        prop_assert_eq!(results(&a), results(&b));
    }
}
