use dyncq::bench::{run_bench, BenchMode};
use dyncq::parse_query;
use dyncq::workload::gen_scaled;

#[test]
fn step_maxima_do_not_grow_with_the_database() {
    let q = parse_query("Q(x, y, z) :- E(x, y), R(x, y, z), T(x, w).", None).unwrap();
    let workloads: Vec<_> = [1_000, 100_000]
        .iter()
        .map(|&n| (n, gen_scaled(&q, n, 400, 2)))
        .collect();
    let report = run_bench(&q, &workloads, BenchMode::Engine).unwrap();
    let (small, large) = (&report.sizes[0], &report.sizes[1]);
    assert!(large.adom > 50 * small.adom);
    assert_eq!(small.update_steps_max, large.update_steps_max);
    assert_eq!(small.delay_steps.max, large.delay_steps.max);
    assert!(large.tuples > small.tuples);
}

#[test]
fn oracle_probe_time_grows_with_the_database() {
    let q = parse_query("Q(x, y) :- E(x, y), T(y).", None).unwrap();
    let workloads: Vec<_> = [200, 20_000]
        .iter()
        .map(|&n| (n, gen_scaled(&q, n, 20, 4)))
        .collect();
    let oracle = run_bench(&q, &workloads, BenchMode::OracleRecompute).unwrap();
    let engine = run_bench(&q, &workloads, BenchMode::Engine).unwrap();
    let probe = |i: usize| oracle.sizes[i].probe_ns.median;
    assert!(probe(1) > 10.0 * probe(0), "{} vs {}", probe(0), probe(1));
    assert_eq!(engine.sizes[0].tuples, oracle.sizes[0].tuples);
    assert_eq!(engine.sizes[1].tuples, oracle.sizes[1].tuples);
}
