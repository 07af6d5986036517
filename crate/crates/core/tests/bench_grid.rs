use fedarm_core::{run_bench, AggregationMode, BenchGrid};

#[test]
fn rows_hold_invariants_across_seeds_and_modes() {
    for seed in 0..6 {
        for mode in [AggregationMode::Union, AggregationMode::Sum] {
            let grid = BenchGrid {
                ics: vec![1, 2, 4],
                owners: vec![1, 3],
                sigmas: vec![0.1, 0.3],
                n_transactions: vec![400],
                mode,
                seed,
                ..BenchGrid::default()
            };
            let report = run_bench(&grid).unwrap();
            assert_eq!(report.rows.len(), 12);
            assert!(report.violations().is_empty(), "seed {seed}: {:?}", report.violations());
        }
    }
}

#[test]
fn union_recall_on_thousand_rows() {
    let grid = BenchGrid { ics: vec![4], sigmas: vec![0.1], n_transactions: vec![1000], ..BenchGrid::default() };
    let row = &run_bench(&grid).unwrap().rows[0];
    assert_eq!(row.recall_vs_exact, 1.0);
    assert!(row.visits_customized <= row.visits_classic);
}

#[test]
fn full_support_leaves_only_universal_items() {
    let grid = BenchGrid { sigmas: vec![1.0], n_transactions: vec![200], ..BenchGrid::default() };
    for row in run_bench(&grid).unwrap().rows {
        assert_eq!(row.itemsets_exact, 0);
        assert_eq!(row.itemsets_found, 0);
    }
}

#[test]
fn reruns_are_identical_apart_from_wall_clock() {
    let grid = BenchGrid { ics: vec![1, 2], n_transactions: vec![150], seed: 11, ..BenchGrid::default() };
    let strip = |rows: Vec<fedarm_core::BenchRow>| {
        rows.into_iter()
            .map(|r| (r.c, r.visits_customized, r.visits_classic, r.visits_oracle, r.itemsets_found))
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(run_bench(&grid).unwrap().rows), strip(run_bench(&grid).unwrap().rows));
}
