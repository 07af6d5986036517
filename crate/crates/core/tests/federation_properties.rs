mod common;

use std::collections::BTreeSet;

use common::{keys, powerset_frequent, skewed_db};
use fedarm_core::federation::{mine_concurrently, outsource, PhaseTimings};
use fedarm_core::{
    aggregate, classic_apriori, local_threshold, parse_basket_file, run_federation, run_pipeline,
    run_pipeline_plaintext, AggregationMode, DoubleEncryptionKey, Itemset, PipelineConfig,
};
use proptest::prelude::*;

fn sample_itemsets() -> BTreeSet<Itemset> {
    [&["a"][..], &["b"], &["c"], &["a", "b"], &["a", "c"]].iter().map(|s| Itemset::of(s)).collect()
}

#[test]
fn two_servers_on_sample() {
    let db = parse_basket_file(b"a b c\na b\na c\nb\n").unwrap();
    let occurring = keys(&powerset_frequent(db.transactions(), 1));
    for seed in 0..30 {
        let config = PipelineConfig { n_ics: 2, sigma: 0.5, seed, ..PipelineConfig::default() };
        let (result, _) = run_pipeline(&db, &config).unwrap();
        let found = keys(&result.frequent);
        assert!(found.is_superset(&sample_itemsets()), "seed {seed}: {found:?}");
        assert!(found.is_subset(&occurring), "seed {seed}: {found:?}");
    }
}

#[test]
fn multiple_owners_concatenate() {
    let a = parse_basket_file(b"a b\na\n").unwrap();
    let b = parse_basket_file(b"a b\nb\n").unwrap();
    let config = PipelineConfig { n_data_owners: 2, sigma: 0.5, ..PipelineConfig::default() };
    let (result, metrics) = run_federation(&[a, b], &config).unwrap();
    assert_eq!(metrics.n_transactions, 4);
    assert_eq!(keys(&result.frequent), [Itemset::of(&["a"]), Itemset::of(&["b"]), Itemset::of(&["a", "b"])].into());
}

#[test]
fn rules_respect_confidence() {
    let db = skewed_db(77, 150, 8);
    let config = PipelineConfig { n_ics: 3, sigma: 0.2, min_conf: 0.6, ..PipelineConfig::default() };
    let (result, _) = run_pipeline(&db, &config).unwrap();
    for rule in &result.rules {
        let whole = rule.antecedent.union(&rule.consequent);
        assert_eq!(rule.support, result.frequent[&whole]);
        assert_eq!(rule.confidence, rule.support as f64 / result.frequent[&rule.antecedent] as f64);
        assert!(rule.confidence >= 0.6 && rule.confidence <= 1.0);
        assert!(rule.approximate);
        assert!(!rule.antecedent.is_empty() && !rule.consequent.is_empty());
        assert!(rule.antecedent.items().iter().all(|i| !rule.consequent.items().contains(i)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sandwich(seed: u64, n_ics in 1usize..6, sigma in prop::sample::select(vec![0.1, 0.2, 0.3, 0.5])) {
        let db = skewed_db(seed, 150, 10);
        let exact = classic_apriori(db.transactions(), local_threshold(sigma, db.len()).unwrap()).unwrap();
        let exact = keys(&exact.frequent);
        let base = PipelineConfig { n_ics, sigma, seed, ..PipelineConfig::default() };
        let (union, _) = run_pipeline(&db, &PipelineConfig { mode: AggregationMode::Union, ..base.clone() }).unwrap();
        let (sum, _) = run_pipeline(&db, &PipelineConfig { mode: AggregationMode::Sum, ..base }).unwrap();
        prop_assert!(keys(&sum.frequent).is_subset(&exact));
        prop_assert!(exact.is_subset(&keys(&union.frequent)));
    }

    #[test]
    fn encryption_is_transparent(seed: u64, n_ics in 1usize..5, shift in 1i64..128, stream in 0i64..128) {
        let db = skewed_db(seed, 100, 9);
        let config = PipelineConfig {
            n_ics,
            sigma: 0.25,
            seed,
            key: DoubleEncryptionKey::new(shift, stream).unwrap(),
            ..PipelineConfig::default()
        };
        let (enc, m1) = run_pipeline(&db, &config).unwrap();
        let (plain, m2) = run_pipeline_plaintext(&db, &config).unwrap();
        prop_assert_eq!(enc, plain);
        prop_assert_eq!(m1.visits_total, m2.visits_total);
    }

    #[test]
    fn aggregation_ignores_delivery_order(seed: u64, n_ics in 2usize..6, rot in 0usize..6) {
        let db = skewed_db(seed, 100, 9);
        let (blocks, _) = outsource(&db, n_ics, seed, &DoubleEncryptionKey::default(), &mut PhaseTimings::default()).unwrap();
        let reports = mine_concurrently(blocks, 0.2, None).unwrap();
        let threshold = local_threshold(0.2, db.len()).unwrap();
        let reference = aggregate(&reports, n_ics, AggregationMode::Sum, threshold).unwrap();
        let mut shuffled = reports.clone();
        shuffled.rotate_left(rot % n_ics);
        shuffled.reverse();
        prop_assert_eq!(aggregate(&shuffled, n_ics, AggregationMode::Sum, threshold).unwrap(), reference);
    }
}
