mod common;

use common::{keys, powerset_frequent, skewed_db, support};
use fedarm_core::{classic_apriori, count_capped, mine_local, parse_basket_file, Itemset};
use proptest::prelude::*;

#[test]
fn four_transaction_example_against_oracle() {
    let db = parse_basket_file(b"a b c\na b\na c\nb\n").unwrap();
    let oracle = powerset_frequent(db.transactions(), 2);
    let exact = classic_apriori(db.transactions(), 2).unwrap();
    assert_eq!(exact.frequent, oracle);
    let local = mine_local(db.transactions(), 2).unwrap();
    assert_eq!(keys(&local.frequent), keys(&oracle));
    assert!(!local.frequent.contains_key(&Itemset::of(&["a", "b", "c"])));
    assert_eq!(support(db.transactions(), &Itemset::of(&["a", "b", "c"])), 1);
}

#[test]
fn min_sup_one_finds_every_occurring_itemset() {
    for seed in 0..40 {
        let db = skewed_db(seed, 6, 6);
        let oracle = powerset_frequent(db.transactions(), 1);
        let local = mine_local(db.transactions(), 1).unwrap();
        assert_eq!(keys(&local.frequent), keys(&oracle), "seed {seed}");
    }
}

#[test]
fn saturation_trace_on_sample() {
    let db = parse_basket_file(b"a b c\na b\na c\nb\n").unwrap();
    let cands = [Itemset::of(&["a", "b"])];
    let capped = count_capped(db.transactions(), &cands, 2, 2).unwrap();
    assert_eq!(capped.visits, 2);
    // Without the cap ab would be tested against t1, t2 and t3.
    let exact = count_capped(db.transactions(), &cands, 3, 2).unwrap();
    assert_eq!(exact.visits, 3);
    assert_eq!(exact.counters[0].count, 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn decision_equivalence_and_capped_counts(seed: u64, min_sup in prop::sample::select(vec![1u64, 2, 3, 5])) {
        let db = skewed_db(seed, 120, 10);
        let local = mine_local(db.transactions(), min_sup).unwrap();
        let exact = classic_apriori(db.transactions(), min_sup).unwrap();
        prop_assert_eq!(keys(&local.frequent), keys(&exact.frequent));
        for (set, &capped) in &local.frequent {
            prop_assert_eq!(capped, exact.frequent[set].min(min_sup));
            prop_assert_eq!(capped, local.local_min_sup);
        }
        prop_assert!(local.visits <= exact.visits);
    }

    #[test]
    fn reported_sets_are_downward_closed(seed: u64, min_sup in 1u64..6) {
        let db = skewed_db(seed, 80, 9);
        let local = mine_local(db.transactions(), min_sup).unwrap();
        let exact = classic_apriori(db.transactions(), min_sup).unwrap();
        for set in local.frequent.keys() {
            let items = set.items();
            for skip in 0..items.len() {
                if items.len() == 1 {
                    break;
                }
                let sub = Itemset::new(items.iter().enumerate().filter(|&(k, _)| k != skip).map(|(_, i)| i.clone()));
                prop_assert!(local.frequent.contains_key(&sub));
                prop_assert!(exact.frequent[&sub] >= exact.frequent[set]);
            }
        }
    }

    #[test]
    fn classic_matches_powerset(seed: u64, min_sup in 1u64..5) {
        let db = skewed_db(seed, 8, 6);
        let exact = classic_apriori(db.transactions(), min_sup).unwrap();
        prop_assert_eq!(exact.frequent, powerset_frequent(db.transactions(), min_sup));
    }
}
