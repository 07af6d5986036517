use fedarm_core::{db_stats, parse_basket_file, TransactionDatabase};
use proptest::prelude::*;

fn basket() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec("[a-z0-9_]{1,6}", 1..8)
}

proptest! {
    #[test]
    fn canonical_text_round_trips(baskets in prop::collection::vec(basket(), 1..40)) {
        let db = TransactionDatabase::from_baskets(baskets).unwrap();
        let text = db.to_basket_string();
        prop_assert_eq!(parse_basket_file(text.as_bytes()).unwrap(), db.clone());
        let stats = db_stats(&db);
        let total: usize = db.transactions().iter().map(|t| t.len()).sum();
        prop_assert_eq!(stats.item_frequencies.values().sum::<usize>(), total);
    }
}

#[test]
fn canonical_text_is_sorted_and_spaced() {
    let db = parse_basket_file(b"c  a\tb\n\nz y\n").unwrap();
    assert_eq!(db.to_basket_string(), "a b c\ny z\n");
}
