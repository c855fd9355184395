mod common;

use std::collections::HashSet;
use std::time::Instant;

use common::oracle::{derivable, seed_grammar, universe, SEED_GRAMMARS};
use sygus_core::grammar::{derives, enumerate};

#[test]
fn derives_and_enumerate_match_brute_force() {
    let start = Instant::now();
    for (name, text, extra) in SEED_GRAMMARS {
        let g = seed_grammar(text);
        let oracle = derivable(&g, 7);
        let terms = universe(&g, 7, extra);
        let mut accepted = 0;
        for t in &terms {
            let expected = oracle.contains(t);
            assert_eq!(derives(&g, t), expected, "{name}: {t:?}");
            accepted += usize::from(expected);
        }
        assert_eq!(accepted, oracle.len(), "{name}: universe misses derivable terms");
        for max in 1..=7 {
            let listed: Vec<_> = enumerate(&g, max).collect();
            let set: HashSet<_> = listed.iter().cloned().collect();
            assert_eq!(set.len(), listed.len(), "{name}: duplicates at max {max}");
            let want: HashSet<_> = oracle.iter().filter(|t| t.size() <= max).cloned().collect();
            assert_eq!(set, want, "{name}: max {max}");
        }
        eprintln!("{name}: {} derivable of {} candidates", oracle.len(), terms.len());
    }
    assert!(start.elapsed().as_secs() < 60, "{:?}", start.elapsed());
}
