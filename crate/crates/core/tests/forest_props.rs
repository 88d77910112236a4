mod common;

use std::collections::HashMap;

use proptest::prelude::*;
use quotetrees::chains::{self, CensusMode};
use quotetrees::forest::{self, build_forest, RootWindow};
use quotetrees::ingest::TweetEvent;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn forest_of(seed: u64, max_nodes: usize) -> Vec<TweetEvent> {
    common::random_forest_events(&mut ChaCha8Rng::seed_from_u64(seed), max_nodes)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn depth_bounds_and_star_iff(seed in any::<u64>()) {
        for t in build_forest(&forest_of(seed, 200), None, RootWindow::UNBOUNDED).trees {
            let d = t.avg_depth();
            prop_assert!(d >= 1.0 && d <= (t.size() - 1) as f64);
            prop_assert_eq!(d == 1.0, t.is_star());
        }
    }

    #[test]
    fn permutation_invariant(seed in any::<u64>()) {
        let events = forest_of(seed, 120);
        let mut shuffled = events.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed));
        let a = build_forest(&events, None, RootWindow::UNBOUNDED);
        let b = build_forest(&shuffled, None, RootWindow::UNBOUNDED);
        prop_assert_eq!(a.trees, b.trees);
        prop_assert_eq!(a.diagnostics, b.diagnostics);
    }

    #[test]
    fn no_self_quote_edges(seed in any::<u64>()) {
        for t in build_forest(&forest_of(seed, 200), None, RootWindow::UNBOUNDED).trees {
            for n in &t.nodes {
                if let Some(p) = n.parent {
                    prop_assert_ne!(&t.nodes[p].user_id, &n.user_id);
                    prop_assert_eq!(t.nodes[p].depth + 1, n.depth);
                }
            }
        }
    }

    #[test]
    fn matches_bfs_oracle(seed in any::<u64>()) {
        let events = forest_of(seed, 200);
        let lib = build_forest(&events, None, RootWindow::UNBOUNDED).trees;
        let oracle = common::oracle_forest(&events);
        prop_assert_eq!(lib.len(), oracle.len());
        for t in &lib {
            let o = &oracle[t.id().as_str()];
            let depths: std::collections::BTreeMap<String, u32> =
                t.nodes.iter().map(|n| (n.tweet_id.to_string(), n.depth)).collect();
            prop_assert_eq!(&depths, &o.depth);
        }
    }

    #[test]
    fn coverage_sums_and_monotone(sizes in prop::collection::vec(2usize..500, 1..80)) {
        let qs = [0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 1.0];
        let c = forest::coverage_from_sizes(sizes.iter().copied(), &qs).unwrap();
        prop_assert!(c.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(c[6], *sizes.iter().max().unwrap());
        for (q, got) in qs.iter().zip(&c) {
            prop_assert_eq!(*got, common::oracle_coverage(&sizes, *q));
        }
    }

    #[test]
    fn census_and_histogram_invariants(seed in any::<u64>()) {
        let trees = build_forest(&forest_of(seed, 200), None, RootWindow::UNBOUNDED).trees;
        let census = chains::chain_census(&trees, CensusMode::Paths);
        let vals: Vec<u64> = census.values().copied().collect();
        prop_assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        let leaves: usize = trees.iter().map(|t| t.leaves().count()).sum();
        prop_assert_eq!(census.get(&1).copied().unwrap_or(0), leaves as u64);
        let nodes = chains::chain_census(&trees, CensusMode::Nodes);
        let non_roots: usize = trees.iter().map(|t| t.size() - 1).sum();
        prop_assert_eq!(nodes.values().sum::<u64>(), non_roots as u64);
        for w in [2usize, 3, 5] {
            let h = chains::pingpong_histogram(&trees, w).unwrap();
            let deep = census.get(&(w as u32)).copied().unwrap_or(0);
            prop_assert_eq!(h.values().sum::<u64>(), deep);
            prop_assert!(h.keys().all(|&(_, u)| (2..=w).contains(&u)));
        }
    }

    #[test]
    fn dump_round_trip(seed in any::<u64>()) {
        let trees = build_forest(&forest_of(seed, 150), None, RootWindow::UNBOUNDED).trees;
        let (mut nodes, mut rts) = (Vec::new(), Vec::new());
        forest::write_forest(&trees, &mut nodes, &mut rts).unwrap();
        let back = forest::read_forest(nodes.as_slice(), "nodes", rts.as_slice(), "rts").unwrap();
        prop_assert_eq!(trees, back);
    }
}

#[test]
fn pingpong_rejects_short_window() {
    assert!(chains::pingpong_histogram(&[], 1).is_err());
}

#[test]
fn trees_per_user_counts_roots() {
    let trees = build_forest(&forest_of(99, 200), None, RootWindow::UNBOUNDED).trees;
    let stats = forest::trees_per_user(&trees);
    let mut oracle: HashMap<&str, (usize, usize)> = HashMap::new();
    for t in &trees {
        let e = oracle.entry(t.root().user_id.as_str()).or_default();
        e.0 += 1;
        e.1 = e.1.max(t.size());
    }
    assert_eq!(stats.len(), oracle.len());
    for (u, s) in &stats {
        assert_eq!((s.count, s.max_size), oracle[u.as_str()]);
    }
}
