//! Root-to-leaf chain census and terminal-subchain uniqueness.

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use crate::forest::QuoteTree;
use crate::ids::UserId;

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("window length must be at least 2, got {0}")]
    WindowTooShort(usize),
}

/// Authors along a root-to-leaf path, root author first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chain {
    pub users: Vec<UserId>,
}

impl Chain {
    pub fn depth(&self) -> usize {
        self.users.len() - 1
    }

    /// Quoters only, i.e. authors at depth >= 1.
    pub fn quoters(&self) -> &[UserId] {
        &self.users[1..]
    }
}

pub fn chains(tree: &QuoteTree) -> Vec<Chain> {
    tree.leaves()
        .filter(|&leaf| leaf != 0)
        .map(|leaf| {
            let mut users = Vec::with_capacity(tree.nodes[leaf].depth as usize + 1);
            let mut cur = Some(leaf);
            while let Some(i) = cur {
                users.push(tree.nodes[i].user_id.clone());
                cur = tree.nodes[i].parent;
            }
            users.reverse();
            Chain { users }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CensusMode {
    /// `census[d]` = number of root-to-leaf paths of depth `>= d`.
    #[default]
    Paths,
    /// `census[d]` = number of nodes sitting at depth exactly `d`.
    Nodes,
}

/// Keys run from 1 to the maximal depth of the forest.
pub fn chain_census(trees: &[QuoteTree], mode: CensusMode) -> BTreeMap<u32, u64> {
    let mut at_depth: BTreeMap<u32, u64> = BTreeMap::new();
    for t in trees {
        match mode {
            CensusMode::Paths => {
                for leaf in t.leaves().filter(|&l| l != 0) {
                    *at_depth.entry(t.nodes[leaf].depth).or_default() += 1;
                }
            }
            CensusMode::Nodes => {
                for n in t.nodes.iter().skip(1) {
                    *at_depth.entry(n.depth).or_default() += 1;
                }
            }
        }
    }
    let max_depth = at_depth.keys().next_back().copied().unwrap_or(0);
    let mut out = BTreeMap::new();
    match mode {
        CensusMode::Nodes => {
            for d in 1..=max_depth {
                out.insert(d, at_depth.get(&d).copied().unwrap_or(0));
            }
        }
        CensusMode::Paths => {
            let mut acc = 0;
            for d in (1..=max_depth).rev() {
                acc += at_depth.get(&d).copied().unwrap_or(0);
                out.insert(d, acc);
            }
        }
    }
    out
}

/// Distinct users among the last `w` quoters of `chain`, or `None` when the
/// chain is shallower than `w`.
pub fn unique_terminal_quoters(chain: &Chain, w: usize) -> Option<usize> {
    let quoters = chain.quoters();
    if quoters.len() < w {
        return None;
    }
    let tail = &quoters[quoters.len() - w..];
    Some(tail.iter().collect::<HashSet<_>>().len())
}

/// `(chain depth, distinct terminal quoters) -> chain count`, over chains of depth `>= w`.
pub fn pingpong_histogram(
    trees: &[QuoteTree],
    w: usize,
) -> Result<BTreeMap<(usize, usize), u64>, ChainError> {
    if w < 2 {
        return Err(ChainError::WindowTooShort(w));
    }
    let mut hist = BTreeMap::new();
    for t in trees {
        if t.max_depth() < w as u32 {
            continue;
        }
        for c in chains(t) {
            if let Some(u) = unique_terminal_quoters(&c, w) {
                *hist.entry((c.depth(), u)).or_default() += 1;
            }
        }
    }
    Ok(hist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::tests::build_all;
    use crate::ingest::TweetEvent as E;

    fn chain_of(users: &[&str]) -> Vec<E> {
        let mut ev = vec![E::original("n0", users[0], 0)];
        for (i, u) in users.iter().enumerate().skip(1) {
            ev.push(E::quote(&format!("n{i}"), u, i as i64, &format!("n{}", i - 1)));
        }
        ev
    }

    fn as_chain(users: &[&str]) -> Chain {
        Chain {
            users: users.iter().map(|&u| UserId::from(u)).collect(),
        }
    }

    #[test]
    fn star_census() {
        let trees = build_all(&[
            E::original("r", "R", 0),
            E::quote("a", "A", 1, "r"),
            E::quote("b", "B", 1, "r"),
            E::quote("c", "C", 1, "r"),
        ]);
        let census = chain_census(&trees, CensusMode::Paths);
        assert_eq!(census.get(&1), Some(&3));
        assert_eq!(census.get(&2).copied().unwrap_or(0), 0);
    }

    #[test]
    fn single_chain_census() {
        let trees = build_all(&chain_of(&["R", "A", "B", "A", "B"]));
        let census = chain_census(&trees, CensusMode::Paths);
        assert_eq!(census.into_iter().collect::<Vec<_>>(), vec![(1, 1), (2, 1), (3, 1), (4, 1)]);
    }

    #[test]
    fn node_census_counts_nodes_per_depth() {
        let trees = build_all(&[
            E::original("r", "R", 0),
            E::quote("a", "A", 1, "r"),
            E::quote("b", "B", 1, "r"),
            E::quote("c", "C", 2, "a"),
        ]);
        let nodes = chain_census(&trees, CensusMode::Nodes);
        assert_eq!(nodes.into_iter().collect::<Vec<_>>(), vec![(1, 2), (2, 1)]);
        let paths = chain_census(&trees, CensusMode::Paths);
        assert_eq!(paths.into_iter().collect::<Vec<_>>(), vec![(1, 2), (2, 1)]);
    }

    #[test]
    fn terminal_quoter_examples() {
        assert_eq!(unique_terminal_quoters(&as_chain(&["R", "A", "B", "A"]), 3), Some(2));
        assert_eq!(unique_terminal_quoters(&as_chain(&["R", "A", "B", "C"]), 3), Some(3));
        assert_eq!(
            unique_terminal_quoters(&as_chain(&["R", "A", "B", "A", "B", "A"]), 5),
            Some(2)
        );
        assert_eq!(unique_terminal_quoters(&as_chain(&["R", "A", "B"]), 3), None);
        // the root author only counts when it appears as a quoter in the window
        assert_eq!(unique_terminal_quoters(&as_chain(&["A", "B", "A", "C"]), 3), Some(3));
    }

    #[test]
    fn pingpong_single_chain() {
        let trees = build_all(&chain_of(&["R", "A", "B", "A", "B"]));
        let h = pingpong_histogram(&trees, 3).unwrap();
        assert_eq!(h.into_iter().collect::<Vec<_>>(), vec![((4, 2), 1)]);
        assert!(matches!(pingpong_histogram(&trees, 1), Err(ChainError::WindowTooShort(1))));
    }
}
