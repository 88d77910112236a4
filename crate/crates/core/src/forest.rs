//! Quote-forest construction and per-tree structural measures.
//!
//! A tree is rooted at an original tweet (or at a quote whose target is not in
//! the dataset) and grows by resolving each quote's `ref` to its parent. A quote
//! edge survives only when the quoter is a perimeter user distinct from the
//! quoted author; a dropped quote takes its whole subtree with it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use serde::Serialize;
use thiserror::Error;

use crate::csvio::{self, CsvError, RowWriter};
use crate::ids::{TweetId, UserId};
use crate::ingest::{TweetEvent, TweetKind};
use crate::par;

#[derive(Debug, Error)]
pub enum ForestError {
    #[error("coverage thresholds need a nonempty forest")]
    EmptyForest,
    #[error("coverage quantile {0} outside (0, 1]")]
    BadQuantile(f64),
    #[error("size cutoffs must be ascending, got ({0}, {1})")]
    UnsortedCutoffs(usize, usize),
    #[error("invalid forest dump: {0}")]
    Dump(String),
    #[error(transparent)]
    Csv(#[from] CsvError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeNode {
    pub tweet_id: TweetId,
    pub user_id: UserId,
    /// Index of the parent inside [`QuoteTree::nodes`]; `None` for the root.
    pub parent: Option<usize>,
    pub depth: u32,
}

/// A rooted quote cascade. `nodes[0]` is the root and nodes are stored in
/// breadth-first order, so every parent precedes its children.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuoteTree {
    pub nodes: Vec<TreeNode>,
    /// Users who dry-retweeted the root, root author excluded.
    pub retweeters: BTreeSet<UserId>,
}

impl QuoteTree {
    /// Trees are identified by their root tweet.
    pub fn id(&self) -> &TweetId {
        &self.nodes[0].tweet_id
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth_sum(&self) -> u64 {
        self.nodes.iter().map(|n| u64::from(n.depth)).sum()
    }

    /// Mean depth over non-root nodes, so a star has `<d> = 1`.
    pub fn avg_depth(&self) -> f64 {
        debug_assert!(self.size() >= 2);
        self.depth_sum() as f64 / (self.size() - 1) as f64
    }

    pub fn max_depth(&self) -> u32 {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    pub fn is_star(&self) -> bool {
        self.nodes.iter().skip(1).all(|n| n.depth == 1)
    }

    /// Children lists indexed like `nodes`, in node order.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            if let Some(p) = n.parent {
                out[p].push(i);
            }
        }
        out
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        let mut has_child = vec![false; self.nodes.len()];
        for n in &self.nodes {
            if let Some(p) = n.parent {
                has_child[p] = true;
            }
        }
        (0..self.nodes.len()).filter(move |&i| !has_child[i])
    }
}

/// Inclusive timestamp window for root tweets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RootWindow {
    pub start: i64,
    pub end: i64,
}

impl RootWindow {
    pub const UNBOUNDED: RootWindow = RootWindow {
        start: i64::MIN,
        end: i64::MAX,
    };

    pub fn contains(&self, ts: i64) -> bool {
        self.start <= ts && ts <= self.end
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ForestDiagnostics {
    pub events: u64,
    pub root_candidates: u64,
    pub roots_outside_window: u64,
    pub roots_outside_perimeter: u64,
    /// Quotes whose target is missing from the dataset (they become root candidates).
    pub quotes_of_unknown_tweets: u64,
    /// Quotes whose target is a retweet (treated like an unknown target).
    pub quotes_of_retweets: u64,
    pub dropped_self_quotes: u64,
    pub dropped_non_perimeter_quotes: u64,
    pub dangling_retweets: u64,
    pub trivial_roots_discarded: u64,
}

impl ForestDiagnostics {
    fn merge(&mut self, other: &ForestDiagnostics) {
        self.dropped_self_quotes += other.dropped_self_quotes;
        self.dropped_non_perimeter_quotes += other.dropped_non_perimeter_quotes;
        self.trivial_roots_discarded += other.trivial_roots_discarded;
    }
}

#[derive(Clone, Debug, Default)]
pub struct ForestBuild {
    /// Sorted by root tweet id.
    pub trees: Vec<QuoteTree>,
    pub diagnostics: ForestDiagnostics,
}

/// Rebuilds all non-trivial quote trees.
///
/// `perimeter = None` admits every user.
pub fn build_forest(
    events: &[TweetEvent],
    perimeter: Option<&BTreeSet<UserId>>,
    window: RootWindow,
) -> ForestBuild {
    let mut diag = ForestDiagnostics {
        events: events.len() as u64,
        ..Default::default()
    };
    let in_perimeter = |u: &UserId| perimeter.is_none_or(|p| p.contains(u));

    let index: HashMap<&str, usize> = events
        .iter()
        .enumerate()
        .map(|(i, e)| (e.tweet_id.as_str(), i))
        .collect();

    let mut quotes_of: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut retweets_of: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut roots: Vec<usize> = Vec::new();
    for (i, ev) in events.iter().enumerate() {
        let target = ev
            .ref_tweet_id
            .as_ref()
            .and_then(|r| index.get(r.as_str()).copied());
        match ev.kind {
            TweetKind::Original => roots.push(i),
            TweetKind::Retweet => match target {
                Some(t) => retweets_of.entry(t).or_default().push(i),
                None => diag.dangling_retweets += 1,
            },
            TweetKind::Quote => match target {
                Some(t) if events[t].kind != TweetKind::Retweet => {
                    quotes_of.entry(t).or_default().push(i)
                }
                Some(_) => {
                    diag.quotes_of_retweets += 1;
                    roots.push(i);
                }
                None => {
                    diag.quotes_of_unknown_tweets += 1;
                    roots.push(i);
                }
            },
        }
    }
    for kids in quotes_of.values_mut() {
        kids.sort_by(|&a, &b| events[a].tweet_id.cmp(&events[b].tweet_id));
    }

    diag.root_candidates = roots.len() as u64;
    roots.retain(|&r| {
        let ev = &events[r];
        if !window.contains(ev.timestamp) {
            diag.roots_outside_window += 1;
            false
        } else if !in_perimeter(&ev.user_id) {
            diag.roots_outside_perimeter += 1;
            false
        } else {
            true
        }
    });
    roots.sort_by(|&a, &b| events[a].tweet_id.cmp(&events[b].tweet_id));

    let grown = par::map(&roots, |&r| {
        grow_tree(events, r, &quotes_of, &retweets_of, &in_perimeter)
    });
    let mut trees = Vec::new();
    for (tree, d) in grown {
        diag.merge(&d);
        trees.extend(tree);
    }
    ForestBuild {
        trees,
        diagnostics: diag,
    }
}

fn grow_tree(
    events: &[TweetEvent],
    root: usize,
    quotes_of: &HashMap<usize, Vec<usize>>,
    retweets_of: &HashMap<usize, Vec<usize>>,
    in_perimeter: &(dyn Fn(&UserId) -> bool + Sync),
) -> (Option<QuoteTree>, ForestDiagnostics) {
    let mut diag = ForestDiagnostics::default();
    let root_ev = &events[root];
    let mut nodes = vec![TreeNode {
        tweet_id: root_ev.tweet_id.clone(),
        user_id: root_ev.user_id.clone(),
        parent: None,
        depth: 0,
    }];
    let mut event_of = vec![root];
    let mut head = 0;
    while head < nodes.len() {
        let parent_event = event_of[head];
        if let Some(kids) = quotes_of.get(&parent_event) {
            for &k in kids {
                let quote = &events[k];
                if quote.user_id == events[parent_event].user_id {
                    diag.dropped_self_quotes += 1;
                } else if !in_perimeter(&quote.user_id) {
                    diag.dropped_non_perimeter_quotes += 1;
                } else {
                    let depth = nodes[head].depth + 1;
                    nodes.push(TreeNode {
                        tweet_id: quote.tweet_id.clone(),
                        user_id: quote.user_id.clone(),
                        parent: Some(head),
                        depth,
                    });
                    event_of.push(k);
                }
            }
        }
        head += 1;
    }
    if nodes.len() < 2 {
        diag.trivial_roots_discarded += 1;
        return (None, diag);
    }
    let retweeters = retweets_of
        .get(&root)
        .into_iter()
        .flatten()
        .map(|&i| &events[i].user_id)
        .filter(|u| **u != root_ev.user_id)
        .cloned()
        .collect();
    (Some(QuoteTree { nodes, retweeters }), diag)
}

/// For each coverage fraction `q`, the smallest tree size `s` such that trees
/// of size `<= s` hold at least `q` of all nodes.
pub fn size_coverage_thresholds(
    trees: &[QuoteTree],
    quantiles: &[f64],
) -> Result<Vec<usize>, ForestError> {
    coverage_from_sizes(trees.iter().map(QuoteTree::size), quantiles)
}

pub fn coverage_from_sizes(
    sizes: impl IntoIterator<Item = usize>,
    quantiles: &[f64],
) -> Result<Vec<usize>, ForestError> {
    let mut by_size: BTreeMap<usize, u64> = BTreeMap::new();
    for s in sizes {
        *by_size.entry(s).or_default() += s as u64;
    }
    if by_size.is_empty() {
        return Err(ForestError::EmptyForest);
    }
    if let Some(&q) = quantiles.iter().find(|&&q| !(q > 0.0 && q <= 1.0)) {
        return Err(ForestError::BadQuantile(q));
    }
    let total: u64 = by_size.values().sum();
    let mut cumulative = Vec::with_capacity(by_size.len());
    let mut acc = 0u64;
    for (&s, &nodes) in &by_size {
        acc += nodes;
        cumulative.push((s, acc));
    }
    let max_size = cumulative.last().map(|c| c.0).unwrap_or(0);
    Ok(quantiles
        .iter()
        .map(|&q| {
            let target = q * total as f64;
            cumulative
                .iter()
                .find(|&&(_, c)| c as f64 >= target)
                .map_or(max_size, |c| c.0)
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeClass {
    Small,
    Medium,
    Large,
}

impl SizeClass {
    pub const ALL: [SizeClass; 3] = [SizeClass::Small, SizeClass::Medium, SizeClass::Large];

    pub fn as_str(self) -> &'static str {
        match self {
            SizeClass::Small => "small",
            SizeClass::Medium => "medium",
            SizeClass::Large => "large",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SizeCutoffs {
    pub small: usize,
    pub medium: usize,
}

impl SizeCutoffs {
    pub fn new(small: usize, medium: usize) -> Result<Self, ForestError> {
        if small > medium {
            return Err(ForestError::UnsortedCutoffs(small, medium));
        }
        Ok(Self { small, medium })
    }

    /// Cutoffs at 75% and 90% node coverage.
    pub fn from_forest(trees: &[QuoteTree]) -> Result<Self, ForestError> {
        let c = size_coverage_thresholds(trees, &[0.75, 0.90])?;
        Self::new(c[0], c[1])
    }

    pub fn classify(&self, size: usize) -> SizeClass {
        if size <= self.small {
            SizeClass::Small
        } else if size <= self.medium {
            SizeClass::Medium
        } else {
            SizeClass::Large
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RootStats {
    pub count: usize,
    pub mean_size: f64,
    pub max_size: usize,
}

pub fn trees_per_user(trees: &[QuoteTree]) -> BTreeMap<UserId, RootStats> {
    let mut acc: BTreeMap<UserId, (usize, usize, usize)> = BTreeMap::new();
    for t in trees {
        let e = acc.entry(t.root().user_id.clone()).or_default();
        e.0 += 1;
        e.1 += t.size();
        e.2 = e.2.max(t.size());
    }
    acc.into_iter()
        .map(|(u, (count, total, max_size))| {
            (
                u,
                RootStats {
                    count,
                    mean_size: total as f64 / count as f64,
                    max_size,
                },
            )
        })
        .collect()
}

pub const FOREST_HEADER: [&str; 5] = ["tree_id", "tweet_id", "parent_tweet_id", "user_id", "depth"];
pub const RETWEETERS_HEADER: [&str; 2] = ["tree_id", "user_id"];

pub fn write_forest<W1: Write, W2: Write>(
    trees: &[QuoteTree],
    nodes_out: W1,
    retweeters_out: W2,
) -> std::io::Result<()> {
    let mut w = RowWriter::new(nodes_out, &FOREST_HEADER)?;
    for t in trees {
        for n in &t.nodes {
            let parent = n.parent.map(|p| t.nodes[p].tweet_id.as_str()).unwrap_or("");
            w.row(&[
                t.id().as_str(),
                n.tweet_id.as_str(),
                parent,
                n.user_id.as_str(),
                &n.depth.to_string(),
            ])?;
        }
    }
    w.finish()?;
    let mut w = RowWriter::new(retweeters_out, &RETWEETERS_HEADER)?;
    for t in trees {
        for u in &t.retweeters {
            w.row(&[t.id().as_str(), u.as_str()])?;
        }
    }
    w.finish()?;
    Ok(())
}

/// Reads a forest dump back. Trees keep the order of the file.
pub fn read_forest<R1: Read, R2: Read>(
    nodes_in: R1,
    nodes_path: &str,
    retweeters_in: R2,
    retweeters_path: &str,
) -> Result<Vec<QuoteTree>, ForestError> {
    let mut trees: Vec<QuoteTree> = Vec::new();
    let mut tree_pos: HashMap<TweetId, usize> = HashMap::new();
    let mut node_pos: Vec<HashMap<TweetId, usize>> = Vec::new();
    csvio::read_records(nodes_in, nodes_path, &FOREST_HEADER, |_, rec| {
        let tree_id = TweetId::new(&rec[0]);
        let depth: u32 = rec[4]
            .parse()
            .map_err(|_| format!("bad depth `{}`", &rec[4]))?;
        let node = |parent| TreeNode {
            tweet_id: TweetId::new(&rec[1]),
            user_id: UserId::new(&rec[3]),
            parent,
            depth,
        };
        if rec[2].is_empty() {
            if rec[1] != rec[0] || depth != 0 {
                return Err("root row must have tweet_id = tree_id and depth 0".into());
            }
            if tree_pos.contains_key(&tree_id) {
                return Err(format!("duplicate root for tree `{tree_id}`"));
            }
            tree_pos.insert(tree_id.clone(), trees.len());
            node_pos.push(HashMap::from([(tree_id, 0)]));
            trees.push(QuoteTree {
                nodes: vec![node(None)],
                retweeters: BTreeSet::new(),
            });
            return Ok(());
        }
        let &t = tree_pos
            .get(&tree_id)
            .ok_or_else(|| format!("node before root of tree `{tree_id}`"))?;
        let &p = node_pos[t]
            .get(rec[2].trim())
            .ok_or_else(|| format!("parent `{}` not yet seen in tree `{tree_id}`", &rec[2]))?;
        let tree = &mut trees[t];
        if tree.nodes[p].depth + 1 != depth {
            return Err(format!("depth {depth} inconsistent with parent"));
        }
        if tree.nodes[p].user_id.as_str() == &rec[3] {
            return Err("self-quote edge in dump".into());
        }
        node_pos[t].insert(TweetId::new(&rec[1]), tree.nodes.len());
        tree.nodes.push(node(Some(p)));
        Ok(())
    })?;
    csvio::read_records(retweeters_in, retweeters_path, &RETWEETERS_HEADER, |_, rec| {
        let &t = tree_pos
            .get(&rec[0])
            .ok_or_else(|| format!("retweeter for unknown tree `{}`", &rec[0]))?;
        trees[t].retweeters.insert(UserId::new(&rec[1]));
        Ok(())
    })?;
    if let Some(t) = trees.iter().find(|t| t.size() < 2) {
        return Err(ForestError::Dump(format!("tree `{}` has no quotes", t.id())));
    }
    Ok(trees)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::ingest::TweetEvent as E;

    pub(crate) fn build_all(events: &[E]) -> Vec<QuoteTree> {
        build_forest(events, None, RootWindow::UNBOUNDED).trees
    }

    #[test]
    fn self_quote_of_quote_is_dropped() {
        let events = [
            E::original("r", "A", 0),
            E::quote("q1", "B", 1, "r"),
            E::quote("q2", "B", 2, "q1"),
        ];
        let b = build_forest(&events, None, RootWindow::UNBOUNDED);
        assert_eq!(b.trees.len(), 1);
        assert_eq!(b.trees[0].size(), 2);
        assert_eq!(b.diagnostics.dropped_self_quotes, 1);
    }

    #[test]
    fn retweets_only_root_is_not_a_tree() {
        let events = [
            E::original("r", "A", 0),
            E::retweet("rt1", "B", 1, "r"),
            E::retweet("rt2", "C", 1, "r"),
        ];
        let b = build_forest(&events, None, RootWindow::UNBOUNDED);
        assert!(b.trees.is_empty());
        assert_eq!(b.diagnostics.trivial_roots_discarded, 1);
    }

    #[test]
    fn root_author_may_quote_others_deeper() {
        let events = [
            E::original("r", "A", 0),
            E::quote("qb", "B", 1, "r"),
            E::quote("qc", "C", 1, "r"),
            E::quote("qa", "A", 2, "qb"),
        ];
        let trees = build_all(&events);
        assert_eq!(trees[0].size(), 4);
        let a = trees[0].nodes.iter().find(|n| n.tweet_id.as_str() == "qa").unwrap();
        assert_eq!(a.depth, 2);
        assert_eq!(a.user_id.as_str(), "A");
    }

    #[test]
    fn avg_depth_examples() {
        let star: Vec<E> = std::iter::once(E::original("r", "A", 0))
            .chain((0..5).map(|i| E::quote(&format!("q{i}"), &format!("U{i}"), 1, "r")))
            .collect();
        assert_eq!(build_all(&star)[0].avg_depth(), 1.0);

        let chain = [
            E::original("r", "A", 0),
            E::quote("a", "B", 1, "r"),
            E::quote("b", "C", 2, "a"),
        ];
        assert_eq!(build_all(&chain)[0].avg_depth(), 1.5);

        let mixed = [
            E::original("r", "A", 0),
            E::quote("a", "B", 1, "r"),
            E::quote("b", "C", 1, "r"),
            E::quote("c", "D", 2, "a"),
        ];
        assert_eq!(build_all(&mixed)[0].avg_depth(), 4.0 / 3.0);
    }

    #[test]
    fn quote_of_missing_tweet_starts_a_root() {
        let events = [E::quote("q", "A", 0, "gone"), E::quote("q2", "B", 1, "q")];
        let b = build_forest(&events, None, RootWindow::UNBOUNDED);
        assert_eq!(b.trees.len(), 1);
        assert_eq!(b.trees[0].id().as_str(), "q");
        assert_eq!(b.diagnostics.quotes_of_unknown_tweets, 1);
    }

    #[test]
    fn non_perimeter_quoter_drops_subtree() {
        let events = [
            E::original("r", "A", 0),
            E::quote("q1", "X", 1, "r"),
            E::quote("q2", "B", 2, "q1"),
            E::quote("q3", "C", 3, "r"),
        ];
        let perim: BTreeSet<UserId> = ["A", "B", "C"].into_iter().map(UserId::from).collect();
        let b = build_forest(&events, Some(&perim), RootWindow::UNBOUNDED);
        assert_eq!(b.trees[0].size(), 2);
        assert_eq!(b.diagnostics.dropped_non_perimeter_quotes, 1);
    }

    #[test]
    fn root_window_and_perimeter_filter_roots() {
        let events = [
            E::original("r1", "A", 5),
            E::quote("q1", "B", 6, "r1"),
            E::original("r2", "A", 50),
            E::quote("q2", "B", 51, "r2"),
            E::original("r3", "Z", 6),
            E::quote("q3", "B", 7, "r3"),
        ];
        let perim: BTreeSet<UserId> = ["A", "B"].into_iter().map(UserId::from).collect();
        let b = build_forest(&events, Some(&perim), RootWindow { start: 0, end: 10 });
        assert_eq!(b.trees.len(), 1);
        assert_eq!(b.trees[0].id().as_str(), "r1");
        assert_eq!(b.diagnostics.roots_outside_window, 1);
        assert_eq!(b.diagnostics.roots_outside_perimeter, 1);
    }

    #[test]
    fn retweeters_are_a_set_without_root_author() {
        let events = [
            E::original("r", "A", 0),
            E::quote("q", "B", 1, "r"),
            E::retweet("rt1", "C", 1, "r"),
            E::retweet("rt2", "C", 2, "r"),
            E::retweet("rt3", "A", 2, "r"),
            E::retweet("rt4", "D", 2, "q"),
            E::retweet("rt5", "E", 2, "missing"),
        ];
        let b = build_forest(&events, None, RootWindow::UNBOUNDED);
        let r: Vec<_> = b.trees[0].retweeters.iter().map(|u| u.as_str()).collect();
        assert_eq!(r, vec!["C"]);
        assert_eq!(b.diagnostics.dangling_retweets, 1);
    }

    #[test]
    fn coverage_examples() {
        assert_eq!(coverage_from_sizes([2, 2, 4], &[0.5]).unwrap(), vec![2]);
        assert_eq!(coverage_from_sizes([2, 2, 4], &[1.0]).unwrap(), vec![4]);
        assert_eq!(coverage_from_sizes([2, 2, 4], &[0.51]).unwrap(), vec![4]);
        assert!(matches!(
            coverage_from_sizes(Vec::<usize>::new(), &[0.5]),
            Err(ForestError::EmptyForest)
        ));
        assert!(coverage_from_sizes([2], &[0.0]).is_err());
        assert!(coverage_from_sizes([2], &[1.5]).is_err());
    }

    #[test]
    fn size_class_boundaries() {
        let c = SizeCutoffs::new(17, 71).unwrap();
        assert_eq!(c.classify(17), SizeClass::Small);
        assert_eq!(c.classify(18), SizeClass::Medium);
        assert_eq!(c.classify(71), SizeClass::Medium);
        assert_eq!(c.classify(1786), SizeClass::Large);
        assert!(SizeCutoffs::new(71, 17).is_err());
    }

    #[test]
    fn trees_per_user_groups_root_authors() {
        let mut events = Vec::new();
        for (t, size) in [2usize, 3, 7].iter().enumerate() {
            let root = format!("r{t}");
            events.push(E::original(&root, "A", 0));
            for k in 1..*size {
                events.push(E::quote(&format!("r{t}q{k}"), &format!("U{k}"), 1, &root));
            }
        }
        events.push(E::original("other", "B", 0));
        let stats = trees_per_user(&build_all(&events));
        assert_eq!(stats.len(), 1);
        assert_eq!(
            stats[&UserId::from("A")],
            RootStats {
                count: 3,
                mean_size: 4.0,
                max_size: 7
            }
        );
    }

    #[test]
    fn dump_round_trip() {
        let events = [
            E::original("r", "A", 0),
            E::quote("a", "B", 1, "r"),
            E::quote("b", "C", 1, "r"),
            E::quote("c", "A", 2, "a"),
            E::retweet("rt", "D", 2, "r"),
        ];
        let trees = build_all(&events);
        let (mut n, mut r) = (Vec::new(), Vec::new());
        write_forest(&trees, &mut n, &mut r).unwrap();
        let text = String::from_utf8(n.clone()).unwrap();
        assert!(text.starts_with("tree_id,tweet_id,parent_tweet_id,user_id,depth\nr,r,,A,0\n"));
        let back = read_forest(n.as_slice(), "f", r.as_slice(), "r").unwrap();
        assert_eq!(back, trees);
    }

    #[test]
    fn dump_reader_rejects_bad_depth() {
        let nodes = "tree_id,tweet_id,parent_tweet_id,user_id,depth\nr,r,,A,0\nr,q,r,B,2\n";
        let rts = "tree_id,user_id\n";
        assert!(read_forest(nodes.as_bytes(), "f", rts.as_bytes(), "r").is_err());
    }
}
