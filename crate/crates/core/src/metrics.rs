//! Statistics relating quote-tree structure to user valence.
//!
//! Everything here is a pure function over trees and an `user -> theta` map.
//! Users without a known valence are skipped in every mean and tallied in
//! the returned diagnostics.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::Read;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::csvio::{self, CsvError};
use crate::forest::{QuoteTree, SizeClass, SizeCutoffs};
use crate::ids::{TweetId, UserId};
use crate::stats::{self, BinSpec, BinnedCurve};
use crate::valence::{classify_ip, IpClass};

pub type IpMap = BTreeMap<UserId, f64>;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("unknown x selector `{0}` (expected rho, meanR or offset)")]
    UnknownSelector(String),
    #[error("unknown frame label `{0}` (expected A-H)")]
    UnknownFrame(String),
    #[error(transparent)]
    Csv(#[from] CsvError),
}

/// How repeated participation by one user is counted in IP means.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Each participating user counts once.
    #[default]
    DistinctUsers,
    /// Each quote event counts.
    Events,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TreeValenceSummary {
    pub tree_id: TweetId,
    /// IP of the root author.
    pub rho: f64,
    pub mean_r: Option<f64>,
    pub mean_q: Option<f64>,
    pub n_r: usize,
    pub n_q: usize,
    pub size: usize,
    pub avg_depth: f64,
    pub size_class: SizeClass,
}

impl TreeValenceSummary {
    pub fn root_class(&self) -> IpClass {
        classify_ip(self.rho)
    }

    pub fn divergence(&self) -> Option<f64> {
        Some(self.mean_q? - self.mean_r?)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SummaryDiagnostics {
    pub trees_in: usize,
    pub trees_unknown_rho: usize,
    pub retweeters_unknown_ip: usize,
    pub quoters_unknown_ip: usize,
}

fn mean_known<'a>(users: impl Iterator<Item = &'a UserId>, ip: &IpMap, unknown: &mut usize) -> (Option<f64>, usize) {
    let mut sum = 0.0;
    let mut n = 0;
    for u in users {
        match ip.get(u) {
            Some(&t) => {
                sum += t;
                n += 1;
            }
            None => *unknown += 1,
        }
    }
    ((n > 0).then(|| sum / n as f64), n)
}

/// One summary per tree whose root author has a known IP, sorted by tree id.
pub fn summarize_trees(
    trees: &[QuoteTree],
    ip: &IpMap,
    cutoffs: &SizeCutoffs,
    weighting: Weighting,
) -> (Vec<TreeValenceSummary>, SummaryDiagnostics) {
    let mut diag = SummaryDiagnostics {
        trees_in: trees.len(),
        ..Default::default()
    };
    let mut out = Vec::new();
    for t in trees {
        let Some(&rho) = ip.get(&t.root().user_id) else {
            diag.trees_unknown_rho += 1;
            continue;
        };
        let (mean_r, n_r) = mean_known(t.retweeters.iter(), ip, &mut diag.retweeters_unknown_ip);
        let depth1 = t.nodes.iter().filter(|n| n.depth == 1).map(|n| &n.user_id);
        let (mean_q, n_q) = match weighting {
            Weighting::DistinctUsers => {
                let distinct: BTreeSet<&UserId> = depth1.collect();
                mean_known(distinct.into_iter(), ip, &mut diag.quoters_unknown_ip)
            }
            Weighting::Events => mean_known(depth1, ip, &mut diag.quoters_unknown_ip),
        };
        out.push(TreeValenceSummary {
            tree_id: t.id().clone(),
            rho,
            mean_r,
            mean_q,
            n_r,
            n_q,
            size: t.size(),
            avg_depth: t.avg_depth(),
            size_class: cutoffs.classify(t.size()),
        });
    }
    out.sort_by(|a, b| a.tree_id.cmp(&b.tree_id));
    (out, diag)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QrCurves {
    /// `<R>` against rho.
    pub retweet: BinnedCurve,
    /// `<Q>` against rho.
    pub quote: BinnedCurve,
    pub by_size: Vec<(SizeClass, BinnedCurve, BinnedCurve)>,
}

pub fn qr_curves(summaries: &[TreeValenceSummary], spec: BinSpec) -> QrCurves {
    let curves = |filter: &dyn Fn(&TreeValenceSummary) -> bool| {
        let r = BinnedCurve::from_points(
            spec,
            summaries
                .iter()
                .filter(|s| filter(s))
                .filter_map(|s| Some((s.rho, s.mean_r?))),
        );
        let q = BinnedCurve::from_points(
            spec,
            summaries
                .iter()
                .filter(|s| filter(s))
                .filter_map(|s| Some((s.rho, s.mean_q?))),
        );
        (r, q)
    };
    let (retweet, quote) = curves(&|_| true);
    let by_size = SizeClass::ALL
        .iter()
        .map(|&c| {
            let (r, q) = curves(&|s| s.size_class == c);
            (c, r, q)
        })
        .collect();
    QrCurves {
        retweet,
        quote,
        by_size,
    }
}

/// X axis for divergence curves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DivergenceX {
    Rho,
    MeanR,
    /// `<R> - rho`
    Offset,
}

impl DivergenceX {
    pub const ALL: [DivergenceX; 3] = [DivergenceX::Rho, DivergenceX::MeanR, DivergenceX::Offset];

    pub fn as_str(self) -> &'static str {
        match self {
            DivergenceX::Rho => "rho",
            DivergenceX::MeanR => "meanR",
            DivergenceX::Offset => "offset",
        }
    }

    fn value(self, s: &TreeValenceSummary) -> Option<f64> {
        match self {
            DivergenceX::Rho => Some(s.rho),
            DivergenceX::MeanR => s.mean_r,
            DivergenceX::Offset => Some(s.mean_r? - s.rho),
        }
    }
}

impl FromStr for DivergenceX {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DivergenceX::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| MetricsError::UnknownSelector(s.to_owned()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivergenceCurves {
    pub x: DivergenceX,
    pub all: BinnedCurve,
    pub by_root_class: Vec<(IpClass, BinnedCurve)>,
}

/// `<Q> - <R>` against the chosen x, over trees where both means exist.
pub fn divergence_curves(summaries: &[TreeValenceSummary], x: DivergenceX, spec: BinSpec) -> DivergenceCurves {
    let points = |class: Option<IpClass>| {
        summaries
            .iter()
            .filter(move |s| class.is_none_or(|c| s.root_class() == c))
            .filter_map(move |s| Some((x.value(s)?, s.divergence()?)))
    };
    DivergenceCurves {
        x,
        all: BinnedCurve::from_points(spec, points(None)),
        by_root_class: IpClass::ALL
            .iter()
            .map(|&c| (c, BinnedCurve::from_points(spec, points(Some(c)))))
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UserSummary {
    pub user_id: UserId,
    pub theta: f64,
    pub n_retweets: usize,
    pub n_quotes: usize,
    pub mean_rho_retweeted: Option<f64>,
    pub mean_rho_quoted: Option<f64>,
    pub divergence: Option<f64>,
    /// Quartiles of `rho(quoted root) - mean_rho_retweeted` over quote events.
    pub diff_quartiles: Option<[f64; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UserCurves {
    pub retweeted: BinnedCurve,
    pub quoted: BinnedCurve,
    pub divergence: BinnedCurve,
}

/// Per-user means of the root IPs they retweet and quote at depth 1.
///
/// Every event counts; users need a known IP and at least one event on a
/// root with known IP. Sorted by user id.
pub fn user_summaries(trees: &[QuoteTree], ip: &IpMap, spec: BinSpec) -> (Vec<UserSummary>, UserCurves) {
    let mut rt: BTreeMap<&UserId, Vec<f64>> = BTreeMap::new();
    let mut qt: BTreeMap<&UserId, Vec<f64>> = BTreeMap::new();
    for t in trees {
        let Some(&rho) = ip.get(&t.root().user_id) else {
            continue;
        };
        for u in &t.retweeters {
            rt.entry(u).or_default().push(rho);
        }
        for n in t.nodes.iter().filter(|n| n.depth == 1) {
            qt.entry(&n.user_id).or_default().push(rho);
        }
    }
    let users: BTreeSet<&UserId> = rt.keys().chain(qt.keys()).copied().collect();
    let mut out = Vec::new();
    for u in users {
        let Some(&theta) = ip.get(u) else { continue };
        let r = rt.get(u).map(Vec::as_slice).unwrap_or(&[]);
        let q = qt.get(u).map(Vec::as_slice).unwrap_or(&[]);
        let mean_r = stats::mean(r);
        let mean_q = stats::mean(q);
        let diff_quartiles = mean_r.filter(|_| !q.is_empty()).map(|mr| {
            let mut d: Vec<f64> = q.iter().map(|x| x - mr).collect();
            d.sort_by(f64::total_cmp);
            [0.25, 0.5, 0.75].map(|p| stats::quantile_sorted(&d, p).unwrap())
        });
        out.push(UserSummary {
            user_id: u.clone(),
            theta,
            n_retweets: r.len(),
            n_quotes: q.len(),
            mean_rho_retweeted: mean_r,
            mean_rho_quoted: mean_q,
            divergence: mean_q.zip(mean_r).map(|(q, r)| q - r),
            diff_quartiles,
        });
    }
    let curve = |f: &dyn Fn(&UserSummary) -> Option<f64>| {
        BinnedCurve::from_points(spec, out.iter().filter_map(|s| Some((s.theta, f(s)?))))
    };
    let curves = UserCurves {
        retweeted: curve(&|s| s.mean_rho_retweeted),
        quoted: curve(&|s| s.mean_rho_quoted),
        divergence: curve(&|s| s.divergence),
    };
    (out, curves)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Depth2Record {
    pub tree_id: TweetId,
    pub primary_tweet: TweetId,
    /// IP of the primary (depth-1) quoter.
    pub d1: f64,
    pub rho: f64,
    pub mean_d2: f64,
    pub n_secondary: usize,
    pub size_class: SizeClass,
}

impl Depth2Record {
    pub fn x(&self) -> f64 {
        self.d1 - self.rho
    }

    pub fn y(&self) -> f64 {
        self.mean_d2 - self.d1
    }
}

/// One record per depth-1 quote with known-IP author that has at least one
/// known-IP secondary quoter, on trees with known rho.
pub fn depth2_records(
    trees: &[QuoteTree],
    ip: &IpMap,
    cutoffs: &SizeCutoffs,
    weighting: Weighting,
) -> Vec<Depth2Record> {
    let mut out = Vec::new();
    for t in trees {
        let Some(&rho) = ip.get(&t.root().user_id) else {
            continue;
        };
        let children = t.children();
        for &p in &children[0] {
            let Some(&d1) = ip.get(&t.nodes[p].user_id) else {
                continue;
            };
            let kids = children[p].iter().map(|&c| &t.nodes[c].user_id);
            let mut ignored = 0;
            let (mean_d2, n) = match weighting {
                Weighting::DistinctUsers => {
                    let distinct: BTreeSet<&UserId> = kids.collect();
                    mean_known(distinct.into_iter(), ip, &mut ignored)
                }
                Weighting::Events => mean_known(kids, ip, &mut ignored),
            };
            if let Some(mean_d2) = mean_d2 {
                out.push(Depth2Record {
                    tree_id: t.id().clone(),
                    primary_tweet: t.nodes[p].tweet_id.clone(),
                    d1,
                    rho,
                    mean_d2,
                    n_secondary: n,
                    size_class: cutoffs.classify(t.size()),
                });
            }
        }
    }
    out.sort_by(|a, b| (&a.tree_id, &a.primary_tweet).cmp(&(&b.tree_id, &b.primary_tweet)));
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Depth2Curves {
    pub all: BinnedCurve,
    pub by_size: Vec<(SizeClass, BinnedCurve)>,
}

pub fn depth2_curves(records: &[Depth2Record], spec: BinSpec) -> Depth2Curves {
    let pts = |c: Option<SizeClass>| {
        records
            .iter()
            .filter(move |r| c.is_none_or(|c| r.size_class == c))
            .map(|r| (r.x(), r.y()))
    };
    Depth2Curves {
        all: BinnedCurve::from_points(spec, pts(None)),
        by_size: SizeClass::ALL
            .iter()
            .map(|&c| (c, BinnedCurve::from_points(spec, pts(Some(c)))))
            .collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HeatmapSpec {
    /// Size bins are `[2^k, 2^(k+1))` for `k = 1..=size_bins`, last bin open.
    pub size_bins: usize,
    pub depth_lo: f64,
    pub depth_width: f64,
    /// The last depth bin absorbs everything above.
    pub depth_bins: usize,
    pub rho_bins: BinSpec,
}

impl Default for HeatmapSpec {
    fn default() -> Self {
        Self {
            size_bins: 12,
            depth_lo: 1.0,
            depth_width: 0.25,
            depth_bins: 16,
            rho_bins: BinSpec::default(),
        }
    }
}

impl HeatmapSpec {
    pub fn size_index(&self, size: usize) -> usize {
        let log2 = (usize::BITS - 1 - size.max(1).leading_zeros()) as usize;
        log2.saturating_sub(1).min(self.size_bins - 1)
    }

    pub fn size_edges(&self, i: usize) -> (usize, Option<usize>) {
        let lo = 1usize << (i + 1);
        (lo, (i + 1 < self.size_bins).then_some(lo * 2))
    }

    pub fn depth_index(&self, d: f64) -> usize {
        let raw = ((d - self.depth_lo) / self.depth_width).floor();
        if raw < 0.0 {
            0
        } else {
            (raw as usize).min(self.depth_bins - 1)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Heatmaps {
    pub spec: HeatmapSpec,
    /// Per root class, counts indexed `[depth_bin][size_bin]`.
    pub cells: Vec<(IpClass, Vec<Vec<u64>>)>,
    /// Per size class, counts of trees per rho bin.
    pub rho_by_size: Vec<(SizeClass, Vec<u64>)>,
}

pub fn heatmaps(summaries: &[TreeValenceSummary], spec: HeatmapSpec) -> Heatmaps {
    let mut cells: Vec<(IpClass, Vec<Vec<u64>>)> = IpClass::ALL
        .iter()
        .map(|&c| (c, vec![vec![0; spec.size_bins]; spec.depth_bins]))
        .collect();
    let mut rho_by_size: Vec<(SizeClass, Vec<u64>)> = SizeClass::ALL
        .iter()
        .map(|&c| (c, vec![0; spec.rho_bins.n_bins()]))
        .collect();
    for s in summaries {
        let ci = IpClass::ALL.iter().position(|&c| c == s.root_class()).unwrap();
        cells[ci].1[spec.depth_index(s.avg_depth)][spec.size_index(s.size)] += 1;
        let si = SizeClass::ALL.iter().position(|&c| c == s.size_class).unwrap();
        rho_by_size[si].1[spec.rho_bins.index(s.rho)] += 1;
    }
    Heatmaps {
        spec,
        cells,
        rho_by_size,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Frame {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    H,
}

impl Frame {
    pub const ALL: [Frame; 8] = [
        Frame::A,
        Frame::B,
        Frame::C,
        Frame::D,
        Frame::E,
        Frame::F,
        Frame::G,
        Frame::H,
    ];

    pub fn as_str(self) -> &'static str {
        ["A", "B", "C", "D", "E", "F", "G", "H"][self as usize]
    }
}

impl FromStr for Frame {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Frame::ALL
            .into_iter()
            .find(|f| f.as_str() == s.trim())
            .ok_or_else(|| MetricsError::UnknownFrame(s.to_owned()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameAnnotation {
    pub tweet_id: TweetId,
    pub frames: BTreeSet<Frame>,
}

pub const ANNOTATIONS_HEADER: [&str; 2] = ["tweet_id", "frames"];

pub fn read_annotations<R: Read>(reader: R, path: &str) -> Result<Vec<FrameAnnotation>, MetricsError> {
    let mut out = Vec::new();
    csvio::read_records(reader, path, &ANNOTATIONS_HEADER, |_, rec| {
        let frames = rec[1]
            .split('|')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.parse::<Frame>().map_err(|e| e.to_string()))
            .collect::<Result<BTreeSet<_>, _>>()?;
        if frames.is_empty() {
            return Err("empty frame set".into());
        }
        out.push(FrameAnnotation {
            tweet_id: TweetId::new(&rec[0]),
            frames,
        });
        Ok(())
    })?;
    Ok(out)
}

/// Frame x valence-class tallies for one set of annotated quotes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FrameTable {
    /// `counts[frame][class]`, classes in [`IpClass::ALL`] order.
    pub counts: [[u64; 3]; 8],
    /// Distinct annotated quotes per class.
    pub quotes: [u64; 3],
}

impl FrameTable {
    pub fn count(&self, f: Frame, c: IpClass) -> u64 {
        self.counts[f as usize][c as usize]
    }

    pub fn total(&self, f: Frame) -> u64 {
        self.counts[f as usize].iter().sum()
    }

    /// Share (in percent) of class-`c` quotes that carry frame `f`.
    pub fn percent(&self, f: Frame, c: IpClass) -> Option<f64> {
        let n = self.quotes[c as usize];
        (n > 0).then(|| 100.0 * self.count(f, c) as f64 / n as f64)
    }

    fn add(&mut self, frames: &BTreeSet<Frame>, c: IpClass) {
        self.quotes[c as usize] += 1;
        for &f in frames {
            self.counts[f as usize][c as usize] += 1;
        }
    }
}

/// Merges duplicate annotations of the same tweet into one label set.
fn merge_annotations(annotations: &[FrameAnnotation]) -> BTreeMap<&TweetId, BTreeSet<Frame>> {
    let mut merged: BTreeMap<&TweetId, BTreeSet<Frame>> = BTreeMap::new();
    for a in annotations {
        merged.entry(&a.tweet_id).or_default().extend(&a.frames);
    }
    merged
}

/// Tallies annotated quotes by author class. Returns the table and the
/// number of annotations that could not be resolved to a known-IP author.
pub fn frame_table(
    annotations: &[FrameAnnotation],
    ip: &IpMap,
    quote_authors: &HashMap<TweetId, UserId>,
) -> (FrameTable, usize) {
    let mut table = FrameTable::default();
    let mut skipped = 0;
    for (tweet, frames) in merge_annotations(annotations) {
        match quote_authors.get(tweet).and_then(|u| ip.get(u)) {
            Some(&theta) => table.add(&frames, classify_ip(theta)),
            None => skipped += 1,
        }
    }
    (table, skipped)
}

/// Frame tables grouped by the tree holding each annotated quote.
pub fn frame_tables_by_tree(
    annotations: &[FrameAnnotation],
    ip: &IpMap,
    trees: &[QuoteTree],
) -> (BTreeMap<TweetId, FrameTable>, usize) {
    let mut located: HashMap<&TweetId, (&TweetId, &UserId)> = HashMap::new();
    for t in trees {
        for n in t.nodes.iter().skip(1) {
            located.insert(&n.tweet_id, (t.id(), &n.user_id));
        }
    }
    let mut tables: BTreeMap<TweetId, FrameTable> = BTreeMap::new();
    let mut skipped = 0;
    for (tweet, frames) in merge_annotations(annotations) {
        match located.get(tweet).and_then(|&(tree, u)| Some((tree, *ip.get(u)?))) {
            Some((tree, theta)) => tables
                .entry(tree.clone())
                .or_default()
                .add(&frames, classify_ip(theta)),
            None => skipped += 1,
        }
    }
    (tables, skipped)
}

pub fn node_color(theta: Option<f64>) -> &'static str {
    match theta.map(classify_ip) {
        Some(IpClass::Left) => "blue",
        Some(IpClass::Center) => "black",
        Some(IpClass::Right) => "red",
        None => "gray",
    }
}

fn dot_quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Graphviz description of a tree with nodes colored by author valence.
pub fn export_tree_dot(tree: &QuoteTree, ip: &IpMap) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "digraph {} {{", dot_quote(&format!("tree_{}", tree.id())));
    let _ = writeln!(s, "  node [shape=circle, style=filled, fontcolor=white];");
    for n in &tree.nodes {
        let theta = ip.get(&n.user_id).copied();
        let _ = writeln!(
            s,
            "  {} [label={}, color={c}, fillcolor={c}];",
            dot_quote(n.tweet_id.as_str()),
            dot_quote(n.user_id.as_str()),
            c = node_color(theta),
        );
    }
    for n in &tree.nodes {
        if let Some(p) = n.parent {
            let _ = writeln!(
                s,
                "  {} -> {};",
                dot_quote(tree.nodes[p].tweet_id.as_str()),
                dot_quote(n.tweet_id.as_str())
            );
        }
    }
    s.push_str("}\n");
    s
}
