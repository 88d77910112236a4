//! Brute-force reference implementations shared by the integration tests.
//! Nothing here calls into the library's tree, chain or estimator code.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, VecDeque};

use quotetrees::ingest::{TweetEvent, TweetKind};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random event stream for one forest of at most `max_nodes` tweets.
///
/// Users come from a small pool so self-quotes and ping-pongs are common.
/// Some quotes target unknown ids or retweets, and retweets hit random tweets.
pub fn random_forest_events(rng: &mut ChaCha8Rng, max_nodes: usize) -> Vec<TweetEvent> {
    let n = rng.random_range(1..=max_nodes);
    let pool = rng.random_range(2..=6usize);
    let mut ev: Vec<TweetEvent> = Vec::with_capacity(n);
    for i in 0..n {
        let id = format!("t{i:04}");
        let user = format!("u{}", rng.random_range(0..pool));
        let ts = i as i64;
        let roll: f64 = rng.random();
        if ev.is_empty() || roll < 0.08 {
            ev.push(TweetEvent::original(&id, &user, ts));
        } else if roll < 0.10 {
            ev.push(TweetEvent::quote(&id, &user, ts, &format!("missing{i}")));
        } else if roll < 0.25 {
            let target = ev[rng.random_range(0..ev.len())].tweet_id.clone();
            ev.push(TweetEvent::retweet(&id, &user, ts, target.as_str()));
        } else {
            let target = ev[rng.random_range(0..ev.len())].tweet_id.clone();
            ev.push(TweetEvent::quote(&id, &user, ts, target.as_str()));
        }
    }
    ev
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct OracleTree {
    pub root: String,
    pub depth: BTreeMap<String, u32>,
    /// Author sequences of every root-to-leaf path, root author first.
    pub paths: Vec<Vec<String>>,
    pub retweeters: Vec<String>,
}

impl OracleTree {
    pub fn size(&self) -> usize {
        self.depth.len()
    }

    pub fn avg_depth(&self) -> f64 {
        let s: u64 = self.depth.values().map(|&d| d as u64).sum();
        s as f64 / (self.size() - 1) as f64
    }
}

/// Quote trees per the forest rules, by explicit BFS from each root.
pub fn oracle_forest(events: &[TweetEvent]) -> BTreeMap<String, OracleTree> {
    let by_id: HashMap<&str, &TweetEvent> = events.iter().map(|e| (e.tweet_id.as_str(), e)).collect();
    let mut kids: HashMap<&str, Vec<&str>> = HashMap::new();
    let mut roots = Vec::new();
    for e in events {
        match e.kind {
            TweetKind::Original => roots.push(e.tweet_id.as_str()),
            TweetKind::Quote => {
                let r = e.ref_tweet_id.as_ref().unwrap().as_str();
                match by_id.get(r) {
                    Some(t) if t.kind != TweetKind::Retweet => kids.entry(r).or_default().push(e.tweet_id.as_str()),
                    _ => roots.push(e.tweet_id.as_str()),
                }
            }
            TweetKind::Retweet => {}
        }
    }
    let author = |id: &str| by_id[id].user_id.as_str().to_owned();
    let mut out = BTreeMap::new();
    for root in roots {
        let mut t = OracleTree {
            root: root.to_owned(),
            ..Default::default()
        };
        let mut q = VecDeque::from([(root, 0u32)]);
        while let Some((id, d)) = q.pop_front() {
            t.depth.insert(id.to_owned(), d);
            for &c in kids.get(id).map(Vec::as_slice).unwrap_or(&[]) {
                if author(c) != author(id) {
                    q.push_back((c, d + 1));
                }
            }
        }
        if t.size() < 2 {
            continue;
        }
        fn walk(
            id: &str,
            prefix: &mut Vec<String>,
            kids: &HashMap<&str, Vec<&str>>,
            author: &dyn Fn(&str) -> String,
            out: &mut Vec<Vec<String>>,
        ) {
            prefix.push(author(id));
            let next: Vec<&str> = kids
                .get(id)
                .map(|v| v.iter().copied().filter(|&c| author(c) != author(id)).collect())
                .unwrap_or_default();
            if next.is_empty() {
                out.push(prefix.clone());
            }
            for c in next {
                walk(c, prefix, kids, author, out);
            }
            prefix.pop();
        }
        walk(root, &mut Vec::new(), &kids, &author, &mut t.paths);
        let ra = author(root);
        let mut rts: Vec<String> = events
            .iter()
            .filter(|e| e.kind == TweetKind::Retweet && e.ref_tweet_id.as_ref().unwrap().as_str() == root)
            .map(|e| e.user_id.as_str().to_owned())
            .filter(|u| *u != ra)
            .collect();
        rts.sort();
        rts.dedup();
        t.retweeters = rts;
        out.insert(root.to_owned(), t);
    }
    out
}

/// Cumulative count of paths reaching each depth, for depths 1..=max.
pub fn oracle_census(trees: &BTreeMap<String, OracleTree>) -> BTreeMap<u32, u64> {
    let depths: Vec<u32> = trees
        .values()
        .flat_map(|t| t.paths.iter().map(|p| (p.len() - 1) as u32))
        .collect();
    let max = depths.iter().copied().max().unwrap_or(0);
    (1..=max)
        .map(|d| (d, depths.iter().filter(|&&x| x >= d).count() as u64))
        .collect()
}

pub fn oracle_pingpong(trees: &BTreeMap<String, OracleTree>, w: usize) -> BTreeMap<(usize, usize), u64> {
    let mut h = BTreeMap::new();
    for t in trees.values() {
        for p in &t.paths {
            let depth = p.len() - 1;
            if depth < w {
                continue;
            }
            let mut tail: Vec<&String> = p[p.len() - w..].iter().collect();
            tail.sort();
            tail.dedup();
            *h.entry((depth, tail.len())).or_default() += 1;
        }
    }
    h
}

/// Smallest size whose trees of that size or smaller hold `q` of all nodes,
/// walking trees one at a time in ascending size.
pub fn oracle_coverage(sizes: &[usize], q: f64) -> usize {
    let mut s = sizes.to_vec();
    s.sort_unstable();
    let total: usize = s.iter().sum();
    let mut acc = 0;
    for (i, &x) in s.iter().enumerate() {
        acc += x;
        let last_of_size = s.get(i + 1) != Some(&x);
        if last_of_size && acc as f64 >= q * total as f64 {
            return x;
        }
    }
    *s.last().unwrap()
}

fn log1pexp(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// Follow-model log-posterior written out directly.
pub struct NaivePosterior {
    pub alpha: Vec<f64>,
    pub phi: Vec<f64>,
    pub y: Vec<bool>,
    pub gamma: f64,
    pub mu: f64,
    pub sd_theta: f64,
    pub sd_beta: f64,
}

impl NaivePosterior {
    pub fn value(&self, theta: f64, beta: f64) -> f64 {
        let mut s = 0.0;
        for j in 0..self.phi.len() {
            let eta = self.alpha[j] + beta - self.gamma * (theta - self.phi[j]) * (theta - self.phi[j]);
            s += if self.y[j] { eta } else { 0.0 } - log1pexp(eta);
        }
        s - (theta - self.mu).powi(2) / (2.0 * self.sd_theta.powi(2)) - beta * beta / (2.0 * self.sd_beta.powi(2))
    }

    /// Maximizes over beta at fixed theta (1-D Newton on a concave function).
    pub fn profile(&self, theta: f64) -> f64 {
        let mut beta = 0.0;
        for _ in 0..50 {
            let (mut g, mut h) = (-beta / self.sd_beta.powi(2), -1.0 / self.sd_beta.powi(2));
            for j in 0..self.phi.len() {
                let eta = self.alpha[j] + beta - self.gamma * (theta - self.phi[j]).powi(2);
                let p = 1.0 / (1.0 + (-eta).exp());
                g += if self.y[j] { 1.0 } else { 0.0 } - p;
                h -= p * (1.0 - p);
            }
            let step = g / h;
            beta -= step;
            if step.abs() < 1e-10 {
                break;
            }
        }
        self.value(theta, beta)
    }

    /// Grid search over theta in [-4, 4] at step 0.001.
    pub fn grid_argmax(&self) -> f64 {
        let mut best = (f64::NEG_INFINITY, 0.0);
        for k in 0..=8000 {
            let theta = -4.0 + k as f64 * 0.001;
            let v = self.profile(theta);
            if v > best.0 {
                best = (v, theta);
            }
        }
        best.1
    }
}

/// Smoothed log-odds intercepts from follower counts.
pub fn oracle_alpha(counts: &[u64], n_users: usize) -> Vec<f64> {
    counts
        .iter()
        .map(|&c| ((c as f64 + 0.5) / (n_users as f64 + 0.5 - c as f64)).ln())
        .collect()
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

pub fn ols_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Reference frame counts: `[tree][frame A..H][left, center, right]`.
pub const FRAME_COUNTS: [[[u64; 3]; 8]; 3] = [
    [[13, 2, 4], [19, 1, 11], [8, 2, 4], [9, 5, 6], [2, 0, 0], [7, 2, 9], [3, 1, 2], [1, 0, 1]],
    [[10, 5, 11], [17, 5, 9], [13, 8, 12], [3, 3, 3], [1, 2, 1], [5, 2, 6], [1, 0, 3], [3, 5, 6]],
    [[5, 1, 11], [7, 4, 6], [7, 4, 25], [5, 2, 10], [1, 0, 3], [2, 0, 13], [2, 4, 8], [3, 2, 7]],
];

/// Reference integer percentages, same layout.
pub const FRAME_PERCENT: [[[u64; 3]; 8]; 3] = [
    [[30, 17, 13], [43, 8, 37], [18, 17, 13], [20, 42, 20], [5, 0, 0], [16, 17, 30], [7, 8, 7], [2, 0, 3]],
    [[31, 21, 31], [53, 21, 25], [41, 33, 33], [9, 13, 8], [3, 8, 3], [16, 8, 17], [3, 0, 8], [9, 21, 17]],
    [[23, 7, 17], [32, 29, 9], [32, 29, 38], [23, 14, 15], [5, 0, 5], [9, 0, 20], [9, 29, 12], [14, 14, 11]],
];

/// Annotated quotes per tree and class.
pub const FRAME_QUOTES: [[u64; 3]; 3] = [[44, 12, 30], [32, 24, 36], [22, 14, 65]];

/// Events, IP map entries and annotation CSV for the three reference trees.
///
/// Each class column gets `N` depth-1 quotes by distinct users; the frame
/// labels of that column are laid out consecutively and label `k` goes to
/// quote `k mod N`, so no quote repeats a frame and every quote has one.
pub fn frame_fixture() -> (Vec<TweetEvent>, Vec<(String, f64)>, String) {
    let class_theta = [-1.0, 0.0, 1.0];
    let class_name = ["l", "c", "r"];
    let mut events = Vec::new();
    let mut ip = vec![("root_author".to_owned(), 0.0)];
    let mut ann = String::from("tweet_id,frames\n");
    for tree in 0..3 {
        let root = format!("tree{}", tree + 1);
        events.push(TweetEvent::original(&root, "root_author", 0));
        for c in 0..3 {
            let n = FRAME_QUOTES[tree][c] as usize;
            let mut labels: Vec<Vec<char>> = vec![Vec::new(); n];
            let mut k = 0;
            for (f, counts) in FRAME_COUNTS[tree].iter().enumerate() {
                for _ in 0..counts[c] {
                    labels[k % n].push((b'A' + f as u8) as char);
                    k += 1;
                }
            }
            for (i, l) in labels.iter().enumerate() {
                let id = format!("{root}_{}{i}", class_name[c]);
                let user = format!("{root}_{}user{i}", class_name[c]);
                events.push(TweetEvent::quote(&id, &user, 1, &root));
                ip.push((user, class_theta[c]));
                let joined: Vec<String> = l.iter().map(|ch| ch.to_string()).collect();
                ann.push_str(&format!("{id},{}\n", joined.join("|")));
            }
        }
    }
    (events, ip, ann)
}
