//! Seeded generator of populations, follow matrices and quote/retweet cascades.
//!
//! Follows are drawn from the same spatial logistic model the estimator fits.
//! Cascades are driven by valence kernels around the root author's position:
//!
//! - retweet propensity `exp(-(theta - rho)^2 / 2 sigma_r^2)`
//! - primary quote propensity `K(theta) + lambda C(theta)` with
//!   `K = exp(-(theta - rho)^2 / 2 sigma_q^2)` and `C = |theta - rho|`, each
//!   divided by its mean over the candidate quoters
//! - each quote spawns a child with probability `p_depth` (repeatedly); the
//!   child's author is the user closest to a target drawn around
//!   `D - kappa (D - D_parent)`, where `D` is the quoted author's valence.
//!
//! Every random stream is derived from `(seed, purpose, index)`, so output does
//! not depend on the thread count.

use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::csvio::{fmt_f64, RowWriter};
use crate::ids::{TweetId, UserId};
use crate::ingest::{TweetEvent, TweetKind};
use crate::par;
use crate::valence::FollowMatrix;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    InvalidConfig(String),
    #[error("config: {0}")]
    Parse(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mixture {
    pub components: Vec<MixtureComponent>,
}

impl Mixture {
    /// Equal-weight normals at -1, 0, +1 with sd 0.3.
    pub fn three_camps() -> Self {
        Self {
            components: [-1.0, 0.0, 1.0]
                .iter()
                .map(|&mean| MixtureComponent {
                    weight: 1.0,
                    mean,
                    sd: 0.3,
                })
                .collect(),
        }
    }

    pub fn validate(&self, name: &str) -> Result<(), SynthError> {
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        let bad = self
            .components
            .iter()
            .any(|c| !(c.weight >= 0.0 && c.weight.is_finite() && c.sd > 0.0 && c.mean.is_finite()));
        if self.components.is_empty() || bad || !(total > 0.0) {
            return Err(SynthError::InvalidConfig(format!(
                "{name}: mixture weights must be nonnegative with positive sum, sds positive"
            )));
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        self.components.iter().map(|c| c.weight * c.mean).sum::<f64>() / total
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        let mut u = rng.random::<f64>() * total;
        let mut chosen = self.components.last().unwrap();
        for c in &self.components {
            if u < c.weight {
                chosen = c;
                break;
            }
            u -= c.weight;
        }
        chosen.mean + chosen.sd * rng.sample::<f64, _>(rand_distr::StandardNormal)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    Logit,
    /// Misspecified link, for robustness checks of the logistic estimator.
    Probit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_users: usize,
    pub n_elites: usize,
    pub elite_phi: Mixture,
    pub user_theta: Mixture,
    pub gamma: f64,
    pub link: Link,
    pub alpha_mean: f64,
    pub alpha_sd: f64,
    pub beta_mean: f64,
    pub beta_sd: f64,
    pub n_roots: usize,
    /// Root authors are drawn with weight `exp(-root_center_bias * theta^2)`.
    pub root_center_bias: f64,
    pub sigma_r: f64,
    pub sigma_q: f64,
    /// Weight of the cross-cutting term in the primary quote propensity.
    pub lambda: f64,
    pub mean_retweets: f64,
    pub mean_quotes: f64,
    /// Probability, repeated per extra child, that a quote is itself quoted.
    pub p_depth: f64,
    pub kappa: f64,
    /// Spread of the target around which deeper quoters are picked.
    pub secondary_sd: f64,
    pub max_depth: u32,
    pub start_ts: i64,
    pub end_ts: i64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 20200101,
            n_users: 2000,
            n_elites: 100,
            elite_phi: Mixture::three_camps(),
            user_theta: Mixture::three_camps(),
            gamma: 1.0,
            link: Link::Logit,
            alpha_mean: 0.0,
            alpha_sd: 0.5,
            beta_mean: 0.0,
            beta_sd: 0.5,
            n_roots: 4000,
            root_center_bias: 0.5,
            sigma_r: 0.4,
            sigma_q: 0.4,
            lambda: 0.0,
            mean_retweets: 8.0,
            mean_quotes: 4.0,
            p_depth: 0.3,
            kappa: 0.5,
            secondary_sd: 0.3,
            max_depth: 30,
            start_ts: 1_577_836_800,
            end_ts: 1_609_459_199,
        }
    }
}

impl SynthConfig {
    /// Parses a TOML config; every field is required.
    pub fn from_toml(text: &str) -> Result<Self, SynthError> {
        let cfg: SynthConfig = toml::from_str(text).map_err(|e| SynthError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        self.elite_phi.validate("elite_phi")?;
        self.user_theta.validate("user_theta")?;
        let bad = |m: &str| Err(SynthError::InvalidConfig(m.to_owned()));
        if self.n_users < 2 {
            return bad("n_users must be >= 2");
        }
        if !(self.gamma >= 0.0) {
            return bad("gamma must be >= 0");
        }
        if !(self.alpha_sd >= 0.0 && self.beta_sd >= 0.0) {
            return bad("alpha_sd and beta_sd must be >= 0");
        }
        if !(self.sigma_r > 0.0 && self.sigma_q > 0.0 && self.secondary_sd > 0.0) {
            return bad("kernel scales must be > 0");
        }
        if !(self.lambda >= 0.0) {
            return bad("lambda must be >= 0");
        }
        if !(0.0..=1.0).contains(&self.p_depth) {
            return bad("p_depth must be in [0, 1]");
        }
        if !(self.mean_retweets >= 0.0 && self.mean_quotes >= 0.0) {
            return bad("mean_retweets and mean_quotes must be >= 0");
        }
        if !(self.root_center_bias >= 0.0 && self.kappa.is_finite()) {
            return bad("root_center_bias must be >= 0 and kappa finite");
        }
        if self.start_ts > self.end_ts {
            return bad("start_ts must not exceed end_ts");
        }
        Ok(())
    }
}

const STREAM_POPULATION: u64 = 1 << 56;
const STREAM_FOLLOWS: u64 = 2 << 56;
const STREAM_TREES: u64 = 3 << 56;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthUser {
    pub id: UserId,
    pub theta: f64,
    pub beta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthElite {
    pub id: UserId,
    pub phi: f64,
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    pub users: Vec<SynthUser>,
    pub elites: Vec<SynthElite>,
}

impl Population {
    pub fn truth_map(&self) -> crate::metrics::IpMap {
        self.users.iter().map(|u| (u.id.clone(), u.theta)).collect()
    }
}

pub fn gen_population(cfg: &SynthConfig) -> Result<Population, SynthError> {
    cfg.validate()?;
    let mut rng = rng_for(cfg.seed, STREAM_POPULATION);
    let alpha = Normal::new(cfg.alpha_mean, cfg.alpha_sd).map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
    let beta = Normal::new(cfg.beta_mean, cfg.beta_sd).map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
    let elites = (0..cfg.n_elites)
        .map(|j| SynthElite {
            id: UserId::new(format!("e{j:05}")),
            phi: cfg.elite_phi.sample(&mut rng),
            alpha: alpha.sample(&mut rng),
        })
        .collect();
    let users = (0..cfg.n_users)
        .map(|i| SynthUser {
            id: UserId::new(format!("u{i:06}")),
            theta: cfg.user_theta.sample(&mut rng),
            beta: beta.sample(&mut rng),
        })
        .collect();
    Ok(Population { users, elites })
}

/// Standard normal CDF (Abramowitz-Stegun 7.1.26, |error| < 1.5e-7).
fn std_normal_cdf(x: f64) -> f64 {
    let z = x.abs() / std::f64::consts::SQRT_2;
    let t = 1.0 / (1.0 + 0.327_591_1 * z);
    let poly = t
        * (0.254_829_592
            + t * (-0.284_496_736 + t * (1.421_413_741 + t * (-1.453_152_027 + t * 1.061_405_429))));
    let erf = 1.0 - poly * (-z * z).exp();
    if x >= 0.0 {
        0.5 * (1.0 + erf)
    } else {
        0.5 * (1.0 - erf)
    }
}

pub fn link_probability(link: Link, eta: f64) -> f64 {
    match link {
        Link::Logit => 1.0 / (1.0 + (-eta).exp()),
        Link::Probit => std_normal_cdf(eta),
    }
}

pub fn gen_follow_matrix(pop: &Population, cfg: &SynthConfig) -> FollowMatrix {
    let rows = par::map_range(pop.users.len(), |i| {
        let u = &pop.users[i];
        let mut rng = rng_for(cfg.seed, STREAM_FOLLOWS | i as u64);
        pop.elites
            .iter()
            .enumerate()
            .filter(|(_, e)| {
                let eta = e.alpha + u.beta - cfg.gamma * (u.theta - e.phi).powi(2);
                rng.random::<f64>() < link_probability(cfg.link, eta)
            })
            .map(|(j, _)| j as u32)
            .collect::<Vec<u32>>()
    });
    // users are generated with sorted ids, so row order already matches
    let (users, rows): (Vec<UserId>, Vec<Vec<u32>>) = pop
        .users
        .iter()
        .zip(rows)
        .filter(|(_, r)| !r.is_empty())
        .map(|(u, r)| (u.id.clone(), r))
        .unzip();
    FollowMatrix {
        users,
        elites: pop.elites.iter().map(|e| e.id.clone()).collect(),
        rows,
        unknown_elite_edges: 0,
    }
}

/// One generated retweet or quote, as recorded by the generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LedgerRow {
    pub root: TweetId,
    pub tweet_id: TweetId,
    pub parent: TweetId,
    pub user: UserId,
    pub kind: TweetKind,
    pub depth: u32,
}

#[derive(Clone, Debug, Default)]
pub struct GeneratedForest {
    pub events: Vec<TweetEvent>,
    pub ledger: Vec<LedgerRow>,
}

struct ValenceIndex {
    /// `(theta, user index)` sorted by theta.
    sorted: Vec<(f64, usize)>,
}

impl ValenceIndex {
    fn new(pop: &Population) -> Self {
        let mut sorted: Vec<(f64, usize)> = pop.users.iter().enumerate().map(|(i, u)| (u.theta, i)).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Self { sorted }
    }

    /// User whose valence is closest to `target`, skipping `exclude`.
    fn nearest(&self, target: f64, exclude: usize) -> usize {
        let pos = self.sorted.partition_point(|&(t, _)| t < target);
        let (mut lo, mut hi) = (pos, pos);
        loop {
            let left = lo.checked_sub(1).map(|i| self.sorted[i]);
            let right = self.sorted.get(hi).copied();
            let pick = match (left, right) {
                (Some(l), Some(r)) => {
                    if target - l.0 <= r.0 - target {
                        lo -= 1;
                        l
                    } else {
                        hi += 1;
                        r
                    }
                }
                (Some(l), None) => {
                    lo -= 1;
                    l
                }
                (None, Some(r)) => {
                    hi += 1;
                    r
                }
                (None, None) => unreachable!("population has at least two users"),
            };
            if pick.1 != exclude {
                return pick.1;
            }
        }
    }
}

/// Picks each user independently with probability proportional to `weight`,
/// scaled so the expected count is `mean` (capped at 1 per user).
fn bernoulli_pick(rng: &mut ChaCha8Rng, weights: &[f64], mean: f64, exclude: usize) -> Vec<usize> {
    let total: f64 = weights
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != exclude)
        .map(|(_, w)| w)
        .sum();
    if !(total > 0.0) {
        return Vec::new();
    }
    let scale = mean / total;
    let mut out = Vec::new();
    for (i, &w) in weights.iter().enumerate() {
        // draw for every user so the stream layout does not depend on `exclude`
        let u: f64 = rng.random();
        if i != exclude && u < (w * scale).min(1.0) {
            out.push(i);
        }
    }
    out
}

pub fn gen_forest(pop: &Population, cfg: &SynthConfig) -> Result<GeneratedForest, SynthError> {
    cfg.validate()?;
    let root_weights: Vec<f64> = pop
        .users
        .iter()
        .map(|u| (-cfg.root_center_bias * u.theta * u.theta).exp())
        .collect();
    let mut cumulative = Vec::with_capacity(root_weights.len());
    let mut acc = 0.0;
    for w in &root_weights {
        acc += w;
        cumulative.push(acc);
    }
    let index = ValenceIndex::new(pop);
    let per_tree = par::map_range(cfg.n_roots, |r| gen_tree(pop, cfg, r, &cumulative, &index));
    let mut out = GeneratedForest::default();
    for (events, ledger) in per_tree {
        out.events.extend(events);
        out.ledger.extend(ledger);
    }
    Ok(out)
}

fn gen_tree(
    pop: &Population,
    cfg: &SynthConfig,
    r: usize,
    cumulative: &[f64],
    index: &ValenceIndex,
) -> (Vec<TweetEvent>, Vec<LedgerRow>) {
    let mut rng = rng_for(cfg.seed, STREAM_TREES | r as u64);
    let total = *cumulative.last().unwrap();
    let pick = rng.random::<f64>() * total;
    let author = cumulative.partition_point(|&c| c <= pick).min(pop.users.len() - 1);
    let rho = pop.users[author].theta;
    let root_id = TweetId::new(format!("r{r:07}"));
    let root_ts = rng.random_range(cfg.start_ts..=cfg.end_ts);

    let mut events = vec![TweetEvent {
        tweet_id: root_id.clone(),
        user_id: pop.users[author].id.clone(),
        timestamp: root_ts,
        kind: TweetKind::Original,
        ref_tweet_id: None,
    }];
    let mut ledger = Vec::new();
    let mut emit = |events: &mut Vec<TweetEvent>, id: TweetId, user: usize, ts: i64, kind, parent: &TweetId, depth| {
        events.push(TweetEvent {
            tweet_id: id.clone(),
            user_id: pop.users[user].id.clone(),
            timestamp: ts,
            kind,
            ref_tweet_id: Some(parent.clone()),
        });
        ledger.push(LedgerRow {
            root: root_id.clone(),
            tweet_id: id,
            parent: parent.clone(),
            user: pop.users[user].id.clone(),
            kind,
            depth,
        });
    };

    let kernel = |theta: f64, sigma: f64| (-(theta - rho).powi(2) / (2.0 * sigma * sigma)).exp();
    let rt_weights: Vec<f64> = pop.users.iter().map(|u| kernel(u.theta, cfg.sigma_r)).collect();
    // both quote terms are scaled to mean 1 over eligible users, so lambda is
    // the odds of a cross-cutting quote against a kernel quote
    let q_kernel: Vec<f64> = pop.users.iter().map(|u| kernel(u.theta, cfg.sigma_q)).collect();
    let q_cross: Vec<f64> = pop.users.iter().map(|u| (u.theta - rho).abs()).collect();
    let eligible_mean = |w: &[f64]| {
        let s: f64 = w.iter().enumerate().filter(|&(i, _)| i != author).map(|(_, x)| x).sum();
        s / (w.len() - 1) as f64
    };
    let (km, cm) = (eligible_mean(&q_kernel), eligible_mean(&q_cross));
    let q_weights: Vec<f64> = q_kernel
        .iter()
        .zip(&q_cross)
        .map(|(k, c)| {
            let k = if km > 0.0 { k / km } else { 0.0 };
            let c = if cm > 0.0 { c / cm } else { 0.0 };
            k + cfg.lambda * c
        })
        .collect();
    for (k, u) in bernoulli_pick(&mut rng, &rt_weights, cfg.mean_retweets, author)
        .into_iter()
        .enumerate()
    {
        let ts = root_ts + rng.random_range(1..=86_400);
        emit(&mut events, TweetId::new(format!("{root_id}.rt{k}")), u, ts, TweetKind::Retweet, &root_id, 0);
    }

    // (tweet id, author index, timestamp, depth, author valence, parent valence)
    let mut frontier: Vec<(TweetId, usize, i64, u32, f64, f64)> = Vec::new();
    let mut n_quotes = 0usize;
    for u in bernoulli_pick(&mut rng, &q_weights, cfg.mean_quotes, author) {
        let id = TweetId::new(format!("{root_id}.q{n_quotes}"));
        n_quotes += 1;
        let ts = root_ts + rng.random_range(1..=86_400);
        emit(&mut events, id.clone(), u, ts, TweetKind::Quote, &root_id, 1);
        frontier.push((id, u, ts, 1, pop.users[u].theta, rho));
    }
    let spread = Normal::new(0.0, cfg.secondary_sd).expect("validated sd");
    let mut head = 0;
    while head < frontier.len() {
        let (parent_id, parent_user, parent_ts, depth, d_self, d_parent) = frontier[head].clone();
        head += 1;
        if depth >= cfg.max_depth {
            continue;
        }
        while rng.random::<f64>() < cfg.p_depth {
            let target = d_self - cfg.kappa * (d_self - d_parent) + spread.sample(&mut rng);
            let u = index.nearest(target, parent_user);
            let id = TweetId::new(format!("{root_id}.q{n_quotes}"));
            n_quotes += 1;
            let ts = parent_ts + rng.random_range(1..=3_600);
            emit(&mut events, id.clone(), u, ts, TweetKind::Quote, &parent_id, depth + 1);
            frontier.push((id, u, ts, depth + 1, pop.users[u].theta, d_self));
        }
    }
    (events, ledger)
}

pub fn write_truth_users<W: Write>(out: W, pop: &Population) -> std::io::Result<()> {
    let mut w = RowWriter::new(out, &["user_id", "theta", "beta"])?;
    for u in &pop.users {
        w.row(&[u.id.as_str(), &fmt_f64(u.theta), &fmt_f64(u.beta)])?;
    }
    w.finish()?;
    Ok(())
}

pub fn write_elites<W: Write>(out: W, pop: &Population) -> std::io::Result<()> {
    let mut w = RowWriter::new(out, &crate::valence::ELITES_HEADER)?;
    for e in &pop.elites {
        w.row(&[e.id.as_str(), &fmt_f64(e.phi)])?;
    }
    w.finish()?;
    Ok(())
}

pub fn write_follows<W: Write>(out: W, m: &FollowMatrix) -> std::io::Result<()> {
    let mut w = RowWriter::new(out, &crate::valence::FOLLOWS_HEADER)?;
    for (u, row) in m.users.iter().zip(&m.rows) {
        for &j in row {
            w.row(&[u.as_str(), m.elites[j as usize].as_str()])?;
        }
    }
    w.finish()?;
    Ok(())
}

pub fn write_ledger<W: Write>(out: W, ledger: &[LedgerRow]) -> std::io::Result<()> {
    let mut w = RowWriter::new(out, &["root_id", "tweet_id", "parent_tweet_id", "user_id", "kind", "depth"])?;
    for row in ledger {
        let kind = match row.kind {
            TweetKind::Original => "original",
            TweetKind::Retweet => "retweet",
            TweetKind::Quote => "quote",
        };
        w.row(&[
            row.root.as_str(),
            row.tweet_id.as_str(),
            row.parent.as_str(),
            row.user.as_str(),
            kind,
            &row.depth.to_string(),
        ])?;
    }
    w.finish()?;
    Ok(())
}
