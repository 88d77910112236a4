//! Anchored ideal-point estimation.
//!
//! Each user `i` follows elite `j` with probability `logistic(eta_ij)` where
//!
//! ```text
//! eta_ij = alpha_j + beta_i - gamma * (theta_i - phi_j)^2
//! ```
//!
//! Elite valences `phi_j` are fixed inputs. Estimation runs in two stages:
//! elite intercepts `alpha_j` are set to smoothed empirical log-odds, then each
//! user's `(theta_i, beta_i)` is the MAP under independent normal priors,
//! found by damped Newton from several starting points.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::csvio::{self, fmt_f64, CsvError, RowWriter};
use crate::ids::UserId;
use crate::par;
use crate::stats::{self, StatsError};

#[derive(Debug, Error)]
pub enum ValenceError {
    #[error("user `{user}` follows {found} elites, below the minimum of {min}")]
    TooFewElites { user: UserId, found: usize, min: usize },
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("duplicate elite `{0}`")]
    DuplicateElite(UserId),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Csv(#[from] CsvError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IpModelConfig {
    /// Weight of the squared distance in the utility.
    pub gamma: f64,
    pub prior_mean_theta: f64,
    pub prior_sd_theta: f64,
    pub prior_sd_beta: f64,
    pub min_elites: usize,
    pub max_iters: usize,
    /// Convergence threshold on the gradient norm.
    pub tol: f64,
}

impl Default for IpModelConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            prior_mean_theta: 0.0,
            prior_sd_theta: 1.0,
            prior_sd_beta: 2.0,
            min_elites: 10,
            max_iters: 100,
            tol: 1e-6,
        }
    }
}

impl IpModelConfig {
    pub fn validate(&self) -> Result<(), ValenceError> {
        let bad = |m: &str| Err(ValenceError::InvalidConfig(m.to_owned()));
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad("gamma must be > 0");
        }
        if !(self.prior_sd_theta > 0.0 && self.prior_sd_beta > 0.0) {
            return bad("prior standard deviations must be > 0");
        }
        if !self.prior_mean_theta.is_finite() {
            return bad("prior mean must be finite");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be > 0");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EliteAnchor {
    pub elite_id: UserId,
    /// Fixed, externally assigned valence.
    pub phi: f64,
    /// Popularity intercept.
    pub alpha: f64,
}

/// Binary users x elites matrix stored as sorted per-user rows of elite indices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FollowMatrix {
    pub users: Vec<UserId>,
    pub elites: Vec<UserId>,
    pub rows: Vec<Vec<u32>>,
    /// Edges whose target is not a known elite; they are ignored.
    pub unknown_elite_edges: u64,
}

impl FollowMatrix {
    /// Users are sorted by id; duplicate edges collapse.
    pub fn from_edges<'a>(
        elites: &[UserId],
        edges: impl IntoIterator<Item = (&'a UserId, &'a UserId)>,
    ) -> Result<Self, ValenceError> {
        let mut elite_pos = HashMap::with_capacity(elites.len());
        for (j, e) in elites.iter().enumerate() {
            if elite_pos.insert(e, j as u32).is_some() {
                return Err(ValenceError::DuplicateElite(e.clone()));
            }
        }
        let mut by_user: BTreeMap<&UserId, BTreeSet<u32>> = BTreeMap::new();
        let mut unknown = 0;
        for (u, e) in edges {
            match elite_pos.get(e) {
                Some(&j) => {
                    by_user.entry(u).or_default().insert(j);
                }
                None => unknown += 1,
            }
        }
        let (users, rows) = by_user
            .into_iter()
            .map(|(u, s)| (u.clone(), s.into_iter().collect()))
            .unzip();
        Ok(Self {
            users,
            elites: elites.to_vec(),
            rows,
            unknown_elite_edges: unknown,
        })
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn follower_counts(&self) -> Vec<u64> {
        let mut c = vec![0u64; self.elites.len()];
        for row in &self.rows {
            for &j in row {
                c[j as usize] += 1;
            }
        }
        c
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EliteIntercepts {
    pub alpha: Vec<f64>,
    /// Elites nobody follows; their alpha is the smoothed floor.
    pub unfollowed: Vec<UserId>,
}

/// `alpha_j = logit((followers_j + 0.5) / (n_users + 1))`.
pub fn fit_elite_intercepts(matrix: &FollowMatrix) -> EliteIntercepts {
    let n = matrix.n_users() as f64;
    let counts = matrix.follower_counts();
    let alpha = counts
        .iter()
        .map(|&c| {
            let p = (c as f64 + 0.5) / (n + 1.0);
            (p / (1.0 - p)).ln()
        })
        .collect();
    let unfollowed = counts
        .iter()
        .zip(&matrix.elites)
        .filter(|(&c, _)| c == 0)
        .map(|(_, e)| e.clone())
        .collect();
    EliteIntercepts { alpha, unfollowed }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdealPointEstimate {
    pub user_id: UserId,
    pub theta: f64,
    pub beta: f64,
    pub n_elites_followed: usize,
    pub converged: bool,
    pub neg_log_posterior: f64,
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Value, gradient and Hessian of the log-posterior at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PosteriorEval {
    pub value: f64,
    /// `[d/dtheta, d/dbeta]`
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

/// Log-posterior of a single user's `(theta, beta)` given fixed anchors.
pub struct UserPosterior<'a> {
    anchors: &'a [EliteAnchor],
    follows: Vec<bool>,
    cfg: &'a IpModelConfig,
}

impl<'a> UserPosterior<'a> {
    /// `row` holds indices into `anchors` of the followed elites.
    pub fn new(anchors: &'a [EliteAnchor], row: &[u32], cfg: &'a IpModelConfig) -> Self {
        let mut follows = vec![false; anchors.len()];
        for &j in row {
            follows[j as usize] = true;
        }
        Self {
            anchors,
            follows,
            cfg,
        }
    }

    pub fn value(&self, theta: f64, beta: f64) -> f64 {
        let g = self.cfg.gamma;
        let mut ll = 0.0;
        for (a, &y) in self.anchors.iter().zip(&self.follows) {
            let eta = a.alpha + beta - g * (theta - a.phi).powi(2);
            ll += if y { eta } else { 0.0 } - softplus(eta);
        }
        ll - self.prior_penalty(theta, beta)
    }

    fn prior_penalty(&self, theta: f64, beta: f64) -> f64 {
        let st = self.cfg.prior_sd_theta;
        let sb = self.cfg.prior_sd_beta;
        (theta - self.cfg.prior_mean_theta).powi(2) / (2.0 * st * st) + beta * beta / (2.0 * sb * sb)
    }

    pub fn evaluate(&self, theta: f64, beta: f64) -> PosteriorEval {
        let g = self.cfg.gamma;
        let st2 = self.cfg.prior_sd_theta.powi(2);
        let sb2 = self.cfg.prior_sd_beta.powi(2);
        let mut ll = 0.0;
        let (mut gt, mut gb) = (0.0, 0.0);
        let (mut htt, mut htb, mut hbb) = (0.0, 0.0, 0.0);
        for (a, &y) in self.anchors.iter().zip(&self.follows) {
            let d = theta - a.phi;
            let eta = a.alpha + beta - g * d * d;
            let p = logistic(eta);
            let yv = if y { 1.0 } else { 0.0 };
            let r = yv - p;
            let w = p * (1.0 - p);
            ll += yv * eta - softplus(eta);
            gt += -2.0 * g * d * r;
            gb += r;
            htt += -4.0 * g * g * d * d * w - 2.0 * g * r;
            htb += 2.0 * g * w * d;
            hbb -= w;
        }
        PosteriorEval {
            value: ll - self.prior_penalty(theta, beta),
            grad: [
                gt - (theta - self.cfg.prior_mean_theta) / st2,
                gb - beta / sb2,
            ],
            hess: [[htt - 1.0 / st2, htb], [htb, hbb - 1.0 / sb2]],
        }
    }

    /// Damped Newton ascent from `(theta0, 0)`.
    ///
    /// Returns `(theta, beta, log_posterior, converged)`.
    pub fn maximize_from(&self, theta0: f64) -> (f64, f64, f64, bool) {
        let (mut theta, mut beta) = (theta0, 0.0);
        let mut ev = self.evaluate(theta, beta);
        for _ in 0..self.cfg.max_iters {
            let gnorm = ev.grad[0].hypot(ev.grad[1]);
            if gnorm < self.cfg.tol {
                return (theta, beta, ev.value, true);
            }
            let step = damped_newton_step(&ev);
            let slope = ev.grad[0] * step[0] + ev.grad[1] * step[1];
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                let (nt, nb) = (theta + t * step[0], beta + t * step[1]);
                let v = self.value(nt, nb);
                if v >= ev.value + 1e-4 * t * slope {
                    accepted = Some((nt, nb));
                    break;
                }
                t *= 0.5;
            }
            match accepted {
                Some((nt, nb)) => {
                    theta = nt;
                    beta = nb;
                    ev = self.evaluate(theta, beta);
                }
                // no ascent possible at machine precision
                None => {
                    let gnorm = ev.grad[0].hypot(ev.grad[1]);
                    return (theta, beta, ev.value, gnorm < self.cfg.tol.sqrt());
                }
            }
        }
        let gnorm = ev.grad[0].hypot(ev.grad[1]);
        (theta, beta, ev.value, gnorm < self.cfg.tol)
    }
}

/// Solves `(-H + lambda I) d = g` with the smallest `lambda >= 0` (up to a
/// margin) that makes the system positive definite.
fn damped_newton_step(ev: &PosteriorEval) -> [f64; 2] {
    let a = -ev.hess[0][0];
    let b = -ev.hess[0][1];
    let c = -ev.hess[1][1];
    // smallest eigenvalue of the symmetric 2x2 matrix [[a, b], [b, c]]
    let min_eig = 0.5 * (a + c) - (0.25 * (a - c).powi(2) + b * b).sqrt();
    let lambda = if min_eig > 1e-8 {
        0.0
    } else {
        1e-3 - min_eig + 1e-3 * (a.abs() + c.abs())
    };
    let (a, c) = (a + lambda, c + lambda);
    let det = a * c - b * b;
    [
        (c * ev.grad[0] - b * ev.grad[1]) / det,
        (a * ev.grad[1] - b * ev.grad[0]) / det,
    ]
}

/// Relative offsets of the multi-start theta values around the prior mean.
pub const START_OFFSETS: [f64; 3] = [-2.0, 0.0, 2.0];

pub fn fit_user_ip(
    user_id: &UserId,
    row: &[u32],
    anchors: &[EliteAnchor],
    cfg: &IpModelConfig,
) -> Result<IdealPointEstimate, ValenceError> {
    if row.len() < cfg.min_elites {
        return Err(ValenceError::TooFewElites {
            user: user_id.clone(),
            found: row.len(),
            min: cfg.min_elites,
        });
    }
    let post = UserPosterior::new(anchors, row, cfg);
    let mut best: Option<(f64, f64, f64, bool)> = None;
    for off in START_OFFSETS {
        let cand = post.maximize_from(cfg.prior_mean_theta + off);
        if best.is_none_or(|b| cand.2 > b.2) {
            best = Some(cand);
        }
    }
    let (theta, beta, value, converged) = best.expect("at least one start");
    Ok(IdealPointEstimate {
        user_id: user_id.clone(),
        theta,
        beta,
        n_elites_followed: row.len(),
        converged,
        neg_log_posterior: -value,
    })
}

#[derive(Clone, Debug)]
pub struct IpFit {
    pub anchors: Vec<EliteAnchor>,
    /// Sorted by user id.
    pub estimates: Vec<IdealPointEstimate>,
    pub below_min_elites: usize,
    pub unfollowed_elites: Vec<UserId>,
}

/// Runs both stages over every user of the matrix. `phi` is indexed like
/// `matrix.elites`. Users under `min_elites` are left out.
pub fn fit_all(matrix: &FollowMatrix, phi: &[f64], cfg: &IpModelConfig) -> Result<IpFit, ValenceError> {
    cfg.validate()?;
    assert_eq!(phi.len(), matrix.elites.len(), "one phi per elite");
    let intercepts = fit_elite_intercepts(matrix);
    let anchors: Vec<EliteAnchor> = matrix
        .elites
        .iter()
        .zip(phi)
        .zip(&intercepts.alpha)
        .map(|((e, &phi), &alpha)| EliteAnchor {
            elite_id: e.clone(),
            phi,
            alpha,
        })
        .collect();
    let idx: Vec<usize> = (0..matrix.n_users()).collect();
    let fitted = par::map(&idx, |&i| {
        fit_user_ip(&matrix.users[i], &matrix.rows[i], &anchors, cfg).ok()
    });
    let below_min_elites = fitted.iter().filter(|f| f.is_none()).count();
    Ok(IpFit {
        anchors,
        estimates: fitted.into_iter().flatten().collect(),
        below_min_elites,
        unfollowed_elites: intercepts.unfollowed,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IpClass {
    Left,
    Center,
    Right,
}

impl IpClass {
    pub const ALL: [IpClass; 3] = [IpClass::Left, IpClass::Center, IpClass::Right];

    pub fn as_str(self) -> &'static str {
        match self {
            IpClass::Left => "left",
            IpClass::Center => "center",
            IpClass::Right => "right",
        }
    }
}

pub const CENTER_BAND: f64 = 1.0 / 3.0;

/// Left below -1/3, right above +1/3, center in between (boundaries included).
pub fn classify_ip(theta: f64) -> IpClass {
    if theta < -CENTER_BAND {
        IpClass::Left
    } else if theta > CENTER_BAND {
        IpClass::Right
    } else {
        IpClass::Center
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Distribution {
    pub n: usize,
    /// Density on [`IpReport::grid`].
    pub kde: Vec<f64>,
    pub ecdf: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IpReport {
    pub grid: Vec<f64>,
    pub all: Distribution,
    /// `None` when fewer than two root users have an estimate.
    pub roots: Option<Distribution>,
}

pub const REPORT_GRID: (f64, f64, f64) = (-3.5, 3.5, 0.01);

pub fn ip_report(
    estimates: &[IdealPointEstimate],
    root_users: &BTreeSet<UserId>,
) -> Result<IpReport, ValenceError> {
    let grid = stats::grid(REPORT_GRID.0, REPORT_GRID.1, REPORT_GRID.2);
    let dist = |sample: &[f64]| -> Result<Distribution, StatsError> {
        Ok(Distribution {
            n: sample.len(),
            kde: stats::gaussian_kde(sample, &grid)?,
            ecdf: stats::ecdf(sample),
        })
    };
    let all: Vec<f64> = estimates.iter().map(|e| e.theta).collect();
    let roots: Vec<f64> = estimates
        .iter()
        .filter(|e| root_users.contains(&e.user_id))
        .map(|e| e.theta)
        .collect();
    let all = dist(&all)?;
    let roots = if roots.len() >= 2 { dist(&roots).ok() } else { None };
    Ok(IpReport { grid, all, roots })
}

pub const ELITES_HEADER: [&str; 2] = ["elite_id", "phi"];
pub const FOLLOWS_HEADER: [&str; 2] = ["user_id", "elite_id"];
pub const ESTIMATES_HEADER: [&str; 5] = ["user_id", "theta", "beta", "n_elites", "converged"];

pub fn read_elites<R: Read>(reader: R, path: &str) -> Result<Vec<(UserId, f64)>, ValenceError> {
    let mut out = Vec::new();
    csvio::read_records(reader, path, &ELITES_HEADER, |_, rec| {
        out.push((UserId::new(&rec[0]), csvio::parse_f64(&rec[1], "phi")?));
        Ok(())
    })?;
    Ok(out)
}

pub fn read_follows<R: Read>(reader: R, path: &str) -> Result<Vec<(UserId, UserId)>, ValenceError> {
    let mut out = Vec::new();
    csvio::read_records(reader, path, &FOLLOWS_HEADER, |_, rec| {
        out.push((UserId::new(&rec[0]), UserId::new(&rec[1])));
        Ok(())
    })?;
    Ok(out)
}

pub fn write_estimates<W: Write>(out: W, estimates: &[IdealPointEstimate]) -> std::io::Result<()> {
    let mut w = RowWriter::new(out, &ESTIMATES_HEADER)?;
    for e in estimates {
        w.row(&[
            e.user_id.as_str(),
            &fmt_f64(e.theta),
            &fmt_f64(e.beta),
            &e.n_elites_followed.to_string(),
            if e.converged { "true" } else { "false" },
        ])?;
    }
    w.finish()?;
    Ok(())
}

/// Reads `user_id -> theta` from an estimates file.
pub fn read_ip_map<R: Read>(reader: R, path: &str) -> Result<BTreeMap<UserId, f64>, ValenceError> {
    let mut out = BTreeMap::new();
    csvio::read_records(reader, path, &ESTIMATES_HEADER, |_, rec| {
        out.insert(UserId::new(&rec[0]), csvio::parse_f64(&rec[1], "theta")?);
        Ok(())
    })?;
    Ok(out)
}
