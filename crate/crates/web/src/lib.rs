//! WebAssembly entry points for the static demo page in `www/`.
//!
//! Every function returns a JSON string; on bad input the object has a
//! single `error` field.

use quotetrees::forest::{build_forest, QuoteTree, RootWindow, SizeCutoffs};
use quotetrees::metrics::{self, DivergenceX, IpMap, Weighting};
use quotetrees::stats::{self, Bin, BinSpec};
use quotetrees::synth::{self, SynthConfig};
use quotetrees::valence::{EliteAnchor, IpModelConfig, UserPosterior, START_OFFSETS};
use quotetrees::UserId;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct CurvePoint {
    x: f64,
    mean: f64,
    count: u64,
    se: Option<f64>,
}

fn points(bins: &[Bin]) -> Vec<CurvePoint> {
    bins.iter()
        .filter_map(|b| {
            Some(CurvePoint {
                x: b.x_mean?,
                mean: b.mean?,
                count: b.count,
                se: b.std.map(|s| s / (b.count as f64).sqrt()),
            })
        })
        .collect()
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("demo output serializes")
}

fn error(msg: impl std::fmt::Display) -> String {
    to_json(&serde_json::json!({ "error": msg.to_string() }))
}

/// Small population so one run stays well under a second in the browser.
fn demo_config(seed: u64) -> SynthConfig {
    SynthConfig {
        seed,
        n_users: 800,
        n_elites: 10,
        n_roots: 1500,
        ..Default::default()
    }
}

fn simulate(cfg: &SynthConfig) -> Result<(Vec<QuoteTree>, IpMap, SizeCutoffs), String> {
    let pop = synth::gen_population(cfg).map_err(|e| e.to_string())?;
    let g = synth::gen_forest(&pop, cfg).map_err(|e| e.to_string())?;
    let trees = build_forest(&g.events, None, RootWindow::UNBOUNDED).trees;
    let cut = SizeCutoffs::from_forest(&trees).map_err(|e| e.to_string())?;
    Ok((trees, pop.truth_map(), cut))
}

#[derive(Serialize)]
struct DivergenceOut {
    trees: usize,
    /// Tree-level least-squares slope of `<Q> - <R>` on rho.
    slope: Option<f64>,
    curve: Vec<CurvePoint>,
}

/// `<Q> - <R>` against the root author's valence for a synthetic forest.
#[wasm_bindgen]
pub fn divergence_demo(lambda: f64, sigma_q: f64, seed: u32) -> String {
    let cfg = SynthConfig {
        lambda,
        sigma_q,
        ..demo_config(seed as u64)
    };
    let (trees, truth, cut) = match simulate(&cfg) {
        Ok(x) => x,
        Err(e) => return error(e),
    };
    let (s, _) = metrics::summarize_trees(&trees, &truth, &cut, Weighting::DistinctUsers);
    let pts: Vec<(f64, f64)> = s.iter().filter_map(|s| Some((s.rho, s.divergence()?))).collect();
    let c = metrics::divergence_curves(&s, DivergenceX::Rho, BinSpec::default());
    to_json(&DivergenceOut {
        trees: trees.len(),
        slope: stats::ols_slope(&pts),
        curve: points(&c.all.bins),
    })
}

#[derive(Serialize)]
struct Depth2Out {
    trees: usize,
    records: usize,
    mean_depth: f64,
    slope: Option<f64>,
    curve: Vec<CurvePoint>,
}

/// Secondary-quoter drift `<D2> - D1` against `D1 - rho`.
#[wasm_bindgen]
pub fn depth2_demo(kappa: f64, p_depth: f64, seed: u32) -> String {
    let cfg = SynthConfig {
        kappa,
        p_depth,
        ..demo_config(seed as u64)
    };
    let (trees, truth, cut) = match simulate(&cfg) {
        Ok(x) => x,
        Err(e) => return error(e),
    };
    let recs = metrics::depth2_records(&trees, &truth, &cut, Weighting::DistinctUsers);
    let xy: Vec<(f64, f64)> = recs.iter().map(|r| (r.x(), r.y())).collect();
    let c = metrics::depth2_curves(&recs, BinSpec::default());
    let mean_depth = stats::mean(&trees.iter().map(|t| t.avg_depth()).collect::<Vec<_>>()).unwrap_or(0.0);
    to_json(&Depth2Out {
        trees: trees.len(),
        records: recs.len(),
        mean_depth,
        slope: stats::ols_slope(&xy),
        curve: points(&c.all.bins),
    })
}

#[derive(Serialize)]
struct PosteriorOut {
    theta: f64,
    beta: f64,
    converged: bool,
    grid: Vec<f64>,
    /// Log-posterior profiled over beta, shifted so the maximum is 0.
    profile: Vec<f64>,
}

/// Best beta for a fixed theta, by 1-D Newton.
fn profile_beta(post: &UserPosterior, theta: f64) -> f64 {
    let mut beta = 0.0;
    for _ in 0..50 {
        let ev = post.evaluate(theta, beta);
        let step = ev.grad[1] / ev.hess[1][1];
        beta -= step;
        if step.abs() < 1e-10 {
            break;
        }
    }
    beta
}

/// MAP ideal point of one user who follows the elites flagged in `followed`.
/// Elites sit at `phi` with zero popularity intercept.
#[wasm_bindgen]
pub fn ip_posterior(phi: Vec<f64>, followed: Vec<u8>, gamma: f64, prior_sd_theta: f64) -> String {
    if phi.len() != followed.len() {
        return error("phi and followed differ in length");
    }
    let cfg = IpModelConfig {
        gamma,
        prior_sd_theta,
        min_elites: 0,
        ..IpModelConfig::default()
    };
    if let Err(e) = cfg.validate() {
        return error(e);
    }
    let anchors: Vec<EliteAnchor> = phi
        .iter()
        .enumerate()
        .map(|(j, &p)| EliteAnchor {
            elite_id: UserId::new(format!("e{j}")),
            phi: p,
            alpha: 0.0,
        })
        .collect();
    let row: Vec<u32> = (0..followed.len() as u32).filter(|&j| followed[j as usize] != 0).collect();
    let post = UserPosterior::new(&anchors, &row, &cfg);
    let (theta, beta, _, converged) = START_OFFSETS
        .iter()
        .map(|off| post.maximize_from(cfg.prior_mean_theta + off))
        .max_by(|a, b| a.2.total_cmp(&b.2))
        .expect("three starts");
    let grid = stats::grid(-3.0, 3.0, 0.02);
    let mut profile: Vec<f64> = grid.iter().map(|&t| post.value(t, profile_beta(&post, t))).collect();
    let top = profile.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    profile.iter_mut().for_each(|v| *v -= top);
    to_json(&PosteriorOut {
        theta,
        beta,
        converged,
        grid,
        profile,
    })
}
