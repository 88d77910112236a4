mod common;

use quotetrees::forest::{build_forest, RootWindow, SizeCutoffs};
use quotetrees::ingest::{self, ParseOptions};
use quotetrees::metrics::{self, DivergenceX, Weighting};
use quotetrees::stats::BinSpec;
use quotetrees::synth::{self, Link, SynthConfig};
use quotetrees::valence::{self, IpModelConfig};

fn pop_cfg(n_users: usize, n_elites: usize, gamma: f64) -> SynthConfig {
    SynthConfig {
        n_users,
        n_elites,
        gamma,
        n_roots: 0,
        ..Default::default()
    }
}

#[test]
fn mixture_means_within_three_standard_errors() {
    let cfg = pop_cfg(10_000, 10_000, 1.0);
    let pop = synth::gen_population(&cfg).unwrap();
    let check = |xs: Vec<f64>, m: &synth::Mixture| {
        let total: f64 = m.components.iter().map(|c| c.weight).sum();
        let mu = m.mean();
        let var = m
            .components
            .iter()
            .map(|c| c.weight / total * (c.sd * c.sd + c.mean * c.mean))
            .sum::<f64>()
            - mu * mu;
        let se = (var / xs.len() as f64).sqrt();
        let got = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((got - mu).abs() < 3.0 * se, "mean {got} vs {mu} (se {se})");
    };
    check(pop.users.iter().map(|u| u.theta).collect(), &cfg.user_theta);
    check(pop.elites.iter().map(|e| e.phi).collect(), &cfg.elite_phi);

    let skewed = SynthConfig {
        user_theta: synth::Mixture {
            components: vec![
                synth::MixtureComponent { weight: 3.0, mean: -0.5, sd: 0.2 },
                synth::MixtureComponent { weight: 1.0, mean: 1.5, sd: 0.6 },
            ],
        },
        ..cfg
    };
    let pop = synth::gen_population(&skewed).unwrap();
    check(pop.users.iter().map(|u| u.theta).collect(), &skewed.user_theta);
}

#[test]
fn followed_distance_shrinks_with_gamma() {
    let mut prev = f64::INFINITY;
    for gamma in [0.5, 1.0, 2.0, 4.0] {
        let cfg = pop_cfg(1000, 100, gamma);
        let pop = synth::gen_population(&cfg).unwrap();
        let m = synth::gen_follow_matrix(&pop, &cfg);
        let theta: std::collections::HashMap<_, _> = pop.users.iter().map(|u| (&u.id, u.theta)).collect();
        let (mut sum, mut n) = (0.0, 0usize);
        for (u, row) in m.users.iter().zip(&m.rows) {
            for &j in row {
                sum += (pop.elites[j as usize].phi - theta[u]).abs();
                n += 1;
            }
        }
        let d = sum / n as f64;
        assert!(d < prev, "gamma {gamma}: mean distance {d} not below {prev}");
        prev = d;
    }
}

#[test]
fn zero_gamma_carries_no_signal() {
    let cfg = pop_cfg(2000, 100, 0.0);
    let pop = synth::gen_population(&cfg).unwrap();
    let m = synth::gen_follow_matrix(&pop, &cfg);
    let phi: Vec<f64> = pop.elites.iter().map(|e| e.phi).collect();
    let fit = valence::fit_all(&m, &phi, &IpModelConfig::default()).unwrap();
    let truth = pop.truth_map();
    let (a, b): (Vec<f64>, Vec<f64>) = fit.estimates.iter().map(|e| (e.theta, truth[&e.user_id])).unzip();
    let r = common::pearson(&a, &b);
    assert!(a.len() > 1000);
    assert!(r.abs() < 0.1, "r = {r}");
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[test]
fn follow_density_matches_link_mean() {
    // 1000 x 1000 = 10^6 cells
    let cfg = pop_cfg(1000, 1000, 1.0);
    let pop = synth::gen_population(&cfg).unwrap();
    let m = synth::gen_follow_matrix(&pop, &cfg);
    let cells = (cfg.n_users * cfg.n_elites) as f64;
    let observed = m.rows.iter().map(|r| r.len()).sum::<usize>() as f64 / cells;

    // link mean over the realized cells
    let mut realized = 0.0;
    for u in &pop.users {
        for e in &pop.elites {
            realized += logistic(e.alpha + u.beta - cfg.gamma * (u.theta - e.phi).powi(2));
        }
    }
    realized /= cells;
    assert!((observed - realized).abs() / realized < 0.02, "{observed} vs {realized}");

    // and the population-level integral: s = alpha + beta ~ N(0, sqrt(0.5)),
    // d = theta - phi a mixture of normals with sd sqrt(2) * 0.3
    let s_sd = (cfg.alpha_sd.powi(2) + cfg.beta_sd.powi(2)).sqrt();
    let d_sd = (2.0f64).sqrt() * 0.3;
    let pdf = |x: f64, sd: f64| (-0.5 * (x / sd).powi(2)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt());
    let camps = [-1.0, 0.0, 1.0];
    let steps = 400;
    let mut integral = 0.0;
    for &mi in &camps {
        for &mj in &camps {
            let md = mi - mj;
            let (hs, hd) = (12.0 * s_sd / steps as f64, 12.0 * d_sd / steps as f64);
            let mut acc = 0.0;
            for a in 0..steps {
                let s = -6.0 * s_sd + (a as f64 + 0.5) * hs;
                for b in 0..steps {
                    let d = md - 6.0 * d_sd + (b as f64 + 0.5) * hd;
                    acc += logistic(s - cfg.gamma * d * d) * pdf(s, s_sd) * pdf(d - md, d_sd) * hs * hd;
                }
            }
            integral += acc / 9.0;
        }
    }
    assert!((observed - integral).abs() / integral < 0.02, "{observed} vs integral {integral}");
}

#[test]
fn generated_events_pass_strict_ingest() {
    let cfg = SynthConfig {
        n_users: 500,
        n_elites: 20,
        n_roots: 400,
        p_depth: 0.45,
        ..Default::default()
    };
    let pop = synth::gen_population(&cfg).unwrap();
    let g = synth::gen_forest(&pop, &cfg).unwrap();
    let mut buf = Vec::new();
    ingest::write_events(&mut buf, &g.events).unwrap();
    let parsed = ingest::parse_events(buf.as_slice(), ParseOptions { lenient: false }).unwrap();
    assert_eq!(parsed.events, g.events);
    assert!(parsed.skipped.is_empty());
    let b = build_forest(&parsed.events, None, RootWindow::UNBOUNDED);
    assert_eq!(b.diagnostics.dropped_self_quotes, 0);
    let nodes: usize = b.trees.iter().map(|t| t.size() - 1).sum();
    let quotes = g.ledger.iter().filter(|l| l.kind == ingest::TweetKind::Quote).count();
    assert_eq!(nodes, quotes);
}

/// The distributional checks hold for other seeds, too.
#[test]
fn effects_survive_reseeding() {
    for seed in [11u64, 12] {
        let run = |lambda: f64| {
            let cfg = SynthConfig {
                seed,
                lambda,
                ..Default::default()
            };
            let pop = synth::gen_population(&cfg).unwrap();
            let g = synth::gen_forest(&pop, &cfg).unwrap();
            let trees = build_forest(&g.events, None, RootWindow::UNBOUNDED).trees;
            let cut = SizeCutoffs::from_forest(&trees).unwrap();
            let truth = pop.truth_map();
            let (s, _) = metrics::summarize_trees(&trees, &truth, &cut, Weighting::DistinctUsers);
            (trees, truth, cut, s)
        };

        let (trees, truth, cut, s) = run(0.0);
        let c = metrics::divergence_curves(&s, DivergenceX::Rho, BinSpec::default());
        let bins: Vec<_> = c.all.bins.iter().filter(|b| b.count >= 2).collect();
        let ok = bins
            .iter()
            .filter(|b| b.mean.unwrap().abs() < 2.0 * b.std.unwrap() / (b.count as f64).sqrt())
            .count();
        assert!(ok as f64 >= 0.9 * bins.len() as f64, "seed {seed}: null {ok}/{}", bins.len());

        let recs = metrics::depth2_records(&trees, &truth, &cut, Weighting::DistinctUsers);
        let slope = common::ols_slope(&recs.iter().map(|r| (r.x(), r.y())).collect::<Vec<_>>());
        assert!((slope + 0.5).abs() <= 0.1, "seed {seed}: depth-2 slope {slope}");

        let (_, _, _, s) = run(0.8);
        let pts: Vec<(f64, f64)> = s.iter().filter_map(|s| Some((s.rho, s.divergence()?))).collect();
        let slope = common::ols_slope(&pts);
        assert!(slope < -0.1, "seed {seed}: counter-public slope {slope}");
        let c = metrics::divergence_curves(&s, DivergenceX::Rho, BinSpec::default());
        for b in c.all.populated() {
            let (x, m) = (b.x_mean.unwrap(), b.mean.unwrap());
            if x.abs() > 0.5 {
                assert!(m.abs() <= x.abs(), "seed {seed}: bin at {x}: {m}");
            }
        }
    }
}

#[test]
fn probit_misspecification_still_recovers_order() {
    let cfg = SynthConfig {
        link: Link::Probit,
        ..pop_cfg(1000, 100, 1.0)
    };
    let pop = synth::gen_population(&cfg).unwrap();
    let m = synth::gen_follow_matrix(&pop, &cfg);
    let phi: Vec<f64> = pop.elites.iter().map(|e| e.phi).collect();
    let fit = valence::fit_all(&m, &phi, &IpModelConfig::default()).unwrap();
    let truth = pop.truth_map();
    let (a, b): (Vec<f64>, Vec<f64>) = fit.estimates.iter().map(|e| (e.theta, truth[&e.user_id])).unzip();
    assert!(common::pearson(&a, &b) > 0.8);
}
