use quotetrees_web::{depth2_demo, divergence_demo, ip_posterior};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn divergence_slope_turns_negative_with_cross_cutting_quotes() {
    let null = parse(divergence_demo(0.0, 0.4, 1));
    let cross = parse(divergence_demo(0.8, 0.4, 1));
    let (a, b) = (null["slope"].as_f64().unwrap(), cross["slope"].as_f64().unwrap());
    assert!(b < -0.1, "{b}");
    assert!(b < a, "{b} vs {a}");
    assert!(!cross["curve"].as_array().unwrap().is_empty());
}

#[test]
fn depth2_slope_follows_kappa_and_stars_have_depth_one() {
    let r = parse(depth2_demo(0.5, 0.3, 2));
    let slope = r["slope"].as_f64().unwrap();
    assert!((slope + 0.5).abs() < 0.2, "{slope}");
    let flat = parse(depth2_demo(0.5, 0.0, 2));
    assert_eq!(flat["mean_depth"].as_f64(), Some(1.0));
    assert_eq!(flat["records"].as_u64(), Some(0));
}

#[test]
fn bad_parameters_come_back_as_errors() {
    assert!(parse(divergence_demo(0.5, -1.0, 1))["error"].is_string());
    assert!(parse(ip_posterior(vec![0.0, 1.0], vec![1], 1.0, 1.0))["error"].is_string());
    assert!(parse(ip_posterior(vec![0.0], vec![1], 0.0, 1.0))["error"].is_string());
}

#[test]
fn posterior_peak_matches_fit() {
    let phi: Vec<f64> = (0..21).map(|j| -2.0 + 0.2 * j as f64).collect();
    let followed: Vec<u8> = phi.iter().map(|p| u8::from((p - 0.6).abs() < 0.7)).collect();
    let r = parse(ip_posterior(phi, followed, 1.0, 1.0));
    let theta = r["theta"].as_f64().unwrap();
    assert!((theta - 0.6).abs() < 0.3, "{theta}");
    let grid: Vec<f64> = r["grid"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let prof: Vec<f64> = r["profile"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let (i, top) = prof.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    assert_eq!(*top, 0.0);
    assert!((grid[i] - theta).abs() <= 0.02, "{} vs {theta}", grid[i]);
}
