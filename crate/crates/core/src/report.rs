//! CSV emitters for every figure-backing table. Rows are sorted by key and
//! floats rounded to six decimals.

use std::collections::BTreeMap;
use std::io::Write;

use crate::chains::{chain_census, pingpong_histogram, CensusMode, ChainError};
use crate::csvio::{fmt_f64, fmt_opt, RowWriter};
use crate::forest::{QuoteTree, RootStats};
use crate::ids::{TweetId, UserId};
use crate::metrics::{
    Depth2Curves, DivergenceCurves, FrameTable, Frame, Heatmaps, QrCurves, UserCurves, UserSummary,
};
use crate::stats::BinnedCurve;
use crate::valence::{IpClass, IpReport};

const CURVE_COLS: [&str; 6] = ["bin_lo", "bin_hi", "count", "x_mean", "mean", "std"];

fn header(prefix: &[&'static str]) -> Vec<&'static str> {
    prefix.iter().copied().chain(CURVE_COLS).collect()
}

fn curve_rows<W: Write>(w: &mut RowWriter<W>, keys: &[&str], curve: &BinnedCurve) -> std::io::Result<()> {
    for b in &curve.bins {
        let mut row: Vec<String> = keys.iter().map(|k| k.to_string()).collect();
        row.extend([
            fmt_f64(b.lo),
            fmt_f64(b.hi),
            b.count.to_string(),
            fmt_opt(b.x_mean),
            fmt_opt(b.mean),
            fmt_opt(b.std),
        ]);
        w.row(&row)?;
    }
    Ok(())
}

pub fn write_trees_per_user<W: Write>(out: W, stats: &BTreeMap<UserId, RootStats>) -> std::io::Result<()> {
    let mut w = RowWriter::new(out, &["user_id", "n_trees", "mean_size", "max_size"])?;
    for (u, s) in stats {
        w.row(&[
            u.as_str(),
            &s.count.to_string(),
            &fmt_f64(s.mean_size),
            &s.max_size.to_string(),
        ])?;
    }
    w.finish().map(drop)
}

pub fn write_tree_table<W: Write>(out: W, trees: &[QuoteTree]) -> std::io::Result<()> {
    let mut w = RowWriter::new(out, &["tree_id", "root_user", "size", "avg_depth", "max_depth", "n_retweeters"])?;
    for t in trees {
        w.row(&[
            t.id().as_str(),
            t.root().user_id.as_str(),
            &t.size().to_string(),
            &fmt_f64(t.avg_depth()),
            &t.max_depth().to_string(),
            &t.retweeters.len().to_string(),
        ])?;
    }
    w.finish().map(drop)
}

pub fn write_coverage<W: Write>(out: W, quantiles: &[f64], cutoffs: &[usize]) -> std::io::Result<()> {
    let mut w = RowWriter::new(out, &["coverage", "size_cutoff"])?;
    for (q, c) in quantiles.iter().zip(cutoffs) {
        w.row(&[fmt_f64(*q), c.to_string()])?;
    }
    w.finish().map(drop)
}

pub fn write_chain_census<W: Write>(out: W, trees: &[QuoteTree]) -> std::io::Result<()> {
    let paths = chain_census(trees, CensusMode::Paths);
    let nodes = chain_census(trees, CensusMode::Nodes);
    let mut w = RowWriter::new(out, &["depth", "chains", "nodes"])?;
    for (d, c) in &paths {
        w.row(&[d.to_string(), c.to_string(), nodes.get(d).copied().unwrap_or(0).to_string()])?;
    }
    w.finish().map(drop)
}

pub fn write_pingpong<W: Write>(out: W, trees: &[QuoteTree], windows: &[usize]) -> Result<(), PingPongWriteError> {
    let mut w = RowWriter::new(out, &["depth", "unique_quoters", "count", "window"])?;
    for &win in windows {
        for ((depth, uniq), count) in pingpong_histogram(trees, win)? {
            w.row(&[depth.to_string(), uniq.to_string(), count.to_string(), win.to_string()])?;
        }
    }
    w.finish()?;
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum PingPongWriteError {
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn write_ip_distribution<W: Write>(out: W, report: &IpReport) -> std::io::Result<()> {
    let mut w = RowWriter::new(out, &["population", "kind", "x", "value"])?;
    let mut pops = vec![("all", &report.all)];
    if let Some(r) = &report.roots {
        pops.push(("roots", r));
    }
    for (name, d) in pops {
        for (x, v) in report.grid.iter().zip(&d.kde) {
            w.row(&[name, "kde", &fmt_f64(*x), &fmt_f64(*v)])?;
        }
        for (x, v) in &d.ecdf {
            w.row(&[name, "ecdf", &fmt_f64(*x), &fmt_f64(*v)])?;
        }
    }
    w.finish().map(drop)
}

pub fn write_qr<W: Write>(out: W, c: &QrCurves) -> std::io::Result<()> {
    let mut w = RowWriter::new(out, &header(&["series", "size_class"]))?;
    curve_rows(&mut w, &["R", "all"], &c.retweet)?;
    curve_rows(&mut w, &["Q", "all"], &c.quote)?;
    for (class, r, q) in &c.by_size {
        curve_rows(&mut w, &["R", class.as_str()], r)?;
        curve_rows(&mut w, &["Q", class.as_str()], q)?;
    }
    w.finish().map(drop)
}

pub fn write_divergence<W: Write>(out: W, curves: &[DivergenceCurves]) -> std::io::Result<()> {
    let mut w = RowWriter::new(out, &header(&["x_kind", "root_class"]))?;
    for c in curves {
        curve_rows(&mut w, &[c.x.as_str(), "all"], &c.all)?;
        for (class, curve) in &c.by_root_class {
            curve_rows(&mut w, &[c.x.as_str(), class.as_str()], curve)?;
        }
    }
    w.finish().map(drop)
}

pub fn write_users<W: Write>(out: W, users: &[UserSummary]) -> std::io::Result<()> {
    let mut w = RowWriter::new(
        out,
        &[
            "user_id",
            "theta",
            "n_retweets",
            "n_quotes",
            "mean_rho_retweeted",
            "mean_rho_quoted",
            "divergence",
            "diff_q1",
            "diff_median",
            "diff_q3",
        ],
    )?;
    for u in users {
        let q = u.diff_quartiles;
        w.row(&[
            u.user_id.to_string(),
            fmt_f64(u.theta),
            u.n_retweets.to_string(),
            u.n_quotes.to_string(),
            fmt_opt(u.mean_rho_retweeted),
            fmt_opt(u.mean_rho_quoted),
            fmt_opt(u.divergence),
            fmt_opt(q.map(|q| q[0])),
            fmt_opt(q.map(|q| q[1])),
            fmt_opt(q.map(|q| q[2])),
        ])?;
    }
    w.finish().map(drop)
}

pub fn write_user_curves<W: Write>(out: W, c: &UserCurves) -> std::io::Result<()> {
    let mut w = RowWriter::new(out, &header(&["series"]))?;
    curve_rows(&mut w, &["retweeted"], &c.retweeted)?;
    curve_rows(&mut w, &["quoted"], &c.quoted)?;
    curve_rows(&mut w, &["divergence"], &c.divergence)?;
    w.finish().map(drop)
}

pub fn write_depth2<W: Write>(out: W, c: &Depth2Curves) -> std::io::Result<()> {
    let mut w = RowWriter::new(out, &header(&["size_class"]))?;
    curve_rows(&mut w, &["all"], &c.all)?;
    for (class, curve) in &c.by_size {
        curve_rows(&mut w, &[class.as_str()], curve)?;
    }
    w.finish().map(drop)
}

pub fn write_heatmap<W: Write>(out: W, h: &Heatmaps) -> std::io::Result<()> {
    let mut w = RowWriter::new(out, &["panel", "class", "x_lo", "x_hi", "y_lo", "y_hi", "count"])?;
    let s = &h.spec;
    for (class, grid) in &h.cells {
        for (di, row) in grid.iter().enumerate() {
            let y_lo = s.depth_lo + di as f64 * s.depth_width;
            let y_hi = if di + 1 < s.depth_bins {
                fmt_f64(y_lo + s.depth_width)
            } else {
                String::new()
            };
            for (si, count) in row.iter().enumerate() {
                let (x_lo, x_hi) = s.size_edges(si);
                w.row(&[
                    "size_depth".to_string(),
                    class.as_str().to_string(),
                    x_lo.to_string(),
                    x_hi.map(|v| v.to_string()).unwrap_or_default(),
                    fmt_f64(y_lo),
                    y_hi.clone(),
                    count.to_string(),
                ])?;
            }
        }
    }
    for (class, counts) in &h.rho_by_size {
        for (i, count) in counts.iter().enumerate() {
            w.row(&[
                "rho_by_size".to_string(),
                class.as_str().to_string(),
                fmt_f64(s.rho_bins.edge(i)),
                fmt_f64(s.rho_bins.edge(i + 1)),
                String::new(),
                String::new(),
                count.to_string(),
            ])?;
        }
    }
    w.finish().map(drop)
}

pub fn write_frame_tables<W: Write>(out: W, tables: &BTreeMap<TweetId, FrameTable>) -> std::io::Result<()> {
    let mut w = RowWriter::new(out, &["tree_id", "frame", "class", "count", "percent"])?;
    for (tree, t) in tables {
        for f in Frame::ALL {
            w.row(&[tree.as_str(), f.as_str(), "total", &t.total(f).to_string(), ""])?;
            for c in IpClass::ALL {
                w.row(&[
                    tree.as_str(),
                    f.as_str(),
                    c.as_str(),
                    &t.count(f, c).to_string(),
                    &fmt_opt(t.percent(f, c)),
                ])?;
            }
        }
    }
    w.finish().map(drop)
}
