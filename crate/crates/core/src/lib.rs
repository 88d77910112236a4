//! Quote-cascade analysis toolkit.
//!
//! The crate is organised as a staged pipeline:
//!
//! - [`ingest`]: parse tweet-event streams and user statistics, apply the
//!   activity / visibility / language perimeter.
//! - [`forest`]: rebuild quote trees from events and measure their size and depth.
//! - [`chains`]: root-to-leaf chain census and terminal-subchain ("ping-pong") statistics.
//! - [`valence`]: anchored ideal-point estimation from a user x elite follow matrix.
//! - [`metrics`]: quote/retweet divergence curves, user-centric summaries, depth-2
//!   dynamics, heatmaps, frame tables and DOT export.
//! - [`synth`]: seeded generator of populations, follow matrices and cascades that
//!   follow the same assumptions as the estimator.
//! - [`pipeline`]: file-to-file stages used by the command-line tool.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chains;
pub mod csvio;
pub mod forest;
pub mod ids;
pub mod ingest;
pub mod metrics;
mod par;
pub mod pipeline;
pub mod report;
pub mod stats;
pub mod synth;
pub mod valence;

pub use ids::{TweetId, UserId};
