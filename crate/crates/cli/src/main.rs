use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use quotetrees::forest::RootWindow;
use quotetrees::ingest::{FollowerThreshold, PerimeterConfig};
use quotetrees::metrics::Weighting;
use quotetrees::pipeline::{self, IpOptions, Manifest, MetricsOptions, PipelineError, TreesOptions};
use quotetrees::stats::BinSpec;
use quotetrees::synth::{SynthConfig, SynthError};
use quotetrees::valence::IpModelConfig;
use serde_json::json;

const USAGE_ERROR: u8 = 1;
const DATA_ERROR: u8 = 2;

/// Quote-tree reconstruction, ideal points and quote/retweet divergence metrics.
#[derive(Debug, Parser)]
#[command(name = "quotetrees", version)]
struct Cli {
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the seed of `synth`; recorded by the other stages.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: out/<command>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic population, follow graph and event stream.
    Synth(SynthArgs),
    /// Rebuild quote trees and write size, depth and chain statistics.
    Trees(TreesArgs),
    /// Fit ideal points from the follow graph.
    Ip(IpArgs),
    /// Divergence, heatmaps, depth-2 curves, frame table and DOT exports.
    Metrics(MetricsArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// TOML config with every generator field.
    config: PathBuf,
}

#[derive(Debug, Args)]
struct TreesArgs {
    /// Events, one JSON object per line.
    events: PathBuf,
    /// Per-user statistics CSV; enables the user perimeter.
    #[arg(long)]
    users: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    min_tweets: u64,
    /// `median` or a fixed follower count.
    #[arg(long, default_value = "median", value_parser = parse_threshold)]
    follower_threshold: FollowerThreshold,
    #[arg(long, default_value_t = 0.15)]
    min_lang_share: f64,
    /// Earliest root timestamp (inclusive).
    #[arg(long)]
    window_start: Option<i64>,
    /// Latest root timestamp (inclusive).
    #[arg(long)]
    window_end: Option<i64>,
    /// Skip malformed lines instead of failing.
    #[arg(long)]
    lenient: bool,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.75, 0.9, 1.0])]
    coverage: Vec<f64>,
    /// Ping-pong window sizes.
    #[arg(long, value_delimiter = ',', default_values_t = [3, 5])]
    pingpong: Vec<usize>,
}

#[derive(Debug, Args)]
struct IpArgs {
    #[arg(long)]
    follows: PathBuf,
    #[arg(long)]
    elites: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 10)]
    min_elites: usize,
    #[arg(long, default_value_t = 0.0)]
    prior_mean_theta: f64,
    #[arg(long, default_value_t = 1.0)]
    prior_sd_theta: f64,
    #[arg(long, default_value_t = 2.0)]
    prior_sd_beta: f64,
    /// Output of `trees`; adds a root-user series to the IP density.
    #[arg(long)]
    forest: Option<PathBuf>,
    /// Ground-truth users from `synth`; adds recovery correlation to the manifest.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum WeightingArg {
    Distinct,
    Events,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    /// Output directory of `trees`.
    #[arg(long)]
    forest: PathBuf,
    /// `ip.csv` from `ip`, or `truth_users.csv` from `synth`.
    #[arg(long)]
    ip: PathBuf,
    /// Frame annotations CSV (`tweet_id,frames`).
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long, default_value_t = -2.5, allow_negative_numbers = true)]
    bin_lo: f64,
    #[arg(long, default_value_t = 2.5, allow_negative_numbers = true)]
    bin_hi: f64,
    #[arg(long, default_value_t = 0.25)]
    bin_width: f64,
    #[arg(long, value_enum, default_value_t = WeightingArg::Distinct)]
    weighting: WeightingArg,
    /// Node-coverage quantiles giving the small/medium/large size cutoffs.
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [0.75, 0.9])]
    size_quantiles: Vec<f64>,
    /// Number of largest trees exported as DOT.
    #[arg(long, default_value_t = 3)]
    dot_top: usize,
    /// Extra tree ids to export as DOT.
    #[arg(long)]
    dot_tree: Vec<String>,
}

fn parse_threshold(s: &str) -> Result<FollowerThreshold, String> {
    if s == "median" {
        return Ok(FollowerThreshold::MedianOfInput);
    }
    s.parse()
        .map(FollowerThreshold::Fixed)
        .map_err(|_| format!("expected `median` or an integer, got `{s}`"))
}

enum Failure {
    Usage(String),
    Data(PipelineError),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure::Data(e)
    }
}

fn diag(level: &str, kind: &str, command: &str, message: &str) {
    eprintln!("{}", json!({ "level": level, "kind": kind, "command": command, "message": message }));
}

fn read_config(path: &Path) -> Result<SynthConfig, PipelineError> {
    if !path.exists() {
        return Err(PipelineError::MissingInput(path.to_owned()));
    }
    let text = fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_owned(),
        source,
    })?;
    // toml already names the offending field; add the file
    SynthConfig::from_toml(&text).map_err(|e| {
        PipelineError::Synth(match e {
            SynthError::Parse(msg) => SynthError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    })
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Trees(_) => "trees",
            Command::Ip(_) => "ip",
            Command::Metrics(_) => "metrics",
        }
    }
}

fn run(cli: Cli) -> Result<(PathBuf, Manifest), Failure> {
    let name = cli.command.name();
    if cli.threads == Some(0) {
        return Err(Failure::Usage("--threads must be at least 1".into()));
    }
    let out = cli.out.clone().unwrap_or_else(|| Path::new("out").join(name));
    let m = match cli.command {
        Command::Synth(a) => {
            let mut cfg = read_config(&a.config)?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            pipeline::with_threads(cli.threads, || pipeline::run_synth(&cfg, &out))??
        }
        Command::Trees(a) => {
            let mut opts = TreesOptions::new(a.events);
            opts.users = a.users;
            opts.perimeter = PerimeterConfig {
                min_tweets: a.min_tweets,
                follower_threshold: a.follower_threshold,
                min_lang_share: a.min_lang_share,
            };
            opts.window = RootWindow {
                start: a.window_start.unwrap_or(i64::MIN),
                end: a.window_end.unwrap_or(i64::MAX),
            };
            opts.lenient = a.lenient;
            opts.coverage = a.coverage;
            opts.pingpong_windows = a.pingpong;
            pipeline::with_threads(cli.threads, || pipeline::run_trees(&opts, &out))??
        }
        Command::Ip(a) => {
            let mut opts = IpOptions::new(a.follows, a.elites);
            opts.model = IpModelConfig {
                gamma: a.gamma,
                min_elites: a.min_elites,
                prior_mean_theta: a.prior_mean_theta,
                prior_sd_theta: a.prior_sd_theta,
                prior_sd_beta: a.prior_sd_beta,
                ..IpModelConfig::default()
            };
            opts.forest_dir = a.forest;
            opts.truth = a.truth;
            opts.seed = cli.seed.unwrap_or(0);
            pipeline::with_threads(cli.threads, || pipeline::run_ip(&opts, &out))??
        }
        Command::Metrics(a) => {
            let mut opts = MetricsOptions::new(a.forest, a.ip);
            opts.annotations = a.annotations;
            opts.bins = BinSpec {
                lo: a.bin_lo,
                hi: a.bin_hi,
                width: a.bin_width,
            };
            opts.weighting = match a.weighting {
                WeightingArg::Distinct => Weighting::DistinctUsers,
                WeightingArg::Events => Weighting::Events,
            };
            opts.coverage = (a.size_quantiles[0], a.size_quantiles[1]);
            opts.dot_top = a.dot_top;
            opts.dot_trees = a.dot_tree;
            pipeline::with_threads(cli.threads, || pipeline::run_metrics(&opts, &out))??
        }
    };
    Ok((out, m))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { USAGE_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let name = cli.command.name();
    match run(cli) {
        Ok((out, m)) => {
            for w in &m.warnings {
                diag("warning", "data", name, w);
            }
            let rows: Vec<String> = m.row_counts.iter().map(|(k, v)| format!("{k}={v}")).collect();
            println!("{name}: {} files in {} ({})", m.outputs.len() + 1, out.display(), rows.join(", "));
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            diag("error", "usage", name, &msg);
            ExitCode::from(USAGE_ERROR)
        }
        Err(Failure::Data(e)) => {
            diag("error", "data", name, &e.to_string());
            ExitCode::from(DATA_ERROR)
        }
    }
}
