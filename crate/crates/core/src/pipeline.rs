//! File-to-file pipeline stages: `synth`, `trees`, `ip`, `metrics`.
//!
//! Each stage reads its inputs, writes its outputs into one directory and
//! leaves a `manifest.json` there describing inputs, parameters, row counts
//! and diagnostics. Stages are pure functions of their inputs and parameters.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::forest::{self, ForestError, RootWindow, SizeCutoffs};
use crate::ingest::{self, IngestError, ParseOptions, PerimeterConfig};
use crate::metrics::{self, DivergenceX, HeatmapSpec, MetricsError, Weighting};
use crate::report::{self, PingPongWriteError};
use crate::stats::{self, BinSpec, StatsError};
use crate::synth::{self, SynthConfig, SynthError};
use crate::valence::{self, FollowMatrix, IpModelConfig, ValenceError};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("missing input `{0}`")]
    MissingInput(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Valence(#[from] ValenceError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    PingPong(#[from] PingPongWriteError),
    #[error("thread pool: {0}")]
    Threads(String),
}

type Result<T> = std::result::Result<T, PipelineError>;

#[derive(Clone, Debug, Serialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub tool_version: String,
    pub inputs: Vec<InputRecord>,
    pub params: Value,
    pub config_hash: String,
    pub row_counts: BTreeMap<String, u64>,
    pub diagnostics: Value,
    pub warnings: Vec<String>,
    pub outputs: Vec<String>,
}

impl Manifest {
    fn new(command: &str, params: Value) -> Self {
        let config_hash = hex(&Sha256::digest(params.to_string().as_bytes()));
        Self {
            command: command.to_owned(),
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            inputs: Vec::new(),
            params,
            config_hash,
            row_counts: BTreeMap::new(),
            diagnostics: Value::Null,
            warnings: Vec::new(),
            outputs: Vec::new(),
        }
    }

    fn input(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).map_err(|source| io_err(path, source))?;
        self.inputs.push(InputRecord {
            path: path.display().to_string(),
            sha256: hex(&Sha256::digest(&bytes)),
        });
        Ok(())
    }

    fn write(mut self, out: &Path) -> Result<Manifest> {
        self.outputs.sort();
        let path = out.join(MANIFEST);
        let text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(|source| io_err(&path, source))?;
        Ok(self)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn io_err(path: &Path, source: std::io::Error) -> PipelineError {
    PipelineError::Io {
        path: path.to_owned(),
        source,
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    if !path.exists() {
        return Err(PipelineError::MissingInput(path.to_owned()));
    }
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| io_err(path, source))
}

/// Creates `out/name`, records it in the manifest and hands the writer to `f`.
fn emit<E>(
    out: &Path,
    name: &str,
    manifest: &mut Manifest,
    f: impl FnOnce(&mut BufWriter<File>) -> std::result::Result<(), E>,
) -> Result<()>
where
    PipelineError: From<E>,
{
    let path = out.join(name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| io_err(parent, source))?;
    }
    let file = File::create(&path).map_err(|source| io_err(&path, source))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush().map_err(|source| io_err(&path, source))?;
    manifest.outputs.push(name.to_owned());
    Ok(())
}

fn emit_inner(
    out: &Path,
    name: &str,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(out.join(name))?);
    f(&mut w)?;
    w.flush()
}

impl From<std::io::Error> for PipelineError {
    fn from(source: std::io::Error) -> Self {
        PipelineError::Io {
            path: PathBuf::new(),
            source,
        }
    }
}

fn prepare_out(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|source| io_err(out, source))
}

/// Runs `f` inside a rayon pool with `threads` workers (`None` = all cores).
#[cfg(feature = "parallel")]
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    let pool = b.build().map_err(|e| PipelineError::Threads(e.to_string()))?;
    Ok(pool.install(f))
}

#[cfg(not(feature = "parallel"))]
pub fn with_threads<T: Send>(_threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    Ok(f())
}

pub mod files {
    pub const EVENTS: &str = "events.ndjson";
    pub const ELITES: &str = "elites.csv";
    pub const FOLLOWS: &str = "follows.csv";
    pub const TRUTH_USERS: &str = "truth_users.csv";
    pub const TRUTH_EDGES: &str = "truth_edges.csv";
    pub const FOREST: &str = "forest.csv";
    pub const RETWEETERS: &str = "retweeters.csv";
    pub const IP: &str = "ip.csv";
}

pub fn run_synth(cfg: &SynthConfig, out: &Path) -> Result<Manifest> {
    cfg.validate()?;
    prepare_out(out)?;
    let mut m = Manifest::new("synth", serde_json::to_value(cfg).expect("config serializes"));
    let pop = synth::gen_population(cfg)?;
    let follows = synth::gen_follow_matrix(&pop, cfg);
    let forest = synth::gen_forest(&pop, cfg)?;
    emit(out, files::EVENTS, &mut m, |w| ingest::write_events(w, &forest.events))?;
    emit(out, files::ELITES, &mut m, |w| synth::write_elites(w, &pop))?;
    emit(out, files::FOLLOWS, &mut m, |w| synth::write_follows(w, &follows))?;
    emit(out, files::TRUTH_USERS, &mut m, |w| synth::write_truth_users(w, &pop))?;
    emit(out, files::TRUTH_EDGES, &mut m, |w| synth::write_ledger(w, &forest.ledger))?;
    m.row_counts.insert("users".into(), pop.users.len() as u64);
    m.row_counts.insert("elites".into(), pop.elites.len() as u64);
    m.row_counts.insert("follow_edges".into(), follows.rows.iter().map(|r| r.len() as u64).sum());
    m.row_counts.insert("events".into(), forest.events.len() as u64);
    m.row_counts.insert("ledger_rows".into(), forest.ledger.len() as u64);
    m.write(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct TreesOptions {
    pub events: PathBuf,
    /// User statistics for the perimeter; `None` admits every user.
    pub users: Option<PathBuf>,
    pub perimeter: PerimeterConfig,
    pub window: RootWindow,
    pub lenient: bool,
    pub coverage: Vec<f64>,
    pub pingpong_windows: Vec<usize>,
}

impl TreesOptions {
    pub fn new(events: impl Into<PathBuf>) -> Self {
        Self {
            events: events.into(),
            users: None,
            perimeter: PerimeterConfig::default(),
            window: RootWindow::UNBOUNDED,
            lenient: false,
            coverage: vec![0.5, 0.75, 0.9, 1.0],
            pingpong_windows: vec![3, 5],
        }
    }
}

pub fn run_trees(opts: &TreesOptions, out: &Path) -> Result<Manifest> {
    prepare_out(out)?;
    let mut m = Manifest::new("trees", serde_json::to_value(opts).expect("options serialize"));
    m.input(&opts.events)?;
    let parsed = ingest::parse_events(open(&opts.events)?, ParseOptions { lenient: opts.lenient })?;
    let mut threshold = None;
    let perimeter = match &opts.users {
        Some(path) => {
            m.input(path)?;
            let users = ingest::read_user_stats(open(path)?, &path.display().to_string())?;
            let p = ingest::apply_perimeter(&users, &opts.perimeter)?;
            m.row_counts.insert("user_stats".into(), users.len() as u64);
            m.row_counts.insert("perimeter_users".into(), p.users.len() as u64);
            threshold = Some(p.follower_threshold);
            Some(p.users)
        }
        None => None,
    };
    let built = forest::build_forest(&parsed.events, perimeter.as_ref(), opts.window);
    let trees = &built.trees;
    if parsed.events.is_empty() {
        m.warnings.push("event file holds no events; forest is empty".into());
    }
    for (line, reason) in &parsed.skipped {
        m.warnings.push(format!("skipped line {line}: {reason}"));
    }

    emit(out, files::FOREST, &mut m, |nodes| {
        emit_inner(out, files::RETWEETERS, |rts| forest::write_forest(trees, &mut *nodes, rts))
    })?;
    m.outputs.push(files::RETWEETERS.to_owned());
    emit(out, "fig1_trees.csv", &mut m, |w| report::write_tree_table(w, trees))?;
    emit(out, "fig1_trees_per_user.csv", &mut m, |w| {
        report::write_trees_per_user(w, &forest::trees_per_user(trees))
    })?;
    if trees.is_empty() {
        m.warnings.push("no trees; coverage cutoffs skipped".into());
    } else {
        let cutoffs = forest::size_coverage_thresholds(trees, &opts.coverage)?;
        emit(out, "fig1_coverage.csv", &mut m, |w| report::write_coverage(w, &opts.coverage, &cutoffs))?;
    }
    emit(out, "fig2_chain_census.csv", &mut m, |w| report::write_chain_census(w, trees))?;
    emit(out, "fig2_pingpong.csv", &mut m, |w| report::write_pingpong(w, trees, &opts.pingpong_windows))?;

    m.row_counts.insert("events".into(), parsed.events.len() as u64);
    m.row_counts.insert("blank_lines".into(), parsed.blank_lines);
    m.row_counts.insert("skipped_lines".into(), parsed.skipped.len() as u64);
    m.row_counts.insert("trees".into(), trees.len() as u64);
    m.row_counts.insert("nodes".into(), trees.iter().map(|t| t.size() as u64).sum());
    m.diagnostics = serde_json::to_value(&built.diagnostics).expect("diagnostics serialize");
    m.diagnostics["follower_threshold"] = json!(threshold);
    m.write(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct IpOptions {
    pub follows: PathBuf,
    pub elites: PathBuf,
    pub model: IpModelConfig,
    /// Forest dump directory; when given, root users get their own density series.
    pub forest_dir: Option<PathBuf>,
    /// Synthetic ground truth; when given, recovery correlation goes in the manifest.
    pub truth: Option<PathBuf>,
    /// Recorded for provenance. The estimator itself is deterministic.
    pub seed: u64,
}

impl IpOptions {
    pub fn new(follows: impl Into<PathBuf>, elites: impl Into<PathBuf>) -> Self {
        Self {
            follows: follows.into(),
            elites: elites.into(),
            model: IpModelConfig::default(),
            forest_dir: None,
            truth: None,
            seed: 0,
        }
    }
}

fn root_users(forest_dir: &Path, m: &mut Manifest) -> Result<BTreeSet<crate::UserId>> {
    let trees = load_forest(forest_dir, m)?;
    Ok(trees.iter().map(|t| t.root().user_id.clone()).collect())
}

fn load_forest(dir: &Path, m: &mut Manifest) -> Result<Vec<forest::QuoteTree>> {
    let nodes = dir.join(files::FOREST);
    let rts = dir.join(files::RETWEETERS);
    let nodes_in = open(&nodes)?;
    let rts_in = open(&rts)?;
    m.input(&nodes)?;
    m.input(&rts)?;
    Ok(forest::read_forest(
        nodes_in,
        &nodes.display().to_string(),
        rts_in,
        &rts.display().to_string(),
    )?)
}

pub fn run_ip(opts: &IpOptions, out: &Path) -> Result<Manifest> {
    opts.model.validate()?;
    prepare_out(out)?;
    let mut m = Manifest::new("ip", serde_json::to_value(opts).expect("options serialize"));
    m.input(&opts.elites)?;
    m.input(&opts.follows)?;
    let elites = valence::read_elites(open(&opts.elites)?, &opts.elites.display().to_string())?;
    let follows = valence::read_follows(open(&opts.follows)?, &opts.follows.display().to_string())?;
    let ids: Vec<crate::UserId> = elites.iter().map(|e| e.0.clone()).collect();
    let phi: Vec<f64> = elites.iter().map(|e| e.1).collect();
    let matrix = FollowMatrix::from_edges(&ids, follows.iter().map(|(u, e)| (u, e)))?;
    let fit = valence::fit_all(&matrix, &phi, &opts.model)?;
    emit(out, files::IP, &mut m, |w| valence::write_estimates(w, &fit.estimates))?;

    let roots = match &opts.forest_dir {
        Some(dir) => root_users(dir, &mut m)?,
        None => BTreeSet::new(),
    };
    if fit.estimates.len() >= 2 {
        let rep = valence::ip_report(&fit.estimates, &roots)?;
        emit(out, "fig3_ipdist.csv", &mut m, |w| report::write_ip_distribution(w, &rep))?;
    } else {
        m.warnings.push("fewer than 2 estimates; fig3_ipdist.csv skipped".into());
    }

    let mut diag = json!({
        "follow_edges": follows.len(),
        "unknown_elite_edges": matrix.unknown_elite_edges,
        "users_below_min_elites": fit.below_min_elites,
        "not_converged": fit.estimates.iter().filter(|e| !e.converged).count(),
        "unfollowed_elites": fit.unfollowed_elites.len(),
    });
    for e in &fit.unfollowed_elites {
        m.warnings.push(format!("elite `{e}` has no followers; alpha uses the smoothed floor"));
    }
    if let Some(truth) = &opts.truth {
        m.input(truth)?;
        let truth_map = read_truth(truth)?;
        let (a, b): (Vec<f64>, Vec<f64>) = fit
            .estimates
            .iter()
            .filter_map(|e| Some((e.theta, *truth_map.get(&e.user_id)?)))
            .unzip();
        diag["recovery_pearson"] = json!(stats::pearson(&a, &b).map(|r| (r * 1e6).round() / 1e6));
        diag["recovery_n"] = json!(a.len());
    }
    m.row_counts.insert("elites".into(), ids.len() as u64);
    m.row_counts.insert("users".into(), matrix.n_users() as u64);
    m.row_counts.insert("estimates".into(), fit.estimates.len() as u64);
    m.diagnostics = diag;
    m.write(out)
}

/// Reads `truth_users.csv` as a valence map.
pub fn read_truth(path: &Path) -> Result<metrics::IpMap> {
    let mut map = metrics::IpMap::new();
    crate::csvio::read_records(open(path)?, &path.display().to_string(), &["user_id", "theta", "beta"], |_, rec| {
        map.insert(crate::UserId::new(&rec[0]), crate::csvio::parse_f64(&rec[1], "theta")?);
        Ok(())
    })
    .map_err(ValenceError::from)?;
    Ok(map)
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricsOptions {
    pub forest_dir: PathBuf,
    /// `ip.csv` from the ip stage, or a `truth_users.csv` from synth.
    pub ip: PathBuf,
    pub annotations: Option<PathBuf>,
    pub bins: BinSpec,
    pub weighting: Weighting,
    pub coverage: (f64, f64),
    /// Number of largest trees exported as DOT.
    pub dot_top: usize,
    pub dot_trees: Vec<String>,
}

impl MetricsOptions {
    pub fn new(forest_dir: impl Into<PathBuf>, ip: impl Into<PathBuf>) -> Self {
        Self {
            forest_dir: forest_dir.into(),
            ip: ip.into(),
            annotations: None,
            bins: BinSpec::default(),
            weighting: Weighting::DistinctUsers,
            coverage: (0.75, 0.90),
            dot_top: 3,
            dot_trees: Vec::new(),
        }
    }
}

fn read_ip_any(path: &Path) -> Result<metrics::IpMap> {
    let text = fs::read_to_string(path).map_err(|source| io_err(path, source))?;
    let header = text.lines().next().unwrap_or_default();
    if header.trim() == "user_id,theta,beta" {
        read_truth(path)
    } else {
        Ok(valence::read_ip_map(text.as_bytes(), &path.display().to_string())?)
    }
}

pub fn run_metrics(opts: &MetricsOptions, out: &Path) -> Result<Manifest> {
    opts.bins.validate()?;
    for p in [&opts.forest_dir, &opts.ip] {
        if !p.exists() {
            return Err(PipelineError::MissingInput(p.clone()));
        }
    }
    prepare_out(out)?;
    let mut m = Manifest::new("metrics", serde_json::to_value(opts).expect("options serialize"));
    let trees = load_forest(&opts.forest_dir, &mut m)?;
    m.input(&opts.ip)?;
    let ip = read_ip_any(&opts.ip)?;

    let cutoffs = if trees.is_empty() {
        m.warnings.push("empty forest; size classes default to (2, 2)".into());
        SizeCutoffs::new(2, 2)?
    } else {
        let c = forest::size_coverage_thresholds(&trees, &[opts.coverage.0, opts.coverage.1])?;
        SizeCutoffs::new(c[0], c[1])?
    };
    let (summaries, sdiag) = metrics::summarize_trees(&trees, &ip, &cutoffs, opts.weighting);

    let roots: BTreeSet<crate::UserId> = trees.iter().map(|t| t.root().user_id.clone()).collect();
    let estimates: Vec<valence::IdealPointEstimate> = ip
        .iter()
        .map(|(u, &theta)| valence::IdealPointEstimate {
            user_id: u.clone(),
            theta,
            beta: 0.0,
            n_elites_followed: 0,
            converged: true,
            neg_log_posterior: 0.0,
        })
        .collect();
    match valence::ip_report(&estimates, &roots) {
        Ok(rep) => emit(out, "fig3_ipdist.csv", &mut m, |w| report::write_ip_distribution(w, &rep))?,
        Err(e) => m.warnings.push(format!("fig3_ipdist.csv skipped: {e}")),
    }
    emit(out, "fig4_heatmap.csv", &mut m, |w| {
        report::write_heatmap(w, &metrics::heatmaps(&summaries, HeatmapSpec::default()))
    })?;
    emit(out, "fig5_qr.csv", &mut m, |w| report::write_qr(w, &metrics::qr_curves(&summaries, opts.bins)))?;
    let div: Vec<_> = DivergenceX::ALL
        .iter()
        .map(|&x| metrics::divergence_curves(&summaries, x, opts.bins))
        .collect();
    emit(out, "fig6_divergence.csv", &mut m, |w| report::write_divergence(w, &div))?;
    let (users, user_curves) = metrics::user_summaries(&trees, &ip, opts.bins);
    emit(out, "fig7_users.csv", &mut m, |w| report::write_users(w, &users))?;
    emit(out, "fig7_curves.csv", &mut m, |w| report::write_user_curves(w, &user_curves))?;
    let d2 = metrics::depth2_records(&trees, &ip, &cutoffs, opts.weighting);
    emit(out, "fig8_depth2.csv", &mut m, |w| {
        report::write_depth2(w, &metrics::depth2_curves(&d2, opts.bins))
    })?;

    let mut annotation_skips = 0;
    match &opts.annotations {
        Some(path) => {
            m.input(path)?;
            let ann = metrics::read_annotations(open(path)?, &path.display().to_string())?;
            let (tables, skipped) = metrics::frame_tables_by_tree(&ann, &ip, &trees);
            annotation_skips = skipped;
            if skipped > 0 {
                m.warnings.push(format!("{skipped} annotations did not resolve to a known-IP quote"));
            }
            emit(out, "table1_frames.csv", &mut m, |w| report::write_frame_tables(w, &tables))?;
        }
        None => m.warnings.push("no annotations given; table1_frames.csv skipped".into()),
    }

    let mut dot_ids: Vec<&forest::QuoteTree> = Vec::new();
    let mut by_size: Vec<&forest::QuoteTree> = trees.iter().collect();
    by_size.sort_by(|a, b| b.size().cmp(&a.size()).then_with(|| a.id().cmp(b.id())));
    dot_ids.extend(by_size.into_iter().take(opts.dot_top));
    for id in &opts.dot_trees {
        match trees.iter().find(|t| t.id().as_str() == id) {
            Some(t) if !dot_ids.iter().any(|d| d.id() == t.id()) => dot_ids.push(t),
            Some(_) => {}
            None => m.warnings.push(format!("DOT export: unknown tree `{id}`")),
        }
    }
    for t in dot_ids {
        let name = format!("dot/tree_{}.dot", sanitize(t.id().as_str()));
        let text = metrics::export_tree_dot(t, &ip);
        emit(out, &name, &mut m, |w| w.write_all(text.as_bytes()))?;
    }

    m.row_counts.insert("trees".into(), trees.len() as u64);
    m.row_counts.insert("known_rho_trees".into(), summaries.len() as u64);
    m.row_counts.insert("ip_users".into(), ip.len() as u64);
    m.row_counts.insert("user_summaries".into(), users.len() as u64);
    m.row_counts.insert("depth2_records".into(), d2.len() as u64);
    let mut diag = serde_json::to_value(&sdiag).expect("diagnostics serialize");
    diag["size_cutoffs"] = json!([cutoffs.small, cutoffs.medium]);
    diag["annotations_skipped"] = json!(annotation_skips);
    // dataset facts, not contracts
    let stds: Vec<f64> = div[0].all.populated().filter_map(|b| b.std).collect();
    diag["divergence_rho_mean_bin_std"] = json!(stats::mean(&stds).map(|s| (s * 1e6).round() / 1e6));
    m.diagnostics = diag;
    m.write(out)
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}
