//! Command-line front end.
//!
//! Every command reads a flat TOML config (or the `config` object of an earlier
//! `manifest.json`), writes its data files into `--out` and finishes with a
//! `manifest.json` listing those files with their SHA-256 digests.
//!
//! Exit codes: 0 on success, 2 for configuration problems, 3 for runtime errors.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::cluster_tree::build_cluster_tree_with_initial;
use crate::clustering::{build_interaction_graph, connected_components};
use crate::combinatorics::{
    enumerate_shapes, factorial, lemma_bound_scan, linear_extensions, pair_factor, q_recurrence_bound, q_value,
    MAX_ENUMERATION_LEAVES,
};
use crate::dynamics::{simulate_replica, ConfigError, SimConfig, Trajectory};
use crate::estimator::{
    alpha_scan, alpha_scan_csv, estimate_pk, fit_geometric_ratio, replica_rng, sample_initial_configuration,
    EstimatorConfig, EstimatorError,
};
use crate::io::{read_trajectories, write_events, write_trajectories};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "dynclust", version, about = "Dynamical clusters of moving particles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML config, or a manifest.json from an earlier run.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the seed from the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a configuration and evolve it on [0, tau].
    Simulate(Common),
    /// Interaction graph and clusters of a trajectory file.
    Clusters {
        #[command(flatten)]
        common: Common,
        /// trajectories.jsonl to analyse.
        #[arg(long)]
        input: PathBuf,
    },
    /// Merge trees of every cluster in a trajectory file.
    Tree {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
    },
    /// Monte-Carlo estimate of the tagged particle's cluster-size law.
    EstimatePk {
        #[command(flatten)]
        common: Common,
        /// Worker threads; defaults to one per core.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Tree counting tables for every shape up to `nmax` leaves.
    Combinatorics {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 8)]
        nmax: usize,
    },
}

#[derive(Debug)]
pub enum CliError {
    Config { key: String, message: String },
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config { key, message } => write!(f, "config error: `{key}`: {message}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    fn runtime(context: &str, e: impl std::fmt::Display) -> Self {
        CliError::Runtime(format!("{context}: {e}"))
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config { key: e.key.to_string(), message: e.message }
    }
}

impl From<EstimatorError> for CliError {
    fn from(e: EstimatorError) -> Self {
        match e {
            EstimatorError::Config(c) => c.into(),
            other => CliError::runtime("estimate-pk", other),
        }
    }
}

pub fn main() -> i32 {
    run_from(std::env::args_os())
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(c) => cmd_simulate(&c),
        Command::Clusters { common, input } => cmd_clusters(&common, &input),
        Command::Tree { common, input } => cmd_tree(&common, &input),
        Command::EstimatePk { common, workers } => cmd_estimate_pk(&common, workers),
        Command::Combinatorics { out, nmax } => cmd_combinatorics(&out, nmax),
    }
}

/// Pulls the field name out of serde's "missing field `x`" message.
fn key_of(message: &str) -> String {
    message.split('`').nth(1).filter(|_| message.contains("missing field")).unwrap_or("config").to_string()
}

/// Raw config as JSON: either a TOML file or the `config` object of a manifest.
fn load_raw(path: &Path) -> Result<Value, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config {
        key: "config".into(),
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    let parse_err = |m: String| CliError::Config { key: key_of(&m), message: m };
    if path.extension().is_some_and(|e| e == "json") {
        let v: Value = serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?;
        return Ok(v.get("config").cloned().unwrap_or(v));
    }
    let v: toml::Value = toml::from_str(&text).map_err(|e| parse_err(e.message().to_string()))?;
    serde_json::to_value(v).map_err(|e| parse_err(e.to_string()))
}

fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let raw = load_raw(path)?;
    serde_json::from_value(raw).map_err(|e| {
        let m = e.to_string();
        CliError::Config { key: key_of(&m), message: m }
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AnalysisConfig {
    r: f64,
    tau: f64,
}

impl AnalysisConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        for (key, v) in [("r", self.r), ("tau", self.tau)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::new(key, "must be positive and finite"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EstimateFile {
    #[serde(flatten)]
    estimator: EstimatorConfig,
    /// Optional alpha grid for a scan.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha_grid: Option<Vec<f64>>,
    /// Box sides for the scan; defaults to `[L]`.
    #[serde(default, rename = "L_grid", skip_serializing_if = "Option::is_none")]
    box_grid: Option<Vec<f64>>,
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Collects output files and writes the manifest at the end.
struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
    started: f64,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::runtime(&format!("creating {}", dir.display()), e))?;
        Ok(Outputs { dir: dir.to_path_buf(), files: Vec::new(), started: unix_now() })
    }

    fn write(&mut self, name: &str, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let ctx = format!("writing {}", path.display());
        let file = File::create(&path).map_err(|e| CliError::runtime(&ctx, e))?;
        let mut w = BufWriter::new(file);
        f(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::runtime(&ctx, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn write_str(&mut self, name: &str, s: &str) -> Result<(), CliError> {
        self.write(name, |w| w.write_all(s.as_bytes()))
    }

    fn write_json(&mut self, name: &str, v: &Value) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
        s.push('\n');
        self.write_str(name, &s)
    }

    fn finish(self, command: &str, config: Value, seed: Option<u64>) -> Result<(), CliError> {
        let mut outputs = Vec::new();
        for name in &self.files {
            let path = self.dir.join(name);
            let bytes = fs::read(&path).map_err(|e| CliError::runtime(&format!("reading {}", path.display()), e))?;
            outputs.push(json!({ "file": name, "sha256": hex(&Sha256::digest(&bytes)) }));
        }
        let manifest = json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": seed,
            "config": config,
            "started": self.started,
            "finished": unix_now(),
            "outputs": outputs,
        });
        let path = self.dir.join("manifest.json");
        let mut s = serde_json::to_string_pretty(&manifest).expect("json values serialize");
        s.push('\n');
        fs::write(&path, s).map_err(|e| CliError::runtime(&format!("writing {}", path.display()), e))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("config serializes")
}

fn cmd_simulate(c: &Common) -> Result<(), CliError> {
    let mut config: SimConfig = load(&c.config)?;
    if let Some(s) = c.seed {
        config.seed = s;
    }
    config.validate()?;
    let mut rng = replica_rng(config.seed, 0);
    let initial = sample_initial_configuration(&config, &mut rng);
    let (trajs, events) =
        simulate_replica(&config, &initial, &mut rng).map_err(|e| CliError::runtime("simulate", e))?;
    let mut out = Outputs::new(&c.out)?;
    out.write("trajectories.jsonl", |w| write_trajectories(w, &trajs).map_err(std::io::Error::other))?;
    out.write("events.jsonl", |w| write_events(w, &events).map_err(std::io::Error::other))?;
    out.finish("simulate", to_json(&config), Some(config.seed))
}

fn read_input(path: &Path, tau: f64) -> Result<Vec<Trajectory>, CliError> {
    let file = File::open(path).map_err(|e| CliError::runtime(&format!("opening {}", path.display()), e))?;
    read_trajectories(BufReader::new(file), tau).map_err(|e| CliError::runtime(&path.display().to_string(), e))
}

fn load_analysis(c: &Common) -> Result<AnalysisConfig, CliError> {
    let config: AnalysisConfig = load(&c.config)?;
    config.validate()?;
    Ok(config)
}

fn cmd_clusters(c: &Common, input: &Path) -> Result<(), CliError> {
    let config = load_analysis(c)?;
    let trajs = read_input(input, config.tau)?;
    let graph = build_interaction_graph(&trajs, config.r, config.tau);
    let partition = connected_components(&graph);
    let doc = json!({
        "vertices": graph.vertices,
        "edges": graph.edges,
        "components": partition.components,
        "clusters": partition.clusters(),
    });
    let mut out = Outputs::new(&c.out)?;
    out.write_json("clusters.json", &doc)?;
    out.finish("clusters", to_json(&config), None)
}

fn cmd_tree(c: &Common, input: &Path) -> Result<(), CliError> {
    let config = load_analysis(c)?;
    let trajs = read_input(input, config.tau)?;
    let graph = build_interaction_graph(&trajs, config.r, config.tau);
    let partition = connected_components(&graph);
    let by_id: std::collections::HashMap<usize, &Trajectory> = trajs.iter().map(|t| (t.id, t)).collect();
    let mut trees = Vec::new();
    for members in partition.clusters() {
        let sub: Vec<Trajectory> = members.iter().map(|id| by_id[id].clone()).collect();
        let tree = build_cluster_tree_with_initial(&sub, config.r, config.tau)
            .map_err(|e| CliError::runtime(&format!("cluster {}", members[0]), e))?;
        trees.push(json!({
            "cluster": members[0],
            "members": members,
            "leaves": tree.leaves,
            "merges": tree.merges.len(),
            "shape": tree.shape().to_string(),
            "newick": tree.newick(),
            "tree": tree.to_json(),
        }));
    }
    let mut out = Outputs::new(&c.out)?;
    out.write_json("trees.json", &Value::Array(trees))?;
    out.finish("tree", to_json(&config), None)
}

fn cmd_estimate_pk(c: &Common, workers: Option<usize>) -> Result<(), CliError> {
    let mut file: EstimateFile = load(&c.config)?;
    if let Some(s) = c.seed {
        file.estimator.sim.seed = s;
    }
    if workers == Some(0) {
        return Err(CliError::Config { key: "workers".into(), message: "must be at least 1".into() });
    }
    let cfg = &file.estimator;
    cfg.validate()?;
    let clock = Instant::now();
    let table = estimate_pk(cfg, workers)?;
    let fit = fit_geometric_ratio(&table);
    let mut out = Outputs::new(&c.out)?;
    out.write_str("pk.csv", &table.to_csv())?;
    if let Some(alphas) = &file.alpha_grid {
        let sides = file.box_grid.clone().unwrap_or_else(|| vec![cfg.sim.box_side]);
        let rows = alpha_scan(cfg, alphas, &sides, workers)?;
        let k_cols = rows.iter().map(|r| r.table.max_k()).max().unwrap_or(0).min(10);
        out.write_str("alpha_scan.csv", &alpha_scan_csv(&rows, k_cols))?;
    }
    let summary = json!({
        "replicas": table.replicas,
        "recorded": table.recorded(),
        "boundary_discards": table.boundary_discards,
        "initial_contact": table.initial_contact,
        "initial_contact_leaves": table.initial_contact_leaves,
        "discard_fraction": table.discard_fraction(),
        "density": cfg.sim.density(),
        "fit": match &fit {
            Ok(f) => to_json(f),
            Err(e) => json!({ "error": e.to_string() }),
        },
        "runtime_seconds": clock.elapsed().as_secs_f64(),
    });
    out.write_json("summary.json", &summary)?;
    out.finish("estimate-pk", to_json(&file), Some(cfg.sim.seed))
}

fn cmd_combinatorics(out_dir: &Path, nmax: usize) -> Result<(), CliError> {
    if nmax == 0 || nmax > MAX_ENUMERATION_LEAVES {
        return Err(CliError::Config {
            key: "nmax".into(),
            message: format!("must be in 1..={MAX_ENUMERATION_LEAVES}"),
        });
    }
    let mut csv = String::from("n,shape_id,shape,b,d,q,bound,ratio\n");
    for n in 1..=nmax {
        let shapes = enumerate_shapes(n).map_err(|e| CliError::runtime("combinatorics", e))?;
        let nf = factorial(n);
        for (k, shape) in shapes.iter().enumerate() {
            let q = q_value(shape);
            let bound = q_recurrence_bound(shape).map(|b| b.to_string()).unwrap_or_default();
            let ratio = crate::combinatorics::ln_big(&q) - crate::combinatorics::ln_big(&nf);
            csv.push_str(&format!(
                "{n},{k},\"{shape}\",{},{},{q},{bound},{}\n",
                linear_extensions(shape),
                pair_factor(shape),
                ratio.exp()
            ));
        }
    }
    let scan = lemma_bound_scan(nmax).map_err(|e| CliError::runtime("combinatorics", e))?;
    let mut lemma = String::from("n,shapes,max_root,argmax\n");
    for row in &scan.rows {
        lemma.push_str(&format!("{},{},{},\"{}\"\n", row.n, row.shapes, row.max_root, row.argmax));
    }
    let mut out = Outputs::new(out_dir)?;
    out.write_str("combinatorics.csv", &csv)?;
    out.write_str("lemma_scan.csv", &lemma)?;
    out.finish("combinatorics", json!({ "nmax": nmax }), None)
}
