//! Command-line front end.
//!
//! Every subcommand reads the same settings: a flat `key = value` config
//! file (optional) overridden by flags. `run` executes the whole pipeline
//! and writes its artifacts into an output directory.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::baseline_asur::{asur_anomaly_audit, asur_detect, write_asur_events, AsurConfig, AsurEvent};
use crate::centrality::{GroupCommitment, SpConfig};
use crate::error::{Diagnostic, Error, Result};
use crate::evolution::{
    build_chains, chains_from_json, chains_to_json, chains_to_text, parse_chain_text, read_summary, summarize,
    write_summary, KindCounts, SUMMARY_COLUMNS,
};
use crate::ged::{read_events, write_events, ComputeStats, EventKind, EventRecord, EvolutionAnalysis, Thresholds};
use crate::grouping::{
    align_to_frames, detect_groups_cpm, detect_groups_labelprop, load_groups, write_groups, Detector, GroupSet,
    DEFAULT_K, DEFAULT_SEED,
};
use crate::temporal_network::{
    build_frames, ingest_edges, EdgeFormat, IngestReport, TemporalNetwork, TimeUnit, WindowPlan,
};

/// Settings shared by every subcommand.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub edges: Option<PathBuf>,
    pub groups: Option<PathBuf>,
    pub output_dir: PathBuf,
    #[serde(skip)]
    pub delimiter: u8,
    pub has_header: bool,
    #[serde(skip)]
    pub time_unit: TimeUnit,
    pub window_length_days: f64,
    pub window_step_days: f64,
    /// Defaults to the earliest timestamp.
    pub origin: Option<f64>,
    pub sp: SpConfig,
    pub detector: Detector,
    pub k: usize,
    pub seed: u64,
    pub thresholds: Thresholds,
    pub kappa: f64,
    pub sweep_alphas: Vec<f64>,
    pub sweep_betas: Vec<f64>,
}

fn default_grid() -> Vec<f64> {
    (5..=10).map(|p| f64::from(p * 10) / 100.0).collect()
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            edges: None,
            groups: None,
            output_dir: PathBuf::from("groupevo-out"),
            delimiter: b',',
            has_header: false,
            time_unit: TimeUnit::Days,
            window_length_days: 90.0,
            window_step_days: 45.0,
            origin: None,
            sp: SpConfig::default(),
            detector: Detector::Cpm,
            k: DEFAULT_K,
            seed: DEFAULT_SEED,
            thresholds: Thresholds::default(),
            kappa: AsurConfig::default().kappa,
            sweep_alphas: default_grid(),
            sweep_betas: default_grid(),
        }
    }
}

/// A threshold written either as a fraction (`0.5`, `1.0`) or as an integer
/// percent (`50`, `100`).
pub fn parse_threshold(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::InvalidConfig(format!("bad threshold {s:?}"));
    let v = if s.contains('.') || s.contains('e') || s.contains('E') {
        s.parse::<f64>().map_err(|_| bad())?
    } else {
        f64::from(s.parse::<u32>().map_err(|_| bad())?) / 100.0
    };
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidThresholds(format!("{s} is outside [0, 1]")));
    }
    Ok(v)
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(parse_threshold)
        .collect::<Result<_>>()?;
    if v.is_empty() {
        return Err(Error::InvalidConfig("empty sweep grid".into()));
    }
    Ok(v)
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(Error::InvalidConfig(format!("expected a boolean, got {other:?}"))),
    }
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("{key}: expected a number, got {v:?}")))
        };
        let int = |v: &str| {
            v.parse::<u64>()
                .map_err(|_| Error::InvalidConfig(format!("{key}: expected an integer, got {v:?}")))
        };
        match key.trim() {
            "edges" => self.edges = Some(PathBuf::from(value)),
            "groups" => self.groups = Some(PathBuf::from(value)),
            "output_dir" => self.output_dir = PathBuf::from(value),
            "delimiter" => {
                self.delimiter = match value {
                    "tab" | "\\t" => b'\t',
                    "space" => b' ',
                    v if v.len() == 1 => v.as_bytes()[0],
                    v => return Err(Error::InvalidConfig(format!("delimiter must be one byte, got {v:?}"))),
                }
            }
            "header" => self.has_header = parse_bool(value)?,
            "time_unit" => {
                self.time_unit = TimeUnit::parse(value)
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown time unit {value:?}")))?
            }
            "window_length" => self.window_length_days = num(value)?,
            "window_step" => self.window_step_days = num(value)?,
            "origin" => self.origin = Some(num(value)?),
            "epsilon" => self.sp.epsilon = num(value)?,
            "sp_tolerance" => self.sp.tolerance = num(value)?,
            "sp_max_iterations" => self.sp.max_iterations = int(value)? as usize,
            "group_commitment" => {
                self.sp.group_commitment = match value {
                    "renormalize" => GroupCommitment::Renormalize,
                    "global" => GroupCommitment::Global,
                    v => return Err(Error::InvalidConfig(format!("unknown group_commitment {v:?}"))),
                }
            }
            "detector" => {
                self.detector = match value {
                    "cpm" => Detector::Cpm,
                    "label_prop" | "labelprop" => Detector::LabelProp,
                    "external" => Detector::External,
                    v => return Err(Error::InvalidConfig(format!("unknown detector {v:?}"))),
                }
            }
            "k" => self.k = int(value)? as usize,
            "seed" => self.seed = int(value)?,
            "alpha" => self.thresholds.alpha = parse_threshold(value)?,
            "beta" => self.thresholds.beta = parse_threshold(value)?,
            "lifecycle" => self.thresholds.lifecycle = parse_threshold(value)?,
            "match_alpha" => self.thresholds.match_alpha = Some(parse_threshold(value)?),
            "match_beta" => self.thresholds.match_beta = Some(parse_threshold(value)?),
            "kappa" => self.kappa = parse_threshold(value)?,
            "sweep_alpha" => self.sweep_alphas = parse_grid(value)?,
            "sweep_beta" => self.sweep_betas = parse_grid(value)?,
            other => return Err(Error::InvalidConfig(format!("unknown setting {other:?}"))),
        }
        Ok(())
    }

    /// Applies a flat config text: one `key = value` per line, `#` comments.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("config line {}: expected key = value", n + 1)))?;
            self.apply(key, value)
                .map_err(|e| Error::InvalidConfig(format!("config line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.thresholds.validate()?;
        self.sp.validate()?;
        AsurConfig { kappa: self.kappa }.validate()?;
        if self.k < 3 {
            return Err(Error::InvalidConfig(format!("k must be at least 3, got {}", self.k)));
        }
        for &v in self.sweep_alphas.iter().chain(&self.sweep_betas) {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidThresholds(format!("sweep value {v} is outside [0, 1]")));
            }
        }
        if self.sweep_alphas.is_empty() || self.sweep_betas.is_empty() {
            return Err(Error::InvalidConfig("empty sweep grid".into()));
        }
        for &a in &self.sweep_alphas {
            for &b in &self.sweep_betas {
                self.cell_thresholds(a, b).validate()?;
            }
        }
        if self.detector == Detector::External && self.groups.is_none() {
            return Err(Error::InvalidConfig("detector external needs a groups file".into()));
        }
        Ok(())
    }

    pub fn edge_format(&self) -> EdgeFormat {
        EdgeFormat {
            delimiter: self.delimiter,
            has_header: self.has_header,
        }
    }

    pub fn asur(&self) -> AsurConfig {
        AsurConfig { kappa: self.kappa }
    }

    fn cell_thresholds(&self, alpha: f64, beta: f64) -> Thresholds {
        Thresholds {
            alpha,
            beta,
            ..self.thresholds
        }
    }
}

/// Reads the edge list and slices it into frames.
pub fn load_network(cfg: &RunConfig) -> Result<(TemporalNetwork, IngestReport)> {
    let path = cfg
        .edges
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("no edge list given".into()))?;
    let report = ingest_edges(path, cfg.edge_format())?;
    let origin = match (cfg.origin, report.records.first()) {
        (Some(o), _) => o,
        (None, Some(r)) => r.timestamp,
        (None, None) => return Err(Error::EmptyInput),
    };
    let plan = WindowPlan::in_days(cfg.window_length_days, cfg.window_step_days, origin, cfg.time_unit)?;
    let network = build_frames(&report.records, plan)?;
    Ok((network, report))
}

/// Runs a built-in detector on every frame.
pub fn detect_groups(network: &TemporalNetwork, detector: Detector, k: usize, seed: u64) -> Vec<GroupSet> {
    network
        .frames()
        .par_iter()
        .map(|s| match detector {
            Detector::LabelProp => detect_groups_labelprop(s, seed),
            _ => detect_groups_cpm(s, k),
        })
        .collect()
}

/// One group set per frame, from the groups file or the configured detector.
pub fn obtain_groups(cfg: &RunConfig, network: &TemporalNetwork) -> Result<(Vec<GroupSet>, Vec<Diagnostic>)> {
    match &cfg.groups {
        Some(path) => {
            let loaded = load_groups(path, network)?;
            let sets = align_to_frames(loaded.groupsets, network, Detector::External)?;
            Ok((sets, loaded.diagnostics))
        }
        None => Ok((detect_groups(network, cfg.detector, cfg.k, cfg.seed), Vec::new())),
    }
}

pub const FRAME_HEADER: [&str; 5] = ["frame_index", "start", "end", "nodes", "edges"];

pub fn write_frames<W: Write>(writer: W, network: &TemporalNetwork) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(FRAME_HEADER)?;
    for s in network.frames() {
        let (start, end) = s.span();
        w.write_record([
            s.frame_index().to_string(),
            start.to_string(),
            end.to_string(),
            s.node_count().to_string(),
            s.edge_count().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<frame output>", e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub beta: f64,
    pub counts: KindCounts,
    /// Pairs with forward >= alpha and backward >= beta.
    pub passing_pairs: usize,
}

/// Classifies under every `(alpha, beta)` cell of the grid, alpha-major,
/// reusing the inclusions already held by `analysis`.
pub fn sweep(analysis: &EvolutionAnalysis, base: &Thresholds, alphas: &[f64], betas: &[f64]) -> Result<Vec<SweepRow>> {
    let cells: Vec<(f64, f64)> = alphas.iter().flat_map(|&a| betas.iter().map(move |&b| (a, b))).collect();
    cells
        .par_iter()
        .map(|&(alpha, beta)| {
            let th = Thresholds { alpha, beta, ..*base };
            let events = analysis.events(&th)?;
            Ok(SweepRow {
                alpha,
                beta,
                counts: summarize(&events).total,
                passing_pairs: analysis
                    .matrices()
                    .iter()
                    .map(|m| m.count_passing_both(alpha, beta))
                    .sum(),
            })
        })
        .collect()
}

pub fn write_sweep<W: Write>(writer: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["alpha", "beta"];
    header.extend(SUMMARY_COLUMNS);
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.alpha.to_string(), r.beta.to_string()];
        rec.extend(r.counts.row().iter().map(usize::to_string));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<sweep output>", e))?;
    Ok(())
}

/// Side-by-side event kinds of both methods per group pair.
pub fn write_comparison<W: Write>(writer: W, ged: &[EventRecord], asur: &[AsurEvent]) -> Result<()> {
    use std::collections::BTreeMap;
    type Key = (usize, usize, String, String);
    let mut table: BTreeMap<Key, (Vec<String>, Vec<String>)> = BTreeMap::new();
    let id = |g: Option<&crate::ged::GroupRef>| g.map(|g| g.id.clone()).unwrap_or_default();
    for e in ged {
        let key = (e.frame_pair.0, e.frame_pair.1, id(e.source.as_ref()), id(e.target.as_ref()));
        table.entry(key).or_default().0.push(e.kind.to_string());
    }
    for e in asur {
        let sources: Vec<Option<&crate::ged::GroupRef>> = if e.sources.is_empty() {
            vec![None]
        } else {
            e.sources.iter().map(Some).collect()
        };
        let targets: Vec<Option<&crate::ged::GroupRef>> = if e.targets.is_empty() {
            vec![None]
        } else {
            e.targets.iter().map(Some).collect()
        };
        for s in &sources {
            for t in &targets {
                let key = (e.frame_pair.0, e.frame_pair.1, id(*s), id(*t));
                table.entry(key).or_default().1.push(e.kind.to_string());
            }
        }
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["frame_i", "frame_j", "source_group", "target_group", "ged", "asur"])?;
    for ((i, j, s, t), (g, a)) in table {
        w.write_record([i.to_string(), j.to_string(), s, t, g.join(";"), a.join(";")])?;
    }
    w.flush().map_err(|e| Error::io("<comparison output>", e))?;
    Ok(())
}

/// What [`run_pipeline`] produced.
#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub artifacts: Vec<PathBuf>,
    pub diagnostics: Vec<Diagnostic>,
    pub events: Vec<EventRecord>,
    pub stats: ComputeStats,
}

pub const ARTIFACTS: [&str; 6] = [
    "frames.csv",
    "groups.csv",
    "events.csv",
    "chains.txt",
    "chains.json",
    "summary.csv",
];

/// Ingest, frame, group, detect, chain and summarize; writes every artifact
/// to `cfg.output_dir` and reads each one back.
pub fn run_pipeline(cfg: &RunConfig) -> anyhow::Result<PipelineReport> {
    cfg.validate()?;
    let (network, report) = load_network(cfg)?;
    let mut diagnostics = report.diagnostics;
    let (groupsets, group_diags) = obtain_groups(cfg, &network)?;
    diagnostics.extend(group_diags);

    let analysis = EvolutionAnalysis::new(&network, &groupsets, &cfg.sp)?;
    let events = analysis.events(&cfg.thresholds)?;
    let chains = build_chains(&events, &groupsets)?;
    let summary = summarize(&events);

    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = |name: &str| dir.join(name);
    let mut buf = Vec::new();
    write_frames(&mut buf, &network)?;
    write_file(&path(ARTIFACTS[0]), &buf)?;
    buf.clear();
    write_groups(&mut buf, &groupsets, &network)?;
    write_file(&path(ARTIFACTS[1]), &buf)?;
    buf.clear();
    write_events(&mut buf, &events)?;
    write_file(&path(ARTIFACTS[2]), &buf)?;
    write_file(&path(ARTIFACTS[3]), chains_to_text(&chains).as_bytes())?;
    write_file(&path(ARTIFACTS[4]), chains_to_json(&chains)?.as_bytes())?;
    buf.clear();
    write_summary(&mut buf, &summary)?;
    write_file(&path(ARTIFACTS[5]), &buf)?;

    // read everything back
    let frames_back = csv::Reader::from_path(path(ARTIFACTS[0]))?.records().count();
    if frames_back != network.frame_count() {
        bail!("frames.csv has {frames_back} rows, expected {}", network.frame_count());
    }
    let groups_back = align_to_frames(
        load_groups(path(ARTIFACTS[1]), &network)?.groupsets,
        &network,
        groupsets.first().map_or(Detector::External, |g| g.detector),
    )?;
    let same_groups = groups_back
        .iter()
        .zip(&groupsets)
        .all(|(a, b)| a.groups == b.groups);
    if groups_back.len() != groupsets.len() || !same_groups {
        bail!("groups.csv does not reproduce the detected groups");
    }
    let events_back = read_events(fs::File::open(path(ARTIFACTS[2]))?, &groupsets)?;
    if events_back.len() != events.len() || events_back.iter().zip(&events).any(|(a, b)| a.kind != b.kind) {
        bail!("events.csv does not reproduce the detected events");
    }
    if parse_chain_text(&fs::read_to_string(path(ARTIFACTS[3]))?)?.len() != chains.len() {
        bail!("chains.txt does not reproduce the chains");
    }
    if chains_from_json(&fs::read_to_string(path(ARTIFACTS[4]))?)? != chains {
        bail!("chains.json does not reproduce the chains");
    }
    if read_summary(fs::File::open(path(ARTIFACTS[5]))?)? != summary {
        bail!("summary.csv does not reproduce the summary");
    }

    Ok(PipelineReport {
        artifacts: ARTIFACTS.iter().map(|n| path(n)).collect(),
        diagnostics,
        events,
        stats: analysis.stats(),
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "groupevo", version, about = "Group evolution discovery in temporal social networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse an edge list and report what was kept.
    Ingest(Common),
    /// Write the frame manifest.
    Frames(Common),
    /// Extract groups per frame.
    Groups(Common),
    /// Detect events between consecutive frames.
    Events(Common),
    /// Build per-group evolution chains.
    Chains(Common),
    /// Event counts over a grid of thresholds.
    Sweep(Common),
    /// Events of this method next to the overlap baseline.
    Compare(Common),
    /// Full pipeline into an output directory.
    Run(Common),
}

/// Flags mirror the config keys; flags win over the config file.
#[derive(Debug, Args, Default)]
pub struct Common {
    /// Flat key = value config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Edge list: source,target,timestamp[,weight].
    #[arg(long)]
    pub edges: Option<String>,
    /// Group file: frame_index,group_id,node_identifier.
    #[arg(long)]
    pub groups: Option<String>,
    #[arg(long)]
    pub output_dir: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// One byte, or `tab`.
    #[arg(long)]
    pub delimiter: Option<String>,
    #[arg(long)]
    pub header: Option<String>,
    /// `days` or `seconds`.
    #[arg(long)]
    pub time_unit: Option<String>,
    /// Window length in days.
    #[arg(long)]
    pub window_length: Option<String>,
    /// Window step in days.
    #[arg(long)]
    pub window_step: Option<String>,
    #[arg(long)]
    pub origin: Option<String>,
    #[arg(long)]
    pub epsilon: Option<String>,
    #[arg(long)]
    pub sp_tolerance: Option<String>,
    #[arg(long)]
    pub sp_max_iterations: Option<String>,
    /// `renormalize` or `global`.
    #[arg(long)]
    pub group_commitment: Option<String>,
    /// `cpm`, `label_prop` or `external`.
    #[arg(long)]
    pub detector: Option<String>,
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Fraction (0.5) or integer percent (50).
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long)]
    pub lifecycle: Option<String>,
    #[arg(long)]
    pub match_alpha: Option<String>,
    #[arg(long)]
    pub match_beta: Option<String>,
    #[arg(long)]
    pub kappa: Option<String>,
    /// Comma-separated alpha values for `sweep`.
    #[arg(long)]
    pub sweep_alpha: Option<String>,
    #[arg(long)]
    pub sweep_beta: Option<String>,
}

impl Common {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        let flags: [(&str, &Option<String>); 24] = [
            ("edges", &self.edges),
            ("groups", &self.groups),
            ("output_dir", &self.output_dir),
            ("delimiter", &self.delimiter),
            ("header", &self.header),
            ("time_unit", &self.time_unit),
            ("window_length", &self.window_length),
            ("window_step", &self.window_step),
            ("origin", &self.origin),
            ("epsilon", &self.epsilon),
            ("sp_tolerance", &self.sp_tolerance),
            ("sp_max_iterations", &self.sp_max_iterations),
            ("group_commitment", &self.group_commitment),
            ("detector", &self.detector),
            ("k", &self.k),
            ("seed", &self.seed),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("lifecycle", &self.lifecycle),
            ("match_alpha", &self.match_alpha),
            ("match_beta", &self.match_beta),
            ("kappa", &self.kappa),
            ("sweep_alpha", &self.sweep_alpha),
            ("sweep_beta", &self.sweep_beta),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.apply(key, v)?;
            }
        }
        if cfg.groups.is_some() {
            cfg.detector = Detector::External;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn output(out: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn report_diagnostics(diags: &[Diagnostic]) {
    for d in diags {
        eprintln!("warning: {d}");
    }
}

/// Parses `args` and runs the selected subcommand.
pub fn run<I, T>(args: I) -> anyhow::Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    match cli.command {
        Command::Ingest(c) => {
            let cfg = c.resolve()?;
            let path = cfg.edges.clone().context("no edge list given")?;
            let report = ingest_edges(&path, cfg.edge_format())?;
            report_diagnostics(&report.diagnostics);
            let mut w = output(&c.out)?;
            writeln!(w, "records\t{}", report.records.len())?;
            writeln!(w, "self_loops_dropped\t{}", report.self_loops_dropped)?;
            writeln!(w, "rejected_rows\t{}", report.diagnostics.len())?;
            if let (Some(first), Some(last)) = (report.records.first(), report.records.last()) {
                writeln!(w, "first_timestamp\t{}", first.timestamp)?;
                writeln!(w, "last_timestamp\t{}", last.timestamp)?;
            }
        }
        Command::Frames(c) => {
            let cfg = c.resolve()?;
            let (network, report) = load_network(&cfg)?;
            report_diagnostics(&report.diagnostics);
            write_frames(output(&c.out)?, &network)?;
        }
        Command::Groups(c) => {
            let cfg = c.resolve()?;
            let (network, report) = load_network(&cfg)?;
            report_diagnostics(&report.diagnostics);
            let (sets, diags) = obtain_groups(&cfg, &network)?;
            report_diagnostics(&diags);
            write_groups(output(&c.out)?, &sets, &network)?;
        }
        Command::Events(c) => {
            let cfg = c.resolve()?;
            let (_, _, events) = detect(&cfg)?;
            write_events(output(&c.out)?, &events)?;
        }
        Command::Chains(c) => {
            let cfg = c.resolve()?;
            let (_, sets, events) = detect(&cfg)?;
            let chains = build_chains(&events, &sets)?;
            let text = match c.out.as_ref().and_then(|p| p.extension()) {
                Some(ext) if ext == "json" => chains_to_json(&chains)?,
                _ => chains_to_text(&chains),
            };
            output(&c.out)?.write_all(text.as_bytes())?;
        }
        Command::Sweep(c) => {
            let cfg = c.resolve()?;
            let (network, report) = load_network(&cfg)?;
            report_diagnostics(&report.diagnostics);
            let (sets, diags) = obtain_groups(&cfg, &network)?;
            report_diagnostics(&diags);
            let analysis = EvolutionAnalysis::new(&network, &sets, &cfg.sp)?;
            let rows = sweep(&analysis, &cfg.thresholds, &cfg.sweep_alphas, &cfg.sweep_betas)?;
            write_sweep(output(&c.out)?, &rows)?;
            let stats = analysis.stats();
            eprintln!(
                "{} cells; {} group SP runs, {} inclusion evaluations",
                rows.len(),
                stats.sp_runs,
                stats.inclusion_evaluations
            );
        }
        Command::Compare(c) => {
            let cfg = c.resolve()?;
            let (network, sets, events) = detect(&cfg)?;
            let asur = asur_detect(&sets, &network, &cfg.asur())?;
            let audit = asur_anomaly_audit(&asur);
            if let Some(p) = c.out.as_ref().and_then(|p| p.to_str()) {
                let base = p.strip_suffix(".csv").unwrap_or(p);
                write_asur_events(fs::File::create(format!("{base}.asur.csv"))?, &asur)?;
            }
            write_comparison(output(&c.out)?, &events, &asur)?;
            let ged_continuing = events.iter().filter(|e| e.kind == EventKind::Continuing).count();
            eprintln!(
                "continuing: {ged_continuing}; baseline events: {} total, {} distinct, {} pairs with several kinds",
                audit.total, audit.distinct, audit.anomaly_count
            );
        }
        Command::Run(c) => {
            let cfg = c.resolve()?;
            let report = run_pipeline(&cfg)?;
            report_diagnostics(&report.diagnostics);
            let mut w = output(&c.out)?;
            for a in &report.artifacts {
                writeln!(w, "{}", a.display())?;
            }
        }
    }
    Ok(())
}

fn detect(cfg: &RunConfig) -> Result<(TemporalNetwork, Vec<GroupSet>, Vec<EventRecord>)> {
    let (network, report) = load_network(cfg)?;
    report_diagnostics(&report.diagnostics);
    let (sets, diags) = obtain_groups(cfg, &network)?;
    report_diagnostics(&diags);
    let events = EvolutionAnalysis::new(&network, &sets, &cfg.sp)?.events(&cfg.thresholds)?;
    Ok((network, sets, events))
}
