//! Interaction ingestion, time framing and per-frame snapshot graphs.
//!
//! A [`TemporalNetwork`] is an ordered list of [`Snapshot`]s, one per time
//! frame. Each snapshot is a directed weighted graph whose edge weights are
//! aggregated per ordered node pair and then normalized per source node into
//! commitments, so that every node with outgoing edges commits a total of 1.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Diagnostic, Error, Result};

/// Tolerance used when checking that outgoing commitments sum to one.
pub const COMMITMENT_TOLERANCE: f64 = 1e-9;

/// One timestamped interaction `source -> target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub source: String,
    pub target: String,
    pub timestamp: f64,
    pub weight: f64,
}

impl InteractionRecord {
    pub fn new(source: impl Into<String>, target: impl Into<String>, timestamp: f64) -> Self {
        Self {
            source: source.into(),
            target: target.into(),
            timestamp,
            weight: 1.0,
        }
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    #[default]
    Days,
    Seconds,
}

impl TimeUnit {
    /// Timestamp units per day.
    pub fn per_day(self) -> f64 {
        match self {
            TimeUnit::Days => 1.0,
            TimeUnit::Seconds => 86_400.0,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "days" | "day" | "d" => Some(TimeUnit::Days),
            "seconds" | "second" | "s" | "secs" => Some(TimeUnit::Seconds),
            _ => None,
        }
    }
}

/// Layout of a delimited edge-list file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeFormat {
    pub delimiter: u8,
    pub has_header: bool,
}

impl Default for EdgeFormat {
    fn default() -> Self {
        Self {
            delimiter: b',',
            has_header: false,
        }
    }
}

/// Result of reading an edge list.
#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    /// Valid records, stably sorted by timestamp.
    pub records: Vec<InteractionRecord>,
    pub self_loops_dropped: usize,
    pub diagnostics: Vec<Diagnostic>,
}

pub fn ingest_edges(path: impl AsRef<Path>, format: EdgeFormat) -> Result<IngestReport> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_edges_from_reader(file, format)
}

pub fn ingest_edges_from_reader<R: Read>(reader: R, format: EdgeFormat) -> Result<IngestReport> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(format.delimiter)
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut report = IngestReport::default();
    let mut first = true;
    for row in rdr.records() {
        let row = match row {
            Ok(row) => row,
            Err(err) if err.is_io_error() => return Err(err.into()),
            Err(err) => {
                let line = err.position().map(|p| p.line()).unwrap_or(0);
                report.diagnostics.push(Diagnostic::new(line, err.to_string()));
                continue;
            }
        };
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if std::mem::take(&mut first) && format.has_header {
            continue;
        }
        match parse_edge_row(&row) {
            Ok(rec) if rec.source == rec.target => report.self_loops_dropped += 1,
            Ok(rec) => report.records.push(rec),
            Err(msg) => report.diagnostics.push(Diagnostic::new(line, msg)),
        }
    }
    report
        .records
        .sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    Ok(report)
}

fn parse_edge_row(row: &csv::StringRecord) -> std::result::Result<InteractionRecord, String> {
    if row.len() != 3 && row.len() != 4 {
        return Err(format!("expected 3 or 4 columns, found {}", row.len()));
    }
    let source = &row[0];
    let target = &row[1];
    if source.is_empty() || target.is_empty() {
        return Err("empty node identifier".into());
    }
    let timestamp: f64 = row[2]
        .parse()
        .ok()
        .filter(|t: &f64| t.is_finite())
        .ok_or_else(|| format!("unparseable timestamp {:?}", &row[2]))?;
    let weight = match row.get(3) {
        Some(w) => {
            let w: f64 = w
                .parse()
                .ok()
                .filter(|w: &f64| w.is_finite())
                .ok_or_else(|| format!("unparseable weight {w:?}"))?;
            if w < 0.0 {
                return Err(format!("negative weight {w}"));
            }
            w
        }
        None => 1.0,
    };
    Ok(InteractionRecord {
        source: source.to_owned(),
        target: target.to_owned(),
        timestamp,
        weight,
    })
}

/// Sliding-window framing. Frame `k` (1-based) covers
/// `[origin + (k-1)*step, origin + (k-1)*step + length)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowPlan {
    length: f64,
    step: f64,
    origin: f64,
}

impl WindowPlan {
    pub fn new(length: f64, step: f64, origin: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidPlan(format!("window length {length} must be > 0")));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidPlan(format!("window step {step} must be > 0")));
        }
        if step > length {
            return Err(Error::InvalidPlan(format!(
                "window step {step} exceeds window length {length}"
            )));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidPlan("origin must be finite".into()));
        }
        Ok(Self {
            length,
            step,
            origin,
        })
    }

    /// Plan expressed in days, converted to timestamp units.
    pub fn in_days(length_days: f64, step_days: f64, origin: f64, unit: TimeUnit) -> Result<Self> {
        Self::new(length_days * unit.per_day(), step_days * unit.per_day(), origin)
    }

    /// 90-day frames with a 45-day overlap starting at `origin`.
    pub fn default_days(origin: f64, unit: TimeUnit) -> Self {
        Self::in_days(90.0, 45.0, origin, unit).expect("default plan is valid")
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    /// Half-open span of frame `k` (1-based).
    pub fn span(&self, k: usize) -> (f64, f64) {
        let start = self.origin + (k - 1) as f64 * self.step;
        (start, start + self.length)
    }

    /// Smallest number of frames whose last span still covers `last`.
    pub fn frames_to_cover(&self, last: f64) -> usize {
        let mut m = 1;
        while self.span(m).1 <= last {
            m += 1;
        }
        m
    }
}

/// Dense global node identifier, an index into [`NodeRegistry`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Sorted table of node identifiers shared by every frame.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeRegistry {
    names: Vec<String>,
}

impl NodeRegistry {
    pub fn from_names<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = names.into_iter().map(Into::into).collect();
        Self {
            names: set.into_iter().collect(),
        }
    }

    pub fn lookup(&self, name: &str) -> Option<NodeId> {
        self.names
            .binary_search_by(|n| n.as_str().cmp(name))
            .ok()
            .map(|i| NodeId(i as u32))
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.names[id.index()]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    /// Local index of the source node.
    pub source: usize,
    /// Local index of the target node.
    pub target: usize,
    /// Aggregated raw weight.
    pub weight: f64,
    /// Normalized commitment `C(source -> target)`.
    pub commitment: f64,
}

/// One frame's directed weighted graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    frame_index: usize,
    span: (f64, f64),
    nodes: Vec<NodeId>,
    edges: Vec<Edge>,
    out_offsets: Vec<usize>,
}

impl Snapshot {
    /// Builds a snapshot from raw weighted interactions. Weights of repeated
    /// ordered pairs are summed and each source's outgoing weights are
    /// normalized to commitments. Every endpoint becomes a node, even when all
    /// of its interactions carry zero weight; zero-weight pairs produce no edge.
    pub fn from_interactions<I>(frame_index: usize, span: (f64, f64), interactions: I) -> Self
    where
        I: IntoIterator<Item = (NodeId, NodeId, f64)>,
    {
        let mut agg: BTreeMap<(NodeId, NodeId), f64> = BTreeMap::new();
        let mut nodes = BTreeSet::new();
        for (s, t, w) in interactions {
            if s == t {
                continue;
            }
            nodes.insert(s);
            nodes.insert(t);
            *agg.entry((s, t)).or_insert(0.0) += w;
        }
        let nodes: Vec<NodeId> = nodes.into_iter().collect();
        let local = |id: NodeId| nodes.binary_search(&id).expect("endpoint registered");

        let mut edges: Vec<Edge> = agg
            .into_iter()
            .filter(|&(_, w)| w > 0.0)
            .map(|((s, t), w)| Edge {
                source: local(s),
                target: local(t),
                weight: w,
                commitment: 0.0,
            })
            .collect();
        // BTreeMap order on global ids is also local order, so edges are
        // already grouped by source.
        let out_offsets = offsets(nodes.len(), &edges);
        for u in 0..nodes.len() {
            let range = out_offsets[u]..out_offsets[u + 1];
            let total: f64 = edges[range.clone()].iter().map(|e| e.weight).sum();
            for e in &mut edges[range] {
                e.commitment = e.weight / total;
            }
        }
        Self {
            frame_index,
            span,
            nodes,
            edges,
            out_offsets,
        }
    }

    /// Builds a snapshot with caller-supplied commitments, unchecked. Edges
    /// are given in local indices into the sorted `nodes`.
    pub fn from_raw_parts(
        frame_index: usize,
        span: (f64, f64),
        mut nodes: Vec<NodeId>,
        mut edges: Vec<Edge>,
    ) -> Self {
        nodes.sort_unstable();
        nodes.dedup();
        edges.sort_by_key(|e| (e.source, e.target));
        let out_offsets = offsets(nodes.len(), &edges);
        Self {
            frame_index,
            span,
            nodes,
            edges,
            out_offsets,
        }
    }

    pub fn frame_index(&self) -> usize {
        self.frame_index
    }

    pub fn span(&self) -> (f64, f64) {
        self.span
    }

    /// Active nodes, sorted by global id.
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn local_index(&self, node: NodeId) -> Option<usize> {
        self.nodes.binary_search(&node).ok()
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.local_index(node).is_some()
    }

    pub fn out_edges(&self, local: usize) -> &[Edge] {
        &self.edges[self.out_offsets[local]..self.out_offsets[local + 1]]
    }

    /// Local index of the first node whose outgoing commitments are negative,
    /// non-finite or do not sum to one, if any.
    pub fn first_unnormalized(&self) -> Option<usize> {
        (0..self.nodes.len()).find(|&u| {
            let out = self.out_edges(u);
            if out.is_empty() {
                return false;
            }
            let mut sum = 0.0;
            for e in out {
                if !e.commitment.is_finite() || e.commitment < 0.0 {
                    return true;
                }
                sum += e.commitment;
            }
            (sum - 1.0).abs() > COMMITMENT_TOLERANCE
        })
    }
}

fn offsets(n: usize, edges: &[Edge]) -> Vec<usize> {
    let mut offsets = vec![0usize; n + 1];
    for e in edges {
        offsets[e.source + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    offsets
}

/// Ordered frames built from one interaction stream.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalNetwork {
    plan: WindowPlan,
    registry: NodeRegistry,
    frames: Vec<Snapshot>,
}

impl TemporalNetwork {
    pub fn plan(&self) -> &WindowPlan {
        &self.plan
    }

    pub fn registry(&self) -> &NodeRegistry {
        &self.registry
    }

    pub fn frames(&self) -> &[Snapshot] {
        &self.frames
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    /// Frame by 1-based index.
    pub fn frame(&self, index: usize) -> Option<&Snapshot> {
        index.checked_sub(1).and_then(|i| self.frames.get(i))
    }
}

pub fn build_frames(records: &[InteractionRecord], plan: WindowPlan) -> Result<TemporalNetwork> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted: Vec<&InteractionRecord> = records
        .iter()
        .filter(|r| r.timestamp >= plan.origin())
        .collect();
    if sorted.is_empty() {
        return Err(Error::NoRecordsInPlan {
            origin: plan.origin(),
        });
    }
    sorted.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));

    let registry = NodeRegistry::from_names(
        sorted
            .iter()
            .flat_map(|r| [r.source.as_str(), r.target.as_str()]),
    );
    let resolved: Vec<(f64, NodeId, NodeId, f64)> = sorted
        .iter()
        .map(|r| {
            (
                r.timestamp,
                registry.lookup(&r.source).expect("registered"),
                registry.lookup(&r.target).expect("registered"),
                r.weight,
            )
        })
        .collect();

    let last = resolved.last().expect("nonempty").0;
    let m = plan.frames_to_cover(last);
    let frames = (1..=m)
        .into_par_iter()
        .map(|k| {
            let (start, end) = plan.span(k);
            let lo = resolved.partition_point(|r| r.0 < start);
            let hi = resolved.partition_point(|r| r.0 < end);
            Snapshot::from_interactions(
                k,
                (start, end),
                resolved[lo..hi].iter().map(|&(_, s, t, w)| (s, t, w)),
            )
        })
        .collect();

    Ok(TemporalNetwork {
        plan,
        registry,
        frames,
    })
}
