//! Group evolution discovery.
//!
//! For every pair of groups in consecutive frames two inclusions are
//! measured: how much of the earlier group is carried into the later one and
//! vice versa. Inclusion multiplies the share of members kept with the share
//! of within-group social position those members hold. The pair of
//! inclusions, the group sizes and the number of matching partners decide the
//! event, see [`classify_pair`]. Forming and dissolving are decided per group
//! against a separate, lower lifecycle threshold.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::centrality::{compute_group_sp, SpConfig, SpVector};
use crate::error::{Error, Result};
use crate::grouping::{Group, GroupSet};
use crate::temporal_network::{NodeId, TemporalNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Continuing,
    Shrinking,
    Growing,
    Splitting,
    Merging,
    Dissolving,
    Forming,
}

impl EventKind {
    pub const ALL: [EventKind; 7] = [
        EventKind::Continuing,
        EventKind::Shrinking,
        EventKind::Growing,
        EventKind::Splitting,
        EventKind::Merging,
        EventKind::Dissolving,
        EventKind::Forming,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Continuing => "continuing",
            EventKind::Shrinking => "shrinking",
            EventKind::Growing => "growing",
            EventKind::Splitting => "splitting",
            EventKind::Merging => "merging",
            EventKind::Dissolving => "dissolving",
            EventKind::Forming => "forming",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EventKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown event kind {s:?}")))
    }
}

/// Classification thresholds, as fractions in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Forward inclusion threshold, `I(G1, G2) >= alpha`.
    pub alpha: f64,
    /// Backward inclusion threshold, `I(G2, G1) >= beta`.
    pub beta: f64,
    /// Forming/dissolving cutoff.
    pub lifecycle: f64,
    /// Overrides alpha when counting matches.
    pub match_alpha: Option<f64>,
    /// Overrides beta when counting matches.
    pub match_beta: Option<f64>,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 0.5,
            lifecycle: 0.1,
            match_alpha: None,
            match_beta: None,
        }
    }
}

impl Thresholds {
    pub fn new(alpha: f64, beta: f64) -> Self {
        Self {
            alpha,
            beta,
            ..Self::default()
        }
    }

    pub fn match_alpha(&self) -> f64 {
        self.match_alpha.unwrap_or(self.alpha)
    }

    pub fn match_beta(&self) -> f64 {
        self.match_beta.unwrap_or(self.beta)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("alpha", Some(self.alpha)),
            ("beta", Some(self.beta)),
            ("lifecycle", Some(self.lifecycle)),
            ("match_alpha", self.match_alpha),
            ("match_beta", self.match_beta),
        ];
        for (name, value) in fields {
            if let Some(v) = value {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidThresholds(format!("{name} = {v} is outside [0, 1]")));
                }
            }
        }
        if self.lifecycle >= self.alpha.min(self.beta) {
            return Err(Error::InvalidThresholds(format!(
                "lifecycle {} must be below min(alpha, beta) = {}",
                self.lifecycle,
                self.alpha.min(self.beta)
            )));
        }
        Ok(())
    }
}

/// Inclusion of `g1` in `g2`, weighted by `g1`'s within-group importance.
///
/// `(|g1 ∩ g2| / |g1|) * (Σ_{x ∈ g1 ∩ g2} sp(x) / Σ_{x ∈ g1} sp(x))`
pub fn inclusion(g1: &Group, g2: &Group, sp1: &SpVector) -> Result<f64> {
    if g1.is_empty() {
        return Err(Error::EmptyGroup);
    }
    let mut total = 0.0;
    let mut shared_mass = 0.0;
    let mut shared = 0usize;
    for &m in g1.members() {
        let v = sp1.get(m).ok_or_else(|| Error::MissingImportance {
            node: format!("#{}", m.0),
        })?;
        total += v;
        if g2.contains(m) {
            shared += 1;
            shared_mass += v;
        }
    }
    if total.is_nan() || total <= 0.0 {
        return Err(Error::NonPositiveImportance);
    }
    let quantity = shared as f64 / g1.len() as f64;
    let quality = shared_mass / total;
    Ok((quantity * quality).clamp(0.0, 1.0))
}

/// Inclusions for every group pair of two consecutive frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionMatrix {
    pub frame_pair: (usize, usize),
    rows: usize,
    cols: usize,
    forward: Vec<f64>,
    backward: Vec<f64>,
}

impl InclusionMatrix {
    /// All-zero matrix for `rows` earlier and `cols` later groups.
    pub fn zeros(frame_pair: (usize, usize), rows: usize, cols: usize) -> Self {
        Self {
            frame_pair,
            rows,
            cols,
            forward: vec![0.0; rows * cols],
            backward: vec![0.0; rows * cols],
        }
    }

    pub fn set(&mut self, a: usize, b: usize, forward: f64, backward: f64) {
        let i = a * self.cols + b;
        self.forward[i] = forward;
        self.backward[i] = backward;
    }

    /// Builds the matrix from group sets and their per-group importance
    /// vectors. Pairs without shared members are left at zero; the number of
    /// inclusions actually evaluated is added to `evaluations`.
    pub fn compute(
        earlier: &GroupSet,
        earlier_sp: &[SpVector],
        later: &GroupSet,
        later_sp: &[SpVector],
        evaluations: &AtomicUsize,
    ) -> Result<Self> {
        let mut m = Self::zeros((earlier.frame_index, later.frame_index), earlier.len(), later.len());
        let mut containing: HashMap<NodeId, Vec<usize>> = HashMap::new();
        for (b, g) in later.groups.iter().enumerate() {
            for &n in g.members() {
                containing.entry(n).or_default().push(b);
            }
        }
        let mut candidates = Vec::new();
        for (a, g1) in earlier.groups.iter().enumerate() {
            candidates.clear();
            for n in g1.members() {
                if let Some(bs) = containing.get(n) {
                    candidates.extend_from_slice(bs);
                }
            }
            candidates.sort_unstable();
            candidates.dedup();
            for &b in &candidates {
                let g2 = &later.groups[b];
                let fwd = inclusion(g1, g2, &earlier_sp[a])?;
                let bwd = inclusion(g2, g1, &later_sp[b])?;
                evaluations.fetch_add(2, Ordering::Relaxed);
                m.set(a, b, fwd, bwd);
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// `I(earlier a, later b)`.
    pub fn forward(&self, a: usize, b: usize) -> f64 {
        self.forward[a * self.cols + b]
    }

    /// `I(later b, earlier a)`.
    pub fn backward(&self, a: usize, b: usize) -> f64 {
        self.backward[a * self.cols + b]
    }

    pub fn is_match(&self, a: usize, b: usize, th: &Thresholds) -> bool {
        self.forward(a, b) >= th.match_alpha() || self.backward(a, b) >= th.match_beta()
    }

    /// Matches of earlier group `a` among the later groups.
    pub fn matches_forward(&self, a: usize, th: &Thresholds) -> usize {
        (0..self.cols).filter(|&b| self.is_match(a, b, th)).count()
    }

    /// Matches of later group `b` among the earlier groups.
    pub fn matches_backward(&self, b: usize, th: &Thresholds) -> usize {
        (0..self.rows).filter(|&a| self.is_match(a, b, th)).count()
    }

    /// Pairs with `forward >= alpha` and `backward >= beta`.
    pub fn count_passing_both(&self, alpha: f64, beta: f64) -> usize {
        self.forward
            .iter()
            .zip(&self.backward)
            .filter(|(&f, &b)| f >= alpha && b >= beta)
            .count()
    }
}

/// Which side of the frame pair a group sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Earlier,
    Later,
}

/// Number of groups in the opposite frame that match `group`: the pair,
/// oriented earlier to later, passes the forward or the backward threshold.
pub fn count_matches(
    group: &Group,
    group_sp: &SpVector,
    side: Side,
    opposite: &GroupSet,
    opposite_sp: &[SpVector],
    th: &Thresholds,
) -> Result<usize> {
    let mut n = 0;
    for (h, h_sp) in opposite.groups.iter().zip(opposite_sp) {
        let (fwd, bwd) = match side {
            Side::Earlier => (inclusion(group, h, group_sp)?, inclusion(h, group, h_sp)?),
            Side::Later => (inclusion(h, group, h_sp)?, inclusion(group, h, group_sp)?),
        };
        if fwd >= th.match_alpha() || bwd >= th.match_beta() {
            n += 1;
        }
    }
    Ok(n)
}

/// Event for the pair `(G1 in T_i, G2 in T_i+1)`.
///
/// `matches_fwd` counts the matches of G1 among the groups of `T_i+1`,
/// `matches_bwd` those of G2 among the groups of `T_i`. A one-directional
/// pass is a split or a merge when the larger group has several matches and
/// a plain shrink or growth when it has exactly one.
pub fn classify_pair(
    size1: usize,
    size2: usize,
    i_fwd: f64,
    i_bwd: f64,
    matches_fwd: usize,
    matches_bwd: usize,
    th: &Thresholds,
) -> Option<EventKind> {
    let fwd = i_fwd >= th.alpha;
    let bwd = i_bwd >= th.beta;
    match (fwd, bwd) {
        (true, true) => Some(match size1.cmp(&size2) {
            std::cmp::Ordering::Equal => EventKind::Continuing,
            std::cmp::Ordering::Greater => EventKind::Shrinking,
            std::cmp::Ordering::Less => EventKind::Growing,
        }),
        (false, true) if size1 >= size2 => match matches_fwd {
            1 => Some(EventKind::Shrinking),
            n if n > 1 => Some(EventKind::Splitting),
            _ => None,
        },
        (true, false) if size1 <= size2 => match matches_bwd {
            1 => Some(EventKind::Growing),
            n if n > 1 => Some(EventKind::Merging),
            _ => None,
        },
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupRef {
    /// Position within its frame's group set.
    pub position: usize,
    pub id: String,
}

impl GroupRef {
    pub fn of(set: &GroupSet, position: usize) -> Self {
        Self {
            position,
            id: set.groups[position].id.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub frame_pair: (usize, usize),
    pub kind: EventKind,
    pub source: Option<GroupRef>,
    pub target: Option<GroupRef>,
    /// `(I(source, target), I(target, source))` for pairwise events.
    pub inclusions: Option<(f64, f64)>,
}

impl EventRecord {
    fn sort_key(&self) -> (usize, Option<usize>, Option<usize>) {
        (
            self.frame_pair.0,
            self.source.as_ref().map(|g| g.position),
            self.target.as_ref().map(|g| g.position),
        )
    }
}

/// Lifecycle verdicts for one frame pair: which earlier groups dissolve and
/// which later groups form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lifecycle {
    pub dissolving: Vec<bool>,
    pub forming: Vec<bool>,
}

impl Lifecycle {
    pub fn from_matrix(matrix: &InclusionMatrix, th: &Thresholds) -> Self {
        let low = |a: usize, b: usize| matrix.forward(a, b) < th.lifecycle && matrix.backward(a, b) < th.lifecycle;
        Self {
            dissolving: (0..matrix.rows()).map(|a| (0..matrix.cols()).all(|b| low(a, b))).collect(),
            forming: (0..matrix.cols()).map(|b| (0..matrix.rows()).all(|a| low(a, b))).collect(),
        }
    }
}

/// Dissolving and forming events of one frame pair.
pub fn detect_lifecycle(
    earlier: &GroupSet,
    later: &GroupSet,
    matrix: &InclusionMatrix,
    th: &Thresholds,
) -> Vec<EventRecord> {
    let lc = Lifecycle::from_matrix(matrix, th);
    lifecycle_events(earlier, later, matrix.frame_pair, &lc)
}

fn lifecycle_events(
    earlier: &GroupSet,
    later: &GroupSet,
    frame_pair: (usize, usize),
    lc: &Lifecycle,
) -> Vec<EventRecord> {
    let dissolving = lc.dissolving.iter().enumerate().filter(|(_, &d)| d).map(|(a, _)| EventRecord {
        frame_pair,
        kind: EventKind::Dissolving,
        source: Some(GroupRef::of(earlier, a)),
        target: None,
        inclusions: None,
    });
    let forming = lc.forming.iter().enumerate().filter(|(_, &f)| f).map(|(b, _)| EventRecord {
        frame_pair,
        kind: EventKind::Forming,
        source: None,
        target: Some(GroupRef::of(later, b)),
        inclusions: None,
    });
    dissolving.chain(forming).collect()
}

/// Work counters, used to check that threshold sweeps reuse inclusions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComputeStats {
    pub sp_runs: usize,
    pub inclusion_evaluations: usize,
}

/// Threshold-independent part of event detection: per-group SP and the
/// inclusion matrix of every consecutive frame pair.
#[derive(Debug, Clone)]
pub struct EvolutionAnalysis {
    groupsets: Vec<GroupSet>,
    matrices: Vec<InclusionMatrix>,
    stats: ComputeStats,
}

impl EvolutionAnalysis {
    pub fn new(network: &TemporalNetwork, groupsets: &[GroupSet], sp_config: &SpConfig) -> Result<Self> {
        sp_config.validate()?;
        if groupsets.len() != network.frame_count() {
            return Err(Error::GroupsetMismatch(format!(
                "{} group sets for {} frames",
                groupsets.len(),
                network.frame_count()
            )));
        }
        for (k, (gs, snap)) in groupsets.iter().zip(network.frames()).enumerate() {
            if gs.frame_index != k + 1 {
                return Err(Error::GroupsetMismatch(format!(
                    "group set at position {} is labelled frame {}",
                    k + 1,
                    gs.frame_index
                )));
            }
            gs.validate_against(snap)?;
        }

        let jobs: Vec<(usize, usize)> = groupsets
            .iter()
            .enumerate()
            .flat_map(|(f, gs)| (0..gs.len()).map(move |g| (f, g)))
            .collect();
        let flat: Vec<SpVector> = jobs
            .par_iter()
            .map(|&(f, g)| compute_group_sp(&network.frames()[f], groupsets[f].groups[g].members(), sp_config))
            .collect::<Result<_>>()?;
        let mut per_frame: Vec<Vec<SpVector>> = groupsets.iter().map(|gs| Vec::with_capacity(gs.len())).collect();
        for ((f, _), sp) in jobs.iter().zip(flat) {
            per_frame[*f].push(sp);
        }

        let evaluations = AtomicUsize::new(0);
        let matrices = (1..groupsets.len())
            .into_par_iter()
            .map(|j| {
                InclusionMatrix::compute(
                    &groupsets[j - 1],
                    &per_frame[j - 1],
                    &groupsets[j],
                    &per_frame[j],
                    &evaluations,
                )
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(Self {
            groupsets: groupsets.to_vec(),
            matrices,
            stats: ComputeStats {
                sp_runs: jobs.len(),
                inclusion_evaluations: evaluations.into_inner(),
            },
        })
    }

    pub fn groupsets(&self) -> &[GroupSet] {
        &self.groupsets
    }

    /// One matrix per consecutive frame pair, in frame order.
    pub fn matrices(&self) -> &[InclusionMatrix] {
        &self.matrices
    }

    pub fn stats(&self) -> ComputeStats {
        self.stats
    }

    /// Classifies every frame pair under `th`, sorted by
    /// (frame pair, source position, target position).
    pub fn events(&self, th: &Thresholds) -> Result<Vec<EventRecord>> {
        th.validate()?;
        let mut events: Vec<EventRecord> = self
            .matrices
            .par_iter()
            .enumerate()
            .flat_map_iter(|(j, m)| self.frame_pair_events(&self.groupsets[j], &self.groupsets[j + 1], m, th))
            .collect();
        events.sort_by_key(EventRecord::sort_key);
        Ok(events)
    }

    fn frame_pair_events(
        &self,
        earlier: &GroupSet,
        later: &GroupSet,
        m: &InclusionMatrix,
        th: &Thresholds,
    ) -> Vec<EventRecord> {
        let lc = Lifecycle::from_matrix(m, th);
        let mut out = lifecycle_events(earlier, later, m.frame_pair, &lc);
        let fwd_matches: Vec<usize> = (0..m.rows()).map(|a| m.matches_forward(a, th)).collect();
        let bwd_matches: Vec<usize> = (0..m.cols()).map(|b| m.matches_backward(b, th)).collect();
        for a in (0..m.rows()).filter(|&a| !lc.dissolving[a]) {
            for b in (0..m.cols()).filter(|&b| !lc.forming[b]) {
                let (f, bw) = (m.forward(a, b), m.backward(a, b));
                let kind = classify_pair(
                    earlier.groups[a].len(),
                    later.groups[b].len(),
                    f,
                    bw,
                    fwd_matches[a],
                    bwd_matches[b],
                    th,
                );
                if let Some(kind) = kind {
                    out.push(EventRecord {
                        frame_pair: m.frame_pair,
                        kind,
                        source: Some(GroupRef::of(earlier, a)),
                        target: Some(GroupRef::of(later, b)),
                        inclusions: Some((f, bw)),
                    });
                }
            }
        }
        out
    }
}

/// Runs the full detection: per-group SP, inclusion matrices, lifecycle and
/// pairwise classification for every consecutive frame pair.
pub fn detect_events(
    network: &TemporalNetwork,
    groupsets: &[GroupSet],
    th: &Thresholds,
    sp_config: &SpConfig,
) -> Result<Vec<EventRecord>> {
    th.validate()?;
    EvolutionAnalysis::new(network, groupsets, sp_config)?.events(th)
}

pub const EVENT_HEADER: [&str; 7] = [
    "frame_i",
    "frame_j",
    "event_kind",
    "source_group",
    "target_group",
    "inclusion_fwd",
    "inclusion_bwd",
];

pub fn write_events<W: Write>(writer: W, events: &[EventRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(EVENT_HEADER)?;
    for e in events {
        let (fwd, bwd) = e
            .inclusions
            .map(|(f, b)| (f.to_string(), b.to_string()))
            .unwrap_or_default();
        w.write_record([
            e.frame_pair.0.to_string().as_str(),
            e.frame_pair.1.to_string().as_str(),
            e.kind.as_str(),
            e.source.as_ref().map_or("", |g| g.id.as_str()),
            e.target.as_ref().map_or("", |g| g.id.as_str()),
            &fwd,
            &bwd,
        ])?;
    }
    w.flush().map_err(|e| Error::io("<event output>", e))?;
    Ok(())
}

/// Reads an event CSV back, resolving group ids against `groupsets`
/// (one set per frame, in frame order).
pub fn read_events<R: Read>(reader: R, groupsets: &[GroupSet]) -> Result<Vec<EventRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().ne(EVENT_HEADER) {
        return Err(Error::InvalidConfig(format!("unexpected event header {header:?}")));
    }
    let resolve = |frame: usize, id: &str| -> Result<Option<GroupRef>> {
        if id.is_empty() {
            return Ok(None);
        }
        let set = frame
            .checked_sub(1)
            .and_then(|i| groupsets.get(i))
            .ok_or_else(|| Error::UnknownGroup(format!("frame {frame}")))?;
        let position = set
            .position_of(id)
            .ok_or_else(|| Error::UnknownGroup(format!("{id} in frame {frame}")))?;
        Ok(Some(GroupRef {
            position,
            id: id.to_owned(),
        }))
    };
    let parse_usize = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::InvalidConfig(format!("bad frame index {s:?}")))
    };
    let parse_f64 = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| Error::InvalidConfig(format!("bad inclusion {s:?}")))
    };
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        if row.len() != EVENT_HEADER.len() {
            return Err(Error::InvalidConfig(format!("event row has {} columns", row.len())));
        }
        let fi = parse_usize(&row[0])?;
        let fj = parse_usize(&row[1])?;
        let inclusions = if row[5].is_empty() {
            None
        } else {
            Some((parse_f64(&row[5])?, parse_f64(&row[6])?))
        };
        out.push(EventRecord {
            frame_pair: (fi, fj),
            kind: row[2].parse()?,
            source: resolve(fi, &row[3])?,
            target: resolve(fj, &row[4])?,
            inclusions,
        });
    }
    Ok(out)
}
