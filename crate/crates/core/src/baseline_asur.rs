//! Overlap-based event detection (Asur, Parthasarathy and Ucar), kept as a
//! comparison baseline, together with an audit for group pairs that end up
//! with several event kinds at once.
//!
//! Rules for a frame pair `(T_i, T_i+1)`:
//! * continue: a group of `T_i` reappears with identical membership;
//! * dissolve: none of its members is active anywhere in `T_i+1`;
//! * form: none of the members of a `T_i+1` group was active in `T_i`;
//! * k_merge: two `T_i` groups, each intersecting a `T_i+1` group `C`, with
//!   `|(A ∪ B) ∩ C| > kappa * max(|A ∪ B|, |C|)`;
//! * k_split: the mirror image.
//!
//! Every rule is evaluated independently, so one pair may collect several
//! kinds.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ged::{GroupRef, EVENT_HEADER};
use crate::grouping::{Group, GroupSet};
use crate::temporal_network::{Snapshot, TemporalNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsurConfig {
    pub kappa: f64,
}

impl Default for AsurConfig {
    fn default() -> Self {
        Self { kappa: 0.5 }
    }
}

impl AsurConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(Error::InvalidConfig(format!("kappa must lie in (0, 1], got {}", self.kappa)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsurKind {
    Continue,
    KMerge,
    KSplit,
    Form,
    Dissolve,
}

impl AsurKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AsurKind::Continue => "continue",
            AsurKind::KMerge => "k_merge",
            AsurKind::KSplit => "k_split",
            AsurKind::Form => "form",
            AsurKind::Dissolve => "dissolve",
        }
    }
}

impl fmt::Display for AsurKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "asur:{}", self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AsurEvent {
    pub frame_pair: (usize, usize),
    pub kind: AsurKind,
    /// Groups of the earlier frame; two for a merge.
    pub sources: Vec<GroupRef>,
    /// Groups of the later frame; two for a split.
    pub targets: Vec<GroupRef>,
}

pub fn asur_detect(groupsets: &[GroupSet], network: &TemporalNetwork, config: &AsurConfig) -> Result<Vec<AsurEvent>> {
    config.validate()?;
    if groupsets.len() != network.frame_count() {
        return Err(Error::GroupsetMismatch(format!(
            "{} group sets for {} frames",
            groupsets.len(),
            network.frame_count()
        )));
    }
    let events = (1..groupsets.len())
        .into_par_iter()
        .flat_map_iter(|j| {
            frame_pair_events(
                &groupsets[j - 1],
                &groupsets[j],
                &network.frames()[j - 1],
                &network.frames()[j],
                config.kappa,
            )
        })
        .collect();
    Ok(events)
}

fn frame_pair_events(
    earlier: &GroupSet,
    later: &GroupSet,
    earlier_frame: &Snapshot,
    later_frame: &Snapshot,
    kappa: f64,
) -> Vec<AsurEvent> {
    let frame_pair = (earlier.frame_index, later.frame_index);
    let event = |kind, sources: Vec<usize>, targets: Vec<usize>| AsurEvent {
        frame_pair,
        kind,
        sources: sources.into_iter().map(|a| GroupRef::of(earlier, a)).collect(),
        targets: targets.into_iter().map(|b| GroupRef::of(later, b)).collect(),
    };
    let mut out = Vec::new();

    for (a, g) in earlier.groups.iter().enumerate() {
        for (b, h) in later.groups.iter().enumerate() {
            if g.members() == h.members() {
                out.push(event(AsurKind::Continue, vec![a], vec![b]));
            }
        }
    }
    for (a, g) in earlier.groups.iter().enumerate() {
        if !g.members().iter().any(|&n| later_frame.contains(n)) {
            out.push(event(AsurKind::Dissolve, vec![a], vec![]));
        }
    }
    for (b, h) in later.groups.iter().enumerate() {
        if !h.members().iter().any(|&n| earlier_frame.contains(n)) {
            out.push(event(AsurKind::Form, vec![], vec![b]));
        }
    }
    for (b, target) in later.groups.iter().enumerate() {
        for (x, y) in combined_overlaps(&earlier.groups, target, kappa) {
            out.push(event(AsurKind::KMerge, vec![x, y], vec![b]));
        }
    }
    for (a, source) in earlier.groups.iter().enumerate() {
        for (x, y) in combined_overlaps(&later.groups, source, kappa) {
            out.push(event(AsurKind::KSplit, vec![a], vec![x, y]));
        }
    }
    out
}

/// Pairs `(x, y)`, `x < y`, of `candidates` that both intersect `other` and
/// whose union overlaps it by more than `kappa` of the larger side.
fn combined_overlaps(candidates: &[Group], other: &Group, kappa: f64) -> Vec<(usize, usize)> {
    let touching: Vec<usize> = (0..candidates.len())
        .filter(|&i| candidates[i].intersection_size(other) > 0)
        .collect();
    let mut out = Vec::new();
    for (i, &x) in touching.iter().enumerate() {
        for &y in &touching[i + 1..] {
            let union: BTreeSet<_> = candidates[x]
                .members()
                .iter()
                .chain(candidates[y].members())
                .copied()
                .collect();
            let overlap = union.iter().filter(|&&n| other.contains(n)).count();
            let base = union.len().max(other.len());
            if overlap as f64 > kappa * base as f64 {
                out.push((x, y));
            }
        }
    }
    out
}

/// A source/target pair that collected more than one event kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnomalousPair {
    pub frame_pair: (usize, usize),
    pub source: Option<String>,
    pub target: Option<String>,
    pub kinds: Vec<AsurKind>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub anomalous_pairs: Vec<AnomalousPair>,
    /// Number of pairs carrying two or more kinds.
    pub anomaly_count: usize,
    /// Kinds beyond the first, summed over all pairs.
    pub duplicates: usize,
    pub total: usize,
    /// `total - duplicates`.
    pub distinct: usize,
}

pub fn asur_anomaly_audit(events: &[AsurEvent]) -> AuditReport {
    type Key = ((usize, usize), Option<String>, Option<String>);
    let mut kinds: BTreeMap<Key, BTreeSet<AsurKind>> = BTreeMap::new();
    for e in events {
        let sources: Vec<Option<String>> = if e.sources.is_empty() {
            vec![None]
        } else {
            e.sources.iter().map(|g| Some(g.id.clone())).collect()
        };
        let targets: Vec<Option<String>> = if e.targets.is_empty() {
            vec![None]
        } else {
            e.targets.iter().map(|g| Some(g.id.clone())).collect()
        };
        for s in &sources {
            for t in &targets {
                kinds
                    .entry((e.frame_pair, s.clone(), t.clone()))
                    .or_default()
                    .insert(e.kind);
            }
        }
    }
    let anomalous_pairs: Vec<AnomalousPair> = kinds
        .into_iter()
        .filter(|(_, k)| k.len() > 1)
        .map(|((frame_pair, source, target), k)| AnomalousPair {
            frame_pair,
            source,
            target,
            kinds: k.into_iter().collect(),
        })
        .collect();
    let duplicates = anomalous_pairs.iter().map(|p| p.kinds.len() - 1).sum();
    AuditReport {
        anomaly_count: anomalous_pairs.len(),
        anomalous_pairs,
        duplicates,
        total: events.len(),
        distinct: events.len().saturating_sub(duplicates),
    }
}

/// Writes events in the GED event layout; kinds are prefixed `asur:` and
/// multi-group sides are joined with `;`.
pub fn write_asur_events<W: Write>(writer: W, events: &[AsurEvent]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(EVENT_HEADER)?;
    let join = |gs: &[GroupRef]| gs.iter().map(|g| g.id.as_str()).collect::<Vec<_>>().join(";");
    for e in events {
        w.write_record([
            e.frame_pair.0.to_string(),
            e.frame_pair.1.to_string(),
            e.kind.to_string(),
            join(&e.sources),
            join(&e.targets),
            String::new(),
            String::new(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<event output>", e))?;
    Ok(())
}
