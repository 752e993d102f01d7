//! Per-frame group extraction.
//!
//! Groups come from the built-in clique percolation or label propagation
//! detectors, or from an external group file. All three produce
//! [`GroupSet`]s in the same shape and can be written back to the same file
//! format.

mod cpm;
mod io;
mod labelprop;

pub use cpm::{detect_groups_cpm, maximal_cliques, DEFAULT_K};
pub use io::{load_groups, load_groups_from_reader, write_groups, LoadedGroups, GROUP_HEADER};
pub use labelprop::{detect_groups_labelprop, DEFAULT_SEED};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::temporal_network::{NodeId, Snapshot, TemporalNetwork};

/// A nonempty vertex subset of one frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub id: String,
    members: Vec<NodeId>,
}

impl Group {
    pub fn new(id: impl Into<String>, members: impl IntoIterator<Item = NodeId>) -> Result<Self> {
        let mut members: Vec<NodeId> = members.into_iter().collect();
        if members.is_empty() {
            return Err(Error::EmptyGroup);
        }
        members.sort_unstable();
        members.dedup();
        Ok(Self {
            id: id.into(),
            members,
        })
    }

    /// Members sorted by node id.
    pub fn members(&self) -> &[NodeId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.members.binary_search(&node).is_ok()
    }

    pub fn intersection_size(&self, other: &Group) -> usize {
        let (mut i, mut j, mut n) = (0, 0, 0);
        let (a, b) = (&self.members, &other.members);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detector {
    Cpm,
    LabelProp,
    External,
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Detector::Cpm => "cpm",
            Detector::LabelProp => "label_prop",
            Detector::External => "external",
        })
    }
}

/// Groups extracted in one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSet {
    pub frame_index: usize,
    pub groups: Vec<Group>,
    pub detector: Detector,
}

impl GroupSet {
    pub fn new(frame_index: usize, groups: Vec<Group>, detector: Detector) -> Self {
        Self {
            frame_index,
            groups,
            detector,
        }
    }

    pub fn empty(frame_index: usize, detector: Detector) -> Self {
        Self::new(frame_index, Vec::new(), detector)
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn position_of(&self, id: &str) -> Option<usize> {
        self.groups.iter().position(|g| g.id == id)
    }

    /// Checks that every member belongs to the snapshot.
    pub fn validate_against(&self, snapshot: &Snapshot) -> Result<()> {
        for g in &self.groups {
            if let Some(&n) = g.members().iter().find(|&&n| !snapshot.contains(n)) {
                return Err(Error::NodeNotInFrame {
                    frame: self.frame_index,
                    node: format!("#{}", n.0),
                });
            }
        }
        Ok(())
    }
}

/// Expands a sparse list of group sets to one per frame, in frame order.
/// Frames without an entry get an empty set.
pub fn align_to_frames(mut sets: Vec<GroupSet>, network: &TemporalNetwork, detector: Detector) -> Result<Vec<GroupSet>> {
    sets.sort_by_key(|s| s.frame_index);
    let m = network.frame_count();
    let mut out: Vec<GroupSet> = (1..=m).map(|k| GroupSet::empty(k, detector)).collect();
    for s in sets {
        if s.frame_index == 0 || s.frame_index > m {
            return Err(Error::GroupsetMismatch(format!(
                "group set for frame {} but network has {m} frames",
                s.frame_index
            )));
        }
        let slot = &mut out[s.frame_index - 1];
        if !slot.groups.is_empty() {
            return Err(Error::GroupsetMismatch(format!(
                "duplicate group set for frame {}",
                s.frame_index
            )));
        }
        *slot = s;
    }
    Ok(out)
}

/// Orders groups by member list and numbers them `1..=n`.
pub(crate) fn canonical_groups(mut member_sets: Vec<Vec<NodeId>>) -> Vec<Group> {
    for m in &mut member_sets {
        m.sort_unstable();
        m.dedup();
    }
    member_sets.sort();
    member_sets
        .into_iter()
        .enumerate()
        .map(|(i, m)| Group::new((i + 1).to_string(), m).expect("nonempty"))
        .collect()
}

/// Undirected simple adjacency (sorted neighbour lists, local indices) of a
/// snapshot: `u ~ v` iff at least one direction carries an edge.
pub(crate) fn symmetrized_adjacency(snapshot: &Snapshot) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); snapshot.node_count()];
    for e in snapshot.edges() {
        adj[e.source].push(e.target);
        adj[e.target].push(e.source);
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}
