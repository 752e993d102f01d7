//! Per-group histories stitched from frame-pair events, and event counts.
//!
//! A chain is a maximal run of groups linked one-to-one: group `g` in frame
//! `k` continues into `h` in frame `k+1` when `g` has exactly one outgoing
//! pairwise event and that event is the only one arriving at `h`. Splits
//! therefore end the parent chain and start one child chain per fragment;
//! merges end every contributing chain and start one for the merged group.
//! Child chains record their parents, parent steps record the chains they
//! lead into.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ged::{EventKind, EventRecord, GroupRef};
use crate::grouping::GroupSet;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ChainOrigin {
    /// The group exists in the first frame.
    FirstFrame,
    /// Started by the forming event at this index of the event list.
    Formed { event: usize },
    /// Produced by a split or merge of these chains.
    Branched { parents: Vec<usize> },
    /// No event leads into the group.
    Unmatched,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepEvent {
    /// Index into the event list the chains were built from.
    pub event: usize,
    pub kind: EventKind,
    /// Chain holding the target group; `None` for dissolving.
    pub target_chain: Option<usize>,
    pub target: Option<GroupRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStep {
    pub frame_index: usize,
    pub group: GroupRef,
    /// Events leading out of this frame. Empty means the group was not
    /// matched in the next frame, or this is the last frame.
    pub outgoing: Vec<StepEvent>,
    pub last_frame: bool,
}

impl ChainStep {
    /// `kind[+kind...]`, `unmatched` or `end`.
    pub fn status(&self) -> String {
        if self.outgoing.is_empty() {
            return if self.last_frame { "end" } else { "unmatched" }.to_owned();
        }
        let kinds: BTreeSet<EventKind> = self.outgoing.iter().map(|e| e.kind).collect();
        kinds.iter().map(|k| k.as_str()).collect::<Vec<_>>().join("+")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionChain {
    pub chain_id: usize,
    pub origin: ChainOrigin,
    pub steps: Vec<ChainStep>,
}

type Node = (usize, usize); // (frame index, position)

struct EventIndex<'a> {
    outgoing: BTreeMap<Node, Vec<usize>>,
    incoming: BTreeMap<Node, Vec<usize>>,
    formed_by: BTreeMap<Node, usize>,
    events: &'a [EventRecord],
}

impl<'a> EventIndex<'a> {
    fn new(events: &'a [EventRecord], groupsets: &[GroupSet]) -> Result<Self> {
        let check = |frame: usize, g: &GroupRef| -> Result<Node> {
            let set = frame
                .checked_sub(1)
                .and_then(|i| groupsets.get(i))
                .ok_or_else(|| Error::UnknownGroup(format!("{} in frame {frame}", g.id)))?;
            match set.groups.get(g.position) {
                Some(grp) if grp.id == g.id => Ok((frame, g.position)),
                _ => Err(Error::UnknownGroup(format!("{} in frame {frame}", g.id))),
            }
        };
        let mut idx = EventIndex {
            outgoing: BTreeMap::new(),
            incoming: BTreeMap::new(),
            formed_by: BTreeMap::new(),
            events,
        };
        for (i, e) in events.iter().enumerate() {
            if e.frame_pair.1 != e.frame_pair.0 + 1 {
                return Err(Error::InvalidConfig(format!(
                    "event {i} spans non-consecutive frames {:?}",
                    e.frame_pair
                )));
            }
            let src = e.source.as_ref().map(|g| check(e.frame_pair.0, g)).transpose()?;
            let tgt = e.target.as_ref().map(|g| check(e.frame_pair.1, g)).transpose()?;
            match (src, tgt) {
                (Some(s), Some(t)) => {
                    idx.outgoing.entry(s).or_default().push(i);
                    idx.incoming.entry(t).or_default().push(i);
                }
                (Some(s), None) => idx.outgoing.entry(s).or_default().push(i),
                (None, Some(t)) => {
                    idx.formed_by.insert(t, i);
                }
                (None, None) => {
                    return Err(Error::InvalidConfig(format!("event {i} has neither source nor target")));
                }
            }
        }
        Ok(idx)
    }

    fn pair_out(&self, n: Node) -> Vec<usize> {
        self.outgoing
            .get(&n)
            .map(|v| v.iter().copied().filter(|&i| self.events[i].target.is_some()).collect())
            .unwrap_or_default()
    }

    fn pair_in(&self, n: Node) -> &[usize] {
        self.incoming.get(&n).map(Vec::as_slice).unwrap_or(&[])
    }

    /// One-to-one successor of `n`, if any.
    fn successor(&self, n: Node) -> Option<Node> {
        let out = self.pair_out(n);
        let [only] = out[..] else { return None };
        let e = &self.events[only];
        let t = (e.frame_pair.1, e.target.as_ref()?.position);
        (self.pair_in(t) == [only]).then_some(t)
    }
}

/// Builds chains over `groupsets` (one set per frame, in frame order) from
/// the events detected on them.
pub fn build_chains(events: &[EventRecord], groupsets: &[GroupSet]) -> Result<Vec<EvolutionChain>> {
    let idx = EventIndex::new(events, groupsets)?;
    let last = groupsets.len();

    let mut has_pred: BTreeSet<Node> = BTreeSet::new();
    for (f, gs) in groupsets.iter().enumerate() {
        for p in 0..gs.len() {
            if let Some(t) = idx.successor((f + 1, p)) {
                has_pred.insert(t);
            }
        }
    }

    // chain membership first so that step events can point at target chains
    let mut chain_of: BTreeMap<Node, usize> = BTreeMap::new();
    let mut runs: Vec<Vec<Node>> = Vec::new();
    for (f, gs) in groupsets.iter().enumerate() {
        for p in 0..gs.len() {
            let start = (f + 1, p);
            if has_pred.contains(&start) {
                continue;
            }
            let mut run = vec![start];
            while let Some(next) = idx.successor(*run.last().expect("nonempty")) {
                run.push(next);
            }
            for &n in &run {
                chain_of.insert(n, runs.len());
            }
            runs.push(run);
        }
    }

    let mut chains = Vec::with_capacity(runs.len());
    for (chain_id, run) in runs.into_iter().enumerate() {
        let head = run[0];
        let origin = if let Some(&event) = idx.formed_by.get(&head) {
            ChainOrigin::Formed { event }
        } else if !idx.pair_in(head).is_empty() {
            let parents: BTreeSet<usize> = idx
                .pair_in(head)
                .iter()
                .map(|&i| {
                    let e = &events[i];
                    chain_of[&(e.frame_pair.0, e.source.as_ref().expect("pair event").position)]
                })
                .collect();
            ChainOrigin::Branched {
                parents: parents.into_iter().collect(),
            }
        } else if head.0 == 1 {
            ChainOrigin::FirstFrame
        } else {
            ChainOrigin::Unmatched
        };
        let steps = run
            .iter()
            .map(|&(f, p)| {
                let outgoing = idx
                    .outgoing
                    .get(&(f, p))
                    .map(|v| {
                        v.iter()
                            .map(|&i| {
                                let e = &events[i];
                                StepEvent {
                                    event: i,
                                    kind: e.kind,
                                    target_chain: e.target.as_ref().map(|t| chain_of[&(f + 1, t.position)]),
                                    target: e.target.clone(),
                                }
                            })
                            .collect()
                    })
                    .unwrap_or_default();
                ChainStep {
                    frame_index: f,
                    group: GroupRef::of(&groupsets[f - 1], p),
                    outgoing,
                    last_frame: f == last,
                }
            })
            .collect();
        chains.push(EvolutionChain {
            chain_id,
            origin,
            steps,
        });
    }
    Ok(chains)
}

/// One entry of a single-group history: the event that produced the group
/// seen in `frame_index` (or, for dissolving, the frame it vanished from).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineageStep {
    pub frame_index: usize,
    pub kind: EventKind,
    pub group: Option<String>,
}

/// Follows one group forward through the events, taking the largest
/// fragment after a split, until it dissolves or stops being matched.
///
/// Frames are the later frame of each event pair, so a group formed in
/// frame 2 and dissolved after frame 7 reads `form@2 ... dissolve@8`.
pub fn trace_lineage(
    events: &[EventRecord],
    groupsets: &[GroupSet],
    frame_index: usize,
    position: usize,
) -> Result<Vec<LineageStep>> {
    let idx = EventIndex::new(events, groupsets)?;
    let mut out = Vec::new();
    let mut node = (frame_index, position);
    if let Some(&i) = idx.formed_by.get(&node) {
        out.push(LineageStep {
            frame_index,
            kind: events[i].kind,
            group: events[i].target.as_ref().map(|g| g.id.clone()),
        });
    }
    while let Some(list) = idx.outgoing.get(&node) {
        let next = list
            .iter()
            .filter_map(|&i| events[i].target.as_ref().map(|t| (i, t)))
            .max_by_key(|(_, t)| {
                (
                    groupsets[node.0].groups[t.position].len(),
                    std::cmp::Reverse(t.position),
                )
            });
        match next {
            Some((i, t)) => {
                out.push(LineageStep {
                    frame_index: node.0 + 1,
                    kind: events[i].kind,
                    group: Some(t.id.clone()),
                });
                node = (node.0 + 1, t.position);
            }
            None => {
                let i = list[0];
                out.push(LineageStep {
                    frame_index: node.0 + 1,
                    kind: events[i].kind,
                    group: None,
                });
                break;
            }
        }
    }
    Ok(out)
}

/// Event counts in the column order Form, Dissolve, Shrink, Growth,
/// Continue, Split, Merge.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindCounts {
    pub form: usize,
    pub dissolve: usize,
    pub shrink: usize,
    pub growth: usize,
    pub continuing: usize,
    pub split: usize,
    pub merge: usize,
}

pub const SUMMARY_COLUMNS: [&str; 8] = ["Form", "Dissolve", "Shrink", "Growth", "Continue", "Split", "Merge", "Total"];

impl KindCounts {
    pub fn total(&self) -> usize {
        self.form + self.dissolve + self.shrink + self.growth + self.continuing + self.split + self.merge
    }

    /// Values in [`SUMMARY_COLUMNS`] order, total last.
    pub fn row(&self) -> [usize; 8] {
        [
            self.form,
            self.dissolve,
            self.shrink,
            self.growth,
            self.continuing,
            self.split,
            self.merge,
            self.total(),
        ]
    }

    pub fn get(&self, kind: EventKind) -> usize {
        match kind {
            EventKind::Forming => self.form,
            EventKind::Dissolving => self.dissolve,
            EventKind::Shrinking => self.shrink,
            EventKind::Growing => self.growth,
            EventKind::Continuing => self.continuing,
            EventKind::Splitting => self.split,
            EventKind::Merging => self.merge,
        }
    }

    fn bump(&mut self, kind: EventKind) {
        let slot = match kind {
            EventKind::Forming => &mut self.form,
            EventKind::Dissolving => &mut self.dissolve,
            EventKind::Shrinking => &mut self.shrink,
            EventKind::Growing => &mut self.growth,
            EventKind::Continuing => &mut self.continuing,
            EventKind::Splitting => &mut self.split,
            EventKind::Merging => &mut self.merge,
        };
        *slot += 1;
    }

    fn add(&mut self, other: &KindCounts) {
        self.form += other.form;
        self.dissolve += other.dissolve;
        self.shrink += other.shrink;
        self.growth += other.growth;
        self.continuing += other.continuing;
        self.split += other.split;
        self.merge += other.merge;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventSummary {
    pub per_pair: BTreeMap<(usize, usize), KindCounts>,
    pub total: KindCounts,
}

/// Counts events per frame pair and overall.
///
/// A split is counted once per splitting group and a merge once per merged
/// group, however many fragments are involved; every other event counts
/// once per record.
pub fn summarize(events: &[EventRecord]) -> EventSummary {
    let mut per_pair: BTreeMap<(usize, usize), KindCounts> = BTreeMap::new();
    let mut seen_split: BTreeSet<((usize, usize), String)> = BTreeSet::new();
    let mut seen_merge: BTreeSet<((usize, usize), String)> = BTreeSet::new();
    for e in events {
        let fresh = match e.kind {
            EventKind::Splitting => e
                .source
                .as_ref()
                .is_none_or(|g| seen_split.insert((e.frame_pair, g.id.clone()))),
            EventKind::Merging => e
                .target
                .as_ref()
                .is_none_or(|g| seen_merge.insert((e.frame_pair, g.id.clone()))),
            _ => true,
        };
        let counts = per_pair.entry(e.frame_pair).or_default();
        if fresh {
            counts.bump(e.kind);
        }
    }
    let mut total = KindCounts::default();
    for c in per_pair.values() {
        total.add(c);
    }
    EventSummary { per_pair, total }
}

pub fn write_summary<W: Write>(writer: W, summary: &EventSummary) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["frame_i", "frame_j"];
    header.extend(SUMMARY_COLUMNS);
    w.write_record(&header)?;
    let mut row = |a: String, b: String, c: &KindCounts| {
        let mut rec = vec![a, b];
        rec.extend(c.row().iter().map(usize::to_string));
        w.write_record(&rec)
    };
    for (&(i, j), c) in &summary.per_pair {
        row(i.to_string(), j.to_string(), c)?;
    }
    row("all".into(), "all".into(), &summary.total)?;
    w.flush().map_err(|e| Error::io("<summary output>", e))?;
    Ok(())
}

/// Reads a summary written by [`write_summary`].
pub fn read_summary<R: std::io::Read>(reader: R) -> Result<EventSummary> {
    let bad = |m: String| Error::InvalidConfig(format!("summary: {m}"));
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = EventSummary::default();
    let mut saw_total = false;
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != 10 {
            return Err(bad(format!("row has {} columns", rec.len())));
        }
        let v: Vec<usize> = rec
            .iter()
            .skip(2)
            .map(|s| s.parse().map_err(|_| bad(format!("bad count {s:?}"))))
            .collect::<Result<_>>()?;
        let c = KindCounts {
            form: v[0],
            dissolve: v[1],
            shrink: v[2],
            growth: v[3],
            continuing: v[4],
            split: v[5],
            merge: v[6],
        };
        if c.total() != v[7] {
            return Err(bad(format!("total {} does not match row sum {}", v[7], c.total())));
        }
        if &rec[0] == "all" {
            out.total = c;
            saw_total = true;
        } else {
            let i = rec[0].parse().map_err(|_| bad(format!("bad frame {:?}", &rec[0])))?;
            let j = rec[1].parse().map_err(|_| bad(format!("bad frame {:?}", &rec[1])))?;
            out.per_pair.insert((i, j), c);
        }
    }
    if !saw_total {
        return Err(bad("missing total row".into()));
    }
    Ok(out)
}

fn origin_label(origin: &ChainOrigin) -> String {
    match origin {
        ChainOrigin::FirstFrame => "first_frame".into(),
        ChainOrigin::Formed { .. } => "formed".into(),
        ChainOrigin::Branched { parents } => format!(
            "from:{}",
            parents.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
        ),
        ChainOrigin::Unmatched => "unmatched".into(),
    }
}

/// One line per chain: `id<TAB>origin<TAB>frame:group:event ...`.
pub fn chains_to_text(chains: &[EvolutionChain]) -> String {
    let mut s = String::new();
    for c in chains {
        let steps: Vec<String> = c
            .steps
            .iter()
            .map(|st| format!("{}:{}:{}", st.frame_index, st.group.id, st.status()))
            .collect();
        let _ = writeln!(s, "{}\t{}\t{}", c.chain_id, origin_label(&c.origin), steps.join(" "));
    }
    s
}

/// Parsed form of one text chain line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainLine {
    pub chain_id: usize,
    pub origin: String,
    pub steps: Vec<(usize, String, String)>,
}

pub fn parse_chain_text(text: &str) -> Result<Vec<ChainLine>> {
    let bad = |n: usize, m: &str| Error::InvalidConfig(format!("chain line {}: {m}", n + 1));
    text.lines()
        .enumerate()
        .map(|(n, line)| {
            let mut cols = line.split('\t');
            let (Some(id), Some(origin), Some(steps), None) = (cols.next(), cols.next(), cols.next(), cols.next())
            else {
                return Err(bad(n, "expected three tab-separated fields"));
            };
            let chain_id = id.parse().map_err(|_| bad(n, "bad chain id"))?;
            let steps = steps
                .split(' ')
                .map(|t| {
                    let mut parts = t.splitn(3, ':');
                    let frame = parts.next().and_then(|f| f.parse().ok());
                    match (frame, parts.next(), parts.next()) {
                        (Some(f), Some(g), Some(e)) => Ok((f, g.to_owned(), e.to_owned())),
                        _ => Err(bad(n, "bad step")),
                    }
                })
                .collect::<Result<_>>()?;
            Ok(ChainLine {
                chain_id,
                origin: origin.to_owned(),
                steps,
            })
        })
        .collect()
}

pub fn chains_to_json(chains: &[EvolutionChain]) -> Result<String> {
    serde_json::to_string_pretty(chains).map_err(|e| Error::InvalidConfig(format!("chain export: {e}")))
}

pub fn chains_from_json(text: &str) -> Result<Vec<EvolutionChain>> {
    serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("chain import: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grouping::{Detector, Group};
    use crate::temporal_network::NodeId;

    fn set(frame: usize, groups: &[(&str, std::ops::Range<u32>)]) -> GroupSet {
        GroupSet::new(
            frame,
            groups
                .iter()
                .map(|(id, r)| Group::new(*id, r.clone().map(NodeId)).unwrap())
                .collect(),
            Detector::External,
        )
    }

    fn pair(f: usize, kind: EventKind, s: (usize, &str), t: (usize, &str)) -> EventRecord {
        EventRecord {
            frame_pair: (f, f + 1),
            kind,
            source: Some(GroupRef {
                position: s.0,
                id: s.1.into(),
            }),
            target: Some(GroupRef {
                position: t.0,
                id: t.1.into(),
            }),
            inclusions: Some((1.0, 1.0)),
        }
    }

    #[test]
    fn no_events_gives_unmatched_singletons() {
        let sets = vec![set(1, &[("a", 0..3)]), set(2, &[("b", 0..3), ("c", 5..7)])];
        let chains = build_chains(&[], &sets).unwrap();
        assert_eq!(chains.len(), 3);
        assert!(chains.iter().all(|c| c.steps.len() == 1));
        assert_eq!(chains[0].steps[0].status(), "unmatched");
        assert_eq!(chains[1].origin, ChainOrigin::Unmatched);
        assert_eq!(chains[1].steps[0].status(), "end");
    }

    #[test]
    fn continuation_makes_one_long_chain() {
        let sets: Vec<GroupSet> = (1..=4).map(|f| set(f, &[("1", 0..4), ("2", 4..8)])).collect();
        let mut events = Vec::new();
        for f in 1..4 {
            events.push(pair(f, EventKind::Continuing, (0, "1"), (0, "1")));
            events.push(pair(f, EventKind::Continuing, (1, "2"), (1, "2")));
        }
        let chains = build_chains(&events, &sets).unwrap();
        assert_eq!(chains.len(), 2);
        for c in &chains {
            assert_eq!(c.origin, ChainOrigin::FirstFrame);
            assert_eq!(c.steps.iter().map(|s| s.frame_index).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
            assert!(c.steps[..3].iter().all(|s| s.status() == "continuing"));
        }
    }

    #[test]
    fn split_forks_into_children_with_back_references() {
        let sets = vec![set(1, &[("p", 0..10)]), set(2, &[("x", 0..5), ("y", 5..10)])];
        let events = vec![
            pair(1, EventKind::Splitting, (0, "p"), (0, "x")),
            pair(1, EventKind::Splitting, (0, "p"), (1, "y")),
        ];
        let chains = build_chains(&events, &sets).unwrap();
        assert_eq!(chains.len(), 3);
        let targets: Vec<_> = chains[0].steps[0].outgoing.iter().map(|e| e.target_chain).collect();
        assert_eq!(targets, vec![Some(1), Some(2)]);
        assert_eq!(chains[1].origin, ChainOrigin::Branched { parents: vec![0] });
    }

    #[test]
    fn unknown_group_is_an_error() {
        let sets = vec![set(1, &[("a", 0..3)]), set(2, &[("b", 0..3)])];
        let events = vec![pair(1, EventKind::Continuing, (0, "a"), (0, "zzz"))];
        assert!(matches!(build_chains(&events, &sets), Err(Error::UnknownGroup(_))));
    }

    #[test]
    fn summary_counts_split_once_per_parent() {
        let events = vec![
            pair(1, EventKind::Splitting, (0, "p"), (0, "x")),
            pair(1, EventKind::Splitting, (0, "p"), (1, "y")),
            pair(2, EventKind::Merging, (0, "x"), (0, "m")),
            pair(2, EventKind::Merging, (1, "y"), (0, "m")),
            pair(2, EventKind::Continuing, (2, "z"), (1, "z")),
        ];
        let s = summarize(&events);
        assert_eq!(s.total.split, 1);
        assert_eq!(s.total.merge, 1);
        assert_eq!(s.total.continuing, 1);
        assert_eq!(s.total.total(), 3);
        assert_eq!(s.per_pair.len(), 2);
    }

    #[test]
    fn empty_summary_is_zero() {
        let s = summarize(&[]);
        assert_eq!(s.total, KindCounts::default());
        assert!(s.per_pair.is_empty());
    }

    #[test]
    fn summary_csv_roundtrip() {
        let events = vec![
            pair(1, EventKind::Growing, (0, "a"), (0, "b")),
            pair(2, EventKind::Shrinking, (0, "b"), (0, "c")),
        ];
        let s = summarize(&events);
        let mut buf = Vec::new();
        write_summary(&mut buf, &s).unwrap();
        assert_eq!(read_summary(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn text_and_json_exports_parse_back() {
        let sets = vec![set(1, &[("p", 0..10)]), set(2, &[("x", 0..5), ("y", 5..10)])];
        let events = vec![
            pair(1, EventKind::Splitting, (0, "p"), (0, "x")),
            pair(1, EventKind::Splitting, (0, "p"), (1, "y")),
        ];
        let chains = build_chains(&events, &sets).unwrap();
        let text = chains_to_text(&chains);
        let lines = parse_chain_text(&text).unwrap();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0].steps, vec![(1, "p".into(), "splitting".into())]);
        assert_eq!(lines[1].origin, "from:0");
        let json = chains_to_json(&chains).unwrap();
        assert_eq!(chains_from_json(&json).unwrap(), chains);
    }
}
