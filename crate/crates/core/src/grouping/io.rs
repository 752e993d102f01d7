//! Group files: `frame_index,group_id,node_identifier`, one membership per row.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{Detector, Group, GroupSet};
use crate::error::{Diagnostic, Error, Result};
use crate::temporal_network::{NodeId, TemporalNetwork};

pub const GROUP_HEADER: [&str; 3] = ["frame_index", "group_id", "node_identifier"];

#[derive(Debug, Clone, Default)]
pub struct LoadedGroups {
    /// One set per frame that has at least one valid group, in frame order.
    pub groupsets: Vec<GroupSet>,
    pub diagnostics: Vec<Diagnostic>,
}

pub fn load_groups(path: impl AsRef<Path>, network: &TemporalNetwork) -> Result<LoadedGroups> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_groups_from_reader(file, network)
}

pub fn load_groups_from_reader<R: Read>(reader: R, network: &TemporalNetwork) -> Result<LoadedGroups> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);

    let frames = network.frame_count();
    let mut diagnostics = Vec::new();
    // frame -> [(group id, members)] in order of first appearance
    let mut raw: BTreeMap<usize, Vec<(String, Vec<NodeId>)>> = BTreeMap::new();
    let mut mentioned: BTreeMap<(usize, String), u64> = BTreeMap::new();
    let mut first = true;
    for row in rdr.records() {
        let row = match row {
            Ok(row) => row,
            Err(err) if err.is_io_error() => return Err(err.into()),
            Err(err) => {
                let line = err.position().map(|p| p.line()).unwrap_or(0);
                diagnostics.push(Diagnostic::new(line, err.to_string()));
                continue;
            }
        };
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if std::mem::take(&mut first) && row.get(0) == Some(GROUP_HEADER[0]) {
            continue;
        }
        if row.len() != 3 {
            diagnostics.push(Diagnostic::new(line, format!("expected 3 columns, found {}", row.len())));
            continue;
        }
        let Ok(frame) = row[0].parse::<usize>() else {
            diagnostics.push(Diagnostic::new(line, format!("unparseable frame index {:?}", &row[0])));
            continue;
        };
        if frame == 0 || frame > frames {
            return Err(Error::FrameOutOfRange { line, frame, frames });
        }
        let id = &row[1];
        if id.is_empty() {
            diagnostics.push(Diagnostic::new(line, "empty group id"));
            continue;
        }
        mentioned.entry((frame, id.to_owned())).or_insert(line);
        let Some(node) = network.registry().lookup(&row[2]) else {
            diagnostics.push(Diagnostic::new(line, format!("unknown node {:?}", &row[2])));
            continue;
        };
        let snapshot = network.frame(frame).expect("frame in range");
        if !snapshot.contains(node) {
            diagnostics.push(Diagnostic::new(
                line,
                format!("node {:?} is not active in frame {frame}", &row[2]),
            ));
            continue;
        }
        let groups = raw.entry(frame).or_default();
        match groups.iter_mut().find(|g| g.0 == id) {
            Some(g) => g.1.push(node),
            None => groups.push((id.to_owned(), vec![node])),
        }
    }

    for ((frame, id), line) in mentioned {
        let kept = raw.get(&frame).is_some_and(|gs| gs.iter().any(|g| g.0 == id));
        if !kept {
            diagnostics.push(Diagnostic::new(
                line,
                format!("group {id:?} in frame {frame} has no valid members; dropped"),
            ));
        }
    }
    diagnostics.sort_by_key(|d| d.line);

    let mut groupsets = Vec::new();
    for (frame, groups) in raw {
        let mut list = Vec::with_capacity(groups.len());
        for (id, members) in groups {
            list.push(Group::new(id, members)?);
        }
        list.sort_by(|a, b| id_order(&a.id, &b.id));
        groupsets.push(GroupSet::new(frame, list, Detector::External));
    }
    Ok(LoadedGroups {
        groupsets,
        diagnostics,
    })
}

/// Numeric ids sort numerically and before any non-numeric id.
fn id_order(a: &str, b: &str) -> std::cmp::Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        (Ok(_), Err(_)) => std::cmp::Ordering::Less,
        (Err(_), Ok(_)) => std::cmp::Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

pub fn write_groups<W: Write>(writer: W, groupsets: &[GroupSet], network: &TemporalNetwork) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(GROUP_HEADER)?;
    for gs in groupsets {
        let frame = gs.frame_index.to_string();
        for g in &gs.groups {
            for &m in g.members() {
                w.write_record([frame.as_str(), g.id.as_str(), network.registry().name(m)])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("<group output>", e))?;
    Ok(())
}
