//! Asynchronous label propagation on the symmetrized weighted graph.
//!
//! Nodes are visited in one fixed order drawn from a seeded shuffle. Each
//! node adopts the label with the largest total neighbour weight, ties going
//! to the smallest label. The result partitions the active nodes.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{canonical_groups, Detector, GroupSet};
use crate::temporal_network::{NodeId, Snapshot};

pub const DEFAULT_SEED: u64 = 42;
const MAX_SWEEPS: usize = 100;

pub fn detect_groups_labelprop(snapshot: &Snapshot, seed: u64) -> GroupSet {
    let n = snapshot.node_count();
    let mut weights: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for e in snapshot.edges() {
        *weights[e.source].entry(e.target).or_insert(0.0) += e.weight;
        *weights[e.target].entry(e.source).or_insert(0.0) += e.weight;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut labels: Vec<usize> = (0..n).collect();
    let mut tally: BTreeMap<usize, f64> = BTreeMap::new();
    for _ in 0..MAX_SWEEPS {
        let mut changed = false;
        for &u in &order {
            if weights[u].is_empty() {
                continue;
            }
            tally.clear();
            for (&v, &w) in &weights[u] {
                *tally.entry(labels[v]).or_insert(0.0) += w;
            }
            // BTreeMap iterates labels ascending; strict > keeps the smallest on ties
            let mut best = (usize::MAX, f64::NEG_INFINITY);
            for (&label, &w) in &tally {
                if w > best.1 {
                    best = (label, w);
                }
            }
            if best.0 != labels[u] {
                labels[u] = best.0;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut by_label: BTreeMap<usize, Vec<NodeId>> = BTreeMap::new();
    for (u, &l) in labels.iter().enumerate() {
        by_label.entry(l).or_default().push(snapshot.nodes()[u]);
    }
    let groups = canonical_groups(by_label.into_values().collect());
    GroupSet::new(snapshot.frame_index(), groups, Detector::LabelProp)
}
