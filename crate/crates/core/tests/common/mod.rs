#![allow(dead_code)]

use std::collections::BTreeSet;

use groupevo::grouping::{Detector, Group, GroupSet};
use groupevo::temporal_network::{build_frames, InteractionRecord, NodeId, Snapshot, TemporalNetwork, WindowPlan};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn name(i: u32) -> String {
    format!("n{i:02}")
}

/// Groups per frame of the eight-frame single-group story: formed in T2,
/// grows in T3, splits in T4, the larger part shrinks in T5, everything
/// continues into T6 where a new group forms, three groups merge in T7 and
/// the merged group is gone in T8.
pub fn story_groups() -> Vec<Vec<(&'static str, Vec<u32>)>> {
    vec![
        vec![],
        vec![("G1", (1..=6).collect())],
        vec![("G1", (1..=10).collect())],
        vec![("G2", (1..=6).collect()), ("G3", (7..=10).collect())],
        vec![("G2", (1..=5).collect()), ("G3", (7..=10).collect())],
        vec![
            ("G2", (1..=5).collect()),
            ("G3", (7..=10).collect()),
            ("G4", (11..=14).collect()),
        ],
        vec![("G5", (1..=5).chain(7..=14).collect())],
        vec![],
    ]
}

/// Interaction records realizing [`story_groups`]: every group is a complete
/// directed clique inside its unit-length frame, frames 1 and 8 carry one
/// unrelated exchange so they exist.
pub fn story_records() -> Vec<InteractionRecord> {
    let mut recs = Vec::new();
    for (f, groups) in story_groups().iter().enumerate() {
        let t = f as f64 + 0.5;
        if groups.is_empty() {
            recs.push(InteractionRecord::new("z1", "z2", t));
        }
        for (_, members) in groups {
            for &a in members {
                for &b in members {
                    if a != b {
                        recs.push(InteractionRecord::new(name(a), name(b), t));
                    }
                }
            }
        }
    }
    recs
}

pub fn story() -> (TemporalNetwork, Vec<GroupSet>) {
    let net = build_frames(&story_records(), WindowPlan::new(1.0, 1.0, 0.0).unwrap()).unwrap();
    let sets = story_groups()
        .into_iter()
        .enumerate()
        .map(|(f, groups)| {
            let groups = groups
                .into_iter()
                .map(|(id, members)| {
                    Group::new(id, members.iter().map(|&m| net.registry().lookup(&name(m)).unwrap())).unwrap()
                })
                .collect();
            GroupSet::new(f + 1, groups, Detector::External)
        })
        .collect();
    (net, sets)
}

pub fn story_edge_csv() -> String {
    story_records()
        .iter()
        .map(|r| format!("{},{},{}\n", r.source, r.target, r.timestamp))
        .collect()
}

pub fn story_group_csv() -> String {
    let mut s = String::from("frame_index,group_id,node_identifier\n");
    for (f, groups) in story_groups().iter().enumerate() {
        for (id, members) in groups {
            for &m in members {
                s.push_str(&format!("{},{},{}\n", f + 1, id, name(m)));
            }
        }
    }
    s
}

/// Snapshot over nodes `0..n` (`n >= 2`) from weighted directed edges.
/// Every node is present even without edges.
pub fn snapshot(n: u32, edges: &[(u32, u32, f64)]) -> Snapshot {
    assert!(n >= 2);
    Snapshot::from_interactions(
        1,
        (0.0, 1.0),
        (0..n)
            .map(|i| (NodeId(i), NodeId((i + 1) % n), 0.0))
            .chain(edges.iter().map(|&(s, t, w)| (NodeId(s), NodeId(t), w))),
    )
}

pub fn random_digraph(rng: &mut ChaCha8Rng, max_nodes: u32) -> (u32, Vec<(u32, u32, f64)>) {
    let n = rng.random_range(2..=max_nodes);
    let p = rng.random_range(0.1..0.9);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a != b && rng.random_bool(p) {
                edges.push((a, b, rng.random_range(0.5..5.0)));
            }
        }
    }
    (n, edges)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Direct solve of `(I - eps * C^T) sp = (1 - eps) * 1` on the snapshot's
/// commitments, indexed by local node position.
pub fn sp_linear_solve(s: &Snapshot, eps: f64) -> Vec<f64> {
    let n = s.node_count();
    let mut m = DMatrix::<f64>::identity(n, n);
    for e in s.edges() {
        m[(e.target, e.source)] -= eps * e.commitment;
    }
    let rhs = DVector::<f64>::from_element(n, 1.0 - eps);
    let sol = m.lu().solve(&rhs).expect("nonsingular for eps < 1");
    sol.iter().copied().collect()
}

/// Same solve restricted to `members` (local indices), commitments
/// renormalized by raw weight inside the group.
pub fn group_sp_linear_solve(s: &Snapshot, members: &[usize], eps: f64) -> Vec<f64> {
    let n = members.len();
    let pos = |v: usize| members.iter().position(|&m| m == v);
    let mut out_total = vec![0.0; n];
    for e in s.edges() {
        if let (Some(a), Some(_)) = (pos(e.source), pos(e.target)) {
            out_total[a] += e.weight;
        }
    }
    let mut m = DMatrix::<f64>::identity(n, n);
    for e in s.edges() {
        if let (Some(a), Some(b)) = (pos(e.source), pos(e.target)) {
            m[(b, a)] -= eps * e.weight / out_total[a];
        }
    }
    let rhs = DVector::<f64>::from_element(n, 1.0 - eps);
    m.lu().solve(&rhs).expect("nonsingular").iter().copied().collect()
}

/// k-clique communities by brute force: list every k-clique, join cliques
/// sharing k-1 nodes, return the node unions sorted.
pub fn cpm_bruteforce(n: usize, edges: &[(usize, usize)], k: usize) -> Vec<Vec<usize>> {
    let mut adj = vec![vec![false; n]; n];
    for &(a, b) in edges {
        if a != b {
            adj[a][b] = true;
            adj[b][a] = true;
        }
    }
    let mut cliques: Vec<Vec<usize>> = Vec::new();
    let mut stack = Vec::new();
    fn extend(
        adj: &[Vec<bool>],
        k: usize,
        start: usize,
        stack: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if stack.len() == k {
            out.push(stack.clone());
            return;
        }
        for v in start..adj.len() {
            if stack.iter().all(|&u| adj[u][v]) {
                stack.push(v);
                extend(adj, k, v + 1, stack, out);
                stack.pop();
            }
        }
    }
    extend(&adj, k, 0, &mut stack, &mut cliques);

    let mut parent: Vec<usize> = (0..cliques.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    for i in 0..cliques.len() {
        for j in i + 1..cliques.len() {
            let shared = cliques[i].iter().filter(|v| cliques[j].contains(v)).count();
            if shared == k - 1 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut comps: std::collections::BTreeMap<usize, BTreeSet<usize>> = Default::default();
    for (i, c) in cliques.iter().enumerate() {
        let r = find(&mut parent, i);
        comps.entry(r).or_default().extend(c);
    }
    let mut out: Vec<Vec<usize>> = comps.into_values().map(|s| s.into_iter().collect()).collect();
    out.sort();
    out
}

pub fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> (usize, Vec<(usize, usize)>) {
    let n = rng.random_range(2..=max_nodes);
    let p = rng.random_range(0.15..0.6);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(p) {
                // random direction; the detector must ignore it
                edges.push(if rng.random_bool(0.5) { (a, b) } else { (b, a) });
            }
        }
    }
    (n, edges)
}

pub fn graph_snapshot(n: usize, edges: &[(usize, usize)]) -> Snapshot {
    let weighted: Vec<(u32, u32, f64)> = edges.iter().map(|&(a, b)| (a as u32, b as u32, 1.0)).collect();
    snapshot(n as u32, &weighted)
}

pub fn group_members(gs: &GroupSet) -> Vec<Vec<usize>> {
    let mut v: Vec<Vec<usize>> = gs
        .groups
        .iter()
        .map(|g| g.members().iter().map(|m| m.0 as usize).collect())
        .collect();
    v.sort();
    v
}
