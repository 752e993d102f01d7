//! Clique percolation.
//!
//! A k-clique community is the union of k-cliques reachable from one another
//! through k-cliques sharing k-1 nodes. Every k-clique is enumerated once and
//! its (k-1)-node faces are joined in a union-find, so two k-cliques end up
//! together exactly when a chain of shared faces connects them. The cost is
//! polynomial in the number of nodes for fixed k, which keeps dense
//! communities tractable where maximal-clique enumeration is not.

use std::collections::HashMap;

use petgraph::unionfind::UnionFind;

use super::{canonical_groups, symmetrized_adjacency, Detector, GroupSet};
use crate::temporal_network::{NodeId, Snapshot};

pub const DEFAULT_K: usize = 6;

/// Maximal cliques of an undirected graph given as sorted adjacency lists.
/// Bron–Kerbosch with Tomita pivoting, outer loop in degeneracy order.
/// Cliques smaller than `min_size` are skipped.
pub fn maximal_cliques(adj: &[Vec<usize>], min_size: usize) -> Vec<Vec<usize>> {
    let n = adj.len();
    let order = degeneracy_order(adj);
    let mut rank = vec![0usize; n];
    for (i, &v) in order.iter().enumerate() {
        rank[v] = i;
    }
    let mut out = Vec::new();
    let mut r = Vec::new();
    for &v in &order {
        if adj[v].len() + 1 < min_size {
            continue;
        }
        let (p, x): (Vec<usize>, Vec<usize>) = adj[v].iter().partition(|&&w| rank[w] > rank[v]);
        r.push(v);
        expand(adj, &mut r, p, x, min_size, &mut out);
        r.pop();
    }
    for c in &mut out {
        c.sort_unstable();
    }
    out.sort();
    out
}

fn adjacent(adj: &[Vec<usize>], u: usize, v: usize) -> bool {
    adj[u].binary_search(&v).is_ok()
}

fn expand(
    adj: &[Vec<usize>],
    r: &mut Vec<usize>,
    mut p: Vec<usize>,
    mut x: Vec<usize>,
    min_size: usize,
    out: &mut Vec<Vec<usize>>,
) {
    if p.is_empty() {
        if x.is_empty() && r.len() >= min_size {
            out.push(r.clone());
        }
        return;
    }
    if r.len() + p.len() < min_size {
        return;
    }
    // pivot: vertex of P ∪ X with the most neighbours in P
    let pivot = p
        .iter()
        .chain(x.iter())
        .copied()
        .max_by_key(|&u| (p.iter().filter(|&&w| adjacent(adj, u, w)).count(), std::cmp::Reverse(u)))
        .expect("P nonempty");
    let candidates: Vec<usize> = p.iter().copied().filter(|&v| !adjacent(adj, pivot, v)).collect();
    for v in candidates {
        let np: Vec<usize> = p.iter().copied().filter(|&w| adjacent(adj, v, w)).collect();
        let nx: Vec<usize> = x.iter().copied().filter(|&w| adjacent(adj, v, w)).collect();
        r.push(v);
        expand(adj, r, np, nx, min_size, out);
        r.pop();
        p.retain(|&w| w != v);
        x.push(v);
    }
}

/// Smallest-last ordering.
fn degeneracy_order(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let max_deg = degree.iter().copied().max().unwrap_or(0);
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); max_deg + 1];
    for v in (0..n).rev() {
        buckets[degree[v]].push(v);
    }
    let mut removed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut d = 0;
    while order.len() < n {
        d = d.min(max_deg);
        while buckets[d].is_empty() {
            d += 1;
        }
        let v = buckets[d].pop().expect("bucket nonempty");
        if removed[v] || degree[v] != d {
            continue;
        }
        removed[v] = true;
        order.push(v);
        for &w in &adj[v] {
            if !removed[w] {
                degree[w] -= 1;
                buckets[degree[w]].push(w);
                d = d.min(degree[w]);
            }
        }
    }
    order
}

/// k-clique communities of the snapshot, treated as undirected and
/// unweighted. Groups may overlap; every group has at least `k` members.
///
/// # Panics
/// If `k < 3`.
pub fn detect_groups_cpm(snapshot: &Snapshot, k: usize) -> GroupSet {
    assert!(k >= 3, "clique percolation needs k >= 3, got {k}");
    let adj = symmetrized_adjacency(snapshot);
    let order = degeneracy_order(&adj);
    let mut rank = vec![0usize; adj.len()];
    for (i, &v) in order.iter().enumerate() {
        rank[v] = i;
    }

    let mut faces = FaceIndex::default();
    let mut clique = Vec::with_capacity(k);
    for &v in &order {
        // each k-clique is reached once, from its earliest vertex
        let later: Vec<usize> = adj[v].iter().copied().filter(|&w| rank[w] > rank[v]).collect();
        if later.len() + 1 < k {
            continue;
        }
        clique.push(v);
        extend_clique(&adj, &mut clique, &later, k, &mut faces);
        clique.pop();
    }

    let mut uf = UnionFind::<usize>::new(faces.ids.len());
    for &(a, b) in &faces.links {
        uf.union(a, b);
    }
    let mut components: HashMap<usize, Vec<NodeId>> = HashMap::new();
    for (face, &id) in &faces.ids {
        components
            .entry(uf.find(id))
            .or_default()
            .extend(face.iter().map(|&v| snapshot.nodes()[v]));
    }
    let groups = canonical_groups(components.into_values().collect());
    GroupSet::new(snapshot.frame_index(), groups, Detector::Cpm)
}

/// (k-1)-cliques seen so far, and the pairs of them lying in a common k-clique.
#[derive(Default)]
struct FaceIndex {
    ids: HashMap<Box<[usize]>, usize>,
    links: Vec<(usize, usize)>,
}

impl FaceIndex {
    fn id(&mut self, face: Box<[usize]>) -> usize {
        let next = self.ids.len();
        *self.ids.entry(face).or_insert(next)
    }

    fn add_clique(&mut self, clique: &[usize]) {
        let mut sorted = clique.to_vec();
        sorted.sort_unstable();
        let face = |skip: usize| -> Box<[usize]> {
            sorted
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != skip)
                .map(|(_, &v)| v)
                .collect()
        };
        let first = self.id(face(0));
        for skip in 1..sorted.len() {
            let other = self.id(face(skip));
            self.links.push((first, other));
        }
    }
}

fn extend_clique(adj: &[Vec<usize>], clique: &mut Vec<usize>, candidates: &[usize], k: usize, faces: &mut FaceIndex) {
    if clique.len() == k {
        faces.add_clique(clique);
        return;
    }
    for (i, &w) in candidates.iter().enumerate() {
        if clique.len() + candidates.len() - i < k {
            break;
        }
        let rest: Vec<usize> = candidates[i + 1..]
            .iter()
            .copied()
            .filter(|&u| adjacent(adj, w, u))
            .collect();
        clique.push(w);
        extend_clique(adj, clique, &rest, k, faces);
        clique.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snapshot(edges: &[(u32, u32)]) -> Snapshot {
        Snapshot::from_interactions(1, (0.0, 1.0), edges.iter().map(|&(a, b)| (NodeId(a), NodeId(b), 1.0)))
    }

    fn complete(nodes: &[u32]) -> Vec<(u32, u32)> {
        let mut e = Vec::new();
        for (i, &a) in nodes.iter().enumerate() {
            for &b in &nodes[i + 1..] {
                e.push((a, b));
            }
        }
        e
    }

    fn members(gs: &GroupSet) -> Vec<Vec<u32>> {
        gs.groups
            .iter()
            .map(|g| g.members().iter().map(|n| n.0).collect())
            .collect()
    }

    #[test]
    fn k5_with_k4_is_one_group() {
        let gs = detect_groups_cpm(&snapshot(&complete(&[0, 1, 2, 3, 4])), 4);
        assert_eq!(members(&gs), vec![vec![0, 1, 2, 3, 4]]);
        assert_eq!(gs.detector, Detector::Cpm);
    }

    #[test]
    fn two_k4_sharing_a_vertex() {
        let mut e = complete(&[0, 1, 2, 3]);
        e.extend(complete(&[3, 4, 5, 6]));
        let gs = detect_groups_cpm(&snapshot(&e), 4);
        assert_eq!(members(&gs), vec![vec![0, 1, 2, 3], vec![3, 4, 5, 6]]);
    }

    #[test]
    fn k_above_largest_clique_gives_nothing() {
        let gs = detect_groups_cpm(&snapshot(&complete(&[0, 1, 2, 3])), 5);
        assert!(gs.is_empty());
    }

    #[test]
    fn direction_is_ignored() {
        // triangle given with mixed directions
        let gs = detect_groups_cpm(&snapshot(&[(0, 1), (2, 1), (0, 2)]), 3);
        assert_eq!(members(&gs), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn triangles_chained_by_edges_percolate() {
        // 0-1-2, 1-2-3 share edge 1-2; 3-4-5 shares only node 3
        let e = [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3), (3, 4), (3, 5), (4, 5)];
        let gs = detect_groups_cpm(&snapshot(&e), 3);
        assert_eq!(members(&gs), vec![vec![0, 1, 2, 3], vec![3, 4, 5]]);
    }

    #[test]
    fn maximal_cliques_of_small_graph() {
        let adj = vec![vec![1, 2], vec![0, 2], vec![0, 1, 3], vec![2]];
        assert_eq!(maximal_cliques(&adj, 1), vec![vec![0, 1, 2], vec![2, 3]]);
        assert_eq!(maximal_cliques(&adj, 3), vec![vec![0, 1, 2]]);
    }
}
