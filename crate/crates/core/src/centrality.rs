//! Social position (SP), a recursive node-importance measure.
//!
//! `SP(x) = (1 - eps) + eps * sum_y SP(y) * C(y -> x)`, iterated from
//! `SP ≡ 1` until the largest per-node change drops below the tolerance.
//! Dangling nodes pass nothing on; the constant term keeps every value at
//! or above `1 - eps`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::temporal_network::{NodeId, Snapshot};

/// How commitments are derived inside a group's induced subgraph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupCommitment {
    /// Re-normalize each member's within-group outgoing weights to sum to 1.
    #[default]
    Renormalize,
    /// Reuse the snapshot-wide commitments restricted to the group.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpConfig {
    pub epsilon: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub group_commitment: GroupCommitment,
}

impl Default for SpConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.85,
            tolerance: 1e-8,
            max_iterations: 200,
            group_commitment: GroupCommitment::Renormalize,
        }
    }
}

impl SpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidSpConfig(format!(
                "epsilon {} must lie in (0, 1)",
                self.epsilon
            )));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidSpConfig(format!(
                "tolerance {} must be positive",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidSpConfig("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

/// Importance value per node, sorted by node id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpVector {
    nodes: Vec<NodeId>,
    values: Vec<f64>,
    pub iterations_used: usize,
    pub converged: bool,
}

impl SpVector {
    /// Wraps any precomputed node-importance map so it can stand in for SP.
    pub fn from_values<I: IntoIterator<Item = (NodeId, f64)>>(values: I) -> Self {
        let mut pairs: Vec<(NodeId, f64)> = values.into_iter().collect();
        pairs.sort_by_key(|p| p.0);
        pairs.dedup_by_key(|p| p.0);
        let (nodes, values) = pairs.into_iter().unzip();
        Self {
            nodes,
            values,
            iterations_used: 0,
            converged: true,
        }
    }

    pub fn get(&self, node: NodeId) -> Option<f64> {
        self.nodes
            .binary_search(&node)
            .ok()
            .map(|i| self.values[i])
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.nodes.iter().copied().zip(self.values.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            nodes: self.nodes.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
            iterations_used: self.iterations_used,
            converged: self.converged,
        }
    }
}

pub fn compute_sp(snapshot: &Snapshot, config: &SpConfig) -> Result<SpVector> {
    config.validate()?;
    if let Some(u) = snapshot.first_unnormalized() {
        return Err(Error::Unnormalized {
            frame: snapshot.frame_index(),
            node: format!("#{}", snapshot.nodes()[u].0),
        });
    }
    let links: Vec<(usize, usize, f64)> = snapshot
        .edges()
        .iter()
        .map(|e| (e.source, e.target, e.commitment))
        .collect();
    let (values, iterations_used, converged) = iterate(snapshot.node_count(), &links, config);
    Ok(SpVector {
        nodes: snapshot.nodes().to_vec(),
        values,
        iterations_used,
        converged,
    })
}

/// SP restricted to the subgraph induced by `members`.
pub fn compute_group_sp(snapshot: &Snapshot, members: &[NodeId], config: &SpConfig) -> Result<SpVector> {
    config.validate()?;
    if members.is_empty() {
        return Err(Error::EmptyGroup);
    }
    let mut nodes = members.to_vec();
    nodes.sort_unstable();
    nodes.dedup();

    // position inside the group, indexed by snapshot-local index
    let mut position = vec![usize::MAX; snapshot.node_count()];
    let mut locals = Vec::with_capacity(nodes.len());
    for (i, &n) in nodes.iter().enumerate() {
        let local = snapshot.local_index(n).ok_or_else(|| Error::NodeNotInFrame {
            frame: snapshot.frame_index(),
            node: format!("#{}", n.0),
        })?;
        position[local] = i;
        locals.push(local);
    }

    let mut links = Vec::new();
    for (gi, &local) in locals.iter().enumerate() {
        let inside: Vec<_> = snapshot
            .out_edges(local)
            .iter()
            .filter(|e| position[e.target] != usize::MAX)
            .collect();
        match config.group_commitment {
            GroupCommitment::Renormalize => {
                let total: f64 = inside.iter().map(|e| e.weight).sum();
                if total > 0.0 {
                    links.extend(inside.iter().map(|e| (gi, position[e.target], e.weight / total)));
                }
            }
            GroupCommitment::Global => {
                links.extend(inside.iter().map(|e| (gi, position[e.target], e.commitment)));
            }
        }
    }
    let (values, iterations_used, converged) = iterate(nodes.len(), &links, config);
    Ok(SpVector {
        nodes,
        values,
        iterations_used,
        converged,
    })
}

/// Jacobi iteration over `(from, to, commitment)` links.
///
/// Outgoing commitments sum to at most 1, so the update contracts by `eps`
/// in the 1-norm and `eps / (1 - eps) * |step|_1` bounds the remaining
/// error of every component. Iteration stops once both that bound and the
/// largest single change are below the tolerance.
fn iterate(n: usize, links: &[(usize, usize, f64)], config: &SpConfig) -> (Vec<f64>, usize, bool) {
    let eps = config.epsilon;
    let mut current = vec![1.0; n];
    let mut next = vec![0.0; n];
    for iteration in 1..=config.max_iterations {
        next.fill(0.0);
        for &(y, x, c) in links {
            next[x] += current[y] * c;
        }
        let mut delta = 0.0f64;
        let mut delta_sum = 0.0f64;
        for (nx, cx) in next.iter_mut().zip(&current) {
            *nx = (1.0 - eps) + eps * *nx;
            let d = (*nx - cx).abs();
            delta = delta.max(d);
            delta_sum += d;
        }
        std::mem::swap(&mut current, &mut next);
        if delta < config.tolerance && eps / (1.0 - eps) * delta_sum < config.tolerance {
            return (current, iteration, true);
        }
    }
    (current, config.max_iterations, false)
}
