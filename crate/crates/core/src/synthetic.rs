//! Planted-evolution interaction streams for experiments and tests.
//!
//! Time is divided into epochs. Each epoch has a set of communities whose
//! members email each other densely, plus sparse background noise across the
//! whole population. Between epochs each community continues, grows,
//! shrinks, splits, merges with a neighbour or dissolves, and new
//! communities form from idle nodes. With 45-day epochs and 90/45-day
//! windows every frame covers two consecutive epochs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::temporal_network::InteractionRecord;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub nodes: usize,
    pub epochs: usize,
    pub epoch_days: f64,
    pub initial_communities: usize,
    pub min_size: usize,
    pub max_size: usize,
    /// Probability that an ordered member pair exchanges a message in an epoch.
    pub density: f64,
    pub noise_per_epoch: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            nodes: 1000,
            epochs: 15,
            epoch_days: 45.0,
            initial_communities: 24,
            min_size: 8,
            max_size: 30,
            density: 0.2,
            noise_per_epoch: 300,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticNetwork {
    /// Records sorted by timestamp, in days.
    pub records: Vec<InteractionRecord>,
    /// Planted communities per epoch, as sorted node indices.
    pub epochs: Vec<Vec<Vec<usize>>>,
}

pub fn node_name(i: usize) -> String {
    format!("v{i:04}")
}

pub fn planted_evolution(cfg: &SyntheticConfig) -> SyntheticNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut idle: Vec<usize> = (0..cfg.nodes).collect();
    idle.shuffle(&mut rng);

    let mut communities: Vec<Vec<usize>> = Vec::new();
    for _ in 0..cfg.initial_communities {
        let size = rng.random_range(cfg.min_size..=cfg.max_size);
        if let Some(c) = draw(&mut idle, size) {
            communities.push(c);
        }
    }

    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut records = Vec::new();
    for e in 0..cfg.epochs {
        if e > 0 {
            communities = evolve(communities, &mut idle, cfg, &mut rng);
        }
        let start = e as f64 * cfg.epoch_days;
        for c in &communities {
            for &u in c {
                for &v in c {
                    if u != v && rng.random_bool(cfg.density) {
                        let t = start + rng.random::<f64>() * cfg.epoch_days;
                        records.push(InteractionRecord::new(node_name(u), node_name(v), t));
                    }
                }
            }
        }
        for _ in 0..cfg.noise_per_epoch {
            let u = rng.random_range(0..cfg.nodes);
            let v = rng.random_range(0..cfg.nodes);
            if u != v {
                let t = start + rng.random::<f64>() * cfg.epoch_days;
                records.push(InteractionRecord::new(node_name(u), node_name(v), t));
            }
        }
        let mut snapshot: Vec<Vec<usize>> = communities
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.sort_unstable();
                c
            })
            .collect();
        snapshot.sort();
        epochs.push(snapshot);
    }
    records.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    SyntheticNetwork { records, epochs }
}

fn draw(idle: &mut Vec<usize>, n: usize) -> Option<Vec<usize>> {
    (idle.len() >= n).then(|| idle.split_off(idle.len() - n))
}

fn evolve(
    communities: Vec<Vec<usize>>,
    idle: &mut Vec<usize>,
    cfg: &SyntheticConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<usize>> {
    let mut next = Vec::with_capacity(communities.len() + 2);
    let mut iter = communities.into_iter().peekable();
    while let Some(mut c) = iter.next() {
        let roll: f64 = rng.random();
        if roll < 0.45 {
            next.push(c);
        } else if roll < 0.57 {
            let extra = rng.random_range(2..=6);
            if let Some(mut add) = draw(idle, extra) {
                c.append(&mut add);
            }
            next.push(c);
        } else if roll < 0.69 {
            let drop = rng.random_range(2..=5).min(c.len().saturating_sub(cfg.min_size));
            c.shuffle(rng);
            idle.extend(c.drain(..drop));
            next.push(c);
        } else if roll < 0.79 && c.len() >= 2 * cfg.min_size {
            c.shuffle(rng);
            let half = c.split_off(c.len() / 2);
            next.push(c);
            next.push(half);
        } else if roll < 0.89 && iter.peek().is_some_and(|o| c.len() + o.len() <= 2 * cfg.max_size) {
            let mut other = iter.next().expect("peeked");
            c.append(&mut other);
            next.push(c);
        } else if roll < 0.97 {
            idle.append(&mut c);
        } else {
            next.push(c);
        }
    }
    idle.shuffle(rng);
    for _ in 0..rng.random_range(1..=2) {
        let size = rng.random_range(cfg.min_size..=cfg.max_size);
        if let Some(c) = draw(idle, size) {
            next.push(c);
        }
    }
    next
}
