//! Static collapse of a temporal graph and k-core decomposition.
//!
//! Collapsing drops time and direction: one undirected edge per entity
//! pair that ever co-occurs in a fact. Core numbers come from the standard
//! peeling order (repeatedly remove a minimum-degree node; a node's core
//! number is the peel threshold at its removal).

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::types::{EntityId, IntervalFact, TimestampFact};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("requested {m} entities but the graph has only {nodes}")]
    TargetExceedsNodes { m: usize, nodes: usize },
}

/// Undirected simple graph over entities. Self-edges exist only when a
/// fact relates an entity to itself.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StaticGraph {
    adj: BTreeMap<EntityId, BTreeSet<EntityId>>,
}

impl StaticGraph {
    pub fn from_edges(edges: impl IntoIterator<Item = (EntityId, EntityId)>) -> Self {
        let mut g = StaticGraph::default();
        for (a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    pub fn add_edge(&mut self, a: EntityId, b: EntityId) {
        self.adj.entry(a).or_default().insert(b);
        self.adj.entry(b).or_default().insert(a);
    }

    pub fn num_nodes(&self) -> usize {
        self.adj.len()
    }

    /// Undirected edge count; a self-edge counts once.
    pub fn num_edges(&self) -> usize {
        let mut n = 0usize;
        for (v, nbrs) in &self.adj {
            for u in nbrs {
                if u >= v {
                    n += 1;
                }
            }
        }
        n
    }

    pub fn nodes(&self) -> impl Iterator<Item = EntityId> + '_ {
        self.adj.keys().copied()
    }

    pub fn neighbors(&self, v: EntityId) -> impl Iterator<Item = EntityId> + '_ {
        self.adj.get(&v).into_iter().flatten().copied()
    }

    pub fn degree(&self, v: EntityId) -> usize {
        self.adj.get(&v).map(|n| n.len()).unwrap_or(0)
    }

    pub fn has_edge(&self, a: EntityId, b: EntityId) -> bool {
        self.adj.get(&a).is_some_and(|n| n.contains(&b))
    }
}

/// Collapses timestamp and interval facts into one static graph: an edge
/// per entity pair co-occurring in any fact, multiplicities merged.
pub fn collapse_to_static(stamps: &[TimestampFact], intervals: &[IntervalFact]) -> StaticGraph {
    StaticGraph::from_edges(
        stamps
            .iter()
            .map(|f| (f.subject, f.object))
            .chain(intervals.iter().map(|f| (f.subject, f.object))),
    )
}

/// Core number of every node via bucketed peeling. A node's core number k
/// means it belongs to a maximal subgraph where every node keeps at least
/// k neighbors.
pub fn kcore_decompose(g: &StaticGraph) -> BTreeMap<EntityId, u32> {
    let nodes: Vec<EntityId> = g.nodes().collect();
    let n = nodes.len();
    if n == 0 {
        return BTreeMap::new();
    }
    let index: BTreeMap<EntityId, usize> = nodes
        .iter()
        .enumerate()
        .map(|(i, v)| (*v, i))
        .collect();
    let adj: Vec<Vec<usize>> = nodes
        .iter()
        .map(|v| g.neighbors(*v).map(|u| index[&u]).collect())
        .collect();
    let mut deg: Vec<usize> = adj.iter().map(|a| a.len()).collect();
    let max_deg = deg.iter().copied().max().unwrap_or(0);

    // Counting-sort nodes by degree; bin[d] = first slot of degree d.
    let mut bin = vec![0usize; max_deg + 1];
    for &d in &deg {
        bin[d] += 1;
    }
    let mut start = 0usize;
    for b in &mut bin {
        let count = *b;
        *b = start;
        start += count;
    }
    let mut vert = vec![0usize; n];
    let mut pos = vec![0usize; n];
    for v in 0..n {
        pos[v] = bin[deg[v]];
        vert[pos[v]] = v;
        bin[deg[v]] += 1;
    }
    for d in (1..=max_deg).rev() {
        bin[d] = bin[d - 1];
    }
    bin[0] = 0;

    // Peel in degree order; each removal may pull a higher-degree
    // neighbor one bucket down.
    for i in 0..n {
        let v = vert[i];
        for &u in &adj[v] {
            if deg[u] > deg[v] {
                let du = deg[u];
                let pu = pos[u];
                let pw = bin[du];
                let w = vert[pw];
                if u != w {
                    pos[u] = pw;
                    vert[pw] = u;
                    pos[w] = pu;
                    vert[pu] = w;
                }
                bin[du] += 1;
                deg[u] -= 1;
            }
        }
    }

    nodes
        .iter()
        .enumerate()
        .map(|(i, v)| (*v, deg[i] as u32))
        .collect()
}

/// Whole cores selected in descending core number until at least `m`
/// nodes are gathered; the boundary core joins in full, so the result may
/// overshoot m.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreSelection {
    pub entities: BTreeSet<EntityId>,
    /// Smallest core number included in the selection.
    pub min_core_included: u32,
}

pub fn select_by_core(g: &StaticGraph, m: usize) -> Result<CoreSelection, GraphError> {
    assert!(m >= 1, "entity target must be positive");
    let cores = kcore_decompose(g);
    if m > cores.len() {
        return Err(GraphError::TargetExceedsNodes {
            m,
            nodes: cores.len(),
        });
    }
    let mut by_core: BTreeMap<u32, Vec<EntityId>> = BTreeMap::new();
    for (v, c) in &cores {
        by_core.entry(*c).or_default().push(*v);
    }
    let mut entities = BTreeSet::new();
    let mut min_core_included = 0;
    for (core, members) in by_core.iter().rev() {
        entities.extend(members.iter().copied());
        min_core_included = *core;
        if entities.len() >= m {
            break;
        }
    }
    Ok(CoreSelection {
        entities,
        min_core_included,
    })
}
