//! Greedy geographic forwarding weighted by ETX: each hop goes to the
//! neighbor maximizing distance progress toward the destination divided by
//! the link's expected transmission count.

use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::geom::NodeId;
use crate::rf::{delivery_probability, etx, RadioConfig};
use crate::topology::Deployment;

/// Links below this delivery probability (ETX above 100) are not neighbors.
pub const MIN_DELIVERY_PROBABILITY: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: NodeId,
    pub etx: f64,
}

/// ETX of a usable link between two nodes `distance` apart, if any.
/// Delivery probability is assumed equal in both directions.
pub fn link_etx(distance: f64, cfg: &RadioConfig) -> Option<f64> {
    let p = delivery_probability(distance.max(crate::rf::MIN_DISTANCE), cfg).ok()?;
    if p < MIN_DELIVERY_PROBABILITY {
        return None;
    }
    etx(p, p).ok()
}

fn best_candidate(
    current: NodeId,
    destination: NodeId,
    dep: &Deployment,
    candidates: impl Iterator<Item = Neighbor>,
) -> Option<NodeId> {
    let remaining = dep.distance(current, destination);
    let mut best: Option<(f64, NodeId)> = None;
    for n in candidates {
        let progress = remaining - dep.distance(n.id, destination);
        if progress <= 0.0 {
            continue;
        }
        let score = progress / n.etx;
        best = match best {
            Some((s, id)) if s > score || (s == score && id < n.id) => Some((s, id)),
            _ => Some((score, n.id)),
        };
    }
    best.map(|(_, id)| id)
}

/// Next hop from `current` toward `destination`; `None` when no neighbor makes
/// positive progress. Ties go to the smaller node id.
pub fn nadv_next_hop(current: NodeId, destination: NodeId, dep: &Deployment, cfg: &RadioConfig) -> Option<NodeId> {
    let candidates = (0..dep.len())
        .filter(|&v| v != current)
        .filter_map(|v| link_etx(dep.distance(current, v), cfg).map(|etx| Neighbor { id: v, etx }));
    best_candidate(current, destination, dep, candidates)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Route {
    Found(Chain),
    /// Greedy forwarding stalled; carries the path walked so far.
    DeadEnd(Vec<NodeId>),
}

impl Route {
    pub fn chain(&self) -> Option<&Chain> {
        match self {
            Route::Found(c) => Some(c),
            Route::DeadEnd(_) => None,
        }
    }
}

/// Precomputed neighbor tables for routing many pairs over one deployment.
#[derive(Debug, Clone)]
pub struct Router<'a> {
    dep: &'a Deployment,
    neighbors: Vec<Vec<Neighbor>>,
}

impl<'a> Router<'a> {
    pub fn new(dep: &'a Deployment, cfg: &RadioConfig) -> Self {
        let n = dep.len();
        let mut neighbors = vec![Vec::new(); n];
        for a in 0..n {
            for b in a + 1..n {
                if let Some(etx) = link_etx(dep.distance(a, b), cfg) {
                    neighbors[a].push(Neighbor { id: b, etx });
                    neighbors[b].push(Neighbor { id: a, etx });
                }
            }
        }
        Self { dep, neighbors }
    }

    pub fn deployment(&self) -> &Deployment {
        self.dep
    }

    pub fn neighbors(&self, node: NodeId) -> &[Neighbor] {
        &self.neighbors[node]
    }

    pub fn next_hop(&self, current: NodeId, destination: NodeId) -> Option<NodeId> {
        best_candidate(current, destination, self.dep, self.neighbors[current].iter().copied())
    }

    pub fn route(&self, src: NodeId, dst: NodeId) -> Result<Route> {
        if src == dst {
            return Err(Error::Domain(format!("route source and destination are both {src}")));
        }
        walk(src, dst, self.dep.len(), |cur| self.next_hop(cur, dst), self.dep)
    }

    /// Every route from every node to every other node, computed through a
    /// shared next-hop table. `max_hops` stops a walk early; those routes are
    /// returned as dead ends.
    pub fn all_routes(&self, max_hops: usize) -> Vec<Route> {
        let n = self.dep.len();
        let mut out = Vec::with_capacity(n * n.saturating_sub(1));
        // next-hop table for one destination at a time keeps memory at O(n)
        let mut next: Vec<Option<Option<NodeId>>> = vec![None; n];
        for dst in 0..n {
            next.iter_mut().for_each(|e| *e = None);
            for src in (0..n).filter(|&s| s != dst) {
                let mut path = vec![src];
                let mut cur = src;
                let mut ok = false;
                while path.len() <= max_hops {
                    let hop = *next[cur].get_or_insert_with(|| self.next_hop(cur, dst));
                    match hop {
                        Some(v) => {
                            path.push(v);
                            if v == dst {
                                ok = true;
                                break;
                            }
                            cur = v;
                        }
                        None => break,
                    }
                }
                out.push(if ok {
                    let positions = path.iter().map(|&i| self.dep.position(i)).collect();
                    Route::Found(Chain::new(path, positions).expect("positive progress forbids repeats"))
                } else {
                    Route::DeadEnd(path)
                });
            }
        }
        out
    }
}

fn walk(
    src: NodeId,
    dst: NodeId,
    n: usize,
    mut next: impl FnMut(NodeId) -> Option<NodeId>,
    dep: &Deployment,
) -> Result<Route> {
    let mut path = vec![src];
    let mut cur = src;
    while cur != dst {
        match next(cur) {
            Some(v) if !path.contains(&v) && path.len() <= n => {
                path.push(v);
                cur = v;
            }
            _ => return Ok(Route::DeadEnd(path)),
        }
    }
    let positions = path.iter().map(|&i| dep.position(i)).collect();
    Ok(Route::Found(Chain::new(path, positions)?))
}

/// Route from `src` to `dst` by repeated [`nadv_next_hop`].
pub fn build_route(src: NodeId, dst: NodeId, dep: &Deployment, cfg: &RadioConfig) -> Result<Route> {
    if src == dst {
        return Err(Error::Domain(format!("route source and destination are both {src}")));
    }
    walk(src, dst, dep.len(), |cur| nadv_next_hop(cur, dst, dep, cfg), dep)
}
