//! Uniform random deployments in a rectangular arena.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chain::Link;
use crate::error::{Error, Result};
use crate::geom::{NodeId, Point};

#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub width: f64,
    pub height: f64,
    pub seed: u64,
    /// Node `i` sits at `positions[i]`.
    pub positions: Vec<Point>,
}

impl Deployment {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn position(&self, id: NodeId) -> Point {
        self.positions[id]
    }

    pub fn distance(&self, a: NodeId, b: NodeId) -> f64 {
        self.positions[a].distance(&self.positions[b])
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }

    /// Deployment from explicit coordinates; the arena is the bounding box
    /// anchored at the origin.
    pub fn from_positions(positions: Vec<Point>) -> Result<Self> {
        if positions.iter().any(|p| !p.is_finite() || p.x < 0.0 || p.y < 0.0) {
            return Err(Error::Domain("positions must be finite and non-negative".into()));
        }
        let width = positions.iter().map(|p| p.x).fold(0.0, f64::max);
        let height = positions.iter().map(|p| p.y).fold(0.0, f64::max);
        Ok(Self {
            width,
            height,
            seed: 0,
            positions,
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for (id, p) in self.positions.iter().enumerate() {
            w.serialize(NodeRow { id, x: p.x, y: p.y })?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `id,x,y` rows. Ids must be exactly 0..n in any order.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rows: Vec<NodeRow> = Vec::new();
        for row in csv::Reader::from_reader(input).deserialize() {
            rows.push(row?);
        }
        rows.sort_by_key(|r| r.id);
        if rows.iter().enumerate().any(|(i, r)| r.id != i) {
            return Err(Error::Domain("node ids must be unique and dense from 0".into()));
        }
        Self::from_positions(rows.into_iter().map(|r| Point::new(r.x, r.y)).collect())
    }
}

/// Reads `src,dst` rows naming node ids of `dep`.
pub fn read_links_csv<R: Read>(dep: &Deployment, input: R) -> Result<Vec<Link>> {
    let mut out = Vec::new();
    for row in csv::Reader::from_reader(input).deserialize() {
        let r: LinkRow = row?;
        for id in [r.src, r.dst] {
            if id >= dep.len() {
                return Err(Error::Domain(format!(
                    "link {}->{} names unknown node {id}",
                    r.src, r.dst
                )));
            }
        }
        out.push(Link::new(r.src, dep.position(r.src), r.dst, dep.position(r.dst))?);
    }
    Ok(out)
}

#[derive(Debug, Deserialize)]
struct LinkRow {
    src: NodeId,
    dst: NodeId,
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeRow {
    id: usize,
    x: f64,
    y: f64,
}

/// `n_nodes` i.i.d. uniform positions from a seeded generator.
pub fn generate_uniform(width: f64, height: f64, n_nodes: usize, seed: u64) -> Result<Deployment> {
    if !(width > 0.0 && height > 0.0) || !width.is_finite() || !height.is_finite() {
        return Err(Error::Domain(format!("arena {width} x {height} has no area")));
    }
    if n_nodes < 2 {
        return Err(Error::Domain("a deployment needs at least two nodes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions = (0..n_nodes)
        .map(|_| Point::new(rng.gen_range(0.0..width), rng.gen_range(0.0..height)))
        .collect();
    Ok(Deployment {
        width,
        height,
        seed,
        positions,
    })
}
