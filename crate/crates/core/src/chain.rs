use std::fmt;

use crate::error::{Error, Result};
use crate::geom::{NodeId, Point};
use crate::rf::{channel_state, ChannelState, RadioConfig};

/// A directed sender → receiver link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub src: NodeId,
    pub dst: NodeId,
    pub src_pos: Point,
    pub dst_pos: Point,
}

impl Link {
    pub fn new(src: NodeId, src_pos: Point, dst: NodeId, dst_pos: Point) -> Result<Self> {
        if src == dst {
            return Err(Error::InvalidChain(format!("link {src}->{dst} loops on itself")));
        }
        Ok(Self {
            src,
            dst,
            src_pos,
            dst_pos,
        })
    }

    pub fn length(&self) -> f64 {
        self.src_pos.distance(&self.dst_pos)
    }

    pub fn shares_node(&self, other: &Link) -> bool {
        self.src == other.src || self.src == other.dst || self.dst == other.src || self.dst == other.dst
    }

    pub fn is_decodable(&self, cfg: &RadioConfig) -> bool {
        channel_state(&self.src_pos, &self.dst_pos, cfg) == ChannelState::Reception
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.src, self.dst)
    }
}

/// Ordered relay path from source to destination.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    nodes: Vec<NodeId>,
    positions: Vec<Point>,
}

impl Chain {
    /// Builds a chain, rejecting repeated nodes and paths shorter than one hop.
    pub fn new(nodes: Vec<NodeId>, positions: Vec<Point>) -> Result<Self> {
        if nodes.len() != positions.len() {
            return Err(Error::InvalidChain("node and position counts differ".into()));
        }
        if nodes.len() < 2 {
            return Err(Error::InvalidChain("a chain needs at least two nodes".into()));
        }
        let mut seen = nodes.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidChain(format!("repeated node in {nodes:?}")));
        }
        Ok(Self { nodes, positions })
    }

    /// Builds a chain and also requires every hop to be decodable in isolation.
    pub fn checked(nodes: Vec<NodeId>, positions: Vec<Point>, cfg: &RadioConfig) -> Result<Self> {
        let chain = Self::new(nodes, positions)?;
        for (i, hop) in chain.hops().iter().enumerate() {
            if !hop.is_decodable(cfg) {
                return Err(Error::InvalidChain(format!(
                    "hop {} ({hop}) is {:.1} m long and not decodable",
                    i + 1,
                    hop.length()
                )));
            }
        }
        Ok(chain)
    }

    /// Collinear chain along the x axis with the given hop lengths, node ids 0..=n.
    pub fn collinear(hop_lengths: &[f64]) -> Result<Self> {
        let mut x = 0.0;
        let mut positions = vec![Point::new(0.0, 0.0)];
        for h in hop_lengths {
            x += h;
            positions.push(Point::new(x, 0.0));
        }
        Self::new((0..positions.len()).collect(), positions)
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn source(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn destination(&self) -> NodeId {
        *self.nodes.last().expect("chain is non-empty")
    }

    pub fn hop_count(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn hops(&self) -> Vec<Link> {
        (0..self.hop_count())
            .map(|i| Link {
                src: self.nodes[i],
                dst: self.nodes[i + 1],
                src_pos: self.positions[i],
                dst_pos: self.positions[i + 1],
            })
            .collect()
    }

    /// Same path with node ids shifted by `offset`, for merging several chains
    /// into one scenario.
    pub fn relabeled(&self, offset: usize) -> Self {
        Self {
            nodes: self.nodes.iter().map(|n| n + offset).collect(),
            positions: self.positions.clone(),
        }
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.nodes.contains(&node)
    }
}

impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.nodes.iter().map(|n| n.to_string()).collect();
        f.write_str(&ids.join("-"))
    }
}
