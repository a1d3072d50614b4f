//! MAC-level interaction classification between pairs of links and per-chain
//! interaction signatures.
//!
//! Classification is static: it uses mean two-ray power of data frames only.
//! ACK-induced effects are left to the simulator.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::chain::{Chain, Link};
use crate::error::{Error, Result};
use crate::rf::RadioConfig;

/// Effect of one link's sender on another link's reception.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DirectionalEffect {
    NoEffect,
    /// The two senders carrier-sense each other; the MAC serializes them.
    SenderCoupled,
    /// Decoding survives the interferer only if the receiver locked first.
    CaptureVulnerable,
    /// Any overlap destroys the victim's frame.
    Collision,
}

impl DirectionalEffect {
    pub fn as_str(self) -> &'static str {
        match self {
            DirectionalEffect::NoEffect => "NoEffect",
            DirectionalEffect::SenderCoupled => "SenderCoupled",
            DirectionalEffect::CaptureVulnerable => "CaptureVulnerable",
            DirectionalEffect::Collision => "Collision",
        }
    }
}

impl fmt::Display for DirectionalEffect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Coarse category of a link pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PairKind {
    /// Senders connected.
    SC,
    /// Hidden terminal: one direction destroys the other's frames.
    HT,
    /// Hidden terminal with capture.
    HTC,
    /// Both directions destroy each other's frames.
    SymHT,
    /// No interaction.
    NI,
}

impl PairKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PairKind::SC => "SC",
            PairKind::HT => "HT",
            PairKind::HTC => "HTC",
            PairKind::SymHT => "SymHT",
            PairKind::NI => "NI",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "SC" => PairKind::SC,
            "HT" => PairKind::HT,
            "HTC" => PairKind::HTC,
            "SymHT" => PairKind::SymHT,
            "NI" => PairKind::NI,
            _ => return None,
        })
    }
}

impl fmt::Display for PairKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Category of a link pair together with both directional effects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PairCategory {
    pub kind: PairKind,
    /// Effect of the first link's sender on the second link.
    pub first_on_second: DirectionalEffect,
    /// Effect of the second link's sender on the first link.
    pub second_on_first: DirectionalEffect,
}

impl PairCategory {
    fn compose(first_on_second: DirectionalEffect, second_on_first: DirectionalEffect) -> Self {
        use DirectionalEffect::*;
        let kind = match (first_on_second, second_on_first) {
            (SenderCoupled, _) | (_, SenderCoupled) => PairKind::SC,
            (Collision, Collision) => PairKind::SymHT,
            (Collision, _) | (_, Collision) => PairKind::HT,
            (CaptureVulnerable, _) | (_, CaptureVulnerable) => PairKind::HTC,
            (NoEffect, NoEffect) => PairKind::NI,
        };
        Self {
            kind,
            first_on_second,
            second_on_first,
        }
    }

    pub fn swapped(&self) -> Self {
        Self {
            kind: self.kind,
            first_on_second: self.second_on_first,
            second_on_first: self.first_on_second,
        }
    }

    /// Both directions carry the same hidden-terminal effect.
    pub fn is_symmetric(&self) -> bool {
        self.kind != PairKind::SC && self.kind != PairKind::NI && self.first_on_second == self.second_on_first
    }

    /// Label that also names composites the coarse category folds together,
    /// e.g. `HT+HTC` for Collision one way and CaptureVulnerable the other.
    pub fn detail(&self) -> String {
        use DirectionalEffect::*;
        match (self.kind, self.first_on_second, self.second_on_first) {
            (PairKind::HT, Collision, CaptureVulnerable) | (PairKind::HT, CaptureVulnerable, Collision) => {
                "HT+HTC".to_string()
            }
            (PairKind::HTC, CaptureVulnerable, CaptureVulnerable) => "SymHTC".to_string(),
            (kind, _, _) => kind.as_str().to_string(),
        }
    }
}

impl fmt::Display for PairCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.as_str())
    }
}

/// Effect of `interfering`'s sender on `victim`'s reception.
pub fn classify_directional(interfering: &Link, victim: &Link, cfg: &RadioConfig) -> Result<DirectionalEffect> {
    if interfering.shares_node(victim) {
        return Err(Error::SharedNode(interfering.to_string(), victim.to_string()));
    }
    Ok(directional_unchecked(interfering, victim, cfg))
}

pub(crate) fn directional_unchecked(interfering: &Link, victim: &Link, cfg: &RadioConfig) -> DirectionalEffect {
    let sender_power = cfg.power_between(&interfering.src_pos, &victim.src_pos);
    if sender_power >= cfg.cs_threshold {
        return DirectionalEffect::SenderCoupled;
    }
    let intended = cfg.power_between(&victim.src_pos, &victim.dst_pos);
    let interference = cfg.power_between(&interfering.src_pos, &victim.dst_pos);
    let ratio = intended / (interference + cfg.noise_floor);
    if ratio < cfg.capture_sinr {
        DirectionalEffect::Collision
    } else if interference >= cfg.cs_threshold {
        DirectionalEffect::CaptureVulnerable
    } else {
        DirectionalEffect::NoEffect
    }
}

pub fn classify_pair(a: &Link, b: &Link, cfg: &RadioConfig) -> Result<PairCategory> {
    if a.shares_node(b) {
        return Err(Error::SharedNode(a.to_string(), b.to_string()));
    }
    Ok(pair_unchecked(a, b, cfg))
}

pub(crate) fn pair_unchecked(a: &Link, b: &Link, cfg: &RadioConfig) -> PairCategory {
    PairCategory::compose(directional_unchecked(a, b, cfg), directional_unchecked(b, a, cfg))
}

/// Which hop pairs a signature covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignatureMode {
    /// For 4 hops: (H1,H4), (H1,H3), (H2,H4). For longer chains: every
    /// (Hi, Hi+3) slot in order.
    Interacting,
    /// Every pair of hops that share no node, ordered by first then second hop.
    FullPairwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignatureEntry {
    /// Zero-based hop indices.
    pub first: usize,
    pub second: usize,
    pub category: PairCategory,
}

/// Ordered pair categories of a chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainSignature {
    pub mode: SignatureMode,
    pub entries: Vec<SignatureEntry>,
}

impl ChainSignature {
    pub fn kinds(&self) -> Vec<PairKind> {
        self.entries.iter().map(|e| e.category.kind).collect()
    }

    /// `INT1/INT2/...` rendering, e.g. `HT/SC/SC`.
    pub fn render(&self) -> String {
        self.render_with("/")
    }

    pub fn render_with(&self, sep: &str) -> String {
        self.entries
            .iter()
            .map(|e| e.category.kind.as_str())
            .collect::<Vec<_>>()
            .join(sep)
    }
}

impl fmt::Display for ChainSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

pub fn chain_signature(chain: &Chain, cfg: &RadioConfig, mode: SignatureMode) -> Result<ChainSignature> {
    let hops = chain.hops();
    let n = hops.len();
    let pairs: Vec<(usize, usize)> = match mode {
        SignatureMode::Interacting => {
            if n < 4 {
                return Err(Error::ChainTooShort { got: n, min: 4 });
            }
            if n == 4 {
                vec![(0, 3), (0, 2), (1, 3)]
            } else {
                (0..n - 3).map(|i| (i, i + 3)).collect()
            }
        }
        SignatureMode::FullPairwise => {
            if n < 2 {
                return Err(Error::ChainTooShort { got: n, min: 2 });
            }
            (0..n).flat_map(|i| (i + 2..n).map(move |j| (i, j))).collect()
        }
    };
    let entries = pairs
        .into_iter()
        .map(|(i, j)| SignatureEntry {
            first: i,
            second: j,
            category: pair_unchecked(&hops[i], &hops[j], cfg),
        })
        .collect();
    Ok(ChainSignature { mode, entries })
}

/// Number of hop pairs in an n-hop chain, n(n−1)/2.
pub fn interaction_count(n: usize) -> Result<u64> {
    if n == 0 {
        return Err(Error::Domain("hop count must be at least 1".into()));
    }
    let n = n as u64;
    Ok(n * (n - 1) / 2)
}

/// Size of the reduced signature space, 3^(n−3).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignatureSpace {
    pub size: u64,
    /// Set when the chain is too short to have any free (i, i+3) slot.
    pub no_free_slots: bool,
}

pub fn signature_space_size(n: usize) -> SignatureSpace {
    if n < 4 {
        SignatureSpace {
            size: 1,
            no_free_slots: true,
        }
    } else {
        SignatureSpace {
            size: 3u64.pow((n - 3) as u32),
            no_free_slots: false,
        }
    }
}

/// Severity-ranked label for what a single link suffers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LinkLabel {
    NI,
    SC,
    HTC,
    HT,
}

impl LinkLabel {
    pub const ALL: [LinkLabel; 4] = [LinkLabel::HT, LinkLabel::HTC, LinkLabel::SC, LinkLabel::NI];

    pub fn from_effect(e: DirectionalEffect) -> Self {
        match e {
            DirectionalEffect::NoEffect => LinkLabel::NI,
            DirectionalEffect::SenderCoupled => LinkLabel::SC,
            DirectionalEffect::CaptureVulnerable => LinkLabel::HTC,
            DirectionalEffect::Collision => LinkLabel::HT,
        }
    }

    pub fn is_weak(self) -> bool {
        matches!(self, LinkLabel::HT | LinkLabel::HTC)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LinkLabel::NI => "NI",
            LinkLabel::SC => "SC",
            LinkLabel::HTC => "HTC",
            LinkLabel::HT => "HT",
        }
    }
}

impl fmt::Display for LinkLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Most severe effect `victim` suffers from any of `others`. Links sharing a
/// node with the victim count as sender-coupled.
pub fn worst_label<'a>(victim: &Link, others: impl IntoIterator<Item = &'a Link>, cfg: &RadioConfig) -> LinkLabel {
    others
        .into_iter()
        .filter(|o| *o != victim)
        .map(|o| {
            if o.shares_node(victim) {
                LinkLabel::SC
            } else {
                LinkLabel::from_effect(directional_unchecked(o, victim, cfg))
            }
        })
        .max()
        .unwrap_or(LinkLabel::NI)
}

/// Every unordered pair of `links` that shares no node, in input order.
pub fn classify_all(links: &[Link], cfg: &RadioConfig) -> Vec<(Link, Link, PairCategory)> {
    let mut out = Vec::new();
    for (i, a) in links.iter().enumerate() {
        for b in &links[i + 1..] {
            if !a.shares_node(b) {
                out.push((*a, *b, pair_unchecked(a, b, cfg)));
            }
        }
    }
    out
}

/// One CSV row per classified link pair.
pub fn write_pairs_csv<W: Write>(out: W, rows: &[(Link, Link, PairCategory)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "a_src", "a_dst", "b_src", "b_dst", "a_on_b", "b_on_a", "category", "detail",
    ])?;
    for (a, b, c) in rows {
        w.write_record([
            a.src.to_string(),
            a.dst.to_string(),
            b.src.to_string(),
            b.dst.to_string(),
            c.first_on_second.to_string(),
            c.second_on_first.to_string(),
            c.kind.to_string(),
            c.detail(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
