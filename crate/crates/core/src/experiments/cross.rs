use std::fmt;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{lost_capacity, LostCapacity};
use crate::census::routes_of_length;
use crate::chain::{Chain, Link};
use crate::classify::{chain_signature, pair_unchecked, worst_label, LinkLabel, PairKind, SignatureMode};
use crate::error::{Error, Result};
use crate::rf::RadioConfig;
use crate::sim::{run, throughput, MacParams, RunOptions, Scenario, Traffic};
use crate::topology::generate_uniform;

/// Self-interference class of a 4-hop chain, taken from its `(H1, H4)` pair
/// when the two inner pairs are SC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChainClass {
    SC,
    HTC,
    HT,
}

impl ChainClass {
    pub const ALL: [ChainClass; 3] = [ChainClass::SC, ChainClass::HTC, ChainClass::HT];

    pub fn as_str(self) -> &'static str {
        match self {
            ChainClass::SC => "SC",
            ChainClass::HTC => "HTC",
            ChainClass::HT => "HT",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

impl fmt::Display for ChainClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Class of a 4-hop chain; `None` for other lengths and for signatures outside
/// `X/SC/SC`.
pub fn chain_class(chain: &Chain, cfg: &RadioConfig) -> Option<ChainClass> {
    if chain.hop_count() != 4 {
        return None;
    }
    let kinds = chain_signature(chain, cfg, SignatureMode::Interacting).ok()?.kinds();
    if kinds[1] != PairKind::SC || kinds[2] != PairKind::SC {
        return None;
    }
    match kinds[0] {
        PairKind::SC => Some(ChainClass::SC),
        PairKind::HTC => Some(ChainClass::HTC),
        PairKind::HT | PairKind::SymHT => Some(ChainClass::HT),
        PairKind::NI => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossChainParams {
    pub width: f64,
    pub height: f64,
    pub n_nodes: usize,
    pub samples: usize,
    /// Deployments tried before giving up.
    pub max_deployments: usize,
    /// Only accept pairs with at least one non-NI cross-chain link pair.
    pub require_interaction: bool,
    /// Simulated seconds per sample; 0 skips simulation.
    pub duration_s: f64,
}

impl Default for CrossChainParams {
    fn default() -> Self {
        Self {
            width: 1500.0,
            height: 1500.0,
            n_nodes: 225,
            samples: 200,
            max_deployments: 5000,
            require_interaction: true,
            duration_s: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossSample {
    pub deployment_seed: u64,
    pub chains: [Chain; 2],
    /// Per hop, the worst label from the chain's own other hops.
    pub self_labels: [Vec<LinkLabel>; 2],
    /// Per hop, the worst label from the other chain's hops.
    pub cross_labels: [Vec<LinkLabel>; 2],
    /// Some cross-chain pair destroys frames in both directions.
    pub symmetric_ht: bool,
    pub throughput_bps: Option<[f64; 2]>,
    pub lost: Option<[LostCapacity; 2]>,
}

impl CrossSample {
    pub fn worst_cross(&self, chain: usize) -> LinkLabel {
        self.cross_labels[chain].iter().copied().max().unwrap_or(LinkLabel::NI)
    }

    pub fn weak(&self, chain: usize) -> bool {
        self.worst_cross(chain).is_weak()
    }
}

/// P(cross label | self label) over all links, rows indexed like
/// [`ChainClass::ALL`] self labels SC, HTC, HT and columns like
/// `[NI, SC, HTC, HT]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTable {
    pub counts: [[u64; 4]; 3],
}

const SELF_ROWS: [LinkLabel; 3] = [LinkLabel::SC, LinkLabel::HTC, LinkLabel::HT];
const CROSS_COLS: [LinkLabel; 4] = [LinkLabel::NI, LinkLabel::SC, LinkLabel::HTC, LinkLabel::HT];

impl ConditionalTable {
    /// `None` for an empty conditioning row.
    pub fn probability(&self, cross: LinkLabel, given_self: LinkLabel) -> Option<f64> {
        let r = SELF_ROWS.iter().position(|&l| l == given_self)?;
        let c = CROSS_COLS.iter().position(|&l| l == cross)?;
        let total: u64 = self.counts[r].iter().sum();
        (total > 0).then(|| self.counts[r][c] as f64 / total as f64)
    }

    /// P(cross label is HT or HTC | self label).
    pub fn weak_given(&self, given_self: LinkLabel) -> Option<f64> {
        Some(self.probability(LinkLabel::HT, given_self)? + self.probability(LinkLabel::HTC, given_self)?)
    }

    pub fn rows(&self) -> impl Iterator<Item = (LinkLabel, [Option<f64>; 4])> + '_ {
        SELF_ROWS
            .iter()
            .map(move |&s| (s, CROSS_COLS.map(|c| self.probability(c, s))))
    }
}

/// Tabulates cross labels against self labels over every link of every sample.
pub fn conditional_interaction(samples: &[CrossSample]) -> ConditionalTable {
    let mut counts = [[0u64; 4]; 3];
    for s in samples {
        for c in 0..2 {
            for (self_l, cross_l) in s.self_labels[c].iter().zip(&s.cross_labels[c]) {
                if let (Some(r), Some(k)) = (
                    SELF_ROWS.iter().position(|l| l == self_l),
                    CROSS_COLS.iter().position(|l| l == cross_l),
                ) {
                    counts[r][k] += 1;
                }
            }
        }
    }
    ConditionalTable { counts }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossChainReport {
    pub classes: (ChainClass, ChainClass),
    pub samples: Vec<CrossSample>,
    /// P(chain k has an HT or HTC cross label).
    pub p_weak: [f64; 2],
    pub p_weak_any: f64,
    pub p_symmetric_ht: f64,
    pub conditional: ConditionalTable,
    /// Mean throughput per chain; `None` without simulation.
    pub mean_throughput_bps: Option<[f64; 2]>,
    pub mean_lost: Option<[LostCapacity; 2]>,
}

fn labels(chain: &[Link], other: &[Link], cfg: &RadioConfig) -> (Vec<LinkLabel>, Vec<LinkLabel>) {
    let own = chain.iter().map(|l| worst_label(l, chain, cfg)).collect();
    let cross = chain.iter().map(|l| worst_label(l, other, cfg)).collect();
    (own, cross)
}

fn disjoint(a: &Chain, b: &Chain) -> bool {
    a.nodes().iter().all(|n| !b.contains(*n))
}

fn interacting(a: &[Link], b: &[Link], cfg: &RadioConfig) -> bool {
    a.iter()
        .any(|x| b.iter().any(|y| pair_unchecked(x, y, cfg).kind != PairKind::NI))
}

const PAIR_TRIES: usize = 2000;

/// Picks one node-disjoint pair of the requested classes from one deployment,
/// or `None`.
fn sample_pair(
    seed: u64,
    classes: (ChainClass, ChainClass),
    params: &CrossChainParams,
    cfg: &RadioConfig,
) -> Result<Option<(Chain, Chain)>> {
    let dep = generate_uniform(params.width, params.height, params.n_nodes, seed)?;
    let mut by_class: [Vec<Chain>; 3] = Default::default();
    for chain in routes_of_length(&dep, 4, cfg) {
        if !chain.hops().iter().all(|h| h.is_decodable(cfg)) {
            continue;
        }
        if let Some(c) = chain_class(&chain, cfg) {
            by_class[c as usize].push(chain);
        }
    }
    let (first, second) = (&by_class[classes.0 as usize], &by_class[classes.1 as usize]);
    if first.is_empty() || second.is_empty() {
        return Ok(None);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    for _ in 0..PAIR_TRIES {
        let a = first.choose(&mut rng).expect("non-empty");
        let b = &second[rng.gen_range(0..second.len())];
        if disjoint(a, b) && (!params.require_interaction || interacting(&a.hops(), &b.hops(), cfg)) {
            return Ok(Some((a.clone(), b.clone())));
        }
    }
    Ok(None)
}

fn evaluate(
    seed: u64,
    a: Chain,
    b: Chain,
    params: &CrossChainParams,
    mac: &MacParams,
    cfg: &RadioConfig,
) -> Result<CrossSample> {
    let (ha, hb) = (a.hops(), b.hops());
    let (self_a, cross_a) = labels(&ha, &hb, cfg);
    let (self_b, cross_b) = labels(&hb, &ha, cfg);
    let symmetric_ht = ha
        .iter()
        .any(|x| hb.iter().any(|y| pair_unchecked(x, y, cfg).kind == PairKind::SymHT));
    let (throughput_bps, lost) = if params.duration_s > 0.0 {
        let scenario = Scenario::disjoint(&[(a.clone(), Traffic::Saturated), (b.clone(), Traffic::Saturated)]);
        let r = run(&scenario, mac, cfg, &RunOptions::new(params.duration_s, seed))?;
        let lost = lost_capacity(&r, mac);
        (Some([throughput(&r, 0)?, throughput(&r, 1)?]), Some([lost[0], lost[1]]))
    } else {
        (None, None)
    };
    Ok(CrossSample {
        deployment_seed: seed,
        chains: [a, b],
        self_labels: [self_a, self_b],
        cross_labels: [cross_a, cross_b],
        symmetric_ht,
        throughput_bps,
        lost,
    })
}

/// Samples `params.samples` pairs of routed 4-hop chains of the requested
/// classes, one pair per deployment (deployment seeds `seed`, `seed + 1`, ...),
/// and aggregates their cross-chain interactions.
pub fn cross_chain_study(
    classes: (ChainClass, ChainClass),
    params: &CrossChainParams,
    seed: u64,
    mac: &MacParams,
    cfg: &RadioConfig,
) -> Result<CrossChainReport> {
    if params.samples == 0 {
        return Err(Error::Domain("cross-chain study needs at least one sample".into()));
    }
    // deployments are scanned in parallel batches but accepted in seed order
    let mut picked: Vec<(u64, Chain, Chain)> = Vec::with_capacity(params.samples);
    let batch = rayon::current_num_threads().max(1) * 4;
    let mut next = 0usize;
    while picked.len() < params.samples {
        if next >= params.max_deployments {
            return Err(Error::Scenario(format!(
                "found {} of {} {}/{} chain pairs in {} deployments",
                picked.len(),
                params.samples,
                classes.0,
                classes.1,
                params.max_deployments
            )));
        }
        let end = (next + batch).min(params.max_deployments);
        let found: Vec<Result<Option<(u64, Chain, Chain)>>> = (next..end)
            .into_par_iter()
            .map(|k| {
                let s = seed.wrapping_add(k as u64);
                Ok(sample_pair(s, classes, params, cfg)?.map(|(a, b)| (s, a, b)))
            })
            .collect();
        for f in found {
            if let Some(p) = f? {
                if picked.len() < params.samples {
                    picked.push(p);
                }
            }
        }
        next = end;
    }
    let samples: Vec<CrossSample> = picked
        .into_par_iter()
        .map(|(s, a, b)| evaluate(s, a, b, params, mac, cfg))
        .collect::<Result<_>>()?;
    Ok(aggregate(classes, samples))
}

fn aggregate(classes: (ChainClass, ChainClass), samples: Vec<CrossSample>) -> CrossChainReport {
    let n = samples.len() as f64;
    let frac = |f: &dyn Fn(&CrossSample) -> bool| samples.iter().filter(|s| f(s)).count() as f64 / n;
    let p_weak = [frac(&|s| s.weak(0)), frac(&|s| s.weak(1))];
    let p_weak_any = frac(&|s| s.weak(0) || s.weak(1));
    let p_symmetric_ht = frac(&|s| s.symmetric_ht);
    let mean_throughput_bps = samples
        .iter()
        .map(|s| s.throughput_bps)
        .collect::<Option<Vec<_>>>()
        .map(|v| [0, 1].map(|c| v.iter().map(|t| t[c]).sum::<f64>() / n));
    let mean_lost = samples.iter().map(|s| s.lost).collect::<Option<Vec<_>>>().map(|v| {
        [0, 1].map(|c| LostCapacity {
            retransmission_s: v.iter().map(|l| l[c].retransmission_s).sum::<f64>() / n,
            queue_drop_s: v.iter().map(|l| l[c].queue_drop_s).sum::<f64>() / n,
        })
    });
    CrossChainReport {
        classes,
        conditional: conditional_interaction(&samples),
        samples,
        p_weak,
        p_weak_any,
        p_symmetric_ht,
        mean_throughput_bps,
        mean_lost,
    }
}

/// One row per sample: `class1,class2,deployment_seed,chain1,chain2,
/// worst_cross1,worst_cross2,symmetric_ht,throughput1_bps,throughput2_bps,
/// retx1_s,retx2_s,queue_drop1_s,queue_drop2_s`.
pub fn write_cross_csv<W: Write>(reports: &[CrossChainReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "class1",
        "class2",
        "deployment_seed",
        "chain1",
        "chain2",
        "worst_cross1",
        "worst_cross2",
        "symmetric_ht",
        "throughput1_bps",
        "throughput2_bps",
        "retx1_s",
        "retx2_s",
        "queue_drop1_s",
        "queue_drop2_s",
    ])?;
    for r in reports {
        for s in &r.samples {
            let t = |c: usize| s.throughput_bps.map(|t| t[c].to_string()).unwrap_or_default();
            let retx = |c: usize| s.lost.map(|l| l[c].retransmission_s.to_string()).unwrap_or_default();
            let qd = |c: usize| s.lost.map(|l| l[c].queue_drop_s.to_string()).unwrap_or_default();
            w.write_record([
                r.classes.0.to_string(),
                r.classes.1.to_string(),
                s.deployment_seed.to_string(),
                s.chains[0].to_string(),
                s.chains[1].to_string(),
                s.worst_cross(0).to_string(),
                s.worst_cross(1).to_string(),
                s.symmetric_ht.to_string(),
                t(0),
                t(1),
                retx(0),
                retx(1),
                qd(0),
                qd(1),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
