use std::io::Write;

use rayon::prelude::*;

use crate::chain::{Chain, Link};
use crate::classify::{pair_unchecked, PairKind};
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::rf::RadioConfig;
use crate::sim::{drop_percentage, run, throughput, MacParams, RunOptions, Scenario, Traffic};

/// Requested categories of the `(i, i+3)` hop pairs, in order.
pub type Assignment = Vec<PairKind>;

const SLOT_KINDS: [PairKind; 3] = [PairKind::SC, PairKind::HTC, PairKind::HT];
const SEARCH_BUDGET: usize = 50_000_000;

fn render(a: &[PairKind]) -> String {
    a.iter().map(|k| k.as_str()).collect::<Vec<_>>().join("-")
}

/// Every assignment of {SC, HTC, HT} to the n-3 slots, in lexicographic order.
pub fn all_assignments(n: usize) -> Vec<Assignment> {
    let slots = n.saturating_sub(3);
    let mut out: Vec<Assignment> = vec![Vec::new()];
    for _ in 0..slots {
        out = out
            .into_iter()
            .flat_map(|a| {
                SLOT_KINDS.iter().map(move |&k| {
                    let mut b = a.clone();
                    b.push(k);
                    b
                })
            })
            .collect();
    }
    out
}

/// Assignments with a single HT at each slot in turn, SC elsewhere.
pub fn single_ht_assignments(n: usize) -> Vec<Assignment> {
    let slots = n.saturating_sub(3);
    (0..slots)
        .map(|k| {
            (0..slots)
                .map(|i| if i == k { PairKind::HT } else { PairKind::SC })
                .collect()
        })
        .collect()
}

fn hop_links(lengths: &[f64]) -> Vec<Link> {
    let mut x = 0.0;
    let mut out = Vec::with_capacity(lengths.len());
    for (i, &h) in lengths.iter().enumerate() {
        out.push(Link::new(i, Point::new(x, 0.0), i + 1, Point::new(x + h, 0.0)).expect("distinct ids"));
        x += h;
    }
    out
}

struct Search<'a> {
    assignment: &'a [PairKind],
    cfg: &'a RadioConfig,
    candidates: Vec<f64>,
    lengths: Vec<f64>,
    budget: usize,
}

impl Search<'_> {
    /// Checks every pair ending at the newest hop.
    fn consistent(&self) -> bool {
        let links = hop_links(&self.lengths);
        let k = links.len() - 1;
        (0..k.saturating_sub(1)).all(|i| {
            let kind = pair_unchecked(&links[i], &links[k], self.cfg).kind;
            match k - i {
                2 => kind == PairKind::SC,
                3 => kind == self.assignment[i],
                _ => !matches!(kind, PairKind::HT | PairKind::SymHT),
            }
        })
    }

    fn extend(&mut self, n: usize) -> bool {
        if self.lengths.len() == n {
            return true;
        }
        for idx in 0..self.candidates.len() {
            if self.budget == 0 {
                return false;
            }
            self.budget -= 1;
            self.lengths.push(self.candidates[idx]);
            if self.consistent() && self.extend(n) {
                return true;
            }
            self.lengths.pop();
        }
        false
    }
}

/// Finds a collinear n-hop chain whose `(i, i+3)` pairs carry the assigned
/// categories, `(i, i+2)` pairs are SC and no pair further apart is a hidden
/// terminal. Hop lengths come from a 10 m grid over 100-250 m, preferring
/// lengths near 200 m.
pub fn realize_assignment(n: usize, assignment: &[PairKind], cfg: &RadioConfig) -> Result<Chain> {
    if n < 4 {
        return Err(Error::ChainTooShort { got: n, min: 4 });
    }
    if assignment.len() != n - 3 {
        return Err(Error::Domain(format!(
            "{n} hops have {} slots, assignment has {}",
            n - 3,
            assignment.len()
        )));
    }
    if let Some(k) = assignment.iter().find(|k| !SLOT_KINDS.contains(k)) {
        return Err(Error::Domain(format!("slot category {k} is not one of SC, HTC, HT")));
    }
    let mut candidates: Vec<f64> = (10..=25).map(|k| k as f64 * 10.0).collect();
    candidates.sort_by(|a, b| (a - 200.0).abs().total_cmp(&(b - 200.0).abs()).then(a.total_cmp(b)));
    candidates.retain(|&h| cfg.mean_power(h) >= cfg.rx_threshold);
    let mut search = Search {
        assignment,
        cfg,
        candidates,
        lengths: Vec::with_capacity(n),
        budget: SEARCH_BUDGET,
    };
    if !search.extend(n) {
        return Err(Error::Scenario(format!(
            "no collinear geometry realizes {}",
            render(assignment)
        )));
    }
    Chain::collinear(&search.lengths)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NhopRow {
    pub assignment: String,
    /// Normalized CBR load; `None` for a saturated source.
    pub load: Option<f64>,
    pub hop_lengths: Vec<f64>,
    pub throughput_bps: Option<f64>,
    pub drop_percentage: Option<f64>,
    /// Why the assignment was not simulated.
    pub skipped: Option<String>,
}

/// Builds and simulates each assignment once per normalized CBR load, or
/// once with a saturated source when `loads` is empty.
pub fn nhop_study(
    n: usize,
    assignments: &[Assignment],
    loads: &[f64],
    duration_s: f64,
    seed: u64,
    mac: &MacParams,
    cfg: &RadioConfig,
) -> Result<Vec<NhopRow>> {
    if n < 5 {
        return Err(Error::ChainTooShort { got: n, min: 5 });
    }
    if loads.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(Error::Domain("loads must be positive".into()));
    }
    let traffic: Vec<(Option<f64>, Traffic)> = if loads.is_empty() {
        vec![(None, Traffic::Saturated)]
    } else {
        loads
            .iter()
            .map(|&l| {
                (
                    Some(l),
                    Traffic::Cbr {
                        packets_per_second: mac.packets_per_second(l),
                    },
                )
            })
            .collect()
    };
    let runs: Vec<(&Assignment, Option<f64>, Traffic)> = assignments
        .iter()
        .flat_map(|a| traffic.iter().map(move |&(l, t)| (a, l, t)))
        .collect();
    runs.into_par_iter()
        .map(|(a, load, traffic)| {
            let name = render(a);
            let chain = match realize_assignment(n, a, cfg) {
                Ok(c) => c,
                Err(e @ (Error::Scenario(_) | Error::Domain(_))) => {
                    return Ok(NhopRow {
                        assignment: name,
                        load,
                        hop_lengths: Vec::new(),
                        throughput_bps: None,
                        drop_percentage: None,
                        skipped: Some(e.to_string()),
                    })
                }
                Err(e) => return Err(e),
            };
            let r = run(
                &Scenario::single(&chain, traffic),
                mac,
                cfg,
                &RunOptions::new(duration_s, seed),
            )?;
            Ok(NhopRow {
                assignment: name,
                load,
                hop_lengths: chain.hops().iter().map(|h| h.length()).collect(),
                throughput_bps: Some(throughput(&r, 0)?),
                drop_percentage: drop_percentage(&r, 0),
                skipped: None,
            })
        })
        .collect()
}

/// `assignment,load,hop_lengths,throughput_bps,drop_percentage,skipped`; hop
/// lengths are space separated and an empty load means a saturated source.
pub fn write_nhop_csv<W: Write>(rows: &[NhopRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "assignment",
        "load",
        "hop_lengths",
        "throughput_bps",
        "drop_percentage",
        "skipped",
    ])?;
    for r in rows {
        w.write_record([
            r.assignment.clone(),
            r.load.map(|v| v.to_string()).unwrap_or_default(),
            r.hop_lengths
                .iter()
                .map(|h| h.to_string())
                .collect::<Vec<_>>()
                .join(" "),
            r.throughput_bps.map(|v| v.to_string()).unwrap_or_default(),
            r.drop_percentage.map(|v| v.to_string()).unwrap_or_default(),
            r.skipped.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{chain_signature, SignatureMode};

    #[test]
    fn assignment_enumeration() {
        assert_eq!(all_assignments(5).len(), 9);
        assert_eq!(all_assignments(7).len(), 81);
        assert_eq!(all_assignments(5)[0], vec![PairKind::SC, PairKind::SC]);
        let s = single_ht_assignments(8);
        assert_eq!(s.len(), 5);
        assert!(s
            .iter()
            .enumerate()
            .all(|(k, a)| a[k] == PairKind::HT && a.iter().filter(|&&x| x == PairKind::HT).count() == 1));
    }

    #[test]
    fn realized_geometries_round_trip() {
        let cfg = RadioConfig::default();
        for n in [5, 6] {
            for a in all_assignments(n) {
                let chain = realize_assignment(n, &a, &cfg).unwrap_or_else(|e| panic!("{a:?}: {e}"));
                let sig = chain_signature(&chain, &cfg, SignatureMode::Interacting).unwrap();
                assert_eq!(sig.kinds(), a);
                let full = chain_signature(&chain, &cfg, SignatureMode::FullPairwise).unwrap();
                for e in full.entries {
                    if e.second - e.first == 2 {
                        assert_eq!(e.category.kind, PairKind::SC);
                    }
                }
                assert!(chain.hops().iter().all(|h| h.is_decodable(&cfg)));
            }
        }
    }

    #[test]
    fn eight_hop_single_ht_realizable() {
        let cfg = RadioConfig::default();
        for a in single_ht_assignments(8) {
            realize_assignment(8, &a, &cfg).unwrap();
        }
    }

    #[test]
    fn bad_assignments() {
        let cfg = RadioConfig::default();
        assert!(realize_assignment(5, &[PairKind::SC], &cfg).is_err());
        assert!(realize_assignment(5, &[PairKind::NI, PairKind::SC], &cfg).is_err());
        assert!(nhop_study(4, &[], &[], 1.0, 1, &MacParams::default(), &cfg).is_err());
    }
}
