//! Interaction census over all routes of a deployment.

use std::collections::BTreeMap;
use std::io::Write;

use crate::classify::{chain_signature, pair_unchecked, PairKind, SignatureMode};
use crate::error::{Error, Result};
use crate::rf::RadioConfig;
use crate::routing::{Route, Router};
use crate::topology::Deployment;

#[derive(Debug, Clone, PartialEq)]
pub struct CensusRow {
    pub cs_range: f64,
    pub n_nodes: usize,
    /// Rendered signature, e.g. `HT/SC/SC`.
    pub signature: String,
    pub count: usize,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CensusTable {
    pub hop_count: usize,
    /// Sorted by carrier-sense range, then descending probability, then signature.
    pub rows: Vec<CensusRow>,
    /// Number of classified chains per carrier-sense range.
    pub chains: Vec<(f64, usize)>,
    /// Set when some carrier-sense range had no route of the requested length.
    pub empty: bool,
}

impl CensusTable {
    pub fn rows_for(&self, cs_range: f64) -> impl Iterator<Item = &CensusRow> {
        self.rows.iter().filter(move |r| r.cs_range == cs_range)
    }

    /// The `k` most frequent signatures at `cs_range`.
    pub fn top(&self, cs_range: f64, k: usize) -> Vec<&str> {
        self.rows_for(cs_range).take(k).map(|r| r.signature.as_str()).collect()
    }

    /// Probability mass of signatures whose entries at `positions` are all `kind`.
    pub fn mass_where(&self, cs_range: f64, positions: &[usize], kind: PairKind) -> f64 {
        self.rows_for(cs_range)
            .filter(|r| {
                let parts: Vec<&str> = r.signature.split('/').collect();
                positions.iter().all(|&p| parts.get(p) == Some(&kind.as_str()))
            })
            .map(|r| r.probability)
            .sum()
    }

    /// Probability mass of signatures containing any hidden-terminal entry.
    pub fn hidden_terminal_mass(&self, cs_range: f64) -> f64 {
        self.rows_for(cs_range)
            .filter(|r| r.signature.split('/').any(|p| p == "HT" || p == "SymHT"))
            .map(|r| r.probability)
            .sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["cs_range", "n_nodes", "signature", "probability"])?;
        for r in &self.rows {
            w.write_record([
                r.cs_range.to_string(),
                r.n_nodes.to_string(),
                r.signature.clone(),
                r.probability.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Routes with exactly `hop_count` hops among all ordered node pairs.
pub fn routes_of_length(dep: &Deployment, hop_count: usize, cfg: &RadioConfig) -> Vec<crate::chain::Chain> {
    Router::new(dep, cfg)
        .all_routes(hop_count)
        .into_iter()
        .filter_map(|r| match r {
            Route::Found(c) if c.hop_count() == hop_count => Some(c),
            _ => None,
        })
        .collect()
}

/// Tabulates signature frequencies of every `hop_count`-hop route, once per
/// carrier-sense range. Routes are selected once; only the classification
/// threshold changes across the sweep.
pub fn census(dep: &Deployment, hop_count: usize, cs_range_values: &[f64], cfg: &RadioConfig) -> Result<CensusTable> {
    if hop_count < 4 {
        return Err(Error::ChainTooShort { got: hop_count, min: 4 });
    }
    if cs_range_values.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::Domain("carrier-sense ranges must be positive".into()));
    }
    let chains = routes_of_length(dep, hop_count, cfg);
    let mut table = CensusTable {
        hop_count,
        ..Default::default()
    };
    for &cs in cs_range_values {
        let c = cfg.with_cs_range(cs);
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for chain in &chains {
            let sig = chain_signature(chain, &c, SignatureMode::Interacting)?;
            *counts.entry(sig.render()).or_default() += 1;
        }
        let total = chains.len();
        table.chains.push((cs, total));
        if total == 0 {
            table.empty = true;
            continue;
        }
        let mut rows: Vec<CensusRow> = counts
            .into_iter()
            .map(|(signature, count)| CensusRow {
                cs_range: cs,
                n_nodes: dep.len(),
                signature,
                count,
                probability: count as f64 / total as f64,
            })
            .collect();
        rows.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.signature.cmp(&b.signature)));
        table.rows.extend(rows);
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationStudy {
    pub routes: usize,
    pub pairs: usize,
    pub non_interacting: usize,
    /// `None` when no pair qualified.
    pub fraction: Option<f64>,
}

/// Over routes longer than `min_hops`, the fraction of hop pairs more than
/// three hops apart that do not interact at all.
pub fn hop_separation_study(dep: &Deployment, min_hops: usize, cfg: &RadioConfig) -> SeparationStudy {
    let router = Router::new(dep, cfg);
    let mut out = SeparationStudy {
        routes: 0,
        pairs: 0,
        non_interacting: 0,
        fraction: None,
    };
    for route in router.all_routes(usize::MAX) {
        let Route::Found(chain) = route else { continue };
        if chain.hop_count() <= min_hops {
            continue;
        }
        out.routes += 1;
        let hops = chain.hops();
        for i in 0..hops.len() {
            for j in i + 4..hops.len() {
                out.pairs += 1;
                if pair_unchecked(&hops[i], &hops[j], cfg).kind == PairKind::NI {
                    out.non_interacting += 1;
                }
            }
        }
    }
    if out.pairs > 0 {
        out.fraction = Some(out.non_interacting as f64 / out.pairs as f64);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::generate_uniform;

    #[test]
    fn probabilities_sum_to_one() {
        let cfg = RadioConfig::default();
        let dep = generate_uniform(1500.0, 1500.0, 225, 1).unwrap();
        let t = census(&dep, 4, &[350.0, 550.0], &cfg).unwrap();
        for cs in [350.0, 550.0] {
            let s: f64 = t.rows_for(cs).map(|r| r.probability).sum();
            assert!((s - 1.0).abs() < 1e-9);
            assert!(t.rows_for(cs).all(|r| (0.0..=1.0).contains(&r.probability)));
        }
        assert!(!t.empty);
    }

    #[test]
    fn deterministic() {
        let cfg = RadioConfig::default();
        let dep = generate_uniform(1500.0, 1500.0, 150, 4).unwrap();
        assert_eq!(census(&dep, 4, &[550.0], &cfg), census(&dep, 4, &[550.0], &cfg));
    }

    #[test]
    fn rejects_short_hop_count() {
        let cfg = RadioConfig::default();
        let dep = generate_uniform(100.0, 100.0, 5, 1).unwrap();
        assert!(census(&dep, 3, &[550.0], &cfg).is_err());
    }

    #[test]
    fn no_long_routes_sets_flag() {
        let cfg = RadioConfig::default();
        // tiny arena: every route is one hop
        let dep = generate_uniform(100.0, 100.0, 10, 1).unwrap();
        let t = census(&dep, 4, &[550.0], &cfg).unwrap();
        assert!(t.empty);
        assert!(t.rows.is_empty());
        let s = hop_separation_study(&dep, 4, &cfg);
        assert_eq!(s.fraction, None);
    }

    #[test]
    fn hidden_terminal_mass_shrinks_with_cs_range() {
        let cfg = RadioConfig::default();
        let dep = generate_uniform(1500.0, 1500.0, 225, 1).unwrap();
        let ranges = [350.0, 450.0, 550.0, 650.0];
        let t = census(&dep, 4, &ranges, &cfg).unwrap();
        let masses: Vec<f64> = ranges.iter().map(|&r| t.hidden_terminal_mass(r)).collect();
        assert!(masses.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{masses:?}");
    }

    #[test]
    fn csv_header() {
        let t = CensusTable {
            hop_count: 4,
            rows: vec![CensusRow {
                cs_range: 550.0,
                n_nodes: 225,
                signature: "SC/SC/SC".into(),
                count: 3,
                probability: 1.0,
            }],
            chains: vec![(550.0, 3)],
            empty: false,
        };
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "cs_range,n_nodes,signature,probability\n550,225,SC/SC/SC,1\n"
        );
    }
}
