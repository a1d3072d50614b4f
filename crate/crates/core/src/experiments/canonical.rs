use std::io::Write;

use rayon::prelude::*;

use crate::chain::Chain;
use crate::classify::{chain_signature, ChainSignature, SignatureMode};
use crate::error::{Error, Result};
use crate::rf::RadioConfig;
use crate::sim::{drop_percentage, run, throughput, MacParams, RunOptions, Scenario, Traffic};

pub const CANONICAL_SIGNATURES: [&str; 3] = ["SC/SC/SC", "HT/SC/SC", "HTC/SC/SC"];

/// A collinear 4-hop chain built for one signature.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalChainSpec {
    pub requested: String,
    pub chain: Chain,
    pub verified: ChainSignature,
}

/// Builds the collinear 5-node chain realizing `signature`.
///
/// Hops 2-4 are 200 m. Hop 1 sets the distance between the first and fourth
/// senders and from the first receiver to the fourth sender:
/// 140 m keeps both senders within carrier sense, 200 m leaves the first
/// receiver 400 m from the interferer (SINR 16, capture), and 240 m pushes the
/// SINR to 7.7 (collision).
pub fn build_canonical_chain(signature: &str, cfg: &RadioConfig) -> Result<CanonicalChainSpec> {
    let first = match signature {
        "SC/SC/SC" => 140.0,
        "HT/SC/SC" => 240.0,
        "HTC/SC/SC" => 200.0,
        _ => {
            return Err(Error::UnsupportedSignature {
                got: signature.to_string(),
                supported: CANONICAL_SIGNATURES.join(", "),
            })
        }
    };
    let chain = Chain::collinear(&[first, 200.0, 200.0, 200.0])?;
    let verified = chain_signature(&chain, cfg, SignatureMode::Interacting)?;
    if verified.render() != signature {
        return Err(Error::Scenario(format!(
            "geometry for {signature} classifies as {} under this radio configuration",
            verified.render()
        )));
    }
    Ok(CanonicalChainSpec {
        requested: signature.to_string(),
        chain,
        verified,
    })
}

/// Normalized loads 0.05, 0.10, ..., 1.20.
pub fn default_loads() -> Vec<f64> {
    (1..=24).map(|k| k as f64 * 0.05).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub load: f64,
    pub offered_bps: f64,
    pub throughput_bps: f64,
    pub drop_percentage: Option<f64>,
    pub queue_drops: u64,
}

/// One CBR run per load over the canonical chain.
pub fn saturation_sweep(
    spec: &CanonicalChainSpec,
    loads: &[f64],
    duration_s: f64,
    seed: u64,
    mac: &MacParams,
    cfg: &RadioConfig,
) -> Result<Vec<SweepPoint>> {
    if loads.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("loads must be sorted ascending".into()));
    }
    if loads.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(Error::Domain("loads must be positive".into()));
    }
    loads
        .par_iter()
        .map(|&load| {
            let scenario = Scenario::single(
                &spec.chain,
                Traffic::Cbr {
                    packets_per_second: mac.packets_per_second(load),
                },
            );
            let r = run(&scenario, mac, cfg, &RunOptions::new(duration_s, seed))?;
            Ok(SweepPoint {
                load,
                offered_bps: load * mac.single_link_capacity(),
                throughput_bps: throughput(&r, 0)?,
                drop_percentage: drop_percentage(&r, 0),
                queue_drops: r.flows[0].queue_drops,
            })
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `signature,load,offered_bps,throughput_bps,drop_percentage,queue_drops`;
/// an empty drop percentage means nothing was delivered.
pub fn write_sweep_csv<W: Write>(curves: &[(String, Vec<SweepPoint>)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "signature",
        "load",
        "offered_bps",
        "throughput_bps",
        "drop_percentage",
        "queue_drops",
    ])?;
    for (sig, points) in curves {
        for p in points {
            w.write_record([
                sig.clone(),
                p.load.to_string(),
                p.offered_bps.to_string(),
                p.throughput_bps.to_string(),
                opt(p.drop_percentage),
                p.queue_drops.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{classify_directional, DirectionalEffect};

    #[test]
    fn canonical_chains_round_trip() {
        let cfg = RadioConfig::default();
        for sig in CANONICAL_SIGNATURES {
            let spec = build_canonical_chain(sig, &cfg).unwrap();
            assert_eq!(spec.verified.render(), sig);
            assert_eq!(spec.chain.hop_count(), 4);
        }
    }

    #[test]
    fn canonical_geometry_facts() {
        let cfg = RadioConfig::default();
        let sc = build_canonical_chain("SC/SC/SC", &cfg).unwrap();
        let p = sc.chain.positions();
        for i in 0..4 {
            for j in 0..4 {
                assert!(p[i].distance(&p[j]) <= 550.0);
            }
        }
        let ht = build_canonical_chain("HT/SC/SC", &cfg).unwrap();
        let hops = ht.chain.hops();
        assert!(hops[0].src_pos.distance(&hops[3].src_pos) > 550.0);
        let sinr = cfg.mean_power(hops[0].length()) / cfg.mean_power(hops[3].src_pos.distance(&hops[0].dst_pos));
        assert!(sinr < 10.0);
        assert_eq!(
            classify_directional(&hops[3], &hops[0], &cfg).unwrap(),
            DirectionalEffect::Collision
        );
        let htc = build_canonical_chain("HTC/SC/SC", &cfg).unwrap();
        let hops = htc.chain.hops();
        let d = hops[3].src_pos.distance(&hops[0].dst_pos);
        assert!(cfg.mean_power(hops[0].length()) / cfg.mean_power(d) >= 10.0);
        assert!(d < 550.0);
    }

    #[test]
    fn unsupported_signature_lists_supported() {
        let err = build_canonical_chain("HT/HT/SC", &RadioConfig::default()).unwrap_err();
        let msg = err.to_string();
        for sig in CANONICAL_SIGNATURES {
            assert!(msg.contains(sig), "{msg}");
        }
    }

    #[test]
    fn default_load_grid() {
        let l = default_loads();
        assert_eq!(l.len(), 24);
        assert!((l[0] - 0.05).abs() < 1e-12 && (l[23] - 1.2).abs() < 1e-12);
    }

    #[test]
    fn sweep_below_onset_is_linear_and_clean() {
        let cfg = RadioConfig::default();
        let mac = MacParams::default();
        for sig in CANONICAL_SIGNATURES {
            let spec = build_canonical_chain(sig, &cfg).unwrap();
            let pts = saturation_sweep(&spec, &[0.05, 0.1, 0.15], 10.0, 3, &mac, &cfg).unwrap();
            for p in pts {
                assert!(
                    (p.throughput_bps - p.offered_bps).abs() / p.offered_bps < 0.02,
                    "{sig} {p:?}"
                );
                assert!(p.drop_percentage.unwrap() < 1.0);
            }
        }
    }

    #[test]
    fn sweep_rejects_unsorted_loads() {
        let cfg = RadioConfig::default();
        let spec = build_canonical_chain("SC/SC/SC", &cfg).unwrap();
        assert!(saturation_sweep(&spec, &[0.2, 0.1], 1.0, 1, &MacParams::default(), &cfg).is_err());
    }
}
